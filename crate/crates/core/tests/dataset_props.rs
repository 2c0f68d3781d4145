mod common;

use common::{max_row_diff, random_dataset};
use proptest::prelude::*;
use sgl_core::dataset::{
    add_noise, embed_orthogonal, from_polar_grid, from_polar_grid_real, gen_sphere,
    random_polar_images, rotate_point, spread_layout, to_polar_grid, Embedding, PolarGrid,
};
use sgl_core::io::{
    decode_dataset, encode_dataset, export_csv, import_csv, load_dataset, save_dataset,
};
use sgl_core::{AngularLayout, NoiseSpec, C64};

fn ell_strategy() -> impl Strategy<Value = Vec<usize>> {
    (0usize..4).prop_flat_map(|m| prop::collection::vec(0usize..4, 2 * m + 1))
}

fn norm(x: &[C64]) -> f64 {
    x.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn rotation_is_a_group_action(ell in ell_strategy(), seed in any::<u64>(), a in -10.0..10.0f64, b in -10.0..10.0f64) {
        let ds = random_dataset(1, &ell, seed, 1.0);
        let l = ds.layout();
        let x = ds.row(0);
        let ab = rotate_point(&rotate_point(x, l, a).unwrap(), l, b).unwrap();
        let direct = rotate_point(x, l, (a + b).rem_euclid(std::f64::consts::TAU)).unwrap();
        for (p, q) in ab.iter().zip(&direct) {
            prop_assert!((p - q).norm() < 1e-12);
        }
        prop_assert!((norm(&ab) - norm(x)).abs() < 1e-12);
    }

    #[test]
    fn sphere_stays_on_manifold(seed in any::<u64>(), phi in 0.0..7.0f64) {
        let ds = gen_sphere(20, seed);
        let rot = ds.rotate_each(&[phi; 20]).unwrap();
        for row in rot.rows() {
            prop_assert!((norm(row) - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn polar_round_trip(m in 0usize..5, rings in 1usize..4, extra in 0usize..6, seed in any::<u64>()) {
        let ds = random_dataset(3, &vec![rings; 2 * m + 1], seed, 1.0);
        let angles = 2 * m + 1 + extra;
        let samples = to_polar_grid(&ds, angles).unwrap();
        let back = from_polar_grid(&samples, PolarGrid { n_rings: rings, n_angles: angles }, m).unwrap();
        prop_assert!(max_row_diff(&ds, &back) < 1e-10);
    }

    #[test]
    fn real_polar_images_round_trip(m in 0usize..5, rings in 1usize..4, seed in any::<u64>()) {
        let grid = PolarGrid { n_rings: rings, n_angles: 2 * m + 3 };
        let img = random_polar_images(4, grid, m, true, seed).unwrap();
        let re: Vec<f64> = img.iter().map(|v| v.re).collect();
        let ds = from_polar_grid_real(&re, grid, m).unwrap();
        prop_assert!(ds.is_real());
        let again = to_polar_grid(&ds, grid.n_angles).unwrap();
        for (a, b) in again.iter().zip(&img) {
            prop_assert!((a - b).norm() < 1e-10);
        }
    }

    #[test]
    fn binary_round_trip_is_exact(ell in ell_strategy(), n in 1usize..6, seed in any::<u64>()) {
        let ds = random_dataset(n, &ell, seed, 3.0);
        let back = decode_dataset(&encode_dataset(&ds).unwrap()).unwrap();
        prop_assert_eq!(back, ds);
    }

    #[test]
    fn embedding_preserves_rotational_distances(seed in any::<u64>(), extra in 0usize..6, phi in 0.0..7.0f64) {
        let ds = random_dataset(2, &[1, 2, 1], seed, 1.0);
        let target = spread_layout(ds.layout(), ds.dim() + extra).unwrap();
        let e = Embedding::random(ds.layout(), &target, seed).unwrap();
        let (x, y) = (ds.row(0), ds.row(1));
        let (ex, ey) = (e.apply_row(x).unwrap(), e.apply_row(y).unwrap());
        let before = common::brute_distance(x, y, ds.layout(), phi);
        let after = common::brute_distance(&ex, &ey, &target, phi);
        prop_assert!((before - after).abs() < 1e-10);
        // Rotation commutes with the embedding.
        let lhs = e.apply_row(&rotate_point(x, ds.layout(), phi).unwrap()).unwrap();
        let rhs = rotate_point(&ex, &target, phi).unwrap();
        for (p, q) in lhs.iter().zip(&rhs) {
            prop_assert!((p - q).norm() < 1e-12);
        }
    }
}

#[test]
fn noise_magnitude_matches_gamma() {
    let ds = embed_orthogonal(&gen_sphere(2000, 4), 100, 9).unwrap();
    for gamma in [0.1, 1.0] {
        let noisy = add_noise(&ds, &NoiseSpec::from_gamma(gamma, 100, 11).unwrap()).unwrap();
        let mean: f64 = ds
            .rows()
            .zip(noisy.rows())
            .map(|(a, b)| {
                a.iter()
                    .zip(b)
                    .map(|(p, q)| (p - q).norm_sqr())
                    .sum::<f64>()
            })
            .sum::<f64>()
            / 2000.0;
        assert!(
            (mean / gamma - 1.0).abs() < 0.05,
            "gamma {gamma}: measured {mean}"
        );
    }
}

#[test]
fn file_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let ds = gen_sphere(10, 3);
    let p = dir.path().join("s.sgl");
    save_dataset(&p, &ds).unwrap();
    assert_eq!(load_dataset(&p).unwrap(), ds);

    let c = dir.path().join("s.csv");
    let wide = random_dataset(7, &[2, 1, 3], 5, 4.0);
    export_csv(&c, &wide).unwrap();
    let back = import_csv(&c, Some(wide.layout().clone())).unwrap();
    assert!(max_row_diff(&wide, &back) <= 1e-15);
}

#[test]
fn gen_sphere_is_reproducible() {
    assert_eq!(gen_sphere(50, 8), gen_sphere(50, 8));
    assert_ne!(gen_sphere(50, 8), gen_sphere(50, 9));
}

#[test]
fn aliasing_is_reported() {
    let grid = PolarGrid {
        n_rings: 1,
        n_angles: 6,
    };
    let err = from_polar_grid(&[C64::new(1.0, 0.0); 6], grid, 3).unwrap_err();
    assert!(matches!(err, sgl_core::Error::Aliasing { required: 7, .. }));
    let layout = AngularLayout::uniform(3, 1);
    assert_eq!(layout.dim(), 7);
}
