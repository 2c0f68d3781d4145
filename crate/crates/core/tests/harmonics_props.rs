mod common;

use common::{max_abs_diff, phase_conjugate, random_angles, random_dataset};
use faer::Mat;
use proptest::prelude::*;
use sgl_core::dataset::{gen_sphere, rotate_point};
use sgl_core::harmonics::{block_eigenvalues, decompose, projector, spectrum, verify_eigenpair};
use sgl_core::kernel::fourier_blocks;
use sgl_core::{AffinityGrid, KernelConfig, SteerableDataset, C64};

/// Cut with the widest eigenvalue gap among the first few, so the projector
/// is well conditioned.
fn widest_gap(vals: &[f64]) -> usize {
    (1..vals.len().min(5))
        .max_by(|&a, &b| (vals[a] - vals[a - 1]).total_cmp(&(vals[b] - vals[b - 1])))
        .unwrap_or(1)
}

fn vector_residual(
    grid: &AffinityGrid,
    basis: &sgl_core::HarmonicBasis,
    m: i32,
    k: usize,
    normalized: bool,
) -> f64 {
    let v: &Mat<C64> = &basis.vectors(m);
    let col: Vec<C64> = (0..v.nrows()).map(|i| v[(i, k)]).collect();
    let scale = col.iter().map(|c| c.norm()).fold(0.0, f64::max);
    verify_eigenpair(grid, m, &col, basis.eigenvalues(m)[k], normalized).unwrap() / scale
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn eigenvalues_are_non_negative(n in 1usize..12, seed in any::<u64>(), eps in 0.2..3.0f64,
                                    debias in any::<bool>(), dn in any::<bool>(), normalized in any::<bool>()) {
        let ds = random_dataset(n, &[1, 2, 1, 1, 2], seed, 0.5);
        let cfg = KernelConfig::new(eps).with_angles(32).with_debias(debias && n > 1).with_density_normalize(dn);
        let fa = fourier_blocks(&ds, &cfg).unwrap();
        for vals in block_eigenvalues(&fa, normalized).unwrap() {
            prop_assert!(vals.iter().all(|&l| l >= -1e-9), "{vals:?}");
        }
    }

    #[test]
    fn spectrum_and_projectors_are_rotation_equivariant(n in 2usize..9, seed in any::<u64>(), eps in 0.6..2.0f64) {
        let ds = random_dataset(n, &[1, 2, 1], seed, 0.5);
        let cfg = KernelConfig::new(eps).with_angles(64).with_max_freq(2);
        let angles = random_angles(n, seed);
        let a = decompose(&fourier_blocks(&ds, &cfg).unwrap(), true).unwrap();
        let b = decompose(&fourier_blocks(&ds.rotate_each(&angles).unwrap(), &cfg).unwrap(), true).unwrap();
        for m in -2..=2i32 {
            for (x, y) in a.eigenvalues(m).iter().zip(b.eigenvalues(m)) {
                prop_assert!((x - y).abs() < 1e-9);
            }
            let k = widest_gap(a.eigenvalues(m));
            let (pa, pb) = (projector(&a, m, k), projector(&b, m, k));
            let expect = phase_conjugate(pa.as_ref(), m, &angles);
            prop_assert!(max_abs_diff(pb.as_ref(), expect.as_ref()) < 1e-8);
        }
    }

    #[test]
    fn projectors_are_idempotent(n in 2usize..10, seed in any::<u64>(), m in -2..=2i32, normalized in any::<bool>()) {
        let ds = random_dataset(n, &[1, 1, 1, 1, 1], seed, 0.5);
        let basis = decompose(&fourier_blocks(&ds, &KernelConfig::new(1.0).with_angles(16)).unwrap(), normalized).unwrap();
        for k in 0..=n {
            let p = projector(&basis, m, k);
            let pp = &p * &p;
            prop_assert!(max_abs_diff(pp.as_ref(), p.as_ref()) < 1e-10);
            let tr: C64 = (0..n).map(|i| p[(i, i)]).sum();
            prop_assert!((tr - C64::new(k as f64, 0.0)).norm() < 1e-10);
        }
    }

    #[test]
    fn eigenpairs_satisfy_the_grid_operator(n in 1usize..7, seed in any::<u64>(), eps in 0.3..2.0f64,
                                           normalized in any::<bool>(), debias in any::<bool>()) {
        let ds = random_dataset(n, &[1, 1, 2], seed, 0.5);
        let cfg = KernelConfig::new(eps).with_angles(12).with_max_freq(3).with_debias(debias && n > 1);
        let basis = decompose(&fourier_blocks(&ds, &cfg).unwrap(), normalized).unwrap();
        let grid = AffinityGrid::new(&ds, &cfg).unwrap();
        for m in -3..=3i32 {
            for k in 0..n {
                prop_assert!(vector_residual(&grid, &basis, m, k, normalized) < 1e-8);
            }
        }
    }
}

#[test]
fn sphere_eigenpair_m3_k4() {
    let ds = gen_sphere(512, 21);
    let cfg = KernelConfig::new(1.0).with_angles(32).with_max_freq(3);
    let basis = decompose(&fourier_blocks(&ds, &cfg).unwrap(), true).unwrap();
    let grid = AffinityGrid::new(&ds, &cfg).unwrap();
    for m in [3, -3] {
        let r = vector_residual(&grid, &basis, m, 3, true);
        assert!(r < 1e-8, "m={m}: relative residual {r}");
    }
}

#[test]
fn equal_degrees_relate_the_two_laplacians() {
    // Points on one orbit, spaced on the angle grid, all have the same degree.
    let seed_row = random_dataset(1, &[1, 2, 1], 4, 0.6);
    let n = 4;
    let rows: Vec<Vec<C64>> = (0..n)
        .map(|j| {
            rotate_point(
                seed_row.row(0),
                seed_row.layout(),
                std::f64::consts::TAU * j as f64 / n as f64,
            )
            .unwrap()
        })
        .collect();
    let ds = SteerableDataset::from_rows(seed_row.layout().clone(), &rows).unwrap();
    let fa = fourier_blocks(&ds, &KernelConfig::new(0.7).with_angles(16)).unwrap();
    let d1 = fa.degrees()[0];
    assert!(fa.degrees().iter().all(|d| (d - d1).abs() < 1e-12 * d1));
    let un = block_eigenvalues(&fa, false).unwrap();
    let no = block_eigenvalues(&fa, true).unwrap();
    for (a, b) in un.iter().zip(&no) {
        for (x, y) in a.iter().zip(b) {
            assert!((x / d1 - y).abs() < 1e-9);
        }
    }
}

#[test]
fn spectra_agree_with_and_without_vectors() {
    let ds = random_dataset(9, &[1, 1, 1], 30, 0.5);
    let fa = fourier_blocks(&ds, &KernelConfig::new(0.8).with_angles(16)).unwrap();
    let basis = decompose(&fa, true).unwrap();
    let s = spectrum(&fa, true).unwrap();
    let s2 = sgl_core::harmonics::eigenvalue_spectrum(&basis);
    assert_eq!(s.len(), s2.len());
    for (a, b) in s.iter().zip(&s2) {
        assert!((a.lambda - b.lambda).abs() < 1e-12);
    }
}
