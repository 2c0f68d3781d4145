mod common;

use common::random_angles;
use proptest::prelude::*;
use sgl_core::apply::{
    estimate_laplace_beltrami, sphere_test_function, sphere_test_point,
    standard_graph_laplacian_estimate,
};
use sgl_core::dataset::{gen_sphere, rotate_point, sphere_layout};
use sgl_core::{AngularLayout, Base, KernelConfig, SteerableDataset, C64};

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn estimate_is_rotation_invariant(seed in any::<u64>(), beta in 0.0..std::f64::consts::TAU, debias in any::<bool>()) {
        let ds = gen_sphere(60, seed);
        let cfg = KernelConfig::new(0.5).with_angles(256).with_debias(debias);
        let base = Base::External(sphere_test_point());
        let e0 = estimate_laplace_beltrami(&ds, &sphere_test_function, &base, &cfg).unwrap();

        let rotated = ds.rotate_each(&random_angles(60, seed)).unwrap();
        let l = sphere_layout();
        let x0 = rotate_point(&sphere_test_point(), &l, beta).unwrap();
        let f = move |x: &[C64]| sphere_test_function(&rotate_point(x, &sphere_layout(), -beta).unwrap());
        let e1 = estimate_laplace_beltrami(&rotated, &f, &Base::External(x0), &cfg).unwrap();
        prop_assert!((e0 - e1).abs() < 1e-9, "{e0} vs {e1}");
    }

    #[test]
    fn radial_data_matches_standard_estimator(n in 2usize..30, seed in any::<u64>(), eps in 0.2..2.0f64) {
        let mut r = common::rng(seed);
        use rand::Rng;
        let pts: Vec<Vec<f64>> = (0..n).map(|_| (0..3).map(|_| r.random_range(-1.0..1.0)).collect()).collect();
        let layout = AngularLayout::new(vec![3]).unwrap();
        let rows: Vec<Vec<C64>> = pts.iter().map(|p| p.iter().map(|&v| C64::new(v, 0.0)).collect()).collect();
        let ds = SteerableDataset::from_rows(layout, &rows).unwrap();
        let f = |x: &[C64]| x[0].re * x[1].re - x[2].re;
        let g = |x: &[f64]| x[0] * x[1] - x[2];
        let base = (seed % n as u64) as usize;
        let a = estimate_laplace_beltrami(&ds, &f, &Base::Sample(base), &KernelConfig::new(eps).with_angles(8)).unwrap();
        let b = standard_graph_laplacian_estimate(&pts, &g, base, eps).unwrap();
        prop_assert!((a - b).abs() < 1e-10 * (1.0 + b.abs()));
    }

    #[test]
    fn constants_give_zero(seed in any::<u64>(), eps in 0.2..2.0f64) {
        let ds = gen_sphere(40, seed);
        let e = estimate_laplace_beltrami(&ds, &|_| 3.5, &Base::Sample(0), &KernelConfig::new(eps).with_angles(16)).unwrap();
        prop_assert!(e.abs() < 1e-10);
    }
}
