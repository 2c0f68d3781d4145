#![allow(dead_code)]

use faer::{Mat, MatRef};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sgl_core::{AngularLayout, SteerableDataset, C64};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Entries uniform in the square `[-scale, scale]²`.
pub fn random_dataset(n: usize, ell: &[usize], seed: u64, scale: f64) -> SteerableDataset {
    let layout = AngularLayout::new(ell.to_vec()).unwrap();
    let mut r = rng(seed);
    let values = (0..n * layout.dim())
        .map(|_| C64::new(r.random_range(-scale..scale), r.random_range(-scale..scale)))
        .collect();
    SteerableDataset::new(layout, n, values).unwrap()
}

pub fn random_angles(n: usize, seed: u64) -> Vec<f64> {
    let mut r = rng(seed ^ 0x5eed);
    (0..n)
        .map(|_| r.random_range(0.0..std::f64::consts::TAU))
        .collect()
}

pub fn random_mat(rows: usize, cols: usize, seed: u64) -> Mat<C64> {
    let mut r = rng(seed);
    Mat::from_fn(rows, cols, |_, _| {
        C64::new(r.random_range(-1.0..1.0), r.random_range(-1.0..1.0))
    })
}

pub fn max_abs_diff(a: MatRef<'_, C64>, b: MatRef<'_, C64>) -> f64 {
    assert_eq!((a.nrows(), a.ncols()), (b.nrows(), b.ncols()));
    let mut m: f64 = 0.0;
    for j in 0..a.ncols() {
        for i in 0..a.nrows() {
            m = m.max((a[(i, j)] - b[(i, j)]).norm());
        }
    }
    m
}

pub fn max_abs(a: MatRef<'_, C64>) -> f64 {
    let mut m: f64 = 0.0;
    for j in 0..a.ncols() {
        for i in 0..a.nrows() {
            m = m.max(a[(i, j)].norm());
        }
    }
    m
}

/// `diag(e^{imα_i}) · A · diag(e^{imα_j})^*`.
pub fn phase_conjugate(a: MatRef<'_, C64>, m: i32, angles: &[f64]) -> Mat<C64> {
    Mat::from_fn(a.nrows(), a.ncols(), |i, j| {
        a[(i, j)] * C64::from_polar(1.0, m as f64 * (angles[i] - angles[j]))
    })
}

pub fn max_row_diff(a: &SteerableDataset, b: &SteerableDataset) -> f64 {
    a.values()
        .iter()
        .zip(b.values())
        .map(|(x, y)| (x - y).norm())
        .fold(0.0, f64::max)
}

/// Squared rotational distance by explicit rotation.
pub fn brute_distance(x: &[C64], y: &[C64], layout: &AngularLayout, phi: f64) -> f64 {
    let r = sgl_core::dataset::rotate_point(y, layout, phi).unwrap();
    x.iter().zip(&r).map(|(a, b)| (a - b).norm_sqr()).sum()
}
