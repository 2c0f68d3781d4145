//! Rotational affinities and their Fourier blocks.
//!
//! For a pair of points the squared distance to every rotation of the second
//! point is a trigonometric polynomial in the angle,
//! `‖x_i − x_j^α‖² = ‖x_i‖² + ‖x_j‖² − 2 Re Σ_m c_ij^(m) e^{−imα}` with
//! `c_ij^(m) = Σ_ℓ x_{i,(m,ℓ)} x*_{j,(m,ℓ)}`, so one length-`K` FFT gives all
//! `K` grid distances. A second FFT of `W_ij(0, 2πk/K) = exp(−dist/ε)` gives
//! the Fourier coefficients `Ŵ^(m)_ij`.

use std::borrow::Cow;
use std::cmp::Ordering;
use std::f64::consts::PI;
use std::sync::Arc;

use faer::Mat;
use rayon::prelude::*;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::dataset::{AngularLayout, SteerableDataset};
use crate::error::{Error, Result};
use crate::C64;

/// Degrees at or below this value mark a point as isolated.
pub const DEGREE_FLOOR: f64 = 1e-300;

pub const DEFAULT_ANGLES: usize = 256;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KernelConfig {
    /// Gaussian width `ε`.
    pub epsilon: f64,
    /// Angular quadrature size `K`.
    pub n_angles: usize,
    /// Zero `W_ii(0, α)` for every angle before transforming.
    pub debias: bool,
    /// Apply `Ŵ ← D⁻¹ Ŵ D⁻¹` after the degrees are known.
    pub density_normalize: bool,
    /// Zero grid affinities below this value.
    pub sparsify_threshold: Option<f64>,
    /// Number of Fourier blocks kept on each side of `m = 0`. Defaults to the
    /// layout's `M`; may be larger because `exp(−dist/ε)` is not band-limited.
    pub max_freq: Option<usize>,
}

impl KernelConfig {
    pub fn new(epsilon: f64) -> Self {
        Self {
            epsilon,
            n_angles: DEFAULT_ANGLES,
            debias: false,
            density_normalize: false,
            sparsify_threshold: None,
            max_freq: None,
        }
    }

    pub fn with_angles(mut self, k: usize) -> Self {
        self.n_angles = k;
        self
    }

    pub fn with_debias(mut self, on: bool) -> Self {
        self.debias = on;
        self
    }

    pub fn with_density_normalize(mut self, on: bool) -> Self {
        self.density_normalize = on;
        self
    }

    pub fn with_sparsify(mut self, threshold: f64) -> Self {
        self.sparsify_threshold = Some(threshold);
        self
    }

    pub fn with_max_freq(mut self, m: usize) -> Self {
        self.max_freq = Some(m);
        self
    }

    /// Fourier range the blocks will cover for `layout`.
    pub fn fourier_range(&self, layout: &AngularLayout) -> usize {
        self.max_freq.unwrap_or(layout.max_freq())
    }

    pub fn validate(&self, layout: &AngularLayout) -> Result<()> {
        if !(self.epsilon > 0.0 && self.epsilon.is_finite()) {
            return Err(Error::Config(format!(
                "epsilon must be positive, got {}",
                self.epsilon
            )));
        }
        if let Some(t) = self.sparsify_threshold {
            if !(t >= 0.0 && t.is_finite()) {
                return Err(Error::Config(format!(
                    "sparsify threshold must be >= 0, got {t}"
                )));
            }
        }
        let top = layout.max_freq().max(self.fourier_range(layout));
        let required = 2 * top + 1;
        if self.n_angles < required {
            return Err(Error::Config(format!(
                "K = {} is too small for |m| <= {top}; need K >= {required}",
                self.n_angles
            )));
        }
        Ok(())
    }
}

/// `c_ij^(m)` for one pair, `m = −M..=M`.
pub fn pair_correlation(xi: &[C64], xj: &[C64], layout: &AngularLayout) -> Vec<C64> {
    let mm = layout.max_freq() as i32;
    let mut c = vec![C64::new(0.0, 0.0); 2 * layout.max_freq() + 1];
    for ((a, b), &m) in xi.iter().zip(xj).zip(layout.column_freqs()) {
        c[(m + mm) as usize] += a * b.conj();
    }
    c
}

/// All pairwise `c_ij^(m)`; `O(N² 𝒟)` time and memory, for small `N`.
#[derive(Debug, Clone)]
pub struct CrossCorrelations {
    n: usize,
    max_freq: usize,
    data: Vec<C64>,
}

impl CrossCorrelations {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn max_freq(&self) -> usize {
        self.max_freq
    }

    /// `c_ij^(m)` for `m = −M..=M`.
    pub fn pair(&self, i: usize, j: usize) -> &[C64] {
        let w = 2 * self.max_freq + 1;
        let at = (i * self.n + j) * w;
        &self.data[at..at + w]
    }

    pub fn get(&self, i: usize, j: usize, m: i32) -> C64 {
        self.pair(i, j)[(m + self.max_freq as i32) as usize]
    }
}

pub fn cross_correlations(ds: &SteerableDataset) -> CrossCorrelations {
    let n = ds.len();
    let layout = ds.layout();
    let mut data = Vec::with_capacity(n * n * (2 * layout.max_freq() + 1));
    for i in 0..n {
        for j in 0..n {
            data.extend(pair_correlation(ds.row(i), ds.row(j), layout));
        }
    }
    CrossCorrelations {
        n,
        max_freq: layout.max_freq(),
        data,
    }
}

/// Grid distances `‖x_i − x_j^{2πk/K}‖²` for every pair, `N × N × K`.
#[derive(Debug, Clone)]
pub struct PairDistances {
    n: usize,
    k: usize,
    data: Vec<f64>,
}

impl PairDistances {
    pub fn n_angles(&self) -> usize {
        self.k
    }

    pub fn pair(&self, i: usize, j: usize) -> &[f64] {
        let at = (i * self.n + j) * self.k;
        &self.data[at..at + self.k]
    }
}

/// Grid distances from precomputed correlations.
pub fn rotational_distances(
    ds: &SteerableDataset,
    c: &CrossCorrelations,
    k: usize,
) -> Result<PairDistances> {
    let layout = ds.layout();
    if c.n() != ds.len() || c.max_freq() != layout.max_freq() {
        return Err(Error::Shape("correlations do not match the dataset".into()));
    }
    let mut eng = DistanceFft::new(layout.max_freq(), k)?;
    let norms = ds.row_norms_sq();
    let n = ds.len();
    let mut data = vec![0.0; n * n * k];
    for i in 0..n {
        for j in 0..n {
            let at = (i * n + j) * k;
            eng.distances_from_correlation(c.pair(i, j), norms[i], norms[j], &mut data[at..at + k]);
        }
    }
    Ok(PairDistances { n, k, data })
}

/// Per-worker FFT state for the distance and transform steps.
pub(crate) struct DistanceFft {
    max_freq: usize,
    k: usize,
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
    buf: Vec<C64>,
    scratch: Vec<C64>,
}

impl DistanceFft {
    pub(crate) fn new(max_freq: usize, k: usize) -> Result<Self> {
        if k < 2 * max_freq + 1 {
            return Err(Error::Config(format!(
                "K = {k} is too small for |m| <= {max_freq}; need K >= {}",
                2 * max_freq + 1
            )));
        }
        let mut planner = FftPlanner::new();
        let fwd = planner.plan_fft_forward(k);
        let inv = planner.plan_fft_inverse(k);
        let scratch_len = fwd
            .get_inplace_scratch_len()
            .max(inv.get_inplace_scratch_len());
        Ok(Self {
            max_freq,
            k,
            fwd,
            inv,
            buf: vec![C64::new(0.0, 0.0); k],
            scratch: vec![C64::new(0.0, 0.0); scratch_len],
        })
    }

    fn distances_from_correlation(&mut self, c: &[C64], ni: f64, nj: f64, out: &mut [f64]) {
        let mm = self.max_freq as i32;
        self.buf.fill(C64::new(0.0, 0.0));
        for (idx, &v) in c.iter().enumerate() {
            let m = idx as i32 - mm;
            self.buf[m.rem_euclid(self.k as i32) as usize] = v;
        }
        self.fwd
            .process_with_scratch(&mut self.buf, &mut self.scratch);
        for (o, b) in out.iter_mut().zip(&self.buf) {
            *o = (ni + nj - 2.0 * b.re).max(0.0);
        }
    }

    /// Distances between two rows of `layout`.
    pub(crate) fn distances(
        &mut self,
        xi: &[C64],
        ni: f64,
        xj: &[C64],
        nj: f64,
        layout: &AngularLayout,
        out: &mut [f64],
    ) {
        let k = self.k as i32;
        self.buf.fill(C64::new(0.0, 0.0));
        for ((a, b), &m) in xi.iter().zip(xj).zip(layout.column_freqs()) {
            self.buf[m.rem_euclid(k) as usize] += a * b.conj();
        }
        self.fwd
            .process_with_scratch(&mut self.buf, &mut self.scratch);
        for (o, b) in out.iter_mut().zip(&self.buf) {
            *o = (ni + nj - 2.0 * b.re).max(0.0);
        }
    }

    /// `(2π/K) Σ_k w[k] e^{i2πmk/K}` for `m = 0..=top`, written to `out`.
    pub(crate) fn transform(&mut self, w: &[f64], top: usize, out: &mut [C64]) {
        for (b, &v) in self.buf.iter_mut().zip(w) {
            *b = C64::new(v, 0.0);
        }
        self.inv
            .process_with_scratch(&mut self.buf, &mut self.scratch);
        let h = 2.0 * PI / self.k as f64;
        for (o, b) in out[..=top].iter_mut().zip(&self.buf) {
            *o = b * h;
        }
    }
}

/// Grid affinity weights with the configured debias and sparsification.
pub(crate) fn weights_in_place(dist: &mut [f64], cfg: &KernelConfig, self_pair: bool) {
    if self_pair && cfg.debias {
        dist.fill(0.0);
        return;
    }
    let thr = cfg.sparsify_threshold.unwrap_or(0.0);
    for d in dist.iter_mut() {
        let w = (-*d / cfg.epsilon).exp();
        *d = if w < thr { 0.0 } else { w };
    }
}

/// The Fourier blocks `Ŵ^(m)` and degrees `D`.
///
/// Only `m ≥ 0` is stored: `W_ij(0, α)` is real, so `Ŵ^(−m) = conj(Ŵ^(m))`.
#[derive(Debug, Clone)]
pub struct FourierAffinity {
    blocks: Vec<Mat<C64>>,
    degrees: Vec<f64>,
    config: KernelConfig,
    density_normalized: bool,
}

impl FourierAffinity {
    /// Rebuild from stored `m = 0..=F` blocks; degrees come from `Ŵ^(0)`.
    pub fn from_parts(
        config: KernelConfig,
        blocks: Vec<Mat<C64>>,
        density_normalized: bool,
    ) -> Result<Self> {
        let n = blocks
            .first()
            .map(|b| b.nrows())
            .ok_or_else(|| Error::Empty("no blocks".into()))?;
        if blocks.iter().any(|b| b.nrows() != n || b.ncols() != n) {
            return Err(Error::Shape("blocks must all be N x N".into()));
        }
        let degrees = degrees_of(&blocks[0])?;
        Ok(Self {
            blocks,
            degrees,
            config,
            density_normalized,
        })
    }

    pub fn n(&self) -> usize {
        self.degrees.len()
    }

    /// Largest `|m|` with a block.
    pub fn max_freq(&self) -> usize {
        self.blocks.len() - 1
    }

    pub fn freqs(&self) -> impl Iterator<Item = i32> {
        let f = self.max_freq() as i32;
        -f..=f
    }

    /// `Ŵ^(m)`; negative `m` is materialised as a conjugate copy.
    pub fn block(&self, m: i32) -> Cow<'_, Mat<C64>> {
        let b = &self.blocks[m.unsigned_abs() as usize];
        if m >= 0 {
            Cow::Borrowed(b)
        } else {
            Cow::Owned(Mat::from_fn(b.nrows(), b.ncols(), |i, j| b[(i, j)].conj()))
        }
    }

    pub fn entry(&self, m: i32, i: usize, j: usize) -> C64 {
        let v = self.blocks[m.unsigned_abs() as usize][(i, j)];
        if m >= 0 {
            v
        } else {
            v.conj()
        }
    }

    /// Stored blocks, `m = 0..=F`.
    pub fn nonneg_blocks(&self) -> &[Mat<C64>] {
        &self.blocks
    }

    pub fn degrees(&self) -> &[f64] {
        &self.degrees
    }

    pub fn config(&self) -> &KernelConfig {
        &self.config
    }

    pub fn is_density_normalized(&self) -> bool {
        self.density_normalized
    }

    /// `max_ij |Ŵ^(m)_ij − conj(Ŵ^(m)_ji)|`.
    pub fn hermitian_defect(&self, m: i32) -> f64 {
        let n = self.n();
        let mut worst: f64 = 0.0;
        for i in 0..n {
            for j in i..n {
                worst = worst.max((self.entry(m, i, j) - self.entry(m, j, i).conj()).norm());
            }
        }
        worst
    }
}

fn degrees_of(w0: &Mat<C64>) -> Result<Vec<f64>> {
    let n = w0.nrows();
    let mut deg = vec![0.0; n];
    for j in 0..n {
        for i in 0..n {
            deg[i] += w0[(i, j)].re;
        }
    }
    check_degrees(&deg)?;
    Ok(deg)
}

pub(crate) fn check_degrees(deg: &[f64]) -> Result<()> {
    match deg.iter().position(|d| !(*d > DEGREE_FLOOR)) {
        Some(index) => Err(Error::IsolatedPoint {
            index,
            degree: deg[index],
        }),
        None => Ok(()),
    }
}

fn row_order(a: &[C64], b: &[C64]) -> Ordering {
    a.iter()
        .zip(b)
        .map(|(x, y)| x.re.total_cmp(&y.re).then(x.im.total_cmp(&y.im)))
        .find(|o| o.is_ne())
        .unwrap_or(Ordering::Equal)
}

/// Compute `Ŵ^(m)` for `m = 0..=F` and the degrees.
pub fn fourier_blocks(ds: &SteerableDataset, config: &KernelConfig) -> Result<FourierAffinity> {
    let layout = ds.layout();
    config.validate(layout)?;
    let n = ds.len();
    if n == 0 {
        return Err(Error::Empty("dataset has no points".into()));
    }
    let top = config.fourier_range(layout);
    let k = config.n_angles;
    let norms = ds.row_norms_sq();
    let width = top + 1;

    // Each unordered pair is evaluated once (j ≥ i) and mirrored. Within a
    // pair the orientation follows the row contents, not the indices, so a
    // permuted dataset reproduces its blocks bit for bit.
    let rows: Vec<Vec<C64>> = (0..n)
        .into_par_iter()
        .map_init(
            || {
                (
                    DistanceFft::new(layout.max_freq(), k).expect("validated"),
                    vec![0.0; k],
                )
            },
            |(eng, dist), i| {
                let mut out = vec![C64::new(0.0, 0.0); (n - i) * width];
                for j in i..n {
                    let flip = row_order(ds.row(j), ds.row(i)) == Ordering::Less;
                    let (p, q) = if flip { (j, i) } else { (i, j) };
                    eng.distances(ds.row(p), norms[p], ds.row(q), norms[q], layout, dist);
                    weights_in_place(dist, config, i == j);
                    let at = (j - i) * width;
                    let cell = &mut out[at..at + width];
                    eng.transform(dist, top, cell);
                    if flip {
                        cell.iter_mut().for_each(|v| *v = v.conj());
                    }
                }
                out
            },
        )
        .collect();

    let mut blocks: Vec<Mat<C64>> = (0..width).map(|_| Mat::zeros(n, n)).collect();
    for (i, row) in rows.iter().enumerate() {
        for j in i..n {
            let vals = &row[(j - i) * width..(j - i + 1) * width];
            for (m, b) in blocks.iter_mut().enumerate() {
                let mut v = vals[m];
                // diagonal entries and the m = 0 block are real analytically
                if i == j || m == 0 {
                    v.im = 0.0;
                }
                b[(i, j)] = v;
                b[(j, i)] = v.conj();
            }
        }
    }
    drop(rows);

    let fa = FourierAffinity::from_parts(config.clone(), blocks, false)?;
    if config.density_normalize {
        density_normalize(fa)
    } else {
        Ok(fa)
    }
}

/// `Ŵ^(m) ← D⁻¹ Ŵ^(m) D⁻¹` for every `m`, then fresh degrees.
pub fn density_normalize(fa: FourierAffinity) -> Result<FourierAffinity> {
    if fa.density_normalized {
        return Err(Error::AlreadyNormalized);
    }
    check_degrees(&fa.degrees)?;
    let d = fa.degrees;
    let mut blocks = fa.blocks;
    for b in blocks.iter_mut() {
        let n = b.nrows();
        for j in 0..n {
            for i in 0..n {
                b[(i, j)] /= d[i] * d[j];
            }
        }
    }
    let mut config = fa.config;
    config.density_normalize = true;
    FourierAffinity::from_parts(config, blocks, true)
}

/// Time-domain affinities `W_ij(0, 2πk/K)` for every pair, `N × N × K`.
///
/// The operator on functions over `{1..N} × S¹` is applied directly from
/// these samples, which makes this the reference for small `N`.
#[derive(Debug, Clone)]
pub struct AffinityGrid {
    n: usize,
    k: usize,
    weights: Vec<f64>,
    degrees: Vec<f64>,
    config: KernelConfig,
}

impl AffinityGrid {
    pub fn new(ds: &SteerableDataset, config: &KernelConfig) -> Result<Self> {
        let layout = ds.layout();
        config.validate(layout)?;
        let n = ds.len();
        if n == 0 {
            return Err(Error::Empty("dataset has no points".into()));
        }
        let k = config.n_angles;
        let phases: Vec<Vec<C64>> = (0..k)
            .map(|t| {
                let phi = 2.0 * PI * t as f64 / k as f64;
                layout
                    .column_freqs()
                    .iter()
                    .map(|&m| C64::from_polar(1.0, m as f64 * phi))
                    .collect()
            })
            .collect();
        let mut weights = vec![0.0; n * n * k];
        for i in 0..n {
            for j in 0..n {
                let xi = ds.row(i);
                let xj = ds.row(j);
                let cell = &mut weights[(i * n + j) * k..(i * n + j + 1) * k];
                for (t, ph) in phases.iter().enumerate() {
                    cell[t] = xi
                        .iter()
                        .zip(xj)
                        .zip(ph)
                        .map(|((a, b), p)| (a - b * p).norm_sqr())
                        .sum();
                }
                weights_in_place(cell, config, i == j);
            }
        }
        let h = 2.0 * PI / k as f64;
        let row_sums = |w: &[f64]| -> Vec<f64> {
            (0..n)
                .map(|i| w[i * n * k..(i + 1) * n * k].iter().sum::<f64>() * h)
                .collect()
        };
        let mut degrees = row_sums(&weights);
        check_degrees(&degrees)?;
        if config.density_normalize {
            for i in 0..n {
                for j in 0..n {
                    let s = 1.0 / (degrees[i] * degrees[j]);
                    for v in &mut weights[(i * n + j) * k..(i * n + j + 1) * k] {
                        *v *= s;
                    }
                }
            }
            degrees = row_sums(&weights);
            check_degrees(&degrees)?;
        }
        Ok(Self {
            n,
            k,
            weights,
            degrees,
            config: config.clone(),
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn n_angles(&self) -> usize {
        self.k
    }

    /// `W_ij(0, 2πk/K)` for `k = 0..K`.
    pub fn pair(&self, i: usize, j: usize) -> &[f64] {
        let at = (i * self.n + j) * self.k;
        &self.weights[at..at + self.k]
    }

    /// `W_ij(θ_a, θ_b) = W_ij(0, θ_b − θ_a)` on the grid.
    pub fn weight(&self, i: usize, j: usize, a: usize, b: usize) -> f64 {
        self.pair(i, j)[(b + self.k - a % self.k) % self.k]
    }

    pub fn degrees(&self) -> &[f64] {
        &self.degrees
    }

    pub fn config(&self) -> &KernelConfig {
        &self.config
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{gen_sphere, rotate_point};

    fn small_random(n: usize, ell: Vec<usize>, seed: u64) -> SteerableDataset {
        use rand::Rng;
        let layout = AngularLayout::new(ell).unwrap();
        let mut rng = crate::rng::stream(seed, 7);
        let values = (0..n * layout.dim())
            .map(|_| C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
            .collect();
        SteerableDataset::new(layout, n, values).unwrap()
    }

    #[test]
    fn self_correlation_of_sphere_point() {
        let ds = gen_sphere(3, 2);
        let c = cross_correlations(&ds);
        let x = ds.row(1);
        assert!((c.get(1, 1, 0).re - x[0].norm_sqr()).abs() < 1e-15);
        assert!((c.get(1, 1, 1).re - x[1].norm_sqr()).abs() < 1e-15);
        assert_eq!(c.get(1, 1, -1), C64::new(0.0, 0.0));
        assert!((c.get(0, 2, 1) - c.get(2, 0, 1).conj()).norm() < 1e-15);
    }

    #[test]
    fn distances_match_brute_force_rotation() {
        let ds = small_random(4, vec![1, 2, 0, 3, 1], 3);
        let k = 8;
        let pd = rotational_distances(&ds, &cross_correlations(&ds), k).unwrap();
        for i in 0..4 {
            for j in 0..4 {
                for t in 0..k {
                    let phi = 2.0 * PI * t as f64 / k as f64;
                    let r = rotate_point(ds.row(j), ds.layout(), phi).unwrap();
                    let d: f64 = ds
                        .row(i)
                        .iter()
                        .zip(&r)
                        .map(|(a, b)| (a - b).norm_sqr())
                        .sum();
                    assert!((pd.pair(i, j)[t] - d).abs() < 1e-10);
                }
            }
        }
        assert!(pd.pair(2, 2)[0].abs() < 1e-12);
    }

    #[test]
    fn radial_point_distance_is_flat() {
        let layout = AngularLayout::new(vec![1, 2, 1]).unwrap();
        let mut a = vec![C64::new(0.0, 0.0); 4];
        a[1] = C64::new(0.5, 0.2);
        a[2] = C64::new(-0.3, 0.0);
        let b = vec![
            C64::new(0.4, 0.1),
            C64::new(1.0, -0.5),
            C64::new(0.0, 0.3),
            C64::new(0.7, 0.7),
        ];
        let ds = SteerableDataset::from_rows(layout, &[b, a]).unwrap();
        let pd = rotational_distances(&ds, &cross_correlations(&ds), 16).unwrap();
        let row = pd.pair(0, 1);
        for v in row {
            assert!((v - row[0]).abs() < 1e-12);
        }
    }

    #[test]
    fn single_radial_point_blocks() {
        let layout = AngularLayout::new(vec![0, 2, 0]).unwrap();
        let ds = SteerableDataset::new(layout, 1, vec![C64::new(0.3, 0.1), C64::new(-1.0, 0.0)])
            .unwrap();
        let fa = fourier_blocks(
            &ds,
            &KernelConfig::new(0.7).with_angles(16).with_max_freq(3),
        )
        .unwrap();
        assert!((fa.entry(0, 0, 0).re - 2.0 * PI).abs() < 1e-12);
        for m in [1, 2, 3, -2] {
            assert!(fa.entry(m, 0, 0).norm() < 1e-12);
        }
        assert!((fa.degrees()[0] - 2.0 * PI).abs() < 1e-12);
    }

    #[test]
    fn blocks_match_naive_dft() {
        let ds = small_random(2, vec![1, 1, 2], 8);
        let k = 8;
        let cfg = KernelConfig::new(1.3).with_angles(k);
        let fa = fourier_blocks(&ds, &cfg).unwrap();
        for i in 0..2 {
            for j in 0..2 {
                for m in -1..=1i32 {
                    let mut acc = C64::new(0.0, 0.0);
                    for t in 0..k {
                        let phi = 2.0 * PI * t as f64 / k as f64;
                        let r = rotate_point(ds.row(j), ds.layout(), phi).unwrap();
                        let d: f64 = ds
                            .row(i)
                            .iter()
                            .zip(&r)
                            .map(|(a, b)| (a - b).norm_sqr())
                            .sum();
                        acc += C64::from_polar((-d / 1.3).exp(), m as f64 * phi);
                    }
                    acc *= 2.0 * PI / k as f64;
                    assert!((fa.entry(m, i, j) - acc).norm() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn debias_and_isolation() {
        let ds = gen_sphere(1, 0);
        let cfg = KernelConfig::new(0.5).with_angles(8).with_debias(true);
        assert!(matches!(
            fourier_blocks(&ds, &cfg),
            Err(Error::IsolatedPoint { index: 0, .. })
        ));
        let ds = gen_sphere(5, 0);
        let fa = fourier_blocks(&ds, &cfg).unwrap();
        for i in 0..5 {
            assert_eq!(fa.entry(0, i, i), C64::new(0.0, 0.0));
        }
    }

    #[test]
    fn density_normalize_divides_and_refuses_twice() {
        let ds = small_random(3, vec![1, 1, 1], 4);
        let fa = fourier_blocks(&ds, &KernelConfig::new(2.0).with_angles(16)).unwrap();
        let d = fa.degrees().to_vec();
        let dn = density_normalize(fa.clone()).unwrap();
        for m in -1..=1 {
            for i in 0..3 {
                for j in 0..3 {
                    let want = fa.entry(m, i, j) / (d[i] * d[j]);
                    assert!((dn.entry(m, i, j) - want).norm() < 1e-14);
                }
            }
        }
        assert!(matches!(
            density_normalize(dn),
            Err(Error::AlreadyNormalized)
        ));
    }

    #[test]
    fn config_validation() {
        let l = AngularLayout::uniform(3, 1);
        assert!(KernelConfig::new(1.0).with_angles(6).validate(&l).is_err());
        assert!(KernelConfig::new(1.0).with_angles(7).validate(&l).is_ok());
        assert!(KernelConfig::new(1.0)
            .with_angles(7)
            .with_max_freq(4)
            .validate(&l)
            .is_err());
        assert!(KernelConfig::new(0.0).validate(&l).is_err());
        assert!(KernelConfig::new(1.0)
            .with_sparsify(-1.0)
            .validate(&l)
            .is_err());
    }

    #[test]
    fn sparsify_zeroes_small_weights() {
        let ds = gen_sphere(12, 4);
        let cfg = KernelConfig::new(0.1).with_angles(16).with_sparsify(0.5);
        let grid = AffinityGrid::new(&ds, &cfg).unwrap();
        for i in 0..12 {
            for j in 0..12 {
                assert!(grid.pair(i, j).iter().all(|&w| w == 0.0 || w >= 0.5));
            }
        }
    }

    #[test]
    fn grid_degrees_match_blocks() {
        let ds = gen_sphere(10, 6);
        for dn in [false, true] {
            let cfg = KernelConfig::new(0.6)
                .with_angles(32)
                .with_density_normalize(dn)
                .with_debias(true);
            let fa = fourier_blocks(&ds, &cfg).unwrap();
            let grid = AffinityGrid::new(&ds, &cfg).unwrap();
            for (a, b) in fa.degrees().iter().zip(grid.degrees()) {
                assert!((a - b).abs() < 1e-12 * a.abs().max(1.0));
            }
        }
    }
}
