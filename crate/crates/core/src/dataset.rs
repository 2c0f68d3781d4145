//! Steerable-coefficient datasets.
//!
//! A point `x ∈ ℂ^𝒟` holds the coefficients `x_{m,ℓ}` of an image in a
//! steerable basis `R_{m,ℓ}(r) e^{imθ}`. Columns are grouped by angular index
//! `m = -M..=M` (m-major), ascending radial index `ℓ` inside each group.
//! Rotating the image by `φ` multiplies `x_{m,ℓ}` by `e^{imφ}`.

use std::f64::consts::PI;
use std::ops::Range;

use faer::Mat;
use rand::Rng;
use rand_distr::{Distribution, Normal, StandardNormal};
use rustfft::FftPlanner;

use crate::error::{Error, Result};
use crate::{rng, C64};

/// Number of radial coefficients per angular index.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AngularLayout {
    max_freq: usize,
    ell: Vec<usize>,
    offsets: Vec<usize>,
    dim: usize,
    col_freq: Vec<i32>,
}

impl AngularLayout {
    /// `ell[m + M]` is the radial count for angular index `m`; its length must
    /// be odd (`2M + 1`).
    pub fn new(ell: Vec<usize>) -> Result<Self> {
        if ell.len().is_multiple_of(2) {
            return Err(Error::Layout(format!(
                "expected 2M+1 radial counts, got {}",
                ell.len()
            )));
        }
        let max_freq = ell.len() / 2;
        let mut offsets = Vec::with_capacity(ell.len());
        let mut col_freq = Vec::new();
        let mut acc = 0;
        for (idx, &count) in ell.iter().enumerate() {
            offsets.push(acc);
            acc += count;
            col_freq.extend(std::iter::repeat_n(idx as i32 - max_freq as i32, count));
        }
        Ok(Self {
            max_freq,
            ell,
            offsets,
            dim: acc,
            col_freq,
        })
    }

    /// Same radial count for every `m` in `-M..=M`.
    pub fn uniform(max_freq: usize, radial: usize) -> Self {
        Self::new(vec![radial; 2 * max_freq + 1]).expect("odd length")
    }

    pub fn max_freq(&self) -> usize {
        self.max_freq
    }

    /// Ambient dimension `𝒟 = Σ ℓ_m`.
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn ell_counts(&self) -> &[usize] {
        &self.ell
    }

    pub fn offsets(&self) -> &[usize] {
        &self.offsets
    }

    pub fn freqs(&self) -> impl DoubleEndedIterator<Item = i32> + Clone {
        let m = self.max_freq as i32;
        -m..=m
    }

    /// Radial count `ℓ_m`; zero outside `-M..=M`.
    pub fn ell(&self, m: i32) -> usize {
        self.slot(m).map_or(0, |s| self.ell[s])
    }

    /// Column range of the `m` block; empty outside `-M..=M`.
    pub fn columns(&self, m: i32) -> Range<usize> {
        match self.slot(m) {
            Some(s) => self.offsets[s]..self.offsets[s] + self.ell[s],
            None => 0..0,
        }
    }

    /// Angular index of every column.
    pub fn column_freqs(&self) -> &[i32] {
        &self.col_freq
    }

    /// True when `ℓ_{-m} = ℓ_m` for every `m`, which conjugate-symmetric
    /// (real image) data requires.
    pub fn is_symmetric(&self) -> bool {
        self.freqs().all(|m| self.ell(m) == self.ell(-m))
    }

    fn slot(&self, m: i32) -> Option<usize> {
        let s = m + self.max_freq as i32;
        (s >= 0 && (s as usize) < self.ell.len()).then_some(s as usize)
    }
}

/// `N × 𝒟` complex coefficient matrix, row `i` = point `x_i`.
#[derive(Debug, Clone, PartialEq)]
pub struct SteerableDataset {
    layout: AngularLayout,
    n: usize,
    values: Vec<C64>,
    is_real: bool,
}

impl SteerableDataset {
    /// `values` is row-major `n × layout.dim()`.
    pub fn new(layout: AngularLayout, n: usize, values: Vec<C64>) -> Result<Self> {
        if values.len() != n * layout.dim() {
            return Err(Error::Layout(format!(
                "expected {} x {} = {} values, got {}",
                n,
                layout.dim(),
                n * layout.dim(),
                values.len()
            )));
        }
        if let Some(pos) = values
            .iter()
            .position(|v| !v.re.is_finite() || !v.im.is_finite())
        {
            return Err(Error::Layout(format!(
                "non-finite entry in row {}",
                pos / layout.dim().max(1)
            )));
        }
        Ok(Self {
            layout,
            n,
            values,
            is_real: false,
        })
    }

    pub fn from_rows(layout: AngularLayout, rows: &[Vec<C64>]) -> Result<Self> {
        let mut values = Vec::with_capacity(rows.len() * layout.dim());
        for (i, r) in rows.iter().enumerate() {
            if r.len() != layout.dim() {
                return Err(Error::Layout(format!(
                    "row {i} has {} entries, layout needs {}",
                    r.len(),
                    layout.dim()
                )));
            }
            values.extend_from_slice(r);
        }
        Self::new(layout, rows.len(), values)
    }

    /// Mark the dataset as coming from real images, i.e. `x_{-m,ℓ} = x_{m,ℓ}^*`.
    pub fn with_real_flag(mut self, is_real: bool) -> Result<Self> {
        if is_real && !self.layout.is_symmetric() {
            return Err(Error::Layout(
                "real flag needs l_{-m} = l_m for every m".into(),
            ));
        }
        self.is_real = is_real;
        Ok(self)
    }

    pub fn layout(&self) -> &AngularLayout {
        &self.layout
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn dim(&self) -> usize {
        self.layout.dim()
    }

    pub fn is_real(&self) -> bool {
        self.is_real
    }

    pub fn values(&self) -> &[C64] {
        &self.values
    }

    pub fn row(&self, i: usize) -> &[C64] {
        let d = self.layout.dim();
        &self.values[i * d..(i + 1) * d]
    }

    pub fn rows(&self) -> impl ExactSizeIterator<Item = &[C64]> + '_ {
        (0..self.n).map(move |i| self.row(i))
    }

    /// Squared Euclidean norm of every row.
    pub fn row_norms_sq(&self) -> Vec<f64> {
        self.rows().map(norm_sq).collect()
    }

    /// Coefficient `x_{i,(m,ℓ)}` with 1-based `ℓ`.
    pub fn get(&self, i: usize, m: i32, ell: usize) -> C64 {
        let cols = self.layout.columns(m);
        assert!(ell >= 1 && ell <= cols.len(), "radial index out of range");
        self.row(i)[cols.start + ell - 1]
    }

    /// `X^{(m)}`: the `N × ℓ_m` block of angular index `m`.
    pub fn block(&self, m: i32) -> Mat<C64> {
        let cols = self.layout.columns(m);
        Mat::from_fn(self.n, cols.len(), |i, c| self.row(i)[cols.start + c])
    }

    /// Replace the `m` block.
    pub fn set_block(&mut self, m: i32, block: faer::MatRef<'_, C64>) -> Result<()> {
        let cols = self.layout.columns(m);
        if block.nrows() != self.n || block.ncols() != cols.len() {
            return Err(Error::Shape(format!(
                "block for m = {m} must be {} x {}, got {} x {}",
                self.n,
                cols.len(),
                block.nrows(),
                block.ncols()
            )));
        }
        let d = self.layout.dim();
        for i in 0..self.n {
            for c in 0..cols.len() {
                self.values[i * d + cols.start + c] = block[(i, c)];
            }
        }
        Ok(())
    }

    /// All-zero dataset with the same layout, size and real flag.
    pub fn zeros_like(&self) -> Self {
        Self {
            layout: self.layout.clone(),
            n: self.n,
            values: vec![C64::new(0.0, 0.0); self.values.len()],
            is_real: self.is_real,
        }
    }

    /// Rotate point `i` by `angles[i]`.
    pub fn rotate_each(&self, angles: &[f64]) -> Result<Self> {
        if angles.len() != self.n {
            return Err(Error::Shape(format!(
                "{} angles for {} points",
                angles.len(),
                self.n
            )));
        }
        let mut out = self.clone();
        let d = self.layout.dim();
        for (i, &phi) in angles.iter().enumerate() {
            rotate_in_place(&mut out.values[i * d..(i + 1) * d], &self.layout, phi);
        }
        Ok(out)
    }

    /// Rows in the order given by `perm` (`out[k] = self[perm[k]]`).
    pub fn permute(&self, perm: &[usize]) -> Result<Self> {
        if perm.len() != self.n {
            return Err(Error::Shape("permutation length".into()));
        }
        let mut values = Vec::with_capacity(self.values.len());
        for &p in perm {
            values.extend_from_slice(self.row(p));
        }
        Ok(Self {
            values,
            ..self.clone()
        })
    }

    /// Subset of rows by index.
    pub fn select(&self, idx: &[usize]) -> Self {
        let mut values = Vec::with_capacity(idx.len() * self.dim());
        for &p in idx {
            values.extend_from_slice(self.row(p));
        }
        Self {
            layout: self.layout.clone(),
            n: idx.len(),
            values,
            is_real: self.is_real,
        }
    }

    /// Prepend one point as row 0.
    pub fn with_leading_row(&self, row: &[C64]) -> Result<Self> {
        if row.len() != self.dim() {
            return Err(Error::Layout(format!(
                "row has {} entries, layout needs {}",
                row.len(),
                self.dim()
            )));
        }
        let mut values = Vec::with_capacity(self.values.len() + row.len());
        values.extend_from_slice(row);
        values.extend_from_slice(&self.values);
        Ok(Self {
            layout: self.layout.clone(),
            n: self.n + 1,
            values,
            is_real: self.is_real,
        })
    }

    /// Elementwise linear combination `a·self + b·other`.
    pub fn combine(&self, a: C64, other: &Self, b: C64) -> Result<Self> {
        if self.layout != other.layout || self.n != other.n {
            return Err(Error::Shape("datasets differ in layout or size".into()));
        }
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(x, y)| a * x + b * y)
            .collect();
        Ok(Self {
            values,
            ..self.clone()
        })
    }

    /// `‖self - other‖_F²`.
    pub fn frobenius_dist_sq(&self, other: &Self) -> Result<f64> {
        if self.layout != other.layout || self.n != other.n {
            return Err(Error::Shape("datasets differ in layout or size".into()));
        }
        Ok(self
            .values
            .iter()
            .zip(&other.values)
            .map(|(x, y)| (x - y).norm_sqr())
            .sum())
    }
}

pub(crate) fn norm_sq(x: &[C64]) -> f64 {
    x.iter().map(|v| v.norm_sqr()).sum()
}

fn rotate_in_place(x: &mut [C64], layout: &AngularLayout, phi: f64) {
    for (v, &m) in x.iter_mut().zip(layout.column_freqs()) {
        if m != 0 {
            *v *= C64::from_polar(1.0, m as f64 * phi);
        }
    }
}

/// `R(x, φ)`: multiply coefficient `(m, ℓ)` by `e^{imφ}`.
pub fn rotate_point(x: &[C64], layout: &AngularLayout, phi: f64) -> Result<Vec<C64>> {
    if x.len() != layout.dim() {
        return Err(Error::Layout(format!(
            "point has {} entries, layout needs {}",
            x.len(),
            layout.dim()
        )));
    }
    let mut out = x.to_vec();
    rotate_in_place(&mut out, layout, phi);
    Ok(out)
}

/// Layout of the unit-sphere toy manifold: `M = 1`, `ℓ = (0, 1, 1)`.
pub fn sphere_layout() -> AngularLayout {
    AngularLayout::new(vec![0, 1, 1]).expect("odd length")
}

/// `p ∈ 𝕊² ↦ (x_{0,1}, x_{1,1}) = (p_z, p_x + i p_y)`.
pub fn sphere_embed(p: [f64; 3]) -> [C64; 2] {
    [C64::new(p[2], 0.0), C64::new(p[0], p[1])]
}

/// Inverse of [`sphere_embed`] for a sphere-layout row.
pub fn sphere_cartesian(x: &[C64]) -> [f64; 3] {
    [x[1].re, x[1].im, x[0].re]
}

/// `N` points uniform on `𝕊²` (normalised 3-D Gaussians), sphere layout.
pub fn gen_sphere(n: usize, seed: u64) -> SteerableDataset {
    let mut rng = rng::stream(seed, 0);
    gen_sphere_with(n, &mut rng)
}

pub(crate) fn gen_sphere_with<R: Rng>(n: usize, rng: &mut R) -> SteerableDataset {
    let mut values = Vec::with_capacity(2 * n);
    for _ in 0..n {
        let p = loop {
            let g: [f64; 3] = [
                StandardNormal.sample(rng),
                StandardNormal.sample(rng),
                StandardNormal.sample(rng),
            ];
            let r = (g[0] * g[0] + g[1] * g[1] + g[2] * g[2]).sqrt();
            if r > 1e-12 {
                break [g[0] / r, g[1] / r, g[2] / r];
            }
        };
        values.extend(sphere_embed(p));
    }
    SteerableDataset::new(sphere_layout(), n, values).expect("finite by construction")
}

/// Complex white noise: each coordinate gets `η` with `E|η|² = σ²`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseSpec {
    pub sigma2: f64,
    pub seed: u64,
}

impl NoiseSpec {
    pub fn new(sigma2: f64, seed: u64) -> Result<Self> {
        if !(sigma2 >= 0.0 && sigma2.is_finite()) {
            return Err(Error::Config(format!(
                "noise variance must be >= 0, got {sigma2}"
            )));
        }
        Ok(Self { sigma2, seed })
    }

    /// Variance for total noise magnitude `γ = 𝒟σ²`.
    pub fn from_gamma(gamma: f64, dim: usize, seed: u64) -> Result<Self> {
        Self::new(gamma / dim as f64, seed)
    }
}

/// `y = x + η`. Real and imaginary parts each carry `σ²/2`. For real-flagged
/// data the noise is conjugate-symmetric (`m = 0` real with variance `σ²`).
pub fn add_noise(ds: &SteerableDataset, spec: &NoiseSpec) -> Result<SteerableDataset> {
    let spec = NoiseSpec::new(spec.sigma2, spec.seed)?;
    if spec.sigma2 == 0.0 {
        return Ok(ds.clone());
    }
    let mut rng = rng::stream(spec.seed, 0);
    let mut out = ds.clone();
    let d = ds.dim();
    let half = Normal::new(0.0, (spec.sigma2 / 2.0).sqrt()).expect("finite sigma");
    let full = Normal::new(0.0, spec.sigma2.sqrt()).expect("finite sigma");
    let layout = ds.layout().clone();
    for i in 0..ds.len() {
        let row = &mut out.values[i * d..(i + 1) * d];
        if ds.is_real() {
            for m in 0..=layout.max_freq() as i32 {
                let cols = layout.columns(m);
                let neg = layout.columns(-m);
                for (c, nc) in cols.zip(neg) {
                    if m == 0 {
                        row[c] += C64::new(full.sample(&mut rng), 0.0);
                    } else {
                        let eta = C64::new(half.sample(&mut rng), half.sample(&mut rng));
                        row[c] += eta;
                        row[nc] += eta.conj();
                    }
                }
            }
        } else {
            for v in row.iter_mut() {
                *v += C64::new(half.sample(&mut rng), half.sample(&mut rng));
            }
        }
    }
    Ok(out)
}

/// Per-`m` linear maps with orthonormal columns, `x^{(m)} ↦ Q_m x^{(m)}`.
///
/// Mixing only radial indices of the same `m` keeps the map equivariant, and
/// `Q_m^* Q_m = I` keeps every rotational distance.
#[derive(Debug, Clone)]
pub struct Embedding {
    source: AngularLayout,
    target: AngularLayout,
    blocks: Vec<Mat<C64>>,
}

impl Embedding {
    pub fn identity(layout: &AngularLayout) -> Self {
        let blocks = layout
            .freqs()
            .map(|m| {
                let l = layout.ell(m);
                Mat::from_fn(l, l, |r, c| {
                    if r == c {
                        C64::new(1.0, 0.0)
                    } else {
                        C64::new(0.0, 0.0)
                    }
                })
            })
            .collect();
        Self {
            source: layout.clone(),
            target: layout.clone(),
            blocks,
        }
    }

    /// Random isometric blocks from the QR factor of complex Gaussian matrices.
    pub fn random(source: &AngularLayout, target: &AngularLayout, seed: u64) -> Result<Self> {
        if source.max_freq() != target.max_freq() {
            return Err(Error::Layout(
                "embedding must keep the angular range".into(),
            ));
        }
        for m in source.freqs() {
            if target.ell(m) < source.ell(m) {
                return Err(Error::Dimension {
                    requested: target.ell(m),
                    current: source.ell(m),
                });
            }
        }
        let mut rng = rng::stream(seed, 1);
        let mut blocks = Vec::new();
        for m in source.freqs() {
            let (rows, cols) = (target.ell(m), source.ell(m));
            if cols == 0 {
                blocks.push(Mat::zeros(rows, 0));
                continue;
            }
            let g = Mat::from_fn(rows, cols, |_, _| {
                C64::new(
                    StandardNormal.sample(&mut rng),
                    StandardNormal.sample(&mut rng),
                )
            });
            blocks.push(g.qr().compute_thin_Q());
        }
        Ok(Self {
            source: source.clone(),
            target: target.clone(),
            blocks,
        })
    }

    pub fn target(&self) -> &AngularLayout {
        &self.target
    }

    pub fn apply_row(&self, x: &[C64]) -> Result<Vec<C64>> {
        if x.len() != self.source.dim() {
            return Err(Error::Layout(format!(
                "point has {} entries, layout needs {}",
                x.len(),
                self.source.dim()
            )));
        }
        let mut out = vec![C64::new(0.0, 0.0); self.target.dim()];
        for (slot, m) in self.source.freqs().enumerate() {
            let q = &self.blocks[slot];
            let src = self.source.columns(m);
            let dst = self.target.columns(m);
            for (r, o) in dst.clone().enumerate() {
                let mut acc = C64::new(0.0, 0.0);
                for (c, s) in src.clone().enumerate() {
                    acc += q[(r, c)] * x[s];
                }
                out[o] = acc;
            }
        }
        Ok(out)
    }

    pub fn apply(&self, ds: &SteerableDataset) -> Result<SteerableDataset> {
        if ds.layout() != &self.source {
            return Err(Error::Layout(
                "dataset layout differs from embedding source".into(),
            ));
        }
        let mut values = Vec::with_capacity(ds.len() * self.target.dim());
        for row in ds.rows() {
            values.extend(self.apply_row(row)?);
        }
        SteerableDataset::new(self.target.clone(), ds.len(), values)
    }
}

/// Spread `d_new - 𝒟` extra dimensions evenly over the angular blocks; the
/// remainder goes to `m = 0, 1, -1, 2, -2, …` in that order.
pub fn spread_layout(layout: &AngularLayout, d_new: usize) -> Result<AngularLayout> {
    if d_new < layout.dim() {
        return Err(Error::Dimension {
            requested: d_new,
            current: layout.dim(),
        });
    }
    let blocks = 2 * layout.max_freq() + 1;
    let extra = d_new - layout.dim();
    let mut ell = layout.ell_counts().to_vec();
    for e in ell.iter_mut() {
        *e += extra / blocks;
    }
    let mut rem = extra % blocks;
    let mid = layout.max_freq();
    let mut step = 0usize;
    while rem > 0 {
        let slot = if step == 0 {
            mid
        } else if step % 2 == 1 {
            mid + step.div_ceil(2)
        } else {
            mid - step / 2
        };
        ell[slot] += 1;
        rem -= 1;
        step += 1;
    }
    AngularLayout::new(ell)
}

/// Embed into ambient dimension `d_new` with a random per-`m` isometry.
pub fn embed_orthogonal(
    ds: &SteerableDataset,
    d_new: usize,
    seed: u64,
) -> Result<SteerableDataset> {
    let target = spread_layout(ds.layout(), d_new)?;
    Embedding::random(ds.layout(), &target, seed)?.apply(ds)
}

/// Ring count and angular sample count of a polar grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PolarGrid {
    pub n_rings: usize,
    pub n_angles: usize,
}

impl PolarGrid {
    pub fn image_len(&self) -> usize {
        self.n_rings * self.n_angles
    }

    /// Largest `M` the grid resolves without aliasing.
    pub fn max_resolvable_freq(&self) -> usize {
        self.n_angles.saturating_sub(1) / 2
    }
}

/// Steerable coefficients from images sampled on a polar grid.
///
/// `samples` holds consecutive images, each ring-major (`n_angles` equally
/// spaced samples per ring). Ring `ℓ` becomes radial index `ℓ` of every `m`,
/// with `x_{m,ℓ} = (1/T) Σ_t I(r_ℓ, θ_t) e^{-imθ_t}`.
pub fn from_polar_grid(
    samples: &[C64],
    grid: PolarGrid,
    max_freq: usize,
) -> Result<SteerableDataset> {
    let required = 2 * max_freq + 1;
    if grid.n_angles < required {
        return Err(Error::Aliasing {
            n_angles: grid.n_angles,
            max_freq,
            required,
        });
    }
    if grid.n_rings == 0 || samples.is_empty() || !samples.len().is_multiple_of(grid.image_len()) {
        return Err(Error::Layout(format!(
            "{} samples is not a whole number of {}x{} images",
            samples.len(),
            grid.n_rings,
            grid.n_angles
        )));
    }
    let layout = AngularLayout::uniform(max_freq, grid.n_rings);
    let n = samples.len() / grid.image_len();
    let t = grid.n_angles;
    let fft = FftPlanner::new().plan_fft_forward(t);
    let mut buf = vec![C64::new(0.0, 0.0); t];
    let mut values = vec![C64::new(0.0, 0.0); n * layout.dim()];
    let scale = 1.0 / t as f64;
    for img in 0..n {
        let row = &mut values[img * layout.dim()..(img + 1) * layout.dim()];
        for ring in 0..grid.n_rings {
            let start = img * grid.image_len() + ring * t;
            buf.copy_from_slice(&samples[start..start + t]);
            fft.process(&mut buf);
            for m in layout.freqs() {
                let idx = m.rem_euclid(t as i32) as usize;
                row[layout.columns(m).start + ring] = buf[idx] * scale;
            }
        }
    }
    SteerableDataset::new(layout, n, values)
}

/// Real-valued images; the result carries the real flag.
pub fn from_polar_grid_real(
    samples: &[f64],
    grid: PolarGrid,
    max_freq: usize,
) -> Result<SteerableDataset> {
    let complex: Vec<C64> = samples.iter().map(|&v| C64::new(v, 0.0)).collect();
    let mut ds = from_polar_grid(&complex, grid, max_freq)?;
    // Exact conjugate symmetry, independent of FFT rounding.
    let layout = ds.layout().clone();
    let d = layout.dim();
    for i in 0..ds.len() {
        let row = &mut ds.values[i * d..(i + 1) * d];
        for c in layout.columns(0) {
            row[c].im = 0.0;
        }
        for m in 1..=max_freq as i32 {
            for (p, q) in layout.columns(m).zip(layout.columns(-m)) {
                row[q] = row[p].conj();
            }
        }
    }
    ds.with_real_flag(true)
}

/// Evaluate `I(r_ℓ, θ_t) = Σ_m x_{m,ℓ} e^{imθ_t}` on `n_angles` samples per
/// ring. Requires the same radial count for every `m`.
pub fn to_polar_grid(ds: &SteerableDataset, n_angles: usize) -> Result<Vec<C64>> {
    let layout = ds.layout();
    let rings = layout.ell(0);
    if layout.ell_counts().iter().any(|&l| l != rings) {
        return Err(Error::Layout("polar reconstruction needs equal l_m".into()));
    }
    let required = 2 * layout.max_freq() + 1;
    if n_angles < required {
        return Err(Error::Aliasing {
            n_angles,
            max_freq: layout.max_freq(),
            required,
        });
    }
    let ifft = FftPlanner::new().plan_fft_inverse(n_angles);
    let mut buf = vec![C64::new(0.0, 0.0); n_angles];
    let mut out = Vec::with_capacity(ds.len() * rings * n_angles);
    for row in ds.rows() {
        for ring in 0..rings {
            buf.fill(C64::new(0.0, 0.0));
            for m in layout.freqs() {
                buf[m.rem_euclid(n_angles as i32) as usize] += row[layout.columns(m).start + ring];
            }
            ifft.process(&mut buf);
            out.extend_from_slice(&buf);
        }
    }
    Ok(out)
}

/// Random band-limited ring images sampled on `grid`, ring-major per image.
///
/// Coefficient `x_{m,ℓ}` is complex Gaussian with variance `1/(1+m²)`, so
/// higher frequencies carry less energy. With `real` the coefficients are
/// conjugate symmetric and the returned samples have zero imaginary part.
pub fn random_polar_images(
    n: usize,
    grid: PolarGrid,
    band: usize,
    real: bool,
    seed: u64,
) -> Result<Vec<C64>> {
    if n == 0 || grid.n_rings == 0 {
        return Err(Error::Config("need at least one image and one ring".into()));
    }
    let layout = AngularLayout::uniform(band, grid.n_rings);
    let mut rng = rng::stream(seed, 0);
    let mut values = vec![C64::new(0.0, 0.0); n * layout.dim()];
    for row in values.chunks_mut(layout.dim()) {
        for m in layout.freqs() {
            if real && m < 0 {
                continue;
            }
            let sd = (0.5 / (1.0 + (m * m) as f64)).sqrt();
            for c in layout.columns(m) {
                let re: f64 = rng.sample(StandardNormal);
                let im: f64 = rng.sample(StandardNormal);
                row[c] = if real && m == 0 {
                    C64::new(re * sd * std::f64::consts::SQRT_2, 0.0)
                } else {
                    C64::new(re * sd, im * sd)
                };
            }
        }
        if real {
            for m in 1..=band as i32 {
                for (p, q) in layout.columns(m).zip(layout.columns(-m)) {
                    row[q] = row[p].conj();
                }
            }
        }
    }
    let ds = SteerableDataset::new(layout, n, values)?;
    let mut out = to_polar_grid(&ds, grid.n_angles)?;
    if real {
        out.iter_mut().for_each(|v| v.im = 0.0);
    }
    Ok(out)
}

/// Angle of grid index `k` on a `K`-point circle.
pub fn grid_angle(k: usize, n_angles: usize) -> f64 {
    2.0 * PI * k as f64 / n_angles as f64
}
