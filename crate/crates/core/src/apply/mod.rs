//! Applying the steerable graph Laplacian and estimating `Δ_M f`.
//!
//! Functions on `Γ = {1..N} × S¹` are sampled on the `K`-point angle grid and
//! every angle integral becomes a `(2π/K)` Riemann sum.
//!
//! Sign convention: `L̃` is positive semi-definite, so `(4/ε) L̃ g` tends to
//! `−Δ_M f`. The estimators return `−(4/ε) {L̃g}(0, 0)`, i.e. an estimate of
//! `Δ_M f` itself (`−2` for the sphere test function).

mod experiments;

pub use experiments::{
    convergence_experiment, fit_slope, log2_grid, noise_robustness_experiment, ConvergenceReport,
    NoiseRow, SPHERE_TRUTH,
};

use std::borrow::Cow;
use std::f64::consts::PI;

use crate::dataset::{rotate_point, SteerableDataset};
use crate::error::{Error, Result};
use crate::kernel::{check_degrees, weights_in_place, AffinityGrid, DistanceFft, KernelConfig};
use crate::C64;

/// Complex samples `g(i, 2πk/K)`, row-major `N × K`.
#[derive(Debug, Clone, PartialEq)]
pub struct GammaFunction {
    n: usize,
    k: usize,
    values: Vec<C64>,
}

impl GammaFunction {
    pub fn new(n: usize, k: usize, values: Vec<C64>) -> Result<Self> {
        if values.len() != n * k {
            return Err(Error::Shape(format!(
                "expected {} samples, got {}",
                n * k,
                values.len()
            )));
        }
        if values
            .iter()
            .any(|v| !v.re.is_finite() || !v.im.is_finite())
        {
            return Err(Error::Shape("non-finite sample".into()));
        }
        Ok(Self { n, k, values })
    }

    pub fn from_fn(n: usize, k: usize, mut f: impl FnMut(usize, f64) -> C64) -> Self {
        let mut values = Vec::with_capacity(n * k);
        for i in 0..n {
            for t in 0..k {
                values.push(f(i, 2.0 * PI * t as f64 / k as f64));
            }
        }
        Self { n, k, values }
    }

    pub fn constant(n: usize, k: usize, c: C64) -> Self {
        Self {
            n,
            k,
            values: vec![c; n * k],
        }
    }

    /// `v_i e^{imθ}`.
    pub fn eigenfunction(v: &[C64], m: i32, k: usize) -> Self {
        Self::from_fn(v.len(), k, |i, theta| {
            v[i] * C64::from_polar(1.0, m as f64 * theta)
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn n_angles(&self) -> usize {
        self.k
    }

    pub fn values(&self) -> &[C64] {
        &self.values
    }

    pub fn get(&self, i: usize, t: usize) -> C64 {
        self.values[i * self.k + t]
    }

    pub fn combine(&self, a: C64, other: &Self, b: C64) -> Result<Self> {
        if self.n != other.n || self.k != other.k {
            return Err(Error::Shape("functions live on different grids".into()));
        }
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(x, y)| a * x + b * y)
            .collect();
        Ok(Self { values, ..*self })
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }
}

fn check_shape(grid: &AffinityGrid, g: &GammaFunction) -> Result<()> {
    if g.n != grid.n() || g.k != grid.n_angles() {
        return Err(Error::Shape(format!(
            "function is {} x {}, operator needs {} x {}",
            g.n,
            g.k,
            grid.n(),
            grid.n_angles()
        )));
    }
    Ok(())
}

/// `(W g)(i, θ_a) = (2π/K) Σ_j Σ_b W_ij(θ_a, θ_b) g(j, θ_b)`.
fn apply_affinity(grid: &AffinityGrid, g: &GammaFunction) -> Vec<C64> {
    let (n, k) = (grid.n(), grid.n_angles());
    let h = 2.0 * PI / k as f64;
    let mut out = vec![C64::new(0.0, 0.0); n * k];
    for i in 0..n {
        for j in 0..n {
            let w = grid.pair(i, j);
            let gj = &g.values[j * k..(j + 1) * k];
            for a in 0..k {
                let mut acc = C64::new(0.0, 0.0);
                for (b, gv) in gj.iter().enumerate() {
                    acc += gv * w[(b + k - a) % k];
                }
                out[i * k + a] += acc * h;
            }
        }
    }
    out
}

/// `L̃ g = g − D⁻¹ W g`.
pub fn apply_normalized(grid: &AffinityGrid, g: &GammaFunction) -> Result<GammaFunction> {
    check_shape(grid, g)?;
    let k = g.k;
    let wg = apply_affinity(grid, g);
    let d = grid.degrees();
    let values = wg
        .iter()
        .enumerate()
        .map(|(idx, w)| g.values[idx] - w / d[idx / k])
        .collect();
    Ok(GammaFunction { values, ..*g })
}

/// `L g = D g − W g`.
pub fn apply_unnormalized(grid: &AffinityGrid, g: &GammaFunction) -> Result<GammaFunction> {
    check_shape(grid, g)?;
    let k = g.k;
    let wg = apply_affinity(grid, g);
    let d = grid.degrees();
    let values = wg
        .iter()
        .enumerate()
        .map(|(idx, w)| g.values[idx] * d[idx / k] - w)
        .collect();
    Ok(GammaFunction { values, ..*g })
}

/// Both sides of the quadratic-form identity for `L = D − W`.
#[derive(Debug, Clone, Copy)]
pub struct QuadraticForm {
    /// `⟨g, L g⟩` with the grid inner product.
    pub inner: C64,
    /// `½ Σ_ij ∫∫ W_ij(θ, φ) |g_i(θ) − g_j(φ)|²` on the grid.
    pub energy: f64,
}

pub fn quadratic_form(grid: &AffinityGrid, g: &GammaFunction) -> Result<QuadraticForm> {
    let lg = apply_unnormalized(grid, g)?;
    let (n, k) = (grid.n(), grid.n_angles());
    let h = 2.0 * PI / k as f64;
    let inner = g
        .values
        .iter()
        .zip(&lg.values)
        .map(|(a, b)| a.conj() * b)
        .sum::<C64>()
        * h;
    let mut energy = 0.0;
    for i in 0..n {
        for j in 0..n {
            let w = grid.pair(i, j);
            for a in 0..k {
                let gi = g.get(i, a);
                for b in 0..k {
                    energy += w[(b + k - a) % k] * (gi - g.get(j, b)).norm_sqr();
                }
            }
        }
    }
    Ok(QuadraticForm {
        inner,
        energy: 0.5 * h * h * energy,
    })
}

/// Point at which the operator is evaluated.
#[derive(Debug, Clone, PartialEq)]
pub enum Base {
    /// One of the dataset rows.
    Sample(usize),
    /// A designated test point, added to the graph as index 0.
    External(Vec<C64>),
}

/// Weighted mean `Σ w·v / Σ w` with `w = exp(−d/ε)`; `None` if all weights vanish.
pub(crate) fn kernel_mean(dist: &[f64], vals: &[f64], eps: f64) -> Option<f64> {
    let (mut num, mut den) = (0.0, 0.0);
    for (d, v) in dist.iter().zip(vals) {
        let w = (-d / eps).exp();
        num += w * v;
        den += w;
    }
    (den > crate::kernel::DEGREE_FLOOR).then(|| num / den)
}

/// `(4/ε)(mean − f₀)`; see the module sign convention.
pub(crate) fn from_mean(mean: f64, f0: f64, eps: f64) -> f64 {
    4.0 / eps * (mean - f0)
}

/// Row `base` of `D⁻¹ W` applied to `g`, where `g(j, k)` is the value at
/// `x_j^{2πk/K}`.
pub(crate) fn row_average(
    ds: &SteerableDataset,
    base: usize,
    cfg: &KernelConfig,
    g: impl Fn(usize, usize) -> f64,
) -> Result<f64> {
    cfg.validate(ds.layout())?;
    let n = ds.len();
    let k = cfg.n_angles;
    let layout = ds.layout();
    let norms = ds.row_norms_sq();
    let mut eng = DistanceFft::new(layout.max_freq(), k)?;
    let mut w = vec![0.0; k];
    let col_scale = if cfg.density_normalize {
        let d = all_degrees(ds, cfg)?;
        d.iter().map(|v| 1.0 / v).collect()
    } else {
        vec![1.0; n]
    };
    let (mut num, mut den) = (0.0, 0.0);
    for j in 0..n {
        eng.distances(
            ds.row(base),
            norms[base],
            ds.row(j),
            norms[j],
            layout,
            &mut w,
        );
        weights_in_place(&mut w, cfg, j == base);
        for (t, &wt) in w.iter().enumerate() {
            if wt != 0.0 {
                let wt = wt * col_scale[j];
                num += wt * g(j, t);
                den += wt;
            }
        }
    }
    if !(den > crate::kernel::DEGREE_FLOOR) {
        return Err(Error::IsolatedPoint {
            index: base,
            degree: den,
        });
    }
    Ok(num / den)
}

/// Raw degrees `D_i = (2π/K) Σ_j Σ_k W_ij(0, 2πk/K)` for all points.
fn all_degrees(ds: &SteerableDataset, cfg: &KernelConfig) -> Result<Vec<f64>> {
    use rayon::prelude::*;
    let n = ds.len();
    let k = cfg.n_angles;
    let layout = ds.layout();
    let norms = ds.row_norms_sq();
    let h = 2.0 * PI / k as f64;
    let deg: Vec<f64> = (0..n)
        .into_par_iter()
        .map_init(
            || {
                (
                    DistanceFft::new(layout.max_freq(), k).expect("validated"),
                    vec![0.0; k],
                )
            },
            |(eng, w), i| {
                let mut s = 0.0;
                for j in 0..n {
                    eng.distances(ds.row(i), norms[i], ds.row(j), norms[j], layout, w);
                    weights_in_place(w, cfg, i == j);
                    s += w.iter().sum::<f64>();
                }
                s * h
            },
        )
        .collect();
    check_degrees(&deg)?;
    Ok(deg)
}

fn rotated_values(ds: &SteerableDataset, f: &dyn Fn(&[C64]) -> f64, k: usize) -> Result<Vec<f64>> {
    let mut out = Vec::with_capacity(ds.len() * k);
    for row in ds.rows() {
        for t in 0..k {
            let r = rotate_point(row, ds.layout(), 2.0 * PI * t as f64 / k as f64)?;
            out.push(f(&r));
        }
    }
    Ok(out)
}

/// Estimate `Δ_M f` at the base point from the steerable graph Laplacian.
pub fn estimate_laplace_beltrami(
    ds: &SteerableDataset,
    f: &dyn Fn(&[C64]) -> f64,
    base: &Base,
    cfg: &KernelConfig,
) -> Result<f64> {
    let (aug, b) = match base {
        Base::Sample(i) => {
            if *i >= ds.len() {
                return Err(Error::Shape(format!(
                    "base index {i} out of range for {} points",
                    ds.len()
                )));
            }
            (Cow::Borrowed(ds), *i)
        }
        Base::External(x0) => (Cow::Owned(ds.with_leading_row(x0)?), 0),
    };
    let k = cfg.n_angles;
    let vals = rotated_values(&aug, f, k)?;
    let mean = row_average(&aug, b, cfg, |j, t| vals[j * k + t])?;
    Ok(from_mean(mean, f(aug.row(b)), cfg.epsilon))
}

/// Standard (rotation-free) graph Laplacian estimate at `points[base]`, with
/// `W_ij = exp(−‖x_i − x_j‖²/ε)` and the base point included in the sums.
pub fn standard_graph_laplacian_estimate(
    points: &[Vec<f64>],
    f: &dyn Fn(&[f64]) -> f64,
    base: usize,
    epsilon: f64,
) -> Result<f64> {
    if !(epsilon > 0.0 && epsilon.is_finite()) {
        return Err(Error::Config(format!(
            "epsilon must be positive, got {epsilon}"
        )));
    }
    let x0 = points
        .get(base)
        .ok_or_else(|| Error::Shape(format!("base index {base} out of range")))?;
    let mut dist = Vec::with_capacity(points.len());
    let mut vals = Vec::with_capacity(points.len());
    for p in points {
        if p.len() != x0.len() {
            return Err(Error::Shape("points differ in dimension".into()));
        }
        dist.push(p.iter().zip(x0).map(|(a, b)| (a - b) * (a - b)).sum());
        vals.push(f(p));
    }
    let mean = kernel_mean(&dist, &vals, epsilon).ok_or(Error::IsolatedPoint {
        index: base,
        degree: 0.0,
    })?;
    Ok(from_mean(mean, f(x0), epsilon))
}

/// `f(x) = Re x_{1,1} + x_{0,1}`, i.e. `p_x + p_z` on the sphere layout.
pub fn sphere_test_function(x: &[C64]) -> f64 {
    x[1].re + x[0].re
}

/// The test point `p = (1, 0, 0)` in sphere coordinates.
pub fn sphere_test_point() -> Vec<C64> {
    vec![C64::new(0.0, 0.0), C64::new(1.0, 0.0)]
}
