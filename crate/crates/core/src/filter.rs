//! Rotation-equivariant filtering.
//!
//! Each angular block `X^(m)` is fitted in least squares by the retained
//! harmonics `Ṽ^(m)_{:,1..k_m}`; the fit `X̂^(m) = Ṽ^(m) B^(m)` is the
//! filtered block. Blocks are independent.

use faer::linalg::solvers::SolveLstsq;
use faer::{Mat, MatRef};
use log::warn;
use rayon::prelude::*;

use crate::dataset::{AngularLayout, SteerableDataset};
use crate::error::{Error, Result};
use crate::harmonics::{truncate, HarmonicBasis, TruncationPlan};
use crate::C64;

/// Relative eigenvalue gap at the cutoff below which a block is flagged.
pub const DEGENERATE_GAP: f64 = 1e-6;

fn rank_tol(diag_max: f64, rows: usize, cols: usize) -> f64 {
    diag_max * rows.max(cols) as f64 * f64::EPSILON * 16.0
}

/// Least-squares coefficients and the numerical rank of `V`.
#[derive(Debug, Clone)]
pub struct BlockSolution {
    pub b: Mat<C64>,
    pub rank: usize,
}

fn pinv_solve(x: MatRef<'_, C64>, v: MatRef<'_, C64>) -> Result<BlockSolution> {
    let svd = v.thin_svd().map_err(|_| Error::EigenSolver { m: 0 })?;
    let s = svd.S().column_vector();
    let smax = (0..s.nrows()).map(|i| s[i].re).fold(0.0, f64::max);
    let tol = rank_tol(smax, v.nrows(), v.ncols());
    let (u, w) = (svd.U(), svd.V());
    let utx = u.adjoint() * x;
    let mut scaled = Mat::<C64>::zeros(utx.nrows(), utx.ncols());
    let mut rank = 0;
    for i in 0..s.nrows() {
        let si = s[i].re;
        if si > tol {
            rank += 1;
            for c in 0..utx.ncols() {
                scaled[(i, c)] = utx[(i, c)] / si;
            }
        }
    }
    Ok(BlockSolution {
        b: w * scaled,
        rank,
    })
}

/// `argmin_B ‖X − V B‖_F` through a QR factorisation of `V`, shared by all
/// columns of `X`. Falls back to the minimum-norm SVD solution when `V` is
/// numerically rank deficient.
pub fn solve_block_ranked(x: MatRef<'_, C64>, v: MatRef<'_, C64>) -> Result<BlockSolution> {
    if x.nrows() != v.nrows() {
        return Err(Error::Shape(format!(
            "X has {} rows, V has {}",
            x.nrows(),
            v.nrows()
        )));
    }
    let k = v.ncols();
    if k > v.nrows() {
        return Err(Error::Shape(format!("k = {k} exceeds N = {}", v.nrows())));
    }
    if k == 0 || x.ncols() == 0 {
        return Ok(BlockSolution {
            b: Mat::zeros(k, x.ncols()),
            rank: 0,
        });
    }
    let qr = v.qr();
    let r = qr.thin_R();
    let diag_max = (0..k).map(|i| r[(i, i)].norm()).fold(0.0, f64::max);
    let tol = rank_tol(diag_max, v.nrows(), k);
    if diag_max == 0.0 || (0..k).any(|i| r[(i, i)].norm() <= tol) {
        let sol = pinv_solve(x, v)?;
        warn!(
            "rank-deficient harmonic block: rank {} of {k}; using minimum-norm solution",
            sol.rank
        );
        return Ok(sol);
    }
    Ok(BlockSolution {
        b: qr.solve_lstsq(x),
        rank: k,
    })
}

pub fn solve_block(x: MatRef<'_, C64>, v: MatRef<'_, C64>) -> Result<Mat<C64>> {
    Ok(solve_block_ranked(x, v)?.b)
}

/// Orthogonal projector `C = Q Q*` onto `span(V)` and its rank.
#[derive(Debug, Clone)]
pub struct Projection {
    pub c: Mat<C64>,
    pub rank: usize,
}

pub fn projection_matrix(v: MatRef<'_, C64>) -> Result<Projection> {
    let (n, k) = (v.nrows(), v.ncols());
    if k > n {
        return Err(Error::Shape(format!("k = {k} exceeds N = {n}")));
    }
    if k == 0 {
        return Ok(Projection {
            c: Mat::zeros(n, n),
            rank: 0,
        });
    }
    let qr = v.qr();
    let r = qr.thin_R();
    let diag_max = (0..k).map(|i| r[(i, i)].norm()).fold(0.0, f64::max);
    let tol = rank_tol(diag_max, n, k);
    let q = if diag_max > 0.0 && (0..k).all(|i| r[(i, i)].norm() > tol) {
        qr.compute_thin_Q()
    } else {
        let svd = v.thin_svd().map_err(|_| Error::EigenSolver { m: 0 })?;
        let s = svd.S().column_vector();
        let smax = (0..s.nrows()).map(|i| s[i].re).fold(0.0, f64::max);
        let tol = rank_tol(smax, n, k);
        let keep: Vec<usize> = (0..s.nrows()).filter(|&i| s[i].re > tol).collect();
        warn!("rank-deficient harmonic block: rank {} of {k}", keep.len());
        let u = svd.U();
        Mat::from_fn(n, keep.len(), |i, j| u[(i, keep[j])])
    };
    let rank = q.ncols();
    Ok(Projection {
        c: &q * q.adjoint(),
        rank,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct BlockDiagnostics {
    pub m: i32,
    pub k: usize,
    pub ell: usize,
    pub rank: usize,
    /// `‖X^(m) − Ṽ^(m) B^(m)‖_F`.
    pub residual: f64,
    /// The cutoff sits inside a near-degenerate eigenvalue cluster.
    pub degenerate_cutoff: bool,
}

#[derive(Debug, Clone)]
pub struct FilterResult {
    pub plan: TruncationPlan,
    /// `B^(m)` for `m = −M..=M` of the dataset layout (`k_m × ℓ_m`).
    pub coefficients: Vec<Mat<C64>>,
    pub filtered: SteerableDataset,
    pub diagnostics: Vec<BlockDiagnostics>,
}

impl FilterResult {
    pub fn coefficients(&self, m: i32) -> &Mat<C64> {
        let mm = self.filtered.layout().max_freq() as i32;
        &self.coefficients[(m + mm) as usize]
    }
}

fn degenerate_at(vals: &[f64], k: usize) -> bool {
    if k == 0 || k >= vals.len() {
        return false;
    }
    let (lo, hi) = (vals[k - 1], vals[k]);
    (hi - lo) <= DEGENERATE_GAP * hi.abs().max(lo.abs()).max(f64::MIN_POSITIVE)
}

/// Filter every block of `ds` against the harmonics retained below `lambda_c`.
pub fn filter_dataset(
    ds: &SteerableDataset,
    basis: &HarmonicBasis,
    lambda_c: f64,
) -> Result<FilterResult> {
    filter_with_plan(ds, basis, truncate(basis, lambda_c))
}

pub fn filter_with_plan(
    ds: &SteerableDataset,
    basis: &HarmonicBasis,
    plan: TruncationPlan,
) -> Result<FilterResult> {
    let layout = ds.layout();
    if ds.len() != basis.n() {
        return Err(Error::Layout(format!(
            "dataset has {} points, basis was built on {}",
            ds.len(),
            basis.n()
        )));
    }
    if layout.max_freq() > basis.max_freq() {
        return Err(Error::Layout(format!(
            "basis covers |m| <= {}, dataset needs |m| <= {}",
            basis.max_freq(),
            layout.max_freq()
        )));
    }
    let mm = layout.max_freq() as i32;
    let solve_for: Vec<i32> = if ds.is_real() {
        (0..=mm).collect()
    } else {
        (-mm..=mm).collect()
    };
    let solved: Vec<(i32, Mat<C64>, Mat<C64>, BlockDiagnostics)> = solve_for
        .par_iter()
        .map(|&m| {
            let k = plan.k(m);
            let x = ds.block(m);
            let v = basis.leading_vectors(m, k);
            let sol = solve_block_ranked(x.as_ref(), v.as_ref())?;
            let xh = &v * &sol.b;
            let residual = (&x - &xh).norm_l2();
            let diag = BlockDiagnostics {
                m,
                k,
                ell: layout.ell(m),
                rank: sol.rank,
                residual,
                degenerate_cutoff: degenerate_at(basis.eigenvalues(m), k),
            };
            Ok((m, sol.b, xh, diag))
        })
        .collect::<Result<_>>()?;

    let mut filtered = ds.zeros_like();
    let mut coefficients: Vec<Option<Mat<C64>>> = vec![None; (2 * mm + 1) as usize];
    let mut diagnostics: Vec<Option<BlockDiagnostics>> = vec![None; (2 * mm + 1) as usize];
    let conj = |a: &Mat<C64>| Mat::from_fn(a.nrows(), a.ncols(), |i, j| a[(i, j)].conj());
    for (m, b, xh, d) in solved {
        filtered.set_block(m, xh.as_ref())?;
        if ds.is_real() && m > 0 {
            filtered.set_block(-m, conj(&xh).as_ref())?;
            coefficients[(mm - m) as usize] = Some(conj(&b));
            diagnostics[(mm - m) as usize] = Some(BlockDiagnostics { m: -m, ..d.clone() });
        }
        coefficients[(m + mm) as usize] = Some(b);
        diagnostics[(m + mm) as usize] = Some(d);
    }
    Ok(FilterResult {
        plan,
        coefficients: coefficients
            .into_iter()
            .map(|c| c.expect("every block solved"))
            .collect(),
        filtered,
        diagnostics: diagnostics
            .into_iter()
            .map(|d| d.expect("every block solved"))
            .collect(),
    })
}

/// Predicted noise passed by the filter and its dimension-free bound.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VarianceEstimate {
    /// `σ² Σ_m k_m ℓ_m / N`.
    pub expected: f64,
    /// `max_m k_m · γ / N` with `γ = 𝒟σ²`.
    pub bound: f64,
}

pub fn variance_estimate(
    plan: &TruncationPlan,
    layout: &AngularLayout,
    sigma2: f64,
    n: usize,
) -> VarianceEstimate {
    let n = n as f64;
    let total: usize = layout.freqs().map(|m| plan.k(m) * layout.ell(m)).sum();
    let kmax = layout.freqs().map(|m| plan.k(m)).max().unwrap_or(0);
    let gamma = layout.dim() as f64 * sigma2;
    VarianceEstimate {
        expected: sigma2 * total as f64 / n,
        bound: kmax as f64 * gamma / n,
    }
}

/// Per-point squared errors: `bias = ‖X − X̂‖²/N`, `variance = ‖X̂ − X̃‖²/N`,
/// `total = ‖X − X̃‖²/N`, with `X̂` the filtered clean data and `X̃` the
/// filtered noisy data.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ErrorReport {
    pub bias: f64,
    pub variance: f64,
    pub total: f64,
}

pub fn error_report(
    clean: &SteerableDataset,
    hat: &SteerableDataset,
    tilde: &SteerableDataset,
) -> Result<ErrorReport> {
    let n = clean.len() as f64;
    if n == 0.0 {
        return Err(Error::Empty("no points".into()));
    }
    Ok(ErrorReport {
        bias: clean.frobenius_dist_sq(hat)? / n,
        variance: hat.frobenius_dist_sq(tilde)? / n,
        total: clean.frobenius_dist_sq(tilde)? / n,
    })
}
