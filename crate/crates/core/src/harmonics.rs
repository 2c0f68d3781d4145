//! Steerable manifold harmonics.
//!
//! Block `m` of the normalised operator is `S̃_m = I − D⁻¹ Ŵ^(m)`, similar to
//! the Hermitian `S'_m = I − D^{−1/2} Ŵ^(m) D^{−1/2}`. Eigenvectors of `S'_m`
//! scaled by `D^{−1/2}` are eigenvectors of `S̃_m` and are `D`-orthonormal.
//! The unnormalised block is `S_m = D − Ŵ^(m)`.
//!
//! Eigenpairs for `−m` are the conjugates of those for `m`; only `m ≥ 0` is
//! solved.

use std::borrow::Cow;
use std::cmp::Ordering;

use faer::{Mat, Side};

use crate::error::{Error, Result};
use crate::kernel::{AffinityGrid, FourierAffinity};
use crate::C64;

#[derive(Debug, Clone)]
pub struct HarmonicBasis {
    normalized: bool,
    degrees: Vec<f64>,
    eigenvalues: Vec<Vec<f64>>,
    vectors: Vec<Mat<C64>>,
}

impl HarmonicBasis {
    pub fn from_parts(
        normalized: bool,
        degrees: Vec<f64>,
        eigenvalues: Vec<Vec<f64>>,
        vectors: Vec<Mat<C64>>,
    ) -> Result<Self> {
        let n = degrees.len();
        if eigenvalues.is_empty() || eigenvalues.len() != vectors.len() {
            return Err(Error::Shape(
                "need one eigenvalue list per vector block".into(),
            ));
        }
        for (l, v) in eigenvalues.iter().zip(&vectors) {
            if l.len() != v.ncols() || v.nrows() != n {
                return Err(Error::Shape("eigenvector block does not match N".into()));
            }
        }
        Ok(Self {
            normalized,
            degrees,
            eigenvalues,
            vectors,
        })
    }

    pub fn is_normalized(&self) -> bool {
        self.normalized
    }

    pub fn n(&self) -> usize {
        self.degrees.len()
    }

    pub fn max_freq(&self) -> usize {
        self.eigenvalues.len() - 1
    }

    pub fn freqs(&self) -> impl DoubleEndedIterator<Item = i32> + Clone {
        let f = self.max_freq() as i32;
        -f..=f
    }

    pub fn degrees(&self) -> &[f64] {
        &self.degrees
    }

    /// Ascending eigenvalues of block `m`; empty outside `−F..=F`.
    pub fn eigenvalues(&self, m: i32) -> &[f64] {
        self.eigenvalues
            .get(m.unsigned_abs() as usize)
            .map_or(&[], |v| v.as_slice())
    }

    /// Eigenvector matrix of block `m` (column `k` ↔ `eigenvalues(m)[k]`).
    pub fn vectors(&self, m: i32) -> Cow<'_, Mat<C64>> {
        let v = &self.vectors[m.unsigned_abs() as usize];
        if m >= 0 {
            Cow::Borrowed(v)
        } else {
            Cow::Owned(Mat::from_fn(v.nrows(), v.ncols(), |i, j| v[(i, j)].conj()))
        }
    }

    /// First `k` columns of block `m`.
    pub fn leading_vectors(&self, m: i32, k: usize) -> Mat<C64> {
        let v = &self.vectors[m.unsigned_abs() as usize];
        let conj = m < 0;
        Mat::from_fn(v.nrows(), k, |i, j| {
            if conj {
                v[(i, j)].conj()
            } else {
                v[(i, j)]
            }
        })
    }

    pub(crate) fn nonneg_vectors(&self) -> &[Mat<C64>] {
        &self.vectors
    }
}

fn hermitian_form(fa: &FourierAffinity, m: usize, normalized: bool) -> Mat<C64> {
    let w = &fa.nonneg_blocks()[m];
    let d = fa.degrees();
    let n = d.len();
    if normalized {
        let s: Vec<f64> = d.iter().map(|v| 1.0 / v.sqrt()).collect();
        Mat::from_fn(n, n, |i, j| {
            let id = if i == j { 1.0 } else { 0.0 };
            C64::new(id, 0.0) - w[(i, j)] * (s[i] * s[j])
        })
    } else {
        Mat::from_fn(n, n, |i, j| {
            let id = if i == j { d[i] } else { 0.0 };
            C64::new(id, 0.0) - w[(i, j)]
        })
    }
}

/// The operators are positive semidefinite, so negative eigenvalues within
/// roundoff of zero are set to exactly zero. This keeps `λ_c = 0` meaning
/// "retain nothing". Larger negatives are left visible.
fn snap_roundoff(vals: &mut [f64]) {
    let top = vals.iter().fold(1.0f64, |a, v| a.max(v.abs()));
    let tol = 8.0 * vals.len() as f64 * f64::EPSILON * top;
    for v in vals.iter_mut().filter(|v| **v < 0.0 && **v > -tol) {
        *v = 0.0;
    }
}

fn sorted_order(vals: &[f64]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..vals.len()).collect();
    idx.sort_by(|&a, &b| vals[a].partial_cmp(&vals[b]).unwrap_or(Ordering::Equal));
    idx
}

/// Full eigen-decomposition of every block.
pub fn decompose(fa: &FourierAffinity, normalized: bool) -> Result<HarmonicBasis> {
    let d = fa.degrees();
    let scale: Vec<f64> = d.iter().map(|v| 1.0 / v.sqrt()).collect();
    let mut eigenvalues = Vec::with_capacity(fa.max_freq() + 1);
    let mut vectors = Vec::with_capacity(fa.max_freq() + 1);
    for m in 0..=fa.max_freq() {
        let h = hermitian_form(fa, m, normalized);
        let eig = h
            .self_adjoint_eigen(Side::Lower)
            .map_err(|_| Error::EigenSolver { m: m as i32 })?;
        let s = eig.S().column_vector();
        let mut raw: Vec<f64> = (0..s.nrows()).map(|k| s[k].re).collect();
        if raw.iter().any(|v| !v.is_finite()) {
            return Err(Error::EigenSolver { m: m as i32 });
        }
        snap_roundoff(&mut raw);
        let order = sorted_order(&raw);
        let u = eig.U();
        let n = u.nrows();
        let v = Mat::from_fn(n, n, |i, k| {
            let x = u[(i, order[k])];
            if normalized {
                x * scale[i]
            } else {
                x
            }
        });
        eigenvalues.push(order.iter().map(|&k| raw[k]).collect());
        vectors.push(v);
    }
    HarmonicBasis::from_parts(normalized, d.to_vec(), eigenvalues, vectors)
}

/// Eigenvalues only, per `m = 0..=F`, ascending.
pub fn block_eigenvalues(fa: &FourierAffinity, normalized: bool) -> Result<Vec<Vec<f64>>> {
    (0..=fa.max_freq())
        .map(|m| {
            let mut vals = hermitian_form(fa, m, normalized)
                .self_adjoint_eigenvalues(Side::Lower)
                .map_err(|_| Error::EigenSolver { m: m as i32 })?;
            if vals.iter().any(|v| !v.is_finite()) {
                return Err(Error::EigenSolver { m: m as i32 });
            }
            snap_roundoff(&mut vals);
            vals.sort_by(|a, b| a.partial_cmp(b).unwrap_or(Ordering::Equal));
            Ok(vals)
        })
        .collect()
}

/// Row of the flattened spectrum; `k` is 1-based within block `m`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectrumEntry {
    pub m: i32,
    pub k: usize,
    pub lambda: f64,
}

fn flatten(per_m: &[Vec<f64>]) -> Vec<SpectrumEntry> {
    let f = per_m.len() as i32 - 1;
    let mut out = Vec::new();
    for m in -f..=f {
        for (k, &lambda) in per_m[m.unsigned_abs() as usize].iter().enumerate() {
            out.push(SpectrumEntry {
                m,
                k: k + 1,
                lambda,
            });
        }
    }
    out.sort_by(|a, b| {
        a.lambda
            .partial_cmp(&b.lambda)
            .unwrap_or(Ordering::Equal)
            .then(a.m.abs().cmp(&b.m.abs()))
            .then(a.m.cmp(&b.m))
            .then(a.k.cmp(&b.k))
    });
    out
}

/// All `(m, k, λ)` sorted by `λ`, ties by `(|m|, m, k)`.
pub fn eigenvalue_spectrum(basis: &HarmonicBasis) -> Vec<SpectrumEntry> {
    flatten(&basis.eigenvalues)
}

/// Same as [`eigenvalue_spectrum`] without computing eigenvectors.
pub fn spectrum(fa: &FourierAffinity, normalized: bool) -> Result<Vec<SpectrumEntry>> {
    Ok(flatten(&block_eigenvalues(fa, normalized)?))
}

/// Retained counts `k_m = #{k : λ_{m,k} < λ_c}` for `m = −F..=F`.
#[derive(Debug, Clone, PartialEq)]
pub struct TruncationPlan {
    pub lambda_c: f64,
    counts: Vec<usize>,
    pub m_eff: Option<usize>,
}

impl TruncationPlan {
    /// `counts[m + F]` for `m = −F..=F`.
    pub fn new(lambda_c: f64, counts: Vec<usize>) -> Result<Self> {
        if counts.len().is_multiple_of(2) {
            return Err(Error::Shape("need 2F+1 counts".into()));
        }
        let f = counts.len() / 2;
        let m_eff = (0..=f)
            .rev()
            .find(|&m| counts[f + m] > 0 || counts[f - m] > 0);
        Ok(Self {
            lambda_c,
            counts,
            m_eff,
        })
    }

    pub fn max_freq(&self) -> usize {
        self.counts.len() / 2
    }

    /// `k_m`; zero outside the basis range.
    pub fn k(&self, m: i32) -> usize {
        let f = self.max_freq() as i32;
        if m.abs() > f {
            0
        } else {
            self.counts[(m + f) as usize]
        }
    }

    pub fn counts(&self) -> &[usize] {
        &self.counts
    }
}

pub fn truncate(basis: &HarmonicBasis, lambda_c: f64) -> TruncationPlan {
    let counts = basis
        .freqs()
        .map(|m| basis.eigenvalues(m).partition_point(|&l| l < lambda_c))
        .collect();
    TruncationPlan::new(lambda_c, counts).expect("odd count")
}

/// Spectral projector onto the first `k` eigenvectors of block `m`:
/// `Ṽ_k Ṽ_k* diag(D)` for the normalised basis, `V_k V_k*` otherwise.
pub fn projector(basis: &HarmonicBasis, m: i32, k: usize) -> Mat<C64> {
    let v = basis.leading_vectors(m, k);
    let mut p = &v * v.adjoint();
    if basis.is_normalized() {
        let d = basis.degrees();
        for j in 0..p.ncols() {
            for i in 0..p.nrows() {
                p[(i, j)] *= d[j];
            }
        }
    }
    p
}

/// Largest pointwise deviation `|(LΦ)(i, θ_k) − λ Φ(i, θ_k)|` for
/// `Φ(i, θ) = v_i e^{imθ}`, applying the operator on the angle grid.
pub fn verify_eigenpair(
    grid: &AffinityGrid,
    m: i32,
    v: &[C64],
    lambda: f64,
    normalized: bool,
) -> Result<f64> {
    let phi = crate::apply::GammaFunction::eigenfunction(v, m, grid.n_angles());
    let out = if normalized {
        crate::apply::apply_normalized(grid, &phi)?
    } else {
        crate::apply::apply_unnormalized(grid, &phi)?
    };
    Ok(out
        .values()
        .iter()
        .zip(phi.values())
        .map(|(a, b)| (a - b * lambda).norm())
        .fold(0.0, f64::max))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{gen_sphere, AngularLayout, SteerableDataset};
    use crate::kernel::{fourier_blocks, KernelConfig};

    #[test]
    fn single_point_zero_eigenvalue() {
        let layout = AngularLayout::new(vec![0, 1, 0]).unwrap();
        let ds = SteerableDataset::new(layout, 1, vec![C64::new(0.4, 0.0)]).unwrap();
        let fa = fourier_blocks(&ds, &KernelConfig::new(1.0).with_angles(8)).unwrap();
        let b = decompose(&fa, true).unwrap();
        assert!(b.eigenvalues(0)[0].abs() < 1e-14);
        let sp = eigenvalue_spectrum(&b);
        assert_eq!((sp[0].m, sp[0].k), (0, 1));
    }

    #[test]
    fn constant_vector_in_null_space() {
        let ds = gen_sphere(30, 2);
        let fa = fourier_blocks(
            &ds,
            &KernelConfig::new(0.5).with_angles(32).with_max_freq(2),
        )
        .unwrap();
        let b = decompose(&fa, true).unwrap();
        assert!(b.eigenvalues(0)[0].abs() < 1e-10);
        let v0 = b.vectors(0);
        let c = v0[(0, 0)];
        for i in 0..30 {
            assert!((v0[(i, 0)] - c).norm() < 1e-8);
        }
    }

    #[test]
    fn truncation_boundary_is_strict() {
        let basis = HarmonicBasis::from_parts(
            true,
            vec![1.0; 3],
            vec![vec![0.0, 0.1, 0.5]],
            vec![Mat::zeros(3, 3)],
        )
        .unwrap();
        assert_eq!(truncate(&basis, 0.5).k(0), 2);
        assert_eq!(truncate(&basis, 0.0).k(0), 0);
        assert_eq!(truncate(&basis, 9.0).k(0), 3);
        assert_eq!(truncate(&basis, 0.0).m_eff, None);
    }

    #[test]
    fn negative_blocks_are_conjugates() {
        let ds = gen_sphere(12, 9);
        let fa = fourier_blocks(&ds, &KernelConfig::new(0.7).with_angles(16)).unwrap();
        let b = decompose(&fa, true).unwrap();
        assert_eq!(b.eigenvalues(-1), b.eigenvalues(1));
        let (p, q) = (b.vectors(1), b.vectors(-1));
        assert!((p[(3, 2)].conj() - q[(3, 2)]).norm() == 0.0);
    }

    #[test]
    fn spectrum_ties_break_on_abs_m() {
        let basis = HarmonicBasis::from_parts(
            true,
            vec![1.0],
            vec![vec![0.5], vec![0.5]],
            vec![Mat::zeros(1, 1), Mat::zeros(1, 1)],
        )
        .unwrap();
        let sp = eigenvalue_spectrum(&basis);
        let ms: Vec<i32> = sp.iter().map(|e| e.m).collect();
        assert_eq!(ms, vec![0, -1, 1]);
    }
}
