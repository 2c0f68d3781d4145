//! Sphere experiments: error against `ε` for both estimators, and the
//! effect of high-dimensional noise on the debiased estimator.

use std::f64::consts::PI;

use log::warn;
use rand::Rng;
use rayon::prelude::*;

use super::{from_mean, kernel_mean, row_average, sphere_test_function, sphere_test_point};
use crate::dataset::{
    add_noise, embed_orthogonal, gen_sphere_with, rotate_point, sphere_cartesian, NoiseSpec,
    SteerableDataset,
};
use crate::error::{Error, Result};
use crate::kernel::{DistanceFft, KernelConfig};
use crate::rng;

/// `Δ_M f(x₀)` for the sphere test function at the test point.
pub const SPHERE_TRUTH: f64 = -2.0;

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceReport {
    pub epsilons: Vec<f64>,
    pub errors_steerable: Vec<f64>,
    pub errors_standard: Vec<f64>,
    pub slope_steerable: f64,
    pub slope_standard: f64,
    /// The fits use grid points `0..region_split`.
    pub region_split: usize,
}

/// Least-squares slope of `log err` against `log ε` over the first `split` points.
pub fn fit_slope(eps: &[f64], err: &[f64], split: usize) -> f64 {
    let pts: Vec<(f64, f64)> = eps
        .iter()
        .zip(err)
        .take(split)
        .map(|(e, r)| (e.ln(), r.ln()))
        .collect();
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    sxy / sxx
}

fn argmin(v: &[f64]) -> usize {
    v.iter()
        .enumerate()
        .fold(
            (0, f64::INFINITY),
            |acc, (i, &x)| if x < acc.1 { (i, x) } else { acc },
        )
        .0
}

/// One trial: absolute errors of both estimators for every `ε`.
fn convergence_trial(
    n: usize,
    k: usize,
    eps_grid: &[f64],
    seed: u64,
    trial: u64,
) -> Result<(Vec<f64>, Vec<f64>)> {
    let mut rng = rng::stream(seed, trial);
    let ds = gen_sphere_with(n, &mut rng).with_leading_row(&sphere_test_point())?;
    let layout = ds.layout();
    let x0 = ds.row(0);
    let n0 = 1.0;
    let mut eng = DistanceFft::new(layout.max_freq(), k)?;

    let mut sdist = vec![0.0; ds.len() * k];
    let mut svals = Vec::with_capacity(ds.len() * k);
    let mut pdist = Vec::with_capacity(ds.len());
    let mut pvals = Vec::with_capacity(ds.len());
    let p0 = sphere_cartesian(x0);
    for (j, row) in ds.rows().enumerate() {
        eng.distances(x0, n0, row, 1.0, layout, &mut sdist[j * k..(j + 1) * k]);
        for t in 0..k {
            let r = rotate_point(row, layout, 2.0 * PI * t as f64 / k as f64)?;
            svals.push(sphere_test_function(&r));
        }
        let p = sphere_cartesian(row);
        pdist.push((0..3).map(|c| (p[c] - p0[c]).powi(2)).sum::<f64>());
        pvals.push(p[0] + p[2]);
    }
    let f0 = sphere_test_function(x0);
    let mut es = Vec::with_capacity(eps_grid.len());
    let mut ep = Vec::with_capacity(eps_grid.len());
    for &eps in eps_grid {
        // the base point's own weight keeps both denominators positive
        let ms = kernel_mean(&sdist, &svals, eps).expect("self weight");
        let mp = kernel_mean(&pdist, &pvals, eps).expect("self weight");
        es.push((from_mean(ms, f0, eps) - SPHERE_TRUTH).abs());
        ep.push((from_mean(mp, f0, eps) - SPHERE_TRUTH).abs());
    }
    Ok((es, ep))
}

/// Mean absolute error of the steerable and standard estimators of
/// `Δ_M f(x₀)` over fresh uniform sphere samples, with log-log slopes fitted
/// left of the error minimum.
pub fn convergence_experiment(
    n: usize,
    k: usize,
    eps_grid: &[f64],
    trials: usize,
    seed: u64,
) -> Result<ConvergenceReport> {
    if trials == 0 || n == 0 {
        return Err(Error::Config(
            "need at least one trial and one point".into(),
        ));
    }
    if eps_grid.len() < 2 || eps_grid.windows(2).any(|w| !(w[0] < w[1])) || eps_grid[0] <= 0.0 {
        return Err(Error::Config(
            "epsilon grid must be positive, ascending, with 2+ points".into(),
        ));
    }
    let runs: Vec<(Vec<f64>, Vec<f64>)> = (0..trials as u64)
        .into_par_iter()
        .map(|t| convergence_trial(n, k, eps_grid, seed, t))
        .collect::<Result<_>>()?;
    let g = eps_grid.len();
    let mut errors_steerable = vec![0.0; g];
    let mut errors_standard = vec![0.0; g];
    for (s, p) in &runs {
        for i in 0..g {
            errors_steerable[i] += s[i] / trials as f64;
            errors_standard[i] += p[i] / trials as f64;
        }
    }
    let mut region_split = argmin(&errors_steerable).min(argmin(&errors_standard));
    if region_split < 2 {
        warn!("error minimum at grid index {region_split}; fitting the first two points");
        region_split = 2;
    }
    Ok(ConvergenceReport {
        slope_steerable: fit_slope(eps_grid, &errors_steerable, region_split),
        slope_standard: fit_slope(eps_grid, &errors_standard, region_split),
        epsilons: eps_grid.to_vec(),
        errors_steerable,
        errors_standard,
        region_split,
    })
}

/// `2^{lo}, 2^{lo+step}, …, 2^{hi}`.
pub fn log2_grid(lo: f64, hi: f64, step: f64) -> Vec<f64> {
    let count = ((hi - lo) / step).round() as usize + 1;
    (0..count).map(|i| (lo + step * i as f64).exp2()).collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseRow {
    pub dim: usize,
    pub sigma2: f64,
    pub err_noisy: f64,
    pub err_clean: f64,
}

/// Debiased steerable estimate on an orthogonally embedded, noisy sphere
/// (`σ² = γ/𝒟`) against the same estimate on clean data. Weights come from
/// the noisy samples and the clean test point; function values from the
/// clean samples.
pub fn noise_robustness_experiment(
    n: usize,
    gamma: f64,
    dims: &[usize],
    cfg: &KernelConfig,
    trials: usize,
    seed: u64,
) -> Result<Vec<NoiseRow>> {
    if !(gamma >= 0.0 && gamma.is_finite()) {
        return Err(Error::Config(format!("gamma must be >= 0, got {gamma}")));
    }
    if trials == 0 || n == 0 {
        return Err(Error::Config(
            "need at least one trial and one point".into(),
        ));
    }
    let cfg = cfg.clone().with_debias(true);
    let k = cfg.n_angles;
    let per_trial: Vec<Vec<(f64, f64)>> = (0..trials as u64)
        .into_par_iter()
        .map(|t| -> Result<Vec<(f64, f64)>> {
            let mut rng = rng::stream(seed, t);
            let clean: SteerableDataset =
                gen_sphere_with(n, &mut rng).with_leading_row(&sphere_test_point())?;
            let mut vals = Vec::with_capacity(clean.len() * k);
            for row in clean.rows() {
                for s in 0..k {
                    let r = rotate_point(row, clean.layout(), 2.0 * PI * s as f64 / k as f64)?;
                    vals.push(sphere_test_function(&r));
                }
            }
            let f0 = sphere_test_function(clean.row(0));
            let g = |j: usize, s: usize| vals[j * k + s];
            let est_clean = from_mean(row_average(&clean, 0, &cfg, g)?, f0, cfg.epsilon);
            let mut out = Vec::with_capacity(dims.len());
            for &d in dims {
                let embed_seed: u64 = rng.random();
                let noise_seed: u64 = rng.random();
                let embedded = embed_orthogonal(&clean, d, embed_seed)?;
                // The test point stays clean; only the samples are noisy.
                let samples: Vec<usize> = (1..embedded.len()).collect();
                let noisy = add_noise(
                    &embedded.select(&samples),
                    &NoiseSpec::from_gamma(gamma, d, noise_seed)?,
                )?
                .with_leading_row(embedded.row(0))?;
                let est = from_mean(row_average(&noisy, 0, &cfg, g)?, f0, cfg.epsilon);
                out.push(((est - SPHERE_TRUTH).abs(), (est_clean - SPHERE_TRUTH).abs()));
            }
            Ok(out)
        })
        .collect::<Result<_>>()?;
    Ok(dims
        .iter()
        .enumerate()
        .map(|(i, &dim)| {
            let (mut a, mut b) = (0.0, 0.0);
            for run in &per_trial {
                a += run[i].0 / trials as f64;
                b += run[i].1 / trials as f64;
            }
            NoiseRow {
                dim,
                sigma2: gamma / dim as f64,
                err_noisy: a,
                err_clean: b,
            }
        })
        .collect())
}
