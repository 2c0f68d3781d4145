//! Choosing `ε` and `λ_c` by held-out log-likelihood.
//!
//! The noisy points are split in two. The first part is denoised with a
//! candidate `(ε, λ_c)` and the held-out part is scored by
//! `J = Σ_i log[Σ_j (2π/K) Σ_k exp(−‖y_i − x̂_j^{2πk/K}‖² / 2σ²)]`.

use std::f64::consts::PI;

use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::SteerableDataset;
use crate::error::{Error, Result};
use crate::filter::filter_dataset;
use crate::harmonics::decompose;
use crate::kernel::{fourier_blocks, DistanceFft, KernelConfig};
use crate::rng;

/// `√𝒟 · σ²`.
pub fn eps_rule_of_thumb(dim: usize, sigma2: f64) -> f64 {
    (dim as f64).sqrt() * sigma2
}

/// `J` for `heldout` given `denoised`, stabilised by log-sum-exp.
pub fn empirical_log_likelihood(
    heldout: &SteerableDataset,
    denoised: &SteerableDataset,
    sigma2: f64,
    n_angles: usize,
) -> Result<f64> {
    if !(sigma2 > 0.0 && sigma2.is_finite()) {
        return Err(Error::Config(format!(
            "sigma2 must be positive, got {sigma2}"
        )));
    }
    if heldout.is_empty() || denoised.is_empty() {
        return Err(Error::Empty("both sets need at least one point".into()));
    }
    if heldout.layout() != denoised.layout() {
        return Err(Error::Layout("held-out and denoised layouts differ".into()));
    }
    let layout = heldout.layout();
    let k = n_angles;
    let ny = heldout.row_norms_sq();
    let nx = denoised.row_norms_sq();
    let log_h = (2.0 * PI / k as f64).ln();
    let terms: Vec<f64> = (0..heldout.len())
        .into_par_iter()
        .map_init(
            || {
                (
                    DistanceFft::new(layout.max_freq(), k),
                    vec![0.0; k * denoised.len()],
                )
            },
            |(eng, expo), i| -> Result<f64> {
                let eng = eng.as_mut().map_err(|e| Error::Config(e.to_string()))?;
                for j in 0..denoised.len() {
                    let cell = &mut expo[j * k..(j + 1) * k];
                    eng.distances(heldout.row(i), ny[i], denoised.row(j), nx[j], layout, cell);
                }
                let scale = -0.5 / sigma2;
                let top = expo
                    .iter()
                    .fold(f64::NEG_INFINITY, |a, &d| a.max(d * scale));
                let s: f64 = expo.iter().map(|&d| (d * scale - top).exp()).sum();
                Ok(top + s.ln() + log_h)
            },
        )
        .collect::<Result<_>>()?;
    Ok(terms.iter().sum())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct XvalConfig {
    /// Fraction of points denoised; the rest is held out.
    pub split_fraction: f64,
    pub eps_grid: Vec<f64>,
    pub lambda_grid: Vec<f64>,
    pub n_angles: usize,
    pub sigma2: f64,
    pub seed: u64,
}

impl XvalConfig {
    pub fn new(eps_grid: Vec<f64>, lambda_grid: Vec<f64>, sigma2: f64) -> Self {
        Self {
            split_fraction: 0.8,
            eps_grid,
            lambda_grid,
            n_angles: crate::kernel::DEFAULT_ANGLES,
            sigma2,
            seed: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.split_fraction > 0.0 && self.split_fraction < 1.0) {
            return Err(Error::Config(format!(
                "split fraction must be in (0, 1), got {}",
                self.split_fraction
            )));
        }
        if self.eps_grid.is_empty() || self.lambda_grid.is_empty() {
            return Err(Error::Config("candidate grids must be non-empty".into()));
        }
        if !(self.sigma2 > 0.0 && self.sigma2.is_finite()) {
            return Err(Error::Config(format!(
                "sigma2 must be positive, got {}",
                self.sigma2
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct XvalCell {
    pub epsilon: f64,
    pub lambda_c: f64,
    /// `−∞` when the pipeline failed for this cell.
    pub j: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct XvalResult {
    pub eps_opt: f64,
    pub lambda_opt: f64,
    pub j_opt: f64,
    pub table: Vec<XvalCell>,
}

/// Seeded split into (denoise, held-out) index sets.
pub fn split_indices(n: usize, fraction: f64, seed: u64) -> Result<(Vec<usize>, Vec<usize>)> {
    let n_train = ((n as f64) * fraction).round() as usize;
    if n_train == 0 || n_train >= n {
        return Err(Error::Config(format!(
            "split of {n} points at {fraction} leaves an empty side"
        )));
    }
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(&mut rng::stream(seed, 2));
    let held = idx.split_off(n_train);
    Ok((idx, held))
}

/// Evaluate `J` on the full `eps_grid × lambda_grid` table (debiased kernel,
/// no density normalisation) and return the maximiser. Ties keep the first
/// cell in grid order.
pub fn grid_search(noisy: &SteerableDataset, config: &XvalConfig) -> Result<XvalResult> {
    config.validate()?;
    let (train, held) = split_indices(noisy.len(), config.split_fraction, config.seed)?;
    let train = noisy.select(&train);
    let held = noisy.select(&held);
    let rows: Vec<Vec<XvalCell>> = config
        .eps_grid
        .iter()
        .map(|&eps| {
            let kcfg = KernelConfig::new(eps)
                .with_angles(config.n_angles)
                .with_debias(true);
            let basis = fourier_blocks(&train, &kcfg).and_then(|fa| decompose(&fa, true));
            config
                .lambda_grid
                .iter()
                .map(|&lambda_c| {
                    let j = basis
                        .as_ref()
                        .map_err(|e| e.to_string())
                        .and_then(|b| {
                            filter_dataset(&train, b, lambda_c).map_err(|e| e.to_string())
                        })
                        .and_then(|fr| {
                            empirical_log_likelihood(
                                &held,
                                &fr.filtered,
                                config.sigma2,
                                config.n_angles,
                            )
                            .map_err(|e| e.to_string())
                        });
                    let j = match j {
                        Ok(v) if v.is_finite() => v,
                        Ok(_) => f64::NEG_INFINITY,
                        Err(msg) => {
                            log::warn!("xval cell eps={eps} lambda_c={lambda_c} failed: {msg}");
                            f64::NEG_INFINITY
                        }
                    };
                    XvalCell {
                        epsilon: eps,
                        lambda_c,
                        j,
                    }
                })
                .collect()
        })
        .collect();
    let table: Vec<XvalCell> = rows.into_iter().flatten().collect();
    let best = table
        .iter()
        .fold(None::<XvalCell>, |acc, c| match acc {
            Some(a) if a.j >= c.j => Some(a),
            _ => Some(*c),
        })
        .expect("non-empty grid");
    Ok(XvalResult {
        eps_opt: best.epsilon,
        lambda_opt: best.lambda_c,
        j_opt: best.j,
        table,
    })
}
