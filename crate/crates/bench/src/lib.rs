//! Fixtures shared by the pipeline benchmarks.

use sgl_core::dataset::{add_noise, embed_orthogonal, gen_sphere};
use sgl_core::{NoiseSpec, SteerableDataset};

/// Sphere samples embedded in `dim` coordinates with white noise of total
/// magnitude `gamma`.
pub fn noisy_sphere(n: usize, dim: usize, gamma: f64, seed: u64) -> SteerableDataset {
    let clean = embed_orthogonal(&gen_sphere(n, seed), dim, seed + 1).expect("dim >= 2");
    add_noise(
        &clean,
        &NoiseSpec::from_gamma(gamma, dim, seed + 2).expect("gamma >= 0"),
    )
    .expect("valid noise")
}
