mod commands;
mod manifest;

use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};

use sgl_core::kernel::{KernelConfig, DEFAULT_ANGLES};
use sgl_core::ErrorKind;

#[derive(Debug, Parser, Serialize, Deserialize)]
#[command(name = "sgl", version, about = "Steerable graph Laplacian toolkit")]
pub struct Cli {
    /// Worker threads for the inner parallel loops.
    #[arg(long, global = true, env = "SGL_THREADS")]
    pub threads: Option<usize>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand, Serialize, Deserialize)]
pub enum Command {
    /// Generate a dataset.
    #[command(subcommand)]
    Gen(GenKind),
    /// Fourier blocks and steerable manifold harmonics of a dataset.
    Harmonics(HarmonicsArgs),
    /// Rotation-equivariant low-pass filtering.
    Filter(FilterArgs),
    /// Error against epsilon for the steerable and standard estimators.
    BenchConvergence(ConvergenceArgs),
    /// Debiased estimator under high-dimensional noise.
    BenchNoise(NoiseArgs),
    /// Held-out log-likelihood selection of epsilon and lambda_c.
    Xval(XvalArgs),
    /// Re-run the command recorded in a manifest.
    Rerun { manifest: std::path::PathBuf },
}

#[derive(Debug, Subcommand, Serialize, Deserialize)]
pub enum GenKind {
    /// Uniform points on the unit sphere.
    Sphere(SphereArgs),
    /// Images on a polar grid, converted to steerable coefficients.
    Polar(PolarArgs),
}

#[derive(Debug, Args, Serialize, Deserialize)]
pub struct SphereArgs {
    #[arg(long)]
    pub n: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Embed into this ambient dimension with a random per-m isometry.
    #[arg(long)]
    pub embed_dim: Option<usize>,
    /// Add complex white noise with this per-coordinate variance.
    #[arg(long)]
    pub noise_sigma2: Option<f64>,
    /// Also write the noise-free (embedded) dataset here.
    #[arg(long)]
    pub clean_output: Option<std::path::PathBuf>,
    /// Also write a coefficient CSV here.
    #[arg(long)]
    pub csv: Option<std::path::PathBuf>,
    #[arg(long)]
    pub output: std::path::PathBuf,
}

#[derive(Debug, Args, Serialize, Deserialize)]
pub struct PolarArgs {
    /// Ingest samples from a CSV with header `image,ring,angle,re,im`
    /// instead of generating random band-limited images.
    #[arg(long)]
    pub samples: Option<std::path::PathBuf>,
    #[arg(long, default_value_t = 16)]
    pub n: usize,
    #[arg(long, default_value_t = 4)]
    pub rings: usize,
    #[arg(long, default_value_t = 33)]
    pub angles: usize,
    /// Largest angular index kept.
    #[arg(long, default_value_t = 8)]
    pub max_freq: usize,
    /// Generate real-valued images and flag the dataset as real.
    #[arg(long)]
    pub real: bool,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub output: std::path::PathBuf,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct KernelArgs {
    #[arg(long)]
    pub epsilon: f64,
    #[arg(long = "K", default_value_t = DEFAULT_ANGLES)]
    pub k: usize,
    /// Fourier blocks to compute on each side of m = 0 (default: layout M).
    #[arg(long)]
    pub max_freq: Option<usize>,
    #[arg(long, overrides_with = "no_debias")]
    pub debias: bool,
    #[arg(long, overrides_with = "debias")]
    pub no_debias: bool,
    #[arg(long)]
    pub density_normalize: bool,
    #[arg(long)]
    pub sparsify: Option<f64>,
}

impl KernelArgs {
    pub fn config(&self) -> KernelConfig {
        let mut c = KernelConfig::new(self.epsilon)
            .with_angles(self.k)
            .with_debias(self.debias && !self.no_debias)
            .with_density_normalize(self.density_normalize);
        c.max_freq = self.max_freq;
        c.sparsify_threshold = self.sparsify;
        c
    }
}

#[derive(Debug, Args, Serialize, Deserialize)]
pub struct HarmonicsArgs {
    #[arg(long)]
    pub input: std::path::PathBuf,
    #[command(flatten)]
    pub kernel: KernelArgs,
    /// Decompose D − Ŵ instead of I − D⁻¹Ŵ.
    #[arg(long)]
    pub unnormalized: bool,
    /// Spectrum CSV (`m,k,lambda`).
    #[arg(long)]
    pub output: std::path::PathBuf,
    /// Also write the full basis (SGB1).
    #[arg(long)]
    pub basis_out: Option<std::path::PathBuf>,
    /// Also write the Fourier blocks (SGA1).
    #[arg(long)]
    pub affinity_out: Option<std::path::PathBuf>,
}

#[derive(Debug, Args, Serialize, Deserialize)]
pub struct FilterArgs {
    #[arg(long)]
    pub input: std::path::PathBuf,
    /// Precomputed basis (SGB1); otherwise one is built from the kernel flags.
    #[arg(long, conflicts_with = "reference")]
    pub basis: Option<std::path::PathBuf>,
    /// Build the basis from this dataset instead of the input.
    #[arg(long)]
    pub reference: Option<std::path::PathBuf>,
    #[arg(long)]
    pub lambda_c: f64,
    #[arg(long)]
    pub epsilon: Option<f64>,
    #[arg(long = "K", default_value_t = DEFAULT_ANGLES)]
    pub k: usize,
    #[arg(long)]
    pub max_freq: Option<usize>,
    #[arg(long, overrides_with = "no_debias")]
    pub debias: bool,
    #[arg(long, overrides_with = "debias")]
    pub no_debias: bool,
    #[arg(long)]
    pub density_normalize: bool,
    #[arg(long)]
    pub sparsify: Option<f64>,
    /// Per-m diagnostics CSV.
    #[arg(long)]
    pub diagnostics: Option<std::path::PathBuf>,
    /// Known clean dataset; prints per-point MSE of input and output.
    #[arg(long)]
    pub truth: Option<std::path::PathBuf>,
    #[arg(long)]
    pub output: std::path::PathBuf,
}

#[derive(Debug, Args, Serialize, Deserialize)]
pub struct ConvergenceArgs {
    #[arg(long, default_value_t = 2000)]
    pub n: usize,
    #[arg(long = "K", default_value_t = DEFAULT_ANGLES)]
    pub k: usize,
    /// log2 of the smallest epsilon.
    #[arg(long, default_value_t = -4.0, allow_hyphen_values = true)]
    pub log2_eps_min: f64,
    #[arg(long, default_value_t = 2.0, allow_hyphen_values = true)]
    pub log2_eps_max: f64,
    #[arg(long, default_value_t = 0.25)]
    pub log2_eps_step: f64,
    #[arg(long, default_value_t = 20)]
    pub trials: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub output: std::path::PathBuf,
}

#[derive(Debug, Args, Serialize, Deserialize)]
pub struct NoiseArgs {
    #[arg(long, default_value_t = 2000)]
    pub n: usize,
    #[arg(long, default_value_t = 0.1)]
    pub gamma: f64,
    /// Ambient dimensions, comma separated.
    #[arg(long, value_delimiter = ',', default_value = "10,30,100,300,1000")]
    pub dims: Vec<usize>,
    #[arg(long, default_value_t = 0.5946035575013605)]
    pub epsilon: f64,
    #[arg(long = "K", default_value_t = DEFAULT_ANGLES)]
    pub k: usize,
    #[arg(long, default_value_t = 10)]
    pub trials: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub output: std::path::PathBuf,
}

#[derive(Debug, Args, Serialize, Deserialize)]
pub struct XvalArgs {
    #[arg(long)]
    pub input: std::path::PathBuf,
    #[arg(long)]
    pub sigma2: f64,
    /// Candidate epsilons; default is a 2^{-2..2} sweep around the rule of thumb.
    #[arg(long, value_delimiter = ',')]
    pub eps_grid: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',', default_value = "0.01,0.03,0.1,0.3,1,3")]
    pub lambda_grid: Vec<f64>,
    #[arg(long = "K", default_value_t = DEFAULT_ANGLES)]
    pub k: usize,
    #[arg(long, default_value_t = 0.8)]
    pub split_fraction: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub output: std::path::PathBuf,
}

fn exit_code(kind: ErrorKind) -> u8 {
    match kind {
        ErrorKind::Config => 2,
        ErrorKind::Data => 3,
        ErrorKind::Numerical => 4,
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let argv: Vec<String> = std::env::args().collect();
    let cli = Cli::parse_from(&argv);
    match commands::run(cli, argv) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(e.kind()))
        }
    }
}
