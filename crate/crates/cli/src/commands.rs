use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::Parser;
use serde_json::json;

use sgl_core::apply::{convergence_experiment, log2_grid, noise_robustness_experiment};
use sgl_core::dataset::{
    add_noise, embed_orthogonal, from_polar_grid, from_polar_grid_real, gen_sphere,
    random_polar_images, PolarGrid,
};
use sgl_core::filter::filter_dataset;
use sgl_core::harmonics::{decompose, eigenvalue_spectrum, spectrum};
use sgl_core::io::{
    export_csv, load_basis, load_dataset, save_affinity, save_basis, save_dataset,
    write_spectrum_csv,
};
use sgl_core::kernel::{fourier_blocks, KernelConfig};
use sgl_core::xval::{eps_rule_of_thumb, grid_search, XvalConfig};
use sgl_core::{Error, NoiseSpec, Result, C64};

use crate::manifest::RunManifest;
use crate::{
    Cli, Command, ConvergenceArgs, FilterArgs, GenKind, HarmonicsArgs, NoiseArgs, PolarArgs,
    SphereArgs, XvalArgs,
};

/// What a command touched, for the manifest.
struct Outcome {
    primary: PathBuf,
    seeds: Vec<u64>,
    inputs: Vec<PathBuf>,
    outputs: Vec<PathBuf>,
    result: Option<serde_json::Value>,
}

fn csv_err(e: csv::Error) -> Error {
    Error::Csv(e)
}

pub fn run(cli: Cli, argv: Vec<String>) -> Result<()> {
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(Error::Config("--threads must be at least 1".into()));
        }
        // Fails only if a pool already exists (e.g. on rerun); the old one stays.
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global();
    }
    if let Command::Rerun { manifest } = &cli.command {
        let m = RunManifest::read(manifest)?;
        if m.command == "rerun" {
            return Err(Error::Config("manifest records a rerun".into()));
        }
        let again = Cli::try_parse_from(&m.argv).map_err(|e| Error::Config(e.to_string()))?;
        return run(again, m.argv);
    }
    let start = Instant::now();
    let config = serde_json::to_value(&cli).map_err(|e| Error::Format(e.to_string()))?;
    let (name, out) = match &cli.command {
        Command::Gen(GenKind::Sphere(a)) => ("gen sphere", gen_sphere_cmd(a)?),
        Command::Gen(GenKind::Polar(a)) => ("gen polar", gen_polar_cmd(a)?),
        Command::Harmonics(a) => ("harmonics", harmonics_cmd(a)?),
        Command::Filter(a) => ("filter", filter_cmd(a)?),
        Command::BenchConvergence(a) => ("bench-convergence", convergence_cmd(a)?),
        Command::BenchNoise(a) => ("bench-noise", noise_cmd(a)?),
        Command::Xval(a) => ("xval", xval_cmd(a)?),
        Command::Rerun { .. } => unreachable!("handled above"),
    };
    RunManifest {
        command: name.into(),
        argv,
        config,
        seeds: out.seeds,
        inputs: out.inputs,
        outputs: out.outputs,
        threads: cli.threads,
        wall_clock_seconds: start.elapsed().as_secs_f64(),
        version: env!("CARGO_PKG_VERSION").into(),
        result: out.result,
    }
    .write(&out.primary)?;
    Ok(())
}

fn gen_sphere_cmd(a: &SphereArgs) -> Result<Outcome> {
    if a.n == 0 {
        return Err(Error::Config("--n must be at least 1".into()));
    }
    let mut ds = gen_sphere(a.n, a.seed);
    let mut seeds = vec![a.seed];
    if let Some(d) = a.embed_dim {
        seeds.push(a.seed.wrapping_add(1));
        ds = embed_orthogonal(&ds, d, a.seed.wrapping_add(1))?;
    }
    let mut outputs = vec![a.output.clone()];
    if let Some(p) = &a.clean_output {
        save_dataset(p, &ds)?;
        outputs.push(p.clone());
    }
    if let Some(s2) = a.noise_sigma2 {
        seeds.push(a.seed.wrapping_add(2));
        ds = add_noise(&ds, &NoiseSpec::new(s2, a.seed.wrapping_add(2))?)?;
    }
    save_dataset(&a.output, &ds)?;
    if let Some(p) = &a.csv {
        export_csv(p, &ds)?;
        outputs.push(p.clone());
    }
    Ok(Outcome {
        primary: a.output.clone(),
        seeds,
        inputs: vec![],
        outputs,
        result: Some(json!({ "n": ds.len(), "dim": ds.dim() })),
    })
}

fn read_polar_samples(path: &Path) -> Result<(Vec<C64>, PolarGrid)> {
    let mut rd = csv::Reader::from_path(path).map_err(csv_err)?;
    let mut rows = Vec::new();
    for rec in rd.records() {
        let rec = rec.map_err(csv_err)?;
        let get = |k: usize| -> Result<&str> {
            rec.get(k)
                .ok_or_else(|| Error::Format("short CSV row".into()))
        };
        let bad = |e: &dyn std::fmt::Display| Error::Format(format!("bad sample value: {e}"));
        let img: usize = get(0)?.parse().map_err(|e| bad(&e))?;
        let ring: usize = get(1)?.parse().map_err(|e| bad(&e))?;
        let ang: usize = get(2)?.parse().map_err(|e| bad(&e))?;
        let re: f64 = get(3)?.parse().map_err(|e| bad(&e))?;
        let im: f64 = get(4)?.parse().map_err(|e| bad(&e))?;
        rows.push((img, ring, ang, C64::new(re, im)));
    }
    let (n, rings, angles) = rows.iter().fold((0, 0, 0), |(a, b, c), r| {
        (a.max(r.0 + 1), b.max(r.1 + 1), c.max(r.2 + 1))
    });
    let grid = PolarGrid {
        n_rings: rings,
        n_angles: angles,
    };
    if rows.len() != n * grid.image_len() {
        return Err(Error::Format(format!(
            "{} samples do not fill {n} images of {rings} x {angles}",
            rows.len()
        )));
    }
    let mut samples = vec![C64::new(0.0, 0.0); rows.len()];
    for (img, ring, ang, v) in rows {
        samples[img * grid.image_len() + ring * angles + ang] = v;
    }
    Ok((samples, grid))
}

fn gen_polar_cmd(a: &PolarArgs) -> Result<Outcome> {
    let (samples, grid, inputs) = match &a.samples {
        Some(p) => {
            let (s, g) = read_polar_samples(p)?;
            (s, g, vec![p.clone()])
        }
        None => {
            let grid = PolarGrid {
                n_rings: a.rings,
                n_angles: a.angles,
            };
            (
                random_polar_images(a.n, grid, a.max_freq, a.real, a.seed)?,
                grid,
                vec![],
            )
        }
    };
    let ds = if a.real {
        if samples.iter().any(|v| v.im != 0.0) {
            return Err(Error::Format(
                "--real given but samples have imaginary parts".into(),
            ));
        }
        let re: Vec<f64> = samples.iter().map(|v| v.re).collect();
        from_polar_grid_real(&re, grid, a.max_freq)?
    } else {
        from_polar_grid(&samples, grid, a.max_freq)?
    };
    save_dataset(&a.output, &ds)?;
    Ok(Outcome {
        primary: a.output.clone(),
        seeds: if a.samples.is_some() {
            vec![]
        } else {
            vec![a.seed]
        },
        inputs,
        outputs: vec![a.output.clone()],
        result: Some(json!({ "n": ds.len(), "dim": ds.dim(), "max_freq": a.max_freq })),
    })
}

fn harmonics_cmd(a: &HarmonicsArgs) -> Result<Outcome> {
    let ds = load_dataset(&a.input)?;
    let cfg = a.kernel.config();
    let fa = fourier_blocks(&ds, &cfg)?;
    let mut outputs = vec![a.output.clone()];
    if let Some(p) = &a.affinity_out {
        save_affinity(p, &fa)?;
        outputs.push(p.clone());
    }
    let normalized = !a.unnormalized;
    let spec = match &a.basis_out {
        Some(p) => {
            let basis = decompose(&fa, normalized)?;
            save_basis(p, &basis)?;
            outputs.push(p.clone());
            eigenvalue_spectrum(&basis)
        }
        None => spectrum(&fa, normalized)?,
    };
    write_spectrum_csv(&a.output, &spec)?;
    let head: Vec<f64> = spec.iter().take(16).map(|e| e.lambda).collect();
    Ok(Outcome {
        primary: a.output.clone(),
        seeds: vec![],
        inputs: vec![a.input.clone()],
        outputs,
        result: Some(json!({ "leading_eigenvalues": head })),
    })
}

fn filter_cmd(a: &FilterArgs) -> Result<Outcome> {
    let ds = load_dataset(&a.input)?;
    let mut inputs = vec![a.input.clone()];
    let basis = match (&a.basis, &a.reference) {
        (Some(p), _) => {
            inputs.push(p.clone());
            load_basis(p)?
        }
        (None, reference) => {
            let eps = a.epsilon.ok_or_else(|| {
                Error::Config("--epsilon is required unless --basis is given".into())
            })?;
            let src = match reference {
                Some(p) => {
                    inputs.push(p.clone());
                    load_dataset(p)?
                }
                None => ds.clone(),
            };
            let mut cfg = KernelConfig::new(eps)
                .with_angles(a.k)
                .with_debias(a.debias && !a.no_debias)
                .with_density_normalize(a.density_normalize);
            cfg.max_freq = a.max_freq;
            cfg.sparsify_threshold = a.sparsify;
            decompose(&fourier_blocks(&src, &cfg)?, true)?
        }
    };
    let fr = filter_dataset(&ds, &basis, a.lambda_c)?;
    save_dataset(&a.output, &fr.filtered)?;
    let mut outputs = vec![a.output.clone()];
    if let Some(p) = &a.diagnostics {
        let mut w = csv::Writer::from_path(p).map_err(csv_err)?;
        w.write_record(["m", "k", "ell", "rank", "residual", "degenerate_cutoff"])
            .map_err(csv_err)?;
        for d in &fr.diagnostics {
            w.write_record(&[
                d.m.to_string(),
                d.k.to_string(),
                d.ell.to_string(),
                d.rank.to_string(),
                d.residual.to_string(),
                d.degenerate_cutoff.to_string(),
            ])
            .map_err(csv_err)?;
        }
        w.flush()?;
        outputs.push(p.clone());
    }
    let mut result = json!({
        "k": fr.plan.counts(),
        "m_eff": fr.plan.m_eff,
        "degenerate_cutoff": fr.diagnostics.iter().any(|d| d.degenerate_cutoff),
    });
    if let Some(p) = &a.truth {
        let truth = load_dataset(p)?;
        inputs.push(p.clone());
        let n = ds.len() as f64;
        let mse_in = ds.frobenius_dist_sq(&truth)? / n;
        let mse_out = fr.filtered.frobenius_dist_sq(&truth)? / n;
        println!("mse_input,mse_output\n{mse_in},{mse_out}");
        result["mse_input"] = json!(mse_in);
        result["mse_output"] = json!(mse_out);
    }
    Ok(Outcome {
        primary: a.output.clone(),
        seeds: vec![],
        inputs,
        outputs,
        result: Some(result),
    })
}

fn convergence_cmd(a: &ConvergenceArgs) -> Result<Outcome> {
    if a.log2_eps_step.is_nan() || a.log2_eps_step <= 0.0 || a.log2_eps_max <= a.log2_eps_min {
        return Err(Error::Config(
            "need log2-eps-min < log2-eps-max and a positive step".into(),
        ));
    }
    let grid = log2_grid(a.log2_eps_min, a.log2_eps_max, a.log2_eps_step);
    let rep = convergence_experiment(a.n, a.k, &grid, a.trials, a.seed)?;
    let mut w = csv::Writer::from_path(&a.output).map_err(csv_err)?;
    w.write_record(["epsilon", "err_steerable", "err_standard"])
        .map_err(csv_err)?;
    for i in 0..grid.len() {
        w.write_record(&[
            rep.epsilons[i].to_string(),
            rep.errors_steerable[i].to_string(),
            rep.errors_standard[i].to_string(),
        ])
        .map_err(csv_err)?;
    }
    w.flush()?;
    println!(
        "slope_steerable={:.4} slope_standard={:.4} region_split={}",
        rep.slope_steerable, rep.slope_standard, rep.region_split
    );
    Ok(Outcome {
        primary: a.output.clone(),
        seeds: vec![a.seed],
        inputs: vec![],
        outputs: vec![a.output.clone()],
        result: Some(json!({
            "slope_steerable": rep.slope_steerable,
            "slope_standard": rep.slope_standard,
            "region_split": rep.region_split,
        })),
    })
}

fn noise_cmd(a: &NoiseArgs) -> Result<Outcome> {
    let cfg = KernelConfig::new(a.epsilon).with_angles(a.k);
    let rows = noise_robustness_experiment(a.n, a.gamma, &a.dims, &cfg, a.trials, a.seed)?;
    let mut w = csv::Writer::from_path(&a.output).map_err(csv_err)?;
    w.write_record(["D", "sigma2", "err_noisy", "err_clean"])
        .map_err(csv_err)?;
    for r in &rows {
        w.write_record(&[
            r.dim.to_string(),
            r.sigma2.to_string(),
            r.err_noisy.to_string(),
            r.err_clean.to_string(),
        ])
        .map_err(csv_err)?;
    }
    w.flush()?;
    Ok(Outcome {
        primary: a.output.clone(),
        seeds: vec![a.seed],
        inputs: vec![],
        outputs: vec![a.output.clone()],
        result: None,
    })
}

fn xval_cmd(a: &XvalArgs) -> Result<Outcome> {
    let ds = load_dataset(&a.input)?;
    let eps_grid = match &a.eps_grid {
        Some(g) => g.clone(),
        None => {
            let c = eps_rule_of_thumb(ds.dim(), a.sigma2);
            (-2..=2).map(|p| c * 2f64.powi(p)).collect()
        }
    };
    let cfg = XvalConfig {
        split_fraction: a.split_fraction,
        n_angles: a.k,
        seed: a.seed,
        ..XvalConfig::new(eps_grid, a.lambda_grid.clone(), a.sigma2)
    };
    let res = grid_search(&ds, &cfg)?;
    let mut w = csv::Writer::from_path(&a.output).map_err(csv_err)?;
    w.write_record(["epsilon", "lambda_c", "J"])
        .map_err(csv_err)?;
    for c in &res.table {
        w.write_record(&[
            c.epsilon.to_string(),
            c.lambda_c.to_string(),
            c.j.to_string(),
        ])
        .map_err(csv_err)?;
    }
    w.flush()?;
    println!(
        "epsilon,lambda_c,J\n{},{},{}",
        res.eps_opt, res.lambda_opt, res.j_opt
    );
    Ok(Outcome {
        primary: a.output.clone(),
        seeds: vec![a.seed],
        inputs: vec![a.input.clone()],
        outputs: vec![a.output.clone()],
        result: Some(json!({ "epsilon": res.eps_opt, "lambda_c": res.lambda_opt, "J": res.j_opt })),
    })
}
