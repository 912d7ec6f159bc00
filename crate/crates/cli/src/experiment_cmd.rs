//! `experiment`: teacher-student runs with lower/upper bounds, optionally
//! sweeping the labeled fraction. Result JSON and CSV are byte-stable for a
//! fixed config; only the run manifest carries timing.

use clap::Args;
use serde::Serialize;
use std::path::PathBuf;

use robustssl::losses::LossFamily;
use robustssl::pipeline::{run_experiment, write_result_csv, ExperimentConfig, ExperimentResult};
use robustssl::{Error, Result};

use crate::manifest::{digest_of, RunManifest};
use crate::{ensure_out_dir, exit_code_for, EXIT_CONFIG, EXIT_OK};

#[derive(Args)]
pub struct ExperimentArgs {
    /// JSON experiment config (required).
    #[arg(long)]
    config: PathBuf,
    #[arg(long, default_value = "out/experiment")]
    out: PathBuf,
    /// Labeled fractions to sweep, comma-separated; overrides the config's
    /// single labeled_fraction.
    #[arg(long, value_delimiter = ',')]
    p: Vec<f64>,
    /// Override the robust loss family.
    #[arg(long)]
    robust: Option<LossFamily>,
    /// Override the BCE exponent.
    #[arg(long)]
    beta: Option<f64>,
    /// Override the GCE exponent.
    #[arg(long)]
    q: Option<f64>,
    /// Override the master seed.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Serialize)]
struct SweepOutput {
    results: Vec<ExperimentResult>,
}

fn load_config(args: &ExperimentArgs) -> Result<ExperimentConfig> {
    let text = std::fs::read_to_string(&args.config)
        .map_err(|e| Error::Config(format!("cannot read {}: {e}", args.config.display())))?;
    let mut config: ExperimentConfig =
        serde_json::from_str(&text).map_err(|e| Error::Config(format!("{e}")))?;
    if let Some(family) = args.robust {
        config.robust_loss.family = family;
    }
    if let Some(beta) = args.beta {
        config.robust_loss.beta = beta;
    }
    if let Some(q) = args.q {
        config.robust_loss.q_exponent = q;
    }
    if let Some(seed) = args.seed {
        config.master_seed = seed;
    }
    Ok(config)
}

pub fn run(args: ExperimentArgs) -> u8 {
    let base = match load_config(&args) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("experiment: {e}");
            return EXIT_CONFIG;
        }
    };
    let fractions = if args.p.is_empty() {
        vec![base.labeled_fraction]
    } else {
        args.p.clone()
    };
    let mut configs = Vec::new();
    for &p in &fractions {
        let mut cfg = base.clone();
        cfg.labeled_fraction = p;
        if let Err(e) = cfg.validate() {
            eprintln!("experiment: {e}");
            return EXIT_CONFIG;
        }
        configs.push(cfg);
    }
    if let Err(e) = ensure_out_dir(&args.out) {
        eprintln!("experiment: {e}");
        return exit_code_for(&e);
    }
    let digest = match digest_of(&configs) {
        Ok(d) => d,
        Err(e) => {
            eprintln!("experiment: {e}");
            return exit_code_for(&e);
        }
    };
    let start = std::time::Instant::now();
    let mut manifest = RunManifest::new(digest, base.master_seed);
    match execute(&configs, &args.out) {
        Ok(outputs) => {
            for p in &outputs {
                manifest.record_output(p);
            }
            manifest.elapsed_ms = start.elapsed().as_millis();
            let manifest_path = args.out.join("run_manifest.json");
            if let Err(e) = manifest.write(&manifest_path) {
                eprintln!("experiment: {e}");
                return exit_code_for(&e);
            }
            println!(
                "experiment: wrote {} files to {}",
                outputs.len() + 1,
                args.out.display()
            );
            EXIT_OK
        }
        Err(e) => {
            eprintln!("experiment: {e}");
            exit_code_for(&e)
        }
    }
}

fn execute(configs: &[ExperimentConfig], out: &PathBuf) -> Result<Vec<PathBuf>> {
    let mut results = Vec::new();
    for cfg in configs {
        let result = run_experiment(cfg)?;
        println!(
            "p={:.2} lower={:.4} student_ce={:.4} student_robust={:.4} upper={:.4} pseudo_err={:.4}",
            cfg.labeled_fraction,
            result.lower_bound.mean,
            result.student_ce.mean,
            result.student_robust.mean,
            result.upper_bound.mean,
            result.pseudo_error_rate.mean,
        );
        results.push(result);
    }
    let mut outputs = Vec::new();
    let json_path = out.join("result.json");
    std::fs::write(
        &json_path,
        serde_json::to_string_pretty(&SweepOutput { results: results.clone() })? + "\n",
    )?;
    outputs.push(json_path);
    for (i, result) in results.iter().enumerate() {
        let csv_path = if results.len() == 1 {
            out.join("result.csv")
        } else {
            out.join(format!("result_{i}.csv"))
        };
        write_result_csv(result, &csv_path)?;
        outputs.push(csv_path);
    }
    Ok(outputs)
}
