//! `datagen`: sample a Gaussian-mixture dataset from a spec file and write
//! the CSV plus its manifest. Re-running with the same spec and seed
//! reproduces both files byte for byte.

use clap::Args;
use serde::Deserialize;
use std::path::PathBuf;

use robustssl::datagen::{gen_gaussian_mixture, save_dataset, DatasetManifest, MixtureSpec};
use robustssl::{Error, Result};

use crate::manifest::digest_of;
use crate::{ensure_out_dir, exit_code_for, EXIT_CONFIG, EXIT_OK};

#[derive(Args)]
pub struct DatagenArgs {
    /// JSON file with {"spec": <mixture spec>, "seed": <u64>}.
    #[arg(long)]
    config: PathBuf,
    #[arg(long, default_value = "out/datagen")]
    out: PathBuf,
    /// Override the config's seed.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Deserialize)]
struct DatagenConfig {
    spec: MixtureSpec,
    seed: u64,
}

fn execute(args: &DatagenArgs) -> Result<()> {
    let text = std::fs::read_to_string(&args.config)
        .map_err(|e| Error::Config(format!("cannot read {}: {e}", args.config.display())))?;
    let config: DatagenConfig =
        serde_json::from_str(&text).map_err(|e| Error::Config(format!("{e}")))?;
    config.spec.validate().map_err(|e| Error::Config(e.to_string()))?;
    let seed = args.seed.unwrap_or(config.seed);

    ensure_out_dir(&args.out)?;
    let dataset = gen_gaussian_mixture(&config.spec, seed)?;
    let manifest = DatasetManifest {
        n: dataset.len(),
        d: dataset.num_features(),
        num_classes: dataset.num_classes(),
        seed,
        spec_digest: digest_of(&config.spec)?,
    };
    let csv_path = args.out.join("dataset.csv");
    let manifest_path = args.out.join("dataset.manifest.json");
    save_dataset(&dataset, &manifest, &csv_path, &manifest_path)?;
    println!(
        "datagen: {} samples, {} features, {} classes -> {}",
        manifest.n,
        manifest.d,
        manifest.num_classes,
        csv_path.display()
    );
    Ok(())
}

pub fn run(args: DatagenArgs) -> u8 {
    match execute(&args) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("datagen: {e}");
            match e {
                Error::Config(_) | Error::InvalidHyperparameter(_) => EXIT_CONFIG,
                _ => exit_code_for(&e),
            }
        }
    }
}
