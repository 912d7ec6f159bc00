//! `simulate`: the three-class mislabeled-cluster illustration. Trains a CE
//! perceptron and a robust-loss perceptron on the scene, then exports the
//! dataset, a decision-grid lattice for external plotting, and an accuracy
//! summary over clean held-out data.

use clap::Args;
use serde::{Deserialize, Serialize};
use std::io::Write as _;
use std::path::PathBuf;

use robustssl::datagen::{
    default_fig2_clean_spec, default_fig2_spec, gen_gaussian_mixture, DatasetManifest, MixtureSpec,
};
use robustssl::model::{evaluate_accuracy, predict, train, Activation, LossMap, ModelSpec, SgdConfig};
use robustssl::pipeline::derive_seed;
use robustssl::losses::RobustLossConfig;
use robustssl::{Error, Result};

use crate::manifest::{digest_of, RunManifest};
use crate::{ensure_out_dir, exit_code_for, EXIT_CONFIG, EXIT_OK};

#[derive(Args)]
pub struct SimulateArgs {
    /// JSON config; defaults apply when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, default_value = "out/simulate")]
    out: PathBuf,
    /// Override the config's master seed.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimulateConfig {
    pub master_seed: u64,
    /// Training runs averaged in the accuracy summary, seeded per entry.
    pub num_seeds: usize,
    pub train_spec: MixtureSpec,
    pub test_spec: MixtureSpec,
    pub test_seed: u64,
    pub robust_loss: RobustLossConfig,
    pub sgd: SgdConfig,
    /// CE epochs run before switching the robust arm to its own loss.
    /// Bounded robust losses have vanishing gradients on confidently-wrong
    /// predictions, so a cold start can leave a class permanently dead.
    pub warmup_epochs: usize,
    pub lattice: LatticeSpec,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LatticeSpec {
    pub nx: usize,
    pub ny: usize,
    pub x_min: f64,
    pub x_max: f64,
    pub y_min: f64,
    pub y_max: f64,
}

impl Default for LatticeSpec {
    fn default() -> Self {
        Self {
            nx: 200,
            ny: 200,
            x_min: -5.0,
            x_max: 10.0,
            y_min: -5.0,
            y_max: 10.0,
        }
    }
}

impl Default for SimulateConfig {
    fn default() -> Self {
        Self {
            master_seed: 7,
            num_seeds: 10,
            train_spec: default_fig2_spec(),
            test_spec: default_fig2_clean_spec(),
            test_seed: 9001,
            robust_loss: RobustLossConfig::bce(1.0),
            sgd: SgdConfig {
                learning_rate: 0.1,
                momentum: 0.9,
                weight_decay: 1e-4,
                lr_schedule: vec![(300, 0.01)],
                epochs: 400,
                batch_size: 32,
                seed: 0,
            },
            warmup_epochs: 5,
            lattice: LatticeSpec::default(),
        }
    }
}

#[derive(Debug, Serialize)]
struct AccuracySummary {
    ce_per_seed: Vec<f64>,
    robust_per_seed: Vec<f64>,
    ce_mean: f64,
    robust_mean: f64,
    robust_minus_ce: f64,
}

fn load_config(args: &SimulateArgs) -> Result<SimulateConfig> {
    let mut config: SimulateConfig = match &args.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
            serde_json::from_str(&text).map_err(|e| Error::Config(format!("{e}")))?
        }
        None => SimulateConfig::default(),
    };
    if let Some(seed) = args.seed {
        config.master_seed = seed;
    }
    if config.num_seeds == 0 {
        return Err(Error::Config("num_seeds must be >= 1".into()));
    }
    config.train_spec.validate().map_err(|e| Error::Config(e.to_string()))?;
    config.test_spec.validate().map_err(|e| Error::Config(e.to_string()))?;
    config.robust_loss.validate().map_err(|e| Error::Config(e.to_string()))?;
    config.sgd.validate().map_err(|e| Error::Config(e.to_string()))?;
    Ok(config)
}

pub fn execute(config: &SimulateConfig, out: &PathBuf) -> Result<Vec<PathBuf>> {
    let arch = ModelSpec {
        layer_dims: vec![2, config.train_spec.num_classes],
        hidden_activation: Activation::Identity,
    };
    let data_seed = derive_seed(config.master_seed, 1);
    let train_ds = gen_gaussian_mixture(&config.train_spec, data_seed)?;
    let test_ds = gen_gaussian_mixture(&config.test_spec, config.test_seed)?;

    let mut ce_models = Vec::new();
    let mut robust_models = Vec::new();
    let mut ce_acc = Vec::new();
    let mut robust_acc = Vec::new();
    for s in 0..config.num_seeds as u64 {
        let mut sgd = config.sgd.clone();
        sgd.seed = derive_seed(config.master_seed, 10 + s);
        let init = arch.build(sgd.seed)?;
        let (ce_model, _) = train(init.clone(), &train_ds, &LossMap::ce_only(), &sgd)?;
        let robust_map = LossMap {
            true_label: config.robust_loss,
            pseudo_label: config.robust_loss,
        };
        let warmed = if config.warmup_epochs > 0 {
            let mut warm_sgd = sgd.clone();
            warm_sgd.epochs = config.warmup_epochs.min(sgd.epochs);
            warm_sgd.lr_schedule.clear();
            train(init, &train_ds, &LossMap::ce_only(), &warm_sgd)?.0
        } else {
            init
        };
        let (robust_model, _) = train(warmed, &train_ds, &robust_map, &sgd)?;
        ce_acc.push(evaluate_accuracy(&ce_model, &test_ds)?);
        robust_acc.push(evaluate_accuracy(&robust_model, &test_ds)?);
        ce_models.push(ce_model);
        robust_models.push(robust_model);
    }

    let mut outputs = Vec::new();
    let csv_path = out.join("dataset.csv");
    let manifest_path = out.join("dataset.manifest.json");
    let ds_manifest = DatasetManifest {
        n: train_ds.len(),
        d: train_ds.num_features(),
        num_classes: train_ds.num_classes(),
        seed: data_seed,
        spec_digest: digest_of(&config.train_spec)?,
    };
    robustssl::datagen::save_dataset(&train_ds, &ds_manifest, &csv_path, &manifest_path)?;
    outputs.push(csv_path);
    outputs.push(manifest_path);

    // decision grid from the first seed's models
    let grid_path = out.join("decision_grid.csv");
    {
        let lat = &config.lattice;
        let ce_model = &ce_models[0];
        let robust_model = &robust_models[0];
        let cells = robustssl::parallel::map_indexed(lat.nx * lat.ny, |i| {
            let ix = i % lat.nx;
            let iy = i / lat.nx;
            let x = lat.x_min + (lat.x_max - lat.x_min) * ix as f64 / (lat.nx - 1).max(1) as f64;
            let y = lat.y_min + (lat.y_max - lat.y_min) * iy as f64 / (lat.ny - 1).max(1) as f64;
            let pred_ce = predict(ce_model, &[x, y])?;
            let pred_robust = predict(robust_model, &[x, y])?;
            Ok::<_, Error>((x, y, pred_ce, pred_robust))
        });
        let mut w = std::io::BufWriter::new(std::fs::File::create(&grid_path)?);
        writeln!(w, "x,y,pred_ce,pred_robust")?;
        for cell in cells {
            let (x, y, pc, pr) = cell?;
            writeln!(w, "{x},{y},{pc},{pr}")?;
        }
        w.flush()?;
    }
    outputs.push(grid_path);

    let summary = AccuracySummary {
        ce_mean: ce_acc.iter().sum::<f64>() / ce_acc.len() as f64,
        robust_mean: robust_acc.iter().sum::<f64>() / robust_acc.len() as f64,
        robust_minus_ce: robust_acc.iter().sum::<f64>() / robust_acc.len() as f64
            - ce_acc.iter().sum::<f64>() / ce_acc.len() as f64,
        ce_per_seed: ce_acc,
        robust_per_seed: robust_acc,
    };
    let summary_path = out.join("accuracy.json");
    std::fs::write(&summary_path, serde_json::to_string_pretty(&summary)? + "\n")?;
    outputs.push(summary_path);
    Ok(outputs)
}

pub fn run(args: SimulateArgs) -> u8 {
    let config = match load_config(&args) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("simulate: {e}");
            return EXIT_CONFIG;
        }
    };
    if let Err(e) = ensure_out_dir(&args.out) {
        eprintln!("simulate: {e}");
        return exit_code_for(&e);
    }
    let digest = match digest_of(&config) {
        Ok(d) => d,
        Err(e) => {
            eprintln!("simulate: {e}");
            return exit_code_for(&e);
        }
    };
    let start = std::time::Instant::now();
    let mut manifest = RunManifest::new(digest, config.master_seed);
    match execute(&config, &args.out) {
        Ok(outputs) => {
            for p in &outputs {
                manifest.record_output(p);
            }
            manifest.elapsed_ms = start.elapsed().as_millis();
            let manifest_path = args.out.join("run_manifest.json");
            if let Err(e) = manifest.write(&manifest_path) {
                eprintln!("simulate: {e}");
                return exit_code_for(&e);
            }
            println!("simulate: wrote {} files to {}", outputs.len() + 1, args.out.display());
            EXIT_OK
        }
        Err(e) => {
            eprintln!("simulate: {e}");
            exit_code_for(&e)
        }
    }
}
