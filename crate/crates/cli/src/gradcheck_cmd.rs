//! `gradcheck`: run the finite-difference gradient suite and report
//! per-family maximum error.

use clap::Args;

use robustssl::gradcheck::{
    check_config, default_suite, ABSOLUTE_FLOOR, DEFAULT_CLASS_COUNTS, DEFAULT_STEP,
    DEFAULT_TOLERANCE,
};
use robustssl::losses::{LossFamily, RobustLossConfig};

use crate::{exit_code_for, EXIT_OK, EXIT_RUNTIME};

#[derive(Args)]
pub struct GradcheckArgs {
    /// Comma-separated families to check (ce,gce,bce,rce,sce,mae); all by default.
    #[arg(long, value_delimiter = ',')]
    families: Vec<LossFamily>,
    /// GCE exponent when filtering to specific families.
    #[arg(long)]
    q: Option<f64>,
    /// BCE exponent.
    #[arg(long)]
    beta: Option<f64>,
    /// RCE clipping constant.
    #[arg(long)]
    a: Option<f64>,
    /// SCE weight on CE.
    #[arg(long)]
    alpha: Option<f64>,
    /// SCE weight on RCE.
    #[arg(long)]
    gamma: Option<f64>,
    /// Relative tolerance (the absolute floor scales with it).
    #[arg(long, default_value_t = DEFAULT_TOLERANCE)]
    tolerance: f64,
    /// Random points per configuration.
    #[arg(long, default_value_t = 100)]
    points: usize,
    #[arg(long, default_value_t = 42)]
    seed: u64,
}

fn configs_for(args: &GradcheckArgs) -> Vec<RobustLossConfig> {
    if args.families.is_empty() {
        return default_suite();
    }
    let base = RobustLossConfig {
        q_exponent: args.q.unwrap_or(0.9),
        beta: args.beta.unwrap_or(1.0),
        a: args.a.unwrap_or(-2.0),
        alpha: args.alpha.unwrap_or(0.1),
        gamma: args.gamma.unwrap_or(0.01),
        ..RobustLossConfig::default()
    };
    args.families
        .iter()
        .map(|&family| RobustLossConfig { family, ..base })
        .collect()
}

pub fn run(args: GradcheckArgs) -> u8 {
    let floor = ABSOLUTE_FLOOR * args.tolerance / DEFAULT_TOLERANCE;
    let mut all_passed = true;
    for config in configs_for(&args) {
        let report = match check_config(
            &config,
            args.points,
            &DEFAULT_CLASS_COUNTS,
            args.seed,
            args.tolerance,
            floor,
            DEFAULT_STEP,
        ) {
            Ok(r) => r,
            Err(e) => {
                eprintln!("gradcheck failed: {e}");
                return exit_code_for(&e);
            }
        };
        let status = if report.passed() { "PASS" } else { "FAIL" };
        println!(
            "{status} {}: max rel error {:.3e} over {} points",
            report.label, report.max_relative_error, report.points
        );
        for f in &report.failures {
            println!(
                "  point {} (K={}, component {}): rel error {:.3e}",
                f.point, f.num_classes, f.component, f.relative_error
            );
        }
        all_passed &= report.passed();
    }
    if all_passed {
        EXIT_OK
    } else {
        EXIT_RUNTIME
    }
}
