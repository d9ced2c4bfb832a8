//! Command-line driver for sparse-mixture detection experiments.
//!
//! Subcommands:
//!
//! - `rate`: estimate both oracle-LRT error probabilities over an n grid,
//!   fit log-error slopes against the regime's rate function, and compare
//!   them to the theory constants. Writes `results.csv` and `fits.json`.
//!   Exits nonzero if any slope verdict fails.
//! - `adaptive`: miss-detection comparison of the configured tests at
//!   calibrated false-alarm levels. Writes `adaptive.csv`.
//! - `regime-map`: classify a (beta, r) grid for phase-diagram plotting.
//!   Writes `regime_map.csv`.
//! - `calibrate`: thresholds for the configured tests and levels. Writes
//!   `thresholds.csv`.
//! - `selftest`: run the built-in verification suite; exits nonzero on any
//!   failure.
//!
//! `--threads` only changes how work is scheduled; outputs are byte-identical
//! for any thread count.

use clap::{Args, Parser, Subcommand};
use mixdetect::detectors::{HcConfig, Statistic};
use mixdetect::estimation::calibrate_thresholds;
use mixdetect::regimes::Scaling;
use mixdetect_cli::config::{ExperimentConfig, FaLevels, TestKind};
use mixdetect_cli::experiment::{
    self, adaptive_rows_csv, fits_json, rate_rows_csv, regime_map_csv, thresholds_csv,
    DEFAULT_SLOPE_TOL,
};
use mixdetect_cli::selftest::run_selftest;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

#[derive(Parser)]
#[command(
    name = "mixdetect",
    about = "Sparse-mixture detection experiments",
    version
)]
struct Cli {
    /// Worker threads (default: all cores). Affects speed only, never output.
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct ConfigArgs {
    /// Experiment config file (flat key = value document).
    #[arg(long)]
    config: PathBuf,
    /// Override the config's master seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Override the config's output directory.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Oracle-LRT error probabilities vs g(n), with slope fits and verdicts.
    Rate {
        #[command(flatten)]
        common: ConfigArgs,
        /// Tolerance for slope-versus-constant verdicts.
        #[arg(long, default_value_t = DEFAULT_SLOPE_TOL)]
        tol: f64,
    },
    /// Adaptive-test miss-detection table at calibrated false-alarm levels.
    Adaptive {
        #[command(flatten)]
        common: ConfigArgs,
    },
    /// Phase-diagram sweep over a (beta, r) grid.
    RegimeMap {
        /// Grid steps along beta in (0, 1).
        #[arg(long, default_value_t = 100)]
        beta_steps: usize,
        /// Grid steps along r in (0, 1).
        #[arg(long, default_value_t = 100)]
        r_steps: usize,
        /// Signal scaling: sparse-r (mu = sqrt(2 r log n)) or dense-power
        /// (mu = n^r; beta grid restricted to (0, 1/2), r grid to (-1, 1)).
        #[arg(long, default_value = "sparse-r")]
        scaling: String,
        /// Output directory.
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Calibrate thresholds for the configured tests and levels.
    Calibrate {
        #[command(flatten)]
        common: ConfigArgs,
    },
    /// Run the built-in verification suite.
    Selftest,
}

fn load_config(common: &ConfigArgs) -> Result<ExperimentConfig, String> {
    let text = std::fs::read_to_string(&common.config)
        .map_err(|e| format!("cannot read {}: {e}", common.config.display()))?;
    let mut cfg = ExperimentConfig::parse(&text).map_err(|e| e.to_string())?;
    if let Some(seed) = common.seed {
        cfg.seed = seed;
    }
    if let Some(out) = &common.out {
        cfg.output = out.clone();
    }
    Ok(cfg)
}

fn write_output(dir: &Path, name: &str, contents: &str) -> Result<PathBuf, String> {
    std::fs::create_dir_all(dir).map_err(|e| format!("cannot create {}: {e}", dir.display()))?;
    let path = dir.join(name);
    std::fs::write(&path, contents).map_err(|e| format!("cannot write {}: {e}", path.display()))?;
    Ok(path)
}

fn cmd_rate(common: ConfigArgs, tol: f64) -> Result<bool, String> {
    let cfg = load_config(&common)?;
    let result = experiment::run_rate_experiment(&cfg, tol).map_err(|e| e.to_string())?;
    let csv_path = write_output(&cfg.output, "results.csv", &rate_rows_csv(&result.rows))?;
    let json = serde_json::to_string_pretty(&fits_json(&result)).expect("serializable");
    let json_path = write_output(&cfg.output, "fits.json", &(json + "\n"))?;
    println!(
        "regime: {} (rate function {})",
        result.regime.regime.name(),
        result.regime.rate_fn.name()
    );
    for outcome in &result.fits {
        match outcome {
            experiment::FitOutcome::Fitted { kind, fit, verdict } => println!(
                "{}: slope {:.5} (se {:.5}, r2 {:.4}, {} points, n >= {}) -> {}",
                kind.name(),
                fit.slope,
                fit.slope_stderr,
                fit.r_squared,
                fit.points,
                fit.n_min_used,
                if !verdict.has_checks() {
                    "no applicable constant"
                } else if verdict.pass {
                    "PASS"
                } else {
                    "FAIL"
                }
            ),
            experiment::FitOutcome::Unfittable { kind, reason } => {
                println!("{}: no fit ({reason})", kind.name())
            }
        }
    }
    for o in &result.overlap {
        println!(
            "overlap at n={} ({}): direct {} vs is {} [{:.2} sigma, {}]",
            o.n,
            o.kind.name(),
            o.direct.p_hat,
            o.importance.p_hat,
            o.sigma,
            if o.pass { "ok" } else { "DISAGREE" }
        );
    }
    println!("wrote {} and {}", csv_path.display(), json_path.display());
    Ok(result.all_verdicts_pass())
}

fn cmd_adaptive(common: ConfigArgs) -> Result<(), String> {
    let cfg = load_config(&common)?;
    let rows = experiment::run_adaptive_comparison(&cfg).map_err(|e| e.to_string())?;
    let path = write_output(&cfg.output, "adaptive.csv", &adaptive_rows_csv(&rows))?;
    println!("wrote {} ({} rows)", path.display(), rows.len());
    Ok(())
}

fn cmd_regime_map(
    beta_steps: usize,
    r_steps: usize,
    scaling: &str,
    out: &Path,
) -> Result<(), String> {
    let scaling = match scaling {
        "sparse-r" => Scaling::SparseR,
        "dense-power" => Scaling::DensePower,
        other => return Err(format!("unknown scaling `{other}`")),
    };
    if beta_steps == 0 || r_steps == 0 {
        return Err("grids need at least one step".into());
    }
    let mut beta_grid = experiment::interior_grid(beta_steps);
    if scaling == Scaling::DensePower {
        beta_grid.retain(|&b| b < 0.5);
    }
    let r_grid: Vec<f64> = match scaling {
        // power-law exponents sweep (-1, 1) to cover vanishing signals
        Scaling::DensePower => experiment::interior_grid(r_steps)
            .into_iter()
            .map(|r| 2.0 * r - 1.0)
            .collect(),
        Scaling::SparseR => experiment::interior_grid(r_steps),
    };
    let rows =
        experiment::emit_regime_map(&beta_grid, &r_grid, scaling).map_err(|e| e.to_string())?;
    let path = write_output(out, "regime_map.csv", &regime_map_csv(&rows))?;
    println!("wrote {} ({} grid points)", path.display(), rows.len());
    Ok(())
}

fn cmd_calibrate(common: ConfigArgs) -> Result<(), String> {
    let cfg = load_config(&common)?;
    let levels = match &cfg.fa_levels {
        FaLevels::Oracle => return Err("calibrate needs numeric fa_levels, not `oracle`".into()),
        FaLevels::Levels(levels) => levels.clone(),
    };
    let params = cfg.params().map_err(|e| e.to_string())?;
    let mut rows = Vec::new();
    for &n in &cfg.n_grid {
        let model = params.model(n).map_err(|e| e.to_string())?;
        for &test in &cfg.tests {
            let statistic = match test {
                TestKind::Lrt => Statistic::Llr,
                TestKind::Max => Statistic::SampleMax,
                TestKind::Hc => Statistic::HigherCriticism(HcConfig::Full),
                TestKind::Acw => Statistic::AcwSign,
            };
            let thresholds =
                calibrate_thresholds(&statistic, &model, &levels, cfg.trials_direct, cfg.seed)
                    .map_err(|e| e.to_string())?;
            for t in thresholds {
                println!(
                    "n={n} {} level {}: threshold {}{}",
                    test.name(),
                    t.level,
                    t.threshold,
                    if t.degenerate { " (degenerate)" } else { "" }
                );
                rows.push((n, test, t));
            }
        }
    }
    let path = write_output(&cfg.output, "thresholds.csv", &thresholds_csv(&rows))?;
    println!("wrote {}", path.display());
    Ok(())
}

fn cmd_selftest() -> bool {
    let checks = run_selftest();
    let mut all = true;
    for c in &checks {
        println!(
            "{} {:<28} {}",
            if c.pass { "PASS" } else { "FAIL" },
            c.name,
            c.detail
        );
        all &= c.pass;
    }
    println!(
        "{}/{} checks passed",
        checks.iter().filter(|c| c.pass).count(),
        checks.len()
    );
    all
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(threads) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
        {
            eprintln!("error: cannot configure thread pool: {e}");
            return ExitCode::FAILURE;
        }
    }
    let outcome = match cli.command {
        Command::Rate { common, tol } => cmd_rate(common, tol),
        Command::Adaptive { common } => cmd_adaptive(common).map(|()| true),
        Command::RegimeMap {
            beta_steps,
            r_steps,
            scaling,
            out,
        } => cmd_regime_map(beta_steps, r_steps, &scaling, &out).map(|()| true),
        Command::Calibrate { common } => cmd_calibrate(common).map(|()| true),
        Command::Selftest => Ok(cmd_selftest()),
    };
    match outcome {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(message) => {
            eprintln!("error: {message}");
            ExitCode::FAILURE
        }
    }
}
