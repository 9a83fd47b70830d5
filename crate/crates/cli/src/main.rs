//! `auxsic` runs the built-in experiments and custom sweeps and writes CSV
//! plus a JSON metadata sidecar.
//!
//! Exit codes: 0 success, 1 configuration error, 2 runtime or invariant
//! failure.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use auxsic_core::config::load_config;
use auxsic_core::experiments::{run_experiment, Experiment, ExperimentConfig, ExperimentOutput, SweepParameter};
use auxsic_core::scenario::ScenarioConfig;
use auxsic_core::sim::Runner;
use auxsic_core::Error;
use clap::{Args, Parser, Subcommand};
use sha2::{Digest, Sha256};

#[derive(Parser, Debug)]
#[command(
    name = "auxsic",
    version,
    about = "Full-duplex self-interference cancellation simulator"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Gaussian and quantization noise against receiver input power
    Fig3(Common),
    /// Phase-noise residual against non-LOS power for TGn B, C and D
    Fig4(Common),
    /// Channel-estimation penalty for 1, 2 and 4 training symbols
    Fig5a(Common),
    /// Held-channel penalty for 50, 100 and 150 symbol frames
    Fig5b(Common),
    /// Residual with and without receiver distortion suppression
    Fig6(Common),
    /// Residual and decomposition against transmit power, scenario 1
    Fig7a(Common),
    /// Residual and decomposition against transmit power, scenario 2
    Fig7b(Common),
    /// Residual and decomposition against transmit power, scenario 3
    Fig7c(Common),
    /// Achievable rates against SNR, scenario 1
    Fig8a(Common),
    /// Achievable rates against SNR, scenario 2
    Fig8b(Common),
    /// Achievable rates against SNR, scenario 3
    Fig8c(Common),
    /// Average rate gains for all scenarios at 5 and 20 dBm
    Table1(Common),
    /// Sweep one scenario parameter
    Custom(CustomArgs),
    /// Run whatever experiment the config file names
    Run(Common),
    /// List the built-in experiments
    List,
}

#[derive(Args, Debug, Clone)]
struct Common {
    /// TOML configuration file
    #[arg(long, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Output directory
    #[arg(long, value_name = "DIR", default_value = "out")]
    out: PathBuf,
    /// Master seed
    #[arg(long, value_name = "U64")]
    seed: Option<u64>,
    /// Monte Carlo trials per sweep point
    #[arg(long, value_name = "N")]
    trials: Option<usize>,
    /// Worker threads (0 uses every core)
    #[arg(long, value_name = "N")]
    workers: Option<usize>,
    /// Built-in scenario (scenario1, scenario2, scenario3)
    #[arg(long, value_name = "NAME")]
    scenario: Option<String>,
    /// Comma-separated sweep values, overriding the default axis
    #[arg(long, value_name = "LIST", value_delimiter = ',', allow_hyphen_values = true)]
    sweep: Option<Vec<f64>>,
}

#[derive(Args, Debug)]
struct CustomArgs {
    #[command(flatten)]
    common: Common,
    /// Parameter to sweep, e.g. tx_power_dbm or doppler_hz
    #[arg(long, value_name = "NAME")]
    parameter: Option<String>,
}

enum Failure {
    Config(String),
    Runtime(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::InvalidConfig { .. } | Error::Parse(_) | Error::UnknownExperiment(_) => {
                Failure::Config(e.to_string())
            }
            other => Failure::Runtime(other.to_string()),
        }
    }
}

fn build_config(
    experiment: Option<Experiment>,
    args: &Common,
    parameter: Option<&str>,
) -> Result<ExperimentConfig, Failure> {
    let mut cfg = match &args.config {
        Some(path) => {
            let cfg = load_config(path).map_err(|e| match e {
                Error::Io(io) => Failure::Config(format!("cannot read {}: {io}", path.display())),
                other => other.into(),
            })?;
            if let Some(exp) = experiment {
                if cfg.experiment != exp {
                    return Err(Failure::Config(format!(
                        "invalid configuration: experiment: config names `{}` but the subcommand is `{}`",
                        cfg.experiment.name(),
                        exp.name()
                    )));
                }
            }
            cfg
        }
        None => match experiment {
            Some(exp) => ExperimentConfig::new(exp),
            None => {
                return Err(Failure::Config(
                    "invalid configuration: config: `run` needs --config".into(),
                ))
            }
        },
    };
    if let Some(v) = args.seed {
        cfg.seed = v;
    }
    if let Some(v) = args.trials {
        cfg.trials = v;
    }
    if let Some(v) = args.workers {
        cfg.workers = v;
    }
    if let Some(v) = &args.sweep {
        cfg.sweep = v.clone();
    }
    if let Some(name) = &args.scenario {
        let tx = cfg.scenario.as_ref().map_or(20.0, |s| s.tx_power_dbm);
        cfg.scenario = Some(ScenarioConfig::builtin(name, tx)?);
    }
    if let Some(p) = parameter {
        cfg.parameter = Some(SweepParameter::parse(p)?);
    }
    cfg.validate()?;
    Ok(cfg)
}

fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Hash of everything that determines the CSV; the worker count does not.
fn config_hash(cfg: &ExperimentConfig) -> String {
    let canonical = ExperimentConfig {
        workers: 0,
        ..cfg.clone()
    };
    sha256_hex(format!("{canonical:?}").as_bytes())
}

fn write_outputs(
    cfg: &ExperimentConfig,
    out: &ExperimentOutput,
    dir: &Path,
    source: Option<&Path>,
) -> Result<PathBuf, Failure> {
    let io = |e: std::io::Error| Failure::Runtime(format!("cannot write to {}: {e}", dir.display()));
    std::fs::create_dir_all(dir).map_err(io)?;
    let csv = out.table.to_csv_bytes()?;
    let csv_path = dir.join(format!("{}.csv", out.name));
    std::fs::write(&csv_path, &csv).map_err(io)?;
    let checks: Vec<serde_json::Value> = out
        .checks
        .iter()
        .map(|c| serde_json::json!({ "name": c.name, "passed": c.passed, "detail": c.detail }))
        .collect();
    let meta = serde_json::json!({
        "experiment": out.name,
        "code_version": env!("CARGO_PKG_VERSION"),
        "seed": cfg.seed,
        "trials": cfg.trials,
        "sweep_axis": cfg.experiment.sweep_axis(),
        "sweep": cfg.sweep,
        "config_sha256": config_hash(cfg),
        "config_file": source.map(|p| p.display().to_string()),
        "csv_sha256": sha256_hex(&csv),
        "checks": checks,
    });
    let meta_path = dir.join(format!("{}.meta.json", out.name));
    let text = serde_json::to_string_pretty(&meta).map_err(|e| Failure::Runtime(e.to_string()))?;
    std::fs::write(meta_path, text + "\n").map_err(io)?;
    Ok(csv_path)
}

fn execute(experiment: Option<Experiment>, args: &Common, parameter: Option<&str>) -> Result<(), Failure> {
    let cfg = build_config(experiment, args, parameter)?;
    let runner = Runner::new(cfg.workers)?;
    log::info!(
        "running {} with {} trials per point on {} workers",
        cfg.experiment.name(),
        cfg.trials,
        runner.workers()
    );
    let out = run_experiment(&cfg, &runner)?;
    let path = write_outputs(&cfg, &out, &args.out, args.config.as_deref())?;
    println!("wrote {}", path.display());
    for c in &out.checks {
        println!("{} {}: {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail);
    }
    if out.all_passed() {
        Ok(())
    } else {
        Err(Failure::Runtime("invariant check failed".into()))
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let exp = |name: &str| Some(Experiment::parse(name).expect("built-in name"));
    let result = match &cli.command {
        Command::Fig3(a) => execute(exp("fig3"), a, None),
        Command::Fig4(a) => execute(exp("fig4"), a, None),
        Command::Fig5a(a) => execute(exp("fig5a"), a, None),
        Command::Fig5b(a) => execute(exp("fig5b"), a, None),
        Command::Fig6(a) => execute(exp("fig6"), a, None),
        Command::Fig7a(a) => execute(exp("fig7a"), a, None),
        Command::Fig7b(a) => execute(exp("fig7b"), a, None),
        Command::Fig7c(a) => execute(exp("fig7c"), a, None),
        Command::Fig8a(a) => execute(exp("fig8a"), a, None),
        Command::Fig8b(a) => execute(exp("fig8b"), a, None),
        Command::Fig8c(a) => execute(exp("fig8c"), a, None),
        Command::Table1(a) => execute(exp("table1"), a, None),
        Command::Custom(a) => execute(exp("custom"), &a.common, a.parameter.as_deref()),
        Command::Run(a) => execute(None, a, None),
        Command::List => {
            for e in Experiment::all() {
                println!("{:<8} sweep: {}", e.name(), e.sweep_axis());
            }
            Ok(())
        }
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Config(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(1)
        }
        Err(Failure::Runtime(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(2)
        }
    }
}
