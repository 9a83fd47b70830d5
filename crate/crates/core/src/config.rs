//! TOML experiment configuration.
//!
//! Keys carry their unit as a suffix. A phase-noise or distortion level of
//! `-inf` disables that impairment; `adc_bits = 0` disables quantization.
//!
//! ```toml
//! schema_version = 1
//! experiment = "custom"
//! seed = 7
//! trials = 200
//!
//! [sweep]
//! parameter = "tx_power_dbm"
//! values = [0.0, 10.0, 20.0]
//!
//! [scenario]
//! base = "scenario2"
//! doppler_hz = 10.0
//!
//! [scenario.impairments]
//! lna_distortion_dbc = -inf
//! ```

use std::path::Path;

use serde::Deserialize;

use crate::cancellation::Alpha3Estimator;
use crate::channel::ChannelProfile;
use crate::error::{Error, Result};
use crate::experiments::{Experiment, ExperimentConfig, ExperimentOutput, SweepParameter};
use crate::scenario::{ChannelKnowledge, ScenarioConfig};
use crate::sim::Runner;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    schema_version: u32,
    experiment: String,
    seed: Option<u64>,
    trials: Option<usize>,
    workers: Option<usize>,
    snr_grid_db: Option<Vec<f64>>,
    sweep: Option<RawSweep>,
    scenario: Option<RawScenario>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSweep {
    parameter: Option<String>,
    values: Option<Vec<f64>>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawScenario {
    base: Option<String>,
    name: Option<String>,
    tx_power_dbm: Option<f64>,
    passive_suppression_db: Option<f64>,
    rician_factor_db: Option<f64>,
    profile: Option<String>,
    doppler_hz: Option<f64>,
    training_symbols: Option<usize>,
    data_symbols: Option<usize>,
    channel_knowledge: Option<String>,
    nonlinearity_suppression: Option<bool>,
    alpha3_estimator: Option<String>,
    alpha3_refresh_frames: Option<usize>,
    aux_input_dbm: Option<f64>,
    impairments: Option<RawImpairments>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawImpairments {
    tx_phase_noise_dbc: Option<f64>,
    rx_phase_noise_dbc: Option<f64>,
    pll_bandwidth_hz: Option<f64>,
    pa_distortion_dbc: Option<f64>,
    lna_distortion_dbc: Option<f64>,
    gaussian_noise: Option<bool>,
    adc_bits: Option<u32>,
    share_pll: Option<bool>,
}

fn level(v: f64) -> Option<f64> {
    (v != f64::NEG_INFINITY).then_some(v)
}

fn prefixed(e: Error, prefix: &str) -> Error {
    match e {
        Error::InvalidConfig { field, reason } if !field.starts_with(prefix) => Error::InvalidConfig {
            field: format!("{prefix}.{field}"),
            reason,
        },
        other => other,
    }
}

impl RawScenario {
    fn build(self) -> Result<ScenarioConfig> {
        let base = self.base.as_deref().unwrap_or("scenario1");
        let mut s = ScenarioConfig::builtin(base, 20.0)
            .map_err(|_| Error::config("scenario.base", format!("unknown built-in scenario `{base}`")))?;
        if let Some(v) = self.name {
            s.name = v;
        }
        if let Some(v) = self.tx_power_dbm {
            s.tx_power_dbm = v;
        }
        if let Some(v) = self.passive_suppression_db {
            s.passive_suppression_db = v;
        }
        if let Some(v) = self.rician_factor_db {
            s.rician_factor_db = v;
        }
        if let Some(v) = self.profile {
            s.profile = ChannelProfile::parse(&v)
                .map_err(|_| Error::config("scenario.profile", format!("unsupported profile `{v}`")))?;
        }
        if let Some(v) = self.doppler_hz {
            s.doppler_hz = v;
        }
        if let Some(v) = self.training_symbols {
            s.frame.n_training_symbols = v;
        }
        if let Some(v) = self.data_symbols {
            s.frame.n_data_symbols = v;
        }
        if let Some(v) = self.channel_knowledge {
            s.channel_knowledge = ChannelKnowledge::parse(&v).map_err(|e| prefixed(e, "scenario"))?;
        }
        if let Some(v) = self.nonlinearity_suppression {
            s.nonlinearity_suppression = v;
        }
        if let Some(v) = self.alpha3_estimator {
            s.alpha3_estimator = Alpha3Estimator::parse(&v).map_err(|e| prefixed(e, "scenario"))?;
        }
        if let Some(v) = self.alpha3_refresh_frames {
            s.alpha3_refresh_frames = v;
        }
        if let Some(v) = self.aux_input_dbm {
            s.aux_input_dbm = v;
        }
        if let Some(imp) = self.impairments {
            let i = &mut s.impairments;
            if let Some(v) = imp.tx_phase_noise_dbc {
                i.tx_phase_noise_dbc = level(v);
            }
            if let Some(v) = imp.rx_phase_noise_dbc {
                i.rx_phase_noise_dbc = level(v);
            }
            if let Some(v) = imp.pll_bandwidth_hz {
                i.pll_bandwidth_hz = v;
            }
            if let Some(v) = imp.pa_distortion_dbc {
                i.pa_distortion_dbc = level(v);
            }
            if let Some(v) = imp.lna_distortion_dbc {
                i.lna_distortion_dbc = level(v);
            }
            if let Some(v) = imp.gaussian_noise {
                i.gaussian_noise = v;
            }
            if let Some(v) = imp.adc_bits {
                i.adc_bits = (v != 0).then_some(v);
            }
            if let Some(v) = imp.share_pll {
                i.share_pll = v;
            }
        }
        s.validate().map_err(|e| prefixed(e, "scenario"))?;
        Ok(s)
    }
}

/// Parses and validates a TOML experiment configuration.
pub fn parse_config(text: &str) -> Result<ExperimentConfig> {
    let raw: RawConfig = toml::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
    if raw.schema_version != SCHEMA_VERSION {
        return Err(Error::config(
            "schema_version",
            format!("unsupported version {} (expected {SCHEMA_VERSION})", raw.schema_version),
        ));
    }
    let experiment = Experiment::parse(&raw.experiment)?;
    let mut cfg = ExperimentConfig::new(experiment);
    if let Some(v) = raw.seed {
        cfg.seed = v;
    }
    if let Some(v) = raw.trials {
        cfg.trials = v;
    }
    if let Some(v) = raw.workers {
        cfg.workers = v;
    }
    if let Some(v) = raw.snr_grid_db {
        cfg.snr_grid_db = v;
    }
    if let Some(sweep) = raw.sweep {
        if let Some(p) = sweep.parameter {
            cfg.parameter = Some(SweepParameter::parse(&p)?);
        }
        if let Some(v) = sweep.values {
            cfg.sweep = v;
        }
    }
    if let Some(s) = raw.scenario {
        cfg.scenario = Some(s.build()?);
    }
    cfg.validate()?;
    Ok(cfg)
}

pub fn load_config(path: &Path) -> Result<ExperimentConfig> {
    parse_config(&std::fs::read_to_string(path)?)
}

/// Loads a configuration, runs it and writes `<experiment>.csv` into
/// `out_dir`. Nothing is written if validation or the run fails.
pub fn run_experiment_file(config_path: &Path, out_dir: &Path) -> Result<ExperimentOutput> {
    let cfg = load_config(config_path)?;
    let runner = Runner::new(cfg.workers)?;
    let out = crate::experiments::run_experiment(&cfg, &runner)?;
    std::fs::create_dir_all(out_dir)?;
    out.write_csv(out_dir)?;
    Ok(out)
}
