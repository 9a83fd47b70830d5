//! Built-in experiments that regenerate each figure's data and the rate
//! table, plus custom single-parameter sweeps.
//!
//! Every experiment iterates over one sweep axis (its `sweep` values) and
//! emits a [`CsvTable`]. Invariants that must hold for every run are
//! reported as [`Check`]s; a failed check is a runtime failure for callers.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::channel::ChannelProfile;
use crate::error::{Error, Result};
use crate::metrics::{default_snr_grid_db, residual_si_upper_bound, HALF_DUPLEX_NOISE_FLOOR_DBM};
use crate::ofdm::FrameStructure;
use crate::scenario::{ChannelKnowledge, Impairments, ScenarioConfig};
use crate::sim::{measure_residual_si, measure_with_decomposition, rates_from_results, run_both, Runner};

/// Default Monte Carlo trials per sweep point.
pub const DEFAULT_TRIALS: usize = 500;

/// Rician factor used for the fading-penalty experiment.
pub const FADING_RICIAN_FACTOR_DB: f64 = 12.0;

/// Ordinary-receiver input power of the distortion experiment.
pub const DISTORTION_INPUT_DBM: f64 = -5.0;

/// Transmit power used when input power is swept through passive suppression.
pub const SWEEP_TX_POWER_DBM: f64 = 20.0;

/// Header plus rows of pre-formatted cells.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CsvTable {
    pub headers: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl CsvTable {
    pub fn new(headers: &[&str]) -> Self {
        Self {
            headers: headers.iter().map(|h| h.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.headers.len());
        self.rows.push(row);
    }

    /// Index of a named column.
    pub fn column(&self, name: &str) -> Option<usize> {
        self.headers.iter().position(|h| h == name)
    }

    /// Numeric values of a column; unparseable cells become NaN.
    pub fn values(&self, name: &str) -> Vec<f64> {
        match self.column(name) {
            Some(c) => self.rows.iter().map(|r| r[c].parse().unwrap_or(f64::NAN)).collect(),
            None => Vec::new(),
        }
    }

    pub fn to_csv_bytes(&self) -> Result<Vec<u8>> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.headers)?;
        for r in &self.rows {
            w.write_record(r)?;
        }
        w.into_inner().map_err(|e| Error::Io(e.into_error()))
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_csv_bytes()?)?;
        Ok(())
    }
}

/// Fixed-precision number formatting so output is byte-stable.
pub fn fmt_num(v: f64) -> String {
    if v.is_nan() {
        "nan".into()
    } else if v == f64::INFINITY {
        "inf".into()
    } else if v == f64::NEG_INFINITY {
        "-inf".into()
    } else {
        let s = format!("{v:.4}");
        if s == "-0.0000" {
            "0.0000".into()
        } else {
            s
        }
    }
}

/// Outcome of a runtime invariant check.
#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl Check {
    fn new(name: &str, passed: bool, detail: String) -> Self {
        Self {
            name: name.into(),
            passed,
            detail,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentOutput {
    pub name: String,
    pub table: CsvTable,
    pub checks: Vec<Check>,
}

impl ExperimentOutput {
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    /// Writes `<name>.csv` into `dir` and returns its path.
    pub fn write_csv(&self, dir: &Path) -> Result<PathBuf> {
        let path = dir.join(format!("{}.csv", self.name));
        self.table.write(&path)?;
        Ok(path)
    }
}

/// Parameter varied by a custom sweep.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepParameter {
    TxPowerDbm,
    PassiveSuppressionDb,
    RicianFactorDb,
    DopplerHz,
    DataSymbols,
    TrainingSymbols,
}

impl SweepParameter {
    pub fn parse(name: &str) -> Result<Self> {
        Ok(match name {
            "tx_power_dbm" => Self::TxPowerDbm,
            "passive_suppression_db" => Self::PassiveSuppressionDb,
            "rician_factor_db" => Self::RicianFactorDb,
            "doppler_hz" => Self::DopplerHz,
            "data_symbols" => Self::DataSymbols,
            "training_symbols" => Self::TrainingSymbols,
            _ => return Err(Error::config("sweep.parameter", format!("unknown parameter `{name}`"))),
        })
    }

    pub fn name(&self) -> &'static str {
        match self {
            Self::TxPowerDbm => "tx_power_dbm",
            Self::PassiveSuppressionDb => "passive_suppression_db",
            Self::RicianFactorDb => "rician_factor_db",
            Self::DopplerHz => "doppler_hz",
            Self::DataSymbols => "data_symbols",
            Self::TrainingSymbols => "training_symbols",
        }
    }

    fn apply(&self, base: &ScenarioConfig, v: f64) -> Result<ScenarioConfig> {
        let mut s = base.clone();
        let count = |field: &str| -> Result<usize> {
            if v >= 1.0 && v.fract() == 0.0 {
                Ok(v as usize)
            } else {
                Err(Error::config(
                    format!("sweep.values ({field})"),
                    "must be positive integers",
                ))
            }
        };
        match self {
            Self::TxPowerDbm => s.tx_power_dbm = v,
            Self::PassiveSuppressionDb => s.passive_suppression_db = v,
            Self::RicianFactorDb => s.rician_factor_db = v,
            Self::DopplerHz => s.doppler_hz = v,
            Self::DataSymbols => s.frame.n_data_symbols = count("data_symbols")?,
            Self::TrainingSymbols => s.frame.n_training_symbols = count("training_symbols")?,
        }
        Ok(s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Experiment {
    /// Gaussian and quantization noise against receiver input power.
    Fig3,
    /// Phase-noise residual against non-LOS power for TGn B, C and D.
    Fig4,
    /// Penalty of estimating the channel from 1, 2 or 4 training symbols.
    Fig5a,
    /// Penalty of holding the channel over 50, 100 or 150 symbols.
    Fig5b,
    /// Residual with and without receiver distortion suppression.
    Fig6,
    /// Residual and its decomposition against transmit power, per scenario.
    Fig7(u8),
    /// Achievable rates against SNR, per scenario.
    Fig8(u8),
    /// Average rate gains for all scenarios at 5 and 20 dBm.
    Table1,
    Custom,
}

impl Experiment {
    pub fn parse(name: &str) -> Result<Self> {
        let n = name.to_ascii_lowercase();
        let by_letter = |c: Option<char>| match c {
            Some('a') => Some(1),
            Some('b') => Some(2),
            Some('c') => Some(3),
            _ => None,
        };
        Ok(match n.as_str() {
            "fig3" => Self::Fig3,
            "fig4" => Self::Fig4,
            "fig5a" => Self::Fig5a,
            "fig5b" => Self::Fig5b,
            "fig6" => Self::Fig6,
            "table1" => Self::Table1,
            "custom" => Self::Custom,
            _ if n.len() == 5 && n.starts_with("fig7") => match by_letter(n.chars().nth(4)) {
                Some(i) => Self::Fig7(i),
                None => return Err(Error::UnknownExperiment(name.into())),
            },
            _ if n.len() == 5 && n.starts_with("fig8") => match by_letter(n.chars().nth(4)) {
                Some(i) => Self::Fig8(i),
                None => return Err(Error::UnknownExperiment(name.into())),
            },
            _ => return Err(Error::UnknownExperiment(name.into())),
        })
    }

    pub fn name(&self) -> String {
        let letter = |i: u8| (b'a' + i - 1) as char;
        match self {
            Self::Fig3 => "fig3".into(),
            Self::Fig4 => "fig4".into(),
            Self::Fig5a => "fig5a".into(),
            Self::Fig5b => "fig5b".into(),
            Self::Fig6 => "fig6".into(),
            Self::Fig7(i) => format!("fig7{}", letter(*i)),
            Self::Fig8(i) => format!("fig8{}", letter(*i)),
            Self::Table1 => "table1".into(),
            Self::Custom => "custom".into(),
        }
    }

    pub fn all() -> Vec<Self> {
        vec![
            Self::Fig3,
            Self::Fig4,
            Self::Fig5a,
            Self::Fig5b,
            Self::Fig6,
            Self::Fig7(1),
            Self::Fig7(2),
            Self::Fig7(3),
            Self::Fig8(1),
            Self::Fig8(2),
            Self::Fig8(3),
            Self::Table1,
        ]
    }

    /// Meaning and unit of the sweep values.
    pub fn sweep_axis(&self) -> &'static str {
        match self {
            Self::Fig3 | Self::Fig5a | Self::Fig5b => "input_power_dbm",
            Self::Fig4 => "nlos_power_dbm",
            Self::Fig6 => "distortion_power_dbm",
            Self::Fig7(_) | Self::Fig8(_) | Self::Table1 => "tx_power_dbm",
            Self::Custom => "parameter value",
        }
    }

    pub fn default_sweep(&self) -> Vec<f64> {
        let range = |a: f64, b: f64, step: f64| -> Vec<f64> {
            let n = ((b - a) / step).round() as usize;
            (0..=n).map(|i| a + step * i as f64).collect()
        };
        match self {
            Self::Fig3 => range(-45.0, -5.0, 2.5),
            Self::Fig4 => range(-45.0, -5.0, 5.0),
            Self::Fig5a | Self::Fig5b => range(-45.0, -5.0, 5.0),
            Self::Fig6 => range(-70.0, -25.0, 5.0),
            Self::Fig7(_) => range(0.0, 30.0, 5.0),
            Self::Fig8(_) | Self::Table1 => vec![5.0, 20.0],
            Self::Custom => Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub experiment: Experiment,
    pub seed: u64,
    pub trials: usize,
    pub workers: usize,
    pub sweep: Vec<f64>,
    pub snr_grid_db: Vec<f64>,
    /// Base scenario for `custom`, and an override for `fig7*`/`fig8*`.
    pub scenario: Option<ScenarioConfig>,
    pub parameter: Option<SweepParameter>,
}

impl ExperimentConfig {
    pub fn new(experiment: Experiment) -> Self {
        Self {
            experiment,
            seed: 1,
            trials: DEFAULT_TRIALS,
            workers: 0,
            sweep: experiment.default_sweep(),
            snr_grid_db: default_snr_grid_db(),
            scenario: None,
            parameter: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.sweep.is_empty() {
            return Err(Error::config("sweep.values", "must not be empty"));
        }
        if self.sweep.iter().any(|v| !v.is_finite()) {
            return Err(Error::config("sweep.values", "must be finite numbers"));
        }
        if self.snr_grid_db.is_empty() {
            return Err(Error::config("snr_grid_db", "must not be empty"));
        }
        if self.trials == 0 {
            return Err(Error::config("trials", "must be at least 1"));
        }
        if let Some(s) = &self.scenario {
            s.validate()?;
        }
        if self.experiment == Experiment::Custom {
            if self.scenario.is_none() {
                return Err(Error::config("scenario", "required for a custom sweep"));
            }
            let p = self
                .parameter
                .ok_or_else(|| Error::config("sweep.parameter", "required for a custom sweep"))?;
            for v in &self.sweep {
                p.apply(self.scenario.as_ref().expect("checked"), *v)?.validate()?;
            }
        }
        if self.experiment == Experiment::Fig6 && self.sweep.iter().any(|v| *v > DISTORTION_INPUT_DBM) {
            return Err(Error::config(
                "sweep.values",
                "distortion power must not exceed the receiver input power",
            ));
        }
        Ok(())
    }

    fn scenario_for(&self, index: u8, tx_power_dbm: f64) -> ScenarioConfig {
        match &self.scenario {
            Some(s) => ScenarioConfig {
                tx_power_dbm,
                ..s.clone()
            },
            None => ScenarioConfig::builtin(&index.to_string(), tx_power_dbm).expect("built-in index"),
        }
    }
}

/// Validates and runs an experiment. Nothing is written.
pub fn run_experiment(cfg: &ExperimentConfig, runner: &Runner) -> Result<ExperimentOutput> {
    cfg.validate()?;
    let name = cfg.experiment.name();
    let (table, checks) = match cfg.experiment {
        Experiment::Fig3 => fig3(cfg, runner)?,
        Experiment::Fig4 => fig4(cfg, runner)?,
        Experiment::Fig5a => fig5a(cfg, runner)?,
        Experiment::Fig5b => fig5b(cfg, runner)?,
        Experiment::Fig6 => fig6(cfg, runner)?,
        Experiment::Fig7(i) => fig7(cfg, i, runner)?,
        Experiment::Fig8(i) => fig8(cfg, i, runner)?,
        Experiment::Table1 => table1(cfg, runner)?,
        Experiment::Custom => custom(cfg, runner)?,
    };
    Ok(ExperimentOutput { name, table, checks })
}

/// Scenario whose ordinary-receiver input is `input_dbm` at the sweep
/// transmit power.
fn at_input(base: ScenarioConfig, input_dbm: f64) -> ScenarioConfig {
    ScenarioConfig {
        tx_power_dbm: SWEEP_TX_POWER_DBM,
        passive_suppression_db: SWEEP_TX_POWER_DBM - input_dbm,
        ..base
    }
}

fn fig3(cfg: &ExperimentConfig, runner: &Runner) -> Result<(CsvTable, Vec<Check>)> {
    let mut t = CsvTable::new(&[
        "input_power_dbm",
        "gaussian_noise_dbm",
        "quantization_noise_dbm",
        "residual_si_dbm",
        "hd_noise_floor_dbm",
    ]);
    let mut quant_ok = true;
    let mut flat_ok = true;
    let mut rising_ok = true;
    let mut prev_gauss: Option<f64> = None;
    for &p in &cfg.sweep {
        let mut s = at_input(ScenarioConfig::new("fig3", 0.0, 0.0, 0.0), p);
        s.impairments = Impairments::typical().noise_only();
        s.channel_knowledge = ChannelKnowledge::Perfect;
        s.nonlinearity_suppression = false;
        s.doppler_hz = 0.0;
        let r = measure_residual_si(&s, cfg.trials, cfg.seed, runner)?;
        quant_ok &= r.quantization_noise_dbm < r.gaussian_noise_dbm;
        if p <= -30.0 {
            flat_ok &= (r.gaussian_noise_dbm - HALF_DUPLEX_NOISE_FLOOR_DBM).abs() <= 0.3;
        } else if let Some(g) = prev_gauss {
            rising_ok &= r.gaussian_noise_dbm >= g - 0.2;
        }
        prev_gauss = Some(r.gaussian_noise_dbm);
        t.push(vec![
            fmt_num(p),
            fmt_num(r.gaussian_noise_dbm),
            fmt_num(r.quantization_noise_dbm),
            fmt_num(r.residual_si_dbm),
            fmt_num(r.noise_floor_dbm),
        ]);
    }
    let checks = vec![
        Check::new(
            "quantization_below_gaussian",
            quant_ok,
            "14-bit quantization noise below Gaussian noise at every input".into(),
        ),
        Check::new(
            "noise_floor_flat_below_minus30",
            flat_ok,
            "Gaussian noise at -90 dBm +/- 0.3 dB for inputs <= -30 dBm".into(),
        ),
        Check::new(
            "noise_floor_rises_above_minus30",
            rising_ok,
            "Gaussian noise non-decreasing in input power above -30 dBm".into(),
        ),
    ];
    Ok((t, checks))
}

/// Phase-noise-only scenario with an all-diffuse channel for the given
/// received non-LOS power.
pub fn phase_noise_scenario(profile: ChannelProfile, nlos_power_dbm: f64) -> ScenarioConfig {
    let mut s = ScenarioConfig::new(
        "fig4",
        SWEEP_TX_POWER_DBM,
        SWEEP_TX_POWER_DBM - nlos_power_dbm,
        f64::NEG_INFINITY,
    );
    s.profile = profile;
    s.impairments = Impairments {
        rx_phase_noise_dbc: Some(-40.0),
        ..Impairments::none()
    };
    s.channel_knowledge = ChannelKnowledge::Perfect;
    s.nonlinearity_suppression = false;
    s.doppler_hz = 0.0;
    s
}

fn fig4(cfg: &ExperimentConfig, runner: &Runner) -> Result<(CsvTable, Vec<Check>)> {
    let mut t = CsvTable::new(&[
        "nlos_power_dbm",
        "model",
        "residual_dbm",
        "median_residual_dbm",
        "upper_bound_dbm",
    ]);
    let mut bound_ok = true;
    let mut margin_ok = true;
    for &p in &cfg.sweep {
        for profile in [ChannelProfile::TgnB, ChannelProfile::TgnC, ChannelProfile::TgnD] {
            let s = phase_noise_scenario(profile, p);
            let r = measure_residual_si(&s, cfg.trials, cfg.seed, runner)?;
            let bound = residual_si_upper_bound(s.tx_power_dbm, -s.passive_suppression_db, -40.0);
            bound_ok &= r.residual_si_dbm <= bound + 1.0;
            margin_ok &= r.residual_si_dbm <= bound - 10.0;
            t.push(vec![
                fmt_num(p),
                profile.name().trim_start_matches("TGn-").into(),
                fmt_num(r.residual_si_dbm),
                fmt_num(r.median_residual_dbm()),
                fmt_num(bound),
            ]);
        }
    }
    let checks = vec![
        Check::new(
            "residual_within_bound",
            bound_ok,
            "residual <= upper bound + 1 dB".into(),
        ),
        Check::new(
            "residual_well_below_bound",
            margin_ok,
            "residual >= 10 dB below upper bound".into(),
        ),
    ];
    Ok((t, checks))
}

/// Scenario for the channel-estimation penalty: receiver noise and phase
/// noise, static channel, no distortion.
pub fn estimation_scenario(input_dbm: f64, training_symbols: usize, knowledge: ChannelKnowledge) -> ScenarioConfig {
    let mut s = at_input(ScenarioConfig::new("fig5a", 0.0, 0.0, 0.0), input_dbm);
    let typical = Impairments::typical();
    s.impairments = Impairments {
        tx_phase_noise_dbc: typical.tx_phase_noise_dbc,
        rx_phase_noise_dbc: typical.rx_phase_noise_dbc,
        ..typical.noise_only()
    };
    s.frame = FrameStructure::new(training_symbols, 50);
    s.channel_knowledge = knowledge;
    s.nonlinearity_suppression = false;
    s.doppler_hz = 0.0;
    s
}

fn fig5a(cfg: &ExperimentConfig, runner: &Runner) -> Result<(CsvTable, Vec<Check>)> {
    let mut t = CsvTable::new(&[
        "input_power_dbm",
        "training_symbols",
        "perfect_dbm",
        "estimated_dbm",
        "degradation_db",
    ]);
    for &p in &cfg.sweep {
        for m in [1usize, 2, 4] {
            let perfect = measure_residual_si(
                &estimation_scenario(p, m, ChannelKnowledge::Perfect),
                cfg.trials,
                cfg.seed,
                runner,
            )?;
            let est = measure_residual_si(
                &estimation_scenario(p, m, ChannelKnowledge::Estimated),
                cfg.trials,
                cfg.seed,
                runner,
            )?;
            t.push(vec![
                fmt_num(p),
                m.to_string(),
                fmt_num(perfect.residual_si_dbm),
                fmt_num(est.residual_si_dbm),
                fmt_num(est.residual_si_dbm - perfect.residual_si_dbm),
            ]);
        }
    }
    Ok((t, Vec::new()))
}

/// Scenario for the fading penalty: typical hardware, 5 Hz Doppler and a
/// channel held from the training symbols over `data_symbols`.
pub fn fading_scenario(input_dbm: f64, data_symbols: usize, knowledge: ChannelKnowledge) -> ScenarioConfig {
    let mut s = at_input(
        ScenarioConfig::new("fig5b", 0.0, 0.0, FADING_RICIAN_FACTOR_DB),
        input_dbm,
    );
    s.frame = FrameStructure::new(2, data_symbols);
    s.channel_knowledge = knowledge;
    s
}

fn fig5b(cfg: &ExperimentConfig, runner: &Runner) -> Result<(CsvTable, Vec<Check>)> {
    let mut t = CsvTable::new(&[
        "input_power_dbm",
        "frame_length",
        "perfect_dbm",
        "held_channel_dbm",
        "degradation_db",
    ]);
    for &p in &cfg.sweep {
        for l in [50usize, 100, 150] {
            let perfect = measure_residual_si(
                &fading_scenario(p, l, ChannelKnowledge::Perfect),
                cfg.trials,
                cfg.seed,
                runner,
            )?;
            let held = measure_residual_si(
                &fading_scenario(p, l, ChannelKnowledge::Snapshot),
                cfg.trials,
                cfg.seed,
                runner,
            )?;
            t.push(vec![
                fmt_num(p),
                l.to_string(),
                fmt_num(perfect.residual_si_dbm),
                fmt_num(held.residual_si_dbm),
                fmt_num(held.residual_si_dbm - perfect.residual_si_dbm),
            ]);
        }
    }
    Ok((t, Vec::new()))
}

/// Scenario for the distortion experiment: scenario 1 geometry with the
/// ordinary input at -5 dBm. `None` makes the LNA linear.
pub fn distortion_scenario(distortion_power_dbm: Option<f64>, suppression: bool) -> ScenarioConfig {
    let mut s = at_input(ScenarioConfig::scenario1(SWEEP_TX_POWER_DBM), DISTORTION_INPUT_DBM);
    s.name = "fig6".into();
    s.impairments.lna_distortion_dbc = distortion_power_dbm.map(|d| d - DISTORTION_INPUT_DBM);
    s.nonlinearity_suppression = suppression;
    s
}

fn fig6(cfg: &ExperimentConfig, runner: &Runner) -> Result<(CsvTable, Vec<Check>)> {
    let mut t = CsvTable::new(&[
        "distortion_power_dbm",
        "linear_receiver_dbm",
        "without_suppression_dbm",
        "with_suppression_dbm",
        "improvement_db",
    ]);
    let linear = measure_residual_si(&distortion_scenario(None, false), cfg.trials, cfg.seed, runner)?.residual_si_dbm;
    for &d in &cfg.sweep {
        let without = measure_residual_si(&distortion_scenario(Some(d), false), cfg.trials, cfg.seed, runner)?;
        let with = measure_residual_si(&distortion_scenario(Some(d), true), cfg.trials, cfg.seed, runner)?;
        t.push(vec![
            fmt_num(d),
            fmt_num(linear),
            fmt_num(without.residual_si_dbm),
            fmt_num(with.residual_si_dbm),
            fmt_num(without.residual_si_dbm - with.residual_si_dbm),
        ]);
    }
    Ok((t, Vec::new()))
}

fn fig7(cfg: &ExperimentConfig, index: u8, runner: &Runner) -> Result<(CsvTable, Vec<Check>)> {
    let mut t = CsvTable::new(&[
        "tx_power_dbm",
        "si_input_dbm",
        "proposed_dbm",
        "conventional_dbm",
        "gaussian_quantization_dbm",
        "phase_noise_dbm",
        "tx_nonlinearity_dbm",
        "rx_nonlinearity_dbm",
        "fading_dbm",
        "decomposition_sum_dbm",
        "hd_noise_floor_dbm",
    ]);
    let mut dominance = Vec::new();
    let mut additivity = Vec::new();
    for &tx in &cfg.sweep {
        let s = cfg.scenario_for(index, tx);
        let (p, c) = measure_with_decomposition(&s, cfg.trials, cfg.seed, runner)?;
        let d = p.decomposition.expect("decomposition requested");
        if p.residual_si_dbm > c.residual_si_dbm {
            dominance.push(fmt_num(tx));
        }
        if (d.sum_dbm() - p.residual_si_dbm).abs() > 0.5 {
            additivity.push(fmt_num(tx));
        }
        t.push(vec![
            fmt_num(tx),
            fmt_num(p.si_power_dbm),
            fmt_num(p.residual_si_dbm),
            fmt_num(c.residual_si_dbm),
            fmt_num(d.gaussian_quantization_dbm),
            fmt_num(d.phase_noise_dbm),
            fmt_num(d.tx_nonlinearity_dbm),
            fmt_num(d.rx_nonlinearity_dbm),
            fmt_num(d.fading_dbm),
            fmt_num(d.sum_dbm()),
            fmt_num(p.noise_floor_dbm),
        ]);
    }
    let checks = vec![
        Check::new(
            "proposed_not_worse_than_conventional",
            dominance.is_empty(),
            format!("violations at tx power {:?}", dominance),
        ),
        Check::new(
            "decomposition_adds_up",
            additivity.is_empty(),
            format!("sum of terms off by more than 0.5 dB at tx power {:?}", additivity),
        ),
    ];
    Ok((t, checks))
}

fn fig8(cfg: &ExperimentConfig, index: u8, runner: &Runner) -> Result<(CsvTable, Vec<Check>)> {
    let mut t = CsvTable::new(&[
        "tx_power_dbm",
        "snr_db",
        "half_duplex_rate",
        "proposed_rate",
        "conventional_rate",
    ]);
    let mut violations = Vec::new();
    for &tx in &cfg.sweep {
        let (p, c) = run_both(&cfg.scenario_for(index, tx), cfg.trials, cfg.seed, runner)?;
        let rates = rates_from_results(&p, &c, &cfg.snr_grid_db)?;
        for i in 0..rates.snr_db.len() {
            if rates.proposed[i] < rates.conventional[i] {
                violations.push(format!("{}@{}", fmt_num(tx), fmt_num(rates.snr_db[i])));
            }
            t.push(vec![
                fmt_num(tx),
                fmt_num(rates.snr_db[i]),
                fmt_num(rates.half_duplex[i]),
                fmt_num(rates.proposed[i]),
                fmt_num(rates.conventional[i]),
            ]);
        }
    }
    let checks = vec![Check::new(
        "proposed_not_worse_than_conventional",
        violations.is_empty(),
        format!("violations at tx@snr {:?}", violations),
    )];
    Ok((t, checks))
}

/// Average rate gains reported for the three scenarios (percent), indexed
/// by scenario, then 5/20 dBm, then proposed/conventional.
pub const REFERENCE_RATE_GAINS_PCT: [[[f64; 2]; 2]; 3] = [
    [[14.0, -58.0], [-58.0, -98.0]],
    [[61.0, 11.0], [23.0, -63.0]],
    [[76.0, 72.0], [67.0, 14.0]],
];

/// Reference gain for a cell if the transmit power is one of the tabulated
/// values.
pub fn reference_rate_gain_pct(scenario_index: usize, tx_power_dbm: f64, proposed: bool) -> Option<f64> {
    let p = if tx_power_dbm == 5.0 {
        0
    } else if tx_power_dbm == 20.0 {
        1
    } else {
        return None;
    };
    Some(REFERENCE_RATE_GAINS_PCT.get(scenario_index)?[p][usize::from(!proposed)])
}

fn table1(cfg: &ExperimentConfig, runner: &Runner) -> Result<(CsvTable, Vec<Check>)> {
    let mut t = CsvTable::new(&[
        "scenario",
        "passive_suppression_db",
        "tx_power_dbm",
        "technique",
        "residual_si_dbm",
        "average_rate_gain_pct",
        "reference_gain_pct",
    ]);
    let mut violations = Vec::new();
    for (i, name) in ["scenario1", "scenario2", "scenario3"].iter().enumerate() {
        for &tx in &cfg.sweep {
            let s = ScenarioConfig::builtin(name, tx)?;
            let (p, c) = run_both(&s, cfg.trials, cfg.seed, runner)?;
            let rates = rates_from_results(&p, &c, &cfg.snr_grid_db)?;
            if rates.proposed_gain < rates.conventional_gain {
                violations.push(format!("{name}@{}", fmt_num(tx)));
            }
            for (proposed, r, gain) in [(true, &p, rates.proposed_gain), (false, &c, rates.conventional_gain)] {
                t.push(vec![
                    name.to_string(),
                    fmt_num(s.passive_suppression_db),
                    fmt_num(tx),
                    r.technique.name().into(),
                    fmt_num(r.residual_si_dbm),
                    fmt_num(100.0 * gain),
                    reference_rate_gain_pct(i, tx, proposed).map_or_else(|| "".into(), fmt_num),
                ]);
            }
        }
    }
    let checks = vec![Check::new(
        "proposed_not_worse_than_conventional",
        violations.is_empty(),
        format!("violations in cells {:?}", violations),
    )];
    Ok((t, checks))
}

fn custom(cfg: &ExperimentConfig, runner: &Runner) -> Result<(CsvTable, Vec<Check>)> {
    let param = cfg.parameter.expect("validated");
    let base = cfg.scenario.as_ref().expect("validated");
    let mut t = CsvTable::new(&[
        param.name(),
        "si_input_dbm",
        "proposed_dbm",
        "conventional_dbm",
        "proposed_rate_gain_pct",
        "conventional_rate_gain_pct",
    ]);
    for &v in &cfg.sweep {
        let s = param.apply(base, v)?;
        let (p, c) = run_both(&s, cfg.trials, cfg.seed, runner)?;
        let rates = rates_from_results(&p, &c, &cfg.snr_grid_db)?;
        t.push(vec![
            fmt_num(v),
            fmt_num(p.si_power_dbm),
            fmt_num(p.residual_si_dbm),
            fmt_num(c.residual_si_dbm),
            fmt_num(100.0 * rates.proposed_gain),
            fmt_num(100.0 * rates.conventional_gain),
        ]);
    }
    Ok((t, Vec::new()))
}

/// One-line summary of the checks, for logs.
pub fn describe_checks(checks: &[Check]) -> String {
    let mut s = String::new();
    for c in checks {
        let _ = writeln!(s, "{} {}: {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail);
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small(exp: Experiment, sweep: Vec<f64>) -> ExperimentConfig {
        ExperimentConfig {
            trials: 4,
            sweep,
            ..ExperimentConfig::new(exp)
        }
    }

    #[test]
    fn experiment_names_round_trip() {
        for e in Experiment::all() {
            assert_eq!(Experiment::parse(&e.name()).unwrap(), e);
        }
        assert!(matches!(Experiment::parse("fig9"), Err(Error::UnknownExperiment(_))));
        assert!(matches!(Experiment::parse("fig7d"), Err(Error::UnknownExperiment(_))));
    }

    #[test]
    fn empty_sweep_is_rejected() {
        let r = run_experiment(&small(Experiment::Fig4, vec![]), &Runner::new(1).unwrap());
        match r {
            Err(Error::InvalidConfig { field, .. }) => assert_eq!(field, "sweep.values"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn fig4_has_documented_columns() {
        let out = run_experiment(&small(Experiment::Fig4, vec![-25.0]), &Runner::new(2).unwrap()).unwrap();
        assert_eq!(
            out.table.headers,
            [
                "nlos_power_dbm",
                "model",
                "residual_dbm",
                "median_residual_dbm",
                "upper_bound_dbm"
            ]
        );
        assert_eq!(out.table.rows.len(), 3);
        let bound = out.table.values("upper_bound_dbm");
        assert!((bound[0] - (20.0 - 45.0 - 40.0 + 3.0103)).abs() < 1e-3);
    }

    #[test]
    fn table1_has_twelve_cells() {
        let out = run_experiment(&small(Experiment::Table1, vec![5.0, 20.0]), &Runner::new(2).unwrap()).unwrap();
        assert_eq!(out.table.rows.len(), 12);
        assert_eq!(out.table.values("reference_gain_pct")[0], 14.0);
    }

    #[test]
    fn csv_is_identical_across_worker_counts() {
        let cfg = small(Experiment::Fig5a, vec![-25.0]);
        let a = run_experiment(&cfg, &Runner::new(1).unwrap()).unwrap();
        let b = run_experiment(&cfg, &Runner::new(3).unwrap()).unwrap();
        assert_eq!(a.table.to_csv_bytes().unwrap(), b.table.to_csv_bytes().unwrap());
    }

    #[test]
    fn custom_sweep_needs_parameter_and_scenario() {
        let mut cfg = small(Experiment::Custom, vec![5.0]);
        assert!(run_experiment(&cfg, &Runner::new(1).unwrap()).is_err());
        cfg.scenario = Some(ScenarioConfig::scenario3(5.0));
        cfg.parameter = Some(SweepParameter::DataSymbols);
        cfg.sweep = vec![2.5];
        assert!(run_experiment(&cfg, &Runner::new(1).unwrap()).is_err());
        cfg.sweep = vec![20.0, 40.0];
        let out = run_experiment(&cfg, &Runner::new(1).unwrap()).unwrap();
        assert_eq!(out.table.headers[0], "data_symbols");
        assert_eq!(out.table.rows.len(), 2);
    }

    #[test]
    fn numbers_format_stably() {
        assert_eq!(fmt_num(-0.0), "0.0000");
        assert_eq!(fmt_num(f64::NEG_INFINITY), "-inf");
        assert_eq!(fmt_num(1.23456), "1.2346");
    }
}
