//! Monte Carlo trials of the full transmit, receive and cancel pipeline.
//!
//! Each trial draws its own data, channel and impairment realizations from
//! counter-based seeds, so trials can run in any order on any number of
//! workers. Aggregation is a sequential reduction in trial order.

use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::cancellation::{
    cancel, cancel_conventional, cancel_per_symbol, estimate_alpha3_with, estimate_channel_ratio,
    estimate_direct_channel, reconstruct_and_subtract, ChannelRatioEstimate,
};
use crate::channel::{gen_channel, AuxChannel, ChannelModelConfig};
use crate::error::{Error, Result};
use crate::metrics::{
    average_rate_gain, full_duplex_rate, half_duplex_rate, soi_power_for_snr, HALF_DUPLEX_NOISE_FLOOR_DBM,
};
use crate::ofdm::{OfdmGrid, SymbolKind};
use crate::rng::{Stream, TrialSeeds};
use crate::scenario::{ChannelKnowledge, ScenarioConfig};
use crate::signal::{db_to_linear, linear_to_db};
use crate::transceiver::Transceiver;

/// Fixed-size worker pool for trials.
#[derive(Clone)]
pub struct Runner {
    pool: Arc<rayon::ThreadPool>,
}

impl Runner {
    /// `workers == 0` uses one worker per available core.
    pub fn new(workers: usize) -> Result<Self> {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(workers)
            .build()
            .map_err(|e| Error::config("workers", e.to_string()))?;
        Ok(Self { pool: Arc::new(pool) })
    }

    pub fn workers(&self) -> usize {
        self.pool.current_num_threads()
    }

    /// Evaluates `f` for trials `0..n` and returns results in trial order.
    pub fn map<T, F>(&self, n: usize, f: F) -> Result<Vec<T>>
    where
        T: Send,
        F: Fn(u64) -> Result<T> + Sync + Send,
    {
        self.pool
            .install(|| (0..n as u64).into_par_iter().map(&f).collect::<Result<Vec<T>>>())
    }
}

impl std::fmt::Debug for Runner {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Runner").field("workers", &self.workers()).finish()
    }
}

/// Result of one simulated frame.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialOutcome {
    /// Residual power per subcarrier after the proposed canceller, averaged
    /// over data symbols (mW).
    pub proposed_mw: Vec<f64>,
    /// Same for the conventional canceller that uses the known transmit data.
    pub conventional_mw: Vec<f64>,
    /// Measured power at the ordinary receiver input (mW).
    pub si_input_mw: f64,
    /// Ordinary-chain Gaussian and quantization noise on data symbols (mW).
    pub ord_gaussian_mw: f64,
    pub ord_quantization_mw: f64,
    pub alpha3_hat: Option<Complex64>,
}

impl TrialOutcome {
    pub fn proposed_power_mw(&self) -> f64 {
        mean(&self.proposed_mw)
    }

    pub fn conventional_power_mw(&self) -> f64 {
        mean(&self.conventional_mw)
    }
}

fn mean(v: &[f64]) -> f64 {
    if v.is_empty() {
        return 0.0;
    }
    v.iter().sum::<f64>() / v.len() as f64
}

fn per_subcarrier_power(grid: &OfdmGrid, symbols: &[usize]) -> Vec<f64> {
    let n = grid.n_subcarriers();
    let mut acc = vec![0.0; n];
    for &s in symbols {
        for (a, v) in acc.iter_mut().zip(grid.symbol(s)) {
            *a += v.norm_sqr();
        }
    }
    let m = symbols.len().max(1) as f64;
    acc.iter_mut().for_each(|a| *a /= m);
    acc
}

/// Scenario with its transceiver resolved once, ready for many trials.
#[derive(Debug, Clone)]
pub struct PreparedScenario {
    scenario: ScenarioConfig,
    trx: Transceiver,
    channel: ChannelModelConfig,
    kinds: Vec<SymbolKind>,
    aux: AuxChannel,
    h_aux: Vec<Complex64>,
}

impl PreparedScenario {
    pub fn new(scenario: &ScenarioConfig) -> Result<Self> {
        scenario.validate()?;
        let trx = Transceiver::new(scenario.transceiver_config())?;
        let n = trx.params().n_subcarriers;
        let aux = trx.aux_channel();
        let h_aux = aux.freq_response(n);
        Ok(Self {
            scenario: scenario.clone(),
            channel: scenario.channel_config(),
            kinds: scenario.frame_structure().symbol_kinds(),
            trx,
            aux,
            h_aux,
        })
    }

    pub fn scenario(&self) -> &ScenarioConfig {
        &self.scenario
    }

    pub fn transceiver(&self) -> &Transceiver {
        &self.trx
    }

    /// Simulates one frame with the signal of interest silent.
    pub fn run_trial(&self, seeds: &TrialSeeds) -> Result<TrialOutcome> {
        let params = *self.trx.params();
        let n = params.n_subcarriers;
        let n_sym = self.kinds.len();
        let grid = OfdmGrid::random_qpsk(params, self.kinds.clone(), &mut seeds.rng(Stream::TxData));
        let ch = gen_channel(&self.channel, n_sym, seeds.seed(Stream::SiChannel))?;
        let tx = self.trx.transmit(&grid, seeds.seed(Stream::TxPhaseNoise))?;
        let rx = self.trx.receive(&tx, &ch, &self.aux, None, seeds, 0)?;
        let x = grid.scaled(Complex64::new(db_to_linear(self.scenario.tx_power_dbm).sqrt(), 0.0));

        let training = grid.indices_of(SymbolKind::Training);
        let data = grid.indices_of(SymbolKind::Data);
        let nl_symbol = grid.indices_of(SymbolKind::NonlinearityTraining).first().copied();
        let h_true: Vec<Vec<Complex64>> = (0..n_sym).map(|s| ch.freq_response(s, n)).collect();
        let over_training = |h: &[Vec<Complex64>]| -> Vec<Complex64> {
            let mut acc = vec![Complex64::new(0.0, 0.0); n];
            for &s in &training {
                acc.iter_mut().zip(&h[s]).for_each(|(a, v)| *a += v);
            }
            acc.iter_mut().for_each(|a| *a /= training.len() as f64);
            acc
        };

        // proposed canceller
        let (mut y_dc, h_ord_hat) = match self.scenario.channel_knowledge {
            ChannelKnowledge::Perfect => {
                let ratios: Vec<Vec<Complex64>> = h_true.iter().map(|h| self.ratio(h)).collect();
                let y = cancel_per_symbol(&rx.y_ord, &rx.y_aux, &ratios)?;
                (y, h_true[nl_symbol.unwrap_or(0)].clone())
            }
            ChannelKnowledge::Snapshot => {
                let h = over_training(&h_true);
                let est = ChannelRatioEstimate::new(self.ratio(&h), training.len(), training.len() - 1);
                (cancel(&rx.y_ord, &rx.y_aux, &est)?, h)
            }
            ChannelKnowledge::Estimated => {
                let est = estimate_channel_ratio(&rx.y_aux, &rx.y_ord, &training)?;
                let h = est.h_hat.iter().zip(&self.h_aux).map(|(r, a)| r * a).collect();
                (cancel(&rx.y_ord, &rx.y_aux, &est)?, h)
            }
        };
        let mut alpha3_hat = None;
        if let Some(m) = nl_symbol {
            let x_training: Vec<&[Complex64]> = match self.scenario.channel_knowledge {
                ChannelKnowledge::Estimated => training.iter().map(|&s| x.symbol(s)).collect(),
                _ => Vec::new(),
            };
            let est = estimate_alpha3_with(
                self.scenario.alpha3_estimator,
                &x_training,
                x.symbol(m),
                y_dc.symbol(m),
                &h_ord_hat,
            )?;
            y_dc = reconstruct_and_subtract(&y_dc, &x, &est, &data)?;
            alpha3_hat = Some(est.alpha3_hat);
        }

        // conventional canceller with the known transmit grid
        let y_conv = match self.scenario.channel_knowledge {
            ChannelKnowledge::Perfect => cancel_per_symbol(&rx.y_ord, &x, &h_true)?,
            ChannelKnowledge::Snapshot => {
                let est = ChannelRatioEstimate::new(over_training(&h_true), training.len(), training.len() - 1);
                cancel_conventional(&rx.y_ord, &x, &est)?
            }
            ChannelKnowledge::Estimated => {
                let est = estimate_direct_channel(&x, &rx.y_ord, &training)?;
                cancel_conventional(&rx.y_ord, &x, &est)?
            }
        };

        Ok(TrialOutcome {
            proposed_mw: per_subcarrier_power(&y_dc, &data),
            conventional_mw: per_subcarrier_power(&y_conv, &data),
            si_input_mw: db_to_linear(rx.ord_input_dbm),
            ord_gaussian_mw: rx.ord_truth.gaussian.power_of(&data),
            ord_quantization_mw: rx.ord_truth.quantization.power_of(&data),
            alpha3_hat,
        })
    }

    fn ratio(&self, h_ord: &[Complex64]) -> Vec<Complex64> {
        h_ord.iter().zip(&self.h_aux).map(|(h, a)| h / a).collect()
    }

    /// Runs `n_trials` frames keyed by `seed`.
    pub fn run(&self, n_trials: usize, seed: u64, runner: &Runner) -> Result<Vec<TrialOutcome>> {
        if n_trials == 0 {
            return Err(Error::config("trials", "must be at least 1"));
        }
        runner.map(n_trials, |t| self.run_trial(&TrialSeeds::new(seed, t)))
    }
}

/// Which canceller a result describes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Technique {
    Proposed,
    Conventional,
}

impl Technique {
    pub fn name(&self) -> &'static str {
        match self {
            Self::Proposed => "proposed",
            Self::Conventional => "conventional",
        }
    }
}

/// Residual SI attributed to each impairment, from single-impairment runs
/// that share seeds with the full run (dBm).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Decomposition {
    pub gaussian_quantization_dbm: f64,
    pub phase_noise_dbm: f64,
    pub tx_nonlinearity_dbm: f64,
    pub rx_nonlinearity_dbm: f64,
    /// Channel change within the frame, with every hardware impairment off.
    pub fading_dbm: f64,
}

impl Decomposition {
    pub fn terms(&self) -> [(&'static str, f64); 5] {
        [
            ("gaussian_quantization", self.gaussian_quantization_dbm),
            ("phase_noise", self.phase_noise_dbm),
            ("tx_nonlinearity", self.tx_nonlinearity_dbm),
            ("rx_nonlinearity", self.rx_nonlinearity_dbm),
            ("fading", self.fading_dbm),
        ]
    }

    /// Power sum of all terms (dBm).
    pub fn sum_dbm(&self) -> f64 {
        linear_to_db(self.terms().iter().map(|(_, v)| db_to_linear(*v)).sum())
    }
}

/// Aggregate of a Monte Carlo run for one canceller.
#[derive(Debug, Clone, PartialEq)]
pub struct RunResult {
    pub scenario: String,
    pub technique: Technique,
    pub seed: u64,
    pub n_trials: usize,
    /// Mean residual power over trials and subcarriers (dBm).
    pub residual_si_dbm: f64,
    /// Residual of each trial (dBm), in trial order.
    pub trial_residual_dbm: Vec<f64>,
    /// Per-trial, per-subcarrier residual (mW), the SINR denominators.
    pub per_subcarrier_mw: Vec<Vec<f64>>,
    /// Mean power at the ordinary receiver input (dBm).
    pub si_power_dbm: f64,
    /// Half-duplex receiver noise floor (dBm).
    pub noise_floor_dbm: f64,
    /// Mean ordinary-chain Gaussian and quantization noise (dBm).
    pub gaussian_noise_dbm: f64,
    pub quantization_noise_dbm: f64,
    pub training_overhead: f64,
    pub decomposition: Option<Decomposition>,
}

impl RunResult {
    fn from_outcomes(scenario: &ScenarioConfig, technique: Technique, seed: u64, outcomes: &[TrialOutcome]) -> Self {
        let per_subcarrier_mw: Vec<Vec<f64>> = outcomes
            .iter()
            .map(|o| match technique {
                Technique::Proposed => o.proposed_mw.clone(),
                Technique::Conventional => o.conventional_mw.clone(),
            })
            .collect();
        let trial_mw: Vec<f64> = per_subcarrier_mw.iter().map(|v| mean(v)).collect();
        let avg = |f: &dyn Fn(&TrialOutcome) -> f64| linear_to_db(mean(&outcomes.iter().map(f).collect::<Vec<_>>()));
        Self {
            scenario: scenario.name.clone(),
            technique,
            seed,
            n_trials: outcomes.len(),
            residual_si_dbm: linear_to_db(mean(&trial_mw)),
            trial_residual_dbm: trial_mw.iter().map(|&p| linear_to_db(p)).collect(),
            per_subcarrier_mw,
            si_power_dbm: avg(&|o| o.si_input_mw),
            noise_floor_dbm: HALF_DUPLEX_NOISE_FLOOR_DBM,
            gaussian_noise_dbm: avg(&|o| o.ord_gaussian_mw),
            quantization_noise_dbm: avg(&|o| o.ord_quantization_mw),
            training_overhead: scenario.training_overhead(),
            decomposition: None,
        }
    }

    /// Median of the per-trial residuals (dBm).
    pub fn median_residual_dbm(&self) -> f64 {
        let mut v = self.trial_residual_dbm.clone();
        v.sort_by(f64::total_cmp);
        match v.len() {
            0 => f64::NAN,
            n if n % 2 == 1 => v[n / 2],
            n => linear_to_db(0.5 * (db_to_linear(v[n / 2 - 1]) + db_to_linear(v[n / 2]))),
        }
    }

    /// Residual relative to the SI power at the receiver input (dB).
    pub fn residual_relative_db(&self) -> f64 {
        self.residual_si_dbm - self.si_power_dbm
    }
}

/// Runs the proposed and conventional cancellers on shared trials.
pub fn run_both(
    scenario: &ScenarioConfig,
    n_trials: usize,
    seed: u64,
    runner: &Runner,
) -> Result<(RunResult, RunResult)> {
    let outcomes = PreparedScenario::new(scenario)?.run(n_trials, seed, runner)?;
    Ok((
        RunResult::from_outcomes(scenario, Technique::Proposed, seed, &outcomes),
        RunResult::from_outcomes(scenario, Technique::Conventional, seed, &outcomes),
    ))
}

/// Residual SI of the proposed canceller with the signal of interest muted.
pub fn measure_residual_si(
    scenario: &ScenarioConfig,
    n_trials: usize,
    seed: u64,
    runner: &Runner,
) -> Result<RunResult> {
    Ok(run_both(scenario, n_trials, seed, runner)?.0)
}

/// Residual SI of a canceller that subtracts the known transmit data through
/// an LS channel estimate, without the auxiliary receiver.
pub fn conventional_dc_baseline(
    scenario: &ScenarioConfig,
    n_trials: usize,
    seed: u64,
    runner: &Runner,
) -> Result<RunResult> {
    Ok(run_both(scenario, n_trials, seed, runner)?.1)
}

/// Per-impairment decomposition of the proposed canceller's residual.
///
/// Each hardware term comes from a run with only that impairment enabled and
/// a static channel; the fading term comes from a run with no hardware
/// impairment and the scenario's Doppler. All runs share seeds.
pub fn decompose(scenario: &ScenarioConfig, n_trials: usize, seed: u64, runner: &Runner) -> Result<Decomposition> {
    let imp = &scenario.impairments;
    let term =
        |s: ScenarioConfig| -> Result<f64> { Ok(measure_residual_si(&s, n_trials, seed, runner)?.residual_si_dbm) };
    Ok(Decomposition {
        gaussian_quantization_dbm: term(scenario.variant(imp.noise_only(), 0.0))?,
        phase_noise_dbm: term(scenario.variant(imp.phase_noise_only(), 0.0))?,
        tx_nonlinearity_dbm: term(scenario.variant(imp.pa_only(), 0.0))?,
        rx_nonlinearity_dbm: term(scenario.variant(imp.lna_only(), 0.0))?,
        fading_dbm: term(scenario.variant(crate::scenario::Impairments::none(), scenario.doppler_hz))?,
    })
}

/// Full run of both cancellers plus the proposed canceller's decomposition.
pub fn measure_with_decomposition(
    scenario: &ScenarioConfig,
    n_trials: usize,
    seed: u64,
    runner: &Runner,
) -> Result<(RunResult, RunResult)> {
    let (mut proposed, conventional) = run_both(scenario, n_trials, seed, runner)?;
    proposed.decomposition = Some(decompose(scenario, n_trials, seed, runner)?);
    Ok((proposed, conventional))
}

/// Rates over an SNR grid for both cancellers.
#[derive(Debug, Clone, PartialEq)]
pub struct RateCurves {
    pub snr_db: Vec<f64>,
    pub half_duplex: Vec<f64>,
    pub proposed: Vec<f64>,
    pub conventional: Vec<f64>,
    /// Mean of `(R_fd - R_hd) / R_hd` over the grid.
    pub proposed_gain: f64,
    pub conventional_gain: f64,
}

/// Full-duplex rate of one canceller at a given SNR: the expectation over
/// trials of the subcarrier-averaged `log2(1 + P_soi / r_k)`.
pub fn expected_full_duplex_rate(result: &RunResult, snr_db: f64) -> f64 {
    let p = soi_power_for_snr(snr_db);
    mean(
        &result
            .per_subcarrier_mw
            .iter()
            .map(|r| full_duplex_rate(p, r))
            .collect::<Vec<_>>(),
    )
}

/// Achievable full- and half-duplex rates from already-run results.
pub fn rates_from_results(proposed: &RunResult, conventional: &RunResult, snr_grid_db: &[f64]) -> Result<RateCurves> {
    if snr_grid_db.is_empty() {
        return Err(Error::config("snr_grid_db", "must not be empty"));
    }
    let half_duplex: Vec<f64> = snr_grid_db.iter().map(|&s| half_duplex_rate(db_to_linear(s))).collect();
    let fd = |r: &RunResult| -> Vec<f64> { snr_grid_db.iter().map(|&s| expected_full_duplex_rate(r, s)).collect() };
    let p = fd(proposed);
    let c = fd(conventional);
    Ok(RateCurves {
        snr_db: snr_grid_db.to_vec(),
        proposed_gain: average_rate_gain(&p, &half_duplex),
        conventional_gain: average_rate_gain(&c, &half_duplex),
        half_duplex,
        proposed: p,
        conventional: c,
    })
}

/// Monte Carlo achievable rates for a scenario.
pub fn achievable_rates(
    scenario: &ScenarioConfig,
    snr_grid_db: &[f64],
    n_trials: usize,
    seed: u64,
    runner: &Runner,
) -> Result<RateCurves> {
    if snr_grid_db.is_empty() {
        return Err(Error::config("snr_grid_db", "must not be empty"));
    }
    let (p, c) = run_both(scenario, n_trials, seed, runner)?;
    rates_from_results(&p, &c, snr_grid_db)
}
