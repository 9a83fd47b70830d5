//! Named operating points: transmit power, passive suppression, channel and
//! hardware impairments.

use crate::cancellation::Alpha3Estimator;
use crate::channel::{ChannelModelConfig, ChannelProfile};
use crate::error::{Error, Result};
use crate::impairments::{AdcConfig, GaussianNoiseModel, NoiseConfig, NoiseTable, PhaseNoiseConfig};
use crate::ofdm::{FrameStructure, OfdmParams};
use crate::transceiver::{AmplifierModel, TransceiverConfig};

/// How the canceller obtains the ordinary-to-auxiliary channel ratio.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ChannelKnowledge {
    /// True ratio on every symbol.
    Perfect,
    /// True ratio averaged over the training symbols, then held for the frame.
    Snapshot,
    /// LS estimate from the received training symbols.
    Estimated,
}

impl ChannelKnowledge {
    pub fn parse(name: &str) -> Result<Self> {
        match name.to_ascii_lowercase().as_str() {
            "perfect" => Ok(Self::Perfect),
            "snapshot" => Ok(Self::Snapshot),
            "estimated" => Ok(Self::Estimated),
            _ => Err(Error::config("channel_knowledge", format!("unknown mode `{name}`"))),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Self::Perfect => "perfect",
            Self::Snapshot => "snapshot",
            Self::Estimated => "estimated",
        }
    }
}

/// Hardware imperfections; `None` disables a term.
#[derive(Debug, Clone, PartialEq)]
pub struct Impairments {
    pub tx_phase_noise_dbc: Option<f64>,
    pub rx_phase_noise_dbc: Option<f64>,
    /// 3 dB bandwidth of the single-pole PLL spectrum.
    pub pll_bandwidth_hz: f64,
    /// PA distortion relative to its linear output at the transmit power.
    pub pa_distortion_dbc: Option<f64>,
    /// LNA distortion relative to its linear output at the nominal SI input.
    pub lna_distortion_dbc: Option<f64>,
    /// Input-level-dependent Gaussian noise from the NI5791 table.
    pub gaussian_noise: bool,
    pub adc_bits: Option<u32>,
    pub share_pll: bool,
}

impl Impairments {
    /// Default hardware: -40 dBc phase noise per oscillator, -45 dBc
    /// amplifier distortion, table noise and a 14-bit ADC.
    pub fn typical() -> Self {
        Self {
            tx_phase_noise_dbc: Some(-40.0),
            rx_phase_noise_dbc: Some(-40.0),
            pll_bandwidth_hz: 100e3,
            pa_distortion_dbc: Some(-45.0),
            lna_distortion_dbc: Some(-45.0),
            gaussian_noise: true,
            adc_bits: Some(14),
            share_pll: true,
        }
    }

    pub fn none() -> Self {
        Self {
            tx_phase_noise_dbc: None,
            rx_phase_noise_dbc: None,
            pll_bandwidth_hz: 100e3,
            pa_distortion_dbc: None,
            lna_distortion_dbc: None,
            gaussian_noise: false,
            adc_bits: None,
            share_pll: true,
        }
    }

    /// Gaussian noise and quantization only.
    pub fn noise_only(&self) -> Self {
        Self {
            gaussian_noise: self.gaussian_noise,
            adc_bits: self.adc_bits,
            ..Self::none_like(self)
        }
    }

    /// Transmitter and receiver phase noise only.
    pub fn phase_noise_only(&self) -> Self {
        Self {
            tx_phase_noise_dbc: self.tx_phase_noise_dbc,
            rx_phase_noise_dbc: self.rx_phase_noise_dbc,
            ..Self::none_like(self)
        }
    }

    pub fn pa_only(&self) -> Self {
        Self {
            pa_distortion_dbc: self.pa_distortion_dbc,
            ..Self::none_like(self)
        }
    }

    pub fn lna_only(&self) -> Self {
        Self {
            lna_distortion_dbc: self.lna_distortion_dbc,
            ..Self::none_like(self)
        }
    }

    fn none_like(other: &Self) -> Self {
        Self {
            pll_bandwidth_hz: other.pll_bandwidth_hz,
            share_pll: other.share_pll,
            ..Self::none()
        }
    }

    fn phase_noise(&self, dbc: Option<f64>) -> PhaseNoiseConfig {
        match dbc {
            Some(d) if d.is_finite() => PhaseNoiseConfig::pll_single_pole(self.pll_bandwidth_hz, d),
            _ => PhaseNoiseConfig::none(),
        }
    }

    fn noise(&self) -> NoiseConfig {
        NoiseConfig {
            gaussian: if self.gaussian_noise {
                GaussianNoiseModel::Table(NoiseTable::ni5791())
            } else {
                GaussianNoiseModel::Off
            },
            adc: self.adc_bits.map(AdcConfig::bits),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.pll_bandwidth_hz > 0.0 && self.pll_bandwidth_hz.is_finite()) {
            return Err(Error::config("impairments.pll_bandwidth_hz", "must be positive"));
        }
        for (field, v) in [
            ("impairments.tx_phase_noise_dbc", self.tx_phase_noise_dbc),
            ("impairments.rx_phase_noise_dbc", self.rx_phase_noise_dbc),
            ("impairments.pa_distortion_dbc", self.pa_distortion_dbc),
            ("impairments.lna_distortion_dbc", self.lna_distortion_dbc),
        ] {
            if let Some(v) = v {
                if v.is_nan() || v > 0.0 {
                    return Err(Error::config(field, "must be a level at or below 0 dBc"));
                }
            }
        }
        if let Some(bits) = self.adc_bits {
            AdcConfig::bits(bits)
                .validate()
                .map_err(|_| Error::config("impairments.adc_bits", "must be between 2 and 52"))?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub name: String,
    pub tx_power_dbm: f64,
    pub passive_suppression_db: f64,
    pub rician_factor_db: f64,
    pub profile: ChannelProfile,
    pub doppler_hz: f64,
    /// Channel-training and data symbols; the nonlinearity-training symbol
    /// is added automatically when suppression is enabled.
    pub frame: FrameStructure,
    pub impairments: Impairments,
    pub channel_knowledge: ChannelKnowledge,
    pub nonlinearity_suppression: bool,
    pub alpha3_estimator: Alpha3Estimator,
    /// The receiver coefficient is re-estimated once every this many frames.
    pub alpha3_refresh_frames: usize,
    pub aux_input_dbm: f64,
}

/// Training overhead used by the built-in scenarios.
pub const DEFAULT_TRAINING_OVERHEAD: f64 = 0.04;
pub const DEFAULT_TRAINING_SYMBOLS: usize = 2;

impl ScenarioConfig {
    /// Scenario with typical hardware, TGn-D at 5 Hz, 2 training symbols
    /// per 50 data symbols and estimated channel with distortion suppression.
    pub fn new(name: &str, tx_power_dbm: f64, passive_suppression_db: f64, rician_factor_db: f64) -> Self {
        Self {
            name: name.to_string(),
            tx_power_dbm,
            passive_suppression_db,
            rician_factor_db,
            profile: ChannelProfile::TgnD,
            doppler_hz: 5.0,
            frame: FrameStructure::with_overhead(DEFAULT_TRAINING_SYMBOLS, DEFAULT_TRAINING_OVERHEAD)
                .expect("positive overhead"),
            impairments: Impairments::typical(),
            channel_knowledge: ChannelKnowledge::Estimated,
            nonlinearity_suppression: true,
            alpha3_estimator: Alpha3Estimator::RatioMean,
            alpha3_refresh_frames: 10,
            aux_input_dbm: -25.0,
        }
    }

    /// Omni-directional antennas: 25 dB passive suppression, K = 20 dB.
    pub fn scenario1(tx_power_dbm: f64) -> Self {
        Self::new("scenario1", tx_power_dbm, 25.0, 20.0)
    }

    /// Directional antennas with absorber: 45 dB, K = 0 dB.
    pub fn scenario2(tx_power_dbm: f64) -> Self {
        Self::new("scenario2", tx_power_dbm, 45.0, 0.0)
    }

    /// Reconfigurable directional antennas: 60 dB, K = 0 dB.
    pub fn scenario3(tx_power_dbm: f64) -> Self {
        Self::new("scenario3", tx_power_dbm, 60.0, 0.0)
    }

    /// Built-in scenario by name (`scenario1`, `s1`, `1`, ...).
    pub fn builtin(name: &str, tx_power_dbm: f64) -> Result<Self> {
        match name
            .to_ascii_lowercase()
            .trim_start_matches("scenario")
            .trim_start_matches('s')
        {
            "1" => Ok(Self::scenario1(tx_power_dbm)),
            "2" => Ok(Self::scenario2(tx_power_dbm)),
            "3" => Ok(Self::scenario3(tx_power_dbm)),
            _ => Err(Error::config("scenario", format!("unknown scenario `{name}`"))),
        }
    }

    pub fn builtins(tx_power_dbm: f64) -> [Self; 3] {
        [
            Self::scenario1(tx_power_dbm),
            Self::scenario2(tx_power_dbm),
            Self::scenario3(tx_power_dbm),
        ]
    }

    /// Nominal SI power at the ordinary receiver input.
    pub fn si_input_dbm(&self) -> f64 {
        self.tx_power_dbm - self.passive_suppression_db
    }

    /// Frame layout including the nonlinearity-training symbol if used.
    pub fn frame_structure(&self) -> FrameStructure {
        self.frame.with_nonlinearity_training(self.nonlinearity_suppression)
    }

    /// Channel-training symbols per data symbol, with the nonlinearity
    /// training amortized over its refresh period.
    pub fn training_overhead(&self) -> f64 {
        let nl = if self.nonlinearity_suppression {
            1.0 / self.alpha3_refresh_frames as f64
        } else {
            0.0
        };
        (self.frame.n_training_symbols as f64 + nl) / self.frame.n_data_symbols as f64
    }

    pub fn channel_config(&self) -> ChannelModelConfig {
        let params = OfdmParams::default();
        let mut cfg = ChannelModelConfig::new(
            self.profile,
            self.rician_factor_db,
            -self.passive_suppression_db,
            self.doppler_hz,
        );
        cfg.symbol_duration_s = params.symbol_duration_s();
        cfg
    }

    pub fn transceiver_config(&self) -> TransceiverConfig {
        let imp = &self.impairments;
        let amp = |dbc: Option<f64>, reference_power_dbm: f64| match dbc {
            Some(d) if d.is_finite() => AmplifierModel::Calibrated {
                distortion_dbc: d,
                reference_power_dbm,
            },
            _ => AmplifierModel::Linear,
        };
        TransceiverConfig {
            ofdm: OfdmParams::default(),
            tx_power_dbm: self.tx_power_dbm,
            tx_amplifier: amp(imp.pa_distortion_dbc, self.tx_power_dbm),
            tx_phase_noise: imp.phase_noise(imp.tx_phase_noise_dbc),
            rx_phase_noise: imp.phase_noise(imp.rx_phase_noise_dbc),
            rx_lna: amp(imp.lna_distortion_dbc, self.si_input_dbm()),
            aux_noise: imp.noise(),
            ord_noise: imp.noise(),
            share_pll: imp.share_pll,
            aux_input_dbm: self.aux_input_dbm,
        }
    }

    /// Copy with different impairments and Doppler, used for decomposition.
    pub fn variant(&self, impairments: Impairments, doppler_hz: f64) -> Self {
        Self {
            impairments,
            doppler_hz,
            ..self.clone()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.name.is_empty() {
            return Err(Error::config("name", "must not be empty"));
        }
        if !self.tx_power_dbm.is_finite() {
            return Err(Error::config("tx_power_dbm", "must be finite"));
        }
        if !(self.passive_suppression_db.is_finite() && self.passive_suppression_db >= 0.0) {
            return Err(Error::config("passive_suppression_db", "must be a non-negative number"));
        }
        if !(self.doppler_hz >= 0.0 && self.doppler_hz.is_finite()) {
            return Err(Error::config("doppler_hz", "must be non-negative"));
        }
        if !self.aux_input_dbm.is_finite() {
            return Err(Error::config("aux_input_dbm", "must be finite"));
        }
        if self.alpha3_refresh_frames == 0 {
            return Err(Error::config("alpha3_refresh_frames", "must be at least 1"));
        }
        self.frame.validate()?;
        self.impairments.validate()?;
        self.channel_config().validate()
    }
}
