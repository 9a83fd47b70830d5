//! Full-duplex transceiver: transmitter, auxiliary receive chain and
//! ordinary receive chain.
//!
//! The transmitter rotates the OFDM waveform by its oscillator phase noise
//! and passes it through the PA. The auxiliary chain taps the PA output over
//! a wired path, while the ordinary chain receives it over the wireless
//! channel through the LNA. Both chains then see receiver phase noise,
//! Gaussian noise and quantization; the ordinary chain also carries the
//! signal of interest.

use num_complex::Complex64;

use crate::channel::{apply_channel, AuxChannel, ChannelRealization};
use crate::error::{Error, Result};
use crate::impairments::noise::complex_gaussian;
use crate::impairments::{
    apply_nonlinearity, calibrate_alpha3, quantize, NoiseConfig, NonlinearityConfig, PhaseNoiseConfig,
    PhaseNoiseProcess,
};
use crate::ofdm::{ofdm_demodulate, ofdm_modulate, OfdmGrid, OfdmParams, SymbolKind};
use crate::rng::{rng_from_seed, Stream, TrialSeeds};
use crate::signal::{db_to_linear, linear_to_db, ComplexSignal};

/// Seed of the fixed waveform used to calibrate amplifier distortion.
const REFERENCE_SEED: u64 = 0x005E_ED0F_D15C;
const REFERENCE_SYMBOLS: usize = 256;

/// How an amplifier's polynomial is specified.
#[derive(Debug, Clone, PartialEq)]
pub enum AmplifierModel {
    Linear,
    Polynomial(NonlinearityConfig),
    /// Third-order term sized so that distortion sits `distortion_dbc` below
    /// the linear output for an OFDM input of `reference_power_dbm`.
    Calibrated {
        distortion_dbc: f64,
        reference_power_dbm: f64,
    },
}

impl AmplifierModel {
    pub fn resolve(&self, params: &OfdmParams) -> Result<NonlinearityConfig> {
        let cfg = match self {
            AmplifierModel::Linear => NonlinearityConfig::linear(),
            AmplifierModel::Polynomial(c) => c.clone(),
            AmplifierModel::Calibrated {
                distortion_dbc,
                reference_power_dbm,
            } => {
                let reference = reference_waveform(params, *reference_power_dbm)?;
                NonlinearityConfig::third_order(calibrate_alpha3(&reference, *distortion_dbc)?)
            }
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

/// Fixed random QPSK OFDM waveform at the requested power.
pub fn reference_waveform(params: &OfdmParams, power_dbm: f64) -> Result<ComplexSignal> {
    let mut rng = rng_from_seed(REFERENCE_SEED);
    let grid = OfdmGrid::random_qpsk(*params, vec![SymbolKind::Data; REFERENCE_SYMBOLS], &mut rng);
    let sig = ofdm_modulate(&grid)?;
    let gain = (db_to_linear(power_dbm) / sig.power()).sqrt();
    Ok(sig.scaled(Complex64::new(gain, 0.0)))
}

#[derive(Debug, Clone, PartialEq)]
pub struct TransceiverConfig {
    pub ofdm: OfdmParams,
    pub tx_power_dbm: f64,
    pub tx_amplifier: AmplifierModel,
    pub tx_phase_noise: PhaseNoiseConfig,
    pub rx_phase_noise: PhaseNoiseConfig,
    pub rx_lna: AmplifierModel,
    pub aux_noise: NoiseConfig,
    pub ord_noise: NoiseConfig,
    /// One receiver oscillator drives both chains.
    pub share_pll: bool,
    /// Power at the auxiliary receiver input, set by the splitter.
    pub aux_input_dbm: f64,
}

impl TransceiverConfig {
    /// Every impairment disabled.
    pub fn ideal(tx_power_dbm: f64) -> Self {
        Self {
            ofdm: OfdmParams::default(),
            tx_power_dbm,
            tx_amplifier: AmplifierModel::Linear,
            tx_phase_noise: PhaseNoiseConfig::none(),
            rx_phase_noise: PhaseNoiseConfig::none(),
            rx_lna: AmplifierModel::Linear,
            aux_noise: NoiseConfig::noiseless(),
            ord_noise: NoiseConfig::noiseless(),
            share_pll: true,
            aux_input_dbm: -25.0,
        }
    }

    /// Default hardware: -45 dBc PA and LNA distortion at their operating
    /// points, -40 dBc PLL phase noise per oscillator, NI5791 noise and a
    /// 14-bit ADC on both chains. `lna_input_dbm` is the nominal SI power at
    /// the ordinary receiver input.
    pub fn typical(tx_power_dbm: f64, lna_input_dbm: f64) -> Self {
        let pll = PhaseNoiseConfig::pll_single_pole(100e3, -40.0);
        Self {
            ofdm: OfdmParams::default(),
            tx_power_dbm,
            tx_amplifier: AmplifierModel::Calibrated {
                distortion_dbc: -45.0,
                reference_power_dbm: tx_power_dbm,
            },
            tx_phase_noise: pll.clone(),
            rx_phase_noise: pll,
            rx_lna: AmplifierModel::Calibrated {
                distortion_dbc: -45.0,
                reference_power_dbm: lna_input_dbm,
            },
            aux_noise: NoiseConfig::ni5791(),
            ord_noise: NoiseConfig::ni5791(),
            share_pll: true,
            aux_input_dbm: -25.0,
        }
    }

    pub fn aux_channel(&self) -> AuxChannel {
        AuxChannel::for_input_level(self.aux_input_dbm, self.tx_power_dbm)
    }
}

/// Transceiver with calibrated amplifiers and resolved phase-noise
/// processes, ready to run many frames.
#[derive(Debug, Clone)]
pub struct Transceiver {
    cfg: TransceiverConfig,
    tx_nl: NonlinearityConfig,
    lna_nl: NonlinearityConfig,
    tx_pn: PhaseNoiseProcess,
    rx_pn: PhaseNoiseProcess,
}

/// Transmitter output with its components.
#[derive(Debug, Clone)]
pub struct TxOutput {
    /// PA output `y_tx`.
    pub signal: ComplexSignal,
    /// Scaled clean waveform `x`.
    pub clean: ComplexSignal,
    /// `x (e^{j phi_tx} - 1)`.
    pub phase_noise: ComplexSignal,
    /// PA distortion `d_tx`.
    pub distortion: ComplexSignal,
    pub kinds: Vec<SymbolKind>,
}

/// Additive decomposition of the ordinary-chain grid.
#[derive(Debug, Clone)]
pub struct OrdinaryTruth {
    /// Clean transmit waveform through the wireless channel.
    pub si_linear: OfdmGrid,
    /// Transmitter phase-noise term through the channel.
    pub tx_phase_noise: OfdmGrid,
    /// PA distortion through the channel.
    pub tx_distortion: OfdmGrid,
    /// LNA distortion.
    pub rx_distortion: OfdmGrid,
    /// `(g + d_rx)(e^{j phi_rx} - 1)`.
    pub rx_phase_noise: OfdmGrid,
    pub gaussian: OfdmGrid,
    pub quantization: OfdmGrid,
    pub soi: OfdmGrid,
}

impl OrdinaryTruth {
    pub fn terms(&self) -> [&OfdmGrid; 8] {
        [
            &self.si_linear,
            &self.tx_phase_noise,
            &self.tx_distortion,
            &self.rx_distortion,
            &self.rx_phase_noise,
            &self.gaussian,
            &self.quantization,
            &self.soi,
        ]
    }

    pub fn sum(&self) -> Result<OfdmGrid> {
        let t = self.terms();
        let mut acc = t[0].clone();
        for g in &t[1..] {
            acc = acc.add(g)?;
        }
        Ok(acc)
    }
}

/// Additive decomposition of the auxiliary-chain grid.
#[derive(Debug, Clone)]
pub struct AuxiliaryTruth {
    /// PA output through the splitter, rotated by receiver phase noise.
    pub si: OfdmGrid,
    pub gaussian: OfdmGrid,
    pub quantization: OfdmGrid,
}

#[derive(Debug, Clone)]
pub struct ReceptionResult {
    pub y_aux: OfdmGrid,
    pub y_ord: OfdmGrid,
    pub ord_truth: OrdinaryTruth,
    pub aux_truth: AuxiliaryTruth,
    pub phi_rx_aux: Vec<f64>,
    pub phi_rx_ord: Vec<f64>,
    /// Measured input power of each chain (dBm).
    pub aux_input_dbm: f64,
    pub ord_input_dbm: f64,
    /// Gaussian noise power added on each chain (dBm).
    pub aux_noise_dbm: f64,
    pub ord_noise_dbm: f64,
    pub aux_clipped: usize,
    pub ord_clipped: usize,
}

fn rotate(sig: &ComplexSignal, phi: &[f64]) -> ComplexSignal {
    sig.with_samples(
        sig.samples()
            .iter()
            .zip(phi)
            .map(|(s, &p)| s * Complex64::from_polar(1.0, p))
            .collect(),
    )
}

fn rotation_error(sig: &ComplexSignal, phi: &[f64]) -> ComplexSignal {
    sig.with_samples(
        sig.samples()
            .iter()
            .zip(phi)
            .map(|(s, &p)| s * (Complex64::from_polar(1.0, p) - 1.0))
            .collect(),
    )
}

struct ChainOutput {
    signal: ComplexSignal,
    gaussian: ComplexSignal,
    quantization: ComplexSignal,
    noise_dbm: f64,
    input_dbm: f64,
    clipped: usize,
}

/// Adds Gaussian noise for the measured input level, then quantizes.
fn finish_chain(clean: ComplexSignal, input_power_mw: f64, noise: &NoiseConfig, seed: u64) -> Result<ChainOutput> {
    let input_dbm = linear_to_db(input_power_mw);
    let (gaussian, noise_dbm) = match noise.gaussian.noise_power_dbm(input_dbm) {
        Some(dbm) => (
            clean.with_samples(complex_gaussian(clean.len(), db_to_linear(dbm), seed)),
            dbm,
        ),
        None => (
            ComplexSignal::zeros(clean.len(), clean.sample_rate_hz()),
            f64::NEG_INFINITY,
        ),
    };
    let pre_adc = clean.add(&gaussian)?;
    let (signal, clipped) = match &noise.adc {
        Some(adc) => {
            let q = quantize(&pre_adc, adc, 0.0)?;
            (q.signal, q.clipped)
        }
        None => (pre_adc.clone(), 0),
    };
    let quantization = signal.sub(&pre_adc)?;
    Ok(ChainOutput {
        signal,
        gaussian,
        quantization,
        noise_dbm,
        input_dbm,
        clipped,
    })
}

impl Transceiver {
    pub fn new(cfg: TransceiverConfig) -> Result<Self> {
        cfg.ofdm.validate()?;
        let tx_nl = cfg.tx_amplifier.resolve(&cfg.ofdm)?;
        let lna_nl = cfg.rx_lna.resolve(&cfg.ofdm)?;
        let tx_pn = cfg.tx_phase_noise.resolve()?;
        let rx_pn = cfg.rx_phase_noise.resolve()?;
        Ok(Self {
            cfg,
            tx_nl,
            lna_nl,
            tx_pn,
            rx_pn,
        })
    }

    pub fn config(&self) -> &TransceiverConfig {
        &self.cfg
    }

    pub fn tx_nonlinearity(&self) -> &NonlinearityConfig {
        &self.tx_nl
    }

    pub fn lna_nonlinearity(&self) -> &NonlinearityConfig {
        &self.lna_nl
    }

    pub fn params(&self) -> &OfdmParams {
        &self.cfg.ofdm
    }

    pub fn aux_channel(&self) -> AuxChannel {
        self.cfg.aux_channel()
    }

    /// Modulates `grid` at the configured transmit power and applies
    /// transmitter phase noise followed by the PA.
    pub fn transmit(&self, grid: &OfdmGrid, seed: u64) -> Result<TxOutput> {
        if grid.params() != &self.cfg.ofdm {
            return Err(Error::DimensionMismatch(
                "grid numerology differs from transceiver".into(),
            ));
        }
        let unit = ofdm_modulate(grid)?;
        let gain = db_to_linear(self.cfg.tx_power_dbm).sqrt();
        let clean = unit.scaled(Complex64::new(gain, 0.0));
        let phi = self.tx_pn.generate(clean.len(), seed);
        let rotated = rotate(&clean, &phi);
        let pa = apply_nonlinearity(&rotated, &self.tx_nl)?;
        Ok(TxOutput {
            signal: pa.output,
            phase_noise: rotation_error(&clean, &phi),
            clean,
            distortion: pa.distortion,
            kinds: grid.kinds().to_vec(),
        })
    }

    /// Runs both receive chains. `soi` is the signal of interest as it
    /// arrives at the ordinary antenna; `None` means it is silent.
    pub fn receive(
        &self,
        tx: &TxOutput,
        ch_ord: &ChannelRealization,
        ch_aux: &AuxChannel,
        soi: Option<&ComplexSignal>,
        seeds: &TrialSeeds,
        frame: u64,
    ) -> Result<ReceptionResult> {
        let n = tx.signal.len();
        let sym_len = self.cfg.ofdm.symbol_len();
        let demod = |s: &ComplexSignal| ofdm_demodulate(s, &self.cfg.ofdm, &tx.kinds);

        let phi_aux = self.rx_pn.generate(n, seeds.sub_seed(Stream::RxPhaseNoise, frame));
        let phi_ord = if self.cfg.share_pll {
            phi_aux.clone()
        } else {
            self.rx_pn.generate(n, seeds.sub_seed(Stream::RxPhaseNoiseOrd, frame))
        };

        // ordinary chain
        let through = |s: &ComplexSignal| apply_channel(s, ch_ord, sym_len);
        let si_linear = through(&tx.clean)?;
        let tx_pn = through(&tx.phase_noise)?;
        let tx_dist = through(&tx.distortion)?;
        let g = through(&tx.signal)?;
        let lna = apply_nonlinearity(&g, &self.lna_nl)?;
        let rx_pn = rotation_error(&lna.output, &phi_ord);
        let rotated = rotate(&lna.output, &phi_ord);
        let soi_sig = match soi {
            Some(s) if s.len() != n => {
                return Err(Error::LengthMismatch {
                    expected: n,
                    actual: s.len(),
                })
            }
            Some(s) => s.clone(),
            None => ComplexSignal::zeros(n, tx.signal.sample_rate_hz()),
        };
        let ord_input = g.add(&soi_sig)?.power();
        let ord = finish_chain(
            rotated.add(&soi_sig)?,
            ord_input,
            &self.cfg.ord_noise,
            seeds.sub_seed(Stream::OrdNoise, frame),
        )?;

        // auxiliary chain
        let a = ch_aux.apply(&tx.signal);
        let a_rot = rotate(&a, &phi_aux);
        let aux = finish_chain(
            a_rot.clone(),
            a.power(),
            &self.cfg.aux_noise,
            seeds.sub_seed(Stream::AuxNoise, frame),
        )?;

        Ok(ReceptionResult {
            y_aux: demod(&aux.signal)?,
            y_ord: demod(&ord.signal)?,
            ord_truth: OrdinaryTruth {
                si_linear: demod(&si_linear)?,
                tx_phase_noise: demod(&tx_pn)?,
                tx_distortion: demod(&tx_dist)?,
                rx_distortion: demod(&lna.distortion)?,
                rx_phase_noise: demod(&rx_pn)?,
                gaussian: demod(&ord.gaussian)?,
                quantization: demod(&ord.quantization)?,
                soi: demod(&soi_sig)?,
            },
            aux_truth: AuxiliaryTruth {
                si: demod(&a_rot)?,
                gaussian: demod(&aux.gaussian)?,
                quantization: demod(&aux.quantization)?,
            },
            phi_rx_aux: phi_aux,
            phi_rx_ord: phi_ord,
            aux_input_dbm: aux.input_dbm,
            ord_input_dbm: ord.input_dbm,
            aux_noise_dbm: aux.noise_dbm,
            ord_noise_dbm: ord.noise_dbm,
            aux_clipped: aux.clipped,
            ord_clipped: ord.clipped,
        })
    }
}

/// One-shot transmit with a freshly resolved transceiver.
pub fn transmit(grid: &OfdmGrid, cfg: &TransceiverConfig, seed: u64) -> Result<ComplexSignal> {
    Ok(Transceiver::new(cfg.clone())?.transmit(grid, seed)?.signal)
}
