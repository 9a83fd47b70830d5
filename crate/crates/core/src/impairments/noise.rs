//! Receiver Gaussian noise driven by the input power level.

use rand::Rng;
use rand_distr::StandardNormal;

use super::adc::AdcConfig;
use crate::error::{Error, Result};
use crate::rng::rng_from_seed;
use crate::signal::{db_to_linear, linear_to_db, ComplexSignal};

/// Thermal noise density at room temperature.
pub const THERMAL_NOISE_DBM_PER_HZ: f64 = -174.0;

/// Piecewise-linear map from receiver input power (dBm) to total in-band
/// Gaussian noise power (dBm), interpolated in dB.
#[derive(Debug, Clone, PartialEq)]
pub struct NoiseTable {
    points: Vec<(f64, f64)>,
}

impl NoiseTable {
    /// Points must have strictly increasing input power and
    /// non-decreasing noise power.
    pub fn new(points: Vec<(f64, f64)>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::config("noise.table", "must not be empty"));
        }
        for w in points.windows(2) {
            if !(w[1].0 > w[0].0) {
                return Err(Error::config("noise.table", "input powers must be strictly increasing"));
            }
            if w[1].1 < w[0].1 {
                return Err(Error::config("noise.table", "noise power must be non-decreasing"));
            }
        }
        if points.iter().any(|(a, b)| !a.is_finite() || !b.is_finite()) {
            return Err(Error::config("noise.table", "entries must be finite"));
        }
        Ok(Self { points })
    }

    /// Constant noise power at every input level.
    pub fn constant(noise_dbm: f64) -> Self {
        Self {
            points: vec![(0.0, noise_dbm)],
        }
    }

    /// Total noise of an NI5791-class receiver over 20 MHz. The gain
    /// schedule keeps the floor at -90 dBm up to -25 dBm input and backs
    /// off by 0.9 dB per dB of input above that.
    pub fn ni5791() -> Self {
        Self {
            points: vec![(-100.0, -90.0), (-25.0, -90.0), (-5.0, -72.0), (15.0, -54.0)],
        }
    }

    pub fn points(&self) -> &[(f64, f64)] {
        &self.points
    }

    /// Interpolated noise power. Inputs outside the table are clamped to the
    /// nearest end point with a warning.
    pub fn noise_power_dbm(&self, input_power_dbm: f64) -> f64 {
        let pts = &self.points;
        let (first, last) = (pts[0], pts[pts.len() - 1]);
        if pts.len() == 1 {
            return first.1;
        }
        if input_power_dbm <= first.0 {
            if input_power_dbm < first.0 {
                log::warn!("input power {input_power_dbm:.1} dBm below noise table, clamping");
            }
            return first.1;
        }
        if input_power_dbm >= last.0 {
            if input_power_dbm > last.0 {
                log::warn!("input power {input_power_dbm:.1} dBm above noise table, clamping");
            }
            return last.1;
        }
        let i = pts.partition_point(|p| p.0 <= input_power_dbm);
        let (a, b) = (pts[i - 1], pts[i]);
        let t = (input_power_dbm - a.0) / (b.0 - a.0);
        a.1 + t * (b.1 - a.1)
    }
}

/// Cascaded noise-figure model: `F = F_lna + sum_l (F_l - 1) / G_lna`.
#[derive(Debug, Clone, PartialEq)]
pub struct NoiseFigureModel {
    pub lna_noise_figure_db: f64,
    /// Noise figures of the blocks after the LNA.
    pub stage_noise_figures_db: Vec<f64>,
    pub lna_gain_db: f64,
    pub bandwidth_hz: f64,
}

impl NoiseFigureModel {
    pub fn noise_figure_db(&self) -> f64 {
        let g = db_to_linear(self.lna_gain_db);
        let f = db_to_linear(self.lna_noise_figure_db)
            + self
                .stage_noise_figures_db
                .iter()
                .map(|&n| (db_to_linear(n) - 1.0) / g)
                .sum::<f64>();
        linear_to_db(f)
    }

    pub fn noise_power_dbm(&self) -> f64 {
        THERMAL_NOISE_DBM_PER_HZ + linear_to_db(self.bandwidth_hz) + self.noise_figure_db()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum GaussianNoiseModel {
    Off,
    Table(NoiseTable),
    Analytic(NoiseFigureModel),
}

impl GaussianNoiseModel {
    /// Noise power for the given input level, or `None` when disabled.
    pub fn noise_power_dbm(&self, input_power_dbm: f64) -> Option<f64> {
        match self {
            GaussianNoiseModel::Off => None,
            GaussianNoiseModel::Table(t) => Some(t.noise_power_dbm(input_power_dbm)),
            GaussianNoiseModel::Analytic(m) => Some(m.noise_power_dbm()),
        }
    }
}

/// Noise configuration of one receiver chain.
#[derive(Debug, Clone, PartialEq)]
pub struct NoiseConfig {
    pub gaussian: GaussianNoiseModel,
    /// `None` disables quantization.
    pub adc: Option<AdcConfig>,
}

impl NoiseConfig {
    pub fn noiseless() -> Self {
        Self {
            gaussian: GaussianNoiseModel::Off,
            adc: None,
        }
    }

    /// NI5791 noise table with a 14-bit converter.
    pub fn ni5791() -> Self {
        Self {
            gaussian: GaussianNoiseModel::Table(NoiseTable::ni5791()),
            adc: Some(AdcConfig::bits(14)),
        }
    }
}

/// Draws `n` samples of circularly-symmetric complex Gaussian noise with the
/// given total power (mW).
pub fn complex_gaussian(n: usize, power_mw: f64, seed: u64) -> Vec<num_complex::Complex64> {
    let mut rng = rng_from_seed(seed);
    let sd = (power_mw / 2.0).sqrt();
    (0..n)
        .map(|_| {
            let re: f64 = rng.sample(StandardNormal);
            let im: f64 = rng.sample(StandardNormal);
            num_complex::Complex64::new(sd * re, sd * im)
        })
        .collect()
}

/// Adds Gaussian noise at the level the chain produces for
/// `input_power_dbm`. Returns the noisy signal and the noise power used; a
/// disabled model returns the input unchanged and negative infinity.
pub fn add_gaussian_noise(
    sig: &ComplexSignal,
    cfg: &NoiseConfig,
    input_power_dbm: f64,
    seed: u64,
) -> Result<(ComplexSignal, f64)> {
    let Some(noise_dbm) = cfg.gaussian.noise_power_dbm(input_power_dbm) else {
        return Ok((sig.clone(), f64::NEG_INFINITY));
    };
    let noise = complex_gaussian(sig.len(), db_to_linear(noise_dbm), seed);
    let out = sig.samples().iter().zip(&noise).map(|(s, z)| s + z).collect();
    Ok((sig.with_samples(out), noise_dbm))
}
