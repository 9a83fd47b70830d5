//! Oscillator phase noise.
//!
//! A free-running oscillator is a Wiener process whose increments have
//! variance `4 pi^2 fc^2 C Ts`. A PLL-locked oscillator is modelled as a
//! Wiener floor plus a sum of independent Ornstein-Uhlenbeck components, which
//! reproduces the autocorrelation
//!
//! ```text
//! E[exp(j dphi(tau))] = exp(-(4 pi^2 fc^2 / 2) (C tau + 2 sum_i w_i (1 - exp(-lambda_i tau))))
//! ```
//!
//! Component `i` is a stationary AR(1) sequence with pole `exp(-lambda_i Ts)`
//! and variance `4 pi^2 fc^2 w_i`. When a target in-band power is configured,
//! all variances are scaled by one common factor so that the mean power of
//! `exp(j phi) - mean` over the integration window matches it.

use std::f64::consts::PI;

use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::rng::rng_from_seed;
use crate::signal::{db_to_linear, linear_to_db, ComplexSignal};

/// Default integration window, in samples, used for in-band power.
pub const DEFAULT_INTEGRATION_WINDOW: usize = 1 << 16;

/// One Ornstein-Uhlenbeck component of a PLL phase-noise spectrum.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PllPole {
    /// Decay rate in 1/s. The Lorentzian 3 dB bandwidth is `lambda / 2 pi`.
    pub lambda: f64,
    /// Weight `mu_i + v_i` in s^2.
    pub weight: f64,
}

impl PllPole {
    pub fn from_3db_bandwidth(f3db_hz: f64, weight: f64) -> Self {
        Self {
            lambda: 2.0 * PI * f3db_hz,
            weight,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum PhaseNoiseModel {
    /// Free-running oscillator with quality parameter `c` (seconds).
    Wiener { c: f64 },
    /// PLL-locked oscillator: Wiener floor `floor_c` plus OU components.
    Pll { floor_c: f64, poles: Vec<PllPole> },
}

#[derive(Debug, Clone, PartialEq)]
pub struct PhaseNoiseConfig {
    pub model: PhaseNoiseModel,
    pub carrier_hz: f64,
    pub sample_interval_s: f64,
    /// Integrated in-band power of `exp(j phi)` in dBc. `None` keeps the
    /// configured parameters unscaled.
    pub target_inband_power_dbc: Option<f64>,
    pub integration_window: usize,
}

/// Oscillator quality parameter from the Lorentzian 3 dB bandwidth.
pub fn wiener_c_from_3db(f3db_hz: f64, carrier_hz: f64) -> f64 {
    f3db_hz / (PI * carrier_hz * carrier_hz)
}

impl PhaseNoiseConfig {
    /// Ideal oscillator.
    pub fn none() -> Self {
        Self {
            model: PhaseNoiseModel::Wiener { c: 0.0 },
            carrier_hz: 2.4e9,
            sample_interval_s: 1.0 / 20e6,
            target_inband_power_dbc: None,
            integration_window: DEFAULT_INTEGRATION_WINDOW,
        }
    }

    pub fn wiener(c: f64, carrier_hz: f64, sample_interval_s: f64) -> Self {
        Self {
            model: PhaseNoiseModel::Wiener { c },
            carrier_hz,
            sample_interval_s,
            target_inband_power_dbc: None,
            integration_window: DEFAULT_INTEGRATION_WINDOW,
        }
    }

    /// Single-pole PLL spectrum calibrated to `target_dbc`.
    pub fn pll_single_pole(f3db_hz: f64, target_dbc: f64) -> Self {
        Self {
            model: PhaseNoiseModel::Pll {
                floor_c: 0.0,
                poles: vec![PllPole::from_3db_bandwidth(f3db_hz, 1e-22)],
            },
            carrier_hz: 2.4e9,
            sample_interval_s: 1.0 / 20e6,
            target_inband_power_dbc: Some(target_dbc),
            integration_window: DEFAULT_INTEGRATION_WINDOW,
        }
    }

    pub fn is_ideal(&self) -> bool {
        match &self.model {
            PhaseNoiseModel::Wiener { c } => *c == 0.0,
            PhaseNoiseModel::Pll { .. } => false,
        }
    }

    fn validate(&self) -> Result<()> {
        if !(self.carrier_hz > 0.0) {
            return Err(Error::config("phase_noise.carrier_hz", "must be positive"));
        }
        if !(self.sample_interval_s > 0.0) {
            return Err(Error::config("phase_noise.sample_interval_s", "must be positive"));
        }
        match &self.model {
            PhaseNoiseModel::Wiener { c } => {
                if !(*c >= 0.0) {
                    return Err(Error::config("phase_noise.c", "must be non-negative"));
                }
            }
            PhaseNoiseModel::Pll { floor_c, poles } => {
                if poles.is_empty() {
                    return Err(Error::config("phase_noise.pll_spectrum", "must not be empty"));
                }
                if !(*floor_c >= 0.0) {
                    return Err(Error::config("phase_noise.floor_c", "must be non-negative"));
                }
                for p in poles {
                    if !(p.lambda > 0.0) || !(p.weight > 0.0) {
                        return Err(Error::config(
                            "phase_noise.pll_spectrum",
                            "poles and weights must be positive",
                        ));
                    }
                }
            }
        }
        if self.integration_window < 2 {
            return Err(Error::config("phase_noise.integration_window", "must be at least 2"));
        }
        Ok(())
    }

    /// Resolves the configuration into sampling parameters, applying the
    /// in-band power calibration if requested.
    pub fn resolve(&self) -> Result<PhaseNoiseProcess> {
        self.validate()?;
        let k = 4.0 * PI * PI * self.carrier_hz * self.carrier_hz;
        let ts = self.sample_interval_s;
        let (floor_c, poles): (f64, &[PllPole]) = match &self.model {
            PhaseNoiseModel::Wiener { c } => (*c, &[]),
            PhaseNoiseModel::Pll { floor_c, poles } => (*floor_c, poles),
        };
        let mut process = PhaseNoiseProcess {
            increment_var: k * floor_c * ts,
            components: poles
                .iter()
                .map(|p| OuComponent {
                    pole: (-p.lambda * ts).exp(),
                    variance: k * p.weight,
                })
                .collect(),
            window: self.integration_window,
        };
        if let Some(target) = self.target_inband_power_dbc {
            if process.is_ideal() {
                return Err(Error::config(
                    "phase_noise.target_inband_power_dbc",
                    "cannot calibrate an ideal oscillator",
                ));
            }
            let target_lin = db_to_linear(target);
            if !(target_lin > 0.0 && target_lin < 1.0) {
                return Err(Error::config(
                    "phase_noise.target_inband_power_dbc",
                    "must be below 0 dBc",
                ));
            }
            let scale = process.calibration_scale(target_lin);
            process = process.scaled(scale);
        }
        Ok(process)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct OuComponent {
    pole: f64,
    variance: f64,
}

/// Resolved phase-noise generator.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseNoiseProcess {
    increment_var: f64,
    components: Vec<OuComponent>,
    window: usize,
}

impl PhaseNoiseProcess {
    pub fn ideal() -> Self {
        Self {
            increment_var: 0.0,
            components: Vec::new(),
            window: DEFAULT_INTEGRATION_WINDOW,
        }
    }

    pub fn is_ideal(&self) -> bool {
        self.increment_var == 0.0 && self.components.iter().all(|c| c.variance == 0.0)
    }

    /// Variance of the per-sample Wiener increment.
    pub fn increment_variance(&self) -> f64 {
        self.increment_var
    }

    /// Stationary variance of the OU part.
    pub fn stationary_variance(&self) -> f64 {
        self.components.iter().map(|c| c.variance).sum()
    }

    /// `Var(phi(n + lag) - phi(n))`.
    pub fn structure_function(&self, lag: usize) -> f64 {
        let l = lag as f64;
        self.increment_var * l
            + self
                .components
                .iter()
                .map(|c| 2.0 * c.variance * (1.0 - c.pole.powf(l)))
                .sum::<f64>()
    }

    /// Expected power of `exp(j phi) - window mean` over the integration
    /// window, as a linear ratio to the carrier.
    pub fn inband_power(&self) -> f64 {
        self.windowed_power(1.0)
    }

    pub fn inband_power_dbc(&self) -> f64 {
        linear_to_db(self.inband_power())
    }

    fn windowed_power(&self, scale: f64) -> f64 {
        let w = self.window as f64;
        let mut acc = w;
        for d in 1..self.window {
            let rho = (-0.5 * scale * self.structure_function(d)).exp();
            acc += 2.0 * (w - d as f64) * rho;
        }
        1.0 - acc / (w * w)
    }

    fn calibration_scale(&self, target: f64) -> f64 {
        // windowed power is monotone in the common scale
        let (mut lo, mut hi) = (-80.0f64, 80.0f64);
        for _ in 0..120 {
            let mid = 0.5 * (lo + hi);
            if self.windowed_power(mid.exp()) < target {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        (0.5 * (lo + hi)).exp()
    }

    fn scaled(&self, scale: f64) -> Self {
        Self {
            increment_var: self.increment_var * scale,
            components: self
                .components
                .iter()
                .map(|c| OuComponent {
                    pole: c.pole,
                    variance: c.variance * scale,
                })
                .collect(),
            window: self.window,
        }
    }

    /// Draws `n` phase samples (radians). The Wiener part starts at zero,
    /// OU components start from their stationary distribution.
    pub fn generate(&self, n: usize, seed: u64) -> Vec<f64> {
        let mut rng = rng_from_seed(seed);
        let mut phi = vec![0.0; n];
        if self.is_ideal() || n == 0 {
            return phi;
        }
        if self.increment_var > 0.0 {
            let sd = self.increment_var.sqrt();
            let mut acc = 0.0;
            for v in phi.iter_mut().skip(1) {
                let e: f64 = rng.sample(StandardNormal);
                acc += sd * e;
                *v = acc;
            }
        }
        for c in &self.components {
            let init: f64 = rng.sample(StandardNormal);
            let mut state = c.variance.sqrt() * init;
            let drive = (c.variance * (1.0 - c.pole * c.pole)).sqrt();
            phi[0] += state;
            for v in phi.iter_mut().skip(1) {
                let e: f64 = rng.sample(StandardNormal);
                state = c.pole * state + drive * e;
                *v += state;
            }
        }
        phi
    }
}

/// Generates `n` phase-noise samples for `cfg` using `seed`.
pub fn gen_phase_noise(n: usize, cfg: &PhaseNoiseConfig, seed: u64) -> Result<Vec<f64>> {
    if n == 0 {
        return Err(Error::Empty("phase noise length"));
    }
    Ok(cfg.resolve()?.generate(n, seed))
}

/// Rotates each sample by `exp(j phi_n)`.
pub fn apply_phase_noise(sig: &ComplexSignal, phi: &[f64]) -> Result<ComplexSignal> {
    if sig.len() != phi.len() {
        return Err(Error::LengthMismatch {
            expected: sig.len(),
            actual: phi.len(),
        });
    }
    Ok(sig.with_samples(
        sig.samples()
            .iter()
            .zip(phi)
            .map(|(s, &p)| s * num_complex::Complex64::from_polar(1.0, p))
            .collect(),
    ))
}

/// Measured power of `exp(j phi) - mean`, as a linear ratio.
pub fn measured_inband_power(phi: &[f64]) -> f64 {
    let n = phi.len() as f64;
    let rot: Vec<num_complex::Complex64> = phi
        .iter()
        .map(|&p| num_complex::Complex64::from_polar(1.0, p))
        .collect();
    let mean = rot.iter().sum::<num_complex::Complex64>() / n;
    rot.iter().map(|r| (r - mean).norm_sqr()).sum::<f64>() / n
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex64;

    #[test]
    fn ideal_oscillator_is_constant() {
        let phi = gen_phase_noise(1000, &PhaseNoiseConfig::none(), 1).unwrap();
        assert!(phi.iter().all(|&p| p == phi[0]));
    }

    #[test]
    fn wiener_increment_variance_matches_formula() {
        let fc = 2.4e9;
        let ts = 1.0 / 20e6;
        let c = wiener_c_from_3db(100.0, fc);
        let cfg = PhaseNoiseConfig::wiener(c, fc, ts);
        let phi = gen_phase_noise(1_000_000, &cfg, 9).unwrap();
        let inc: Vec<f64> = phi.windows(2).map(|w| w[1] - w[0]).collect();
        let mean = inc.iter().sum::<f64>() / inc.len() as f64;
        let var = inc.iter().map(|d| (d - mean).powi(2)).sum::<f64>() / inc.len() as f64;
        let expected = 4.0 * PI * PI * fc * fc * c * ts;
        assert!((var / expected - 1.0).abs() < 0.02, "{var} vs {expected}");
    }

    #[test]
    fn pll_calibrated_to_minus_40_dbc() {
        let cfg = PhaseNoiseConfig::pll_single_pole(100e3, -40.0);
        let process = cfg.resolve().unwrap();
        assert!((process.inband_power_dbc() + 40.0).abs() < 1e-6);
        let phi = process.generate(1_000_000, 4);
        let measured = linear_to_db(measured_inband_power(&phi));
        assert!((measured + 40.0).abs() < 0.5, "{measured}");
    }

    #[test]
    fn pll_autocorrelation_matches_closed_form() {
        let cfg = PhaseNoiseConfig::pll_single_pole(100e3, -20.0);
        let process = cfg.resolve().unwrap();
        let n = 400_000;
        let phi = process.generate(n, 5);
        for lag in [1usize, 8, 32, 128] {
            let emp = (0..n - lag)
                .map(|i| Complex64::from_polar(1.0, phi[i + lag] - phi[i]))
                .sum::<Complex64>()
                / (n - lag) as f64;
            let theory = (-0.5 * process.structure_function(lag)).exp();
            assert!((emp.re - theory).abs() < 2e-3, "lag {lag}: {} vs {theory}", emp.re);
            assert!(emp.im.abs() < 2e-3);
        }
    }

    #[test]
    fn wiener_can_be_calibrated_too() {
        let mut cfg = PhaseNoiseConfig::wiener(1e-19, 2.4e9, 5e-8);
        cfg.target_inband_power_dbc = Some(-35.0);
        let p = cfg.resolve().unwrap();
        assert!((p.inband_power_dbc() + 35.0).abs() < 1e-6);
    }

    #[test]
    fn deterministic_and_seed_independent() {
        let process = PhaseNoiseConfig::pll_single_pole(100e3, -40.0).resolve().unwrap();
        let a = process.generate(1_000_000, 1);
        assert_eq!(a, process.generate(1_000_000, 1));
        let b = process.generate(1_000_000, 2);
        let (ma, mb) = (
            a.iter().sum::<f64>() / a.len() as f64,
            b.iter().sum::<f64>() / b.len() as f64,
        );
        let cov: f64 = a.iter().zip(&b).map(|(x, y)| (x - ma) * (y - mb)).sum::<f64>();
        let va: f64 = a.iter().map(|x| (x - ma).powi(2)).sum();
        let vb: f64 = b.iter().map(|y| (y - mb).powi(2)).sum();
        let rho = cov / (va * vb).sqrt();
        assert!(rho.abs() < 0.01, "{rho}");
    }

    #[test]
    fn invalid_configs_are_rejected() {
        assert!(PhaseNoiseConfig::wiener(-1.0, 2.4e9, 5e-8).resolve().is_err());
        let mut cfg = PhaseNoiseConfig::pll_single_pole(100e3, -40.0);
        cfg.model = PhaseNoiseModel::Pll {
            floor_c: 0.0,
            poles: vec![],
        };
        assert!(cfg.resolve().is_err());
        assert!(gen_phase_noise(0, &PhaseNoiseConfig::none(), 0).is_err());
    }

    #[test]
    fn phase_rotation_cases() {
        let sig = ComplexSignal::from_samples(vec![
            Complex64::new(1.0, 2.0),
            Complex64::new(-0.5, 0.1),
            Complex64::new(0.0, -3.0),
        ]);
        assert_eq!(apply_phase_noise(&sig, &[0.0; 3]).unwrap(), sig);
        let neg = apply_phase_noise(&sig, &[PI; 3]).unwrap();
        for (a, b) in neg.samples().iter().zip(sig.samples()) {
            assert!((a + b).norm() < 1e-12);
        }
        let rot = apply_phase_noise(&sig, &[0.3, -2.0, 5.0]).unwrap();
        for (a, b) in rot.samples().iter().zip(sig.samples()) {
            assert!((a.norm() - b.norm()).abs() < 1e-12);
        }
        assert!(apply_phase_noise(&sig, &[0.0; 2]).is_err());
    }
}
