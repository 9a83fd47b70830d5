//! Time-domain complex baseband signals and power bookkeeping.
//!
//! Sample amplitudes are expressed in square-root milliwatts, so the mean
//! squared magnitude of a signal is its power in mW. Measuring with a
//! reference offset of 0 dBm therefore yields absolute dBm.

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Default baseband sample rate (20 MHz).
pub const DEFAULT_SAMPLE_RATE_HZ: f64 = 20e6;

/// Converts a power ratio in dB to linear scale.
#[inline]
pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

/// Converts a linear power ratio to dB. Zero maps to negative infinity.
#[inline]
pub fn linear_to_db(lin: f64) -> f64 {
    10.0 * lin.log10()
}

/// Converts dBm to milliwatts.
#[inline]
pub fn dbm_to_mw(dbm: f64) -> f64 {
    db_to_linear(dbm)
}

/// Converts milliwatts to dBm.
#[inline]
pub fn mw_to_dbm(mw: f64) -> f64 {
    linear_to_db(mw)
}

/// Power sum of several dBm levels.
pub fn dbm_sum(levels: &[f64]) -> f64 {
    mw_to_dbm(levels.iter().map(|&l| dbm_to_mw(l)).sum())
}

/// Mean squared magnitude of a slice. Empty slices have zero power.
pub fn mean_power(samples: &[Complex64]) -> f64 {
    if samples.is_empty() {
        return 0.0;
    }
    samples.iter().map(|s| s.norm_sqr()).sum::<f64>() / samples.len() as f64
}

/// A sequence of complex baseband samples with its sample rate.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexSignal {
    samples: Vec<Complex64>,
    sample_rate_hz: f64,
}

impl ComplexSignal {
    pub fn new(samples: Vec<Complex64>, sample_rate_hz: f64) -> Result<Self> {
        if !(sample_rate_hz > 0.0 && sample_rate_hz.is_finite()) {
            return Err(Error::config(
                "sample_rate_hz",
                format!("must be positive and finite, got {sample_rate_hz}"),
            ));
        }
        Ok(Self {
            samples,
            sample_rate_hz,
        })
    }

    /// Builds a signal at the default 20 MHz rate.
    pub fn from_samples(samples: Vec<Complex64>) -> Self {
        Self {
            samples,
            sample_rate_hz: DEFAULT_SAMPLE_RATE_HZ,
        }
    }

    pub fn zeros(len: usize, sample_rate_hz: f64) -> Self {
        Self {
            samples: vec![Complex64::new(0.0, 0.0); len],
            sample_rate_hz,
        }
    }

    pub fn samples(&self) -> &[Complex64] {
        &self.samples
    }

    pub fn samples_mut(&mut self) -> &mut [Complex64] {
        &mut self.samples
    }

    pub fn into_samples(self) -> Vec<Complex64> {
        self.samples
    }

    pub fn sample_rate_hz(&self) -> f64 {
        self.sample_rate_hz
    }

    pub fn sample_interval_s(&self) -> f64 {
        1.0 / self.sample_rate_hz
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Mean squared magnitude.
    pub fn power(&self) -> f64 {
        mean_power(&self.samples)
    }

    /// Returns a copy with the same sample rate and new samples.
    pub fn with_samples(&self, samples: Vec<Complex64>) -> Self {
        Self {
            samples,
            sample_rate_hz: self.sample_rate_hz,
        }
    }

    pub fn scaled(&self, gain: Complex64) -> Self {
        self.with_samples(self.samples.iter().map(|s| s * gain).collect())
    }

    /// Element-wise sum. Both signals must have the same length.
    pub fn add(&self, other: &ComplexSignal) -> Result<Self> {
        if self.len() != other.len() {
            return Err(Error::LengthMismatch {
                expected: self.len(),
                actual: other.len(),
            });
        }
        Ok(self.with_samples(self.samples.iter().zip(&other.samples).map(|(a, b)| a + b).collect()))
    }

    /// Element-wise difference `self - other`.
    pub fn sub(&self, other: &ComplexSignal) -> Result<Self> {
        if self.len() != other.len() {
            return Err(Error::LengthMismatch {
                expected: self.len(),
                actual: other.len(),
            });
        }
        Ok(self.with_samples(self.samples.iter().zip(&other.samples).map(|(a, b)| a - b).collect()))
    }
}

/// Power of `sig` in dBm, where unit mean power corresponds to
/// `ref_dbm_at_unit_power`.
pub fn measure_power_dbm(sig: &ComplexSignal, ref_dbm_at_unit_power: f64) -> Result<f64> {
    if sig.is_empty() {
        return Err(Error::Empty("signal"));
    }
    Ok(linear_to_db(sig.power()) + ref_dbm_at_unit_power)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, StandardNormal};

    #[test]
    fn unit_magnitude_is_zero_dbm() {
        let sig = ComplexSignal::from_samples(vec![Complex64::from_polar(1.0, 0.3); 100]);
        assert!(measure_power_dbm(&sig, 0.0).unwrap().abs() < 1e-12);
    }

    #[test]
    fn tenth_magnitude_is_minus_twenty() {
        let sig = ComplexSignal::from_samples(vec![Complex64::new(0.1, 0.0); 10]);
        assert!((measure_power_dbm(&sig, 0.0).unwrap() + 20.0).abs() < 1e-9);
    }

    #[test]
    fn reference_offset_is_added() {
        let sig = ComplexSignal::from_samples(vec![Complex64::new(1.0, 0.0); 4]);
        assert!((measure_power_dbm(&sig, 20.0).unwrap() - 20.0).abs() < 1e-12);
    }

    #[test]
    fn unit_variance_gaussian_is_zero_dbm() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let samples = (0..1_000_000)
            .map(|_| {
                let re: f64 = StandardNormal.sample(&mut rng);
                let im: f64 = StandardNormal.sample(&mut rng);
                Complex64::new(re * s, im * s)
            })
            .collect();
        let p = measure_power_dbm(&ComplexSignal::from_samples(samples), 0.0).unwrap();
        assert!(p.abs() < 0.1, "{p}");
    }

    #[test]
    fn empty_signal_is_rejected() {
        let sig = ComplexSignal::from_samples(vec![]);
        assert!(matches!(measure_power_dbm(&sig, 0.0), Err(Error::Empty(_))));
    }

    #[test]
    fn non_positive_rate_is_rejected() {
        assert!(ComplexSignal::new(vec![], 0.0).is_err());
        assert!(ComplexSignal::new(vec![], -1.0).is_err());
    }

    #[test]
    fn dbm_sum_of_equal_levels_adds_three_db() {
        assert!((dbm_sum(&[-90.0, -90.0]) + 86.9897).abs() < 1e-3);
    }
}
