//! Uniform mid-rise ADC applied to I and Q separately.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::signal::{db_to_linear, linear_to_db, ComplexSignal};

/// How the converter full scale is chosen.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FullScale {
    /// Full scale set to this percentile (0..=100) of the per-rail peak
    /// amplitude of the block being converted. 100 means no clipping.
    Auto { percentile: f64 },
    /// Fixed full-scale amplitude per rail, in sqrt(mW) after the gain.
    Fixed(f64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdcConfig {
    pub bits: u32,
    pub full_scale: FullScale,
}

impl AdcConfig {
    /// `bits`-bit converter normalized to the block peak.
    pub fn bits(bits: u32) -> Self {
        Self {
            bits,
            full_scale: FullScale::Auto { percentile: 100.0 },
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.bits < 2 {
            return Err(Error::config(
                "adc.bits",
                format!("need at least 2 bits, got {}", self.bits),
            ));
        }
        if self.bits > 52 {
            return Err(Error::config("adc.bits", "more than 52 bits is below f64 resolution"));
        }
        match self.full_scale {
            FullScale::Auto { percentile } if !(percentile > 0.0 && percentile <= 100.0) => {
                Err(Error::config("adc.full_scale_percentile", "must be in (0, 100]"))
            }
            FullScale::Fixed(fs) if !(fs > 0.0 && fs.is_finite()) => {
                Err(Error::config("adc.full_scale", "must be positive"))
            }
            _ => Ok(()),
        }
    }
}

/// Per-rail quantization error variance relative to full scale squared,
/// `1 / (12 * 2^(2m - 2))`.
pub fn quantization_variance(bits: u32) -> f64 {
    1.0 / (12.0 * 4f64.powi(bits as i32 - 1))
}

/// Quantization noise power in dB relative to a full-scale rail.
pub fn quantization_noise_dbfs(bits: u32) -> f64 {
    linear_to_db(quantization_variance(bits))
}

/// Input-referred per-rail quantization noise for a converter with unit
/// full scale behind `lna_gain_db` of gain.
pub fn quantization_noise_input_referred(bits: u32, lna_gain_db: f64) -> f64 {
    quantization_variance(bits) / db_to_linear(lna_gain_db)
}

#[derive(Debug, Clone)]
pub struct QuantizedSignal {
    pub signal: ComplexSignal,
    /// Number of samples with at least one rail beyond full scale.
    pub clipped: usize,
    /// Full scale used, referred to the converter input (after gain).
    pub full_scale: f64,
}

fn percentile_peak(sig: &ComplexSignal, gain: f64, percentile: f64) -> f64 {
    let mut peaks: Vec<f64> = sig
        .samples()
        .iter()
        .map(|s| s.re.abs().max(s.im.abs()) * gain)
        .collect();
    if percentile >= 100.0 {
        return peaks.iter().copied().fold(0.0, f64::max);
    }
    let rank = ((percentile / 100.0) * (peaks.len() - 1) as f64).round() as usize;
    let (_, v, _) = peaks.select_nth_unstable_by(rank, f64::total_cmp);
    *v
}

#[inline]
fn quantize_rail(x: f64, step: f64, full_scale: f64) -> f64 {
    let top = full_scale - 0.5 * step;
    (step * ((x / step).floor() + 0.5)).clamp(-top, top)
}

/// Quantizes `sig` with `lna_gain_db` of gain in front of the converter.
/// The output is referred back to the converter input by dividing by the
/// gain, so the added error power is `2 * variance * FS^2 / gain`.
pub fn quantize(sig: &ComplexSignal, cfg: &AdcConfig, lna_gain_db: f64) -> Result<QuantizedSignal> {
    cfg.validate()?;
    if sig.is_empty() {
        return Err(Error::Empty("signal"));
    }
    let gain = db_to_linear(lna_gain_db).sqrt();
    let full_scale = match cfg.full_scale {
        FullScale::Fixed(fs) => fs,
        FullScale::Auto { percentile } => percentile_peak(sig, gain, percentile),
    };
    if !(full_scale > 0.0) {
        return Ok(QuantizedSignal {
            signal: sig.clone(),
            clipped: 0,
            full_scale,
        });
    }
    let step = 2.0 * full_scale / 2f64.powi(cfg.bits as i32);
    let mut clipped = 0;
    let out = sig
        .samples()
        .iter()
        .map(|s| {
            let (re, im) = (s.re * gain, s.im * gain);
            if re.abs() > full_scale || im.abs() > full_scale {
                clipped += 1;
            }
            Complex64::new(quantize_rail(re, step, full_scale), quantize_rail(im, step, full_scale)) / gain
        })
        .collect();
    Ok(QuantizedSignal {
        signal: sig.with_samples(out),
        clipped,
        full_scale,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ofdm::{ofdm_modulate, OfdmGrid, OfdmParams, SymbolKind};
    use crate::rng::rng_from_seed;
    use rand::Rng;

    fn ofdm_signal(seed: u64) -> ComplexSignal {
        let mut rng = rng_from_seed(seed);
        let g = OfdmGrid::random_qpsk(OfdmParams::default(), vec![SymbolKind::Data; 2000], &mut rng);
        ofdm_modulate(&g).unwrap()
    }

    fn error_dbfs(sig: &ComplexSignal, q: &QuantizedSignal) -> f64 {
        let err = q.signal.sub(sig).unwrap().power();
        // per-rail error power relative to one full-scale rail
        linear_to_db(err / 2.0 / (q.full_scale * q.full_scale))
    }

    #[test]
    fn closed_form_for_14_bits() {
        assert!((quantization_noise_dbfs(14) + 89.06).abs() < 0.01);
    }

    #[test]
    fn fourteen_bit_ofdm_floor() {
        // QPSK OFDM puts every 16th sample on a coarse lattice that includes
        // exact zeros, which a mid-rise quantizer always misses by half a
        // step. Single blocks wander by tenths of a dB; average over blocks.
        let mut acc = 0.0;
        for seed in 0..16 {
            let sig = ofdm_signal(100 + seed);
            let q = quantize(&sig, &AdcConfig::bits(14), 0.0).unwrap();
            assert_eq!(q.clipped, 0);
            acc += db_to_linear(error_dbfs(&sig, &q)) / 16.0;
        }
        let dbfs = linear_to_db(acc);
        assert!((dbfs - quantization_noise_dbfs(14)).abs() < 0.2, "{dbfs}");
    }

    #[test]
    fn twenty_four_bits_is_transparent() {
        let sig = ofdm_signal(2);
        let q = quantize(&sig, &AdcConfig::bits(24), 0.0).unwrap();
        assert!(error_dbfs(&sig, &q) < -140.0);
    }

    #[test]
    fn lattice_points_are_fixed() {
        let cfg = AdcConfig {
            bits: 4,
            full_scale: FullScale::Fixed(1.0),
        };
        let step = 2.0 / 16.0;
        let samples = (0..16)
            .map(|k| {
                let v = -1.0 + step * (k as f64 + 0.5);
                Complex64::new(v, -v)
            })
            .collect();
        let sig = ComplexSignal::from_samples(samples);
        let q = quantize(&sig, &cfg, 0.0).unwrap();
        assert_eq!(q.signal, sig);
    }

    #[test]
    fn error_bounded_and_matches_variance_with_gain() {
        let mut rng = rng_from_seed(3);
        let samples: Vec<Complex64> = (0..200_000)
            .map(|_| Complex64::new(rng.random_range(-0.1..0.1), rng.random_range(-0.1..0.1)))
            .collect();
        let sig = ComplexSignal::from_samples(samples);
        let gain_db = 20.0;
        let cfg = AdcConfig {
            bits: 8,
            full_scale: FullScale::Fixed(1.0),
        };
        let q = quantize(&sig, &cfg, gain_db).unwrap();
        let step = 2.0 / 256.0 / 10.0;
        let mut re_err = 0.0;
        for (o, i) in q.signal.samples().iter().zip(sig.samples()) {
            assert!((o.re - i.re).abs() <= 0.5 * step + 1e-15);
            assert!((o.im - i.im).abs() <= 0.5 * step + 1e-15);
            re_err += (o.re - i.re).powi(2);
        }
        re_err /= sig.len() as f64;
        let expected = quantization_noise_input_referred(8, gain_db);
        assert!((re_err / expected - 1.0).abs() < 0.05, "{re_err} {expected}");
    }

    #[test]
    fn percentile_full_scale_reports_clipping() {
        let sig = ofdm_signal(4);
        let cfg = AdcConfig {
            bits: 12,
            full_scale: FullScale::Auto { percentile: 99.0 },
        };
        let q = quantize(&sig, &cfg, 0.0).unwrap();
        assert!(q.clipped > 0);
        assert!(q.clipped < sig.len() / 50);
    }

    #[test]
    fn too_few_bits_rejected() {
        let sig = ofdm_signal(5);
        assert!(quantize(&sig, &AdcConfig::bits(1), 0.0).is_err());
    }
}
