//! Self-interference and signal-of-interest channels.
//!
//! The wireless channel is a tapped delay line on the sample grid. Tap 0
//! carries a fixed line-of-sight component plus diffuse scattering; the
//! other taps are diffuse only. Diffuse taps follow an exponential power
//! delay profile and fade with a sum-of-sinusoids Jakes model, held
//! constant over each OFDM symbol.

use std::f64::consts::PI;
use std::path::Path;

use num_complex::Complex64;
use rand::Rng;

use crate::error::{Error, Result};
use crate::ofdm::zero_padded_dft;
use crate::rng::rng_from_seed;
use crate::signal::{db_to_linear, ComplexSignal, DEFAULT_SAMPLE_RATE_HZ};

/// Tap spacing of the delay line (one sample at 20 MHz).
pub const TAP_SPACING_S: f64 = 50e-9;
/// Frequency-correlation threshold that defines the coherence bandwidth.
pub const COHERENCE_THRESHOLD: f64 = 0.9;
pub const DEFAULT_SINUSOIDS: usize = 32;

/// Delay profile of the multipath channel.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ChannelProfile {
    TgnB,
    TgnC,
    TgnD,
    Custom { max_delay_ns: f64, decay_ns: f64 },
}

impl ChannelProfile {
    pub fn max_delay_ns(&self) -> f64 {
        match self {
            ChannelProfile::TgnB => 80.0,
            ChannelProfile::TgnC => 200.0,
            ChannelProfile::TgnD => 390.0,
            ChannelProfile::Custom { max_delay_ns, .. } => *max_delay_ns,
        }
    }

    /// Decay constant of the exponential profile (rms delay spread).
    pub fn decay_ns(&self) -> f64 {
        match self {
            ChannelProfile::TgnB => 15.0,
            ChannelProfile::TgnC => 30.0,
            ChannelProfile::TgnD => 50.0,
            ChannelProfile::Custom { decay_ns, .. } => *decay_ns,
        }
    }

    pub fn n_taps(&self) -> usize {
        (self.max_delay_ns() * 1e-9 / TAP_SPACING_S - 1e-9).ceil().max(0.0) as usize + 1
    }

    /// Normalized diffuse power per tap.
    pub fn power_delay_profile(&self) -> Vec<f64> {
        let decay = self.decay_ns() * 1e-9;
        let raw: Vec<f64> = (0..self.n_taps())
            .map(|d| (-(d as f64) * TAP_SPACING_S / decay).exp())
            .collect();
        let total: f64 = raw.iter().sum();
        raw.into_iter().map(|p| p / total).collect()
    }

    pub fn parse(name: &str) -> Result<Self> {
        match name
            .to_ascii_uppercase()
            .trim_start_matches("TGN-")
            .trim_start_matches("TGN")
        {
            "B" => Ok(ChannelProfile::TgnB),
            "C" => Ok(ChannelProfile::TgnC),
            "D" => Ok(ChannelProfile::TgnD),
            _ => Err(Error::config(
                "channel.profile",
                format!("unsupported profile '{name}'"),
            )),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            ChannelProfile::TgnB => "TGn-B",
            ChannelProfile::TgnC => "TGn-C",
            ChannelProfile::TgnD => "TGn-D",
            ChannelProfile::Custom { .. } => "custom",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChannelModelConfig {
    pub profile: ChannelProfile,
    /// Ratio of line-of-sight power to total diffuse power.
    pub rician_factor_db: f64,
    /// Sum of all tap powers; passive suppression enters here.
    pub total_gain_db: f64,
    pub doppler_hz: f64,
    /// Channel update interval, normally one OFDM symbol.
    pub symbol_duration_s: f64,
    pub n_sinusoids: usize,
}

impl ChannelModelConfig {
    pub fn new(profile: ChannelProfile, rician_factor_db: f64, total_gain_db: f64, doppler_hz: f64) -> Self {
        Self {
            profile,
            rician_factor_db,
            total_gain_db,
            doppler_hz,
            symbol_duration_s: 4e-6,
            n_sinusoids: DEFAULT_SINUSOIDS,
        }
    }

    /// Expected LOS and total diffuse power (linear).
    pub fn los_and_diffuse_power(&self) -> (f64, f64) {
        let total = db_to_linear(self.total_gain_db);
        let k = db_to_linear(self.rician_factor_db);
        if k.is_infinite() {
            return (total, 0.0);
        }
        (total * k / (1.0 + k), total / (1.0 + k))
    }

    pub fn validate(&self) -> Result<()> {
        if let ChannelProfile::Custom { max_delay_ns, decay_ns } = self.profile {
            if !(max_delay_ns >= 0.0 && max_delay_ns.is_finite()) {
                return Err(Error::config("channel.max_delay_ns", "must be non-negative"));
            }
            if !(decay_ns > 0.0) {
                return Err(Error::config("channel.decay_ns", "must be positive"));
            }
        }
        if self.rician_factor_db.is_nan() {
            return Err(Error::config("channel.rician_factor_db", "must be a number"));
        }
        if !self.total_gain_db.is_finite() {
            return Err(Error::config("channel.total_gain_db", "must be finite"));
        }
        if !(self.doppler_hz >= 0.0) {
            return Err(Error::config("channel.doppler_hz", "must be non-negative"));
        }
        if !(self.symbol_duration_s > 0.0) {
            return Err(Error::config("channel.symbol_duration_s", "must be positive"));
        }
        if self.n_sinusoids == 0 {
            return Err(Error::config("channel.n_sinusoids", "must be at least 1"));
        }
        Ok(())
    }
}

/// Channel taps for every symbol of a transmission.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelRealization {
    los: Complex64,
    /// `diffuse[s][d]`: diffuse part of tap `d` during symbol `s`.
    diffuse: Vec<Vec<Complex64>>,
}

impl ChannelRealization {
    /// Static channel with the given taps; the first tap is treated as LOS.
    pub fn from_taps(taps: Vec<Complex64>, n_symbols: usize) -> Result<Self> {
        if taps.is_empty() {
            return Err(Error::Empty("channel taps"));
        }
        let mut diffuse = taps.clone();
        diffuse[0] = Complex64::new(0.0, 0.0);
        Ok(Self {
            los: taps[0],
            diffuse: vec![diffuse; n_symbols],
        })
    }

    /// Single tap `gain` at delay `delay` samples.
    pub fn delay(gain: Complex64, delay: usize, n_symbols: usize) -> Self {
        let mut taps = vec![Complex64::new(0.0, 0.0); delay + 1];
        taps[delay] = gain;
        Self::from_taps(taps, n_symbols).expect("non-empty taps")
    }

    pub fn n_symbols(&self) -> usize {
        self.diffuse.len()
    }

    pub fn n_taps(&self) -> usize {
        self.diffuse.first().map_or(1, |d| d.len())
    }

    pub fn los(&self) -> Complex64 {
        self.los
    }

    /// Complete taps during symbol `s`.
    pub fn taps(&self, s: usize) -> Vec<Complex64> {
        let mut t = self.diffuse[s].clone();
        t[0] += self.los;
        t
    }

    pub fn diffuse_taps(&self, s: usize) -> &[Complex64] {
        &self.diffuse[s]
    }

    /// Per-subcarrier response during symbol `s`.
    pub fn freq_response(&self, s: usize, n_subcarriers: usize) -> Vec<Complex64> {
        zero_padded_dft(&self.taps(s), n_subcarriers)
    }

    /// Per-subcarrier response of the diffuse part only.
    pub fn diffuse_freq_response(&self, s: usize, n_subcarriers: usize) -> Vec<Complex64> {
        zero_padded_dft(&self.diffuse[s], n_subcarriers)
    }

    /// Channel frozen at symbol `s` for `n_symbols` symbols.
    pub fn frozen_at(&self, s: usize, n_symbols: usize) -> Self {
        Self {
            los: self.los,
            diffuse: vec![self.diffuse[s].clone(); n_symbols],
        }
    }

    /// Symbols `start..start + len`.
    pub fn slice(&self, start: usize, len: usize) -> Result<Self> {
        if start + len > self.n_symbols() {
            return Err(Error::LengthMismatch {
                expected: start + len,
                actual: self.n_symbols(),
            });
        }
        Ok(Self {
            los: self.los,
            diffuse: self.diffuse[start..start + len].to_vec(),
        })
    }

    /// Tap powers averaged over symbols.
    pub fn mean_tap_powers(&self) -> Vec<f64> {
        let n = self.n_symbols() as f64;
        let mut acc = vec![0.0; self.n_taps()];
        for s in 0..self.n_symbols() {
            for (a, t) in acc.iter_mut().zip(self.taps(s)) {
                *a += t.norm_sqr() / n;
            }
        }
        acc
    }

    /// Writes `(symbol_index, tap_index, re, im)` rows.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(["symbol_index", "tap_index", "re", "im"])?;
        for s in 0..self.n_symbols() {
            for (d, t) in self.taps(s).iter().enumerate() {
                w.write_record([s.to_string(), d.to_string(), t.re.to_string(), t.im.to_string()])?;
            }
        }
        w.flush()?;
        Ok(())
    }
}

/// Draws a channel realization spanning `n_symbols` symbols.
pub fn gen_channel(cfg: &ChannelModelConfig, n_symbols: usize, seed: u64) -> Result<ChannelRealization> {
    cfg.validate()?;
    if n_symbols == 0 {
        return Err(Error::config("n_symbols", "must be at least 1"));
    }
    let mut rng = rng_from_seed(seed);
    let (los_power, diffuse_power) = cfg.los_and_diffuse_power();
    let los = Complex64::from_polar(los_power.sqrt(), rng.random_range(0.0..2.0 * PI));
    let pdp = cfg.profile.power_delay_profile();
    let l = cfg.n_sinusoids;
    let w_d = 2.0 * PI * cfg.doppler_hz * cfg.symbol_duration_s;

    let mut diffuse = vec![vec![Complex64::new(0.0, 0.0); pdp.len()]; n_symbols];
    for (d, p) in pdp.iter().enumerate() {
        let amp = (diffuse_power * p / l as f64).sqrt();
        let paths: Vec<(f64, f64)> = (0..l)
            .map(|_| {
                let angle: f64 = rng.random_range(0.0..2.0 * PI);
                let phase: f64 = rng.random_range(0.0..2.0 * PI);
                (w_d * angle.cos(), phase)
            })
            .collect();
        if amp == 0.0 {
            continue;
        }
        for (s, row) in diffuse.iter_mut().enumerate() {
            row[d] = paths
                .iter()
                .map(|&(w, ph)| Complex64::from_polar(amp, w * s as f64 + ph))
                .sum();
        }
    }
    Ok(ChannelRealization { los, diffuse })
}

/// Convolves `sig` with the channel, switching taps at symbol boundaries of
/// length `symbol_len`. Each output sample uses the taps of its own symbol,
/// so with a cyclic prefix of at least `taps - 1` samples every symbol body
/// sees a circular convolution.
pub fn apply_channel(sig: &ComplexSignal, ch: &ChannelRealization, symbol_len: usize) -> Result<ComplexSignal> {
    if symbol_len == 0 {
        return Err(Error::config("symbol_len", "must be positive"));
    }
    let needed = sig.len().div_ceil(symbol_len);
    if ch.n_symbols() < needed {
        return Err(Error::LengthMismatch {
            expected: needed,
            actual: ch.n_symbols(),
        });
    }
    let x = sig.samples();
    let mut out = vec![Complex64::new(0.0, 0.0); x.len()];
    for (s, chunk) in out.chunks_mut(symbol_len).enumerate() {
        let taps = ch.taps(s);
        let base = s * symbol_len;
        for (i, y) in chunk.iter_mut().enumerate() {
            let n = base + i;
            *y = taps.iter().enumerate().take(n + 1).map(|(d, h)| h * x[n - d]).sum();
        }
    }
    Ok(sig.with_samples(out))
}

/// Normalized frequency correlation `|sum_d p_d e^{-j 2 pi df d Ts}| / sum_d p_d`
/// of the symbol-averaged power delay profile.
pub fn frequency_correlation(ch: &ChannelRealization, delta_f_hz: f64, sample_rate_hz: f64) -> f64 {
    correlation_of_profile(&ch.mean_tap_powers(), delta_f_hz, sample_rate_hz)
}

fn correlation_of_profile(powers: &[f64], delta_f_hz: f64, sample_rate_hz: f64) -> f64 {
    let total: f64 = powers.iter().sum();
    if total == 0.0 {
        return 1.0;
    }
    let c: Complex64 = powers
        .iter()
        .enumerate()
        .map(|(d, &p)| Complex64::from_polar(p, -2.0 * PI * delta_f_hz * d as f64 / sample_rate_hz))
        .sum();
    c.norm() / total
}

/// Largest frequency offset up to which the frequency correlation stays at
/// or above [`COHERENCE_THRESHOLD`]. A channel that never decorrelates within
/// half the sample rate is flat and reports the full band.
pub fn coherence_bandwidth(ch: &ChannelRealization) -> f64 {
    coherence_bandwidth_at(ch, DEFAULT_SAMPLE_RATE_HZ)
}

pub fn coherence_bandwidth_at(ch: &ChannelRealization, sample_rate_hz: f64) -> f64 {
    let p = ch.mean_tap_powers();
    let r = |f: f64| correlation_of_profile(&p, f, sample_rate_hz);
    let steps = 2000;
    let half = sample_rate_hz / 2.0;
    let mut prev = 0.0;
    for i in 1..=steps {
        let f = half * i as f64 / steps as f64;
        if r(f) < COHERENCE_THRESHOLD {
            let (mut lo, mut hi) = (prev, f);
            for _ in 0..60 {
                let mid = 0.5 * (lo + hi);
                if r(mid) >= COHERENCE_THRESHOLD {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            return lo;
        }
        prev = f;
    }
    sample_rate_hz
}

/// Wired splitter path from the PA output to the auxiliary receiver.
#[derive(Debug, Clone, PartialEq)]
pub struct AuxChannel {
    /// Delay-line taps; a single tap is frequency flat.
    pub taps: Vec<Complex64>,
}

impl AuxChannel {
    pub fn flat(gain: Complex64) -> Self {
        Self { taps: vec![gain] }
    }

    /// Flat path whose output power equals `aux_input_dbm` for a transmit
    /// power of `tx_power_dbm`.
    pub fn for_input_level(aux_input_dbm: f64, tx_power_dbm: f64) -> Self {
        Self::flat(Complex64::new(db_to_linear(aux_input_dbm - tx_power_dbm).sqrt(), 0.0))
    }

    pub fn is_flat(&self) -> bool {
        self.taps.iter().skip(1).all(|t| t.norm() == 0.0)
    }

    pub fn freq_response(&self, n_subcarriers: usize) -> Vec<Complex64> {
        zero_padded_dft(&self.taps, n_subcarriers)
    }

    pub fn apply(&self, sig: &ComplexSignal) -> ComplexSignal {
        if self.is_flat() {
            return sig.scaled(self.taps[0]);
        }
        let x = sig.samples();
        let out = (0..x.len())
            .map(|n| {
                self.taps
                    .iter()
                    .enumerate()
                    .take(n + 1)
                    .map(|(d, h)| h * x[n - d])
                    .sum()
            })
            .collect();
        sig.with_samples(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ofdm::{ofdm_demodulate, ofdm_modulate, OfdmGrid, OfdmParams, SymbolKind};
    use crate::signal::linear_to_db;

    /// Bessel J0 by trapezoidal integration of its integral form.
    fn bessel_j0(x: f64) -> f64 {
        let n = 2000;
        let h = PI / n as f64;
        let f = |t: f64| (x * t.sin()).cos();
        let mut acc = 0.5 * (f(0.0) + f(PI));
        for i in 1..n {
            acc += f(i as f64 * h);
        }
        acc * h / PI
    }

    fn random_grid(n_symbols: usize, seed: u64) -> OfdmGrid {
        let mut rng = rng_from_seed(seed);
        OfdmGrid::random_qpsk(OfdmParams::default(), vec![SymbolKind::Data; n_symbols], &mut rng)
    }

    #[test]
    fn tap_counts_follow_max_delay() {
        assert_eq!(ChannelProfile::TgnB.n_taps(), 3);
        assert_eq!(ChannelProfile::TgnC.n_taps(), 5);
        assert_eq!(ChannelProfile::TgnD.n_taps(), 9);
    }

    #[test]
    fn pure_los_limit() {
        let cfg = ChannelModelConfig::new(ChannelProfile::TgnD, 200.0, -25.0, 5.0);
        let ch = gen_channel(&cfg, 40, 1).unwrap();
        let h0 = ch.freq_response(0, 64);
        for s in 1..40 {
            for (a, b) in ch.freq_response(s, 64).iter().zip(&h0) {
                assert!((a - b).norm() < 1e-9 * b.norm());
            }
        }
        let exact = ChannelModelConfig::new(ChannelProfile::TgnD, f64::INFINITY, -25.0, 5.0);
        let ch = gen_channel(&exact, 40, 1).unwrap();
        assert_eq!(ch.freq_response(39, 64), ch.freq_response(0, 64));
        for h in &h0 {
            assert!((h.norm_sqr() / db_to_linear(-25.0) - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn los_and_diffuse_split() {
        let cfg = ChannelModelConfig::new(ChannelProfile::TgnD, 20.0, -25.0, 5.0);
        let (los, diffuse) = cfg.los_and_diffuse_power();
        assert!((linear_to_db(los) + 25.0).abs() < 0.05);
        let n = 2000;
        let mut acc = 0.0;
        for seed in 0..n {
            let ch = gen_channel(&cfg, 1, seed).unwrap();
            acc += ch.diffuse_taps(0).iter().map(|t| t.norm_sqr()).sum::<f64>();
        }
        let measured = linear_to_db(acc / n as f64);
        assert!((measured + 45.0).abs() < 0.3, "{measured}");
        assert!((linear_to_db(diffuse) + 45.0).abs() < 0.05);
    }

    #[test]
    fn ensemble_power_and_rician_factor() {
        let cfg = ChannelModelConfig::new(ChannelProfile::TgnC, 3.0, -40.0, 5.0);
        let n = 2000;
        let (mut total, mut diffuse, mut los) = (0.0, 0.0, 0.0);
        for seed in 0..n {
            let ch = gen_channel(&cfg, 1, 1000 + seed).unwrap();
            total += ch.taps(0).iter().map(|t| t.norm_sqr()).sum::<f64>();
            diffuse += ch.diffuse_taps(0).iter().map(|t| t.norm_sqr()).sum::<f64>();
            los += ch.los().norm_sqr();
        }
        assert!((linear_to_db(total / n as f64) + 40.0).abs() < 0.2);
        assert!((linear_to_db(los / diffuse) - 3.0).abs() < 0.5);
    }

    #[test]
    fn expected_tap_powers_sum_to_total_gain() {
        let cfg = ChannelModelConfig::new(ChannelProfile::TgnD, 7.0, -33.0, 5.0);
        let (los, diffuse) = cfg.los_and_diffuse_power();
        let pdp_sum: f64 = cfg.profile.power_delay_profile().iter().sum();
        let total = los + diffuse * pdp_sum;
        assert!((total / db_to_linear(-33.0) - 1.0).abs() < 1e-6);
    }

    #[test]
    fn jakes_autocorrelation() {
        // 500 realizations of the diffuse tap; doppler chosen so that the
        // lags span a good part of the Bessel function.
        for (doppler, lags) in [(5.0, vec![0usize, 50, 150]), (2000.0, vec![0, 10, 30, 60, 100])] {
            let cfg = ChannelModelConfig::new(
                ChannelProfile::Custom {
                    max_delay_ns: 0.0,
                    decay_ns: 1.0,
                },
                f64::NEG_INFINITY,
                0.0,
                doppler,
            );
            let n_real = 500;
            let max_lag = *lags.last().unwrap();
            let mut acc = vec![Complex64::new(0.0, 0.0); lags.len()];
            let mut samples = vec![vec![Complex64::new(0.0, 0.0); n_real]; lags.len()];
            for r in 0..n_real {
                let ch = gen_channel(&cfg, max_lag + 1, 77 + r as u64).unwrap();
                let h0 = ch.taps(0)[0];
                for (i, &lag) in lags.iter().enumerate() {
                    let v = ch.taps(lag)[0] * h0.conj();
                    acc[i] += v / n_real as f64;
                    samples[i][r] = v;
                }
            }
            for (i, &lag) in lags.iter().enumerate() {
                let theory = bessel_j0(2.0 * PI * doppler * 4e-6 * lag as f64);
                let var = samples[i].iter().map(|v| (v.re - acc[i].re).powi(2)).sum::<f64>() / (n_real - 1) as f64;
                let half_width = 1.96 * (var / n_real as f64).sqrt();
                assert!(
                    (acc[i].re - theory).abs() <= half_width.max(1e-3),
                    "doppler {doppler} lag {lag}: {} vs {theory} (+/- {half_width})",
                    acc[i].re
                );
            }
        }
    }

    #[test]
    fn identity_and_delay() {
        let grid = random_grid(4, 3);
        let sig = ofdm_modulate(&grid).unwrap();
        let id = apply_channel(&sig, &ChannelRealization::delay(Complex64::new(1.0, 0.0), 0, 4), 80).unwrap();
        assert_eq!(id, sig);

        let d = 3;
        let delayed = apply_channel(&sig, &ChannelRealization::delay(Complex64::new(1.0, 0.0), d, 4), 80).unwrap();
        let out = ofdm_demodulate(&delayed, grid.params(), grid.kinds()).unwrap();
        for s in 0..4 {
            for k in 0..64 {
                let ramp = Complex64::from_polar(1.0, -2.0 * PI * (k * d) as f64 / 64.0);
                assert!((out.symbol(s)[k] - grid.symbol(s)[k] * ramp).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn two_tap_frequency_domain_oracle() {
        let mut rng = rng_from_seed(11);
        let taps = vec![
            Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)),
            Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)),
        ];
        let grid = random_grid(6, 12);
        let ch = ChannelRealization::from_taps(taps.clone(), 6).unwrap();
        let rx = apply_channel(&ofdm_modulate(&grid).unwrap(), &ch, 80).unwrap();
        let out = ofdm_demodulate(&rx, grid.params(), grid.kinds()).unwrap();
        for s in 0..6 {
            for k in 0..64 {
                let w = Complex64::from_polar(1.0, -2.0 * PI * k as f64 / 64.0);
                let h = taps[0] + taps[1] * w;
                let expected = grid.symbol(s)[k] * h;
                assert!((out.symbol(s)[k] - expected).norm() <= 1e-9 * expected.norm().max(1e-12));
            }
        }
    }

    #[test]
    fn freq_response_matches_direct_sum() {
        let cfg = ChannelModelConfig::new(ChannelProfile::TgnD, 0.0, 0.0, 5.0);
        let ch = gen_channel(&cfg, 3, 5).unwrap();
        for s in 0..3 {
            let taps = ch.taps(s);
            let h = ch.freq_response(s, 64);
            for (k, hk) in h.iter().enumerate() {
                let direct: Complex64 = taps
                    .iter()
                    .enumerate()
                    .map(|(d, t)| t * Complex64::from_polar(1.0, -2.0 * PI * (k * d) as f64 / 64.0))
                    .sum();
                assert!((hk - direct).norm() < 1e-10);
            }
        }
    }

    #[test]
    fn channel_changes_across_symbols_with_doppler() {
        let cfg = ChannelModelConfig::new(ChannelProfile::TgnB, 0.0, 0.0, 5000.0);
        let ch = gen_channel(&cfg, 300, 6).unwrap();
        let rx = apply_channel(&ofdm_modulate(&random_grid(300, 7)).unwrap(), &ch, 80);
        assert!(rx.is_ok());
        assert_ne!(ch.taps(0), ch.taps(299));
        assert!(apply_channel(&ofdm_modulate(&random_grid(301, 7)).unwrap(), &ch, 80).is_err());
    }

    #[test]
    fn coherence_bandwidth_cases() {
        let flat = ChannelRealization::from_taps(vec![Complex64::new(0.3, 0.1)], 1).unwrap();
        assert_eq!(coherence_bandwidth(&flat), 20e6);

        // two equal taps: |cos(pi df Ts)|, null at fs / 2
        let two = ChannelRealization::from_taps(vec![Complex64::new(1.0, 0.0); 2], 1).unwrap();
        assert!(frequency_correlation(&two, 10e6, 20e6) < 1e-12);
        let expected = 0.9f64.acos() / PI * 20e6;
        assert!((coherence_bandwidth(&two) - expected).abs() < 1.0);
    }

    #[test]
    fn coherence_bandwidth_shrinks_with_delay_spread() {
        let median = |profile: ChannelProfile| {
            let cfg = ChannelModelConfig::new(profile, f64::NEG_INFINITY, 0.0, 5.0);
            let mut v: Vec<f64> = (0..500)
                .map(|s| coherence_bandwidth(&gen_channel(&cfg, 1, s).unwrap()))
                .collect();
            v.sort_by(f64::total_cmp);
            v[250]
        };
        let (b, c, d) = (
            median(ChannelProfile::TgnB),
            median(ChannelProfile::TgnC),
            median(ChannelProfile::TgnD),
        );
        assert!(b > c && c > d, "{b} {c} {d}");
    }

    #[test]
    fn deterministic_under_seed() {
        let cfg = ChannelModelConfig::new(ChannelProfile::TgnD, 0.0, -45.0, 5.0);
        assert_eq!(gen_channel(&cfg, 10, 9).unwrap(), gen_channel(&cfg, 10, 9).unwrap());
        assert_ne!(gen_channel(&cfg, 10, 9).unwrap(), gen_channel(&cfg, 10, 10).unwrap());
    }

    #[test]
    fn profile_parsing() {
        assert_eq!(ChannelProfile::parse("TGn-D").unwrap(), ChannelProfile::TgnD);
        assert_eq!(ChannelProfile::parse("b").unwrap(), ChannelProfile::TgnB);
        assert!(ChannelProfile::parse("E").is_err());
    }

    #[test]
    fn csv_dump() {
        let cfg = ChannelModelConfig::new(ChannelProfile::TgnB, 0.0, 0.0, 5.0);
        let ch = gen_channel(&cfg, 2, 1).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("ch.csv");
        ch.write_csv(&path).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert_eq!(text.lines().count(), 1 + 2 * 3);
        assert!(text.starts_with("symbol_index,tap_index,re,im"));
    }

    #[test]
    fn aux_channel_level() {
        let aux = AuxChannel::for_input_level(-25.0, 20.0);
        assert!((linear_to_db(aux.taps[0].norm_sqr()) + 45.0).abs() < 1e-12);
        assert!(aux.is_flat());
        let h = aux.freq_response(64);
        assert!(h.iter().all(|v| (v - aux.taps[0]).norm() < 1e-15));
    }
}
