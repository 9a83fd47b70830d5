//! Analytic bounds and achievable-rate formulas.

use crate::signal::{db_to_linear, linear_to_db};

/// Noise floor of a half-duplex receiver (dBm over 20 MHz).
pub const HALF_DUPLEX_NOISE_FLOOR_DBM: f64 = -90.0;

/// Upper bound on the residual SI caused by shared receiver phase noise,
/// `2 * P_tx * P_nlos * P_pn`, in dBm. `p_nlos_db` is the diffuse channel
/// gain and `p_pn_dbc` the in-band phase-noise power.
pub fn residual_si_upper_bound(p_tx_dbm: f64, p_nlos_db: f64, p_pn_dbc: f64) -> f64 {
    if p_nlos_db == f64::NEG_INFINITY || p_pn_dbc == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    p_tx_dbm + p_nlos_db + p_pn_dbc + linear_to_db(2.0)
}

/// Half-duplex rate `0.5 log2(1 + snr)`.
pub fn half_duplex_rate(snr_linear: f64) -> f64 {
    0.5 * (1.0 + snr_linear).log2()
}

/// Full-duplex rate averaged over subcarriers, `mean_k log2(1 + P_soi / r_k)`,
/// where `r_k` is the interference-plus-noise power on subcarrier `k`.
pub fn full_duplex_rate(soi_power_mw: f64, interference_mw: &[f64]) -> f64 {
    if interference_mw.is_empty() {
        return 0.0;
    }
    interference_mw
        .iter()
        .map(|&r| (1.0 + soi_power_mw / r).log2())
        .sum::<f64>()
        / interference_mw.len() as f64
}

/// Signal-of-interest power for a half-duplex SNR over the noise floor.
pub fn soi_power_for_snr(snr_db: f64) -> f64 {
    db_to_linear(HALF_DUPLEX_NOISE_FLOOR_DBM + snr_db)
}

/// Relative gain `(R_fd - R_hd) / R_hd`.
pub fn rate_gain(r_fd: f64, r_hd: f64) -> f64 {
    (r_fd - r_hd) / r_hd
}

/// SNR grid used for average rate gains: 0 to 40 dB in 5 dB steps.
pub fn default_snr_grid_db() -> Vec<f64> {
    (0..=8).map(|i| 5.0 * i as f64).collect()
}

/// Arithmetic mean of the per-SNR relative gains.
pub fn average_rate_gain(r_fd: &[f64], r_hd: &[f64]) -> f64 {
    let n = r_fd.len().min(r_hd.len());
    if n == 0 {
        return f64::NAN;
    }
    r_fd.iter().zip(r_hd).map(|(&f, &h)| rate_gain(f, h)).sum::<f64>() / n as f64
}
