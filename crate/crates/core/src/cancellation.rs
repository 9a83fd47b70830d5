//! Digital self-interference cancellation with the auxiliary chain as
//! reference, plus receiver third-order distortion estimation and removal.
//!
//! The ordinary-to-auxiliary channel ratio is estimated per subcarrier from
//! training symbols. Because both chains share the receiver oscillator and
//! see the same transmitter impairments, subtracting `H_hat * Y_aux` removes
//! them along with the linear SI.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::ofdm::{dft_unitary, idft_unitary, OfdmGrid};

/// Subcarriers whose divisor is below this fraction of the RMS are skipped.
pub const EXCLUSION_THRESHOLD: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub struct ChannelRatioEstimate {
    pub h_hat: Vec<Complex64>,
    pub n_averaged: usize,
    /// Index of the last training symbol used.
    pub timestamp_symbol: usize,
    /// Number of (symbol, subcarrier) pairs skipped for a near-zero divisor.
    pub excluded: usize,
}

impl ChannelRatioEstimate {
    pub fn new(h_hat: Vec<Complex64>, n_averaged: usize, timestamp_symbol: usize) -> Self {
        Self {
            h_hat,
            n_averaged,
            timestamp_symbol,
            excluded: 0,
        }
    }
}

fn rms(values: impl Iterator<Item = Complex64>) -> f64 {
    let (sum, n) = values.fold((0.0, 0usize), |(s, n), v| (s + v.norm_sqr(), n + 1));
    if n == 0 {
        0.0
    } else {
        (sum / n as f64).sqrt()
    }
}

/// Per-subcarrier average of `numerator / denominator` over `symbols`,
/// skipping near-zero denominators.
fn averaged_ratio(num: &OfdmGrid, den: &OfdmGrid, symbols: &[usize]) -> Result<(Vec<Complex64>, usize)> {
    if symbols.is_empty() {
        return Err(Error::Empty("training symbols"));
    }
    if num.n_subcarriers() != den.n_subcarriers() || num.n_symbols() != den.n_symbols() {
        return Err(Error::DimensionMismatch("grids differ in shape".into()));
    }
    if let Some(&s) = symbols.iter().find(|&&s| s >= den.n_symbols()) {
        return Err(Error::DimensionMismatch(format!("training symbol {s} out of range")));
    }
    let n = den.n_subcarriers();
    let threshold = EXCLUSION_THRESHOLD * rms(symbols.iter().flat_map(|&s| den.symbol(s).iter().copied()));
    let mut out = vec![Complex64::new(0.0, 0.0); n];
    let mut excluded = 0;
    for (k, o) in out.iter_mut().enumerate() {
        let mut used = 0usize;
        for &s in symbols {
            let d = den.symbol(s)[k];
            if d.norm() <= threshold {
                excluded += 1;
                continue;
            }
            *o += num.symbol(s)[k] / d;
            used += 1;
        }
        if used > 0 {
            *o /= used as f64;
        }
    }
    Ok((out, excluded))
}

/// LS estimate of `H_ord / H_aux` averaged over the given training symbols.
pub fn estimate_channel_ratio(y_aux: &OfdmGrid, y_ord: &OfdmGrid, training: &[usize]) -> Result<ChannelRatioEstimate> {
    let (h_hat, excluded) = averaged_ratio(y_ord, y_aux, training)?;
    if excluded > 0 {
        log::debug!("{excluded} training subcarriers skipped for a near-zero auxiliary value");
    }
    Ok(ChannelRatioEstimate {
        h_hat,
        n_averaged: training.len(),
        timestamp_symbol: *training.iter().max().expect("non-empty"),
        excluded,
    })
}

/// `Y_DC = Y_ord - H_hat * Y_aux` on every symbol.
pub fn cancel(y_ord: &OfdmGrid, y_aux: &OfdmGrid, est: &ChannelRatioEstimate) -> Result<OfdmGrid> {
    if y_ord.n_symbols() != y_aux.n_symbols() || y_ord.n_subcarriers() != y_aux.n_subcarriers() {
        return Err(Error::DimensionMismatch("ordinary and auxiliary grids differ".into()));
    }
    if est.h_hat.len() != y_ord.n_subcarriers() {
        return Err(Error::DimensionMismatch("estimate length differs from grid".into()));
    }
    let mut out = y_ord.clone();
    for s in 0..out.n_symbols() {
        let aux = y_aux.symbol(s);
        for ((o, a), h) in out.symbol_mut(s).iter_mut().zip(aux).zip(&est.h_hat) {
            *o -= h * a;
        }
    }
    Ok(out)
}

/// Like [`cancel`] but with a different ratio for every symbol.
pub fn cancel_per_symbol(y_ord: &OfdmGrid, y_aux: &OfdmGrid, ratios: &[Vec<Complex64>]) -> Result<OfdmGrid> {
    if ratios.len() != y_ord.n_symbols() {
        return Err(Error::LengthMismatch {
            expected: y_ord.n_symbols(),
            actual: ratios.len(),
        });
    }
    let mut out = y_ord.clone();
    for (s, h) in ratios.iter().enumerate() {
        let aux = y_aux.symbol(s);
        for ((o, a), h) in out.symbol_mut(s).iter_mut().zip(aux).zip(h) {
            *o -= h * a;
        }
    }
    Ok(out)
}

/// Frequency-domain third-order distortion basis of one symbol,
/// `DFT[g |g|^2]` with `g = IDFT[H X]`.
pub fn distortion_basis(x: &[Complex64], h_ord: &[Complex64]) -> Vec<Complex64> {
    let mut g: Vec<Complex64> = x.iter().zip(h_ord).map(|(a, b)| a * b).collect();
    idft_unitary(&mut g);
    g.iter_mut().for_each(|v| *v *= v.norm_sqr());
    dft_unitary(&mut g);
    g
}

#[derive(Debug, Clone, PartialEq)]
pub struct NonlinEstimate {
    pub alpha3_hat: Complex64,
    /// Ordinary-channel estimate used to rebuild the distortion.
    pub h_ord_hat: Vec<Complex64>,
    /// Distortion absorbed into the channel-ratio estimate, per unit of
    /// transmitted symbol: mean over training symbols of `D_m / X_m`.
    pub training_bias: Vec<Complex64>,
    pub excluded: usize,
}

impl NonlinEstimate {
    /// Estimate that leaves signals unchanged.
    pub fn zero(n: usize) -> Self {
        Self {
            alpha3_hat: Complex64::new(0.0, 0.0),
            h_ord_hat: vec![Complex64::new(0.0, 0.0); n],
            training_bias: vec![Complex64::new(0.0, 0.0); n],
            excluded: 0,
        }
    }

    /// Frequency-domain distortion left in `Y_DC` for a symbol `x`.
    pub fn residual_distortion(&self, x: &[Complex64]) -> Vec<Complex64> {
        distortion_basis(x, &self.h_ord_hat)
            .into_iter()
            .zip(x)
            .zip(&self.training_bias)
            .map(|((d, xk), b)| self.alpha3_hat * (d - xk * b))
            .collect()
    }
}

/// How the per-subcarrier observations of the third-order coefficient are
/// combined.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub enum Alpha3Estimator {
    /// Mean of `Y_DC / basis` over subcarriers.
    #[default]
    RatioMean,
    /// Least-squares fit `sum(Y_DC conj(basis)) / sum(|basis|^2)`, which is
    /// not dominated by subcarriers with a small basis value.
    LeastSquares,
}

impl Alpha3Estimator {
    pub fn parse(name: &str) -> Result<Self> {
        match name.to_ascii_lowercase().replace('-', "_").as_str() {
            "ratio_mean" => Ok(Self::RatioMean),
            "least_squares" | "ls" => Ok(Self::LeastSquares),
            _ => Err(Error::config("alpha3_estimator", format!("unknown estimator `{name}`"))),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Self::RatioMean => "ratio_mean",
            Self::LeastSquares => "least_squares",
        }
    }
}

/// Estimates the receiver third-order coefficient with the ratio-mean
/// estimator.
///
/// `x_training` are the known transmitted channel-training symbols,
/// `x_nl` the nonlinearity-training symbol, and `y_dc_nl` the cancelled
/// output on that symbol using the ratio averaged over `x_training`. The
/// distortion of the channel-training symbols leaks into the ratio estimate
/// and is subtracted again on the nonlinearity-training symbol, so the
/// per-subcarrier model is below. An empty `x_training` means the ratio was
/// not estimated from data and carries no distortion.
///
/// ```text
/// Y_DC = a3 (Dbar_nl - X_nl * mean_m(Dbar_m / X_m))
/// ```
pub fn estimate_alpha3(
    x_training: &[&[Complex64]],
    x_nl: &[Complex64],
    y_dc_nl: &[Complex64],
    h_ord_hat: &[Complex64],
) -> Result<NonlinEstimate> {
    estimate_alpha3_with(Alpha3Estimator::RatioMean, x_training, x_nl, y_dc_nl, h_ord_hat)
}

/// [`estimate_alpha3`] with a selectable combining rule.
pub fn estimate_alpha3_with(
    method: Alpha3Estimator,
    x_training: &[&[Complex64]],
    x_nl: &[Complex64],
    y_dc_nl: &[Complex64],
    h_ord_hat: &[Complex64],
) -> Result<NonlinEstimate> {
    let n = x_nl.len();
    if y_dc_nl.len() != n || h_ord_hat.len() != n || x_training.iter().any(|x| x.len() != n) {
        return Err(Error::DimensionMismatch("training symbols differ in length".into()));
    }
    let x_threshold = EXCLUSION_THRESHOLD * rms(x_training.iter().flat_map(|x| x.iter().copied()));
    let mut bias = vec![Complex64::new(0.0, 0.0); n];
    let mut counts = vec![0usize; n];
    for x in x_training {
        let d = distortion_basis(x, h_ord_hat);
        for k in 0..n {
            if x[k].norm() > x_threshold {
                bias[k] += d[k] / x[k];
                counts[k] += 1;
            }
        }
    }
    for (b, &c) in bias.iter_mut().zip(&counts) {
        if c > 0 {
            *b /= c as f64;
        }
    }
    let d_nl = distortion_basis(x_nl, h_ord_hat);
    let basis: Vec<Complex64> = (0..n).map(|k| d_nl[k] - x_nl[k] * bias[k]).collect();
    let scale = rms(basis.iter().copied()).max(rms(d_nl.iter().copied()));
    if !(scale > 0.0) {
        return Err(Error::Degenerate("distortion basis is zero".into()));
    }
    let threshold = EXCLUSION_THRESHOLD * scale;
    let mut acc = Complex64::new(0.0, 0.0);
    let mut energy = 0.0;
    let mut used = 0usize;
    for k in 0..n {
        if basis[k].norm() <= threshold || (!x_training.is_empty() && counts[k] == 0) {
            continue;
        }
        match method {
            Alpha3Estimator::RatioMean => acc += y_dc_nl[k] / basis[k],
            Alpha3Estimator::LeastSquares => {
                acc += y_dc_nl[k] * basis[k].conj();
                energy += basis[k].norm_sqr();
            }
        }
        used += 1;
    }
    if used == 0 {
        return Err(Error::Degenerate(
            "nonlinearity training symbol is a scaled copy of the channel training".into(),
        ));
    }
    let alpha3_hat = match method {
        Alpha3Estimator::RatioMean => acc / used as f64,
        Alpha3Estimator::LeastSquares => acc / energy,
    };
    Ok(NonlinEstimate {
        alpha3_hat,
        h_ord_hat: h_ord_hat.to_vec(),
        training_bias: bias,
        excluded: n - used,
    })
}

/// Subtracts the reconstructed receiver distortion from the listed symbols
/// of `y_dc`, given the known transmitted grid `x`.
pub fn reconstruct_and_subtract(
    y_dc: &OfdmGrid,
    x: &OfdmGrid,
    est: &NonlinEstimate,
    symbols: &[usize],
) -> Result<OfdmGrid> {
    if x.n_symbols() != y_dc.n_symbols() || x.n_subcarriers() != y_dc.n_subcarriers() {
        return Err(Error::DimensionMismatch(
            "transmit grid differs from received grid".into(),
        ));
    }
    let mut out = y_dc.clone();
    if est.alpha3_hat == Complex64::new(0.0, 0.0) {
        return Ok(out);
    }
    for &s in symbols {
        if s >= out.n_symbols() {
            return Err(Error::DimensionMismatch(format!("symbol {s} out of range")));
        }
        let d = est.residual_distortion(x.symbol(s));
        for (o, dk) in out.symbol_mut(s).iter_mut().zip(d) {
            *o -= dk;
        }
    }
    Ok(out)
}

/// Direct LS estimate of the SI channel from the known transmitted symbols,
/// `mean_m(Y_ord / X_m)`. Used by the conventional canceller.
pub fn estimate_direct_channel(x: &OfdmGrid, y_ord: &OfdmGrid, training: &[usize]) -> Result<ChannelRatioEstimate> {
    let (h_hat, excluded) = averaged_ratio(y_ord, x, training)?;
    Ok(ChannelRatioEstimate {
        h_hat,
        n_averaged: training.len(),
        timestamp_symbol: *training.iter().max().expect("non-empty"),
        excluded,
    })
}

/// Conventional cancellation: `Y_ord - H_hat X` with the known transmit grid.
pub fn cancel_conventional(y_ord: &OfdmGrid, x: &OfdmGrid, est: &ChannelRatioEstimate) -> Result<OfdmGrid> {
    cancel(y_ord, x, est)
}
