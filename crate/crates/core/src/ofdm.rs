//! OFDM grids, frame layout and (de)modulation.
//!
//! The DFT is unitary (scaled by `1/sqrt(N)` in both directions), so the mean
//! power of a symbol body equals the mean per-subcarrier power of the grid.

use std::cell::RefCell;
use std::sync::Arc;

use num_complex::Complex64;
use rand::Rng;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};
use crate::signal::{ComplexSignal, DEFAULT_SAMPLE_RATE_HZ};

pub const DEFAULT_SUBCARRIERS: usize = 64;
pub const DEFAULT_CP_LEN: usize = 16;

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

fn plan(n: usize, inverse: bool) -> Arc<dyn Fft<f64>> {
    PLANNER.with(|p| {
        let mut p = p.borrow_mut();
        if inverse {
            p.plan_fft_inverse(n)
        } else {
            p.plan_fft_forward(n)
        }
    })
}

/// Unitary forward DFT in place.
pub fn dft_unitary(buf: &mut [Complex64]) {
    let n = buf.len();
    if n == 0 {
        return;
    }
    plan(n, false).process(buf);
    let s = 1.0 / (n as f64).sqrt();
    buf.iter_mut().for_each(|v| *v *= s);
}

/// Unitary inverse DFT in place.
pub fn idft_unitary(buf: &mut [Complex64]) {
    let n = buf.len();
    if n == 0 {
        return;
    }
    plan(n, true).process(buf);
    let s = 1.0 / (n as f64).sqrt();
    buf.iter_mut().for_each(|v| *v *= s);
}

/// Non-normalized DFT of `taps` zero-padded to `n` points. This is the
/// per-subcarrier gain of a circular convolution with `taps`.
pub fn zero_padded_dft(taps: &[Complex64], n: usize) -> Vec<Complex64> {
    let mut buf = vec![Complex64::new(0.0, 0.0); n];
    for (i, t) in taps.iter().enumerate() {
        buf[i % n] += t;
    }
    plan(n, false).process(&mut buf);
    buf
}

/// Numerology shared by the transmitter and both receive chains.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OfdmParams {
    pub n_subcarriers: usize,
    pub cp_len: usize,
    pub sample_rate_hz: f64,
}

impl Default for OfdmParams {
    fn default() -> Self {
        Self {
            n_subcarriers: DEFAULT_SUBCARRIERS,
            cp_len: DEFAULT_CP_LEN,
            sample_rate_hz: DEFAULT_SAMPLE_RATE_HZ,
        }
    }
}

impl OfdmParams {
    pub fn validate(&self) -> Result<()> {
        if self.n_subcarriers == 0 {
            return Err(Error::config("n_subcarriers", "must be positive"));
        }
        if self.cp_len >= self.n_subcarriers {
            return Err(Error::config(
                "cp_len",
                format!(
                    "cyclic prefix ({}) must be shorter than the symbol ({})",
                    self.cp_len, self.n_subcarriers
                ),
            ));
        }
        if !(self.sample_rate_hz > 0.0) {
            return Err(Error::config("sample_rate_hz", "must be positive"));
        }
        Ok(())
    }

    pub fn symbol_len(&self) -> usize {
        self.n_subcarriers + self.cp_len
    }

    pub fn symbol_duration_s(&self) -> f64 {
        self.symbol_len() as f64 / self.sample_rate_hz
    }

    pub fn subcarrier_spacing_hz(&self) -> f64 {
        self.sample_rate_hz / self.n_subcarriers as f64
    }
}

/// Role of one OFDM symbol within a frame.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SymbolKind {
    /// Channel-ratio estimation symbol.
    Training,
    /// Extra symbol used to estimate the receiver third-order coefficient.
    NonlinearityTraining,
    Data,
}

/// Number of training and data symbols in one frame.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FrameStructure {
    pub n_training_symbols: usize,
    pub n_data_symbols: usize,
    /// Whether a nonlinearity-training symbol follows the channel training.
    pub nonlinearity_training: bool,
}

impl FrameStructure {
    pub fn new(n_training_symbols: usize, n_data_symbols: usize) -> Self {
        Self {
            n_training_symbols,
            n_data_symbols,
            nonlinearity_training: false,
        }
    }

    /// Smallest frame with `n_training_symbols` that meets the target
    /// overhead (training / data).
    pub fn with_overhead(n_training_symbols: usize, overhead: f64) -> Result<Self> {
        if !(overhead > 0.0) {
            return Err(Error::config("training_overhead", "must be positive"));
        }
        let n_data = (n_training_symbols as f64 / overhead).round() as usize;
        Ok(Self::new(n_training_symbols, n_data))
    }

    pub fn with_nonlinearity_training(mut self, enabled: bool) -> Self {
        self.nonlinearity_training = enabled;
        self
    }

    pub fn training_overhead(&self) -> f64 {
        self.n_training_symbols as f64 / self.n_data_symbols as f64
    }

    pub fn total_symbols(&self) -> usize {
        self.n_training_symbols + usize::from(self.nonlinearity_training) + self.n_data_symbols
    }

    pub fn symbol_kinds(&self) -> Vec<SymbolKind> {
        let mut kinds = vec![SymbolKind::Training; self.n_training_symbols];
        if self.nonlinearity_training {
            kinds.push(SymbolKind::NonlinearityTraining);
        }
        kinds.extend(std::iter::repeat_n(SymbolKind::Data, self.n_data_symbols));
        kinds
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_training_symbols == 0 {
            return Err(Error::config("n_training_symbols", "must be at least 1"));
        }
        if self.n_data_symbols == 0 {
            return Err(Error::config("n_data_symbols", "must be at least 1"));
        }
        Ok(())
    }
}

/// Frequency-domain symbols, one column per OFDM symbol.
#[derive(Debug, Clone, PartialEq)]
pub struct OfdmGrid {
    params: OfdmParams,
    symbols: Vec<Vec<Complex64>>,
    kinds: Vec<SymbolKind>,
}

impl OfdmGrid {
    pub fn new(params: OfdmParams, symbols: Vec<Vec<Complex64>>, kinds: Vec<SymbolKind>) -> Result<Self> {
        if symbols.len() != kinds.len() {
            return Err(Error::LengthMismatch {
                expected: symbols.len(),
                actual: kinds.len(),
            });
        }
        if let Some(bad) = symbols.iter().find(|s| s.len() != params.n_subcarriers) {
            return Err(Error::LengthMismatch {
                expected: params.n_subcarriers,
                actual: bad.len(),
            });
        }
        Ok(Self { params, symbols, kinds })
    }

    pub fn zeros(params: OfdmParams, kinds: Vec<SymbolKind>) -> Self {
        let symbols = vec![vec![Complex64::new(0.0, 0.0); params.n_subcarriers]; kinds.len()];
        Self { params, symbols, kinds }
    }

    /// Random unit-magnitude QPSK on every subcarrier of every symbol.
    pub fn random_qpsk<R: Rng + ?Sized>(params: OfdmParams, kinds: Vec<SymbolKind>, rng: &mut R) -> Self {
        let symbols = kinds.iter().map(|_| qpsk_symbol(params.n_subcarriers, rng)).collect();
        Self { params, symbols, kinds }
    }

    pub fn params(&self) -> &OfdmParams {
        &self.params
    }

    pub fn n_subcarriers(&self) -> usize {
        self.params.n_subcarriers
    }

    pub fn n_symbols(&self) -> usize {
        self.symbols.len()
    }

    pub fn symbols(&self) -> &[Vec<Complex64>] {
        &self.symbols
    }

    pub fn symbol(&self, idx: usize) -> &[Complex64] {
        &self.symbols[idx]
    }

    pub fn symbol_mut(&mut self, idx: usize) -> &mut Vec<Complex64> {
        &mut self.symbols[idx]
    }

    pub fn kinds(&self) -> &[SymbolKind] {
        &self.kinds
    }

    /// Indices of symbols of the given kind, in frame order.
    pub fn indices_of(&self, kind: SymbolKind) -> Vec<usize> {
        self.kinds
            .iter()
            .enumerate()
            .filter(|(_, k)| **k == kind)
            .map(|(i, _)| i)
            .collect()
    }

    /// Mean squared magnitude over every cell.
    pub fn power(&self) -> f64 {
        let n: usize = self.symbols.iter().map(Vec::len).sum();
        if n == 0 {
            return 0.0;
        }
        self.symbols.iter().flatten().map(|v| v.norm_sqr()).sum::<f64>() / n as f64
    }

    /// Mean squared magnitude over the symbols at `indices`.
    pub fn power_of(&self, indices: &[usize]) -> f64 {
        if indices.is_empty() {
            return 0.0;
        }
        let total: f64 = indices
            .iter()
            .flat_map(|&i| self.symbols[i].iter())
            .map(|v| v.norm_sqr())
            .sum();
        total / (indices.len() * self.params.n_subcarriers) as f64
    }

    pub fn scaled(&self, gain: Complex64) -> Self {
        let mut out = self.clone();
        out.symbols.iter_mut().flatten().for_each(|v| *v *= gain);
        out
    }

    fn check_same_shape(&self, other: &OfdmGrid) -> Result<()> {
        if self.n_symbols() != other.n_symbols() || self.n_subcarriers() != other.n_subcarriers() {
            return Err(Error::DimensionMismatch(format!(
                "{}x{} vs {}x{}",
                self.n_subcarriers(),
                self.n_symbols(),
                other.n_subcarriers(),
                other.n_symbols()
            )));
        }
        Ok(())
    }

    pub fn add(&self, other: &OfdmGrid) -> Result<Self> {
        self.check_same_shape(other)?;
        let mut out = self.clone();
        for (a, b) in out.symbols.iter_mut().zip(&other.symbols) {
            a.iter_mut().zip(b).for_each(|(x, y)| *x += y);
        }
        Ok(out)
    }

    pub fn sub(&self, other: &OfdmGrid) -> Result<Self> {
        self.check_same_shape(other)?;
        let mut out = self.clone();
        for (a, b) in out.symbols.iter_mut().zip(&other.symbols) {
            a.iter_mut().zip(b).for_each(|(x, y)| *x -= y);
        }
        Ok(out)
    }
}

/// One QPSK symbol vector with unit magnitude per subcarrier.
pub fn qpsk_symbol<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Vec<Complex64> {
    let a = std::f64::consts::FRAC_1_SQRT_2;
    (0..n)
        .map(|_| {
            let re = if rng.random::<bool>() { a } else { -a };
            let im = if rng.random::<bool>() { a } else { -a };
            Complex64::new(re, im)
        })
        .collect()
}

/// IDFT each symbol and prepend its cyclic prefix.
pub fn ofdm_modulate(grid: &OfdmGrid) -> Result<ComplexSignal> {
    let p = grid.params;
    p.validate()?;
    let n = p.n_subcarriers;
    let mut out = Vec::with_capacity(grid.n_symbols() * p.symbol_len());
    let ifft = plan(n, true);
    let scale = 1.0 / (n as f64).sqrt();
    let mut buf = vec![Complex64::new(0.0, 0.0); n];
    for sym in &grid.symbols {
        buf.copy_from_slice(sym);
        ifft.process(&mut buf);
        buf.iter_mut().for_each(|v| *v *= scale);
        out.extend_from_slice(&buf[n - p.cp_len..]);
        out.extend_from_slice(&buf);
    }
    ComplexSignal::new(out, p.sample_rate_hz)
}

/// Strip cyclic prefixes and DFT each symbol body.
pub fn ofdm_demodulate(sig: &ComplexSignal, params: &OfdmParams, kinds: &[SymbolKind]) -> Result<OfdmGrid> {
    params.validate()?;
    let sym_len = params.symbol_len();
    let expected = sym_len * kinds.len();
    if sig.len() != expected {
        return Err(Error::LengthMismatch {
            expected,
            actual: sig.len(),
        });
    }
    let n = params.n_subcarriers;
    let fft = plan(n, false);
    let scale = 1.0 / (n as f64).sqrt();
    let symbols = sig
        .samples()
        .chunks_exact(sym_len)
        .map(|chunk| {
            let mut buf = chunk[params.cp_len..].to_vec();
            fft.process(&mut buf);
            buf.iter_mut().for_each(|v| *v *= scale);
            buf
        })
        .collect();
    OfdmGrid::new(*params, symbols, kinds.to_vec())
}

/// Convenience: demodulate with the layout of a frame structure.
pub fn ofdm_demodulate_frame(sig: &ComplexSignal, params: &OfdmParams, frame: &FrameStructure) -> Result<OfdmGrid> {
    ofdm_demodulate(sig, params, &frame.symbol_kinds())
}
