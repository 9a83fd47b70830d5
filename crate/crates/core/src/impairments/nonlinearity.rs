//! Memoryless odd-order polynomial amplifier model.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::signal::{db_to_linear, ComplexSignal};

/// Odd-order polynomial `y = sum_m a_m g |g|^(m-1)`.
#[derive(Debug, Clone, PartialEq)]
pub struct NonlinearityConfig {
    /// `(order, coefficient)` pairs. Orders must be odd.
    pub terms: Vec<(u32, Complex64)>,
}

impl NonlinearityConfig {
    /// Unit-gain linear amplifier.
    pub fn linear() -> Self {
        Self {
            terms: vec![(1, Complex64::new(1.0, 0.0))],
        }
    }

    /// Unit linear gain plus a third-order term.
    pub fn third_order(alpha3: Complex64) -> Self {
        Self {
            terms: vec![(1, Complex64::new(1.0, 0.0)), (3, alpha3)],
        }
    }

    pub fn coefficient(&self, order: u32) -> Complex64 {
        self.terms.iter().filter(|(m, _)| *m == order).map(|(_, a)| *a).sum()
    }

    pub fn alpha1(&self) -> Complex64 {
        self.coefficient(1)
    }

    pub fn alpha3(&self) -> Complex64 {
        self.coefficient(3)
    }

    pub fn is_linear(&self) -> bool {
        self.terms.iter().all(|(m, a)| *m == 1 || a.norm() == 0.0)
    }

    pub fn validate(&self) -> Result<()> {
        if let Some((m, _)) = self.terms.iter().find(|(m, _)| m % 2 == 0) {
            return Err(Error::config(
                "nonlinearity.terms",
                format!("order {m} is even; only odd orders produce in-band distortion"),
            ));
        }
        if self.alpha1().norm() == 0.0 {
            return Err(Error::config("nonlinearity.alpha1", "linear gain must be nonzero"));
        }
        Ok(())
    }
}

/// Amplifier output together with its distortion-only component.
#[derive(Debug, Clone)]
pub struct NonlinearOutput {
    pub output: ComplexSignal,
    /// `output - alpha1 * input`.
    pub distortion: ComplexSignal,
}

/// Applies the polynomial sample by sample.
pub fn apply_nonlinearity(sig: &ComplexSignal, cfg: &NonlinearityConfig) -> Result<NonlinearOutput> {
    cfg.validate()?;
    let a1 = cfg.alpha1();
    let higher: Vec<(i32, Complex64)> = cfg
        .terms
        .iter()
        .filter(|(m, _)| *m != 1)
        .map(|&(m, a)| (m as i32 - 1, a))
        .collect();
    let mut out = Vec::with_capacity(sig.len());
    let mut dist = Vec::with_capacity(sig.len());
    for &g in sig.samples() {
        let mag = g.norm();
        let d: Complex64 = higher.iter().map(|&(p, a)| a * g * mag.powi(p)).sum();
        out.push(a1 * g + d);
        dist.push(d);
    }
    Ok(NonlinearOutput {
        output: sig.with_samples(out),
        distortion: sig.with_samples(dist),
    })
}

/// Distortion-to-linear power ratio (dB) of `cfg` on `reference`.
pub fn distortion_ratio_db(reference: &ComplexSignal, cfg: &NonlinearityConfig) -> Result<f64> {
    let out = apply_nonlinearity(reference, cfg)?;
    let lin = reference.power() * cfg.alpha1().norm_sqr();
    Ok(10.0 * (out.distortion.power() / lin).log10())
}

/// Third-order coefficient giving `target_dbc` distortion relative to the
/// unit-gain linear term on `reference`. The coefficient is negative real
/// (compressive). A target of negative infinity returns zero.
pub fn calibrate_alpha3(reference: &ComplexSignal, target_dbc: f64) -> Result<Complex64> {
    let p2 = reference.power();
    if !(p2 > 0.0) {
        return Err(Error::Degenerate("reference signal has zero power".into()));
    }
    if target_dbc == f64::NEG_INFINITY {
        return Ok(Complex64::new(0.0, 0.0));
    }
    let p6 = reference.samples().iter().map(|s| s.norm_sqr().powi(3)).sum::<f64>() / reference.len() as f64;
    let mag = (db_to_linear(target_dbc) * p2 / p6).sqrt();
    Ok(Complex64::new(-mag, 0.0))
}
