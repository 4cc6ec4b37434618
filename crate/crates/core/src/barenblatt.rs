//! The one-dimensional Barenblatt source solution of `∂ₜU = ∂ₓ²(U^m)`,
//! `m > 1`, normalized to unit mass. Used as an accuracy oracle.

use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};

/// `U(x,t) = t^{-β} (C − k x² t^{-2β})₊^{1/(m−1)}` with `β = 1/(m+1)` and
/// `k = (m−1)β/(2m)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Barenblatt {
    pub m: f64,
    pub beta: f64,
    pub k: f64,
    pub c: f64,
}

impl Barenblatt {
    pub fn new(m: f64) -> Result<Self> {
        if !(m > 1.0 && m.is_finite()) {
            return Err(Error::Domain(format!("the Barenblatt profile needs m > 1, got {m}")));
        }
        let beta = 1.0 / (m + 1.0);
        let k = (m - 1.0) * beta / (2.0 * m);
        let p = 1.0 / (m - 1.0);
        // ∫(C − k y²)₊^p dy = C^{p+1/2} B(1/2, p+1) / √k.
        let ln_b = ln_gamma(0.5) + ln_gamma(p + 1.0) - ln_gamma(p + 1.5);
        let c = ((0.5 * k.ln() - ln_b) / (p + 0.5)).exp();
        Ok(Self { m, beta, k, c })
    }

    pub fn eval(&self, t: f64, x: f64) -> Result<f64> {
        if !(t > 0.0 && t.is_finite()) {
            return Err(Error::Domain(format!("time {t} must be positive")));
        }
        let s = t.powf(-self.beta);
        let core = self.c - self.k * x * x * s * s;
        Ok(if core > 0.0 { s * core.powf(1.0 / (self.m - 1.0)) } else { 0.0 })
    }

    /// Edge of the support, `√(C/k) t^β`.
    pub fn support_radius(&self, t: f64) -> f64 {
        (self.c / self.k).sqrt() * t.powf(self.beta)
    }
}

/// Unit-mass Barenblatt profile `U(x,t)` for exponent `m > 1`.
pub fn barenblatt(m: f64, t: f64, x: f64) -> Result<f64> {
    Barenblatt::new(m)?.eval(t, x)
}
