//! Continuous nondecreasing nonlinearities `φ` with `φ(0) = 0`.

use std::fmt;

use crate::error::{Error, Result};
use crate::quadrature::composite_rule;

/// Panels of the fixed rule used to convolve with the mollifier.
const MOLLIFIER_PANELS: usize = 64;

/// Piecewise linear nondecreasing function through sorted breakpoints,
/// extended linearly beyond the last segments.
#[derive(Debug, Clone, PartialEq)]
pub struct MonotoneTable {
    xs: Vec<f64>,
    ys: Vec<f64>,
    /// Mollification radius this table was produced with, if any.
    eta: Option<f64>,
}

impl MonotoneTable {
    /// Rejects unsorted abscissae, decreasing values, ranges not containing
    /// 0, and `φ(0) ≠ 0`.
    pub fn new(xs: Vec<f64>, ys: Vec<f64>) -> Result<Self> {
        Self::build(xs, ys, None)
    }

    fn build(xs: Vec<f64>, ys: Vec<f64>, eta: Option<f64>) -> Result<Self> {
        if xs.len() != ys.len() || xs.len() < 2 {
            return Err(Error::Domain("a table needs at least two (x, y) pairs of equal length".into()));
        }
        if xs.iter().chain(&ys).any(|v| !v.is_finite()) {
            return Err(Error::Domain("table entries must be finite".into()));
        }
        if let Some(i) = xs.windows(2).position(|w| w[1] <= w[0]) {
            return Err(Error::Domain(format!("breakpoints not strictly increasing at index {}", i + 1)));
        }
        if let Some(i) = ys.windows(2).position(|w| w[1] < w[0]) {
            return Err(Error::Domain(format!("table values decrease at index {}", i + 1)));
        }
        if xs[0] > 0.0 || *xs.last().unwrap() < 0.0 {
            return Err(Error::Domain("table range must contain 0".into()));
        }
        let table = Self { xs, ys, eta };
        let at_zero = table.eval(0.0);
        let scale = table.ys.iter().fold(1.0f64, |m, y| m.max(y.abs()));
        if at_zero.abs() > 1e-12 * scale {
            return Err(Error::Domain(format!("table value at 0 is {at_zero}, expected 0")));
        }
        Ok(table)
    }

    pub fn breakpoints(&self) -> (&[f64], &[f64]) {
        (&self.xs, &self.ys)
    }

    pub fn eta(&self) -> Option<f64> {
        self.eta
    }

    fn slope(&self, i: usize) -> f64 {
        (self.ys[i + 1] - self.ys[i]) / (self.xs[i + 1] - self.xs[i])
    }

    pub fn eval(&self, r: f64) -> f64 {
        let n = self.xs.len();
        let i = match self.xs.partition_point(|&x| x <= r) {
            0 => 0,
            k if k >= n => n - 2,
            k => k - 1,
        };
        self.ys[i] + self.slope(i) * (r - self.xs[i])
    }

    /// Largest slope of a segment meeting `[-m, m]`.
    pub fn lipschitz_on(&self, m: f64) -> f64 {
        let n = self.xs.len();
        (0..n - 1)
            .filter(|&i| {
                let (a, b) = (self.xs[i], self.xs[i + 1]);
                // End segments extend to ±∞.
                let a = if i == 0 { f64::NEG_INFINITY } else { a };
                let b = if i == n - 2 { f64::INFINITY } else { b };
                a <= m && b >= -m
            })
            .map(|i| self.slope(i))
            .fold(0.0, f64::max)
    }
}

/// A continuous nondecreasing `φ: ℝ → ℝ` with `φ(0) = 0`.
#[derive(Debug, Clone, PartialEq)]
pub enum Nonlinearity {
    /// `r |r|^{m-1}`: porous medium for `m > 1`, fast diffusion for `m < 1`.
    Power { m: f64 },
    /// `c₂ r` for `r < 0`, `c₁ (r - latent)⁺` for `r ≥ 0`.
    Stefan { c1: f64, c2: f64, latent: f64 },
    /// `a r`.
    Linear { a: f64 },
    Table(MonotoneTable),
}

impl Nonlinearity {
    pub fn power(m: f64) -> Result<Self> {
        if !(m > 0.0 && m.is_finite()) {
            return Err(Error::Domain(format!("power exponent {m} must be positive")));
        }
        Ok(Nonlinearity::Power { m })
    }

    pub fn stefan(c1: f64, c2: f64, latent: f64) -> Result<Self> {
        if !(c1 > 0.0 && c2 > 0.0 && latent > 0.0) || ![c1, c2, latent].iter().all(|v| v.is_finite()) {
            return Err(Error::Domain("Stefan parameters must be positive".into()));
        }
        Ok(Nonlinearity::Stefan { c1, c2, latent })
    }

    pub fn linear(a: f64) -> Result<Self> {
        if !(a >= 0.0 && a.is_finite()) {
            return Err(Error::Domain(format!("linear coefficient {a} must be nonnegative")));
        }
        Ok(Nonlinearity::Linear { a })
    }

    pub fn table(xs: Vec<f64>, ys: Vec<f64>) -> Result<Self> {
        MonotoneTable::new(xs, ys).map(Nonlinearity::Table)
    }

    pub fn eval(&self, r: f64) -> f64 {
        match self {
            Nonlinearity::Power { m } => {
                if *m == 1.0 {
                    r
                } else if *m == 2.0 {
                    r * r.abs()
                } else {
                    r.signum() * r.abs().powf(*m)
                }
            }
            Nonlinearity::Stefan { c1, c2, latent } => {
                if r < 0.0 {
                    c2 * r
                } else {
                    c1 * (r - latent).max(0.0)
                }
            }
            Nonlinearity::Linear { a } => a * r,
            Nonlinearity::Table(t) => t.eval(r),
        }
    }

    /// Upper bound on the slope of `φ` over `[-m, m]`; `∞` when `φ` has a
    /// cusp there.
    pub fn lipschitz_on(&self, m: f64) -> f64 {
        match self {
            Nonlinearity::Power { m: p } => {
                if *p >= 1.0 {
                    p * m.powf(p - 1.0)
                } else {
                    f64::INFINITY
                }
            }
            Nonlinearity::Stefan { c1, c2, .. } => c1.max(*c2),
            Nonlinearity::Linear { a } => *a,
            Nonlinearity::Table(t) => t.lipschitz_on(m),
        }
    }

    /// Whether this is a fast-diffusion power `m < 1`.
    pub fn is_fast_diffusion(&self) -> bool {
        matches!(self, Nonlinearity::Power { m } if *m < 1.0)
    }

    /// Tabulates `φ_η(x) = (φ∗ω_η)(x) - (φ∗ω_η)(0)` on `[-range, range]`
    /// with step `η/8`, for the bump mollifier `ω ∝ exp(-1/(1-y²))` on
    /// `[-1, 1]`.
    ///
    /// The convolution uses one fixed positive-weight rule for every
    /// abscissa, so the table is nondecreasing exactly, not just up to
    /// quadrature error.
    pub fn mollify(&self, eta: f64, range: f64) -> Result<Nonlinearity> {
        if !(eta > 0.0 && eta.is_finite()) {
            return Err(Error::Domain(format!("mollification radius {eta} must be positive")));
        }
        if !(range > 0.0 && range.is_finite()) {
            return Err(Error::Domain(format!("mollification range {range} must be positive")));
        }
        let rule: Vec<(f64, f64)> = composite_rule(-1.0, 1.0, MOLLIFIER_PANELS)
            .into_iter()
            .map(|(y, w)| (y, w * bump_profile(y)))
            .collect();
        let norm: f64 = rule.iter().map(|(_, w)| w).sum();
        let rule: Vec<(f64, f64)> = rule.into_iter().map(|(y, w)| (y, w / norm)).collect();
        let smooth = |x: f64| -> f64 { rule.iter().map(|&(y, p)| p * self.eval(x - eta * y)).sum() };

        let step = eta / 8.0;
        let k = (range / step).ceil() as i64;
        let offset = smooth(0.0);
        let xs: Vec<f64> = (-k..=k).map(|i| i as f64 * step).collect();
        let ys: Vec<f64> = xs
            .iter()
            .map(|&x| if x == 0.0 { 0.0 } else { smooth(x) - offset })
            .collect();
        MonotoneTable::build(xs, ys, Some(eta)).map(Nonlinearity::Table)
    }
}

fn bump_profile(y: f64) -> f64 {
    if y.abs() >= 1.0 {
        0.0
    } else {
        (-1.0 / (1.0 - y * y)).exp()
    }
}

impl fmt::Display for Nonlinearity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Nonlinearity::Power { m } => write!(f, "power(m={m})"),
            Nonlinearity::Stefan { c1, c2, latent } => write!(f, "stefan(c1={c1}, c2={c2}, latent={latent})"),
            Nonlinearity::Linear { a } => write!(f, "linear(a={a})"),
            Nonlinearity::Table(t) => match t.eta {
                Some(eta) => write!(f, "mollified table({} points, eta={eta})", t.xs.len()),
                None => write!(f, "table({} points)", t.xs.len()),
            },
        }
    }
}
