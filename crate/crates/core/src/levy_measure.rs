//! Symmetric Lévy measures on ℝᴺ \ {0}.
//!
//! A measure is one of a small set of families: the fractional Laplacian
//! density `c_{N,s} |z|^{-N-s}`, finite sums of symmetric point masses,
//! radially symmetric densities, and restrictions `1_{|z|>r} μ` of any of
//! those. All quantities the discretization needs (cell masses, tail masses,
//! second moments of the origin cell, the Lévy functional) are computed here.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use statrs::function::gamma::gamma;

use crate::discrete_operator::StencilWeights;
use crate::error::{Error, Result};
use crate::quadrature::{integrate, integrate_box, integrate_pieces, Shell, Tolerance};

/// Relative tolerance used for every cell integral.
pub const CELL_REL_TOL: f64 = 1e-10;

/// Surface area of the unit sphere in ℝᴺ.
pub fn sphere_area(dim: usize) -> f64 {
    let n = dim as f64;
    2.0 * PI.powf(n / 2.0) / gamma(n / 2.0)
}

/// A point mass at `offset`.
#[derive(Debug, Clone, PartialEq)]
pub struct Atom {
    pub offset: Vec<f64>,
    pub mass: f64,
}

impl Atom {
    pub fn new(offset: Vec<f64>, mass: f64) -> Self {
        Self { offset, mass }
    }

    fn norm(&self) -> f64 {
        self.offset.iter().map(|x| x * x).sum::<f64>().sqrt()
    }
}

/// Radial profile `f` of a density `dμ = f(|z|) dz`.
#[derive(Clone)]
pub enum RadialProfile {
    /// `scale · e^{-decay r} · r^{-N-order}`, a tempered stable density.
    Tempered { scale: f64, order: f64, decay: f64 },
    /// `mass · (2π width²)^{-N/2} · e^{-r²/(2 width²)}`, a finite measure.
    Gaussian { mass: f64, width: f64 },
    /// Arbitrary profile. `dim` is passed alongside `r`.
    Custom {
        label: String,
        f: Arc<dyn Fn(usize, f64) -> f64 + Send + Sync>,
    },
}

impl fmt::Debug for RadialProfile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RadialProfile::Tempered { scale, order, decay } => f
                .debug_struct("Tempered")
                .field("scale", scale)
                .field("order", order)
                .field("decay", decay)
                .finish(),
            RadialProfile::Gaussian { mass, width } => {
                f.debug_struct("Gaussian").field("mass", mass).field("width", width).finish()
            }
            RadialProfile::Custom { label, .. } => f.debug_struct("Custom").field("label", label).finish(),
        }
    }
}

impl RadialProfile {
    pub fn eval(&self, dim: usize, r: f64) -> f64 {
        match self {
            RadialProfile::Tempered { scale, order, decay } => {
                scale * (-decay * r).exp() * r.powf(-(dim as f64) - order)
            }
            RadialProfile::Gaussian { mass, width } => {
                let n = dim as f64;
                mass * (2.0 * PI * width * width).powf(-n / 2.0) * (-r * r / (2.0 * width * width)).exp()
            }
            RadialProfile::Custom { f, .. } => f(dim, r),
        }
    }
}

/// The family a [`LevyMeasure`] belongs to.
#[derive(Debug, Clone)]
pub enum MeasureKind {
    FractionalLaplacian {
        dim: usize,
        order: f64,
        constant: f64,
    },
    DiracSum {
        dim: usize,
        atoms: Vec<Atom>,
    },
    RadialDensity {
        dim: usize,
        profile: RadialProfile,
        /// Whether the density is declared integrable at infinity. When
        /// unset, the tail is checked shell by shell for convergence.
        integrable_tail: bool,
        finite_near_origin: bool,
    },
    /// `1_{|z| > radius} · base`.
    Truncated { base: Box<LevyMeasure>, radius: f64 },
}

/// A nonnegative symmetric measure with `∫ min(|z|², 1) dμ < ∞`.
///
/// Construct through the validating constructors; values are immutable.
#[derive(Debug, Clone)]
pub struct LevyMeasure {
    kind: MeasureKind,
}

impl LevyMeasure {
    /// Density `c_{N,s} |z|^{-N-s}` of `-(-Δ)^{s/2}`.
    pub fn fractional(dim: usize, order: f64) -> Result<Self> {
        if dim == 0 {
            return Err(Error::Domain("dimension must be at least 1".into()));
        }
        let constant = fractional_constant(dim, order)?;
        Ok(Self {
            kind: MeasureKind::FractionalLaplacian { dim, order, constant },
        })
    }

    /// Sum of point masses; the atom set must be closed under `z ↦ -z` with
    /// equal masses.
    pub fn dirac_sum(dim: usize, atoms: Vec<Atom>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::Domain("dimension must be at least 1".into()));
        }
        for a in &atoms {
            if a.offset.len() != dim {
                return Err(Error::Domain(format!("atom {:?} is not in dimension {dim}", a.offset)));
            }
            if !(a.mass > 0.0 && a.mass.is_finite()) {
                return Err(Error::Domain(format!("atom mass {} must be positive", a.mass)));
            }
            if a.offset.iter().all(|&x| x == 0.0) {
                return Err(Error::Domain("atoms must lie away from the origin".into()));
            }
        }
        let same = |x: f64, y: f64| (x - y).abs() <= 1e-12 * x.abs().max(y.abs()).max(1.0);
        for a in &atoms {
            let mirrored = atoms
                .iter()
                .any(|b| same(a.mass, b.mass) && a.offset.iter().zip(&b.offset).all(|(x, y)| same(*x, -*y)));
            if !mirrored {
                return Err(Error::Domain(format!(
                    "atom at {:?} has no mirror image with equal mass",
                    a.offset
                )));
            }
        }
        Ok(Self {
            kind: MeasureKind::DiracSum { dim, atoms },
        })
    }

    /// Radially symmetric density `f(|z|)`; rejected unless it satisfies the
    /// Lévy integrability condition.
    pub fn radial(dim: usize, profile: RadialProfile, integrable_tail: bool) -> Result<Self> {
        if dim == 0 {
            return Err(Error::Domain("dimension must be at least 1".into()));
        }
        let area = sphere_area(dim);
        let radial = |r: f64| area * r.powi(dim as i32 - 1) * profile.eval(dim, r);
        let inner_mass = shell_sum(&radial, ShellDirection::Inward);
        let measure = Self {
            kind: MeasureKind::RadialDensity {
                dim,
                profile: profile.clone(),
                integrable_tail,
                finite_near_origin: inner_mass.is_ok(),
            },
        };
        measure.levy_functional()?;
        Ok(measure)
    }

    /// Restriction `1_{|z| > radius} μ`; a finite measure.
    pub fn truncated(base: LevyMeasure, radius: f64) -> Result<Self> {
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(Error::Domain(format!("truncation radius {radius} must be positive")));
        }
        Ok(Self {
            kind: MeasureKind::Truncated {
                base: Box::new(base),
                radius,
            },
        })
    }

    pub fn kind(&self) -> &MeasureKind {
        &self.kind
    }

    pub fn dim(&self) -> usize {
        match &self.kind {
            MeasureKind::FractionalLaplacian { dim, .. }
            | MeasureKind::DiracSum { dim, .. }
            | MeasureKind::RadialDensity { dim, .. } => *dim,
            MeasureKind::Truncated { base, .. } => base.dim(),
        }
    }

    /// Whether the measure may charge neighborhoods of the origin infinitely.
    pub fn singular_at_origin(&self) -> bool {
        match &self.kind {
            MeasureKind::FractionalLaplacian { .. } => true,
            MeasureKind::RadialDensity { finite_near_origin, .. } => !finite_near_origin,
            MeasureKind::DiracSum { .. } | MeasureKind::Truncated { .. } => false,
        }
    }

    /// Whether the measure has point masses.
    pub fn has_atoms(&self) -> bool {
        match &self.kind {
            MeasureKind::DiracSum { .. } => true,
            MeasureKind::Truncated { base, .. } => base.has_atoms(),
            _ => false,
        }
    }

    /// Lebesgue density at `z`, for the absolutely continuous families.
    fn density(&self, z: &[f64]) -> f64 {
        let r = z.iter().map(|x| x * x).sum::<f64>().sqrt();
        match &self.kind {
            MeasureKind::FractionalLaplacian { dim, order, constant } => {
                constant * r.powf(-(*dim as f64) - order)
            }
            MeasureKind::RadialDensity { dim, profile, .. } => profile.eval(*dim, r),
            MeasureKind::Truncated { base, radius } => {
                if r > *radius {
                    base.density(z)
                } else {
                    0.0
                }
            }
            MeasureKind::DiracSum { .. } => 0.0,
        }
    }

    /// Radial integral `∫_{a<|z|≤b} g(|z|) dμ(z)`.
    fn radial_integral<G: Fn(f64) -> f64>(&self, g: &G, a: f64, b: f64) -> Result<f64> {
        if a >= b {
            return Ok(0.0);
        }
        match &self.kind {
            MeasureKind::DiracSum { atoms, .. } => Ok(atoms
                .iter()
                .filter(|at| {
                    let r = at.norm();
                    r > a && r <= b
                })
                .map(|at| at.mass * g(at.norm()))
                .sum()),
            MeasureKind::Truncated { base, radius } => base.radial_integral(g, a.max(*radius), b),
            MeasureKind::FractionalLaplacian { dim, .. } | MeasureKind::RadialDensity { dim, .. } => {
                let area = sphere_area(*dim);
                let dim = *dim;
                let radial = |r: f64| {
                    let mut z = vec![0.0; dim];
                    z[0] = r;
                    area * r.powi(dim as i32 - 1) * self.density(&z) * g(r)
                };
                if b.is_finite() && a > 0.0 {
                    return integrate(radial, a, b, Tolerance::relative(CELL_REL_TOL)).map(|e| e.value);
                }
                // Unbounded or touching the origin: dyadic shells.
                let mut total = 0.0;
                if a == 0.0 {
                    let top = if b.is_finite() { b } else { 1.0 };
                    total += shell_sum(&|r| radial(r * top) * top, ShellDirection::Inward)?;
                    if b.is_finite() {
                        return Ok(total);
                    }
                    total += shell_sum(&radial, ShellDirection::Outward)?;
                    return Ok(total);
                }
                // a > 0, b = ∞
                Ok(shell_sum(&|r| radial(r * a) * a, ShellDirection::Outward)?)
            }
        }
    }

    /// `μ({|z| > r})`.
    pub fn mass_outside(&self, r: f64) -> Result<f64> {
        match &self.kind {
            MeasureKind::FractionalLaplacian { dim, order, constant } => {
                if r <= 0.0 {
                    return Ok(f64::INFINITY);
                }
                Ok(constant * sphere_area(*dim) * r.powf(-order) / order)
            }
            MeasureKind::Truncated { base, radius } => base.mass_outside(r.max(*radius)),
            _ => self.radial_integral(&|_| 1.0, r.max(0.0), f64::INFINITY),
        }
    }

    /// `∫ min(|z|², 1) dμ(z)`.
    pub fn levy_functional(&self) -> Result<f64> {
        match &self.kind {
            MeasureKind::FractionalLaplacian { dim, order, constant } => {
                Ok(constant * sphere_area(*dim) * (1.0 / (2.0 - order) + 1.0 / order))
            }
            MeasureKind::Truncated { base, radius } => {
                if let MeasureKind::FractionalLaplacian { dim, order, constant } = &base.kind {
                    let area = constant * sphere_area(*dim);
                    let inner = if *radius < 1.0 {
                        (1.0 - radius.powf(2.0 - order)) / (2.0 - order)
                    } else {
                        0.0
                    };
                    return Ok(area * (inner + radius.max(1.0).powf(-order) / order));
                }
                let near = self.radial_integral(&|r| r * r, 0.0, 1.0)?;
                Ok(near + self.mass_outside(1.0)?)
            }
            _ => {
                let near = self
                    .radial_integral(&|r| r * r, 0.0, 1.0)
                    .map_err(|_| Error::NotLevy("∫_{|z|≤1} |z|² dμ diverges".into()))?;
                let far = self
                    .mass_outside(1.0)
                    .map_err(|_| Error::NotLevy("∫_{|z|>1} dμ diverges".into()))?;
                if let MeasureKind::RadialDensity { integrable_tail: false, .. } = &self.kind {
                    if !far.is_finite() {
                        return Err(Error::NotLevy("∫_{|z|>1} dμ diverges".into()));
                    }
                }
                Ok(near + far)
            }
        }
    }

    /// Mass of the half-open box `[lo, hi)`.
    ///
    /// Point masses are located exactly; densities are integrated with
    /// relative tolerance [`CELL_REL_TOL`].
    pub fn cell_mass(&self, lo: &[f64], hi: &[f64]) -> Result<f64> {
        self.box_integral(lo, hi, Shell::ALL, Weight::One)
    }

    /// `∫_{[lo,hi) ∩ shell} z_axis² dμ(z)`.
    pub fn second_moment_in_box(&self, lo: &[f64], hi: &[f64], axis: usize) -> Result<f64> {
        self.box_integral(lo, hi, Shell::ALL, Weight::Square(axis))
    }

    /// Mass of `[lo, hi) ∩ {r_in < |z| ≤ r_out}`.
    pub fn box_shell_mass(&self, lo: &[f64], hi: &[f64], shell: Shell) -> Result<f64> {
        self.box_integral(lo, hi, shell, Weight::One)
    }

    fn box_integral(&self, lo: &[f64], hi: &[f64], shell: Shell, weight: Weight) -> Result<f64> {
        let dim = self.dim();
        if lo.len() != dim || hi.len() != dim {
            return Err(Error::Mismatch(format!("cell of dimension {} for measure in dimension {dim}", lo.len())));
        }
        if lo.iter().zip(hi).any(|(a, b)| a >= b) {
            return Ok(0.0);
        }
        match &self.kind {
            MeasureKind::DiracSum { atoms, .. } => Ok(atoms
                .iter()
                .filter(|at| {
                    let r = at.norm();
                    r > shell.r_in
                        && r <= shell.r_out
                        && at.offset.iter().zip(lo.iter().zip(hi)).all(|(x, (a, b))| a <= x && x < b)
                })
                .map(|at| at.mass * weight.eval(&at.offset))
                .sum()),
            MeasureKind::Truncated { base, radius } => {
                let shell = Shell {
                    r_in: shell.r_in.max(*radius),
                    r_out: shell.r_out,
                };
                base.box_integral(lo, hi, shell, weight)
            }
            _ => {
                let contains_origin = lo.iter().zip(hi).all(|(a, b)| *a <= 0.0 && 0.0 <= *b);
                if contains_origin && shell.r_in == 0.0 {
                    if let Weight::Square(axis) = weight {
                        return self.origin_second_moment(lo, hi, axis);
                    }
                    if self.singular_at_origin() {
                        return Err(Error::SingularCell(format!(
                            "box {lo:?}..{hi:?} touches the origin of a singular measure"
                        )));
                    }
                }
                let f = |z: &[f64]| self.density(z) * weight.eval(z);
                integrate_box(&f, lo, hi, shell, CELL_REL_TOL)
            }
        }
    }

    /// Second moment of a box containing the origin: the ball of radius
    /// `ρ = min distance to the faces` is integrated radially (using cube
    /// symmetry when the box is centered), the remainder as a bounded box
    /// integral.
    fn origin_second_moment(&self, lo: &[f64], hi: &[f64], axis: usize) -> Result<f64> {
        let dim = self.dim();
        let centered = lo.iter().zip(hi).all(|(a, b)| (a + b).abs() <= 1e-14 * (b - a))
            && lo.iter().zip(hi).all(|(a, b)| ((b - a) - (hi[0] - lo[0])).abs() <= 1e-14 * (b - a));
        if !centered {
            return Err(Error::SingularCell(
                "second moments are only evaluated on origin-centered cubes".into(),
            ));
        }
        let rho = 0.5 * (hi[0] - lo[0]);
        // ∫_{|z|≤ρ} z_axis² dμ = (1/N) ∫_{|z|≤ρ} |z|² dμ by rotational symmetry.
        let ball = match &self.kind {
            MeasureKind::FractionalLaplacian { dim, order, constant } => {
                constant * sphere_area(*dim) * rho.powf(2.0 - order) / (2.0 - order)
            }
            _ => self.radial_integral(&|r| r * r, 0.0, rho)?,
        } / dim as f64;
        let f = |z: &[f64]| self.density(z) * z[axis] * z[axis];
        let rest = integrate_box(&f, lo, hi, Shell::outside(rho), CELL_REL_TOL)?;
        Ok(ball + rest)
    }
}

#[derive(Clone, Copy)]
enum Weight {
    One,
    Square(usize),
}

impl Weight {
    fn eval(self, z: &[f64]) -> f64 {
        match self {
            Weight::One => 1.0,
            Weight::Square(axis) => z[axis] * z[axis],
        }
    }
}

#[derive(Clone, Copy)]
enum ShellDirection {
    /// Shells `[2^{-k-1}, 2^{-k}]`, k = 0, 1, ...
    Inward,
    /// Shells `[2^k, 2^{k+1}]`, k = 0, 1, ...
    Outward,
}

/// Sums `∫ g` over dyadic shells until the contributions are negligible.
///
/// Power-law behavior makes successive shells shrink by a fixed ratio; once
/// that ratio has settled the remaining geometric tail is added in closed
/// form. A ratio that settles at or above one means divergence.
fn shell_sum<G: Fn(f64) -> f64>(g: &G, direction: ShellDirection) -> Result<f64> {
    const MAX_SHELLS: i32 = 400;
    let mut total = 0.0;
    let mut previous = f64::NAN;
    let mut previous_ratio = f64::NAN;
    for k in 0..MAX_SHELLS {
        let (a, b) = match direction {
            ShellDirection::Inward => (2f64.powi(-k - 1), 2f64.powi(-k)),
            ShellDirection::Outward => (2f64.powi(k), 2f64.powi(k + 1)),
        };
        let piece = integrate_pieces(g, a, b, &[], Tolerance { rel: 1e-12, abs: 1e-300 })?.value;
        if !piece.is_finite() {
            return Err(Error::NotLevy("non-finite radial integral".into()));
        }
        total += piece;
        if k >= 4 && piece.abs() <= 1e-16 * total.abs() {
            return Ok(total);
        }
        if total == 0.0 && k >= 8 {
            return Ok(0.0);
        }
        let ratio = piece / previous;
        if k >= 12 && (ratio - previous_ratio).abs() <= 1e-6 * ratio.abs() {
            if ratio >= 1.0 - 1e-9 {
                return Err(Error::NotLevy("radial integral diverges".into()));
            }
            return Ok(total + piece * ratio / (1.0 - ratio));
        }
        previous = piece;
        previous_ratio = ratio;
    }
    Err(Error::NotLevy("radial integral does not converge".into()))
}

/// `∫_ℝ (1 - cos t) |t|^{-1-s} dt`, evaluated as a convergent series on
/// `[0, 1]` and an integrated-by-parts oscillatory tail on `[1, ∞)`.
fn one_dim_cosine_integral(s: f64) -> Result<f64> {
    // ∫_0^1 (1 - cos t) t^{-1-s} dt = Σ_{k≥1} (-1)^{k+1} / ((2k)! (2k - s)).
    let mut inner = 0.0;
    let mut factorial = 1.0;
    for k in 1..40 {
        let two_k = 2.0 * k as f64;
        factorial *= (two_k - 1.0) * two_k;
        let term = 1.0 / (factorial * (two_k - s));
        inner += if k % 2 == 1 { term } else { -term };
        if term < 1e-18 * inner.abs() {
            break;
        }
    }
    // ∫_1^∞ t^{-1-s} dt = 1/s, minus ∫_1^∞ cos t · t^{-1-s} dt.
    let cos_tail = oscillatory_tail(1.0 + s, true)?;
    Ok(2.0 * (inner + 1.0 / s - cos_tail))
}

/// `∫_1^∞ cos t · t^{-a} dt` (or `sin` when `cosine` is false), reduced by
/// repeated integration by parts until the remaining integrand decays fast
/// enough to be truncated at `t = 400`.
fn oscillatory_tail(a: f64, cosine: bool) -> Result<f64> {
    const DEPTH: usize = 4;
    const UPPER: f64 = 400.0;
    let (s1, c1) = 1f64.sin_cos();
    // I_c(a) = -sin 1 + a I_s(a+1);  I_s(a) = cos 1 - a I_c(a+1).
    let mut coeff = 1.0;
    let mut acc = 0.0;
    let mut exponent = a;
    let mut is_cos = cosine;
    for _ in 0..DEPTH {
        if is_cos {
            acc += coeff * -s1;
            coeff *= exponent;
        } else {
            acc += coeff * c1;
            coeff *= -exponent;
        }
        exponent += 1.0;
        is_cos = !is_cos;
    }
    let breaks: Vec<f64> = (1..(UPPER / PI) as usize).map(|k| k as f64 * PI).collect();
    let rest = integrate_pieces(
        |t| {
            let osc = if is_cos { t.cos() } else { t.sin() };
            osc * t.powf(-exponent)
        },
        1.0,
        UPPER,
        &breaks,
        Tolerance { rel: 1e-13, abs: 1e-300 },
    )?
    .value;
    Ok(acc + coeff * rest)
}

/// Normalization `c_{N,s} = (∫_{ℝᴺ} (1 - cos z₁) |z|^{-N-s} dz)^{-1}` making
/// the Fourier symbol of the fractional measure equal to `|ξ|^s`.
///
/// The transverse coordinates are integrated out in closed form, reducing the
/// integral to a one-dimensional one.
pub fn fractional_constant(dim: usize, order: f64) -> Result<f64> {
    if !(order > 0.0 && order < 2.0) {
        return Err(Error::Domain(format!("fractional order {order} outside (0, 2)")));
    }
    if dim == 0 {
        return Err(Error::Domain("dimension must be at least 1".into()));
    }
    let n = dim as f64;
    // ∫_{ℝ^{N-1}} (t² + |y|²)^{-(N+s)/2} dy = |t|^{-1-s} π^{(N-1)/2} Γ((1+s)/2) / Γ((N+s)/2)
    let transverse = PI.powf((n - 1.0) / 2.0) * gamma((1.0 + order) / 2.0) / gamma((n + order) / 2.0);
    Ok(1.0 / (transverse * one_dim_cosine_integral(order)?))
}

/// `(c_{N,s} / 2N) ∫_{|z|≤1} |z|² |z|^{-N-s} dz`: the coefficient multiplying
/// `Δψ` in the small-jump part of the fractional operator. Tends to 1 as
/// `s → 2⁻`.
pub fn local_limit_coefficient(dim: usize, order: f64) -> Result<f64> {
    let c = fractional_constant(dim, order)?;
    Ok(c * sphere_area(dim) / (2.0 - order) / (2.0 * dim as f64))
}

/// Fourier symbol `Σ_α w_α (1 - cos(z_α · ξ))` of an assembled stencil.
///
/// The absorbed tail, when present, adds a constant that is not included.
pub fn symbol(weights: &StencilWeights, xi: &[f64]) -> f64 {
    let h = weights.spacing();
    weights
        .iter()
        .map(|(alpha, w)| {
            let phase: f64 = alpha.iter().zip(xi).map(|(&a, &x)| a as f64 * h * x).sum();
            w * (1.0 - phase.cos())
        })
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn closed_form_constant(dim: usize, s: f64) -> f64 {
        let n = dim as f64;
        s * 2f64.powf(s - 1.0) * gamma((n + s) / 2.0) / (PI.powf(n / 2.0) * gamma(1.0 - s / 2.0))
    }

    #[test]
    fn constant_known_values() {
        assert_relative_eq!(fractional_constant(1, 1.0).unwrap(), 1.0 / PI, max_relative = 1e-10);
        assert_relative_eq!(fractional_constant(2, 1.0).unwrap(), 0.5 / PI, max_relative = 1e-10);
    }

    #[test]
    fn constant_matches_closed_form() {
        for dim in 1..=3 {
            for &s in &[0.1, 0.5, 0.9, 1.3, 1.7, 1.99] {
                let c = fractional_constant(dim, s).unwrap();
                assert_relative_eq!(c, closed_form_constant(dim, s), max_relative = 1e-8);
            }
        }
    }

    #[test]
    fn constant_vanishes_toward_two() {
        let c: Vec<f64> = [1.9, 1.99, 1.999].iter().map(|&s| fractional_constant(1, s).unwrap()).collect();
        assert!(c[0] > c[1] && c[1] > c[2] && c[2] < 2e-3);
    }

    #[test]
    fn constant_rejects_bad_order() {
        assert!(matches!(fractional_constant(1, 2.0), Err(Error::Domain(_))));
        assert!(matches!(fractional_constant(1, 0.0), Err(Error::Domain(_))));
    }

    #[test]
    fn dirac_cell_lookup() {
        let tau = 2.0 * PI;
        let mu = LevyMeasure::dirac_sum(1, vec![Atom::new(vec![tau], 1.0), Atom::new(vec![-tau], 1.0)]).unwrap();
        assert_eq!(mu.cell_mass(&[5.5], &[6.5]).unwrap(), 1.0);
        assert_eq!(mu.cell_mass(&[-6.5], &[-5.5]).unwrap(), 1.0);
        assert_eq!(mu.cell_mass(&[0.5], &[1.5]).unwrap(), 0.0);
        assert_eq!(mu.levy_functional().unwrap(), 2.0);
    }

    #[test]
    fn half_open_cells_count_face_atoms_once() {
        let mu = LevyMeasure::dirac_sum(1, vec![Atom::new(vec![1.0], 0.5), Atom::new(vec![-1.0], 0.5)]).unwrap();
        let left = mu.cell_mass(&[0.0], &[1.0]).unwrap();
        let right = mu.cell_mass(&[1.0], &[2.0]).unwrap();
        assert_eq!((left, right), (0.0, 0.5));
    }

    #[test]
    fn asymmetric_atoms_rejected() {
        let err = LevyMeasure::dirac_sum(1, vec![Atom::new(vec![1.0], 1.0), Atom::new(vec![-1.0], 2.0)]);
        assert!(err.is_err());
    }

    #[test]
    fn fractional_cell_against_closed_form() {
        let mu = LevyMeasure::fractional(1, 0.5).unwrap();
        let c = fractional_constant(1, 0.5).unwrap();
        let expected = c * 2.0 * (1.0 / 0.25f64.sqrt() - 1.0 / 0.75f64.sqrt());
        assert_relative_eq!(mu.cell_mass(&[0.25], &[0.75]).unwrap(), expected, max_relative = 1e-10);
    }

    #[test]
    fn singular_cell_rejected() {
        let mu = LevyMeasure::fractional(2, 1.0).unwrap();
        let err = mu.cell_mass(&[-0.1, -0.1], &[0.1, 0.1]);
        assert!(matches!(err, Err(Error::SingularCell(_))));
        // A truncated measure is finite near the origin.
        let t = LevyMeasure::truncated(mu, 0.05).unwrap();
        assert!(t.cell_mass(&[-0.1, -0.1], &[0.1, 0.1]).unwrap() > 0.0);
    }

    #[test]
    fn fractional_2d_cell_mass_matches_radial_mass() {
        // The annulus 1 < |z| ≤ 2 fits in [-2, 2)²; its mass is known.
        let mu = LevyMeasure::fractional(2, 1.2).unwrap();
        let got = mu
            .box_shell_mass(&[-2.0, -2.0], &[2.0, 2.0], Shell { r_in: 1.0, r_out: 2.0 })
            .unwrap();
        let expected = mu.mass_outside(1.0).unwrap() - mu.mass_outside(2.0).unwrap();
        assert_relative_eq!(got, expected, max_relative = 1e-9);
    }

    #[test]
    fn levy_functional_fractional_and_truncated() {
        for &s in &[0.3, 1.0, 1.8] {
            let mu = LevyMeasure::fractional(1, s).unwrap();
            let full = mu.levy_functional().unwrap();
            assert!(full.is_finite() && full > 0.0);
            for &r in &[0.2, 1.0, 3.0] {
                let t = LevyMeasure::truncated(mu.clone(), r).unwrap();
                assert!(t.levy_functional().unwrap() <= full);
            }
        }
    }

    #[test]
    fn radial_profiles() {
        let tempered = LevyMeasure::radial(
            1,
            RadialProfile::Tempered {
                scale: 1.0,
                order: 0.8,
                decay: 1.0,
            },
            true,
        )
        .unwrap();
        assert!(tempered.singular_at_origin());
        assert!(tempered.levy_functional().unwrap().is_finite());

        let gaussian = LevyMeasure::radial(2, RadialProfile::Gaussian { mass: 3.0, width: 0.7 }, true).unwrap();
        assert!(!gaussian.singular_at_origin());
        assert_relative_eq!(gaussian.mass_outside(0.0).unwrap(), 3.0, max_relative = 1e-9);

        let too_singular = LevyMeasure::radial(
            1,
            RadialProfile::Custom {
                label: "r^-3.5".into(),
                f: Arc::new(|_, r| r.powf(-3.5)),
            },
            true,
        );
        assert!(matches!(too_singular, Err(Error::NotLevy(_))));

        let heavy_tail = LevyMeasure::radial(
            1,
            RadialProfile::Custom {
                label: "r^-1".into(),
                f: Arc::new(|_, r| r.powf(-1.0)),
            },
            false,
        );
        assert!(matches!(heavy_tail, Err(Error::NotLevy(_))));
    }

    #[test]
    fn local_limit_coefficient_approaches_one() {
        let v: Vec<f64> = [1.9, 1.95, 1.99]
            .iter()
            .map(|&s| local_limit_coefficient(1, s).unwrap())
            .collect();
        assert!(v[0] < v[1] && v[1] < v[2]);
        assert!((v[2] - 1.0).abs() < 0.05);
    }

    #[test]
    fn origin_second_moment_fractional_1d() {
        // ∫_{-ρ}^{ρ} z² c |z|^{-1-s} dz = 2c ρ^{2-s}/(2-s)
        let s = 1.4;
        let mu = LevyMeasure::fractional(1, s).unwrap();
        let c = fractional_constant(1, s).unwrap();
        let rho: f64 = 0.05;
        let got = mu.second_moment_in_box(&[-rho], &[rho], 0).unwrap();
        assert_relative_eq!(got, 2.0 * c * rho.powf(2.0 - s) / (2.0 - s), max_relative = 1e-10);
    }
}
