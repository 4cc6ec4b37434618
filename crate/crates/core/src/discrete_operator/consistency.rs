//! Smooth test functions with known operator images, and the L¹
//! consistency error of a stencil against them.

use statrs::function::gamma::gamma;

use super::grid::GridFunction;
use super::stencil::StencilWeights;
use crate::error::{Error, Result};
use crate::levy_measure::fractional_constant;
use crate::quadrature::{integrate_pieces, Tolerance};

/// `e^{-|x|²}`.
pub fn gaussian(x: &[f64]) -> f64 {
    (-x.iter().map(|v| v * v).sum::<f64>()).exp()
}

/// `Δ e^{-|x|²} = (4|x|² - 2N) e^{-|x|²}`.
pub fn gaussian_laplacian(x: &[f64]) -> f64 {
    let r2: f64 = x.iter().map(|v| v * v).sum();
    (4.0 * r2 - 2.0 * x.len() as f64) * (-r2).exp()
}

/// `-(-Δ)^{s/2} e^{-|x|²} = -2^s Γ((N+s)/2)/Γ(N/2) · ₁F₁((N+s)/2; N/2; -|x|²)`.
///
/// The confluent hypergeometric function is evaluated through Kummer's
/// transformation `₁F₁(a; b; -z) = e^{-z} ₁F₁(b-a; b; z)`, whose series has
/// terms of one sign after the first.
pub fn gaussian_fractional(order: f64, x: &[f64]) -> f64 {
    let n = x.len() as f64;
    let z: f64 = x.iter().map(|v| v * v).sum();
    let a = -order / 2.0;
    let b = n / 2.0;
    let mut term = 1.0;
    let mut sum = 1.0;
    let mut k = 0.0;
    loop {
        term *= (a + k) * z / ((b + k) * (k + 1.0));
        sum += term;
        k += 1.0;
        if term.abs() <= 1e-17 * sum.abs().max(1e-300) && k > z {
            break;
        }
        if k > 10_000.0 {
            break;
        }
    }
    -(2f64.powf(order)) * gamma((n + order) / 2.0) / gamma(n / 2.0) * (-z).exp() * sum
}

/// `exp(-1 / (1 - |x|²))` inside the unit ball, zero outside.
pub fn bump(x: &[f64]) -> f64 {
    let r2: f64 = x.iter().map(|v| v * v).sum();
    if r2 >= 1.0 {
        0.0
    } else {
        (-1.0 / (1.0 - r2)).exp()
    }
}

/// `-(-Δ)^{s/2} ψ(x)` in one dimension by direct quadrature of
/// `c_{1,s} ∫_0^∞ (ψ(x+z) + ψ(x-z) - 2ψ(x)) z^{-1-s} dz`.
///
/// `support` bounds the support of `ψ` (`ψ = 0` outside `[-support, support]`)
/// or is a radius beyond which `ψ` is negligible. Below `z = δ` the second
/// difference is replaced by its Taylor expansion to avoid cancellation.
pub fn fractional_image_1d<F: Fn(f64) -> f64>(order: f64, psi: F, x: f64, support: f64) -> Result<f64> {
    let c = fractional_constant(1, order)?;
    let delta: f64 = 1e-3;
    let fd = 1e-3;
    let p0 = psi(x);
    let second = (psi(x + fd) + psi(x - fd) - 2.0 * p0) / (fd * fd);
    let near = second * delta.powf(2.0 - order) / (2.0 - order);
    let far_edge = x.abs() + support;
    let diff = |z: f64| (psi(x + z) + psi(x - z) - 2.0 * p0) * z.powf(-1.0 - order);
    let mut breaks: Vec<f64> = Vec::new();
    for edge in [support - x, support + x, -support - x, -support + x] {
        let e = edge.abs();
        if e > delta && e < far_edge {
            breaks.push(e);
        }
    }
    breaks.sort_by(f64::total_cmp);
    let middle = integrate_pieces(diff, delta, far_edge.max(delta), &breaks, Tolerance { rel: 1e-12, abs: 1e-15 })?.value;
    // Beyond far_edge only the -2ψ(x) term survives.
    let tail = -2.0 * p0 * far_edge.max(delta).powf(-order) / order;
    Ok(c * (near + middle + tail))
}

/// `h^N Σ_i |(L_h ψ)_i - (Lψ)(x_i)|` on the lattice of `template`.
pub fn consistency_error<F, G>(weights: &StencilWeights, template: &GridFunction, psi: F, exact: G) -> Result<f64>
where
    F: Fn(&[f64]) -> f64,
    G: Fn(&[f64]) -> f64,
{
    if template.dim() != weights.dim() || template.spacing() != weights.spacing() {
        return Err(Error::Mismatch("template lattice does not match the stencil".into()));
    }
    let sampled = GridFunction::from_fn(
        template.spacing(),
        template.lo().to_vec(),
        template.shape().to_vec(),
        template.boundary(),
        psi,
    )?;
    let image = weights.apply(&sampled)?;
    let mut err = 0.0;
    for (flat, v) in image.values().iter().enumerate() {
        err += (v - exact(&image.point(flat))).abs();
    }
    Ok(err * template.cell_volume())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn gaussian_fractional_small_order_is_minus_identity() {
        // s → 0: -(-Δ)^0 ψ = -ψ.
        for &x in &[0.0, 0.7, 2.0] {
            assert_relative_eq!(gaussian_fractional(1e-9, &[x]), -gaussian(&[x]), max_relative = 1e-6);
        }
    }

    #[test]
    fn gaussian_fractional_matches_quadrature() {
        for &s in &[0.5, 1.0, 1.5] {
            for &x in &[0.0, 0.4, 1.3, 3.0, 6.0] {
                let closed = gaussian_fractional(s, &[x]);
                let quad = fractional_image_1d(s, |y| (-y * y).exp(), x, 9.0).unwrap();
                assert!((closed - quad).abs() < 1e-7 * (1.0 + closed.abs()), "s={s} x={x}: {closed} vs {quad}");
            }
        }
    }

    #[test]
    fn gaussian_fractional_tends_to_laplacian() {
        let x = [0.3];
        let near_two = gaussian_fractional(1.999, &x);
        assert!((near_two - gaussian_laplacian(&x)).abs() < 1e-2);
    }

    #[test]
    fn zero_function_has_zero_error() {
        let st = crate::discrete_operator::assemble_local(&nalgebra::DMatrix::identity(1, 1), 0.1).unwrap();
        let template = GridFunction::centered(1, 0.1, 32, crate::discrete_operator::Boundary::Periodic, |_| 0.0).unwrap();
        assert_eq!(consistency_error(&st, &template, |_| 0.0, |_| 0.0).unwrap(), 0.0);
    }
}
