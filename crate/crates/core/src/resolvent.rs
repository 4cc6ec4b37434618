//! The lattice resolvent `εv − L_h[v] = g`, solved by the contraction
//! `v ← (Σ_α w_α v(·+αh) + g)/(ε + W)` started from `v⁰ = 0`.

use crate::discrete_operator::{Boundary, GridFunction, StencilWeights};
use crate::error::{Error, Result};

/// Inner tolerance used by [`verify_selfadjoint`].
pub const SELFADJOINT_TOL: f64 = 1e-13;

/// Floor of the stopping threshold, in units of `ε_mach ‖v‖_∞`.
pub const ROUNDOFF_ULPS: f64 = 8.0;

#[derive(Debug, Clone, PartialEq)]
pub struct ResolventSolution {
    pub v: GridFunction,
    pub iterations: usize,
    /// `‖εv − L_h v − g‖_∞`.
    pub residual: f64,
    /// Contraction factor `W / (ε + W)`.
    pub q: f64,
}

fn check(g: &GridFunction, weights: &StencilWeights, eps: f64) -> Result<()> {
    if !(eps > 0.0 && eps.is_finite()) {
        return Err(Error::Domain(format!("resolvent parameter ε = {eps} must be positive")));
    }
    if g.dim() != weights.dim() || g.spacing() != weights.spacing() {
        return Err(Error::Mismatch("stencil and grid disagree on dimension or spacing".into()));
    }
    Ok(())
}

/// One application of the fixed-point map `T[v] = (Σ_α w_α v(·+αh) + g)/(ε + W)`.
pub fn resolvent_map(v: &GridFunction, g: &GridFunction, weights: &StencilWeights, eps: f64) -> Result<GridFunction> {
    check(g, weights, eps)?;
    v.check_same_lattice(g)?;
    let mut out = vec![0.0; v.len()];
    sweep(v, g, weights, eps, &mut out);
    Ok(v.with_values_unchecked(out))
}

fn sweep(v: &GridFunction, g: &GridFunction, weights: &StencilWeights, eps: f64, out: &mut [f64]) {
    let w = weights.effective_weight();
    weights.apply_into(v, out);
    // L_h v + W v is the neighbour sum Σ_α w_α v(·+αh).
    for ((o, &vi), &gi) in out.iter_mut().zip(v.values()).zip(g.values()) {
        *o = (*o + w * vi + gi) / (eps + w);
    }
}

/// Solves `εv − L_h[v] = g` to `‖v^{k+1} − v^k‖_∞ ≤ tol (1−q)/q`, which
/// leaves a residual of at most `ε·tol`. The threshold never drops below
/// [`ROUNDOFF_ULPS`] units in the last place of `‖v^{k+1}‖_∞`, where sweeps
/// stop changing the iterate.
pub fn solve_resolvent(g: &GridFunction, weights: &StencilWeights, eps: f64, tol: f64) -> Result<ResolventSolution> {
    check(g, weights, eps)?;
    if !(tol > 0.0 && tol.is_finite()) {
        return Err(Error::Domain(format!("tolerance {tol} must be positive")));
    }
    let w = weights.effective_weight();
    let q = w / (eps + w);
    let threshold = if q > 0.0 { tol * (1.0 - q) / q } else { f64::INFINITY };
    let cap = iteration_bound(eps, w, tol, g.linf()).saturating_mul(2).max(16);

    let mut v = g.map(|_| 0.0);
    let mut next = vec![0.0; g.len()];
    let mut iterations = 0;
    loop {
        sweep(&v, g, weights, eps, &mut next);
        iterations += 1;
        let change = v.values().iter().zip(&next).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
        let size = next.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        if let Some(i) = next.iter().position(|x| !x.is_finite()) {
            return Err(Error::Domain(format!("resolvent iterate is not finite at point {i}")));
        }
        let fresh = v.with_values_unchecked(std::mem::take(&mut next));
        next = std::mem::replace(&mut v, fresh).into_values();
        if change <= threshold.max(ROUNDOFF_ULPS * f64::EPSILON * size) {
            break;
        }
        if iterations >= cap {
            return Err(Error::Assertion(format!(
                "resolvent iteration exceeded {cap} sweeps (last change {change:e}, target {threshold:e})"
            )));
        }
    }
    let residual = residual(&v, g, weights, eps)?;
    Ok(ResolventSolution {
        v,
        iterations,
        residual,
        q,
    })
}

/// `‖εv − L_h v − g‖_∞`.
pub fn residual(v: &GridFunction, g: &GridFunction, weights: &StencilWeights, eps: f64) -> Result<f64> {
    v.check_same_lattice(g)?;
    let lv = weights.apply(v)?;
    Ok(v.values()
        .iter()
        .zip(lv.values())
        .zip(g.values())
        .fold(0.0f64, |m, ((vi, li), gi)| m.max((eps * vi - li - gi).abs())))
}

/// Sweeps [`solve_resolvent`] needs at most, for `‖g‖_∞ = g_norm`.
///
/// From `‖v^{k+1} − v^k‖_∞ ≤ q^k ‖g‖_∞/(ε+W)` the stopping test holds once
/// `q^{k+1} ≤ tol·ε/‖g‖_∞`.
pub fn iteration_bound(eps: f64, w: f64, tol: f64, g_norm: f64) -> usize {
    let q = w / (eps + w);
    let target = tol * eps / g_norm;
    if q == 0.0 || !(target < 1.0) {
        return 1;
    }
    let n = (target.ln() / q.ln() + 1e-9).ceil();
    if n.is_finite() {
        (n as usize).max(1)
    } else {
        usize::MAX
    }
}

/// `|h^N Σ f·B[g] − h^N Σ g·B[f]|` with `B` the resolvent solved to
/// [`SELFADJOINT_TOL`]. Requires periodic data.
pub fn verify_selfadjoint(weights: &StencilWeights, eps: f64, f: &GridFunction, g: &GridFunction) -> Result<f64> {
    if f.boundary() != Boundary::Periodic || g.boundary() != Boundary::Periodic {
        return Err(Error::Domain("self-adjointness is checked on periodic data".into()));
    }
    f.check_same_lattice(g)?;
    let bg = solve_resolvent(g, weights, eps, SELFADJOINT_TOL)?.v;
    let bf = solve_resolvent(f, weights, eps, SELFADJOINT_TOL)?.v;
    Ok((f.inner(&bg)? - g.inner(&bf)?).abs())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::discrete_operator::assemble_local;
    use nalgebra::DMatrix;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn heat(h: f64) -> StencilWeights {
        assemble_local(&DMatrix::identity(1, 1), h).unwrap()
    }

    fn random_grid(rng: &mut ChaCha8Rng, h: f64, n: usize) -> GridFunction {
        let values = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
        GridFunction::new(h, vec![0], vec![n], values, Boundary::Periodic).unwrap()
    }

    #[test]
    fn constants_solve_exactly() {
        let h = 0.25;
        let g = GridFunction::centered(1, h, 16, Boundary::Periodic, |_| 3.0).unwrap();
        let sol = solve_resolvent(&g, &heat(h), 2.0, 1e-12).unwrap();
        for v in sol.v.values() {
            assert!((v - 1.5).abs() < 1e-11);
        }
    }

    #[test]
    fn empty_stencil_takes_one_sweep() {
        let g = GridFunction::centered(1, 0.1, 8, Boundary::Periodic, |x| x[0]).unwrap();
        let sol = solve_resolvent(&g, &StencilWeights::empty(1, 0.1), 4.0, 1e-10).unwrap();
        assert_eq!(sol.iterations, 1);
        assert_eq!(iteration_bound(4.0, 0.0, 1e-10, 1.0), 1);
        for (v, g) in sol.v.values().iter().zip(g.values()) {
            assert_eq!(*v, g / 4.0);
        }
    }

    #[test]
    fn bound_for_half_contraction() {
        // ε = W: q = 1/2 and the count is ⌈log₂(g_norm / (tol/2))⌉ with
        // g_norm = ‖g‖/(ε+W).
        let (eps, w, tol) = (0.5, 0.5, 1e-6);
        for g in [1.0, 3.7, 1e3] {
            let g_norm = g / (eps + w);
            assert_eq!(iteration_bound(eps, w, tol, g), (g_norm / (tol / 2.0)).log2().ceil() as usize);
        }
    }

    #[test]
    fn iterations_within_bound_and_residual_small() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..20 {
            let h = rng.random_range(0.05..0.5);
            let eps = rng.random_range(0.01..5.0);
            let tol = 10f64.powf(rng.random_range(-12.0..-4.0));
            let g = random_grid(&mut rng, h, 32);
            let w = heat(h);
            let sol = solve_resolvent(&g, &w, eps, tol).unwrap();
            assert!(sol.iterations <= iteration_bound(eps, w.effective_weight(), tol, g.linf()));
            let q = sol.q;
            assert!(sol.residual <= eps * tol * (1.0 + 2.0 * q / (1.0 - q)) + 1e-14 * g.linf());
        }
    }

    #[test]
    fn map_contracts() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let h = 0.2;
        let w = heat(h);
        let eps = 0.3;
        let q = w.effective_weight() / (eps + w.effective_weight());
        for _ in 0..20 {
            let (g, a, b) = (random_grid(&mut rng, h, 24), random_grid(&mut rng, h, 24), random_grid(&mut rng, h, 24));
            let ta = resolvent_map(&a, &g, &w, eps).unwrap();
            let tb = resolvent_map(&b, &g, &w, eps).unwrap();
            let lhs = ta.values().iter().zip(tb.values()).fold(0.0f64, |m, (x, y)| m.max((x - y).abs()));
            let rhs = a.values().iter().zip(b.values()).fold(0.0f64, |m, (x, y)| m.max((x - y).abs()));
            assert!(lhs <= q * rhs * (1.0 + 1e-12));
        }
    }

    #[test]
    fn selfadjoint_on_equal_arguments() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let g = random_grid(&mut rng, 0.1, 32);
        assert_eq!(verify_selfadjoint(&heat(0.1), 1.0, &g, &g).unwrap(), 0.0);
    }

    #[test]
    fn bad_tolerance_rejected() {
        let g = GridFunction::centered(1, 0.1, 8, Boundary::Periodic, |_| 1.0).unwrap();
        assert!(matches!(solve_resolvent(&g, &heat(0.1), 1.0, 0.0), Err(Error::Domain(_))));
        assert!(matches!(solve_resolvent(&g, &heat(0.1), 0.0, 1e-6), Err(Error::Domain(_))));
    }

    #[test]
    fn tolerance_below_roundoff_stops_at_roundoff() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let h = 0.1;
        let g = random_grid(&mut rng, h, 32);
        let sol = solve_resolvent(&g, &heat(h), 1.0, 1e-20).unwrap();
        assert!(sol.residual < 1e-11, "residual {}", sol.residual);
    }
}
