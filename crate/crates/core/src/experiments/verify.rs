//! The property suite behind `nlpme verify`: every module's invariants,
//! exercised on the configured operator, nonlinearity and lattice with
//! randomness drawn from one seeded stream.

use std::fmt::Write as _;
use std::path::PathBuf;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::config::ExperimentConfig;
use crate::discrete_operator::{
    assemble_local, consistency_error, gaussian, gaussian_laplacian, Boundary, GridFunction, StencilWeights,
};
use crate::error::{Error, Result};
use crate::evolution::{
    cfl_dt, estimate_suite, evolve, step_explicit, trace_pair, EvolutionConfig, Status, TimeStep, Verdict, ESTIMATE_TOL,
};
use crate::levy_measure::{local_limit_coefficient, symbol, LevyMeasure};
use crate::nonlinearity::Nonlinearity;
use crate::resolvent::{iteration_bound, resolvent_map, solve_resolvent, verify_selfadjoint};

use super::DEFAULT_ETA;

#[derive(Debug, Clone)]
pub struct VerifyReport {
    pub seed: u64,
    pub verdicts: Vec<Verdict>,
    pub written: PathBuf,
}

impl VerifyReport {
    pub fn passed(&self) -> bool {
        self.verdicts.iter().all(Verdict::passed)
    }

    pub fn failures(&self) -> impl Iterator<Item = &Verdict> {
        self.verdicts.iter().filter(|v| !v.passed())
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        for v in &self.verdicts {
            let _ = writeln!(out, "{v}");
        }
        let failed = self.failures().count();
        let _ = writeln!(
            out,
            "{} checks, {failed} failed, seed {}",
            self.verdicts.len(),
            self.seed
        );
        out
    }
}

struct Ctx {
    weights: StencilWeights,
    phi: Nonlinearity,
    /// Whether `phi` is a mollified fast-diffusion power.
    fast: bool,
    measure: Option<LevyMeasure>,
    dim: usize,
    spacing: f64,
    points: usize,
    seed: u64,
}

impl Ctx {
    fn random_grid(&self, rng: &mut ChaCha8Rng, boundary: Boundary, lo: f64, hi: f64) -> Result<GridFunction> {
        let n = self.points.pow(self.dim as u32);
        let values = (0..n).map(|_| rng.random_range(lo..hi)).collect();
        GridFunction::new(
            self.spacing,
            vec![-((self.points / 2) as i64); self.dim],
            vec![self.points; self.dim],
            values,
            boundary,
        )
    }

    fn check(&self, name: &str, ok: bool, detail: String) -> Verdict {
        let detail = if ok { detail } else { format!("{detail} (seed {})", self.seed) };
        Verdict::check(name, ok, detail)
    }
}

/// Runs the full suite and writes `verdicts.txt` to the output directory.
pub fn run_verify(config: &ExperimentConfig, seed: u64) -> Result<VerifyReport> {
    let u0 = config.initial_data()?;
    let base = config.nonlinearity.base()?;
    let fast = base.is_fast_diffusion();
    let phi = match (fast, config.nonlinearity.mollify) {
        (true, None) => base.mollify(DEFAULT_ETA, u0.linf().max(DEFAULT_ETA))?,
        _ => config.nonlinearity(u0.linf())?,
    };
    let ctx = Ctx {
        weights: config.stencil()?,
        phi,
        fast,
        measure: config.measure()?,
        dim: config.grid.dim,
        spacing: config.grid.spacing,
        points: config.grid.points(),
        seed,
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut verdicts = Vec::new();
    verdicts.extend(levy_suite(&ctx, &mut rng)?);
    verdicts.extend(operator_suite(&ctx, &mut rng)?);
    verdicts.extend(nonlinearity_suite(&ctx, &base, &mut rng)?);
    verdicts.extend(evolution_suite(&ctx, config, &u0, &mut rng)?);
    verdicts.extend(resolvent_suite(&ctx, config, &mut rng)?);
    verdicts.extend(artifact_suite(&ctx, config, &u0)?);

    std::fs::create_dir_all(&config.output.directory)?;
    let written = config.output.directory.join("verdicts.txt");
    let report = VerifyReport {
        seed,
        verdicts,
        written: written.clone(),
    };
    std::fs::write(&written, report.render())?;
    Ok(report)
}

fn levy_suite(ctx: &Ctx, rng: &mut ChaCha8Rng) -> Result<Vec<Verdict>> {
    let mut out = Vec::new();
    if let Some(mu) = &ctx.measure {
        let lf = mu.levy_functional();
        out.push(ctx.check(
            "levy_measure/levy functional finite",
            matches!(lf, Ok(v) if v.is_finite() && v >= 0.0),
            format!("∫min(|z|²,1)dμ = {lf:?}"),
        ));
        let mut worst = 0.0f64;
        for _ in 0..1000 {
            let lo: Vec<f64> = (0..ctx.dim)
                .map(|_| rng.random_range(0.05..3.0) * if rng.random_bool(0.5) { 1.0 } else { -1.0 })
                .collect();
            let hi: Vec<f64> = lo.iter().map(|l| l + rng.random_range(0.01..1.0)).collect();
            if mu.singular_at_origin() && lo.iter().zip(&hi).all(|(l, h)| *l <= 0.0 && *h >= 0.0) {
                continue;
            }
            let neg_lo: Vec<f64> = hi.iter().map(|v| -v).collect();
            let neg_hi: Vec<f64> = lo.iter().map(|v| -v).collect();
            let a = mu.cell_mass(&lo, &hi)?;
            let b = mu.cell_mass(&neg_lo, &neg_hi)?;
            worst = worst.max((a - b).abs() / a.abs().max(b.abs()).max(f64::MIN_POSITIVE));
        }
        out.push(ctx.check(
            "levy_measure/cell symmetry",
            worst <= 1e-9,
            format!("largest relative |μ(C) - μ(-C)| over 1000 cells = {worst:e}"),
        ));
    }

    let mut negative = 0usize;
    for _ in 0..1000 {
        let xi: Vec<f64> = (0..ctx.dim).map(|_| rng.random_range(-50.0..50.0)).collect();
        if symbol(&ctx.weights, &xi) < 0.0 {
            negative += 1;
        }
    }
    out.push(ctx.check(
        "levy_measure/symbol nonnegative",
        negative == 0,
        format!("{negative} of 1000 random frequencies gave a negative symbol"),
    ));

    let limits: Vec<f64> = [1.9, 1.95, 1.99]
        .iter()
        .map(|&s| local_limit_coefficient(ctx.dim, s))
        .collect::<Result<_>>()?;
    let approaching = limits.windows(2).all(|p| (p[1] - 1.0).abs() < (p[0] - 1.0).abs());
    out.push(ctx.check(
        "levy_measure/normalization tends to 1 as s -> 2",
        approaching && (limits[2] - 1.0).abs() <= 0.05,
        format!("s = 1.9, 1.95, 1.99: {limits:?}"),
    ));
    Ok(out)
}

fn operator_suite(ctx: &Ctx, rng: &mut ChaCha8Rng) -> Result<Vec<Verdict>> {
    let w = &ctx.weights;
    let mut out = Vec::new();
    let asymmetric = w
        .iter()
        .filter(|(a, v)| {
            let mirror: Vec<i64> = a.iter().map(|x| -x).collect();
            w.weight(&mirror) != *v
        })
        .count();
    out.push(ctx.check(
        "discrete_operator/weight symmetry",
        asymmetric == 0,
        format!("{asymmetric} of {} weights lack an equal mirror", w.len()),
    ));

    let big_w = w.effective_weight().max(1.0);
    let (mut lin, mut adj, mut quad, mut kernel, mut sv) = (0.0f64, 0.0f64, f64::NEG_INFINITY, 0.0f64, f64::NEG_INFINITY);
    let zetas: [(&str, fn(f64) -> f64); 3] = [
        ("smoothed sign+", |r| (r / 0.1).clamp(0.0, 1.0)),
        ("cube", |r| r * r * r),
        ("arctan", f64::atan),
    ];
    for _ in 0..20 {
        let u = ctx.random_grid(rng, Boundary::Periodic, -1.0, 1.0)?;
        let v = ctx.random_grid(rng, Boundary::Periodic, -1.0, 1.0)?;
        let (a, b) = (rng.random_range(-3.0..3.0), rng.random_range(-3.0..3.0));
        let combo = u.with_values(u.values().iter().zip(v.values()).map(|(x, y)| a * x + b * y).collect())?;
        let (lu, lv, lc) = (w.apply(&u)?, w.apply(&v)?, w.apply(&combo)?);
        for i in 0..u.len() {
            let expect = a * lu.values()[i] + b * lv.values()[i];
            lin = lin.max((lc.values()[i] - expect).abs() / (big_w * (a.abs() + b.abs())));
        }
        let norm = u.inner(&u)?.sqrt() * v.inner(&v)?.sqrt();
        adj = adj.max((v.inner(&lu)? - u.inner(&lv)?).abs() / (big_w * norm));
        quad = quad.max(u.inner(&lu)? / (big_w * u.inner(&u)?));
        let total: f64 = lu.values().iter().sum();
        kernel = kernel.max(total.abs() / (big_w * u.values().iter().map(|x| x.abs()).sum::<f64>()));
        for (_, zeta) in zetas {
            let z = u.map(zeta);
            let scale = big_w * z.l1() * u.linf();
            sv = sv.max(z.inner(&lu)? / scale.max(f64::MIN_POSITIVE));
        }
    }
    let tail_free = w.tail_mass() == 0.0 || w.tail_policy() == crate::discrete_operator::TailPolicy::Drop;
    out.push(ctx.check(
        "discrete_operator/linearity",
        lin <= 1e-12,
        format!("largest relative deviation {lin:e}"),
    ));
    out.push(ctx.check(
        "discrete_operator/self-adjointness",
        adj <= 1e-10,
        format!("largest relative gap {adj:e}"),
    ));
    out.push(ctx.check(
        "discrete_operator/quadratic form nonpositive",
        quad <= 1e-12,
        format!("largest (ψ, Lψ)/(W‖ψ‖²) = {quad:e}"),
    ));
    out.push(ctx.check(
        "discrete_operator/Stroock-Varopoulos",
        sv <= 1e-12,
        format!("largest h^N Σ ζ(ψ) Lψ relative to W‖ζ(ψ)‖₁‖ψ‖∞ = {sv:e} (ζ = smoothed sign+, cube, arctan)"),
    ));
    if tail_free {
        out.push(ctx.check(
            "discrete_operator/conservation kernel",
            kernel <= 1e-12,
            format!("largest |Σ Lu| / (W Σ|u|) = {kernel:e}"),
        ));
    } else {
        out.push(Verdict::new(
            "discrete_operator/conservation kernel",
            Status::Info,
            "absorbed tail removes mass by construction",
        ));
    }

    let errors: Vec<f64> = [0.2, 0.1, 0.05]
        .iter()
        .map(|&h| {
            let lap = assemble_local(&nalgebra::DMatrix::identity(1, 1), h)?;
            let n = (16.0 / h).round() as usize;
            let t = GridFunction::centered(1, h, n, Boundary::ZeroExtension, |_| 0.0)?;
            consistency_error(&lap, &t, gaussian, gaussian_laplacian)
        })
        .collect::<Result<_>>()?;
    let ratios = [errors[0] / errors[1], errors[1] / errors[2]];
    out.push(ctx.check(
        "discrete_operator/Laplacian consistency is second order",
        ratios.iter().all(|r| (3.5..=4.5).contains(r)),
        format!("errors {errors:?}, ratios {ratios:?}"),
    ));
    Ok(out)
}

fn nonlinearity_suite(ctx: &Ctx, base: &Nonlinearity, rng: &mut ChaCha8Rng) -> Result<Vec<Verdict>> {
    let mut out = Vec::new();
    let range = 2.0;
    let mut variants = vec![("configured", ctx.phi.clone())];
    if !base.is_fast_diffusion() {
        variants.push(("mollified", base.mollify(0.05, range)?));
    }
    for (label, phi) in &variants {
        let mut decreasing = 0usize;
        for _ in 0..10_000 {
            let a = rng.random_range(-range..range);
            let b = rng.random_range(-range..range);
            let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
            if phi.eval(lo) > phi.eval(hi) {
                decreasing += 1;
            }
        }
        out.push(ctx.check(
            &format!("nonlinearity/monotone ({label})"),
            decreasing == 0,
            format!("{decreasing} of 10000 ordered pairs reversed"),
        ));
        let m = 1.0;
        let lip = phi.lipschitz_on(m);
        if lip.is_finite() {
            let mut worst = 0.0f64;
            for _ in 0..10_000 {
                let a = rng.random_range(-m..m);
                let b = rng.random_range(-m..m);
                if a != b {
                    worst = worst.max((phi.eval(a) - phi.eval(b)).abs() / (a - b).abs() - lip);
                }
            }
            out.push(ctx.check(
                &format!("nonlinearity/Lipschitz bound valid ({label})"),
                worst <= 1e-9 * lip.max(1.0),
                format!("L = {lip:e}, largest excess of a difference quotient {worst:e}"),
            ));
        }
        out.push(ctx.check(
            &format!("nonlinearity/normalized ({label})"),
            phi.eval(0.0) == 0.0,
            format!("φ(0) = {:e}", phi.eval(0.0)),
        ));
    }

    let linear = Nonlinearity::linear(1.7)?;
    let smooth = linear.mollify(0.1, range)?;
    let worst = (0..=400)
        .map(|i| -range + i as f64 * 0.01)
        .map(|r| (smooth.eval(r) - linear.eval(r)).abs())
        .fold(0.0f64, f64::max);
    out.push(ctx.check(
        "nonlinearity/mollify preserves linear maps",
        worst <= 1e-12,
        format!("sup |φ_η - φ| = {worst:e}"),
    ));

    let sups: Vec<f64> = [0.1, 0.05, 0.025]
        .iter()
        .map(|&eta| {
            let m = base.mollify(eta, 1.0)?;
            Ok((0..=2000)
                .map(|i| -1.0 + i as f64 * 1e-3)
                .map(|r| (m.eval(r) - base.eval(r)).abs())
                .fold(0.0f64, f64::max))
        })
        .collect::<Result<_>>()?;
    out.push(ctx.check(
        "nonlinearity/mollification converges uniformly",
        sups.windows(2).all(|p| p[1] <= p[0] + 1e-12),
        format!("sup |φ_η - φ| on [-1,1] for η = 0.1, 0.05, 0.025: {sups:?}"),
    ));
    Ok(out)
}

fn evolution_suite(ctx: &Ctx, config: &ExperimentConfig, u0: &GridFunction, rng: &mut ChaCha8Rng) -> Result<Vec<Verdict>> {
    let mut out = Vec::new();
    let evo = config.evolution()?;
    let weights = ctx.weights.clone().with_tail_policy(evo.tail_policy);
    let report = evolve(u0, &weights, &ctx.phi, &evo)?;
    for v in &report.verdicts {
        out.push(Verdict::new(format!("evolution/{}", v.name), v.status, v.detail.clone()));
    }
    if ctx.fast {
        let first = report.records[0].mass;
        let last = report.records[report.records.len() - 1].mass;
        let loss = if first != 0.0 { 1.0 - last / first } else { 0.0 };
        out.push(Verdict::new(
            "evolution/mass decay",
            Status::Info,
            format!("expected non-conservation (fast diffusion): relative mass loss {:.4}%", 100.0 * loss),
        ));
    }

    // Pairs: an ordered one (û₀ = u₀ + nonnegative noise) and an unordered one.
    let dt = report.meta.dt;
    let steps = report.meta.steps.min(400);
    let amp = 0.05 * u0.linf().max(1e-3);
    let noise = ctx.random_grid(rng, evo.boundary, 0.0, amp)?;
    let u0b = GridFunction::new(u0.spacing(), u0.lo().to_vec(), u0.shape().to_vec(), u0.values().to_vec(), evo.boundary)?;
    let ordered = u0b.with_values(u0b.values().iter().zip(noise.values()).map(|(a, b)| a + b).collect())?;
    let signed = ctx.random_grid(rng, evo.boundary, -amp, amp)?;
    let unordered = u0b.with_values(u0b.values().iter().zip(signed.values()).map(|(a, b)| a + b).collect())?;
    let scale = ESTIMATE_TOL * u0b.l1().max(ordered.l1()).max(f64::MIN_POSITIVE);

    // The pair bound must respect both data.
    let pair_dt = dt.min(cfl_dt(&weights, &ctx.phi, ordered.linf().max(unordered.linf()))?);
    for (label, other) in [("ordered", &ordered), ("unordered", &unordered)] {
        let trace = trace_pair(&u0b, other, &weights, &ctx.phi, pair_dt, steps)?;
        out.push(ctx.check(
            &format!("evolution/L1+ contraction per step ({label})"),
            trace.max_gap_rise <= scale,
            format!("largest per-step rise {:e} over {} steps", trace.max_gap_rise, trace.steps),
        ));
        let rev = trace_pair(other, &u0b, &weights, &ctx.phi, pair_dt, steps)?;
        out.push(ctx.check(
            &format!("evolution/L1+ contraction per step ({label}, reversed)"),
            rev.max_gap_rise <= scale,
            format!("largest per-step rise {:e}", rev.max_gap_rise),
        ));
        if let Some(viol) = trace.order_violation {
            out.push(ctx.check(
                "evolution/order preservation",
                viol <= 0.0,
                format!("largest u - û over {} steps = {viol:e}", trace.steps),
            ));
        }
    }

    let pair_evo = EvolutionConfig {
        time_step: TimeStep::Fixed(pair_dt),
        snapshot_stride: Some((steps / 50).max(1)),
        ..evo.clone()
    };
    let a = evolve(&u0b, &weights, &ctx.phi, &pair_evo)?;
    let b = evolve(&ordered, &weights, &ctx.phi, &pair_evo)?;
    for v in estimate_suite(&a, &b)? {
        let detail = if v.passed() { v.detail } else { format!("{} (seed {})", v.detail, ctx.seed) };
        out.push(Verdict::new(format!("evolution/{}", v.name), v.status, detail));
    }

    let bound = cfl_dt(&weights, &ctx.phi, u0b.linf())?;
    let rejected = if bound.is_finite() {
        matches!(step_explicit(&u0b, &weights, &ctx.phi, 2.0 * bound), Err(Error::Cfl { .. }))
    } else {
        true
    };
    out.push(ctx.check(
        "evolution/CFL violation rejected",
        rejected,
        format!("step of 2 × {bound:e}"),
    ));
    Ok(out)
}

fn resolvent_suite(ctx: &Ctx, config: &ExperimentConfig, rng: &mut ChaCha8Rng) -> Result<Vec<Verdict>> {
    let mut out = Vec::new();
    let w = &ctx.weights;
    let eps = config.resolvent.epsilon;
    let tol = config.resolvent.tol;
    let big_w = w.effective_weight();
    let q = big_w / (eps + big_w);
    let (mut sup_ex, mut l1_ex, mut over, mut res_ex, mut cmp, mut pos) =
        (f64::NEG_INFINITY, f64::NEG_INFINITY, 0usize, f64::NEG_INFINITY, f64::NEG_INFINITY, f64::INFINITY);
    let instances = 20;
    for _ in 0..instances {
        let g = ctx.random_grid(rng, Boundary::Periodic, -1.0, 1.0)?;
        let sol = solve_resolvent(&g, w, eps, tol)?;
        let v = &sol.v;
        sup_ex = sup_ex.max(eps * v.linf() - g.linf() - eps * tol);
        let box_volume = g.cell_volume() * g.len() as f64;
        l1_ex = l1_ex.max(eps * v.l1() - g.l1() - eps * tol * box_volume);
        if sol.iterations > iteration_bound(eps, big_w, tol, g.linf()) {
            over += 1;
        }
        let allowed = eps * tol * (1.0 + 2.0 * q / (1.0 - q)) + 1e-14 * g.linf() * (1.0 + big_w / eps);
        res_ex = res_ex.max(sol.residual - allowed);

        let bump = ctx.random_grid(rng, Boundary::Periodic, 0.0, 1.0)?;
        let g_hat = g.with_values(g.values().iter().zip(bump.values()).map(|(a, b)| a + b).collect())?;
        let v_hat = solve_resolvent(&g_hat, w, eps, tol)?.v;
        cmp = cmp.max(v.values().iter().zip(v_hat.values()).map(|(a, b)| a - b - 2.0 * tol / eps).fold(f64::NEG_INFINITY, f64::max));
        let pos_sol = solve_resolvent(&bump, w, eps, tol)?.v;
        pos = pos.min(pos_sol.min() + tol / eps);
    }
    out.push(ctx.check(
        "resolvent/sup bound ε‖v‖∞ ≤ ‖g‖∞",
        sup_ex <= 0.0,
        format!("largest excess beyond ε·tol: {sup_ex:e} over {instances} instances"),
    ));
    out.push(ctx.check(
        "resolvent/L1 bound ε‖v‖₁ ≤ ‖g‖₁",
        l1_ex <= 0.0,
        format!("largest excess beyond ε·tol·|box|: {l1_ex:e}"),
    ));
    out.push(ctx.check(
        "resolvent/iterations within bound",
        over == 0,
        format!("{over} of {instances} solves exceeded the predicted count"),
    ));
    out.push(ctx.check(
        "resolvent/residual bound",
        res_ex <= 0.0,
        format!("largest residual excess {res_ex:e}"),
    ));
    out.push(ctx.check(
        "resolvent/comparison",
        cmp <= 0.0,
        format!("largest v - v̂ - 2tol/ε for g ≤ ĝ: {cmp:e}"),
    ));
    out.push(ctx.check(
        "resolvent/positivity",
        pos >= 0.0,
        format!("smallest v + tol/ε for g ≥ 0: {pos:e}"),
    ));

    let mut contraction = f64::NEG_INFINITY;
    let mut scaling = 0.0f64;
    for _ in 0..5 {
        let g = ctx.random_grid(rng, Boundary::Periodic, -1.0, 1.0)?;
        let a = ctx.random_grid(rng, Boundary::Periodic, -1.0, 1.0)?;
        let b = ctx.random_grid(rng, Boundary::Periodic, -1.0, 1.0)?;
        let (ta, tb) = (resolvent_map(&a, &g, w, eps)?, resolvent_map(&b, &g, w, eps)?);
        let d_after = ta.values().iter().zip(tb.values()).fold(0.0f64, |m, (x, y)| m.max((x - y).abs()));
        let d_before = a.values().iter().zip(b.values()).fold(0.0f64, |m, (x, y)| m.max((x - y).abs()));
        contraction = contraction.max(d_after - q * d_before * (1.0 + 1e-12));

        let lambda = rng.random_range(0.1..10.0);
        let v = solve_resolvent(&g, w, eps, tol)?.v;
        let vl = solve_resolvent(&g.map(|x| lambda * x), w, eps, lambda * tol)?.v;
        let dev = v.values().iter().zip(vl.values()).fold(0.0f64, |m, (x, y)| m.max((lambda * x - y).abs()));
        scaling = scaling.max(dev / (lambda * v.linf()).max(f64::MIN_POSITIVE));
    }
    out.push(ctx.check(
        "resolvent/contraction factor q",
        contraction <= 0.0,
        format!("q = {q:.6}, largest excess of ‖Tv - Tw‖ over q‖v - w‖ = {contraction:e}"),
    ));
    out.push(ctx.check(
        "resolvent/linear scaling",
        scaling <= 1e-12,
        format!("largest relative |λB[g] - B[λg]| = {scaling:e}"),
    ));

    let f = ctx.random_grid(rng, Boundary::Periodic, -1.0, 1.0)?;
    let g = ctx.random_grid(rng, Boundary::Periodic, -1.0, 1.0)?;
    let gap = verify_selfadjoint(w, eps, &f, &g)?;
    let scale = f.inner(&f)?.sqrt() * g.inner(&g)?.sqrt() / eps;
    out.push(ctx.check(
        "resolvent/self-adjointness",
        gap <= 1e-10 * scale,
        format!("|(f, B g) - (g, B f)| = {gap:e}, scale {scale:e}"),
    ));
    let same = verify_selfadjoint(w, eps, &f, &f)?;
    out.push(ctx.check("resolvent/self-adjointness f = g", same == 0.0, format!("gap {same:e}")));
    Ok(out)
}

fn artifact_suite(ctx: &Ctx, config: &ExperimentConfig, u0: &GridFunction) -> Result<Vec<Verdict>> {
    let mut out = Vec::new();
    let text = config.to_toml_string()?;
    let back = ExperimentConfig::from_toml_str(&text);
    out.push(ctx.check(
        "experiment_cli/config round trip",
        back.as_ref() == Ok(config),
        "parse → serialize → parse".into(),
    ));

    let mut buf = Vec::new();
    u0.write_csv(&mut buf)?;
    let read = GridFunction::read_csv(buf.as_slice(), u0.boundary())?;
    let same_values = read.values() == u0.values();
    let same_lattice = read.lo() == u0.lo()
        && read.shape() == u0.shape()
        && (read.spacing() - u0.spacing()).abs() <= 1e-12 * u0.spacing();
    out.push(ctx.check(
        "experiment_cli/snapshot CSV round trip",
        same_values && same_lattice,
        format!("values identical: {same_values}, lattice identical: {same_lattice}"),
    ));
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn config(dir: &std::path::Path, extra: &str, nonlinearity: &str) -> ExperimentConfig {
        let text = format!(
            r#"
{extra}

[nonlinearity]
{nonlinearity}

[grid]
spacing = 0.1
points = 64
boundary = "periodic"

[time]
t_final = 0.05

[truncation]
r_cut = 2.0

[initial]
kind = "bump"
width = 1.5

[output]
directory = "{}"
"#,
            dir.display()
        );
        ExperimentConfig::from_toml_str(&text).unwrap()
    }

    #[test]
    fn verify_passes_and_is_reproducible() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = config(dir.path(), "[measure]\nkind = \"fractional\"\norder = 1.0", "kind = \"power\"\nm = 2.0");
        let a = run_verify(&cfg, 42).unwrap();
        assert!(a.passed(), "{}", a.render());
        let first = std::fs::read_to_string(&a.written).unwrap();
        let b = run_verify(&cfg, 42).unwrap();
        assert_eq!(first, b.render());
    }

    #[test]
    fn fast_diffusion_is_flagged() {
        let dir = tempfile::tempdir().unwrap();
        let mut cfg = config(
            dir.path(),
            "[measure]\nkind = \"fractional\"\norder = 0.5",
            "kind = \"power\"\nm = 0.3",
        );
        cfg.grid.boundary = Boundary::ZeroExtension;
        let report = run_verify(&cfg, 1).unwrap();
        assert!(report.passed(), "{}", report.render());
        assert!(report.render().contains("expected non-conservation"));
    }
}
