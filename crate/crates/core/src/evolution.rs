//! Forward-Euler time stepping of `∂ₜu = L_h[φ(u)]` under the monotonicity
//! restriction on `Δt`, with per-step diagnostics and the a priori estimates
//! checked on recorded snapshots.

use std::collections::hash_map::DefaultHasher;
use std::fmt;
use std::hash::{Hash, Hasher};
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::discrete_operator::{format_17, Boundary, GridFunction, StencilWeights, TailPolicy};
use crate::error::{Error, Result};
use crate::nonlinearity::Nonlinearity;

/// Relative slack allowed when comparing `Δt` with the CFL bound.
pub const CFL_SLACK: f64 = 1e-12;

/// Relative tolerance of the max-principle, contraction and bound checks.
pub const ESTIMATE_TOL: f64 = 1e-12;

/// How `Δt` is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TimeStep {
    /// A fixed step, rejected if it exceeds the CFL bound.
    Fixed(f64),
    /// The fraction `θ ∈ (0, 1]` of the CFL bound.
    Cfl(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvolutionConfig {
    pub time_step: TimeStep,
    pub t_final: f64,
    /// Requested snapshot times; each is taken at the nearest completed step.
    pub snapshots: Vec<f64>,
    /// Also keep every `k`-th state.
    pub snapshot_stride: Option<usize>,
    pub boundary: Boundary,
    pub tail_policy: TailPolicy,
}

impl EvolutionConfig {
    pub fn new(time_step: TimeStep, t_final: f64, boundary: Boundary, tail_policy: TailPolicy) -> Result<Self> {
        let cfg = Self {
            time_step,
            t_final,
            snapshots: Vec::new(),
            snapshot_stride: None,
            boundary,
            tail_policy,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn with_snapshots(mut self, times: Vec<f64>) -> Self {
        self.snapshots = times;
        self
    }

    pub fn with_stride(mut self, stride: usize) -> Self {
        self.snapshot_stride = Some(stride);
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.t_final > 0.0 && self.t_final.is_finite()) {
            return Err(Error::Domain(format!("final time {} must be positive", self.t_final)));
        }
        match self.time_step {
            TimeStep::Fixed(dt) if !(dt > 0.0 && dt.is_finite()) => {
                return Err(Error::Domain(format!("time step {dt} must be positive")))
            }
            TimeStep::Cfl(theta) if !(theta > 0.0 && theta <= 1.0) => {
                return Err(Error::Domain(format!("CFL fraction {theta} must lie in (0, 1]")))
            }
            _ => {}
        }
        if let Some(t) = self.snapshots.iter().find(|t| !(**t >= 0.0 && **t <= self.t_final)) {
            return Err(Error::Domain(format!("snapshot time {t} lies outside [0, {}]", self.t_final)));
        }
        if self.snapshot_stride == Some(0) {
            return Err(Error::Domain("snapshot stride must be positive".into()));
        }
        Ok(())
    }
}

/// Largest monotone step `1 / (Lip(φ, M) · W_eff)`; infinite for the zero
/// operator or a constant `φ`.
pub fn cfl_dt(weights: &StencilWeights, phi: &Nonlinearity, max_abs: f64) -> Result<f64> {
    let lip = phi.lipschitz_on(max_abs);
    if !lip.is_finite() {
        return Err(Error::InfiniteLipschitz { range: max_abs });
    }
    let rate = lip * weights.effective_weight();
    Ok(if rate > 0.0 { 1.0 / rate } else { f64::INFINITY })
}

/// `u + Δt · L_h[φ(u)]`, after checking `Δt` against the CFL bound at
/// `M = ‖u‖_∞`.
pub fn step_explicit(u: &GridFunction, weights: &StencilWeights, phi: &Nonlinearity, dt: f64) -> Result<GridFunction> {
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::Domain(format!("time step {dt} must be positive")));
    }
    let bound = cfl_dt(weights, phi, u.linf())?;
    if dt > bound * (1.0 + CFL_SLACK) {
        return Err(Error::Cfl { dt, bound });
    }
    let mut next = u.clone().into_values();
    let mut scratch = vec![0.0; u.len()];
    advance(u, weights, phi, dt, &mut scratch, &mut next)?;
    Ok(u.with_values_unchecked(next))
}

fn advance(
    u: &GridFunction,
    weights: &StencilWeights,
    phi: &Nonlinearity,
    dt: f64,
    scratch: &mut [f64],
    out: &mut [f64],
) -> Result<()> {
    if u.dim() != weights.dim() || u.spacing() != weights.spacing() {
        return Err(Error::Mismatch("stencil and grid disagree on dimension or spacing".into()));
    }
    let image = u.map(|r| phi.eval(r));
    weights.apply_into(&image, scratch);
    for ((o, &ui), &li) in out.iter_mut().zip(u.values()).zip(scratch.iter()) {
        *o = ui + dt * li;
    }
    Ok(())
}

/// One row of the diagnostics log.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepRecord {
    pub t: f64,
    /// `h^N Σ u`.
    pub mass: f64,
    pub linf: f64,
    /// `h^N Σ |u|`.
    pub l1: f64,
    pub min: f64,
    pub max: f64,
}

impl StepRecord {
    fn of(t: f64, u: &GridFunction) -> Self {
        Self {
            t,
            mass: u.mass(),
            linf: u.linf(),
            l1: u.l1(),
            min: u.min(),
            max: u.max(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub step: usize,
    pub t: f64,
    /// The requested time this state stands for, if any.
    pub requested: Option<f64>,
    pub u: GridFunction,
}

impl Snapshot {
    /// `snap_t<value>.csv`, keyed by the requested time when there is one.
    pub fn file_name(&self) -> String {
        format!("snap_t{}.csv", self.requested.unwrap_or(self.t))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Pass,
    Fail,
    /// Measured and reported, not asserted.
    Info,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Verdict {
    pub name: String,
    pub status: Status,
    pub detail: String,
}

impl Verdict {
    pub fn new(name: impl Into<String>, status: Status, detail: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            status,
            detail: detail.into(),
        }
    }

    pub fn check(name: impl Into<String>, ok: bool, detail: impl Into<String>) -> Self {
        Self::new(name, if ok { Status::Pass } else { Status::Fail }, detail)
    }

    pub fn passed(&self) -> bool {
        self.status != Status::Fail
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let tag = match self.status {
            Status::Pass => "PASS",
            Status::Fail => "FAIL",
            Status::Info => "INFO",
        };
        write!(f, "{tag} {}: {}", self.name, self.detail)
    }
}

/// Parameters two runs must share to be compared.
#[derive(Debug, Clone, PartialEq)]
pub struct RunMeta {
    pub spacing: f64,
    pub lo: Vec<i64>,
    pub shape: Vec<usize>,
    pub boundary: Boundary,
    pub tail_policy: TailPolicy,
    pub dt: f64,
    pub steps: usize,
    pub stencil_fingerprint: u64,
    pub phi: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunReport {
    pub meta: RunMeta,
    /// One record per step plus the initial state.
    pub records: Vec<StepRecord>,
    /// Ordered by step; always contains the initial and final states.
    pub snapshots: Vec<Snapshot>,
    pub verdicts: Vec<Verdict>,
}

impl RunReport {
    pub fn initial(&self) -> &GridFunction {
        &self.snapshots[0].u
    }

    pub fn final_state(&self) -> &GridFunction {
        &self.snapshots[self.snapshots.len() - 1].u
    }

    pub fn passed(&self) -> bool {
        self.verdicts.iter().all(Verdict::passed)
    }

    /// Diagnostics CSV with header `t,mass,linf,l1`.
    pub fn write_diagnostics<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["t", "mass", "linf", "l1"])?;
        for r in &self.records {
            w.write_record([format_17(r.t), format_17(r.mass), format_17(r.linf), format_17(r.l1)])?;
        }
        w.flush()?;
        Ok(())
    }

    /// Writes `diagnostics.csv` and one snapshot CSV per requested time into
    /// `dir`; returns the paths written.
    pub fn write_artifacts(&self, dir: &Path) -> Result<Vec<PathBuf>> {
        std::fs::create_dir_all(dir)?;
        let mut written = Vec::new();
        let diag = dir.join("diagnostics.csv");
        self.write_diagnostics(std::fs::File::create(&diag)?)?;
        written.push(diag);
        for snap in self.snapshots.iter().filter(|s| s.requested.is_some()) {
            let path = dir.join(snap.file_name());
            snap.u.write_csv(std::fs::File::create(&path)?)?;
            written.push(path);
        }
        Ok(written)
    }
}

fn fingerprint(weights: &StencilWeights) -> u64 {
    let mut h = DefaultHasher::new();
    weights.spacing().to_bits().hash(&mut h);
    weights.dim().hash(&mut h);
    for (a, w) in weights.iter() {
        a.hash(&mut h);
        w.to_bits().hash(&mut h);
    }
    weights.tail_mass().to_bits().hash(&mut h);
    h.finish()
}

/// Number of steps and the uniform step `T / n` for a target `Δt`.
fn schedule(t_final: f64, dt_target: f64) -> (usize, f64) {
    if !dt_target.is_finite() {
        return (1, t_final);
    }
    let ratio = t_final / dt_target;
    let n = ((ratio * (1.0 - 1e-12)).ceil() as usize).max(1);
    (n, t_final / n as f64)
}

/// Time-steps `u₀` to `T_final` and records diagnostics, snapshots and the
/// single-run verdicts (max principle, oscillation damping, mass).
pub fn evolve(u0: &GridFunction, weights: &StencilWeights, phi: &Nonlinearity, config: &EvolutionConfig) -> Result<RunReport> {
    config.validate()?;
    if let Some(i) = u0.values().iter().position(|v| !v.is_finite()) {
        return Err(Error::Domain(format!("initial datum is not finite at point {i}")));
    }
    let weights = weights.clone().with_tail_policy(config.tail_policy);
    let u0 = GridFunction::new(
        u0.spacing(),
        u0.lo().to_vec(),
        u0.shape().to_vec(),
        u0.values().to_vec(),
        config.boundary,
    )?;
    let bound = cfl_dt(&weights, phi, u0.linf())?;
    let target = match config.time_step {
        TimeStep::Fixed(dt) => {
            if dt > bound * (1.0 + CFL_SLACK) {
                return Err(Error::Cfl { dt, bound });
            }
            dt
        }
        TimeStep::Cfl(theta) => theta * bound,
    };
    let (steps, dt) = schedule(config.t_final, target);

    let mut wanted: Vec<(usize, Option<f64>)> = vec![(0, None), (steps, None)];
    for &t in &config.snapshots {
        let k = ((t / dt).round() as usize).min(steps);
        wanted.push((k, Some(t)));
    }
    if let Some(stride) = config.snapshot_stride {
        wanted.extend((0..=steps).step_by(stride).map(|k| (k, None)));
    }
    // One snapshot per step; a requested time wins over an unlabeled entry.
    wanted.sort_by(|a, b| a.0.cmp(&b.0).then(b.1.is_some().cmp(&a.1.is_some())));
    wanted.dedup_by_key(|w| w.0);
    let mut pending = wanted.into_iter().peekable();

    let time_of = |k: usize| if k == steps { config.t_final } else { k as f64 * dt };
    let mut records = Vec::with_capacity(steps + 1);
    let mut snapshots = Vec::new();
    let mut u = u0.clone();
    let mut next = vec![0.0; u.len()];
    let mut scratch = vec![0.0; u.len()];
    for k in 0..=steps {
        if k > 0 {
            advance(&u, &weights, phi, dt, &mut scratch, &mut next)?;
            if next.iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFinite { step: k });
            }
            let fresh = u.with_values_unchecked(std::mem::take(&mut next));
            next = std::mem::replace(&mut u, fresh).into_values();
        }
        records.push(StepRecord::of(time_of(k), &u));
        while let Some(&(step, requested)) = pending.peek() {
            if step != k {
                break;
            }
            snapshots.push(Snapshot {
                step,
                t: time_of(k),
                requested,
                u: u.clone(),
            });
            pending.next();
        }
    }

    let meta = RunMeta {
        spacing: u0.spacing(),
        lo: u0.lo().to_vec(),
        shape: u0.shape().to_vec(),
        boundary: config.boundary,
        tail_policy: config.tail_policy,
        dt,
        steps,
        stencil_fingerprint: fingerprint(&weights),
        phi: phi.to_string(),
    };
    let verdicts = run_verdicts(&records, &weights, &meta);
    Ok(RunReport {
        meta,
        records,
        snapshots,
        verdicts,
    })
}

fn run_verdicts(records: &[StepRecord], weights: &StencilWeights, meta: &RunMeta) -> Vec<Verdict> {
    let first = records[0];
    let scale = first.linf.max(f64::MIN_POSITIVE);
    let tol = ESTIMATE_TOL * scale;
    let mut out = Vec::new();

    let worst = records
        .iter()
        .map(|r| (first.min - r.min).max(r.max - first.max))
        .fold(0.0f64, f64::max);
    out.push(Verdict::check(
        "maximum principle",
        worst <= tol,
        format!("largest excursion beyond [min u0, max u0] = {worst:e} (tolerance {tol:e})"),
    ));

    let growth = records
        .windows(2)
        .map(|p| (p[1].max - p[1].min) - (p[0].max - p[0].min))
        .fold(0.0f64, f64::max);
    out.push(Verdict::check(
        "oscillation damping",
        growth <= tol,
        format!("largest per-step growth of max - min = {growth:e}"),
    ));

    let drift = records.iter().map(|r| (r.mass - first.mass).abs()).fold(0.0f64, f64::max);
    let conservative = meta.boundary == Boundary::Periodic
        && (meta.tail_policy == TailPolicy::Drop || weights.tail_mass() == 0.0);
    if conservative {
        let allowed =
            meta.steps as f64 * 1e-15 * first.l1 * weights.total_weight() * meta.dt + 4.0 * f64::EPSILON * first.l1;
        out.push(Verdict::check(
            "mass conservation",
            drift <= allowed,
            format!("largest |mass - mass0| = {drift:e} (allowed {allowed:e})"),
        ));
    } else {
        let last = records[records.len() - 1];
        out.push(Verdict::new(
            "mass conservation",
            Status::Info,
            format!(
                "not conservative by construction (boundary {:?}, tail {:?}); mass {:e} -> {:e}",
                meta.boundary, meta.tail_policy, first.mass, last.mass
            ),
        ));
    }
    out
}

/// Fitted constant of the time modulus `‖u(t) − u(s)‖₁ ≤ C(|t−s|^{1/3} + |t−s|)`
/// over all snapshot pairs of one run.
pub fn time_modulus_constant(report: &RunReport) -> Result<f64> {
    let mut c = 0.0f64;
    for (i, a) in report.snapshots.iter().enumerate() {
        for b in &report.snapshots[i + 1..] {
            let tau = (b.t - a.t).abs();
            if tau > 0.0 {
                c = c.max(a.u.l1_distance(&b.u)? / (tau.cbrt() + tau));
            }
        }
    }
    Ok(c)
}

/// Checks the a priori estimates on two runs from data `u₀`, `û₀` at every
/// common snapshot: `L¹⁺` contraction (nonincreasing and below the initial
/// gap), comparison for ordered data, `L¹` and `L∞` bounds, and the fitted
/// time-regularity constant.
pub fn estimate_suite(a: &RunReport, b: &RunReport) -> Result<Vec<Verdict>> {
    if a.meta != b.meta {
        return Err(Error::Mismatch(format!(
            "runs differ in their parameters: {:?} vs {:?}",
            a.meta, b.meta
        )));
    }
    let steps_a: Vec<usize> = a.snapshots.iter().map(|s| s.step).collect();
    let steps_b: Vec<usize> = b.snapshots.iter().map(|s| s.step).collect();
    if steps_a != steps_b {
        return Err(Error::Mismatch("runs recorded different snapshot steps".into()));
    }
    let (u0, v0) = (a.initial(), b.initial());
    let scale = u0.l1().max(v0.l1()).max(f64::MIN_POSITIVE);
    let sup_scale = u0.linf().max(v0.linf()).max(f64::MIN_POSITIVE);
    let mut out = Vec::new();

    let gap0 = u0.positive_part_gap(v0)?;
    let mut prev = gap0;
    let mut worst_rise = 0.0f64;
    let mut worst_excess = 0.0f64;
    for (sa, sb) in a.snapshots.iter().zip(&b.snapshots) {
        let gap = sa.u.positive_part_gap(&sb.u)?;
        worst_rise = worst_rise.max(gap - prev);
        worst_excess = worst_excess.max(gap - gap0);
        prev = gap;
    }
    let tol = ESTIMATE_TOL * scale;
    out.push(Verdict::check(
        "L1+ contraction",
        worst_rise <= tol && worst_excess <= tol,
        format!("largest rise of h^N Σ(u - û)⁺ between snapshots {worst_rise:e}, above initial {worst_excess:e}"),
    ));

    let ordered = |p: &GridFunction, q: &GridFunction| p.values().iter().zip(q.values()).all(|(x, y)| x <= y);
    if ordered(u0, v0) || ordered(v0, u0) {
        let (lo, hi) = if ordered(u0, v0) { (a, b) } else { (b, a) };
        let violation = lo
            .snapshots
            .iter()
            .zip(&hi.snapshots)
            .flat_map(|(p, q)| p.u.values().iter().zip(q.u.values()).map(|(x, y)| x - y))
            .fold(0.0f64, f64::max);
        out.push(Verdict::check(
            "comparison",
            violation <= 0.0,
            format!("largest violation of the order {violation:e}"),
        ));
    } else {
        out.push(Verdict::new("comparison", Status::Info, "initial data are not ordered"));
    }

    for (name, run) in [("u", a), ("û", b)] {
        let l1_0 = run.initial().l1();
        let linf_0 = run.initial().linf();
        let l1_excess = run.snapshots.iter().map(|s| s.u.l1() - l1_0).fold(0.0f64, f64::max);
        let linf_excess = run.snapshots.iter().map(|s| s.u.linf() - linf_0).fold(0.0f64, f64::max);
        out.push(Verdict::check(
            format!("L1 bound ({name})"),
            l1_excess <= ESTIMATE_TOL * scale,
            format!("largest excess of ‖u(t)‖₁ over ‖u₀‖₁ = {l1_excess:e}"),
        ));
        out.push(Verdict::check(
            format!("Linf bound ({name})"),
            linf_excess <= ESTIMATE_TOL * sup_scale,
            format!("largest excess of ‖u(t)‖∞ over ‖u₀‖∞ = {linf_excess:e}"),
        ));
    }

    let c = time_modulus_constant(a)?.max(time_modulus_constant(b)?);
    out.push(Verdict::new(
        "time modulus",
        Status::Info,
        format!("fitted C = {c:.6e} in ‖u(t) - u(s)‖₁ ≤ C(|t-s|^(1/3) + |t-s|)"),
    ));
    Ok(out)
}

/// Per-step comparison of two runs sharing the operator and `Δt`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairTrace {
    pub steps: usize,
    /// Largest per-step increase of `h^N Σ (u^n − û^n)⁺`.
    pub max_gap_rise: f64,
    /// `h^N Σ (u⁰ − û⁰)⁺`.
    pub initial_gap: f64,
    /// Largest `u^n_i − û^n_i` over all steps when `u⁰ ≤ û⁰`; `None` for
    /// unordered data.
    pub order_violation: Option<f64>,
}

/// Advances `u₀` and `û₀` in lockstep for `steps` steps of size `dt` and
/// records the `L¹⁺` gap and the pointwise order after every step.
pub fn trace_pair(
    u0: &GridFunction,
    v0: &GridFunction,
    weights: &StencilWeights,
    phi: &Nonlinearity,
    dt: f64,
    steps: usize,
) -> Result<PairTrace> {
    u0.check_same_lattice(v0)?;
    let ordered = u0.values().iter().zip(v0.values()).all(|(a, b)| a <= b);
    let initial_gap = u0.positive_part_gap(v0)?;
    let (mut u, mut v) = (u0.clone(), v0.clone());
    let mut prev = initial_gap;
    let mut max_gap_rise = f64::NEG_INFINITY;
    let mut violation = f64::NEG_INFINITY;
    for k in 1..=steps {
        u = step_explicit(&u, weights, phi, dt)?;
        v = step_explicit(&v, weights, phi, dt)?;
        if u.values().iter().chain(v.values()).any(|x| !x.is_finite()) {
            return Err(Error::NonFinite { step: k });
        }
        let gap = u.positive_part_gap(&v)?;
        max_gap_rise = max_gap_rise.max(gap - prev);
        prev = gap;
        if ordered {
            violation = u.values().iter().zip(v.values()).fold(violation, |m, (a, b)| m.max(a - b));
        }
    }
    Ok(PairTrace {
        steps,
        max_gap_rise,
        initial_gap,
        order_violation: ordered.then_some(violation),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::discrete_operator::assemble_local;
    use nalgebra::DMatrix;

    fn heat(h: f64) -> StencilWeights {
        assemble_local(&DMatrix::identity(1, 1), h).unwrap()
    }

    #[test]
    fn cfl_examples() {
        let h = 0.1;
        let w = heat(h);
        let lin = Nonlinearity::linear(1.0).unwrap();
        assert!((cfl_dt(&w, &lin, 3.0).unwrap() - h * h / 2.0).abs() < 1e-15);
        let pme = Nonlinearity::power(2.0).unwrap();
        assert!((cfl_dt(&w, &pme, 1.0).unwrap() - h * h / 4.0).abs() < 1e-15);
        let stefan = Nonlinearity::stefan(1.0, 1.0, 1.0).unwrap();
        assert!((cfl_dt(&w, &stefan, 7.0).unwrap() - h * h / 2.0).abs() < 1e-15);
        let fast = Nonlinearity::power(0.5).unwrap();
        assert!(matches!(cfl_dt(&w, &fast, 1.0), Err(Error::InfiniteLipschitz { .. })));
    }

    #[test]
    fn one_step_of_a_spike() {
        let h = 0.1;
        let u = GridFunction::new(h, vec![-3], vec![7], vec![0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0], Boundary::ZeroExtension)
            .unwrap();
        let lin = Nonlinearity::linear(1.0).unwrap();
        let next = step_explicit(&u, &heat(h), &lin, h * h / 4.0).unwrap();
        let expect = [0.0, 0.0, 0.25, 0.5, 0.25, 0.0, 0.0];
        for (a, b) in next.values().iter().zip(expect) {
            assert!((a - b).abs() < 1e-15, "{:?}", next.values());
        }
    }

    #[test]
    fn constants_are_stationary() {
        let h = 0.05;
        let u = GridFunction::centered(1, h, 40, Boundary::Periodic, |_| 0.7).unwrap();
        let pme = Nonlinearity::power(2.0).unwrap();
        let next = step_explicit(&u, &heat(h), &pme, 0.9 * h * h / 2.8).unwrap();
        assert_eq!(next.values(), u.values());
    }

    #[test]
    fn cfl_violation_is_an_error() {
        let h = 0.1;
        let u = GridFunction::centered(1, h, 10, Boundary::Periodic, |x| x[0]).unwrap();
        let lin = Nonlinearity::linear(1.0).unwrap();
        let err = step_explicit(&u, &heat(h), &lin, h * h).unwrap_err();
        assert!(matches!(err, Error::Cfl { .. }));
        let cfg = EvolutionConfig::new(TimeStep::Fixed(h * h), 1.0, Boundary::Periodic, TailPolicy::Drop).unwrap();
        assert!(matches!(evolve(&u, &heat(h), &lin, &cfg), Err(Error::Cfl { .. })));
    }

    #[test]
    fn record_count_and_snapshot_alignment() {
        let h = 0.1;
        let u = GridFunction::centered(1, h, 32, Boundary::Periodic, |x| (-x[0] * x[0]).exp()).unwrap();
        let lin = Nonlinearity::linear(1.0).unwrap();
        let cfg = EvolutionConfig::new(TimeStep::Fixed(0.004), 0.1, Boundary::Periodic, TailPolicy::Drop)
            .unwrap()
            .with_snapshots(vec![0.049, 0.0101]);
        let report = evolve(&u, &heat(h), &lin, &cfg).unwrap();
        assert_eq!(report.meta.steps, 25);
        assert_eq!(report.records.len(), report.meta.steps + 1);
        assert_eq!(report.records.last().unwrap().t, 0.1);
        let steps: Vec<usize> = report.snapshots.iter().map(|s| s.step).collect();
        assert_eq!(steps, vec![0, 3, 12, 25]);
        assert!(report.passed(), "{:?}", report.verdicts);
    }

    #[test]
    fn identical_runs_have_zero_gaps() {
        let h = 0.1;
        let u = GridFunction::centered(1, h, 32, Boundary::Periodic, |x| (1.0 - x[0].abs()).max(0.0)).unwrap();
        let pme = Nonlinearity::power(2.0).unwrap();
        let cfg = EvolutionConfig::new(TimeStep::Cfl(0.9), 0.2, Boundary::Periodic, TailPolicy::Drop)
            .unwrap()
            .with_stride(5);
        let a = evolve(&u, &heat(h), &pme, &cfg).unwrap();
        let verdicts = estimate_suite(&a, &a).unwrap();
        assert!(verdicts.iter().all(Verdict::passed), "{verdicts:?}");
        for (s, t) in a.snapshots.iter().zip(&a.snapshots) {
            assert_eq!(s.u.positive_part_gap(&t.u).unwrap(), 0.0);
        }
    }

    #[test]
    fn mismatched_runs_are_rejected() {
        let h = 0.1;
        let u = GridFunction::centered(1, h, 16, Boundary::Periodic, |x| x[0].cos()).unwrap();
        let lin = Nonlinearity::linear(1.0).unwrap();
        let c1 = EvolutionConfig::new(TimeStep::Cfl(0.5), 0.1, Boundary::Periodic, TailPolicy::Drop).unwrap();
        let c2 = EvolutionConfig::new(TimeStep::Cfl(0.25), 0.1, Boundary::Periodic, TailPolicy::Drop).unwrap();
        let a = evolve(&u, &heat(h), &lin, &c1).unwrap();
        let b = evolve(&u, &heat(h), &lin, &c2).unwrap();
        assert!(matches!(estimate_suite(&a, &b), Err(Error::Mismatch(_))));
    }

    #[test]
    fn diagnostics_csv_round_trips() {
        let h = 0.1;
        let u = GridFunction::centered(1, h, 16, Boundary::Periodic, |x| x[0].sin() + 2.0).unwrap();
        let lin = Nonlinearity::linear(1.0).unwrap();
        let cfg = EvolutionConfig::new(TimeStep::Cfl(1.0), 0.05, Boundary::Periodic, TailPolicy::Drop).unwrap();
        let report = evolve(&u, &heat(h), &lin, &cfg).unwrap();
        let mut buf = Vec::new();
        report.write_diagnostics(&mut buf).unwrap();
        let mut r = csv::Reader::from_reader(buf.as_slice());
        assert_eq!(r.headers().unwrap(), vec!["t", "mass", "linf", "l1"]);
        for (rec, expect) in r.records().zip(&report.records) {
            let rec = rec.unwrap();
            let got: Vec<f64> = rec.iter().map(|s| s.parse().unwrap()).collect();
            assert_eq!(got, vec![expect.t, expect.mass, expect.linf, expect.l1]);
        }
    }
    #[test]
    fn ordered_pair_stays_ordered() {
        let h = 0.1;
        let u = GridFunction::centered(1, h, 40, Boundary::ZeroExtension, |x| (1.0 - x[0].abs()).max(0.0)).unwrap();
        let v = u.map(|x| x + 0.01);
        let pme = Nonlinearity::power(2.0).unwrap();
        let w = heat(h);
        let dt = 0.9 * cfl_dt(&w, &pme, v.linf()).unwrap();
        let trace = trace_pair(&u, &v, &w, &pme, dt, 50).unwrap();
        assert!(trace.order_violation.unwrap() <= 0.0);
        assert!(trace.max_gap_rise <= 0.0);
        assert_eq!(trace.initial_gap, 0.0);
    }
}
