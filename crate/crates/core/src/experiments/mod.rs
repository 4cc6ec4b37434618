//! Config-driven runs behind the `nlpme` subcommands. Each writes its CSV
//! artifacts into the configured output directory.
//!
//! Distances in `C([0,T]; L¹_loc)` are approximated by the maximum over
//! recorded snapshot times of the `L¹` distance over the computational box.

mod verify;

use std::path::{Path, PathBuf};

use rayon::prelude::*;

use crate::barenblatt::Barenblatt;
use crate::config::{ExperimentConfig, InitialTag, MeasureSection, MeasureTag, NonlinearitySection, NonlinearityTag};
use crate::discrete_operator::{format_17, GridFunction, StencilWeights};
use crate::error::{Error, Result};
use crate::evolution::{cfl_dt, evolve, EvolutionConfig, RunReport, Status, TimeStep, Verdict};
use crate::nonlinearity::Nonlinearity;
use crate::resolvent::{solve_resolvent, ResolventSolution};

pub use verify::{run_verify, VerifyReport};

/// Mollification radius used for fast-diffusion entries that set none.
pub const DEFAULT_ETA: f64 = 1e-2;

/// A sweep result: one row per parameter value and the monotonicity verdict.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<f64>>,
    pub verdict: Verdict,
}

impl Table {
    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let j = self.columns.iter().position(|c| *c == name)?;
        Some(self.rows.iter().map(|r| r[j]).collect())
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(&self.columns)?;
        for row in &self.rows {
            w.write_record(row.iter().map(|v| format_17(*v)))?;
        }
        w.flush()?;
        Ok(())
    }
}

/// `Pass` when `values` strictly decrease; a single value is not asserted.
pub fn strictly_decreasing(name: &str, values: &[f64]) -> Verdict {
    if values.len() < 2 {
        return Verdict::new(name, Status::Info, "single row, no assertion");
    }
    let ok = values.windows(2).all(|p| p[1] < p[0]);
    let listed: Vec<String> = values.iter().map(|v| format!("{v:.6e}")).collect();
    Verdict::check(name, ok, format!("[{}]", listed.join(", ")))
}

/// Largest `|x|` where `u > threshold · max u`.
pub fn support_radius(u: &GridFunction, threshold: f64) -> f64 {
    let cut = threshold * u.max();
    (0..u.len())
        .filter(|&i| u.values()[i] > cut)
        .map(|i| u.point(i).iter().map(|x| x * x).sum::<f64>().sqrt())
        .fold(0.0, f64::max)
}

#[derive(Debug, Clone)]
pub struct SolveOutcome {
    pub report: RunReport,
    pub written: Vec<PathBuf>,
    pub support_radius: f64,
}

/// Evolves the configured problem and writes `diagnostics.csv` and the
/// snapshot CSVs.
pub fn run_solve(config: &ExperimentConfig) -> Result<SolveOutcome> {
    let u0 = config.initial_data()?;
    let phi = config.nonlinearity(u0.linf())?;
    let weights = config.stencil()?;
    let report = evolve(&u0, &weights, &phi, &config.evolution()?)?;
    let written = report.write_artifacts(&config.output.directory)?;
    let support_radius = support_radius(report.final_state(), 1e-12);
    Ok(SolveOutcome {
        report,
        written,
        support_radius,
    })
}

#[derive(Debug, Clone)]
pub struct ResolventOutcome {
    pub solution: ResolventSolution,
    pub written: PathBuf,
}

/// Solves `εv − L_h v = g` with `g` the configured initial datum and writes
/// `resolvent.csv`.
pub fn run_resolvent(config: &ExperimentConfig) -> Result<ResolventOutcome> {
    let g = config.initial_data()?;
    let weights = config.stencil()?;
    let solution = solve_resolvent(&g, &weights, config.resolvent.epsilon, config.resolvent.tol)?;
    std::fs::create_dir_all(&config.output.directory)?;
    let written = config.output.directory.join("resolvent.csv");
    solution.v.write_csv(std::fs::File::create(&written)?)?;
    Ok(ResolventOutcome { solution, written })
}

/// One member of a sweep.
struct Member {
    weights: StencilWeights,
    phi: Nonlinearity,
    u0: GridFunction,
}

/// Runs all members with one common `Δt` (the configured step, or `θ` times
/// the smallest CFL bound) so their snapshots fall on the same steps.
fn run_common(config: &ExperimentConfig, members: &[Member]) -> Result<Vec<RunReport>> {
    let mut bound = f64::INFINITY;
    for m in members {
        bound = bound.min(cfl_dt(&m.weights, &m.phi, m.u0.linf())?);
    }
    let dt = match config.time_step()? {
        TimeStep::Fixed(dt) => dt,
        TimeStep::Cfl(theta) => {
            if bound.is_finite() {
                theta * bound
            } else {
                config.time.t_final
            }
        }
    };
    let evo = EvolutionConfig {
        time_step: TimeStep::Fixed(dt),
        ..config.evolution()?
    };
    members.par_iter().map(|m| evolve(&m.u0, &m.weights, &m.phi, &evo)).collect()
}

/// `max_t h^N Σ |u(t) − v(t)|` over the common snapshots of two runs.
pub fn sup_l1_distance(a: &RunReport, b: &RunReport) -> Result<f64> {
    if a.snapshots.len() != b.snapshots.len() {
        return Err(Error::Mismatch("runs recorded different snapshots".into()));
    }
    let mut d = 0.0f64;
    for (sa, sb) in a.snapshots.iter().zip(&b.snapshots) {
        if sa.step != sb.step {
            return Err(Error::Mismatch("runs recorded snapshots at different steps".into()));
        }
        d = d.max(sa.u.l1_distance(&sb.u)?);
    }
    Ok(d)
}

/// The exact solution the converge-h table is measured against, when the
/// configuration is the local porous medium equation from Barenblatt data.
fn barenblatt_reference(config: &ExperimentConfig) -> Option<(Barenblatt, f64)> {
    let local_laplacian = config.local.as_ref().is_some_and(|l| l.sigma == vec![vec![1.0]]);
    let nl = &config.nonlinearity;
    let init = &config.initial;
    if config.measure.is_some()
        || !local_laplacian
        || nl.kind != NonlinearityTag::Power
        || nl.mollify.is_some()
        || init.kind != InitialTag::Barenblatt
        || init.m != nl.m
        || init.center.as_ref().is_some_and(|c| c.iter().any(|x| *x != 0.0))
    {
        return None;
    }
    Some((Barenblatt::new(nl.m?).ok()?, init.t0?))
}

/// `L¹` error at `T_final` for each spacing in `levels`, against the
/// Barenblatt profile when the configuration is the local PME from
/// Barenblatt data and against the finest level otherwise (on the coarse
/// level's points). Every level covers the box of the configured grid.
pub fn run_converge_h(config: &ExperimentConfig, levels: &[f64]) -> Result<Table> {
    if levels.len() < 3 {
        return Err(Error::Domain(format!("converge-h needs at least 3 levels, got {}", levels.len())));
    }
    let side = config.grid.spacing * config.grid.points() as f64;
    let finest = levels.iter().copied().fold(f64::INFINITY, f64::min);
    let mut points = Vec::with_capacity(levels.len());
    for &h in levels {
        let n = side / h;
        let ratio = h / finest;
        if !(h > 0.0) || (n - n.round()).abs() > 1e-9 * n || (ratio - ratio.round()).abs() > 1e-9 * ratio {
            return Err(Error::Domain(format!(
                "level h = {h} does not divide the box side {side} or is not a multiple of the finest level {finest}"
            )));
        }
        let n = n.round() as usize;
        if n % 2 != 0 {
            return Err(Error::Domain(format!("level h = {h} gives an odd point count {n}")));
        }
        points.push(n);
    }

    let reports: Vec<RunReport> = levels
        .par_iter()
        .zip(&points)
        .map(|(&h, &n)| {
            let mut cfg = config.clone();
            cfg.grid.spacing = h;
            cfg.grid.points = Some(n);
            let u0 = cfg.initial_data()?;
            let phi = cfg.nonlinearity(u0.linf())?;
            evolve(&u0, &cfg.stencil()?, &phi, &cfg.evolution()?)
        })
        .collect::<Result<_>>()?;

    let exact = barenblatt_reference(config);
    let finest_idx = levels.iter().position(|&h| h == finest).unwrap_or(0);
    let reference = reports[finest_idx].final_state();
    let mut rows = Vec::with_capacity(levels.len());
    let mut errors = Vec::with_capacity(levels.len());
    for ((&h, &n), report) in levels.iter().zip(&points).zip(&reports) {
        let u = report.final_state();
        let error = match &exact {
            Some((b, t0)) => {
                let t = t0 + config.time.t_final;
                let mut e = 0.0;
                for i in 0..u.len() {
                    e += (u.values()[i] - b.eval(t, u.point(i)[0])?).abs();
                }
                e * u.cell_volume()
            }
            None => restricted_l1(u, reference)?,
        };
        rows.push(vec![h, n as f64, report.meta.steps as f64, report.meta.dt, error]);
        errors.push((h, error));
    }
    // Errors ordered from the coarsest level; the finest level is its own
    // reference unless an exact solution is available.
    errors.sort_by(|a, b| b.0.total_cmp(&a.0));
    let asserted: Vec<f64> = errors
        .iter()
        .filter(|(h, _)| exact.is_some() || *h > finest)
        .map(|(_, e)| *e)
        .collect();
    let name = if exact.is_some() {
        "L1 error vs Barenblatt decreases with h"
    } else {
        "L1 error vs finest level decreases with h"
    };
    let table = Table {
        columns: vec!["h", "points", "steps", "dt", "error"],
        rows,
        verdict: strictly_decreasing(name, &asserted),
    };
    write_table(config, &table)?;
    Ok(table)
}

/// `h_c^N Σ |u_c(x) − u_f(x)|` over the points of the coarse grid `u_c`,
/// which must all lie on the fine grid `u_f`.
fn restricted_l1(coarse: &GridFunction, fine: &GridFunction) -> Result<f64> {
    let ratio = coarse.spacing() / fine.spacing();
    let r = ratio.round() as i64;
    if (ratio - r as f64).abs() > 1e-9 * ratio || coarse.dim() != fine.dim() {
        return Err(Error::Mismatch("levels are not nested".into()));
    }
    let mut sum = 0.0;
    for i in 0..coarse.len() {
        let idx: Vec<i64> = coarse.lattice_index(i).iter().map(|k| k * r).collect();
        let j = fine
            .flat_index(&idx)
            .ok_or_else(|| Error::Mismatch("coarse point outside the fine box".into()))?;
        sum += (coarse.values()[i] - fine.values()[j]).abs();
    }
    Ok(sum * coarse.cell_volume())
}

fn write_table(config: &ExperimentConfig, table: &Table) -> Result<()> {
    std::fs::create_dir_all(&config.output.directory)?;
    table.write_csv(&config.output.directory.join("table.csv"))
}

fn fractional_section(order: f64) -> MeasureSection {
    MeasureSection {
        kind: MeasureTag::Fractional,
        order: Some(order),
        atoms: None,
        mass: None,
        width: None,
        scale: None,
        decay: None,
    }
}

/// Distance between the run with `−(−Δ)^{s/2}` and the run with `Δ` (the
/// local operator with `σ = I`), for each order `s`; all other settings come
/// from `config`.
pub fn run_converge_s(config: &ExperimentConfig, orders: &[f64]) -> Result<Table> {
    if orders.windows(2).any(|p| p[1] <= p[0]) || orders.iter().any(|s| !(*s > 0.0 && *s < 2.0)) {
        return Err(Error::Domain("orders must increase strictly inside (0, 2)".into()));
    }
    let dim = config.grid.dim;
    let mut local = config.clone();
    local.measure = None;
    local.local = Some(crate::config::LocalSection {
        sigma: (0..dim).map(|i| (0..dim).map(|j| if i == j { 1.0 } else { 0.0 }).collect()).collect(),
    });
    let mut configs = vec![local];
    for &s in orders {
        let mut c = config.clone();
        c.local = None;
        c.measure = Some(fractional_section(s));
        configs.push(c);
    }
    let u0 = config.initial_data()?;
    let members = configs
        .par_iter()
        .map(|c| {
            Ok(Member {
                weights: c.stencil()?,
                phi: c.nonlinearity(u0.linf())?,
                u0: u0.clone(),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let reports = run_common(config, &members)?;
    let mut rows = Vec::new();
    let mut distances = Vec::new();
    for (&s, report) in orders.iter().zip(&reports[1..]) {
        let d = sup_l1_distance(report, &reports[0])?;
        rows.push(vec![s, report.meta.steps as f64, report.meta.dt, d]);
        distances.push(d);
    }
    let table = Table {
        columns: vec!["s", "steps", "dt", "distance"],
        rows,
        verdict: strictly_decreasing("distance to the local run decreases as s -> 2", &distances),
    };
    write_table(config, &table)?;
    Ok(table)
}

/// Parses `m:s` pairs separated by commas.
pub fn parse_pairs(text: &str) -> Result<Vec<(f64, f64)>> {
    text.split(',')
        .filter(|p| !p.trim().is_empty())
        .map(|p| {
            let (m, s) = p
                .split_once(':')
                .ok_or_else(|| Error::Config(format!("pair `{p}` is not of the form m:s")))?;
            let parse = |v: &str| {
                v.trim()
                    .parse::<f64>()
                    .map_err(|e| Error::Config(format!("pair `{p}`: {e}")))
            };
            Ok((parse(m)?, parse(s)?))
        })
        .collect()
}

/// Distance between the run with `(φ, μ) = (Power(m_n), fractional(s_n))`
/// and the target pair, for each entry. When any exponent is below 1 every
/// member is mollified with the configured `η` (or [`DEFAULT_ETA`]).
pub fn run_continuous_dependence(config: &ExperimentConfig, pairs: &[(f64, f64)], target: (f64, f64)) -> Result<Table> {
    let fast = pairs.iter().chain([&target]).any(|(m, _)| *m < 1.0);
    let eta = config.nonlinearity.mollify.or(fast.then_some(DEFAULT_ETA));
    let member_config = |(m, s): (f64, f64)| {
        let mut c = config.clone();
        c.measure = Some(fractional_section(s));
        c.nonlinearity = NonlinearitySection {
            mollify: eta,
            ..NonlinearitySection::power(m)
        };
        c
    };
    let u0 = config.initial_data()?;
    let configs: Vec<ExperimentConfig> = [target].iter().chain(pairs).map(|&p| member_config(p)).collect();
    let members = configs
        .par_iter()
        .map(|c| {
            c.validate()?;
            Ok(Member {
                weights: c.stencil()?,
                phi: c.nonlinearity(u0.linf())?,
                u0: u0.clone(),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let reports = run_common(config, &members)?;
    let mut rows = Vec::new();
    let mut distances = Vec::new();
    for (&(m, s), report) in pairs.iter().zip(&reports[1..]) {
        let d = sup_l1_distance(report, &reports[0])?;
        rows.push(vec![m, s, report.meta.steps as f64, report.meta.dt, d]);
        distances.push(d);
    }
    let all_equal = pairs.iter().all(|p| *p == target);
    let verdict = if all_equal {
        let worst = distances.iter().copied().fold(0.0, f64::max);
        Verdict::check("constant list gives zero distances", worst == 0.0, format!("largest distance {worst:e}"))
    } else {
        strictly_decreasing("distance to the target run decreases", &distances)
    };
    let table = Table {
        columns: vec!["m", "s", "steps", "dt", "distance"],
        rows,
        verdict,
    };
    write_table(config, &table)?;
    Ok(table)
}
