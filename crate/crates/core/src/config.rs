//! Experiment configuration: a TOML file of flat `[section]`s with
//! `key = value` pairs. Unknown sections and keys are rejected, and so are
//! keys that the selected `kind` does not use.
//!
//! ```toml
//! [measure]            # optional
//! kind = "fractional"  # fractional | dirac | gaussian | tempered
//! order = 1.0
//!
//! [local]              # optional; columns of σ
//! sigma = [[1.0]]
//!
//! [nonlinearity]
//! kind = "power"       # power | stefan | linear | table
//! m = 2.0
//! mollify = 0.01       # optional radius η
//!
//! [grid]
//! dim = 1
//! spacing = 0.05
//! points = 256         # per axis
//! boundary = "zero_extension"
//!
//! [time]
//! cfl = 0.9            # or dt = ...
//! t_final = 0.5
//! snapshots = [0.1, 0.25]
//!
//! [truncation]
//! r_cut = 10.0
//! tail_policy = "drop" # drop | absorb
//! origin_cell = "skip" # skip | second_moment
//!
//! [initial]
//! kind = "gaussian"    # gaussian | bump | barenblatt | constant | csv
//! amplitude = 1.0
//! width = 1.0
//!
//! [resolvent]
//! epsilon = 1.0
//! tol = 1e-10
//!
//! [output]
//! directory = "out"
//! ```

use std::path::{Path, PathBuf};

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::barenblatt::Barenblatt;
use crate::discrete_operator::{
    assemble_local, assemble_nonlocal, bump, Boundary, GridFunction, NonlocalOptions, OriginCell, StencilWeights,
    TailPolicy,
};
use crate::error::{Error, Result};
use crate::evolution::{EvolutionConfig, TimeStep};
use crate::levy_measure::{Atom, LevyMeasure, RadialProfile};
use crate::nonlinearity::Nonlinearity;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub measure: Option<MeasureSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub local: Option<LocalSection>,
    pub nonlinearity: NonlinearitySection,
    #[serde(default)]
    pub grid: GridSection,
    #[serde(default)]
    pub time: TimeSection,
    #[serde(default)]
    pub truncation: TruncationSection,
    #[serde(default)]
    pub initial: InitialSection,
    #[serde(default)]
    pub resolvent: ResolventSection,
    #[serde(default)]
    pub output: OutputSection,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MeasureTag {
    Fractional,
    Dirac,
    Gaussian,
    Tempered,
}

/// `[measure]`. `atoms` rows are `[z₁, ..., z_N, mass]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeasureSection {
    pub kind: MeasureTag,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub order: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub atoms: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mass: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub width: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scale: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub decay: Option<f64>,
}

/// `[local]`: the columns `σ_1, ..., σ_P` of `σ`, each of length `N`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LocalSection {
    pub sigma: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NonlinearityTag {
    Power,
    Stefan,
    Linear,
    Table,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NonlinearitySection {
    pub kind: NonlinearityTag,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub m: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c1: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c2: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub latent: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub a: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub xs: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ys: Option<Vec<f64>>,
    /// Mollification radius `η`; the table covers `[-‖u₀‖_∞, ‖u₀‖_∞]`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mollify: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSection {
    #[serde(default = "default_dim")]
    pub dim: usize,
    #[serde(default = "default_spacing")]
    pub spacing: f64,
    /// Points per axis; defaults to 256 in 1D and 64 otherwise.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub points: Option<usize>,
    #[serde(default = "default_boundary")]
    pub boundary: Boundary,
}

fn default_dim() -> usize {
    1
}
fn default_spacing() -> f64 {
    0.05
}
fn default_boundary() -> Boundary {
    Boundary::ZeroExtension
}

impl Default for GridSection {
    fn default() -> Self {
        Self {
            dim: default_dim(),
            spacing: default_spacing(),
            points: None,
            boundary: default_boundary(),
        }
    }
}

impl GridSection {
    pub fn points(&self) -> usize {
        self.points.unwrap_or(if self.dim == 1 { 256 } else { 64 })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimeSection {
    /// Fraction of the CFL bound; used when `dt` is absent (default 0.9).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cfl: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dt: Option<f64>,
    #[serde(default = "default_t_final")]
    pub t_final: f64,
    #[serde(default)]
    pub snapshots: Vec<f64>,
}

fn default_t_final() -> f64 {
    0.5
}

impl Default for TimeSection {
    fn default() -> Self {
        Self {
            cfl: None,
            dt: None,
            t_final: default_t_final(),
            snapshots: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TruncationSection {
    #[serde(default = "default_r_cut")]
    pub r_cut: f64,
    #[serde(default)]
    pub tail_policy: TailPolicy,
    #[serde(default)]
    pub origin_cell: OriginCell,
}

fn default_r_cut() -> f64 {
    10.0
}

impl Default for TruncationSection {
    fn default() -> Self {
        Self {
            r_cut: default_r_cut(),
            tail_policy: TailPolicy::Drop,
            origin_cell: OriginCell::Skip,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitialTag {
    /// `amplitude · e^{-|x-center|²/width²}`.
    Gaussian,
    /// `amplitude · e · bump((x-center)/width)`, peak value `amplitude`.
    Bump,
    /// The unit-mass Barenblatt profile of exponent `m` at time `t0`.
    Barenblatt,
    Constant,
    /// A snapshot CSV at `path`.
    Csv,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialSection {
    pub kind: InitialTag,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub amplitude: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub width: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub center: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub m: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t0: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub value: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub path: Option<PathBuf>,
}

impl Default for InitialSection {
    fn default() -> Self {
        Self {
            kind: InitialTag::Gaussian,
            amplitude: None,
            width: None,
            center: None,
            m: None,
            t0: None,
            value: None,
            path: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ResolventSection {
    #[serde(default = "default_epsilon")]
    pub epsilon: f64,
    #[serde(default = "default_tol")]
    pub tol: f64,
}

fn default_epsilon() -> f64 {
    1.0
}
fn default_tol() -> f64 {
    1e-10
}

impl Default for ResolventSection {
    fn default() -> Self {
        Self {
            epsilon: default_epsilon(),
            tol: default_tol(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    #[serde(default = "default_directory")]
    pub directory: PathBuf,
}

fn default_directory() -> PathBuf {
    PathBuf::from("out")
}

impl Default for OutputSection {
    fn default() -> Self {
        Self {
            directory: default_directory(),
        }
    }
}

/// Fails when a key the selected kind ignores is set.
fn forbid(section: &str, kind: &str, keys: &[(&str, bool)]) -> Result<()> {
    match keys.iter().find(|(_, set)| *set) {
        Some((key, _)) => Err(Error::Config(format!("[{section}] kind = \"{kind}\" does not use `{key}`"))),
        None => Ok(()),
    }
}

fn need<T: Clone>(section: &str, kind: &str, key: &str, v: &Option<T>) -> Result<T> {
    v.clone()
        .ok_or_else(|| Error::Config(format!("[{section}] kind = \"{kind}\" needs `{key}`")))
}

impl MeasureSection {
    pub fn build(&self, dim: usize) -> Result<LevyMeasure> {
        let s = "measure";
        match self.kind {
            MeasureTag::Fractional => {
                forbid(
                    s,
                    "fractional",
                    &[
                        ("atoms", self.atoms.is_some()),
                        ("mass", self.mass.is_some()),
                        ("width", self.width.is_some()),
                        ("scale", self.scale.is_some()),
                        ("decay", self.decay.is_some()),
                    ],
                )?;
                LevyMeasure::fractional(dim, need(s, "fractional", "order", &self.order)?)
            }
            MeasureTag::Dirac => {
                forbid(
                    s,
                    "dirac",
                    &[
                        ("order", self.order.is_some()),
                        ("mass", self.mass.is_some()),
                        ("width", self.width.is_some()),
                        ("scale", self.scale.is_some()),
                        ("decay", self.decay.is_some()),
                    ],
                )?;
                let rows = need(s, "dirac", "atoms", &self.atoms)?;
                let mut atoms = Vec::with_capacity(rows.len());
                for row in rows {
                    if row.len() != dim + 1 {
                        return Err(Error::Config(format!(
                            "[measure] atom row {row:?} must hold {dim} coordinates and a mass"
                        )));
                    }
                    atoms.push(Atom {
                        offset: row[..dim].to_vec(),
                        mass: row[dim],
                    });
                }
                LevyMeasure::dirac_sum(dim, atoms)
            }
            MeasureTag::Gaussian => {
                forbid(
                    s,
                    "gaussian",
                    &[
                        ("order", self.order.is_some()),
                        ("atoms", self.atoms.is_some()),
                        ("scale", self.scale.is_some()),
                        ("decay", self.decay.is_some()),
                    ],
                )?;
                let profile = RadialProfile::Gaussian {
                    mass: need(s, "gaussian", "mass", &self.mass)?,
                    width: need(s, "gaussian", "width", &self.width)?,
                };
                LevyMeasure::radial(dim, profile, true)
            }
            MeasureTag::Tempered => {
                forbid(
                    s,
                    "tempered",
                    &[
                        ("atoms", self.atoms.is_some()),
                        ("mass", self.mass.is_some()),
                        ("width", self.width.is_some()),
                    ],
                )?;
                let profile = RadialProfile::Tempered {
                    scale: need(s, "tempered", "scale", &self.scale)?,
                    order: need(s, "tempered", "order", &self.order)?,
                    decay: need(s, "tempered", "decay", &self.decay)?,
                };
                LevyMeasure::radial(dim, profile, true)
            }
        }
    }
}

impl LocalSection {
    pub fn matrix(&self, dim: usize) -> Result<DMatrix<f64>> {
        if let Some(col) = self.sigma.iter().find(|c| c.len() != dim) {
            return Err(Error::Config(format!("[local] column {col:?} must have {dim} entries")));
        }
        Ok(DMatrix::from_fn(dim, self.sigma.len(), |i, j| self.sigma[j][i]))
    }
}

impl NonlinearitySection {
    pub fn power(m: f64) -> Self {
        Self {
            kind: NonlinearityTag::Power,
            m: Some(m),
            c1: None,
            c2: None,
            latent: None,
            a: None,
            xs: None,
            ys: None,
            mollify: None,
        }
    }

    /// `φ` before mollification.
    pub fn base(&self) -> Result<Nonlinearity> {
        let s = "nonlinearity";
        let unused = |kind: &str, keep: &[&str]| {
            let all = [
                ("m", self.m.is_some()),
                ("c1", self.c1.is_some()),
                ("c2", self.c2.is_some()),
                ("latent", self.latent.is_some()),
                ("a", self.a.is_some()),
                ("xs", self.xs.is_some()),
                ("ys", self.ys.is_some()),
            ];
            let rest: Vec<(&str, bool)> = all.into_iter().filter(|(k, _)| !keep.contains(k)).collect();
            forbid(s, kind, &rest)
        };
        match self.kind {
            NonlinearityTag::Power => {
                unused("power", &["m"])?;
                Nonlinearity::power(need(s, "power", "m", &self.m)?)
            }
            NonlinearityTag::Stefan => {
                unused("stefan", &["c1", "c2", "latent"])?;
                Nonlinearity::stefan(
                    need(s, "stefan", "c1", &self.c1)?,
                    need(s, "stefan", "c2", &self.c2)?,
                    need(s, "stefan", "latent", &self.latent)?,
                )
            }
            NonlinearityTag::Linear => {
                unused("linear", &["a"])?;
                Nonlinearity::linear(need(s, "linear", "a", &self.a)?)
            }
            NonlinearityTag::Table => {
                unused("table", &["xs", "ys"])?;
                Nonlinearity::table(need(s, "table", "xs", &self.xs)?, need(s, "table", "ys", &self.ys)?)
            }
        }
    }

    /// `φ`, mollified over `[-range, range]` when `mollify` is set.
    pub fn build(&self, range: f64) -> Result<Nonlinearity> {
        let phi = self.base()?;
        match self.mollify {
            Some(eta) => phi.mollify(eta, range.max(eta)),
            None => Ok(phi),
        }
    }
}

impl InitialSection {
    pub fn build(&self, grid: &GridSection) -> Result<GridFunction> {
        let s = "initial";
        let dim = grid.dim;
        let center = self.center.clone().unwrap_or_else(|| vec![0.0; dim]);
        if center.len() != dim {
            return Err(Error::Config(format!("[initial] center must have {dim} entries")));
        }
        let all = [
            ("amplitude", self.amplitude.is_some()),
            ("width", self.width.is_some()),
            ("center", self.center.is_some()),
            ("m", self.m.is_some()),
            ("t0", self.t0.is_some()),
            ("value", self.value.is_some()),
            ("path", self.path.is_some()),
        ];
        let unused = |kind: &str, keep: &[&str]| {
            let rest: Vec<(&str, bool)> = all.iter().copied().filter(|(k, _)| !keep.contains(k)).collect();
            forbid(s, kind, &rest)
        };
        let sq = move |x: &[f64]| -> f64 { x.iter().zip(&center).map(|(a, c)| (a - c) * (a - c)).sum() };
        let make = |f: &dyn Fn(&[f64]) -> f64| GridFunction::centered(dim, grid.spacing, grid.points(), grid.boundary, f);
        match self.kind {
            InitialTag::Gaussian => {
                unused("gaussian", &["amplitude", "width", "center"])?;
                let amp = self.amplitude.unwrap_or(1.0);
                let width = self.width.unwrap_or(1.0);
                make(&|x| amp * (-sq(x) / (width * width)).exp())
            }
            InitialTag::Bump => {
                unused("bump", &["amplitude", "width", "center"])?;
                let amp = self.amplitude.unwrap_or(1.0);
                let width = self.width.unwrap_or(1.0);
                make(&|x| {
                    let r = (sq(x).sqrt() / width).min(1.0);
                    amp * std::f64::consts::E * bump(&[r])
                })
            }
            InitialTag::Barenblatt => {
                unused("barenblatt", &["m", "t0", "center"])?;
                if dim != 1 {
                    return Err(Error::Config("[initial] the Barenblatt profile is one-dimensional".into()));
                }
                let b = Barenblatt::new(need(s, "barenblatt", "m", &self.m)?)?;
                let t0 = need(s, "barenblatt", "t0", &self.t0)?;
                let values: Vec<f64> = {
                    let probe = make(&|_| 0.0)?;
                    (0..probe.len())
                        .map(|i| b.eval(t0, sq(&probe.point(i)).sqrt()))
                        .collect::<Result<_>>()?
                };
                make(&|_| 0.0)?.with_values(values)
            }
            InitialTag::Constant => {
                unused("constant", &["value"])?;
                let v = need(s, "constant", "value", &self.value)?;
                make(&|_| v)
            }
            InitialTag::Csv => {
                unused("csv", &["path"])?;
                let path = need(s, "csv", "path", &self.path)?;
                let u = GridFunction::read_csv(std::fs::File::open(&path)?, grid.boundary)?;
                if u.dim() != dim || (u.spacing() - grid.spacing).abs() > 1e-9 * grid.spacing {
                    return Err(Error::Config(format!(
                        "[initial] {} does not match [grid] (dim {dim}, spacing {})",
                        path.display(),
                        grid.spacing
                    )));
                }
                GridFunction::new(grid.spacing, u.lo().to_vec(), u.shape().to_vec(), u.into_values(), grid.boundary)
            }
        }
    }
}

impl ExperimentConfig {
    /// Parses TOML; syntax errors carry line and column.
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        Self::from_toml_str(&text).map_err(|e| match e {
            Error::Config(msg) => Error::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    /// Runs every constructor the sections feed, without assembling stencils.
    pub fn validate(&self) -> Result<()> {
        if self.grid.dim == 0 {
            return Err(Error::Config("[grid] dim must be at least 1".into()));
        }
        if !(self.grid.spacing > 0.0 && self.grid.spacing.is_finite()) {
            return Err(Error::Config(format!("[grid] spacing {} must be positive", self.grid.spacing)));
        }
        if self.grid.points() < 2 {
            return Err(Error::Config("[grid] points must be at least 2".into()));
        }
        if !(self.truncation.r_cut > 0.0 && self.truncation.r_cut.is_finite()) {
            return Err(Error::Config(format!("[truncation] r_cut {} must be positive", self.truncation.r_cut)));
        }
        if let Some(m) = &self.measure {
            m.build(self.grid.dim)?;
        }
        if let Some(l) = &self.local {
            l.matrix(self.grid.dim)?;
        }
        self.nonlinearity.base()?;
        if let Some(eta) = self.nonlinearity.mollify {
            if !(eta > 0.0 && eta.is_finite()) {
                return Err(Error::Config(format!("[nonlinearity] mollify {eta} must be positive")));
            }
        }
        if self.initial.kind != InitialTag::Csv {
            self.initial.build(&self.grid)?;
        }
        self.evolution()?;
        if !(self.resolvent.epsilon > 0.0) || !(self.resolvent.tol > 0.0) {
            return Err(Error::Config("[resolvent] epsilon and tol must be positive".into()));
        }
        Ok(())
    }

    pub fn time_step(&self) -> Result<TimeStep> {
        match (self.time.cfl, self.time.dt) {
            (Some(_), Some(_)) => Err(Error::Config("[time] set either `cfl` or `dt`, not both".into())),
            (None, Some(dt)) => Ok(TimeStep::Fixed(dt)),
            (cfl, None) => Ok(TimeStep::Cfl(cfl.unwrap_or(0.9))),
        }
    }

    pub fn evolution(&self) -> Result<EvolutionConfig> {
        Ok(EvolutionConfig::new(
            self.time_step()?,
            self.time.t_final,
            self.grid.boundary,
            self.truncation.tail_policy,
        )?
        .with_snapshots(self.time.snapshots.clone()))
    }

    pub fn measure(&self) -> Result<Option<LevyMeasure>> {
        self.measure.as_ref().map(|m| m.build(self.grid.dim)).transpose()
    }

    pub fn nonlocal_options(&self) -> NonlocalOptions {
        NonlocalOptions {
            cutoff: self.truncation.r_cut,
            tail_policy: self.truncation.tail_policy,
            origin_cell: self.truncation.origin_cell,
        }
    }

    /// `L_h^σ + L_h^μ` on the configured lattice.
    pub fn stencil(&self) -> Result<StencilWeights> {
        let h = self.grid.spacing;
        let mut total = StencilWeights::empty(self.grid.dim, h).with_tail_policy(self.truncation.tail_policy);
        if let Some(l) = &self.local {
            total = total.combine(&assemble_local(&l.matrix(self.grid.dim)?, h)?)?;
        }
        if let Some(m) = self.measure()? {
            total = total.combine(&assemble_nonlocal(&m, h, self.nonlocal_options())?)?;
        }
        Ok(total)
    }

    pub fn initial_data(&self) -> Result<GridFunction> {
        self.initial.build(&self.grid)
    }

    /// `φ` for data bounded by `max_abs`.
    pub fn nonlinearity(&self, max_abs: f64) -> Result<Nonlinearity> {
        self.nonlinearity.build(max_abs)
    }
}
