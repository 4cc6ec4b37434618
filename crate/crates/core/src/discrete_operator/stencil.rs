use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::grid::{Boundary, GridFunction};
use crate::error::{Error, Result};

/// Treatment of the measure beyond the truncation radius.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum TailPolicy {
    /// Ignore the mass beyond the truncation radius.
    #[default]
    Drop,
    /// Lump it into a diagonal term `-tail_mass · u_i`, i.e. jumps that
    /// leave the stencil are assumed to land where `u = 0`.
    Absorb,
}

/// The discrete measure `ν_h = Σ_α w_α δ_{hα}` of a lattice operator.
///
/// Invariants, checked at construction: `w_α = w_{-α}` exactly, `w_α ≥ 0`,
/// `α ≠ 0`, and finite total weight.
#[derive(Debug, Clone, PartialEq)]
pub struct StencilWeights {
    spacing: f64,
    dim: usize,
    offsets: Vec<i64>,
    weights: Vec<f64>,
    tail_mass: f64,
    tail_policy: TailPolicy,
}

impl StencilWeights {
    pub fn new(
        dim: usize,
        spacing: f64,
        table: BTreeMap<Vec<i64>, f64>,
        tail_mass: f64,
        tail_policy: TailPolicy,
    ) -> Result<Self> {
        if !(spacing > 0.0 && spacing.is_finite()) {
            return Err(Error::Domain(format!("spacing {spacing} must be positive")));
        }
        if !(tail_mass >= 0.0 && tail_mass.is_finite()) {
            return Err(Error::Domain(format!("tail mass {tail_mass} must be finite and nonnegative")));
        }
        let mut offsets = Vec::with_capacity(table.len() * dim);
        let mut weights = Vec::with_capacity(table.len());
        for (alpha, &w) in &table {
            if alpha.len() != dim {
                return Err(Error::Mismatch(format!("offset {alpha:?} is not in dimension {dim}")));
            }
            if alpha.iter().all(|&a| a == 0) {
                return Err(Error::Domain("the stencil cannot weight the zero offset".into()));
            }
            if !(w >= 0.0 && w.is_finite()) {
                return Err(Error::Domain(format!("weight {w} at {alpha:?} must be finite and nonnegative")));
            }
            let mirror: Vec<i64> = alpha.iter().map(|a| -a).collect();
            if table.get(&mirror) != Some(&w) {
                return Err(Error::Domain(format!("weight at {alpha:?} has no equal mirror")));
            }
            if w > 0.0 {
                offsets.extend_from_slice(alpha);
                weights.push(w);
            }
        }
        Ok(Self {
            spacing,
            dim,
            offsets,
            weights,
            tail_mass,
            tail_policy,
        })
    }

    /// The zero operator.
    pub fn empty(dim: usize, spacing: f64) -> Self {
        Self {
            spacing,
            dim,
            offsets: Vec::new(),
            weights: Vec::new(),
            tail_mass: 0.0,
            tail_policy: TailPolicy::Drop,
        }
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn tail_mass(&self) -> f64 {
        self.tail_mass
    }

    pub fn tail_policy(&self) -> TailPolicy {
        self.tail_policy
    }

    pub fn with_tail_policy(mut self, policy: TailPolicy) -> Self {
        self.tail_policy = policy;
        self
    }

    /// `(α, w_α)` pairs in lexicographic order of `α`.
    pub fn iter(&self) -> impl Iterator<Item = (&[i64], f64)> + '_ {
        self.offsets.chunks_exact(self.dim.max(1)).zip(self.weights.iter().copied())
    }

    pub fn weight(&self, alpha: &[i64]) -> f64 {
        self.iter().find(|(a, _)| *a == alpha).map(|(_, w)| w).unwrap_or(0.0)
    }

    /// `Σ_α w_α`.
    pub fn total_weight(&self) -> f64 {
        self.weights.iter().sum()
    }

    /// `Σ_α w_α`, plus the tail mass when it is absorbed. This is the
    /// diagonal magnitude of the operator.
    pub fn effective_weight(&self) -> f64 {
        self.total_weight() + self.absorbed_tail()
    }

    fn absorbed_tail(&self) -> f64 {
        match self.tail_policy {
            TailPolicy::Absorb => self.tail_mass,
            TailPolicy::Drop => 0.0,
        }
    }

    pub(crate) fn table(&self) -> BTreeMap<Vec<i64>, f64> {
        self.iter().map(|(a, w)| (a.to_vec(), w)).collect()
    }

    /// Stencil of the sum of the two operators.
    pub fn combine(&self, other: &StencilWeights) -> Result<StencilWeights> {
        if self.dim != other.dim || self.spacing != other.spacing {
            return Err(Error::Mismatch(format!(
                "cannot add stencils with (dim, h) = ({}, {}) and ({}, {})",
                self.dim, self.spacing, other.dim, other.spacing
            )));
        }
        let policy = match (self.tail_mass > 0.0, other.tail_mass > 0.0) {
            (true, true) if self.tail_policy != other.tail_policy => {
                return Err(Error::Mismatch("stencils disagree on the tail policy".into()))
            }
            (false, true) => other.tail_policy,
            _ => self.tail_policy,
        };
        let mut table = self.table();
        for (a, w) in other.iter() {
            *table.entry(a.to_vec()).or_insert(0.0) += w;
        }
        StencilWeights::new(self.dim, self.spacing, table, self.tail_mass + other.tail_mass, policy)
    }

    /// `(L_h u)_i = Σ_α w_α (u_{i+α} - u_i) - [absorb] tail_mass · u_i`.
    ///
    /// Neighbors outside the box wrap (periodic) or read as zero.
    pub fn apply(&self, u: &GridFunction) -> Result<GridFunction> {
        if u.dim() != self.dim || u.spacing() != self.spacing {
            return Err(Error::Mismatch(format!(
                "stencil (dim {}, h {}) applied to grid (dim {}, h {})",
                self.dim,
                self.spacing,
                u.dim(),
                u.spacing()
            )));
        }
        let mut out = vec![0.0; u.len()];
        self.apply_into(u, &mut out);
        Ok(u.with_values_unchecked(out))
    }

    /// Same as [`StencilWeights::apply`] on raw values laid out like `u`.
    pub(crate) fn apply_into(&self, u: &GridFunction, out: &mut [f64]) {
        let shape = u.shape();
        let dim = shape.len();
        let values = u.values();
        let periodic = u.boundary() == Boundary::Periodic;
        let absorbed = self.absorbed_tail();
        let strides: Vec<usize> = (0..dim).map(|d| shape[d + 1..].iter().product()).collect();

        out.par_chunks_mut(256).enumerate().for_each(|(chunk, slot)| {
            let mut idx = vec![0usize; dim];
            for (k, o) in slot.iter_mut().enumerate() {
                let flat = chunk * 256 + k;
                let mut rest = flat;
                for d in (0..dim).rev() {
                    idx[d] = rest % shape[d];
                    rest /= shape[d];
                }
                let center = values[flat];
                let mut acc = 0.0;
                'entries: for (alpha, w) in self.iter() {
                    let mut j = 0usize;
                    for d in 0..dim {
                        let target = idx[d] as i64 + alpha[d];
                        let n = shape[d] as i64;
                        let t = if periodic {
                            target.rem_euclid(n)
                        } else if target < 0 || target >= n {
                            acc -= w * center;
                            continue 'entries;
                        } else {
                            target
                        };
                        j += t as usize * strides[d];
                    }
                    acc += w * (values[j] - center);
                }
                *o = acc - absorbed * center;
            }
        });
    }
}
