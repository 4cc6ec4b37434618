use std::collections::BTreeMap;

use nalgebra::{DMatrix, SymmetricEigen};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::stencil::{StencilWeights, TailPolicy};
use crate::error::{Error, Result};
use crate::levy_measure::LevyMeasure;
use crate::quadrature::Shell;

/// Eigenvalues of `σσᵀ` at or below this are treated as zero.
pub const RANK_THRESHOLD: f64 = 1e-12;

/// Stencil of `Σ_i (ψ(x + hσ_i) + ψ(x - hσ_i) - 2ψ(x)) / h²`.
///
/// `sigma` is `N × P`; its columns must have integer entries so the atoms
/// `±hσ_i` sit on the lattice.
pub fn assemble_local(sigma: &DMatrix<f64>, spacing: f64) -> Result<StencilWeights> {
    let dim = sigma.nrows();
    let mut table: BTreeMap<Vec<i64>, f64> = BTreeMap::new();
    let w = 1.0 / (spacing * spacing);
    for (i, col) in sigma.column_iter().enumerate() {
        let mut alpha = Vec::with_capacity(dim);
        for &x in col.iter() {
            if (x - x.round()).abs() > 1e-12 * x.abs().max(1.0) || !x.is_finite() {
                return Err(Error::NotGridCompatible(format!("column {i} has entry {x}")));
            }
            alpha.push(x.round() as i64);
        }
        if alpha.iter().all(|&a| a == 0) {
            continue;
        }
        let mirror: Vec<i64> = alpha.iter().map(|a| -a).collect();
        *table.entry(alpha).or_insert(0.0) += w;
        *table.entry(mirror).or_insert(0.0) += w;
    }
    StencilWeights::new(dim, spacing, table, 0.0, TailPolicy::Drop)
}

/// Coordinate change `y = A x` that turns `tr(σσᵀ D²)` into `tr(I₀ D²)`.
#[derive(Debug, Clone)]
pub struct GridTransform {
    /// `A = J Q` with `Q σσᵀ Qᵀ = diag(λ)` and `J = diag(λ^{-1/2} or 1)`.
    pub transform: DMatrix<f64>,
    /// `I₀`: identity on the first `rank` axes, zero elsewhere.
    pub normalized: DMatrix<f64>,
    pub rank: usize,
}

impl GridTransform {
    /// `ψ̃ = ψ ∘ A⁻¹` satisfies `tr(I₀ D²ψ̃)(Ax) = tr(σσᵀ D²ψ)(x)`.
    pub fn inverse(&self) -> DMatrix<f64> {
        self.transform.clone().try_inverse().expect("A is invertible by construction")
    }
}

/// Diagonalizes `σσᵀ`; positive-eigenvalue axes come first.
pub fn grid_normalize(sigma: &DMatrix<f64>) -> GridTransform {
    let dim = sigma.nrows();
    let s = sigma * sigma.transpose();
    let eig = SymmetricEigen::new(s);
    let mut order: Vec<usize> = (0..dim).collect();
    // Positive eigenvalues first, largest first; stable for ties.
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let rank = order.iter().filter(|&&i| eig.eigenvalues[i] > RANK_THRESHOLD).count();

    let mut transform = DMatrix::zeros(dim, dim);
    for (row, &i) in order.iter().enumerate() {
        let lambda = eig.eigenvalues[i];
        let scale = if lambda > RANK_THRESHOLD { 1.0 / lambda.sqrt() } else { 1.0 };
        let q = eig.eigenvectors.column(i);
        for c in 0..dim {
            transform[(row, c)] = scale * q[c];
        }
    }
    let mut normalized = DMatrix::zeros(dim, dim);
    for i in 0..rank {
        normalized[(i, i)] = 1.0;
    }
    GridTransform {
        transform,
        normalized,
        rank,
    }
}

/// What to do with the cell `R_h` around the origin, whose mass may be
/// infinite.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum OriginCell {
    /// Leave it out.
    #[default]
    Skip,
    /// Replace it by the second-difference stencil carrying its second
    /// moments: `w_{±e_i} += ∫_{R_h} z_i² dμ / (2h²)`. Needed when the
    /// measure concentrates near the origin (fractional order close to 2).
    SecondMoment,
}

/// Options for [`assemble_nonlocal`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NonlocalOptions {
    pub cutoff: f64,
    pub tail_policy: TailPolicy,
    pub origin_cell: OriginCell,
}

impl Default for NonlocalOptions {
    fn default() -> Self {
        Self {
            cutoff: 10.0,
            tail_policy: TailPolicy::Drop,
            origin_cell: OriginCell::Skip,
        }
    }
}

fn cell_bounds(alpha: &[i64], h: f64) -> (Vec<f64>, Vec<f64>) {
    let lo = alpha.iter().map(|&a| (a as f64 - 0.5) * h).collect();
    let hi = alpha.iter().map(|&a| (a as f64 + 0.5) * h).collect();
    (lo, hi)
}

fn norm(alpha: &[i64], h: f64) -> f64 {
    h * alpha.iter().map(|&a| (a * a) as f64).sum::<f64>().sqrt()
}

/// All `α ∈ [-k, k]^N` with a positive first nonzero component.
fn canonical_offsets(dim: usize, k: i64) -> Vec<Vec<i64>> {
    let mut out = Vec::new();
    let mut alpha = vec![-k; dim];
    loop {
        if let Some(first) = alpha.iter().find(|&&a| a != 0) {
            if *first > 0 {
                out.push(alpha.clone());
            }
        }
        let mut d = dim;
        loop {
            if d == 0 {
                return out;
            }
            d -= 1;
            if alpha[d] < k {
                alpha[d] += 1;
                break;
            }
            alpha[d] = -k;
        }
    }
}

/// Stencil `w_α = μ(hα + R_h)` for `0 < |hα| ≤ cutoff`, `R_h = (h/2)[-1,1)ᴺ`.
///
/// The tail mass is the exact remainder `μ(ℝᴺ \ (R_h ∪ ⋃ cells))`.
/// When the measure has atoms, `w_α` is the average of the masses of the
/// cells at `±hα`, which keeps the table symmetric even when atoms sit on
/// cell faces.
pub fn assemble_nonlocal(measure: &LevyMeasure, spacing: f64, options: NonlocalOptions) -> Result<StencilWeights> {
    let dim = measure.dim();
    let h = spacing;
    let cutoff = options.cutoff;
    if !(h > 0.0 && h.is_finite()) {
        return Err(Error::Domain(format!("spacing {h} must be positive")));
    }
    if !(cutoff >= h) {
        return Err(Error::Domain(format!("cutoff {cutoff} must be at least the spacing {h}")));
    }
    measure.levy_functional()?;

    let k = (cutoff / h).floor() as i64;
    let kept: Vec<Vec<i64>> = canonical_offsets(dim, k)
        .into_iter()
        .filter(|a| norm(a, h) <= cutoff)
        .collect();
    let atoms = measure.has_atoms();
    let masses: Vec<f64> = kept
        .par_iter()
        .map(|alpha| {
            let (lo, hi) = cell_bounds(alpha, h);
            let m = measure.cell_mass(&lo, &hi)?;
            if atoms {
                let mirror: Vec<i64> = alpha.iter().map(|a| -a).collect();
                let (lo, hi) = cell_bounds(&mirror, h);
                Ok(0.5 * (m + measure.cell_mass(&lo, &hi)?))
            } else {
                Ok(m)
            }
        })
        .collect::<Result<_>>()?;

    let mut table = BTreeMap::new();
    for (alpha, &m) in kept.iter().zip(&masses) {
        let mirror: Vec<i64> = alpha.iter().map(|a| -a).collect();
        table.insert(alpha.clone(), m);
        table.insert(mirror, m);
    }
    let kept_mass = 2.0 * masses.iter().sum::<f64>();

    let tail_mass = if atoms {
        let origin = vec![0i64; dim];
        let (lo, hi) = cell_bounds(&origin, h);
        let total = measure.mass_outside(0.0)?;
        (total - measure.cell_mass(&lo, &hi)? - kept_mass).max(0.0)
    } else {
        // Kept cells lie inside the ball of radius `outer`; add the parts of
        // the remaining cells inside that ball to the mass beyond it.
        let outer = cutoff + 0.5 * h * (dim as f64).sqrt();
        let k_outer = (outer / h).ceil() as i64 + 1;
        let fringe: Vec<Vec<i64>> = canonical_offsets(dim, k_outer)
            .into_iter()
            .filter(|a| norm(a, h) > cutoff && norm(a, h) - 0.5 * h * (dim as f64).sqrt() < outer)
            .collect();
        let fringe_mass: f64 = fringe
            .par_iter()
            .map(|alpha| {
                let (lo, hi) = cell_bounds(alpha, h);
                measure.box_shell_mass(&lo, &hi, Shell { r_in: 0.0, r_out: outer })
            })
            .collect::<Result<Vec<f64>>>()?
            .iter()
            .sum();
        measure.mass_outside(outer)? + 2.0 * fringe_mass
    };

    if options.origin_cell == OriginCell::SecondMoment {
        let origin = vec![0i64; dim];
        let (lo, hi) = cell_bounds(&origin, h);
        for axis in 0..dim {
            let moment = measure.second_moment_in_box(&lo, &hi, axis)?;
            let mut e = vec![0i64; dim];
            e[axis] = 1;
            let mirror: Vec<i64> = e.iter().map(|a| -a).collect();
            let w = moment / (2.0 * h * h);
            *table.entry(e).or_insert(0.0) += w;
            *table.entry(mirror).or_insert(0.0) += w;
        }
    }

    StencilWeights::new(dim, h, table, tail_mass, options.tail_policy)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::levy_measure::{fractional_constant, Atom};
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    #[test]
    fn identity_sigma_is_standard_laplacian() {
        let st = assemble_local(&DMatrix::identity(2, 2), 0.1).unwrap();
        assert_eq!(st.len(), 4);
        for alpha in [[1, 0], [-1, 0], [0, 1], [0, -1]] {
            assert_relative_eq!(st.weight(&alpha), 100.0, max_relative = 1e-14);
        }
        assert_eq!(st.tail_mass(), 0.0);
    }

    #[test]
    fn zero_sigma_is_empty() {
        let st = assemble_local(&DMatrix::zeros(1, 2), 0.1).unwrap();
        assert!(st.is_empty());
    }

    #[test]
    fn double_step_and_accumulation() {
        let st = assemble_local(&DMatrix::from_row_slice(1, 1, &[2.0]), 0.5).unwrap();
        assert_eq!(st.weight(&[2]), 4.0);
        assert_eq!(st.weight(&[-2]), 4.0);
        assert_eq!(st.weight(&[1]), 0.0);
        let twice = assemble_local(&DMatrix::from_row_slice(1, 2, &[1.0, -1.0]), 1.0).unwrap();
        assert_eq!(twice.weight(&[1]), 2.0);
    }

    #[test]
    fn non_integer_sigma_rejected() {
        let err = assemble_local(&DMatrix::from_row_slice(1, 1, &[0.5]), 0.1);
        assert!(matches!(err, Err(Error::NotGridCompatible(_))));
    }

    #[test]
    fn normalize_identity() {
        let t = grid_normalize(&DMatrix::identity(3, 3));
        assert_eq!(t.rank, 3);
        assert!((t.transform.abs() - DMatrix::<f64>::identity(3, 3)).amax() < 1e-12);
        assert_eq!(t.normalized, DMatrix::identity(3, 3));
    }

    #[test]
    fn normalize_degenerate_diagonal() {
        // σσᵀ = diag(4, 0): the first axis is scaled by 1/2.
        let sigma = DMatrix::from_row_slice(2, 1, &[2.0, 0.0]);
        let t = grid_normalize(&sigma);
        assert_eq!(t.rank, 1);
        assert_relative_eq!(t.transform[(0, 0)].abs(), 0.5, max_relative = 1e-14);
        assert_relative_eq!(t.transform[(1, 1)].abs(), 1.0, max_relative = 1e-14);
        assert!(t.transform[(0, 1)].abs() < 1e-14 && t.transform[(1, 0)].abs() < 1e-14);
        let mut i0 = DMatrix::zeros(2, 2);
        i0[(0, 0)] = 1.0;
        assert_eq!(t.normalized, i0);
    }

    #[test]
    fn normalize_zero_matrix() {
        let t = grid_normalize(&DMatrix::zeros(2, 3));
        assert_eq!(t.rank, 0);
        assert_eq!(t.normalized, DMatrix::zeros(2, 2));
    }

    #[test]
    fn dirac_stencil() {
        let tau = 2.0 * PI;
        let mu = LevyMeasure::dirac_sum(1, vec![Atom::new(vec![tau], 1.0), Atom::new(vec![-tau], 1.0)]).unwrap();
        let st = assemble_nonlocal(&mu, 1.0, NonlocalOptions::default()).unwrap();
        assert_eq!(st.len(), 2);
        assert_eq!(st.weight(&[6]), 1.0);
        assert_eq!(st.weight(&[-6]), 1.0);
        assert_eq!(st.tail_mass(), 0.0);
    }

    #[test]
    fn face_atoms_are_split_symmetrically() {
        let mu = LevyMeasure::dirac_sum(1, vec![Atom::new(vec![0.5], 1.0), Atom::new(vec![-0.5], 1.0)]).unwrap();
        let st = assemble_nonlocal(&mu, 1.0, NonlocalOptions::default()).unwrap();
        assert_eq!(st.weight(&[1]), 0.5);
        assert_eq!(st.weight(&[-1]), 0.5);
    }

    #[test]
    fn fractional_first_weight() {
        let mu = LevyMeasure::fractional(1, 0.5).unwrap();
        let st = assemble_nonlocal(&mu, 0.5, NonlocalOptions::default()).unwrap();
        let c = fractional_constant(1, 0.5).unwrap();
        let expected = c * 2.0 * (1.0 / 0.25f64.sqrt() - 1.0 / 0.75f64.sqrt());
        assert_relative_eq!(st.weight(&[1]), expected, max_relative = 1e-10);
    }

    #[test]
    fn partition_additivity_1d() {
        // Kept weights plus tail equal μ(|z| > h/2) in 1D.
        let mu = LevyMeasure::fractional(1, 1.3).unwrap();
        let h = 0.1;
        let st = assemble_nonlocal(&mu, h, NonlocalOptions { cutoff: 2.0, ..Default::default() }).unwrap();
        let outside = mu.mass_outside(h / 2.0).unwrap();
        assert!(st.total_weight() <= outside);
        assert_relative_eq!(st.total_weight() + st.tail_mass(), outside, max_relative = 1e-9);
    }

    #[test]
    fn partition_additivity_2d() {
        let mu = LevyMeasure::fractional(2, 0.8).unwrap();
        let h = 0.25;
        let st = assemble_nonlocal(&mu, h, NonlocalOptions { cutoff: 1.6, ..Default::default() }).unwrap();
        // μ(ℝ² \ R_h) = μ(|z| > h/2) - μ(R_h ∩ {|z| > h/2}).
        let corners = mu
            .box_shell_mass(&[-h / 2.0, -h / 2.0], &[h / 2.0, h / 2.0], Shell::outside(h / 2.0))
            .unwrap();
        let complement = mu.mass_outside(h / 2.0).unwrap() - corners;
        assert!(st.total_weight() <= mu.mass_outside(h / 2.0).unwrap());
        assert_relative_eq!(st.total_weight() + st.tail_mass(), complement, max_relative = 1e-8);
    }

    #[test]
    fn second_moment_origin_cell_adds_nearest_neighbors() {
        let mu = LevyMeasure::fractional(1, 1.5).unwrap();
        let h = 0.1;
        let skip = assemble_nonlocal(&mu, h, NonlocalOptions { cutoff: 1.0, ..Default::default() }).unwrap();
        let with = assemble_nonlocal(
            &mu,
            h,
            NonlocalOptions {
                cutoff: 1.0,
                origin_cell: OriginCell::SecondMoment,
                ..Default::default()
            },
        )
        .unwrap();
        let c = fractional_constant(1, 1.5).unwrap();
        let moment = 2.0 * c * (h / 2.0f64).powf(0.5) / 0.5;
        assert_relative_eq!(with.weight(&[1]) - skip.weight(&[1]), moment / (2.0 * h * h), max_relative = 1e-9);
        assert_eq!(with.weight(&[2]), skip.weight(&[2]));
    }
}
