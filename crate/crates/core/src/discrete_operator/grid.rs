use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// How lattice values outside the index box are read.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Boundary {
    /// Indices wrap around the box.
    Periodic,
    /// Values outside the box are zero.
    #[serde(alias = "zero")]
    ZeroExtension,
}

/// Values of a function on the lattice patch `h · (lo + [0, shape))`.
///
/// Storage is row-major: the last axis varies fastest.
#[derive(Debug, Clone, PartialEq)]
pub struct GridFunction {
    spacing: f64,
    lo: Vec<i64>,
    shape: Vec<usize>,
    values: Vec<f64>,
    boundary: Boundary,
}

impl GridFunction {
    pub fn new(spacing: f64, lo: Vec<i64>, shape: Vec<usize>, values: Vec<f64>, boundary: Boundary) -> Result<Self> {
        if !(spacing > 0.0 && spacing.is_finite()) {
            return Err(Error::Domain(format!("grid spacing {spacing} must be positive")));
        }
        if lo.len() != shape.len() || shape.is_empty() {
            return Err(Error::Mismatch(format!(
                "index origin has {} axes, shape has {}",
                lo.len(),
                shape.len()
            )));
        }
        let volume: usize = shape.iter().product();
        if volume == 0 || volume != values.len() {
            return Err(Error::Mismatch(format!(
                "{} values for a box of {volume} points",
                values.len()
            )));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::Domain(format!("non-finite value at point {i}")));
        }
        Ok(Self {
            spacing,
            lo,
            shape,
            values,
            boundary,
        })
    }

    /// Samples `f` at every lattice point.
    pub fn from_fn<F: Fn(&[f64]) -> f64>(
        spacing: f64,
        lo: Vec<i64>,
        shape: Vec<usize>,
        boundary: Boundary,
        f: F,
    ) -> Result<Self> {
        let volume: usize = shape.iter().product();
        let mut x = vec![0.0; shape.len()];
        let mut values = Vec::with_capacity(volume);
        for flat in 0..volume {
            point_of(spacing, &lo, &shape, flat, &mut x);
            values.push(f(&x));
        }
        Self::new(spacing, lo, shape, values, boundary)
    }

    /// Centered box of `points` per axis, index origin `-points/2`.
    pub fn centered<F: Fn(&[f64]) -> f64>(
        dim: usize,
        spacing: f64,
        points: usize,
        boundary: Boundary,
        f: F,
    ) -> Result<Self> {
        let lo = vec![-((points / 2) as i64); dim];
        Self::from_fn(spacing, lo, vec![points; dim], boundary, f)
    }

    /// Same lattice and boundary with new values.
    pub fn with_values(&self, values: Vec<f64>) -> Result<Self> {
        Self::new(self.spacing, self.lo.clone(), self.shape.clone(), values, self.boundary)
    }

    pub(crate) fn with_values_unchecked(&self, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), self.values.len());
        Self {
            spacing: self.spacing,
            lo: self.lo.clone(),
            shape: self.shape.clone(),
            values,
            boundary: self.boundary,
        }
    }

    pub fn map<F: Fn(f64) -> f64>(&self, f: F) -> Self {
        self.with_values_unchecked(self.values.iter().map(|&v| f(v)).collect())
    }

    pub fn dim(&self) -> usize {
        self.shape.len()
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    pub fn lo(&self) -> &[i64] {
        &self.lo
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn boundary(&self) -> Boundary {
        self.boundary
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// `h^N`, the volume of one lattice cell.
    pub fn cell_volume(&self) -> f64 {
        self.spacing.powi(self.dim() as i32)
    }

    /// Physical coordinates of the point with flat index `flat`.
    pub fn point(&self, flat: usize) -> Vec<f64> {
        let mut x = vec![0.0; self.dim()];
        point_of(self.spacing, &self.lo, &self.shape, flat, &mut x);
        x
    }

    /// Lattice index (absolute, not box-relative) of the point `flat`.
    pub fn lattice_index(&self, flat: usize) -> Vec<i64> {
        let mut rest = flat;
        let mut idx = vec![0; self.dim()];
        for d in (0..self.dim()).rev() {
            idx[d] = self.lo[d] + (rest % self.shape[d]) as i64;
            rest /= self.shape[d];
        }
        idx
    }

    /// Flat index of an absolute lattice index, if it lies in the box.
    pub fn flat_index(&self, idx: &[i64]) -> Option<usize> {
        let mut flat = 0usize;
        for d in 0..self.dim() {
            let k = idx[d] - self.lo[d];
            if k < 0 || k as usize >= self.shape[d] {
                return None;
            }
            flat = flat * self.shape[d] + k as usize;
        }
        Some(flat)
    }

    /// `h^N Σ u`.
    pub fn mass(&self) -> f64 {
        self.cell_volume() * compensated_sum(self.values.iter().copied())
    }

    /// `h^N Σ |u|`.
    pub fn l1(&self) -> f64 {
        self.cell_volume() * compensated_sum(self.values.iter().map(|v| v.abs()))
    }

    pub fn linf(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// `h^N Σ u·v`.
    pub fn inner(&self, other: &GridFunction) -> Result<f64> {
        self.check_same_lattice(other)?;
        Ok(self.cell_volume() * self.values.iter().zip(&other.values).map(|(a, b)| a * b).sum::<f64>())
    }

    /// `h^N Σ (u - v)⁺`.
    pub fn positive_part_gap(&self, other: &GridFunction) -> Result<f64> {
        self.check_same_lattice(other)?;
        Ok(self.cell_volume()
            * self
                .values
                .iter()
                .zip(&other.values)
                .map(|(a, b)| (a - b).max(0.0))
                .sum::<f64>())
    }

    /// `h^N Σ |u - v|`.
    pub fn l1_distance(&self, other: &GridFunction) -> Result<f64> {
        self.check_same_lattice(other)?;
        Ok(self.cell_volume() * self.values.iter().zip(&other.values).map(|(a, b)| (a - b).abs()).sum::<f64>())
    }

    pub fn same_lattice(&self, other: &GridFunction) -> bool {
        self.spacing == other.spacing && self.lo == other.lo && self.shape == other.shape
    }

    pub(crate) fn check_same_lattice(&self, other: &GridFunction) -> Result<()> {
        if self.same_lattice(other) {
            Ok(())
        } else {
            Err(Error::Mismatch("grid functions live on different lattices".into()))
        }
    }

    /// Writes the snapshot CSV: header `x1,...,xN,u`, one row per point in
    /// storage order, 17 significant digits.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        let mut header: Vec<String> = (1..=self.dim()).map(|d| format!("x{d}")).collect();
        header.push("u".into());
        w.write_record(&header)?;
        let mut x = vec![0.0; self.dim()];
        let mut row = Vec::with_capacity(self.dim() + 1);
        for (flat, v) in self.values.iter().enumerate() {
            point_of(self.spacing, &self.lo, &self.shape, flat, &mut x);
            row.clear();
            row.extend(x.iter().map(|c| format_17(*c)));
            row.push(format_17(*v));
            w.write_record(&row)?;
        }
        w.flush()?;
        Ok(())
    }

    /// Reads a snapshot CSV written by [`GridFunction::write_csv`]. The
    /// spacing and index box are recovered from the coordinates.
    pub fn read_csv<R: Read>(reader: R, boundary: Boundary) -> Result<Self> {
        let mut r = csv::Reader::from_reader(reader);
        let headers = r.headers()?.clone();
        let dim = headers.len().saturating_sub(1);
        let expected: Vec<String> = (1..=dim).map(|d| format!("x{d}")).chain(["u".to_string()]).collect();
        if dim == 0 || headers.iter().ne(expected.iter().map(String::as_str)) {
            return Err(Error::Io(format!("unexpected snapshot header {headers:?}")));
        }
        let mut coords: Vec<Vec<f64>> = vec![Vec::new(); dim];
        let mut values = Vec::new();
        for (line, rec) in r.records().enumerate() {
            let rec = rec?;
            let parse = |s: &str| {
                s.trim()
                    .parse::<f64>()
                    .map_err(|e| Error::Io(format!("row {}: {e}", line + 2)))
            };
            for d in 0..dim {
                coords[d].push(parse(&rec[d])?);
            }
            values.push(parse(&rec[dim])?);
        }
        if values.is_empty() {
            return Err(Error::Io("snapshot has no rows".into()));
        }
        let mut axis_values = Vec::with_capacity(dim);
        for c in &coords {
            let mut u = c.clone();
            u.sort_by(f64::total_cmp);
            u.dedup();
            axis_values.push(u);
        }
        // Spacing: the range of the longest axis over its number of gaps.
        let longest = axis_values.iter().max_by_key(|u| u.len()).expect("dim >= 1");
        if longest.len() < 2 {
            return Err(Error::Io("cannot infer spacing from a single point; store at least two".into()));
        }
        let estimate = (longest[longest.len() - 1] - longest[0]) / (longest.len() - 1) as f64;
        let shape: Vec<usize> = axis_values.iter().map(|u| u.len()).collect();
        let lo_for = |h: f64| -> Vec<i64> { axis_values.iter().map(|u| (u[0] / h).round() as i64).collect() };
        // The shortest decimal form of the estimate that reproduces every
        // stored coordinate exactly, else the estimate itself.
        let exact = |h: f64| {
            let lo = lo_for(h);
            axis_values
                .iter()
                .zip(&lo)
                .all(|(u, &l)| u.iter().enumerate().all(|(k, &x)| h * (l + k as i64) as f64 == x))
        };
        let spacing = (1..=17)
            .filter_map(|digits| format!("{estimate:.*e}", digits - 1).parse::<f64>().ok())
            .find(|&h| exact(h))
            .unwrap_or(estimate);
        let grid = Self::new(spacing, lo_for(spacing), shape, values, boundary)?;
        // Rows must be in storage order.
        for (flat, _) in grid.values.iter().enumerate() {
            let x = grid.point(flat);
            for d in 0..dim {
                if (x[d] - coords[d][flat]).abs() > 1e-9 * spacing {
                    return Err(Error::Io(format!("row {} is out of lattice order", flat + 2)));
                }
            }
        }
        Ok(grid)
    }
}

fn point_of(spacing: f64, lo: &[i64], shape: &[usize], flat: usize, out: &mut [f64]) {
    let mut rest = flat;
    for d in (0..shape.len()).rev() {
        out[d] = spacing * (lo[d] + (rest % shape[d]) as i64) as f64;
        rest /= shape[d];
    }
}

/// Neumaier summation; mass drift checks compare sums to a few ulps.
pub(crate) fn compensated_sum<I: IntoIterator<Item = f64>>(items: I) -> f64 {
    let mut sum = 0.0f64;
    let mut carry = 0.0f64;
    for x in items {
        let t = sum + x;
        if sum.abs() >= x.abs() {
            carry += (sum - t) + x;
        } else {
            carry += (x - t) + sum;
        }
        sum = t;
    }
    sum + carry
}

/// Scientific notation with 17 significant digits.
pub(crate) fn format_17(x: f64) -> String {
    format!("{x:.16e}")
}
