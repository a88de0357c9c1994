//! Truncated-domain grids, cumulative fields and discrete Stieltjes sums.
//!
//! A [`GridN`] partitions a box `[x_min, x_max]^n` into rectangular cells.
//! Functions on the domain are stored as [`CellField`]s (one midpoint sample
//! per cell) and all integrals use the midpoint rule: sample times cell
//! volume. Cumulative integrals live on the nodes:
//!
//! * [`prefix_cumulate`] gives `I_n f` at every node, the sum over all cells
//!   strictly below the node;
//! * [`suffix_cumulate`] gives `I_n^* f`, the sum over all cells at or above.
//!
//! Evaluating the prefix table at the upper corner of a cell and the suffix
//! table at the lower corner of a cell yields a pair of operators that are
//! exact adjoints in the quadrature inner product. Every functional and the
//! norm estimator build on that pair.

use std::ops::Range;
use std::sync::Arc;

use ndarray::{Array2, ArrayD, ArrayView2, ArrayViewD, Axis, Dimension, IxDyn, Slice, Zip};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::CompensatedSum;

pub const MAX_DIM: usize = 4;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Spacing {
    Log,
    Linear,
    Custom,
}

/// Rectangular partition of a box in `R_+^n`, `n` in `1..=4`.
#[derive(Clone, Debug, PartialEq)]
pub struct GridN {
    axes: Vec<Vec<f64>>,
    spacing: Spacing,
}

impl GridN {
    pub fn new(axes: Vec<Vec<f64>>, spacing: Spacing) -> Result<Self> {
        if axes.is_empty() || axes.len() > MAX_DIM {
            return Err(Error::InvalidGrid(format!(
                "dimension {} outside 1..={MAX_DIM}",
                axes.len()
            )));
        }
        for (d, axis) in axes.iter().enumerate() {
            if axis.len() < 2 {
                return Err(Error::InvalidGrid(format!("axis {d} has fewer than 2 nodes")));
            }
            if axis.iter().any(|x| !x.is_finite()) {
                return Err(Error::InvalidGrid(format!("axis {d} has a non-finite node")));
            }
            if axis[0] < 0.0 {
                return Err(Error::InvalidGrid(format!("axis {d} starts below 0")));
            }
            if axis.windows(2).any(|w| w[1] <= w[0]) {
                return Err(Error::InvalidGrid(format!(
                    "axis {d} is not strictly increasing"
                )));
            }
        }
        Ok(Self { axes, spacing })
    }

    /// Logarithmically spaced nodes on `[x_min, x_max]` along every axis.
    pub fn log(dim: usize, x_min: f64, x_max: f64, nodes: usize) -> Result<Self> {
        if !(x_min > 0.0) || !(x_max > x_min) {
            return Err(Error::InvalidGrid(format!(
                "log grid needs 0 < x_min < x_max, got [{x_min}, {x_max}]"
            )));
        }
        let axis = log_axis(x_min, x_max, nodes)?;
        Self::new(vec![axis; dim], Spacing::Log)
    }

    /// Uniformly spaced nodes on `[x_min, x_max]` along every axis.
    pub fn linear(dim: usize, x_min: f64, x_max: f64, nodes: usize) -> Result<Self> {
        if !(x_min >= 0.0) || !(x_max > x_min) {
            return Err(Error::InvalidGrid(format!(
                "linear grid needs 0 <= x_min < x_max, got [{x_min}, {x_max}]"
            )));
        }
        if nodes < 2 {
            return Err(Error::InvalidGrid("need at least 2 nodes".into()));
        }
        let m = (nodes - 1) as f64;
        let axis: Vec<f64> = (0..nodes)
            .map(|k| {
                if k == nodes - 1 {
                    x_max
                } else {
                    x_min + (x_max - x_min) * k as f64 / m
                }
            })
            .collect();
        Self::new(vec![axis; dim], Spacing::Linear)
    }

    pub fn dim(&self) -> usize {
        self.axes.len()
    }

    pub fn spacing(&self) -> Spacing {
        self.spacing
    }

    pub fn axis(&self, d: usize) -> &[f64] {
        &self.axes[d]
    }

    pub fn axes(&self) -> &[Vec<f64>] {
        &self.axes
    }

    /// Number of cells along axis `d`.
    pub fn cells(&self, d: usize) -> usize {
        self.axes[d].len() - 1
    }

    pub fn cells_shape(&self) -> Vec<usize> {
        self.axes.iter().map(|a| a.len() - 1).collect()
    }

    pub fn nodes_shape(&self) -> Vec<usize> {
        self.axes.iter().map(Vec::len).collect()
    }

    pub fn n_cells(&self) -> usize {
        self.cells_shape().iter().product()
    }

    pub fn widths(&self, d: usize) -> Vec<f64> {
        self.axes[d].windows(2).map(|w| w[1] - w[0]).collect()
    }

    /// Cell midpoints along axis `d`. Log grids use the arithmetic midpoint
    /// as well, so the rule is the same on every spacing.
    pub fn midpoints(&self, d: usize) -> Vec<f64> {
        self.axes[d].windows(2).map(|w| 0.5 * (w[0] + w[1])).collect()
    }

    pub fn cell_volumes(&self) -> ArrayD<f64> {
        let widths: Vec<Vec<f64>> = (0..self.dim()).map(|d| self.widths(d)).collect();
        outer_product(&widths)
    }

    pub fn node(&self, index: &[usize]) -> Vec<f64> {
        index
            .iter()
            .enumerate()
            .map(|(d, &k)| self.axes[d][k])
            .collect()
    }

    pub fn midpoint(&self, cell: &[usize]) -> Vec<f64> {
        cell.iter()
            .enumerate()
            .map(|(d, &k)| 0.5 * (self.axes[d][k] + self.axes[d][k + 1]))
            .collect()
    }

    /// Grid made of the cells `ranges[d]` along each axis.
    pub fn sub_grid(&self, ranges: &[Range<usize>]) -> Result<Self> {
        if ranges.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: ranges.len(),
            });
        }
        let mut axes = Vec::with_capacity(self.dim());
        for (d, r) in ranges.iter().enumerate() {
            if r.start >= r.end || r.end > self.cells(d) {
                return Err(Error::InvalidGrid(format!(
                    "cell range {r:?} is empty or outside axis {d}"
                )));
            }
            axes.push(self.axes[d][r.start..=r.end].to_vec());
        }
        Self::new(axes, Spacing::Custom)
    }
}

fn log_axis(x_min: f64, x_max: f64, nodes: usize) -> Result<Vec<f64>> {
    if nodes < 2 {
        return Err(Error::InvalidGrid("need at least 2 nodes".into()));
    }
    let (a, b) = (x_min.ln(), x_max.ln());
    let m = (nodes - 1) as f64;
    Ok((0..nodes)
        .map(|k| match k {
            0 => x_min,
            k if k == nodes - 1 => x_max,
            k => (a + (b - a) * k as f64 / m).exp(),
        })
        .collect())
}

/// Tensor product of 1-d arrays as an n-d array.
pub fn outer_product(factors: &[Vec<f64>]) -> ArrayD<f64> {
    let shape: Vec<usize> = factors.iter().map(Vec::len).collect();
    ArrayD::from_shape_fn(IxDyn(&shape), |idx| {
        (0..factors.len()).map(|d| factors[d][idx[d]]).product()
    })
}

fn same_grid(a: &Arc<GridN>, b: &Arc<GridN>) -> bool {
    Arc::ptr_eq(a, b) || **a == **b
}

/// Midpoint samples of a function on the cells of a grid.
#[derive(Clone, Debug)]
pub struct CellField {
    grid: Arc<GridN>,
    values: ArrayD<f64>,
    nonnegative: bool,
}

impl CellField {
    /// Wraps `values`, rejecting non-finite entries with their cell index.
    pub fn new(grid: Arc<GridN>, values: ArrayD<f64>) -> Result<Self> {
        if values.shape() != grid.cells_shape().as_slice() {
            return Err(Error::GridMismatch);
        }
        if let Some((idx, _)) = values.indexed_iter().find(|(_, v)| !v.is_finite()) {
            return Err(Error::NonFinite {
                index: idx.slice().to_vec(),
            });
        }
        let nonnegative = values.iter().all(|&v| v >= 0.0);
        Ok(Self {
            grid,
            values,
            nonnegative,
        })
    }

    /// Like [`CellField::new`] but also requires every entry to be `>= 0`.
    pub fn nonnegative(grid: Arc<GridN>, values: ArrayD<f64>) -> Result<Self> {
        let field = Self::new(grid, values)?;
        if !field.nonnegative {
            return Err(Error::InvalidWeight("negative sample in a nonnegative field".into()));
        }
        Ok(field)
    }

    pub fn constant(grid: Arc<GridN>, c: f64) -> Result<Self> {
        let values = ArrayD::from_elem(IxDyn(&grid.cells_shape()), c);
        Self::new(grid, values)
    }

    /// Samples `f` at every cell midpoint.
    pub fn from_fn(grid: Arc<GridN>, f: impl Fn(&[f64]) -> f64) -> Result<Self> {
        let mids: Vec<Vec<f64>> = (0..grid.dim()).map(|d| grid.midpoints(d)).collect();
        let shape = grid.cells_shape();
        let mut x = vec![0.0; grid.dim()];
        let values = ArrayD::from_shape_fn(IxDyn(&shape), |idx| {
            for d in 0..x.len() {
                x[d] = mids[d][idx[d]];
            }
            f(&x)
        });
        Self::new(grid, values)
    }

    pub fn grid(&self) -> &Arc<GridN> {
        &self.grid
    }

    pub fn values(&self) -> &ArrayD<f64> {
        &self.values
    }

    pub fn into_values(self) -> ArrayD<f64> {
        self.values
    }

    pub fn is_nonnegative(&self) -> bool {
        self.nonnegative
    }

    pub fn is_zero(&self) -> bool {
        self.values.iter().all(|&v| v == 0.0)
    }

    pub fn dim(&self) -> usize {
        self.grid.dim()
    }

    pub fn ensure_same_grid(&self, other: &CellField) -> Result<()> {
        if same_grid(&self.grid, &other.grid) {
            Ok(())
        } else {
            Err(Error::GridMismatch)
        }
    }

    /// Restriction to a block of cells, living on the corresponding sub-grid.
    pub fn restrict(&self, ranges: &[Range<usize>]) -> Result<CellField> {
        let sub = Arc::new(self.grid.sub_grid(ranges)?);
        let view = self
            .values
            .slice_each_axis(|ax| Slice::from(ranges[ax.axis.index()].clone()));
        CellField::new(sub, view.to_owned())
    }
}

/// Which cumulative integral a [`CumField`] holds.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    /// `I_n f`: zero on the lower faces, nondecreasing in every index.
    Lower,
    /// `I_n^* f`: zero on the upper faces, nonincreasing in every index.
    Upper,
}

/// A scalar per grid node.
#[derive(Clone, Debug)]
pub struct NodeField {
    grid: Arc<GridN>,
    values: ArrayD<f64>,
}

impl NodeField {
    pub fn new(grid: Arc<GridN>, values: ArrayD<f64>) -> Result<Self> {
        if values.shape() != grid.nodes_shape().as_slice() {
            return Err(Error::GridMismatch);
        }
        Ok(Self { grid, values })
    }

    pub fn grid(&self) -> &Arc<GridN> {
        &self.grid
    }

    pub fn values(&self) -> &ArrayD<f64> {
        &self.values
    }

    pub fn at(&self, index: &[usize]) -> f64 {
        self.values[IxDyn(index)]
    }

    pub fn map(&self, f: impl Fn(f64) -> f64 + Sync + Send) -> NodeField {
        let mut values = self.values.clone();
        values.par_mapv_inplace(f);
        NodeField {
            grid: self.grid.clone(),
            values,
        }
    }

    /// Node values at the upper corner of every cell (cell-shaped).
    pub fn upper_corners(&self) -> ArrayViewD<'_, f64> {
        self.values.slice_each_axis(|_| Slice::from(1..))
    }

    /// Node values at the lower corner of every cell (cell-shaped).
    pub fn lower_corners(&self) -> ArrayViewD<'_, f64> {
        self.values.slice_each_axis(|_| Slice::from(..-1))
    }

    pub fn as_2d(&self) -> Result<ArrayView2<'_, f64>> {
        self.values
            .view()
            .into_dimensionality()
            .map_err(|_| Error::DimensionMismatch {
                expected: 2,
                got: self.grid.dim(),
            })
    }
}

/// Node table of `I_n f` or `I_n^* f`.
#[derive(Clone, Debug)]
pub struct CumField {
    node: NodeField,
    direction: Direction,
}

impl CumField {
    pub fn direction(&self) -> Direction {
        self.direction
    }

    pub fn grid(&self) -> &Arc<GridN> {
        &self.node.grid
    }

    pub fn values(&self) -> &ArrayD<f64> {
        &self.node.values
    }

    pub fn at(&self, index: &[usize]) -> f64 {
        self.node.at(index)
    }

    pub fn node_field(&self) -> &NodeField {
        &self.node
    }

    /// Value seen by a cell: the upper corner for `I_n`, the lower corner for
    /// `I_n^*`. This is the discrete operator and its exact adjoint.
    pub fn cell_values(&self) -> ArrayViewD<'_, f64> {
        match self.direction {
            Direction::Lower => self.node.upper_corners(),
            Direction::Upper => self.node.lower_corners(),
        }
    }

    pub fn map(&self, f: impl Fn(f64) -> f64 + Sync + Send) -> NodeField {
        self.node.map(f)
    }
}

/// Exclusive running sum along `axis`; the output is one longer on that axis
/// and starts with 0.
pub fn prefix_along(a: &ArrayD<f64>, axis: usize) -> ArrayD<f64> {
    let mut shape = a.shape().to_vec();
    shape[axis] += 1;
    let mut out = ArrayD::zeros(IxDyn(&shape));
    Zip::from(out.lanes_mut(Axis(axis)))
        .and(a.lanes(Axis(axis)))
        .par_for_each(|mut o, i| {
            let mut s = 0.0;
            o[0] = 0.0;
            for (k, &x) in i.iter().enumerate() {
                s += x;
                o[k + 1] = s;
            }
        });
    out
}

/// Running sum from the top along `axis`: `out[k] = sum_{i >= k} a[i]`,
/// one longer on that axis and ending with 0.
pub fn suffix_along(a: &ArrayD<f64>, axis: usize) -> ArrayD<f64> {
    let mut shape = a.shape().to_vec();
    shape[axis] += 1;
    let mut out = ArrayD::zeros(IxDyn(&shape));
    Zip::from(out.lanes_mut(Axis(axis)))
        .and(a.lanes(Axis(axis)))
        .par_for_each(|mut o, i| {
            let m = i.len();
            let mut s = 0.0;
            o[m] = 0.0;
            for k in (0..m).rev() {
                s += i[k];
                o[k] = s;
            }
        });
    out
}

/// Applies [`prefix_along`] or [`suffix_along`] over each listed axis.
pub fn cumulate_axes(a: &ArrayD<f64>, axes: &[usize], direction: Direction) -> ArrayD<f64> {
    let mut out = a.clone();
    for &ax in axes {
        out = match direction {
            Direction::Lower => prefix_along(&out, ax),
            Direction::Upper => suffix_along(&out, ax),
        };
    }
    out
}

fn cumulate(f: &CellField, direction: Direction) -> CumField {
    let mass = f.values() * &f.grid().cell_volumes();
    let axes: Vec<usize> = (0..f.dim()).collect();
    let values = cumulate_axes(&mass, &axes, direction);
    CumField {
        node: NodeField {
            grid: f.grid().clone(),
            values,
        },
        direction,
    }
}

/// `I_n f` at every node: the integral over all cells strictly below it.
pub fn prefix_cumulate(f: &CellField) -> CumField {
    cumulate(f, Direction::Lower)
}

/// `I_n^* f` at every node: the integral over all cells at or above it, with
/// the upper truncation boundary standing in for infinity.
pub fn suffix_cumulate(f: &CellField) -> CumField {
    cumulate(f, Direction::Upper)
}

/// Applies the discrete `I_n` to a cell array and returns it cell-shaped,
/// i.e. sampled at the upper corner of each cell.
pub fn apply_lower(values: &ArrayD<f64>, volumes: &ArrayD<f64>) -> ArrayD<f64> {
    let mass = values * volumes;
    let axes: Vec<usize> = (0..values.ndim()).collect();
    let nodes = cumulate_axes(&mass, &axes, Direction::Lower);
    nodes.slice_each_axis(|_| Slice::from(1..)).to_owned()
}

/// Applies the discrete `I_n^*` to a cell array and returns it cell-shaped,
/// i.e. sampled at the lower corner of each cell.
pub fn apply_upper(values: &ArrayD<f64>, volumes: &ArrayD<f64>) -> ArrayD<f64> {
    let mass = values * volumes;
    let axes: Vec<usize> = (0..values.ndim()).collect();
    let nodes = cumulate_axes(&mass, &axes, Direction::Upper);
    nodes.slice_each_axis(|_| Slice::from(..-1)).to_owned()
}

/// `(sum |f|^e * weight * vol)^(1/e)`.
pub fn weighted_norm(f: &CellField, weight: &CellField, exponent: f64) -> Result<f64> {
    f.ensure_same_grid(weight)?;
    if !(exponent > 0.0) {
        return Err(Error::out_of_range("exponent", format!("{exponent} <= 0")));
    }
    let vol = f.grid().cell_volumes();
    let mut acc = CompensatedSum::new();
    Zip::from(f.values())
        .and(weight.values())
        .and(&vol)
        .for_each(|&x, &wt, &dv| acc.add(crate::numeric::pow(x.abs(), exponent) * wt * dv));
    Ok(acc.value().max(0.0).powf(1.0 / exponent))
}

fn stieltjes_pair<'a>(
    phi: &'a NodeField,
    psi: &'a NodeField,
) -> Result<(ArrayView2<'a, f64>, ArrayView2<'a, f64>)> {
    if !same_grid(&phi.grid, &psi.grid) {
        return Err(Error::GridMismatch);
    }
    Ok((phi.as_2d()?, psi.as_2d()?))
}

#[inline]
fn mixed_difference(a: &ArrayView2<'_, f64>, i: usize, j: usize) -> f64 {
    a[[i + 1, j + 1]] - a[[i, j + 1]] - a[[i + 1, j]] + a[[i, j]]
}

/// Per-cell terms `phi(lower-left) * Δ²psi(cell)`.
pub fn stieltjes_terms(phi: &NodeField, psi: &NodeField) -> Result<Array2<f64>> {
    let (phi, psi) = stieltjes_pair(phi, psi)?;
    let (m, n) = (phi.nrows() - 1, phi.ncols() - 1);
    Ok(Array2::from_shape_fn((m, n), |(i, j)| {
        let d2 = mixed_difference(&psi, i, j);
        if d2 == 0.0 {
            0.0
        } else {
            phi[[i, j]] * d2
        }
    }))
}

/// Discrete box integral `sum_cells phi(lower-left node) * Δ²psi(cell)`.
///
/// When `phi` vanishes on the lower faces and `psi` on the upper faces, two
/// summations by parts turn this into [`stieltjes_form2`] and
/// [`stieltjes_form3`] with no discretisation error.
pub fn stieltjes_box_integral(phi: &NodeField, psi: &NodeField) -> Result<f64> {
    let terms = stieltjes_terms(phi, psi)?;
    Ok(crate::numeric::compensated_sum(terms.iter().copied()))
}

/// Mixed form `sum_cells Δ_y phi(left edge) * (-Δ_x psi(top edge))`.
pub fn stieltjes_form2(phi: &NodeField, psi: &NodeField) -> Result<f64> {
    let (phi, psi) = stieltjes_pair(phi, psi)?;
    let (m, n) = (phi.nrows() - 1, phi.ncols() - 1);
    let mut acc = CompensatedSum::new();
    for i in 0..m {
        for j in 0..n {
            let dy_phi = phi[[i, j + 1]] - phi[[i, j]];
            let dx_psi = psi[[i, j + 1]] - psi[[i + 1, j + 1]];
            acc.add(dy_phi * dx_psi);
        }
    }
    Ok(acc.value())
}

/// Transposed form `sum_cells psi(upper-right node) * Δ²phi(cell)`.
pub fn stieltjes_form3(phi: &NodeField, psi: &NodeField) -> Result<f64> {
    let (phi, psi) = stieltjes_pair(phi, psi)?;
    let (m, n) = (phi.nrows() - 1, phi.ncols() - 1);
    let mut acc = CompensatedSum::new();
    for i in 0..m {
        for j in 0..n {
            acc.add(psi[[i + 1, j + 1]] * mixed_difference(&phi, i, j));
        }
    }
    Ok(acc.value())
}

/// Sum of `integrand(cell) * Δ²psi(cell)` with the integrand supplied per
/// cell. Returns the sum and the fraction of absolute mass carried by
/// negative terms.
pub fn stieltjes_tagged(integrand: &ArrayView2<'_, f64>, psi: &NodeField) -> Result<(f64, f64)> {
    let psi = psi.as_2d()?;
    let (m, n) = (psi.nrows() - 1, psi.ncols() - 1);
    if integrand.dim() != (m, n) {
        return Err(Error::GridMismatch);
    }
    let mut acc = CompensatedSum::new();
    let mut pos = CompensatedSum::new();
    let mut neg = CompensatedSum::new();
    for i in 0..m {
        for j in 0..n {
            let d2 = mixed_difference(&psi, i, j);
            if d2 == 0.0 {
                continue;
            }
            let t = integrand[[i, j]] * d2;
            if t.is_nan() {
                continue;
            }
            acc.add(t);
            if t < 0.0 {
                neg.add(-t);
            } else {
                pos.add(t);
            }
        }
    }
    let total = pos.value() + neg.value();
    let neg_fraction = if total > 0.0 { neg.value() / total } else { 0.0 };
    Ok((acc.value(), neg_fraction))
}

/// [`stieltjes_tagged`] in log scale: `ln_integrand` per cell and `ln_psi`
/// per node are logarithms, so the `r`-th powers inside the `B` functionals
/// never leave the floating range. Each `Δ²psi` is formed after dividing by
/// the largest of its four corners. Returns the log of the sum and the
/// negative mass fraction.
pub fn stieltjes_log(ln_integrand: &ArrayView2<'_, f64>, ln_psi: &ArrayView2<'_, f64>) -> Result<(f64, f64)> {
    let (m, n) = (ln_psi.nrows() - 1, ln_psi.ncols() - 1);
    if ln_integrand.dim() != (m, n) {
        return Err(Error::GridMismatch);
    }
    let mut terms = Vec::with_capacity(m * n);
    for i in 0..m {
        for j in 0..n {
            let li = ln_integrand[[i, j]];
            if li == f64::NEG_INFINITY || li.is_nan() {
                continue;
            }
            let c = [
                ln_psi[[i + 1, j + 1]],
                ln_psi[[i, j + 1]],
                ln_psi[[i + 1, j]],
                ln_psi[[i, j]],
            ];
            let top = c.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            if top == f64::NEG_INFINITY || top.is_nan() {
                continue;
            }
            let d = (c[0] - top).exp() - (c[1] - top).exp() - (c[2] - top).exp() + (c[3] - top).exp();
            if d == 0.0 {
                continue;
            }
            terms.push((li + top + d.abs().ln(), d < 0.0));
        }
    }
    Ok(crate::numeric::signed_log_sum(terms))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn unit_square(nodes: usize) -> Arc<GridN> {
        Arc::new(GridN::linear(2, 0.0, 1.0, nodes).unwrap())
    }

    #[test]
    fn rejects_bad_axes() {
        assert!(GridN::new(vec![vec![0.1]], Spacing::Custom).is_err());
        assert!(GridN::new(vec![vec![0.1, 0.1]], Spacing::Custom).is_err());
        assert!(GridN::new(vec![vec![0.1, f64::NAN]], Spacing::Custom).is_err());
        assert!(GridN::new(vec![vec![1.0, 2.0]; 5], Spacing::Custom).is_err());
        assert!(GridN::log(2, 0.0, 1.0, 8).is_err());
    }

    #[test]
    fn log_grid_hits_endpoints_and_midpoints_are_inside() {
        let g = GridN::log(3, 1e-4, 1e4, 64).unwrap();
        assert_eq!(g.axis(2)[0], 1e-4);
        assert_eq!(*g.axis(2).last().unwrap(), 1e4);
        for (m, w) in g.midpoints(0).iter().zip(g.axis(0).windows(2)) {
            assert!(w[0] < *m && *m < w[1]);
        }
    }

    #[test]
    fn prefix_of_constant_is_area() {
        let g = unit_square(9);
        let s = prefix_cumulate(&CellField::constant(g.clone(), 1.0).unwrap());
        for i in 0..9 {
            for j in 0..9 {
                let (x, y) = (g.axis(0)[i], g.axis(1)[j]);
                assert_relative_eq!(s.at(&[i, j]), x * y, epsilon = 1e-15);
            }
        }
    }

    #[test]
    fn suffix_of_constant_is_complement_area() {
        let g = unit_square(9);
        let s = suffix_cumulate(&CellField::constant(g.clone(), 1.0).unwrap());
        for i in 0..9 {
            for j in 0..9 {
                let (x, y) = (g.axis(0)[i], g.axis(1)[j]);
                assert_relative_eq!(s.at(&[i, j]), (1.0 - x) * (1.0 - y), epsilon = 1e-15);
            }
        }
    }

    #[test]
    fn zero_field_cumulates_to_zero() {
        let g = unit_square(5);
        let f = CellField::constant(g, 0.0).unwrap();
        assert!(prefix_cumulate(&f).values().iter().all(|&v| v == 0.0));
        assert!(suffix_cumulate(&f).values().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn non_finite_sample_is_reported_with_index() {
        let g = unit_square(4);
        let mut v = ArrayD::from_elem(IxDyn(&[3, 3]), 1.0);
        v[[1, 2]] = f64::INFINITY;
        match CellField::new(g, v) {
            Err(Error::NonFinite { index }) => assert_eq!(index, vec![1, 2]),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn weighted_norm_examples() {
        let g = unit_square(65);
        let one = CellField::constant(g.clone(), 1.0).unwrap();
        assert_relative_eq!(weighted_norm(&one, &one, 2.0).unwrap(), 1.0, epsilon = 1e-14);
        let c = CellField::constant(g.clone(), 3.0).unwrap();
        let wt = CellField::constant(g.clone(), 0.25).unwrap();
        // homogeneity: 3 * (0.25)^(1/3)
        assert_relative_eq!(
            weighted_norm(&c, &wt, 3.0).unwrap(),
            3.0 * 0.25f64.powf(1.0 / 3.0),
            epsilon = 1e-13
        );
        let x = CellField::from_fn(g, |p| p[0]).unwrap();
        // midpoint rule error for int x^2 is h^2/12 per unit length
        let h = 1.0 / 64.0;
        let expected = (1.0 / 3.0 - h * h / 12.0_f64).sqrt();
        assert_relative_eq!(weighted_norm(&x, &one, 2.0).unwrap(), expected, epsilon = 1e-13);
        assert!((weighted_norm(&x, &one, 2.0).unwrap() - 1.0 / 3f64.sqrt()).abs() < 1e-4);
    }

    #[test]
    fn stieltjes_rejects_mismatched_grids() {
        let a = prefix_cumulate(&CellField::constant(unit_square(4), 1.0).unwrap());
        let b = suffix_cumulate(&CellField::constant(unit_square(5), 1.0).unwrap());
        assert!(matches!(
            stieltjes_box_integral(a.node_field(), b.node_field()),
            Err(Error::GridMismatch)
        ));
    }

    #[test]
    fn stieltjes_zero_integrand() {
        let g = unit_square(6);
        let zero = prefix_cumulate(&CellField::constant(g.clone(), 0.0).unwrap());
        let psi = suffix_cumulate(&CellField::constant(g, 1.0).unwrap());
        assert_eq!(
            stieltjes_box_integral(zero.node_field(), psi.node_field()).unwrap(),
            0.0
        );
    }

    #[test]
    fn sub_grid_keeps_nodes() {
        let g = GridN::log(2, 1e-2, 1e2, 11).unwrap();
        let s = g.sub_grid(&[2..5, 0..10]).unwrap();
        assert_eq!(s.axis(0), &g.axis(0)[2..=5]);
        assert_eq!(s.cells_shape(), vec![3, 10]);
        assert!(g.sub_grid(&[2..2, 0..1]).is_err());
    }
}
