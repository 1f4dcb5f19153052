//! The unfolding operator, the mean-value operator, and oscillating functions.
//!
//! With the grid spacing dividing every `eps`-cell edge, unfolding is a pure
//! gather: the value at `(xi, y_j)` is the source sample at global index
//! `xi * n + j`, where `n = eps * l / h` is the number of grid cells per cell
//! edge. Nothing is interpolated, so change-of-variables identities hold up
//! to summation rounding.

use rayon::prelude::*;

use crate::cells::{CellDecomposition, Domain, ReferenceCell};
use crate::error::{Error, Result};
use crate::modular::{luxemburg_weighted, modular_weighted};
use crate::nfunc::NFunction;
use crate::reduce::{pairwise_dot, pairwise_sum};
use crate::sampled::{Grid, SampledFunction};

/// Row-major multi-indices of a box of the given shape.
fn multi_indices(shape: &[usize]) -> Vec<Vec<usize>> {
    let total: usize = shape.iter().product();
    let mut out = Vec::with_capacity(total);
    let mut cur = vec![0usize; shape.len()];
    for _ in 0..total {
        out.push(cur.clone());
        for a in (0..shape.len()).rev() {
            cur[a] += 1;
            if cur[a] < shape[a] {
                break;
            }
            cur[a] = 0;
        }
    }
    out
}

/// Midpoint grid of `Y` with `n_a` nodes along axis `a`.
pub fn cell_grid(cell: &ReferenceCell, nodes: &[usize]) -> Result<Grid> {
    let d = cell.dim();
    let domain = Domain::single(vec![0.0; d], cell.edges().to_vec())?;
    let h = cell.edges().iter().zip(nodes).map(|(l, &n)| l / n as f64).collect();
    Grid::new(domain, h)
}

/// `T_eps(phi)` stored on the inner cells only, `(xi, y)` order with `y` fastest.
/// Values on the boundary remainder are zero and not stored.
#[derive(Debug, Clone, PartialEq)]
pub struct UnfoldedFunction {
    grid: Grid,
    dec: CellDecomposition,
    y_nodes: Vec<usize>,
    values: Vec<f64>,
}

impl UnfoldedFunction {
    pub fn decomposition(&self) -> &CellDecomposition {
        &self.dec
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn y_nodes(&self) -> &[usize] {
        &self.y_nodes
    }

    pub fn nodes_per_cell(&self) -> usize {
        self.y_nodes.iter().product()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// The `y` samples of the cell at position `k` of the decomposition.
    pub fn cell_values(&self, k: usize) -> &[f64] {
        let n = self.nodes_per_cell();
        &self.values[k * n..(k + 1) * n]
    }

    /// Product-measure weight of one stored node: `|Y| * prod(h)`.
    pub fn node_weight(&self) -> f64 {
        self.dec.cell().measure() * self.grid.cell_volume()
    }

    pub fn map<F: Fn(f64) -> f64>(&self, f: F) -> Self {
        UnfoldedFunction { values: self.values.iter().map(|&v| f(v)).collect(), ..self.clone() }
    }

    pub fn zip_with<F: Fn(f64, f64) -> f64>(&self, other: &UnfoldedFunction, f: F) -> Result<Self> {
        if self.grid != other.grid || self.dec != other.dec {
            return Err(Error::shape("unfolded functions come from different grids or decompositions"));
        }
        let values = self.values.iter().zip(&other.values).map(|(&a, &b)| f(a, b)).collect();
        Ok(UnfoldedFunction { values, ..self.clone() })
    }

    /// `iint_{Omega x Y} B(|T|/k)`.
    pub fn modular(&self, nf: &NFunction, k: f64) -> Result<f64> {
        modular_weighted(&self.values, self.node_weight(), nf, k)
    }

    /// Luxemburg norm in `L^B(Omega x Y)`.
    pub fn luxemburg(&self, nf: &NFunction, rel_tol: f64) -> Result<f64> {
        luxemburg_weighted(&self.values, self.node_weight(), nf, rel_tol)
    }

    /// `iint_{Omega x Y} T`.
    pub fn integral(&self) -> f64 {
        self.node_weight() * pairwise_sum(&self.values)
    }

    /// `iint_{Omega x Y} T * S`.
    pub fn pairing(&self, other: &UnfoldedFunction) -> Result<f64> {
        if self.grid != other.grid || self.dec != other.dec {
            return Err(Error::shape("unfolded functions come from different grids or decompositions"));
        }
        Ok(self.node_weight() * pairwise_dot(&self.values, &other.values))
    }

    /// Expands to the full `(x, y)` sample layout on `Omega x Y`.
    pub fn to_product(&self) -> Result<ProductFunction> {
        let per_axis = self.grid.cells_per_axis(self.dec.eps(), self.dec.cell())?;
        let ny = self.nodes_per_cell();
        let mut values = vec![0.0; self.grid.len() * ny];
        let mut xi = vec![0i64; self.grid.dim()];
        self.grid.visit(|flat, _, global| {
            for a in 0..global.len() {
                xi[a] = global[a].div_euclid(per_axis[a] as i64);
            }
            if let Some(k) = self.dec.position(&xi) {
                values[flat * ny..(flat + 1) * ny].copy_from_slice(self.cell_values(k));
            }
        });
        Ok(ProductFunction {
            grid: self.grid.clone(),
            cell: self.dec.cell().clone(),
            y_nodes: self.y_nodes.clone(),
            values,
        })
    }
}

/// `T_eps(phi)(x, y) = phi(eps [x/eps]_Y + eps y)` on the inner cells, zero elsewhere.
pub fn unfold(phi: &SampledFunction, dec: &CellDecomposition) -> Result<UnfoldedFunction> {
    let grid = phi.grid();
    if grid.dim() != dec.dim() {
        return Err(Error::shape("function and decomposition dimensions differ"));
    }
    let per_axis = grid.cells_per_axis(dec.eps(), dec.cell())?;
    let offsets = multi_indices(&per_axis);
    let ny = offsets.len();
    let mut values = vec![0.0; dec.xi_set().len() * ny];
    let src = phi.values();
    values.par_chunks_mut(ny.max(1)).zip(dec.xi_set().par_iter().zip(dec.box_of().par_iter())).try_for_each(
        |(chunk, (xi, &b))| -> Result<()> {
            let mut global = vec![0i64; xi.len()];
            for (slot, off) in chunk.iter_mut().zip(&offsets) {
                for a in 0..xi.len() {
                    global[a] = xi[a] * per_axis[a] as i64 + off[a] as i64;
                }
                let flat = grid
                    .flat_index(b, &global)
                    .ok_or_else(|| Error::shape(format!("cell {xi:?} is not covered by the grid of box {b}")))?;
                *slot = src[flat];
            }
            Ok(())
        },
    )?;
    Ok(UnfoldedFunction { grid: grid.clone(), dec: dec.clone(), y_nodes: per_axis, values })
}

/// `M_Y(w)(x) = (1/|Y|) int_Y w(x, y) dy`: the cell mean on inner cells, zero elsewhere.
pub fn mean_y(w: &UnfoldedFunction) -> Result<SampledFunction> {
    let ny = w.nodes_per_cell();
    let means: Vec<f64> = (0..w.dec.xi_set().len()).map(|k| pairwise_sum(w.cell_values(k)) / ny as f64).collect();
    let per_axis = w.y_nodes.clone();
    let mut values = vec![0.0; w.grid.len()];
    let mut xi = vec![0i64; w.grid.dim()];
    w.grid.visit(|flat, _, global| {
        for a in 0..global.len() {
            xi[a] = global[a].div_euclid(per_axis[a] as i64);
        }
        if let Some(k) = w.dec.position(&xi) {
            values[flat] = means[k];
        }
    });
    SampledFunction::new(w.grid.clone(), values)
}

/// Reference cell described by a grid over `(0, l)`.
fn cell_of(f: &SampledFunction) -> Result<ReferenceCell> {
    let boxes = f.grid().domain().boxes();
    if boxes.len() != 1 || boxes[0].lo.iter().any(|&l| l != 0.0) {
        return Err(Error::shape("a function on Y must live on a single box with lower corner 0"));
    }
    ReferenceCell::new(boxes[0].hi.clone())
}

/// `f_eps(x) = f({x/eps}_Y)` sampled on the midpoint grid of `omega` with spacing `h`.
///
/// `f` must be sampled on the `y` grid matching `eps` and `h`, i.e. with
/// `eps * l_a / h_a` nodes along axis `a`; the periodic extension is then an
/// exact index computation.
pub fn oscillate(f: &SampledFunction, eps: f64, omega: &Domain, h: &[f64]) -> Result<SampledFunction> {
    if !(eps > 0.0 && eps.is_finite()) {
        return Err(Error::domain(format!("eps must be positive, got {eps}")));
    }
    let cell = cell_of(f)?;
    let grid = Grid::new(omega.clone(), h.to_vec())?;
    let per_axis = grid.cells_per_axis(eps, &cell)?;
    let expected = cell_grid(&cell, &per_axis)?;
    if *f.grid() != expected {
        return Err(Error::shape(format!(
            "function on Y must be sampled with {per_axis:?} nodes per axis to match eps = {eps}"
        )));
    }
    let fy = f.values();
    let mut values = vec![0.0; grid.len()];
    let mut rem = vec![0i64; grid.dim()];
    grid.visit(|flat, _, global| {
        for a in 0..global.len() {
            rem[a] = global[a].rem_euclid(per_axis[a] as i64);
        }
        let k = expected.flat_index(0, &rem).expect("remainder inside the cell grid");
        values[flat] = fy[k];
    });
    SampledFunction::new(grid, values)
}

/// Whether `T(v w) == T(v) T(w)` holds sample by sample.
pub fn unfold_product_check(v: &SampledFunction, w: &SampledFunction, dec: &CellDecomposition) -> Result<bool> {
    let vw = v.zip_with(w, |a, b| a * b)?;
    let lhs = unfold(&vw, dec)?;
    let rhs = unfold(v, dec)?.zip_with(&unfold(w, dec)?, |a, b| a * b)?;
    Ok(lhs.values() == rhs.values())
}

/// A function on `Omega x Y` sampled on (Omega grid) x (Y midpoint grid), `y` fastest.
#[derive(Debug, Clone, PartialEq)]
pub struct ProductFunction {
    grid: Grid,
    cell: ReferenceCell,
    y_nodes: Vec<usize>,
    values: Vec<f64>,
}

impl ProductFunction {
    pub fn from_fn<F>(grid: &Grid, cell: &ReferenceCell, y_nodes: &[usize], mut f: F) -> Result<Self>
    where
        F: FnMut(&[f64], &[f64]) -> f64,
    {
        let ygrid = cell_grid(cell, y_nodes)?;
        let ys = ygrid.points();
        let mut values = Vec::with_capacity(grid.len() * ys.len());
        for x in grid.points() {
            for y in &ys {
                values.push(f(&x, y));
            }
        }
        Ok(ProductFunction { grid: grid.clone(), cell: cell.clone(), y_nodes: y_nodes.to_vec(), values })
    }

    /// `w(x)` viewed as a function on `Omega x Y`, constant in `y`.
    pub fn lift_x(u: &SampledFunction, cell: &ReferenceCell, y_nodes: &[usize]) -> Self {
        let ny: usize = y_nodes.iter().product();
        let values = u.values().iter().flat_map(|&v| std::iter::repeat_n(v, ny)).collect();
        ProductFunction { grid: u.grid().clone(), cell: cell.clone(), y_nodes: y_nodes.to_vec(), values }
    }

    /// `f(y)` viewed as a function on `Omega x Y`, constant in `x`.
    pub fn lift_y(f: &SampledFunction, grid: &Grid) -> Result<Self> {
        let cell = cell_of(f)?;
        let h = f.grid().spacing();
        let y_nodes: Vec<usize> = cell.edges().iter().zip(h).map(|(l, h)| (l / h).round() as usize).collect();
        let values = (0..grid.len()).flat_map(|_| f.values().iter().copied()).collect();
        Ok(ProductFunction { grid: grid.clone(), cell, y_nodes, values })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn y_nodes(&self) -> &[usize] {
        &self.y_nodes
    }

    /// Product-measure weight of one node: `prod(h) * |Y| / prod(n)`.
    pub fn node_weight(&self) -> f64 {
        let ny: usize = self.y_nodes.iter().product();
        self.grid.cell_volume() * self.cell.measure() / ny as f64
    }

    fn check_same_layout(&self, other: &ProductFunction) -> Result<()> {
        if self.grid != other.grid || self.cell != other.cell || self.y_nodes != other.y_nodes {
            return Err(Error::shape("product functions have different layouts"));
        }
        Ok(())
    }

    pub fn zip_with<F: Fn(f64, f64) -> f64>(&self, other: &ProductFunction, f: F) -> Result<Self> {
        self.check_same_layout(other)?;
        let values = self.values.iter().zip(&other.values).map(|(&a, &b)| f(a, b)).collect();
        Ok(ProductFunction { values, ..self.clone() })
    }

    pub fn map<F: Fn(f64) -> f64>(&self, f: F) -> Self {
        ProductFunction { values: self.values.iter().map(|&v| f(v)).collect(), ..self.clone() }
    }

    /// Zeroes every `x` row where `mask` is false.
    pub fn masked_x(&self, mask: &[bool]) -> Result<Self> {
        if mask.len() != self.grid.len() {
            return Err(Error::shape("mask length differs from the grid size"));
        }
        let ny: usize = self.y_nodes.iter().product();
        let mut values = self.values.clone();
        for (row, &keep) in values.chunks_mut(ny).zip(mask) {
            if !keep {
                row.fill(0.0);
            }
        }
        Ok(ProductFunction { values, ..self.clone() })
    }

    pub fn modular(&self, nf: &NFunction, k: f64) -> Result<f64> {
        modular_weighted(&self.values, self.node_weight(), nf, k)
    }

    pub fn luxemburg(&self, nf: &NFunction, rel_tol: f64) -> Result<f64> {
        luxemburg_weighted(&self.values, self.node_weight(), nf, rel_tol)
    }

    pub fn integral(&self) -> f64 {
        self.node_weight() * pairwise_sum(&self.values)
    }

    pub fn pairing(&self, other: &ProductFunction) -> Result<f64> {
        self.check_same_layout(other)?;
        Ok(self.node_weight() * pairwise_dot(&self.values, &other.values))
    }

    /// `(1/|Y|) int_Y w(x, y) dy` at every `x` sample.
    pub fn mean_y(&self) -> SampledFunction {
        let ny: usize = self.y_nodes.iter().product();
        let values = self.values.chunks(ny).map(|row| pairwise_sum(row) / ny as f64).collect();
        SampledFunction::new(self.grid.clone(), values).expect("one mean per x sample")
    }
}
