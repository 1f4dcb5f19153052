//! Box-union domains, reference cells, and the `eps`-cell decomposition.

use std::fmt;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::sampled::Grid;

/// An open axis-aligned box `(lo_0, hi_0) x ... x (lo_{d-1}, hi_{d-1})`.
#[derive(Debug, Clone, PartialEq)]
pub struct AxisBox {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

impl AxisBox {
    pub fn new(lo: Vec<f64>, hi: Vec<f64>) -> Result<Self> {
        if lo.is_empty() || lo.len() != hi.len() {
            return Err(Error::domain("box corners must have the same nonzero dimension"));
        }
        for (a, (l, h)) in lo.iter().zip(&hi).enumerate() {
            if !(l.is_finite() && h.is_finite() && l < h) {
                return Err(Error::domain(format!("box edge {a} must satisfy lo < hi, got ({l}, {h})")));
            }
        }
        Ok(AxisBox { lo, hi })
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    pub fn measure(&self) -> f64 {
        self.lo.iter().zip(&self.hi).map(|(l, h)| h - l).product()
    }

    fn disjoint(&self, other: &AxisBox) -> bool {
        (0..self.dim()).any(|a| self.hi[a] <= other.lo[a] || other.hi[a] <= self.lo[a])
    }

    /// Distance from an interior point to the boundary of the box.
    pub fn boundary_distance(&self, x: &[f64]) -> f64 {
        (0..self.dim()).map(|a| (x[a] - self.lo[a]).min(self.hi[a] - x[a])).fold(f64::INFINITY, f64::min)
    }
}

/// A bounded open set given as a union of pairwise disjoint boxes.
#[derive(Debug, Clone, PartialEq)]
pub struct Domain {
    boxes: Vec<AxisBox>,
}

impl Domain {
    pub fn new(boxes: Vec<AxisBox>) -> Result<Self> {
        let first = boxes.first().ok_or_else(|| Error::domain("a domain needs at least one box"))?;
        let d = first.dim();
        if boxes.iter().any(|b| b.dim() != d) {
            return Err(Error::domain("all boxes of a domain must have the same dimension"));
        }
        for i in 0..boxes.len() {
            for j in i + 1..boxes.len() {
                if !boxes[i].disjoint(&boxes[j]) {
                    return Err(Error::domain(format!("boxes {i} and {j} overlap")));
                }
            }
        }
        Ok(Domain { boxes })
    }

    /// The open unit cube `(0, 1)^d`.
    pub fn unit_cube(d: usize) -> Self {
        Domain { boxes: vec![AxisBox { lo: vec![0.0; d], hi: vec![1.0; d] }] }
    }

    pub fn single(lo: Vec<f64>, hi: Vec<f64>) -> Result<Self> {
        Domain::new(vec![AxisBox::new(lo, hi)?])
    }

    /// Parses `box:<lo>;<hi>` terms joined by `+`, coordinates separated by commas.
    pub fn from_spec(spec: &str) -> Result<Self> {
        let spec = spec.trim();
        let body = spec
            .strip_prefix("box:")
            .ok_or_else(|| Error::config(format!("domain `{spec}` must start with `box:`")))?;
        let coords = |s: &str| -> Result<Vec<f64>> {
            s.split(',')
                .map(|c| {
                    c.trim().parse::<f64>().map_err(|e| Error::config(format!("bad coordinate `{c}` in `{spec}`: {e}")))
                })
                .collect()
        };
        let mut boxes = Vec::new();
        for term in body.split("+box:") {
            let (lo, hi) =
                term.split_once(';').ok_or_else(|| Error::config(format!("box `{term}` needs `lo;hi` corners")))?;
            boxes.push(AxisBox::new(coords(lo)?, coords(hi)?)?);
        }
        Domain::new(boxes)
    }

    pub fn boxes(&self) -> &[AxisBox] {
        &self.boxes
    }

    pub fn dim(&self) -> usize {
        self.boxes[0].dim()
    }

    pub fn measure(&self) -> f64 {
        self.boxes.iter().map(AxisBox::measure).sum()
    }

    /// Diameter of the bounding box.
    pub fn diameter(&self) -> f64 {
        (0..self.dim())
            .map(|a| {
                let lo = self.boxes.iter().map(|b| b.lo[a]).fold(f64::INFINITY, f64::min);
                let hi = self.boxes.iter().map(|b| b.hi[a]).fold(f64::NEG_INFINITY, f64::max);
                (hi - lo) * (hi - lo)
            })
            .sum::<f64>()
            .sqrt()
    }
}

impl fmt::Display for Domain {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let join = |v: &[f64]| v.iter().map(|x| format!("{x}")).collect::<Vec<_>>().join(",");
        for (i, b) in self.boxes.iter().enumerate() {
            if i > 0 {
                f.write_str("+")?;
            }
            write!(f, "box:{};{}", join(&b.lo), join(&b.hi))?;
        }
        Ok(())
    }
}

/// The reference cell `Y = (0, l_0) x ... x (0, l_{d-1})`.
#[derive(Debug, Clone, PartialEq)]
pub struct ReferenceCell {
    edges: Vec<f64>,
}

impl ReferenceCell {
    pub fn new(edges: Vec<f64>) -> Result<Self> {
        if edges.is_empty() || edges.iter().any(|l| !(l.is_finite() && *l > 0.0)) {
            return Err(Error::domain("reference cell edges must be positive and finite"));
        }
        Ok(ReferenceCell { edges })
    }

    pub fn unit(d: usize) -> Self {
        ReferenceCell { edges: vec![1.0; d] }
    }

    /// Parses comma-separated edge lengths, e.g. `1,1`.
    pub fn from_spec(spec: &str) -> Result<Self> {
        let edges = spec
            .split(',')
            .map(|c| c.trim().parse::<f64>().map_err(|e| Error::config(format!("bad cell edge `{c}`: {e}"))))
            .collect::<Result<Vec<_>>>()?;
        ReferenceCell::new(edges)
    }

    pub fn edges(&self) -> &[f64] {
        &self.edges
    }

    pub fn dim(&self) -> usize {
        self.edges.len()
    }

    pub fn measure(&self) -> f64 {
        self.edges.iter().product()
    }

    pub fn diameter(&self) -> f64 {
        self.edges.iter().map(|l| l * l).sum::<f64>().sqrt()
    }
}

/// Splits `z` into its lattice part and its remainder in `Y`:
/// `z = [z]_Y * l + {z}_Y` componentwise, with `{z}_Y` in `[0, l)`.
pub fn cell_index(z: &[f64], cell: &ReferenceCell) -> Result<(Vec<i64>, Vec<f64>)> {
    if z.len() != cell.dim() {
        return Err(Error::shape(format!("point has dimension {}, cell has {}", z.len(), cell.dim())));
    }
    if z.iter().any(|x| !x.is_finite()) {
        return Err(Error::domain("cell_index needs a finite point"));
    }
    let mut index = Vec::with_capacity(z.len());
    let mut frac = Vec::with_capacity(z.len());
    for (&x, &l) in z.iter().zip(cell.edges()) {
        let mut n = (x / l).floor();
        let mut r = x - n * l;
        // x / l may round up to an integer for x just below a lattice point.
        if r < 0.0 {
            n -= 1.0;
            r = x - n * l;
        }
        if r >= l {
            n += 1.0;
            r = (x - n * l).max(0.0);
        }
        index.push(n as i64);
        frac.push(r);
    }
    Ok((index, frac))
}

/// The cells `eps (xi + Y)` contained in `Omega`, and the measure of the remainder.
#[derive(Debug, Clone, PartialEq)]
pub struct CellDecomposition {
    eps: f64,
    cell: ReferenceCell,
    xi_set: Vec<Vec<i64>>,
    box_of: Vec<usize>,
    omega_measure: f64,
    lambda_measure: f64,
}

impl CellDecomposition {
    pub fn eps(&self) -> f64 {
        self.eps
    }

    pub fn cell(&self) -> &ReferenceCell {
        &self.cell
    }

    pub fn dim(&self) -> usize {
        self.cell.dim()
    }

    /// Lattice indices of the inner cells, sorted lexicographically.
    pub fn xi_set(&self) -> &[Vec<i64>] {
        &self.xi_set
    }

    /// Index of the box containing each cell of `xi_set`.
    pub fn box_of(&self) -> &[usize] {
        &self.box_of
    }

    pub fn lambda_measure(&self) -> f64 {
        self.lambda_measure
    }

    pub fn hat_measure(&self) -> f64 {
        self.omega_measure - self.lambda_measure
    }

    pub fn position(&self, xi: &[i64]) -> Option<usize> {
        self.xi_set.binary_search_by(|probe| probe.as_slice().cmp(xi)).ok()
    }

    /// Per-sample membership of `grid` midpoints in the union of inner cells.
    /// The complement is the mask of the boundary remainder.
    pub fn hat_mask(&self, grid: &Grid) -> Result<Vec<bool>> {
        let per_axis = grid.cells_per_axis(self.eps, &self.cell)?;
        let mut mask = vec![false; grid.len()];
        let mut xi = vec![0i64; grid.dim()];
        grid.visit(|flat, _, global| {
            for a in 0..global.len() {
                xi[a] = global[a].div_euclid(per_axis[a] as i64);
            }
            mask[flat] = self.position(&xi).is_some();
        });
        Ok(mask)
    }
}

/// Enumerates the cells `eps (xi + Y)` whose closure lies in the closure of a
/// single box of `Omega`.
pub fn decompose(omega: &Domain, eps: f64, cell: &ReferenceCell) -> Result<CellDecomposition> {
    if !(eps > 0.0 && eps.is_finite()) {
        return Err(Error::domain(format!("eps must be positive and finite, got {eps}")));
    }
    if omega.dim() != cell.dim() {
        return Err(Error::shape(format!("domain has dimension {}, reference cell has {}", omega.dim(), cell.dim())));
    }
    let d = omega.dim();
    let mut found: Vec<(Vec<i64>, usize)> = omega
        .boxes()
        .par_iter()
        .enumerate()
        .flat_map_iter(|(b, bx)| {
            let ranges: Vec<(i64, i64)> =
                (0..d).map(|a| axis_range(bx.lo[a], bx.hi[a], eps * cell.edges()[a])).collect();
            product(&ranges).into_iter().map(move |xi| (xi, b))
        })
        .collect();
    found.sort();
    let (xi_set, box_of): (Vec<_>, Vec<_>) = found.into_iter().unzip();
    let omega_measure = omega.measure();
    let lambda_measure = omega_measure - cell.measure() * eps.powi(d as i32) * xi_set.len() as f64;
    Ok(CellDecomposition {
        eps,
        cell: cell.clone(),
        xi_set,
        box_of,
        omega_measure,
        lambda_measure: lambda_measure.max(0.0),
    })
}

// Inclusive range of xi with [xi * size, (xi + 1) * size] inside [lo, hi].
fn axis_range(lo: f64, hi: f64, size: f64) -> (i64, i64) {
    let first = (lo / size).floor() as i64 - 1;
    let last = (hi / size).ceil() as i64 + 1;
    let fits = |xi: i64| {
        let tol = 1e-12 * size * (xi.unsigned_abs().max(1) as f64);
        let a = xi as f64 * size;
        let b = (xi + 1) as f64 * size;
        a >= lo - tol && b <= hi + tol
    };
    let mut start = None;
    let mut end = None;
    for xi in first..=last {
        if fits(xi) {
            start.get_or_insert(xi);
            end = Some(xi);
        }
    }
    match (start, end) {
        (Some(s), Some(e)) => (s, e),
        _ => (1, 0),
    }
}

fn product(ranges: &[(i64, i64)]) -> Vec<Vec<i64>> {
    let mut out = vec![Vec::new()];
    for &(s, e) in ranges {
        let mut next = Vec::new();
        for prefix in &out {
            for xi in s..=e {
                let mut v = prefix.clone();
                v.push(xi);
                next.push(v);
            }
        }
        out = next;
    }
    out
}

/// Measure of the boundary remainder for each `eps` of a sweep.
pub fn lambda_vanishes(omega: &Domain, eps_seq: &[f64], cell: &ReferenceCell) -> Result<Vec<f64>> {
    if eps_seq.is_empty() {
        return Err(Error::domain("eps sequence is empty"));
    }
    eps_seq.iter().map(|&eps| decompose(omega, eps, cell).map(|dec| dec.lambda_measure())).collect()
}
