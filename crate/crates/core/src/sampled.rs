//! Midpoint grids over box-union domains and the functions sampled on them.
//!
//! Grid points live on a global lattice anchored at the origin: sample `i`
//! (a `d`-vector of integers) sits at the midpoint `(i + 1/2) * h`. Every box
//! corner must lie on the lattice `h * Z^d`, which is what makes `eps`-cells
//! and box remainders exact unions of grid cells.

use std::path::Path;

use crate::cells::{Domain, ReferenceCell};
use crate::error::{Error, Result};

const LATTICE_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
struct Block {
    start: Vec<i64>,
    shape: Vec<usize>,
    offset: usize,
}

impl Block {
    fn len(&self) -> usize {
        self.shape.iter().product()
    }
}

/// A conforming midpoint grid over a [`Domain`].
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    domain: Domain,
    h: Vec<f64>,
    blocks: Vec<Block>,
    len: usize,
}

fn lattice_index(x: f64, h: f64) -> Option<i64> {
    let q = x / h;
    let r = q.round();
    ((q - r).abs() <= LATTICE_TOL * r.abs().max(1.0)).then_some(r as i64)
}

impl Grid {
    pub fn new(domain: Domain, h: Vec<f64>) -> Result<Self> {
        let d = domain.dim();
        if h.len() != d {
            return Err(Error::shape(format!("spacing has {} entries for a {d}-dimensional domain", h.len())));
        }
        if h.iter().any(|x| !(x.is_finite() && *x > 0.0)) {
            return Err(Error::domain("grid spacing must be positive and finite"));
        }
        let mut blocks = Vec::with_capacity(domain.boxes().len());
        let mut offset = 0;
        for (b, bx) in domain.boxes().iter().enumerate() {
            let mut start = Vec::with_capacity(d);
            let mut shape = Vec::with_capacity(d);
            for (a, &ha) in h.iter().enumerate() {
                let (lo, hi) = match (lattice_index(bx.lo[a], ha), lattice_index(bx.hi[a], ha)) {
                    (Some(lo), Some(hi)) => (lo, hi),
                    _ => {
                        return Err(Error::shape(format!(
                            "box {b} edge ({}, {}) on axis {a} is not on the lattice of spacing {}",
                            bx.lo[a], bx.hi[a], ha
                        )))
                    }
                };
                start.push(lo);
                shape.push((hi - lo) as usize);
            }
            let block = Block { start, shape, offset };
            offset += block.len();
            blocks.push(block);
        }
        Ok(Grid { domain, h, blocks, len: offset })
    }

    /// Same spacing `h` on every axis.
    pub fn uniform(domain: Domain, h: f64) -> Result<Self> {
        let d = domain.dim();
        Grid::new(domain, vec![h; d])
    }

    pub fn domain(&self) -> &Domain {
        &self.domain
    }

    pub fn spacing(&self) -> &[f64] {
        &self.h
    }

    pub fn dim(&self) -> usize {
        self.h.len()
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// Volume of one grid cell.
    pub fn cell_volume(&self) -> f64 {
        self.h.iter().product()
    }

    pub fn midpoint(&self, global: &[i64]) -> Vec<f64> {
        global.iter().zip(&self.h).map(|(&i, &h)| (i as f64 + 0.5) * h).collect()
    }

    /// Number of grid cells along each edge of an `eps`-cell, which must be a
    /// whole number on every axis.
    pub fn cells_per_axis(&self, eps: f64, cell: &ReferenceCell) -> Result<Vec<usize>> {
        if cell.dim() != self.dim() {
            return Err(Error::shape("reference cell and grid dimensions differ"));
        }
        let mut out = Vec::with_capacity(self.dim());
        for (a, (&l, &h)) in cell.edges().iter().zip(&self.h).enumerate() {
            let q = eps * l / h;
            let n = q.round();
            if n < 1.0 || (q - n).abs() > 1e-9 * n {
                let m = q.round().max(1.0);
                return Err(Error::shape(format!(
                    "grid spacing {h} on axis {a} does not divide eps*l = {}; \
                     eps*l/h = {q}, required h = eps*l/m for an integer m, e.g. h = {}",
                    eps * l,
                    eps * l / m
                )));
            }
            out.push(n as usize);
        }
        Ok(out)
    }

    /// Calls `f(flat, block, global_index)` for every sample, in storage order
    /// (box by box, row-major with the last axis fastest).
    pub fn visit<F: FnMut(usize, usize, &[i64])>(&self, mut f: F) {
        let d = self.dim();
        let mut idx = vec![0i64; d];
        for (b, block) in self.blocks.iter().enumerate() {
            if block.len() == 0 {
                continue;
            }
            let mut local = vec![0usize; d];
            for k in 0..block.len() {
                for a in 0..d {
                    idx[a] = block.start[a] + local[a] as i64;
                }
                f(block.offset + k, b, &idx);
                for a in (0..d).rev() {
                    local[a] += 1;
                    if local[a] < block.shape[a] {
                        break;
                    }
                    local[a] = 0;
                }
            }
        }
    }

    /// Flat storage position of a global index inside box `block`.
    pub fn flat_index(&self, block: usize, global: &[i64]) -> Option<usize> {
        let blk = &self.blocks[block];
        let mut flat = 0usize;
        for ((&g, &start), &n) in global.iter().zip(&blk.start).zip(&blk.shape) {
            let local = g - start;
            if local < 0 || local as usize >= n {
                return None;
            }
            flat = flat * n + local as usize;
        }
        Some(blk.offset + flat)
    }

    /// Midpoints of all samples, in storage order.
    pub fn points(&self) -> Vec<Vec<f64>> {
        let mut out = Vec::with_capacity(self.len);
        self.visit(|_, _, g| out.push(self.midpoint(g)));
        out
    }
}

/// Real values at the midpoints of a [`Grid`].
#[derive(Debug, Clone, PartialEq)]
pub struct SampledFunction {
    grid: Grid,
    values: Vec<f64>,
}

impl SampledFunction {
    pub fn new(grid: Grid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::shape(format!("{} values for a grid of {} points", values.len(), grid.len())));
        }
        Ok(SampledFunction { grid, values })
    }

    pub fn from_fn<F: FnMut(&[f64]) -> f64>(grid: Grid, mut f: F) -> Self {
        let mut values = Vec::with_capacity(grid.len());
        let mut x = vec![0.0; grid.dim()];
        grid.visit(|_, _, g| {
            for a in 0..g.len() {
                x[a] = (g[a] as f64 + 0.5) * grid.h[a];
            }
            values.push(f(&x));
        });
        SampledFunction { grid, values }
    }

    pub fn constant(grid: Grid, c: f64) -> Self {
        let values = vec![c; grid.len()];
        SampledFunction { grid, values }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn map<F: Fn(f64) -> f64>(&self, f: F) -> Self {
        SampledFunction { grid: self.grid.clone(), values: self.values.iter().map(|&v| f(v)).collect() }
    }

    pub fn zip_with<F: Fn(f64, f64) -> f64>(&self, other: &SampledFunction, f: F) -> Result<Self> {
        self.check_same_grid(other)?;
        let values = self.values.iter().zip(&other.values).map(|(&a, &b)| f(a, b)).collect();
        Ok(SampledFunction { grid: self.grid.clone(), values })
    }

    /// Zeroes the samples where `mask` is false.
    pub fn masked(&self, mask: &[bool]) -> Result<Self> {
        if mask.len() != self.values.len() {
            return Err(Error::shape("mask length differs from the grid size"));
        }
        let values = self.values.iter().zip(mask).map(|(&v, &m)| if m { v } else { 0.0 }).collect();
        Ok(SampledFunction { grid: self.grid.clone(), values })
    }

    pub fn check_same_grid(&self, other: &SampledFunction) -> Result<()> {
        if self.grid != other.grid {
            return Err(Error::shape("functions live on different grids"));
        }
        Ok(())
    }

    /// Reads the CSV exchange format: a `# h=<spacing> boxes=<domain>` header
    /// followed by one value per midpoint in storage order.
    pub fn read_csv(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let header = lines.next().ok_or_else(|| Error::config(format!("{} is empty", path.display())))?;
        let header = header
            .trim()
            .strip_prefix('#')
            .ok_or_else(|| Error::config("function CSV must start with `# h=<spacing> boxes=<domain>`"))?;
        let mut h = None;
        let mut boxes = None;
        for field in header.split_whitespace() {
            if let Some(v) = field.strip_prefix("h=") {
                h = Some(
                    v.split(',')
                        .map(|x| x.parse::<f64>().map_err(|e| Error::config(format!("bad spacing `{x}`: {e}"))))
                        .collect::<Result<Vec<_>>>()?,
                );
            } else if let Some(v) = field.strip_prefix("boxes=") {
                boxes = Some(Domain::from_spec(v)?);
            }
        }
        let (h, domain) = match (h, boxes) {
            (Some(h), Some(d)) => (h, d),
            _ => return Err(Error::config("function CSV header needs both h= and boxes=")),
        };
        let h = if h.len() == 1 { vec![h[0]; domain.dim()] } else { h };
        let grid = Grid::new(domain, h)?;
        let values = lines
            .enumerate()
            .map(|(i, l)| {
                l.trim().parse::<f64>().map_err(|e| Error::config(format!("value on data line {}: {e}", i + 1)))
            })
            .collect::<Result<Vec<_>>>()?;
        SampledFunction::new(grid, values)
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let h = self.grid.h.iter().map(|x| format!("{x}")).collect::<Vec<_>>().join(",");
        let mut out = format!("# h={h} boxes={}\n", self.grid.domain);
        for v in &self.values {
            out.push_str(&crate::report::fmt_g17(*v));
            out.push('\n');
        }
        std::fs::write(path, out)?;
        Ok(())
    }
}
