//! Modular integrals, Luxemburg norms and the duality pairing.
//!
//! All integrals use the midpoint rule on the sample grid and the pairwise
//! reduction from [`crate::reduce`]. The weighted variants take a flat slice of
//! samples and the common quadrature weight, so the same solver serves
//! functions on `Omega`, on `Omega x Y`, and on the unfolded cell layout.

use crate::error::{Error, Result};
use crate::nfunc::NFunction;
use crate::reduce::{pairwise_dot, pairwise_map_sum};
use crate::sampled::SampledFunction;

pub const DEFAULT_REL_TOL: f64 = 1e-10;

/// `int B(|u|/k)` together with the scaling it was computed for.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModularValue {
    pub value: f64,
    pub k: f64,
}

pub fn modular_value(u: &SampledFunction, nf: &NFunction, k: f64) -> Result<ModularValue> {
    let value = modular_weighted(u.values(), u.grid().cell_volume(), nf, k)?;
    Ok(ModularValue { value, k })
}

/// `weight * sum_i B(|v_i| / k)`.
pub fn modular_weighted(values: &[f64], weight: f64, nf: &NFunction, k: f64) -> Result<f64> {
    if !(k > 0.0 && k.is_finite()) {
        return Err(Error::domain(format!("modular scaling k must be positive, got {k}")));
    }
    Ok(weight * pairwise_map_sum(values, &|v| nf.value(v.abs() / k)))
}

pub fn luxemburg_norm(u: &SampledFunction, nf: &NFunction, rel_tol: f64) -> Result<f64> {
    luxemburg_weighted(u.values(), u.grid().cell_volume(), nf, rel_tol)
}

/// `inf { k > 0 : weight * sum_i B(|v_i|/k) <= 1 }` by bisection.
///
/// The bracket starts at `max |v|` and is widened by doubling or halving. The
/// upper end is returned, so the modular at the returned `k` is at most one.
pub fn luxemburg_weighted(values: &[f64], weight: f64, nf: &NFunction, rel_tol: f64) -> Result<f64> {
    if !(rel_tol > 0.0 && rel_tol < 1.0) {
        return Err(Error::domain(format!("rel_tol must lie in (0, 1), got {rel_tol}")));
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::domain("function has non-finite samples"));
    }
    let peak = values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if peak == 0.0 || weight == 0.0 {
        return Ok(0.0);
    }
    let modular = |k: f64| weight * pairwise_map_sum(values, &|v| nf.value(v.abs() / k));

    const MAX_STEPS: usize = 4000;
    let (mut lo, mut hi);
    if modular(peak) <= 1.0 {
        hi = peak;
        lo = 0.5 * peak;
        let mut steps = 0;
        while modular(lo) <= 1.0 {
            hi = lo;
            lo *= 0.5;
            steps += 1;
            if steps > MAX_STEPS || lo == 0.0 {
                return Err(Error::domain("could not bracket the Luxemburg norm from below"));
            }
        }
    } else {
        lo = peak;
        hi = 2.0 * peak;
        let mut steps = 0;
        while modular(hi) > 1.0 {
            lo = hi;
            hi *= 2.0;
            steps += 1;
            if steps > MAX_STEPS || !hi.is_finite() {
                return Err(Error::domain("could not bracket the Luxemburg norm from above"));
            }
        }
    }
    while hi - lo > rel_tol * hi {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if modular(mid) <= 1.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(hi)
}

/// `int u v` by the midpoint rule.
pub fn dual_pairing(u: &SampledFunction, v: &SampledFunction) -> Result<f64> {
    u.check_same_grid(v)?;
    Ok(u.grid().cell_volume() * pairwise_dot(u.values(), v.values()))
}
