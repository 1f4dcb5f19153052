//! N-functions, their Young conjugates, and doubling-growth certificates.

use std::f64::consts::E;
use std::path::Path;

use crate::error::{Error, Result};

/// An N-function `B: [0, inf) -> [0, inf)`.
///
/// The closed-form families are evaluated directly. `Tabulated` stores node
/// values of `B` together with its density `b = B'`, and reconstructs `B`
/// between nodes from the linearly interpolated density.
#[derive(Debug, Clone, PartialEq)]
pub enum NFunction {
    /// `t^p`, `p > 1`.
    Power(f64),
    /// `t^p ln(e + t)`, `p > 1`.
    PowerLog(f64),
    /// `e^t - t - 1`. Grows too fast for the doubling condition.
    Exp,
    Tabulated(Table),
}

/// Node data of a tabulated N-function.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    t: Vec<f64>,
    density: Vec<f64>,
    value: Vec<f64>,
}

impl Table {
    /// Builds `B` from samples of its density; node values come from the
    /// trapezoid rule.
    pub fn from_density(t: Vec<f64>, density: Vec<f64>) -> Result<Self> {
        validate_nodes(&t, &density)?;
        let mut value = Vec::with_capacity(t.len());
        value.push(0.0);
        for i in 1..t.len() {
            let step = 0.5 * (t[i] - t[i - 1]) * (density[i] + density[i - 1]);
            value.push(value[i - 1] + step);
        }
        Ok(Table { t, density, value })
    }

    /// Builds `B` from node values and densities computed elsewhere.
    pub fn from_values(t: Vec<f64>, density: Vec<f64>, value: Vec<f64>) -> Result<Self> {
        validate_nodes(&t, &density)?;
        if value.len() != t.len() {
            return Err(Error::domain("table value column has the wrong length"));
        }
        if value[0] != 0.0 || value.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::domain("table values must be finite, nonnegative and start at 0"));
        }
        Ok(Table { t, density, value })
    }

    /// Reads a two-column `t,b(t)` CSV. A non-numeric first row is treated as a header.
    pub fn read_csv(path: &Path) -> Result<Self> {
        let mut reader =
            csv::ReaderBuilder::new().has_headers(false).trim(csv::Trim::All).comment(Some(b'#')).from_path(path)?;
        let mut t = Vec::new();
        let mut b = Vec::new();
        for (row, record) in reader.records().enumerate() {
            let record = record?;
            if record.len() != 2 {
                return Err(Error::config(format!(
                    "{}: row {} has {} columns, expected 2",
                    path.display(),
                    row + 1,
                    record.len()
                )));
            }
            let parsed = (record[0].parse::<f64>(), record[1].parse::<f64>());
            match parsed {
                (Ok(x), Ok(y)) => {
                    t.push(x);
                    b.push(y);
                }
                _ if row == 0 => continue,
                _ => return Err(Error::config(format!("{}: row {} is not numeric", path.display(), row + 1))),
            }
        }
        Table::from_density(t, b)
    }

    pub fn nodes(&self) -> &[f64] {
        &self.t
    }

    pub fn densities(&self) -> &[f64] {
        &self.density
    }

    pub fn values(&self) -> &[f64] {
        &self.value
    }

    fn segment(&self, t: f64) -> usize {
        self.t.partition_point(|&x| x <= t).saturating_sub(1)
    }

    // Piecewise quadratic reconstruction: trapezoid of the linear density from
    // the left node, plus a linear correction so node values are reproduced.
    fn eval(&self, t: f64) -> f64 {
        let n = self.t.len();
        let i = self.segment(t);
        if i + 1 >= n {
            let (last, prev) = (n - 1, n - 2);
            let slope = (self.density[last] - self.density[prev]) / (self.t[last] - self.t[prev]);
            let dt = t - self.t[last];
            return self.value[last] + self.density[last] * dt + 0.5 * slope * dt * dt;
        }
        let width = self.t[i + 1] - self.t[i];
        let theta = t - self.t[i];
        let (b0, b1) = (self.density[i], self.density[i + 1]);
        let bt = b0 + (b1 - b0) * theta / width;
        let correction = self.value[i + 1] - self.value[i] - 0.5 * width * (b0 + b1);
        self.value[i] + 0.5 * theta * (b0 + bt) + correction * theta / width
    }

    fn eval_density(&self, t: f64) -> f64 {
        let n = self.t.len();
        let i = self.segment(t);
        if i + 1 >= n {
            let (last, prev) = (n - 1, n - 2);
            let slope = (self.density[last] - self.density[prev]) / (self.t[last] - self.t[prev]);
            return self.density[last] + slope * (t - self.t[last]);
        }
        let width = self.t[i + 1] - self.t[i];
        let (b0, b1) = (self.density[i], self.density[i + 1]);
        let correction = self.value[i + 1] - self.value[i] - 0.5 * width * (b0 + b1);
        b0 + (b1 - b0) * (t - self.t[i]) / width + correction / width
    }
}

fn validate_nodes(t: &[f64], density: &[f64]) -> Result<()> {
    if t.len() < 2 || t.len() != density.len() {
        return Err(Error::domain("a table needs at least two (t, b) rows of equal length"));
    }
    if t[0] != 0.0 {
        return Err(Error::domain("table must start at t = 0"));
    }
    if t.windows(2).any(|w| w[1].partial_cmp(&w[0]) != Some(std::cmp::Ordering::Greater))
        || t.iter().any(|x| !x.is_finite())
    {
        return Err(Error::domain("table t column must be finite and strictly increasing"));
    }
    if density.iter().any(|b| !b.is_finite() || *b < 0.0) {
        return Err(Error::domain("table density must be finite and nonnegative"));
    }
    if density.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::domain("table density must be nondecreasing"));
    }
    Ok(())
}

impl NFunction {
    pub fn power(p: f64) -> Result<Self> {
        if !(p > 1.0 && p.is_finite()) {
            return Err(Error::domain(format!("power exponent must be > 1, got {p}")));
        }
        Ok(NFunction::Power(p))
    }

    pub fn power_log(p: f64) -> Result<Self> {
        if !(p > 1.0 && p.is_finite()) {
            return Err(Error::domain(format!("power_log exponent must be > 1, got {p}")));
        }
        Ok(NFunction::PowerLog(p))
    }

    /// Parses `power:<p>`, `power_log:<p>`, `exp` or `table:<path>`.
    pub fn from_spec(spec: &str) -> Result<Self> {
        let spec = spec.trim();
        let (kind, arg) = match spec.split_once(':') {
            Some((k, a)) => (k.trim(), Some(a.trim())),
            None => (spec, None),
        };
        let exponent = |a: Option<&str>| -> Result<f64> {
            a.ok_or_else(|| Error::config(format!("`{kind}` needs an exponent, e.g. {kind}:2.0")))?
                .parse::<f64>()
                .map_err(|e| Error::config(format!("bad exponent in `{spec}`: {e}")))
        };
        match kind {
            "power" => NFunction::power(exponent(arg)?),
            "power_log" => NFunction::power_log(exponent(arg)?),
            "exp" if arg.is_none() => Ok(NFunction::Exp),
            "table" => {
                let path = arg
                    .filter(|a| !a.is_empty())
                    .ok_or_else(|| Error::config("`table` needs a path, e.g. table:density.csv"))?;
                Ok(NFunction::Tabulated(Table::read_csv(Path::new(path))?))
            }
            _ => Err(Error::config(format!("unknown N-function `{spec}`"))),
        }
    }

    /// `B(t)`, rejecting negative or non-finite arguments.
    pub fn eval(&self, t: f64) -> Result<f64> {
        if !(t.is_finite() && t >= 0.0) {
            return Err(Error::domain(format!("N-function argument must be finite and >= 0, got {t}")));
        }
        Ok(self.value(t))
    }

    /// `B(t)` for an argument already known to be finite and nonnegative.
    #[inline]
    pub fn value(&self, t: f64) -> f64 {
        if t == 0.0 {
            return 0.0;
        }
        match self {
            NFunction::Power(p) => t.powf(*p),
            NFunction::PowerLog(p) => t.powf(*p) * (E + t).ln(),
            NFunction::Exp => {
                if t < 1e-3 {
                    let t2 = t * t;
                    t2 * (0.5 + t * (1.0 / 6.0 + t * (1.0 / 24.0 + t / 120.0)))
                } else {
                    t.exp_m1() - t
                }
            }
            NFunction::Tabulated(table) => table.eval(t),
        }
    }

    /// The density `b = B'` (right derivative for tabulated functions).
    pub fn density(&self, t: f64) -> f64 {
        match self {
            NFunction::Power(p) => p * t.powf(p - 1.0),
            NFunction::PowerLog(p) => {
                if t == 0.0 {
                    0.0
                } else {
                    p * t.powf(p - 1.0) * (E + t).ln() + t.powf(*p) / (E + t)
                }
            }
            NFunction::Exp => t.exp_m1(),
            NFunction::Tabulated(table) => table.eval_density(t),
        }
    }
}

/// Outcome of a doubling-growth check on a bounded range.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Delta2Certificate {
    /// Largest `B(2t)/B(t)` seen on the grid.
    pub alpha: f64,
    pub t0: f64,
    pub t_max: f64,
    pub satisfied: bool,
}

/// Young conjugate `sup_{s >= 0} (s t - B(s))`, tabulated.
///
/// The inner variable runs over a log grid on `[s_max * 1e-9, s_max]` (plus
/// `s = 0`); the grid maximiser is refined by golden-section search, which is
/// valid because the objective is concave in `s`. Output nodes are log-spaced
/// in `t` over the range of chord slopes of `B` on the same interval, so
/// every node's maximiser lies inside `[0, s_max]`.
pub fn complementary(nf: &NFunction, s_max: f64, grid_size: usize) -> Result<NFunction> {
    if !(s_max > 0.0 && s_max.is_finite()) {
        return Err(Error::domain(format!("s_max must be positive and finite, got {s_max}")));
    }
    if grid_size < 2 {
        return Err(Error::domain("grid_size must be at least 2"));
    }
    let s_min = s_max * 1e-9;
    let mut s_grid = Vec::with_capacity(grid_size + 1);
    s_grid.push(0.0);
    s_grid.extend(log_space(s_min, s_max, grid_size));

    let t_lo = nf.value(s_min) / s_min;
    let t_hi = (nf.value(s_max) - nf.value(0.5 * s_max)) / (0.5 * s_max);
    if !(t_hi.is_finite() && t_hi > t_lo && t_lo > 0.0) {
        return Err(Error::domain(format!(
            "cannot tabulate the conjugate on s in [0, {s_max}]: chord slopes [{t_lo}, {t_hi}]"
        )));
    }

    let mut t_nodes = vec![0.0];
    let mut values = vec![0.0];
    let mut argmax = vec![0.0];
    let mut j = 0usize;
    for t in log_space(t_lo, t_hi, grid_size) {
        let objective = |s: f64| s * t - nf.value(s);
        // The grid maximiser is nondecreasing in t.
        while j + 1 < s_grid.len() && objective(s_grid[j + 1]) >= objective(s_grid[j]) {
            j += 1;
        }
        let lo = s_grid[j.saturating_sub(1)];
        let hi = s_grid[(j + 1).min(s_grid.len() - 1)];
        let (s_star, g_star) = golden_max(&objective, lo, hi);
        let (s_best, g_best) =
            if g_star >= objective(s_grid[j]) { (s_star, g_star) } else { (s_grid[j], objective(s_grid[j])) };
        let prev_value = *values.last().unwrap();
        let prev_arg = *argmax.last().unwrap();
        t_nodes.push(t);
        values.push(g_best.max(prev_value));
        argmax.push(s_best.max(prev_arg));
    }
    Ok(NFunction::Tabulated(Table::from_values(t_nodes, argmax, values)?))
}

fn golden_max<F: Fn(f64) -> f64>(f: &F, mut a: f64, mut b: f64) -> (f64, f64) {
    const INV_PHI: f64 = 0.618_033_988_749_894_8;
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..200 {
        if (b - a) <= 1e-15 * b.abs().max(f64::MIN_POSITIVE) {
            break;
        }
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = f(d);
        }
    }
    if fc >= fd {
        (c, fc)
    } else {
        (d, fd)
    }
}

/// `n` log-spaced points from `lo` to `hi` inclusive.
pub(crate) fn log_space(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![lo];
    }
    let (a, b) = (lo.ln(), hi.ln());
    (0..n).map(|i| if i + 1 == n { hi } else { (a + (b - a) * i as f64 / (n - 1) as f64).exp() }).collect()
}

/// Checks `B(2t) <= alpha B(t)` on a log grid over `[max(t0, tiny), t_max]`.
///
/// `satisfied` requires a finite `alpha` and a ratio sequence whose tail (the
/// largest ratio over the last quarter of the grid) stays within ten times the
/// median ratio.
pub fn check_delta2(nf: &NFunction, t0: f64, t_max: f64, grid_size: usize) -> Result<Delta2Certificate> {
    if !(t0 >= 0.0 && t0.is_finite() && t_max.is_finite()) || t0 >= t_max {
        return Err(Error::domain(format!("need 0 <= t0 < t_max, got t0={t0}, t_max={t_max}")));
    }
    if grid_size < 2 {
        return Err(Error::domain("grid_size must be at least 2"));
    }
    let lo = t0.max(1e-12 * t_max);
    let ratios: Vec<f64> = log_space(lo, t_max, grid_size)
        .into_iter()
        .map(|t| {
            let bt = nf.value(t);
            if bt > 0.0 {
                nf.value(2.0 * t) / bt
            } else {
                f64::INFINITY
            }
        })
        .collect();
    let alpha = ratios.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mut sorted = ratios.clone();
    sorted.sort_by(f64::total_cmp);
    let median = sorted[sorted.len() / 2];
    let tail_start = ratios.len() - (ratios.len() / 4).max(1);
    let tail = ratios[tail_start..].iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let satisfied = alpha.is_finite() && ratios.iter().all(|r| r.is_finite()) && tail <= 10.0 * median;
    Ok(Delta2Certificate { alpha, t0, t_max, satisfied })
}

/// Certifies the `nabla_2` condition of `B` as the doubling condition of its
/// conjugate. The conjugate table is sized so that it covers `[0, 2 t_max]`.
pub fn check_nabla2(nf: &NFunction, t0: f64, t_max: f64, grid_size: usize) -> Result<Delta2Certificate> {
    if !(t0 >= 0.0 && t_max.is_finite()) || t0 >= t_max {
        return Err(Error::domain(format!("need 0 <= t0 < t_max, got t0={t0}, t_max={t_max}")));
    }
    let mut s_max = 1.0f64;
    for _ in 0..2000 {
        let chord = (nf.value(s_max) - nf.value(0.5 * s_max)) / (0.5 * s_max);
        if chord >= 2.0 * t_max * 1.01 {
            break;
        }
        s_max *= 2.0;
    }
    let conjugate = complementary(nf, s_max, grid_size.max(64))?;
    check_delta2(&conjugate, t0, t_max, grid_size)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / b.abs().max(f64::MIN_POSITIVE)
    }

    // Independent oracle: brute-force sup over a dense uniform grid.
    fn dense_sup(nf: &NFunction, t: f64, s_hi: f64, n: usize) -> f64 {
        (0..=n)
            .map(|i| {
                let s = s_hi * i as f64 / n as f64;
                s * t - nf.value(s)
            })
            .fold(0.0, f64::max)
    }

    #[test]
    fn closed_form_values() {
        assert_eq!(NFunction::Power(2.0).eval(3.0).unwrap(), 9.0);
        for nf in [NFunction::Power(2.0), NFunction::PowerLog(2.0), NFunction::Exp] {
            assert_eq!(nf.eval(0.0).unwrap(), 0.0);
        }
        let v = NFunction::PowerLog(2.0).eval(1.0).unwrap();
        assert!((v - (E + 1.0).ln()).abs() < 1e-15);
        assert!((v - 1.313_261_687_518_223).abs() < 1e-6);
    }

    #[test]
    fn power_log_matches_trapezoid_of_its_density() {
        let nf = NFunction::PowerLog(2.0);
        let n = 20_000;
        let trap: f64 = (0..n)
            .map(|i| {
                let (a, b) = (i as f64 / n as f64, (i + 1) as f64 / n as f64);
                0.5 * (b - a) * (nf.density(a) + nf.density(b))
            })
            .sum();
        assert!(rel(trap, nf.eval(1.0).unwrap()) < 1e-8);
    }

    #[test]
    fn exp_series_branch_is_continuous() {
        let nf = NFunction::Exp;
        let below = nf.value(1e-3 * (1.0 - 1e-12));
        let above = nf.value(1e-3);
        assert!(rel(below, above) < 1e-9);
        assert!(rel(nf.value(2.0), 2f64.exp() - 3.0) < 1e-15);
    }

    #[test]
    fn rejects_bad_arguments() {
        assert!(matches!(NFunction::Power(2.0).eval(-1.0), Err(Error::Domain(_))));
        assert!(matches!(NFunction::Power(2.0).eval(f64::NAN), Err(Error::Domain(_))));
        assert!(NFunction::power(1.0).is_err());
        assert!(complementary(&NFunction::Power(2.0), 0.0, 10).is_err());
        assert!(complementary(&NFunction::Power(2.0), 1.0, 1).is_err());
        assert!(matches!(check_delta2(&NFunction::Power(2.0), 2.0, 1.0, 10), Err(Error::Domain(_))));
    }

    #[test]
    fn spec_strings() {
        assert_eq!(NFunction::from_spec("power:2.0").unwrap(), NFunction::Power(2.0));
        assert_eq!(NFunction::from_spec("power_log:3").unwrap(), NFunction::PowerLog(3.0));
        assert_eq!(NFunction::from_spec("exp").unwrap(), NFunction::Exp);
        assert!(NFunction::from_spec("cosh").is_err());
        assert!(NFunction::from_spec("power").is_err());
        assert!(NFunction::from_spec("power:0.5").is_err());
    }

    #[test]
    fn table_from_csv() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("b.csv");
        std::fs::write(&path, "t,b\n0,0\n1,1\n2,2\n").unwrap();
        let nf = NFunction::from_spec(&format!("table:{}", path.display())).unwrap();
        // density t => B(t) = t^2 / 2, reproduced exactly by the trapezoid rule
        assert!((nf.eval(1.5).unwrap() - 1.125).abs() < 1e-15);
        assert!((nf.eval(3.0).unwrap() - 4.5).abs() < 1e-15);

        std::fs::write(&path, "0,0\n1,2\n0.5,3\n").unwrap();
        assert!(Table::read_csv(&path).is_err());
        std::fs::write(&path, "0.1,0\n1,2\n").unwrap();
        assert!(Table::read_csv(&path).is_err());
    }

    #[test]
    fn conjugate_of_square_is_quarter_square() {
        let nf = NFunction::Power(2.0);
        let conj = complementary(&nf, 1e4, 2000).unwrap();
        assert_eq!(conj.eval(0.0).unwrap(), 0.0);
        let NFunction::Tabulated(table) = &conj else { panic!() };
        for (&s, &v) in table.nodes().iter().zip(table.values()).skip(1) {
            assert!(rel(v, s * s / 4.0) <= 1e-6, "s={s} got {v}");
        }
        for s in [0.37, 2.5, 11.0] {
            let oracle = dense_sup(&nf, s, 2.0 * s, 200_000);
            assert!(rel(conj.value(s), oracle) < 1e-6);
        }
    }

    #[test]
    fn conjugate_of_power_over_p() {
        for p in [1.5, 3.0] {
            let q = p / (p - 1.0);
            // t^p / p from its density t^(p-1)
            let mut t = vec![0.0];
            t.extend(log_space(1e-12, 20.0, 40_000));
            let b: Vec<f64> = t.iter().map(|x: &f64| x.powf(p - 1.0)).collect();
            let nf = NFunction::Tabulated(Table::from_density(t, b).unwrap());
            let conj = complementary(&nf, 10.0, 2000).unwrap();
            let NFunction::Tabulated(table) = &conj else { panic!() };
            for (&s, &v) in table.nodes().iter().zip(table.values()).skip(1) {
                if s < 1e-2 {
                    continue;
                }
                let exact = s.powf(q) / q;
                assert!(rel(v, exact) <= 1e-6, "p={p} s={s} got {v} want {exact}");
            }
            let s = 1.3;
            let oracle = dense_sup(&nf, s, 5.0, 400_000);
            assert!(rel(conj.value(s), oracle) < 1e-6);
        }
    }

    #[test]
    fn conjugate_is_convex_at_nodes() {
        for nf in [NFunction::Power(3.0), NFunction::PowerLog(2.0), NFunction::Exp] {
            let conj = complementary(&nf, 20.0, 500).unwrap();
            let NFunction::Tabulated(table) = &conj else { panic!() };
            let (t, v) = (table.nodes(), table.values());
            for i in 1..t.len() - 1 {
                let left = (v[i] - v[i - 1]) / (t[i] - t[i - 1]);
                let right = (v[i + 1] - v[i]) / (t[i + 1] - t[i]);
                assert!(right >= left * (1.0 - 1e-9) - 1e-15, "{nf:?} node {i}");
            }
        }
    }

    #[test]
    fn double_conjugate_recovers_power() {
        for p in [2.0, 3.0] {
            let nf = NFunction::Power(p);
            let once = complementary(&nf, 1e3, 2000).unwrap();
            let twice = complementary(&once, 1e4, 2000).unwrap();
            for t in [0.05f64, 0.3, 1.0, 4.0, 20.0] {
                let exact = t.powf(p);
                assert!(rel(twice.value(t), exact) < 1e-4, "p={p} t={t}: {}", twice.value(t));
            }
        }
    }

    #[test]
    fn delta2_certificates() {
        let c = check_delta2(&NFunction::Power(2.0), 0.0, 1e6, 400).unwrap();
        assert!((c.alpha - 4.0).abs() <= 1e-12);
        assert!(c.satisfied);

        let c = check_delta2(&NFunction::PowerLog(2.0), 1.0, 1e6, 400).unwrap();
        assert!(c.satisfied && c.alpha <= 8.0, "{c:?}");

        let c = check_delta2(&NFunction::Exp, 1.0, 50.0, 400).unwrap();
        assert!(!c.satisfied, "{c:?}");
    }

    #[test]
    fn nabla2_certificates() {
        let c = check_nabla2(&NFunction::Power(2.0), 1.0, 100.0, 400).unwrap();
        assert!(c.satisfied);
        assert!((c.alpha - 4.0).abs() < 1e-4, "{c:?}");
        let c = check_nabla2(&NFunction::PowerLog(2.0), 1.0, 100.0, 400).unwrap();
        assert!(c.satisfied, "{c:?}");
    }
}
