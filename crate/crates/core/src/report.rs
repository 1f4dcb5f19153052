//! CSV and SVG output of study reports.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::study::{StudyReport, StudyRow};

pub const REPORT_HEADER: [&str; 5] = ["eps", "error", "bound", "norm", "lambda_measure"];

/// Formats like C's `%.17g`: shortest of fixed or exponent notation with 17
/// significant digits, trailing zeros removed.
pub fn fmt_g17(x: f64) -> String {
    if x == 0.0 {
        return if x.is_sign_negative() { "-0".into() } else { "0".into() };
    }
    if !x.is_finite() {
        return if x.is_nan() {
            "nan".into()
        } else if x > 0.0 {
            "inf".into()
        } else {
            "-inf".into()
        };
    }
    const P: i32 = 17;
    let sci = format!("{:.*e}", (P - 1) as usize, x);
    let (mantissa, exp) = sci.split_once('e').expect("exponent notation");
    let exp: i32 = exp.parse().expect("integer exponent");
    if !(-4..P).contains(&exp) {
        let mantissa = trim_zeros(mantissa);
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{mantissa}e{sign}{:02}", exp.abs())
    } else {
        let decimals = (P - 1 - exp).max(0) as usize;
        trim_zeros(&format!("{x:.decimals$}")).to_string()
    }
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

/// Writes the report CSV to `path` and, for two or more rows, a log-log chart
/// next to it (same stem, `.svg`). Returns the chart path if one was written.
pub fn emit_report(rep: &StudyReport, path: &Path) -> Result<Option<PathBuf>> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(REPORT_HEADER)?;
    for r in &rep.rows {
        w.write_record([r.eps, r.error, r.bound, r.norm, r.lambda_measure].map(fmt_g17))?;
    }
    w.flush()?;
    if rep.rows.len() < 2 {
        return Ok(None);
    }
    let svg_path = path.with_extension("svg");
    std::fs::write(&svg_path, render_svg(rep))?;
    Ok(Some(svg_path))
}

pub fn read_report_csv(path: &Path) -> Result<Vec<StudyRow>> {
    let mut r = csv::Reader::from_path(path)?;
    let header: Vec<String> = r.headers()?.iter().map(str::to_string).collect();
    if header != REPORT_HEADER {
        return Err(Error::shape(format!("unexpected report header {header:?}")));
    }
    let mut rows = Vec::new();
    for rec in r.records() {
        let rec = rec?;
        let v: Vec<f64> = rec
            .iter()
            .map(|s| s.parse::<f64>().map_err(|e| Error::shape(format!("bad number `{s}`: {e}"))))
            .collect::<Result<_>>()?;
        rows.push(StudyRow { eps: v[0], error: v[1], bound: v[2], norm: v[3], lambda_measure: v[4] });
    }
    Ok(rows)
}

fn render_svg(rep: &StudyReport) -> String {
    const W: f64 = 640.0;
    const H: f64 = 420.0;
    const PAD: f64 = 60.0;
    type Series = (&'static str, &'static str, fn(&StudyRow) -> f64);
    let series: [Series; 2] = [("error", "#c0392b", |r| r.error), ("bound", "#2c3e50", |r| r.bound)];

    let xs: Vec<f64> = rep.rows.iter().map(|r| r.eps.log10()).collect();
    let ys: Vec<f64> = rep
        .rows
        .iter()
        .flat_map(|r| series.iter().map(move |(_, _, f)| f(r)))
        .filter(|v| *v > 0.0 && v.is_finite())
        .map(f64::log10)
        .collect();
    let (x0, x1) = bounds(&xs);
    let (y0, y1) = if ys.is_empty() { (-1.0, 0.0) } else { bounds(&ys) };
    let px = |x: f64| PAD + (x - x0) / (x1 - x0) * (W - 2.0 * PAD);
    let py = |y: f64| H - PAD - (y - y0) / (y1 - y0) * (H - 2.0 * PAD);

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<rect x="{PAD}" y="{PAD}" width="{}" height="{}" fill="none" stroke="black"/>"#,
        W - 2.0 * PAD,
        H - 2.0 * PAD
    );
    let _ = writeln!(
        s,
        r#"<text x="{}" y="{}" text-anchor="middle">{} study (log10 axes)</text>"#,
        W / 2.0,
        PAD / 2.0,
        rep.kind.name()
    );
    let _ = writeln!(s, r#"<text x="{}" y="{}" text-anchor="middle">log10 eps</text>"#, W / 2.0, H - 15.0);
    for (x, label) in [(x0, x0), (x1, x1)] {
        let _ = writeln!(s, r#"<text x="{:.1}" y="{}" text-anchor="middle">{label:.2}</text>"#, px(x), H - PAD + 16.0);
    }
    for (y, label) in [(y0, y0), (y1, y1)] {
        let _ = writeln!(s, r#"<text x="{}" y="{:.1}" text-anchor="end">{label:.2}</text>"#, PAD - 6.0, py(y) + 4.0);
    }
    for (k, (name, color, f)) in series.iter().enumerate() {
        let pts: Vec<String> = rep
            .rows
            .iter()
            .filter(|r| f(r) > 0.0 && f(r).is_finite())
            .map(|r| format!("{:.2},{:.2}", px(r.eps.log10()), py(f(r).log10())))
            .collect();
        if !pts.is_empty() {
            let _ =
                writeln!(s, r#"<polyline fill="none" stroke="{color}" stroke-width="2" points="{}"/>"#, pts.join(" "));
        }
        let ly = PAD + 16.0 + 16.0 * k as f64;
        let _ = writeln!(s, r#"<text x="{}" y="{ly}" fill="{color}">{name}</text>"#, W - PAD - 60.0);
    }
    s.push_str("</svg>\n");
    s
}

fn bounds(v: &[f64]) -> (f64, f64) {
    let lo = v.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if hi - lo < 1e-9 {
        (lo - 0.5, hi + 0.5)
    } else {
        (lo, hi)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::study::StudyKind;

    #[test]
    fn g17_matches_printf() {
        assert_eq!(fmt_g17(0.1), "0.10000000000000001");
        assert_eq!(fmt_g17(1.0), "1");
        assert_eq!(fmt_g17(0.5), "0.5");
        assert_eq!(fmt_g17(-2.25), "-2.25");
        assert_eq!(fmt_g17(1e-5), "1.0000000000000001e-05");
        assert_eq!(fmt_g17(1e20), "1e+20");
        assert_eq!(fmt_g17(123456.0), "123456");
        assert_eq!(fmt_g17(0.0), "0");
        for x in [0.1, 1.0 / 3.0, 6.02e23, 2.5e-300, 0.3] {
            assert_eq!(fmt_g17(x).parse::<f64>().unwrap(), x);
        }
    }

    #[test]
    fn csv_round_trip_with_chart() {
        let dir = tempfile::tempdir().unwrap();
        let rows = vec![
            StudyRow { eps: 0.5, error: 0.25, bound: 0.5, norm: 1.0, lambda_measure: 0.0 },
            StudyRow { eps: 0.3, error: 0.1, bound: 0.3, norm: 1.0, lambda_measure: 0.1 },
        ];
        let rep = StudyReport {
            kind: StudyKind::Strong,
            metadata: Vec::new(),
            rows: rows.clone(),
            diagnostics: vec![Vec::new(); 2],
            checks: Vec::new(),
        };
        let path = dir.path().join("out.csv");
        let svg = emit_report(&rep, &path).unwrap().unwrap();
        assert_eq!(read_report_csv(&path).unwrap(), rows);
        assert!(std::fs::read_to_string(svg).unwrap().starts_with("<svg"));
        let text = std::fs::read_to_string(&path).unwrap();
        assert!(text.starts_with("eps,error,bound,norm,lambda_measure\n"));
    }
}
