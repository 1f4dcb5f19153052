//! Command-line front end.
//!
//! Exit codes: 0 success, 1 usage or input error, 2 failed study assertion,
//! 3 I/O error.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};

use crate::cells::{decompose, Domain, ReferenceCell};
use crate::error::{Error, Result};
use crate::expr::parse_expression;
use crate::modular::{luxemburg_norm, DEFAULT_REL_TOL};
use crate::nfunc::NFunction;
use crate::report::{emit_report, fmt_g17, REPORT_HEADER};
use crate::sampled::{Grid, SampledFunction};
use crate::study::{run_study, StudyConfig};
use crate::unfold::{cell_grid, unfold};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_ASSERTION: i32 = 2;
pub const EXIT_IO: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "orlicz-unfold", version, about = "Periodic unfolding in Orlicz spaces on sampled grids")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Print the Luxemburg norm of a sampled function.
    Norm {
        /// N-function: power:<p>, power_log:<p>, exp or table:<csv path>.
        #[arg(long)]
        nfunction: String,
        /// Domain as a union of boxes, e.g. `box:0,0;1,1+box:2,0;3,1`.
        #[arg(long)]
        domain: String,
        /// An expression in x0..x{d-1}, or a CSV file of midpoint samples.
        #[arg(long)]
        function: String,
        /// Grid spacing used when sampling an expression.
        #[arg(long, default_value_t = 1e-3)]
        h: f64,
        /// Relative bisection tolerance.
        #[arg(long, default_value_t = DEFAULT_REL_TOL)]
        rel_tol: f64,
    },
    /// Print the number of eps-cells inside the domain and the remainder measure.
    Decompose {
        #[arg(long)]
        domain: String,
        #[arg(long)]
        eps: f64,
        /// Reference cell edge lengths, e.g. `1,1`. Defaults to the unit cell.
        #[arg(long)]
        cell: Option<String>,
        /// Also print the cell indices as CSV.
        #[arg(long)]
        list: bool,
    },
    /// Write the unfolded samples of a function as CSV.
    Unfold {
        #[arg(long)]
        domain: String,
        #[arg(long)]
        eps: f64,
        /// Grid spacing; eps times each cell edge must be a multiple of it.
        #[arg(long)]
        h: f64,
        /// An expression in x0..x{d-1}.
        #[arg(long)]
        function: String,
        #[arg(long)]
        cell: Option<String>,
        /// Output CSV with columns xi_0.., y_0.., value.
        #[arg(long)]
        out: PathBuf,
    },
    /// Run an eps-sweep study from a config file.
    Study {
        #[arg(long)]
        config: PathBuf,
    },
}

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let args: Vec<OsString> = args.into_iter().map(Into::into).collect();
    if args.len() <= 1 {
        let mut cmd = <Cli as clap::CommandFactory>::command();
        let _ = writeln!(std::io::stderr(), "{}", cmd.render_help());
        return EXIT_USAGE;
    }
    let cli = match Cli::try_parse_from(&args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    let stdout = std::io::stdout();
    let mut out = stdout.lock();
    match execute(cli.command, &mut out) {
        Ok(code) => code,
        Err(e) => {
            let _ = out.flush();
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Io(_) => EXIT_IO,
        Error::Csv(c) if matches!(c.kind(), csv::ErrorKind::Io(_)) => EXIT_IO,
        _ => EXIT_USAGE,
    }
}

fn parse_cell(spec: Option<&str>, dim: usize) -> Result<ReferenceCell> {
    let cell = match spec {
        Some(s) => ReferenceCell::from_spec(s)?,
        None => ReferenceCell::unit(dim),
    };
    if cell.dim() != dim {
        return Err(Error::Config(format!("cell has dimension {}, domain has {dim}", cell.dim())));
    }
    Ok(cell)
}

fn sample_expression(src: &str, grid: Grid) -> Result<SampledFunction> {
    let expr = parse_expression(src, grid.dim())?;
    Ok(SampledFunction::from_fn(grid, |x| expr.eval_at(x)))
}

/// Runs one command, writing its normal output to `out`.
pub fn execute(command: Command, out: &mut dyn Write) -> Result<i32> {
    match command {
        Command::Norm { nfunction, domain, function, h, rel_tol } => {
            let nf = NFunction::from_spec(&nfunction)?;
            let domain = Domain::from_spec(&domain)?;
            let u = if Path::new(&function).is_file() {
                let u = SampledFunction::read_csv(Path::new(&function))?;
                if u.grid().domain() != &domain {
                    return Err(Error::Shape(format!(
                        "CSV samples live on {} but --domain is {domain}",
                        u.grid().domain()
                    )));
                }
                u
            } else {
                sample_expression(&function, Grid::uniform(domain, h)?)?
            };
            writeln!(out, "{}", fmt_g17(luxemburg_norm(&u, &nf, rel_tol)?))?;
        }
        Command::Decompose { domain, eps, cell, list } => {
            let domain = Domain::from_spec(&domain)?;
            let cell = parse_cell(cell.as_deref(), domain.dim())?;
            let dec = decompose(&domain, eps, &cell)?;
            writeln!(out, "xi_count={} lambda_measure={}", dec.xi_set().len(), fmt_g17(dec.lambda_measure()))?;
            if list {
                let header: Vec<String> = (0..dec.dim()).map(|a| format!("xi_{a}")).collect();
                writeln!(out, "{}", header.join(","))?;
                for xi in dec.xi_set() {
                    let row: Vec<String> = xi.iter().map(i64::to_string).collect();
                    writeln!(out, "{}", row.join(","))?;
                }
            }
        }
        Command::Unfold { domain, eps, h, function, cell, out: path } => {
            let domain = Domain::from_spec(&domain)?;
            let d = domain.dim();
            let cell = parse_cell(cell.as_deref(), d)?;
            let grid = Grid::uniform(domain.clone(), h)?;
            let nodes = grid.cells_per_axis(eps, &cell)?;
            let dec = decompose(&domain, eps, &cell)?;
            let phi = sample_expression(&function, grid)?;
            let w = unfold(&phi, &dec)?;
            let ys = cell_grid(&cell, &nodes)?.points();

            let mut wr = csv::Writer::from_path(&path)?;
            let mut header: Vec<String> = (0..d).map(|a| format!("xi_{a}")).collect();
            header.extend((0..d).map(|a| format!("y_{a}")));
            header.push("value".into());
            wr.write_record(&header)?;
            for (k, xi) in dec.xi_set().iter().enumerate() {
                for (y, v) in ys.iter().zip(w.cell_values(k)) {
                    let mut rec: Vec<String> = xi.iter().map(i64::to_string).collect();
                    rec.extend(y.iter().map(|&c| fmt_g17(c)));
                    rec.push(fmt_g17(*v));
                    wr.write_record(&rec)?;
                }
            }
            wr.flush()?;
            writeln!(out, "wrote {} cells x {} nodes to {}", dec.xi_set().len(), ys.len(), path.display())?;
        }
        Command::Study { config } => {
            let cfg = StudyConfig::load(&config)?;
            let rep = run_study(&cfg)?;
            for (k, v) in &rep.metadata {
                writeln!(out, "# {k} = {v}")?;
            }
            writeln!(out, "{}", REPORT_HEADER.join(","))?;
            for r in &rep.rows {
                let cols = [r.eps, r.error, r.bound, r.norm, r.lambda_measure].map(fmt_g17);
                writeln!(out, "{}", cols.join(","))?;
            }
            if let Some(path) = &cfg.out {
                if let Some(svg) = emit_report(&rep, path)? {
                    writeln!(out, "# wrote {} and {}", path.display(), svg.display())?;
                } else {
                    writeln!(out, "# wrote {}", path.display())?;
                }
            }
            if !rep.passed() {
                for c in rep.failures() {
                    match c.row {
                        Some(i) => {
                            let r = &rep.rows[i];
                            eprintln!(
                                "FAILED {} at row {i} (eps={}, error={}, bound={}): {}",
                                c.name,
                                fmt_g17(r.eps),
                                fmt_g17(r.error),
                                fmt_g17(r.bound),
                                c.detail
                            );
                        }
                        None => eprintln!("FAILED {}: {}", c.name, c.detail),
                    }
                }
                return Ok(EXIT_ASSERTION);
            }
            writeln!(out, "# all {} checks passed", rep.checks.len())?;
        }
    }
    Ok(EXIT_OK)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn exec(args: &[&str]) -> (Result<i32>, String) {
        let cli = Cli::try_parse_from(std::iter::once("orlicz-unfold").chain(args.iter().copied())).unwrap();
        let mut buf = Vec::new();
        let code = execute(cli.command, &mut buf);
        (code, String::from_utf8(buf).unwrap())
    }

    #[test]
    fn decompose_example() {
        let (code, text) = exec(&["decompose", "--domain", "box:0;1", "--eps", "0.3"]);
        assert_eq!(code.unwrap(), 0);
        let (count, lambda) = text.trim().split_once(' ').unwrap();
        assert_eq!(count, "xi_count=3");
        let lambda: f64 = lambda.strip_prefix("lambda_measure=").unwrap().parse().unwrap();
        assert!((lambda - 0.1).abs() < 1e-12);
    }

    #[test]
    fn decompose_list() {
        let (_, text) = exec(&["decompose", "--domain", "box:0,0;1,1", "--eps", "0.5", "--list"]);
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "xi_count=4 lambda_measure=0");
        assert_eq!(&lines[1..], ["xi_0,xi_1", "0,0", "0,1", "1,0", "1,1"]);
    }

    #[test]
    fn norm_of_expression() {
        let (code, text) = exec(&["norm", "--nfunction", "power:2", "--domain", "box:0;1", "--function", "x0"]);
        assert_eq!(code.unwrap(), 0);
        let v: f64 = text.trim().parse().unwrap();
        assert!((v - 3f64.sqrt().recip()).abs() < 1e-6);
    }

    #[test]
    fn errors_map_to_exit_codes() {
        assert_eq!(run(["orlicz-unfold"]), EXIT_USAGE);
        assert_eq!(run(["orlicz-unfold", "frobnicate"]), EXIT_USAGE);
        assert_eq!(run(["orlicz-unfold", "study", "--config", "/nonexistent/missing.cfg"]), EXIT_IO);
        assert_eq!(
            run(["orlicz-unfold", "norm", "--nfunction", "power:2", "--domain", "box:0;1", "--function", "x1"]),
            EXIT_USAGE
        );
    }
}
