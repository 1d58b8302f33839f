//! Convergence studies: case execution, rate estimation, CSV and plot data.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;

use sbfem::mesh::AngularMesh;
use sbfem::norms::{h1tilde_error, Weight, WeightedNormSpec};
use sbfem::problems::{harmonic_mode, test1, test2, test3, BenchmarkCase};
use sbfem::solver::solve;

use crate::config::{ProblemKind, StudyConfig};
use crate::error::{CliError, Result};

pub const CSV_HEADER: &str =
    "problem,p,n_elements,h,err_L2r,err_H1tilde,rate_L2,rate_H1,lambda_min,wall_time_ms";

/// Errors below this are dominated by roundoff and are excluded from rate
/// fits.
pub const FIT_FLOOR: f64 = 1e-11;

/// One measured study case. Rates are pairwise against the previous level of
/// the same order; the first level of each order has none.
#[derive(Clone, Debug, PartialEq)]
pub struct ConvergenceRecord {
    pub problem: String,
    pub p: usize,
    pub n_elements: usize,
    pub h: f64,
    pub err_l2r: f64,
    pub err_h1tilde: f64,
    pub rate_l2: Option<f64>,
    pub rate_h1: Option<f64>,
    pub lambda_min: f64,
    pub wall_time_ms: u64,
}

/// Study results, possibly truncated at the first failed case.
#[derive(Debug)]
pub struct StudyOutcome {
    pub records: Vec<ConvergenceRecord>,
    /// First failure in configured case order; `records` holds the cases
    /// that precede it.
    pub failure: Option<CliError>,
}

/// Instantiates the configured benchmark on an `n`-element mesh of order `p`.
pub fn builtin_case(config: &StudyConfig, n: usize, p: usize) -> Result<BenchmarkCase<f64>> {
    let case = match config.kind {
        ProblemKind::Test1 => test1(n, p),
        ProblemKind::Test2 => test2(n, p),
        ProblemKind::Test3 => test3(n, p),
        ProblemKind::Custom => harmonic_mode(config.theta_max, config.harmonic_index, n, p),
    };
    case.map_err(|e| {
        CliError::Numerical(format!("building {} at n={n}, p={p}: {e}", config.label))
    })
}

fn error_spec(config: &StudyConfig, mesh: &AngularMesh<f64>) -> Result<WeightedNormSpec<f64>> {
    let mut spec = WeightedNormSpec::for_mesh(Weight::R, mesh)
        .map_err(|e| CliError::Numerical(e.to_string()))?;
    if let Some(l) = config.quad_levels {
        spec = spec.with_levels(l).map_err(|e| CliError::Numerical(e.to_string()))?;
    }
    if let Some(q) = config.quad_points {
        spec = spec
            .with_radial_points(q)
            .and_then(|s| s.with_angular_points(q))
            .map_err(|e| CliError::Numerical(e.to_string()))?;
    }
    Ok(spec)
}

struct CaseMeasurement {
    h: f64,
    err_l2r: f64,
    err_h1tilde: f64,
    lambda_min: f64,
    wall_time_ms: u64,
}

fn measure_case(config: &StudyConfig, p: usize, n: usize) -> Result<CaseMeasurement> {
    let case = builtin_case(config, n, p)?;
    let start = Instant::now();
    let sol = solve(&case.problem)
        .map_err(|e| CliError::Numerical(format!("{} n={n} p={p}: {e}", config.label)))?;
    let spec = error_spec(config, case.problem.mesh())?;
    let (err_l2r, err_h1tilde) = h1tilde_error(&sol, &case.exact, &spec)
        .map_err(|e| CliError::Numerical(format!("{} n={n} p={p}: {e}", config.label)))?;
    Ok(CaseMeasurement {
        h: config.theta_max / n as f64,
        err_l2r,
        err_h1tilde,
        lambda_min: sol.lambda_min(),
        wall_time_ms: start.elapsed().as_millis() as u64,
    })
}

fn pairwise_rate(e_coarse: f64, e_fine: f64, h_coarse: f64, h_fine: f64) -> Option<f64> {
    if e_coarse > 0.0 && e_fine > 0.0 && h_coarse > h_fine {
        Some((e_coarse / e_fine).ln() / (h_coarse / h_fine).ln())
    } else {
        None
    }
}

/// Runs every (order, level) case. Cases execute in parallel; records are
/// assembled in configuration order, so output is deterministic.
pub fn run_study(config: &StudyConfig) -> StudyOutcome {
    let cases: Vec<(usize, usize)> = config
        .orders
        .iter()
        .flat_map(|&p| config.levels.iter().map(move |&n| (p, n)))
        .collect();
    let measured: Vec<Result<CaseMeasurement>> = cases
        .par_iter()
        .map(|&(p, n)| measure_case(config, p, n))
        .collect();

    let mut records = Vec::with_capacity(cases.len());
    let mut failure = None;
    let mut prev: Option<(usize, CaseMeasurement)> = None;
    for (&(p, n), outcome) in cases.iter().zip(measured) {
        match outcome {
            Ok(m) => {
                let (rate_l2, rate_h1) = match &prev {
                    Some((pp, pm)) if *pp == p => (
                        pairwise_rate(pm.err_l2r, m.err_l2r, pm.h, m.h),
                        pairwise_rate(pm.err_h1tilde, m.err_h1tilde, pm.h, m.h),
                    ),
                    _ => (None, None),
                };
                records.push(ConvergenceRecord {
                    problem: config.label.clone(),
                    p,
                    n_elements: n,
                    h: m.h,
                    err_l2r: m.err_l2r,
                    err_h1tilde: m.err_h1tilde,
                    rate_l2,
                    rate_h1,
                    lambda_min: m.lambda_min,
                    wall_time_ms: m.wall_time_ms,
                });
                prev = Some((p, m));
            }
            Err(e) => {
                failure = Some(e);
                break;
            }
        }
    }
    StudyOutcome { records, failure }
}

/// Which error column a fit or plot file refers to.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ErrorNorm {
    L2r,
    H1Tilde,
}

impl ErrorNorm {
    pub fn file_tag(self) -> &'static str {
        match self {
            ErrorNorm::L2r => "L2r",
            ErrorNorm::H1Tilde => "H1tilde",
        }
    }

    fn pick(self, r: &ConvergenceRecord) -> f64 {
        match self {
            ErrorNorm::L2r => r.err_l2r,
            ErrorNorm::H1Tilde => r.err_h1tilde,
        }
    }
}

/// Least-squares slope of log error against log h for one (problem, p, norm)
/// series.
#[derive(Clone, Debug)]
pub struct RateFit {
    pub problem: String,
    pub p: usize,
    pub norm: ErrorNorm,
    pub slope: f64,
    pub r_squared: f64,
    pub points: usize,
}

fn fit_loglog(points: &[(f64, f64)]) -> (f64, f64) {
    let n = points.len() as f64;
    let (mut sx, mut sy) = (0.0, 0.0);
    for &(h, e) in points {
        sx += h.ln();
        sy += e.ln();
    }
    let (mx, my) = (sx / n, sy / n);
    let (mut sxx, mut sxy) = (0.0, 0.0);
    for &(h, e) in points {
        let dx = h.ln() - mx;
        sxx += dx * dx;
        sxy += dx * (e.ln() - my);
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let (mut ss_res, mut ss_tot) = (0.0, 0.0);
    for &(h, e) in points {
        let dy = e.ln() - my;
        let resid = e.ln() - (slope * h.ln() + intercept);
        ss_res += resid * resid;
        ss_tot += dy * dy;
    }
    let r_squared = if ss_tot > 0.0 { 1.0 - ss_res / ss_tot } else { 1.0 };
    (slope, r_squared)
}

/// Fits per-(problem, p, norm) convergence slopes, dropping levels whose
/// error sits below the roundoff floor.
pub fn estimate_rates(records: &[ConvergenceRecord]) -> Result<Vec<RateFit>> {
    let mut fits = Vec::new();
    let mut start = 0;
    while start < records.len() {
        let end = records[start..]
            .iter()
            .take_while(|r| r.problem == records[start].problem && r.p == records[start].p)
            .count()
            + start;
        let group = &records[start..end];
        for norm in [ErrorNorm::L2r, ErrorNorm::H1Tilde] {
            let points: Vec<(f64, f64)> = group
                .iter()
                .map(|r| (r.h, norm.pick(r)))
                .filter(|&(_, e)| e >= FIT_FLOOR)
                .collect();
            if points.len() < 2 {
                return Err(CliError::Config(format!(
                    "{} p={}: need at least two usable levels to fit a {} rate",
                    records[start].problem,
                    records[start].p,
                    norm.file_tag()
                )));
            }
            let (slope, r_squared) = fit_loglog(&points);
            fits.push(RateFit {
                problem: records[start].problem.clone(),
                p: records[start].p,
                norm,
                slope,
                r_squared,
                points: points.len(),
            });
        }
        start = end;
    }
    Ok(fits)
}

fn push_field(out: &mut String, value: Option<f64>) {
    if let Some(v) = value {
        let _ = write!(out, "{v:.16e}");
    }
}

/// Renders records in the fixed CSV schema. All floating-point fields carry
/// 17 significant digits so parsing reproduces them bit for bit.
pub fn format_csv(records: &[ConvergenceRecord]) -> String {
    let mut out = String::with_capacity(64 + records.len() * 160);
    out.push_str(CSV_HEADER);
    out.push('\n');
    for r in records {
        let _ = write!(
            out,
            "{},{},{},{:.16e},{:.16e},{:.16e},",
            r.problem, r.p, r.n_elements, r.h, r.err_l2r, r.err_h1tilde
        );
        push_field(&mut out, r.rate_l2);
        out.push(',');
        push_field(&mut out, r.rate_h1);
        let _ = write!(out, ",{:.16e},{}", r.lambda_min, r.wall_time_ms);
        out.push('\n');
    }
    out
}

pub fn emit_csv(records: &[ConvergenceRecord], path: &Path) -> Result<()> {
    fs::write(path, format_csv(records))
        .map_err(|e| CliError::Io(format!("writing {}: {e}", path.display())))
}

fn parse_field<T: std::str::FromStr>(row: usize, name: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| CliError::Config(format!("row {row}: bad {name} field `{value}`")))
}

/// Parses CSV produced by [`format_csv`] back into records.
pub fn parse_csv(text: &str) -> Result<Vec<ConvergenceRecord>> {
    let mut lines = text.lines();
    match lines.next() {
        Some(header) if header == CSV_HEADER => {}
        other => {
            return Err(CliError::Config(format!(
                "unexpected CSV header: {:?}",
                other.unwrap_or("")
            )));
        }
    }
    let mut records = Vec::new();
    for (i, line) in lines.enumerate() {
        let row = i + 2;
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 10 {
            return Err(CliError::Config(format!(
                "row {row}: expected 10 fields, got {}",
                fields.len()
            )));
        }
        let optional = |name: &str, value: &str| -> Result<Option<f64>> {
            if value.is_empty() {
                Ok(None)
            } else {
                parse_field(row, name, value).map(Some)
            }
        };
        records.push(ConvergenceRecord {
            problem: fields[0].to_string(),
            p: parse_field(row, "p", fields[1])?,
            n_elements: parse_field(row, "n_elements", fields[2])?,
            h: parse_field(row, "h", fields[3])?,
            err_l2r: parse_field(row, "err_L2r", fields[4])?,
            err_h1tilde: parse_field(row, "err_H1tilde", fields[5])?,
            rate_l2: optional("rate_L2", fields[6])?,
            rate_h1: optional("rate_H1", fields[7])?,
            lambda_min: parse_field(row, "lambda_min", fields[8])?,
            wall_time_ms: parse_field(row, "wall_time_ms", fields[9])?,
        });
    }
    Ok(records)
}

/// Writes one two-column `h error` file per (problem, p, norm), returning
/// the paths written.
pub fn emit_plot_data(records: &[ConvergenceRecord], dir: &Path) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir)
        .map_err(|e| CliError::Io(format!("creating {}: {e}", dir.display())))?;
    let mut written = Vec::new();
    let mut start = 0;
    while start < records.len() {
        let end = records[start..]
            .iter()
            .take_while(|r| r.problem == records[start].problem && r.p == records[start].p)
            .count()
            + start;
        let group = &records[start..end];
        for norm in [ErrorNorm::L2r, ErrorNorm::H1Tilde] {
            let mut body = String::new();
            for r in group {
                let _ = writeln!(body, "{:.16e} {:.16e}", r.h, norm.pick(r));
            }
            let path = dir.join(format!(
                "{}_p{}_{}.dat",
                records[start].problem,
                records[start].p,
                norm.file_tag()
            ));
            fs::write(&path, body)
                .map_err(|e| CliError::Io(format!("writing {}: {e}", path.display())))?;
            written.push(path);
        }
        start = end;
    }
    Ok(written)
}
