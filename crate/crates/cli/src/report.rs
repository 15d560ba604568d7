//! CSV and JSON serialization of experiment and bound reports.

use std::fs;
use std::io::Write;
use std::path::Path;

use crate::bounds::BoundsReport;
use crate::error::CliResult;
use crate::runner::{ExperimentReport, ReportRow};

pub const CSV_HEADER: &str = "example,sampler,n,L_or_side,q,step,iact_mean,acc_rate,mean_err,delta_C,delta_H,seconds,seed";

fn num(v: Option<f64>) -> String {
    match v {
        Some(x) if x.is_finite() => format!("{x:.6e}"),
        Some(x) => x.to_string(),
        None => String::new(),
    }
}

pub fn csv_line(r: &ReportRow) -> String {
    format!(
        "{},{},{},{},{},{},{},{},{},{},{},{:.3},{}",
        r.example,
        r.sampler,
        r.n,
        r.l_or_side,
        r.q.map(|q| q.to_string()).unwrap_or_default(),
        num(r.step),
        num(r.iact_mean),
        num(r.acc_rate),
        num(r.mean_err),
        num(r.delta_c),
        num(r.delta_h),
        r.seconds,
        r.seed
    )
}

pub fn write_csv<W: Write>(w: &mut W, report: &ExperimentReport) -> CliResult<()> {
    writeln!(w, "{CSV_HEADER}")?;
    for r in &report.rows {
        writeln!(w, "{}", csv_line(r))?;
    }
    Ok(())
}

/// Writes `results.csv` and `summary.json` into `dir`.
pub fn write_experiment(dir: &Path, report: &ExperimentReport) -> CliResult<()> {
    fs::create_dir_all(dir)?;
    let mut f = fs::File::create(dir.join("results.csv"))?;
    write_csv(&mut f, report)?;
    let mut j = fs::File::create(dir.join("summary.json"))?;
    serde_json::to_writer_pretty(&mut j, report)?;
    writeln!(j)?;
    Ok(())
}

pub const BOUNDS_HEADER: &str =
    "example,n,L_or_side,form,delta_prior,delta_H,bound_mean,exact_mean,bound_cov,exact_cov,dominance,cond,beta,coupling_rate,envelope_ok,informative";

fn flag(v: Option<bool>) -> &'static str {
    match v {
        Some(true) => "pass",
        Some(false) => "fail",
        None => "n/a",
    }
}

pub fn write_bounds(dir: &Path, report: &BoundsReport) -> CliResult<()> {
    fs::create_dir_all(dir)?;
    let mut f = fs::File::create(dir.join("bounds.csv"))?;
    writeln!(f, "{BOUNDS_HEADER}")?;
    for r in &report.rows {
        writeln!(
            f,
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
            r.example,
            r.n,
            r.l_or_side,
            r.form,
            num(Some(r.delta_prior)),
            num(Some(r.delta_h)),
            num(r.bound_mean),
            num(Some(r.exact_mean)),
            num(r.bound_cov),
            num(Some(r.exact_cov)),
            flag(r.dominance),
            num(Some(r.cond)),
            num(Some(r.beta)),
            num(r.coupling_rate),
            flag(Some(r.envelope_ok)),
            r.informative
        )?;
    }
    let mut j = fs::File::create(dir.join("bounds.json"))?;
    serde_json::to_writer_pretty(&mut j, report)?;
    writeln!(j)?;
    Ok(())
}
