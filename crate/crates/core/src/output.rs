//! CSV writers for simulation results.
//!
//! Time series: `time_s,algorithm,absorbed,fraction,analytic_fraction`, one
//! row per (step, algorithm), time major.
//!
//! Distribution: `step,time_s,newly_absorbed,probability`, the empirical
//! mass function of the per-step count, plus a `<stem>_summary.csv`
//! companion with `step,time_s,mean,variance,standard_error,analytic_increment`.
//!
//! Reals are printed in plain decimal with 12 significant digits.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use crate::config::{DistributionResult, TimeSeriesResult};
use crate::error::{Error, Result};

pub const TIMESERIES_HEADER: &str = "time_s,algorithm,absorbed,fraction,analytic_fraction";
pub const DISTRIBUTION_HEADER: &str = "step,time_s,newly_absorbed,probability";
pub const SUMMARY_HEADER: &str = "step,time_s,mean,variance,standard_error,analytic_increment";

const SIGNIFICANT_DIGITS: i32 = 12;

/// Plain decimal with 12 significant digits, trailing zeros trimmed.
pub fn format_real(v: f64) -> String {
    if v == 0.0 || !v.is_finite() {
        return if v == 0.0 { "0".to_string() } else { v.to_string() };
    }
    let magnitude = v.abs().log10().floor() as i32;
    let decimals = (SIGNIFICANT_DIGITS - 1 - magnitude).max(0) as usize;
    let mut s = format!("{v:.decimals$}");
    if s.contains('.') {
        let trimmed = s.trim_end_matches('0').trim_end_matches('.').len();
        s.truncate(trimmed);
    }
    if s == "-0" {
        s = "0".to_string();
    }
    s
}

pub fn render_timeseries(results: &[TimeSeriesResult]) -> Result<String> {
    let first = results
        .first()
        .ok_or_else(|| Error::Usage("no time series to write".into()))?;
    if results.iter().any(|r| r.len() != first.len()) {
        return Err(Error::Usage("time series have different lengths".into()));
    }
    let mut out = String::with_capacity(64 * first.len() * results.len());
    out.push_str(TIMESERIES_HEADER);
    out.push('\n');
    for i in 0..first.len() {
        for r in results {
            let _ = writeln!(
                out,
                "{},{},{},{},{}",
                format_real(r.time[i]),
                r.algorithm,
                format_real(r.cumulative_absorbed[i]),
                format_real(r.fraction[i]),
                format_real(r.analytic_fraction[i]),
            );
        }
    }
    Ok(out)
}

pub fn write_timeseries_csv(results: &[TimeSeriesResult], path: &Path) -> Result<()> {
    let body = render_timeseries(results)?;
    fs::write(path, body).map_err(|e| Error::io(path, e))
}

pub fn render_distribution(dist: &DistributionResult) -> String {
    let mut out = String::new();
    out.push_str(DISTRIBUTION_HEADER);
    out.push('\n');
    for k in 1..=dist.num_steps() {
        let t = format_real(dist.time_at(k));
        for (count, p) in dist.mass_function(k) {
            let _ = writeln!(out, "{k},{t},{count},{}", format_real(p));
        }
    }
    out
}

pub fn render_distribution_summary(dist: &DistributionResult) -> String {
    let mut out = String::new();
    out.push_str(SUMMARY_HEADER);
    out.push('\n');
    for k in 1..=dist.num_steps() {
        let _ = writeln!(
            out,
            "{k},{},{},{},{},{}",
            format_real(dist.time_at(k)),
            format_real(dist.mean(k)),
            format_real(dist.variance(k)),
            format_real(dist.standard_error(k)),
            format_real(dist.analytic_increments[k - 1]),
        );
    }
    out
}

/// `dir/name.csv` -> `dir/name_summary.csv`
pub fn summary_path(path: &Path) -> PathBuf {
    let stem = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    path.with_file_name(format!("{stem}_summary.csv"))
}

/// Writes the mass-function file at `path` and the summary next to it.
/// Returns the summary path.
pub fn write_distribution_csv(dist: &DistributionResult, path: &Path) -> Result<PathBuf> {
    fs::write(path, render_distribution(dist)).map_err(|e| Error::io(path, e))?;
    let summary = summary_path(path);
    fs::write(&summary, render_distribution_summary(dist)).map_err(|e| Error::io(&summary, e))?;
    Ok(summary)
}
