//! Result serialization in three formats.
//!
//! JSON keeps full precision (shortest round-trip floats, sorted keys) so
//! reports parse back exactly. CSV and markdown round floats to six
//! significant digits.

use std::fmt::Write as _;
use std::path::Path;

use serde::Serialize;

use crate::dynamics::Trajectory;
use crate::error::{Error, Result};
use crate::harness::sampling::SamplingReport;
use crate::harness::table::{RunReport, DETECTION_RULE};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Csv,
    Json,
    Markdown,
}

impl Format {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            "markdown" | "md" | "markdown-table" => Ok(Format::Markdown),
            _ => Err(Error::Unknown { kind: "format", name: s.to_string() }),
        }
    }
}

/// `%g`-style formatting with six significant digits.
pub fn fmt_sig(x: f64) -> String {
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return "0".into();
    }
    let sci = format!("{x:.5e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    if !(-4..6).contains(&exp) {
        let m = trim_zeros(mantissa);
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{m}e{sign}{:02}", exp.abs())
    } else {
        let decimals = (5 - exp).max(0) as usize;
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

pub const CSV_HEADER: &str =
    "config_hash,objective,method,kernel,kappa,J,J_c,alpha,sigma,seeds,frac_ge1,frac_ge2,frac_ge3,mean_wall_time,failed,detection";

pub fn to_csv(reports: &[RunReport]) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for r in reports {
        let c = &r.config;
        let a = &r.aggregate;
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
            r.config_hash,
            c.objective,
            c.method.as_str(),
            c.kernel.as_str(),
            fmt_sig(c.kappa),
            c.particles,
            c.clusters,
            fmt_sig(c.alpha),
            fmt_sig(c.sigma),
            a.seeds,
            fmt_sig(a.frac_ge1),
            fmt_sig(a.frac_ge2),
            fmt_sig(a.frac_ge3),
            fmt_sig(a.mean_wall_time),
            a.failed,
            r.detection_rule.replace(',', ";"),
        );
    }
    out
}

/// Pretty JSON with keys sorted.
pub fn to_json<T: Serialize>(value: &T) -> Result<String> {
    let v = serde_json::to_value(value)?;
    let mut s = serde_json::to_string_pretty(&v)?;
    s.push('\n');
    Ok(s)
}

pub fn reports_from_json(s: &str) -> Result<Vec<RunReport>> {
    Ok(serde_json::from_str(s)?)
}

fn pct(x: f64) -> String {
    format!("{}%", fmt_sig(100.0 * x))
}

pub fn to_markdown(reports: &[RunReport]) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "Detection: {DETECTION_RULE}.\n");
    out.push_str("| objective | d | method | kernel | kappa | J | J_c | alpha | sigma | seeds | >= 1 | >= 2 | >= 3 | failed |\n");
    out.push_str("|---|---|---|---|---|---|---|---|---|---|---|---|---|---|\n");
    for r in reports {
        let c = &r.config;
        let a = &r.aggregate;
        let _ = writeln!(
            out,
            "| {} | {} | {} | {} | {} | {} | {} | {} | {} | {} | {} | {} | {} | {} |",
            c.objective,
            c.dim,
            c.method.as_str(),
            c.kernel.as_str(),
            fmt_sig(c.kappa),
            c.particles,
            c.clusters,
            fmt_sig(c.alpha),
            fmt_sig(c.sigma),
            a.seeds,
            pct(a.frac_ge1),
            pct(a.frac_ge2),
            pct(a.frac_ge3),
            a.failed,
        );
    }
    out
}

pub fn render(reports: &[RunReport], format: Format) -> Result<String> {
    match format {
        Format::Csv => Ok(to_csv(reports)),
        Format::Json => to_json(&reports),
        Format::Markdown => Ok(to_markdown(reports)),
    }
}

pub fn emit_results(reports: &[RunReport], format: Format, path: &Path) -> Result<()> {
    std::fs::write(path, render(reports, format)?)?;
    Ok(())
}

/// One row per seed and mode.
pub fn sampling_to_csv(reports: &[SamplingReport]) -> String {
    let mut out = String::from("config_hash,method,kappa,seed,mode,count,fraction,mean,var_diag,degenerate\n");
    for r in reports {
        for s in &r.seeds {
            for (k, m) in s.modes.iter().enumerate() {
                let join = |v: Vec<f64>| v.into_iter().map(fmt_sig).collect::<Vec<_>>().join(" ");
                let mean = m.mean.clone().map(join).unwrap_or_default();
                let var = m
                    .covariance
                    .as_ref()
                    .map(|c| join((0..c.len()).map(|i| c[i][i]).collect()))
                    .unwrap_or_default();
                let _ = writeln!(
                    out,
                    "{},{},{},{},{},{},{},{},{},{}",
                    r.config_hash,
                    r.config.method.as_str(),
                    fmt_sig(r.config.kappa),
                    s.seed,
                    k,
                    m.count,
                    fmt_sig(m.fraction),
                    mean,
                    var,
                    m.degenerate
                );
            }
        }
    }
    out
}

pub fn sampling_to_markdown(reports: &[SamplingReport]) -> String {
    let mut out = String::from("| method | kappa | seed | mode | count | fraction | mean |\n|---|---|---|---|---|---|---|\n");
    for r in reports {
        for s in &r.seeds {
            for m in &s.modes {
                let mean = m.mean.as_ref().map(|v| v.iter().map(|x| fmt_sig(*x)).collect::<Vec<_>>().join(", "));
                let _ = writeln!(
                    out,
                    "| {} | {} | {} | ({}) | {} | {} | {} |",
                    r.config.method.as_str(),
                    fmt_sig(r.config.kappa),
                    s.seed,
                    m.mode.iter().map(|x| fmt_sig(*x)).collect::<Vec<_>>().join(", "),
                    m.count,
                    pct(m.fraction),
                    mean.unwrap_or_else(|| "-".into()),
                );
            }
        }
    }
    out
}

pub fn render_sampling(reports: &[SamplingReport], format: Format) -> Result<String> {
    match format {
        Format::Csv => Ok(sampling_to_csv(reports)),
        Format::Json => to_json(&reports),
        Format::Markdown => Ok(sampling_to_markdown(reports)),
    }
}

/// Long-format snapshot dump: one line per particle and snapshot.
pub fn trajectory_csv(traj: &Trajectory) -> String {
    let d = traj.snapshots.first().map(|s| s.positions.cols()).unwrap_or(0);
    let mut out = String::from("step,time,beta,particle");
    for n in 0..d {
        let _ = write!(out, ",x{n}");
    }
    for n in 0..d {
        let _ = write!(out, ",m{n}");
    }
    out.push('\n');
    for s in &traj.snapshots {
        for i in 0..s.positions.rows() {
            let _ = write!(out, "{},{},{},{}", s.step, fmt_sig(s.time), fmt_sig(s.beta), i);
            for v in s.positions.row(i).iter().chain(s.means.row(i)) {
                let _ = write!(out, ",{}", fmt_sig(*v));
            }
            out.push('\n');
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn significant_digit_formatting() {
        let cases = [
            (0.0, "0"),
            (1.0, "1"),
            (0.5, "0.5"),
            (1.0 / 3.0, "0.333333"),
            (123456.7, "123457"),
            (1234567.0, "1.23457e+06"),
            (1e7, "1e+07"),
            (0.0001, "0.0001"),
            (0.00001234, "1.234e-05"),
            (-2.5, "-2.5"),
            (0.97, "0.97"),
            (999999.5, "1e+06"),
            (f64::INFINITY, "inf"),
        ];
        for (x, s) in cases {
            assert_eq!(fmt_sig(x), s, "{x}");
        }
    }

    #[test]
    fn empty_csv_is_header_only() {
        assert_eq!(to_csv(&[]), format!("{CSV_HEADER}\n"));
    }

    #[test]
    fn format_names() {
        assert_eq!(Format::parse("md").unwrap(), Format::Markdown);
        assert!(Format::parse("xml").is_err());
    }
}
