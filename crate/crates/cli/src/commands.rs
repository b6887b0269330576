use std::io::Write;
use std::path::Path;

use anyhow::{Context, Result};
use serde::Serialize;

use mbonacci::chain::{density_scan, Chain, DensityReport};
use mbonacci::frame::{beurling_threshold, threshold_sweep, FrameReport};
use mbonacci::numbersys::{trib_expand, verify_gap_condition, GapReport};
use mbonacci::spectral::{perron_root, perron_root_extended, PerronData, DEFAULT_TOLERANCE};
use mbonacci::substitution::{Alphabet, WordStream};

use crate::args::{
    ChainArgs, Cli, Command, DensityArgs, ExpandArgs, FrameArgs, GapsArgs, PerronArgs, TableFormat, WordArgs,
    WordFormat,
};
use crate::output::{fmt_float, write_atomic, Csv};
use crate::{repro, usage, PRECISION_ENV};

pub(crate) fn run(cli: &Cli, stdout: &mut dyn Write, stderr: &mut dyn Write) -> Result<()> {
    let text = match &cli.command {
        Command::Word(a) => word(a, cli.max_digits)?,
        Command::Perron(a) => perron(a)?,
        Command::Chain(a) => chain(a, cli.max_digits)?,
        Command::Density(a) => density(a, cli.max_digits, stderr)?,
        Command::Gaps(a) => gaps(a, cli.max_digits)?,
        Command::Expand(a) => expand(a)?,
        Command::Frame(a) => frame(a, stderr)?,
        Command::Repro(a) => {
            let (text, failed) = repro::run(a)?;
            emit(cli.output.as_deref(), stdout, &text)?;
            if failed > 0 {
                return Err(crate::ChecksFailed(failed).into());
            }
            return Ok(());
        }
    };
    emit(cli.output.as_deref(), stdout, &text)
}

/// Send the primary output to `path` atomically, or to `stdout`.
pub(crate) fn emit(path: Option<&Path>, stdout: &mut dyn Write, text: &str) -> Result<()> {
    match path {
        Some(p) => write_atomic(p, text.as_bytes()),
        None => {
            stdout
                .write_all(text.as_bytes())
                .context("writing to standard output")?;
            stdout.flush().context("writing to standard output")
        }
    }
}

/// Secondary JSON goes to its own file when asked for, else one line on stderr.
fn emit_summary(path: Option<&Path>, stderr: &mut dyn Write, json: &str) -> Result<()> {
    match path {
        Some(p) => write_atomic(p, format!("{json}\n").as_bytes()),
        None => writeln!(stderr, "{json}").context("writing summary"),
    }
}

fn order(m: u64) -> usize {
    // clap has already restricted m to 2..=255.
    m as usize
}

fn check_cap(digits: u64, cap: u64) -> Result<()> {
    if digits > cap {
        return Err(usage(format!(
            "request needs {digits} digits of the word, above --max-digits {cap}"
        )));
    }
    Ok(())
}

fn to_i64(x: u64, flag: &str) -> Result<i64> {
    i64::try_from(x).map_err(|_| usage(format!("{flag} {x} is too large")))
}

fn word(a: &WordArgs, cap: u64) -> Result<String> {
    check_cap(a.length.saturating_add(a.left), cap)?;
    let (left, right) = (to_i64(a.left, "--left")?, to_i64(a.length, "--length")?);
    let alphabet = Alphabet::new(order(a.m))?;
    let stream = WordStream::with_window(alphabet, a.left as usize, a.length as usize);
    let digits = stream.window(-left, right)?;
    Ok(match a.format {
        WordFormat::Digits => {
            let sep = if alphabet.order() > 9 { "," } else { "" };
            let parts: Vec<String> = digits.iter().map(|d| d.to_string()).collect();
            format!("{}\n", parts.join(sep))
        }
        WordFormat::Csv => {
            let mut csv = Csv::new(&["index", "digit"]);
            for (k, d) in (-left..right).zip(&digits) {
                csv.row([k.to_string(), d.to_string()]);
            }
            csv.into_string()
        }
    })
}

/// Precision requested by `--digits` or the environment, if any.
pub(crate) fn precision_override(flag: Option<u32>) -> Result<Option<u32>> {
    if flag.is_some() {
        return Ok(flag);
    }
    match std::env::var(PRECISION_ENV) {
        Ok(v) => match v.trim().parse::<u32>() {
            Ok(d) if (1..=10_000).contains(&d) => Ok(Some(d)),
            _ => Err(usage(format!(
                "{PRECISION_ENV} must be an integer in 1..=10000, got {v:?}"
            ))),
        },
        Err(_) => Ok(None),
    }
}

pub(crate) fn perron_data(m: usize, digits: Option<u32>) -> Result<PerronData> {
    Ok(match digits {
        Some(d) => perron_root_extended(m, d)?,
        None => perron_root(m, DEFAULT_TOLERANCE)?,
    })
}

#[derive(Serialize)]
struct PerronJson<'a> {
    schema: u32,
    m: usize,
    rho: f64,
    eigenvector: &'a [f64],
    poly_residual: f64,
    eig_residual: f64,
    rho_error: f64,
    rho_decimal: &'a str,
    precision_digits: u32,
}

fn perron(a: &PerronArgs) -> Result<String> {
    let digits = precision_override(a.digits)?;
    let p = perron_data(order(a.m), digits)?;
    let doc = PerronJson {
        schema: 1,
        m: p.m,
        rho: p.rho,
        eigenvector: &p.left_eigenvector,
        poly_residual: p.poly_residual,
        eig_residual: p.eig_residual,
        rho_error: p.rho_error,
        rho_decimal: &p.rho_decimal,
        precision_digits: p.precision_digits,
    };
    Ok(format!("{}\n", serde_json::to_string(&doc)?))
}

fn chain(a: &ChainArgs, cap: u64) -> Result<String> {
    if a.from > a.to {
        return Err(usage(format!("--from {} is greater than --to {}", a.from, a.to)));
    }
    let k_min = a.from.min(0);
    let k_max = a.to.max(0).checked_add(1).ok_or_else(|| usage("--to is too large"))?;
    check_cap(k_max.abs_diff(k_min), cap)?;
    let chain = Chain::build(order(a.m), k_min, k_max)?;
    let mut csv = Csv::new(&["k", "lambda", "gap_digit"]);
    for k in a.from..=a.to {
        let lambda = chain.lambda(k).expect("inside the built window");
        let digit = chain.gap_digit(k).expect("inside the built window");
        csv.row([k.to_string(), fmt_float(lambda), digit.to_string()]);
    }
    Ok(csv.into_string())
}

#[derive(Serialize)]
pub(crate) struct DensitySummary {
    pub schema: u32,
    pub m: usize,
    pub points: u64,
    pub rmin: f64,
    pub rmax: f64,
    pub step: f64,
    pub samples: usize,
    pub closed_form: f64,
    pub lower_bound: f64,
    pub ratio_min: f64,
    pub ratio_max: f64,
    pub max_relative_deviation: f64,
}

impl DensitySummary {
    pub(crate) fn new(report: &DensityReport, points: u64, step: f64) -> Self {
        let (lo, hi) = report.ratio_extremes().unwrap_or((f64::NAN, f64::NAN));
        Self {
            schema: 1,
            m: report.m,
            points,
            rmin: report.r_range.0,
            rmax: report.r_range.1,
            step,
            samples: report.samples.len(),
            closed_form: report.closed_form,
            lower_bound: report.lower_bound,
            ratio_min: lo,
            ratio_max: hi,
            max_relative_deviation: report.max_relative_deviation(),
        }
    }
}

pub(crate) fn density_csv(report: &DensityReport) -> String {
    let mut csv = Csv::new(&["r", "n", "ratio"]);
    for s in &report.samples {
        csv.row([fmt_float(s.r), s.n.to_string(), fmt_float(s.ratio)]);
    }
    csv.into_string()
}

pub(crate) fn density_report(m: usize, points: u64, rmin: f64, rmax: f64, step: f64) -> Result<DensityReport> {
    let chain = Chain::build(m, 0, points as i64)?;
    Ok(density_scan(&chain, rmin, rmax, step)?)
}

fn density(a: &DensityArgs, cap: u64, stderr: &mut dyn Write) -> Result<String> {
    if !(a.rmin.is_finite() && a.rmax.is_finite() && a.rmin > 0.0 && a.rmin <= a.rmax) {
        return Err(usage(format!(
            "need 0 < --rmin <= --rmax, got {} and {}",
            a.rmin, a.rmax
        )));
    }
    if !(a.step.is_finite() && a.step > 0.0) {
        return Err(usage(format!("--step must be positive, got {}", a.step)));
    }
    if a.points < 1 {
        return Err(usage("--points must be at least 1"));
    }
    check_cap(a.points, cap)?;
    to_i64(a.points, "--points")?;
    let report = density_report(order(a.m), a.points, a.rmin, a.rmax, a.step)?;
    let summary = DensitySummary::new(&report, a.points, a.step);
    match a.format {
        TableFormat::Csv => {
            emit_summary(a.summary.as_deref(), stderr, &serde_json::to_string(&summary)?)?;
            Ok(density_csv(&report))
        }
        TableFormat::Json => {
            #[derive(Serialize)]
            struct Doc<'a> {
                #[serde(flatten)]
                summary: &'a DensitySummary,
                data: &'a [mbonacci::chain::DensitySample],
            }
            let doc = Doc {
                summary: &summary,
                data: &report.samples,
            };
            Ok(format!("{}\n", serde_json::to_string(&doc)?))
        }
    }
}

pub(crate) fn gap_reports(m: usize, nmax: u64, krange: u64) -> Result<Vec<GapReport>> {
    let k = krange as i64;
    let chain = Chain::build(m, -k, k + nmax as i64)?;
    (1..=nmax).map(|n| Ok(verify_gap_condition(&chain, n, k)?)).collect()
}

pub(crate) fn gaps_csv(rows: &[GapReport]) -> String {
    let mut csv = Csv::new(&["N", "gamma", "gamma_sharp", "brute_min", "holds"]);
    for r in rows {
        csv.row([
            r.n.to_string(),
            fmt_float(r.gamma),
            r.gamma_sharp.map(fmt_float).unwrap_or_default(),
            fmt_float(r.brute_min),
            r.holds.to_string(),
        ]);
    }
    csv.into_string()
}

fn gaps(a: &GapsArgs, cap: u64) -> Result<String> {
    let span = a.krange.saturating_mul(2).saturating_add(a.nmax);
    check_cap(span, cap)?;
    to_i64(span, "--krange")?;
    let rows = gap_reports(order(a.m), a.nmax, a.krange)?;
    Ok(match a.format {
        TableFormat::Csv => gaps_csv(&rows),
        TableFormat::Json => {
            #[derive(Serialize)]
            struct Doc<'a> {
                schema: u32,
                m: u64,
                krange: u64,
                rows: &'a [GapReport],
            }
            format!(
                "{}\n",
                serde_json::to_string(&Doc {
                    schema: 1,
                    m: a.m,
                    krange: a.krange,
                    rows: &rows
                })?
            )
        }
    })
}

#[derive(Serialize)]
pub(crate) struct ExpandJson {
    pub n: u64,
    #[serde(rename = "L")]
    pub l: usize,
    pub bits: String,
}

fn expand(a: &ExpandArgs) -> Result<String> {
    let e = trib_expand(a.n)?;
    let doc = ExpandJson {
        n: e.n,
        l: e.top,
        bits: e.bit_string(),
    };
    Ok(format!("{}\n", serde_json::to_string(&doc)?))
}

/// `steps` evenly spaced lengths from `lmin` to `lmax` inclusive.
pub(crate) fn length_grid(lmin: f64, lmax: f64, steps: u64) -> Vec<f64> {
    if steps == 1 {
        return vec![lmin];
    }
    let h = (lmax - lmin) / (steps - 1) as f64;
    (0..steps)
        .map(|i| if i + 1 == steps { lmax } else { lmin + i as f64 * h })
        .collect()
}

pub(crate) fn frame_csv(report: &FrameReport) -> String {
    let mut csv = Csv::new(&["L", "K", "c1", "c2", "regime"]);
    for p in &report.probes {
        csv.row([
            fmt_float(p.interval_length),
            p.k.to_string(),
            fmt_float(p.c1),
            fmt_float(p.c2),
            p.regime.as_str().into(),
        ]);
    }
    csv.into_string()
}

#[derive(Serialize)]
struct FrameSummary {
    schema: u32,
    m: usize,
    k: u64,
    threshold: f64,
    upper_density: f64,
    lmin: f64,
    lmax: f64,
    steps: u64,
    refined: bool,
}

fn frame(a: &FrameArgs, stderr: &mut dyn Write) -> Result<String> {
    if !(a.lmin.is_finite() && a.lmax.is_finite() && a.lmin > 0.0 && a.lmin <= a.lmax) {
        return Err(usage(format!(
            "need 0 < --lmin <= --lmax, got {} and {}",
            a.lmin, a.lmax
        )));
    }
    let size = a.k.saturating_mul(2).saturating_add(1);
    if size > mbonacci::frame::MAX_SYSTEM_SIZE as u64 {
        return Err(usage(format!(
            "--k {} gives {size} frequencies, above the limit of {}",
            a.k,
            mbonacci::frame::MAX_SYSTEM_SIZE
        )));
    }
    let k = a.k as usize;
    let chain = Chain::build(order(a.m), -(k as i64), k as i64)?;
    let lengths = length_grid(a.lmin, a.lmax, a.steps);
    let report = threshold_sweep(&chain, k, &lengths, !a.no_refine)?;
    let threshold = beurling_threshold(&chain);
    let summary = FrameSummary {
        schema: 1,
        m: report.m,
        k: a.k,
        threshold,
        upper_density: threshold / (2.0 * std::f64::consts::PI),
        lmin: a.lmin,
        lmax: a.lmax,
        steps: a.steps,
        refined: !a.no_refine,
    };
    match a.format {
        TableFormat::Csv => {
            emit_summary(a.summary.as_deref(), stderr, &serde_json::to_string(&summary)?)?;
            Ok(frame_csv(&report))
        }
        TableFormat::Json => {
            #[derive(Serialize)]
            struct Doc<'a> {
                #[serde(flatten)]
                summary: &'a FrameSummary,
                probes: &'a [mbonacci::frame::SweepRow],
            }
            Ok(format!(
                "{}\n",
                serde_json::to_string(&Doc {
                    summary: &summary,
                    probes: &report.probes
                })?
            ))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn length_grid_hits_both_ends() {
        assert_eq!(length_grid(2.0, 2.0, 1), vec![2.0]);
        let g = length_grid(1.0, 2.0, 3);
        assert_eq!(g, vec![1.0, 1.5, 2.0]);
    }

    #[test]
    fn cap_is_a_usage_error() {
        let e = check_cap(11, 10).unwrap_err();
        assert!(e.is::<crate::UsageError>());
        assert!(check_cap(10, 10).is_ok());
    }
}
