//! The `repro` report: every reference value recomputed and checked against
//! its tolerance in one run.

use anyhow::Result;
use serde::Serialize;
use serde_json::{json, Value};

use mbonacci::chain::{density_lower_bound, upper_density_closed_form, Chain};
use mbonacci::frame::{beurling_threshold, FrameProbe};
use mbonacci::numbersys::{trib_expand, GapReport};
use mbonacci::substitution::{Alphabet, WordStream};

use crate::args::ReproArgs;
use crate::commands::{density_csv, density_report, frame_csv, gap_reports, gaps_csv, perron_data, DensitySummary};
use crate::output::write_atomic;

/// One tolerance check in the report.
#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub id: &'static str,
    pub value: Value,
    pub reference: Value,
    pub tolerance: Option<f64>,
    pub pass: bool,
}

impl Check {
    fn close(id: &'static str, value: f64, reference: f64, tolerance: f64) -> Self {
        Self {
            id,
            value: json!(value),
            reference: json!(reference),
            tolerance: Some(tolerance),
            pass: (value - reference).abs() <= tolerance,
        }
    }

    fn holds(id: &'static str, value: Value, reference: Value, pass: bool) -> Self {
        Self {
            id,
            value,
            reference,
            tolerance: None,
            pass,
        }
    }

    fn equal(id: &'static str, value: Value, reference: Value) -> Self {
        let pass = value == reference;
        Self::holds(id, value, reference, pass)
    }

    fn failed(id: &'static str, err: &anyhow::Error) -> Self {
        Self::holds(id, json!({ "error": format!("{err:#}") }), Value::Null, false)
    }
}

/// Ranges used by one run.
#[derive(Debug, Clone, Serialize)]
pub struct Plan {
    pub gap_nmax: u64,
    pub gap_krange: u64,
    pub density_points: u64,
    pub density_step: f64,
    pub frame_ks: Vec<usize>,
}

impl Plan {
    pub fn new(fast: bool) -> Self {
        if fast {
            Self {
                gap_nmax: 20,
                gap_krange: 10_000,
                density_points: 20_000,
                density_step: 5.0,
                frame_ks: vec![10, 20],
            }
        } else {
            Self {
                gap_nmax: 50,
                gap_krange: 100_000,
                density_points: 20_000,
                density_step: 1.0,
                frame_ks: vec![10, 20, 40, 80],
            }
        }
    }
}

struct Section {
    checks: Vec<Check>,
    data: Value,
    files: Vec<(&'static str, String)>,
}

impl Section {
    fn new() -> Self {
        Self {
            checks: Vec::new(),
            data: Value::Null,
            files: Vec::new(),
        }
    }
}

/// Run every section; returns the JSON text and the number of failed checks.
pub fn run(args: &ReproArgs) -> Result<(String, usize)> {
    let plan = Plan::new(args.fast);
    let names = ["perron", "density", "tribonacci_example", "gaps", "frame"];
    let sections: Vec<Section> = std::thread::scope(|s| {
        let handles = [
            s.spawn(|| guard("perron", perron_section)),
            s.spawn(|| guard("density", || density_section(&plan))),
            s.spawn(|| guard("tribonacci_example", tribonacci_section)),
            s.spawn(|| guard("gaps", || gaps_section(&plan))),
            s.spawn(|| guard("frame", || frame_section(&plan))),
        ];
        handles
            .into_iter()
            .map(|h| h.join().expect("report section panicked"))
            .collect()
    });

    let mut checks = Vec::new();
    let mut doc = serde_json::Map::new();
    doc.insert("schema".into(), json!(1));
    doc.insert("mode".into(), json!(if args.fast { "fast" } else { "full" }));
    doc.insert("plan".into(), serde_json::to_value(&plan)?);
    let mut side_files = Vec::new();
    for (name, section) in names.iter().zip(sections) {
        checks.extend(section.checks);
        doc.insert((*name).into(), section.data);
        side_files.extend(section.files);
    }

    if !args.json_only {
        let mut written = Vec::new();
        for (file, contents) in &side_files {
            let path = args.out_dir.join(file);
            match write_atomic(&path, contents.as_bytes()) {
                Ok(()) => written.push(json!(path.display().to_string())),
                Err(e) => checks.push(Check::failed("side_files", &e)),
            }
        }
        doc.insert("files".into(), Value::Array(written));
    }

    let failed = checks.iter().filter(|c| !c.pass).count();
    doc.insert("pass".into(), json!(failed == 0));
    doc.insert("failed".into(), json!(failed));
    doc.insert("checks".into(), serde_json::to_value(&checks)?);
    Ok((
        format!("{}\n", serde_json::to_string_pretty(&Value::Object(doc))?),
        failed,
    ))
}

/// Turn a section error into a failed check so the run still completes.
fn guard(id: &'static str, f: impl FnOnce() -> Result<Section>) -> Section {
    f().unwrap_or_else(|e| {
        let mut s = Section::new();
        s.checks.push(Check::failed(id, &e));
        s
    })
}

fn perron_section() -> Result<Section> {
    let mut s = Section::new();
    let p2 = perron_data(2, None)?;
    let p3 = perron_data(3, None)?;
    let phi = (1.0 + 5f64.sqrt()) / 2.0;
    s.checks.push(Check::close("rho_2", p2.rho, phi, 1e-10));
    s.checks.push(Check::close("rho_3", p3.rho, 1.83929, 5e-6));
    s.data = json!({
        "rho_2": p2.rho,
        "rho_2_decimal": p2.rho_decimal,
        "rho_3": p3.rho,
        "rho_3_decimal": p3.rho_decimal,
    });
    Ok(s)
}

fn density_section(plan: &Plan) -> Result<Section> {
    let mut s = Section::new();
    let p2 = perron_data(2, None)?;
    let closed = upper_density_closed_form(&p2);
    let lower = density_lower_bound(2);
    let refined = 81.0 / 52.0;
    s.checks
        .push(Check::close("density_closed_form_2", closed, 1.89443, 5e-6));
    s.checks
        .push(Check::equal("density_lower_bound_2", json!(lower), json!(1.25)));
    s.checks.push(Check::holds(
        "density_refined_lower_bound_2",
        json!(refined),
        json!({ "at_least": lower, "at_most": closed }),
        lower <= refined && refined <= closed,
    ));

    let mut forms = Vec::new();
    for m in 2..=30 {
        forms.push(upper_density_closed_form(&perron_data(m, None)?));
    }
    let monotone = forms.windows(2).all(|w| w[0] < w[1]);
    s.checks.push(Check::holds(
        "density_closed_form_increasing",
        json!(monotone),
        json!(true),
        monotone,
    ));
    let last = *forms.last().expect("m = 2..=30");
    s.checks.push(Check::holds(
        "density_closed_form_30",
        json!(last),
        json!({ "greater_than": 2.99 }),
        last > 2.99,
    ));

    let report = density_report(2, plan.density_points, 250.0, 500.0, plan.density_step)?;
    let summary = DensitySummary::new(&report, plan.density_points, plan.density_step);
    let dev = (report.samples.iter())
        .map(|x| (x.ratio / 1.89443 - 1.0).abs())
        .fold(0.0, f64::max);
    s.checks.push(Check::holds(
        "density_scan_band",
        json!(dev),
        json!({ "at_most": 0.02 }),
        dev <= 0.02,
    ));
    s.data = json!({
        "closed_form_2": closed,
        "lower_bound_2": lower,
        "refined_lower_bound_2": refined,
        "closed_form_30": last,
        "scan": summary,
    });
    s.files.push(("density.csv", density_csv(&report)));
    Ok(s)
}

fn tribonacci_section() -> Result<Section> {
    let mut s = Section::new();
    let e = trib_expand(10)?;
    let alphabet = Alphabet::new(3)?;
    let stream = WordStream::with_window(alphabet, 0, 10);
    let prefix = stream.factor(0, 10)?;
    let prefix_text: String = prefix.digits().iter().map(|d| d.to_string()).collect();
    let predicted: Vec<u64> = (1..=3).map(|j| e.prefix_weight(j)).collect();
    let counted: Vec<u64> = prefix.weights().into_iter().map(|w| w as u64).collect();
    s.checks.push(Check::equal(
        "tribonacci_expansion_10",
        json!(e.bit_string()),
        json!("1101"),
    ));
    s.checks.push(Check::equal("tribonacci_top_10", json!(e.top), json!(6)));
    s.checks.push(Check::equal(
        "tribonacci_weights_10",
        json!(predicted),
        json!([6, 3, 1]),
    ));
    s.checks.push(Check::equal(
        "tribonacci_prefix_10",
        json!(prefix_text),
        json!("1213121121"),
    ));
    s.checks.push(Check::equal(
        "tribonacci_weights_counted_10",
        json!(counted),
        json!([6, 3, 1]),
    ));
    s.data = json!({
        "n": 10,
        "L": e.top,
        "bits": e.bit_string(),
        "weights": predicted,
        "prefix": prefix_text,
    });
    Ok(s)
}

fn gaps_section(plan: &Plan) -> Result<Section> {
    let mut s = Section::new();
    let m2 = gap_reports(2, plan.gap_nmax, plan.gap_krange)?;
    let m3 = gap_reports(3, plan.gap_nmax, plan.gap_krange)?;
    let failing = |rows: &[GapReport]| rows.iter().filter(|r| !r.holds).map(|r| r.n).collect::<Vec<_>>();
    let (f2, f3) = (failing(&m2), failing(&m3));
    s.checks.push(Check::holds(
        "gaps_m2_hold",
        json!({ "failing_n": f2 }),
        json!({ "failing_n": [] }),
        f2.is_empty(),
    ));
    s.checks.push(Check::holds(
        "gaps_m3_hold",
        json!({ "failing_n": f3 }),
        json!({ "failing_n": [] }),
        f3.is_empty(),
    ));
    let phi = perron_data(2, None)?.rho;
    s.checks
        .push(Check::close("gaps_m2_min_n1", m2[0].brute_min, phi.powi(-2), 1e-10));
    if let Some(r) = m2.get(1) {
        s.checks.push(Check::close("gaps_m2_min_n2", r.brute_min, 0.5, 1e-10));
    }
    s.data = json!({ "krange": plan.gap_krange, "m2": m2, "m3": m3 });
    s.files.push(("gaps_m2.csv", gaps_csv(&m2)));
    s.files.push(("gaps_m3.csv", gaps_csv(&m3)));
    Ok(s)
}

fn frame_section(plan: &Plan) -> Result<Section> {
    let mut s = Section::new();
    let k_max = *plan.frame_ks.iter().max().expect("at least one K");
    let chain = Chain::build(2, -(k_max as i64), k_max as i64)?;
    let threshold = beurling_threshold(&chain);
    let mut rows = Vec::new();
    let mut above = Vec::new();
    let mut below = Vec::new();
    for &factor in &[1.2, 0.5] {
        let length = factor * threshold;
        for &k in &plan.frame_ks {
            let p = FrameProbe::refined(&chain, k, length)?;
            if factor > 1.0 {
                above.push(p.c1_est);
            } else {
                below.push(p.c1_est);
            }
            rows.push(mbonacci::frame::SweepRow {
                interval_length: length,
                k,
                c1: p.c1_est,
                c2: p.c2_est,
                regime: p.regime,
                c1_digits: p.c1_digits,
            });
        }
    }
    let (first, last) = (plan.frame_ks[0], k_max);
    let ratio = above.last().copied().unwrap_or(f64::NAN) / above[0];
    let decay = below[0] / below.last().copied().unwrap_or(f64::NAN);
    s.checks.push(Check::holds(
        "frame_above_threshold_stable",
        json!({ "k_first": first, "k_last": last, "ratio": ratio }),
        json!({ "ratio_greater_than": 0.5 }),
        ratio > 0.5,
    ));
    s.checks.push(Check::holds(
        "frame_below_threshold_decay",
        json!({ "k_first": first, "k_last": last, "decay": decay }),
        json!({ "decay_at_least": 10.0 }),
        decay >= 10.0,
    ));
    let positive = rows.iter().all(|r| r.c1 > -1e-10);
    s.checks.push(Check::holds(
        "frame_gram_positive",
        json!(positive),
        json!(true),
        positive,
    ));
    let report = mbonacci::frame::FrameReport {
        m: 2,
        threshold,
        probes: rows,
    };
    s.files.push(("frame.csv", frame_csv(&report)));
    s.data = serde_json::to_value(&report)?;
    Ok(s)
}
