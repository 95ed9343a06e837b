//! CSV and SVG output.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::io::{Read, Write};

use crate::diagnostics::DiagnosticRun;
use crate::error::{HarnessError, Result};
use crate::runner::RunTrace;
use crate::score::{mean_and_se, ScoreTable};

pub const TRACE_HEADER: [&str; 6] = ["method", "function", "repeat", "round", "best_so_far", "wall_time_s"];
pub const SCORE_HEADER: [&str; 3] = ["method", "score", "se"];

/// Writes one row per completed round, in trace order; rounds count from 1.
pub fn write_traces<W: Write>(w: W, traces: &[RunTrace]) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(TRACE_HEADER)?;
    for t in traces {
        for (i, (best, time)) in t.best_so_far.iter().zip(&t.wall_time).enumerate() {
            out.write_record([
                t.method.clone(),
                t.function.clone(),
                t.repeat.to_string(),
                (i + 1).to_string(),
                best.to_string(),
                time.to_string(),
            ])?;
        }
    }
    out.flush()?;
    Ok(())
}

fn parse_field<T: std::str::FromStr>(record: &csv::StringRecord, i: usize, line: u64) -> Result<T> {
    let raw = record.get(i).unwrap_or("");
    raw.parse()
        .map_err(|_| HarnessError::Score(format!("line {line}: bad {} `{raw}`", TRACE_HEADER[i])))
}

/// Reads traces written by [`write_traces`]. Rounds of each trace must be
/// consecutive from 1.
pub fn read_traces<R: Read>(r: R) -> Result<Vec<RunTrace>> {
    let mut input = csv::Reader::from_reader(r);
    if input.headers()?.iter().ne(TRACE_HEADER) {
        return Err(HarnessError::Score(format!(
            "trace header must be {}",
            TRACE_HEADER.join(",")
        )));
    }
    let mut traces: Vec<RunTrace> = Vec::new();
    let mut index: HashMap<(String, String, usize), usize> = HashMap::new();
    for record in input.records() {
        let record = record?;
        let line = record.position().map_or(0, |p| p.line());
        let repeat: usize = parse_field(&record, 2, line)?;
        let round: usize = parse_field(&record, 3, line)?;
        let best: f64 = parse_field(&record, 4, line)?;
        let time: f64 = parse_field(&record, 5, line)?;
        let key = (record[0].to_string(), record[1].to_string(), repeat);
        let slot = *index.entry(key.clone()).or_insert_with(|| {
            traces.push(RunTrace {
                method: key.0.clone(),
                function: key.1.clone(),
                repeat,
                best_so_far: Vec::new(),
                wall_time: Vec::new(),
                arms: Vec::new(),
                values: Vec::new(),
                error: None,
            });
            traces.len() - 1
        });
        let t = &mut traces[slot];
        if round != t.best_so_far.len() + 1 {
            return Err(HarnessError::Score(format!(
                "line {line}: expected round {} of {} on {} (repeat {repeat}), got {round}",
                t.best_so_far.len() + 1,
                t.method,
                t.function
            )));
        }
        t.best_so_far.push(best);
        t.wall_time.push(time);
    }
    Ok(traces)
}

pub fn write_scores<W: Write>(w: W, table: &ScoreTable) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(SCORE_HEADER)?;
    for ((m, s), se) in table.methods.iter().zip(&table.scores).zip(&table.se) {
        out.write_record([m.clone(), s.to_string(), se.to_string()])?;
    }
    out.flush()?;
    Ok(())
}

pub fn write_diagnostics<W: Write>(w: W, runs: &[DiagnosticRun]) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record([
        "sampler",
        "seed",
        "rmse",
        "bias",
        "scale",
        "std_p_max",
        "duration_s",
        "round_time_s",
        "final_best",
    ])?;
    for r in runs {
        out.write_record([
            r.sampler.clone(),
            r.seed_index.to_string(),
            r.record.rmse.to_string(),
            r.record.bias.to_string(),
            r.record.scale.to_string(),
            r.record.std_p_max.to_string(),
            r.record.duration.to_string(),
            r.mean_round_time.to_string(),
            r.final_best.to_string(),
        ])?;
    }
    out.flush()?;
    Ok(())
}

const PALETTE: [&str; 8] = [
    "#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f",
];

/// Line chart of best-so-far on one function: per method, the mean over
/// repeats with a band of ±2 standard errors.
pub fn svg_chart(traces: &[RunTrace], function: &str) -> String {
    let (w, h, margin) = (640.0, 400.0, 50.0);
    let mut methods: Vec<&str> = Vec::new();
    for t in traces.iter().filter(|t| t.function == function) {
        if !methods.contains(&t.method.as_str()) {
            methods.push(&t.method);
        }
    }
    let series: Vec<(&str, Vec<(f64, f64)>)> = methods
        .iter()
        .map(|&m| {
            let runs: Vec<&RunTrace> = traces
                .iter()
                .filter(|t| t.function == function && t.method == m)
                .collect();
            let rounds = runs.iter().map(|t| t.num_rounds()).min().unwrap_or(0);
            let stats = (0..rounds)
                .map(|i| mean_and_se(&runs.iter().map(|t| t.best_so_far[i]).collect::<Vec<_>>()))
                .collect();
            (m, stats)
        })
        .collect();
    let rounds = series.iter().map(|(_, s)| s.len()).max().unwrap_or(0).max(2);
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for (_, s) in &series {
        for &(m, se) in s {
            lo = lo.min(m - 2.0 * se);
            hi = hi.max(m + 2.0 * se);
        }
    }
    if !lo.is_finite() || !hi.is_finite() {
        (lo, hi) = (0.0, 1.0);
    }
    if hi - lo < 1e-12 {
        (lo, hi) = (lo - 0.5, hi + 0.5);
    }
    let px = |i: usize| margin + (w - 2.0 * margin) * i as f64 / (rounds - 1) as f64;
    let py = |v: f64| h - margin - (h - 2.0 * margin) * (v - lo) / (hi - lo);
    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(svg, r#"<rect width="{w}" height="{h}" fill="white"/>"#);
    let _ = writeln!(
        svg,
        r#"<text x="{}" y="20" text-anchor="middle">{function}</text>"#,
        w / 2.0
    );
    let _ = writeln!(
        svg,
        r#"<polyline points="{m},{t} {m},{b} {r},{b}" fill="none" stroke="black"/>"#,
        m = margin,
        t = margin,
        b = h - margin,
        r = w - margin
    );
    let _ = writeln!(
        svg,
        r#"<text x="{}" y="{}" text-anchor="middle">round</text>"#,
        w / 2.0,
        h - 15.0
    );
    let _ = writeln!(
        svg,
        r#"<text x="{}" y="{}" text-anchor="end">{hi:.3}</text>"#,
        margin - 4.0,
        margin + 4.0
    );
    let _ = writeln!(
        svg,
        r#"<text x="{}" y="{}" text-anchor="end">{lo:.3}</text>"#,
        margin - 4.0,
        h - margin
    );
    for (k, (name, stats)) in series.iter().enumerate() {
        let color = PALETTE[k % PALETTE.len()];
        let upper = stats
            .iter()
            .enumerate()
            .map(|(i, (m, se))| format!("{:.2},{:.2}", px(i), py(m + 2.0 * se)));
        let lower = stats
            .iter()
            .enumerate()
            .rev()
            .map(|(i, (m, se))| format!("{:.2},{:.2}", px(i), py(m - 2.0 * se)));
        let band: Vec<String> = upper.chain(lower).collect();
        let _ = writeln!(
            svg,
            r#"<polygon points="{}" fill="{color}" fill-opacity="0.2" stroke="none"/>"#,
            band.join(" ")
        );
        let line: Vec<String> = stats
            .iter()
            .enumerate()
            .map(|(i, (m, _))| format!("{:.2},{:.2}", px(i), py(*m)))
            .collect();
        let _ = writeln!(
            svg,
            r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="2"/>"#,
            line.join(" ")
        );
        let ly = margin + 16.0 * k as f64;
        let _ = writeln!(
            svg,
            r#"<text x="{}" y="{ly}" fill="{color}">{name}</text>"#,
            w - margin - 80.0
        );
    }
    svg.push_str("</svg>\n");
    svg
}
