//! Result files: trial records, accuracy tables, MCM, method correlation and
//! optional SVG line plots.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::error::Result;
use crate::experiment::{accuracy_table, Method, TrialRecord};
use crate::extmetrics::pearson;
use crate::stats::mcm;

/// Output format for the comparison table.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TableFormat {
    Csv,
    Markdown,
}

impl std::str::FromStr for TableFormat {
    type Err = crate::error::Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(TableFormat::Csv),
            "md" => Ok(TableFormat::Markdown),
            other => Err(crate::error::Error::Parse(format!(
                "unknown format '{other}' (expected csv or md)"
            ))),
        }
    }
}

/// Renders the full trial record list as CSV.
pub fn records_csv(records: &[TrialRecord]) -> String {
    let mut out = String::from("kind,value,trial,method,selected_k,true_k,correct\n");
    for r in records {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{}",
            r.kind, r.value, r.trial, r.method, r.selected_k, r.true_k, r.correct
        );
    }
    out
}

/// Renders the per-(value, method) accuracy table as CSV.
pub fn accuracy_csv(records: &[TrialRecord]) -> String {
    let mut out = String::from("kind,value,method,trials,accuracy\n");
    let kind = records.first().map(|r| r.kind.name()).unwrap_or("");
    for (value, method, trials, accuracy) in accuracy_table(records) {
        let _ = writeln!(out, "{kind},{value},{method},{trials},{accuracy}");
    }
    out
}

/// Per-method accuracy vectors over the swept values, paired by value and
/// ordered as the methods appear in `Method::ALL`.
pub fn method_accuracy_vectors(records: &[TrialRecord]) -> Vec<(String, Vec<f64>)> {
    let table = accuracy_table(records);
    let mut methods: Vec<Method> = Vec::new();
    for &(_, m, _, _) in &table {
        if !methods.contains(&m) {
            methods.push(m);
        }
    }
    methods.sort();
    let mut values: Vec<f64> = Vec::new();
    for &(v, _, _, _) in &table {
        if !values.iter().any(|x| x.to_bits() == v.to_bits()) {
            values.push(v);
        }
    }
    methods
        .into_iter()
        .map(|m| {
            let vec: Vec<f64> = values
                .iter()
                .map(|v| {
                    table
                        .iter()
                        .find(|&&(tv, tm, _, _)| tv.to_bits() == v.to_bits() && tm == m)
                        .map(|&(_, _, _, acc)| acc)
                        .unwrap_or(f64::NAN)
                })
                .collect();
            (m.name().to_string(), vec)
        })
        .collect()
}

/// Pairwise Pearson correlation between the methods' accuracy vectors.
/// Undefined correlations (constant vectors) are reported as empty fields.
pub fn correlation_csv(entries: &[(String, Vec<f64>)]) -> String {
    let mut out = String::from("method_a,method_b,pearson\n");
    for (i, (a, va)) in entries.iter().enumerate() {
        for (b, vb) in entries.iter().skip(i + 1) {
            match pearson(va, vb) {
                Ok(r) => {
                    let _ = writeln!(out, "{a},{b},{r}");
                }
                Err(_) => {
                    let _ = writeln!(out, "{a},{b},");
                }
            }
        }
    }
    out
}

const SVG_COLORS: [&str; 7] =
    ["#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#17becf"];

/// A minimal accuracy-vs-swept-value line plot.
pub fn accuracy_svg(records: &[TrialRecord]) -> String {
    let table = accuracy_table(records);
    let mut values: Vec<f64> = Vec::new();
    for &(v, _, _, _) in &table {
        if !values.iter().any(|x| x.to_bits() == v.to_bits()) {
            values.push(v);
        }
    }
    let entries = method_accuracy_vectors(records);
    let (w, h) = (800.0, 500.0);
    let (ml, mr, mt, mb) = (70.0, 30.0, 30.0, 60.0);
    let (vmin, vmax) = values
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)));
    let span = if vmax > vmin { vmax - vmin } else { 1.0 };
    let x = |v: f64| ml + (v - vmin) / span * (w - ml - mr);
    let y = |acc: f64| h - mb - acc * (h - mt - mb);

    let mut s = String::new();
    let _ = writeln!(
        s,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w}\" height=\"{h}\" viewBox=\"0 0 {w} {h}\">"
    );
    let _ = writeln!(s, "<rect width=\"{w}\" height=\"{h}\" fill=\"white\"/>");
    // Axes.
    let _ = writeln!(
        s,
        "<line x1=\"{ml}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"black\"/>",
        h - mb,
        w - mr,
        h - mb
    );
    let _ = writeln!(
        s,
        "<line x1=\"{ml}\" y1=\"{mt}\" x2=\"{ml}\" y2=\"{}\" stroke=\"black\"/>",
        h - mb
    );
    for tick in 0..=5 {
        let acc = tick as f64 / 5.0;
        let _ = writeln!(
            s,
            "<text x=\"{}\" y=\"{}\" font-size=\"12\" text-anchor=\"end\">{acc:.1}</text>",
            ml - 8.0,
            y(acc) + 4.0
        );
        let _ = writeln!(
            s,
            "<line x1=\"{}\" y1=\"{}\" x2=\"{ml}\" y2=\"{}\" stroke=\"black\"/>",
            ml - 4.0,
            y(acc),
            y(acc)
        );
    }
    for &v in &values {
        let _ = writeln!(
            s,
            "<text x=\"{}\" y=\"{}\" font-size=\"12\" text-anchor=\"middle\">{v}</text>",
            x(v),
            h - mb + 18.0
        );
    }
    for (idx, (name, accs)) in entries.iter().enumerate() {
        let color = SVG_COLORS[idx % SVG_COLORS.len()];
        let points: Vec<String> = values
            .iter()
            .zip(accs)
            .filter(|(_, a)| a.is_finite())
            .map(|(&v, &a)| format!("{},{}", x(v), y(a)))
            .collect();
        let _ = writeln!(
            s,
            "<polyline fill=\"none\" stroke=\"{color}\" stroke-width=\"2\" points=\"{}\"/>",
            points.join(" ")
        );
        let _ = writeln!(
            s,
            "<text x=\"{}\" y=\"{}\" font-size=\"13\" fill=\"{color}\">{name}</text>",
            w - mr - 90.0,
            mt + 16.0 * (idx + 1) as f64
        );
    }
    let _ = writeln!(
        s,
        "<text x=\"{}\" y=\"{}\" font-size=\"13\" text-anchor=\"middle\">swept value</text>",
        (ml + w - mr) / 2.0,
        h - 15.0
    );
    s.push_str("</svg>\n");
    s
}

/// Writes the standard result files into `out_dir` and returns their paths:
/// `records.csv`, `accuracy.csv`, `mcm.csv`/`mcm.md` (when at least two
/// methods are present), `method_correlation.csv` and optionally
/// `accuracy.svg`.
pub fn report(
    records: &[TrialRecord],
    out_dir: &Path,
    format: TableFormat,
    plots: bool,
) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(out_dir)?;
    let mut written = Vec::new();

    let write = |name: &str, content: String| -> Result<PathBuf> {
        let path = out_dir.join(name);
        std::fs::write(&path, content)?;
        Ok(path)
    };

    written.push(write("records.csv", records_csv(records))?);
    written.push(write("accuracy.csv", accuracy_csv(records))?);

    let entries = method_accuracy_vectors(records);
    if entries.len() >= 2 {
        let table = mcm(&entries)?;
        let (name, content) = match format {
            TableFormat::Csv => ("mcm.csv", table.to_csv()),
            TableFormat::Markdown => ("mcm.md", table.to_markdown()),
        };
        written.push(write(name, content)?);
        written.push(write("method_correlation.csv", correlation_csv(&entries))?);
    }
    if plots && !records.is_empty() {
        written.push(write("accuracy.svg", accuracy_svg(records))?);
    }
    Ok(written)
}
