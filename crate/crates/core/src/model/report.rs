use std::fmt::Write as _;

use serde::Serialize;

use super::metrics::OffsetStats;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct HistogramBin {
    /// Inclusive lower edge, seconds.
    pub start: f64,
    /// Exclusive upper edge, seconds.
    pub end: f64,
    pub count: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Report {
    pub table: String,
    pub histogram: Vec<HistogramBin>,
}

impl Report {
    /// `bin_start,count` rows with a header line.
    pub fn histogram_csv(&self) -> String {
        let mut out = String::from("bin_start,count\n");
        for b in &self.histogram {
            let _ = writeln!(out, "{},{}", b.start, b.count);
        }
        out
    }
}

/// Contiguous histogram of `deltas` with edges on multiples of `bin_s`.
pub fn histogram(deltas: &[f64], bin_s: f64) -> Vec<HistogramBin> {
    assert!(bin_s > 0.0, "histogram bin width must be positive");
    if deltas.is_empty() {
        return Vec::new();
    }
    let index = |d: f64| (d / bin_s).floor() as i64;
    let lo = deltas.iter().copied().map(index).min().unwrap();
    let hi = deltas.iter().copied().map(index).max().unwrap();
    let mut counts = vec![0usize; (hi - lo + 1) as usize];
    for d in deltas {
        counts[(index(*d) - lo) as usize] += 1;
    }
    counts
        .into_iter()
        .enumerate()
        .map(|(i, count)| {
            let start = (lo + i as i64) as f64 * bin_s;
            HistogramBin {
                start,
                end: start + bin_s,
                count,
            }
        })
        .collect()
}

/// Two-column table: avg(Δ), avg(|Δ|), then one row per window.
pub fn render_table(stats: &OffsetStats) -> String {
    let mut rows: Vec<(String, String)> = vec![
        ("avg(Δ) (s)".into(), format!("{:.2}", stats.avg_delta)),
        ("avg(|Δ|) (s)".into(), format!("{:.2}", stats.avg_abs_delta)),
    ];
    for w in &stats.window_coverage {
        rows.push((
            format!("window_{} (%)", w.window_s),
            format!("{:.2}", w.percent),
        ));
    }
    let label_w = rows
        .iter()
        .map(|(l, _)| l.chars().count())
        .max()
        .unwrap_or(0)
        .max(6);
    let value_w = rows.iter().map(|(_, v)| v.len()).max().unwrap_or(0).max(5);
    let mut out = String::new();
    let _ = writeln!(out, "{:<label_w$}  {:>value_w$}", "metric", "value");
    let _ = writeln!(out, "{}", "-".repeat(label_w + 2 + value_w));
    for (label, value) in rows {
        let pad = label_w - label.chars().count();
        let _ = writeln!(out, "{label}{}  {value:>value_w$}", " ".repeat(pad));
    }
    let _ = writeln!(out, "n = {}", stats.deltas.len());
    out
}

pub fn render_report(stats: &OffsetStats, histogram_bin_s: f64) -> Report {
    Report {
        table: render_table(stats),
        histogram: histogram(&stats.deltas, histogram_bin_s),
    }
}
