//! Paired comparison of two evaluated conditions over the same manifest.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::evaluate::{LevelScore, Results};
use super::{write_file, write_json, PipelineError};
use crate::metrics::Level;
use crate::stats::{analyze, DeltaMode, PairedSample, StatsReport, MEDIUM_BELOW, NEGLIGIBLE_BELOW, SMALL_BELOW};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Metric {
    Precision,
    Recall,
    F1,
}

impl Metric {
    pub const ALL: [Metric; 3] = [Metric::Precision, Metric::Recall, Metric::F1];

    pub fn short(self) -> &'static str {
        match self {
            Metric::Precision => "P",
            Metric::Recall => "R",
            Metric::F1 => "F1",
        }
    }

    pub fn of(self, s: &LevelScore) -> f64 {
        match self {
            Metric::Precision => s.precision,
            Metric::Recall => s.recall,
            Metric::F1 => s.f1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricComparison {
    pub level: Level,
    pub metric: Metric,
    /// Global micro-averages.
    pub a_global: f64,
    pub b_global: f64,
    pub report: StatsReport,
}

/// Contents of `stats.json`. Condition `a` is tested for improvement over `b`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub a: String,
    pub b: String,
    pub n: usize,
    pub delta_mode: DeltaMode,
    pub rows: Vec<MetricComparison>,
}

pub fn compare(a: &Results, b: &Results, mode: DeltaMode) -> Result<Comparison, PipelineError> {
    let mut ids_a = a.flowchart_ids();
    let mut ids_b = b.flowchart_ids();
    ids_a.sort_unstable();
    ids_b.sort_unstable();
    if ids_a != ids_b {
        return Err(PipelineError::Mismatch(format!(
            "{} covers {} flowcharts and {} covers {}, or their ids differ",
            a.condition,
            ids_a.len(),
            b.condition,
            ids_b.len()
        )));
    }
    if ids_a.is_empty() {
        return Err(PipelineError::Mismatch("no flowcharts to compare".into()));
    }
    let b_by_id: HashMap<&str, _> = b
        .per_flowchart
        .iter()
        .map(|f| (f.flowchart_id.as_str(), &f.levels))
        .collect();
    let mut rows = Vec::with_capacity(9);
    for level in Level::ALL {
        for metric in Metric::ALL {
            let mut labels = Vec::with_capacity(ids_a.len());
            let mut xs = Vec::with_capacity(ids_a.len());
            let mut ys = Vec::with_capacity(ids_a.len());
            for f in &a.per_flowchart {
                let other = b_by_id[f.flowchart_id.as_str()];
                labels.push(f.flowchart_id.clone());
                xs.push(metric.of(&f.levels.get(&level).copied().unwrap_or_default()));
                ys.push(metric.of(&other.get(&level).copied().unwrap_or_default()));
            }
            let sample = PairedSample::new(labels, xs, ys)?;
            rows.push(MetricComparison {
                level,
                metric,
                a_global: metric.of(&a.global_level(level)),
                b_global: metric.of(&b.global_level(level)),
                report: analyze(&sample, mode),
            });
        }
    }
    Ok(Comparison {
        a: a.condition.clone(),
        b: b.condition.clone(),
        n: ids_a.len(),
        delta_mode: mode,
        rows,
    })
}

fn format_p(p: Option<f64>) -> String {
    match p {
        None => "n/a".into(),
        Some(p) if p < 0.001 => "<0.001".into(),
        Some(p) => format!("{p:.3}"),
    }
}

fn pct(v: f64) -> String {
    format!("{:.2}%", v * 100.0)
}

pub fn render_stats_txt(c: &Comparison) -> String {
    let mut s = String::new();
    let mode = match c.delta_mode {
        DeltaMode::AllPairs => "all pairs",
        DeltaMode::WithinPair => "within pairs",
    };
    let _ = writeln!(s, "{} vs {} over {} flowcharts", c.a, c.b, c.n);
    let _ = writeln!(
        s,
        "p: one-sided Wilcoxon signed-rank ({} > {}); delta: Cliff's delta ({mode}); W/T/L: per-flowchart wins/ties/losses of {}",
        c.a, c.b, c.a
    );
    let _ = writeln!(s);
    let wa = c.a.len().max(8);
    let wb = c.b.len().max(8);
    let _ = writeln!(
        s,
        "{:<6} {:<6} {:>wa$} {:>wb$} {:>8} {:>10} {:>10}",
        "Level", "Metric", c.a, c.b, "p", "delta", "W/T/L"
    );
    for r in &c.rows {
        let delta = format!("{:.3}^{}", r.report.delta, r.report.magnitude.letter());
        let wtl = format!("{}/{}/{}", r.report.wins, r.report.ties, r.report.losses);
        let _ = writeln!(
            s,
            "{:<6} {:<6} {:>wa$} {:>wb$} {:>8} {:>10} {:>10}",
            r.level.as_str(),
            r.metric.short(),
            pct(r.a_global),
            pct(r.b_global),
            format_p(r.report.p_value),
            delta,
            wtl
        );
    }
    let _ = writeln!(s);
    let _ = writeln!(
        s,
        "Effect size: N negligible (|delta| < {NEGLIGIBLE_BELOW}), S small (< {SMALL_BELOW}), M medium (< {MEDIUM_BELOW}), L large (>= {MEDIUM_BELOW})."
    );
    let _ = writeln!(s, "p is n/a when every paired difference is zero.");
    s
}

/// Writes `stats.json` and `stats.txt` into `dir`.
pub fn write_comparison(dir: &Path, c: &Comparison) -> Result<(), PipelineError> {
    write_json(&dir.join("stats.json"), c)?;
    write_file(&dir.join("stats.txt"), render_stats_txt(c))
}
