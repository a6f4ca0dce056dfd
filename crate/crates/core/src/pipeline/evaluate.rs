//! Scores persisted predictions against ground truth.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::convert::{ConvertSummary, RunOutcome};
use super::manifest::DatasetManifest;
use super::{read_file, read_json, run_dir, write_file, write_json, PipelineError};
use crate::mermaid::{parse, sanitize, FlowchartAst};
use crate::metrics::{evaluate_prediction, pool, score, Level, LevelCounts, MatchCounts};

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct LevelScore {
    pub tp: u64,
    pub fp: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

impl From<MatchCounts> for LevelScore {
    fn from(c: MatchCounts) -> Self {
        let s = score(c);
        Self {
            tp: c.tp,
            fp: c.fp,
            fn_: c.fn_,
            precision: s.precision,
            recall: s.recall,
            f1: s.f1,
        }
    }
}

pub type LevelScores = BTreeMap<Level, LevelScore>;

fn level_scores(c: &LevelCounts) -> LevelScores {
    Level::ALL.iter().map(|&l| (l, c.get(l).into())).collect()
}

fn counts_of(scores: &LevelScores) -> LevelCounts {
    let get = |l: Level| {
        scores
            .get(&l)
            .map(|s| MatchCounts::new(s.tp, s.fp, s.fn_))
            .unwrap_or_default()
    };
    LevelCounts {
        node: get(Level::Node),
        edge: get(Level::Edge),
        path: get(Level::Path),
    }
}

/// One (flowchart, run) pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub flowchart_id: String,
    pub run: u32,
    pub valid: bool,
    pub levels: LevelScores,
}

impl RunRecord {
    pub fn counts(&self) -> LevelCounts {
        counts_of(&self.levels)
    }
}

/// Micro-average over one flowchart's runs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlowchartScore {
    pub flowchart_id: String,
    pub levels: LevelScores,
}

/// Contents of `results.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Results {
    pub condition: String,
    pub runs: u32,
    pub per_run: Vec<RunRecord>,
    pub per_flowchart: Vec<FlowchartScore>,
    /// Micro-average over every run record.
    pub global: LevelScores,
}

impl Results {
    pub fn load(path: &Path) -> Result<Self, PipelineError> {
        read_json(path)
    }

    pub fn flowchart_ids(&self) -> Vec<&str> {
        self.per_flowchart.iter().map(|f| f.flowchart_id.as_str()).collect()
    }

    pub fn global_level(&self, level: Level) -> LevelScore {
        self.global.get(&level).copied().unwrap_or_default()
    }
}

pub(crate) fn parse_code(code: &str) -> Option<FlowchartAst> {
    parse(&sanitize(code)).ok()
}

pub fn load_truth(id: &str, path: &Path) -> Result<FlowchartAst, PipelineError> {
    parse(&sanitize(&read_file(path)?)).map_err(|d| PipelineError::Truth {
        id: id.to_string(),
        message: d.to_string(),
    })
}

/// Evaluates `<out>/<label>/` as written by convert.
pub fn evaluate(manifest: &DatasetManifest, out: &Path, label: &str) -> Result<Results, PipelineError> {
    let root = out.join(label);
    let summary: ConvertSummary = read_json(&root.join("convert.json"))?;
    let mut per_run = Vec::with_capacity(manifest.len() * summary.runs as usize);
    let mut per_flowchart = Vec::with_capacity(manifest.len());
    for entry in &manifest.entries {
        let truth = load_truth(&entry.id, &entry.truth_path)?;
        let mut mine = Vec::with_capacity(summary.runs as usize);
        for run in 1..=summary.runs {
            let dir = run_dir(out, label, &entry.id, run);
            let pred = match std::fs::read_to_string(dir.join("final.mmd")) {
                Ok(code) => parse_code(&code),
                Err(_) => {
                    log::warn!("{label}/{}/run{run}: no final.mmd, scored as empty", entry.id);
                    None
                }
            };
            if let Ok(outcome) = read_json::<RunOutcome>(&dir.join("outcome.json")) {
                if outcome.valid != pred.is_some() {
                    log::warn!("{label}/{}/run{run}: outcome validity disagrees with final.mmd", entry.id);
                }
            }
            let counts = evaluate_prediction(pred.as_ref(), &truth)?;
            mine.push(counts);
            per_run.push(RunRecord {
                flowchart_id: entry.id.clone(),
                run,
                valid: pred.is_some(),
                levels: level_scores(&counts),
            });
        }
        per_flowchart.push(FlowchartScore {
            flowchart_id: entry.id.clone(),
            levels: level_scores(&pool(&mine)),
        });
    }
    let all: Vec<LevelCounts> = per_run.iter().map(RunRecord::counts).collect();
    Ok(Results {
        condition: label.to_string(),
        runs: summary.runs,
        global: level_scores(&pool(&all)),
        per_run,
        per_flowchart,
    })
}

#[derive(Serialize)]
struct CsvRow<'a> {
    scope: &'a str,
    flowchart_id: &'a str,
    run: Option<u32>,
    level: Level,
    tp: u64,
    fp: u64,
    #[serde(rename = "fn")]
    fn_: u64,
    precision: f64,
    recall: f64,
    f1: f64,
}

fn rows<'a>(
    scope: &'a str,
    flowchart_id: &'a str,
    run: Option<u32>,
    levels: &'a LevelScores,
) -> impl Iterator<Item = CsvRow<'a>> + 'a {
    levels.iter().map(move |(&level, s)| CsvRow {
        scope,
        flowchart_id,
        run,
        level,
        tp: s.tp,
        fp: s.fp,
        fn_: s.fn_,
        precision: s.precision,
        recall: s.recall,
        f1: s.f1,
    })
}

pub fn summary_csv(results: &Results) -> Result<String, PipelineError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut all: Vec<CsvRow> = Vec::new();
    all.extend(rows("global", "", None, &results.global));
    for f in &results.per_flowchart {
        all.extend(rows("flowchart", &f.flowchart_id, None, &f.levels));
    }
    for r in &results.per_run {
        all.extend(rows("run", &r.flowchart_id, Some(r.run), &r.levels));
    }
    for row in all {
        w.serialize(row).map_err(|e| PipelineError::Config(e.to_string()))?;
    }
    let bytes = w.into_inner().map_err(|e| PipelineError::Config(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

/// Writes `results.json` and `summary.csv` into `dir`.
pub fn write_results(dir: &Path, results: &Results) -> Result<(), PipelineError> {
    write_json(&dir.join("results.json"), results)?;
    write_file(&dir.join("summary.csv"), summary_csv(results)?)
}
