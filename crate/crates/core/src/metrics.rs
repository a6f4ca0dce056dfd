//! Node, edge and path matching with micro and per-flowchart aggregation.
//!
//! Labels are compared by exact, case-sensitive string equality. One-to-one
//! matching under exact equality reduces to multiset intersection: the true
//! positives for a key are `min(count_pred, count_truth)`.

use std::collections::HashMap;
use std::fmt;
use std::hash::Hash;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::flowgraph::{enumerate_paths, to_graph, PathError};
use crate::mermaid::FlowchartAst;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum MetricsError {
    #[error("nothing to aggregate")]
    Empty,
    #[error("ground truth paths: {0}")]
    TruthPaths(#[from] PathError),
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct MatchCounts {
    pub tp: u64,
    pub fp: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
}

impl MatchCounts {
    pub fn new(tp: u64, fp: u64, fn_: u64) -> Self {
        Self { tp, fp, fn_ }
    }

    pub fn score(&self) -> Prf {
        score(*self)
    }
}

impl std::ops::Add for MatchCounts {
    type Output = MatchCounts;
    fn add(self, o: MatchCounts) -> MatchCounts {
        MatchCounts::new(self.tp + o.tp, self.fp + o.fp, self.fn_ + o.fn_)
    }
}

impl std::iter::Sum for MatchCounts {
    fn sum<I: Iterator<Item = MatchCounts>>(iter: I) -> Self {
        iter.fold(MatchCounts::default(), |a, b| a + b)
    }
}

/// Precision, recall and F1.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Prf {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Level {
    Node,
    Edge,
    Path,
}

impl Level {
    pub const ALL: [Level; 3] = [Level::Node, Level::Edge, Level::Path];

    pub fn as_str(self) -> &'static str {
        match self {
            Level::Node => "node",
            Level::Edge => "edge",
            Level::Path => "path",
        }
    }
}

impl fmt::Display for Level {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Counts at every level for one prediction.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct LevelCounts {
    pub node: MatchCounts,
    pub edge: MatchCounts,
    pub path: MatchCounts,
}

impl LevelCounts {
    pub fn get(&self, level: Level) -> MatchCounts {
        match level {
            Level::Node => self.node,
            Level::Edge => self.edge,
            Level::Path => self.path,
        }
    }
}

impl std::ops::Add for LevelCounts {
    type Output = LevelCounts;
    fn add(self, o: LevelCounts) -> LevelCounts {
        LevelCounts {
            node: self.node + o.node,
            edge: self.edge + o.edge,
            path: self.path + o.path,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct ScoreCard {
    pub node: Prf,
    pub edge: Prf,
    pub path: Prf,
}

impl ScoreCard {
    pub fn get(&self, level: Level) -> Prf {
        match level {
            Level::Node => self.node,
            Level::Edge => self.edge,
            Level::Path => self.path,
        }
    }
}

impl From<LevelCounts> for ScoreCard {
    fn from(c: LevelCounts) -> Self {
        ScoreCard {
            node: score(c.node),
            edge: score(c.edge),
            path: score(c.path),
        }
    }
}

fn ratio(num: u64, den: u64) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

pub fn score(c: MatchCounts) -> Prf {
    let precision = ratio(c.tp, c.tp + c.fp);
    let recall = ratio(c.tp, c.tp + c.fn_);
    let f1 = if precision + recall > 0.0 {
        2.0 * precision * recall / (precision + recall)
    } else {
        0.0
    };
    Prf {
        precision,
        recall,
        f1,
    }
}

/// Exact one-to-one matching of two key multisets.
pub fn match_multiset<K: Eq + Hash>(pred: &[K], truth: &[K]) -> MatchCounts {
    let mut available: HashMap<&K, u64> = HashMap::new();
    for k in truth {
        *available.entry(k).or_default() += 1;
    }
    let mut tp = 0;
    for k in pred {
        if let Some(n) = available.get_mut(k) {
            if *n > 0 {
                *n -= 1;
                tp += 1;
            }
        }
    }
    MatchCounts::new(tp, pred.len() as u64 - tp, truth.len() as u64 - tp)
}

/// Pools counts over all records, then scores once per level.
pub fn micro_aggregate(records: &[LevelCounts]) -> Result<ScoreCard, MetricsError> {
    if records.is_empty() {
        return Err(MetricsError::Empty);
    }
    Ok(pool(records).into())
}

/// Pools one flowchart's runs into its paired observation.
pub fn per_flowchart_aggregate(runs: &[LevelCounts]) -> Result<ScoreCard, MetricsError> {
    micro_aggregate(runs)
}

pub fn pool(records: &[LevelCounts]) -> LevelCounts {
    records
        .iter()
        .copied()
        .fold(LevelCounts::default(), |a, b| a + b)
}

pub type EdgeKey = (String, String, String);

pub fn node_keys(ast: &FlowchartAst) -> Vec<String> {
    ast.nodes.iter().map(|n| n.label.clone()).collect()
}

/// `(source_label, target_label, edge_label)` for every edge as written.
pub fn edge_keys(ast: &FlowchartAst) -> Vec<EdgeKey> {
    let labels: HashMap<&str, &str> = ast
        .nodes
        .iter()
        .map(|n| (n.id.as_str(), n.label.as_str()))
        .collect();
    let label_of = |id: &str| labels.get(id).copied().unwrap_or(id).to_string();
    ast.edges
        .iter()
        .map(|e| (label_of(&e.source), label_of(&e.target), e.label.clone()))
        .collect()
}

pub fn path_keys(ast: &FlowchartAst) -> Result<Vec<Vec<String>>, PathError> {
    Ok(enumerate_paths(&to_graph(ast))?
        .into_iter()
        .map(|p| p.node_labels)
        .collect())
}

/// Counts for one prediction against its ground truth. A missing
/// prediction (unparseable or absent) matches nothing. A prediction whose
/// paths overflow the enumeration guard contributes no paths.
pub fn evaluate_prediction(
    pred: Option<&FlowchartAst>,
    truth: &FlowchartAst,
) -> Result<LevelCounts, MetricsError> {
    let truth_paths = path_keys(truth)?;
    let truth_nodes = node_keys(truth);
    let truth_edges = edge_keys(truth);
    let Some(pred) = pred else {
        return Ok(LevelCounts {
            node: MatchCounts::new(0, 0, truth_nodes.len() as u64),
            edge: MatchCounts::new(0, 0, truth_edges.len() as u64),
            path: MatchCounts::new(0, 0, truth_paths.len() as u64),
        });
    };
    let pred_paths = path_keys(pred).unwrap_or_default();
    Ok(LevelCounts {
        node: match_multiset(&node_keys(pred), &truth_nodes),
        edge: match_multiset(&edge_keys(pred), &truth_edges),
        path: match_multiset(&pred_paths, &truth_paths),
    })
}
