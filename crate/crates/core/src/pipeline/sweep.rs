//! Two-stage Canny configuration search. Stage 1 picks thresholds at
//! aperture 3; stage 2 keeps the winning thresholds and tries apertures 5
//! and 7. Configurations are ranked by global micro node F1 + edge F1; on
//! equal keys the configuration evaluated first wins.

use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::config::RunConfig;
use super::convert::{convert, Backend};
use super::evaluate::{evaluate, write_results, LevelScores};
use super::manifest::DatasetManifest;
use super::{write_file, write_json, PipelineError};
use crate::imaging::CannyParams;
use crate::metrics::Level;
use crate::vlm::Condition;

/// Stage-1 low/high ratios must lie in this range. Table entry C1 (30/100)
/// sits at 10:3, so the upper bound is 10/3 rather than 3.
pub const MIN_RATIO: f32 = 2.0;
pub const MAX_RATIO: f32 = 10.0 / 3.0;

fn cfg(id: &str, low: f32, high: f32, aperture: u32) -> CannyParams {
    CannyParams {
        low,
        high,
        aperture,
        config_id: Some(id.to_string()),
    }
}

/// The fixed configurations, with C5 as a copy of `reference` (the
/// stage-1 winner).
pub fn registry_with_reference(reference: &CannyParams) -> Vec<CannyParams> {
    vec![
        cfg("C1", 30.0, 100.0, 3),
        cfg("C2", 50.0, 150.0, 3),
        cfg("C3", 100.0, 200.0, 3),
        cfg("C4", 100.0, 300.0, 3),
        cfg("C5", reference.low, reference.high, reference.aperture),
        cfg("C6", 100.0, 200.0, 5),
        cfg("C7", 100.0, 200.0, 7),
        cfg("C8", 50.0, 150.0, 5),
        cfg("C9", 50.0, 150.0, 7),
    ]
}

/// Registry with C5 defaulting to C3.
pub fn registry() -> Vec<CannyParams> {
    registry_with_reference(&cfg("C3", 100.0, 200.0, 3))
}

pub fn lookup(id: &str) -> Option<CannyParams> {
    registry().into_iter().find(|c| c.config_id.as_deref() == Some(id))
}

fn id_of(c: &CannyParams) -> String {
    c.config_id.clone().unwrap_or_else(|| format!("{}-{}-{}", c.low, c.high, c.aperture))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepPlan {
    pub stage1: Vec<CannyParams>,
    pub stage2_apertures: Vec<u32>,
}

impl Default for SweepPlan {
    fn default() -> Self {
        Self {
            stage1: registry().into_iter().take(4).collect(),
            stage2_apertures: vec![5, 7],
        }
    }
}

impl SweepPlan {
    pub fn validate(&self) -> Result<(), PipelineError> {
        if self.stage1.is_empty() {
            return Err(PipelineError::Config("sweep needs at least one stage-1 configuration".into()));
        }
        for c in &self.stage1 {
            c.validate().map_err(|e| PipelineError::Config(e.to_string()))?;
            if c.aperture != 3 {
                return Err(PipelineError::Config(format!("{}: stage-1 aperture must be 3", id_of(c))));
            }
            let ratio = c.high / c.low;
            if !(MIN_RATIO - 1e-4..=MAX_RATIO + 1e-4).contains(&ratio) {
                return Err(PipelineError::Config(format!(
                    "{}: high/low ratio {ratio:.2} outside [{MIN_RATIO}, {MAX_RATIO:.2}]",
                    id_of(c)
                )));
            }
        }
        for &ap in &self.stage2_apertures {
            if !matches!(ap, 3 | 5 | 7) {
                return Err(PipelineError::Config(format!("unsupported aperture {ap}")));
            }
        }
        Ok(())
    }

    /// Winner's thresholds at each stage-2 aperture, named after the
    /// matching registry entry when there is one.
    pub fn stage2_configs(&self, winner: &CannyParams) -> Vec<CannyParams> {
        let known = registry();
        self.stage2_apertures
            .iter()
            .map(|&ap| {
                let id = known
                    .iter()
                    .filter(|k| k.config_id.as_deref() != Some("C5"))
                    .find(|k| k.low == winner.low && k.high == winner.high && k.aperture == ap)
                    .map(id_of)
                    .unwrap_or_else(|| format!("{}-a{ap}", id_of(winner)));
                cfg(&id, winner.low, winner.high, ap)
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepEntry {
    pub config: CannyParams,
    pub stage: u8,
    pub key: f64,
    pub global: LevelScores,
}

impl SweepEntry {
    pub fn id(&self) -> String {
        id_of(&self.config)
    }

    fn f1(&self, level: Level) -> f64 {
        self.global.get(&level).map(|s| s.f1).unwrap_or(0.0)
    }
}

/// Contents of `sweep.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepReport {
    pub stage1_winner: String,
    /// C5: reference copy of the stage-1 winner.
    pub reference: CannyParams,
    pub overall_winner: String,
    /// In evaluation order.
    pub entries: Vec<SweepEntry>,
}

/// Index of the first maximum.
pub fn select_winner(keys: &[f64]) -> Option<usize> {
    let mut best: Option<usize> = None;
    for (i, &k) in keys.iter().enumerate() {
        if best.is_none_or(|b| k > keys[b]) {
            best = Some(i);
        }
    }
    best
}

fn run_config(
    manifest: &DatasetManifest,
    base: &RunConfig,
    backend: &Backend,
    params: &CannyParams,
    stage: u8,
) -> Result<SweepEntry, PipelineError> {
    let id = id_of(params);
    let cfg = RunConfig {
        condition: Condition::EdgeFlow,
        canny: Some(params.clone()),
        ..base.clone()
    };
    convert(manifest, &cfg, backend, Some(&id))?;
    let label = cfg.label(Some(&id));
    let results = evaluate(manifest, &cfg.out, &label)?;
    write_results(&cfg.out.join(&label), &results)?;
    let node = results.global_level(Level::Node).f1;
    let edge = results.global_level(Level::Edge).f1;
    log::info!("sweep {id}: node F1 {node:.4}, edge F1 {edge:.4}");
    Ok(SweepEntry {
        config: params.clone(),
        stage,
        key: node + edge,
        global: results.global,
    })
}

pub fn sweep(
    manifest: &DatasetManifest,
    cfg: &RunConfig,
    backend: &Backend,
    plan: &SweepPlan,
) -> Result<SweepReport, PipelineError> {
    plan.validate()?;
    let mut entries = Vec::new();
    for c in &plan.stage1 {
        entries.push(run_config(manifest, cfg, backend, c, 1)?);
    }
    let keys: Vec<f64> = entries.iter().map(|e| e.key).collect();
    let w1 = select_winner(&keys).expect("stage 1 is not empty");
    let winner = entries[w1].config.clone();
    for c in plan.stage2_configs(&winner) {
        entries.push(run_config(manifest, cfg, backend, &c, 2)?);
    }
    let keys: Vec<f64> = entries.iter().map(|e| e.key).collect();
    let overall = select_winner(&keys).expect("entries are not empty");
    let reference = CannyParams {
        config_id: Some("C5".into()),
        ..winner.clone()
    };
    Ok(SweepReport {
        stage1_winner: id_of(&winner),
        reference,
        overall_winner: entries[overall].id(),
        entries,
    })
}

pub fn render_sweep_txt(r: &SweepReport) -> String {
    let mut s = String::new();
    let _ = writeln!(
        s,
        "Canny sweep ranked by global micro node F1 + edge F1 (ties go to the configuration evaluated first)"
    );
    let _ = writeln!(
        s,
        "Stage-1 winner: {} (reference C5 = {}/{}/{}); overall winner: {}",
        r.stage1_winner, r.reference.low, r.reference.high, r.reference.aperture, r.overall_winner
    );
    let _ = writeln!(s);
    let _ = writeln!(
        s,
        "{:<4} {:<8} {:>5} {:>5} {:>3} {:>8} {:>8} {:>8} {:>8} {:>8} {:>8} {:>7}",
        "Rank", "Config", "Low", "High", "Ap", "Node P", "Node R", "Node F1", "Edge P", "Edge R", "Edge F1", "Key"
    );
    let mut order: Vec<usize> = (0..r.entries.len()).collect();
    // Stable sort keeps evaluation order among equal keys.
    order.sort_by(|&i, &j| r.entries[j].key.total_cmp(&r.entries[i].key));
    for (rank, &i) in order.iter().enumerate() {
        let e = &r.entries[i];
        let n = e.global.get(&Level::Node).copied().unwrap_or_default();
        let d = e.global.get(&Level::Edge).copied().unwrap_or_default();
        let mark = if e.id() == r.overall_winner { " *" } else { "" };
        let _ = writeln!(
            s,
            "{:<4} {:<8} {:>5} {:>5} {:>3} {:>7.2}% {:>7.2}% {:>7.2}% {:>7.2}% {:>7.2}% {:>7.2}% {:>7.4}{mark}",
            rank + 1,
            e.id(),
            e.config.low,
            e.config.high,
            e.config.aperture,
            n.precision * 100.0,
            n.recall * 100.0,
            e.f1(Level::Node) * 100.0,
            d.precision * 100.0,
            d.recall * 100.0,
            e.f1(Level::Edge) * 100.0,
            e.key
        );
    }
    s
}

/// Writes `sweep.json` and `sweep.txt` into `dir`.
pub fn write_sweep(dir: &Path, r: &SweepReport) -> Result<(), PipelineError> {
    write_json(&dir.join("sweep.json"), r)?;
    write_file(&dir.join("sweep.txt"), render_sweep_txt(r))
}
