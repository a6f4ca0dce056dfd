//! Image to Mermaid for every manifest entry and run, with per-run audit
//! artifacts.

use std::path::Path;
use std::sync::Arc;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::RunConfig;
use super::manifest::{DatasetManifest, ManifestEntry};
use super::{run_dir, write_file, write_json, PipelineError};
use crate::imaging::{canny, preprocess, CannyParams, EdgeMap, RasterImage};
use crate::repair::{repair_loop, Fixer, LiveFixer, MockFixer, RepairAttempt};
use crate::vlm::{
    build_bundle, extract_code_block, ChatClient, Condition, Generator, HttpGenerator, MockGenerator,
    PromptBundle, ReplyKey,
};

/// Where replies and repairs come from.
#[derive(Clone)]
pub struct Backend {
    pub generator: Arc<dyn Generator>,
    pub fixer: Arc<dyn Fixer>,
}

impl Backend {
    pub fn mock(root: &Path) -> Self {
        Self {
            generator: Arc::new(MockGenerator::new(root)),
            fixer: Arc::new(MockFixer::new(root)),
        }
    }

    pub fn live(cfg: &RunConfig) -> Result<Self, PipelineError> {
        let generator = HttpGenerator::new(cfg.endpoint.to_endpoint("generator")?)?;
        let fixer_client = ChatClient::new(cfg.fixer_settings().to_endpoint("fixer")?)?;
        Ok(Self {
            generator: Arc::new(generator),
            fixer: Arc::new(LiveFixer::new(Arc::new(fixer_client), cfg.fixer.generation)),
        })
    }

    pub fn from_config(cfg: &RunConfig) -> Result<Self, PipelineError> {
        match &cfg.mock {
            Some(root) => Ok(Self::mock(root)),
            None => Self::live(cfg),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Timings {
    pub preprocess_ms: f64,
    pub canny_ms: f64,
    pub generate_ms: f64,
    pub repair_ms: f64,
}

/// Contents of `outcome.json` for one run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunOutcome {
    pub flowchart_id: String,
    pub run: u32,
    pub condition: Condition,
    pub variant: Option<String>,
    pub model_id: Option<String>,
    pub valid: bool,
    pub iterations_used: usize,
    pub error: Option<String>,
    pub timings: Timings,
    pub history: Vec<RepairAttempt>,
}

/// Contents of `convert.json` at the condition root.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvertSummary {
    pub label: String,
    pub condition: Condition,
    pub variant: Option<String>,
    pub runs: u32,
    pub canny: Option<CannyParams>,
    pub model: String,
    pub entries: Vec<String>,
    pub valid: usize,
    pub invalid: usize,
    pub failed: usize,
}

fn ms(since: Instant) -> f64 {
    since.elapsed().as_secs_f64() * 1000.0
}

/// Runs every entry `cfg.runs` times under `cfg.condition`. Artifacts land
/// in `<out>/<label>/`, where the label is the condition name, suffixed
/// with `variant` when given.
pub fn convert(
    manifest: &DatasetManifest,
    cfg: &RunConfig,
    backend: &Backend,
    variant: Option<&str>,
) -> Result<ConvertSummary, PipelineError> {
    cfg.validate()?;
    let label = cfg.label(variant);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.concurrency)
        .build()
        .map_err(|e| PipelineError::Config(e.to_string()))?;
    let outcomes: Vec<Vec<RunOutcome>> = pool.install(|| {
        manifest
            .entries
            .par_iter()
            .map(|entry| convert_entry(entry, cfg, backend, &label, variant))
            .collect::<Result<_, _>>()
    })?;
    let flat: Vec<&RunOutcome> = outcomes.iter().flatten().collect();
    let summary = ConvertSummary {
        label: label.clone(),
        condition: cfg.condition,
        variant: variant.map(str::to_string),
        runs: cfg.runs,
        canny: match cfg.condition {
            Condition::EdgeFlow => cfg.canny.clone(),
            Condition::Baseline => None,
        },
        model: backend.generator.model_id().to_string(),
        entries: manifest.ids(),
        valid: flat.iter().filter(|o| o.valid).count(),
        invalid: flat.iter().filter(|o| !o.valid && o.error.is_none()).count(),
        failed: flat.iter().filter(|o| o.error.is_some()).count(),
    };
    write_json(&cfg.out.join(&label).join("convert.json"), &summary)?;
    log::info!(
        "{label}: {} valid, {} invalid, {} failed of {}",
        summary.valid,
        summary.invalid,
        summary.failed,
        flat.len()
    );
    Ok(summary)
}

fn convert_entry(
    entry: &ManifestEntry,
    cfg: &RunConfig,
    backend: &Backend,
    label: &str,
    variant: Option<&str>,
) -> Result<Vec<RunOutcome>, PipelineError> {
    let mut timings = Timings::default();
    let prepared = prepare(entry, cfg, label, &mut timings);
    let mut out = Vec::with_capacity(cfg.runs as usize);
    for run in 1..=cfg.runs {
        let mut key = ReplyKey::new(&entry.id, cfg.condition, run);
        if let Some(v) = variant {
            key = key.with_variant(v);
        }
        let dir = run_dir(&cfg.out, label, &entry.id, run);
        let outcome = match &prepared {
            Ok(bundle) => run_once(bundle, cfg, backend, &key, &dir, timings.clone())?,
            Err(message) => {
                log::error!("{key}: {message}");
                write_file(&dir.join("final.mmd"), "")?;
                failed(&key, message.clone(), timings.clone(), None)
            }
        };
        write_json(&dir.join("outcome.json"), &outcome)?;
        out.push(outcome);
    }
    Ok(out)
}

/// Preprocessing and edge extraction, shared by all runs of an entry.
fn prepare(
    entry: &ManifestEntry,
    cfg: &RunConfig,
    label: &str,
    timings: &mut Timings,
) -> Result<PromptBundle, String> {
    let started = Instant::now();
    let img = RasterImage::load(&entry.image_path).map_err(|e| e.to_string())?;
    let prep = preprocess(&img, cfg.max_dim).map_err(|e| e.to_string())?;
    timings.preprocess_ms = ms(started);
    let edges: Option<EdgeMap> = match cfg.condition {
        Condition::EdgeFlow => {
            let started = Instant::now();
            let params = cfg.canny.as_ref().ok_or("edgeflow condition requires canny parameters")?;
            let e = canny(&prep, params).map_err(|e| e.to_string())?;
            timings.canny_ms = ms(started);
            let dir = cfg.out.join(label).join(&entry.id);
            std::fs::create_dir_all(&dir).map_err(|e| format!("{}: {e}", dir.display()))?;
            e.save_png(dir.join("edge_map.png")).map_err(|e| e.to_string())?;
            Some(e)
        }
        Condition::Baseline => None,
    };
    build_bundle(cfg.condition, &prep, edges.as_ref()).map_err(|e| e.to_string())
}

fn failed(key: &ReplyKey, message: String, timings: Timings, model_id: Option<String>) -> RunOutcome {
    RunOutcome {
        flowchart_id: key.flowchart_id.clone(),
        run: key.run,
        condition: key.condition,
        variant: key.variant.clone(),
        model_id,
        valid: false,
        iterations_used: 0,
        error: Some(message),
        timings,
        history: Vec::new(),
    }
}

fn run_once(
    bundle: &PromptBundle,
    cfg: &RunConfig,
    backend: &Backend,
    key: &ReplyKey,
    dir: &Path,
    mut timings: Timings,
) -> Result<RunOutcome, PipelineError> {
    // The request is on disk before anything is sent.
    write_json(
        &dir.join("request.json"),
        &bundle.audit_json(&cfg.generation, backend.generator.model_id()),
    )?;
    let started = Instant::now();
    let reply = backend.generator.generate(bundle, &cfg.generation, key);
    timings.generate_ms = ms(started);
    let reply = match reply {
        Ok(r) => r,
        Err(e) => {
            log::error!("{key}: generation failed: {e}");
            write_file(&dir.join("final.mmd"), "")?;
            return Ok(failed(key, e.to_string(), timings, None));
        }
    };
    write_file(&dir.join("raw_reply.txt"), &reply.raw_text)?;
    let started = Instant::now();
    let repaired = repair_loop(&extract_code_block(&reply.raw_text), backend.fixer.as_ref(), key);
    timings.repair_ms = ms(started);
    write_file(&dir.join("final.mmd"), &repaired.final_code)?;
    if !repaired.valid {
        log::warn!("{key}: still invalid after {} repair call(s)", repaired.iterations_used);
    }
    Ok(RunOutcome {
        flowchart_id: key.flowchart_id.clone(),
        run: key.run,
        condition: key.condition,
        variant: key.variant.clone(),
        model_id: Some(reply.model_id),
        valid: repaired.valid,
        iterations_used: repaired.iterations_used,
        error: None,
        timings,
        history: repaired.history,
    })
}
