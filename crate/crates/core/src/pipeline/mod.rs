//! Batch orchestration: convert, evaluate, compare, sweep and noise reports
//! over a dataset manifest. Every artifact is a plain file under the output
//! directory.

pub mod compare;
pub mod config;
pub mod convert;
pub mod evaluate;
pub mod manifest;
pub mod noise;
pub mod sweep;

use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use thiserror::Error;

pub use compare::{compare, render_stats_txt, Comparison, MetricComparison};
pub use config::{EndpointSettings, FixerSettings, RunConfig};
pub use convert::{convert, Backend, ConvertSummary, RunOutcome};
pub use evaluate::{evaluate, write_results, FlowchartScore, LevelScore, Results, RunRecord};
pub use manifest::{DatasetManifest, ManifestEntry};
pub use noise::{noise_report_for, NoiseRow, NoiseSummary};
pub use sweep::{registry, sweep, SweepEntry, SweepPlan, SweepReport};

use crate::imaging::ImagingError;
use crate::metrics::MetricsError;
use crate::stats::StatsError;
use crate::vlm::VlmError;

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("manifest: {0}")]
    Manifest(String),
    #[error("config: {0}")]
    Config(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {message}")]
    Artifact { path: PathBuf, message: String },
    #[error("ground truth for {id} does not parse: {message}")]
    Truth { id: String, message: String },
    #[error("condition mismatch: {0}")]
    Mismatch(String),
    #[error(transparent)]
    Vlm(#[from] VlmError),
    #[error(transparent)]
    Imaging(#[from] ImagingError),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
    #[error(transparent)]
    Stats(#[from] StatsError),
}

pub(crate) fn write_file(path: &Path, contents: impl AsRef<[u8]>) -> Result<(), PipelineError> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(|source| PipelineError::Io {
            path: dir.to_path_buf(),
            source,
        })?;
    }
    fs::write(path, contents).map_err(|source| PipelineError::Io {
        path: path.to_path_buf(),
        source,
    })
}

pub(crate) fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> Result<(), PipelineError> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| PipelineError::Artifact {
        path: path.to_path_buf(),
        message: e.to_string(),
    })?;
    text.push('\n');
    write_file(path, text)
}

pub(crate) fn read_file(path: &Path) -> Result<String, PipelineError> {
    fs::read_to_string(path).map_err(|source| PipelineError::Io {
        path: path.to_path_buf(),
        source,
    })
}

pub(crate) fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T, PipelineError> {
    serde_json::from_str(&read_file(path)?).map_err(|e| PipelineError::Artifact {
        path: path.to_path_buf(),
        message: e.to_string(),
    })
}

/// `<out>/<label>/<id>/run<k>`
pub fn run_dir(out: &Path, label: &str, id: &str, run: u32) -> PathBuf {
    out.join(label).join(id).join(format!("run{run}"))
}
