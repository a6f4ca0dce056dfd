//! Run configuration, read from TOML and overridden by CLI flags.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Duration;

use serde::{Deserialize, Serialize};

use super::PipelineError;
use crate::imaging::{CannyParams, DEFAULT_MAX_DIM};
use crate::stats::DeltaMode;
use crate::vlm::{Condition, EndpointConfig, GenerationParams};

pub const DEFAULT_RUNS: u32 = 5;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EndpointSettings {
    /// Chat-completions URL.
    pub url: Option<String>,
    pub model: Option<String>,
    pub timeout_secs: u64,
    pub max_attempts: u32,
    pub backoff_ms: u64,
}

impl Default for EndpointSettings {
    fn default() -> Self {
        Self {
            url: None,
            model: None,
            timeout_secs: 600,
            max_attempts: 3,
            backoff_ms: 2000,
        }
    }
}

impl EndpointSettings {
    pub fn to_endpoint(&self, what: &str) -> Result<EndpointConfig, PipelineError> {
        let url = self
            .url
            .clone()
            .ok_or_else(|| PipelineError::Config(format!("{what}: no endpoint url (use --endpoint or --mock)")))?;
        let model = self
            .model
            .clone()
            .ok_or_else(|| PipelineError::Config(format!("{what}: no model id (use --model)")))?;
        Ok(EndpointConfig {
            timeout: Duration::from_secs(self.timeout_secs),
            max_attempts: self.max_attempts,
            backoff_base: Duration::from_millis(self.backoff_ms),
            ..EndpointConfig::new(url, model)
        }
        .with_api_key_from_env())
    }
}

/// The code model used for repair. Unset fields fall back to the main
/// endpoint.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FixerSettings {
    pub url: Option<String>,
    pub model: Option<String>,
    pub generation: GenerationParams,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub condition: Condition,
    pub runs: u32,
    pub out: PathBuf,
    /// Fixture directory; when set no network calls are made.
    pub mock: Option<PathBuf>,
    /// Flowcharts converted concurrently.
    pub concurrency: usize,
    pub max_dim: u32,
    pub canny: Option<CannyParams>,
    pub generation: GenerationParams,
    pub endpoint: EndpointSettings,
    pub fixer: FixerSettings,
    pub delta_mode: DeltaMode,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            condition: Condition::EdgeFlow,
            runs: DEFAULT_RUNS,
            out: PathBuf::from("out"),
            mock: None,
            concurrency: 4,
            max_dim: DEFAULT_MAX_DIM,
            canny: Some(CannyParams {
                low: 100.0,
                high: 200.0,
                aperture: 3,
                config_id: Some("C3".into()),
            }),
            generation: GenerationParams::default(),
            endpoint: EndpointSettings::default(),
            fixer: FixerSettings::default(),
            delta_mode: DeltaMode::AllPairs,
        }
    }
}

impl RunConfig {
    pub fn load(path: impl AsRef<Path>) -> Result<Self, PipelineError> {
        let path = path.as_ref();
        let text = fs::read_to_string(path)
            .map_err(|e| PipelineError::Config(format!("{}: {e}", path.display())))?;
        let cfg: RunConfig = toml::from_str(&text)
            .map_err(|e| PipelineError::Config(format!("{}: {e}", path.display())))?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), PipelineError> {
        if self.runs == 0 {
            return Err(PipelineError::Config("runs must be >= 1".into()));
        }
        if self.concurrency == 0 {
            return Err(PipelineError::Config("concurrency must be >= 1".into()));
        }
        if self.max_dim == 0 {
            return Err(PipelineError::Config("max_dim must be >= 1".into()));
        }
        match (&self.condition, &self.canny) {
            (Condition::EdgeFlow, None) => {
                return Err(PipelineError::Config("edgeflow condition requires canny parameters".into()))
            }
            (_, Some(c)) => c.validate().map_err(|e| PipelineError::Config(e.to_string()))?,
            _ => {}
        }
        self.generation.validate()?;
        self.fixer.generation.validate()?;
        Ok(())
    }

    /// Output directory name for a condition, optionally tagged with a
    /// Canny configuration id.
    pub fn label(&self, variant: Option<&str>) -> String {
        match variant {
            Some(v) => format!("{}-{v}", self.condition),
            None => self.condition.to_string(),
        }
    }

    pub fn fixer_settings(&self) -> EndpointSettings {
        EndpointSettings {
            url: self.fixer.url.clone().or_else(|| self.endpoint.url.clone()),
            model: self.fixer.model.clone().or_else(|| self.endpoint.model.clone()),
            ..self.endpoint.clone()
        }
    }
}
