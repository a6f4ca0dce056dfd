//! Prompt bundles and chat-completions clients, live and fixture-backed.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::thread;
use std::time::{Duration, Instant};

use base64::Engine;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use thiserror::Error;

use crate::imaging::{EdgeMap, ImagingError, RasterImage};

pub const SYSTEM_PROMPT: &str = include_str!("../prompts/system.v1.txt");
pub const EDGEFLOW_PROMPT: &str = include_str!("../prompts/user_edgeflow.v1.txt");
pub const BASELINE_PROMPT: &str = include_str!("../prompts/user_baseline.v1.txt");
pub const PROMPT_VERSION: &str = "v1";

/// Environment variable holding the bearer token for live endpoints.
pub const API_KEY_ENV: &str = "CHART2MERMAID_API_KEY";

#[derive(Debug, Error)]
pub enum VlmError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("transport error after {attempts} attempt(s): {message}")]
    Transport { attempts: u32, message: String },
    #[error("request rejected with HTTP {status}: {body}")]
    Request { status: u16, body: String },
    #[error("malformed response: {0}")]
    Response(String),
    #[error("mock error: {0}")]
    Mock(String),
    #[error(transparent)]
    Imaging(#[from] ImagingError),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GenerationParams {
    pub temperature: f64,
    pub top_p: f64,
    pub max_tokens: u32,
}

impl Default for GenerationParams {
    fn default() -> Self {
        Self {
            temperature: 0.3,
            top_p: 0.8,
            max_tokens: 16000,
        }
    }
}

impl GenerationParams {
    pub fn validate(&self) -> Result<(), VlmError> {
        if self.temperature.is_nan() || self.temperature < 0.0 {
            return Err(VlmError::Config(format!("temperature must be >= 0, got {}", self.temperature)));
        }
        if !(self.top_p > 0.0 && self.top_p <= 1.0) {
            return Err(VlmError::Config(format!("top_p must be in (0, 1], got {}", self.top_p)));
        }
        if self.max_tokens == 0 {
            return Err(VlmError::Config("max_tokens must be >= 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Condition {
    Baseline,
    EdgeFlow,
}

impl Condition {
    pub fn as_str(self) -> &'static str {
        match self {
            Condition::Baseline => "baseline",
            Condition::EdgeFlow => "edgeflow",
        }
    }

    pub fn image_count(self) -> usize {
        match self {
            Condition::Baseline => 1,
            Condition::EdgeFlow => 2,
        }
    }

    pub fn user_prompt(self) -> &'static str {
        match self {
            Condition::Baseline => BASELINE_PROMPT,
            Condition::EdgeFlow => EDGEFLOW_PROMPT,
        }
    }
}

impl fmt::Display for Condition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Condition {
    type Err = VlmError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "baseline" => Ok(Condition::Baseline),
            "edgeflow" => Ok(Condition::EdgeFlow),
            other => Err(VlmError::Config(format!("unknown condition {other:?}"))),
        }
    }
}

/// A PNG image ready for transport.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EncodedImage {
    png: Vec<u8>,
}

impl EncodedImage {
    pub fn from_raster(img: &RasterImage) -> Result<Self, VlmError> {
        Ok(Self { png: img.to_png_bytes()? })
    }

    pub fn from_edge_map(edges: &EdgeMap) -> Result<Self, VlmError> {
        Ok(Self { png: edges.to_png_bytes()? })
    }

    pub fn png_bytes(&self) -> &[u8] {
        &self.png
    }

    pub fn data_url(&self) -> String {
        let b64 = base64::engine::general_purpose::STANDARD.encode(&self.png);
        format!("data:image/png;base64,{b64}")
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PromptBundle {
    system_text: String,
    user_text: String,
    images: Vec<EncodedImage>,
    condition: Condition,
}

impl PromptBundle {
    /// Fails unless the image count matches the condition.
    pub fn new(
        condition: Condition,
        system_text: String,
        user_text: String,
        images: Vec<EncodedImage>,
    ) -> Result<Self, VlmError> {
        if images.len() != condition.image_count() {
            return Err(VlmError::Config(format!(
                "{condition} expects {} image(s), got {}",
                condition.image_count(),
                images.len()
            )));
        }
        Ok(Self {
            system_text,
            user_text,
            images,
            condition,
        })
    }

    pub fn system_text(&self) -> &str {
        &self.system_text
    }

    pub fn user_text(&self) -> &str {
        &self.user_text
    }

    pub fn images(&self) -> &[EncodedImage] {
        &self.images
    }

    pub fn condition(&self) -> Condition {
        self.condition
    }

    /// Request record for run logs. Image payloads are summarized by size.
    pub fn audit_json(&self, params: &GenerationParams, model: &str) -> Value {
        json!({
            "model": model,
            "condition": self.condition,
            "prompt_version": PROMPT_VERSION,
            "system": self.system_text,
            "user": self.user_text,
            "images": self.images.iter().map(|i| json!({"mime": "image/png", "bytes": i.png.len()})).collect::<Vec<_>>(),
            "params": params,
        })
    }
}

pub fn build_bundle(
    condition: Condition,
    prep_image: &RasterImage,
    edge_image: Option<&EdgeMap>,
) -> Result<PromptBundle, VlmError> {
    let images = match (condition, edge_image) {
        (Condition::EdgeFlow, Some(edges)) => vec![
            EncodedImage::from_raster(prep_image)?,
            EncodedImage::from_edge_map(edges)?,
        ],
        (Condition::Baseline, None) => vec![EncodedImage::from_raster(prep_image)?],
        (Condition::EdgeFlow, None) => {
            return Err(VlmError::Config("edgeflow condition requires an edge map".into()))
        }
        (Condition::Baseline, Some(_)) => {
            return Err(VlmError::Config("baseline condition takes no edge map".into()))
        }
    };
    PromptBundle::new(
        condition,
        SYSTEM_PROMPT.trim_end().to_string(),
        condition.user_prompt().trim_end().to_string(),
        images,
    )
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelReply {
    pub raw_text: String,
    pub model_id: String,
    pub latency: Duration,
}

/// Identifies one generation for fixture lookup and logging.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ReplyKey {
    pub flowchart_id: String,
    pub condition: Condition,
    /// Canny configuration id for sweep runs.
    pub variant: Option<String>,
    /// 1-based.
    pub run: u32,
}

impl ReplyKey {
    pub fn new(flowchart_id: impl Into<String>, condition: Condition, run: u32) -> Self {
        Self {
            flowchart_id: flowchart_id.into(),
            condition,
            variant: None,
            run,
        }
    }

    pub fn with_variant(mut self, variant: impl Into<String>) -> Self {
        self.variant = Some(variant.into());
        self
    }

    /// Fixture paths to try, most specific first.
    pub fn fixture_candidates(&self, root: &Path, suffix: &str) -> Vec<PathBuf> {
        let file = format!("run{}{suffix}.txt", self.run);
        let mut out = Vec::with_capacity(2);
        if let Some(v) = &self.variant {
            out.push(
                root.join(&self.flowchart_id)
                    .join(format!("{}-{v}", self.condition))
                    .join(&file),
            );
        }
        out.push(root.join(&self.flowchart_id).join(self.condition.as_str()).join(&file));
        out
    }
}

impl fmt::Display for ReplyKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.flowchart_id, self.condition)?;
        if let Some(v) = &self.variant {
            write!(f, "-{v}")?;
        }
        write!(f, "/run{}", self.run)
    }
}

pub trait Generator: Send + Sync {
    fn generate(
        &self,
        bundle: &PromptBundle,
        params: &GenerationParams,
        key: &ReplyKey,
    ) -> Result<ModelReply, VlmError>;

    fn model_id(&self) -> &str;
}

#[derive(Debug, Clone, PartialEq)]
pub struct EndpointConfig {
    /// Full chat-completions URL.
    pub url: String,
    pub model: String,
    pub api_key: Option<String>,
    pub timeout: Duration,
    pub max_attempts: u32,
    pub backoff_base: Duration,
}

impl EndpointConfig {
    pub fn new(url: impl Into<String>, model: impl Into<String>) -> Self {
        Self {
            url: url.into(),
            model: model.into(),
            api_key: None,
            timeout: Duration::from_secs(600),
            max_attempts: 3,
            backoff_base: Duration::from_secs(2),
        }
    }

    pub fn with_api_key_from_env(mut self) -> Self {
        self.api_key = std::env::var(API_KEY_ENV).ok().filter(|k| !k.is_empty());
        self
    }
}

/// Blocking OpenAI-compatible chat client with retry on transient failures.
pub struct ChatClient {
    cfg: EndpointConfig,
    http: reqwest::blocking::Client,
}

impl ChatClient {
    pub fn new(cfg: EndpointConfig) -> Result<Self, VlmError> {
        if cfg.max_attempts == 0 {
            return Err(VlmError::Config("max_attempts must be >= 1".into()));
        }
        let http = reqwest::blocking::Client::builder()
            .timeout(cfg.timeout)
            .build()
            .map_err(|e| VlmError::Config(e.to_string()))?;
        Ok(Self { cfg, http })
    }

    pub fn config(&self) -> &EndpointConfig {
        &self.cfg
    }

    pub fn request_body(
        &self,
        system: &str,
        user: &str,
        images: &[EncodedImage],
        params: &GenerationParams,
    ) -> Value {
        let mut parts = vec![json!({"type": "text", "text": user})];
        for img in images {
            parts.push(json!({"type": "image_url", "image_url": {"url": img.data_url()}}));
        }
        json!({
            "model": self.cfg.model,
            "messages": [
                {"role": "system", "content": system},
                {"role": "user", "content": parts},
            ],
            "temperature": params.temperature,
            "top_p": params.top_p,
            "max_tokens": params.max_tokens,
        })
    }

    pub fn chat(
        &self,
        system: &str,
        user: &str,
        images: &[EncodedImage],
        params: &GenerationParams,
    ) -> Result<ModelReply, VlmError> {
        params.validate()?;
        let body = self.request_body(system, user, images, params);
        let started = Instant::now();
        let mut last_error = String::new();
        for attempt in 1..=self.cfg.max_attempts {
            if attempt > 1 {
                let wait = self.cfg.backoff_base * 2u32.pow(attempt - 2);
                log::warn!("retrying {} in {:?} after: {last_error}", self.cfg.url, wait);
                thread::sleep(wait);
            }
            let mut req = self.http.post(&self.cfg.url).json(&body);
            if let Some(key) = &self.cfg.api_key {
                req = req.bearer_auth(key);
            }
            let resp = match req.send() {
                Ok(r) => r,
                Err(e) if e.is_timeout() || e.is_connect() || e.is_request() => {
                    last_error = e.to_string();
                    continue;
                }
                Err(e) => return Err(VlmError::Config(e.to_string())),
            };
            let status = resp.status();
            if status.is_server_error() {
                last_error = format!("HTTP {status}");
                continue;
            }
            let text = resp.text().map_err(|e| VlmError::Response(e.to_string()))?;
            if !status.is_success() {
                return Err(VlmError::Request {
                    status: status.as_u16(),
                    body: text,
                });
            }
            return parse_reply(&text, &self.cfg.model, started.elapsed());
        }
        Err(VlmError::Transport {
            attempts: self.cfg.max_attempts,
            message: last_error,
        })
    }
}

fn parse_reply(body: &str, fallback_model: &str, latency: Duration) -> Result<ModelReply, VlmError> {
    let v: Value = serde_json::from_str(body).map_err(|e| VlmError::Response(e.to_string()))?;
    let content = &v["choices"][0]["message"]["content"];
    let raw_text = match content {
        Value::String(s) => s.clone(),
        // Some servers return content as a list of typed parts.
        Value::Array(parts) => parts
            .iter()
            .filter_map(|p| p["text"].as_str())
            .collect::<Vec<_>>()
            .join(""),
        _ => return Err(VlmError::Response("missing choices[0].message.content".into())),
    };
    let model_id = v["model"].as_str().unwrap_or(fallback_model).to_string();
    Ok(ModelReply {
        raw_text,
        model_id,
        latency,
    })
}

pub struct HttpGenerator {
    client: ChatClient,
}

impl HttpGenerator {
    pub fn new(cfg: EndpointConfig) -> Result<Self, VlmError> {
        Ok(Self {
            client: ChatClient::new(cfg)?,
        })
    }
}

impl Generator for HttpGenerator {
    fn generate(
        &self,
        bundle: &PromptBundle,
        params: &GenerationParams,
        _key: &ReplyKey,
    ) -> Result<ModelReply, VlmError> {
        self.client
            .chat(bundle.system_text(), bundle.user_text(), bundle.images(), params)
    }

    fn model_id(&self) -> &str {
        &self.client.cfg.model
    }
}

/// Serves replies from `<root>/<id>/<condition>/run<k>.txt`.
#[derive(Debug, Clone)]
pub struct MockGenerator {
    root: PathBuf,
}

impl MockGenerator {
    pub fn new(root: impl Into<PathBuf>) -> Self {
        Self { root: root.into() }
    }

    pub fn root(&self) -> &Path {
        &self.root
    }
}

pub(crate) fn read_fixture(root: &Path, key: &ReplyKey, suffix: &str) -> Result<String, VlmError> {
    let candidates = key.fixture_candidates(root, suffix);
    for path in &candidates {
        if path.is_file() {
            return fs::read_to_string(path)
                .map_err(|e| VlmError::Mock(format!("{}: {e}", path.display())));
        }
    }
    Err(VlmError::Mock(format!(
        "no fixture for {key}{suffix} (looked for {})",
        candidates
            .iter()
            .map(|p| p.display().to_string())
            .collect::<Vec<_>>()
            .join(", ")
    )))
}

impl Generator for MockGenerator {
    fn generate(
        &self,
        bundle: &PromptBundle,
        params: &GenerationParams,
        key: &ReplyKey,
    ) -> Result<ModelReply, VlmError> {
        params.validate()?;
        if bundle.condition() != key.condition {
            return Err(VlmError::Config(format!(
                "bundle condition {} does not match key {key}",
                bundle.condition()
            )));
        }
        let started = Instant::now();
        let raw_text = read_fixture(&self.root, key, "")?;
        Ok(ModelReply {
            raw_text,
            model_id: "mock".into(),
            latency: started.elapsed(),
        })
    }

    fn model_id(&self) -> &str {
        "mock"
    }
}

/// First ```mermaid fence, else the first fence of any tag, else the whole
/// text trimmed.
pub fn extract_code_block(raw_text: &str) -> String {
    let mut blocks: Vec<(String, Vec<&str>)> = Vec::new();
    let mut open: Option<(String, Vec<&str>)> = None;
    for line in raw_text.lines() {
        let t = line.trim();
        match open.take() {
            None => {
                if let Some(tag) = t.strip_prefix("```") {
                    open = Some((tag.trim().to_ascii_lowercase(), Vec::new()));
                }
            }
            Some((tag, mut body)) => {
                if t.starts_with("```") && t.trim_start_matches('`').trim().is_empty() {
                    blocks.push((tag, body));
                } else {
                    body.push(line);
                    open = Some((tag, body));
                }
            }
        }
    }
    // An unterminated fence runs to the end of the reply.
    if let Some(block) = open {
        blocks.push(block);
    }
    let chosen = blocks
        .iter()
        .find(|(tag, _)| tag == "mermaid")
        .or_else(|| blocks.first());
    match chosen {
        Some((_, body)) => body.join("\n").trim().to_string(),
        None => raw_text.trim().to_string(),
    }
}
