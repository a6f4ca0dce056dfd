//! Background noise and colour instability over a manifest's images.

use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::manifest::DatasetManifest;
use super::{write_file, write_json, PipelineError};
use crate::imaging::{noise_report, RasterImage};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoiseRow {
    pub id: String,
    pub background_noise_sigma: Option<f64>,
    pub color_instability_mu: Option<f64>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoiseSummary {
    pub images: usize,
    pub measured: usize,
    pub mean_sigma: Option<f64>,
    pub mean_mu: Option<f64>,
    pub rows: Vec<NoiseRow>,
}

fn mean(xs: impl Iterator<Item = f64>) -> Option<f64> {
    let (sum, n) = xs.fold((0.0, 0usize), |(s, n), x| (s + x, n + 1));
    (n > 0).then(|| sum / n as f64)
}

pub fn noise_report_for(manifest: &DatasetManifest) -> NoiseSummary {
    let rows: Vec<NoiseRow> = manifest
        .entries
        .iter()
        .map(|e| match RasterImage::load(&e.image_path).and_then(|img| noise_report(&img)) {
            Ok(r) => NoiseRow {
                id: e.id.clone(),
                background_noise_sigma: Some(r.background_noise_sigma),
                color_instability_mu: Some(r.color_instability_mu),
                error: None,
            },
            Err(err) => {
                log::warn!("{}: {err}", e.id);
                NoiseRow {
                    id: e.id.clone(),
                    background_noise_sigma: None,
                    color_instability_mu: None,
                    error: Some(err.to_string()),
                }
            }
        })
        .collect();
    NoiseSummary {
        images: rows.len(),
        measured: rows.iter().filter(|r| r.error.is_none()).count(),
        mean_sigma: mean(rows.iter().filter_map(|r| r.background_noise_sigma)),
        mean_mu: mean(rows.iter().filter_map(|r| r.color_instability_mu)),
        rows,
    }
}

pub fn render_noise_txt(s: &NoiseSummary) -> String {
    let opt = |v: Option<f64>| v.map(|x| format!("{x:.2}")).unwrap_or_else(|| "n/a".into());
    let mut out = String::new();
    let _ = writeln!(out, "{:<24} {:>10} {:>10}", "Image", "sigma", "mu");
    for r in &s.rows {
        let _ = writeln!(
            out,
            "{:<24} {:>10} {:>10}{}",
            r.id,
            opt(r.background_noise_sigma),
            opt(r.color_instability_mu),
            r.error.as_ref().map(|e| format!("  ({e})")).unwrap_or_default()
        );
    }
    let _ = writeln!(
        out,
        "\nmean over {} of {} images: sigma {}, mu {}",
        s.measured,
        s.images,
        opt(s.mean_sigma),
        opt(s.mean_mu)
    );
    out
}

/// Writes `noise.json`, `noise.csv` and `noise.txt` into `dir`.
pub fn write_noise(dir: &Path, s: &NoiseSummary) -> Result<(), PipelineError> {
    write_json(&dir.join("noise.json"), s)?;
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in &s.rows {
        w.serialize(r).map_err(|e| PipelineError::Config(e.to_string()))?;
    }
    let bytes = w.into_inner().map_err(|e| PipelineError::Config(e.to_string()))?;
    write_file(&dir.join("noise.csv"), bytes)?;
    write_file(&dir.join("noise.txt"), render_noise_txt(s))
}
