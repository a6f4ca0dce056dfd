//! Dataset manifests: JSON `{"entries": [...]}` or CSV with an
//! `id,image_path,truth_path` header. Relative paths resolve against the
//! manifest's directory.

use std::collections::HashSet;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::PipelineError;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub id: String,
    pub image_path: PathBuf,
    pub truth_path: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DatasetManifest {
    pub entries: Vec<ManifestEntry>,
}

impl DatasetManifest {
    /// Checks unique, path-safe ids and that every referenced file exists.
    pub fn new(entries: Vec<ManifestEntry>) -> Result<Self, PipelineError> {
        let mut seen = HashSet::new();
        for e in &entries {
            if e.id.is_empty() || e.id.contains(['/', '\\']) || e.id == "." || e.id == ".." {
                return Err(PipelineError::Manifest(format!("invalid id {:?}", e.id)));
            }
            if !seen.insert(e.id.as_str()) {
                return Err(PipelineError::Manifest(format!("duplicate id {:?}", e.id)));
            }
            for p in [&e.image_path, &e.truth_path] {
                if !p.is_file() {
                    return Err(PipelineError::Manifest(format!(
                        "{}: missing file {}",
                        e.id,
                        p.display()
                    )));
                }
            }
        }
        Ok(Self { entries })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, PipelineError> {
        let path = path.as_ref();
        let text = fs::read_to_string(path)
            .map_err(|e| PipelineError::Manifest(format!("{}: {e}", path.display())))?;
        let is_csv = path
            .extension()
            .is_some_and(|x| x.eq_ignore_ascii_case("csv"));
        let raw: Vec<ManifestEntry> = if is_csv {
            csv::Reader::from_reader(text.as_bytes())
                .deserialize()
                .collect::<Result<_, _>>()
                .map_err(|e| PipelineError::Manifest(format!("{}: {e}", path.display())))?
        } else {
            serde_json::from_str::<DatasetManifest>(&text)
                .map_err(|e| PipelineError::Manifest(format!("{}: {e}", path.display())))?
                .entries
        };
        let base = path.parent().unwrap_or(Path::new("."));
        let entries = raw
            .into_iter()
            .map(|e| ManifestEntry {
                image_path: base.join(&e.image_path),
                truth_path: base.join(&e.truth_path),
                id: e.id,
            })
            .collect();
        Self::new(entries)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn ids(&self) -> Vec<String> {
        self.entries.iter().map(|e| e.id.clone()).collect()
    }
}
