//! File-backed article lookup: a JSON manifest maps question ids to article
//! files under a corpus directory.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::refine::RefineError;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ArticleRef {
    pub id: String,
    pub path: PathBuf,
}

pub trait SearchProvider {
    fn search(&self, query: &str, top_n: usize) -> Result<Vec<ArticleRef>, RefineError>;
}

#[derive(Debug, Clone)]
pub struct ManifestSearch {
    root: PathBuf,
    entries: BTreeMap<String, Vec<String>>,
}

impl ManifestSearch {
    /// Reads `{"question id": ["article.txt", ...]}`; article paths are
    /// relative to the manifest's directory.
    pub fn load(manifest: &Path) -> Result<Self, RefineError> {
        let text = fs::read_to_string(manifest).map_err(|source| RefineError::Io {
            path: manifest.display().to_string(),
            source,
        })?;
        let entries = serde_json::from_str(&text).map_err(|e| RefineError::Manifest(e.to_string()))?;
        Ok(Self {
            root: manifest.parent().map(Path::to_path_buf).unwrap_or_default(),
            entries,
        })
    }

    pub fn from_entries(root: impl Into<PathBuf>, entries: BTreeMap<String, Vec<String>>) -> Self {
        Self {
            root: root.into(),
            entries,
        }
    }

    pub fn questions(&self) -> impl Iterator<Item = &str> {
        self.entries.keys().map(String::as_str)
    }
}

impl SearchProvider for ManifestSearch {
    fn search(&self, query: &str, top_n: usize) -> Result<Vec<ArticleRef>, RefineError> {
        let files = self
            .entries
            .get(query)
            .ok_or_else(|| RefineError::UnknownQuestion(query.to_string()))?;
        Ok(files
            .iter()
            .take(top_n)
            .map(|f| ArticleRef {
                id: f.clone(),
                path: self.root.join(f),
            })
            .collect())
    }
}

/// `(source id, text)` pairs for the given refs.
pub fn load_articles(refs: &[ArticleRef]) -> Result<Vec<(String, String)>, RefineError> {
    refs.iter()
        .map(|r| {
            fs::read_to_string(&r.path)
                .map(|text| (r.id.clone(), text))
                .map_err(|source| RefineError::Io {
                    path: r.path.display().to_string(),
                    source,
                })
        })
        .collect()
}
