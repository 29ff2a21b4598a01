//! Pipeline configuration file (TOML).

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::cli::CliError;
use crate::facts::SplitSizes;
use crate::qgen::FormKind;
use crate::temporal::TimePoint;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub seed: u64,
    pub cutoff: TimePoint,
    /// Worker threads for parallel stages; 0 picks the machine default.
    pub workers: usize,
    pub paths: Paths,
    pub ingest: IngestSection,
    pub split: SplitSizes,
    pub generate: GenerateSection,
    pub augment: AugmentSection,
    pub refine: RefineSection,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            cutoff: TimePoint::month(2020, 1).expect("valid cutoff"),
            workers: 0,
            paths: Paths::default(),
            ingest: IngestSection::default(),
            split: SplitSizes::default(),
            generate: GenerateSection::default(),
            augment: AugmentSection::default(),
            refine: RefineSection::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Paths {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub statements: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub templates: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub pools: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub corpus_manifest: Option<PathBuf>,
    pub out_dir: PathBuf,
}

impl Default for Paths {
    fn default() -> Self {
        Self {
            statements: None,
            templates: None,
            pools: None,
            corpus_manifest: None,
            out_dir: PathBuf::from("out"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IngestSection {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub snapshot_date: Option<TimePoint>,
    /// Most groups kept per representative relation.
    pub ceiling: usize,
}

impl Default for IngestSection {
    fn default() -> Self {
        Self {
            snapshot_date: None,
            ceiling: 250,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Quotas {
    pub point: usize,
    pub interval: usize,
    pub offset: usize,
    pub before: usize,
    pub after: usize,
    pub during: usize,
    pub event_offset: usize,
}

impl Default for Quotas {
    fn default() -> Self {
        Self {
            point: 1,
            interval: 1,
            offset: 1,
            before: 1,
            after: 1,
            during: 1,
            event_offset: 1,
        }
    }
}

impl Quotas {
    pub fn get(&self, kind: FormKind) -> usize {
        match kind {
            FormKind::Point => self.point,
            FormKind::Interval => self.interval,
            FormKind::Offset => self.offset,
            FormKind::Before => self.before,
            FormKind::After => self.after,
            FormKind::During => self.during,
            FormKind::EventOffset => self.event_offset,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GenerateSection {
    pub quotas: Quotas,
    pub max_offset_months: i32,
    pub min_group_facts: usize,
    pub attempts: usize,
}

impl Default for GenerateSection {
    fn default() -> Self {
        Self {
            quotas: Quotas::default(),
            max_offset_months: 360,
            min_group_facts: 2,
            attempts: 10,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AugmentSection {
    pub pseudo_size: usize,
    pub floor: f64,
    pub max_rounds: usize,
}

impl Default for AugmentSection {
    fn default() -> Self {
        Self {
            pseudo_size: 1000,
            floor: 0.0,
            max_rounds: 20,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum ScorerKind {
    Builtin,
    Remote,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RefineSection {
    pub k: usize,
    pub scorer: ScorerKind,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub endpoint: Option<String>,
    /// Articles read per question from the manifest.
    pub articles_per_question: usize,
}

impl Default for RefineSection {
    fn default() -> Self {
        Self {
            k: 100,
            scorer: ScorerKind::Builtin,
            endpoint: None,
            articles_per_question: 10,
        }
    }
}

impl PipelineConfig {
    /// Loads a config file; relative paths inside it resolve against the
    /// file's directory.
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = fs::read_to_string(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        let mut cfg: Self = toml::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new(""));
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        let paths = &mut cfg.paths;
        for p in [&mut paths.statements, &mut paths.templates, &mut paths.pools, &mut paths.corpus_manifest]
            .into_iter()
            .flatten()
        {
            fix(p);
        }
        fix(&mut paths.out_dir);
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let bad = |m: &str| Err(CliError::Config(m.to_string()));
        if self.ingest.ceiling == 0 {
            return bad("ingest.ceiling must be at least 1");
        }
        if self.refine.k == 0 {
            return bad("refine.k must be at least 1");
        }
        if self.refine.articles_per_question == 0 {
            return bad("refine.articles_per_question must be at least 1");
        }
        if !(0.0..=1.0).contains(&self.augment.floor) {
            return bad("augment.floor must lie in [0, 1]");
        }
        if self.generate.max_offset_months < 1 {
            return bad("generate.max_offset_months must be at least 1");
        }
        if self.generate.attempts == 0 {
            return bad("generate.attempts must be at least 1");
        }
        Ok(())
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }
}
