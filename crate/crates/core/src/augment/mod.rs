//! Pseudo-instruction data: shift fact groups in time, swap in fictional
//! entities, generate questions, and resample them by time bucket.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::facts::{FactGroup, FactsError, TemporalFact};
use crate::qgen::{self, GenerationConfig, QAItem, QgenError, QuestionTemplate};
use crate::seed;
use crate::temporal::{SignedDuration, TimeError, TimePoint};

mod pools;
mod resample;

pub use pools::{anonymize_group, EntityKind, EntityMap, EntityPool, EntityPools, KindTable};
pub use resample::{
    bucket_label, bucket_of, build_histogram, compute_resampling_probs, ResamplingHistogram, FUTURE_FROM_YEAR,
    N_BUCKETS,
};

#[derive(Debug, Error)]
pub enum AugmentError {
    #[error("shift of {0} months is outside [-1200, 240]")]
    ShiftOutOfRange(i32),
    #[error("pool {kind} has {available} names but {needed} are needed")]
    PoolExhausted {
        kind: EntityKind,
        needed: usize,
        available: usize,
    },
    #[error("relation {0} has no entity kind mapping")]
    UnmappedRelation(String),
    #[error("entity {0} is missing from the entity map")]
    Unmapped(String),
    #[error("bad entity pools: {0}")]
    BadPools(String),
    #[error("all bucket counts are zero")]
    AllZeroCounts,
    #[error("probability floor {0} is outside [0, 1]")]
    BadFloor(f64),
    #[error("training item {id} has reference time {time}, past the training cutoff")]
    FutureTrainingItem { id: String, time: String },
    #[error(transparent)]
    Facts(#[from] FactsError),
    #[error(transparent)]
    Qgen(#[from] QgenError),
    #[error(transparent)]
    Time(#[from] TimeError),
}

/// A temporal shift of at most 100 years back and 20 years forward.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "SignedDuration", into = "SignedDuration")]
pub struct ShiftSpec(SignedDuration);

impl ShiftSpec {
    pub const MIN_MONTHS: i32 = -1200;
    pub const MAX_MONTHS: i32 = 240;

    pub fn new(delta: SignedDuration) -> Result<Self, AugmentError> {
        if (Self::MIN_MONTHS..=Self::MAX_MONTHS).contains(&delta.months()) {
            Ok(Self(delta))
        } else {
            Err(AugmentError::ShiftOutOfRange(delta.months()))
        }
    }

    pub fn months(months: i32) -> Result<Self, AugmentError> {
        Self::new(SignedDuration::from_months(months))
    }

    pub fn delta(&self) -> SignedDuration {
        self.0
    }

    /// Uniform over the whole month range.
    pub fn sample<R: Rng>(rng: &mut R) -> Self {
        Self(SignedDuration::from_months(rng.random_range(Self::MIN_MONTHS..=Self::MAX_MONTHS)))
    }
}

impl TryFrom<SignedDuration> for ShiftSpec {
    type Error = AugmentError;

    fn try_from(d: SignedDuration) -> Result<Self, Self::Error> {
        Self::new(d)
    }
}

impl From<ShiftSpec> for SignedDuration {
    fn from(s: ShiftSpec) -> Self {
        s.0
    }
}

pub fn shift_group(group: &FactGroup, spec: ShiftSpec) -> Result<FactGroup, AugmentError> {
    Ok(group.shifted(spec.delta())?)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PseudoConfig {
    /// Stop once this many items have been kept.
    pub target_size: usize,
    /// Upper bound on passes over the source groups.
    pub max_rounds: usize,
    pub seed: u64,
    pub generation: GenerationConfig,
}

impl Default for PseudoConfig {
    fn default() -> Self {
        Self {
            target_size: 1000,
            max_rounds: 20,
            seed: 0,
            generation: GenerationConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PseudoItem {
    #[serde(flatten)]
    pub item: QAItem,
    pub shift_months: i32,
    pub entity_map_id: String,
}

/// One shifted, anonymized copy of a source group.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EntityMapRecord {
    pub id: String,
    pub source_subject: String,
    pub shift_months: i32,
    pub map: EntityMap,
}

impl EntityMapRecord {
    /// Rebuilds the pseudo group this record was made from.
    pub fn rebuild(&self, source: &FactGroup, kinds: &KindTable) -> Result<FactGroup, AugmentError> {
        let mapped = kinds
            .retain_mapped(source)
            .ok_or_else(|| AugmentError::UnmappedRelation(source.representative_relation().to_string()))?;
        let shifted = shift_group(&mapped, ShiftSpec::months(self.shift_months)?)?;
        let facts = shifted
            .facts()
            .iter()
            .map(|f| self.map.map_fact(f))
            .collect::<Result<Vec<_>, _>>()?;
        let subject = self
            .map
            .get(&source.subject().id)
            .cloned()
            .ok_or_else(|| AugmentError::Unmapped(source.subject().id.clone()))?;
        Ok(FactGroup::new(subject, facts, shifted.horizon())?)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct PseudoDataset {
    pub items: Vec<PseudoItem>,
    pub maps: Vec<EntityMapRecord>,
    /// Candidates generated before resampling.
    pub candidates: usize,
    pub rounds: usize,
}

/// One round for one source group: shift, anonymize, generate, resample.
fn pseudo_round(
    group: &FactGroup,
    round: usize,
    hist: &ResamplingHistogram,
    cfg: &PseudoConfig,
    templates: &[QuestionTemplate],
    pools: &EntityPools,
    kinds: &KindTable,
) -> Result<Option<(EntityMapRecord, Vec<PseudoItem>, usize)>, AugmentError> {
    let Some(mapped) = kinds.retain_mapped(group) else {
        return Ok(None);
    };
    let map_id = format!("{round}:{}", group.subject().id);
    let mut rng = seed::rng(cfg.seed, "augment", &map_id);
    let spec = ShiftSpec::sample(&mut rng);
    let shifted = shift_group(&mapped, spec)?;
    let (anon, map) = anonymize_group(&shifted, pools, kinds, seed::derive(cfg.seed, "anonymize", &map_id))?;
    let gen_cfg = GenerationConfig {
        seed: seed::derive(cfg.seed, "pseudo-generate", &map_id),
        training: false,
        ..cfg.generation.clone()
    };
    let candidates = qgen::generate_questions(&anon, templates, &gen_cfg)?;
    let n_candidates = candidates.len();
    let mut keep_rng = seed::rng(cfg.seed, "resample", &map_id);
    let kept = candidates
        .into_iter()
        .filter(|c| keep_rng.random_bool(hist.keep_probability(&c.reference_time)))
        .map(|mut item| {
            item.id = format!("{map_id}/{}", item.id);
            PseudoItem {
                item,
                shift_months: spec.delta().months(),
                entity_map_id: map_id.clone(),
            }
        })
        .collect();
    let record = EntityMapRecord {
        id: map_id,
        source_subject: group.subject().id.clone(),
        shift_months: spec.delta().months(),
        map,
    };
    Ok(Some((record, kept, n_candidates)))
}

/// Repeats shift/anonymize/generate/resample rounds over `groups` until
/// `cfg.target_size` items are kept or `cfg.max_rounds` is reached. Each
/// candidate is kept independently with its bucket's probability.
pub fn sample_pseudo_dataset(
    groups: &[FactGroup],
    hist: &ResamplingHistogram,
    cfg: &PseudoConfig,
    templates: &[QuestionTemplate],
    pools: &EntityPools,
    kinds: &KindTable,
) -> Result<PseudoDataset, AugmentError> {
    let mut out = PseudoDataset::default();
    for round in 0..cfg.max_rounds {
        if out.items.len() >= cfg.target_size {
            break;
        }
        let results: Vec<_> = groups
            .par_iter()
            .map(|g| pseudo_round(g, round, hist, cfg, templates, pools, kinds))
            .collect::<Result<_, _>>()?;
        out.rounds += 1;
        for (record, kept, n) in results.into_iter().flatten() {
            out.candidates += n;
            if !kept.is_empty() {
                out.maps.push(record);
                out.items.extend(kept);
            }
        }
    }
    out.items.truncate(cfg.target_size);
    let used: std::collections::HashSet<&str> = out.items.iter().map(|i| i.entity_map_id.as_str()).collect();
    out.maps.retain(|m| used.contains(m.id.as_str()));
    Ok(out)
}

pub const INSTRUCTION: &str =
    "Read the context and answer the question. If more than one answer is correct, list them all separated by \"and\".";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InstructionExample {
    pub instruction: String,
    pub context: String,
    pub question: String,
    pub target: String,
}

fn relation_phrase(relation: &str) -> Option<&'static str> {
    Some(match relation {
        "P54" => "played for",
        "P39" => "held the position of",
        "P108" => "worked for",
        "P102" => "was a member of",
        "P286" => "was coached by",
        "P69" => "studied at",
        "P488" => "was chaired by",
        "P6" => "was governed by",
        "P35" => "had as head of state",
        "P127" => "was owned by",
        "P26" => "was married to",
        "P166" => "received",
        "P937" => "worked in",
        "P551" => "lived in",
        _ => return None,
    })
}

/// One context sentence, e.g. "X studied at Y from September 2005 to March 2007."
/// Ongoing facts run to the horizon when there is one.
pub fn render_fact(f: &TemporalFact, horizon: Option<TimePoint>) -> String {
    let head = match relation_phrase(&f.relation.id) {
        Some(p) => format!("{} {p} {}", f.subject.label, f.object.label),
        None => format!("{} had {} {}", f.subject.label, f.relation.label, f.object.label),
    };
    let start = f.interval.start();
    match f.interval.end().or(horizon.filter(|h| h.last_month() >= start.first_month())) {
        Some(end) if end == start => format!("{head} in {start}."),
        Some(end) => format!("{head} from {start} to {end}."),
        None => format!("{head} since {start}."),
    }
}

pub fn render_context(group: &FactGroup) -> Vec<String> {
    group.facts().iter().map(|f| render_fact(f, group.horizon())).collect()
}

pub fn to_instruction_example(item: &QAItem, context: &[String]) -> InstructionExample {
    InstructionExample {
        instruction: INSTRUCTION.to_string(),
        context: context.join(" "),
        question: item.question.clone(),
        target: item.answers.join(" and "),
    }
}
