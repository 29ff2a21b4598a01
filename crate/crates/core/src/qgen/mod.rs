//! Question generation: sample queries from a fact group, solve them, and
//! render them through templates.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::io::{self, BufRead, Write};

use rand::seq::IndexedRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::facts::{FactGroup, TemporalFact};
use crate::seed;
use crate::solver::{answer, Direction, Hops, Level, Query, QueryForm, SolverError};
use crate::temporal::{Granularity, SignedDuration, TimeError, TimePoint};

mod templates;

pub use crate::temporal::format_duration;
pub use templates::{
    bindings_for, builtin_templates, load_templates, question_text, render_template, FormKind, QuestionTemplate,
};

#[derive(Debug, Error)]
pub enum QgenError {
    #[error("template is missing a value for slot {{{0}}}")]
    MissingSlot(String),
    #[error("unknown template slot {{{0}}}")]
    UnknownSlot(String),
    #[error("bad template: {0}")]
    BadTemplate(String),
    #[error("dataset line {line}: {message}")]
    BadRecord { line: usize, message: String },
    #[error(transparent)]
    Solver(#[from] SolverError),
    #[error(transparent)]
    Time(#[from] TimeError),
    #[error(transparent)]
    Io(#[from] io::Error),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct QAItem {
    pub id: String,
    pub question: String,
    pub answers: Vec<String>,
    pub level: Level,
    pub hops: Hops,
    pub n_answers: usize,
    pub reference_time: TimePoint,
    pub subject_id: String,
    pub relation_id: String,
    pub query: Query,
}

impl QAItem {
    pub fn is_multi_answer(&self) -> bool {
        self.n_answers > 1
    }

    fn check(&self) -> Result<(), String> {
        if self.answers.is_empty() {
            return Err("empty answer list".into());
        }
        if self.answers.len() != self.n_answers {
            return Err(format!("n_answers {} but {} answers", self.n_answers, self.answers.len()));
        }
        if self.level != self.query.level() || self.hops != self.query.hops() {
            return Err("level/hops disagree with the query".into());
        }
        if self.subject_id != self.query.subject || self.relation_id != self.query.relation {
            return Err("subject/relation disagree with the query".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct GenerationConfig {
    /// Questions attempted per form for each group.
    pub quotas: BTreeMap<FormKind, usize>,
    pub seed: u64,
    /// With `training`, items whose reference time is on or after this are dropped.
    pub cutoff: TimePoint,
    pub training: bool,
    pub min_group_facts: usize,
    /// Largest offset, in months, sampled for offset questions.
    pub max_offset_months: i32,
    /// Sampling attempts per quota slot before giving up.
    pub attempts: usize,
}

impl Default for GenerationConfig {
    fn default() -> Self {
        Self {
            quotas: FormKind::ALL.iter().map(|k| (*k, 1)).collect(),
            seed: 0,
            cutoff: TimePoint::month(2020, 1).expect("valid cutoff"),
            training: false,
            min_group_facts: 2,
            max_offset_months: 360,
            attempts: 10,
        }
    }
}

/// Months covered by each relation, sorted and deduplicated.
fn covered_months(group: &FactGroup) -> HashMap<&str, Vec<i64>> {
    let mut out: HashMap<&str, Vec<i64>> = HashMap::new();
    for f in group.facts() {
        let first = f.interval.start().first_month();
        let last = f.interval.resolved_last(group.horizon()).unwrap_or(first);
        out.entry(f.relation.id.as_str()).or_default().extend(first..=last);
    }
    for months in out.values_mut() {
        months.sort_unstable();
        months.dedup();
    }
    out
}

/// Reference candidates: facts of `relation` whose object appears once for it,
/// so the rendered event names a single episode.
fn unambiguous_refs<'a>(group: &'a FactGroup, relation: &str) -> Vec<&'a TemporalFact> {
    let facts: Vec<&TemporalFact> = group.facts().iter().filter(|f| f.relation.id == relation).collect();
    facts
        .iter()
        .copied()
        .filter(|f| facts.iter().filter(|g| g.object.id == f.object.id).count() == 1)
        .collect()
}

fn month_point(index: i64) -> Option<TimePoint> {
    TimePoint::from_month_index(index, Granularity::Month).ok()
}

fn sample_query(
    group: &FactGroup,
    tpl: &QuestionTemplate,
    covered: &[i64],
    cfg: &GenerationConfig,
    rng: &mut ChaCha8Rng,
) -> Option<Query> {
    let subject = group.subject().id.clone();
    let max_dt = cfg.max_offset_months.max(1);
    let form = match tpl.form {
        FormKind::Point => QueryForm::Point {
            t_r: month_point(*covered.choose(rng)?)?,
        },
        FormKind::Interval => {
            let a = *covered.choose(rng)?;
            let b = *covered.choose(rng)?;
            if a == b {
                return None;
            }
            QueryForm::Interval {
                t_rs: month_point(a.min(b))?,
                t_re: month_point(a.max(b))?,
            }
        }
        FormKind::Offset => {
            let m = *covered.choose(rng)?;
            let dt = rng.random_range(1..=max_dt);
            let delta = match tpl.direction? {
                Direction::After => SignedDuration::from_months(dt),
                Direction::Before => SignedDuration::from_months(-dt),
            };
            QueryForm::Offset {
                t_r: month_point(m - delta.months() as i64)?,
                delta,
            }
        }
        FormKind::Before | FormKind::After | FormKind::During => {
            let reference = (*unambiguous_refs(group, tpl.ref_relation.as_deref()?).choose(rng)?).clone();
            match tpl.form {
                FormKind::Before => QueryForm::Before { reference },
                FormKind::After => QueryForm::After { reference },
                _ => QueryForm::During { reference },
            }
        }
        FormKind::EventOffset => {
            let m = *covered.choose(rng)?;
            let direction = tpl.direction?;
            let horizon = group.horizon();
            let fits = |f: &&TemporalFact| {
                let dt = match direction {
                    Direction::After => match f.interval.resolved_last(horizon) {
                        Ok(end) => m - end,
                        Err(_) => return false,
                    },
                    Direction::Before => f.interval.start().first_month() - m,
                };
                dt >= 1 && dt <= max_dt as i64
            };
            let refs: Vec<&TemporalFact> = unambiguous_refs(group, tpl.ref_relation.as_deref()?)
                .into_iter()
                .filter(|f| fits(f))
                .collect();
            let reference = (*refs.choose(rng)?).clone();
            let dt = match direction {
                Direction::After => m - reference.interval.resolved_last(horizon).ok()?,
                Direction::Before => reference.interval.start().first_month() - m,
            };
            QueryForm::EventOffset {
                reference,
                delta: SignedDuration::from_months(dt as i32),
                direction,
            }
        }
    };
    Query::new(subject, tpl.relation.clone(), form).ok()
}

fn before_cutoff(t: &TimePoint, cutoff: &TimePoint) -> bool {
    t.first_month() < cutoff.first_month()
}

/// Questions for one group. Deterministic in `(cfg.seed, subject id)`.
pub fn generate_questions(
    group: &FactGroup,
    templates: &[QuestionTemplate],
    cfg: &GenerationConfig,
) -> Result<Vec<QAItem>, QgenError> {
    if group.len() < cfg.min_group_facts {
        return Ok(Vec::new());
    }
    let subject_id = group.subject().id.as_str();
    let mut rng = seed::rng(cfg.seed, "generate", subject_id);
    let covered = covered_months(group);
    let mut seen: HashSet<Query> = HashSet::new();
    let mut items = Vec::new();

    for kind in FormKind::ALL {
        let quota = cfg.quotas.get(&kind).copied().unwrap_or(0);
        let usable: Vec<&QuestionTemplate> = templates
            .iter()
            .filter(|t| {
                t.form == kind
                    && covered.contains_key(t.relation.as_str())
                    && t.ref_relation.as_deref().is_none_or(|r| covered.contains_key(r))
            })
            .collect();
        if usable.is_empty() {
            continue;
        }
        let mut made = 0;
        for _ in 0..quota {
            for _ in 0..cfg.attempts {
                let tpl = *usable.choose(&mut rng).expect("non-empty");
                let Some(query) = sample_query(group, tpl, &covered[tpl.relation.as_str()], cfg, &mut rng) else {
                    continue;
                };
                if seen.contains(&query) {
                    continue;
                }
                let reference_time = query.reference_time();
                if cfg.training && !before_cutoff(&reference_time, &cfg.cutoff) {
                    continue;
                }
                let answers = answer(group, &query)?;
                if answers.is_empty() {
                    continue;
                }
                let question = question_text(tpl, &query, group)?;
                seen.insert(query.clone());
                items.push(QAItem {
                    id: format!("{subject_id}-{kind}-{made}"),
                    question,
                    n_answers: answers.len(),
                    answers: answers.into_iter().collect(),
                    level: query.level(),
                    hops: query.hops(),
                    reference_time,
                    subject_id: subject_id.to_string(),
                    relation_id: query.relation.clone(),
                    query,
                });
                made += 1;
                break;
            }
        }
    }
    Ok(items)
}

/// Runs [`generate_questions`] over all groups in parallel, keeping group order.
pub fn generate_dataset(
    groups: &[FactGroup],
    templates: &[QuestionTemplate],
    cfg: &GenerationConfig,
) -> Result<Vec<QAItem>, QgenError> {
    let per_group: Vec<Vec<QAItem>> = groups
        .par_iter()
        .map(|g| generate_questions(g, templates, cfg))
        .collect::<Result<_, _>>()?;
    Ok(per_group.into_iter().flatten().collect())
}

pub fn write_dataset<W: Write>(items: &[QAItem], mut sink: W) -> Result<usize, QgenError> {
    for item in items {
        serde_json::to_writer(&mut sink, item).map_err(io::Error::from)?;
        sink.write_all(b"\n")?;
    }
    sink.flush()?;
    Ok(items.len())
}

pub fn read_dataset<R: BufRead>(src: R) -> Result<Vec<QAItem>, QgenError> {
    let mut out = Vec::new();
    for (i, line) in src.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let bad = |message: String| QgenError::BadRecord { line: i + 1, message };
        let item: QAItem = serde_json::from_str(&line).map_err(|e| bad(e.to_string()))?;
        item.check().map_err(bad)?;
        out.push(item);
    }
    Ok(out)
}

#[cfg(test)]
mod tests;
