//! Exact answer sets for temporal queries over a single fact group.
//!
//! Overlap-style queries (`Point`, `Interval`, `Offset`, `During`,
//! `EventOffset`) reduce to a window on the month axis; every fact of the
//! queried relation whose closed span meets the window contributes its object.
//! `Before` and `After` select the immediately preceding or following
//! episode(s) relative to the reference event.

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::facts::{FactGroup, TemporalFact};
use crate::temporal::{Granularity, MonthSpan, SignedDuration, TimeError, TimePoint};

pub mod oracle;

pub use oracle::brute_force_answer;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SolverError {
    #[error("query subject {query} does not match group subject {group}")]
    SubjectMismatch { query: String, group: String },
    #[error("reference fact {relation}/{object} is not part of the group")]
    RefNotInGroup { relation: String, object: String },
    #[error("invalid query: {0}")]
    InvalidQuery(String),
    #[error(transparent)]
    Time(#[from] TimeError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Level {
    L2,
    L3,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Hops {
    #[serde(rename = "1-hop")]
    One,
    #[serde(rename = "M-hop")]
    Multi,
}

impl fmt::Display for Level {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Level::L2 => "L2",
            Level::L3 => "L3",
        })
    }
}

impl fmt::Display for Hops {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Hops::One => "1-hop",
            Hops::Multi => "M-hop",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Before,
    After,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "form", rename_all = "snake_case")]
pub enum QueryForm {
    /// `(s, r, ?, t_r)`
    Point { t_r: TimePoint },
    /// `(s, r, ?, t_rs, t_re)`
    Interval { t_rs: TimePoint, t_re: TimePoint },
    /// `(s, r, ?, t_r, delta)`; a negative delta reads "delta before t_r".
    Offset { t_r: TimePoint, delta: SignedDuration },
    Before { reference: TemporalFact },
    After { reference: TemporalFact },
    During { reference: TemporalFact },
    /// `delta` is a positive magnitude; "after" anchors at the reference end,
    /// "before" at the reference start.
    EventOffset {
        reference: TemporalFact,
        delta: SignedDuration,
        direction: Direction,
    },
}

impl QueryForm {
    pub fn level(&self) -> Level {
        match self {
            QueryForm::Point { .. } | QueryForm::Interval { .. } | QueryForm::Offset { .. } => Level::L2,
            _ => Level::L3,
        }
    }

    /// One temporal expression makes a 1-hop question.
    pub fn hops(&self) -> Hops {
        match self {
            QueryForm::Point { .. } | QueryForm::Before { .. } | QueryForm::After { .. } => Hops::One,
            _ => Hops::Multi,
        }
    }

    pub fn reference(&self) -> Option<&TemporalFact> {
        match self {
            QueryForm::Before { reference }
            | QueryForm::After { reference }
            | QueryForm::During { reference }
            | QueryForm::EventOffset { reference, .. } => Some(reference),
            _ => None,
        }
    }

    /// The time mentioned in the question for L2, the reference event's start for L3.
    pub fn reference_time(&self) -> TimePoint {
        match self {
            QueryForm::Point { t_r } | QueryForm::Offset { t_r, .. } => *t_r,
            QueryForm::Interval { t_rs, .. } => *t_rs,
            QueryForm::Before { reference }
            | QueryForm::After { reference }
            | QueryForm::During { reference }
            | QueryForm::EventOffset { reference, .. } => reference.interval.start(),
        }
    }

    pub fn tag(&self) -> &'static str {
        match self {
            QueryForm::Point { .. } => "point",
            QueryForm::Interval { .. } => "interval",
            QueryForm::Offset { .. } => "offset",
            QueryForm::Before { .. } => "before",
            QueryForm::After { .. } => "after",
            QueryForm::During { .. } => "during",
            QueryForm::EventOffset { .. } => "event_offset",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Query {
    pub subject: String,
    pub relation: String,
    #[serde(flatten)]
    pub form: QueryForm,
}

impl Query {
    pub fn new(subject: impl Into<String>, relation: impl Into<String>, form: QueryForm) -> Result<Self, SolverError> {
        match &form {
            QueryForm::Interval { t_rs, t_re } if t_rs.first_month() > t_re.last_month() => {
                return Err(SolverError::InvalidQuery(format!(
                    "interval start {} is after its end {}",
                    t_rs.to_iso(),
                    t_re.to_iso()
                )));
            }
            QueryForm::EventOffset { delta, .. } if delta.months() <= 0 => {
                return Err(SolverError::InvalidQuery(format!(
                    "event offset magnitude must be positive, got {}",
                    delta.months()
                )));
            }
            _ => {}
        }
        Ok(Self {
            subject: subject.into(),
            relation: relation.into(),
            form,
        })
    }

    pub fn level(&self) -> Level {
        self.form.level()
    }

    pub fn hops(&self) -> Hops {
        self.form.hops()
    }

    pub fn reference_time(&self) -> TimePoint {
        self.form.reference_time()
    }

    /// Shifts every absolute time point (including the reference event's
    /// interval) by `d`; durations are left alone.
    pub fn shifted(&self, d: SignedDuration) -> Result<Self, SolverError> {
        if d.months() % 12 != 0 {
            let year_granular = |p: &TimePoint| p.granularity() == Granularity::Year;
            let has_year_point = match &self.form {
                QueryForm::Point { t_r } | QueryForm::Offset { t_r, .. } => year_granular(t_r),
                QueryForm::Interval { t_rs, t_re } => year_granular(t_rs) || year_granular(t_re),
                _ => false,
            };
            if has_year_point {
                return Err(SolverError::InvalidQuery(
                    "year-granular query times only shift by whole years".into(),
                ));
            }
        }
        let form = match &self.form {
            QueryForm::Point { t_r } => QueryForm::Point { t_r: t_r.add_duration(d)? },
            QueryForm::Interval { t_rs, t_re } => QueryForm::Interval {
                t_rs: t_rs.add_duration(d)?,
                t_re: t_re.add_duration(d)?,
            },
            QueryForm::Offset { t_r, delta } => QueryForm::Offset {
                t_r: t_r.add_duration(d)?,
                delta: *delta,
            },
            QueryForm::Before { reference } => QueryForm::Before {
                reference: reference.shifted(d)?,
            },
            QueryForm::After { reference } => QueryForm::After {
                reference: reference.shifted(d)?,
            },
            QueryForm::During { reference } => QueryForm::During {
                reference: reference.shifted(d)?,
            },
            QueryForm::EventOffset {
                reference,
                delta,
                direction,
            } => QueryForm::EventOffset {
                reference: reference.shifted(d)?,
                delta: *delta,
                direction: *direction,
            },
        };
        Ok(Self {
            subject: self.subject.clone(),
            relation: self.relation.clone(),
            form,
        })
    }
}

/// Deduplicated answer labels, kept sorted.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct AnswerSet(BTreeSet<String>);

impl AnswerSet {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, label: impl Into<String>) -> bool {
        self.0.insert(label.into())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn contains(&self, label: &str) -> bool {
        self.0.contains(label)
    }

    pub fn iter(&self) -> impl Iterator<Item = &String> {
        self.0.iter()
    }

    /// Answers joined with the " and " connector.
    pub fn joined(&self) -> String {
        self.0.iter().map(String::as_str).collect::<Vec<_>>().join(" and ")
    }
}

impl<S: Into<String>> FromIterator<S> for AnswerSet {
    fn from_iter<I: IntoIterator<Item = S>>(iter: I) -> Self {
        Self(iter.into_iter().map(Into::into).collect())
    }
}

impl IntoIterator for AnswerSet {
    type Item = String;
    type IntoIter = std::collections::btree_set::IntoIter<String>;

    fn into_iter(self) -> Self::IntoIter {
        self.0.into_iter()
    }
}

/// The effective time constraint of a query on the month axis.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QueryWindow {
    /// Facts overlapping this span answer the query.
    Span(MonthSpan),
    /// Predecessor semantics relative to the reference start month.
    Before { ref_start: i64 },
    /// Successor semantics relative to the reference end month.
    After { ref_end: i64 },
}

fn check_query(q: &Query, group: &FactGroup) -> Result<(), SolverError> {
    if q.subject != group.subject().id {
        return Err(SolverError::SubjectMismatch {
            query: q.subject.clone(),
            group: group.subject().id.clone(),
        });
    }
    if let Some(r) = q.form.reference() {
        if !group.facts().contains(r) {
            return Err(SolverError::RefNotInGroup {
                relation: r.relation.id.clone(),
                object: r.object.id.clone(),
            });
        }
    }
    Ok(())
}

pub fn resolve_query_time(q: &Query, group: &FactGroup) -> Result<QueryWindow, SolverError> {
    check_query(q, group)?;
    let horizon = group.horizon();
    let single = |m: i64| QueryWindow::Span(MonthSpan::single(m));
    Ok(match &q.form {
        QueryForm::Point { t_r } => QueryWindow::Span(t_r.span()),
        QueryForm::Interval { t_rs, t_re } => QueryWindow::Span(MonthSpan::new(t_rs.first_month(), t_re.last_month())),
        QueryForm::Offset { t_r, delta } => QueryWindow::Span(t_r.add_duration(*delta)?.span()),
        QueryForm::During { reference } => QueryWindow::Span(MonthSpan::new(
            reference.interval.start().first_month(),
            reference.interval.resolved_last(horizon)?,
        )),
        QueryForm::EventOffset {
            reference,
            delta,
            direction: Direction::After,
        } => {
            let anchor = TimePoint::from_month_index(reference.interval.resolved_last(horizon)?, Granularity::Month)?;
            single(anchor.add_duration(*delta)?.month_index())
        }
        QueryForm::EventOffset {
            reference,
            delta,
            direction: Direction::Before,
        } => {
            let anchor = TimePoint::from_month_index(reference.interval.start().first_month(), Granularity::Month)?;
            single(anchor.add_duration(-*delta)?.month_index())
        }
        QueryForm::Before { reference } => QueryWindow::Before {
            ref_start: reference.interval.start().first_month(),
        },
        QueryForm::After { reference } => QueryWindow::After {
            ref_end: reference.interval.resolved_last(horizon)?,
        },
    })
}

pub fn answer(group: &FactGroup, q: &Query) -> Result<AnswerSet, SolverError> {
    let window = resolve_query_time(q, group)?;
    let horizon = group.horizon();
    let candidates = group.facts_with_relation(&q.relation);
    let excluded = q.form.reference().map(|r| r.object.id.as_str());
    Ok(match window {
        QueryWindow::Span(span) => candidates
            .filter(|f| f.interval.span(horizon).overlaps(&span))
            .map(|f| f.object.label.clone())
            .collect(),
        QueryWindow::Before { ref_start } => {
            let eligible: Vec<(i64, &TemporalFact)> = candidates
                .filter(|f| Some(f.object.id.as_str()) != excluded)
                .filter_map(|f| f.interval.end().map(|e| (e.last_month(), f)))
                .filter(|(end, _)| *end <= ref_start)
                .collect();
            let Some(latest) = eligible.iter().map(|(end, _)| *end).max() else {
                return Ok(AnswerSet::new());
            };
            eligible
                .into_iter()
                .filter(|(end, _)| *end == latest)
                .map(|(_, f)| f.object.label.clone())
                .collect()
        }
        QueryWindow::After { ref_end } => {
            let eligible: Vec<(i64, &TemporalFact)> = candidates
                .filter(|f| Some(f.object.id.as_str()) != excluded)
                .map(|f| (f.interval.start().first_month(), f))
                .filter(|(start, _)| *start >= ref_end)
                .collect();
            let Some(earliest) = eligible.iter().map(|(start, _)| *start).min() else {
                return Ok(AnswerSet::new());
            };
            eligible
                .into_iter()
                .filter(|(start, _)| *start == earliest)
                .map(|(_, f)| f.object.label.clone())
                .collect()
        }
    })
}

#[cfg(test)]
mod tests;
