//! Month-by-month enumeration oracle for [`answer`](super::answer).
//!
//! Walks every month of the group's hull and tests fact membership one month
//! at a time. It shares only the calendar primitives with the interval path.

use crate::facts::{FactGroup, TemporalFact};
use crate::solver::{AnswerSet, Direction, Query, QueryForm, SolverError};
use crate::temporal::{Granularity, TimeError, TimePoint};

/// First and last month a fact holds, with ongoing facts ending at the horizon.
fn months_of(f: &TemporalFact, horizon: Option<TimePoint>) -> Result<(i64, i64), TimeError> {
    Ok((f.interval.start().first_month(), f.interval.resolved_last(horizon)?))
}

fn holds_at(bounds: (i64, i64), month: i64) -> bool {
    bounds.0 <= month && month <= bounds.1
}

/// Does the calendar point `p` (as written in the query) cover `month`?
fn point_covers(p: &TimePoint, month: i64) -> bool {
    match p.granularity() {
        Granularity::Month => p.month_index() == month,
        Granularity::Year => month.div_euclid(12) == p.year_value() as i64,
    }
}

pub fn brute_force_answer(group: &FactGroup, q: &Query) -> Result<AnswerSet, SolverError> {
    if q.subject != group.subject().id {
        return Err(SolverError::SubjectMismatch {
            query: q.subject.clone(),
            group: group.subject().id.clone(),
        });
    }
    if let Some(r) = q.form.reference() {
        if !group.facts().iter().any(|f| f == r) {
            return Err(SolverError::RefNotInGroup {
                relation: r.relation.id.clone(),
                object: r.object.id.clone(),
            });
        }
    }
    let horizon = group.horizon();
    let mut bounds = Vec::with_capacity(group.len());
    for f in group.facts() {
        bounds.push((f, months_of(f, horizon)?));
    }
    let hull_start = bounds.iter().map(|(_, b)| b.0).min().unwrap_or(0);
    let hull_end = bounds.iter().map(|(_, b)| b.1).max().unwrap_or(-1);
    let relevant: Vec<(&TemporalFact, (i64, i64))> = bounds
        .into_iter()
        .filter(|(f, _)| f.relation.id == q.relation)
        .collect();

    let in_window: Box<dyn Fn(i64) -> bool> = match &q.form {
        QueryForm::Point { t_r } => {
            let t_r = *t_r;
            Box::new(move |m| point_covers(&t_r, m))
        }
        QueryForm::Interval { t_rs, t_re } => {
            let (a, b) = (*t_rs, *t_re);
            // every month from the first month of t_rs through the last month of t_re
            Box::new(move |m| {
                (m >= a.month_index() || point_covers(&a, m))
                    && (m <= b.month_index() || point_covers(&b, m))
            })
        }
        QueryForm::Offset { t_r, delta } => {
            let target = t_r.month_index() + delta.months() as i64;
            let whole_year = t_r.granularity() == Granularity::Year && delta.months() % 12 == 0;
            Box::new(move |m| {
                if whole_year {
                    m.div_euclid(12) == target.div_euclid(12)
                } else {
                    m == target
                }
            })
        }
        QueryForm::During { reference } => {
            let r = months_of(reference, horizon)?;
            Box::new(move |m| holds_at(r, m))
        }
        QueryForm::EventOffset {
            reference,
            delta,
            direction,
        } => {
            let r = months_of(reference, horizon)?;
            let target = match direction {
                Direction::After => r.1 + delta.months() as i64,
                Direction::Before => r.0 - delta.months() as i64,
            };
            TimePoint::from_month_index(target, Granularity::Month)?;
            Box::new(move |m| m == target)
        }
        QueryForm::Before { reference } => {
            let ref_start = reference.interval.start().first_month();
            let eligible: Vec<_> = relevant
                .iter()
                .filter(|(f, b)| {
                    f.object.id != reference.object.id && !f.interval.is_ongoing() && b.1 <= ref_start
                })
                .collect();
            let mut month = ref_start.min(hull_end);
            while month >= hull_start {
                let found: AnswerSet = eligible
                    .iter()
                    .filter(|(_, b)| holds_at(*b, month))
                    .map(|(f, _)| f.object.label.clone())
                    .collect();
                if !found.is_empty() {
                    return Ok(found);
                }
                month -= 1;
            }
            return Ok(AnswerSet::new());
        }
        QueryForm::After { reference } => {
            let ref_end = months_of(reference, horizon)?.1;
            let eligible: Vec<_> = relevant
                .iter()
                .filter(|(f, b)| f.object.id != reference.object.id && b.0 >= ref_end)
                .collect();
            let mut month = ref_end.max(hull_start);
            while month <= hull_end {
                let found: AnswerSet = eligible
                    .iter()
                    .filter(|(_, b)| holds_at(*b, month))
                    .map(|(f, _)| f.object.label.clone())
                    .collect();
                if !found.is_empty() {
                    return Ok(found);
                }
                month += 1;
            }
            return Ok(AnswerSet::new());
        }
    };

    let mut out = AnswerSet::new();
    for month in hull_start..=hull_end {
        if !in_window(month) {
            continue;
        }
        for (f, b) in &relevant {
            if holds_at(*b, month) {
                out.insert(f.object.label.clone());
            }
        }
    }
    Ok(out)
}
