//! Temporal fact quintuples, subject groups, and the statements ingestion path.

use std::collections::{BTreeMap, HashMap};
use std::io::BufRead;

use rand::seq::index;
use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::seed;
use crate::temporal::{SignedDuration, TimeError, TimeInterval, TimePoint};

#[derive(Debug, Error)]
pub enum FactsError {
    #[error("line {line}: {message}")]
    Malformed { line: usize, message: String },
    #[error("fact has an empty {0} label")]
    EmptyLabel(&'static str),
    #[error("fact subject {found} does not match group subject {expected}")]
    SubjectMismatch { expected: String, found: String },
    #[error("a fact group needs at least one fact")]
    EmptyGroup,
    #[error("requested {requested} groups but only {available} are available")]
    SplitTooLarge { requested: usize, available: usize },
    #[error(transparent)]
    Time(#[from] TimeError),
    #[error("reading statements: {0}")]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct EntityRef {
    pub id: String,
    pub label: String,
}

impl EntityRef {
    pub fn new(id: impl Into<String>, label: impl Into<String>) -> Self {
        Self {
            id: id.into(),
            label: label.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct RelationRef {
    pub id: String,
    pub label: String,
}

impl RelationRef {
    pub fn new(id: impl Into<String>, label: impl Into<String>) -> Self {
        Self {
            id: id.into(),
            label: label.into(),
        }
    }
}

/// One `(subject, relation, object, start, end)` quintuple.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct TemporalFact {
    pub subject: EntityRef,
    pub relation: RelationRef,
    pub object: EntityRef,
    pub interval: TimeInterval,
}

impl TemporalFact {
    pub fn new(
        subject: EntityRef,
        relation: RelationRef,
        object: EntityRef,
        interval: TimeInterval,
    ) -> Result<Self, FactsError> {
        for (name, label) in [
            ("subject", &subject.label),
            ("relation", &relation.label),
            ("object", &object.label),
        ] {
            if label.trim().is_empty() {
                return Err(FactsError::EmptyLabel(name));
            }
        }
        Ok(Self {
            subject,
            relation,
            object,
            interval,
        })
    }

    pub fn shifted(&self, d: SignedDuration) -> Result<Self, TimeError> {
        Ok(Self {
            interval: self.interval.shift(d)?,
            ..self.clone()
        })
    }
}

/// All facts about one subject. Ongoing facts resolve against `horizon`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawGroup")]
pub struct FactGroup {
    subject: EntityRef,
    facts: Vec<TemporalFact>,
    representative_relation: String,
    horizon: Option<TimePoint>,
}

#[derive(Deserialize)]
struct RawGroup {
    subject: EntityRef,
    facts: Vec<TemporalFact>,
    horizon: Option<TimePoint>,
}

impl TryFrom<RawGroup> for FactGroup {
    type Error = FactsError;

    fn try_from(raw: RawGroup) -> Result<Self, Self::Error> {
        FactGroup::new(raw.subject, raw.facts, raw.horizon)
    }
}

impl FactGroup {
    pub fn new(
        subject: EntityRef,
        facts: Vec<TemporalFact>,
        horizon: Option<TimePoint>,
    ) -> Result<Self, FactsError> {
        if facts.is_empty() {
            return Err(FactsError::EmptyGroup);
        }
        if let Some(f) = facts.iter().find(|f| f.subject.id != subject.id) {
            return Err(FactsError::SubjectMismatch {
                expected: subject.id.clone(),
                found: f.subject.id.clone(),
            });
        }
        let representative_relation = representative_relation(&facts);
        Ok(Self {
            subject,
            facts,
            representative_relation,
            horizon,
        })
    }

    pub fn subject(&self) -> &EntityRef {
        &self.subject
    }

    pub fn facts(&self) -> &[TemporalFact] {
        &self.facts
    }

    pub fn representative_relation(&self) -> &str {
        &self.representative_relation
    }

    pub fn horizon(&self) -> Option<TimePoint> {
        self.horizon
    }

    pub fn len(&self) -> usize {
        self.facts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.facts.is_empty()
    }

    pub fn facts_with_relation<'a>(
        &'a self,
        relation: &'a str,
    ) -> impl Iterator<Item = &'a TemporalFact> + 'a {
        self.facts.iter().filter(move |f| f.relation.id == relation)
    }

    pub fn relation_label(&self, relation: &str) -> Option<&str> {
        self.facts
            .iter()
            .find(|f| f.relation.id == relation)
            .map(|f| f.relation.label.as_str())
    }

    /// Shifts every fact and the horizon by `d`.
    pub fn shifted(&self, d: SignedDuration) -> Result<Self, TimeError> {
        let facts = self
            .facts
            .iter()
            .map(|f| f.shifted(d))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Self {
            subject: self.subject.clone(),
            facts,
            representative_relation: self.representative_relation.clone(),
            horizon: self.horizon.map(|h| h.add_duration(d)).transpose()?,
        })
    }
}

/// Modal relation id; ties go to the lexicographically smallest id.
pub fn representative_relation(facts: &[TemporalFact]) -> String {
    let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
    for f in facts {
        *counts.entry(f.relation.id.as_str()).or_default() += 1;
    }
    // BTreeMap iterates ids in ascending order, so keeping the first maximum
    // resolves ties toward the smallest id.
    let mut best: Option<(&str, usize)> = None;
    for (id, n) in counts {
        if best.is_none_or(|(_, m)| n > m) {
            best = Some((id, n));
        }
    }
    best.map(|(id, _)| id.to_string()).unwrap_or_default()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KnowledgeBase {
    pub snapshot_date: TimePoint,
    pub groups: Vec<FactGroup>,
    /// Records dropped because they carried no temporal qualifier.
    pub skipped: usize,
}

impl KnowledgeBase {
    pub fn fact_count(&self) -> usize {
        self.groups.iter().map(FactGroup::len).sum()
    }
}

/// One line of a statements file.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StatementRecord {
    pub subject_id: String,
    pub subject_label: String,
    pub relation_id: String,
    pub relation_label: String,
    pub object_id: String,
    pub object_label: String,
    pub start: Option<String>,
    pub end: Option<String>,
}

impl StatementRecord {
    /// `Ok(None)` for records without any temporal qualifier. A record with
    /// only an end date is a point-in-time fact.
    fn into_fact(self) -> Result<Option<TemporalFact>, FactsError> {
        let start = self.start.as_deref().map(TimePoint::parse_iso).transpose()?;
        let end = self.end.as_deref().map(TimePoint::parse_iso).transpose()?;
        let interval = match (start, end) {
            (None, None) => return Ok(None),
            (Some(s), e) => TimeInterval::new(s, e)?,
            (None, Some(e)) => TimeInterval::closed(e, e)?,
        };
        TemporalFact::new(
            EntityRef::new(self.subject_id, self.subject_label),
            RelationRef::new(self.relation_id, self.relation_label),
            EntityRef::new(self.object_id, self.object_label),
            interval,
        )
        .map(Some)
    }
}

/// Reads line-delimited JSON statements and groups them by subject, keeping
/// first-appearance order for both groups and facts.
pub fn ingest_statements<R: BufRead>(
    source: R,
    snapshot_date: TimePoint,
) -> Result<KnowledgeBase, FactsError> {
    let mut order: Vec<(EntityRef, Vec<TemporalFact>)> = Vec::new();
    let mut by_subject: HashMap<String, usize> = HashMap::new();
    let mut skipped = 0;
    for (i, line) in source.lines().enumerate() {
        let line_no = i + 1;
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let malformed = |message: String| FactsError::Malformed {
            line: line_no,
            message,
        };
        let record: StatementRecord =
            serde_json::from_str(&line).map_err(|e| malformed(e.to_string()))?;
        let Some(fact) = record.into_fact().map_err(|e| malformed(e.to_string()))? else {
            skipped += 1;
            continue;
        };
        let slot = *by_subject
            .entry(fact.subject.id.clone())
            .or_insert_with(|| {
                order.push((fact.subject.clone(), Vec::new()));
                order.len() - 1
            });
        order[slot].1.push(fact);
    }
    let groups = order
        .into_iter()
        .map(|(subject, facts)| FactGroup::new(subject, facts, Some(snapshot_date)))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(KnowledgeBase {
        snapshot_date,
        groups,
        skipped,
    })
}

/// Keeps at most `cap` groups per representative relation, chosen by a seeded
/// uniform sample. Relative order of the survivors is preserved.
pub fn apply_relation_ceiling(groups: Vec<FactGroup>, cap: usize, master_seed: u64) -> Vec<FactGroup> {
    assert!(cap >= 1, "relation ceiling must be at least 1");
    let mut by_relation: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
    for (i, g) in groups.iter().enumerate() {
        by_relation.entry(g.representative_relation()).or_default().push(i);
    }
    let mut keep = vec![false; groups.len()];
    for (relation, members) in by_relation {
        if members.len() <= cap {
            members.iter().for_each(|&i| keep[i] = true);
            continue;
        }
        let mut rng = seed::rng(master_seed, "ceiling", relation);
        for pick in index::sample(&mut rng, members.len(), cap) {
            keep[members[pick]] = true;
        }
    }
    groups
        .into_iter()
        .zip(keep)
        .filter_map(|(g, k)| k.then_some(g))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitSizes {
    pub train: usize,
    pub dev: usize,
    pub test: usize,
}

impl SplitSizes {
    pub fn total(&self) -> usize {
        self.train + self.dev + self.test
    }
}

impl Default for SplitSizes {
    fn default() -> Self {
        Self {
            train: 1000,
            dev: 500,
            test: 500,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Splits {
    pub train: Vec<FactGroup>,
    pub dev: Vec<FactGroup>,
    pub test: Vec<FactGroup>,
}

/// Seeded disjoint partition with exactly the requested sizes. Groups left
/// over when the sizes sum to less than the input are dropped.
pub fn split_groups(groups: Vec<FactGroup>, sizes: SplitSizes, master_seed: u64) -> Result<Splits, FactsError> {
    if sizes.total() > groups.len() {
        return Err(FactsError::SplitTooLarge {
            requested: sizes.total(),
            available: groups.len(),
        });
    }
    let mut order: Vec<usize> = (0..groups.len()).collect();
    order.shuffle(&mut seed::rng(master_seed, "split", ""));
    let mut assignment = vec![None; groups.len()];
    for (rank, &i) in order.iter().enumerate() {
        assignment[i] = if rank < sizes.train {
            Some(0)
        } else if rank < sizes.train + sizes.dev {
            Some(1)
        } else if rank < sizes.total() {
            Some(2)
        } else {
            None
        };
    }
    let mut splits = Splits::default();
    for (g, slot) in groups.into_iter().zip(assignment) {
        match slot {
            Some(0) => splits.train.push(g),
            Some(1) => splits.dev.push(g),
            Some(2) => splits.test.push(g),
            _ => {}
        }
    }
    Ok(splits)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashSet;

    fn ym(y: i32, m: u32) -> TimePoint {
        TimePoint::month(y, m).unwrap()
    }

    fn fact(subject: &str, relation: &str, object: &str) -> TemporalFact {
        TemporalFact::new(
            EntityRef::new(subject, subject),
            RelationRef::new(relation, relation),
            EntityRef::new(object, object),
            TimeInterval::closed(ym(2000, 1), ym(2001, 1)).unwrap(),
        )
        .unwrap()
    }

    fn group(subject: &str, relations: &[&str]) -> FactGroup {
        let facts = relations
            .iter()
            .enumerate()
            .map(|(i, r)| fact(subject, r, &format!("o{i}")))
            .collect();
        FactGroup::new(EntityRef::new(subject, subject), facts, None).unwrap()
    }

    fn line(subject: &str, object: &str, start: Option<&str>, end: Option<&str>) -> String {
        serde_json::to_string(&StatementRecord {
            subject_id: subject.into(),
            subject_label: format!("{subject} label"),
            relation_id: "P69".into(),
            relation_label: "educated at".into(),
            object_id: object.into(),
            object_label: format!("{object} label"),
            start: start.map(String::from),
            end: end.map(String::from),
        })
        .unwrap()
    }

    #[test]
    fn ingest_groups_by_subject() {
        let text = [
            line("Q1", "A", Some("2000-09"), Some("2003-08")),
            line("Q1", "B", Some("2005-09"), Some("2007-03")),
            line("Q1", "C", Some("2007-09"), Some("2008-09")),
        ]
        .join("\n");
        let kb = ingest_statements(text.as_bytes(), ym(2023, 3)).unwrap();
        assert_eq!(kb.groups.len(), 1);
        assert_eq!(kb.groups[0].len(), 3);
        assert_eq!(kb.groups[0].horizon(), Some(ym(2023, 3)));
    }

    #[test]
    fn ingest_missing_end_is_ongoing_and_unqualified_is_skipped() {
        let text = [
            line("Q1", "A", Some("2016-07"), None),
            line("Q1", "B", None, None),
            String::new(),
            line("Q2", "C", None, Some("1999")),
        ]
        .join("\n");
        let kb = ingest_statements(text.as_bytes(), ym(2023, 3)).unwrap();
        assert_eq!(kb.skipped, 1);
        assert!(kb.groups[0].facts()[0].interval.is_ongoing());
        let point = kb.groups[1].facts()[0].interval;
        assert_eq!(point.start(), point.end().unwrap());
    }

    #[test]
    fn ingest_rejects_inverted_interval_with_line_number() {
        let text = [
            line("Q1", "A", Some("2000-09"), Some("2003-08")),
            line("Q1", "B", Some("2007-03"), Some("2005-09")),
        ]
        .join("\n");
        match ingest_statements(text.as_bytes(), ym(2023, 3)) {
            Err(FactsError::Malformed { line, .. }) => assert_eq!(line, 2),
            other => panic!("expected malformed error, got {other:?}"),
        }
    }

    #[test]
    fn ingest_rejects_bad_json_and_empty_labels() {
        assert!(matches!(
            ingest_statements("{not json".as_bytes(), ym(2023, 3)),
            Err(FactsError::Malformed { line: 1, .. })
        ));
        let mut rec: StatementRecord = serde_json::from_str(&line("Q1", "A", Some("2000"), None)).unwrap();
        rec.object_label = " ".into();
        let text = serde_json::to_string(&rec).unwrap();
        assert!(matches!(
            ingest_statements(text.as_bytes(), ym(2023, 3)),
            Err(FactsError::Malformed { line: 1, .. })
        ));
        let empty = ingest_statements("".as_bytes(), ym(2023, 3)).unwrap();
        assert!(empty.groups.is_empty());
    }

    #[test]
    fn representative_relation_examples() {
        assert_eq!(group("s", &["P69", "P69", "P69", "P108", "P108"]).representative_relation(), "P69");
        assert_eq!(group("s", &["P69", "P69", "P108", "P108"]).representative_relation(), "P108");
        assert_eq!(group("s", &["P54"]).representative_relation(), "P54");
    }

    #[test]
    fn group_rejects_foreign_subject() {
        let facts = vec![fact("a", "P1", "x"), fact("b", "P1", "y")];
        assert!(matches!(
            FactGroup::new(EntityRef::new("a", "a"), facts, None),
            Err(FactsError::SubjectMismatch { .. })
        ));
        assert!(matches!(
            FactGroup::new(EntityRef::new("a", "a"), vec![], None),
            Err(FactsError::EmptyGroup)
        ));
    }

    fn many(n: usize, relation: &str) -> Vec<FactGroup> {
        (0..n).map(|i| group(&format!("{relation}-{i}"), &[relation])).collect()
    }

    #[test]
    fn ceiling_caps_each_relation() {
        let mut groups = many(300, "P54");
        groups.extend(many(100, "P69"));
        let kept = apply_relation_ceiling(groups.clone(), 250, 11);
        let count = |r: &str| kept.iter().filter(|g| g.representative_relation() == r).count();
        assert_eq!(count("P54"), 250);
        assert_eq!(count("P69"), 100);
        assert_eq!(kept, apply_relation_ceiling(groups.clone(), 250, 11));
        assert_ne!(kept, apply_relation_ceiling(groups.clone(), 250, 12));
        let input: HashSet<_> = groups.iter().map(|g| g.subject().id.clone()).collect();
        assert!(kept.iter().all(|g| input.contains(&g.subject().id)));
    }

    #[test]
    fn split_is_disjoint_and_exact() {
        let groups = many(2000, "P69");
        let s = split_groups(groups, SplitSizes::default(), 3).unwrap();
        assert_eq!((s.train.len(), s.dev.len(), s.test.len()), (1000, 500, 500));
        let ids = |v: &[FactGroup]| v.iter().map(|g| g.subject().id.clone()).collect::<HashSet<_>>();
        let (a, b, c) = (ids(&s.train), ids(&s.dev), ids(&s.test));
        assert!(a.is_disjoint(&b) && a.is_disjoint(&c) && b.is_disjoint(&c));
        assert_eq!(a.len() + b.len() + c.len(), 2000);
    }

    #[test]
    fn split_degenerate_and_oversized() {
        let s = split_groups(many(7, "P1"), SplitSizes { train: 0, dev: 0, test: 7 }, 1).unwrap();
        assert_eq!(s.test.len(), 7);
        assert!(matches!(
            split_groups(many(7, "P1"), SplitSizes { train: 5, dev: 2, test: 1 }, 1),
            Err(FactsError::SplitTooLarge { requested: 8, available: 7 })
        ));
    }

    #[test]
    fn group_round_trips_through_json() {
        let g = group("s", &["P69", "P108"]);
        let back: FactGroup = serde_json::from_str(&serde_json::to_string(&g).unwrap()).unwrap();
        assert_eq!(back, g);
    }
}
