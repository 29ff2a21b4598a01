//! Fictional entity pools, relation kind signatures, and anonymization.

use std::collections::{BTreeMap, HashSet};
use std::fmt;

use rand::seq::index;
use serde::{Deserialize, Serialize};

use crate::augment::AugmentError;
use crate::facts::{EntityRef, FactGroup, TemporalFact};
use crate::seed;
use crate::solver::{Query, QueryForm};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EntityKind {
    People,
    Schools,
    Companies,
    Teams,
    Countries,
    Towns,
    Awards,
}

impl EntityKind {
    pub fn name(&self) -> &'static str {
        match self {
            EntityKind::People => "people",
            EntityKind::Schools => "schools",
            EntityKind::Companies => "companies",
            EntityKind::Teams => "teams",
            EntityKind::Countries => "countries",
            EntityKind::Towns => "towns",
            EntityKind::Awards => "awards",
        }
    }
}

impl fmt::Display for EntityKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EntityPool {
    kind: EntityKind,
    names: Vec<String>,
}

impl EntityPool {
    pub fn new(kind: EntityKind, names: Vec<String>) -> Result<Self, AugmentError> {
        if names.is_empty() {
            return Err(AugmentError::BadPools(format!("pool {kind} is empty")));
        }
        let mut seen = HashSet::new();
        for n in &names {
            if n.trim().is_empty() || !seen.insert(n.as_str()) {
                return Err(AugmentError::BadPools(format!("pool {kind} has a blank or repeated name {n:?}")));
            }
        }
        Ok(Self { kind, names })
    }

    pub fn kind(&self) -> EntityKind {
        self.kind
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }
}

/// All pools, with names unique across kinds so the entity map stays injective.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EntityPools(BTreeMap<EntityKind, EntityPool>);

const BUILTIN_POOLS: &str = include_str!("../../data/pools.json");

impl EntityPools {
    pub fn new(pools: Vec<EntityPool>) -> Result<Self, AugmentError> {
        let mut seen = HashSet::new();
        let mut out = BTreeMap::new();
        for p in pools {
            for n in &p.names {
                if !seen.insert(n.clone()) {
                    return Err(AugmentError::BadPools(format!("name {n:?} appears in more than one pool")));
                }
            }
            if out.insert(p.kind, p).is_some() {
                return Err(AugmentError::BadPools("duplicate pool kind".into()));
            }
        }
        Ok(Self(out))
    }

    /// Parses `{"people": [...], "schools": [...], ...}`.
    pub fn from_json(text: &str) -> Result<Self, AugmentError> {
        let raw: BTreeMap<EntityKind, Vec<String>> =
            serde_json::from_str(text).map_err(|e| AugmentError::BadPools(e.to_string()))?;
        Self::new(
            raw.into_iter()
                .map(|(k, names)| EntityPool::new(k, names))
                .collect::<Result<_, _>>()?,
        )
    }

    pub fn builtin() -> Self {
        Self::from_json(BUILTIN_POOLS).expect("bundled pools are valid")
    }

    pub fn get(&self, kind: EntityKind) -> Option<&EntityPool> {
        self.0.get(&kind)
    }
}

/// Relation id -> (subject kind, object kind).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct KindTable(BTreeMap<String, (EntityKind, EntityKind)>);

impl KindTable {
    pub fn new(entries: BTreeMap<String, (EntityKind, EntityKind)>) -> Self {
        Self(entries)
    }

    pub fn builtin() -> Self {
        use EntityKind::*;
        let pairs = [
            ("P54", People, Teams),
            ("P108", People, Companies),
            ("P286", Teams, People),
            ("P69", People, Schools),
            ("P488", Companies, People),
            ("P6", Countries, People),
            ("P35", Countries, People),
            ("P127", Companies, People),
            ("P26", People, People),
            ("P166", People, Awards),
            ("P937", People, Towns),
            ("P551", People, Towns),
        ];
        Self(pairs.iter().map(|(r, s, o)| (r.to_string(), (*s, *o))).collect())
    }

    pub fn get(&self, relation: &str) -> Option<(EntityKind, EntityKind)> {
        self.0.get(relation).copied()
    }

    /// The group with facts of unmapped relations removed; `None` when nothing is left.
    pub fn retain_mapped(&self, group: &FactGroup) -> Option<FactGroup> {
        let facts: Vec<TemporalFact> = group
            .facts()
            .iter()
            .filter(|f| self.0.contains_key(&f.relation.id))
            .cloned()
            .collect();
        FactGroup::new(group.subject().clone(), facts, group.horizon()).ok()
    }
}

/// Real entity id -> fictional entity.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct EntityMap(BTreeMap<String, EntityRef>);

impl EntityMap {
    pub fn get(&self, id: &str) -> Option<&EntityRef> {
        self.0.get(id)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&String, &EntityRef)> {
        self.0.iter()
    }

    fn entity(&self, e: &EntityRef) -> Result<EntityRef, AugmentError> {
        self.0
            .get(&e.id)
            .cloned()
            .ok_or_else(|| AugmentError::Unmapped(e.id.clone()))
    }

    pub fn map_fact(&self, f: &TemporalFact) -> Result<TemporalFact, AugmentError> {
        Ok(TemporalFact {
            subject: self.entity(&f.subject)?,
            relation: f.relation.clone(),
            object: self.entity(&f.object)?,
            interval: f.interval,
        })
    }

    /// Renames the subject and any reference event of `q`.
    pub fn map_query(&self, q: &Query) -> Result<Query, AugmentError> {
        let form = match &q.form {
            QueryForm::Before { reference } => QueryForm::Before {
                reference: self.map_fact(reference)?,
            },
            QueryForm::After { reference } => QueryForm::After {
                reference: self.map_fact(reference)?,
            },
            QueryForm::During { reference } => QueryForm::During {
                reference: self.map_fact(reference)?,
            },
            QueryForm::EventOffset {
                reference,
                delta,
                direction,
            } => QueryForm::EventOffset {
                reference: self.map_fact(reference)?,
                delta: *delta,
                direction: *direction,
            },
            other => other.clone(),
        };
        let subject = self
            .0
            .get(&q.subject)
            .map(|e| e.id.clone())
            .ok_or_else(|| AugmentError::Unmapped(q.subject.clone()))?;
        Ok(Query {
            subject,
            relation: q.relation.clone(),
            form,
        })
    }

    /// Fictional label for a real label, by way of the entity it names.
    pub fn map_label<'a>(&'a self, group: &FactGroup, label: &str) -> Option<&'a str> {
        let id = if group.subject().label == label {
            Some(&group.subject().id)
        } else {
            group.facts().iter().find(|f| f.object.label == label).map(|f| &f.object.id)
        }?;
        self.0.get(id).map(|e| e.label.as_str())
    }
}

/// Replaces every subject and object with a fictional name of the right kind.
/// The subject's kind comes from the group's representative relation.
pub fn anonymize_group(
    group: &FactGroup,
    pools: &EntityPools,
    kinds: &KindTable,
    master_seed: u64,
) -> Result<(FactGroup, EntityMap), AugmentError> {
    let kind_of = |relation: &str| kinds.get(relation).ok_or_else(|| AugmentError::UnmappedRelation(relation.to_string()));
    let subject_kind = kind_of(group.representative_relation())?.0;

    // entities in first-appearance order, each with its kind
    let mut order: Vec<(&EntityRef, EntityKind)> = vec![(group.subject(), subject_kind)];
    let mut seen: HashSet<&str> = HashSet::from([group.subject().id.as_str()]);
    for f in group.facts() {
        let (_, object_kind) = kind_of(&f.relation.id)?;
        if seen.insert(f.object.id.as_str()) {
            order.push((&f.object, object_kind));
        }
    }

    let mut needed: BTreeMap<EntityKind, usize> = BTreeMap::new();
    for (_, k) in &order {
        *needed.entry(*k).or_default() += 1;
    }
    let mut rng = seed::rng(master_seed, "anonymize", &group.subject().id);
    let mut draws: BTreeMap<EntityKind, std::vec::IntoIter<usize>> = BTreeMap::new();
    for (kind, count) in needed {
        let available = pools.get(kind).map_or(0, |p| p.names.len());
        if count > available {
            return Err(AugmentError::PoolExhausted {
                kind,
                needed: count,
                available,
            });
        }
        draws.insert(kind, index::sample(&mut rng, available, count).into_vec().into_iter());
    }

    let mut map = BTreeMap::new();
    for (entity, kind) in order {
        let i = draws.get_mut(&kind).and_then(|d| d.next()).expect("sampled enough names");
        let name = &pools.get(kind).expect("checked above").names[i];
        map.insert(entity.id.clone(), EntityRef::new(format!("{kind}_{i}"), name.clone()));
    }
    let map = EntityMap(map);
    let facts = group
        .facts()
        .iter()
        .map(|f| map.map_fact(f))
        .collect::<Result<Vec<_>, _>>()?;
    let subject = map.entity(group.subject())?;
    let anon = FactGroup::new(subject, facts, group.horizon())?;
    Ok((anon, map))
}
