use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::qgen::QAItem;
use crate::temporal::TimePoint;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetStats {
    pub n_items: usize,
    /// Item counts keyed "L2 1-hop", "L2 M-hop", "L3 1-hop", "L3 M-hop".
    pub per_level_hops: BTreeMap<String, usize>,
    pub multi_answer_pct: f64,
    pub avg_answers: f64,
    pub min_year: Option<i32>,
    pub max_year: Option<i32>,
    pub cutoff: TimePoint,
    /// Items whose reference time is on or after the cutoff.
    pub post_cutoff: usize,
}

pub fn dataset_stats(items: &[QAItem], cutoff: TimePoint) -> DatasetStats {
    let mut per_level_hops: BTreeMap<String, usize> = ["L2 1-hop", "L2 M-hop", "L3 1-hop", "L3 M-hop"]
        .iter()
        .map(|k| (k.to_string(), 0))
        .collect();
    for i in items {
        *per_level_hops.entry(format!("{} {}", i.level, i.hops)).or_default() += 1;
    }
    let n = items.len();
    let ratio = |x: usize| if n == 0 { 0.0 } else { x as f64 / n as f64 };
    let multi = items.iter().filter(|i| i.n_answers >= 2).count();
    let answers: usize = items.iter().map(|i| i.n_answers).sum();
    DatasetStats {
        n_items: n,
        per_level_hops,
        multi_answer_pct: ratio(100 * multi),
        avg_answers: ratio(answers),
        min_year: items.iter().map(|i| i.reference_time.year_value()).min(),
        max_year: items.iter().map(|i| i.reference_time.year_value()).max(),
        cutoff,
        post_cutoff: items
            .iter()
            .filter(|i| i.reference_time.first_month() >= cutoff.first_month())
            .count(),
    }
}
