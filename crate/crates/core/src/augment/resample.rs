//! Time-bucket histogram and keep probabilities for resampling.

use serde::{Deserialize, Serialize};

use crate::augment::AugmentError;
use crate::qgen::QAItem;
use crate::temporal::TimePoint;

pub const N_BUCKETS: usize = 7;

/// Years from which items count as "future" and are always kept.
pub const FUTURE_FROM_YEAR: i32 = 2020;

/// Bucket of a reference time: 0 for anything before 1900, then 20-year
/// buckets up to 2019; `None` from 2020 on.
pub fn bucket_of(t: &TimePoint) -> Option<usize> {
    let y = t.year_value();
    if y >= FUTURE_FROM_YEAR {
        None
    } else if y < 1900 {
        Some(0)
    } else {
        Some(1 + ((y - 1900) / 20) as usize)
    }
}

pub fn bucket_label(i: usize) -> String {
    if i == 0 {
        "<1900".to_string()
    } else {
        let lo = 1900 + 20 * (i as i32 - 1);
        format!("{lo}-{}", lo + 19)
    }
}

/// `P_i = (max - n_i) / max`, computed from integer differences so the
/// results are the exactly rounded quotients.
pub fn compute_resampling_probs(counts: &[u64]) -> Result<Vec<f64>, AugmentError> {
    let max = counts.iter().copied().max().unwrap_or(0);
    if max == 0 {
        return Err(AugmentError::AllZeroCounts);
    }
    Ok(counts.iter().map(|&n| (max - n) as f64 / max as f64).collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResamplingHistogram {
    pub counts: [u64; N_BUCKETS],
    pub probs: [f64; N_BUCKETS],
    /// Lower bound applied to in-range keep probabilities; 0 keeps the raw values.
    pub floor: f64,
    pub future_prob: f64,
}

impl ResamplingHistogram {
    pub fn from_counts(counts: [u64; N_BUCKETS], floor: f64) -> Result<Self, AugmentError> {
        if !(0.0..=1.0).contains(&floor) {
            return Err(AugmentError::BadFloor(floor));
        }
        let p = compute_resampling_probs(&counts)?;
        let mut probs = [0.0; N_BUCKETS];
        probs.copy_from_slice(&p);
        Ok(Self {
            counts,
            probs,
            floor,
            future_prob: 1.0,
        })
    }

    pub fn keep_probability(&self, t: &TimePoint) -> f64 {
        match bucket_of(t) {
            Some(b) => self.probs[b].max(self.floor),
            None => self.future_prob,
        }
    }
}

/// Counts training items per bucket. Items from 2020 on violate the training
/// cutoff and are rejected.
pub fn build_histogram(items: &[QAItem], floor: f64) -> Result<ResamplingHistogram, AugmentError> {
    let mut counts = [0u64; N_BUCKETS];
    for item in items {
        match bucket_of(&item.reference_time) {
            Some(b) => counts[b] += 1,
            None => {
                return Err(AugmentError::FutureTrainingItem {
                    id: item.id.clone(),
                    time: item.reference_time.to_iso(),
                })
            }
        }
    }
    ResamplingHistogram::from_counts(counts, floor)
}
