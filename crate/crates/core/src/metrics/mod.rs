//! Multi-answer scoring: set accuracy, answer F1, exact match and token F1,
//! plus per-slice aggregation.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::io::{self, BufRead, Write};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::qgen::QAItem;
use crate::temporal::TimePoint;

#[derive(Debug, Error)]
pub enum MetricsError {
    #[error("gold answer set is empty")]
    EmptyGold,
    #[error("no items to aggregate")]
    NoItems,
    #[error("item {0} has no metadata")]
    MissingMetadata(String),
    #[error("prediction for unknown item {0}")]
    UnknownId(String),
    #[error("more than one prediction for item {0}")]
    DuplicatePrediction(String),
    #[error("predictions line {line}: {message}")]
    BadRecord { line: usize, message: String },
    #[error(transparent)]
    Io(#[from] io::Error),
}

/// Lowercase, drop ASCII punctuation and the articles a/an/the, collapse whitespace.
pub fn normalize_answer(s: &str) -> String {
    let lowered: String = s.to_lowercase().chars().filter(|c| !c.is_ascii_punctuation()).collect();
    lowered
        .split_whitespace()
        .filter(|w| !matches!(*w, "a" | "an" | "the"))
        .collect::<Vec<_>>()
        .join(" ")
}

/// Splits a prediction on the standalone word "and", dropping empty pieces and
/// pieces that normalize to an earlier one.
pub fn parse_prediction(raw: &str) -> Vec<String> {
    let mut out = Vec::new();
    let mut seen = HashSet::new();
    for piece in raw.split_whitespace().collect::<Vec<_>>().split(|w| *w == "and") {
        let piece = piece.join(" ");
        if !piece.is_empty() && seen.insert(normalize_answer(&piece)) {
            out.push(piece);
        }
    }
    out
}

fn normalized_set<S: AsRef<str>>(xs: &[S]) -> HashSet<String> {
    xs.iter().map(|x| normalize_answer(x.as_ref())).collect()
}

fn gold_set<S: AsRef<str>>(gold: &[S]) -> Result<HashSet<String>, MetricsError> {
    if gold.is_empty() {
        return Err(MetricsError::EmptyGold);
    }
    Ok(normalized_set(gold))
}

pub fn set_accuracy<P: AsRef<str>, G: AsRef<str>>(pred: &[P], gold: &[G]) -> Result<f64, MetricsError> {
    let g = gold_set(gold)?;
    Ok(if !pred.is_empty() && normalized_set(pred) == g { 1.0 } else { 0.0 })
}

pub fn answer_f1<P: AsRef<str>, G: AsRef<str>>(pred: &[P], gold: &[G]) -> Result<f64, MetricsError> {
    let g = gold_set(gold)?;
    let p = normalized_set(pred);
    let tp = p.intersection(&g).count();
    if tp == 0 {
        return Ok(0.0);
    }
    let precision = tp as f64 / p.len() as f64;
    let recall = tp as f64 / g.len() as f64;
    Ok(2.0 * precision * recall / (precision + recall))
}

pub fn exact_match<P: AsRef<str>, G: AsRef<str>>(pred: &[P], gold: &[G]) -> Result<f64, MetricsError> {
    let g = gold_set(gold)?;
    Ok(if normalized_set(pred).iter().any(|p| g.contains(p)) { 1.0 } else { 0.0 })
}

fn pair_token_f1(pred: &str, gold: &str) -> f64 {
    let p: Vec<&str> = pred.split_whitespace().collect();
    let g: Vec<&str> = gold.split_whitespace().collect();
    if p.is_empty() || g.is_empty() {
        return if p == g { 1.0 } else { 0.0 };
    }
    let mut counts: HashMap<&str, i64> = HashMap::new();
    for t in &g {
        *counts.entry(t).or_default() += 1;
    }
    let mut common = 0;
    for t in &p {
        if let Some(c) = counts.get_mut(t) {
            if *c > 0 {
                *c -= 1;
                common += 1;
            }
        }
    }
    if common == 0 {
        return 0.0;
    }
    let precision = common as f64 / p.len() as f64;
    let recall = common as f64 / g.len() as f64;
    2.0 * precision * recall / (precision + recall)
}

/// Best token-overlap F1 over all (predicted, gold) answer pairs.
pub fn token_f1<P: AsRef<str>, G: AsRef<str>>(pred: &[P], gold: &[G]) -> Result<f64, MetricsError> {
    let g = gold_set(gold)?;
    Ok(normalized_set(pred)
        .iter()
        .flat_map(|p| g.iter().map(move |x| pair_token_f1(p, x)))
        .fold(0.0, f64::max))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Scores {
    pub set_acc: f64,
    pub ans_f1: f64,
    pub em: f64,
    pub tok_f1: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalItem {
    pub id: String,
    pub gold: Vec<String>,
    pub pred_answers: Vec<String>,
    pub scores: Scores,
}

pub fn score_item(id: &str, raw_prediction: &str, gold: &[String]) -> Result<EvalItem, MetricsError> {
    let pred = parse_prediction(raw_prediction);
    let scores = Scores {
        set_acc: set_accuracy(&pred, gold)?,
        ans_f1: answer_f1(&pred, gold)?,
        em: exact_match(&pred, gold)?,
        tok_f1: token_f1(&pred, gold)?,
    };
    Ok(EvalItem {
        id: id.to_string(),
        gold: gold.to_vec(),
        pred_answers: pred,
        scores,
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Prediction {
    pub id: String,
    pub prediction: String,
}

pub fn read_predictions<R: BufRead>(src: R) -> Result<Vec<Prediction>, MetricsError> {
    let mut out = Vec::new();
    for (i, line) in src.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(serde_json::from_str(&line).map_err(|e| MetricsError::BadRecord {
            line: i + 1,
            message: e.to_string(),
        })?);
    }
    Ok(out)
}

/// Scores every dataset item; an item without a prediction scores as an
/// empty prediction.
pub fn evaluate(items: &[QAItem], predictions: &[Prediction]) -> Result<Vec<EvalItem>, MetricsError> {
    let known: HashSet<&str> = items.iter().map(|i| i.id.as_str()).collect();
    let mut by_id: HashMap<&str, &str> = HashMap::new();
    for p in predictions {
        if !known.contains(p.id.as_str()) {
            return Err(MetricsError::UnknownId(p.id.clone()));
        }
        if by_id.insert(&p.id, &p.prediction).is_some() {
            return Err(MetricsError::DuplicatePrediction(p.id.clone()));
        }
    }
    items
        .iter()
        .map(|i| score_item(&i.id, by_id.get(i.id.as_str()).copied().unwrap_or(""), &i.answers))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SliceReport {
    pub partition: String,
    pub slice: String,
    pub n: usize,
    /// Means; `None` for an empty slice.
    pub set_acc: Option<f64>,
    pub ans_f1: Option<f64>,
    pub em: Option<f64>,
    pub tok_f1: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub n: usize,
    pub cutoff: TimePoint,
    pub note: String,
    pub slices: Vec<SliceReport>,
}

pub const REPORT_NOTE: &str =
    "predictions are split on the word \"and\"; EM and token F1 take the best (predicted, gold) answer pair";

/// Mean that does not depend on the order of `xs`.
fn stable_mean(mut xs: Vec<f64>) -> Option<f64> {
    if xs.is_empty() {
        return None;
    }
    xs.sort_by(f64::total_cmp);
    Some(xs.iter().sum::<f64>() / xs.len() as f64)
}

fn slice_report(partition: &str, slice: &str, members: &[&EvalItem]) -> SliceReport {
    let mean = |f: fn(&Scores) -> f64| stable_mean(members.iter().map(|e| f(&e.scores)).collect());
    SliceReport {
        partition: partition.into(),
        slice: slice.into(),
        n: members.len(),
        set_acc: mean(|s| s.set_acc),
        ans_f1: mean(|s| s.ans_f1),
        em: mean(|s| s.em),
        tok_f1: mean(|s| s.tok_f1),
    }
}

pub fn aggregate(items: &[EvalItem], metadata: &[QAItem], cutoff: TimePoint) -> Result<Report, MetricsError> {
    if items.is_empty() {
        return Err(MetricsError::NoItems);
    }
    let meta: HashMap<&str, &QAItem> = metadata.iter().map(|m| (m.id.as_str(), m)).collect();
    let mut partitions: BTreeMap<(usize, String, String), Vec<&EvalItem>> = BTreeMap::new();
    let keys: [(usize, &str, &[&str]); 3] = [
        (1, "level_hops", &["L2 1-hop", "L2 M-hop", "L3 1-hop", "L3 M-hop"]),
        (2, "answers", &["single", "multi"]),
        (3, "period", &["in-domain", "future"]),
    ];
    for (order, partition, slices) in keys {
        for s in slices {
            partitions.insert((order, partition.into(), s.to_string()), Vec::new());
        }
    }
    for e in items {
        let m = meta.get(e.id.as_str()).ok_or_else(|| MetricsError::MissingMetadata(e.id.clone()))?;
        let lh = format!("{} {}", m.level, m.hops);
        let answers = if m.n_answers >= 2 { "multi" } else { "single" };
        let period = if m.reference_time.first_month() < cutoff.first_month() {
            "in-domain"
        } else {
            "future"
        };
        for (order, partition, slice) in [(1, "level_hops", lh.as_str()), (2, "answers", answers), (3, "period", period)] {
            partitions
                .get_mut(&(order, partition.to_string(), slice.to_string()))
                .expect("known slice")
                .push(e);
        }
    }
    let all: Vec<&EvalItem> = items.iter().collect();
    let mut slices = vec![slice_report("overall", "all", &all)];
    slices.extend(partitions.iter().map(|((_, p, s), members)| slice_report(p, s, members)));
    Ok(Report {
        n: items.len(),
        cutoff,
        note: REPORT_NOTE.to_string(),
        slices,
    })
}

impl Report {
    pub fn slice(&self, partition: &str, slice: &str) -> Option<&SliceReport> {
        self.slices.iter().find(|s| s.partition == partition && s.slice == slice)
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "partition,slice,n,set_acc,ans_f1,em,tok_f1")?;
        let cell = |v: Option<f64>| v.map(|x| format!("{x:.6}")).unwrap_or_default();
        for s in &self.slices {
            writeln!(
                out,
                "{},{},{},{},{},{},{}",
                s.partition,
                s.slice,
                s.n,
                cell(s.set_acc),
                cell(s.ans_f1),
                cell(s.em),
                cell(s.tok_f1)
            )?;
        }
        Ok(())
    }
}
