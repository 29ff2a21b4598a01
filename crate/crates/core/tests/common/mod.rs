#![allow(dead_code)]

use std::fs;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::json;

const RELATIONS: [(&str, &str, &str); 5] = [
    ("P108", "employer", "Company"),
    ("P69", "educated at", "School"),
    ("P54", "member of sports team", "Team"),
    ("P551", "residence", "Town"),
    ("P39", "position held", "Office"),
];

/// Writes a synthetic statements file with `subjects` people and returns the
/// number of statements written. A few records carry no dates at all.
pub fn write_statements(path: &Path, subjects: usize, seed: u64) -> usize {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut lines = Vec::new();
    for s in 0..subjects {
        let n_rel = rng.random_range(1..=3);
        let first = rng.random_range(0..RELATIONS.len());
        for r in 0..n_rel {
            let (rid, rlabel, obj) = RELATIONS[(first + r) % RELATIONS.len()];
            let mut year = rng.random_range(1850..2015);
            for _ in 0..rng.random_range(2..=4) {
                let o = rng.random_range(0..60);
                let start = format!("{year}-{:02}", rng.random_range(1..=12));
                let len = rng.random_range(1..15);
                let end_year = year + len;
                let end = if end_year > 2023 || rng.random_bool(0.05) {
                    None
                } else if rng.random_bool(0.2) {
                    Some(format!("{end_year}"))
                } else {
                    Some(format!("{end_year}-{:02}", rng.random_range(1..=12)))
                };
                let mut rec = json!({
                    "subject_id": format!("q{s}"),
                    "subject_label": format!("Person {s}"),
                    "relation_id": rid,
                    "relation_label": rlabel,
                    "object_id": format!("{}{o}", obj.to_lowercase()),
                    "object_label": format!("{obj} {o}"),
                    "start": start,
                });
                if let Some(e) = end {
                    rec["end"] = json!(e);
                }
                lines.push(rec.to_string());
                year = (end_year + rng.random_range(-2..4)).clamp(1850, 2022);
            }
        }
        if s % 17 == 0 {
            lines.push(
                json!({
                    "subject_id": format!("q{s}"),
                    "subject_label": format!("Person {s}"),
                    "relation_id": "P26",
                    "relation_label": "spouse",
                    "object_id": format!("spouse{s}"),
                    "object_label": format!("Spouse {s}"),
                })
                .to_string(),
            );
        }
    }
    fs::write(path, lines.join("\n") + "\n").unwrap();
    lines.len()
}

pub fn pipeline_toml(train: usize, dev: usize, test: usize, pseudo: usize) -> String {
    format!(
        r#"seed = 11
cutoff = "2020-01"
workers = 4

[paths]
statements = "statements.jsonl"
out_dir = "out"

[ingest]
snapshot_date = "2023-10"
ceiling = 250

[split]
train = {train}
dev = {dev}
test = {test}

[augment]
pseudo_size = {pseudo}
"#
    )
}
