use std::collections::HashMap;
use std::fs::{self, File};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::augment::{
    build_histogram, render_context, sample_pseudo_dataset, to_instruction_example, EntityPools, KindTable,
    PseudoConfig,
};
use crate::cli::config::{PipelineConfig, ScorerKind};
use crate::cli::stats::dataset_stats;
use crate::cli::{Cli, CliError, Command, Split};
use crate::facts::{apply_relation_ceiling, ingest_statements, split_groups, FactGroup};
use crate::metrics;
use crate::qgen::{self, builtin_templates, load_templates, FormKind, GenerationConfig, QAItem, QuestionTemplate};
use crate::refine::{
    load_articles, refine_context, ManifestSearch, RefinementConfig, RelevanceScorer, RemoteScorer, SearchProvider,
    TfIdfScorer,
};

fn open(path: &Path) -> Result<BufReader<File>, CliError> {
    File::open(path)
        .map(BufReader::new)
        .map_err(|e| CliError::Stage(format!("{}: {e}", path.display())))
}

fn create(path: &Path) -> Result<BufWriter<File>, CliError> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(|e| CliError::Stage(format!("{}: {e}", dir.display())))?;
    }
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| CliError::Stage(format!("{}: {e}", path.display())))
}

fn write_jsonl<T: Serialize>(path: &Path, rows: impl IntoIterator<Item = T>) -> Result<usize, CliError> {
    let mut out = create(path)?;
    let mut n = 0;
    for row in rows {
        serde_json::to_writer(&mut out, &row).map_err(CliError::stage)?;
        out.write_all(b"\n").map_err(CliError::stage)?;
        n += 1;
    }
    out.flush().map_err(CliError::stage)?;
    Ok(n)
}

fn read_jsonl<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>, CliError> {
    let mut out = Vec::new();
    for (i, line) in open(path)?.lines().enumerate() {
        let line = line.map_err(CliError::stage)?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(
            serde_json::from_str(&line)
                .map_err(|e| CliError::Stage(format!("{} line {}: {e}", path.display(), i + 1)))?,
        );
    }
    Ok(out)
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let mut out = create(path)?;
    serde_json::to_writer_pretty(&mut out, value).map_err(CliError::stage)?;
    out.write_all(b"\n").map_err(CliError::stage)?;
    out.flush().map_err(CliError::stage)
}

fn read_dataset(path: &Path) -> Result<Vec<QAItem>, CliError> {
    qgen::read_dataset(open(path)?).map_err(|e| CliError::Stage(format!("{}: {e}", path.display())))
}

fn require_file(what: &str, path: Option<&PathBuf>) -> Result<PathBuf, CliError> {
    let path = path.ok_or_else(|| CliError::Config(format!("no {what} path given")))?;
    if !path.is_file() {
        return Err(CliError::Config(format!("{what} {} does not exist", path.display())));
    }
    Ok(path.clone())
}

fn groups_path(out: &Path, split: &str) -> PathBuf {
    out.join("groups").join(format!("{split}.jsonl"))
}

fn dataset_path(out: &Path, split: &str) -> PathBuf {
    out.join("datasets").join(format!("{split}.jsonl"))
}

fn templates(cfg: &PipelineConfig) -> Result<Vec<QuestionTemplate>, CliError> {
    match &cfg.paths.templates {
        None => Ok(builtin_templates()),
        Some(p) => {
            let p = require_file("templates", Some(p))?;
            let text = fs::read_to_string(&p).map_err(CliError::stage)?;
            load_templates(&text).map_err(|e| CliError::Config(format!("{}: {e}", p.display())))
        }
    }
}

fn generation_config(cfg: &PipelineConfig, training: bool) -> GenerationConfig {
    GenerationConfig {
        quotas: FormKind::ALL.iter().map(|k| (*k, cfg.generate.quotas.get(*k))).collect(),
        seed: cfg.seed,
        cutoff: cfg.cutoff,
        training,
        min_group_facts: cfg.generate.min_group_facts,
        max_offset_months: cfg.generate.max_offset_months,
        attempts: cfg.generate.attempts,
    }
}

/// Folds command-line overrides into the config.
fn effective_config(cli: &Cli) -> Result<PipelineConfig, CliError> {
    let mut cfg = match &cli.config {
        Some(p) => PipelineConfig::load(p)?,
        None => PipelineConfig::default(),
    };
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    if let Some(w) = cli.workers {
        cfg.workers = w;
    }
    if let Some(o) = &cli.out {
        cfg.paths.out_dir = o.clone();
    }
    match &cli.command {
        Command::Ingest(a) => {
            set(&mut cfg.paths.statements, a.statements.clone());
            set(&mut cfg.ingest.snapshot_date, a.snapshot_date);
            if let Some(c) = a.ceiling {
                cfg.ingest.ceiling = c;
            }
            if let Some(n) = a.train_size {
                cfg.split.train = n;
            }
            if let Some(n) = a.dev_size {
                cfg.split.dev = n;
            }
            if let Some(n) = a.test_size {
                cfg.split.test = n;
            }
        }
        Command::Generate(a) => {
            set(&mut cfg.paths.templates, a.templates.clone());
            if let Some(c) = a.cutoff {
                cfg.cutoff = c;
            }
            let q = &mut cfg.generate.quotas;
            for (slot, v) in [
                (&mut q.point, a.quota_point),
                (&mut q.interval, a.quota_interval),
                (&mut q.offset, a.quota_offset),
                (&mut q.before, a.quota_before),
                (&mut q.after, a.quota_after),
                (&mut q.during, a.quota_during),
                (&mut q.event_offset, a.quota_event_offset),
            ] {
                if let Some(v) = v {
                    *slot = v;
                }
            }
        }
        Command::Augment(a) => {
            set(&mut cfg.paths.pools, a.pools.clone());
            set(&mut cfg.paths.templates, a.templates.clone());
            if let Some(n) = a.pseudo_size {
                cfg.augment.pseudo_size = n;
            }
            if let Some(f) = a.floor {
                cfg.augment.floor = f;
            }
            if let Some(r) = a.max_rounds {
                cfg.augment.max_rounds = r;
            }
        }
        Command::Refine(a) => {
            if let Some(k) = a.k {
                cfg.refine.k = k;
            }
            if let Some(s) = a.scorer {
                cfg.refine.scorer = s;
            }
            set(&mut cfg.refine.endpoint, a.endpoint.clone());
            set(&mut cfg.paths.corpus_manifest, a.manifest.clone());
        }
        Command::Evaluate(a) => {
            if let Some(c) = a.cutoff {
                cfg.cutoff = c;
            }
        }
        Command::Stats(a) => {
            if let Some(c) = a.cutoff {
                cfg.cutoff = c;
            }
        }
    }
    cfg.validate()?;
    Ok(cfg)
}

fn set<T>(slot: &mut Option<T>, value: Option<T>) {
    if value.is_some() {
        *slot = value;
    }
}

pub(crate) fn execute(cli: Cli) -> Result<String, CliError> {
    let cfg = effective_config(&cli)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.workers)
        .build()
        .map_err(|e| CliError::Config(format!("worker pool: {e}")))?;
    let started = Instant::now();
    let summary = pool.install(|| match &cli.command {
        Command::Ingest(_) => ingest(&cfg),
        Command::Generate(a) => generate(&cfg, a.split),
        Command::Augment(_) => augment(&cfg),
        Command::Refine(a) => refine(&cfg, a.dataset.as_deref()),
        Command::Evaluate(a) => evaluate(&cfg, &a.predictions, a.dataset.as_deref()),
        Command::Stats(a) => stats(&cfg, &a.dataset, a.output.as_deref()),
    })?;
    if matches!(cli.command, Command::Stats(_)) {
        return Ok(summary);
    }
    let out = &cfg.paths.out_dir;
    fs::create_dir_all(out).map_err(CliError::stage)?;
    fs::write(out.join("config.effective.toml"), cfg.to_toml()).map_err(CliError::stage)?;
    Ok(format!("{summary} ({:.2}s)", started.elapsed().as_secs_f64()))
}

fn ingest(cfg: &PipelineConfig) -> Result<String, CliError> {
    let statements = require_file("statements", cfg.paths.statements.as_ref())?;
    let snapshot = cfg
        .ingest
        .snapshot_date
        .ok_or_else(|| CliError::Config("ingest needs a snapshot date".into()))?;
    let kb = ingest_statements(open(&statements)?, snapshot).map_err(|e| CliError::Stage(format!("{}: {e}", statements.display())))?;
    let n_facts = kb.fact_count();
    let n_groups = kb.groups.len();
    let capped = apply_relation_ceiling(kb.groups, cfg.ingest.ceiling, cfg.seed);
    let n_capped = capped.len();
    let splits = split_groups(capped, cfg.split, cfg.seed).map_err(CliError::stage)?;
    let out = &cfg.paths.out_dir;
    for (name, groups) in [("train", &splits.train), ("dev", &splits.dev), ("test", &splits.test)] {
        write_jsonl(&groups_path(out, name), groups.iter())?;
    }
    Ok(format!(
        "ingest: {n_facts} facts in {n_groups} groups ({} undated statements skipped, {n_capped} groups after the ceiling) -> train {} / dev {} / test {} groups",
        kb.skipped,
        splits.train.len(),
        splits.dev.len(),
        splits.test.len()
    ))
}

fn read_groups(out: &Path, split: &str) -> Result<Vec<FactGroup>, CliError> {
    let path = groups_path(out, split);
    if !path.is_file() {
        return Err(CliError::Config(format!("{} does not exist; run ingest first", path.display())));
    }
    read_jsonl(&path)
}

fn generate(cfg: &PipelineConfig, split: Split) -> Result<String, CliError> {
    let out = &cfg.paths.out_dir;
    let groups = read_groups(out, split.name())?;
    let templates = templates(cfg)?;
    let gen_cfg = generation_config(cfg, split == Split::Train);
    let items = qgen::generate_dataset(&groups, &templates, &gen_cfg).map_err(CliError::stage)?;
    let path = dataset_path(out, split.name());
    let mut w = create(&path)?;
    qgen::write_dataset(&items, &mut w).map_err(CliError::stage)?;
    Ok(format!(
        "generate: {} {} items from {} groups -> {}",
        items.len(),
        split.name(),
        groups.len(),
        path.display()
    ))
}

fn augment(cfg: &PipelineConfig) -> Result<String, CliError> {
    let out = &cfg.paths.out_dir;
    let train_items_path = dataset_path(out, "train");
    let train_items = read_dataset(&require_file("training dataset", Some(&train_items_path))?)?;
    let groups = read_groups(out, "train")?;
    let hist = build_histogram(&train_items, cfg.augment.floor).map_err(CliError::stage)?;
    let pools = match &cfg.paths.pools {
        None => EntityPools::builtin(),
        Some(p) => {
            let p = require_file("pools", Some(p))?;
            EntityPools::from_json(&fs::read_to_string(&p).map_err(CliError::stage)?)
                .map_err(|e| CliError::Config(format!("{}: {e}", p.display())))?
        }
    };
    let kinds = KindTable::builtin();
    let templates = templates(cfg)?;
    let pcfg = PseudoConfig {
        target_size: cfg.augment.pseudo_size,
        max_rounds: cfg.augment.max_rounds,
        seed: cfg.seed,
        generation: generation_config(cfg, false),
    };
    let data = sample_pseudo_dataset(&groups, &hist, &pcfg, &templates, &pools, &kinds).map_err(CliError::stage)?;

    let dir = out.join("pseudo");
    write_json(&dir.join("histogram.json"), &hist)?;
    write_jsonl(&dir.join("pseudo.jsonl"), data.items.iter())?;
    write_jsonl(&dir.join("entity_maps.jsonl"), data.maps.iter())?;

    let sources: HashMap<&str, &FactGroup> = groups.iter().map(|g| (g.subject().id.as_str(), g)).collect();
    let mut contexts: HashMap<&str, Vec<String>> = HashMap::new();
    for rec in &data.maps {
        let source = sources
            .get(rec.source_subject.as_str())
            .ok_or_else(|| CliError::Stage(format!("entity map {} names an unknown group", rec.id)))?;
        let group = rec.rebuild(source, &kinds).map_err(CliError::stage)?;
        contexts.insert(rec.id.as_str(), render_context(&group));
    }
    let examples = data
        .items
        .iter()
        .map(|p| to_instruction_example(&p.item, &contexts[p.entity_map_id.as_str()]));
    write_jsonl(&dir.join("instructions.jsonl"), examples)?;
    Ok(format!(
        "augment: kept {} of {} candidates over {} rounds from {} training groups -> {}",
        data.items.len(),
        data.candidates,
        data.rounds,
        groups.len(),
        dir.display()
    ))
}

#[derive(Serialize)]
struct RefinedParagraph<'a> {
    source: &'a str,
    ordinal: usize,
    score: f64,
    text: &'a str,
}

#[derive(Serialize)]
struct RefinedContext<'a> {
    id: &'a str,
    question: &'a str,
    paragraphs: Vec<RefinedParagraph<'a>>,
}

fn refine(cfg: &PipelineConfig, dataset: Option<&Path>) -> Result<String, CliError> {
    let manifest = require_file("corpus manifest", cfg.paths.corpus_manifest.as_ref())?;
    let dataset = dataset.map_or_else(|| dataset_path(&cfg.paths.out_dir, "test"), Path::to_path_buf);
    let items = read_dataset(&require_file("dataset", Some(&dataset))?)?;
    let search = ManifestSearch::load(&manifest).map_err(|e| CliError::Config(e.to_string()))?;
    let scorer: Box<dyn RelevanceScorer> = match cfg.refine.scorer {
        ScorerKind::Builtin => Box::new(TfIdfScorer),
        ScorerKind::Remote => Box::new(
            cfg.refine
                .endpoint
                .as_deref()
                .map(RemoteScorer::new)
                .ok_or_else(|| CliError::Config("remote scorer selected but no endpoint given".into()))?,
        ),
    };
    let rcfg = RefinementConfig::new(cfg.refine.k).map_err(|e| CliError::Config(e.to_string()))?;
    let listed: std::collections::HashSet<&str> = search.questions().collect();
    let mut results = Vec::new();
    for item in items.iter().filter(|i| listed.contains(i.id.as_str())) {
        let refs = search
            .search(&item.id, cfg.refine.articles_per_question)
            .map_err(CliError::stage)?;
        let articles = load_articles(&refs).map_err(CliError::stage)?;
        let top = refine_context(&item.question, &articles, rcfg, scorer.as_ref())
            .map_err(|e| CliError::Stage(format!("{}: {e}", item.id)))?;
        results.push((item, top));
    }
    let path = cfg.paths.out_dir.join("refined").join("contexts.jsonl");
    let n = write_jsonl(
        &path,
        results.iter().map(|(item, top)| RefinedContext {
            id: &item.id,
            question: &item.question,
            paragraphs: top
                .iter()
                .map(|s| RefinedParagraph {
                    source: &s.paragraph.id.source,
                    ordinal: s.paragraph.id.ordinal,
                    score: s.score,
                    text: &s.paragraph.text,
                })
                .collect(),
        }),
    )?;
    Ok(format!(
        "refine: {n} of {} questions refined to at most {} paragraphs -> {}",
        items.len(),
        rcfg.k,
        path.display()
    ))
}

fn evaluate(cfg: &PipelineConfig, predictions: &Path, dataset: Option<&Path>) -> Result<String, CliError> {
    let predictions = require_file("predictions", Some(&predictions.to_path_buf()))?;
    let dataset = dataset.map_or_else(|| dataset_path(&cfg.paths.out_dir, "test"), Path::to_path_buf);
    let items = read_dataset(&require_file("dataset", Some(&dataset))?)?;
    let preds = metrics::read_predictions(open(&predictions)?).map_err(CliError::stage)?;
    let evals = metrics::evaluate(&items, &preds).map_err(CliError::stage)?;
    let report = metrics::aggregate(&evals, &items, cfg.cutoff).map_err(CliError::stage)?;
    let dir = cfg.paths.out_dir.join("eval");
    write_jsonl(&dir.join("items.jsonl"), evals.iter())?;
    write_json(&dir.join("report.json"), &report)?;
    let mut csv = create(&dir.join("report.csv"))?;
    report.write_csv(&mut csv).map_err(CliError::stage)?;
    csv.flush().map_err(CliError::stage)?;
    let overall = report.slice("overall", "all").expect("overall slice");
    let f = |x: Option<f64>| x.unwrap_or(0.0);
    Ok(format!(
        "evaluate: {} items, set_acc {:.4} ans_f1 {:.4} em {:.4} tok_f1 {:.4} -> {}",
        report.n,
        f(overall.set_acc),
        f(overall.ans_f1),
        f(overall.em),
        f(overall.tok_f1),
        dir.display()
    ))
}

fn stats(cfg: &PipelineConfig, dataset: &Path, output: Option<&Path>) -> Result<String, CliError> {
    let items = read_dataset(&require_file("dataset", Some(&dataset.to_path_buf()))?)?;
    let s = dataset_stats(&items, cfg.cutoff);
    let text = serde_json::to_string_pretty(&s).map_err(CliError::stage)?;
    if let Some(p) = output {
        write_json(p, &s)?;
    }
    eprintln!(
        "stats: {} items, {:.1}% multi-answer, {} on or after {}",
        s.n_items,
        s.multi_answer_pct,
        s.post_cutoff,
        s.cutoff.to_iso()
    );
    Ok(text)
}
