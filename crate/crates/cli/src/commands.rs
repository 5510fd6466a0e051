//! One function per subcommand. Results go to `out`; progress notes go to
//! stderr.

use std::io::Write;
use std::path::Path;
use std::time::Instant;

use serde_json::json;
use websem_core::corpus::{
    compute_tfidf_stats, generate_synthetic_corpus, save_corpus, Corpus, Document, Split,
};
use websem_core::eval::{
    distance_correlation_study, eval_concept_ap, eval_p5_suite, eval_tag_query_map,
    fixed_queries, parse_queries, synthetic_queries, EvalReport, QuerySpec,
};
use websem_core::retrieval::{build_index, parse_query, save_index};
use websem_core::text::{load_embedder, save_embedder, train_text};
use websem_core::visual::{load_visual, save_visual, train_visual, write_loss_curve};
use websem_core::{Error, Result};

use crate::config::EngineConfig;
use crate::engine::{load_stats, working_corpus, Engine};

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Protocol {
    /// P@k over the configured query list.
    P5,
    /// MAP of retrieval by the tags of held-out documents.
    Tagmap,
    /// AP per ground-truth concept.
    Conceptap,
    /// Correlation of text and image distances over random pairs.
    Corr,
}

impl Protocol {
    pub fn name(self) -> &'static str {
        match self {
            Protocol::P5 => "p5",
            Protocol::Tagmap => "tagmap",
            Protocol::Conceptap => "conceptap",
            Protocol::Corr => "corr",
        }
    }
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> Error + '_ {
    move |e| Error::io(path, e)
}

fn stdout_err(e: std::io::Error) -> Error {
    Error::io("<stdout>", e)
}

pub fn gen_synthetic(cfg: &EngineConfig, out: &mut impl Write) -> Result<()> {
    let corpus = generate_synthetic_corpus(&cfg.synthetic)?;
    save_corpus(&corpus, &cfg.paths.corpus)?;
    writeln!(
        out,
        "wrote {} documents to {}",
        corpus.len(),
        cfg.paths.corpus.display()
    )
    .map_err(stdout_err)
}

pub fn train_text_cmd(cfg: &EngineConfig, out: &mut impl Write) -> Result<()> {
    let corpus = working_corpus(cfg)?;
    let start = Instant::now();
    let outcome = train_text(&corpus, &cfg.text)?;
    let secs = start.elapsed().as_secs_f64();
    let e = &outcome.embedder;
    save_embedder(e, &cfg.paths.text_model)?;
    compute_tfidf_stats(&corpus, e.vocab()).save_json(&cfg.paths.tfidf)?;
    for w in &outcome.warnings {
        eprintln!("warning: {w}");
    }
    writeln!(
        out,
        "method {} vocabulary {} dim {} epochs {} time {:.2}s",
        e.method(),
        e.vocab().len(),
        e.dim(),
        cfg.text.epochs(),
        secs
    )
    .map_err(stdout_err)
}

pub fn train_visual_cmd(cfg: &EngineConfig, out: &mut impl Write) -> Result<()> {
    let corpus = working_corpus(cfg)?;
    let text = load_embedder(&cfg.paths.text_model)?;
    let stats = load_stats(cfg)?;
    let start = Instant::now();
    let outcome = train_visual(&corpus, &text, cfg.aggregation, stats.as_ref(), &cfg.visual)?;
    let secs = start.elapsed().as_secs_f64();
    save_visual(&outcome.embedder, &cfg.paths.visual_model)?;
    let path = &cfg.paths.loss_curve;
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir).map_err(io_err(dir))?;
    }
    let mut f = std::fs::File::create(path).map_err(io_err(path))?;
    write_loss_curve(&outcome.loss_curve, &mut f).map_err(io_err(path))?;
    if !outcome.skipped.is_empty() {
        eprintln!(
            "skipped {} documents with un-embeddable text",
            outcome.skipped.len()
        );
    }
    writeln!(
        out,
        "iterations {} loss {:.6} -> {:.6} time {:.2}s",
        cfg.visual.max_iters, outcome.initial_loss, outcome.final_loss, secs
    )
    .map_err(stdout_err)
}

fn test_docs(corpus: &Corpus) -> Result<Vec<&Document>> {
    let docs: Vec<&Document> = corpus.split(Split::Test).collect();
    if docs.is_empty() {
        return Err(Error::Protocol("corpus has no test documents".into()));
    }
    let missing: Vec<String> = docs
        .iter()
        .filter(|d| d.features.is_none())
        .map(|d| d.id.clone())
        .collect();
    if !missing.is_empty() {
        return Err(Error::MissingFeatures(missing));
    }
    Ok(docs)
}

pub fn build_index_cmd(cfg: &EngineConfig, out: &mut impl Write) -> Result<()> {
    let corpus = working_corpus(cfg)?;
    let visual = load_visual(&cfg.paths.visual_model)?;
    let docs = test_docs(&corpus)?;
    let mut items = Vec::with_capacity(docs.len());
    for d in docs {
        items.push((d.id.clone(), visual.forward(d.features.as_ref().unwrap())?));
    }
    let index = build_index(items)?;
    save_index(&index, &cfg.paths.index)?;
    writeln!(out, "indexed {} items of dim {}", index.len(), index.dim()).map_err(stdout_err)
}

/// Prints `id score` per line, best first.
pub fn query_cmd(cfg: &EngineConfig, query: &str, k: usize, out: &mut impl Write) -> Result<()> {
    let terms = parse_query(query)?;
    let engine = Engine::load(cfg)?;
    let outcome = engine.query(&terms, k)?;
    if !outcome.dropped.is_empty() {
        eprintln!("dropped: {}", outcome.dropped.join(" "));
    }
    for hit in &outcome.results {
        writeln!(out, "{} {}", hit.id, hit.score).map_err(stdout_err)?;
    }
    Ok(())
}

pub fn eval_queries(cfg: &EngineConfig) -> Result<Vec<QuerySpec>> {
    match cfg.eval.queries.as_str() {
        "fixed" => Ok(fixed_queries()),
        "synthetic" => Ok(synthetic_queries(cfg.synthetic.n_concepts)),
        path => {
            let text = std::fs::read_to_string(path).map_err(io_err(Path::new(path)))?;
            parse_queries(&text)
        }
    }
}

/// Runs a protocol and writes `<reports>/<protocol>.json` and `.csv`; the
/// correlation study also writes `corr_pairs.csv`.
pub fn eval_cmd(cfg: &EngineConfig, protocol: Protocol, out: &mut impl Write) -> Result<EvalReport> {
    let report = match protocol {
        Protocol::Corr => corr(cfg)?,
        _ => {
            let engine = Engine::load(cfg)?;
            let corpus = &engine.corpus;
            let ctx = engine.context();
            match protocol {
                Protocol::P5 => eval_p5_suite(corpus, &ctx, &eval_queries(cfg)?, cfg.eval.k)?,
                Protocol::Tagmap => eval_tag_query_map(corpus, &ctx, cfg.tag_query_split())?,
                Protocol::Conceptap => {
                    let concepts = if cfg.eval.concepts.is_empty() {
                        indexed_labels(corpus, &engine)
                    } else {
                        cfg.eval.concepts.clone()
                    };
                    eval_concept_ap(corpus, &ctx, &concepts)?
                }
                Protocol::Corr => unreachable!(),
            }
        }
    };
    report.save(&cfg.paths.reports, protocol.name())?;
    for (k, v) in &report.aggregates {
        writeln!(out, "{k} {v}").map_err(stdout_err)?;
    }
    Ok(report)
}

fn indexed_labels(corpus: &Corpus, engine: &Engine) -> Vec<String> {
    let mut all = std::collections::BTreeSet::new();
    for id in engine.index.ids() {
        if let Some(ls) = corpus.get(id).and_then(|d| d.labels.as_ref()) {
            all.extend(ls.iter().cloned());
        }
    }
    all.into_iter().collect()
}

fn corr(cfg: &EngineConfig) -> Result<EvalReport> {
    let corpus = working_corpus(cfg)?;
    let text = load_embedder(&cfg.paths.text_model)?;
    let stats = load_stats(cfg)?;
    let visual = load_visual(&cfg.paths.visual_model)?;
    let docs = test_docs(&corpus)?;
    let (sample, r2) = distance_correlation_study(
        &docs,
        &text,
        cfg.aggregation,
        stats.as_ref(),
        &visual,
        cfg.eval.n_pairs,
        cfg.seed,
    )?;
    let mut report = EvalReport::new("corr");
    report.aggregates.insert("r2".into(), r2);
    if let Some(m) = sample.mean_image_distance(|s| s >= 1) {
        report.aggregates.insert("image_dist_shared".into(), m);
    }
    if let Some(m) = sample.mean_image_distance(|s| s == 0) {
        report.aggregates.insert("image_dist_unshared".into(), m);
    }
    report.metadata.insert("n_pairs".into(), json!(cfg.eval.n_pairs));
    report.metadata.insert("seed".into(), json!(cfg.seed));
    report.metadata.insert("bucket_counts".into(), json!(sample.bucket_counts()));
    report.metadata.insert("distance".into(), json!("1 - cosine, min-max normalized"));

    let path = cfg.paths.reports.join("corr_pairs.csv");
    std::fs::create_dir_all(&cfg.paths.reports).map_err(io_err(&cfg.paths.reports))?;
    let f = std::fs::File::create(&path).map_err(io_err(&path))?;
    sample.write_csv(f)?;
    Ok(report)
}
