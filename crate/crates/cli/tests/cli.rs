mod common;

use std::path::Path;

use common::*;
use websem_cli::commands::{self, Protocol};
use websem_cli::engine::working_corpus;
use websem_cli::{Engine, EngineConfig};
use websem_core::corpus::{load_corpus, save_corpus, Corpus, Split};
use websem_core::eval::{eval_p5_suite, synthetic_queries};
use websem_core::retrieval::{build_index, load_index};
use websem_core::text::load_embedder;
use websem_core::visual::load_visual;

fn cli_pipeline(dir: &Path, n_docs: usize, seed: u64) -> std::path::PathBuf {
    let cfg = write_config(dir, &small_config(n_docs, seed));
    for cmd in ["gen-synthetic", "train-text", "train-visual", "build-index"] {
        let o = run(&cfg, &[cmd]);
        assert!(o.status.success(), "{cmd}: {}", stderr(&o));
    }
    cfg
}

fn read(dir: &Path, rel: &str) -> Vec<u8> {
    std::fs::read(dir.join(rel)).unwrap()
}

#[test]
fn pipeline_artifacts_are_loadable_and_byte_identical_across_runs() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let cfg = cli_pipeline(a.path(), 1000, 5);
    cli_pipeline(b.path(), 1000, 5);

    let text = load_embedder(a.path().join("artifacts/text.wste")).unwrap();
    assert_eq!(text.dim(), 16);
    assert!(text.word_vector("concept3").is_some());
    for f in [
        "corpus.jsonl",
        "artifacts/text.wste",
        "artifacts/tfidf.json",
        "artifacts/visual.wsve",
        "artifacts/loss.csv",
        "artifacts/index.wsix",
    ] {
        assert!(read(a.path(), f) == read(b.path(), f), "{f} differs");
    }

    let o = run(&cfg, &["--seed", "6", "train-text"]);
    assert!(o.status.success());
    assert!(read(a.path(), "artifacts/text.wste") != read(b.path(), "artifacts/text.wste"));
}

#[test]
fn missing_corpus_is_an_io_error_naming_the_path() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), &small_config(100, 0));
    let o = run(&cfg, &["train-text"]);
    assert_eq!(o.status.code(), Some(3));
    assert!(stderr(&o).contains(&dir.path().join("corpus.jsonl").display().to_string()));
}

#[test]
fn bad_config_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "[text]\nmethod = \"bert\"\n");
    assert_eq!(run(&cfg, &["train-text"]).status.code(), Some(6));
}

#[test]
fn loss_curve_trends_down() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = pipeline(dir.path(), 1000, 1);
    let csv = std::fs::read_to_string(&cfg.paths.loss_curve).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("iteration,loss"));
    let losses: Vec<f64> = lines
        .map(|l| l.split_once(',').unwrap().1.parse().unwrap())
        .collect();
    assert!(losses.len() >= 40);
    let q = losses.len() / 4;
    let mean = |s: &[f64]| s.iter().sum::<f64>() / s.len() as f64;
    let windows: Vec<f64> = losses.chunks(q).map(mean).collect();
    for w in windows.windows(2).take(3) {
        assert!(w[1] < w[0], "{windows:?}");
    }
}

#[test]
fn missing_features_are_listed() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = pipeline(dir.path(), 300, 2);
    let mut docs = load_corpus(&cfg.paths.corpus).unwrap().into_docs();
    let stripped: Vec<String> = docs.iter().filter(|d| d.split == Split::Train).take(2).map(|d| d.id.clone()).collect();
    for d in docs.iter_mut().filter(|d| stripped.contains(&d.id)) {
        d.features = None;
    }
    save_corpus(&Corpus::new(docs).unwrap(), &cfg.paths.corpus).unwrap();
    let o = run(&dir.path().join("websem.toml"), &["train-visual"]);
    assert_eq!(o.status.code(), Some(5));
    for id in &stripped {
        assert!(stderr(&o).contains(id.as_str()), "{}", stderr(&o));
    }
}

#[test]
fn index_covers_the_test_split_and_reloads_exactly() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = pipeline(dir.path(), 1000, 3);
    let corpus = working_corpus(&cfg).unwrap();
    let test: Vec<_> = corpus.split(Split::Test).collect();
    let index = load_index(&cfg.paths.index).unwrap();
    assert_eq!(index.len(), test.len());

    let visual = load_visual(&cfg.paths.visual_model).unwrap();
    let fresh = build_index(
        test.iter()
            .map(|d| (d.id.clone(), visual.forward(d.features.as_ref().unwrap()).unwrap())),
    )
    .unwrap();
    assert_eq!(fresh.ids(), index.ids());
    for i in 0..index.len() {
        assert!(fresh.row(i) == index.row(i));
    }
}

#[test]
fn empty_test_split_is_an_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = pipeline(dir.path(), 300, 4);
    let mut docs = load_corpus(&cfg.paths.corpus).unwrap().into_docs();
    for d in docs.iter_mut().filter(|d| d.split == Split::Test) {
        d.split = Split::Val;
    }
    save_corpus(&Corpus::new(docs).unwrap(), &cfg.paths.corpus).unwrap();
    let o = run(&dir.path().join("websem.toml"), &["build-index"]);
    assert_eq!(o.status.code(), Some(13));
    assert!(stderr(&o).contains("no test documents"));
}

#[test]
fn query_output_and_error_codes() {
    let dir = tempfile::tempdir().unwrap();
    pipeline(dir.path(), 1000, 5);
    let cfg = dir.path().join("websem.toml");

    let o = run(&cfg, &["query", "concept2", "-k", "5"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let ranking = parse_ranking(&stdout(&o));
    assert_eq!(ranking.len(), 5);
    assert!(ranking.windows(2).all(|w| w[0].1 >= w[1].1));

    assert_eq!(run(&cfg, &["query", "concept2 -concept2"]).status.code(), Some(9));
    assert_eq!(run(&cfg, &["query", "zebra"]).status.code(), Some(10));
    assert_eq!(run(&cfg, &["query", "@nope"]).status.code(), Some(11));
    assert_eq!(run(&cfg, &["query", "x:abc"]).status.code(), Some(5));
    assert_eq!(run(&cfg, &["query", "concept2", "-k", "0"]).status.code(), Some(5));

    let o = run(&cfg, &["query", "concept2 zebra", "-k", "3"]);
    assert!(o.status.success());
    assert!(stderr(&o).contains("dropped: zebra"));
}

#[test]
fn eval_matches_the_library_and_writes_reports() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = pipeline(dir.path(), 1000, 6);
    let toml = dir.path().join("websem.toml");

    let o = run(&toml, &["eval", "p5"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let json = std::fs::read_to_string(cfg.paths.reports.join("p5.json")).unwrap();
    let report: websem_core::eval::EvalReport = serde_json::from_str(&json).unwrap();
    let engine = Engine::load(&cfg).unwrap();
    let direct = eval_p5_suite(&engine.corpus, &engine.context(), &synthetic_queries(10), 5).unwrap();
    assert_eq!(report, direct);
    assert!(cfg.paths.reports.join("p5.csv").exists());

    let o = run(&toml, &["eval", "corr"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let pairs = std::fs::read_to_string(cfg.paths.reports.join("corr_pairs.csv")).unwrap();
    assert_eq!(pairs.lines().count(), 1 + cfg.eval.n_pairs);

    for p in ["tagmap", "conceptap"] {
        let o = run(&toml, &["eval", p]);
        assert!(o.status.success(), "{p}: {}", stderr(&o));
        assert!(stdout(&o).starts_with("map "));
    }
    assert_eq!(run(&toml, &["eval", "ndcg"]).status.code(), Some(2));
}

#[test]
fn concept_ap_without_labels_is_a_protocol_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = pipeline(dir.path(), 300, 7);
    let mut docs = load_corpus(&cfg.paths.corpus).unwrap().into_docs();
    for d in &mut docs {
        d.labels = None;
    }
    save_corpus(&Corpus::new(docs).unwrap(), &cfg.paths.corpus).unwrap();
    let o = run(&dir.path().join("websem.toml"), &["eval", "conceptap"]);
    assert_eq!(o.status.code(), Some(13));
    assert!(stderr(&o).contains("labels"));
}

#[test]
fn in_process_commands_match_the_binary() {
    let dir = tempfile::tempdir().unwrap();
    let cfg: EngineConfig = pipeline(dir.path(), 500, 8);
    let mut buf = Vec::new();
    commands::query_cmd(&cfg, "concept1 concept4:0.5", 7, &mut buf).unwrap();
    let o = run(&dir.path().join("websem.toml"), &["query", "concept1 concept4:0.5", "-k", "7"]);
    assert_eq!(String::from_utf8(buf).unwrap(), stdout(&o));
    let mut buf = Vec::new();
    let r = commands::eval_cmd(&cfg, Protocol::Tagmap, &mut buf).unwrap();
    assert!(r.aggregate("map").unwrap() > 0.0);
}
