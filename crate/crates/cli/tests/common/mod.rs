#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use websem_cli::commands;
use websem_cli::EngineConfig;

pub const BIN: &str = env!("CARGO_BIN_EXE_websem");

/// A small synthetic setup: 10 concepts, word2vec d=16, a short visual run.
pub fn small_config(n_docs: usize, seed: u64) -> String {
    format!(
        r#"seed = {seed}
[text]
method = "word2vec"
dim = 16
[visual]
learning_rate = 1.0
decay_interval = 1000
max_iters = 600
hidden = [64]
[eval]
queries = "synthetic"
n_pairs = 400
[synthetic]
n_concepts = 10
words_per_concept = 20
n_docs = {n_docs}
feature_dim = 32
noise_sigma = 0.1
[server]
port = 0
"#
    )
}

pub fn write_config(dir: &Path, toml: &str) -> PathBuf {
    let path = dir.join("websem.toml");
    std::fs::write(&path, toml).unwrap();
    path
}

/// Generates the corpus and every artifact in-process.
pub fn pipeline(dir: &Path, n_docs: usize, seed: u64) -> EngineConfig {
    let path = write_config(dir, &small_config(n_docs, seed));
    let cfg = EngineConfig::load(&path).unwrap();
    let sink = &mut std::io::sink();
    commands::gen_synthetic(&cfg, sink).unwrap();
    commands::train_text_cmd(&cfg, sink).unwrap();
    commands::train_visual_cmd(&cfg, sink).unwrap();
    commands::build_index_cmd(&cfg, sink).unwrap();
    cfg
}

pub fn run(config: &Path, args: &[&str]) -> Output {
    Command::new(BIN)
        .arg("--config")
        .arg(config)
        .args(args)
        .output()
        .unwrap()
}

pub fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

pub fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

/// `id score` lines printed by the query command.
pub fn parse_ranking(text: &str) -> Vec<(String, f64)> {
    text.lines()
        .map(|l| {
            let (id, s) = l.split_once(' ').unwrap();
            (id.to_owned(), s.parse().unwrap())
        })
        .collect()
}
