//! Engine configuration, read from a TOML file.
//!
//! Relative paths are resolved against the directory holding the config
//! file. A single top-level `seed` drives every random choice; it replaces
//! whatever seed the sub-sections carry.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use websem_core::corpus::SyntheticSpec;
use websem_core::eval::TagQuerySplit;
use websem_core::text::{Aggregation, EmbeddingConfig};
use websem_core::visual::TrainConfig;
use websem_core::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EngineConfig {
    pub seed: u64,
    pub aggregation: Aggregation,
    /// Tags carried by fewer documents are removed before training; 0
    /// keeps every tag.
    pub min_tag_count: usize,
    pub paths: Paths,
    pub text: EmbeddingConfig,
    pub visual: TrainConfig,
    pub server: ServerConfig,
    pub eval: EvalConfig,
    pub synthetic: SyntheticSpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Paths {
    pub corpus: PathBuf,
    pub text_model: PathBuf,
    pub tfidf: PathBuf,
    pub visual_model: PathBuf,
    pub loss_curve: PathBuf,
    pub index: PathBuf,
    pub reports: PathBuf,
    pub static_dir: PathBuf,
}

impl Default for Paths {
    fn default() -> Self {
        Paths {
            corpus: "corpus.jsonl".into(),
            text_model: "artifacts/text.wste".into(),
            tfidf: "artifacts/tfidf.json".into(),
            visual_model: "artifacts/visual.wsve".into(),
            loss_curve: "artifacts/loss.csv".into(),
            index: "artifacts/index.wsix".into(),
            reports: "reports".into(),
            static_dir: "ui/dist".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ServerConfig {
    pub address: String,
    /// 0 asks the OS for a free port.
    pub port: u16,
}

impl Default for ServerConfig {
    fn default() -> Self {
        ServerConfig {
            address: "127.0.0.1".into(),
            port: 8080,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvalConfig {
    pub k: usize,
    /// `"fixed"` for the bundled 24 queries, `"synthetic"` for concept-name
    /// queries over `synthetic.n_concepts`, or a path to a JSON query list.
    pub queries: String,
    /// Concepts for `conceptap`; empty means every label in the index.
    pub concepts: Vec<String>,
    pub tag_query_fraction: f64,
    pub n_pairs: usize,
}

impl Default for EvalConfig {
    fn default() -> Self {
        EvalConfig {
            k: 5,
            queries: "fixed".into(),
            concepts: Vec::new(),
            tag_query_fraction: TagQuerySplit::default().query_fraction,
            n_pairs: 5000,
        }
    }
}

impl Default for EngineConfig {
    fn default() -> Self {
        EngineConfig {
            seed: 0,
            aggregation: Aggregation::Mean,
            min_tag_count: 0,
            paths: Paths::default(),
            text: EmbeddingConfig::default(),
            visual: TrainConfig::default(),
            server: ServerConfig::default(),
            eval: EvalConfig::default(),
            synthetic: SyntheticSpec::default(),
        }
    }
}

impl EngineConfig {
    pub fn from_toml(text: &str, base: &Path) -> Result<Self> {
        let mut cfg: EngineConfig =
            toml::from_str(text).map_err(|e| Error::Config(e.message().to_owned()))?;
        cfg.resolve(base);
        cfg.set_seed(cfg.seed);
        Ok(cfg)
    }

    /// Reads `path`; paths inside are taken relative to its directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let base = path.parent().unwrap_or(Path::new("."));
        Self::from_toml(&text, base)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("config serializes")
    }

    pub fn set_seed(&mut self, seed: u64) {
        self.seed = seed;
        self.text.seed = seed;
        self.visual.seed = seed;
        self.synthetic.seed = seed;
    }

    pub fn tag_query_split(&self) -> TagQuerySplit {
        TagQuerySplit {
            query_fraction: self.eval.tag_query_fraction,
            seed: self.seed,
        }
    }

    fn resolve(&mut self, base: &Path) {
        let p = &mut self.paths;
        for path in [
            &mut p.corpus,
            &mut p.text_model,
            &mut p.tfidf,
            &mut p.visual_model,
            &mut p.loss_curve,
            &mut p.index,
            &mut p.reports,
            &mut p.static_dir,
        ] {
            if path.is_relative() {
                *path = base.join(&*path);
            }
        }
        if self.eval.queries.ends_with(".json") && Path::new(&self.eval.queries).is_relative() {
            self.eval.queries = base.join(&self.eval.queries).display().to_string();
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn paths_resolve_against_config_dir() {
        let cfg = EngineConfig::from_toml(
            "seed = 3\n[paths]\ncorpus = \"c.jsonl\"\nindex = \"/abs/i.wsix\"\n",
            Path::new("/work"),
        )
        .unwrap();
        assert_eq!(cfg.paths.corpus, Path::new("/work/c.jsonl"));
        assert_eq!(cfg.paths.index, Path::new("/abs/i.wsix"));
        assert_eq!(cfg.paths.text_model, Path::new("/work/artifacts/text.wste"));
        assert_eq!((cfg.text.seed, cfg.visual.seed, cfg.synthetic.seed), (3, 3, 3));
    }

    #[test]
    fn unknown_keys_and_methods_are_rejected() {
        assert!(EngineConfig::from_toml("colour = 1", Path::new(".")).is_err());
        assert!(EngineConfig::from_toml("[text]\nmethod = \"bert\"", Path::new(".")).is_err());
    }

    #[test]
    fn round_trips_through_toml() {
        let mut cfg = EngineConfig::default();
        cfg.text.dim = 32;
        cfg.visual.hidden = vec![64, 32];
        let back = EngineConfig::from_toml(&cfg.to_toml(), Path::new("")).unwrap();
        assert_eq!(back, cfg);
    }
}
