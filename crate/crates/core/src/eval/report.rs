use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{Category, Complexity};
use crate::error::{Error, Result};

/// Score of one query or concept.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ItemScore {
    pub name: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub category: Option<Category>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub complexity: Option<Complexity>,
    /// P@k or AP.
    pub score: f64,
    /// Set when the query could not be embedded and was scored 0.
    pub flagged: bool,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub dropped: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub protocol: String,
    pub items: Vec<ItemScore>,
    /// Means over item groups (`all`, `simple`, `complex`, `map`, …) and
    /// scalar results such as `r2`.
    pub aggregates: BTreeMap<String, f64>,
    /// Protocol settings: split fractions, relevance rule, seeds.
    pub metadata: BTreeMap<String, serde_json::Value>,
}

impl EvalReport {
    pub fn new(protocol: &str) -> Self {
        EvalReport {
            protocol: protocol.to_owned(),
            items: Vec::new(),
            aggregates: BTreeMap::new(),
            metadata: BTreeMap::new(),
        }
    }

    pub fn aggregate(&self, key: &str) -> Option<f64> {
        self.aggregates.get(key).copied()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// One row per item, then one per aggregate:
    /// `name,category,complexity,score,flagged`.
    pub fn write_csv(&self, out: impl std::io::Write) -> Result<()> {
        let csv_err = |e: csv::Error| Error::Invalid(format!("csv: {e}"));
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["name", "category", "complexity", "score", "flagged"])
            .map_err(csv_err)?;
        let label = |v: Option<String>| v.unwrap_or_default();
        for it in &self.items {
            let cat = it.category.map(|c| json_name(&c));
            let cx = it.complexity.map(|c| json_name(&c));
            w.write_record([
                it.name.as_str(),
                &label(cat),
                &label(cx),
                &it.score.to_string(),
                &it.flagged.to_string(),
            ])
            .map_err(csv_err)?;
        }
        for (k, v) in &self.aggregates {
            w.write_record([format!("mean:{k}").as_str(), "", "", &v.to_string(), ""])
                .map_err(csv_err)?;
        }
        w.flush().map_err(|e| Error::Invalid(format!("csv: {e}")))
    }

    /// Writes `<stem>.json` and `<stem>.csv` into `dir`.
    pub fn save(&self, dir: impl AsRef<Path>, stem: &str) -> Result<()> {
        let dir = dir.as_ref();
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let json = dir.join(format!("{stem}.json"));
        std::fs::write(&json, self.to_json()).map_err(|e| Error::io(&json, e))?;
        let csv = dir.join(format!("{stem}.csv"));
        let f = std::fs::File::create(&csv).map_err(|e| Error::io(&csv, e))?;
        self.write_csv(f)
    }
}

fn json_name<T: Serialize>(v: &T) -> String {
    serde_json::to_value(v)
        .ok()
        .and_then(|v| v.as_str().map(str::to_owned))
        .unwrap_or_default()
}
