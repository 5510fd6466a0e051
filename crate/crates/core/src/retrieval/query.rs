use serde::{Deserialize, Serialize};

use super::{compose_query, Hit, RetrievalIndex};
use crate::corpus::{tokenize, TfIdfStats};
use crate::error::{Error, Result};
use crate::text::{embed_document_detailed, Aggregation, TextEmbedder};

fn one() -> f64 {
    1.0
}

/// A weighted query term: free text embedded with φ, or an indexed image
/// whose stored visual embedding is reused.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged, deny_unknown_fields)]
pub enum QueryTerm {
    Text {
        text: String,
        #[serde(default = "one")]
        weight: f64,
    },
    Image {
        image_id: String,
        #[serde(default = "one")]
        weight: f64,
    },
}

impl QueryTerm {
    pub fn text(text: impl Into<String>, weight: f64) -> Self {
        QueryTerm::Text {
            text: text.into(),
            weight,
        }
    }

    pub fn image(id: impl Into<String>, weight: f64) -> Self {
        QueryTerm::Image {
            image_id: id.into(),
            weight,
        }
    }

    pub fn weight(&self) -> f64 {
        match self {
            QueryTerm::Text { weight, .. } | QueryTerm::Image { weight, .. } => *weight,
        }
    }
}

/// Parses the command-line query syntax.
///
/// Whitespace separates terms. A bare word has weight 1, `+w` also 1,
/// `-w` weight −1 and `w:0.5` an explicit weight (combined with a leading
/// sign, so `-w:0.5` is −0.5). `@id` names an indexed image instead of text.
pub fn parse_query(input: &str) -> Result<Vec<QueryTerm>> {
    let bad = |t: &str| Error::Invalid(format!("malformed query term {t:?}"));
    let mut terms = Vec::new();
    for raw in input.split_whitespace() {
        let (sign, rest) = match raw.as_bytes()[0] {
            b'+' => (1.0, &raw[1..]),
            b'-' => (-1.0, &raw[1..]),
            _ => (1.0, raw),
        };
        let (body, weight) = match rest.rsplit_once(':') {
            Some((body, w)) => {
                let w: f64 = w.parse().map_err(|_| bad(raw))?;
                if !w.is_finite() {
                    return Err(bad(raw));
                }
                (body, sign * w)
            }
            None => (rest, sign),
        };
        let term = match body.strip_prefix('@') {
            Some(id) if !id.is_empty() => QueryTerm::image(id, weight),
            None if !body.is_empty() => QueryTerm::text(body, weight),
            _ => return Err(bad(raw)),
        };
        terms.push(term);
    }
    if terms.is_empty() {
        return Err(Error::Invalid("empty query".into()));
    }
    Ok(terms)
}

/// Everything needed to turn query terms into a ranking.
#[derive(Clone, Copy)]
pub struct QueryContext<'a> {
    pub text: &'a TextEmbedder,
    pub aggregation: Aggregation,
    pub stats: Option<&'a TfIdfStats>,
    pub index: &'a RetrievalIndex,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QueryOutcome {
    pub results: Vec<Hit>,
    /// Query tokens the text model could not represent.
    pub dropped: Vec<String>,
}

impl QueryContext<'_> {
    /// The composed, unit-normalized query vector and the dropped tokens.
    ///
    /// A text term none of whose tokens can be embedded is left out; the
    /// query is un-embeddable only when no term remains.
    pub fn query_vector(&self, terms: &[QueryTerm]) -> Result<(Vec<f64>, Vec<String>)> {
        if terms.is_empty() {
            return Err(Error::Invalid("a query needs at least one term".into()));
        }
        let mut dropped = Vec::new();
        let mut vectors = Vec::with_capacity(terms.len());
        for term in terms {
            let v = match term {
                QueryTerm::Text { text, .. } => {
                    let tokens = tokenize(text);
                    if tokens.is_empty() {
                        return Err(Error::Unembeddable(vec![text.clone()]));
                    }
                    match embed_document_detailed(self.text, &tokens, self.aggregation, self.stats) {
                        Ok(e) => {
                            dropped.extend(e.dropped);
                            e.vector
                        }
                        Err(Error::Unembeddable(t)) => {
                            dropped.extend(t);
                            continue;
                        }
                        Err(e) => return Err(e),
                    }
                }
                QueryTerm::Image { image_id, .. } => self
                    .index
                    .vector(image_id)
                    .ok_or_else(|| Error::UnknownItem(image_id.clone()))?,
            };
            vectors.push((v, term.weight()));
        }
        if vectors.is_empty() {
            return Err(Error::Unembeddable(dropped));
        }
        Ok((compose_query(&vectors)?, dropped))
    }
}

/// Embeds, composes and ranks: the single query path shared by every
/// front end.
pub fn execute_query(ctx: &QueryContext, terms: &[QueryTerm], k: usize) -> Result<QueryOutcome> {
    if k == 0 {
        return Err(Error::Invalid("k must be at least 1".into()));
    }
    let (q, dropped) = ctx.query_vector(terms)?;
    Ok(QueryOutcome {
        results: ctx.index.query_nearest(&q, k)?,
        dropped,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn syntax() {
        let t = parse_query("snow -leopard +mountain sky:0.5 -sea:2 @img7 -@img9:0.25").unwrap();
        assert_eq!(
            t,
            vec![
                QueryTerm::text("snow", 1.0),
                QueryTerm::text("leopard", -1.0),
                QueryTerm::text("mountain", 1.0),
                QueryTerm::text("sky", 0.5),
                QueryTerm::text("sea", -2.0),
                QueryTerm::image("img7", 1.0),
                QueryTerm::image("img9", -0.25),
            ]
        );
    }

    #[test]
    fn syntax_errors() {
        for q in ["", "   ", "-", "x:abc", "@", ":1", "x:inf"] {
            assert!(parse_query(q).is_err(), "{q:?}");
        }
    }

    #[test]
    fn wire_format() {
        let t: Vec<QueryTerm> =
            serde_json::from_str(r#"[{"text":"skyline","weight":1},{"image_id":"d1","weight":-0.5},{"text":"x"}]"#)
                .unwrap();
        assert_eq!(
            t,
            vec![
                QueryTerm::text("skyline", 1.0),
                QueryTerm::image("d1", -0.5),
                QueryTerm::text("x", 1.0)
            ]
        );
        assert!(serde_json::from_str::<QueryTerm>(r#"{"weight":1}"#).is_err());
    }
}
