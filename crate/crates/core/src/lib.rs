//! Joint text-image embedding engine.
//!
//! Text embeddings are trained from scratch on a caption corpus, a
//! feed-forward regressor maps image feature vectors into the same space,
//! and images are retrieved by cosine similarity to (weighted combinations
//! of) embedded queries.
//!
//! - [`corpus`]: JSON-lines corpora, tokenization, vocabulary, tf-idf,
//!   tag filtering, synthetic fixtures.
//! - [`text`]: LDA, word2vec, fastText, doc2vec and GloVe trainers plus
//!   mean / tf-idf document aggregation.
//! - [`visual`]: the image-feature regressor and its sigmoid cross-entropy
//!   objective.
//! - [`retrieval`]: exact cosine index and query algebra.
//! - [`eval`]: P@k, AP/MAP protocols and the distance-correlation study.

mod binio;
pub mod corpus;
pub mod error;
pub mod eval;
pub mod text;
pub mod retrieval;
pub mod visual;

pub use error::{Error, ErrorClass, Result};
