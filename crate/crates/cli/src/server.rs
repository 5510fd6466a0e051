//! JSON API over a loaded engine, plus static files for the explorer UI.
//!
//! | method | path              | body / query                  |
//! |--------|-------------------|-------------------------------|
//! | POST   | `/api/query`      | `{"terms": [...], "k": 10}`   |
//! | GET    | `/api/items/{id}` |                               |
//! | GET    | `/api/vocab`      | `?prefix=sky&limit=50`        |
//! | POST   | `/api/reload`     |                               |
//! | GET    | `/api/health`     |                               |
//!
//! Errors come back as `{"error": <reason>, "message": <text>}` with the
//! status from [`crate::status`].

use std::collections::BTreeSet;
use std::net::SocketAddr;
use std::sync::{Arc, RwLock};

use axum::body::Bytes;
use axum::extract::{Path, Query, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::{Deserialize, Serialize};
use serde_json::json;
use tokio::net::TcpListener;
use tower_http::services::ServeDir;
use websem_core::corpus::Split;
use websem_core::retrieval::{Hit, QueryTerm};
use websem_core::{Error, Result};

use crate::config::EngineConfig;
use crate::engine::Engine;
use crate::status::{http_status, reason};

fn default_k() -> usize {
    10
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QueryRequest {
    pub terms: Vec<QueryTerm>,
    #[serde(default = "default_k")]
    pub k: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QueryResponse {
    pub results: Vec<Hit>,
    /// Query tokens the text model could not represent.
    pub dropped: Vec<String>,
}

/// Document metadata without the feature vector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ItemResponse {
    pub id: String,
    pub caption: String,
    pub tags: BTreeSet<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub labels: Option<BTreeSet<String>>,
    pub split: Split,
    pub indexed: bool,
}

#[derive(Debug, Deserialize)]
struct VocabParams {
    #[serde(default)]
    prefix: String,
    limit: Option<usize>,
}

pub struct ApiError(Error);

impl From<Error> for ApiError {
    fn from(e: Error) -> Self {
        ApiError(e)
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let class = self.0.class();
        let status = StatusCode::from_u16(http_status(class)).unwrap();
        let mut body = json!({ "error": reason(class), "message": self.0.to_string() });
        if let Error::Unembeddable(tokens) = &self.0 {
            body["tokens"] = json!(tokens);
        }
        (status, Json(body)).into_response()
    }
}

type ApiResult<T> = std::result::Result<Json<T>, ApiError>;

pub struct AppState {
    cfg: EngineConfig,
    engine: RwLock<Arc<Engine>>,
}

impl AppState {
    pub fn load(cfg: EngineConfig) -> Result<Self> {
        let engine = Engine::load(&cfg)?;
        Ok(Self::with_engine(cfg, engine))
    }

    pub fn with_engine(cfg: EngineConfig, engine: Engine) -> Self {
        AppState {
            cfg,
            engine: RwLock::new(Arc::new(engine)),
        }
    }

    /// The current engine. Holders keep it alive across a reload.
    pub fn engine(&self) -> Arc<Engine> {
        self.engine.read().unwrap().clone()
    }

    fn swap(&self, engine: Engine) {
        *self.engine.write().unwrap() = Arc::new(engine);
    }
}

async fn blocking<T: Send + 'static>(f: impl FnOnce() -> Result<T> + Send + 'static) -> Result<T> {
    tokio::task::spawn_blocking(f)
        .await
        .unwrap_or_else(|e| std::panic::resume_unwind(e.into_panic()))
}

async fn query(State(state): State<Arc<AppState>>, body: Bytes) -> ApiResult<QueryResponse> {
    let req: QueryRequest = serde_json::from_slice(&body)
        .map_err(|e| Error::Invalid(format!("request body: {e}")))?;
    let engine = state.engine();
    let out = blocking(move || engine.query(&req.terms, req.k)).await?;
    Ok(Json(QueryResponse {
        results: out.results,
        dropped: out.dropped,
    }))
}

async fn item(State(state): State<Arc<AppState>>, Path(id): Path<String>) -> ApiResult<ItemResponse> {
    let engine = state.engine();
    let doc = engine
        .corpus
        .get(&id)
        .ok_or_else(|| Error::UnknownItem(id.clone()))?;
    Ok(Json(ItemResponse {
        id: doc.id.clone(),
        caption: doc.caption.clone(),
        tags: doc.tags.clone(),
        labels: doc.labels.clone(),
        split: doc.split,
        indexed: engine.index.contains(&doc.id),
    }))
}

async fn vocab(State(state): State<Arc<AppState>>, Query(p): Query<VocabParams>) -> ApiResult<serde_json::Value> {
    let engine = state.engine();
    let mut tokens: Vec<&str> = engine.text.vocab().with_prefix(&p.prefix).collect();
    tokens.sort_unstable();
    if let Some(limit) = p.limit {
        tokens.truncate(limit);
    }
    Ok(Json(json!({ "prefix": p.prefix, "tokens": tokens })))
}

async fn reload(State(state): State<Arc<AppState>>) -> ApiResult<serde_json::Value> {
    let cfg = state.cfg.clone();
    let engine = blocking(move || Engine::load(&cfg)).await?;
    let items = engine.index.len();
    state.swap(engine);
    Ok(Json(json!({ "status": "reloaded", "items": items })))
}

async fn health(State(state): State<Arc<AppState>>) -> ApiResult<serde_json::Value> {
    let engine = state.engine();
    Ok(Json(json!({
        "status": "ok",
        "items": engine.index.len(),
        "dim": engine.index.dim(),
        "method": engine.text.method().name(),
    })))
}

pub fn router(state: Arc<AppState>) -> Router {
    let files = ServeDir::new(&state.cfg.paths.static_dir);
    Router::new()
        .route("/api/query", post(query))
        .route("/api/items/{id}", get(item))
        .route("/api/vocab", get(vocab))
        .route("/api/reload", post(reload))
        .route("/api/health", get(health))
        .fallback_service(files)
        .with_state(state)
}

/// Binds the configured address; a busy port is an I/O error.
pub async fn bind(cfg: &EngineConfig) -> Result<TcpListener> {
    let addr = format!("{}:{}", cfg.server.address, cfg.server.port);
    TcpListener::bind(&addr).await.map_err(|e| Error::io(addr, e))
}

/// Loads the engine, binds, prints `listening on http://<addr>` and serves
/// until interrupted.
pub fn serve(cfg: EngineConfig) -> Result<()> {
    let rt = tokio::runtime::Runtime::new().map_err(|e| Error::io("<runtime>", e))?;
    rt.block_on(async move {
        let listener = bind(&cfg).await?;
        let state = Arc::new(AppState::load(cfg)?);
        let addr: SocketAddr = listener.local_addr().map_err(|e| Error::io("<socket>", e))?;
        println!("listening on http://{addr}");
        axum::serve(listener, router(state))
            .with_graceful_shutdown(async {
                let _ = tokio::signal::ctrl_c().await;
            })
            .await
            .map_err(|e| Error::io(addr.to_string(), e))
    })
}
