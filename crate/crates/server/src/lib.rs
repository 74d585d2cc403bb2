//! HTTP/JSON service over a trained flow-map surrogate.
//!
//! Routes:
//! - `GET /health`
//! - `GET /model/info`
//! - `POST /trajectories` with `{"seeds": [[x, y], ...], "max_cycle": k}`
//! - `GET /ftle?gx=&gy=&cycles=&source=model|truth`
//!
//! The model is loaded once and never mutated. FTLE documents are cached as
//! serialized bytes, so a repeated request returns the identical body.

use std::future::Future;
use std::net::SocketAddr;
use std::num::NonZeroUsize;
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex, OnceLock};

use axum::extract::rejection::{JsonRejection, QueryRejection};
use axum::extract::{Query, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use flowmap_core::error::SurrogateError;
use flowmap_core::fields::VectorField;
use flowmap_core::geometry::{Domain, Vec3};
use flowmap_core::reconstruct::{cycles_up_to, ftle_from_field, ftle_from_model, ground_truth, infer, Trajectory};
use flowmap_core::surrogate::{load_model, SurrogateModel};
use lru::LruCache;
use serde::{Deserialize, Serialize};
use serde_json::json;
use tower_http::cors::CorsLayer;

pub const DEFAULT_PORT: u16 = 7878;
pub const MAX_FTLE_SIDE: usize = 512;
pub const FTLE_CACHE_ENTRIES: usize = 8;
pub const MAX_SEEDS_PER_REQUEST: usize = 100_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FtleSource {
    Model,
    Truth,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
struct FtleKey {
    source: FtleSource,
    gx: usize,
    gy: usize,
    cycles: u32,
}

/// Immutable model state plus the FTLE cache.
pub struct Session {
    model: SurrogateModel,
    file_size: u64,
    truth: Option<Arc<dyn VectorField>>,
    ftle_cache: Mutex<LruCache<FtleKey, Arc<Vec<u8>>>>,
}

impl Session {
    pub fn new(model: SurrogateModel, file_size: u64, truth: Option<Arc<dyn VectorField>>) -> Self {
        let cap = NonZeroUsize::new(FTLE_CACHE_ENTRIES).unwrap_or(NonZeroUsize::MIN);
        Self { model, file_size, truth, ftle_cache: Mutex::new(LruCache::new(cap)) }
    }

    /// Reads a model file; `truth` enables ground-truth overlays.
    pub fn load(path: &Path, truth: Option<Arc<dyn VectorField>>) -> Result<Self, SurrogateError> {
        let model = load_model(path)?;
        let file_size = std::fs::metadata(path)
            .map_err(|source| SurrogateError::Io { path: path.to_path_buf(), source })?
            .len();
        Ok(Self::new(model, file_size, truth))
    }

    pub fn model(&self) -> &SurrogateModel {
        &self.model
    }

    pub fn cached_ftle_entries(&self) -> usize {
        self.ftle_cache.lock().map(|c| c.len()).unwrap_or(0)
    }
}

/// Shared handle; the session slot is filled once loading completes.
#[derive(Clone, Default)]
pub struct AppState {
    session: Arc<OnceLock<Arc<Session>>>,
}

impl AppState {
    pub fn loaded(session: Session) -> Self {
        let state = Self::default();
        state.install(session);
        state
    }

    /// Installs the session; later calls are ignored.
    pub fn install(&self, session: Session) {
        let _ = self.session.set(Arc::new(session));
    }

    pub fn session(&self) -> Option<Arc<Session>> {
        self.session.get().cloned()
    }
}

#[derive(Debug)]
pub struct ApiError {
    status: StatusCode,
    message: String,
}

impl ApiError {
    fn bad_request(message: impl Into<String>) -> Self {
        Self { status: StatusCode::BAD_REQUEST, message: message.into() }
    }

    fn unavailable() -> Self {
        Self { status: StatusCode::SERVICE_UNAVAILABLE, message: "model is still loading".into() }
    }

    fn internal(message: impl Into<String>) -> Self {
        Self { status: StatusCode::INTERNAL_SERVER_ERROR, message: message.into() }
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status, Json(json!({ "error": self.message }))).into_response()
    }
}

impl From<JsonRejection> for ApiError {
    fn from(r: JsonRejection) -> Self {
        Self::bad_request(r.body_text())
    }
}

impl From<QueryRejection> for ApiError {
    fn from(r: QueryRejection) -> Self {
        Self::bad_request(r.body_text())
    }
}

fn require(state: &AppState) -> Result<Arc<Session>, ApiError> {
    state.session().ok_or_else(ApiError::unavailable)
}

async fn health(State(state): State<AppState>) -> Response {
    match state.session() {
        Some(_) => Json(json!({ "status": "ok" })).into_response(),
        None => (StatusCode::SERVICE_UNAVAILABLE, Json(json!({ "status": "loading" }))).into_response(),
    }
}

#[derive(Debug, Serialize, Deserialize, PartialEq)]
pub struct ModelInfo {
    pub strategy: String,
    #[serde(rename = "interval_C")]
    pub interval: u32,
    pub n: usize,
    pub delta: f64,
    #[serde(rename = "T")]
    pub duration: f64,
    pub domain: Domain,
    pub parameter_count: usize,
    pub width_scale: f64,
    pub file_size: u64,
    /// CRC-32 of the parameters, hex encoded.
    pub fingerprint: String,
    pub truth_available: bool,
}

pub fn model_info(session: &Session) -> ModelInfo {
    let m = &session.model;
    ModelInfo {
        strategy: m.strategy().to_string(),
        interval: m.interval(),
        n: m.file_cycles(),
        delta: m.extraction.delta,
        duration: m.extraction.duration,
        domain: m.domain(),
        parameter_count: m.param_count(),
        width_scale: m.architecture.width_scale,
        file_size: session.file_size,
        fingerprint: format!("{:08x}", m.fingerprint()),
        truth_available: session.truth.is_some(),
    }
}

async fn info(State(state): State<AppState>) -> Result<Json<ModelInfo>, ApiError> {
    Ok(Json(model_info(&*require(&state)?)))
}

#[derive(Debug, Deserialize)]
pub struct TrajectoryRequest {
    pub seeds: Vec<[f64; 2]>,
    /// Defaults to the last file cycle.
    pub max_cycle: Option<u32>,
}

/// Each polyline is a list of `[cycle, x, y]`, ordered by cycle.
#[derive(Debug, Serialize, Deserialize, PartialEq)]
pub struct TrajectoryResponse {
    pub trajectories: Vec<Vec<[f64; 3]>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub truth: Option<Vec<Vec<[f64; 3]>>>,
}

fn polylines(ts: &[Trajectory]) -> Vec<Vec<[f64; 3]>> {
    ts.iter().map(|t| t.points.iter().map(|(c, p)| [*c as f64, p.x, p.y]).collect()).collect()
}

fn compute_trajectories(session: &Session, req: &TrajectoryRequest) -> Result<TrajectoryResponse, ApiError> {
    let model = &session.model;
    if req.seeds.len() > MAX_SEEDS_PER_REQUEST {
        return Err(ApiError::bad_request(format!("at most {MAX_SEEDS_PER_REQUEST} seeds per request")));
    }
    let domain = model.domain();
    let seeds: Vec<Vec3> = req.seeds.iter().map(|&[x, y]| Vec3::xy(x, y)).collect();
    if let Some(bad) = seeds.iter().find(|p| !(p.is_finite() && domain.contains(**p))) {
        return Err(ApiError::bad_request(format!("seed ({}, {}) lies outside the model domain", bad.x, bad.y)));
    }
    let max_cycle = req.max_cycle.unwrap_or(model.extraction.total_cycles());
    let cycles = cycles_up_to(model, max_cycle).map_err(|e| ApiError::bad_request(e.to_string()))?;
    if seeds.is_empty() {
        return Ok(TrajectoryResponse {
            trajectories: vec![],
            truth: session.truth.as_ref().map(|_| vec![]),
        });
    }
    let predicted = infer(model, &seeds, max_cycle).map_err(|e| ApiError::bad_request(e.to_string()))?;
    let truth = match &session.truth {
        Some(field) => Some(polylines(
            &ground_truth(field.as_ref(), &seeds, &cycles, model.extraction.delta)
                .map_err(|e| ApiError::internal(e.to_string()))?,
        )),
        None => None,
    };
    Ok(TrajectoryResponse { trajectories: polylines(&predicted), truth })
}

async fn trajectories(
    State(state): State<AppState>,
    body: Result<Json<TrajectoryRequest>, JsonRejection>,
) -> Result<Json<TrajectoryResponse>, ApiError> {
    let session = require(&state)?;
    let Json(req) = body?;
    tokio::task::spawn_blocking(move || compute_trajectories(&session, &req))
        .await
        .map_err(|e| ApiError::internal(e.to_string()))?
        .map(Json)
}

#[derive(Debug, Deserialize)]
pub struct FtleQuery {
    pub gx: usize,
    pub gy: usize,
    /// Defaults to the model's full duration.
    pub cycles: Option<u32>,
    pub source: Option<FtleSource>,
}

#[derive(Debug, Serialize, Deserialize, PartialEq)]
pub struct FtleDocument {
    pub gx: usize,
    pub gy: usize,
    pub cycles: u32,
    /// `|T|` in time units.
    pub duration: f64,
    pub source: FtleSource,
    pub domain: Domain,
    pub min: f64,
    pub max: f64,
    /// Row-major, `gy` rows of `gx` values, `y` ascending.
    pub values: Vec<f64>,
}

fn compute_ftle(session: &Session, key: FtleKey) -> Result<Vec<u8>, ApiError> {
    let model = &session.model;
    let field = match key.source {
        FtleSource::Model => ftle_from_model(model, key.gx, key.gy, key.cycles),
        FtleSource::Truth => {
            let truth = session
                .truth
                .as_ref()
                .ok_or_else(|| ApiError::bad_request("no analytical field configured for truth FTLE"))?;
            ftle_from_field(truth.as_ref(), key.gx, key.gy, key.cycles, model.extraction.delta)
        }
    }
    .map_err(|e| ApiError::bad_request(e.to_string()))?;
    let doc = FtleDocument {
        gx: field.gx,
        gy: field.gy,
        cycles: key.cycles,
        duration: field.duration,
        source: key.source,
        domain: field.domain,
        min: field.min(),
        max: field.max(),
        values: field.values,
    };
    serde_json::to_vec(&doc).map_err(|e| ApiError::internal(e.to_string()))
}

async fn ftle(
    State(state): State<AppState>,
    query: Result<Query<FtleQuery>, QueryRejection>,
) -> Result<Response, ApiError> {
    let session = require(&state)?;
    let Query(q) = query?;
    if q.gx < 3 || q.gy < 3 || q.gx > MAX_FTLE_SIDE || q.gy > MAX_FTLE_SIDE {
        return Err(ApiError::bad_request(format!(
            "grid {}x{} must lie between 3x3 and {MAX_FTLE_SIDE}x{MAX_FTLE_SIDE}",
            q.gx, q.gy
        )));
    }
    let key = FtleKey {
        source: q.source.unwrap_or(FtleSource::Model),
        gx: q.gx,
        gy: q.gy,
        cycles: q.cycles.unwrap_or(session.model.extraction.total_cycles()),
    };
    let cached = session.ftle_cache.lock().ok().and_then(|mut c| c.get(&key).cloned());
    let body = match cached {
        Some(bytes) => bytes,
        None => {
            let worker = session.clone();
            let bytes = tokio::task::spawn_blocking(move || compute_ftle(&worker, key))
                .await
                .map_err(|e| ApiError::internal(e.to_string()))??;
            let mut cache = session.ftle_cache.lock().map_err(|_| ApiError::internal("FTLE cache poisoned"))?;
            // a concurrent request may have filled the slot first; keep its bytes
            cache.get_or_insert(key, || Arc::new(bytes)).clone()
        }
    };
    Ok(([(header::CONTENT_TYPE, "application/json")], body.as_ref().clone()).into_response())
}

pub fn router(state: AppState) -> Router {
    Router::new()
        .route("/health", get(health))
        .route("/model/info", get(info))
        .route("/trajectories", post(trajectories))
        .route("/ftle", get(ftle))
        .layer(CorsLayer::permissive())
        .with_state(state)
}

/// Waits for Ctrl-C or, on Unix, SIGTERM.
pub async fn shutdown_signal() {
    let ctrl_c = async {
        let _ = tokio::signal::ctrl_c().await;
    };
    #[cfg(unix)]
    let term = async {
        match tokio::signal::unix::signal(tokio::signal::unix::SignalKind::terminate()) {
            Ok(mut s) => {
                s.recv().await;
            }
            Err(_) => std::future::pending::<()>().await,
        }
    };
    #[cfg(not(unix))]
    let term = std::future::pending::<()>();
    tokio::select! {
        _ = ctrl_c => {}
        _ = term => {}
    }
}

/// Binds `addr` and serves until `shutdown` resolves; see [`serve_on`].
pub async fn serve(
    addr: SocketAddr,
    model_path: PathBuf,
    truth: Option<Arc<dyn VectorField>>,
    shutdown: impl Future<Output = ()> + Send + 'static,
) -> Result<(), ServeError> {
    check_model_path(&model_path)?;
    let listener = tokio::net::TcpListener::bind(addr).await.map_err(ServeError::Bind)?;
    serve_on(listener, model_path, truth, shutdown).await
}

fn check_model_path(path: &Path) -> Result<(), ServeError> {
    if path.is_file() {
        return Ok(());
    }
    Err(ServeError::Model(SurrogateError::Io {
        path: path.to_path_buf(),
        source: std::io::Error::new(std::io::ErrorKind::NotFound, "model file not found"),
    }))
}

/// Serves on an already bound listener. The model loads in the background;
/// until it is ready `/health` answers 503.
pub async fn serve_on(
    listener: tokio::net::TcpListener,
    model_path: PathBuf,
    truth: Option<Arc<dyn VectorField>>,
    shutdown: impl Future<Output = ()> + Send + 'static,
) -> Result<(), ServeError> {
    check_model_path(&model_path)?;
    let state = AppState::default();
    let loader = state.clone();
    let load = tokio::task::spawn_blocking(move || Session::load(&model_path, truth).map(|s| loader.install(s)));
    let server = axum::serve(listener, router(state)).with_graceful_shutdown(shutdown);
    let served = tokio::spawn(async move { server.await });
    load.await.map_err(|e| ServeError::Join(e.to_string()))?.map_err(ServeError::Model)?;
    served.await.map_err(|e| ServeError::Join(e.to_string()))?.map_err(ServeError::Bind)
}

#[derive(Debug, thiserror::Error)]
pub enum ServeError {
    #[error("cannot bind: {0}")]
    Bind(std::io::Error),
    #[error(transparent)]
    Model(SurrogateError),
    #[error("server task failed: {0}")]
    Join(String),
}
