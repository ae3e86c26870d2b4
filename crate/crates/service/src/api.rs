//! HTTP API for interactive extraction.
//!
//! Each uploaded image becomes a session. The filter response and metric
//! tensors are cached per session, keyed by the metric part of the
//! configuration, so repeated extractions only pay for the solve.

use std::collections::HashMap;
use std::sync::{Arc, RwLock};

use axum::body::Bytes;
use axum::extract::{DefaultBodyLimit, Path, Query, State};
use axum::http::{header, HeaderMap, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use base64::Engine;
use serde::{Deserialize, Serialize};
use serde_json::json;
use tokio::sync::Mutex;
use tower_http::cors::{Any, CorsLayer};
use vesselpath::grid::{Point2, ScalarField2D};
use vesselpath::io;
use vesselpath::metric::MetricKind;
use vesselpath::pipeline::{extract, prepare, Extraction, PipelineConfig, Prepared};
use vesselpath::Error;

/// Prepared states kept per session.
const CACHE_ENTRIES: usize = 4;

/// Largest accepted upload in bytes.
pub const MAX_UPLOAD: usize = 64 * 1024 * 1024;

/// Error returned to clients as `{"error": kind, "message": text}`.
#[derive(Debug)]
pub struct ApiError {
    status: StatusCode,
    kind: &'static str,
    message: String,
}

impl ApiError {
    fn new(status: StatusCode, kind: &'static str, message: impl Into<String>) -> Self {
        Self {
            status,
            kind,
            message: message.into(),
        }
    }

    fn malformed(message: impl Into<String>) -> Self {
        Self::new(StatusCode::BAD_REQUEST, "malformed_request", message)
    }

    fn unknown_session(id: &str) -> Self {
        Self::new(StatusCode::NOT_FOUND, "unknown_session", format!("no session {id}"))
    }
}

impl From<Error> for ApiError {
    fn from(e: Error) -> Self {
        let status = match &e {
            Error::Parameter(_) | Error::Serde(_) | Error::Image(_) | Error::Ingestion { .. } => StatusCode::BAD_REQUEST,
            Error::OutOfDomain { .. }
            | Error::DegenerateFeatureRange
            | Error::PropagationExhausted
            | Error::BudgetExceeded(_)
            | Error::TraceDiverged(_)
            | Error::StationaryPoint { .. }
            | Error::RefinementFailed(_) => StatusCode::UNPROCESSABLE_ENTITY,
            Error::Tensor { .. } | Error::Io(_) => StatusCode::INTERNAL_SERVER_ERROR,
        };
        if status == StatusCode::INTERNAL_SERVER_ERROR {
            log::error!("internal error: {e}");
            return Self::new(status, "internal", "internal error");
        }
        Self::new(status, e.kind(), e.to_string())
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status, Json(json!({ "error": self.kind, "message": self.message }))).into_response()
    }
}

type ApiResult<T> = Result<T, ApiError>;

struct Cache {
    entries: HashMap<String, Arc<Prepared>>,
    order: Vec<String>,
}

struct Session {
    image: ScalarField2D,
    config: RwLock<PipelineConfig>,
    // One writer computes a missing entry; readers clone the Arc and
    // extract without holding the lock.
    cache: Mutex<Cache>,
}

impl Session {
    fn config(&self) -> PipelineConfig {
        self.config.read().expect("config lock").clone()
    }

    async fn prepared(&self, config: &PipelineConfig, kind: MetricKind) -> ApiResult<Arc<Prepared>> {
        let key = config.metric_hash();
        let mut cache = self.cache.lock().await;
        if let Some(p) = cache.entries.get(&key) {
            return Ok(p.clone());
        }
        let (image, cfg) = (self.image.clone(), config.clone());
        let prep = blocking(move || {
            let prep = prepare(&image, &cfg)?;
            // warm the lifted field now so concurrent extracts share it
            if kind == MetricKind::Proposed {
                let _ = prep.lifted();
            }
            Ok(prep)
        })
        .await?;
        let prep = Arc::new(prep);
        if cache.order.len() >= CACHE_ENTRIES {
            let oldest = cache.order.remove(0);
            cache.entries.remove(&oldest);
        }
        cache.order.push(key.clone());
        cache.entries.insert(key, prep.clone());
        Ok(prep)
    }
}

/// Shared server state.
#[derive(Clone)]
pub struct AppState {
    sessions: Arc<RwLock<HashMap<String, Arc<Session>>>>,
    defaults: Arc<PipelineConfig>,
}

impl AppState {
    pub fn new(defaults: PipelineConfig) -> Self {
        Self {
            sessions: Arc::default(),
            defaults: Arc::new(defaults),
        }
    }

    fn session(&self, id: &str) -> ApiResult<Arc<Session>> {
        self.sessions
            .read()
            .expect("session lock")
            .get(id)
            .cloned()
            .ok_or_else(|| ApiError::unknown_session(id))
    }
}

async fn blocking<T: Send + 'static>(f: impl FnOnce() -> vesselpath::Result<T> + Send + 'static) -> ApiResult<T> {
    match tokio::task::spawn_blocking(f).await {
        Ok(r) => r.map_err(ApiError::from),
        Err(e) => {
            log::error!("worker failed: {e}");
            Err(ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "internal", "internal error"))
        }
    }
}

fn parse_json<T: for<'de> Deserialize<'de>>(body: &[u8]) -> ApiResult<T> {
    serde_json::from_slice(body).map_err(|e| ApiError::malformed(e.to_string()))
}

fn parse_config(value: Option<serde_json::Value>, base: &PipelineConfig) -> ApiResult<PipelineConfig> {
    match value {
        None => Ok(base.clone()),
        Some(v) => Ok(PipelineConfig::from_json_str(&v.to_string())?),
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct CreateRequest {
    /// Base64-encoded PNG.
    image: String,
    config: Option<serde_json::Value>,
}

#[derive(Serialize)]
struct CreateResponse {
    session_id: String,
    width: usize,
    height: usize,
}

/// `POST /sessions`: a raw image body, or JSON `{"image": base64, "config"?}`.
async fn create_session(State(state): State<AppState>, headers: HeaderMap, body: Bytes) -> ApiResult<Response> {
    let is_json = headers
        .get(header::CONTENT_TYPE)
        .and_then(|v| v.to_str().ok())
        .is_some_and(|v| v.starts_with("application/json"));
    let (bytes, config) = if is_json {
        let req: CreateRequest = parse_json(&body)?;
        let bytes = base64::engine::general_purpose::STANDARD
            .decode(req.image.trim())
            .map_err(|e| ApiError::malformed(format!("image is not valid base64: {e}")))?;
        (bytes, parse_config(req.config, &state.defaults)?)
    } else {
        (body.to_vec(), (*state.defaults).clone())
    };
    if bytes.is_empty() {
        return Err(ApiError::malformed("empty image"));
    }
    let image = io::decode_image(&bytes)?;
    let spec = image.spec();
    let id = uuid::Uuid::new_v4().to_string();
    let session = Session {
        image,
        config: RwLock::new(config),
        cache: Mutex::new(Cache {
            entries: HashMap::new(),
            order: Vec::new(),
        }),
    };
    state.sessions.write().expect("session lock").insert(id.clone(), Arc::new(session));
    log::info!("session {id}: {}x{}", spec.width(), spec.height());
    let body = CreateResponse {
        session_id: id,
        width: spec.width(),
        height: spec.height(),
    };
    Ok((StatusCode::CREATED, Json(body)).into_response())
}

#[derive(Deserialize)]
struct LayerQuery {
    layer: Option<String>,
}

/// `GET /sessions/{id}/vesselness[?layer=feature|omega|scale]` as a PNG.
async fn vesselness(
    State(state): State<AppState>,
    Path(id): Path<String>,
    Query(q): Query<LayerQuery>,
) -> ApiResult<Response> {
    let session = state.session(&id)?;
    let config = session.config();
    let prep = session.prepared(&config, MetricKind::Ir).await?;
    let layer = q.layer.unwrap_or_else(|| "vesselness".into());
    let gray = match layer.as_str() {
        "vesselness" => io::field_to_gray(&prep.oof.vesselness),
        "feature" => io::field_to_gray(&prep.feature.map),
        "omega" => io::field_to_gray_minmax(&prep.omega),
        "scale" => io::field_to_gray_minmax(&prep.oof.scale_map),
        other => return Err(ApiError::malformed(format!("unknown layer {other:?}"))),
    };
    let png = io::encode_png(&image::DynamicImage::ImageLuma8(gray))?;
    Ok(([(header::CONTENT_TYPE, "image/png")], png).into_response())
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ExtractRequest {
    source: Point2,
    end: Point2,
    #[serde(default = "default_metric")]
    metric: MetricKind,
    /// Full configuration for this request only.
    params: Option<serde_json::Value>,
}

fn default_metric() -> MetricKind {
    MetricKind::Proposed
}

/// `POST /sessions/{id}/extract`.
async fn extract_path(
    State(state): State<AppState>,
    Path(id): Path<String>,
    body: Bytes,
) -> ApiResult<Json<Extraction>> {
    let session = state.session(&id)?;
    let req: ExtractRequest = parse_json(&body)?;
    let config = parse_config(req.params, &session.config())?;
    // reject bad points before paying for the filter
    let spec = session.image.spec();
    spec.check_point(req.source)?;
    spec.check_point(req.end)?;
    let prep = session.prepared(&config, req.metric).await?;
    let ex = blocking(move || extract(&prep, &config, req.source, req.end, req.metric)).await?;
    Ok(Json(ex))
}

/// `POST /sessions/{id}/params`: replaces the session configuration and
/// recomputes its cached state.
async fn set_params(
    State(state): State<AppState>,
    Path(id): Path<String>,
    body: Bytes,
) -> ApiResult<Json<serde_json::Value>> {
    let session = state.session(&id)?;
    let value: serde_json::Value = parse_json(&body)?;
    let config = parse_config(Some(value), &state.defaults)?;
    let prep = session.prepared(&config, MetricKind::Proposed).await?;
    *session.config.write().expect("config lock") = config.clone();
    Ok(Json(json!({
        "config_hash": config.hash(),
        "metric_hash": prep.metric_hash,
        "alpha": prep.resolved.alpha,
        "lambda": prep.resolved.lambda,
        "theta_max": prep.feature.theta_max,
    })))
}

/// `DELETE /sessions/{id}`.
async fn delete_session(State(state): State<AppState>, Path(id): Path<String>) -> ApiResult<StatusCode> {
    match state.sessions.write().expect("session lock").remove(&id) {
        Some(_) => Ok(StatusCode::NO_CONTENT),
        None => Err(ApiError::unknown_session(&id)),
    }
}

/// Builds the router with permissive CORS for a browser front end.
pub fn router(state: AppState) -> Router {
    let cors = CorsLayer::new().allow_origin(Any).allow_methods(Any).allow_headers(Any);
    Router::new()
        .route("/sessions", post(create_session))
        .route("/sessions/{id}", axum::routing::delete(delete_session))
        .route("/sessions/{id}/vesselness", get(vesselness))
        .route("/sessions/{id}/extract", post(extract_path))
        .route("/sessions/{id}/params", post(set_params))
        .layer(DefaultBodyLimit::max(MAX_UPLOAD))
        .layer(cors)
        .with_state(state)
}

/// Serves the API until the process is stopped.
pub async fn serve(addr: std::net::SocketAddr, defaults: PipelineConfig) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(addr).await?;
    log::info!("listening on {}", listener.local_addr()?);
    axum::serve(listener, router(AppState::new(defaults))).await
}
