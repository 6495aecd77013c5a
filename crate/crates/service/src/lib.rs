//! HTTP JSON service over the layout engine: dataset upload, layouts,
//! re-layout with per-dataset session state, highlighting and 3D flow
//! export. Every body is canonical JSON carrying `schemaVersion`.

mod error;
mod store;

use std::collections::HashMap;
use std::net::SocketAddr;
use std::path::PathBuf;
use std::sync::Arc;
use std::time::Instant;

use axum::body::Bytes;
use axum::extract::{DefaultBodyLimit, Multipart, Path, Query, State};
use axum::http::header::{HeaderName, HeaderValue, CONTENT_TYPE};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::Router;
use odflow::canonical::to_canonical_string;
use odflow::flow3d::{export_curves, ExportOptions, HeightEncoding, Representation};
use odflow::layouts::{
    highlight, layout, transform, Canvas, LayoutKind, LayoutParams, RelayoutRequest, Selection,
    SCHEMA_VERSION,
};
use serde::Serialize;
use serde_json::{json, Value};
use tower_http::cors::{Any, CorsLayer};

pub use error::ApiError;
pub use store::{DatasetEntry, SessionState, Store, Upload};

pub const STATE_VERSION_HEADER: &str = "x-odflow-state-version";
pub const ENGINE_VERSION_HEADER: &str = "x-odflow-engine-version";
const MAX_UPLOAD: usize = 64 << 20;

#[derive(Debug, Clone)]
pub struct ServiceConfig {
    pub host: String,
    pub port: u16,
    pub fixtures_dir: Option<PathBuf>,
    pub params: LayoutParams,
}

impl Default for ServiceConfig {
    fn default() -> Self {
        Self {
            host: "127.0.0.1".into(),
            port: 8080,
            fixtures_dir: None,
            params: LayoutParams::default(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct AppState {
    pub store: Arc<Store>,
    pub params: Arc<LayoutParams>,
}

impl AppState {
    pub fn new(store: Store, params: LayoutParams) -> Self {
        Self {
            store: Arc::new(store),
            params: Arc::new(params),
        }
    }
}

pub(crate) fn json_response<const N: usize>(
    status: StatusCode,
    body: &impl Serialize,
    headers: [(&'static str, String); N],
) -> Response {
    let text = to_canonical_string(body).expect("response serializes");
    let mut res = (status, text).into_response();
    let h = res.headers_mut();
    h.insert(CONTENT_TYPE, HeaderValue::from_static("application/json"));
    h.insert(
        ENGINE_VERSION_HEADER,
        HeaderValue::from_static(odflow::VERSION),
    );
    for (name, value) in headers {
        if let Ok(v) = HeaderValue::from_str(&value) {
            h.insert(HeaderName::from_static(name), v);
        }
    }
    res
}

/// Adds `schemaVersion` to an object body that lacks it.
fn versioned(body: impl Serialize) -> Value {
    let mut v = serde_json::to_value(body).expect("response serializes");
    if let Value::Object(m) = &mut v {
        m.entry("schemaVersion").or_insert(json!(SCHEMA_VERSION));
    }
    v
}

fn timing(name: &str, start: Instant) -> (&'static str, String) {
    (
        "server-timing",
        format!("{name};dur={:.3}", start.elapsed().as_secs_f64() * 1e3),
    )
}

async fn blocking<T: Send + 'static>(
    f: impl FnOnce() -> Result<T, ApiError> + Send + 'static,
) -> Result<T, ApiError> {
    tokio::task::spawn_blocking(f)
        .await
        .map_err(|e| ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "Internal", e.to_string()))?
}

type Params = Query<HashMap<String, String>>;

fn json_body<T: serde::de::DeserializeOwned>(body: &[u8]) -> Result<T, ApiError> {
    serde_json::from_slice(body)
        .map_err(|e| ApiError::bad_request(format!("invalid request body: {e}")))
}

fn parse_param<T: std::str::FromStr>(
    q: &HashMap<String, String>,
    key: &str,
    default: T,
) -> Result<T, ApiError>
where
    T::Err: std::fmt::Display,
{
    match q.get(key) {
        Some(s) => s
            .parse()
            .map_err(|e| ApiError::bad_request(format!("{key}: {e}"))),
        None => Ok(default),
    }
}

fn canvas(q: &HashMap<String, String>) -> Result<Canvas, ApiError> {
    let d = Canvas::default();
    let w: f64 = parse_param(q, "w", d.width)?;
    let h: f64 = parse_param(q, "h", d.height)?;
    if !(w.is_finite() && h.is_finite() && w > 0.0 && h > 0.0) {
        return Err(ApiError::bad_request(format!(
            "canvas {w}x{h} must be positive"
        )));
    }
    Ok(Canvas::new(w, h))
}

pub fn router(state: AppState) -> Router {
    let cors = CorsLayer::new()
        .allow_origin(Any)
        .allow_methods(Any)
        .allow_headers(Any)
        .expose_headers([
            HeaderName::from_static("server-timing"),
            HeaderName::from_static(STATE_VERSION_HEADER),
            HeaderName::from_static(ENGINE_VERSION_HEADER),
        ]);
    Router::new()
        .route("/health", get(health))
        .route("/datasets", get(list_datasets).post(upload))
        .route("/datasets/{id}", get(dataset_summary))
        .route("/datasets/{id}/layout", get(get_layout))
        .route("/datasets/{id}/relayout", post(post_relayout))
        .route("/datasets/{id}/session", get(get_session))
        .route(
            "/datasets/{id}/selections",
            post(toggle_selection).delete(clear_selections),
        )
        .route("/datasets/{id}/highlight", post(post_highlight))
        .route("/datasets/{id}/flows3d", get(get_flows3d))
        .layer(DefaultBodyLimit::max(MAX_UPLOAD))
        .layer(cors)
        .with_state(state)
}

/// Binds `host:port` and serves until the process ends.
pub async fn serve(config: ServiceConfig) -> Result<(), String> {
    let store = match &config.fixtures_dir {
        Some(dir) => Store::with_fixtures(dir)?,
        None => Store::default(),
    };
    let addr: SocketAddr = format!("{}:{}", config.host, config.port)
        .parse()
        .map_err(|e| format!("bad address {}: {e}", config.host))?;
    let listener = tokio::net::TcpListener::bind(addr)
        .await
        .map_err(|e| format!("bind {addr}: {e}"))?;
    eprintln!(
        "odflow service listening on http://{}",
        listener.local_addr().map_err(|e| e.to_string())?
    );
    axum::serve(listener, router(AppState::new(store, config.params)))
        .await
        .map_err(|e| e.to_string())
}

async fn health() -> Response {
    json_response(
        StatusCode::OK,
        &json!({"schemaVersion": SCHEMA_VERSION, "status": "ok", "engineVersion": odflow::VERSION}),
        [],
    )
}

fn summary(e: &DatasetEntry) -> Value {
    json!({
        "datasetId": e.id,
        "regions": e.dataset.regions().len(),
        "flows": e.dataset.flows().len(),
        "hasGrid": e.grid.is_some(),
    })
}

async fn list_datasets(State(app): State<AppState>) -> Response {
    let list: Vec<Value> = app.store.list().iter().map(|e| summary(e)).collect();
    json_response(StatusCode::OK, &versioned(json!({ "datasets": list })), [])
}

async fn dataset_summary(
    State(app): State<AppState>,
    Path(id): Path<String>,
) -> Result<Response, ApiError> {
    let e = app.store.get(&id)?;
    Ok(json_response(StatusCode::OK, &versioned(summary(&e)), []))
}

async fn upload(
    State(app): State<AppState>,
    mut multipart: Multipart,
) -> Result<Response, ApiError> {
    let mut up = Upload::default();
    let (mut has_flows, mut has_regions) = (false, false);
    while let Some(field) = multipart
        .next_field()
        .await
        .map_err(|e| ApiError::bad_request(e.body_text()))?
    {
        let name = field.name().unwrap_or_default().to_string();
        let bytes = field
            .bytes()
            .await
            .map_err(|e| ApiError::bad_request(e.body_text()))?
            .to_vec();
        match name.as_str() {
            "flows" | "flows.csv" => (up.flows, has_flows) = (bytes, true),
            "regions" | "regions.geojson" => (up.regions, has_regions) = (bytes, true),
            "grid" | "grid.json" => up.grid = Some(bytes),
            "allowSelfFlows" => up.allow_self_flows = bytes.trim_ascii() == b"true",
            other => return Err(ApiError::bad_request(format!("unexpected field {other:?}"))),
        }
    }
    if !has_flows || !has_regions {
        return Err(ApiError::bad_request("upload needs both flows and regions"));
    }
    let store = app.store.clone();
    let entry = blocking(move || store.upload(up)).await?;
    Ok(json_response(
        StatusCode::CREATED,
        &versioned(summary(&entry)),
        [],
    ))
}

async fn get_layout(
    State(app): State<AppState>,
    Path(id): Path<String>,
    Query(q): Params,
) -> Result<Response, ApiError> {
    let entry = app.store.get(&id)?;
    let kind: LayoutKind = parse_param(&q, "kind", LayoutKind::Maptrix)?;
    let canvas = canvas(&q)?;
    let start = Instant::now();
    let params = app.params.clone();
    let doc = blocking(move || {
        Ok(layout(
            kind,
            &entry.dataset,
            entry.grid.as_ref(),
            canvas,
            &params,
        )?)
    })
    .await?;
    Ok(json_response(
        StatusCode::OK,
        &doc,
        [timing("layout", start)],
    ))
}

/// Lays out the transformed dataset and records the request as the
/// session's current view.
async fn post_relayout(
    State(app): State<AppState>,
    Path(id): Path<String>,
    Query(q): Params,
    body: Bytes,
) -> Result<Response, ApiError> {
    let entry = app.store.get(&id)?;
    let kind: LayoutKind = parse_param(&q, "kind", LayoutKind::Maptrix)?;
    let canvas = canvas(&q)?;
    let req: RelayoutRequest = if body.trim_ascii().is_empty() {
        RelayoutRequest::default()
    } else {
        json_body(&body)?
    };
    let mut session = entry.session.lock().await;
    let start = Instant::now();
    let params = app.params.clone();
    let (e, r) = (entry.clone(), req.clone());
    let doc = blocking(move || {
        let d = transform(&e.dataset, &r)?;
        Ok(layout(kind, &d, e.grid.as_ref(), canvas, &params)?)
    })
    .await?;
    let solve = timing("relayout", start);
    session.filter = req.filter;
    session.groups = req.groups;
    session.version += 1;
    Ok(json_response(
        StatusCode::OK,
        &doc,
        [solve, (STATE_VERSION_HEADER, session.version.to_string())],
    ))
}

fn session_response(s: &SessionState) -> Response {
    json_response(
        StatusCode::OK,
        &versioned(s),
        [(STATE_VERSION_HEADER, s.version.to_string())],
    )
}

async fn get_session(
    State(app): State<AppState>,
    Path(id): Path<String>,
) -> Result<Response, ApiError> {
    let entry = app.store.get(&id)?;
    let s = entry.session.lock().await;
    Ok(session_response(&s))
}

/// Adds the selection to the persisted set, or removes it if already there.
async fn toggle_selection(
    State(app): State<AppState>,
    Path(id): Path<String>,
    body: Bytes,
) -> Result<Response, ApiError> {
    let sel: Selection = json_body(&body)?;
    let entry = app.store.get(&id)?;
    let mut s = entry.session.lock().await;
    let view = transform(&entry.dataset, &s.request())?;
    let known = |r: &String| view.region(r).is_some();
    if let Some(bad) = sel
        .regions
        .iter()
        .chain(sel.cells.iter().flatten())
        .find(|r| !known(r))
    {
        return Err(ApiError::layout(
            odflow::layouts::LayoutError::UnknownSelection(format!("unknown region {bad:?}")),
        ));
    }
    match s.selections.iter().position(|x| *x == sel) {
        Some(i) => {
            s.selections.remove(i);
        }
        None => s.selections.push(sel),
    }
    s.version += 1;
    Ok(session_response(&s))
}

async fn clear_selections(
    State(app): State<AppState>,
    Path(id): Path<String>,
) -> Result<Response, ApiError> {
    let entry = app.store.get(&id)?;
    let mut s = entry.session.lock().await;
    s.selections.clear();
    s.version += 1;
    Ok(session_response(&s))
}

/// Overlay for a selection on the MapTrix of the session's current view.
async fn post_highlight(
    State(app): State<AppState>,
    Path(id): Path<String>,
    Query(q): Params,
    body: Bytes,
) -> Result<Response, ApiError> {
    let sel: Selection = json_body(&body)?;
    let entry = app.store.get(&id)?;
    let canvas = canvas(&q)?;
    let req = entry.session.lock().await.request();
    let params = app.params.clone();
    let overlay = blocking(move || {
        let d = transform(&entry.dataset, &req)?;
        let doc = layout(LayoutKind::Maptrix, &d, None, canvas, &params)?;
        Ok(highlight(&doc, &sel)?)
    })
    .await?;
    Ok(json_response(StatusCode::OK, &versioned(overlay), []))
}

async fn get_flows3d(
    State(app): State<AppState>,
    Path(id): Path<String>,
    Query(q): Params,
) -> Result<Response, ApiError> {
    let entry = app.store.get(&id)?;
    let repr: Representation = parse_param(&q, "repr", Representation::Map)?;
    let encoding: HeightEncoding = parse_param(&q, "encoding", HeightEncoding::Constant)?;
    let defaults = ExportOptions::default();
    let opts = ExportOptions {
        samples: parse_param(&q, "samples", defaults.samples)?,
        ..defaults
    };
    let start = Instant::now();
    let batch = blocking(move || {
        export_curves(&entry.dataset, repr, encoding, &opts).map_err(ApiError::flow3d)
    })
    .await?;
    Ok(json_response(
        StatusCode::OK,
        &batch,
        [timing("export", start)],
    ))
}
