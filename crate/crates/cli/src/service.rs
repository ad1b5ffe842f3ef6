//! HTTP query API over an immutable in-memory index.
//!
//! | route                          | purpose                                 |
//! |--------------------------------|-----------------------------------------|
//! | `POST /api/query?k=N`          | multipart upload, ranked results        |
//! | `GET /api/items/{id}`          | entry metadata                          |
//! | `GET /api/items/{id}/thumb`    | PNG thumbnail, longest side 256 px      |
//! | `GET /api/health`              | readiness and index summary             |
//!
//! Image ids may contain `/`; clients percent-encode them into one segment.

use std::path::{Path, PathBuf};
use std::sync::{Arc, OnceLock};
use std::time::Instant;

use axum::extract::{DefaultBodyLimit, Multipart, Path as UrlPath, Query, State};
use axum::http::{header, HeaderValue, Method, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use percent_encoding::{utf8_percent_encode, AsciiSet, NON_ALPHANUMERIC};
use regiongem::sheet::save_png;
use regiongem::{decode_image, load_index, FeatureIndex};
use serde::{Deserialize, Serialize};
use serde_json::json;
use sha2::{Digest, Sha256};
use tower_http::cors::{AllowOrigin, CorsLayer};

use crate::commands::query_index;

pub const DEFAULT_BIND: &str = "127.0.0.1:8080";
pub const DEFAULT_MAX_UPLOAD_BYTES: usize = 8 * 1024 * 1024;
pub const DEFAULT_K: usize = 20;
pub const MAX_K: usize = 100;
pub const THUMB_SIZE: u32 = 256;

const ID_SEGMENT: &AsciiSet = &NON_ALPHANUMERIC.remove(b'-').remove(b'_').remove(b'.').remove(b'~');

#[derive(Clone, Debug)]
pub struct ServiceConfig {
    pub index_path: PathBuf,
    pub bind: String,
    pub max_upload_bytes: usize,
    pub default_k: usize,
    pub allow_origins: Vec<String>,
}

impl ServiceConfig {
    pub fn new(index_path: impl Into<PathBuf>) -> Self {
        Self {
            index_path: index_path.into(),
            bind: DEFAULT_BIND.into(),
            max_upload_bytes: DEFAULT_MAX_UPLOAD_BYTES,
            default_k: DEFAULT_K,
            allow_origins: Vec::new(),
        }
    }

    pub fn validate(&self) -> anyhow::Result<()> {
        anyhow::ensure!(self.max_upload_bytes > 0, "max upload size must be positive");
        anyhow::ensure!(
            (1..=MAX_K).contains(&self.default_k),
            "default k must lie in 1..={MAX_K}"
        );
        Ok(())
    }

    /// Thumbnails are cached next to the index file.
    pub fn thumb_dir(&self) -> PathBuf {
        let mut name = self.index_path.as_os_str().to_owned();
        name.push(".thumbs");
        PathBuf::from(name)
    }
}

pub struct AppState {
    index: OnceLock<Arc<FeatureIndex>>,
    thumb_dir: PathBuf,
    max_upload_bytes: usize,
    default_k: usize,
}

impl AppState {
    pub fn new(config: &ServiceConfig) -> Self {
        Self {
            index: OnceLock::new(),
            thumb_dir: config.thumb_dir(),
            max_upload_bytes: config.max_upload_bytes,
            default_k: config.default_k,
        }
    }

    pub fn set_index(&self, index: FeatureIndex) {
        let _ = self.index.set(Arc::new(index));
    }

    fn index(&self) -> Result<Arc<FeatureIndex>, ApiError> {
        self.index
            .get()
            .cloned()
            .ok_or_else(|| ApiError(StatusCode::SERVICE_UNAVAILABLE, "index is still loading".into()))
    }
}

#[derive(Debug)]
pub struct ApiError(pub StatusCode, pub String);

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.0, Json(json!({ "error": self.1 }))).into_response()
    }
}

fn bad_request(msg: impl Into<String>) -> ApiError {
    ApiError(StatusCode::BAD_REQUEST, msg.into())
}

pub fn item_url(image_id: &str) -> String {
    format!("/api/items/{}", utf8_percent_encode(image_id, ID_SEGMENT))
}

pub fn thumbnail_url(image_id: &str) -> String {
    format!("{}/thumb", item_url(image_id))
}

#[derive(Debug, Serialize, Deserialize, PartialEq)]
#[serde(rename_all = "camelCase")]
pub struct ResultItem {
    pub image_id: String,
    pub distance: f64,
    pub class_label: String,
    pub thumbnail_url: String,
}

#[derive(Debug, Serialize, Deserialize, PartialEq)]
#[serde(rename_all = "camelCase")]
pub struct QueryEcho {
    pub width: u32,
    pub height: u32,
    pub k: usize,
    pub extraction_ms: f64,
}

#[derive(Debug, Serialize, Deserialize, PartialEq)]
#[serde(rename_all = "camelCase")]
pub struct QueryResponse {
    pub query: QueryEcho,
    pub results: Vec<ResultItem>,
}

#[derive(Debug, Deserialize)]
pub struct QueryParams {
    k: Option<String>,
}

async fn read_upload(multipart: &mut Multipart, limit: usize) -> Result<Vec<u8>, ApiError> {
    while let Some(mut field) = multipart.next_field().await.map_err(|e| bad_request(e.body_text()))? {
        if field.name() != Some("image") && field.file_name().is_none() {
            continue;
        }
        let mut data = Vec::new();
        while let Some(chunk) = field.chunk().await.map_err(|e| bad_request(e.body_text()))? {
            if data.len() + chunk.len() > limit {
                return Err(bad_request(format!("upload exceeds {limit} bytes")));
            }
            data.extend_from_slice(&chunk);
        }
        if data.is_empty() {
            return Err(bad_request("uploaded image is empty"));
        }
        return Ok(data);
    }
    Err(bad_request("expected a multipart field named \"image\""))
}

async fn query_handler(
    State(state): State<Arc<AppState>>,
    Query(params): Query<QueryParams>,
    mut multipart: Multipart,
) -> Result<Json<QueryResponse>, ApiError> {
    let k = match params.k.as_deref() {
        None => state.default_k,
        Some(raw) => raw.parse::<usize>().map_err(|_| bad_request(format!("k must be an integer, got {raw:?}")))?,
    };
    if !(1..=MAX_K).contains(&k) {
        return Err(bad_request(format!("k must lie in 1..={MAX_K}")));
    }
    let index = state.index()?;
    let bytes = read_upload(&mut multipart, state.max_upload_bytes).await?;

    let ranked = tokio::task::spawn_blocking(move || {
        let start = Instant::now();
        query_index(&index, &bytes, k).map(|(img, result)| (img, result, start.elapsed()))
    })
    .await
    .map_err(|e| ApiError(StatusCode::INTERNAL_SERVER_ERROR, e.to_string()))?;
    let (img, result, elapsed) = ranked.map_err(|e| bad_request(e.to_string()))?;

    Ok(Json(QueryResponse {
        query: QueryEcho {
            width: img.width(),
            height: img.height(),
            k,
            extraction_ms: elapsed.as_secs_f64() * 1000.0,
        },
        results: result
            .hits
            .into_iter()
            .map(|h| ResultItem {
                thumbnail_url: thumbnail_url(&h.image_id),
                image_id: h.image_id,
                distance: h.distance,
                class_label: h.class_label,
            })
            .collect(),
    }))
}

async fn item_handler(
    State(state): State<Arc<AppState>>,
    UrlPath(id): UrlPath<String>,
) -> Result<Json<serde_json::Value>, ApiError> {
    let index = state.index()?;
    let entry = index
        .get(&id)
        .ok_or_else(|| ApiError(StatusCode::NOT_FOUND, format!("unknown image id {id:?}")))?;
    Ok(Json(json!({
        "imageId": entry.image_id,
        "classLabel": entry.class_label,
        "sourcePath": entry.source_path,
        "thumbnailUrl": thumbnail_url(&entry.image_id),
    })))
}

fn thumb_cache_path(dir: &Path, image_id: &str, size: u32) -> PathBuf {
    let digest = Sha256::digest(image_id.as_bytes());
    let hex: String = digest.iter().map(|b| format!("{b:02x}")).collect();
    dir.join(format!("{hex}_{size}.png"))
}

fn make_thumbnail(source: &Path, cache: &Path) -> Result<Vec<u8>, ApiError> {
    if let Ok(bytes) = std::fs::read(cache) {
        return Ok(bytes);
    }
    let internal = |e: regiongem::Error| ApiError(StatusCode::INTERNAL_SERVER_ERROR, e.to_string());
    let bytes = std::fs::read(source)
        .map_err(|e| ApiError(StatusCode::NOT_FOUND, format!("source image unavailable: {e}")))?;
    let thumb = decode_image(&bytes).and_then(|img| img.downscale(THUMB_SIZE)).map_err(internal)?;
    if let Some(dir) = cache.parent() {
        std::fs::create_dir_all(dir).map_err(|e| internal(e.into()))?;
    }
    // write to a temporary name first so concurrent readers never see a partial file
    let tmp = cache.with_extension(format!("{}.tmp", std::process::id()));
    save_png(&thumb, &tmp).map_err(internal)?;
    std::fs::rename(&tmp, cache).map_err(|e| internal(e.into()))?;
    std::fs::read(cache).map_err(|e| internal(e.into()))
}

async fn thumb_handler(State(state): State<Arc<AppState>>, UrlPath(id): UrlPath<String>) -> Result<Response, ApiError> {
    let index = state.index()?;
    let entry = index
        .get(&id)
        .ok_or_else(|| ApiError(StatusCode::NOT_FOUND, format!("unknown image id {id:?}")))?;
    let source = PathBuf::from(&entry.source_path);
    let cache = thumb_cache_path(&state.thumb_dir, &id, THUMB_SIZE);
    let bytes = tokio::task::spawn_blocking(move || make_thumbnail(&source, &cache))
        .await
        .map_err(|e| ApiError(StatusCode::INTERNAL_SERVER_ERROR, e.to_string()))??;
    Ok(([(header::CONTENT_TYPE, "image/png")], bytes).into_response())
}

async fn health_handler(State(state): State<Arc<AppState>>) -> Response {
    match state.index.get() {
        Some(index) => {
            let c = index.config();
            Json(json!({
                "status": "ok",
                "indexSize": index.len(),
                "binConfig": { "hueBins": c.hue_bins, "satBins": c.sat_bins, "valBins": c.val_bins },
                "formatVersion": index.format_version(),
            }))
            .into_response()
        }
        None => (StatusCode::SERVICE_UNAVAILABLE, Json(json!({ "status": "loading" }))).into_response(),
    }
}

pub fn router(state: Arc<AppState>, allow_origins: &[String]) -> anyhow::Result<Router> {
    // multipart framing adds a little on top of the image itself
    let body_limit = state.max_upload_bytes + 64 * 1024;
    let mut app = Router::new()
        .route("/api/query", post(query_handler))
        .route("/api/items/{id}", get(item_handler))
        .route("/api/items/{id}/thumb", get(thumb_handler))
        .route("/api/health", get(health_handler))
        .layer(DefaultBodyLimit::max(body_limit))
        .with_state(state);
    if !allow_origins.is_empty() {
        let origins = allow_origins
            .iter()
            .map(|o| HeaderValue::from_str(o))
            .collect::<Result<Vec<_>, _>>()?;
        app = app.layer(
            CorsLayer::new()
                .allow_origin(AllowOrigin::list(origins))
                .allow_methods([Method::GET, Method::POST])
                .allow_headers([header::CONTENT_TYPE]),
        );
    }
    Ok(app)
}

/// Binds, starts answering (503 until the index is loaded) and loads the
/// index in the background.
pub async fn serve(config: ServiceConfig) -> anyhow::Result<()> {
    config.validate()?;
    let state = Arc::new(AppState::new(&config));
    let app = router(state.clone(), &config.allow_origins)?;
    let listener = tokio::net::TcpListener::bind(&config.bind).await?;
    println!("listening on http://{}", listener.local_addr()?);

    let path = config.index_path.clone();
    let loader = tokio::task::spawn_blocking(move || load_index(&path));
    let server = axum::serve(listener, app).with_graceful_shutdown(async {
        let _ = tokio::signal::ctrl_c().await;
    });
    let server = tokio::spawn(async move { server.await });

    match loader.await? {
        Ok(index) => {
            println!("loaded {} entries from {}", index.len(), config.index_path.display());
            state.set_index(index);
        }
        Err(e) => {
            server.abort();
            anyhow::bail!("loading {}: {e}", config.index_path.display());
        }
    }
    server.await??;
    Ok(())
}
