//! HTTP API for correcting box files in a browser.
//!
//! A page is any PNG or TIFF in the root directory with a `.box` file of
//! the same stem next to it. Coordinates use the box-file convention
//! (origin at the bottom-left corner).

use std::path::{Component, Path, PathBuf};
use std::sync::Arc;

use anyhow::Context;
use axum::extract::{Path as UrlPath, State};
use axum::http::{header, StatusCode, Uri};
use axum::response::{Html, IntoResponse, Response};
use axum::routing::get;
use axum::{Json, Router};
use serde::{Deserialize, Serialize};

use handtess_core::boxfile::{parse_boxfile, serialize_boxfile, validate_boxes_in, BoxEntry, BoxFile};
use handtess_core::fsutil::write_atomic;
use handtess_core::geometry::BBox;
use handtess_core::imaging::{load_page, page_to_png};

const IMAGE_EXTS: [&str; 3] = ["png", "tif", "tiff"];

const PLACEHOLDER_PAGE: &str = "<!doctype html><title>handtess labeler</title>\
<p>No labeler assets configured. Start the service with <code>--assets DIR</code> \
or use the JSON API under <code>/api/pages</code>.</p>";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PageInfo {
    pub id: String,
    pub image_uri: String,
    pub box_uri: String,
    pub width: u32,
    pub height: u32,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BoxRecord {
    pub glyph: String,
    pub left: i32,
    pub bottom: i32,
    pub right: i32,
    pub top: i32,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct BoxPayload {
    pub entries: Vec<BoxRecord>,
}

impl From<&BoxFile> for BoxPayload {
    fn from(bf: &BoxFile) -> Self {
        let entries = bf
            .entries
            .iter()
            .map(|e| BoxRecord {
                glyph: e.glyph.to_string(),
                left: e.bbox.left,
                bottom: e.bbox.bottom,
                right: e.bbox.right,
                top: e.bbox.top,
            })
            .collect();
        BoxPayload { entries }
    }
}

/// A problem with one submitted entry.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ApiIssue {
    pub index: usize,
    pub kind: String,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IssueList {
    pub issues: Vec<ApiIssue>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SaveResponse {
    pub saved: usize,
    /// Findings that did not block the save.
    pub warnings: Vec<ApiIssue>,
}

#[derive(Debug)]
struct Labeler {
    root: PathBuf,
    assets: Option<PathBuf>,
}

#[derive(Debug)]
enum ApiError {
    NotFound(String),
    Invalid(Vec<ApiIssue>),
    Internal(String),
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        match self {
            ApiError::NotFound(m) => (StatusCode::NOT_FOUND, Json(serde_json::json!({ "error": m }))).into_response(),
            ApiError::Invalid(issues) => (StatusCode::UNPROCESSABLE_ENTITY, Json(IssueList { issues })).into_response(),
            ApiError::Internal(m) => {
                (StatusCode::INTERNAL_SERVER_ERROR, Json(serde_json::json!({ "error": m }))).into_response()
            }
        }
    }
}

impl Labeler {
    /// `(id, image path, box path)` for every pair, sorted by id.
    fn pairs(&self) -> std::io::Result<Vec<(String, PathBuf, PathBuf)>> {
        let mut out = Vec::new();
        for entry in std::fs::read_dir(&self.root)? {
            let path = entry?.path();
            let is_image = path
                .extension()
                .and_then(|e| e.to_str())
                .is_some_and(|e| IMAGE_EXTS.contains(&e.to_ascii_lowercase().as_str()));
            let Some(id) = path.file_stem().and_then(|s| s.to_str()) else { continue };
            let boxes = self.root.join(format!("{id}.box"));
            if is_image && path.is_file() && boxes.is_file() {
                out.push((id.to_string(), path.clone(), boxes));
            }
        }
        out.sort();
        out.dedup_by(|a, b| a.0 == b.0);
        Ok(out)
    }

    fn find(&self, id: &str) -> Result<(PathBuf, PathBuf), ApiError> {
        let pairs = self.pairs().map_err(|e| ApiError::Internal(format!("{}: {e}", self.root.display())))?;
        pairs
            .into_iter()
            .find(|(pid, _, _)| pid == id)
            .map(|(_, img, bx)| (img, bx))
            .ok_or_else(|| ApiError::NotFound(format!("no page {id:?}")))
    }
}

async fn blocking<T: Send + 'static>(f: impl FnOnce() -> Result<T, ApiError> + Send + 'static) -> Result<T, ApiError> {
    tokio::task::spawn_blocking(f).await.map_err(|e| ApiError::Internal(e.to_string()))?
}

async fn list_pages(State(s): State<Arc<Labeler>>) -> Result<Json<Vec<PageInfo>>, ApiError> {
    blocking(move || {
        let pairs = s.pairs().map_err(|e| ApiError::Internal(format!("{}: {e}", s.root.display())))?;
        pairs
            .into_iter()
            .map(|(id, img, _)| {
                let page = load_page(&img).map_err(|e| ApiError::Internal(e.to_string()))?;
                Ok(PageInfo {
                    image_uri: format!("/api/pages/{id}/image"),
                    box_uri: format!("/api/pages/{id}/boxes"),
                    width: page.width(),
                    height: page.height(),
                    id,
                })
            })
            .collect::<Result<Vec<_>, _>>()
            .map(Json)
    })
    .await
}

async fn page_image(State(s): State<Arc<Labeler>>, UrlPath(id): UrlPath<String>) -> Result<Response, ApiError> {
    blocking(move || {
        let (img, _) = s.find(&id)?;
        let page = load_page(&img).map_err(|e| ApiError::Internal(e.to_string()))?;
        Ok(([(header::CONTENT_TYPE, "image/png")], page_to_png(&page)).into_response())
    })
    .await
}

async fn get_boxes(State(s): State<Arc<Labeler>>, UrlPath(id): UrlPath<String>) -> Result<Json<BoxPayload>, ApiError> {
    blocking(move || {
        let (_, bx) = s.find(&id)?;
        let bytes = std::fs::read(&bx).map_err(|e| ApiError::Internal(format!("{}: {e}", bx.display())))?;
        let bf = parse_boxfile(&id, &bytes).map_err(|e| ApiError::Internal(format!("{}: {e}", bx.display())))?;
        Ok(Json(BoxPayload::from(&bf)))
    })
    .await
}

/// Converts a payload, collecting every entry that cannot be a box line.
fn to_boxfile(id: &str, payload: &BoxPayload) -> Result<BoxFile, Vec<ApiIssue>> {
    let mut issues = Vec::new();
    let mut entries = Vec::with_capacity(payload.entries.len());
    for (index, r) in payload.entries.iter().enumerate() {
        let mut chars = r.glyph.chars();
        let glyph = match (chars.next(), chars.next()) {
            (Some(c), None) if !c.is_whitespace() && !c.is_control() => Some(c),
            _ => {
                issues.push(ApiIssue {
                    index,
                    kind: "glyph".into(),
                    message: format!("glyph {:?} must be exactly one visible character", r.glyph),
                });
                None
            }
        };
        let bbox = match BBox::new(r.left, r.bottom, r.right, r.top) {
            Ok(b) => Some(b),
            Err(e) => {
                issues.push(ApiIssue { index, kind: "geometry".into(), message: e.to_string() });
                None
            }
        };
        if let (Some(glyph), Some(bbox)) = (glyph, bbox) {
            entries.push(BoxEntry { glyph, bbox });
        }
    }
    if issues.is_empty() {
        Ok(BoxFile { page_id: id.to_string(), entries })
    } else {
        Err(issues)
    }
}

async fn put_boxes(
    State(s): State<Arc<Labeler>>,
    UrlPath(id): UrlPath<String>,
    Json(payload): Json<BoxPayload>,
) -> Result<Json<SaveResponse>, ApiError> {
    blocking(move || {
        let (img, bx) = s.find(&id)?;
        let bf = to_boxfile(&id, &payload).map_err(ApiError::Invalid)?;
        let page = load_page(&img).map_err(|e| ApiError::Internal(e.to_string()))?;
        let (hard, soft): (Vec<_>, Vec<_>) =
            validate_boxes_in(&bf, page.width(), page.height()).into_iter().partition(|i| i.is_hard());
        let convert = |v: Vec<handtess_core::boxfile::Issue>| -> Vec<ApiIssue> {
            v.into_iter()
                .map(|i| {
                    let kind = serde_json::to_value(&i.kind)
                        .ok()
                        .and_then(|v| v.get("kind").and_then(|k| k.as_str()).map(String::from))
                        .unwrap_or_default();
                    ApiIssue { index: i.index, kind, message: i.message }
                })
                .collect()
        };
        if !hard.is_empty() {
            return Err(ApiError::Invalid(convert(hard)));
        }
        write_atomic(&bx, &serialize_boxfile(&bf)).map_err(|e| ApiError::Internal(format!("{}: {e}", bx.display())))?;
        Ok(Json(SaveResponse { saved: bf.entries.len(), warnings: convert(soft) }))
    })
    .await
}

/// A relative URL path made only of normal components.
fn safe_relative(path: &str) -> Option<PathBuf> {
    let p = Path::new(path.trim_start_matches('/'));
    p.components().all(|c| matches!(c, Component::Normal(_))).then(|| p.to_path_buf())
}

fn content_type(path: &Path) -> &'static str {
    match path.extension().and_then(|e| e.to_str()).unwrap_or("") {
        "html" => "text/html; charset=utf-8",
        "js" | "mjs" => "text/javascript",
        "css" => "text/css",
        "json" => "application/json",
        "svg" => "image/svg+xml",
        "png" => "image/png",
        "ico" => "image/x-icon",
        _ => "application/octet-stream",
    }
}

async fn static_asset(State(s): State<Arc<Labeler>>, uri: Uri) -> Response {
    let rel = match uri.path() {
        "/" => Some(PathBuf::from("index.html")),
        p => safe_relative(p),
    };
    let Some(assets) = &s.assets else {
        return if uri.path() == "/" {
            Html(PLACEHOLDER_PAGE).into_response()
        } else {
            StatusCode::NOT_FOUND.into_response()
        };
    };
    let Some(rel) = rel else { return StatusCode::NOT_FOUND.into_response() };
    let path = assets.join(rel);
    match tokio::fs::read(&path).await {
        Ok(bytes) => ([(header::CONTENT_TYPE, content_type(&path))], bytes).into_response(),
        Err(_) => StatusCode::NOT_FOUND.into_response(),
    }
}

/// The labeler API over `root`, serving static files from `assets`.
pub fn router(root: PathBuf, assets: Option<PathBuf>) -> Router {
    let state = Arc::new(Labeler { root, assets });
    Router::new()
        .route("/api/pages", get(list_pages))
        .route("/api/pages/{id}/image", get(page_image))
        .route("/api/pages/{id}/boxes", get(get_boxes).put(put_boxes))
        .fallback(static_asset)
        .with_state(state)
}

/// Binds `host:port` and serves until interrupted.
pub fn serve_blocking(host: &str, port: u16, root: PathBuf, assets: Option<PathBuf>) -> anyhow::Result<()> {
    if !root.is_dir() {
        anyhow::bail!("{}: not a directory", root.display());
    }
    let rt = tokio::runtime::Runtime::new().context("cannot start the async runtime")?;
    rt.block_on(async {
        let listener = tokio::net::TcpListener::bind((host, port))
            .await
            .with_context(|| format!("cannot listen on {host}:{port}"))?;
        eprintln!("serving {} on http://{}", root.display(), listener.local_addr()?);
        axum::serve(listener, router(root, assets))
            .with_graceful_shutdown(async {
                let _ = tokio::signal::ctrl_c().await;
            })
            .await
            .context("server failed")
    })
}
