//! Read-only HTTP service for one scene directory.
//!
//! Every payload is loaded at startup and never changes, so each response
//! carries a content hash as its `ETag` and is marked immutable.

use std::collections::BTreeMap;
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use anyhow::Context;
use axum::body::Body;
use axum::extract::{Path as UrlPath, State};
use axum::http::{header, HeaderMap, HeaderValue, StatusCode};
use axum::response::{Html, IntoResponse, Response};
use axum::routing::get;
use axum::Router;
use sha2::{Digest, Sha256};
use tower_http::cors::CorsLayer;
use tower_http::services::ServeDir;
use twin_core::replay::LoadedScene;

const CACHE_CONTROL: &str = "public, max-age=31536000, immutable";
const OCTET_STREAM: &str = "application/octet-stream";

#[derive(Debug, Clone)]
pub struct ServeConfig {
    pub bind: String,
    pub port: u16,
    pub scene_root: PathBuf,
    pub cors: bool,
    /// Built viewer assets served under `/`.
    pub viewer_dir: Option<PathBuf>,
}

#[derive(Debug, Clone)]
struct Payload {
    bytes: Arc<[u8]>,
    etag: HeaderValue,
    content_type: &'static str,
}

impl Payload {
    fn new(bytes: Vec<u8>, content_type: &'static str) -> Self {
        let digest = Sha256::digest(&bytes);
        let hex: String = digest.iter().map(|b| format!("{b:02x}")).collect();
        let etag = HeaderValue::from_str(&format!("\"{hex}\"")).expect("hex is a valid header value");
        Self { bytes: bytes.into(), etag, content_type }
    }

    fn respond(&self, request: &HeaderMap) -> Response {
        let not_modified = request
            .get(header::IF_NONE_MATCH)
            .and_then(|v| v.to_str().ok())
            .is_some_and(|v| v.split(',').any(|tag| tag.trim() == self.etag || tag.trim() == "*"));
        let status = if not_modified { StatusCode::NOT_MODIFIED } else { StatusCode::OK };
        let body = if not_modified { Body::empty() } else { Body::from(self.bytes.to_vec()) };
        let mut response = (status, body).into_response();
        let h = response.headers_mut();
        h.insert(header::CONTENT_TYPE, HeaderValue::from_static(self.content_type));
        h.insert(header::ETAG, self.etag.clone());
        h.insert(header::CACHE_CONTROL, HeaderValue::from_static(CACHE_CONTROL));
        response
    }
}

/// All served bytes of a scene, exactly as stored on disk.
#[derive(Debug)]
pub struct SceneAssets {
    manifest: Payload,
    frames: Vec<Payload>,
    trajectories: BTreeMap<String, Payload>,
    meshes: BTreeMap<String, Payload>,
}

impl SceneAssets {
    pub fn load(root: &Path) -> anyhow::Result<Self> {
        let scene = LoadedScene::open(root).with_context(|| format!("loading scene {}", root.display()))?;
        let frames =
            (0..scene.frame_count()).map(|i| scene.read_frame(i).map(|b| Payload::new(b, OCTET_STREAM))).collect::<Result<_, _>>()?;
        let trajectories = scene.instrument.iter().map(|t| (t.id.clone(), Payload::new(t.strj.clone(), OCTET_STREAM))).collect();
        let meshes =
            scene.meshes.iter().map(|m| (m.id.clone(), Payload::new(m.obj.clone().into_bytes(), "text/plain; charset=utf-8"))).collect();
        Ok(Self { manifest: Payload::new(scene.manifest_bytes, "application/json"), frames, trajectories, meshes })
    }
}

fn not_found(what: String) -> Response {
    (StatusCode::NOT_FOUND, what).into_response()
}

async fn manifest(State(assets): State<Arc<SceneAssets>>, headers: HeaderMap) -> Response {
    assets.manifest.respond(&headers)
}

async fn frame(State(assets): State<Arc<SceneAssets>>, UrlPath(index): UrlPath<String>, headers: HeaderMap) -> Response {
    let Ok(i) = index.parse::<u32>() else {
        return (StatusCode::BAD_REQUEST, format!("frame index must be a non-negative integer, got {index:?}")).into_response();
    };
    match assets.frames.get(i as usize) {
        Some(p) => p.respond(&headers),
        None => not_found(format!("frame {i} out of range (frame_count {})", assets.frames.len())),
    }
}

async fn trajectory(State(assets): State<Arc<SceneAssets>>, UrlPath(id): UrlPath<String>, headers: HeaderMap) -> Response {
    match assets.trajectories.get(&id) {
        Some(p) => p.respond(&headers),
        None => not_found(format!("no trajectory for entity {id:?}")),
    }
}

async fn mesh(State(assets): State<Arc<SceneAssets>>, UrlPath(id): UrlPath<String>, headers: HeaderMap) -> Response {
    match assets.meshes.get(&id) {
        Some(p) => p.respond(&headers),
        None => not_found(format!("no mesh entity {id:?}")),
    }
}

async fn index() -> Html<&'static str> {
    Html(concat!(
        "<!doctype html><title>twin scene server</title><h1>twin scene server</h1><ul>",
        "<li><a href=\"/api/manifest\">/api/manifest</a></li>",
        "<li>/api/frames/{i}</li><li>/api/trajectory/{entity}</li><li>/api/mesh/{entity}</li></ul>",
    ))
}

pub fn router(assets: Arc<SceneAssets>, cors: bool, viewer_dir: Option<&Path>) -> Router {
    let api = Router::new()
        .route("/api/manifest", get(manifest))
        .route("/api/frames/{i}", get(frame))
        .route("/api/trajectory/{entity}", get(trajectory))
        .route("/api/mesh/{entity}", get(mesh))
        .with_state(assets);
    let app = match viewer_dir {
        Some(dir) => api.fallback_service(ServeDir::new(dir)),
        None => api.route("/", get(index)),
    };
    if cors {
        app.layer(CorsLayer::permissive())
    } else {
        app
    }
}

pub async fn serve(config: ServeConfig) -> anyhow::Result<()> {
    let assets = Arc::new(SceneAssets::load(&config.scene_root)?);
    let app = router(assets, config.cors, config.viewer_dir.as_deref());
    let addr: SocketAddr = format!("{}:{}", config.bind, config.port).parse().context("invalid bind address")?;
    let listener = tokio::net::TcpListener::bind(addr).await.with_context(|| format!("binding {addr}"))?;
    log::info!("serving {} on http://{}", config.scene_root.display(), listener.local_addr()?);
    axum::serve(listener, app).await?;
    Ok(())
}
