//! Read-only HTTP service over an immutable dataset snapshot.
//!
//! Each handler takes one [`Arc`] of the current snapshot and computes its
//! whole response from it; reloading swaps the `Arc`. Every response built
//! from a snapshot carries `X-Dataset-Build`, and every 2xx response carries
//! `X-Schema-Version`.

use std::collections::BTreeMap;
use std::net::SocketAddr;
use std::sync::{Arc, RwLock};

use axum::body::Body;
use axum::extract::connect_info::ConnectInfo;
use axum::extract::{Path, RawQuery, Request, State};
use axum::http::{header, HeaderValue, Method, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::Router;
use chrono::{DateTime, Utc};
use serde::Serialize;
use serde_json::json;
use tower_http::cors::{Any, CorsLayer};

use crate::diffusion::{render_zone_png, ZoneMetadata, ZoneRaster};
use crate::export::NarrativeDoc;
use crate::facet::{FacetIndex, FilterSet};
use crate::feeds::{rfc3339, to_atom, to_geojson, to_json_bytes, to_kml, FeedFormat};
use crate::model::DatasetManifest;
use crate::qr::{encode_qr, render_qr_png, EccLevel, DEFAULT_QUIET_MODULES};
use crate::workspace::{Workspace, WorkspaceError};

/// Bumped only on breaking changes to routes or bodies.
pub const SCHEMA_VERSION: &str = "1";
pub const SCHEMA_HEADER: &str = "x-schema-version";
pub const BUILD_HEADER: &str = "x-dataset-build";
const PROBLEM_MEDIA_TYPE: &str = "application/problem+json";
const CODE_MODULE_PX: usize = 8;

pub struct ServiceSnapshot {
    pub manifest: DatasetManifest,
    pub index: FacetIndex,
    pub zones: Option<ZoneRaster>,
    pub build_time: DateTime<Utc>,
    /// article id -> canonical URL
    pub articles: BTreeMap<String, Option<String>>,
    zone_png: Option<Vec<u8>>,
    build_tag: HeaderValue,
}

impl ServiceSnapshot {
    pub fn new(
        manifest: DatasetManifest,
        index: FacetIndex,
        zones: Option<ZoneRaster>,
        build_time: DateTime<Utc>,
        articles: BTreeMap<String, Option<String>>,
    ) -> Self {
        let zone_png = zones.as_ref().map(render_zone_png);
        let build_tag = HeaderValue::from_str(&rfc3339(&build_time)).expect("RFC 3339 is a valid header");
        ServiceSnapshot { manifest, index, zones, build_time, articles, zone_png, build_tag }
    }

    /// Loads dataset, zones and article list from a workspace.
    pub fn from_workspace(ws: &Workspace, build_time: DateTime<Utc>) -> Result<Self, WorkspaceError> {
        let (mut manifest, features) = ws.load_dataset()?;
        let zones = ws.load_zones(&features)?;
        manifest.record_count = features.len();
        let index = FacetIndex::build(features)?;
        let articles = ws
            .articles()?
            .into_iter()
            .map(|(id, doc): (String, NarrativeDoc)| (id, doc.canonical_url))
            .collect();
        Ok(Self::new(manifest, index, zones, build_time, articles))
    }
}

pub type Loader = Arc<dyn Fn() -> Result<ServiceSnapshot, String> + Send + Sync>;

pub struct AppState {
    snapshot: RwLock<Arc<ServiceSnapshot>>,
    loader: Option<Loader>,
    /// Public root used for feed self links, without a trailing slash.
    public_url: String,
}

impl AppState {
    pub fn new(snapshot: ServiceSnapshot, public_url: &str, loader: Option<Loader>) -> Arc<Self> {
        Arc::new(AppState {
            snapshot: RwLock::new(Arc::new(snapshot)),
            loader,
            public_url: public_url.trim_end_matches('/').to_string(),
        })
    }

    pub fn current(&self) -> Arc<ServiceSnapshot> {
        self.snapshot.read().expect("snapshot lock poisoned").clone()
    }

    /// Builds a new snapshot with the loader and publishes it atomically.
    pub fn reload(&self) -> Result<Arc<ServiceSnapshot>, String> {
        let loader = self.loader.as_ref().ok_or("no loader configured")?;
        let next = Arc::new(loader()?);
        *self.snapshot.write().expect("snapshot lock poisoned") = next.clone();
        Ok(next)
    }
}

pub fn router(state: Arc<AppState>) -> Router {
    let cors = CorsLayer::new().allow_origin(Any).allow_methods([Method::GET]);
    Router::new()
        .route("/api/manifest", get(manifest))
        .route("/api/search", get(search))
        .route("/api/records/{id}", get(record))
        .route("/feeds/{format}", get(feed))
        .route("/api/zones", get(zones_meta))
        .route("/api/zones.png", get(zones_png))
        .route("/codes/{file}", get(code))
        .route("/admin/reload", post(reload))
        .fallback(not_found)
        .layer(axum::middleware::map_response(schema_header))
        .layer(cors)
        .with_state(state)
}

async fn schema_header(mut res: Response) -> Response {
    if res.status().is_success() {
        res.headers_mut().insert(SCHEMA_HEADER, HeaderValue::from_static(SCHEMA_VERSION));
    }
    res
}

fn respond(snap: &ServiceSnapshot, status: StatusCode, media_type: &str, body: Vec<u8>) -> Response {
    let mut res = Response::new(Body::from(body));
    *res.status_mut() = status;
    let h = res.headers_mut();
    h.insert(header::CONTENT_TYPE, HeaderValue::from_str(media_type).expect("static media type"));
    h.insert(BUILD_HEADER, snap.build_tag.clone());
    res
}

fn json_ok<T: Serialize>(snap: &ServiceSnapshot, value: &T) -> Response {
    respond(snap, StatusCode::OK, "application/json", to_json_bytes(value))
}

fn problem(status: StatusCode, detail: &str, param: Option<&str>) -> Vec<u8> {
    let mut body = json!({
        "type": "about:blank",
        "title": status.canonical_reason().unwrap_or(""),
        "status": status.as_u16(),
        "detail": detail,
    });
    if let Some(p) = param {
        body["param"] = json!(p);
    }
    to_json_bytes(&body)
}

fn problem_response(snap: Option<&ServiceSnapshot>, status: StatusCode, detail: &str, param: Option<&str>) -> Response {
    let body = problem(status, detail, param);
    match snap {
        Some(s) => respond(s, status, PROBLEM_MEDIA_TYPE, body),
        None => (status, [(header::CONTENT_TYPE, PROBLEM_MEDIA_TYPE)], body).into_response(),
    }
}

async fn not_found() -> Response {
    problem_response(None, StatusCode::NOT_FOUND, "no such route", None)
}

#[derive(Serialize)]
struct ManifestBody<'a> {
    #[serde(flatten)]
    manifest: &'a DatasetManifest,
    build_time: String,
}

async fn manifest(State(state): State<Arc<AppState>>) -> Response {
    let snap = state.current();
    json_ok(&snap, &ManifestBody { manifest: &snap.manifest, build_time: rfc3339(&snap.build_time) })
}

#[derive(Serialize)]
struct RecordSummary<'a> {
    id: &'a str,
    uri: String,
    locus_id: &'a str,
    locus_name: &'a str,
    tomb_type: &'a str,
    context: &'a str,
    affiliation: &'a str,
    lat: f64,
    lon: f64,
}

async fn search(State(state): State<Arc<AppState>>, RawQuery(q): RawQuery) -> Response {
    let snap = state.current();
    let (filters, paging) = match FilterSet::parse_query(q.as_deref().unwrap_or("")) {
        Ok(v) => v,
        Err(e) => return problem_response(Some(&snap), StatusCode::BAD_REQUEST, &e.to_string(), Some(&e.param)),
    };
    let page = match snap.index.query(&filters, paging.page, paging.per_page) {
        Ok(p) => p,
        Err(e) => return problem_response(Some(&snap), StatusCode::BAD_REQUEST, &e.to_string(), None),
    };
    let mut matches = Vec::with_capacity(page.matches.len());
    for id in &page.matches {
        let Some(doc) = snap.index.get(id) else { continue };
        let f = &doc.feature;
        let uri = match snap.manifest.record_uri(id) {
            Ok(u) => u,
            Err(e) => return problem_response(Some(&snap), StatusCode::INTERNAL_SERVER_ERROR, &e.to_string(), None),
        };
        matches.push(RecordSummary {
            id,
            uri,
            locus_id: &f.locus_id,
            locus_name: &f.locus_name,
            tomb_type: f.tomb_type.as_str(),
            context: f.context.as_str(),
            affiliation: doc.affiliation.as_str(),
            lat: f.location.lat(),
            lon: f.location.lon(),
        });
    }
    json_ok(
        &snap,
        &json!({
            "total": page.total,
            "page": page.page,
            "per_page": page.per_page,
            "matches": matches,
            "facet_counts": page.facet_counts,
        }),
    )
}

async fn record(State(state): State<Arc<AppState>>, Path(id): Path<String>) -> Response {
    let snap = state.current();
    let Some(doc) = snap.index.get(&id) else {
        return problem_response(Some(&snap), StatusCode::NOT_FOUND, &format!("no record {id}"), None);
    };
    let f = &doc.feature;
    let uri = match snap.manifest.record_uri(&id) {
        Ok(u) => u,
        Err(e) => return problem_response(Some(&snap), StatusCode::INTERNAL_SERVER_ERROR, &e.to_string(), None),
    };
    json_ok(
        &snap,
        &json!({
            "id": f.id,
            "uri": uri,
            "locus_id": f.locus_id,
            "locus_name": f.locus_name,
            "tomb_type": f.tomb_type.as_str(),
            "context": f.context.as_str(),
            "lat": f.location.lat(),
            "lon": f.location.lon(),
            "elevation_m": f.elevation_m,
            "has_inscription": f.has_inscription,
            "has_photos": f.has_photos(),
            "photo_urls": f.photo_urls,
            "recorded_affiliation": f.affiliation.map(|a| a.as_str()),
            "affiliation": doc.affiliation.as_str(),
            "gazetteer_uri": f.gazetteer_uri,
        }),
    )
}

async fn feed(State(state): State<Arc<AppState>>, Path(format): Path<String>, RawQuery(q): RawQuery) -> Response {
    let snap = state.current();
    let Some(fmt) = FeedFormat::from_name(&format) else {
        return problem_response(
            Some(&snap),
            StatusCode::BAD_REQUEST,
            &format!("unknown feed format {format:?}; expected atom, kml or geojson"),
            Some("format"),
        );
    };
    let (filters, paging) = match FilterSet::parse_query(q.as_deref().unwrap_or("")) {
        Ok(v) => v,
        Err(e) => return problem_response(Some(&snap), StatusCode::BAD_REQUEST, &e.to_string(), Some(&e.param)),
    };
    let page = match snap.index.query(&filters, paging.page, paging.per_page) {
        Ok(p) => p,
        Err(e) => return problem_response(Some(&snap), StatusCode::BAD_REQUEST, &e.to_string(), None),
    };
    let doc = match fmt {
        FeedFormat::GeoJson => to_geojson(&page, &snap.manifest, &snap.index),
        FeedFormat::Kml => to_kml(&page, &snap.manifest, &snap.index),
        FeedFormat::Atom => {
            let mut query = filters.to_query_string();
            if !query.is_empty() {
                query.push('&');
            }
            query.push_str(&format!("page={}&per_page={}", paging.page, paging.per_page));
            let self_url = format!("{}/feeds/atom?{query}", state.public_url);
            to_atom(&page, &snap.manifest, &snap.index, &self_url, &snap.build_time)
        }
    };
    match doc {
        Ok(d) => respond(&snap, StatusCode::OK, d.media_type, d.body),
        Err(e) => problem_response(Some(&snap), StatusCode::INTERNAL_SERVER_ERROR, &e.to_string(), None),
    }
}

async fn zones_meta(State(state): State<Arc<AppState>>) -> Response {
    let snap = state.current();
    match &snap.zones {
        Some(z) => {
            let link = format!("{}/api/zones.png", state.public_url);
            json_ok(&snap, &ZoneMetadata::describe(z, &link))
        }
        None => problem_response(Some(&snap), StatusCode::NOT_FOUND, "no zones computed", None),
    }
}

async fn zones_png(State(state): State<Arc<AppState>>) -> Response {
    let snap = state.current();
    match &snap.zone_png {
        Some(png) => respond(&snap, StatusCode::OK, "image/png", png.clone()),
        None => problem_response(Some(&snap), StatusCode::NOT_FOUND, "no zones computed", None),
    }
}

async fn code(State(state): State<Arc<AppState>>, Path(file): Path<String>) -> Response {
    let snap = state.current();
    let not_found = |snap: &ServiceSnapshot, what: &str| {
        problem_response(Some(snap), StatusCode::NOT_FOUND, &format!("no record or article {what}"), None)
    };
    let Some(id) = file.strip_suffix(".png") else {
        return not_found(&snap, &file);
    };
    let target = if snap.index.get(id).is_some() {
        snap.manifest.record_uri(id).ok()
    } else {
        snap.articles.get(id).cloned().flatten()
    };
    let Some(target) = target else {
        return not_found(&snap, id);
    };
    match encode_qr(&target, EccLevel::M).and_then(|m| render_qr_png(&m, CODE_MODULE_PX, DEFAULT_QUIET_MODULES)) {
        Ok(png) => respond(&snap, StatusCode::OK, "image/png", png),
        Err(e) => problem_response(Some(&snap), StatusCode::UNPROCESSABLE_ENTITY, &e.to_string(), None),
    }
}

async fn reload(State(state): State<Arc<AppState>>, req: Request) -> Response {
    let peer = req.extensions().get::<ConnectInfo<SocketAddr>>().map(|c| c.0);
    if !peer.is_some_and(|p| p.ip().is_loopback()) {
        return problem_response(None, StatusCode::FORBIDDEN, "reload is only accepted from loopback", None);
    }
    let state = state.clone();
    match tokio::task::spawn_blocking(move || state.reload()).await {
        Ok(Ok(snap)) => json_ok(
            &snap,
            &json!({ "build_time": rfc3339(&snap.build_time), "record_count": snap.manifest.record_count }),
        ),
        Ok(Err(e)) => problem_response(None, StatusCode::INTERNAL_SERVER_ERROR, &e, None),
        Err(e) => problem_response(None, StatusCode::INTERNAL_SERVER_ERROR, &e.to_string(), None),
    }
}

/// Serves until `shutdown` resolves. Peer addresses are recorded so the
/// reload route can check for loopback.
pub async fn serve(
    listener: tokio::net::TcpListener,
    state: Arc<AppState>,
    shutdown: impl std::future::Future<Output = ()> + Send + 'static,
) -> std::io::Result<()> {
    axum::serve(listener, router(state).into_make_service_with_connect_info::<SocketAddr>())
        .with_graceful_shutdown(shutdown)
        .await
}
