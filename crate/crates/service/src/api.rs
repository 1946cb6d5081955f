//! Read-only HTTP API over one loaded index snapshot.

use std::collections::HashMap;
use std::path::{Component, Path, PathBuf};
use std::sync::{Arc, RwLock};

use axum::body::Body;
use axum::extract::{Path as UrlPath, Query, State};
use axum::http::{header, HeaderValue, StatusCode, Uri};
use axum::response::{IntoResponse, Response};
use axum::routing::get;
use axum::{Json, Router};
use chrono::{DateTime, Utc};
use serde::Serialize;
use serde_json::{json, Value};

use chronodiff::analytics::{categorize_terms, top_deleted_terms, CategoryLists, Weighting};
use chronodiff::diff::{build_animation, plan_animation, sliding_entry, AnimationTiming, RegionKind};
use chronodiff::index::{ChangeIndex, IndexError};
use chronodiff::ingest::{canonicalize_url, format_rfc1123, format_timestamp14};
use chronodiff::query::{execute_with, ChangeQuery, ChangeType, ExecuteOptions, Mark, QueryError, SearchHit, VersionRef};
use chronodiff::replay::closest_memento;
use chronodiff::temporal::VersionChain;

use crate::params::{parse_bool, parse_time};

pub const API_VERSION: &str = "1";

#[derive(Debug, Clone)]
pub struct ApiConfig {
    pub page_size: usize,
    pub snippet_context: usize,
    pub timing: AnimationTiming,
    /// Directory of static UI assets served for non-API paths.
    pub static_dir: Option<PathBuf>,
}

impl Default for ApiConfig {
    fn default() -> Self {
        ApiConfig { page_size: 10, snippet_context: 10, timing: AnimationTiming::default(), static_dir: None }
    }
}

/// An immutable loaded index plus the lists used for categorization.
pub struct Snapshot {
    pub index: ChangeIndex,
    pub categories: CategoryLists,
}

pub struct AppState {
    pub config: ApiConfig,
    snapshot: RwLock<Option<Arc<Snapshot>>>,
}

impl AppState {
    pub fn new(config: ApiConfig, snapshot: Option<Snapshot>) -> Arc<Self> {
        Arc::new(AppState { config, snapshot: RwLock::new(snapshot.map(Arc::new)) })
    }

    /// Replaces the served snapshot. Requests in flight keep the one they
    /// started with.
    pub fn install(&self, snapshot: Snapshot) {
        *self.snapshot.write().expect("snapshot lock") = Some(Arc::new(snapshot));
    }

    /// Loads an index directory and installs it; the old snapshot stays on error.
    pub fn reload(&self, dir: &Path, categories: CategoryLists) -> Result<(), IndexError> {
        let index = ChangeIndex::load(dir)?;
        self.install(Snapshot { index, categories });
        Ok(())
    }

    pub fn snapshot(&self) -> Option<Arc<Snapshot>> {
        self.snapshot.read().expect("snapshot lock").clone()
    }

    fn current(&self) -> Result<Arc<Snapshot>, ApiError> {
        self.snapshot().ok_or_else(|| ApiError::new(StatusCode::SERVICE_UNAVAILABLE, "IndexUnavailable", "no index is loaded"))
    }
}

#[derive(Debug)]
pub struct ApiError {
    status: StatusCode,
    code: &'static str,
    message: String,
}

impl ApiError {
    fn new(status: StatusCode, code: &'static str, message: impl Into<String>) -> Self {
        ApiError { status, code, message: message.into() }
    }

    fn bad(code: &'static str, message: impl Into<String>) -> Self {
        Self::new(StatusCode::BAD_REQUEST, code, message)
    }

    fn not_found(code: &'static str, message: impl Into<String>) -> Self {
        Self::new(StatusCode::NOT_FOUND, code, message)
    }
}

impl From<QueryError> for ApiError {
    fn from(e: QueryError) -> Self {
        ApiError::bad(e.code(), e.to_string())
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let body = json!({ "apiVersion": API_VERSION, "error": { "code": self.code, "message": self.message } });
        (self.status, Json(body)).into_response()
    }
}

type Params = Query<HashMap<String, String>>;
type ApiResult<T> = Result<T, ApiError>;

fn required<'a>(p: &'a HashMap<String, String>, name: &str) -> ApiResult<&'a str> {
    p.get(name)
        .map(String::as_str)
        .filter(|v| !v.is_empty())
        .ok_or_else(|| ApiError::bad("MissingParameter", format!("missing parameter {name:?}")))
}

fn time_param(p: &HashMap<String, String>, name: &str) -> ApiResult<Option<DateTime<Utc>>> {
    match p.get(name).filter(|v| !v.is_empty()) {
        None => Ok(None),
        Some(v) => parse_time(v).map(Some).ok_or_else(|| ApiError::bad("InvalidDatetime", format!("{name}={v:?} is not a datetime"))),
    }
}

fn number_param(p: &HashMap<String, String>, name: &str, default: usize, min: usize) -> ApiResult<usize> {
    match p.get(name).filter(|v| !v.is_empty()) {
        None => Ok(default),
        Some(v) => v
            .parse::<usize>()
            .ok()
            .filter(|n| *n >= min)
            .ok_or_else(|| ApiError::bad("InvalidParameter", format!("{name}={v:?} must be an integer >= {min}"))),
    }
}

fn chain_param<'a>(snap: &'a Snapshot, p: &HashMap<String, String>) -> ApiResult<(u32, &'a VersionChain)> {
    let raw = required(p, "url")?;
    let canon = canonicalize_url(raw).map_err(|_| ApiError::bad("InvalidUrl", format!("{raw:?} is not a URL")))?;
    let id = snap.index.chain_id(&canon).ok_or_else(|| ApiError::not_found("UnknownUrl", format!("no versions of {raw}")))?;
    Ok((id, snap.index.chain(id).expect("id from index")))
}

fn enc(s: &str) -> String {
    url::form_urlencoded::byte_serialize(s.as_bytes()).collect()
}

pub fn replay_link(uri_r: &str, t: DateTime<Utc>) -> String {
    format!("/replay/{}/{}", format_timestamp14(&t), uri_r)
}

#[derive(Serialize)]
#[serde(rename_all = "camelCase")]
struct HitLinks {
    replay_pre: String,
    replay_post: String,
    replay_addition: Option<String>,
    slide: String,
    animate: String,
}

#[derive(Serialize)]
#[serde(rename_all = "camelCase")]
struct HitView<'a> {
    #[serde(flatten)]
    hit: &'a SearchHit,
    links: HitLinks,
}

fn links(hit: &SearchHit) -> HitLinks {
    let url = enc(hit.canonical_url.as_str());
    let (pre, post) = (&hit.pre_change, &hit.post_change);
    HitLinks {
        replay_pre: replay_link(&pre.uri_r, pre.last_capture),
        replay_post: replay_link(&post.uri_r, post.first_capture),
        replay_addition: hit.addition_version.as_ref().map(|v| replay_link(&v.uri_r, v.first_capture)),
        slide: format!("/api/slide?url={url}&i={}", hit.transition),
        animate: format!(
            "/api/animate?url={url}&t1={}&t2={}",
            format_timestamp14(&pre.last_capture),
            format_timestamp14(&post.first_capture)
        ),
    }
}

/// Parses search parameters into a query.
pub fn search_query(p: &HashMap<String, String>) -> ApiResult<ChangeQuery> {
    let kind: ChangeType = required(p, "type")?.parse()?;
    let text = p.get("q").cloned().unwrap_or_default();
    let mut q = ChangeQuery::new(kind, text);
    if let Some(v) = p.get("partial").filter(|v| !v.is_empty()) {
        q.include_partial = parse_bool(v).ok_or_else(|| ApiError::bad("InvalidParameter", format!("partial={v:?}")))?;
    }
    q.from = time_param(p, "from")?;
    q.to = time_param(p, "to")?;
    q.domain = p.get("domain").filter(|d| !d.trim().is_empty()).cloned();
    q.tokens()?;
    Ok(q)
}

async fn search(State(st): State<Arc<AppState>>, Query(p): Params) -> ApiResult<Json<Value>> {
    let snap = st.current()?;
    let q = search_query(&p)?;
    let page = number_param(&p, "page", 1, 1)?;
    let page_size = number_param(&p, "pageSize", st.config.page_size, 1)?;
    let hits = execute_with(&q, &snap.index, ExecuteOptions { snippet_context: st.config.snippet_context })?;
    let views: Vec<HitView> = hits
        .iter()
        .skip((page - 1).saturating_mul(page_size))
        .take(page_size)
        .map(|h| HitView { hit: h, links: links(h) })
        .collect();
    Ok(Json(json!({
        "apiVersion": API_VERSION,
        "query": q,
        "total": hits.len(),
        "page": page,
        "pageSize": page_size,
        "hits": views,
    })))
}

async fn versions(State(st): State<Arc<AppState>>, Query(p): Params) -> ApiResult<Json<Value>> {
    let snap = st.current()?;
    let (chain_id, chain) = chain_param(&snap, &p)?;
    let versions: Vec<Value> = chain
        .versions
        .iter()
        .map(|v| {
            json!({
                "versionIndex": v.version_index,
                "validity": {
                    "start": format_timestamp14(&v.validity.start),
                    "end": v.validity.end.map(|e| format_timestamp14(&e)),
                },
                "members": v.members,
                "replay": replay_link(&v.members[0].uri_r, v.first_capture()),
            })
        })
        .collect();
    let transitions: Vec<Value> = chain
        .transitions
        .iter()
        .enumerate()
        .map(|(k, t)| {
            json!({
                "index": k,
                "changeInterval": t.change_interval,
                "identical": t.is_empty(),
                "addedTerms": t.added_terms.len() + t.partially_added_terms.len(),
                "removedTerms": t.removed_terms.len() + t.partially_removed_terms.len(),
            })
        })
        .collect();
    Ok(Json(json!({
        "apiVersion": API_VERSION,
        "chainId": chain_id,
        "canonicalUrl": chain.canonical_url,
        "versions": versions,
        "transitions": transitions,
        "identicalSkip": chain.transitions.iter().map(|t| t.is_empty()).collect::<Vec<_>>(),
    })))
}

#[derive(Serialize)]
struct Segment<'a> {
    mark: Mark,
    text: &'a str,
}

async fn slide(State(st): State<Arc<AppState>>, Query(p): Params) -> ApiResult<Json<Value>> {
    let snap = st.current()?;
    let (_, chain) = chain_param(&snap, &p)?;
    let i = number_param(&p, "i", 0, 0)?;
    let entry = sliding_entry(chain, i)
        .ok_or_else(|| ApiError::not_found("UnknownVersion", format!("no transition {i}; chain has {}", chain.transitions.len())))?;
    let pre = &chain.versions[i].doc.tokens;
    let mut segments = Vec::new();
    for r in &entry.script.regions {
        match r.kind {
            RegionKind::Keep => segments.extend(pre[r.a.clone()].iter().map(|t| Segment { mark: Mark::Kept, text: t })),
            _ => {
                segments.extend(r.deleted.iter().map(|t| Segment { mark: Mark::Deleted, text: t }));
                segments.extend(r.inserted.iter().map(|t| Segment { mark: Mark::Added, text: t }));
            }
        }
    }
    Ok(Json(json!({
        "apiVersion": API_VERSION,
        "canonicalUrl": chain.canonical_url,
        "index": i,
        "total": chain.transitions.len(),
        "from": VersionRef::of(&chain.versions[i]),
        "to": VersionRef::of(&chain.versions[i + 1]),
        "identical": entry.identical,
        "changeInterval": chain.transitions[i].change_interval,
        "regions": entry.script.regions,
        "segments": segments,
    })))
}

async fn animate(State(st): State<Arc<AppState>>, Query(p): Params) -> ApiResult<Response> {
    let snap = st.current()?;
    let (_, chain) = chain_param(&snap, &p)?;
    let mut bodies = Vec::new();
    for name in ["t1", "t2"] {
        let t = time_param(&p, name)?.ok_or_else(|| ApiError::bad("MissingParameter", format!("missing parameter {name:?}")))?;
        let (_, meta) = closest_memento(chain, t).map_err(|e| ApiError::not_found("UnknownVersion", e.to_string()))?;
        let stored = snap
            .index
            .replay()
            .exact(&chain.canonical_url, meta.capture_datetime)
            .ok_or_else(|| ApiError::not_found("UnknownVersion", format!("no stored body at {}", meta.timestamp14())))?;
        bodies.push(stored.body.clone());
    }
    let timing = st.config.timing;
    if p.get("format").map(String::as_str) == Some("plan") {
        let plan = plan_animation(&bodies[0], &bodies[1], timing).map_err(|e| ApiError::bad("EmptyDocuments", e.to_string()))?;
        return Ok(Json(json!({ "apiVersion": API_VERSION, "plan": plan })).into_response());
    }
    let doc = build_animation(&bodies[0], &bodies[1], timing).map_err(|e| ApiError::bad("EmptyDocuments", e.to_string()))?;
    Ok(([(header::CONTENT_TYPE, "text/html; charset=utf-8")], doc).into_response())
}

async fn replay(State(st): State<Arc<AppState>>, UrlPath((ts, rest)): UrlPath<(String, String)>, uri: Uri) -> ApiResult<Response> {
    let snap = st.current()?;
    let t = parse_time(&ts)
        .filter(|_| ts.bytes().all(|b| b.is_ascii_digit()))
        .ok_or_else(|| ApiError::bad("InvalidDatetime", format!("{ts:?} is not a 14-digit timestamp")))?;
    let target = match uri.query() {
        Some(q) => format!("{rest}?{q}"),
        None => rest,
    };
    let canon = canonicalize_url(&target).map_err(|_| ApiError::bad("InvalidUrl", format!("{target:?} is not a URL")))?;
    let capture = snap
        .index
        .replay()
        .closest(&canon, t)
        .ok_or_else(|| ApiError::not_found("UnknownUrl", format!("no captures of {target}")))?;
    let mut resp = Response::new(Body::from(capture.body.to_vec()));
    let headers = resp.headers_mut();
    if let Ok(v) = HeaderValue::from_str(&capture.meta.content_type) {
        headers.insert(header::CONTENT_TYPE, v);
    }
    headers.insert("memento-datetime", HeaderValue::from_str(&format_rfc1123(&capture.meta.capture_datetime)).expect("ascii"));
    if let Ok(v) = HeaderValue::from_str(&format!("<{}>; rel=\"original\"", capture.meta.uri_r)) {
        headers.insert(header::LINK, v);
    }
    Ok(resp)
}

async fn top_deleted(State(st): State<Arc<AppState>>, Query(p): Params) -> ApiResult<Json<Value>> {
    let snap = st.current()?;
    let n = number_param(&p, "n", 100, 1)?;
    let weighting = match p.get("weighting").map(String::as_str) {
        None | Some("") | Some("transitions") => Weighting::Transitions,
        Some("occurrences") => Weighting::Occurrences,
        Some(other) => return Err(ApiError::bad("InvalidParameter", format!("weighting={other:?}"))),
    };
    let top = top_deleted_terms(&snap.index, n, weighting);
    let cats = categorize_terms(&top, &snap.categories);
    Ok(Json(json!({
        "apiVersion": API_VERSION,
        "n": n,
        "weighting": weighting,
        "terms": cats.terms,
        "histogram": cats.histogram,
    })))
}

async fn status(State(st): State<Arc<AppState>>) -> Json<Value> {
    let snap = st.snapshot();
    Json(json!({
        "apiVersion": API_VERSION,
        "loaded": snap.is_some(),
        "manifest": snap.as_ref().map(|s| s.index.manifest()),
    }))
}

fn content_type_for(path: &Path) -> &'static str {
    match path.extension().and_then(|e| e.to_str()).unwrap_or("") {
        "html" | "htm" => "text/html; charset=utf-8",
        "js" | "mjs" => "text/javascript; charset=utf-8",
        "css" => "text/css; charset=utf-8",
        "json" | "map" => "application/json",
        "svg" => "image/svg+xml",
        "png" => "image/png",
        "ico" => "image/x-icon",
        "woff2" => "font/woff2",
        _ => "application/octet-stream",
    }
}

async fn static_files(State(st): State<Arc<AppState>>, uri: Uri) -> ApiResult<Response> {
    let not_found = || ApiError::not_found("NotFound", format!("no route for {}", uri.path()));
    let root = st.config.static_dir.as_ref().ok_or_else(not_found)?;
    let rel = Path::new(uri.path().trim_start_matches('/'));
    if rel.components().any(|c| !matches!(c, Component::Normal(_))) {
        return Err(not_found());
    }
    let mut path = root.join(rel);
    if path.is_dir() {
        path = path.join("index.html");
    }
    let bytes = tokio::fs::read(&path).await.map_err(|_| not_found())?;
    Ok(([(header::CONTENT_TYPE, content_type_for(&path))], bytes).into_response())
}

pub fn router(state: Arc<AppState>) -> Router {
    Router::new()
        .route("/api/status", get(status))
        .route("/api/search", get(search))
        .route("/api/versions", get(versions))
        .route("/api/slide", get(slide))
        .route("/api/animate", get(animate))
        .route("/api/analytics/top-deleted", get(top_deleted))
        .route("/replay/{ts}/{*url}", get(replay))
        .fallback(static_files)
        .with_state(state)
}
