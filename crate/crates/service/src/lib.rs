//! HTTP interface to a pattern atlas.
//!
//! The server keeps one immutable atlas snapshot behind a lock. Reads clone
//! the `Arc`; writes are serialized, persisted, then swapped in.

pub mod error;
pub mod session;

use std::collections::{BTreeSet, HashMap};
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex, RwLock};

use axum::body::Bytes;
use axum::extract::{Path as UrlPath, Query, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use chrono::{DateTime, Duration, Utc};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::json;

use pattern_atlas::store::{save_language, save_solution, save_view};
use pattern_atlas::{
    attach_solution, create_view, export_graph, find_entry, induced_view, load_atlas, materialize,
    plan_iterative, rank_paths, search, solutions_for, Atlas, ConcreteSolution, Context, Direction,
    EntryError, EntryResult, Link, NavError, NavOptions, Pattern, PatternRef, Plan, Scope,
    ScopeGraph, ScoredPath, SearchHit, StoreError, View,
};

pub use error::ApiError;
pub use session::{Candidate, Session, SessionState};

pub const DEFAULT_SESSION_TTL_SECS: i64 = 3600;

#[derive(Clone)]
pub struct AppState {
    shared: Arc<Shared>,
}

struct Shared {
    root: Option<PathBuf>,
    atlas: RwLock<Arc<Atlas>>,
    writer: tokio::sync::Mutex<()>,
    sessions: Mutex<HashMap<String, Session>>,
    session_ttl: Duration,
}

impl AppState {
    /// State over an in-memory atlas. With a root, writes are persisted there.
    pub fn new(atlas: Atlas, root: Option<PathBuf>) -> Self {
        AppState {
            shared: Arc::new(Shared {
                root,
                atlas: RwLock::new(Arc::new(atlas)),
                writer: tokio::sync::Mutex::new(()),
                sessions: Mutex::new(HashMap::new()),
                session_ttl: Duration::seconds(DEFAULT_SESSION_TTL_SECS),
            }),
        }
    }

    pub fn load(root: &Path) -> Result<Self, StoreError> {
        Ok(AppState::new(load_atlas(root)?, Some(root.to_path_buf())))
    }

    pub fn with_session_ttl(self, ttl: Duration) -> Self {
        let shared = Arc::try_unwrap(self.shared)
            .unwrap_or_else(|_| panic!("session ttl must be set before the state is shared"));
        AppState {
            shared: Arc::new(Shared {
                session_ttl: ttl,
                ..shared
            }),
        }
    }

    pub fn atlas(&self) -> Arc<Atlas> {
        self.shared
            .atlas
            .read()
            .expect("atlas lock poisoned")
            .clone()
    }

    fn swap(&self, next: Atlas) {
        *self.shared.atlas.write().expect("atlas lock poisoned") = Arc::new(next);
    }

    fn sessions(&self) -> std::sync::MutexGuard<'_, HashMap<String, Session>> {
        self.shared.sessions.lock().expect("session lock poisoned")
    }

    fn expire_sessions(&self, now: DateTime<Utc>) {
        let ttl = self.shared.session_ttl;
        self.sessions().retain(|_, s| now - s.updated_at < ttl);
    }
}

pub fn router(state: AppState) -> Router {
    Router::new()
        .route("/api/health", get(health))
        .route("/api/languages", get(list_languages))
        .route("/api/languages/{id}", get(get_language))
        .route("/api/languages/{id}/patterns/{pid}", get(get_pattern))
        .route("/api/links", get(list_links))
        .route("/api/search", get(search_patterns))
        .route("/api/views", get(list_views).post(post_view))
        .route("/api/views/{id}", get(get_view))
        .route("/api/views/{id}/materialized", get(get_materialized))
        .route("/api/entry-queries", post(post_entry_query))
        .route("/api/plans", post(post_plan))
        .route("/api/sessions", post(post_session))
        .route("/api/sessions/{id}", get(get_session))
        .route("/api/sessions/{id}/steps", post(post_step))
        .route("/api/export/dot", get(export_dot))
        .route("/api/solutions", post(post_solution))
        .with_state(state)
}

pub async fn serve(state: AppState, addr: SocketAddr) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(addr).await?;
    axum::serve(listener, router(state)).await
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct EntryQuery {
    #[serde(default)]
    pub scope: Scope,
    #[serde(default)]
    pub context: Context,
    #[serde(default)]
    pub max_len: Option<usize>,
    #[serde(default)]
    pub include_concretizes: bool,
}

impl EntryQuery {
    pub fn options(&self) -> NavOptions {
        NavOptions {
            max_len: self.max_len.unwrap_or(NavOptions::default().max_len),
            include_concretizes: self.include_concretizes,
        }
    }
}

/// Best entry plus every path in scope, best first.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EntryQueryResponse {
    pub best: Option<EntryResult>,
    pub candidates: Vec<ScoredPath>,
}

pub fn run_entry_query(atlas: &Atlas, q: &EntryQuery) -> Result<EntryQueryResponse, EntryError> {
    let best = find_entry(atlas, &q.scope, &q.context, q.options())?;
    let candidates = rank_paths(atlas, &q.scope, &q.context, q.options())?;
    Ok(EntryQueryResponse { best, candidates })
}

pub fn run_plan(atlas: &Atlas, q: &EntryQuery) -> Result<Plan, EntryError> {
    plan_iterative(atlas, &q.scope, &q.context, q.options())
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LanguageSummary {
    pub id: String,
    pub name: String,
    pub domain_label: String,
    pub pattern_count: usize,
    pub link_count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PatternDetail {
    #[serde(rename = "ref")]
    pub at: PatternRef,
    pub pattern: Pattern,
    pub links: Vec<Link>,
    pub solutions: Vec<ConcreteSolution>,
}

#[derive(Debug, Clone, Deserialize)]
pub struct NewView {
    pub name: String,
    pub pattern_refs: BTreeSet<PatternRef>,
    #[serde(default)]
    pub link_ids: BTreeSet<String>,
    /// Take every link among the chosen patterns instead of `link_ids`.
    #[serde(default)]
    pub induced: bool,
}

#[derive(Debug, Clone, Deserialize)]
pub struct NewSession {
    #[serde(default)]
    pub scope: Scope,
    #[serde(default)]
    pub context: Context,
    pub entry: PatternRef,
    #[serde(default)]
    pub include_concretizes: bool,
}

#[derive(Debug, Clone, Deserialize)]
pub struct StepRequest {
    pub link_id: String,
}

type ApiResult<T> = Result<T, ApiError>;

pub fn language_summaries(atlas: &Atlas) -> Vec<LanguageSummary> {
    atlas
        .languages()
        .values()
        .map(|l| LanguageSummary {
            id: l.id.clone(),
            name: l.name.clone(),
            domain_label: l.domain_label.clone(),
            pattern_count: l.patterns.len(),
            link_count: l.intra_links.len(),
        })
        .collect()
}

/// A pattern with every link touching it and its attached solutions.
pub fn pattern_detail(atlas: &Atlas, language: &str, pattern: &str) -> ApiResult<PatternDetail> {
    atlas
        .language(language)
        .ok_or_else(|| unknown_language(language))?;
    let at =
        PatternRef::new(language, pattern).map_err(|e| ApiError::bad_request(e.to_string()))?;
    let found = atlas.pattern(&at).ok_or_else(|| {
        ApiError::not_found("UNKNOWN_PATTERN", format!("unknown pattern {at}"))
            .with_detail(json!({ "pattern_ref": at }))
    })?;
    let links = atlas
        .neighbors(&at, Direction::Both, None)
        .map_err(|e| ApiError::internal(e.to_string()))?
        .into_iter()
        .map(|(l, _)| l.clone())
        .collect();
    let solutions = solutions_for(atlas, &at)?.into_iter().cloned().collect();
    Ok(PatternDetail {
        at,
        pattern: found.clone(),
        links,
        solutions,
    })
}

/// Links of a scope, ordered by id.
pub fn scope_links(atlas: &Atlas, scope: &Scope) -> Result<Vec<Link>, NavError> {
    let graph = ScopeGraph::resolve(atlas, scope, NavOptions::default())?;
    Ok(graph.links().cloned().collect())
}

fn parse_body<T: DeserializeOwned>(body: &Bytes) -> ApiResult<T> {
    serde_json::from_slice(body).map_err(|e| {
        ApiError::bad_request("request body is not valid")
            .with_detail(json!({ "line": e.line(), "column": e.column(), "error": e.to_string() }))
    })
}

fn scope_param(params: &HashMap<String, String>) -> ApiResult<Scope> {
    match params.get("scope") {
        None => Ok(Scope::atlas()),
        Some(text) => text.parse().map_err(|e: String| {
            ApiError::new(StatusCode::BAD_REQUEST, "INVALID_SCOPE", e)
                .with_detail(json!({ "scope": text }))
        }),
    }
}

fn unknown_language(id: &str) -> ApiError {
    ApiError::not_found("UNKNOWN_LANGUAGE", format!("unknown language {id}"))
        .with_detail(json!({ "id": id }))
}

fn unknown_view(id: &str) -> ApiError {
    ApiError::not_found("UNKNOWN_VIEW", format!("unknown view {id}"))
        .with_detail(json!({ "id": id }))
}

fn unknown_session(id: &str) -> ApiError {
    ApiError::not_found(
        "UNKNOWN_SESSION",
        format!("unknown or expired session {id}"),
    )
    .with_detail(json!({ "id": id }))
}

async fn health(State(state): State<AppState>) -> Json<serde_json::Value> {
    let atlas = state.atlas();
    Json(json!({
        "status": "ok",
        "languages": atlas.languages().len(),
        "patterns": atlas.pattern_refs().len(),
    }))
}

async fn list_languages(State(state): State<AppState>) -> Json<Vec<LanguageSummary>> {
    Json(language_summaries(&state.atlas()))
}

async fn get_language(
    State(state): State<AppState>,
    UrlPath(id): UrlPath<String>,
) -> ApiResult<Response> {
    let atlas = state.atlas();
    let lang = atlas.language(&id).ok_or_else(|| unknown_language(&id))?;
    Ok(Json(lang).into_response())
}

async fn get_pattern(
    State(state): State<AppState>,
    UrlPath((id, pid)): UrlPath<(String, String)>,
) -> ApiResult<Json<PatternDetail>> {
    Ok(Json(pattern_detail(&state.atlas(), &id, &pid)?))
}

async fn list_links(
    State(state): State<AppState>,
    Query(params): Query<HashMap<String, String>>,
) -> ApiResult<Json<Vec<Link>>> {
    let scope = scope_param(&params)?;
    Ok(Json(scope_links(&state.atlas(), &scope)?))
}

async fn search_patterns(
    State(state): State<AppState>,
    Query(params): Query<HashMap<String, String>>,
) -> ApiResult<Json<Vec<SearchHit>>> {
    let scope = scope_param(&params)?;
    let query = params.get("q").map(String::as_str).unwrap_or("");
    Ok(Json(search(&state.atlas(), &scope, query)?))
}

async fn list_views(State(state): State<AppState>) -> Json<Vec<View>> {
    Json(state.atlas().views().values().cloned().collect())
}

async fn get_view(
    State(state): State<AppState>,
    UrlPath(id): UrlPath<String>,
) -> ApiResult<Json<View>> {
    let atlas = state.atlas();
    Ok(Json(
        atlas.view(&id).ok_or_else(|| unknown_view(&id))?.clone(),
    ))
}

async fn get_materialized(
    State(state): State<AppState>,
    UrlPath(id): UrlPath<String>,
) -> ApiResult<Response> {
    let atlas = state.atlas();
    let view = atlas.view(&id).ok_or_else(|| unknown_view(&id))?;
    Ok(Json(materialize(&atlas, view)?).into_response())
}

async fn post_view(State(state): State<AppState>, body: Bytes) -> ApiResult<Response> {
    let req: NewView = parse_body(&body)?;
    let _guard = state.shared.writer.lock().await;
    let atlas = state.atlas();
    let link_ids = if req.induced {
        induced_view(&atlas, req.pattern_refs.clone())?.link_ids
    } else {
        req.link_ids
    };
    let (next, view) = create_view(&atlas, &req.name, req.pattern_refs, link_ids)?;
    if let Some(root) = &state.shared.root {
        save_view(root, &view)?;
    }
    state.swap(next);
    Ok((StatusCode::CREATED, Json(view)).into_response())
}

async fn post_solution(State(state): State<AppState>, body: Bytes) -> ApiResult<Response> {
    let cs: ConcreteSolution = parse_body(&body)?;
    let _guard = state.shared.writer.lock().await;
    let atlas = state.atlas();
    let next = attach_solution(&atlas, cs.clone())?;
    if let Some(root) = &state.shared.root {
        save_solution(root, &cs)?;
        let lang = next
            .language(cs.pattern.language())
            .expect("attach checks the pattern exists");
        save_language(root, lang)?;
    }
    state.swap(next);
    Ok((StatusCode::CREATED, Json(cs)).into_response())
}

async fn post_entry_query(
    State(state): State<AppState>,
    body: Bytes,
) -> ApiResult<Json<EntryQueryResponse>> {
    let q: EntryQuery = parse_body(&body)?;
    Ok(Json(run_entry_query(&state.atlas(), &q)?))
}

async fn post_plan(State(state): State<AppState>, body: Bytes) -> ApiResult<Json<Plan>> {
    let q: EntryQuery = parse_body(&body)?;
    Ok(Json(run_plan(&state.atlas(), &q)?))
}

async fn post_session(State(state): State<AppState>, body: Bytes) -> ApiResult<Response> {
    let req: NewSession = parse_body(&body)?;
    let now = Utc::now();
    state.expire_sessions(now);
    let atlas = state.atlas();
    let id = uuid::Uuid::new_v4().to_string();
    let session = Session::start(
        &atlas,
        id.clone(),
        req.scope,
        req.context,
        req.entry,
        req.include_concretizes,
        now,
    )?;
    let view = session.state(&atlas)?;
    state.sessions().insert(id, session);
    Ok((StatusCode::CREATED, Json(view)).into_response())
}

async fn get_session(
    State(state): State<AppState>,
    UrlPath(id): UrlPath<String>,
) -> ApiResult<Json<SessionState>> {
    state.expire_sessions(Utc::now());
    let atlas = state.atlas();
    let session = state
        .sessions()
        .get(&id)
        .cloned()
        .ok_or_else(|| unknown_session(&id))?;
    Ok(Json(session.state(&atlas)?))
}

async fn post_step(
    State(state): State<AppState>,
    UrlPath(id): UrlPath<String>,
    body: Bytes,
) -> ApiResult<Json<SessionState>> {
    let req: StepRequest = parse_body(&body)?;
    let now = Utc::now();
    state.expire_sessions(now);
    let atlas = state.atlas();
    let mut sessions = state.sessions();
    let session = sessions.get_mut(&id).ok_or_else(|| unknown_session(&id))?;
    session.step(&atlas, &req.link_id, now)?;
    Ok(Json(session.state(&atlas)?))
}

async fn export_dot(
    State(state): State<AppState>,
    Query(params): Query<HashMap<String, String>>,
) -> ApiResult<Response> {
    let scope = scope_param(&params)?;
    let dot = export_graph(&state.atlas(), &scope)?;
    Ok((
        [(header::CONTENT_TYPE, "text/vnd.graphviz; charset=utf-8")],
        dot,
    )
        .into_response())
}
