//! HTTP service for refinement sessions. State lives only in the data
//! directory, so a restarted service picks up every log and session as it
//! was. Turns on one session are serialized; sessions run independently.

use std::collections::HashMap;
use std::sync::{Arc, Mutex};

use axum::body::{to_bytes, Body};
use axum::extract::{DefaultBodyLimit, Path, Query, Request, State};
use axum::http::{HeaderValue, Method, StatusCode};
use axum::middleware::{self, Next};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use imr_core::declare::{confidence, DeclareRule, ValidationReport};
use imr_core::discovery::DiscoveryParams;
use imr_core::log::{format_variants, parse_variants, EventLog};
use imr_core::model::{export, ExportFormat};
use imr_core::report::{run_discovery, DiscoveryReport};
use imr_core::tree::ProcessTree;
use imr_llm::session::{ModelIteration, RuleEntry, TranscriptEntry};
use imr_llm::{LlmError, Proposal, RefinementSession, RuleEdit, SessionState};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use sha2::{Digest, Sha256};
use tokio::sync::Mutex as AsyncMutex;

use crate::store::{ArtifactKind, Store};
use crate::{parse_log_text, TransportConfig};

pub const IDEMPOTENCY_HEADER: &str = "idempotency-key";
const MAX_UPLOAD: usize = 512 * 1024 * 1024;

type Locks = Mutex<HashMap<String, Arc<AsyncMutex<()>>>>;

#[derive(Clone)]
pub struct AppState {
    store: Store,
    transport: TransportConfig,
    session_locks: Arc<Locks>,
    key_locks: Arc<Locks>,
}

impl AppState {
    pub fn new(store: Store, transport: TransportConfig) -> Self {
        Self {
            store,
            transport,
            session_locks: Arc::default(),
            key_locks: Arc::default(),
        }
    }

    fn lock_for(map: &Locks, key: &str) -> Arc<AsyncMutex<()>> {
        map.lock().unwrap().entry(key.to_string()).or_default().clone()
    }
}

#[derive(Debug)]
pub struct ApiError {
    status: StatusCode,
    kind: &'static str,
    message: String,
    report: Option<ValidationReport>,
}

impl ApiError {
    fn new(status: StatusCode, kind: &'static str, message: impl Into<String>) -> Self {
        Self {
            status,
            kind,
            message: message.into(),
            report: None,
        }
    }

    fn not_found(what: &str, id: &str) -> Self {
        Self::new(StatusCode::NOT_FOUND, "NotFound", format!("no {what} with id `{id}`"))
    }

    fn internal(e: impl std::fmt::Display) -> Self {
        Self::new(StatusCode::INTERNAL_SERVER_ERROR, "Internal", e.to_string())
    }
}

impl From<std::io::Error> for ApiError {
    fn from(e: std::io::Error) -> Self {
        Self::internal(e)
    }
}

impl From<LlmError> for ApiError {
    fn from(e: LlmError) -> Self {
        let message = e.to_string();
        match e {
            LlmError::Transport(_) => Self::new(StatusCode::BAD_GATEWAY, "TransportFailure", message),
            LlmError::RepairExhausted { report, .. } => Self {
                report: Some(report),
                ..Self::new(StatusCode::UNPROCESSABLE_ENTITY, "RepairExhausted", message)
            },
            LlmError::Rejected(report) => Self {
                report: Some(report),
                ..Self::new(StatusCode::UNPROCESSABLE_ENTITY, "Validation", "rules rejected")
            },
            LlmError::InvalidState { .. } => Self::new(StatusCode::CONFLICT, "InvalidState", message),
            LlmError::NoModel => Self::new(StatusCode::CONFLICT, "NoModel", message),
        }
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let mut body = json!({ "kind": self.kind, "message": self.message });
        if let Some(r) = self.report {
            body["report"] = serde_json::to_value(r).unwrap_or(Value::Null);
        }
        (self.status, Json(json!({ "error": body }))).into_response()
    }
}

type ApiResult<T> = Result<T, ApiError>;

/// Session payload: the refinement session plus the discovery settings the
/// service keeps for it.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SessionDoc {
    pub log_id: String,
    pub sup: f64,
    pub session: RefinementSession,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct LogInfo {
    pub id: String,
    pub name: String,
    pub created_at: String,
    pub activities: usize,
    pub variants: usize,
    pub traces: u64,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct RuleRow {
    pub rule: DeclareRule,
    pub enabled: bool,
    pub round: usize,
    pub confidence: Option<f64>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct SessionView {
    pub id: String,
    pub log_id: String,
    pub sup: f64,
    pub state: SessionState,
    pub rules: Vec<RuleRow>,
    pub pending_questions: Vec<String>,
    pub iterations: usize,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct TurnResult {
    pub state: SessionState,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub questions: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub proposed: Option<Vec<DeclareRule>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub added: Option<Vec<DeclareRule>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub report: Option<ValidationReport>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub repairs: Option<usize>,
    pub rules: Vec<RuleRow>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct ModelView {
    pub iteration: usize,
    pub sup: f64,
    pub rules: Vec<DeclareRule>,
    pub tree: ProcessTree,
    pub tree_text: String,
    pub dot: String,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct DiscoverResult {
    pub iteration: usize,
    pub tree_text: String,
    pub report: DiscoveryReport,
}

fn model_view(iteration: usize, m: &ModelIteration) -> ModelView {
    ModelView {
        iteration,
        sup: m.sup,
        rules: m.rules.clone(),
        tree: m.tree.clone(),
        tree_text: export(&m.tree, ExportFormat::TreeText),
        dot: export(&m.tree, ExportFormat::Dot),
    }
}

pub fn router(state: AppState) -> Router {
    Router::new()
        .route("/logs", post(upload_log).get(list_logs))
        .route("/logs/{id}/activities", get(log_activities))
        .route("/sessions", post(create_session))
        .route("/sessions/{id}", get(get_session))
        .route("/sessions/{id}/context", post(post_context))
        .route("/sessions/{id}/answers", post(post_answers))
        .route("/sessions/{id}/feedback", post(post_feedback))
        .route("/sessions/{id}/rules", get(get_rules).put(put_rules))
        .route("/sessions/{id}/discover", post(post_discover))
        .route("/sessions/{id}/models", get(list_models))
        .route("/sessions/{id}/models/latest", get(latest_model))
        .route("/sessions/{id}/models/{n}", get(get_model))
        .route("/sessions/{id}/transcript", get(get_transcript))
        .route("/sessions/{id}/validation", get(get_validation))
        .layer(middleware::from_fn_with_state(state.clone(), idempotency))
        .layer(DefaultBodyLimit::max(MAX_UPLOAD))
        .with_state(state)
}

/// Replays the stored response for a repeated mutating request carrying the
/// same idempotency key. Requests with one key run one at a time.
async fn idempotency(State(state): State<AppState>, req: Request, next: Next) -> Response {
    let key = match req.headers().get(IDEMPOTENCY_HEADER).and_then(|v| v.to_str().ok()) {
        Some(k) if req.method() != Method::GET => k.to_string(),
        _ => return next.run(req).await,
    };
    let digest = hex::encode(Sha256::digest(format!("{} {} {key}", req.method(), req.uri().path()).as_bytes()));
    let lock = AppState::lock_for(&state.key_locks, &digest);
    let _guard = lock.lock().await;
    if let Ok(bytes) = std::fs::read(state.store.idempotency_path(&digest)) {
        if let Ok(saved) = serde_json::from_slice::<SavedResponse>(&bytes) {
            return saved.into_response();
        }
    }
    let resp = next.run(req).await;
    let (parts, body) = resp.into_parts();
    let Ok(bytes) = to_bytes(body, MAX_UPLOAD).await else {
        return ApiError::internal("response body unreadable").into_response();
    };
    if !parts.status.is_server_error() {
        let saved = SavedResponse {
            status: parts.status.as_u16(),
            body: String::from_utf8_lossy(&bytes).into_owned(),
        };
        if let Ok(b) = serde_json::to_vec(&saved) {
            // A lost record only means a retry runs again.
            let _ = state.store.write_idempotent(&digest, &b);
        }
    }
    Response::from_parts(parts, Body::from(bytes))
}

#[derive(Serialize, Deserialize)]
struct SavedResponse {
    status: u16,
    body: String,
}

impl IntoResponse for SavedResponse {
    fn into_response(self) -> Response {
        let status = StatusCode::from_u16(self.status).unwrap_or(StatusCode::OK);
        let mut resp = (status, self.body).into_response();
        resp.headers_mut()
            .insert("content-type", HeaderValue::from_static("application/json"));
        resp.headers_mut()
            .insert("idempotent-replay", HeaderValue::from_static("true"));
        resp
    }
}

fn load_log(store: &Store, id: &str) -> ApiResult<EventLog> {
    let bytes = store
        .payload(ArtifactKind::Log, id)?
        .ok_or_else(|| ApiError::not_found("log", id))?;
    parse_variants(&String::from_utf8_lossy(&bytes)).map_err(ApiError::internal)
}

fn load_session(store: &Store, id: &str) -> ApiResult<SessionDoc> {
    store
        .get_json(ArtifactKind::Session, id)?
        .ok_or_else(|| ApiError::not_found("session", id))
}

fn save_session(store: &Store, id: &str, doc: &SessionDoc) -> ApiResult<()> {
    store.put_json(ArtifactKind::Session, id, doc, json!({ "log_id": doc.log_id }))?;
    Ok(())
}

fn rule_rows(entries: &[RuleEntry], log: Option<&EventLog>) -> Vec<RuleRow> {
    entries
        .iter()
        .map(|e| RuleRow {
            rule: e.rule.clone(),
            enabled: e.enabled,
            round: e.round,
            confidence: log.and_then(|l| confidence(&e.rule, l).ok()),
        })
        .collect()
}

fn view(store: &Store, id: &str, doc: &SessionDoc) -> SessionView {
    let log = load_log(store, &doc.log_id).ok();
    SessionView {
        id: id.to_string(),
        log_id: doc.log_id.clone(),
        sup: doc.sup,
        state: doc.session.state(),
        rules: rule_rows(doc.session.current_rules(), log.as_ref()),
        pending_questions: doc.session.pending_questions().to_vec(),
        iterations: doc.session.model_iterations().len(),
    }
}

/// Runs blocking work off the async executor.
async fn blocking<T: Send + 'static>(f: impl FnOnce() -> ApiResult<T> + Send + 'static) -> ApiResult<T> {
    tokio::task::spawn_blocking(f).await.map_err(ApiError::internal)?
}

#[derive(Deserialize)]
struct UploadQuery {
    name: Option<String>,
    format: Option<String>,
}

async fn upload_log(
    State(st): State<AppState>,
    Query(q): Query<UploadQuery>,
    body: String,
) -> ApiResult<(StatusCode, Json<LogInfo>)> {
    let csv = match q.format.as_deref() {
        None | Some("variants") => false,
        Some("csv") => true,
        Some(other) => {
            return Err(ApiError::new(
                StatusCode::BAD_REQUEST,
                "Parse",
                format!("unknown log format `{other}`; use variants or csv"),
            ))
        }
    };
    blocking(move || {
        let log = parse_log_text(&body, csv).map_err(|e| ApiError::new(StatusCode::BAD_REQUEST, "Parse", e.to_string()))?;
        let id = uuid::Uuid::new_v4().simple().to_string();
        let name = q.name.unwrap_or_else(|| id.clone());
        let meta = json!({
            "name": name,
            "activities": log.alphabet().len(),
            "variants": log.num_variants(),
            "traces": log.total_traces(),
        });
        let a = st.store.put(ArtifactKind::Log, &id, format_variants(&log).as_bytes(), meta)?;
        Ok((
            StatusCode::CREATED,
            Json(LogInfo {
                id,
                name,
                created_at: a.created_at,
                activities: log.alphabet().len(),
                variants: log.num_variants(),
                traces: log.total_traces(),
            }),
        ))
    })
    .await
}

async fn list_logs(State(st): State<AppState>) -> ApiResult<Json<Vec<LogInfo>>> {
    let logs = st.store.list(ArtifactKind::Log)?;
    Ok(Json(
        logs.into_iter()
            .map(|a| LogInfo {
                name: a.meta["name"].as_str().unwrap_or(&a.id).to_string(),
                activities: a.meta["activities"].as_u64().unwrap_or(0) as usize,
                variants: a.meta["variants"].as_u64().unwrap_or(0) as usize,
                traces: a.meta["traces"].as_u64().unwrap_or(0),
                id: a.id,
                created_at: a.created_at,
            })
            .collect(),
    ))
}

async fn log_activities(State(st): State<AppState>, Path(id): Path<String>) -> ApiResult<Json<Value>> {
    let log = blocking(move || load_log(&st.store, &id)).await?;
    Ok(Json(json!({ "activities": log.alphabet() })))
}

#[derive(Deserialize)]
struct CreateSession {
    log_id: String,
    sup: Option<f64>,
}

fn check_sup(sup: f64) -> ApiResult<f64> {
    if (0.0..=1.0).contains(&sup) {
        Ok(sup)
    } else {
        Err(ApiError::new(StatusCode::BAD_REQUEST, "InvalidSup", format!("sup must lie in [0, 1], got {sup}")))
    }
}

async fn create_session(State(st): State<AppState>, Json(req): Json<CreateSession>) -> ApiResult<(StatusCode, Json<SessionView>)> {
    let sup = check_sup(req.sup.unwrap_or(DiscoveryParams::default().sup))?;
    blocking(move || {
        let log = load_log(&st.store, &req.log_id)?;
        let id = uuid::Uuid::new_v4().simple().to_string();
        let session = RefinementSession::new(id.clone(), log.alphabet().clone()).with_log_ref(req.log_id.clone());
        let doc = SessionDoc { log_id: req.log_id, sup, session };
        save_session(&st.store, &id, &doc)?;
        Ok((StatusCode::CREATED, Json(view(&st.store, &id, &doc))))
    })
    .await
}

async fn get_session(State(st): State<AppState>, Path(id): Path<String>) -> ApiResult<Json<SessionView>> {
    blocking(move || {
        let doc = load_session(&st.store, &id)?;
        Ok(Json(view(&st.store, &id, &doc)))
    })
    .await
}

/// Loads the session under its lock, applies `f` off the executor and
/// saves the result. A failed operation saves whatever the session kept.
async fn with_session<T: Send + 'static>(
    st: AppState,
    id: String,
    f: impl FnOnce(&AppState, &mut SessionDoc) -> ApiResult<T> + Send + 'static,
) -> ApiResult<T> {
    let lock = AppState::lock_for(&st.session_locks, &id);
    let _guard = lock.lock().await;
    blocking(move || {
        let mut doc = load_session(&st.store, &id)?;
        let before = serde_json::to_value(&doc).map_err(ApiError::internal)?;
        let out = f(&st, &mut doc);
        if serde_json::to_value(&doc).map_err(ApiError::internal)? != before {
            save_session(&st.store, &id, &doc)?;
        }
        out
    })
    .await
}

#[derive(Deserialize)]
struct TextBody {
    text: String,
}

#[derive(Clone, Copy)]
enum TurnKind {
    Context,
    Answers,
    Feedback,
}

fn run_turn(st: &AppState, doc: &mut SessionDoc, kind: TurnKind, text: &str) -> ApiResult<TurnResult> {
    let s = &mut doc.session;
    match (kind, s.state()) {
        (TurnKind::Answers, SessionState::AwaitingAnswers) => {}
        (TurnKind::Feedback, SessionState::Validated) if s.model_iterations().is_empty() => {
            return Err(LlmError::NoModel.into())
        }
        (TurnKind::Feedback, SessionState::Validated) => {}
        (TurnKind::Feedback, state) => {
            return Err(LlmError::InvalidState { op: "integrate feedback", state }.into())
        }
        (TurnKind::Context, SessionState::Init | SessionState::ContextGiven) => {}
        (TurnKind::Answers, state) => {
            return Err(LlmError::InvalidState { op: "answer questions", state }.into())
        }
        (TurnKind::Context, state) => {
            return Err(LlmError::InvalidState { op: "give context", state }.into())
        }
    }
    let transport = st.transport.open(s.exchanges().len()).map_err(LlmError::from)?;
    let outcome = match kind {
        TurnKind::Feedback => s.integrate_feedback(&*transport, text)?,
        _ => s.propose_rules(&*transport, text)?,
    };
    let log = load_log(&st.store, &doc.log_id).ok();
    let rules = rule_rows(doc.session.current_rules(), log.as_ref());
    let state = doc.session.state();
    Ok(match outcome {
        Proposal::Questions(q) => TurnResult {
            state,
            questions: Some(q),
            proposed: None,
            added: None,
            report: None,
            repairs: None,
            rules,
        },
        Proposal::Rules { rules: proposed, added, report, repairs } => TurnResult {
            state,
            questions: None,
            proposed: Some(proposed),
            added: Some(added),
            report: Some(report),
            repairs: Some(repairs),
            rules,
        },
    })
}

async fn turn(st: AppState, id: String, kind: TurnKind, text: String) -> ApiResult<Json<TurnResult>> {
    with_session(st, id, move |st, doc| run_turn(st, doc, kind, &text).map(Json)).await
}

async fn post_context(State(st): State<AppState>, Path(id): Path<String>, Json(b): Json<TextBody>) -> ApiResult<Json<TurnResult>> {
    turn(st, id, TurnKind::Context, b.text).await
}

async fn post_answers(State(st): State<AppState>, Path(id): Path<String>, Json(b): Json<TextBody>) -> ApiResult<Json<TurnResult>> {
    turn(st, id, TurnKind::Answers, b.text).await
}

async fn post_feedback(State(st): State<AppState>, Path(id): Path<String>, Json(b): Json<TextBody>) -> ApiResult<Json<TurnResult>> {
    turn(st, id, TurnKind::Feedback, b.text).await
}

async fn get_rules(State(st): State<AppState>, Path(id): Path<String>) -> ApiResult<Json<Value>> {
    blocking(move || {
        let doc = load_session(&st.store, &id)?;
        let log = load_log(&st.store, &doc.log_id).ok();
        Ok(Json(json!({ "rules": rule_rows(doc.session.current_rules(), log.as_ref()) })))
    })
    .await
}

#[derive(Deserialize)]
struct PutRules {
    rules: Vec<RuleEdit>,
}

async fn put_rules(State(st): State<AppState>, Path(id): Path<String>, Json(b): Json<PutRules>) -> ApiResult<Json<Value>> {
    with_session(st, id, move |st, doc| {
        let report = doc.session.edit_rules(&b.rules)?;
        let log = load_log(&st.store, &doc.log_id).ok();
        Ok(Json(json!({
            "rules": rule_rows(doc.session.current_rules(), log.as_ref()),
            "report": report,
        })))
    })
    .await
}

#[derive(Deserialize, Default)]
struct DiscoverBody {
    sup: Option<f64>,
}

async fn post_discover(
    State(st): State<AppState>,
    Path(id): Path<String>,
    body: Option<Json<DiscoverBody>>,
) -> ApiResult<(StatusCode, Json<DiscoverResult>)> {
    let sup = body.and_then(|Json(b)| b.sup).map(check_sup).transpose()?;
    with_session(st, id.clone(), move |st, doc| {
        if let Some(s) = sup {
            doc.sup = s;
        }
        let log = load_log(&st.store, &doc.log_id)?;
        let rules = doc.session.enabled_rules();
        let params = DiscoveryParams {
            sup: doc.sup,
            ..DiscoveryParams::default()
        };
        let report = run_discovery(&log, &rules, &params)
            .map_err(|e| ApiError::new(StatusCode::UNPROCESSABLE_ENTITY, "Discovery", e.to_string()))?;
        let iteration = doc.session.model_iterations().len();
        let m = ModelIteration {
            rules,
            sup: doc.sup,
            tree: report.tree.clone(),
        };
        st.store.put_json(
            ArtifactKind::Model,
            &format!("{id}-{iteration}"),
            &model_view(iteration, &m),
            json!({ "session": id, "iteration": iteration }),
        )?;
        doc.session.record_model(m);
        Ok((
            StatusCode::CREATED,
            Json(DiscoverResult {
                iteration,
                tree_text: export(&report.tree, ExportFormat::TreeText),
                report,
            }),
        ))
    })
    .await
}

async fn list_models(State(st): State<AppState>, Path(id): Path<String>) -> ApiResult<Json<Vec<ModelView>>> {
    blocking(move || {
        let doc = load_session(&st.store, &id)?;
        Ok(Json(
            doc.session
                .model_iterations()
                .iter()
                .enumerate()
                .map(|(i, m)| model_view(i, m))
                .collect(),
        ))
    })
    .await
}

async fn get_model(State(st): State<AppState>, Path((id, n)): Path<(String, usize)>) -> ApiResult<Json<ModelView>> {
    blocking(move || {
        let doc = load_session(&st.store, &id)?;
        let m = doc
            .session
            .model_iterations()
            .get(n)
            .ok_or_else(|| ApiError::not_found("model iteration", &n.to_string()))?;
        Ok(Json(model_view(n, m)))
    })
    .await
}

async fn latest_model(State(st): State<AppState>, Path(id): Path<String>) -> ApiResult<Json<ModelView>> {
    blocking(move || {
        let doc = load_session(&st.store, &id)?;
        let n = doc.session.model_iterations().len();
        let m = doc
            .session
            .model_iterations()
            .last()
            .ok_or_else(|| ApiError::not_found("model iteration", "latest"))?;
        Ok(Json(model_view(n - 1, m)))
    })
    .await
}

async fn get_transcript(State(st): State<AppState>, Path(id): Path<String>) -> ApiResult<Json<Vec<TranscriptEntry>>> {
    blocking(move || Ok(Json(load_session(&st.store, &id)?.session.transcript().to_vec()))).await
}

async fn get_validation(State(st): State<AppState>, Path(id): Path<String>) -> ApiResult<Json<Vec<ValidationReport>>> {
    blocking(move || Ok(Json(load_session(&st.store, &id)?.session.validation_history().to_vec()))).await
}

/// Serves until the listener fails.
pub async fn serve(state: AppState, bind: &str) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(bind).await?;
    eprintln!("listening on {}", listener.local_addr()?);
    axum::serve(listener, router(state)).await
}
