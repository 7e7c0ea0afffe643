//! HTTP/JSON chat service around one shared engine.
//!
//! `POST /v1/chat` answers a seller question; `GET /v1/health` reports
//! liveness and whether the gate models are loaded. The engine is shared
//! immutably across requests; the only mutable state is the per-session
//! turn buffer.

pub mod config;

use std::collections::HashMap;
use std::sync::{Arc, Mutex, RwLock};

use axum::extract::rejection::JsonRejection;
use axum::extract::{Query as UrlQuery, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use insight_core::api::{ChatApiRequest, ChatApiResponse, ErrorBody, HealthResponse};
use insight_core::orchestrator::Engine;
use insight_core::session::{SessionBuffer, Turn};
use insight_core::types::{ChatResponse, ExecutionTrace, Query, SellerContext, SessionId};
use insight_core::{Error, ErrorCode};
use serde::Deserialize;

pub use config::ServiceConfig;

pub struct AppState {
    engine: RwLock<Option<Arc<Engine>>>,
    context: SellerContext,
    session_turns: usize,
    sessions: Mutex<HashMap<SessionId, SessionBuffer>>,
}

impl AppState {
    /// A service that answers health checks but not chats until
    /// [`set_engine`](Self::set_engine) is called.
    pub fn new(context: SellerContext, session_turns: usize) -> Arc<Self> {
        Arc::new(AppState {
            engine: RwLock::new(None),
            context,
            session_turns,
            sessions: Mutex::new(HashMap::new()),
        })
    }

    pub fn with_engine(engine: Arc<Engine>, context: SellerContext, session_turns: usize) -> Arc<Self> {
        let s = Self::new(context, session_turns);
        s.set_engine(engine);
        s
    }

    pub fn set_engine(&self, engine: Arc<Engine>) {
        *self.engine.write().expect("engine lock") = Some(engine);
    }

    pub fn engine(&self) -> Option<Arc<Engine>> {
        self.engine.read().expect("engine lock").clone()
    }

    pub fn models_loaded(&self) -> bool {
        self.engine().is_some()
    }

    /// The buffered turns of one session, oldest first.
    pub fn session_turns(&self, id: &SessionId) -> Vec<Turn> {
        let sessions = self.sessions.lock().expect("session lock");
        sessions.get(id).map(|b| b.turns().cloned().collect()).unwrap_or_default()
    }

    fn record(&self, id: SessionId, turn: Turn) {
        let mut sessions = self.sessions.lock().expect("session lock");
        sessions.entry(id).or_insert_with(|| SessionBuffer::new(self.session_turns)).push(turn);
    }
}

pub fn router(state: Arc<AppState>) -> Router {
    Router::new()
        .route("/v1/chat", post(chat))
        .route("/v1/health", get(health))
        .with_state(state)
}

/// Serves until the listener fails.
pub async fn serve(listener: tokio::net::TcpListener, state: Arc<AppState>) -> std::io::Result<()> {
    axum::serve(listener, router(state)).await
}

/// Binds, then builds the engine in the background so health checks answer
/// (with `models_loaded: false`) while models load or train.
pub async fn start(cfg: ServiceConfig, addr: &str) -> Result<(std::net::SocketAddr, Arc<AppState>, tokio::task::JoinHandle<()>), Error> {
    let listener = tokio::net::TcpListener::bind(addr).await.map_err(|e| Error::Io(format!("bind {addr}: {e}")))?;
    let local = listener.local_addr().map_err(|e| Error::Io(e.to_string()))?;
    let state = AppState::new(SellerContext::new(cfg.seller_id.clone(), cfg.today()), cfg.session_turns);
    let loader_state = state.clone();
    let server_state = state.clone();
    let handle = tokio::spawn(async move {
        let loader = tokio::task::spawn_blocking(move || cfg.build_engine());
        let server = tokio::spawn(async move {
            if let Err(e) = serve(listener, server_state).await {
                tracing::error!("server stopped: {e}");
            }
        });
        match loader.await {
            Ok(Ok(engine)) => {
                loader_state.set_engine(Arc::new(engine));
                tracing::info!("models loaded");
            }
            Ok(Err(e)) => {
                tracing::error!("engine failed to load: {e}");
                server.abort();
                return;
            }
            Err(e) => {
                tracing::error!("engine loader panicked: {e}");
                server.abort();
                return;
            }
        }
        let _ = server.await;
    });
    Ok((local, state, handle))
}

struct ApiError {
    status: StatusCode,
    body: ErrorBody,
}

impl ApiError {
    fn new(status: StatusCode, code: &str, message: impl Into<String>) -> Self {
        ApiError {
            status,
            body: ErrorBody {
                code: code.to_string(),
                message: message.into(),
                trace: None,
            },
        }
    }

    fn with_trace(mut self, trace: ExecutionTrace) -> Self {
        self.body.trace = Some(trace);
        self
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status, Json(self.body)).into_response()
    }
}

fn validation_error(e: &Error) -> ApiError {
    let status = match e {
        Error::QueryTooLong { .. } => StatusCode::PAYLOAD_TOO_LARGE,
        _ => StatusCode::BAD_REQUEST,
    };
    ApiError::new(status, e.code().as_str(), e.to_string())
}

#[derive(Debug, Deserialize)]
struct ChatParams {
    trace: Option<bool>,
}

async fn health(State(state): State<Arc<AppState>>) -> Json<HealthResponse> {
    Json(HealthResponse {
        status: "ok".into(),
        models_loaded: state.models_loaded(),
    })
}

async fn chat(
    State(state): State<Arc<AppState>>,
    UrlQuery(params): UrlQuery<ChatParams>,
    body: Result<Json<ChatApiRequest>, JsonRejection>,
) -> Result<Json<ChatApiResponse>, ApiError> {
    let Json(req) = body.map_err(|e| ApiError::new(StatusCode::BAD_REQUEST, "INVALID_REQUEST", e.body_text()))?;
    let session = req.session_id.map(SessionId::new).unwrap_or_default();
    let query = Query::new(&req.query, session.clone(), chrono::Utc::now()).map_err(|e| validation_error(&e))?;
    let engine = state
        .engine()
        .ok_or_else(|| ApiError::new(StatusCode::SERVICE_UNAVAILABLE, "MODELS_NOT_LOADED", "models are still loading"))?;
    let mut ctx = state.context.clone();
    if let Some(today) = req.today {
        ctx.today = today;
    }
    let resp: ChatResponse = engine.handle(&query, &ctx).await;
    if let Some(err) = &resp.trace.error {
        if err.code == ErrorCode::TotalTimeout {
            return Err(ApiError::new(StatusCode::GATEWAY_TIMEOUT, ErrorCode::TotalTimeout.as_str(), resp.answer.clone()).with_trace(resp.trace));
        }
    }
    state.record(
        session,
        Turn {
            query: query.text,
            response: resp.clone(),
        },
    );
    let out = ChatApiResponse::from(resp);
    Ok(Json(if params.trace == Some(false) { out.without_trace() } else { out }))
}
