//! The `/v1` HTTP API.

use crate::config::ServiceConfig;
use crate::error::ServiceError;
use crate::schema::*;
use crate::service;
use crate::sessions::SessionStore;
use axum::body::Bytes;
use axum::extract::rejection::JsonRejection;
use axum::extract::{FromRequest, Path, Request, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post, put};
use axum::{Json, Router};
use serde::de::DeserializeOwned;
use std::sync::{Arc, PoisonError};
use tower_http::trace::TraceLayer;
use wealth_target::numerics::QuadratureSpec;
use wealth_target::single_period::{BuilderSession, SinglePeriodMarket};

#[derive(Clone)]
pub struct AppState {
    pub sessions: Arc<SessionStore>,
    pub quadrature: QuadratureSpec,
}

impl AppState {
    pub fn new(config: &ServiceConfig) -> Self {
        Self { sessions: Arc::new(SessionStore::new(config.session_ttl)), quadrature: config.quadrature }
    }
}

pub struct ApiError(ServiceError);

impl<E: Into<ServiceError>> From<E> for ApiError {
    fn from(e: E) -> Self {
        ApiError(e.into())
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let class = self.0.class();
        let status = StatusCode::from_u16(class.http_status()).unwrap_or(StatusCode::INTERNAL_SERVER_ERROR);
        if status.is_server_error() {
            tracing::error!(error = %self.0, "request failed");
        }
        let body = ErrorBody {
            error: ErrorDetail { status: status.as_u16(), code: self.0.code().to_string(), message: self.0.to_string() },
        };
        (status, Json(body)).into_response()
    }
}

/// JSON body whose every rejection (syntax, missing field, wrong type) is a 400.
pub struct ApiJson<T>(pub T);

impl<S, T> FromRequest<S> for ApiJson<T>
where
    Json<T>: FromRequest<S, Rejection = JsonRejection>,
    S: Send + Sync,
{
    type Rejection = ApiError;

    async fn from_request(req: Request, state: &S) -> Result<Self, Self::Rejection> {
        match Json::<T>::from_request(req, state).await {
            Ok(Json(v)) => Ok(ApiJson(v)),
            Err(e) => Err(ServiceError::Invalid(e.body_text()).into()),
        }
    }
}

type ApiResult<T> = Result<Json<T>, ApiError>;

/// Runs a CPU-bound computation off the async workers.
async fn blocking<T, F>(f: F) -> Result<T, ApiError>
where
    F: FnOnce() -> Result<T, ServiceError> + Send + 'static,
    T: Send + 'static,
{
    match tokio::task::spawn_blocking(f).await {
        Ok(r) => r.map_err(ApiError),
        Err(e) => Err(ServiceError::Internal(format!("worker failed: {e}")).into()),
    }
}

pub fn router(state: AppState) -> Router {
    Router::new()
        .route("/v1/health", get(health))
        .route("/v1/feasibility", post(feasibility))
        .route("/v1/preferences", post(preferences))
        .route("/v1/simulate", post(simulate))
        .route("/v1/builder", post(create_session))
        .route("/v1/builder/{id}", get(get_session))
        .route("/v1/builder/{id}/markers", put(put_markers))
        .route("/v1/builder/{id}/submit", post(submit))
        .route("/v1/builder/{id}/realize", post(realize))
        .layer(TraceLayer::new_for_http())
        .with_state(state)
}

async fn health() -> Json<serde_json::Value> {
    Json(serde_json::json!({ "status": "ok", "version": env!("CARGO_PKG_VERSION") }))
}

async fn feasibility(State(s): State<AppState>, ApiJson(req): ApiJson<ComputeRequest>) -> ApiResult<FeasibilityResponse> {
    blocking(move || service::feasibility(&req, &s.quadrature)).await.map(Json)
}

async fn preferences(State(s): State<AppState>, ApiJson(req): ApiJson<ComputeRequest>) -> ApiResult<PreferenceResult> {
    blocking(move || service::preferences(&req, &s.quadrature)).await.map(Json)
}

async fn simulate(State(s): State<AppState>, ApiJson(req): ApiJson<SimulateRequest>) -> ApiResult<SimulateResponse> {
    blocking(move || service::simulate_request(&req, &s.quadrature).map(|r| r.0)).await.map(Json)
}

async fn create_session(
    State(s): State<AppState>,
    ApiJson(req): ApiJson<CreateSession>,
) -> Result<(StatusCode, Json<SessionState>), ApiError> {
    let market = SinglePeriodMarket::new(req.mu, req.sigma, req.r, req.n)?;
    let session = BuilderSession::new(market, req.budget)?;
    let state = SessionState::new("", &session);
    let id = s.sessions.insert(session);
    Ok((StatusCode::CREATED, Json(SessionState { id, ..state })))
}

/// Runs `f` under the session's lock and returns the updated wire state.
fn with_session<T>(
    s: &AppState,
    id: &str,
    f: impl FnOnce(&mut BuilderSession) -> Result<T, ServiceError>,
) -> Result<(SessionState, T), ApiError> {
    let cell = s.sessions.get(id)?;
    let mut session = cell.lock().unwrap_or_else(PoisonError::into_inner);
    let out = f(&mut session)?;
    Ok((SessionState::new(id, &session), out))
}

async fn get_session(State(s): State<AppState>, Path(id): Path<String>) -> ApiResult<SessionState> {
    Ok(Json(with_session(&s, &id, |_| Ok(()))?.0))
}

async fn put_markers(
    State(s): State<AppState>,
    Path(id): Path<String>,
    ApiJson(req): ApiJson<MarkersUpdate>,
) -> ApiResult<SessionState> {
    Ok(Json(with_session(&s, &id, |b| Ok(b.set_markers(&req.markers)?))?.0))
}

async fn submit(State(s): State<AppState>, Path(id): Path<String>) -> ApiResult<SubmitResponse> {
    let (session, marginal) = with_session(&s, &id, |b| Ok(b.submit()?))?;
    Ok(Json(SubmitResponse { session, marginal }))
}

/// The body is optional; an empty body realizes with seed 0.
async fn realize(State(s): State<AppState>, Path(id): Path<String>, body: Bytes) -> ApiResult<RealizeResponse> {
    let req: RealizeRequest = parse_optional(&body)?;
    let (session, realization) = with_session(&s, &id, |b| Ok(b.realize(req.seed)?))?;
    Ok(Json(RealizeResponse { session, realization }))
}

fn parse_optional<T: DeserializeOwned + Default>(body: &[u8]) -> Result<T, ServiceError> {
    if body.iter().all(u8::is_ascii_whitespace) {
        return Ok(T::default());
    }
    serde_json::from_slice(body).map_err(|e| ServiceError::Invalid(e.to_string()))
}

/// Serves until ctrl-c, purging expired sessions in the background.
pub async fn serve(config: ServiceConfig) -> anyhow::Result<()> {
    let state = AppState::new(&config);
    let sessions = state.sessions.clone();
    let period = (config.session_ttl / 4).max(std::time::Duration::from_secs(1));
    tokio::spawn(async move {
        let mut tick = tokio::time::interval(period);
        loop {
            tick.tick().await;
            let n = sessions.purge_expired();
            if n > 0 {
                tracing::info!(purged = n, "expired builder sessions");
            }
        }
    });
    let listener = tokio::net::TcpListener::bind(config.bind).await?;
    tracing::info!(addr = %listener.local_addr()?, "listening");
    axum::serve(listener, router(state))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await?;
    Ok(())
}
