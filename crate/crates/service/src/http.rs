//! axum routers for the transcription, hyphen and unknown-word services.
//!
//! Every response is JSON with a `status` of `"success"` or `"error"`;
//! errors carry a `message` and a matching HTTP status code.

use std::net::SocketAddr;
use std::sync::Arc;

use axum::body::Bytes;
use axum::extract::multipart::MultipartRejection;
use axum::extract::{DefaultBodyLimit, Multipart, RawQuery, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::{Deserialize, Serialize};
use tokio::net::TcpListener;
use tokio::task::JoinHandle;

use crate::pipeline::{Correction, Models, ServiceError};

const AUDIO_BODY_LIMIT: usize = 64 << 20;
/// Above the text limit, so oversized text reaches the handler and gets a
/// JSON 413 instead of a bare one.
const TEXT_BODY_LIMIT: usize = 16 << 20;

/// Wire format shared by all endpoints.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize, Default)]
pub struct ApiResponse {
    pub status: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub message: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub transcription: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub text: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub comments: Option<Vec<String>>,
}

impl ApiResponse {
    pub fn success() -> Self {
        Self {
            status: "success".into(),
            ..Self::default()
        }
    }

    pub fn error(message: impl Into<String>) -> Self {
        Self {
            status: "error".into(),
            message: Some(message.into()),
            ..Self::default()
        }
    }

    pub fn is_success(&self) -> bool {
        self.status == "success"
    }

    fn correction(c: Correction) -> Self {
        Self {
            text: Some(c.text),
            comments: (!c.comments.is_empty()).then_some(c.comments),
            ..Self::success()
        }
    }
}

fn reply(code: StatusCode, body: ApiResponse) -> Response {
    (code, Json(body)).into_response()
}

fn error_reply(e: ServiceError) -> Response {
    let code = match e {
        ServiceError::BadRequest(_) => StatusCode::BAD_REQUEST,
        ServiceError::TooLarge { .. } => StatusCode::PAYLOAD_TOO_LARGE,
        ServiceError::Internal(_) => StatusCode::INTERNAL_SERVER_ERROR,
    };
    reply(code, ApiResponse::error(e.to_string()))
}

fn bad_request(message: impl Into<String>) -> Response {
    reply(StatusCode::BAD_REQUEST, ApiResponse::error(message))
}

async fn health() -> Response {
    reply(StatusCode::OK, ApiResponse::success())
}

/// Runs CPU-bound work off the async executor.
async fn blocking<T, F>(models: Arc<Models>, f: F) -> Result<T, ServiceError>
where
    T: Send + 'static,
    F: FnOnce(&Models) -> Result<T, ServiceError> + Send + 'static,
{
    tokio::task::spawn_blocking(move || f(&models))
        .await
        .map_err(|e| ServiceError::Internal(format!("worker failed: {e}")))?
}

fn transcription_reply(result: Result<String, ServiceError>) -> Response {
    match result {
        Ok(t) => reply(
            StatusCode::OK,
            ApiResponse {
                transcription: Some(t),
                ..ApiResponse::success()
            },
        ),
        Err(e) => error_reply(e),
    }
}

async fn transcribe(State(models): State<Arc<Models>>, multipart: Result<Multipart, MultipartRejection>) -> Response {
    let mut multipart = match multipart {
        Ok(m) => m,
        Err(e) => return bad_request(format!("expected multipart/form-data with a \"file\" field: {}", e.body_text())),
    };
    let mut file = None;
    loop {
        match multipart.next_field().await {
            Ok(Some(field)) if field.name() == Some("file") => match field.bytes().await {
                Ok(b) => {
                    file = Some(b);
                    break;
                }
                Err(e) => return bad_request(e.body_text()),
            },
            Ok(Some(_)) => continue,
            Ok(None) => break,
            Err(e) => return bad_request(e.body_text()),
        }
    }
    let Some(file) = file else {
        return bad_request("missing \"file\" field");
    };
    transcription_reply(blocking(models, move |m| m.transcribe_wav(&file)).await)
}

async fn transcribe_lattice(State(models): State<Arc<Models>>, body: Bytes) -> Response {
    if body.is_empty() {
        return bad_request("empty body; expected RLAT bytes");
    }
    transcription_reply(blocking(models, move |m| m.transcribe_lattice(&body)).await)
}

#[derive(Deserialize)]
struct TextParam {
    text: Option<String>,
}

fn text_from(encoded: &[u8]) -> Result<Option<String>, String> {
    serde_urlencoded::from_bytes::<TextParam>(encoded)
        .map(|p| p.text)
        .map_err(|e| format!("malformed parameters: {e}"))
}

/// `text` from the form body, falling back to the query string.
fn text_param(query: Option<String>, body: &[u8]) -> Result<String, String> {
    let from_body = if body.is_empty() { None } else { text_from(body)? };
    let text = match from_body {
        Some(t) => Some(t),
        None => text_from(query.unwrap_or_default().as_bytes())?,
    };
    text.ok_or_else(|| "missing \"text\" parameter".to_owned())
}

#[derive(Clone, Copy)]
enum Corrector {
    Hyphen,
    Unknown,
}

async fn correct(models: Arc<Models>, which: Corrector, query: Option<String>, body: Bytes) -> Response {
    let text = match text_param(query, &body) {
        Ok(t) => t,
        Err(m) => return bad_request(m),
    };
    let result = blocking(models, move |m| match which {
        Corrector::Hyphen => m.correct_hyphen(&text),
        Corrector::Unknown => m.correct_unknown(&text),
    })
    .await;
    match result {
        Ok(c) => reply(StatusCode::OK, ApiResponse::correction(c)),
        Err(e) => error_reply(e),
    }
}

fn correct_router(models: Arc<Models>, which: Corrector) -> Router {
    Router::new()
        .route(
            "/correct",
            get(move |State(m): State<Arc<Models>>, RawQuery(q): RawQuery| correct(m, which, q, Bytes::new()))
                .post(move |State(m): State<Arc<Models>>, RawQuery(q): RawQuery, body: Bytes| correct(m, which, q, body)),
        )
        .route("/health", get(health))
        .layer(DefaultBodyLimit::max(TEXT_BODY_LIMIT))
        .with_state(models)
}

/// `/transcribe`, `/transcribe_lattice` and `/health`.
pub fn transcribe_router(models: Arc<Models>) -> Router {
    Router::new()
        .route("/transcribe", post(transcribe))
        .route("/transcribe_lattice", post(transcribe_lattice))
        .route("/health", get(health))
        .layer(DefaultBodyLimit::max(AUDIO_BODY_LIMIT))
        .with_state(models)
}

/// Hyphen and capitalization service: `/correct` and `/health`.
pub fn hyphen_router(models: Arc<Models>) -> Router {
    correct_router(models, Corrector::Hyphen)
}

/// Unknown-word service: `/correct` and `/health`.
pub fn unknown_router(models: Arc<Models>) -> Router {
    correct_router(models, Corrector::Unknown)
}

/// A service bound to a socket and running in the background.
pub struct RunningService {
    pub addr: SocketAddr,
    handle: Option<JoinHandle<std::io::Result<()>>>,
}

impl RunningService {
    pub fn url(&self) -> String {
        format!("http://{}", self.addr)
    }

    pub fn abort(&self) {
        if let Some(h) = &self.handle {
            h.abort();
        }
    }

    /// Waits for the server task; it only ends on error or abort.
    pub async fn join(mut self) -> std::io::Result<()> {
        let Some(handle) = self.handle.take() else {
            return Ok(());
        };
        match handle.await {
            Ok(r) => r,
            Err(e) if e.is_cancelled() => Ok(()),
            Err(e) => Err(std::io::Error::other(e)),
        }
    }
}

impl Drop for RunningService {
    fn drop(&mut self) {
        self.abort();
    }
}

/// Binds `addr` (port 0 picks a free port) and serves `router`.
pub async fn spawn(router: Router, addr: SocketAddr) -> std::io::Result<RunningService> {
    let listener = TcpListener::bind(addr).await?;
    let addr = listener.local_addr()?;
    let handle = tokio::spawn(async move { axum::serve(listener, router).await });
    Ok(RunningService {
        addr,
        handle: Some(handle),
    })
}

/// The three services of one deployment.
pub struct Deployment {
    pub transcribe: RunningService,
    pub hyphen: RunningService,
    pub unknown: RunningService,
}

/// Starts all three services on the given addresses. Models must already
/// be loaded, so a service only accepts connections once it is ready.
pub async fn deploy(models: Arc<Models>, addrs: [SocketAddr; 3]) -> std::io::Result<Deployment> {
    Ok(Deployment {
        transcribe: spawn(transcribe_router(models.clone()), addrs[0]).await?,
        hyphen: spawn(hyphen_router(models.clone()), addrs[1]).await?,
        unknown: spawn(unknown_router(models), addrs[2]).await?,
    })
}
