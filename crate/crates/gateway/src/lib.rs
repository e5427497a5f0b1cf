//! HTTP service and command-line front end for a loaded portal.
//!
//! Every endpoint speaks JSON. Errors come back as
//! `{"error": <code>, "message": <text>}` with a status derived from the
//! error kind (see [`status_for`]).

pub mod cli;

use std::net::SocketAddr;
use std::sync::{Arc, Mutex, MutexGuard};

use axum::body::Bytes;
use axum::extract::{Path, Query, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post, put};
use axum::Router;
use portal_core::engine::{render_structured, Template};
use portal_core::sources::Change;
use portal_core::{Error, Portal, Value};
use serde::{Deserialize, Serialize};

/// The engine behind the service. Requests take the lock for the length
/// of one library call, so state changes are applied one at a time.
pub type SharedPortal = Arc<Mutex<Portal>>;

pub fn share(portal: Portal) -> SharedPortal {
    Arc::new(Mutex::new(portal))
}

#[derive(Debug, thiserror::Error)]
pub enum ServeError {
    #[error("port {port} is unavailable: {reason}")]
    PortUnavailable { port: u16, reason: String },
    #[error("server stopped: {0}")]
    Io(#[from] std::io::Error),
}

/// An error as sent on the wire.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ErrorBody {
    pub error: String,
    pub message: String,
}

impl From<&Error> for ErrorBody {
    fn from(e: &Error) -> Self {
        ErrorBody {
            error: e.code().to_owned(),
            message: e.to_string(),
        }
    }
}

/// Closed or unknown sessions are 401, denied grants 403, missing things
/// 404, ordering and binding conflicts 409, and everything else 400.
pub fn status_for(e: &Error) -> StatusCode {
    match e {
        Error::SessionClosed(_)
        | Error::UnknownRef {
            kind: "session", ..
        } => StatusCode::UNAUTHORIZED,
        Error::AccessDenied(_) => StatusCode::FORBIDDEN,
        Error::UnknownRef { .. }
        | Error::UnknownNavigationPoint(_)
        | Error::UnknownName(_)
        | Error::UnknownEvent(_) => StatusCode::NOT_FOUND,
        Error::OutOfOrderEvent { .. } | Error::DuplicateId { .. } | Error::UnboundSlot { .. } => {
            StatusCode::CONFLICT
        }
        _ => StatusCode::BAD_REQUEST,
    }
}

/// A response body exactly as the library would produce it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Reply {
    pub status: StatusCode,
    pub body: String,
}

impl Reply {
    fn ok(body: String) -> Self {
        Reply {
            status: StatusCode::OK,
            body,
        }
    }

    fn json<T: Serialize>(value: &T) -> Self {
        Reply::ok(serde_json::to_string(value).expect("response serializes"))
    }

    fn error(e: &Error) -> Self {
        Reply {
            status: status_for(e),
            body: serde_json::to_string(&ErrorBody::from(e)).expect("error serializes"),
        }
    }

    fn from_result<T: Serialize>(r: Result<T, Error>) -> Self {
        match r {
            Ok(v) => Reply::json(&v),
            Err(e) => Reply::error(&e),
        }
    }
}

impl IntoResponse for Reply {
    fn into_response(self) -> Response {
        (
            self.status,
            [(header::CONTENT_TYPE, "application/json")],
            self.body,
        )
            .into_response()
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OpenSession {
    pub user: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SessionOpened {
    pub session: String,
    pub role: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SessionEnded {
    pub session: String,
    pub closed: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SourceEvent {
    pub key: Value,
    pub change: Change,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Rebuilt {
    pub rebuilt: Vec<String>,
}

#[derive(Debug, Deserialize)]
pub struct SessionParam {
    pub session: Option<String>,
}

fn parse<T: for<'de> Deserialize<'de>>(body: &[u8]) -> Result<T, Error> {
    serde_json::from_slice(body).map_err(|e| Error::Parse(format!("request body: {e}")))
}

/// A request without `?session=` is treated like one naming an unknown
/// session.
fn need_session(session: Option<&str>) -> Result<&str, Error> {
    session.ok_or_else(|| Error::UnknownRef {
        kind: "session",
        id: String::new(),
    })
}

fn lock(portal: &SharedPortal) -> MutexGuard<'_, Portal> {
    // A panicking handler poisons the lock; later requests keep serving.
    portal.lock().unwrap_or_else(|p| p.into_inner())
}

// The operations below are the whole service. Handlers only adapt them to
// HTTP; tests call them directly to compare against recorded responses.

pub fn open_session(portal: &mut Portal, body: &[u8]) -> Reply {
    Reply::from_result(parse::<OpenSession>(body).and_then(|req| {
        let s = portal.open_session(&req.user)?;
        Ok(SessionOpened {
            session: s.id.to_string(),
            role: s.role.to_string(),
        })
    }))
}

pub fn end_session(portal: &mut Portal, id: &str) -> Reply {
    if portal.session(id).is_err() {
        return Reply::error(&Error::UnknownRef {
            kind: "session",
            id: id.to_owned(),
        });
    }
    Reply::json(&SessionEnded {
        session: id.to_owned(),
        closed: portal.end_session(id),
    })
}

pub fn get_page(portal: &mut Portal, nav: &str, session: Option<&str>) -> Reply {
    let page = need_session(session).and_then(|s| portal.view_page(nav, s));
    match page {
        Ok(p) => Reply::ok(render_structured(&p)),
        Err(e) => Reply::error(&e),
    }
}

pub fn post_event(portal: &mut Portal, source: &str, session: Option<&str>, body: &[u8]) -> Reply {
    let result = need_session(session).and_then(|s| {
        let ev: SourceEvent = parse(body)?;
        portal.submit_update_as(s, source, ev.key, ev.change)
    });
    Reply::from_result(result)
}

pub fn get_template(portal: &Portal, id: &str, session: Option<&str>) -> Reply {
    Reply::from_result(need_session(session).and_then(|s| portal.template_as(s, id).cloned()))
}

pub fn put_template(portal: &mut Portal, id: &str, session: Option<&str>, body: &[u8]) -> Reply {
    let result = need_session(session)
        .and_then(|s| {
            let t: Template = parse(body)?;
            if t.id.as_str() != id {
                return Err(Error::Invalid {
                    section: "templates",
                    id: id.to_owned(),
                    reason: format!("body describes template `{}`", t.id),
                });
            }
            portal.put_template_as(s, t)
        })
        .map(|navs| Rebuilt {
            rebuilt: navs.into_iter().map(|n| n.to_string()).collect(),
        });
    Reply::from_result(result)
}

pub fn get_meta(portal: &Portal, level: &str, id: &str, session: Option<&str>) -> Reply {
    let result = need_session(session).and_then(|s| {
        let level: u32 = level
            .parse()
            .map_err(|_| Error::Parse(format!("metadata level `{level}` is not a number")))?;
        portal.meta_object_as(s, level, id)
    });
    Reply::from_result(result)
}

pub fn get_stats(portal: &Portal) -> Reply {
    Reply::json(&portal.stats_report())
}

// -- axum glue --------------------------------------------------------------

async fn h_open(State(p): State<SharedPortal>, body: Bytes) -> Reply {
    open_session(&mut lock(&p), &body)
}

async fn h_end(State(p): State<SharedPortal>, Path(id): Path<String>) -> Reply {
    end_session(&mut lock(&p), &id)
}

async fn h_page(
    State(p): State<SharedPortal>,
    Path(nav): Path<String>,
    Query(q): Query<SessionParam>,
) -> Reply {
    get_page(&mut lock(&p), &nav, q.session.as_deref())
}

async fn h_event(
    State(p): State<SharedPortal>,
    Path(id): Path<String>,
    Query(q): Query<SessionParam>,
    body: Bytes,
) -> Reply {
    post_event(&mut lock(&p), &id, q.session.as_deref(), &body)
}

async fn h_get_template(
    State(p): State<SharedPortal>,
    Path(id): Path<String>,
    Query(q): Query<SessionParam>,
) -> Reply {
    get_template(&lock(&p), &id, q.session.as_deref())
}

async fn h_put_template(
    State(p): State<SharedPortal>,
    Path(id): Path<String>,
    Query(q): Query<SessionParam>,
    body: Bytes,
) -> Reply {
    put_template(&mut lock(&p), &id, q.session.as_deref(), &body)
}

async fn h_meta(
    State(p): State<SharedPortal>,
    Path((level, id)): Path<(String, String)>,
    Query(q): Query<SessionParam>,
) -> Reply {
    get_meta(&lock(&p), &level, &id, q.session.as_deref())
}

async fn h_stats(State(p): State<SharedPortal>) -> Reply {
    get_stats(&lock(&p))
}

async fn h_fallback() -> Reply {
    Reply {
        status: StatusCode::NOT_FOUND,
        body: serde_json::to_string(&ErrorBody {
            error: "NotFound".into(),
            message: "no such endpoint".into(),
        })
        .expect("error serializes"),
    }
}

pub fn router(portal: SharedPortal) -> Router {
    Router::new()
        .route("/api/sessions", post(h_open))
        .route("/api/sessions/{id}", axum::routing::delete(h_end))
        .route("/api/pages/{nav}", get(h_page))
        .route("/api/sources/{id}/events", post(h_event))
        .route("/api/admin/templates/{id}", get(h_get_template))
        .route("/api/admin/templates/{id}", put(h_put_template))
        .route("/api/meta/{level}/{id}", get(h_meta))
        .route("/api/stats", get(h_stats))
        .fallback(h_fallback)
        .with_state(portal)
}

/// Binds `127.0.0.1:port` (port 0 picks a free one). The returned listener
/// is ready for [`serve_on`].
pub async fn bind(port: u16) -> Result<tokio::net::TcpListener, ServeError> {
    let addr = SocketAddr::from(([127, 0, 0, 1], port));
    tokio::net::TcpListener::bind(addr)
        .await
        .map_err(|e| ServeError::PortUnavailable {
            port,
            reason: e.to_string(),
        })
}

pub async fn serve_on(
    listener: tokio::net::TcpListener,
    portal: SharedPortal,
) -> Result<(), ServeError> {
    axum::serve(listener, router(portal)).await?;
    Ok(())
}

pub async fn serve(portal: SharedPortal, port: u16) -> Result<(), ServeError> {
    let listener = bind(port).await?;
    serve_on(listener, portal).await
}
