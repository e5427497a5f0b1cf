use axum::body::Body;
use axum::http::{Method, Request, StatusCode};
use axum::Router;
use http_body_util::BodyExt;
use portal_core::bundle::load_bundle;
use portal_gateway::{bind, router, serve_on, share, ServeError};
use serde_json::{json, Value};
use tokio::io::{AsyncReadExt, AsyncWriteExt};
use tower::ServiceExt;

use portal_testkit::seed_bundle;

fn app() -> Router {
    router(share(load_bundle(seed_bundle()).unwrap()))
}

async fn call(app: &Router, method: Method, uri: &str, body: Value) -> (StatusCode, Value) {
    let body = if body.is_null() {
        Body::empty()
    } else {
        Body::from(body.to_string())
    };
    let req = Request::builder()
        .method(method)
        .uri(uri)
        .body(body)
        .unwrap();
    let resp = app.clone().oneshot(req).await.unwrap();
    let status = resp.status();
    let bytes = resp.into_body().collect().await.unwrap().to_bytes();
    (status, serde_json::from_slice(&bytes).unwrap())
}

async fn open(app: &Router, user: &str) -> String {
    let (status, body) = call(app, Method::POST, "/api/sessions", json!({ "user": user })).await;
    assert_eq!(status, StatusCode::OK, "{body}");
    body["session"].as_str().unwrap().to_owned()
}

fn slot<'a>(page: &'a Value, name: &str) -> Option<&'a Value> {
    page["slots"]
        .as_array()
        .unwrap()
        .iter()
        .find(|s| s["name"] == name)
}

#[tokio::test]
async fn sessions_open_and_close() {
    let app = app();
    let (status, body) = call(&app, Method::POST, "/api/sessions", json!({"user": "m1"})).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(body["role"], "manager");
    let id = body["session"].as_str().unwrap().to_owned();

    let (status, body) = call(
        &app,
        Method::DELETE,
        &format!("/api/sessions/{id}"),
        Value::Null,
    )
    .await;
    assert_eq!(
        (status, body["closed"].as_bool()),
        (StatusCode::OK, Some(true))
    );
    let (status, body) = call(
        &app,
        Method::GET,
        &format!("/api/pages/press-room?session={id}"),
        Value::Null,
    )
    .await;
    assert_eq!(status, StatusCode::UNAUTHORIZED);
    assert_eq!(body["error"], "SessionClosed");

    let (status, _) = call(&app, Method::DELETE, "/api/sessions/nope", Value::Null).await;
    assert_eq!(status, StatusCode::UNAUTHORIZED);
    let (status, body) = call(
        &app,
        Method::POST,
        "/api/sessions",
        json!({"user": "ghost"}),
    )
    .await;
    assert_eq!(
        (status, body["error"].as_str()),
        (StatusCode::NOT_FOUND, Some("UnknownRef"))
    );
    let (status, body) = call(&app, Method::POST, "/api/sessions", json!({"usr": "m1"})).await;
    assert_eq!(
        (status, body["error"].as_str()),
        (StatusCode::BAD_REQUEST, Some("ParseError"))
    );
}

#[tokio::test]
async fn pages_follow_the_session_view() {
    let app = app();
    let corporate = open(&app, "u3").await;
    let visitor = open(&app, "u2").await;
    let (status, page) = call(
        &app,
        Method::GET,
        &format!("/api/pages/press-room?session={corporate}"),
        Value::Null,
    )
    .await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(slot(&page, "shareholders").unwrap()["kind"], "grid");
    let (_, public) = call(
        &app,
        Method::GET,
        &format!("/api/pages/press-room?session={visitor}"),
        Value::Null,
    )
    .await;
    assert!(slot(&public, "shareholders").is_none());

    let (status, _) = call(&app, Method::GET, "/api/pages/press-room", Value::Null).await;
    assert_eq!(status, StatusCode::UNAUTHORIZED);
    let (status, body) = call(
        &app,
        Method::GET,
        &format!("/api/pages/lobby?session={corporate}"),
        Value::Null,
    )
    .await;
    assert_eq!(
        (status, body["error"].as_str()),
        (StatusCode::NOT_FOUND, Some("UnknownNavigationPoint"))
    );
}

#[tokio::test]
async fn an_event_shows_up_in_the_next_page() {
    let app = app();
    let admin = open(&app, "a1").await;
    let reader = open(&app, "u3").await;
    let page_uri = format!("/api/pages/press-room?session={reader}");
    let (_, before) = call(&app, Method::GET, &page_uri, Value::Null).await;

    let event = json!({"key": 1, "change": {"upsert": {"shares": 424242}}});
    let (status, body) = call(
        &app,
        Method::POST,
        &format!("/api/sources/fin/events?session={admin}"),
        event.clone(),
    )
    .await;
    assert_eq!(status, StatusCode::OK, "{body}");
    assert_eq!(body["seq"], 1);
    assert_eq!(body["rebuilt"], json!(["press-room"]));

    let (_, after) = call(&app, Method::GET, &page_uri, Value::Null).await;
    assert_ne!(before, after);
    assert!(after.to_string().contains("424242"));

    // Ordinary users hold no write grant on the table.
    let ordinary = open(&app, "u1").await;
    let (status, body) = call(
        &app,
        Method::POST,
        &format!("/api/sources/fin/events?session={ordinary}"),
        event,
    )
    .await;
    assert_eq!(
        (status, body["error"].as_str()),
        (StatusCode::FORBIDDEN, Some("AccessDenied"))
    );
    let (status, _) = call(
        &app,
        Method::POST,
        &format!("/api/sources/fin/events?session={admin}"),
        json!({"change": "delete"}),
    )
    .await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
    let (status, _) = call(
        &app,
        Method::POST,
        &format!("/api/sources/payroll/events?session={admin}"),
        json!({"key": 1, "change": "delete"}),
    )
    .await;
    assert_eq!(status, StatusCode::NOT_FOUND);
}

#[tokio::test]
async fn templates_are_editable_by_managers() {
    let app = app();
    let manager = open(&app, "m1").await;
    let ordinary = open(&app, "u1").await;
    let uri = |s: &str| format!("/api/admin/templates/press-release-annual?session={s}");

    let (status, template) = call(&app, Method::GET, &uri(&manager), Value::Null).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(template["id"], "press-release-annual");
    let (status, _) = call(&app, Method::GET, &uri(&ordinary), Value::Null).await;
    assert_eq!(status, StatusCode::FORBIDDEN);

    // Only cached pages are rebuilt.
    let (status, body) = call(&app, Method::PUT, &uri(&manager), template.clone()).await;
    assert_eq!(
        (status, &body["rebuilt"]),
        (StatusCode::OK, &json!([])),
        "{body}"
    );
    call(
        &app,
        Method::GET,
        &format!("/api/pages/press-room?session={manager}"),
        Value::Null,
    )
    .await;
    let (status, body) = call(&app, Method::PUT, &uri(&manager), template.clone()).await;
    assert_eq!(status, StatusCode::OK, "{body}");
    assert_eq!(body["rebuilt"], json!(["press-room"]));

    let mut renamed = template.clone();
    renamed["id"] = "other".into();
    let (status, _) = call(&app, Method::PUT, &uri(&manager), renamed).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);

    let mut broken = template;
    broken["slots"][0]["binding"] = json!({"source_query": {"source": "payroll", "pred": "true"}});
    let (status, body) = call(&app, Method::PUT, &uri(&manager), broken).await;
    assert_eq!(status, StatusCode::BAD_REQUEST, "{body}");
}

#[tokio::test]
async fn metadata_and_stats() {
    let app = app();
    let admin = open(&app, "a1").await;
    let (status, meta) = call(
        &app,
        Method::GET,
        &format!("/api/meta/2/DocumentSchemas?session={admin}"),
        Value::Null,
    )
    .await;
    assert_eq!(status, StatusCode::OK, "{meta}");
    let (status, _) = call(
        &app,
        Method::GET,
        &format!("/api/meta/x/DocumentSchemas?session={admin}"),
        Value::Null,
    )
    .await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
    let (status, _) = call(
        &app,
        Method::GET,
        &format!("/api/meta/1/Nothing?session={admin}"),
        Value::Null,
    )
    .await;
    assert_eq!(status, StatusCode::NOT_FOUND);

    for _ in 0..3 {
        call(
            &app,
            Method::GET,
            &format!("/api/pages/press-room?session={admin}"),
            Value::Null,
        )
        .await;
    }
    let (status, stats) = call(&app, Method::GET, "/api/stats", Value::Null).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(stats["total"], 3);
    assert_eq!(
        stats["rows"],
        json!([{"nav_point": "press-room", "role": "administrator", "views": 3}])
    );

    let (status, body) = call(&app, Method::GET, "/api/nowhere", Value::Null).await;
    assert_eq!(
        (status, body["error"].as_str()),
        (StatusCode::NOT_FOUND, Some("NotFound"))
    );
}

#[tokio::test]
async fn serves_over_tcp_and_reports_taken_ports() {
    let listener = bind(0).await.unwrap();
    let port = listener.local_addr().unwrap().port();
    let server = tokio::spawn(serve_on(
        listener,
        share(load_bundle(seed_bundle()).unwrap()),
    ));

    match bind(port).await {
        Err(ServeError::PortUnavailable { port: p, .. }) => assert_eq!(p, port),
        other => panic!("expected PortUnavailable, got {other:?}"),
    }

    let mut stream = tokio::net::TcpStream::connect(("127.0.0.1", port))
        .await
        .unwrap();
    stream
        .write_all(b"GET /api/stats HTTP/1.1\r\nHost: localhost\r\nConnection: close\r\n\r\n")
        .await
        .unwrap();
    let mut response = String::new();
    stream.read_to_string(&mut response).await.unwrap();
    assert!(response.starts_with("HTTP/1.1 200"), "{response}");
    assert!(response
        .to_ascii_lowercase()
        .contains("content-type: application/json"));
    server.abort();
}
