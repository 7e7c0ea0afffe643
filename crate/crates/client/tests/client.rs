use std::time::Duration;

use axum::extract::RawQuery;
use axum::http::StatusCode;
use axum::routing::{get, post};
use axum::{Json, Router};
use insight_client::{ClientError, InsightClient};
use insight_core::api::{ChatApiRequest, ChatApiResponse, ErrorBody, HealthResponse};
use insight_core::eval::ChatBackend;
use insight_core::types::{Branch, ExecutionTrace, SessionId};
use insight_core::Error;

async fn chat(RawQuery(q): RawQuery, Json(req): Json<ChatApiRequest>) -> (StatusCode, Json<serde_json::Value>) {
    let err = |status: StatusCode, code: &str| {
        let body = ErrorBody {
            code: code.into(),
            message: format!("{code} happened"),
            trace: Some(ExecutionTrace::default()),
        };
        (status, Json(serde_json::to_value(body).unwrap()))
    };
    match req.query.as_str() {
        "" => err(StatusCode::BAD_REQUEST, "EMPTY_QUERY"),
        "slow" => err(StatusCode::GATEWAY_TIMEOUT, "TOTAL_TIMEOUT"),
        q_text => {
            let mut resp = ChatApiResponse {
                answer: format!("{q_text}|{}", req.session_id.unwrap_or_default()),
                branch: Branch::Presenter,
                trace: Some(ExecutionTrace::default()),
                latency_ms: 5,
            };
            if q.as_deref() == Some("trace=false") {
                resp = resp.without_trace();
            }
            (StatusCode::OK, Json(serde_json::to_value(resp).unwrap()))
        }
    }
}

async fn mock() -> String {
    let app = Router::new()
        .route(
            "/v1/health",
            get(|| async {
                Json(HealthResponse {
                    status: "ok".into(),
                    models_loaded: true,
                })
            }),
        )
        .route("/v1/chat", post(chat));
    let listener = tokio::net::TcpListener::bind("127.0.0.1:0").await.unwrap();
    let addr = listener.local_addr().unwrap();
    tokio::spawn(async move { axum::serve(listener, app).await.unwrap() });
    format!("http://{addr}/")
}

#[tokio::test]
async fn health_and_ready() {
    let c = InsightClient::new(mock().await);
    assert!(!c.base_url().ends_with('/'));
    assert!(c.health().await.unwrap().models_loaded);
    c.wait_ready(Duration::from_secs(2)).await.unwrap();
}

#[tokio::test]
async fn chat_round_trip_and_trace_opt_out() {
    let c = InsightClient::new(mock().await);
    let req = ChatApiRequest::new("total sales").with_session("s1");
    let r = c.chat(&req).await.unwrap();
    assert_eq!(r.answer, "total sales|s1");
    assert_eq!(r.branch, Branch::Presenter);
    assert!(r.trace.is_some());
    assert!(c.chat_without_trace(&req).await.unwrap().trace.is_none());
}

#[tokio::test]
async fn error_bodies_surface_codes() {
    let c = InsightClient::new(mock().await);
    let e = c.chat(&ChatApiRequest::new("")).await.unwrap_err();
    assert!(matches!(&e, ClientError::Api { status: 400, .. }));
    assert_eq!(e.code(), Some("EMPTY_QUERY"));
    match c.chat(&ChatApiRequest::new("slow")).await.unwrap_err() {
        ClientError::Api { status, body } => {
            assert_eq!(status, 504);
            assert!(body.trace.is_some());
        }
        other => panic!("{other:?}"),
    }
}

#[tokio::test]
async fn backend_maps_errors() {
    let c = InsightClient::new(mock().await);
    let s = SessionId::new("b");
    assert_eq!(ChatBackend::chat(&c, "hi", &s).await.unwrap().answer, "hi|b");
    assert!(matches!(ChatBackend::chat(&c, "", &s).await, Err(Error::EmptyQuery)));
    assert!(matches!(ChatBackend::chat(&c, "slow", &s).await, Err(Error::TotalTimeout { .. })));
}

#[tokio::test]
async fn unreachable_service_is_a_transport_error() {
    let listener = std::net::TcpListener::bind("127.0.0.1:0").unwrap();
    let addr = listener.local_addr().unwrap();
    drop(listener);
    let c = InsightClient::with_timeout(format!("http://{addr}"), Duration::from_secs(2));
    assert!(matches!(c.health().await, Err(ClientError::Transport { .. })));
    assert!(matches!(c.wait_ready(Duration::from_millis(300)).await, Err(ClientError::NotReady(_))));
}
