use std::path::PathBuf;
use std::sync::{Arc, OnceLock};
use std::time::Duration;

use insight_client::{ClientError, InsightClient};
use insight_core::api::ChatApiRequest;
use insight_core::embedding::HashingEmbedder;
use insight_core::fixtures;
use insight_core::llm::{ScriptedProvider, ScriptedRule};
use insight_core::orchestrator::Engine;
use insight_core::types::{Branch, SessionId};
use insight_service::{AppState, ServiceConfig};

const INSIGHT_Q: &str = "how does my business perform";
const PRESENTER_Q: &str = "what were my total sales last month";

/// Gate models trained once and written to disk, with a config that loads
/// them.
fn model_config() -> &'static (tempfile::TempDir, PathBuf) {
    static C: OnceLock<(tempfile::TempDir, PathBuf)> = OnceLock::new();
    C.get_or_init(|| {
        let dir = tempfile::tempdir().unwrap();
        let (ood, router) = ServiceConfig::fixture().models(&HashingEmbedder::default()).unwrap();
        std::fs::write(dir.path().join("ood.json"), ood.to_json().unwrap()).unwrap();
        std::fs::write(dir.path().join("router.json"), router.to_json().unwrap()).unwrap();
        let path = dir.path().join("service.toml");
        std::fs::write(&path, "today = \"2024-09-10\"\n\n[models]\nood = \"ood.json\"\nrouter = \"router.json\"\n").unwrap();
        (dir, path)
    })
}

fn engine() -> Arc<Engine> {
    static E: OnceLock<Arc<Engine>> = OnceLock::new();
    E.get_or_init(|| Arc::new(ServiceConfig::from_file(&model_config().1).unwrap().build_engine().unwrap())).clone()
}

async fn spawn(state: Arc<AppState>) -> InsightClient {
    let listener = tokio::net::TcpListener::bind("127.0.0.1:0").await.unwrap();
    let addr = listener.local_addr().unwrap();
    tokio::spawn(insight_service::serve(listener, state));
    InsightClient::new(format!("http://{addr}"))
}

async fn fixture_client() -> (InsightClient, Arc<AppState>) {
    let state = AppState::with_engine(engine(), fixtures::fixture_context(), 10);
    (spawn(state.clone()).await, state)
}

#[tokio::test]
async fn insight_question_answers_from_the_insight_branch() {
    let (c, _) = fixture_client().await;
    let r = c.chat(&ChatApiRequest::new(INSIGHT_Q)).await.unwrap();
    assert_eq!(r.branch, Branch::InsightGenerator);
    let trace = r.trace.unwrap();
    assert!(trace.error.is_none());
    assert!(!trace.supporting.is_empty());
}

#[tokio::test]
async fn presenter_question_carries_a_replayable_plan() {
    let (c, _) = fixture_client().await;
    let r = c.chat(&ChatApiRequest::new(PRESENTER_Q)).await.unwrap();
    assert_eq!(r.branch, Branch::Presenter);
    let trace = r.trace.unwrap();
    let plan = trace.plan.expect("plan in trace");
    assert_eq!(plan.steps.len(), trace.step_timings.len());
}

#[tokio::test]
async fn empty_and_oversized_queries_are_rejected() {
    let (c, _) = fixture_client().await;
    let e = c.chat(&ChatApiRequest::new("")).await.unwrap_err();
    assert!(matches!(e, ClientError::Api { status: 400, .. }));
    assert_eq!(e.code(), Some("EMPTY_QUERY"));
    let e = c.chat(&ChatApiRequest::new("   ")).await.unwrap_err();
    assert_eq!(e.code(), Some("EMPTY_QUERY"));
    let e = c.chat(&ChatApiRequest::new("x".repeat(5000))).await.unwrap_err();
    assert!(matches!(e, ClientError::Api { status: 413, .. }));
    assert_eq!(e.code(), Some("QUERY_TOO_LONG"));
}

#[tokio::test]
async fn out_of_domain_is_a_refusal_not_an_error() {
    let (c, _) = fixture_client().await;
    let r = c.chat(&ChatApiRequest::new("weather?")).await.unwrap();
    assert_eq!(r.branch, Branch::Refused);
    assert!(r.latency_ms < 30_000);
}

#[tokio::test]
async fn malformed_body_is_a_bad_request() {
    let (c, _) = fixture_client().await;
    let http = reqwest_like_post(c.base_url(), "{\"q\": 1}").await;
    assert_eq!(http.0, 400);
    assert!(http.1.contains("INVALID_REQUEST"), "{}", http.1);
}

/// Raw POST without the client's typed body.
async fn reqwest_like_post(base: &str, body: &str) -> (u16, String) {
    use tokio::io::{AsyncReadExt, AsyncWriteExt};
    let addr = base.trim_start_matches("http://");
    let mut s = tokio::net::TcpStream::connect(addr).await.unwrap();
    let req = format!(
        "POST /v1/chat HTTP/1.1\r\nHost: {addr}\r\nContent-Type: application/json\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{body}",
        body.len()
    );
    s.write_all(req.as_bytes()).await.unwrap();
    let mut out = String::new();
    s.read_to_string(&mut out).await.unwrap();
    let status = out.split_whitespace().nth(1).unwrap().parse().unwrap();
    (status, out)
}

#[tokio::test]
async fn health_reports_model_loading() {
    let state = AppState::new(fixtures::fixture_context(), 10);
    let c = spawn(state.clone()).await;
    for _ in 0..3 {
        let h = c.health().await.unwrap();
        assert_eq!((h.status.as_str(), h.models_loaded), ("ok", false));
    }
    let e = c.chat(&ChatApiRequest::new(PRESENTER_Q)).await.unwrap_err();
    assert!(matches!(e, ClientError::Api { status: 503, .. }));
    state.set_engine(engine());
    for _ in 0..3 {
        assert!(c.health().await.unwrap().models_loaded);
    }
}

#[tokio::test]
async fn trace_can_be_left_out() {
    let (c, _) = fixture_client().await;
    let r = c.chat_without_trace(&ChatApiRequest::new(PRESENTER_Q)).await.unwrap();
    assert!(r.trace.is_none());
    assert_eq!(r.branch, Branch::Presenter);
}

#[tokio::test]
async fn sessions_keep_the_last_ten_turns() {
    let (c, state) = fixture_client().await;
    let items = fixtures::fixture_items();
    for f in items.iter().take(12) {
        c.chat(&ChatApiRequest::new(f.question).with_session("s1")).await.unwrap();
    }
    c.chat(&ChatApiRequest::new(PRESENTER_Q).with_session("s2")).await.unwrap();
    let turns = state.session_turns(&SessionId::new("s1"));
    assert_eq!(turns.len(), 10);
    assert_eq!(turns[0].query, items[2].question);
    assert_eq!(turns[9].query, items[11].question);
    assert_eq!(state.session_turns(&SessionId::new("s2")).len(), 1);
}

#[tokio::test]
async fn today_override_moves_the_period() {
    let (c, _) = fixture_client().await;
    let today = chrono::NaiveDate::from_ymd_opt(2024, 8, 15).unwrap();
    let r = c.chat(&ChatApiRequest::new(PRESENTER_Q).with_today(today)).await.unwrap();
    let augmented = r.trace.unwrap().augmented_query.unwrap();
    assert!(augmented.contains("2024-08-15"), "{augmented}");
}

#[tokio::test]
async fn total_timeout_is_a_gateway_timeout_with_partial_trace() {
    let base = engine();
    let mut config = base.config.clone();
    config.budgets.total_timeout_ms = 300;
    let mut rules = vec![ScriptedRule::contains(format!("[task:present]\nQuestion: {PRESENTER_Q}\n"), "late").with_delay(3_000)];
    rules.extend(fixtures::fixture_rules());
    let slow = Engine::new(
        config,
        base.embedder.clone(),
        base.ood.clone(),
        base.router.clone(),
        Arc::new(ScriptedProvider::new(rules)),
        base.dataplane.clone(),
    )
    .unwrap();
    let c = spawn(AppState::with_engine(Arc::new(slow), fixtures::fixture_context(), 10)).await;
    match c.chat(&ChatApiRequest::new(PRESENTER_Q)).await.unwrap_err() {
        ClientError::Api { status, body } => {
            assert_eq!(status, 504);
            assert_eq!(body.code, "TOTAL_TIMEOUT");
            assert!(body.trace.unwrap().plan.is_some());
        }
        other => panic!("{other:?}"),
    }
}

#[tokio::test(flavor = "multi_thread", worker_threads = 4)]
async fn concurrent_requests_all_answer() {
    let (c, state) = fixture_client().await;
    let mut set = tokio::task::JoinSet::new();
    for (i, f) in fixtures::fixture_items().into_iter().enumerate() {
        let c = c.clone();
        set.spawn(async move { c.chat(&ChatApiRequest::new(f.question).with_session(format!("c{}", i % 3))).await });
    }
    let mut n = 0;
    while let Some(r) = set.join_next().await {
        let r = r.unwrap().unwrap();
        assert!(r.trace.unwrap().error.is_none());
        n += 1;
    }
    assert_eq!(n, 20);
    let total: usize = (0..3).map(|i| state.session_turns(&SessionId::new(format!("c{i}"))).len()).sum();
    assert_eq!(total, 20);
}

#[tokio::test]
async fn restart_with_same_artifacts_reproduces_answers() {
    let cfg = ServiceConfig::from_file(&model_config().1).unwrap();
    let fresh = Arc::new(cfg.build_engine().unwrap());
    let a = spawn(AppState::with_engine(engine(), fixtures::fixture_context(), 10)).await;
    let b = spawn(AppState::with_engine(fresh, fixtures::fixture_context(), 10)).await;
    for f in fixtures::fixture_items() {
        let req = ChatApiRequest::new(f.question);
        let (ra, rb) = (a.chat(&req).await.unwrap(), b.chat(&req).await.unwrap());
        assert_eq!(ra.answer, rb.answer, "{}", f.id);
        let (ta, tb) = (ra.trace.unwrap(), rb.trace.unwrap());
        assert_eq!(serde_json::to_string(&ta.supporting).unwrap(), serde_json::to_string(&tb.supporting).unwrap());
        assert_eq!(ta.plan, tb.plan);
        assert_eq!(ta.gate_score.to_bits(), tb.gate_score.to_bits());
    }
}

#[tokio::test]
async fn start_binds_then_loads() {
    let (addr, state, handle) = insight_service::start(ServiceConfig::from_file(&model_config().1).unwrap(), "127.0.0.1:0").await.unwrap();
    let c = InsightClient::new(format!("http://{addr}"));
    c.wait_ready(Duration::from_secs(60)).await.unwrap();
    assert!(state.models_loaded());
    assert_eq!(c.chat(&ChatApiRequest::new(INSIGHT_Q)).await.unwrap().branch, Branch::InsightGenerator);
    handle.abort();
}
