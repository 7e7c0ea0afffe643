mod support;

use std::sync::Arc;
use std::time::{Duration, Instant};

use insight_core::config::EngineConfig;
use insight_core::error::ErrorCode;
use insight_core::fixtures;
use insight_core::llm::{ScriptedProvider, ScriptedRule};
use insight_core::manager::GuardrailStatus;
use insight_core::orchestrator::{gate_elapsed_ms, Engine, RefusalReason};
use insight_core::types::{Branch, BranchStatus, ChatResponse, Query, Route, SessionId};
use support::stubs::{SlowOod, SlowRouter};

const PRESENTER_Q: &str = "what were my total sales last month";
const INSIGHT_Q: &str = "how does my business perform";

fn key(task: &str, q: &str) -> String {
    format!("[task:{task}]\nQuestion: {q}\n")
}

fn engine(config: EngineConfig, gate_ms: u64, ood: bool, route: Route, rules: Vec<ScriptedRule>) -> Arc<Engine> {
    let delay = Duration::from_millis(gate_ms);
    Arc::new(
        Engine::new(
            config,
            support::embedder(),
            Arc::new(SlowOod {
                delay,
                out_of_domain: ood,
            }),
            Arc::new(SlowRouter { delay, route }),
            Arc::new(ScriptedProvider::new(rules)),
            fixtures::fixture_dataplane().unwrap(),
        )
        .unwrap(),
    )
}

/// Extra rules first so they shadow the fixture script.
fn rules_with(extra: Vec<ScriptedRule>) -> Vec<ScriptedRule> {
    let mut rules = extra;
    rules.extend(fixtures::fixture_rules());
    rules
}

async fn ask(engine: &Arc<Engine>, q: &str) -> (ChatResponse, Duration) {
    let query = Query::new(q, SessionId::new("t"), chrono::Utc::now()).unwrap();
    let started = Instant::now();
    let resp = engine.handle(&query, &fixtures::fixture_context()).await;
    (resp, started.elapsed())
}

fn status_of(resp: &ChatResponse, route: Route) -> Option<BranchStatus> {
    resp.trace.branches.iter().find(|b| b.branch == route).map(|b| b.status)
}

#[tokio::test(flavor = "multi_thread", worker_threads = 2)]
async fn gate_stages_run_in_parallel() {
    let e = engine(EngineConfig::default(), 200, true, Route::Presenter, fixtures::fixture_rules());
    let (resp, wall) = ask(&e, PRESENTER_Q).await;
    assert_eq!(resp.branch, Branch::Refused);
    assert!(wall < Duration::from_millis(320), "wall {wall:?}");
    let gate = gate_elapsed_ms(&resp.trace).unwrap();
    assert!((200.0..320.0).contains(&gate), "gate {gate}");
}

#[tokio::test(flavor = "multi_thread", worker_threads = 2)]
async fn in_domain_gate_is_parallel_too() {
    let e = engine(EngineConfig::default(), 200, false, Route::Presenter, fixtures::fixture_rules());
    let (resp, _) = ask(&e, PRESENTER_Q).await;
    assert_eq!(resp.branch, Branch::Presenter);
    assert!(gate_elapsed_ms(&resp.trace).unwrap() < 320.0);
}

#[tokio::test(flavor = "multi_thread", worker_threads = 2)]
async fn slow_loser_is_terminated_early() {
    // The insight branch stalls for 5 s on its first branch-specific call.
    let slow = vec![
        ScriptedRule::contains(key("domain", PRESENTER_Q), "performance").with_delay(5_000),
        ScriptedRule::contains(key("insight:performance", PRESENTER_Q), "LOSER NARRATIVE"),
    ];
    let e = engine(EngineConfig::default(), 0, false, Route::Presenter, rules_with(slow));
    let (resp, wall) = ask(&e, PRESENTER_Q).await;
    assert!(wall < Duration::from_secs(1), "wall {wall:?}");
    assert_eq!(resp.branch, Branch::Presenter);
    assert_eq!(status_of(&resp, Route::InsightGenerator), Some(BranchStatus::Cancelled));
    assert_eq!(status_of(&resp, Route::Presenter), Some(BranchStatus::Won));
    assert!(!resp.answer.contains("LOSER"));
    assert_eq!(resp.trace.guardrail_checks, 1);
}

#[tokio::test(flavor = "multi_thread", worker_threads = 2)]
async fn slow_presenter_loser_is_terminated_early() {
    let slow = vec![ScriptedRule::contains(key("plan", INSIGHT_Q), "LOSER PLAN").with_delay(5_000)];
    let e = engine(EngineConfig::default(), 0, false, Route::InsightGenerator, rules_with(slow));
    let (resp, wall) = ask(&e, INSIGHT_Q).await;
    assert!(wall < Duration::from_secs(1), "wall {wall:?}");
    assert_eq!(resp.branch, Branch::InsightGenerator);
    assert_eq!(status_of(&resp, Route::Presenter), Some(BranchStatus::Cancelled));
    assert!(resp.trace.planner_response.is_none(), "the presenter planner output must not be merged");
    assert!(!resp.answer.contains("LOSER"));
}

#[tokio::test(flavor = "multi_thread", worker_threads = 2)]
async fn cancelled_branch_text_never_leaks() {
    // The loser would finish first if it were allowed to run.
    let rules = vec![
        ScriptedRule::contains(key("domain", PRESENTER_Q), "performance"),
        ScriptedRule::contains(key("insight:performance", PRESENTER_Q), "LOSER NARRATIVE").with_delay(100),
        ScriptedRule::contains(key("present", PRESENTER_Q), "Winner answer for August 2024.").with_delay(400),
    ];
    let e = engine(EngineConfig::default(), 50, false, Route::Presenter, rules_with(rules));
    let (resp, _) = ask(&e, PRESENTER_Q).await;
    assert_eq!(resp.answer, "Winner answer for August 2024.");
    assert!(resp.trace.supporting.iter().all(|f| f.metric == "sales"));
    // Give a detached loser time to misbehave; nothing can reach the response.
    tokio::time::sleep(Duration::from_millis(200)).await;
    assert!(!resp.answer.contains("LOSER"));
}

#[tokio::test(flavor = "multi_thread", worker_threads = 2)]
async fn out_of_domain_refuses_and_cancels_both() {
    let e = engine(EngineConfig::default(), 0, true, Route::Presenter, fixtures::fixture_rules());
    let (resp, _) = ask(&e, PRESENTER_Q).await;
    let cfg = EngineConfig::default();
    assert_eq!(resp.answer, cfg.refusals.text(&RefusalReason::OutOfDomain));
    assert_eq!(resp.branch, Branch::Refused);
    assert_eq!(resp.trace.branches.len(), 2);
    assert!(resp.trace.branches.iter().all(|b| b.status == BranchStatus::Cancelled));
    assert!(resp.trace.error.is_none());
    // The route is still recorded for audit.
    assert_eq!(resp.trace.route, Some(Route::Presenter));
}

#[tokio::test(flavor = "multi_thread", worker_threads = 2)]
async fn pii_in_answer_is_blocked() {
    let leak = vec![ScriptedRule::contains(key("present", PRESENTER_Q), "Contact jane.doe@example.com for details.")];
    let e = engine(EngineConfig::default(), 0, false, Route::Presenter, rules_with(leak));
    let (resp, _) = ask(&e, PRESENTER_Q).await;
    assert_eq!(resp.branch, Branch::Refused);
    assert!(!resp.answer.contains("example.com"));
    assert_eq!(resp.trace.guardrail.unwrap().status, GuardrailStatus::Blocked);
    assert_eq!(resp.trace.guardrail_checks, 1);
}

#[tokio::test(flavor = "multi_thread", worker_threads = 2)]
async fn total_timeout_keeps_partial_trace() {
    let mut cfg = EngineConfig::default();
    cfg.budgets.total_timeout_ms = 300;
    let slow = vec![ScriptedRule::contains(key("present", PRESENTER_Q), "too late").with_delay(3_000)];
    let e = engine(cfg.clone(), 0, false, Route::Presenter, rules_with(slow));
    let (resp, wall) = ask(&e, PRESENTER_Q).await;
    assert!(wall < Duration::from_secs(1), "wall {wall:?}");
    assert_eq!(resp.answer, cfg.refusals.text(&RefusalReason::TotalTimeout));
    assert_eq!(resp.branch, Branch::Presenter);
    assert_eq!(resp.trace.error.as_ref().unwrap().code, ErrorCode::TotalTimeout);
    assert!(resp.trace.augmented_query.is_some());
    assert!(resp.trace.plan.is_some(), "plan made before the deadline is kept");
    assert!(!resp.trace.step_timings.is_empty());
    assert!(resp.trace.branches.iter().all(|b| b.status != BranchStatus::Won));
}

#[tokio::test(flavor = "multi_thread", worker_threads = 2)]
async fn serial_mode_runs_only_the_routed_branch() {
    let cfg = EngineConfig {
        serial_mode: true,
        ..EngineConfig::default()
    };
    let e = engine(cfg, 0, false, Route::Presenter, fixtures::fixture_rules());
    let (resp, _) = ask(&e, PRESENTER_Q).await;
    assert_eq!(resp.branch, Branch::Presenter);
    assert_eq!(resp.trace.branches.len(), 1);
    assert_eq!(resp.trace.branches[0].status, BranchStatus::Won);
}

#[tokio::test(flavor = "multi_thread", worker_threads = 2)]
async fn llm_failure_becomes_apology_with_error() {
    let e = engine(EngineConfig::default(), 0, false, Route::Presenter, Vec::new());
    let (resp, _) = ask(&e, PRESENTER_Q).await;
    assert_eq!(resp.branch, Branch::Presenter);
    assert_eq!(resp.trace.error.as_ref().unwrap().code, ErrorCode::NoScriptedMatch);
    assert_eq!(status_of(&resp, Route::Presenter), Some(BranchStatus::Failed));
    assert_eq!(resp.trace.guardrail_checks, 1);
}

#[tokio::test(flavor = "multi_thread", worker_threads = 4)]
async fn concurrent_requests_are_isolated() {
    let e = support::fixture_engine();
    let mut set = tokio::task::JoinSet::new();
    for f in fixtures::fixture_items() {
        let e = e.clone();
        set.spawn(async move {
            let (resp, _) = ask(&e, f.question).await;
            (f.id, resp)
        });
    }
    let mut seen = 0;
    while let Some(r) = set.join_next().await {
        let (id, resp) = r.unwrap();
        assert!(resp.trace.error.is_none(), "{id}");
        assert_eq!(resp.trace.guardrail_checks, 1);
        seen += 1;
    }
    assert_eq!(seen, 20);
}
