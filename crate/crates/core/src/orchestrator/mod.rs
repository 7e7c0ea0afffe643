//! The manager agent's control flow: embedding, the OOD gate and router in
//! parallel, speculative launch of both worker branches, early termination
//! of the loser, guardrail screening and trace assembly.

pub mod branch;
pub mod refusal;

pub use branch::{BranchFragment, BranchInput};
pub use refusal::{refusal_response, RefusalMessages, RefusalReason};

use std::sync::{Arc, Mutex, MutexGuard};
use std::time::{Duration, Instant};

use tokio::task::JoinHandle;
use tokio_util::sync::CancellationToken;

use crate::config::EngineConfig;
use crate::dataplane::Dataplane;
use crate::embedding::{Embedder, Embedding};
use crate::error::{Error, ErrorInfo, Result};
use crate::llm::{LlmProvider, PromptLibrary};
use crate::manager::{augment_query, build_temporal_context, BranchRouter, Guardrail, OodDetector, OodVerdict, RouteDecision};
use crate::types::{
    Branch, BranchRecord, BranchStatus, ChatResponse, ExecutionTrace, GateVerdict, Query, Route, SellerContext, StepTiming,
};
use crate::workers::ResolutionPaths;
use branch::{run_branch, SharedFragment};

pub(crate) fn lock<T>(m: &Mutex<T>) -> MutexGuard<'_, T> {
    m.lock().unwrap_or_else(|poisoned| poisoned.into_inner())
}

pub(crate) fn ms_since(origin: Instant) -> f64 {
    origin.elapsed().as_secs_f64() * 1000.0
}

/// Everything a request needs, shared immutably across requests.
pub struct Engine {
    pub config: EngineConfig,
    pub embedder: Arc<dyn Embedder>,
    pub ood: Arc<dyn OodDetector>,
    pub router: Arc<dyn BranchRouter>,
    pub llm: Arc<dyn LlmProvider>,
    pub prompts: Arc<PromptLibrary>,
    pub dataplane: Dataplane,
    pub paths: Arc<ResolutionPaths>,
    pub guardrail: Arc<Guardrail>,
}

struct Launched {
    route: Route,
    cancel: CancellationToken,
    frag: SharedFragment,
    handle: JoinHandle<Result<String>>,
    started_ms: f64,
}

/// Per-request mutable state. The winner's fragment is registered as soon
/// as routing resolves so a timeout can still report it.
#[derive(Default)]
struct RequestState {
    trace: Mutex<ExecutionTrace>,
    winner: Mutex<Option<SharedFragment>>,
}

struct Answer {
    text: String,
    branch: Branch,
}

fn stage(trace: &mut ExecutionTrace, id: &str, started_ms: f64, elapsed_ms: f64) {
    trace.stage_timings.push(StepTiming {
        step_id: id.to_string(),
        started_ms,
        elapsed_ms,
    });
}

fn join_error(e: tokio::task::JoinError) -> Error {
    Error::Provider(format!("background task failed: {e}"))
}

fn merge(trace: &mut ExecutionTrace, f: &BranchFragment) {
    trace.scope = f.scope.clone();
    trace.domain = f.domain;
    trace.plan = f.plan.clone();
    trace.planner_response = f.planner_responses.last().cloned();
    trace.plan_attempts = f.plan_attempts;
    trace.step_timings = f.step_timings.clone();
    trace.stage_timings.extend(f.stage_timings.iter().cloned());
    trace.supporting = f.supporting.clone();
    trace.warnings.extend(f.warnings.iter().cloned());
}

impl Engine {
    /// An engine with the bundled prompts, resolution paths and guardrail
    /// rules; replace the public fields to override them.
    pub fn new(
        config: EngineConfig,
        embedder: Arc<dyn Embedder>,
        ood: Arc<dyn OodDetector>,
        router: Arc<dyn BranchRouter>,
        llm: Arc<dyn LlmProvider>,
        dataplane: Dataplane,
    ) -> Result<Self> {
        config.validate()?;
        let prompts = PromptLibrary::builtin();
        let paths = ResolutionPaths::builtin(&prompts)?;
        Ok(Engine {
            config,
            embedder,
            ood,
            router,
            llm,
            prompts: Arc::new(prompts),
            dataplane,
            paths: Arc::new(paths),
            guardrail: Arc::new(Guardrail::default()),
        })
    }

    pub fn llm_timeout(&self) -> Duration {
        Duration::from_millis(self.config.budgets.llm_timeout_ms)
    }

    /// Answers one seller turn. Never fails: errors and timeouts become
    /// apologetic answers with `trace.error` set, and every outbound answer
    /// is screened by the guardrail exactly once.
    pub async fn handle(self: &Arc<Self>, query: &Query, ctx: &SellerContext) -> ChatResponse {
        let origin = Instant::now();
        let state = Arc::new(RequestState::default());
        let root = CancellationToken::new();
        let budget = Duration::from_millis(self.config.budgets.total_timeout_ms);
        let run = self.clone().run(query.clone(), ctx.clone(), state.clone(), origin, root.clone());
        let outcome = tokio::time::timeout(budget, run).await;
        // Stops any branch still running, whatever the outcome.
        root.cancel();

        let winner = lock(&state.winner).clone();
        let mut trace = std::mem::take(&mut *lock(&state.trace));
        let fallback_branch = |t: &ExecutionTrace| t.route.map_or(Branch::Refused, Branch::from);
        let answer = match outcome {
            Ok(Ok(a)) => a,
            Ok(Err(e)) => {
                if let Some(f) = winner.filter(|_| trace.plan.is_none()) {
                    merge(&mut trace, &lock(&f));
                }
                tracing::warn!(code = %e.code().as_str(), error = %e, "request failed");
                trace.error = Some(ErrorInfo::from(&e));
                Answer {
                    text: self.config.refusals.text(&RefusalReason::Error(e.to_string())),
                    branch: fallback_branch(&trace),
                }
            }
            Err(_) => {
                if let Some(f) = winner {
                    merge(&mut trace, &lock(&f));
                }
                for b in trace.branches.iter_mut().filter(|b| b.status == BranchStatus::Won) {
                    b.status = BranchStatus::Cancelled;
                }
                let e = Error::TotalTimeout {
                    ms: self.config.budgets.total_timeout_ms,
                };
                tracing::warn!(error = %e, "request exceeded its budget");
                trace.error = Some(ErrorInfo::from(&e));
                Answer {
                    text: self.config.refusals.text(&RefusalReason::TotalTimeout),
                    branch: fallback_branch(&trace),
                }
            }
        };

        let verdict = self.guardrail.screen(&answer.text);
        trace.guardrail = Some(verdict);
        trace.guardrail_checks += 1;
        let (text, branch) = if verdict.is_blocked() {
            (self.config.refusals.text(&RefusalReason::GuardrailBlocked), Branch::Refused)
        } else {
            (answer.text, answer.branch)
        };
        ChatResponse {
            answer: text,
            branch,
            trace,
            latency_ms: origin.elapsed().as_millis() as u64,
        }
    }

    fn launch(self: &Arc<Self>, route: Route, input: &Arc<BranchInput>, root: &CancellationToken) -> Launched {
        let cancel = root.child_token();
        let frag = SharedFragment::default();
        let handle = tokio::spawn(run_branch(self.clone(), route, input.clone(), cancel.clone(), frag.clone()));
        Launched {
            route,
            cancel,
            frag,
            handle,
            started_ms: ms_since(input.origin),
        }
    }

    async fn run(
        self: Arc<Self>,
        query: Query,
        ctx: SellerContext,
        state: Arc<RequestState>,
        origin: Instant,
        root: CancellationToken,
    ) -> Result<Answer> {
        let started = ms_since(origin);
        let embedder = self.embedder.clone();
        let text = query.text.clone();
        let x = tokio::task::spawn_blocking(move || embedder.embed(&text)).await.map_err(join_error)??;
        stage(&mut lock(&state.trace), "embed", started, ms_since(origin) - started);

        let temporal = build_temporal_context(ctx.today);
        let augmented = augment_query(&query, &temporal);
        lock(&state.trace).augmented_query = Some(augmented.clone());
        let input = Arc::new(BranchInput {
            query_text: query.text.clone(),
            augmented_query: augmented,
            seller_id: ctx.seller_id.clone(),
            temporal,
            origin,
        });

        // Both branches start while the gate is still deciding; the loser is
        // cancelled as soon as the route is known.
        let mut launched = Vec::new();
        if !self.config.serial_mode {
            launched.push(self.launch(Route::Presenter, &input, &root));
            launched.push(self.launch(Route::InsightGenerator, &input, &root));
        }

        let gate = self.gate(x, &state, origin).await;
        let (ood, decision) = match gate {
            Ok(g) => g,
            Err(e) => {
                root.cancel();
                return Err(e);
            }
        };

        if ood.is_out_of_domain() {
            let mut trace = lock(&state.trace);
            for l in launched {
                l.cancel.cancel();
                trace.branches.push(BranchRecord {
                    branch: l.route,
                    status: BranchStatus::Cancelled,
                    elapsed_ms: ms_since(origin) - l.started_ms,
                });
            }
            return Ok(Answer {
                text: self.config.refusals.text(&RefusalReason::OutOfDomain),
                branch: Branch::Refused,
            });
        }

        let route = decision.route;
        if launched.is_empty() {
            launched.push(self.launch(route, &input, &root));
        }
        let mut winner = None;
        for l in launched {
            if l.route == route {
                winner = Some(l);
                continue;
            }
            // Early termination: signal and detach; the loser's output is
            // never awaited.
            l.cancel.cancel();
            lock(&state.trace).branches.push(BranchRecord {
                branch: l.route,
                status: BranchStatus::Cancelled,
                elapsed_ms: ms_since(origin) - l.started_ms,
            });
        }
        let winner = winner.expect("routed branch was launched");
        *lock(&state.winner) = Some(winner.frag.clone());

        let result = winner.handle.await.map_err(join_error).and_then(|r| r);
        let mut trace = lock(&state.trace);
        merge(&mut trace, &lock(&winner.frag));
        trace.branches.push(BranchRecord {
            branch: route,
            status: if result.is_ok() { BranchStatus::Won } else { BranchStatus::Failed },
            elapsed_ms: ms_since(origin) - winner.started_ms,
        });
        Ok(Answer {
            text: result?,
            branch: Branch::from(route),
        })
    }

    /// OOD classification and routing on blocking threads, in parallel.
    async fn gate(&self, x: Embedding, state: &RequestState, origin: Instant) -> Result<(OodVerdict, RouteDecision)> {
        let started = ms_since(origin);
        let x = Arc::new(x);
        let ood = {
            let (m, x) = (self.ood.clone(), x.clone());
            tokio::task::spawn_blocking(move || {
                let s = ms_since(origin);
                (m.classify(&x), s, ms_since(origin) - s)
            })
        };
        let route = {
            let (m, x) = (self.router.clone(), x.clone());
            tokio::task::spawn_blocking(move || {
                let s = ms_since(origin);
                (m.route(&x), s, ms_since(origin) - s)
            })
        };
        let (ood, route) = tokio::join!(ood, route);
        let (verdict, o_start, o_ms) = ood.map_err(join_error)?;
        let (decision, r_start, r_ms) = route.map_err(join_error)?;
        let mut trace = lock(&state.trace);
        stage(&mut trace, "gate.ood", o_start, o_ms);
        stage(&mut trace, "gate.route", r_start, r_ms);
        stage(&mut trace, "gate", started, ms_since(origin) - started);
        let verdict = verdict?;
        trace.gate_score = verdict.error();
        trace.gate_threshold = self.ood.threshold();
        trace.gate_verdict = Some(if verdict.is_out_of_domain() {
            GateVerdict::OutOfDomain
        } else {
            GateVerdict::InDomain
        });
        // OOD wins over routing, but the route is still recorded.
        let decision = decision?;
        trace.route = Some(decision.route);
        trace.route_confidence = Some(decision.confidence);
        Ok((verdict, decision))
    }
}

/// Wall time of the gate stage, from a trace.
pub fn gate_elapsed_ms(trace: &ExecutionTrace) -> Option<f64> {
    trace.stage_timings.iter().find(|s| s.step_id == "gate").map(|s| s.elapsed_ms)
}
