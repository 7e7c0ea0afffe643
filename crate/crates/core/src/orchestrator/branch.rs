//! The two worker resolution paths as cancellable tasks.

use std::future::Future;
use std::sync::{Arc, Mutex};
use std::time::Instant;

use tokio_util::sync::CancellationToken;

use super::{lock, ms_since, Engine};
use crate::error::{Error, Result};
use crate::llm::LlmClient;
use crate::manager::temporal::TemporalContext;
use crate::orchestrator::refusal::RefusalReason;
use crate::types::{Route, StepTiming, SupportingFact};
use crate::workers::{
    classify_domain, generate_insight, plan_period, present, run_analyses, table_facts, ungrounded_numbers,
    AnalysisWindow, DomainCategory,
};
use crate::workflow::{detect_data_out_of_scope, execute, plan_validated, post_process, Plan, ScopeVerdict};

/// Per-request input shared by both branches.
#[derive(Debug, Clone)]
pub struct BranchInput {
    pub query_text: String,
    pub augmented_query: String,
    pub seller_id: String,
    pub temporal: TemporalContext,
    pub origin: Instant,
}

/// What a branch recorded on its way, merged into the trace only if the
/// branch wins.
#[derive(Debug, Clone, Default)]
pub struct BranchFragment {
    pub scope: Option<ScopeVerdict>,
    pub domain: Option<DomainCategory>,
    pub plan: Option<Plan>,
    pub planner_responses: Vec<String>,
    pub plan_attempts: u32,
    pub step_timings: Vec<StepTiming>,
    pub stage_timings: Vec<StepTiming>,
    pub supporting: Vec<SupportingFact>,
    pub warnings: Vec<String>,
}

pub type SharedFragment = Arc<Mutex<BranchFragment>>;

struct Run {
    engine: Arc<Engine>,
    input: Arc<BranchInput>,
    cancel: CancellationToken,
    frag: SharedFragment,
    llm: LlmClient,
}

impl Run {
    async fn stage<T>(&self, id: &str, fut: impl Future<Output = Result<T>>) -> Result<T> {
        let started = ms_since(self.input.origin);
        let out = fut.await;
        let ended = ms_since(self.input.origin);
        lock(&self.frag).stage_timings.push(StepTiming {
            step_id: id.to_string(),
            started_ms: started,
            elapsed_ms: ended - started,
        });
        out
    }

    fn check_cancelled(&self) -> Result<()> {
        if self.cancel.is_cancelled() {
            Err(Error::Cancelled)
        } else {
            Ok(())
        }
    }

    /// Data-based scope check shared by both branches. `Some(answer)` means
    /// the question is out of scope and `answer` is the refusal.
    async fn scope_check(&self, prefix: &str) -> Result<Option<String>> {
        let e = &self.engine;
        let catalog = e.dataplane.catalog_text();
        let scope = self
            .stage(
                &format!("{prefix}.scope"),
                detect_data_out_of_scope(&self.llm, &e.prompts, &self.input.query_text, &catalog),
            )
            .await?;
        let mut f = lock(&self.frag);
        f.scope = Some(scope.verdict.clone());
        if scope.fallback {
            f.warnings.push("unparseable scope verdict treated as out of scope".into());
        }
        if scope.verdict.is_out() {
            let reason = RefusalReason::DataOutOfScope(scope.verdict.reason.clone());
            return Ok(Some(e.config.refusals.text(&reason)));
        }
        Ok(None)
    }

    async fn presenter(&self) -> Result<String> {
        if let Some(refusal) = self.scope_check("presenter").await? {
            return Ok(refusal);
        }
        let e = &self.engine;
        let mut responses = Vec::new();
        let planning = self
            .stage(
                "presenter.plan",
                plan_validated(&self.llm, &e.prompts, &self.input.augmented_query, &e.dataplane.registry, &mut responses),
            )
            .await;
        lock(&self.frag).planner_responses = responses;
        let planning = planning?;
        let plan = planning.validated.plan().clone();
        let period = plan_period(&plan);
        // Dates and literals the plan itself used count as grounded.
        let grounding = format!("{}\n{}", self.input.augmented_query, plan.to_wire_json());
        {
            let mut f = lock(&self.frag);
            f.plan = Some(plan);
            f.plan_attempts = planning.attempts;
        }

        self.check_cancelled()?;
        let exec = execute(
            &planning.validated,
            &e.dataplane,
            &self.input.seller_id,
            Some(&self.cancel),
            self.input.origin,
        )?;
        let table = exec.final_table().clone();
        {
            let mut f = lock(&self.frag);
            f.step_timings = exec.timings;
            let subject = period.map_or_else(|| "total".to_string(), |p| p.label());
            f.supporting = table_facts(&table, &subject);
        }

        self.check_cancelled()?;
        let started = ms_since(self.input.origin);
        let (embedder, registry) = (e.embedder.clone(), e.dataplane.registry.clone());
        let query = self.input.query_text.clone();
        let threshold = e.config.semantic_filter_threshold;
        let shown = tokio::task::spawn_blocking(move || post_process(&table, &query, embedder.as_ref(), &registry, threshold))
            .await
            .map_err(|err| Error::Provider(format!("post-processing task failed: {err}")))?;
        lock(&self.frag).stage_timings.push(StepTiming {
            step_id: "presenter.postprocess".into(),
            started_ms: started,
            elapsed_ms: ms_since(self.input.origin) - started,
        });

        let tables = [shown.table];
        let answer = self
            .stage(
                "presenter.generate",
                present(&self.llm, &e.prompts, &self.input.augmented_query, &tables, period.as_ref()),
            )
            .await?;
        let stray = ungrounded_numbers(&answer, &tables, &grounding);
        if !stray.is_empty() {
            tracing::warn!(numbers = ?stray, "presenter answer cites numbers absent from the data");
            lock(&self.frag).warnings.push(format!("ungrounded numbers: {}", stray.join(", ")));
        }
        Ok(answer)
    }

    async fn insight(&self) -> Result<String> {
        if let Some(refusal) = self.scope_check("insight").await? {
            return Ok(refusal);
        }
        let e = &self.engine;
        let domain = self
            .stage("insight.domain", classify_domain(&self.llm, &e.prompts, &self.input.query_text))
            .await?;
        lock(&self.frag).domain = Some(domain);
        let path = e.paths.get(domain);
        let window = AnalysisWindow::from_context(&self.input.temporal);

        self.check_cancelled()?;
        let run = run_analyses(
            &path.analyses,
            &e.dataplane,
            &self.input.seller_id,
            &window,
            self.input.origin,
        )?;
        {
            let mut f = lock(&self.frag);
            let final_step = run.calls.last().map(|s| s.id.clone()).unwrap_or_default();
            let mut plan = Plan::new(run.calls.clone(), &final_step);
            let names: Vec<&str> = path.analyses.iter().map(|a| a.as_str()).collect();
            plan.rationale = format!("{domain} resolution path: {}", names.join(", "));
            f.plan = Some(plan);
            f.step_timings = run.timings.clone();
        }

        let insight = self
            .stage(
                "insight.generate",
                generate_insight(&self.llm, &self.input.augmented_query, &run.tables, path, &window.period),
            )
            .await?;
        lock(&self.frag).supporting = insight.supporting;
        Ok(insight.text)
    }
}

/// Runs one branch to completion or cancellation.
pub async fn run_branch(
    engine: Arc<Engine>,
    route: Route,
    input: Arc<BranchInput>,
    cancel: CancellationToken,
    frag: SharedFragment,
) -> Result<String> {
    let llm = LlmClient::new(engine.llm.clone(), engine.llm_timeout()).with_cancel(cancel.clone());
    let run = Run {
        engine,
        input,
        cancel,
        frag,
        llm,
    };
    match route {
        Route::Presenter => run.presenter().await,
        Route::InsightGenerator => run.insight().await,
    }
}
