//! LLM-facing half of the workflow: data-based scope check and planning
//! with one repair round.

use super::plan::{parse_plan, Plan};
use super::scope::{scope_verdict_or_out, ScopeVerdict};
use super::validate::{validate_plan, ValidatedPlan};
use crate::dataplane::Registry;
use crate::error::{Error, Result};
use crate::llm::{LlmClient, PromptLibrary};

#[derive(Debug, Clone, PartialEq)]
pub struct ScopeOutcome {
    pub verdict: ScopeVerdict,
    pub raw: String,
    /// True when the answer was unreadable and treated as out of scope.
    pub fallback: bool,
}

/// Asks whether the catalog can answer `question`, with an explicit "out"
/// option.
pub async fn detect_data_out_of_scope(
    llm: &LlmClient,
    prompts: &PromptLibrary,
    question: &str,
    catalog: &str,
) -> Result<ScopeOutcome> {
    let prompt = prompts
        .get("scope")?
        .render(&[("question", question.to_string()), ("catalog", catalog.to_string())].into_iter().collect())?;
    let raw = llm.complete(prompt).await?;
    let (verdict, fallback) = scope_verdict_or_out(&raw);
    Ok(ScopeOutcome { verdict, raw, fallback })
}

/// One planning call. Returns the plan and the raw response.
pub async fn plan(llm: &LlmClient, prompts: &PromptLibrary, augmented_query: &str, catalog: &str) -> Result<(Plan, String)> {
    let prompt = prompts.get("plan")?.render(
        &[
            ("augmented_query", augmented_query.to_string()),
            ("catalog", catalog.to_string()),
        ]
        .into_iter()
        .collect(),
    )?;
    let raw = llm.complete(prompt).await?;
    let plan = parse_plan(&raw)?;
    Ok((plan, raw))
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlanningOutcome {
    pub validated: ValidatedPlan,
    pub attempts: u32,
}

/// Plans and validates. A plan rejected by the validator gets exactly one
/// repair prompt listing the violations; a second rejection is final.
/// Every raw LLM response is appended to `responses`.
pub async fn plan_validated(
    llm: &LlmClient,
    prompts: &PromptLibrary,
    augmented_query: &str,
    registry: &Registry,
    responses: &mut Vec<String>,
) -> Result<PlanningOutcome> {
    let catalog = registry.catalog_text();
    let prompt = prompts.get("plan")?.render(
        &[
            ("augmented_query", augmented_query.to_string()),
            ("catalog", catalog.clone()),
        ]
        .into_iter()
        .collect(),
    )?;
    let raw = llm.complete(prompt).await?;
    responses.push(raw.clone());
    let first = parse_plan(&raw)?;
    let violations = match validate_plan(&first, registry) {
        Ok(validated) => return Ok(PlanningOutcome { validated, attempts: 1 }),
        Err(Error::PlanInvalid(v)) => v,
        Err(e) => return Err(e),
    };
    tracing::info!(count = violations.len(), "plan rejected, requesting repair");
    let listing: String = violations.iter().map(|v| format!("- {v}\n")).collect();
    let prompt = prompts.get("plan_repair")?.render(
        &[
            ("augmented_query", augmented_query.to_string()),
            ("catalog", catalog),
            ("previous", first.to_wire_json()),
            ("violations", listing),
        ]
        .into_iter()
        .collect(),
    )?;
    let raw = llm.complete(prompt).await?;
    responses.push(raw.clone());
    let second = parse_plan(&raw)?;
    let validated = validate_plan(&second, registry)?;
    Ok(PlanningOutcome { validated, attempts: 2 })
}
