use super::DomainCategory;
use crate::error::Result;
use crate::llm::{LlmClient, PromptLibrary};

/// Reads the first word of a classifier answer. Anything unrecognised is
/// [`DomainCategory::Other`].
pub fn parse_domain(text: &str) -> DomainCategory {
    let word: String = text
        .trim_start_matches(|c: char| !c.is_alphanumeric())
        .chars()
        .take_while(|c| c.is_alphabetic())
        .collect::<String>()
        .to_lowercase();
    match word.as_str() {
        "performance" => DomainCategory::Performance,
        "benchmarking" | "benchmark" | "benchmarks" => DomainCategory::Benchmarking,
        "recommendation" | "recommendations" => DomainCategory::Recommendation,
        _ => DomainCategory::Other,
    }
}

/// Few-shot LLM classification of the seller's question into a domain
/// category.
pub async fn classify_domain(llm: &LlmClient, prompts: &PromptLibrary, question: &str) -> Result<DomainCategory> {
    let prompt = prompts
        .get("domain")?
        .render(&[("question", question.to_string())].into_iter().collect())?;
    let raw = llm.complete(prompt).await?;
    let category = parse_domain(&raw);
    if category == DomainCategory::Other && !raw.trim().to_lowercase().starts_with("other") {
        tracing::warn!(response = %raw.chars().take(60).collect::<String>(), "unrecognised domain answer");
    }
    Ok(category)
}
