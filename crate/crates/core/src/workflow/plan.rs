//! Plan wire format, version "v1":
//! `{"steps": [{"id", "kind", "target", "payload", "inputs"}], "final": id}`.

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::error::{Error, Result};
use crate::llm::extract_json_block;

pub const PLAN_SCHEMA_VERSION: &str = "v1";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StepKind {
    #[serde(alias = "api")]
    ApiCall,
    #[serde(alias = "function")]
    FunctionCall,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlanStep {
    pub id: String,
    pub kind: StepKind,
    pub target: String,
    #[serde(default)]
    pub payload: Map<String, Value>,
    #[serde(default)]
    pub inputs: Vec<String>,
}

impl PlanStep {
    pub fn api(id: &str, target: &str, payload: Value) -> Self {
        PlanStep {
            id: id.into(),
            kind: StepKind::ApiCall,
            target: target.into(),
            payload: payload.as_object().cloned().unwrap_or_default(),
            inputs: Vec::new(),
        }
    }

    pub fn function(id: &str, target: &str, payload: Value, inputs: &[&str]) -> Self {
        PlanStep {
            id: id.into(),
            kind: StepKind::FunctionCall,
            target: target.into(),
            payload: payload.as_object().cloned().unwrap_or_default(),
            inputs: inputs.iter().map(|s| s.to_string()).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Plan {
    pub steps: Vec<PlanStep>,
    #[serde(rename = "final", default)]
    pub final_step: String,
    /// Reasoning text that preceded the JSON; kept for the trace only.
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub rationale: String,
}

impl Plan {
    pub fn new(steps: Vec<PlanStep>, final_step: &str) -> Self {
        Plan {
            steps,
            final_step: final_step.into(),
            rationale: String::new(),
        }
    }

    pub fn step(&self, id: &str) -> Option<&PlanStep> {
        self.steps.iter().find(|s| s.id == id)
    }

    /// The wire JSON without the rationale.
    pub fn to_wire_json(&self) -> String {
        #[derive(Serialize)]
        struct Wire<'a> {
            steps: &'a [PlanStep],
            #[serde(rename = "final")]
            final_step: &'a str,
        }
        serde_json::to_string(&Wire {
            steps: &self.steps,
            final_step: &self.final_step,
        })
        .expect("plan serializes")
    }
}

fn leading_prose(text: &str) -> String {
    let cut = match (text.find("```"), text.find(['{', '['])) {
        (Some(f), Some(b)) => f.min(b),
        (Some(f), None) => f,
        (None, Some(b)) => b,
        (None, None) => text.len(),
    };
    text[..cut].trim().to_string()
}

/// Extracts a plan from an LLM response. Text before the JSON becomes the
/// rationale and is never interpreted.
pub fn parse_plan(response: &str) -> Result<Plan> {
    let value = extract_json_block(response)?;
    let mut plan: Plan = serde_json::from_value(value).map_err(|e| Error::MalformedJson(format!("plan: {e}")))?;
    if plan.steps.is_empty() {
        return Err(Error::PlanEmpty);
    }
    plan.rationale = leading_prose(response);
    Ok(plan)
}
