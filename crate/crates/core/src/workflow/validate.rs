//! Schema linking: checks a plan against the registry before anything runs.

use std::collections::{HashMap, HashSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use super::plan::{Plan, StepKind};
use crate::dataplane::functions::{self, SchemaError};
use crate::dataplane::registry::check_payload;
use crate::dataplane::{Column, Registry};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "violation", rename_all = "snake_case")]
pub enum Violation {
    DuplicateStepId { step: String },
    UnknownTarget { step: String, target: String },
    WrongKind { step: String, target: String },
    PayloadInvalid { step: String, detail: String },
    UnknownInput { step: String, input: String },
    WrongInputCount { step: String, expected: usize, got: usize },
    UnknownColumn { step: String, param: String, column: String },
    MissingFinal { final_step: String },
    UnreachableStep { step: String },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::DuplicateStepId { step } => write!(f, "step id '{step}' is used more than once"),
            Violation::UnknownTarget { step, target } => write!(f, "step '{step}': '{target}' is not a registered API or function"),
            Violation::WrongKind { step, target } => write!(f, "step '{step}': '{target}' is registered under the other step kind"),
            Violation::PayloadInvalid { step, detail } => write!(f, "step '{step}': {detail}"),
            Violation::UnknownInput { step, input } => {
                write!(f, "step '{step}': input '{input}' is not an earlier step")
            }
            Violation::WrongInputCount { step, expected, got } => {
                write!(f, "step '{step}': expects {expected} input(s), got {got}")
            }
            Violation::UnknownColumn { step, param, column } => {
                write!(f, "step '{step}': param '{param}' references unknown column '{column}'")
            }
            Violation::MissingFinal { final_step } => write!(f, "final step '{final_step}' does not exist"),
            Violation::UnreachableStep { step } => write!(f, "step '{step}' does not contribute to the final step"),
        }
    }
}

/// A plan that passed [`validate_plan`]. Only validated plans execute.
#[derive(Debug, Clone, PartialEq)]
pub struct ValidatedPlan {
    plan: Plan,
    schemas: HashMap<String, Vec<Column>>,
}

impl ValidatedPlan {
    pub fn plan(&self) -> &Plan {
        &self.plan
    }

    pub fn into_inner(self) -> Plan {
        self.plan
    }

    /// Output columns of a step, known statically.
    pub fn schema(&self, step_id: &str) -> Option<&[Column]> {
        self.schemas.get(step_id).map(Vec::as_slice)
    }
}

/// Checks every target, payload, input reference and column reference, and
/// that every step feeds the final one. Collects all violations.
pub fn validate_plan(plan: &Plan, registry: &Registry) -> Result<ValidatedPlan> {
    if plan.steps.is_empty() {
        return Err(Error::PlanEmpty);
    }
    let mut violations = Vec::new();
    let mut seen: HashSet<&str> = HashSet::new();
    let mut schemas: HashMap<String, Vec<Column>> = HashMap::new();

    for step in &plan.steps {
        let sid = step.id.clone();
        if !seen.insert(step.id.as_str()) {
            violations.push(Violation::DuplicateStepId { step: sid.clone() });
        }
        match step.kind {
            StepKind::ApiCall => {
                let Some(api) = registry.api(&step.target) else {
                    violations.push(if registry.function(&step.target).is_some() {
                        Violation::WrongKind { step: sid, target: step.target.clone() }
                    } else {
                        Violation::UnknownTarget { step: sid, target: step.target.clone() }
                    });
                    continue;
                };
                if !step.inputs.is_empty() {
                    violations.push(Violation::WrongInputCount {
                        step: sid.clone(),
                        expected: 0,
                        got: step.inputs.len(),
                    });
                }
                let problems = check_payload(&api.params, &step.payload);
                if !problems.is_empty() {
                    violations.push(Violation::PayloadInvalid {
                        step: sid.clone(),
                        detail: problems.join("; "),
                    });
                }
                schemas.entry(sid).or_insert_with(|| api.schema());
            }
            StepKind::FunctionCall => {
                let Some(func) = registry.function(&step.target) else {
                    violations.push(if registry.api(&step.target).is_some() {
                        Violation::WrongKind { step: sid, target: step.target.clone() }
                    } else {
                        Violation::UnknownTarget { step: sid, target: step.target.clone() }
                    });
                    continue;
                };
                if step.inputs.len() != func.inputs {
                    violations.push(Violation::WrongInputCount {
                        step: sid.clone(),
                        expected: func.inputs,
                        got: step.inputs.len(),
                    });
                }
                let mut inputs_known = step.inputs.len() == func.inputs;
                for input in &step.inputs {
                    // `seen` already holds this step's own id, which is
                    // not an earlier step.
                    if input == &step.id || !seen.contains(input.as_str()) {
                        violations.push(Violation::UnknownInput {
                            step: sid.clone(),
                            input: input.clone(),
                        });
                        inputs_known = false;
                    } else if !schemas.contains_key(input) {
                        inputs_known = false;
                    }
                }
                let problems = check_payload(&func.params, &step.payload);
                if !problems.is_empty() {
                    violations.push(Violation::PayloadInvalid {
                        step: sid.clone(),
                        detail: problems.join("; "),
                    });
                    continue;
                }
                if !inputs_known {
                    continue;
                }
                let input_schemas: Vec<&[Column]> = step.inputs.iter().map(|i| schemas[i].as_slice()).collect();
                match functions::output_schema(&step.target, &step.payload, &input_schemas) {
                    Ok(schema) => {
                        schemas.entry(sid).or_insert(schema);
                    }
                    Err(SchemaError::UnknownColumn { param, column, .. }) => {
                        violations.push(Violation::UnknownColumn { step: sid, param, column });
                    }
                    Err(SchemaError::Invalid(detail)) => {
                        violations.push(Violation::PayloadInvalid { step: sid, detail });
                    }
                }
            }
        }
    }

    if plan.step(&plan.final_step).is_none() {
        violations.push(Violation::MissingFinal {
            final_step: plan.final_step.clone(),
        });
    } else {
        let mut reached: HashSet<&str> = HashSet::new();
        let mut stack = vec![plan.final_step.as_str()];
        while let Some(id) = stack.pop() {
            if !reached.insert(id) {
                continue;
            }
            if let Some(step) = plan.step(id) {
                stack.extend(step.inputs.iter().map(String::as_str));
            }
        }
        let mut reported = HashSet::new();
        for step in &plan.steps {
            if !reached.contains(step.id.as_str()) && reported.insert(step.id.as_str()) {
                violations.push(Violation::UnreachableStep { step: step.id.clone() });
            }
        }
    }

    if violations.is_empty() {
        Ok(ValidatedPlan {
            plan: plan.clone(),
            schemas,
        })
    } else {
        Err(Error::PlanInvalid(violations))
    }
}
