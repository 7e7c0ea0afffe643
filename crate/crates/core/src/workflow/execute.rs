use std::collections::BTreeMap;
use std::time::Instant;

use tokio_util::sync::CancellationToken;

use super::plan::StepKind;
use super::validate::ValidatedPlan;
use crate::dataplane::{DataTable, Dataplane};
use crate::error::{Error, Result};
use crate::types::StepTiming;

#[derive(Debug, Clone, PartialEq)]
pub struct Execution {
    pub tables: BTreeMap<String, DataTable>,
    pub final_step: String,
    pub timings: Vec<StepTiming>,
}

impl Execution {
    pub fn final_table(&self) -> &DataTable {
        &self.tables[&self.final_step]
    }
}

fn ms_since(origin: Instant) -> f64 {
    origin.elapsed().as_secs_f64() * 1000.0
}

/// Runs a validated plan in declared order (which is a topological order).
/// Timings are relative to `origin`. A failing step stops execution and is
/// named in the error; later steps do not run.
pub fn execute(
    plan: &ValidatedPlan,
    dataplane: &Dataplane,
    seller_id: &str,
    cancel: Option<&CancellationToken>,
    origin: Instant,
) -> Result<Execution> {
    let plan = plan.plan();
    let mut tables: BTreeMap<String, DataTable> = BTreeMap::new();
    let mut timings = Vec::with_capacity(plan.steps.len());
    for step in &plan.steps {
        if cancel.is_some_and(CancellationToken::is_cancelled) {
            return Err(Error::Cancelled);
        }
        let started = ms_since(origin);
        let result = match step.kind {
            StepKind::ApiCall => dataplane.invoke_api(seller_id, &step.target, &step.payload),
            StepKind::FunctionCall => {
                let inputs: Vec<&DataTable> = step.inputs.iter().map(|i| &tables[i]).collect();
                dataplane.invoke_function(&step.target, &step.payload, &inputs)
            }
        };
        let table = result.map_err(|e| Error::StepFailed {
            step_id: step.id.clone(),
            source: Box::new(e),
        })?;
        let ended = ms_since(origin);
        timings.push(StepTiming {
            step_id: step.id.clone(),
            started_ms: started,
            elapsed_ms: (ended - started).max(0.0),
        });
        tables.insert(step.id.clone(), table);
    }
    Ok(Execution {
        tables,
        final_step: plan.final_step.clone(),
        timings,
    })
}
