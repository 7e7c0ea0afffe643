//! Data workflow: scope check, planning, validation, execution and
//! post-processing.

pub mod execute;
pub mod plan;
pub mod planner;
pub mod postprocess;
pub mod scope;
pub mod validate;

pub use execute::{execute, Execution};
pub use plan::{parse_plan, Plan, PlanStep, StepKind, PLAN_SCHEMA_VERSION};
pub use planner::{detect_data_out_of_scope, plan_validated, PlanningOutcome, ScopeOutcome};
pub use postprocess::{post_process, table_text, PostProcessed, DEFAULT_FILTER_THRESHOLD};
pub use scope::{parse_scope_verdict, ScopeStatus, ScopeVerdict};
pub use validate::{validate_plan, ValidatedPlan, Violation};
