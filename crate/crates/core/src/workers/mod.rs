//! The worker agents: data presenter and insight generator.

pub mod analyses;
pub mod domain;
pub mod insight;
pub mod paths;
pub mod presenter;

pub use analyses::{run_analyses, AnalysesRun, Analysis, AnalysisTable, AnalysisWindow, Position, TrendDirection};
pub use domain::{classify_domain, parse_domain};
pub use insight::{generate_insight, metric_summary, supporting_facts, Insight};
pub use paths::{ResolutionPath, ResolutionPaths};
pub use presenter::{no_data_message, plan_period, present, table_facts, ungrounded_numbers};

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DomainCategory {
    Performance,
    Benchmarking,
    Recommendation,
    Other,
}

impl DomainCategory {
    pub const ALL: [DomainCategory; 4] = [
        DomainCategory::Performance,
        DomainCategory::Benchmarking,
        DomainCategory::Recommendation,
        DomainCategory::Other,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            DomainCategory::Performance => "performance",
            DomainCategory::Benchmarking => "benchmarking",
            DomainCategory::Recommendation => "recommendation",
            DomainCategory::Other => "other",
        }
    }
}

impl std::fmt::Display for DomainCategory {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}
