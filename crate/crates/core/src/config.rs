use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::manager::ood::OodConfig;
use crate::manager::router::RouterConfig;
use crate::orchestrator::refusal::RefusalMessages;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Budgets {
    #[serde(default = "default_total_timeout_ms")]
    pub total_timeout_ms: u64,
    #[serde(default = "default_llm_timeout_ms")]
    pub llm_timeout_ms: u64,
}

fn default_total_timeout_ms() -> u64 {
    30_000
}

fn default_llm_timeout_ms() -> u64 {
    20_000
}

impl Default for Budgets {
    fn default() -> Self {
        Budgets {
            total_timeout_ms: default_total_timeout_ms(),
            llm_timeout_ms: default_llm_timeout_ms(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EngineConfig {
    #[serde(default)]
    pub ood: OodConfig,
    #[serde(default)]
    pub router: RouterConfig,
    #[serde(default)]
    pub budgets: Budgets,
    #[serde(default)]
    pub seed: u64,
    /// Run only the routed branch instead of both branches speculatively.
    #[serde(default)]
    pub serial_mode: bool,
    /// Minimum cosine similarity for a result column to survive
    /// post-processing.
    #[serde(default = "default_semantic_filter_threshold")]
    pub semantic_filter_threshold: f64,
    #[serde(default)]
    pub refusals: RefusalMessages,
}

fn default_semantic_filter_threshold() -> f64 {
    0.35
}

impl Default for EngineConfig {
    fn default() -> Self {
        EngineConfig {
            ood: OodConfig::default(),
            router: RouterConfig::default(),
            budgets: Budgets::default(),
            seed: 0,
            serial_mode: false,
            semantic_filter_threshold: default_semantic_filter_threshold(),
            refusals: RefusalMessages::default(),
        }
    }
}

impl EngineConfig {
    pub fn validate(&self) -> Result<()> {
        if self.budgets.total_timeout_ms == 0 || self.budgets.llm_timeout_ms == 0 {
            return Err(Error::Config("timeouts must be positive".into()));
        }
        self.ood.validate()?;
        self.router.validate()?;
        Ok(())
    }
}
