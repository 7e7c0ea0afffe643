//! The manager agent's specialised components: the OOD gate, the branch
//! router, the query augmenter and the outbound guardrail.

pub mod augment;
pub mod guardrail;
pub mod ood;
pub mod router;
pub mod temporal;

pub use augment::augment_query;
pub use guardrail::{Guardrail, GuardrailReason, GuardrailStatus, GuardrailVerdict};
pub use ood::{ae_forward, classify_ood, reconstruction_error, train_ood, AutoencoderParams, OodConfig, OodModel, OodVerdict, TrainedOod};
pub use router::{route, train_router, RouteDecision, RouterConfig, RouterModel, TrainedRouter};
pub use temporal::{build_temporal_context, DateRange, TemporalContext};

use crate::embedding::Embedding;
use crate::error::Result;

/// The OOD half of the gate, as seen by the orchestrator.
pub trait OodDetector: Send + Sync {
    fn classify(&self, x: &Embedding) -> Result<OodVerdict>;
    fn threshold(&self) -> f64;
}

/// The routing half of the gate, as seen by the orchestrator.
pub trait BranchRouter: Send + Sync {
    fn route(&self, x: &Embedding) -> Result<RouteDecision>;
}

impl OodDetector for OodModel {
    fn classify(&self, x: &Embedding) -> Result<OodVerdict> {
        OodModel::classify(self, x)
    }

    fn threshold(&self) -> f64 {
        self.threshold
    }
}

impl BranchRouter for RouterModel {
    fn route(&self, x: &Embedding) -> Result<RouteDecision> {
        RouterModel::route(self, x)
    }
}
