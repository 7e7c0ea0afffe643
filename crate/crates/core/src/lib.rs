//! Manager/worker analytics agent engine.
//!
//! A seller question is embedded, gated by an autoencoder out-of-domain
//! detector and routed to one of two workers: the data presenter (plan,
//! validate and execute API and function calls, then format the result) or
//! the insight generator (domain classification, predefined analyses and
//! knowledge-grounded generation). Outbound text passes a guardrail.

pub mod api;
pub mod config;
pub mod dataplane;
pub mod embedding;
pub mod error;
pub mod fixtures;
pub mod eval;
pub mod llm;
pub mod manager;
pub mod orchestrator;
pub mod rng;
pub mod session;
pub mod training;
pub mod types;
pub mod workers;
pub mod workflow;

pub use error::{Error, ErrorCode, Result};
