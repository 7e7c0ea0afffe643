//! Typed tabular store, synthetic data generator, API registry and the
//! built-in transform functions the planner can call.

mod api;
pub mod functions;
pub mod registry;
pub mod store;
pub mod table;

pub use api::invoke_api;
pub use registry::{ApiSpec, ColumnSpec, FunctionSpec, ParamSpec, ParamType, Registry, RegistryEntry};
pub use store::{generate_store, generate_store_with, BenchmarkRow, FactRow, GenerateParams, SellerStore, DEFAULT_SELLER};
pub use table::{format_cell, Cell, Column, ColumnType, DataTable};

use std::sync::Arc;

use serde_json::{Map, Value};

use crate::error::{Error, Result};

/// Invokes a registered function on input tables.
pub fn invoke_function(
    registry: &Registry,
    name: &str,
    args: &Map<String, Value>,
    inputs: &[&DataTable],
) -> Result<DataTable> {
    let spec = registry
        .function(name)
        .ok_or_else(|| Error::UnknownFunction(name.to_string()))?;
    if inputs.len() != spec.inputs {
        return Err(Error::ArgsInvalid(format!(
            "{name} takes {} input table(s), got {}",
            spec.inputs,
            inputs.len()
        )));
    }
    let problems = registry::check_payload(&spec.params, args);
    if !problems.is_empty() {
        return Err(Error::ArgsInvalid(format!("{name}: {}", problems.join("; "))));
    }
    functions::apply(name, args, inputs)
}

/// Registry plus store: everything a plan executes against.
#[derive(Debug, Clone)]
pub struct Dataplane {
    pub registry: Arc<Registry>,
    pub store: Arc<SellerStore>,
}

impl Dataplane {
    pub fn new(registry: Registry, store: SellerStore) -> Self {
        Dataplane {
            registry: Arc::new(registry),
            store: Arc::new(store),
        }
    }

    pub fn invoke_api(&self, seller_id: &str, name: &str, payload: &Map<String, Value>) -> Result<DataTable> {
        invoke_api(&self.registry, &self.store, seller_id, name, payload)
    }

    pub fn invoke_function(&self, name: &str, args: &Map<String, Value>, inputs: &[&DataTable]) -> Result<DataTable> {
        invoke_function(&self.registry, name, args, inputs)
    }

    pub fn catalog_text(&self) -> String {
        self.registry.catalog_text()
    }
}
