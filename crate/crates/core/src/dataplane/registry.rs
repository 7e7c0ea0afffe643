//! API and function metadata: what the planner may call, with which
//! parameters, producing which columns.

use std::collections::{BTreeMap, HashSet};
use std::fmt::Write;
use std::path::Path;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use super::functions;
use super::table::{Column, ColumnType};
use crate::error::{Error, Result};

pub const DEFAULT_REGISTRY: &str = include_str!("../../config/registry.json");

pub const NO_TOOLS: &str = "No tools are available.";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ParamType {
    Date,
    Text,
    Integer,
    Number,
    /// Name of a column of an input table.
    Column,
    /// Non-empty list of column names.
    Columns,
    /// Any scalar; interpreted against a column type by the function.
    Value,
}

impl ParamType {
    pub fn as_str(self) -> &'static str {
        match self {
            ParamType::Date => "date",
            ParamType::Text => "text",
            ParamType::Integer => "integer",
            ParamType::Number => "number",
            ParamType::Column => "column",
            ParamType::Columns => "columns",
            ParamType::Value => "value",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParamSpec {
    pub name: String,
    #[serde(rename = "type")]
    pub ty: ParamType,
    #[serde(default)]
    pub required: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub allowed_values: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub description: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ColumnSpec {
    pub name: String,
    #[serde(rename = "type")]
    pub ty: ColumnType,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub display: Option<String>,
    /// Extra words describing the column, used for semantic filtering.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub aliases: Vec<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Granularity {
    Daily,
    Weekly,
    Monthly,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Dataset {
    Facts,
    Benchmarks,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GroupKey {
    ProductId,
    Date,
    Month,
    Metric,
}

impl GroupKey {
    pub fn column(self) -> &'static str {
        match self {
            GroupKey::ProductId => "product_id",
            GroupKey::Date => "date",
            GroupKey::Month => "month",
            GroupKey::Metric => "metric",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ApiSource {
    pub dataset: Dataset,
    pub group_by: GroupKey,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ApiSpec {
    pub name: String,
    pub description: String,
    pub params: Vec<ParamSpec>,
    pub output_columns: Vec<ColumnSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub granularity: Option<Granularity>,
    pub source: ApiSource,
}

impl ApiSpec {
    pub fn schema(&self) -> Vec<Column> {
        self.output_columns.iter().map(|c| Column::new(&c.name, c.ty)).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FunctionSpec {
    pub name: String,
    pub description: String,
    /// Number of input tables, taken from the step's `inputs` in order.
    pub inputs: usize,
    pub params: Vec<ParamSpec>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RegistryEntry {
    Api(ApiSpec),
    Function(FunctionSpec),
}

#[derive(Debug, Clone, PartialEq, Eq)]
struct ColumnMeta {
    display: String,
    aliases: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Registry {
    apis: Vec<ApiSpec>,
    functions: Vec<FunctionSpec>,
    columns: BTreeMap<String, ColumnMeta>,
}

/// Columns an API can derive from each dataset, with their types.
fn derivable(dataset: Dataset, name: &str) -> Option<ColumnType> {
    match dataset {
        Dataset::Facts => match name {
            "product_id" => Some(ColumnType::Text),
            "date" | "month" => Some(ColumnType::Date),
            "sales" | "average_selling_price" => Some(ColumnType::Currency),
            "units" | "page_views" => Some(ColumnType::Integer),
            "conversion" => Some(ColumnType::Percent),
            _ => None,
        },
        Dataset::Benchmarks => match name {
            "metric" => Some(ColumnType::Text),
            "peer_value" => Some(ColumnType::Decimal),
            _ => None,
        },
    }
}

fn is_key_column(name: &str) -> bool {
    matches!(name, "product_id" | "date" | "month" | "metric")
}

fn check_params(owner: &str, params: &[ParamSpec]) -> Result<()> {
    let mut names = HashSet::new();
    for p in params {
        if !names.insert(p.name.as_str()) {
            return Err(Error::Config(format!("{owner}: duplicate param '{}'", p.name)));
        }
    }
    Ok(())
}

fn title_case(name: &str) -> String {
    let words: Vec<&str> = name.split('_').filter(|w| !w.is_empty()).collect();
    let mut out = String::new();
    for (i, w) in words.iter().enumerate() {
        if i > 0 {
            out.push(' ');
        }
        if i == 0 {
            let mut chars = w.chars();
            if let Some(c) = chars.next() {
                out.extend(c.to_uppercase());
                out.push_str(chars.as_str());
            }
        } else {
            out.push_str(w);
        }
    }
    out
}

const DERIVED_SUFFIXES: [(&str, &str, &str); 3] = [
    ("_prior_year", " (prior year)", "prior year last year"),
    ("_yoy_delta", " YoY change", "year over year change difference"),
    ("_yoy_pct", " YoY %", "year over year change percent growth"),
];

impl Registry {
    pub fn empty() -> Self {
        Registry {
            apis: Vec::new(),
            functions: Vec::new(),
            columns: BTreeMap::new(),
        }
    }

    pub fn builtin() -> Self {
        Self::from_json(DEFAULT_REGISTRY).expect("bundled registry is valid")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let entries: Vec<RegistryEntry> =
            serde_json::from_str(text).map_err(|e| Error::Config(format!("registry: {e}")))?;
        Self::from_entries(entries)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn from_entries(entries: Vec<RegistryEntry>) -> Result<Self> {
        let mut reg = Registry::empty();
        let mut names = HashSet::new();
        for entry in entries {
            let (name, description) = match &entry {
                RegistryEntry::Api(a) => (a.name.clone(), &a.description),
                RegistryEntry::Function(f) => (f.name.clone(), &f.description),
            };
            if name.is_empty() || !name.chars().all(|c| c.is_ascii_lowercase() || c.is_ascii_digit() || c == '_') {
                return Err(Error::Config(format!("invalid tool name '{name}'")));
            }
            if description.trim().is_empty() {
                return Err(Error::Config(format!("{name}: description must not be empty")));
            }
            if !names.insert(name.clone()) {
                return Err(Error::Config(format!("duplicate tool name '{name}'")));
            }
            match entry {
                RegistryEntry::Api(api) => {
                    check_params(&api.name, &api.params)?;
                    let key = api.source.group_by.column();
                    if !api.output_columns.iter().any(|c| c.name == key) {
                        return Err(Error::Config(format!("{}: output must include group key '{key}'", api.name)));
                    }
                    let mut cols = HashSet::new();
                    for c in &api.output_columns {
                        if !cols.insert(c.name.as_str()) {
                            return Err(Error::Config(format!("{}: duplicate column '{}'", api.name, c.name)));
                        }
                        if derivable(api.source.dataset, &c.name) != Some(c.ty) {
                            return Err(Error::Config(format!(
                                "{}: column '{}' of type {} cannot be derived",
                                api.name, c.name, c.ty
                            )));
                        }
                        if is_key_column(&c.name) && c.name != key {
                            return Err(Error::Config(format!(
                                "{}: key column '{}' does not match group key '{key}'",
                                api.name, c.name
                            )));
                        }
                        reg.add_column_meta(c)?;
                    }
                    if api.source.dataset == Dataset::Facts {
                        for required in ["start_date", "end_date"] {
                            if !api.params.iter().any(|p| p.name == required && p.required && p.ty == ParamType::Date) {
                                return Err(Error::Config(format!("{}: facts APIs need a required date param '{required}'", api.name)));
                            }
                        }
                    }
                    reg.apis.push(api);
                }
                RegistryEntry::Function(f) => {
                    check_params(&f.name, &f.params)?;
                    if !functions::is_builtin(&f.name) {
                        return Err(Error::Config(format!("function '{}' has no implementation", f.name)));
                    }
                    if f.inputs != functions::input_count(&f.name) {
                        return Err(Error::Config(format!(
                            "function '{}' takes {} input tables",
                            f.name,
                            functions::input_count(&f.name)
                        )));
                    }
                    reg.functions.push(f);
                }
            }
        }
        Ok(reg)
    }

    fn add_column_meta(&mut self, c: &ColumnSpec) -> Result<()> {
        let meta = ColumnMeta {
            display: c.display.clone().unwrap_or_else(|| title_case(&c.name)),
            aliases: c.aliases.clone(),
        };
        match self.columns.get(&c.name) {
            Some(existing) if c.display.is_some() && existing.display != meta.display => Err(Error::Config(format!(
                "column '{}' has conflicting display names",
                c.name
            ))),
            Some(_) => Ok(()),
            None => {
                self.columns.insert(c.name.clone(), meta);
                Ok(())
            }
        }
    }

    pub fn apis(&self) -> &[ApiSpec] {
        &self.apis
    }

    pub fn functions(&self) -> &[FunctionSpec] {
        &self.functions
    }

    pub fn api(&self, name: &str) -> Option<&ApiSpec> {
        self.apis.iter().find(|a| a.name == name)
    }

    pub fn function(&self, name: &str) -> Option<&FunctionSpec> {
        self.functions.iter().find(|f| f.name == name)
    }

    pub fn is_empty(&self) -> bool {
        self.apis.is_empty() && self.functions.is_empty()
    }

    pub fn names(&self) -> Vec<&str> {
        self.apis
            .iter()
            .map(|a| a.name.as_str())
            .chain(self.functions.iter().map(|f| f.name.as_str()))
            .collect()
    }

    /// Every column name an API can emit.
    pub fn known_columns(&self) -> Vec<&str> {
        self.columns.keys().map(String::as_str).collect()
    }

    /// Human-readable column header.
    pub fn display_name(&self, column: &str) -> String {
        if let Some(m) = self.columns.get(column) {
            return m.display.clone();
        }
        for (suffix, label, _) in DERIVED_SUFFIXES {
            if let Some(base) = column.strip_suffix(suffix) {
                return format!("{}{label}", self.display_name(base));
            }
        }
        title_case(column)
    }

    /// Words describing a column: display name, raw name and aliases.
    pub fn descriptor(&self, column: &str) -> String {
        if let Some(m) = self.columns.get(column) {
            let mut parts = vec![m.display.clone(), column.replace('_', " ")];
            parts.extend(m.aliases.iter().cloned());
            return parts.join(" ");
        }
        for (suffix, _, words) in DERIVED_SUFFIXES {
            if let Some(base) = column.strip_suffix(suffix) {
                return format!("{} {words}", self.descriptor(base));
            }
        }
        column.replace('_', " ")
    }

    /// Planner-facing listing of every tool, in registry order.
    pub fn catalog_text(&self) -> String {
        if self.is_empty() {
            return NO_TOOLS.to_string();
        }
        let mut out = String::new();
        if !self.apis.is_empty() {
            out.push_str("APIs:\n");
            for api in &self.apis {
                let _ = writeln!(out, "- {}: {}", api.name, api.description);
                let _ = writeln!(out, "  params: {}", render_params(&api.params));
                let cols: Vec<String> = api.output_columns.iter().map(|c| format!("{} ({})", c.name, c.ty)).collect();
                let _ = writeln!(out, "  columns: {}", cols.join(", "));
                if let Some(g) = api.granularity {
                    let _ = writeln!(out, "  granularity: {}", serde_json::to_value(g).unwrap_or(Value::Null).as_str().unwrap_or(""));
                }
            }
        }
        if !self.functions.is_empty() {
            out.push_str("Functions:\n");
            for f in &self.functions {
                let _ = writeln!(out, "- {}: {}", f.name, f.description);
                let _ = writeln!(out, "  inputs: {} table{}", f.inputs, if f.inputs == 1 { "" } else { "s" });
                let _ = writeln!(out, "  params: {}", render_params(&f.params));
            }
        }
        out
    }
}

fn render_params(params: &[ParamSpec]) -> String {
    if params.is_empty() {
        return "none".to_string();
    }
    params
        .iter()
        .map(|p| {
            let mut s = format!("{} ({}, {}", p.name, p.ty.as_str(), if p.required { "required" } else { "optional" });
            if let Some(allowed) = &p.allowed_values {
                let _ = write!(s, "; one of {}", allowed.join("|"));
            }
            s.push(')');
            s
        })
        .collect::<Vec<_>>()
        .join(", ")
}

fn value_text(v: &Value) -> Option<String> {
    match v {
        Value::String(s) => Some(s.clone()),
        Value::Number(n) => Some(n.to_string()),
        Value::Bool(b) => Some(b.to_string()),
        _ => None,
    }
}

/// Checks a payload against parameter specs: no unknown keys, required keys
/// present, values of the declared type and within allowed values, and
/// `start_date <= end_date` when both are given. Returns every problem.
pub fn check_payload(params: &[ParamSpec], payload: &Map<String, Value>) -> Vec<String> {
    let mut problems = Vec::new();
    for key in payload.keys() {
        if !params.iter().any(|p| &p.name == key) {
            problems.push(format!("unknown param '{key}'"));
        }
    }
    for p in params {
        let Some(v) = payload.get(&p.name) else {
            if p.required {
                problems.push(format!("missing required param '{}'", p.name));
            }
            continue;
        };
        let ok = match p.ty {
            ParamType::Date => v.as_str().is_some_and(|s| NaiveDate::parse_from_str(s, "%Y-%m-%d").is_ok()),
            ParamType::Text => v.is_string(),
            ParamType::Integer => v.as_i64().is_some(),
            ParamType::Number => v.is_number(),
            ParamType::Column => v.as_str().is_some_and(|s| !s.is_empty()),
            ParamType::Columns => v
                .as_array()
                .is_some_and(|a| !a.is_empty() && a.iter().all(|c| c.as_str().is_some_and(|s| !s.is_empty()))),
            ParamType::Value => matches!(v, Value::String(_) | Value::Number(_) | Value::Bool(_)),
        };
        if !ok {
            problems.push(format!("param '{}' must be of type {}", p.name, p.ty.as_str()));
            continue;
        }
        if let Some(allowed) = &p.allowed_values {
            if !value_text(v).is_some_and(|t| allowed.contains(&t)) {
                problems.push(format!("param '{}' must be one of {}", p.name, allowed.join("|")));
            }
        }
    }
    let date = |k: &str| {
        payload
            .get(k)
            .and_then(Value::as_str)
            .and_then(|s| NaiveDate::parse_from_str(s, "%Y-%m-%d").ok())
    };
    if let (Some(s), Some(e)) = (date("start_date"), date("end_date")) {
        if s > e {
            problems.push(format!("start_date {s} is after end_date {e}"));
        }
    }
    problems
}
