use std::collections::BTreeMap;
use std::path::Path;

use super::template::PromptTemplate;
use crate::error::{Error, Result};

const BUILTIN: [(&str, &str); 7] = [
    ("scope", include_str!("../../prompts/scope.toml")),
    ("plan", include_str!("../../prompts/plan.toml")),
    ("plan_repair", include_str!("../../prompts/plan_repair.toml")),
    ("present", include_str!("../../prompts/present.toml")),
    ("domain", include_str!("../../prompts/domain.toml")),
    ("insight", include_str!("../../prompts/insight.toml")),
    ("paraphrase", include_str!("../../prompts/paraphrase.toml")),
];

/// Named prompt templates. The bundled set can be overridden file by file.
#[derive(Debug, Clone, PartialEq)]
pub struct PromptLibrary {
    templates: BTreeMap<String, PromptTemplate>,
}

impl PromptLibrary {
    pub fn builtin() -> Self {
        let templates = BUILTIN
            .iter()
            .map(|(name, src)| {
                let t = PromptTemplate::from_toml(src).unwrap_or_else(|e| panic!("bundled prompt {name}: {e}"));
                (name.to_string(), t)
            })
            .collect();
        PromptLibrary { templates }
    }

    /// Bundled templates, replaced by any `<name>.toml` found in `dir`.
    pub fn with_overrides(dir: &Path) -> Result<Self> {
        let mut lib = Self::builtin();
        let entries = std::fs::read_dir(dir).map_err(|e| Error::Io(format!("{}: {e}", dir.display())))?;
        let mut paths: Vec<_> = entries.filter_map(|e| e.ok().map(|e| e.path())).collect();
        paths.sort();
        for path in paths {
            if path.extension().and_then(|e| e.to_str()) != Some("toml") {
                continue;
            }
            let t = PromptTemplate::from_file(&path)?;
            lib.templates.insert(t.name.clone(), t);
        }
        Ok(lib)
    }

    pub fn get(&self, name: &str) -> Result<&PromptTemplate> {
        self.templates
            .get(name)
            .ok_or_else(|| Error::Config(format!("no prompt template named '{name}'")))
    }

    pub fn insert(&mut self, template: PromptTemplate) {
        self.templates.insert(template.name.clone(), template);
    }

    pub fn names(&self) -> Vec<&str> {
        self.templates.keys().map(String::as_str).collect()
    }
}

impl Default for PromptLibrary {
    fn default() -> Self {
        Self::builtin()
    }
}
