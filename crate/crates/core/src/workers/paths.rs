use std::collections::BTreeMap;
use std::path::Path;

use serde::Deserialize;

use super::analyses::Analysis;
use super::DomainCategory;
use crate::error::{Error, Result};
use crate::llm::{PromptLibrary, PromptTemplate};

pub const DEFAULT_PATHS: &str = include_str!("../../config/paths.toml");

const BUNDLED_KNOWLEDGE: [(&str, &str); 4] = [
    ("../knowledge/performance.md", include_str!("../../knowledge/performance.md")),
    ("../knowledge/benchmarking.md", include_str!("../../knowledge/benchmarking.md")),
    ("../knowledge/recommendation.md", include_str!("../../knowledge/recommendation.md")),
    ("../knowledge/other.md", include_str!("../../knowledge/other.md")),
];

/// A predetermined route from a domain category to analyses, injected
/// knowledge and a generation prompt.
#[derive(Debug, Clone, PartialEq)]
pub struct ResolutionPath {
    pub category: DomainCategory,
    pub analyses: Vec<Analysis>,
    pub knowledge: String,
    pub template: PromptTemplate,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct PathEntry {
    category: DomainCategory,
    analyses: Vec<String>,
    knowledge: String,
    #[serde(default)]
    template: Option<String>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct PathsFile {
    path: Vec<PathEntry>,
}

/// One resolution path per domain category.
#[derive(Debug, Clone, PartialEq)]
pub struct ResolutionPaths {
    paths: BTreeMap<DomainCategory, ResolutionPath>,
}

impl ResolutionPaths {
    pub fn builtin(prompts: &PromptLibrary) -> Result<Self> {
        Self::parse(
            DEFAULT_PATHS,
            |name| {
                BUNDLED_KNOWLEDGE
                    .iter()
                    .find(|(n, _)| *n == name)
                    .map(|(_, text)| text.to_string())
                    .ok_or_else(|| Error::Config(format!("no bundled knowledge file '{name}'")))
            },
            |name| Err(Error::Config(format!("bundled paths cannot load template '{name}'"))),
            prompts,
        )
    }

    /// Loads a paths file; `knowledge` and `template` entries are relative
    /// to its directory.
    pub fn from_file(path: &Path, prompts: &PromptLibrary) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        let dir = path.parent().unwrap_or(Path::new("."));
        let read = |name: &str| {
            let p = dir.join(name);
            std::fs::read_to_string(&p).map_err(|e| Error::Io(format!("{}: {e}", p.display())))
        };
        Self::parse(&text, read, |name| PromptTemplate::from_file(&dir.join(name)), prompts)
    }

    fn parse(
        text: &str,
        knowledge: impl Fn(&str) -> Result<String>,
        template: impl Fn(&str) -> Result<PromptTemplate>,
        prompts: &PromptLibrary,
    ) -> Result<Self> {
        let file: PathsFile = toml::from_str(text).map_err(|e| Error::Config(format!("resolution paths: {e}")))?;
        let mut paths = BTreeMap::new();
        for entry in file.path {
            let analyses = entry
                .analyses
                .iter()
                .map(|a| Analysis::parse(a).ok_or_else(|| Error::Config(format!("unknown analysis '{a}'"))))
                .collect::<Result<Vec<_>>>()?;
            let template = match &entry.template {
                Some(t) => template(t)?,
                None => prompts.get("insight")?.clone(),
            };
            let path = ResolutionPath {
                category: entry.category,
                analyses,
                knowledge: knowledge(&entry.knowledge)?.trim().to_string(),
                template,
            };
            if paths.insert(entry.category, path).is_some() {
                return Err(Error::Config(format!("duplicate path for '{}'", entry.category)));
            }
        }
        for c in DomainCategory::ALL {
            if !paths.contains_key(&c) {
                return Err(Error::Config(format!("no resolution path for '{c}'")));
            }
        }
        Ok(ResolutionPaths { paths })
    }

    pub fn get(&self, category: DomainCategory) -> &ResolutionPath {
        &self.paths[&category]
    }

    pub fn iter(&self) -> impl Iterator<Item = &ResolutionPath> {
        self.paths.values()
    }
}
