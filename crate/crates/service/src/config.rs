//! Service configuration file (TOML). Relative paths resolve against the
//! directory holding the file.

use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Duration;

use chrono::NaiveDate;
use insight_core::config::EngineConfig;
use insight_core::dataplane::{Dataplane, Registry, SellerStore, DEFAULT_SELLER};
use insight_core::embedding::{Embedder, HashingEmbedder};
use insight_core::eval::{generate_corpus, CorpusCounts};
use insight_core::fixtures;
use insight_core::llm::{HttpProvider, LlmProvider, PromptLibrary, ScriptedProvider};
use insight_core::manager::{Guardrail, OodModel, RouterModel};
use insight_core::orchestrator::Engine;
use insight_core::session::DEFAULT_SESSION_TURNS;
use insight_core::training::{train_ood_on, train_router_on};
use insight_core::workers::ResolutionPaths;
use insight_core::{Error, Result};
use serde::Deserialize;

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ServiceConfig {
    #[serde(default = "default_seller")]
    pub seller_id: String,
    /// Fixed "today"; the current UTC date when absent.
    #[serde(default)]
    pub today: Option<NaiveDate>,
    #[serde(default = "default_session_turns")]
    pub session_turns: usize,
    /// Denylist and PII rules, one per line; the bundled rules when absent.
    #[serde(default)]
    pub guardrail: Option<PathBuf>,
    /// Prompt template overrides.
    #[serde(default)]
    pub prompts_dir: Option<PathBuf>,
    /// Domain category to analyses/knowledge/template mapping.
    #[serde(default)]
    pub resolution_paths: Option<PathBuf>,
    #[serde(default)]
    pub data: DataConfig,
    #[serde(default)]
    pub models: ModelsConfig,
    #[serde(default)]
    pub llm: LlmConfig,
    #[serde(default)]
    pub engine: EngineConfig,
    #[serde(skip)]
    pub base_dir: PathBuf,
}

fn default_seller() -> String {
    DEFAULT_SELLER.to_string()
}

fn default_session_turns() -> usize {
    DEFAULT_SESSION_TURNS
}

/// Without `facts`, the service serves the seeded fixture store.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DataConfig {
    pub registry: Option<PathBuf>,
    pub facts: Option<PathBuf>,
    pub benchmarks: Option<PathBuf>,
}

/// Without model paths, both gate models are trained at startup on the
/// generated corpus for `corpus_seed`.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelsConfig {
    pub ood: Option<PathBuf>,
    pub router: Option<PathBuf>,
    #[serde(default = "default_corpus_seed")]
    pub corpus_seed: u64,
}

fn default_corpus_seed() -> u64 {
    7
}

impl Default for ModelsConfig {
    fn default() -> Self {
        ModelsConfig {
            ood: None,
            router: None,
            corpus_seed: default_corpus_seed(),
        }
    }
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(tag = "provider", rename_all = "snake_case", deny_unknown_fields)]
pub enum LlmConfig {
    /// The scripted responses for the bundled fixture questions.
    #[default]
    Fixture,
    Scripted {
        script: PathBuf,
    },
    Http {
        url: String,
        /// Environment variable holding a bearer token.
        #[serde(default)]
        token_env: Option<String>,
    },
}

impl ServiceConfig {
    pub fn from_toml(text: &str, base_dir: &Path) -> Result<Self> {
        let mut cfg: ServiceConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.base_dir = base_dir.to_path_buf();
        cfg.engine.validate()?;
        if cfg.session_turns == 0 {
            return Err(Error::Config("session_turns must be positive".into()));
        }
        if cfg.data.facts.is_some() != cfg.data.benchmarks.is_some() {
            return Err(Error::Config("data.facts and data.benchmarks must be given together".into()));
        }
        if cfg.models.ood.is_some() != cfg.models.router.is_some() {
            return Err(Error::Config("models.ood and models.router must be given together".into()));
        }
        Ok(cfg)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Self::from_toml(&text, &base)
    }

    /// Fixture data, fixture LLM and fixture date; models trained at
    /// startup.
    pub fn fixture() -> Self {
        let mut cfg = Self::from_toml("", Path::new(".")).expect("empty config is valid");
        cfg.today = Some(fixtures::fixture_today());
        cfg
    }

    pub fn resolve(&self, p: &Path) -> PathBuf {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base_dir.join(p)
        }
    }

    fn read(&self, p: &Path) -> Result<String> {
        let full = self.resolve(p);
        std::fs::read_to_string(&full).map_err(|e| Error::Io(format!("{}: {e}", full.display())))
    }

    pub fn today(&self) -> NaiveDate {
        self.today.unwrap_or_else(|| chrono::Utc::now().date_naive())
    }

    pub fn dataplane(&self) -> Result<Dataplane> {
        let registry = match &self.data.registry {
            Some(p) => Registry::from_file(&self.resolve(p))?,
            None => Registry::builtin(),
        };
        let store = match (&self.data.facts, &self.data.benchmarks) {
            (Some(f), Some(b)) => SellerStore::read_csv(&self.resolve(f), &self.resolve(b))?,
            _ => fixtures::fixture_store()?,
        };
        Ok(Dataplane::new(registry, store))
    }

    pub fn llm(&self) -> Result<Arc<dyn LlmProvider>> {
        let timeout = Duration::from_millis(self.engine.budgets.llm_timeout_ms);
        Ok(match &self.llm {
            LlmConfig::Fixture => Arc::new(fixtures::fixture_llm()),
            LlmConfig::Scripted { script } => Arc::new(ScriptedProvider::from_file(&self.resolve(script))?),
            LlmConfig::Http { url, token_env } => {
                let token = match token_env {
                    Some(var) => Some(std::env::var(var).map_err(|_| Error::Config(format!("environment variable {var} is not set")))?),
                    None => None,
                };
                Arc::new(HttpProvider::with_token(url.clone(), token, timeout))
            }
        })
    }

    /// Loads the gate models, or trains them when no paths are configured.
    pub fn models(&self, embedder: &dyn Embedder) -> Result<(OodModel, RouterModel)> {
        let (ood, router) = match (&self.models.ood, &self.models.router) {
            (Some(o), Some(r)) => (OodModel::from_json(&self.read(o)?)?, RouterModel::from_json(&self.read(r)?)?),
            _ => {
                let view = generate_corpus(self.models.corpus_seed, CorpusCounts::default())?.gate_view();
                let ood = train_ood_on(embedder, &view, &self.engine.ood)?.model;
                let router = train_router_on(embedder, &view, &self.engine.router)?.model;
                (ood, router)
            }
        };
        for (what, spec) in [("OOD", &ood.embedder), ("router", &router.embedder)] {
            if spec != embedder.spec() {
                return Err(Error::Config(format!(
                    "{what} model was trained with embedder {} (dim {}), the service uses {} (dim {})",
                    spec.name,
                    spec.dimension,
                    embedder.spec().name,
                    embedder.spec().dimension
                )));
            }
        }
        Ok((ood, router))
    }

    /// Builds the engine; may train models, so call off the async runtime.
    pub fn build_engine(&self) -> Result<Engine> {
        let embedder: Arc<dyn Embedder> = Arc::new(HashingEmbedder::default());
        let (ood, router) = self.models(embedder.as_ref())?;
        let mut engine = Engine::new(
            self.engine.clone(),
            embedder,
            Arc::new(ood),
            Arc::new(router),
            self.llm()?,
            self.dataplane()?,
        )?;
        if let Some(dir) = &self.prompts_dir {
            engine.prompts = Arc::new(PromptLibrary::with_overrides(&self.resolve(dir))?);
        }
        if let Some(p) = &self.resolution_paths {
            engine.paths = Arc::new(ResolutionPaths::from_file(&self.resolve(p), &engine.prompts)?);
        }
        if let Some(p) = &self.guardrail {
            engine.guardrail = Arc::new(Guardrail::from_rules(&self.read(p)?)?);
        }
        Ok(engine)
    }
}
