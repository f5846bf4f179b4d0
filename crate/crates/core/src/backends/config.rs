//! Backend selection, loaded from a TOML file.
//!
//! ```toml
//! [summarizer]
//! kind = "http"                       # "offline" (default) or "http"
//! endpoint = "http://localhost:8000/v1"
//! model = "qwen2.5-7b-instruct"
//! timeout_secs = 120
//! max_retries = 3
//! max_in_flight = 4
//! api_key_env = "OPENAI_API_KEY"
//! prompt = "Summarize the following text."
//!
//! [embedder]
//! kind = "offline"
//! dimension = 256
//!
//! [extractor]
//! command = ["python3", "extract.py"]  # optional subprocess extractor
//! ```

use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::http::{HttpEmbedder, HttpOptions, HttpSummarizer};
use super::offline::{HashedBowEmbedder, TruncatingSummarizer, DEFAULT_EMBEDDING_DIM, DEFAULT_SUMMARY_BUDGET};
use super::subprocess::SubprocessExtractor;
use super::{Embedder, EntityExtractor, Summarizer};
use crate::error::{Error, Result};
use crate::graph::{NounLexicon, RuleBasedExtractor};

pub const DEFAULT_SUMMARY_PROMPT: &str =
    "Summarize the following text. Keep the names of people, places and things.";

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BackendKind {
    #[default]
    Offline,
    Http,
}

#[derive(Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BackendConfig {
    pub kind: BackendKind,
    pub endpoint: Option<String>,
    pub model: Option<String>,
    pub timeout_secs: u64,
    pub max_retries: u32,
    pub max_in_flight: usize,
    /// Name of the environment variable holding the API key, never the key.
    pub api_key_env: Option<String>,
    pub prompt: Option<String>,
    /// Offline embedder dimension.
    pub dimension: Option<usize>,
    /// Offline summarizer token budget.
    pub budget: Option<usize>,
}

impl Default for BackendConfig {
    fn default() -> Self {
        Self {
            kind: BackendKind::Offline,
            endpoint: None,
            model: None,
            timeout_secs: 60,
            max_retries: 3,
            max_in_flight: 4,
            api_key_env: None,
            prompt: None,
            dimension: None,
            budget: None,
        }
    }
}

impl std::fmt::Debug for BackendConfig {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("BackendConfig")
            .field("kind", &self.kind)
            .field("endpoint", &self.endpoint)
            .field("model", &self.model)
            .field("timeout_secs", &self.timeout_secs)
            .field("max_retries", &self.max_retries)
            .field("max_in_flight", &self.max_in_flight)
            .field("api_key_env", &self.api_key_env)
            .finish_non_exhaustive()
    }
}

impl BackendConfig {
    pub fn validate(&self, role: &str) -> Result<()> {
        match self.kind {
            BackendKind::Offline => {
                if self.endpoint.is_some() || self.model.is_some() || self.api_key_env.is_some() {
                    return Err(Error::InvalidConfig(format!(
                        "{role}: offline backend takes no endpoint, model or api_key_env"
                    )));
                }
            }
            BackendKind::Http => {
                if self.endpoint.as_deref().is_none_or(str::is_empty) {
                    return Err(Error::InvalidConfig(format!("{role}: http backend requires endpoint")));
                }
                if self.model.as_deref().is_none_or(str::is_empty) {
                    return Err(Error::InvalidConfig(format!("{role}: http backend requires model")));
                }
            }
        }
        if self.max_retries == 0 || self.max_in_flight == 0 {
            return Err(Error::InvalidConfig(format!(
                "{role}: max_retries and max_in_flight must be at least 1"
            )));
        }
        Ok(())
    }

    fn http_options(&self) -> HttpOptions {
        HttpOptions {
            endpoint: self.endpoint.clone().unwrap_or_default(),
            model: self.model.clone().unwrap_or_default(),
            timeout: std::time::Duration::from_secs(self.timeout_secs),
            max_attempts: self.max_retries,
            max_in_flight: self.max_in_flight,
            api_key_env: self.api_key_env.clone(),
        }
    }

    pub fn build_summarizer(&self) -> Result<Arc<dyn Summarizer>> {
        self.validate("summarizer")?;
        Ok(match self.kind {
            BackendKind::Offline => Arc::new(TruncatingSummarizer {
                budget: self.budget.unwrap_or(DEFAULT_SUMMARY_BUDGET),
            }),
            BackendKind::Http => Arc::new(HttpSummarizer::new(
                self.http_options(),
                self.prompt.clone().unwrap_or_else(|| DEFAULT_SUMMARY_PROMPT.to_string()),
            )),
        })
    }

    pub fn build_embedder(&self) -> Result<Arc<dyn Embedder>> {
        self.validate("embedder")?;
        Ok(match self.kind {
            BackendKind::Offline => {
                let dimension = self.dimension.unwrap_or(DEFAULT_EMBEDDING_DIM);
                if dimension == 0 {
                    return Err(Error::InvalidConfig("embedder: dimension must be positive".into()));
                }
                Arc::new(HashedBowEmbedder::new(dimension))
            }
            BackendKind::Http => Arc::new(HttpEmbedder::new(self.http_options())),
        })
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExtractorConfig {
    /// Program and arguments of a line-protocol extractor. Empty selects the
    /// built-in rule-based extractor.
    pub command: Vec<String>,
}

impl ExtractorConfig {
    /// The subprocess extractor if a command is set, else the rule-based one
    /// over `lexicon`.
    pub fn build(&self, lexicon: NounLexicon) -> Result<Arc<dyn EntityExtractor>> {
        if self.command.is_empty() {
            Ok(Arc::new(RuleBasedExtractor::new(lexicon)))
        } else {
            Ok(Arc::new(SubprocessExtractor::spawn(&self.command)?))
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BackendsConfig {
    pub summarizer: BackendConfig,
    pub embedder: BackendConfig,
    pub extractor: ExtractorConfig,
}

impl BackendsConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let config: Self =
            toml::from_str(text).map_err(|e| Error::InvalidConfig(e.to_string()))?;
        config.summarizer.validate("summarizer")?;
        config.embedder.validate("embedder")?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml_str(&text)
    }
}
