//! TOML configuration with one section per module.
//!
//! ```toml
//! [signals]
//! quantity = ["list all", "every"]
//!
//! [descriptors]
//! sum = "profile preference phone number"
//!
//! [policy]
//! threshold = 0.15
//!
//! [accuracy]
//! alpha = 0.9
//! beta = 0.1
//! gamma = 0.02
//!
//! [cost]
//! stm = 1.0
//! sum = 1.0
//! ltm = 3.0
//! epi = 5.0
//! tokenizer = "whitespace"
//!
//! [generator]
//! n_queries = 1000
//! seed = 42
//!
//! [external]
//! endpoint = "http://localhost:8080/v1/chat/completions"
//! model = "gpt-4o-mini"
//! ```
//!
//! Every key is optional; missing keys take the built-in defaults.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::CostModel;
use crate::policy::{AccuracyModel, PolicySpec, Router, DEFAULT_SIMILARITY_THRESHOLD};
use crate::qa::ExternalConfig;
use crate::signals::{CueLists, DescriptorTexts, SignalExtractor, SimilarityIndex};
use crate::synthgen::GeneratorConfig;
use crate::tokenize::WHITESPACE;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PolicyConfig {
    pub threshold: f64,
}

impl Default for PolicyConfig {
    fn default() -> Self {
        PolicyConfig {
            threshold: DEFAULT_SIMILARITY_THRESHOLD,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CostConfig {
    pub stm: f64,
    pub sum: f64,
    pub ltm: f64,
    pub epi: f64,
    pub tokenizer: String,
}

impl Default for CostConfig {
    fn default() -> Self {
        CostConfig {
            stm: 1.0,
            sum: 1.0,
            ltm: 3.0,
            epi: 5.0,
            tokenizer: WHITESPACE.into(),
        }
    }
}

impl CostConfig {
    pub fn model(&self) -> Result<CostModel> {
        CostModel::new([self.stm, self.sum, self.ltm, self.epi], self.tokenizer.clone())
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AppConfig {
    pub signals: CueLists,
    pub descriptors: DescriptorTexts,
    pub policy: PolicyConfig,
    pub accuracy: AccuracyModel,
    pub cost: CostConfig,
    pub generator: GeneratorConfig,
    pub external: ExternalConfig,
}

impl AppConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: AppConfig = toml::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml(&text)
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.policy.threshold) {
            return Err(Error::Config(format!(
                "policy.threshold must be in [0, 1], got {}",
                self.policy.threshold
            )));
        }
        self.accuracy.validate()?;
        self.cost.model()?;
        Ok(())
    }

    pub fn router(&self) -> Result<Router> {
        Ok(Router {
            extractor: SignalExtractor::new(&self.signals),
            similarity: SimilarityIndex::new(&self.descriptors.descriptors())?,
            accuracy: self.accuracy,
            cost: self.cost.model()?,
            threshold: self.policy.threshold,
        })
    }

    /// Parses a comma-separated policy list; bare `hybrid` uses the configured threshold.
    pub fn policies(&self, list: &str) -> Result<Vec<PolicySpec>> {
        let specs = list
            .split(',')
            .map(str::trim)
            .filter(|s| !s.is_empty())
            .map(|s| PolicySpec::parse_with_threshold(s, self.policy.threshold))
            .collect::<Result<Vec<_>>>()?;
        if specs.is_empty() {
            return Err(Error::Config("empty policy list".into()));
        }
        Ok(specs)
    }
}
