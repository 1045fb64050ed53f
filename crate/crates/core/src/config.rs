//! Run configuration: a TOML file loaded by the CLI, environment overrides
//! for endpoints and keys, and the content hash that names report
//! directories.
//!
//! API keys live only in the environment (`EMBED_API_KEY`, `LLM_API_KEY`);
//! they are `#[serde(skip)]` everywhere, so neither the TOML round trip nor
//! the config hash ever sees them.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::embed::{EmbeddingConfig, ProviderKind};
use crate::llm::remote::RemoteLlmConfig;
use crate::pipeline::{default_fit_features, FitMode, PipelineOptions, Strategy};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {reason}")]
    Io { path: PathBuf, reason: String },
    #[error("invalid config: {0}")]
    Parse(String),
    #[error("configured path does not exist: {0}")]
    MissingPath(PathBuf),
    #[error("invalid value: {0}")]
    Invalid(String),
}

/// Report output format.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    Json,
    Markdown,
}

impl std::str::FromStr for OutputFormat {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "json" => Ok(OutputFormat::Json),
            "markdown" | "md" => Ok(OutputFormat::Markdown),
            other => Err(format!("unknown format `{other}` (expected json|markdown)")),
        }
    }
}

/// Chat backend and sampling settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LlmSettings {
    pub endpoint: String,
    pub model: String,
    pub timeout_secs: u64,
    pub max_retries: u32,
    pub initial_backoff_ms: u64,
    pub max_tokens: u32,
    pub feature_temperature: f64,
    pub rating_temperature: f64,
    pub extraction_temperature: f64,
    /// API key, read from the environment; never serialized.
    #[serde(skip)]
    pub api_key: Option<String>,
}

impl Default for LlmSettings {
    fn default() -> Self {
        LlmSettings {
            endpoint: String::new(),
            model: "gpt-4".into(),
            timeout_secs: 120,
            max_retries: 3,
            initial_backoff_ms: 200,
            max_tokens: 1024,
            feature_temperature: 0.7,
            rating_temperature: 1.0,
            extraction_temperature: 0.0,
            api_key: None,
        }
    }
}

impl LlmSettings {
    pub fn to_remote_config(&self) -> RemoteLlmConfig {
        RemoteLlmConfig {
            endpoint: self.endpoint.clone(),
            model: self.model.clone(),
            timeout_secs: self.timeout_secs,
            api_key: self.api_key.clone(),
        }
    }
}

/// The whole run configuration, TOML-serializable.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    /// Neighbors retrieved per outcome class.
    pub k: usize,
    pub strategy: Strategy,
    pub fit_mode: FitMode,
    pub output_format: OutputFormat,
    /// Include full prompt/response transcripts in reports.
    pub include_transcripts: bool,
    /// Run the optional pros/cons summary stage.
    pub summarize: bool,
    /// Override for the degree/subject keyword tables (TOML).
    pub mapping_path: Option<PathBuf>,
    /// Override for the top-institution list (one name per line).
    pub top_institutions_path: Option<PathBuf>,
    /// Override for the fit checklist (one feature per line).
    pub fit_features_path: Option<PathBuf>,
    /// Directory of prompt template overrides (`<name>.txt`).
    pub templates_dir: Option<PathBuf>,
    /// Where evaluation reports are written.
    pub out_dir: PathBuf,
    pub embedding: EmbeddingConfig,
    pub llm: LlmSettings,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            k: crate::index::DEFAULT_K,
            strategy: Strategy::Tot,
            fit_mode: FitMode::Llm,
            output_format: OutputFormat::Json,
            include_transcripts: true,
            summarize: false,
            mapping_path: None,
            top_institutions_path: None,
            fit_features_path: None,
            templates_dir: None,
            out_dir: PathBuf::from("reports"),
            embedding: EmbeddingConfig::default(),
            llm: LlmSettings::default(),
        }
    }
}

impl PipelineConfig {
    pub fn from_toml_str(text: &str) -> Result<Self, ConfigError> {
        let config: PipelineConfig =
            toml::from_str(text).map_err(|e| ConfigError::Parse(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn from_toml_file(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|e| ConfigError::Io {
            path: path.to_path_buf(),
            reason: e.to_string(),
        })?;
        Self::from_toml_str(&text)
    }

    /// Canonical TOML rendering; the basis of [`PipelineConfig::config_hash`].
    pub fn to_toml_string(&self) -> String {
        toml::to_string_pretty(self).expect("config serializes to TOML")
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.k == 0 {
            return Err(ConfigError::Invalid("k must be at least 1".into()));
        }
        for temp in [
            self.llm.feature_temperature,
            self.llm.rating_temperature,
            self.llm.extraction_temperature,
        ] {
            if !(0.0..=2.0).contains(&temp) {
                return Err(ConfigError::Invalid(format!(
                    "temperature {temp} outside [0, 2]"
                )));
            }
        }
        self.embedding
            .validate()
            .map_err(|e| ConfigError::Invalid(e.to_string()))?;
        for path in [
            &self.mapping_path,
            &self.top_institutions_path,
            &self.fit_features_path,
            &self.templates_dir,
        ]
        .into_iter()
        .flatten()
        {
            if !path.exists() {
                return Err(ConfigError::MissingPath(path.clone()));
            }
        }
        Ok(())
    }

    /// Applies environment overrides. A non-empty `EMBED_ENDPOINT` also
    /// switches the embedding provider to remote.
    pub fn apply_env(&mut self) {
        let read = |name: &str| std::env::var(name).ok().filter(|v| !v.trim().is_empty());
        if let Some(endpoint) = read("EMBED_ENDPOINT") {
            self.embedding.endpoint = endpoint;
            self.embedding.kind = ProviderKind::Remote;
        }
        if let Some(model) = read("EMBED_MODEL") {
            self.embedding.model = model;
        }
        if let Some(key) = read("EMBED_API_KEY") {
            self.embedding.api_key = Some(key);
        }
        if let Some(endpoint) = read("LLM_ENDPOINT") {
            self.llm.endpoint = endpoint;
        }
        if let Some(model) = read("LLM_MODEL") {
            self.llm.model = model;
        }
        if let Some(key) = read("LLM_API_KEY") {
            self.llm.api_key = Some(key);
        }
    }

    /// First 16 hex characters of the SHA-256 of the canonical TOML. Stable
    /// across runs with the same settings; API keys never contribute.
    pub fn config_hash(&self) -> String {
        let digest = Sha256::digest(self.to_toml_string().as_bytes());
        let mut hex = String::with_capacity(16);
        for byte in digest.iter().take(8) {
            hex.push_str(&format!("{byte:02x}"));
        }
        hex
    }

    /// The fit checklist: the configured file, or the built-in default.
    pub fn load_fit_features(&self) -> Result<Vec<String>, ConfigError> {
        match &self.fit_features_path {
            None => Ok(default_fit_features()),
            Some(path) => {
                let text = std::fs::read_to_string(path).map_err(|e| ConfigError::Io {
                    path: path.clone(),
                    reason: e.to_string(),
                })?;
                let features: Vec<String> = text
                    .lines()
                    .map(str::trim)
                    .filter(|l| !l.is_empty() && !l.starts_with('#'))
                    .map(String::from)
                    .collect();
                if features.is_empty() {
                    return Err(ConfigError::Invalid(format!(
                        "fit feature file {} has no entries",
                        path.display()
                    )));
                }
                Ok(features)
            }
        }
    }

    pub fn to_pipeline_options(&self) -> Result<PipelineOptions, ConfigError> {
        Ok(PipelineOptions {
            strategy: self.strategy,
            fit_mode: self.fit_mode,
            k: self.k,
            summarize: self.summarize,
            feature_temperature: self.llm.feature_temperature,
            rating_temperature: self.llm.rating_temperature,
            extraction_temperature: self.llm.extraction_temperature,
            max_tokens: self.llm.max_tokens,
            fit_features: self.load_fit_features()?,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_round_trip_through_toml() {
        let config = PipelineConfig::default();
        let text = config.to_toml_string();
        let back = PipelineConfig::from_toml_str(&text).unwrap();
        assert_eq!(back, config);
    }

    #[test]
    fn hash_is_stable_and_ignores_api_keys() {
        let mut a = PipelineConfig::default();
        let b = PipelineConfig::default();
        assert_eq!(a.config_hash(), b.config_hash());
        assert_eq!(a.config_hash().len(), 16);
        a.llm.api_key = Some("secret".into());
        a.embedding.api_key = Some("secret".into());
        assert_eq!(a.config_hash(), b.config_hash());
        assert!(!a.to_toml_string().contains("secret"));
        a.k = 5;
        assert_ne!(a.config_hash(), b.config_hash());
    }

    #[test]
    fn partial_toml_fills_defaults() {
        let config = PipelineConfig::from_toml_str(
            "k = 4\nstrategy = \"cot\"\n\n[llm]\nmodel = \"gpt-4\"\nrating_temperature = 0.9\n",
        )
        .unwrap();
        assert_eq!(config.k, 4);
        assert_eq!(config.strategy, Strategy::Cot);
        assert_eq!(config.llm.rating_temperature, 0.9);
        assert_eq!(config.llm.max_tokens, 1024);
        assert_eq!(config.fit_mode, FitMode::Llm);
    }

    #[test]
    fn unknown_keys_and_bad_values_are_rejected() {
        assert!(matches!(
            PipelineConfig::from_toml_str("speling_mistake = 1"),
            Err(ConfigError::Parse(_))
        ));
        assert!(matches!(
            PipelineConfig::from_toml_str("k = 0"),
            Err(ConfigError::Invalid(_))
        ));
        assert!(matches!(
            PipelineConfig::from_toml_str("[llm]\nrating_temperature = 3.5"),
            Err(ConfigError::Invalid(_))
        ));
        assert!(matches!(
            PipelineConfig::from_toml_str("fit_features_path = \"/does/not/exist.txt\""),
            Err(ConfigError::MissingPath(_))
        ));
    }

    #[test]
    fn env_overrides_switch_embedding_to_remote() {
        // Set/remove env vars in one test to avoid cross-test races.
        let vars = [
            ("EMBED_ENDPOINT", "https://embed.example/v1"),
            ("EMBED_API_KEY", "ek"),
            ("LLM_ENDPOINT", "https://llm.example/v1"),
            ("LLM_MODEL", "gpt-4-turbo"),
        ];
        for (k, v) in vars {
            std::env::set_var(k, v);
        }
        let mut config = PipelineConfig::default();
        config.apply_env();
        for (k, _) in vars {
            std::env::remove_var(k);
        }
        assert_eq!(config.embedding.kind, ProviderKind::Remote);
        assert_eq!(config.embedding.endpoint, "https://embed.example/v1");
        assert_eq!(config.embedding.api_key.as_deref(), Some("ek"));
        assert_eq!(config.llm.endpoint, "https://llm.example/v1");
        assert_eq!(config.llm.model, "gpt-4-turbo");
        assert_eq!(config.llm.api_key, None);
    }

    #[test]
    fn fit_features_load_from_override_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("fit.txt");
        std::fs::write(&path, "# comment\nfirst feature\n\nsecond feature\n").unwrap();
        let config = PipelineConfig {
            fit_features_path: Some(path),
            ..PipelineConfig::default()
        };
        let features = config.load_fit_features().unwrap();
        assert_eq!(features, vec!["first feature", "second feature"]);
        let options = config.to_pipeline_options().unwrap();
        assert_eq!(options.fit_features.len(), 2);
        assert!(!default_fit_features().is_empty());
    }
}
