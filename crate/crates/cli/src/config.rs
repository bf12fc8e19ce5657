//! Declarative run configuration. Every field has a default, so an empty
//! file (or none at all) is a valid config; command-line flags override
//! individual fields after loading.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    pub seed: u64,
    /// Number of worker threads; 0 uses every core, 1 runs sequentially.
    pub threads: usize,
    pub corpus: CorpusConfig,
    pub aspects: AspectConfig,
    pub sample: SampleConfig,
    pub generate: GenerateConfig,
    pub split: SplitSection,
    pub evaluate: EvaluateConfig,
    pub index: IndexConfig,
    pub serve: ServeConfig,
}

impl Default for Config {
    fn default() -> Self {
        Config {
            seed: 0,
            threads: 0,
            corpus: CorpusConfig::default(),
            aspects: AspectConfig::default(),
            sample: SampleConfig::default(),
            generate: GenerateConfig::default(),
            split: SplitSection::default(),
            evaluate: EvaluateConfig::default(),
            index: IndexConfig::default(),
            serve: ServeConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CorpusConfig {
    /// Category list (`name<TAB>parent` per line); the twelve built-in
    /// categories when unset.
    pub categories: Option<PathBuf>,
    /// Extra abbreviation list for the sentence splitter.
    pub abbreviations: Option<PathBuf>,
    /// Directory of tagger lexicon override files.
    pub lexicon_dir: Option<PathBuf>,
    pub chunk_size: usize,
}

impl Default for CorpusConfig {
    fn default() -> Self {
        CorpusConfig {
            categories: None,
            abbreviations: None,
            lexicon_dir: None,
            chunk_size: crsq_core::pipeline::DEFAULT_CHUNK,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AspectConfig {
    pub min_support: u64,
    /// Keep only candidates that also carry an aspect-value pair.
    pub require_aspect: bool,
}

impl Default for AspectConfig {
    fn default() -> Self {
        AspectConfig {
            min_support: crsq_core::aspect::DEFAULT_MIN_SUPPORT,
            require_aspect: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SampleConfig {
    pub per_category: usize,
}

impl Default for SampleConfig {
    fn default() -> Self {
        SampleConfig { per_category: 100 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GenerateConfig {
    /// Template list; the built-in three when empty.
    pub templates: Vec<String>,
    /// Zero-based template index, or none to draw one per sentence from
    /// the seed.
    pub template: Option<usize>,
    /// Words added to the built-in generic-usage stoplist.
    pub extra_stopwords: Vec<String>,
    /// Category name to question noun, added to the built-in map.
    pub category_nouns: Vec<(String, String)>,
    pub adapter_command: Option<String>,
    pub adapter_url: Option<String>,
    pub timeout_ms: u64,
    pub in_flight: usize,
}

impl Default for GenerateConfig {
    fn default() -> Self {
        GenerateConfig {
            templates: Vec::new(),
            template: Some(0),
            extra_stopwords: Vec::new(),
            category_nouns: Vec::new(),
            adapter_command: None,
            adapter_url: None,
            timeout_ms: 30_000,
            in_flight: crsq_core::question::DEFAULT_IN_FLIGHT,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SplitSection {
    pub train_fraction: f64,
}

impl Default for SplitSection {
    fn default() -> Self {
        SplitSection { train_fraction: 0.8 }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvaluateConfig {
    /// `f1` or `recall`.
    pub rouge: crsq_core::eval::metrics::RougeMode,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IndexConfig {
    pub include_generic: bool,
    pub weighting: crsq_core::store::Weighting,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ServeConfig {
    pub host: String,
    pub questions_port: u16,
    pub annotation_port: u16,
    pub lease_secs: u64,
    pub auto_advance: bool,
    pub static_dir: Option<PathBuf>,
}

impl Default for ServeConfig {
    fn default() -> Self {
        ServeConfig {
            host: "127.0.0.1".into(),
            questions_port: 8080,
            annotation_port: 8081,
            lease_secs: 600,
            auto_advance: true,
            static_dir: None,
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Read { path: PathBuf, source: std::io::Error },
    #[error("invalid config {path}: {source}")]
    Parse { path: PathBuf, source: toml::de::Error },
}

impl Config {
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Read {
            path: path.to_path_buf(),
            source,
        })?;
        Self::parse(&text).map_err(|source| ConfigError::Parse {
            path: path.to_path_buf(),
            source,
        })
    }

    pub fn parse(text: &str) -> Result<Self, toml::de::Error> {
        toml::from_str(text)
    }

    /// Canonical text of the effective config; its hash goes into every
    /// manifest.
    pub fn canonical(&self) -> String {
        serde_json::to_string(self).expect("config serializes")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_file_is_default() {
        assert_eq!(Config::parse("").unwrap(), Config::default());
    }

    #[test]
    fn sections_parse() {
        let c = Config::parse(
            "seed = 7\n[aspects]\nmin_support = 1\n[generate]\ncategory_nouns = [[\"Kayaks\", \"kayak\"]]\n[evaluate]\nrouge = \"recall\"\n",
        )
        .unwrap();
        assert_eq!(c.seed, 7);
        assert_eq!(c.aspects.min_support, 1);
        assert!(c.aspects.require_aspect);
        assert_eq!(c.generate.category_nouns, [("Kayaks".to_string(), "kayak".to_string())]);
        assert_eq!(c.evaluate.rouge, crsq_core::eval::metrics::RougeMode::Recall);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(Config::parse("[aspects]\nmin_suport = 1\n").is_err());
    }
}
