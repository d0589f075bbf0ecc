//! One TOML config file drives the whole pipeline: gateway mode and
//! service bases, ontology files, evaluator weights, classifier
//! hyperparameters, answer caps and the corpus cutoff. The
//! `WS4A_GATEWAY_MODE` environment variable overrides the configured
//! mode.

use std::path::{Path, PathBuf};

use chrono::NaiveDate;
use serde::Deserialize;
use thiserror::Error;

use crate::answer::AnswerCaps;
use crate::classify::Hyperparams;
use crate::evaluate::EvaluatorConfig;
use crate::gateway::{GatewayMode, ServiceEndpoints};
use crate::ontology::OntologyFormat;
use crate::text::ConceptSource;

pub const GATEWAY_MODE_ENV: &str = "WS4A_GATEWAY_MODE";

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {message}")]
    Io { path: String, message: String },
    #[error("config parse error: {0}")]
    Parse(String),
    #[error("invalid config: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GatewaySection {
    pub mode: String,
    pub store: PathBuf,
    pub rate_limit_ms: u64,
    pub parallelism: usize,
    pub annotator_base: String,
    pub eutils_base: String,
    pub pubchem_base: String,
    pub uniprot_base: String,
    pub whatizit_base: String,
    pub sparql_base: String,
    pub whatizit_vocabulary: String,
    pub whatizit_id_tag: String,
}

impl Default for GatewaySection {
    fn default() -> Self {
        let endpoints = ServiceEndpoints::default();
        GatewaySection {
            mode: "replay".into(),
            store: PathBuf::from("fixtures"),
            rate_limit_ms: 350,
            parallelism: 4,
            annotator_base: endpoints.annotator_base,
            eutils_base: endpoints.eutils_base,
            pubchem_base: endpoints.pubchem_base,
            uniprot_base: endpoints.uniprot_base,
            whatizit_base: endpoints.whatizit_base,
            sparql_base: endpoints.sparql_base,
            whatizit_vocabulary: "whatizitSwissprot".into(),
            whatizit_id_tag: "uniprot".into(),
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OntologyFileSection {
    pub path: PathBuf,
    pub format: String,
    pub source: String,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OntologySection {
    pub files: Vec<OntologyFileSection>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvaluatorSection {
    pub weights: [f64; 4],
    pub threshold: f64,
    pub top_k: usize,
}

impl Default for EvaluatorSection {
    fn default() -> Self {
        let cfg = EvaluatorConfig::default();
        EvaluatorSection {
            weights: cfg.weights,
            threshold: cfg.threshold,
            top_k: cfg.top_k,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ClassifierSection {
    pub c: f64,
    pub epochs: usize,
    pub seed: u64,
    pub ngram_max: usize,
    pub vocab_cap: usize,
    pub holdout_fraction: f64,
}

impl Default for ClassifierSection {
    fn default() -> Self {
        let hp = Hyperparams::default();
        ClassifierSection {
            c: hp.c,
            epochs: hp.epochs,
            seed: hp.seed,
            ngram_max: 2,
            vocab_cap: 5000,
            holdout_fraction: 0.2,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AnswerSection {
    pub documents_cap: usize,
    pub snippets_cap: usize,
    pub concepts_cap: usize,
    pub triples_cap: usize,
    pub triple_candidate_limit: usize,
}

impl Default for AnswerSection {
    fn default() -> Self {
        AnswerSection {
            documents_cap: 10,
            snippets_cap: 10,
            concepts_cap: 10,
            triples_cap: 10,
            triple_candidate_limit: 50,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RetrievalSection {
    pub recency_cap: usize,
    pub cutoff: String,
    pub efetch_chunk: usize,
    pub question_parallelism: usize,
}

impl Default for RetrievalSection {
    fn default() -> Self {
        RetrievalSection {
            recency_cap: 10,
            cutoff: "2015-11-19".into(),
            efetch_chunk: 200,
            question_parallelism: 2,
        }
    }
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub gateway: GatewaySection,
    pub ontology: OntologySection,
    pub evaluator: EvaluatorSection,
    pub classifier: ClassifierSection,
    pub answer: AnswerSection,
    pub retrieval: RetrievalSection,
}

impl PipelineConfig {
    /// Loads the config file (or defaults when `path` is `None`), applies
    /// the mode override flag and then the environment variable, and
    /// validates everything.
    pub fn load(path: Option<&Path>, mode_flag: Option<&str>) -> Result<Self, ConfigError> {
        let mut config = match path {
            Some(p) => {
                let content = std::fs::read_to_string(p).map_err(|e| ConfigError::Io {
                    path: p.display().to_string(),
                    message: e.to_string(),
                })?;
                toml::from_str(&content).map_err(|e| ConfigError::Parse(e.to_string()))?
            }
            None => PipelineConfig::default(),
        };
        if let Some(mode) = mode_flag {
            config.gateway.mode = mode.to_string();
        }
        if let Ok(mode) = std::env::var(GATEWAY_MODE_ENV) {
            if !mode.is_empty() {
                config.gateway.mode = mode;
            }
        }
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        self.mode()?;
        self.cutoff()?;
        self.ontology_files()?;
        self.evaluator_config()
            .validate()
            .map_err(|e| ConfigError::Invalid(e.to_string()))?;
        if self.classifier.c <= 0.0 {
            return Err(ConfigError::Invalid("classifier.c must be positive".into()));
        }
        if self.classifier.ngram_max == 0 {
            return Err(ConfigError::Invalid(
                "classifier.ngram_max must be at least 1".into(),
            ));
        }
        if !(0.0..1.0).contains(&self.classifier.holdout_fraction) {
            return Err(ConfigError::Invalid(
                "classifier.holdout_fraction must be in [0, 1)".into(),
            ));
        }
        for (name, cap) in [
            ("documents_cap", self.answer.documents_cap),
            ("snippets_cap", self.answer.snippets_cap),
            ("concepts_cap", self.answer.concepts_cap),
            ("triples_cap", self.answer.triples_cap),
            ("triple_candidate_limit", self.answer.triple_candidate_limit),
            ("recency_cap", self.retrieval.recency_cap),
            ("efetch_chunk", self.retrieval.efetch_chunk),
            ("question_parallelism", self.retrieval.question_parallelism),
            ("parallelism", self.gateway.parallelism),
        ] {
            if cap == 0 {
                return Err(ConfigError::Invalid(format!("{name} must be at least 1")));
            }
        }
        Ok(())
    }

    pub fn mode(&self) -> Result<GatewayMode, ConfigError> {
        self.gateway
            .mode
            .parse()
            .map_err(|e: String| ConfigError::Invalid(e))
    }

    pub fn cutoff(&self) -> Result<NaiveDate, ConfigError> {
        NaiveDate::parse_from_str(&self.retrieval.cutoff, "%Y-%m-%d").map_err(|e| {
            ConfigError::Invalid(format!(
                "retrieval.cutoff {:?} is not YYYY-MM-DD: {e}",
                self.retrieval.cutoff
            ))
        })
    }

    pub fn endpoints(&self) -> Result<ServiceEndpoints, ConfigError> {
        Ok(ServiceEndpoints {
            annotator_base: self.gateway.annotator_base.clone(),
            eutils_base: self.gateway.eutils_base.clone(),
            pubchem_base: self.gateway.pubchem_base.clone(),
            uniprot_base: self.gateway.uniprot_base.clone(),
            whatizit_base: self.gateway.whatizit_base.clone(),
            sparql_base: self.gateway.sparql_base.clone(),
            cutoff: self.cutoff()?,
        })
    }

    pub fn ontology_files(
        &self,
    ) -> Result<Vec<(PathBuf, OntologyFormat, ConceptSource)>, ConfigError> {
        self.ontology
            .files
            .iter()
            .map(|f| {
                let format = match f.format.as_str() {
                    "obo-subset" => OntologyFormat::OboSubset,
                    "tsv-edges" => OntologyFormat::TsvEdges,
                    other => {
                        return Err(ConfigError::Invalid(format!(
                            "unknown ontology format {other:?} (expected obo-subset or tsv-edges)"
                        )))
                    }
                };
                let source = ConceptSource::from_acronym(&f.source).ok_or_else(|| {
                    ConfigError::Invalid(format!("unknown concept source {:?}", f.source))
                })?;
                Ok((f.path.clone(), format, source))
            })
            .collect()
    }

    pub fn evaluator_config(&self) -> EvaluatorConfig {
        EvaluatorConfig {
            weights: self.evaluator.weights,
            threshold: self.evaluator.threshold,
            top_k: self.evaluator.top_k,
        }
    }

    pub fn hyperparams(&self) -> Hyperparams {
        Hyperparams {
            c: self.classifier.c,
            epochs: self.classifier.epochs,
            seed: self.classifier.seed,
        }
    }

    pub fn answer_caps(&self) -> AnswerCaps {
        AnswerCaps {
            documents: self.answer.documents_cap,
            snippets: self.answer.snippets_cap,
            concepts: self.answer.concepts_cap,
            triples: self.answer.triples_cap,
        }
    }
}
