//! Question-to-answer orchestration: wires the gateway, ontology store,
//! annotation engine, retriever, evaluator, optional classifier and
//! answer builder, and runs question batches with bounded concurrency.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::{Duration, Instant};

use thiserror::Error;

use crate::annotate::{AnnotationEngine, AnnotationSet};
use crate::answer::{
    build_triples, emit_answer, select_concepts, select_snippets, AnswerError, AnswerFile,
    AnswerRecord, AnswerSet,
};
use crate::classify::{
    accuracy, build_vocabulary, extract_features, label_from_gold, predict, split_holdout,
    train_with_trace, ClassifyError, FeatureVector, SvmModel,
};
use crate::config::{ConfigError, PipelineConfig};
use crate::evaluate::{grade, score_pair, EvaluateError, GradedAbstract};
use crate::eval::EvalError;
use crate::gateway::{Gateway, GatewayError, GatewayMode, HttpTransport};
use crate::ontology::{OntologyGraph, OntologyError};
use crate::retrieve::{CandidatePool, Retriever};
use crate::text::{AbstractDoc, DomainError, Pmid, Question};

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Ontology(#[from] OntologyError),
    #[error(transparent)]
    Domain(#[from] DomainError),
    #[error("question {question_id}: {source}")]
    Question {
        question_id: String,
        source: GatewayError,
    },
    #[error(transparent)]
    Gateway(#[from] GatewayError),
    #[error(transparent)]
    Evaluate(#[from] EvaluateError),
    #[error(transparent)]
    Answer(#[from] AnswerError),
    #[error(transparent)]
    Classify(#[from] ClassifyError),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error("io error on {path}: {message}")]
    Io { path: String, message: String },
}

impl PipelineError {
    pub fn is_replay_miss(&self) -> bool {
        match self {
            PipelineError::Gateway(e) => e.is_replay_miss(),
            PipelineError::Question { source, .. } => source.is_replay_miss(),
            _ => false,
        }
    }
}

/// Everything produced while answering one question; tests use the
/// intermediate stages, the CLI writes only the answer.
#[derive(Debug)]
pub struct QuestionOutcome {
    pub question: Question,
    pub answer: AnswerSet,
    pub pool: CandidatePool,
    pub graded: Vec<GradedAbstract>,
    pub approved: Vec<GradedAbstract>,
    pub degraded: bool,
    pub elapsed: Duration,
}

pub struct TrainOutcome {
    pub model: SvmModel,
    pub holdout_accuracy: Option<f64>,
    pub example_count: usize,
    pub positive_count: usize,
}

pub struct Pipeline {
    pub config: PipelineConfig,
    pub graph: OntologyGraph,
    pub gateway: Gateway,
}

impl Pipeline {
    /// Standard wiring from a validated config: merged ontology graph and
    /// a gateway matching the configured mode.
    pub fn new(config: PipelineConfig) -> Result<Self, PipelineError> {
        let graph = load_graph(&config)?;
        let endpoints = config.endpoints()?;
        let gateway = match config.mode()? {
            GatewayMode::Replay => Gateway::replay(endpoints, &config.gateway.store)?,
            GatewayMode::Record => Gateway::record(
                endpoints,
                &config.gateway.store,
                Box::new(HttpTransport::new(Duration::from_millis(
                    config.gateway.rate_limit_ms,
                ))),
            )?,
            GatewayMode::Passthrough => Gateway::passthrough(
                endpoints,
                Box::new(HttpTransport::new(Duration::from_millis(
                    config.gateway.rate_limit_ms,
                ))),
            ),
        }
        .with_efetch_chunk(config.retrieval.efetch_chunk)
        .with_parallelism(config.gateway.parallelism);
        Ok(Pipeline {
            config,
            graph,
            gateway,
        })
    }

    /// Wiring with a caller-provided gateway (tests, fixture recording).
    pub fn with_gateway(config: PipelineConfig, gateway: Gateway) -> Result<Self, PipelineError> {
        let graph = load_graph(&config)?;
        Ok(Pipeline {
            config,
            graph,
            gateway,
        })
    }

    fn engine(&self) -> AnnotationEngine<'_> {
        AnnotationEngine::new(
            &self.gateway,
            &self.graph,
            Default::default(),
            &self.config.gateway.whatizit_vocabulary,
            &self.config.gateway.whatizit_id_tag,
        )
    }

    /// Annotate, retrieve, annotate abstracts, score. The shared front
    /// half of answering and training.
    fn analyze_question(
        &self,
        question: &Question,
    ) -> Result<(AnnotationSet, CandidatePool, Vec<(AnnotationSet, GradedAbstract)>), PipelineError>
    {
        let engine = self.engine();
        let evaluator = self.config.evaluator_config();
        let wrap = |source: GatewayError| PipelineError::Question {
            question_id: question.id.clone(),
            source,
        };
        let question_annotations = engine.annotate_question(question).map_err(wrap)?;
        let retriever = Retriever::new(&self.gateway, self.config.retrieval.recency_cap);
        let pool = retriever
            .build_pool(question, &question_annotations)
            .map_err(wrap)?;
        let mut scored = Vec::with_capacity(pool.docs.len());
        for doc in &pool.docs {
            let doc_annotations = engine.annotate_abstract(doc).map_err(wrap)?;
            let scores = score_pair(
                &question_annotations,
                &doc_annotations,
                &question.body,
                doc,
                &self.graph,
                evaluator.top_k,
            );
            let (grade_value, approved) = grade(&scores, &evaluator)?;
            scored.push((
                doc_annotations,
                GradedAbstract {
                    doc: doc.clone(),
                    scores,
                    grade: grade_value,
                    approved,
                },
            ));
        }
        Ok((question_annotations, pool, scored))
    }

    /// Full answer for one question. With a model, classifier predictions
    /// gate which abstracts contribute; without one, the grade threshold
    /// does.
    pub fn answer_question(
        &self,
        question: &Question,
        model: Option<&SvmModel>,
    ) -> Result<QuestionOutcome, PipelineError> {
        let started = Instant::now();
        let (question_annotations, pool, scored) = self.analyze_question(question)?;
        let mut degraded = question_annotations.degraded || pool.degraded;

        let mut approved: Vec<GradedAbstract> = Vec::new();
        let mut approved_annotations: Vec<AnnotationSet> = Vec::new();
        for (doc_annotations, graded) in &scored {
            degraded |= doc_annotations.degraded;
            let keep = match model {
                Some(model) => {
                    let features = extract_features(
                        &graded.doc,
                        &graded.scores,
                        &model.vocabulary,
                        self.config.classifier.ngram_max,
                    );
                    predict(model, &features)?.0 > 0
                }
                None => graded.approved,
            };
            if keep {
                approved.push(graded.clone());
                approved_annotations.push(doc_annotations.clone());
            }
        }

        let caps = self.config.answer_caps();
        let snippets = select_snippets(question, &approved, &self.graph, caps.snippets);
        let selection = select_concepts(
            &question_annotations,
            &approved_annotations,
            &self.graph,
            caps.concepts,
        );
        let concepts: Vec<String> = selection
            .output
            .iter()
            .map(|a| a.concept_uri.clone())
            .collect();
        let (triples, triples_degraded) = build_triples(
            &selection.intersection,
            &self.gateway,
            self.config.answer.triple_candidate_limit,
            caps.triples,
        );
        degraded |= triples_degraded;

        let answer = emit_answer(question, &approved, snippets, concepts, triples, &caps)?;
        let graded: Vec<GradedAbstract> = scored.into_iter().map(|(_, g)| g).collect();
        Ok(QuestionOutcome {
            question: question.clone(),
            answer,
            pool,
            graded,
            approved,
            degraded,
            elapsed: started.elapsed(),
        })
    }

    /// Answers a batch with bounded concurrency, preserving input order.
    pub fn answer_questions(
        &self,
        questions: &[Question],
        model: Option<&SvmModel>,
    ) -> Result<Vec<QuestionOutcome>, PipelineError> {
        let workers = self
            .config
            .retrieval
            .question_parallelism
            .min(questions.len().max(1));
        if workers <= 1 || questions.len() <= 1 {
            return questions
                .iter()
                .map(|q| self.answer_question(q, model))
                .collect();
        }
        let next = AtomicUsize::new(0);
        let slots: Mutex<Vec<Option<Result<QuestionOutcome, PipelineError>>>> =
            Mutex::new((0..questions.len()).map(|_| None).collect());
        std::thread::scope(|scope| {
            for _ in 0..workers {
                scope.spawn(|| loop {
                    let index = next.fetch_add(1, Ordering::SeqCst);
                    if index >= questions.len() {
                        break;
                    }
                    let outcome = self.answer_question(&questions[index], model);
                    slots.lock().expect("slot lock poisoned")[index] = Some(outcome);
                });
            }
        });
        slots
            .into_inner()
            .expect("slot lock poisoned")
            .into_iter()
            .map(|slot| slot.expect("worker filled every slot"))
            .collect()
    }

    /// Builds labelled features for every candidate abstract of every
    /// question and trains the classifier, reporting holdout accuracy
    /// when the split leaves both classes trainable.
    pub fn train(
        &self,
        questions: &[Question],
        gold: &GoldStandard,
    ) -> Result<TrainOutcome, PipelineError> {
        let ngram_max = self.config.classifier.ngram_max;
        let mut corpus: Vec<AbstractDoc> = Vec::new();
        let mut seen: BTreeSet<Pmid> = BTreeSet::new();
        let mut per_question: Vec<(usize, GradedAbstract)> = Vec::new(); // (question idx, graded)

        for (qi, question) in questions.iter().enumerate() {
            let (_, _, scored) = self.analyze_question(question)?;
            for (_, graded) in scored {
                if seen.insert(graded.doc.pmid.clone()) {
                    corpus.push(graded.doc.clone());
                }
                per_question.push((qi, graded));
            }
        }
        let vocabulary = build_vocabulary(&corpus, ngram_max, self.config.classifier.vocab_cap);

        let mut examples: Vec<(FeatureVector, i8)> = Vec::new();
        for (qi, graded) in &per_question {
            let gold_docs = gold.documents_for(&questions[*qi].id);
            let label = label_from_gold(&graded.doc, &gold_docs);
            let features = extract_features(&graded.doc, &graded.scores, &vocabulary, ngram_max);
            examples.push((features, label));
        }
        let labels: Vec<i8> = examples.iter().map(|(_, l)| *l).collect();
        let positive_count = labels.iter().filter(|l| **l > 0).count();
        if positive_count == 0 || positive_count == labels.len() {
            return Err(ClassifyError::DegenerateLabels.into());
        }

        let (train_idx, holdout_idx) = split_holdout(
            &labels,
            self.config.classifier.holdout_fraction,
            self.config.classifier.seed,
        );
        let train_set: Vec<(FeatureVector, i8)> =
            train_idx.iter().map(|&i| examples[i].clone()).collect();
        let holdout_set: Vec<(FeatureVector, i8)> =
            holdout_idx.iter().map(|&i| examples[i].clone()).collect();

        let (model, _) = train_with_trace(&train_set, self.config.hyperparams(), vocabulary)?;
        let holdout_accuracy = if holdout_set.is_empty() {
            None
        } else {
            Some(accuracy(&model, &holdout_set))
        };
        Ok(TrainOutcome {
            model,
            holdout_accuracy,
            example_count: examples.len(),
            positive_count,
        })
    }
}

fn load_graph(config: &PipelineConfig) -> Result<OntologyGraph, PipelineError> {
    let mut graph = OntologyGraph::default();
    for (path, format, source) in config.ontology_files()? {
        let loaded = OntologyGraph::load(&path, format, source)?;
        graph.merge(loaded)?;
    }
    Ok(graph)
}

/// Gold documents and snippets per question, parsed from a file in the
/// answer-file schema.
pub struct GoldStandard {
    pub file: AnswerFile,
    by_id: BTreeMap<String, BTreeSet<Pmid>>,
}

impl GoldStandard {
    pub fn from_file(file: AnswerFile) -> Result<Self, EvalError> {
        let mut by_id = BTreeMap::new();
        for record in &file.questions {
            let docs: BTreeSet<Pmid> = record
                .documents
                .iter()
                .map(|d| crate::eval::normalize_doc_id(d))
                .collect::<Result<_, _>>()?;
            by_id.insert(record.id.clone(), docs);
        }
        Ok(GoldStandard { file, by_id })
    }

    pub fn documents_for(&self, question_id: &str) -> BTreeSet<Pmid> {
        self.by_id.get(question_id).cloned().unwrap_or_default()
    }
}

pub fn read_to_string(path: &Path) -> Result<String, PipelineError> {
    std::fs::read_to_string(path).map_err(|e| PipelineError::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    })
}

pub fn write_string(path: &Path, content: &str) -> Result<(), PipelineError> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent).map_err(|e| PipelineError::Io {
                path: path.display().to_string(),
                message: e.to_string(),
            })?;
        }
    }
    std::fs::write(path, content).map_err(|e| PipelineError::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    })
}

/// Serializes outcomes into the answer file, preserving question order.
pub fn outcomes_to_answer_file(outcomes: &[QuestionOutcome]) -> AnswerFile {
    AnswerFile {
        questions: outcomes
            .iter()
            .map(|o| AnswerRecord::from(&o.answer))
            .collect(),
    }
}
