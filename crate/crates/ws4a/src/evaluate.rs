//! The four per-abstract scores and their weighted combination into a
//! grade with a threshold approval decision.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use thiserror::Error;

use crate::annotate::{local_dictionary_scan, AnnotationSet};
use crate::ontology::OntologyGraph;
use crate::text::{tokenize, AbstractDoc};

#[derive(Debug, Error)]
pub enum EvaluateError {
    #[error("bad weights: {0}")]
    BadWeights(String),
}

/// The four evaluator scores, each in [0, 1].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScoreVector {
    pub jaccard: f64,
    pub hierarchical: f64,
    pub top_frequency: f64,
    pub sentence_similarity: f64,
}

impl ScoreVector {
    pub fn as_array(&self) -> [f64; 4] {
        [
            self.jaccard,
            self.hierarchical,
            self.top_frequency,
            self.sentence_similarity,
        ]
    }
}

/// A scored abstract with its grade and threshold approval.
#[derive(Debug, Clone)]
pub struct GradedAbstract {
    pub doc: AbstractDoc,
    pub scores: ScoreVector,
    pub grade: f64,
    pub approved: bool,
}

/// Weights for the four scores, the approval threshold, and the k of the
/// top-frequency overlap.
#[derive(Debug, Clone)]
pub struct EvaluatorConfig {
    pub weights: [f64; 4],
    pub threshold: f64,
    pub top_k: usize,
}

impl Default for EvaluatorConfig {
    fn default() -> Self {
        EvaluatorConfig {
            weights: [0.25; 4],
            threshold: 0.5,
            top_k: 5,
        }
    }
}

impl EvaluatorConfig {
    pub fn validate(&self) -> Result<(), EvaluateError> {
        if self.weights.iter().any(|w| *w < 0.0 || !w.is_finite()) {
            return Err(EvaluateError::BadWeights(
                "weights must be non-negative".into(),
            ));
        }
        let sum: f64 = self.weights.iter().sum();
        if (sum - 1.0).abs() > 1e-9 {
            return Err(EvaluateError::BadWeights(format!(
                "weights must sum to 1, got {sum}"
            )));
        }
        if !(0.0..=1.0).contains(&self.threshold) {
            return Err(EvaluateError::BadWeights(format!(
                "threshold must be in [0,1], got {}",
                self.threshold
            )));
        }
        if self.top_k == 0 {
            return Err(EvaluateError::BadWeights("top_k must be at least 1".into()));
        }
        Ok(())
    }
}

/// |Q ∩ A| / |Q ∪ A| over distinct concept ids; 0 when both sides are
/// empty.
pub fn jaccard_score(query: &AnnotationSet, doc: &AnnotationSet) -> f64 {
    let q = query.concept_ids();
    let a = doc.concept_ids();
    if q.is_empty() && a.is_empty() {
        return 0.0;
    }
    let intersection = q.intersection(&a).count() as f64;
    let union = q.union(&a).count() as f64;
    if union == 0.0 {
        0.0
    } else {
        intersection / union
    }
}

/// Mean over distinct query concepts of the best hierarchical similarity
/// to any abstract concept. Concepts missing from the graph and
/// cross-source pairs contribute 0; an empty side scores 0.
pub fn hierarchical_score(
    query: &AnnotationSet,
    doc: &AnnotationSet,
    graph: &OntologyGraph,
) -> f64 {
    let q: BTreeSet<&str> = query.concept_ids();
    let a: BTreeSet<&str> = doc.concept_ids();
    if q.is_empty() || a.is_empty() {
        return 0.0;
    }
    let total: f64 = q
        .iter()
        .map(|qc| {
            a.iter()
                .map(|ac| graph.similarity_or_zero(qc, ac))
                .fold(0.0, f64::max)
        })
        .sum();
    total / q.len() as f64
}

/// Distinct concept ids ranked by their best annotation score (ties by
/// concept id ascending), truncated to k.
fn top_k_concepts(set: &AnnotationSet, k: usize) -> Vec<String> {
    let mut best: HashMap<&str, f64> = HashMap::new();
    for a in &set.annotations {
        let entry = best.entry(a.concept_id.as_str()).or_insert(f64::NEG_INFINITY);
        if a.score > *entry {
            *entry = a.score;
        }
    }
    let mut ranked: Vec<(&str, f64)> = best.into_iter().collect();
    ranked.sort_by(|(id_a, s_a), (id_b, s_b)| {
        s_b.partial_cmp(s_a)
            .unwrap_or(std::cmp::Ordering::Equal)
            .then_with(|| id_a.cmp(id_b))
    });
    ranked.truncate(k);
    ranked.into_iter().map(|(id, _)| id.to_string()).collect()
}

/// Overlap of the two top-k concept sets divided by k. Sides with fewer
/// than k concepts contribute all of them; the denominator stays k.
pub fn top_frequency_score(query: &AnnotationSet, doc: &AnnotationSet, k: usize) -> f64 {
    assert!(k >= 1, "k must be at least 1");
    let top_q: BTreeSet<String> = top_k_concepts(query, k).into_iter().collect();
    let top_a: BTreeSet<String> = top_k_concepts(doc, k).into_iter().collect();
    top_q.intersection(&top_a).count() as f64 / k as f64
}

// Bags use BTreeMap so float accumulation order is fixed and scores are
// bit-identical across runs.
fn augmented_bag(text: &str, graph: &OntologyGraph) -> BTreeMap<String, f64> {
    let mut bag: BTreeMap<String, f64> = BTreeMap::new();
    for token in tokenize(text) {
        *bag.entry(token.surface).or_insert(0.0) += 1.0;
    }
    for annotation in local_dictionary_scan(text, graph) {
        *bag.entry(annotation.concept_id).or_insert(0.0) += 1.0;
    }
    bag
}

fn cosine(a: &BTreeMap<String, f64>, b: &BTreeMap<String, f64>) -> f64 {
    if a.is_empty() || b.is_empty() {
        return 0.0;
    }
    let dot: f64 = a
        .iter()
        .filter_map(|(k, va)| b.get(k).map(|vb| va * vb))
        .sum();
    // norms multiplied before the square root: tf counts are integers, so
    // identical bags give dot == sqrt(na2 * nb2) exactly and cosine 1.0
    let na2: f64 = a.values().map(|v| v * v).sum();
    let nb2: f64 = b.values().map(|v| v * v).sum();
    let denom = (na2 * nb2).sqrt();
    if denom == 0.0 {
        0.0
    } else {
        (dot / denom).clamp(0.0, 1.0)
    }
}

/// Cosine similarity of term-frequency bags augmented with dictionary
/// concept ids. Order-free; 0 when either bag is empty.
pub fn sentence_similarity(question_text: &str, doc_text: &str, graph: &OntologyGraph) -> f64 {
    cosine(
        &augmented_bag(question_text, graph),
        &augmented_bag(doc_text, graph),
    )
}

/// Weighted combination: grade = w · scores, approved iff grade reaches
/// the threshold.
pub fn grade(scores: &ScoreVector, config: &EvaluatorConfig) -> Result<(f64, bool), EvaluateError> {
    config.validate()?;
    let value: f64 = scores
        .as_array()
        .iter()
        .zip(config.weights.iter())
        .map(|(s, w)| s * w)
        .sum();
    Ok((value, value >= config.threshold))
}

/// All four scores for one (question, abstract) pair.
pub fn score_pair(
    query: &AnnotationSet,
    doc_annotations: &AnnotationSet,
    question_text: &str,
    doc: &AbstractDoc,
    graph: &OntologyGraph,
    top_k: usize,
) -> ScoreVector {
    ScoreVector {
        jaccard: jaccard_score(query, doc_annotations),
        hierarchical: hierarchical_score(query, doc_annotations, graph),
        top_frequency: top_frequency_score(query, doc_annotations, top_k),
        sentence_similarity: sentence_similarity(question_text, &doc.combined_text(), graph),
    }
}
