//! Linear SVM relevance classifier: four dense evaluator scores plus
//! binary n-gram features over a document-frequency-ranked vocabulary,
//! trained with deterministic hinge-loss subgradient descent.

use std::collections::{BTreeSet, HashMap, HashSet};
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::evaluate::ScoreVector;
use crate::text::{ngrams, tokenize, AbstractDoc, Pmid};

pub const DENSE_DIM: usize = 4;

#[derive(Debug, Error)]
pub enum ClassifyError {
    #[error("training needs both labels; got a single class")]
    DegenerateLabels,
    #[error("dimension mismatch: model expects {expected}, vector has {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("model io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("model format mismatch: {0}")]
    Format(String),
}

/// Ordered n-gram vocabulary, at most `cap` entries, ranked by document
/// frequency (ties by n-gram ascending).
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Vocabulary {
    entries: Vec<String>,
    index: HashMap<String, usize>,
}

impl Vocabulary {
    pub fn from_entries(entries: Vec<String>) -> Self {
        let index = entries
            .iter()
            .enumerate()
            .map(|(i, e)| (e.clone(), i))
            .collect();
        Vocabulary { entries, index }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entries(&self) -> &[String] {
        &self.entries
    }

    pub fn position(&self, ngram: &str) -> Option<usize> {
        self.index.get(ngram).copied()
    }
}

/// Document n-grams over title + abstract text.
fn doc_ngrams(doc: &AbstractDoc, n_max: usize) -> Vec<String> {
    ngrams(&tokenize(&doc.combined_text()), n_max)
}

/// Ranks all n-grams (1..=n_max) of the corpus by document frequency
/// descending, ties lexicographic ascending, and keeps the top `cap`.
pub fn build_vocabulary(corpus: &[AbstractDoc], n_max: usize, cap: usize) -> Vocabulary {
    let mut df: HashMap<String, usize> = HashMap::new();
    for doc in corpus {
        let grams: HashSet<String> = doc_ngrams(doc, n_max).into_iter().collect();
        for gram in grams {
            *df.entry(gram).or_insert(0) += 1;
        }
    }
    let mut ranked: Vec<(String, usize)> = df.into_iter().collect();
    ranked.sort_by(|(ga, fa), (gb, fb)| fb.cmp(fa).then_with(|| ga.cmp(gb)));
    ranked.truncate(cap);
    Vocabulary::from_entries(ranked.into_iter().map(|(g, _)| g).collect())
}

/// Dense scores plus sorted positions of vocabulary n-grams present in
/// the document (binary weights).
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureVector {
    pub dense: [f64; DENSE_DIM],
    pub sparse: Vec<usize>,
}

impl FeatureVector {
    pub fn dim(&self, vocabulary_len: usize) -> usize {
        let _ = self;
        DENSE_DIM + vocabulary_len
    }
}

pub fn extract_features(
    doc: &AbstractDoc,
    scores: &ScoreVector,
    vocabulary: &Vocabulary,
    n_max: usize,
) -> FeatureVector {
    let mut positions: BTreeSet<usize> = BTreeSet::new();
    for gram in doc_ngrams(doc, n_max) {
        if let Some(pos) = vocabulary.position(&gram) {
            positions.insert(pos);
        }
    }
    FeatureVector {
        dense: scores.as_array(),
        sparse: positions.into_iter().collect(),
    }
}

/// +1 iff the document is in the gold relevant set.
pub fn label_from_gold(doc: &AbstractDoc, gold_documents: &BTreeSet<Pmid>) -> i8 {
    if gold_documents.contains(&doc.pmid) {
        1
    } else {
        -1
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Hyperparams {
    pub c: f64,
    pub epochs: usize,
    pub seed: u64,
}

impl Default for Hyperparams {
    fn default() -> Self {
        Hyperparams {
            c: 1.0,
            epochs: 20,
            seed: 42,
        }
    }
}

/// Trained linear model. Weight layout: the four dense scores first, then
/// one weight per vocabulary entry.
#[derive(Debug, Clone, PartialEq)]
pub struct SvmModel {
    pub weights: Vec<f64>,
    pub bias: f64,
    pub hyperparams: Hyperparams,
    pub vocabulary: Vocabulary,
}

impl SvmModel {
    pub fn dim(&self) -> usize {
        self.weights.len()
    }
}

fn dot(weights: &[f64], fv: &FeatureVector) -> f64 {
    let mut sum = 0.0;
    for (i, v) in fv.dense.iter().enumerate() {
        sum += weights[i] * v;
    }
    for &pos in &fv.sparse {
        sum += weights[DENSE_DIM + pos];
    }
    sum
}

/// Regularized objective: lambda/2 ||w||^2 + mean hinge loss, with
/// lambda = 1/C. The bias is unregularized.
pub fn objective(weights: &[f64], bias: f64, examples: &[(FeatureVector, i8)], c: f64) -> f64 {
    let lambda = 1.0 / c;
    let reg: f64 = 0.5 * lambda * weights.iter().map(|w| w * w).sum::<f64>();
    let hinge: f64 = examples
        .iter()
        .map(|(fv, y)| (1.0 - f64::from(*y) * (dot(weights, fv) + bias)).max(0.0))
        .sum::<f64>()
        / examples.len() as f64;
    reg + hinge
}

fn check_dims(examples: &[(FeatureVector, i8)], dim: usize) -> Result<(), ClassifyError> {
    for (fv, _) in examples {
        if let Some(&max) = fv.sparse.last() {
            if DENSE_DIM + max >= dim {
                return Err(ClassifyError::DimensionMismatch {
                    expected: dim,
                    got: DENSE_DIM + max + 1,
                });
            }
        }
    }
    Ok(())
}

/// Training with the per-epoch objective trace. Updates are per-example
/// subgradient steps with step size 1/(lambda t) where t counts examples
/// seen, and seed-controlled shuffling each epoch; fully deterministic
/// for a given seed.
///
/// Epochs carry a monotone safeguard: if a pass ends with a worse
/// objective than the last accepted state, the pass is rolled back and
/// training continues from the accepted state with the (further decayed)
/// step size. Boundary objectives are therefore non-increasing.
pub fn train_with_trace(
    examples: &[(FeatureVector, i8)],
    hyperparams: Hyperparams,
    vocabulary: Vocabulary,
) -> Result<(SvmModel, Vec<f64>), ClassifyError> {
    let has_pos = examples.iter().any(|(_, y)| *y > 0);
    let has_neg = examples.iter().any(|(_, y)| *y < 0);
    if !has_pos || !has_neg {
        return Err(ClassifyError::DegenerateLabels);
    }
    let dim = DENSE_DIM + vocabulary.len();
    check_dims(examples, dim)?;
    assert!(hyperparams.c > 0.0, "C must be positive");

    let lambda = 1.0 / hyperparams.c;
    let mut weights = vec![0.0; dim];
    let mut bias = 0.0;
    let mut order: Vec<usize> = (0..examples.len()).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(hyperparams.seed);
    let mut step: u64 = 0;
    let mut trace = Vec::with_capacity(hyperparams.epochs);
    let mut accepted_weights = weights.clone();
    let mut accepted_bias = bias;
    let mut accepted_objective = objective(&weights, bias, examples, hyperparams.c);

    for _epoch in 0..hyperparams.epochs {
        order.shuffle(&mut rng);
        for &i in &order {
            step += 1;
            let (fv, y) = &examples[i];
            let y = f64::from(*y);
            let eta = 1.0 / (lambda * step as f64);
            let violated = y * (dot(&weights, fv) + bias) < 1.0;
            let shrink = 1.0 - eta * lambda;
            for w in weights.iter_mut() {
                *w *= shrink;
            }
            if violated {
                for (k, v) in fv.dense.iter().enumerate() {
                    weights[k] += eta * y * v;
                }
                for &pos in &fv.sparse {
                    weights[DENSE_DIM + pos] += eta * y;
                }
                bias += eta * y;
            }
        }
        let epoch_objective = objective(&weights, bias, examples, hyperparams.c);
        if epoch_objective <= accepted_objective {
            accepted_weights.copy_from_slice(&weights);
            accepted_bias = bias;
            accepted_objective = epoch_objective;
        } else {
            weights.copy_from_slice(&accepted_weights);
            bias = accepted_bias;
        }
        trace.push(accepted_objective);
    }

    Ok((
        SvmModel {
            weights: accepted_weights,
            bias: accepted_bias,
            hyperparams,
            vocabulary,
        },
        trace,
    ))
}

pub fn train(
    examples: &[(FeatureVector, i8)],
    hyperparams: Hyperparams,
    vocabulary: Vocabulary,
) -> Result<SvmModel, ClassifyError> {
    train_with_trace(examples, hyperparams, vocabulary).map(|(model, _)| model)
}

/// Signed margin and label; a zero margin predicts +1.
pub fn predict(model: &SvmModel, fv: &FeatureVector) -> Result<(i8, f64), ClassifyError> {
    if let Some(&max) = fv.sparse.last() {
        if DENSE_DIM + max >= model.dim() {
            return Err(ClassifyError::DimensionMismatch {
                expected: model.dim(),
                got: DENSE_DIM + max + 1,
            });
        }
    }
    let margin = dot(&model.weights, fv) + model.bias;
    let label = if margin >= 0.0 { 1 } else { -1 };
    Ok((label, margin))
}

/// Training accuracy of a model on a labelled set.
pub fn accuracy(model: &SvmModel, examples: &[(FeatureVector, i8)]) -> f64 {
    if examples.is_empty() {
        return 0.0;
    }
    let correct = examples
        .iter()
        .filter(|(fv, y)| predict(model, fv).map(|(l, _)| l == *y).unwrap_or(false))
        .count();
    correct as f64 / examples.len() as f64
}

/// Stratified holdout split: shuffles each class separately with the
/// seed and moves `holdout_fraction` of each into the holdout part.
/// Returns (train indices, holdout indices).
pub fn split_holdout(labels: &[i8], holdout_fraction: f64, seed: u64) -> (Vec<usize>, Vec<usize>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut train = Vec::new();
    let mut holdout = Vec::new();
    for class in [1i8, -1] {
        let mut members: Vec<usize> = labels
            .iter()
            .enumerate()
            .filter(|(_, l)| **l == class)
            .map(|(i, _)| i)
            .collect();
        members.shuffle(&mut rng);
        let take = ((members.len() as f64) * holdout_fraction).floor() as usize;
        // keep at least one member in training when the class is present
        let take = take.min(members.len().saturating_sub(1));
        holdout.extend(members.drain(..take));
        train.extend(members);
    }
    train.sort_unstable();
    holdout.sort_unstable();
    (train, holdout)
}

const MODEL_MAGIC: &str = "ws4a-svm-model v1";

/// Plain-text model format: header, hyperparameters, bias, vocabulary
/// entries (order is the feature order), then one weight per line. All
/// floats use the shortest round-trip decimal form, so save/load is
/// exact and platform-independent.
pub fn save_model(model: &SvmModel, path: impl AsRef<Path>) -> Result<(), ClassifyError> {
    let mut out = String::new();
    out.push_str(MODEL_MAGIC);
    out.push('\n');
    out.push_str(&format!("c {}\n", model.hyperparams.c));
    out.push_str(&format!("epochs {}\n", model.hyperparams.epochs));
    out.push_str(&format!("seed {}\n", model.hyperparams.seed));
    out.push_str(&format!("bias {}\n", model.bias));
    out.push_str(&format!("vocab {}\n", model.vocabulary.len()));
    for entry in model.vocabulary.entries() {
        out.push_str(entry);
        out.push('\n');
    }
    out.push_str(&format!("weights {}\n", model.weights.len()));
    for w in &model.weights {
        out.push_str(&format!("{w}\n"));
    }
    let mut file = std::fs::File::create(path)?;
    file.write_all(out.as_bytes())?;
    Ok(())
}

fn take_line<'a>(lines: &'a [String], pos: &mut usize) -> Result<&'a str, ClassifyError> {
    let line = lines
        .get(*pos)
        .ok_or_else(|| ClassifyError::Format("unexpected end of file".into()))?;
    *pos += 1;
    Ok(line)
}

fn take_field<'a>(
    lines: &'a [String],
    pos: &mut usize,
    name: &str,
) -> Result<&'a str, ClassifyError> {
    let line = take_line(lines, pos)?;
    line.strip_prefix(&format!("{name} "))
        .ok_or_else(|| ClassifyError::Format(format!("expected {name} line, got {line:?}")))
}

pub fn load_model(path: impl AsRef<Path>) -> Result<SvmModel, ClassifyError> {
    let file = std::fs::File::open(path)?;
    let lines: Vec<String> = BufReader::new(file)
        .lines()
        .collect::<Result<_, _>>()
        .map_err(ClassifyError::Io)?;
    let mut pos = 0usize;
    let header = take_line(&lines, &mut pos)?;
    if header != MODEL_MAGIC {
        return Err(ClassifyError::Format(format!(
            "expected header {MODEL_MAGIC:?}, found {header:?}"
        )));
    }
    let c: f64 = take_field(&lines, &mut pos, "c")?
        .parse()
        .map_err(|e| ClassifyError::Format(format!("bad c: {e}")))?;
    let epochs: usize = take_field(&lines, &mut pos, "epochs")?
        .parse()
        .map_err(|e| ClassifyError::Format(format!("bad epochs: {e}")))?;
    let seed: u64 = take_field(&lines, &mut pos, "seed")?
        .parse()
        .map_err(|e| ClassifyError::Format(format!("bad seed: {e}")))?;
    let bias: f64 = take_field(&lines, &mut pos, "bias")?
        .parse()
        .map_err(|e| ClassifyError::Format(format!("bad bias: {e}")))?;
    let vocab_len: usize = take_field(&lines, &mut pos, "vocab")?
        .parse()
        .map_err(|e| ClassifyError::Format(format!("bad vocab length: {e}")))?;
    let mut entries = Vec::with_capacity(vocab_len);
    for _ in 0..vocab_len {
        entries.push(take_line(&lines, &mut pos)?.to_string());
    }
    let weight_len: usize = take_field(&lines, &mut pos, "weights")?
        .parse()
        .map_err(|e| ClassifyError::Format(format!("bad weight length: {e}")))?;
    if weight_len != DENSE_DIM + vocab_len {
        return Err(ClassifyError::Format(format!(
            "weight length {weight_len} does not match vocabulary {vocab_len}"
        )));
    }
    let mut weights = Vec::with_capacity(weight_len);
    for _ in 0..weight_len {
        let w: f64 = take_line(&lines, &mut pos)?
            .parse()
            .map_err(|e| ClassifyError::Format(format!("bad weight: {e}")))?;
        weights.push(w);
    }
    Ok(SvmModel {
        weights,
        bias,
        hyperparams: Hyperparams { c, epochs, seed },
        vocabulary: Vocabulary::from_entries(entries),
    })
}
