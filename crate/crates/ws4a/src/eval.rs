//! Answer-file scoring: per-question precision/recall/F-measure for
//! documents (set overlap) and snippets (character overlap), batch means,
//! and the two-variant comparison table.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use serde::Serialize;
use thiserror::Error;

use crate::answer::{AnswerFile, AnswerRecord, Section, SnippetRecord};
use crate::text::Pmid;

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("malformed document url: {0:?}")]
    MalformedUrl(String),
    #[error("answer file mismatch: {0}")]
    SchemaMismatch(String),
}

/// Precision, recall and F-measure; F is 0 when P + R is 0.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Prf {
    pub precision: f64,
    pub recall: f64,
    pub f_measure: f64,
}

impl Prf {
    pub fn new(precision: f64, recall: f64) -> Self {
        let f_measure = if precision + recall == 0.0 {
            0.0
        } else {
            2.0 * precision * recall / (precision + recall)
        };
        Prf {
            precision,
            recall,
            f_measure,
        }
    }

    pub const ZERO: Prf = Prf {
        precision: 0.0,
        recall: 0.0,
        f_measure: 0.0,
    };
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct QuestionEval {
    pub docs: Prf,
    pub snippets: Prf,
}

#[derive(Debug, Serialize)]
pub struct EvalReport {
    pub per_question: BTreeMap<String, QuestionEval>,
    pub means: QuestionEval,
    pub wall_time_seconds: f64,
}

/// Extracts the pmid from either a bare id or a PubMed URL.
pub fn normalize_doc_id(s: &str) -> Result<Pmid, EvalError> {
    let candidate = if s.bytes().all(|b| b.is_ascii_digit()) && !s.is_empty() {
        s
    } else {
        s.trim_end_matches('/')
            .rsplit('/')
            .next()
            .unwrap_or_default()
    };
    Pmid::new(candidate).map_err(|_| EvalError::MalformedUrl(s.to_string()))
}

/// Set-overlap P/R/F over pmids. Predictions are deduplicated first; URLs
/// are normalized to pmids.
pub fn prf_documents(predicted: &[String], gold: &BTreeSet<Pmid>) -> Result<Prf, EvalError> {
    let mut seen = BTreeSet::new();
    for p in predicted {
        seen.insert(normalize_doc_id(p)?);
    }
    let hits = seen.intersection(gold).count() as f64;
    let precision = if seen.is_empty() {
        0.0
    } else {
        hits / seen.len() as f64
    };
    let recall = if gold.is_empty() {
        0.0
    } else {
        hits / gold.len() as f64
    };
    Ok(Prf::new(precision, recall))
}

/// Snippet span keyed by document and section.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
struct SpanKey {
    pmid: Pmid,
    section: Section,
}

fn snippet_spans(
    snippets: &[SnippetRecord],
) -> Result<HashMap<SpanKey, Vec<(usize, usize)>>, EvalError> {
    let mut map: HashMap<SpanKey, Vec<(usize, usize)>> = HashMap::new();
    let mut seen: BTreeSet<(String, u8, usize, usize)> = BTreeSet::new();
    for s in snippets {
        let pmid = normalize_doc_id(&s.document)?;
        let section_tag = match s.begin_section {
            Section::Title => 0u8,
            Section::Abstract => 1,
        };
        // exact duplicates dropped before scoring
        if !seen.insert((
            pmid.as_str().to_string(),
            section_tag,
            s.offset_in_begin_section,
            s.offset_in_end_section,
        )) {
            continue;
        }
        if s.offset_in_end_section > s.offset_in_begin_section {
            map.entry(SpanKey {
                pmid,
                section: s.begin_section,
            })
            .or_default()
            .push((s.offset_in_begin_section, s.offset_in_end_section));
        }
    }
    Ok(map)
}

fn merge_intervals(mut intervals: Vec<(usize, usize)>) -> Vec<(usize, usize)> {
    intervals.sort_unstable();
    let mut merged: Vec<(usize, usize)> = Vec::new();
    for (b, e) in intervals {
        match merged.last_mut() {
            Some((_, last_end)) if b <= *last_end => *last_end = (*last_end).max(e),
            _ => merged.push((b, e)),
        }
    }
    merged
}

fn overlap_len(span: (usize, usize), merged: &[(usize, usize)]) -> usize {
    merged
        .iter()
        .map(|&(b, e)| span.1.min(e).saturating_sub(span.0.max(b)))
        .sum()
}

/// Character-overlap P/R over snippet spans sharing document and section:
/// precision counts predicted characters covered by gold, recall counts
/// gold characters covered by predictions.
pub fn prf_snippets(
    predicted: &[SnippetRecord],
    gold: &[SnippetRecord],
) -> Result<Prf, EvalError> {
    let pred = snippet_spans(predicted)?;
    let gold_spans = snippet_spans(gold)?;

    let merged_of = |map: &HashMap<SpanKey, Vec<(usize, usize)>>| -> HashMap<SpanKey, Vec<(usize, usize)>> {
        map.iter()
            .map(|(k, v)| (k.clone(), merge_intervals(v.clone())))
            .collect()
    };
    let gold_merged = merged_of(&gold_spans);
    let pred_merged = merged_of(&pred);

    let mut pred_total = 0usize;
    let mut pred_covered = 0usize;
    for (key, spans) in &pred {
        let gold_here = gold_merged.get(key).map(Vec::as_slice).unwrap_or(&[]);
        for &span in spans {
            pred_total += span.1 - span.0;
            pred_covered += overlap_len(span, gold_here);
        }
    }
    let mut gold_total = 0usize;
    let mut gold_covered = 0usize;
    for (key, spans) in &gold_spans {
        let pred_here = pred_merged.get(key).map(Vec::as_slice).unwrap_or(&[]);
        for &span in spans {
            gold_total += span.1 - span.0;
            gold_covered += overlap_len(span, pred_here);
        }
    }
    let precision = if pred_total == 0 {
        0.0
    } else {
        pred_covered as f64 / pred_total as f64
    };
    let recall = if gold_total == 0 {
        0.0
    } else {
        gold_covered as f64 / gold_total as f64
    };
    Ok(Prf::new(precision, recall))
}

fn gold_documents(record: &AnswerRecord) -> Result<BTreeSet<Pmid>, EvalError> {
    record.documents.iter().map(|d| normalize_doc_id(d)).collect()
}

/// Scores an answer file against a gold file. Questions are iterated in
/// gold order; a question missing from the answers scores zero.
pub fn evaluate_answers(
    answers: &AnswerFile,
    gold: &AnswerFile,
    wall_time_seconds: f64,
) -> Result<EvalReport, EvalError> {
    if gold.questions.is_empty() {
        return Err(EvalError::SchemaMismatch("gold file has no questions".into()));
    }
    let answers_by_id: HashMap<&str, &AnswerRecord> = answers
        .questions
        .iter()
        .map(|q| (q.id.as_str(), q))
        .collect();
    let mut per_question = BTreeMap::new();
    let mut doc_sum = (0.0, 0.0, 0.0);
    let mut snip_sum = (0.0, 0.0, 0.0);
    for gold_record in &gold.questions {
        let evaluated = match answers_by_id.get(gold_record.id.as_str()) {
            Some(answer) => QuestionEval {
                docs: prf_documents(&answer.documents, &gold_documents(gold_record)?)?,
                snippets: prf_snippets(&answer.snippets, &gold_record.snippets)?,
            },
            None => QuestionEval {
                docs: Prf::ZERO,
                snippets: Prf::ZERO,
            },
        };
        doc_sum.0 += evaluated.docs.precision;
        doc_sum.1 += evaluated.docs.recall;
        doc_sum.2 += evaluated.docs.f_measure;
        snip_sum.0 += evaluated.snippets.precision;
        snip_sum.1 += evaluated.snippets.recall;
        snip_sum.2 += evaluated.snippets.f_measure;
        per_question.insert(gold_record.id.clone(), evaluated);
    }
    let n = gold.questions.len() as f64;
    let means = QuestionEval {
        docs: Prf {
            precision: doc_sum.0 / n,
            recall: doc_sum.1 / n,
            f_measure: doc_sum.2 / n,
        },
        snippets: Prf {
            precision: snip_sum.0 / n,
            recall: snip_sum.1 / n,
            f_measure: snip_sum.2 / n,
        },
    };
    Ok(EvalReport {
        per_question,
        means,
        wall_time_seconds,
    })
}

/// Renders the comparison table: Docs/Snippets rows, mean P/R/F column
/// groups, one sub-column per variant (e.g. with and without the
/// classifier), and the evaluation wall time.
pub fn format_table(variants: &[(&str, &EvalReport)]) -> String {
    assert!(!variants.is_empty());
    let mut out = String::new();
    let width = 10usize;
    let label_width = 10usize;

    out.push_str(&format!("{:label_width$}", ""));
    for group in ["Mean Precision", "Mean Recall", "Mean FMeasure", "Time (sec)"] {
        out.push_str(&format!("{group:>w$}", w = width * variants.len().max(1) + 2));
    }
    out.push('\n');
    out.push_str(&format!("{:label_width$}", ""));
    for _ in 0..4 {
        out.push_str("  ");
        for (name, _) in variants {
            out.push_str(&format!("{name:>width$}"));
        }
    }
    out.push('\n');

    for row in ["Docs", "Snippets"] {
        out.push_str(&format!("{row:<label_width$}"));
        for metric in 0..4 {
            out.push_str("  ");
            for (_, report) in variants {
                let prf = if row == "Docs" {
                    report.means.docs
                } else {
                    report.means.snippets
                };
                let cell = match metric {
                    0 => format!("{:.3}", prf.precision),
                    1 => format!("{:.3}", prf.recall),
                    2 => format!("{:.3}", prf.f_measure),
                    _ => {
                        if row == "Docs" {
                            format!("{:.1}", report.wall_time_seconds)
                        } else {
                            String::new()
                        }
                    }
                };
                out.push_str(&format!("{cell:>width$}"));
            }
        }
        out.push('\n');
    }
    out
}
