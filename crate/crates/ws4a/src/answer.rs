//! Answer assembly: the top snippets by sentence similarity, the top
//! abstract concepts by accumulated similarity to the query (intersected
//! with the query's own concepts), MeSH-driven RDF triples ranked by
//! tf-idf, and the final capped answer record.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::annotate::AnnotationSet;
use crate::evaluate::{sentence_similarity, GradedAbstract};
use crate::gateway::{Gateway, GatewayError};
use crate::ontology::{is_mesh, OntologyGraph};
use crate::text::{char_slice, tokenize, ConceptAnnotation, Pmid, Question};

#[derive(Debug, Error)]
pub enum AnswerError {
    #[error("cap violation: {list} has {len} entries, cap is {cap}")]
    CapViolation {
        list: &'static str,
        len: usize,
        cap: usize,
    },
}

/// Section of a PubMed record a snippet points into.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Section {
    #[serde(rename = "title")]
    Title,
    #[serde(rename = "abstract")]
    Abstract,
}

/// A sentence-level span of one section, with char offsets that re-slice
/// to `text`.
#[derive(Debug, Clone, PartialEq)]
pub struct Snippet {
    pub pmid: Pmid,
    pub section: Section,
    pub begin: usize,
    pub end: usize,
    pub text: String,
    pub score: f64,
}

/// One RDF term: a URI or a literal.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RdfTerm {
    pub value: String,
    pub is_literal: bool,
}

/// An RDF statement with its ranking score.
#[derive(Debug, Clone, PartialEq)]
pub struct Triple {
    pub subject: String,
    pub predicate: String,
    pub object: RdfTerm,
    pub score: f64,
}

/// Per-question answer: all four lists capped (10 by default).
#[derive(Debug, Clone)]
pub struct AnswerSet {
    pub question_id: String,
    pub documents: Vec<String>,
    pub snippets: Vec<Snippet>,
    pub concepts: Vec<String>,
    pub triples: Vec<Triple>,
}

#[derive(Debug, Clone, Copy)]
pub struct AnswerCaps {
    pub documents: usize,
    pub snippets: usize,
    pub concepts: usize,
    pub triples: usize,
}

impl Default for AnswerCaps {
    fn default() -> Self {
        AnswerCaps {
            documents: 10,
            snippets: 10,
            concepts: 10,
            triples: 10,
        }
    }
}

/// Sentence spans (char offsets) split at `.`, `?` or `!` followed by a
/// space. The terminal punctuation stays inside the span; surrounding
/// spaces are trimmed; empty spans are dropped.
pub fn split_sentences(text: &str) -> Vec<(usize, usize)> {
    let chars: Vec<char> = text.chars().collect();
    let n = chars.len();
    let mut spans = Vec::new();
    let mut start = 0usize;
    let mut i = 0usize;
    let push = |s: usize, e: usize, spans: &mut Vec<(usize, usize)>| {
        let mut s = s;
        let mut e = e;
        while s < e && chars[s] == ' ' {
            s += 1;
        }
        while e > s && chars[e - 1] == ' ' {
            e -= 1;
        }
        if s < e {
            spans.push((s, e));
        }
    };
    while i < n {
        if matches!(chars[i], '.' | '?' | '!') && i + 1 < n && chars[i + 1] == ' ' {
            push(start, i + 1, &mut spans);
            start = i + 1;
        }
        i += 1;
    }
    push(start, n, &mut spans);
    spans
}

/// Scores every sentence of every approved abstract against the question
/// and keeps the best `cap`, ties broken by (pmid desc, title before
/// abstract, begin asc).
pub fn select_snippets(
    question: &Question,
    approved: &[GradedAbstract],
    graph: &OntologyGraph,
    cap: usize,
) -> Vec<Snippet> {
    let mut candidates: Vec<Snippet> = Vec::new();
    for graded in approved {
        let doc = &graded.doc;
        for (section, text) in [(Section::Title, &doc.title), (Section::Abstract, &doc.text)] {
            for (begin, end) in split_sentences(text) {
                let sentence = char_slice(text, begin, end);
                let score = sentence_similarity(&question.body, sentence, graph);
                candidates.push(Snippet {
                    pmid: doc.pmid.clone(),
                    section,
                    begin,
                    end,
                    text: sentence.to_string(),
                    score,
                });
            }
        }
    }
    candidates.sort_by(|a, b| {
        b.score
            .partial_cmp(&a.score)
            .unwrap_or(std::cmp::Ordering::Equal)
            .then_with(|| b.pmid.cmp(&a.pmid))
            .then_with(|| a.section.cmp(&b.section))
            .then_with(|| a.begin.cmp(&b.begin))
    });
    candidates.truncate(cap);
    candidates
}

/// Concept selection outcome: the ranked top list, the subset of it that
/// intersects the query's concepts, and the final output (the
/// intersection when non-empty, otherwise the full top list).
#[derive(Debug, Clone, Default)]
pub struct ConceptSelection {
    pub ranked: Vec<ConceptAnnotation>,
    pub intersection: Vec<ConceptAnnotation>,
    pub output: Vec<ConceptAnnotation>,
}

/// Ranks distinct abstract concepts by the sum over query concepts of
/// hierarchical similarity (ties by concept id), keeps the top `cap`, and
/// intersects with the query's own concept ids.
pub fn select_concepts(
    query: &AnnotationSet,
    abstract_annotations: &[AnnotationSet],
    graph: &OntologyGraph,
    cap: usize,
) -> ConceptSelection {
    let query_ids: BTreeSet<&str> = query.concept_ids();
    let mut representative: Vec<(String, ConceptAnnotation)> = Vec::new();
    let mut seen: HashSet<String> = HashSet::new();
    for set in abstract_annotations {
        for annotation in &set.annotations {
            if seen.insert(annotation.concept_id.clone()) {
                representative.push((annotation.concept_id.clone(), annotation.clone()));
            }
        }
    }
    let mut scored: Vec<(f64, ConceptAnnotation)> = representative
        .into_iter()
        .map(|(id, annotation)| {
            let total: f64 = query_ids
                .iter()
                .map(|q| graph.similarity_or_zero(&id, q))
                .sum();
            (total, annotation)
        })
        .collect();
    scored.sort_by(|(sa, a), (sb, b)| {
        sb.partial_cmp(sa)
            .unwrap_or(std::cmp::Ordering::Equal)
            .then_with(|| a.concept_id.cmp(&b.concept_id))
    });
    scored.truncate(cap);
    let ranked: Vec<ConceptAnnotation> = scored.into_iter().map(|(_, a)| a).collect();
    let intersection: Vec<ConceptAnnotation> = ranked
        .iter()
        .filter(|a| query_ids.contains(a.concept_id.as_str()))
        .cloned()
        .collect();
    let output = if intersection.is_empty() {
        ranked.clone()
    } else {
        intersection.clone()
    };
    ConceptSelection {
        ranked,
        intersection,
        output,
    }
}

/// Concept URIs for the answer record.
pub fn build_concepts(
    query: &AnnotationSet,
    abstract_annotations: &[AnnotationSet],
    graph: &OntologyGraph,
    cap: usize,
) -> Vec<String> {
    select_concepts(query, abstract_annotations, graph, cap)
        .output
        .into_iter()
        .map(|a| a.concept_uri)
        .collect()
}

/// Candidate triples for the MeSH concepts, ranked by tf-idf, top `cap`.
/// Gateway failures degrade to an empty list (the flag reports it);
/// replay misses degrade too but stay visible in the gateway miss log.
pub fn build_triples(
    concepts: &[ConceptAnnotation],
    gateway: &Gateway,
    candidate_limit: usize,
    cap: usize,
) -> (Vec<Triple>, bool) {
    let mesh_uris: Vec<String> = concepts
        .iter()
        .filter(|a| is_mesh(a))
        .map(|a| a.concept_uri.clone())
        .collect();
    if mesh_uris.is_empty() {
        return (Vec::new(), false);
    }
    match gateway.sparql_triples(&mesh_uris, candidate_limit) {
        Ok(candidates) => (tfidf_rank(candidates, cap), false),
        Err(e @ GatewayError::ReplayMiss { .. }) => {
            eprintln!("warning: triple retrieval missed fixtures: {e}");
            (Vec::new(), true)
        }
        Err(e) => {
            eprintln!("warning: triple retrieval failed: {e}");
            (Vec::new(), true)
        }
    }
}

fn stopwords() -> &'static HashSet<&'static str> {
    static WORDS: std::sync::OnceLock<HashSet<&'static str>> = std::sync::OnceLock::new();
    WORDS.get_or_init(|| {
        include_str!("../data/stopwords.txt")
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty())
            .collect()
    })
}

/// Local name of a URI: the fragment after `#`, else the last path
/// segment.
fn uri_local_name(uri: &str) -> &str {
    let tail = uri.rsplit('#').next().unwrap_or(uri);
    tail.rsplit('/').next().unwrap_or(tail)
}

/// Token bag of one triple: tokens of the subject and predicate local
/// names and of the object (local name for URIs, full text for
/// literals), minus stop words.
fn triple_tokens(triple: &Triple) -> Vec<String> {
    let object_text = if triple.object.is_literal {
        triple.object.value.clone()
    } else {
        uri_local_name(&triple.object.value).to_string()
    };
    let mut tokens = Vec::new();
    for part in [
        uri_local_name(&triple.subject),
        uri_local_name(&triple.predicate),
        &object_text,
    ] {
        tokens.extend(
            tokenize(part)
                .into_iter()
                .map(|t| t.surface)
                .filter(|t| !stopwords().contains(t.as_str())),
        );
    }
    tokens
}

/// tf-idf ranking over the candidate set itself: idf(t) =
/// ln((1+N)/(1+df(t))) + 1, score = sum over bag tokens of tf·idf. Sort
/// score descending, ties by (subject, predicate, object) ascending,
/// truncate to `cap`. Scores are written back into the returned triples.
pub fn tfidf_rank(candidates: Vec<Triple>, cap: usize) -> Vec<Triple> {
    let n = candidates.len();
    if n == 0 {
        return candidates;
    }
    let bags: Vec<Vec<String>> = candidates.iter().map(triple_tokens).collect();
    let mut df: HashMap<&str, usize> = HashMap::new();
    for bag in &bags {
        let distinct: HashSet<&str> = bag.iter().map(String::as_str).collect();
        for token in distinct {
            *df.entry(token).or_insert(0) += 1;
        }
    }
    let idf = |token: &str| -> f64 {
        let d = df.get(token).copied().unwrap_or(0);
        ((1.0 + n as f64) / (1.0 + d as f64)).ln() + 1.0
    };
    let mut scored: Vec<Triple> = candidates
        .into_iter()
        .zip(bags.iter())
        .map(|(mut triple, bag)| {
            // sorted accumulation keeps equal bags bit-identical
            let mut tf: BTreeMap<&str, usize> = BTreeMap::new();
            for token in bag {
                *tf.entry(token).or_insert(0) += 1;
            }
            triple.score = tf
                .iter()
                .map(|(token, count)| *count as f64 * idf(token))
                .sum();
            triple
        })
        .collect();
    scored.sort_by(|a, b| {
        b.score
            .partial_cmp(&a.score)
            .unwrap_or(std::cmp::Ordering::Equal)
            .then_with(|| a.subject.cmp(&b.subject))
            .then_with(|| a.predicate.cmp(&b.predicate))
            .then_with(|| a.object.value.cmp(&b.object.value))
    });
    scored.truncate(cap);
    scored
}

/// Builds the capped answer record. Documents are the approved abstracts
/// ordered by grade (ties by pmid descending), as PubMed URLs.
pub fn emit_answer(
    question: &Question,
    approved: &[GradedAbstract],
    snippets: Vec<Snippet>,
    concepts: Vec<String>,
    triples: Vec<Triple>,
    caps: &AnswerCaps,
) -> Result<AnswerSet, AnswerError> {
    let mut ranked: Vec<&GradedAbstract> = approved.iter().collect();
    ranked.sort_by(|a, b| {
        b.grade
            .partial_cmp(&a.grade)
            .unwrap_or(std::cmp::Ordering::Equal)
            .then_with(|| b.doc.pmid.cmp(&a.doc.pmid))
    });
    let documents: Vec<String> = ranked
        .iter()
        .take(caps.documents)
        .map(|g| g.doc.pmid.pubmed_url())
        .collect();
    let answer = AnswerSet {
        question_id: question.id.clone(),
        documents,
        snippets,
        concepts,
        triples,
    };
    for (name, len, cap) in [
        ("documents", answer.documents.len(), caps.documents),
        ("snippets", answer.snippets.len(), caps.snippets),
        ("concepts", answer.concepts.len(), caps.concepts),
        ("triples", answer.triples.len(), caps.triples),
    ] {
        if len > cap {
            return Err(AnswerError::CapViolation {
                list: name,
                len,
                cap,
            });
        }
    }
    Ok(answer)
}

// ---------------------------------------------------------------------
// Answer file wire format
// ---------------------------------------------------------------------

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct AnswerFile {
    pub questions: Vec<AnswerRecord>,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct AnswerRecord {
    pub id: String,
    pub documents: Vec<String>,
    pub snippets: Vec<SnippetRecord>,
    pub concepts: Vec<String>,
    pub triples: Vec<TripleRecord>,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct SnippetRecord {
    pub document: String,
    #[serde(rename = "beginSection")]
    pub begin_section: Section,
    #[serde(rename = "endSection")]
    pub end_section: Section,
    #[serde(rename = "offsetInBeginSection")]
    pub offset_in_begin_section: usize,
    #[serde(rename = "offsetInEndSection")]
    pub offset_in_end_section: usize,
    pub text: String,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct TripleRecord {
    pub s: String,
    pub p: String,
    pub o: String,
}

impl From<&AnswerSet> for AnswerRecord {
    fn from(answer: &AnswerSet) -> Self {
        AnswerRecord {
            id: answer.question_id.clone(),
            documents: answer.documents.clone(),
            snippets: answer
                .snippets
                .iter()
                .map(|s| SnippetRecord {
                    document: s.pmid.pubmed_url(),
                    begin_section: s.section,
                    end_section: s.section,
                    offset_in_begin_section: s.begin,
                    offset_in_end_section: s.end,
                    text: s.text.clone(),
                })
                .collect(),
            concepts: answer.concepts.clone(),
            triples: answer
                .triples
                .iter()
                .map(|t| TripleRecord {
                    s: t.subject.clone(),
                    p: t.predicate.clone(),
                    o: t.object.value.clone(),
                })
                .collect(),
        }
    }
}

impl AnswerFile {
    pub fn to_json(&self) -> String {
        let mut out = serde_json::to_string_pretty(self).expect("answer serialization");
        out.push('\n');
        out
    }

    pub fn from_json(json: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(json)
    }
}
