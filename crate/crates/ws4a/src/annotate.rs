//! Text annotation: merges remote annotator output, local ChEBI
//! dictionary matches, and the protein-tagger-to-UniProt chain into one
//! deduplicated annotation set per question or abstract.

use std::collections::{BTreeMap, BTreeSet, HashSet};

use crate::gateway::{AnnotatorParams, Gateway, GatewayError};
use crate::ontology::OntologyGraph;
use crate::text::{
    char_len, concept_uri, AbstractDoc, ConceptAnnotation, ConceptSource, Question,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AnnotationTarget {
    Question,
    Abstract,
}

/// Annotations for one text, ordered by (span_begin, source, concept_id)
/// and deduplicated on (concept_id, span). `degraded` marks sets where a
/// source failed and the pipeline carried on with the rest.
#[derive(Debug, Clone)]
pub struct AnnotationSet {
    pub target: AnnotationTarget,
    pub target_id: String,
    pub annotations: Vec<ConceptAnnotation>,
    pub by_source: BTreeMap<ConceptSource, Vec<ConceptAnnotation>>,
    pub degraded: bool,
}

impl AnnotationSet {
    pub fn new(
        target: AnnotationTarget,
        target_id: impl Into<String>,
        mut annotations: Vec<ConceptAnnotation>,
        degraded: bool,
    ) -> Self {
        annotations.sort_by(|a, b| {
            (a.span_begin, a.source, &a.concept_id, a.span_end).cmp(&(
                b.span_begin,
                b.source,
                &b.concept_id,
                b.span_end,
            ))
        });
        let mut seen: HashSet<(String, usize, usize)> = HashSet::new();
        annotations.retain(|a| seen.insert((a.concept_id.clone(), a.span_begin, a.span_end)));
        let mut by_source: BTreeMap<ConceptSource, Vec<ConceptAnnotation>> = BTreeMap::new();
        for a in &annotations {
            by_source.entry(a.source).or_default().push(a.clone());
        }
        AnnotationSet {
            target,
            target_id: target_id.into(),
            annotations,
            by_source,
            degraded,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.annotations.is_empty()
    }

    /// Distinct concept ids, ordered.
    pub fn concept_ids(&self) -> BTreeSet<&str> {
        self.annotations
            .iter()
            .map(|a| a.concept_id.as_str())
            .collect()
    }
}

struct DictEntry {
    chars: Vec<char>, // lowercased label
    concept_id: String,
    uri: String,
    label: String,
    source: ConceptSource,
}

/// Label dictionary for longest-match scanning. Matching is
/// case-insensitive (single-char lowercase fold) and anchored at word
/// boundaries on both sides; overlapping shorter matches lose.
pub struct Dictionary {
    entries: Vec<DictEntry>,
}

fn fold(c: char) -> char {
    c.to_lowercase().next().unwrap_or(c)
}

impl Dictionary {
    pub fn from_graph(graph: &OntologyGraph) -> Self {
        Self::from_graph_filtered(graph, None)
    }

    pub fn from_graph_source(graph: &OntologyGraph, source: ConceptSource) -> Self {
        Self::from_graph_filtered(graph, Some(source))
    }

    fn from_graph_filtered(graph: &OntologyGraph, source: Option<ConceptSource>) -> Self {
        let mut entries: Vec<DictEntry> = graph
            .iter_nodes()
            .filter(|(_, info)| source.is_none_or(|s| info.source == s))
            .filter(|(_, info)| !info.label.trim().is_empty())
            .map(|(id, info)| DictEntry {
                chars: info.label.chars().map(fold).collect(),
                concept_id: id.clone(),
                uri: info.uri.clone(),
                label: info.label.clone(),
                source: info.source,
            })
            .collect();
        entries.sort_by(|a, b| a.concept_id.cmp(&b.concept_id));
        Dictionary { entries }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Longest-match-wins scan. Selection is leftmost-longest: going left
    /// to right, the longest match starting at or after the previous
    /// selection's end wins its starting position; equally long matches
    /// for different concepts at the same span are all kept.
    pub fn scan(&self, text: &str) -> Vec<ConceptAnnotation> {
        let chars: Vec<char> = text.chars().collect();
        let folded: Vec<char> = chars.iter().map(|&c| fold(c)).collect();
        let n = chars.len();
        let is_word = |i: usize| i < n && chars[i].is_alphanumeric();

        let mut out = Vec::new();
        let mut cursor = 0usize;
        let mut start = 0usize;
        while start < n {
            // word-boundary start: a word char not preceded by one
            if start < cursor || !is_word(start) || (start > 0 && is_word(start - 1)) {
                start += 1;
                continue;
            }
            let mut best_len: Option<usize> = None;
            for entry in &self.entries {
                let len = entry.chars.len();
                if len == 0 || start + len > n {
                    continue;
                }
                if folded[start..start + len] != entry.chars[..] {
                    continue;
                }
                // word-boundary end
                if is_word(start + len) {
                    continue;
                }
                match best_len {
                    Some(best) if len <= best => {}
                    _ => best_len = Some(len),
                }
            }
            if let Some(len) = best_len {
                for entry in &self.entries {
                    if entry.chars.len() == len
                        && folded[start..start + len] == entry.chars[..]
                        && !is_word(start + len)
                    {
                        out.push(ConceptAnnotation {
                            concept_id: entry.concept_id.clone(),
                            concept_uri: entry.uri.clone(),
                            label: entry.label.clone(),
                            source: entry.source,
                            span_begin: start,
                            span_end: start + len,
                            score: 1.0,
                        });
                    }
                }
                cursor = start + len;
                start = cursor;
            } else {
                start += 1;
            }
        }
        out
    }
}

/// Case-insensitive longest-match scan of all concept labels in `graph`
/// against `text`.
pub fn local_dictionary_scan(text: &str, graph: &OntologyGraph) -> Vec<ConceptAnnotation> {
    Dictionary::from_graph(graph).scan(text)
}

/// Produces annotation sets for questions and abstracts. The same
/// procedure runs for both; only the input text differs.
pub struct AnnotationEngine<'a> {
    gateway: &'a Gateway,
    params: AnnotatorParams,
    chebi_dictionary: Dictionary,
    whatizit_vocabulary: String,
    whatizit_id_tag: String,
}

impl<'a> AnnotationEngine<'a> {
    pub fn new(
        gateway: &'a Gateway,
        graph: &OntologyGraph,
        params: AnnotatorParams,
        whatizit_vocabulary: impl Into<String>,
        whatizit_id_tag: impl Into<String>,
    ) -> Self {
        AnnotationEngine {
            gateway,
            params,
            chebi_dictionary: Dictionary::from_graph_source(graph, ConceptSource::Chebi),
            whatizit_vocabulary: whatizit_vocabulary.into(),
            whatizit_id_tag: whatizit_id_tag.into(),
        }
    }

    pub fn annotate_question(&self, question: &Question) -> Result<AnnotationSet, GatewayError> {
        self.annotate_text(&question.body, AnnotationTarget::Question, &question.id)
    }

    pub fn annotate_abstract(&self, doc: &AbstractDoc) -> Result<AnnotationSet, GatewayError> {
        self.annotate_text(
            &doc.combined_text(),
            AnnotationTarget::Abstract,
            doc.pmid.as_str(),
        )
    }

    /// Union of remote annotator hits, local ChEBI matches, and
    /// tagger-derived UniProt annotations. A failing source degrades the
    /// set instead of aborting, except replay misses, which indicate an
    /// incomplete fixture store and must surface.
    fn annotate_text(
        &self,
        text: &str,
        target: AnnotationTarget,
        target_id: &str,
    ) -> Result<AnnotationSet, GatewayError> {
        let mut annotations = Vec::new();
        let mut degraded = false;

        match self.gateway.annotate_remote(text, &self.params) {
            Ok(remote) => annotations.extend(remote),
            Err(e) if e.is_replay_miss() => return Err(e),
            Err(e) => {
                eprintln!("warning: annotator failed for {target_id}: {e}");
                degraded = true;
            }
        }

        annotations.extend(self.chebi_dictionary.scan(text));

        match self.gateway.whatizit_accessions(
            text,
            &self.whatizit_vocabulary,
            &self.whatizit_id_tag,
        ) {
            Ok(accessions) => {
                for accession in accessions {
                    let (begin, end) = find_char_span(text, &accession)
                        .unwrap_or((0, char_len(text)));
                    annotations.push(ConceptAnnotation {
                        concept_id: accession.clone(),
                        concept_uri: concept_uri(ConceptSource::Uniprot, &accession),
                        label: accession,
                        source: ConceptSource::Uniprot,
                        span_begin: begin,
                        span_end: end,
                        score: 1.0,
                    });
                }
            }
            Err(e) if e.is_replay_miss() => return Err(e),
            Err(e) => {
                eprintln!("warning: protein tagger failed for {target_id}: {e}");
                degraded = true;
            }
        }

        Ok(AnnotationSet::new(target, target_id, annotations, degraded))
    }
}

/// First case-insensitive occurrence of `needle` in `haystack`, as char
/// offsets.
fn find_char_span(haystack: &str, needle: &str) -> Option<(usize, usize)> {
    if needle.is_empty() {
        return None;
    }
    let hay: Vec<char> = haystack.chars().map(fold).collect();
    let pat: Vec<char> = needle.chars().map(fold).collect();
    if pat.len() > hay.len() {
        return None;
    }
    (0..=hay.len() - pat.len())
        .find(|&i| hay[i..i + pat.len()] == pat[..])
        .map(|i| (i, i + pat.len()))
}
