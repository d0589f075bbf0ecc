//! Core domain types shared by every pipeline stage, plus the text
//! primitives (tokenization, n-grams, character-offset helpers) that the
//! feature extraction and ranking code builds on.
//!
//! All span offsets in this crate are Unicode scalar-value positions
//! (0-based, end-exclusive), never byte offsets.

use std::collections::BTreeMap;
use std::fmt;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum DomainError {
    #[error("invalid question {id:?}: {reason}")]
    InvalidQuestion { id: String, reason: String },
    #[error("invalid pmid {0:?}: must be a non-empty decimal digit string")]
    InvalidPmid(String),
    #[error("invalid annotation span [{begin}, {end}) for text of length {len}")]
    InvalidSpan { begin: usize, end: usize, len: usize },
    #[error("malformed question file: {0}")]
    QuestionFile(String),
}

/// Expected answer type of a question. Carried through parsing and output
/// but not consulted by the retrieval pipeline itself.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum QuestionType {
    #[serde(rename = "yesno")]
    YesNo,
    #[serde(rename = "factoid")]
    Factoid,
    #[serde(rename = "list")]
    List,
    #[serde(rename = "summary")]
    Summary,
}

/// A natural-language query, the unit of work for the whole pipeline.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Question {
    pub id: String,
    pub body: String,
    pub qtype: QuestionType,
}

impl Question {
    pub fn new(id: impl Into<String>, body: impl Into<String>, qtype: QuestionType) -> Result<Self, DomainError> {
        let id = id.into();
        let body = body.into();
        if id.is_empty() {
            return Err(DomainError::InvalidQuestion {
                id,
                reason: "empty id".into(),
            });
        }
        if body.trim().is_empty() {
            return Err(DomainError::InvalidQuestion {
                id,
                reason: "empty body".into(),
            });
        }
        Ok(Question { id, body, qtype })
    }
}

/// The ontologies and terminologies concepts can come from. `Chebi` is
/// loaded from a local file rather than queried remotely.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum ConceptSource {
    #[serde(rename = "MESH")]
    Mesh,
    #[serde(rename = "GO")]
    Go,
    #[serde(rename = "UNIPROT")]
    Uniprot,
    #[serde(rename = "JOCHEM")]
    Jochem,
    #[serde(rename = "DO")]
    Do,
    #[serde(rename = "CHEBI")]
    Chebi,
}

impl ConceptSource {
    pub const ALL: [ConceptSource; 6] = [
        ConceptSource::Mesh,
        ConceptSource::Go,
        ConceptSource::Uniprot,
        ConceptSource::Jochem,
        ConceptSource::Do,
        ConceptSource::Chebi,
    ];

    /// Acronym used in service URLs and config files.
    pub fn acronym(self) -> &'static str {
        match self {
            ConceptSource::Mesh => "MESH",
            ConceptSource::Go => "GO",
            ConceptSource::Uniprot => "UNIPROT",
            ConceptSource::Jochem => "JOCHEM",
            ConceptSource::Do => "DO",
            ConceptSource::Chebi => "CHEBI",
        }
    }

    /// Prefix used in concept ids, e.g. `MESH:D006331`, `DOID:114`.
    /// UniProt concept ids are bare accessions with no prefix.
    pub fn id_prefix(self) -> Option<&'static str> {
        match self {
            ConceptSource::Mesh => Some("MESH"),
            ConceptSource::Go => Some("GO"),
            ConceptSource::Uniprot => None,
            ConceptSource::Jochem => Some("JOCHEM"),
            ConceptSource::Do => Some("DOID"),
            ConceptSource::Chebi => Some("CHEBI"),
        }
    }

    pub fn from_acronym(s: &str) -> Option<ConceptSource> {
        match s {
            "MESH" => Some(ConceptSource::Mesh),
            "GO" => Some(ConceptSource::Go),
            "UNIPROT" => Some(ConceptSource::Uniprot),
            "JOCHEM" => Some(ConceptSource::Jochem),
            "DO" | "DOID" => Some(ConceptSource::Do),
            "CHEBI" => Some(ConceptSource::Chebi),
            _ => None,
        }
    }

    /// Sources the remote annotator is asked for by default. ChEBI is
    /// matched locally and UniProt ids arrive through the protein tagger.
    pub fn remote_annotator_defaults() -> Vec<ConceptSource> {
        vec![
            ConceptSource::Mesh,
            ConceptSource::Go,
            ConceptSource::Jochem,
            ConceptSource::Do,
        ]
    }
}

impl fmt::Display for ConceptSource {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.acronym())
    }
}

/// Infer the source of a concept id from its prefix, e.g. `GO:0008150`.
pub fn source_from_concept_id(id: &str) -> Option<ConceptSource> {
    let prefix = id.split_once(':')?.0;
    ConceptSource::from_acronym(prefix)
}

/// Canonical URI for a concept id, per source.
pub fn concept_uri(source: ConceptSource, concept_id: &str) -> String {
    let local = concept_id
        .split_once(':')
        .map(|(_, l)| l)
        .unwrap_or(concept_id);
    match source {
        ConceptSource::Mesh => format!("http://purl.bioontology.org/ontology/MESH/{local}"),
        ConceptSource::Go => format!("http://purl.obolibrary.org/obo/GO_{local}"),
        ConceptSource::Uniprot => format!("http://www.uniprot.org/uniprot/{local}"),
        ConceptSource::Jochem => format!("http://purl.bioontology.org/ontology/JOCHEM/{local}"),
        ConceptSource::Do => format!("http://purl.obolibrary.org/obo/DOID_{local}"),
        ConceptSource::Chebi => format!("http://purl.obolibrary.org/obo/CHEBI_{local}"),
    }
}

/// Canonical concept id for a concept URI, e.g.
/// `.../obo/CHEBI_15365` -> `CHEBI:15365`, `.../MESH/D006331` -> `MESH:D006331`.
pub fn concept_id_from_uri(source: ConceptSource, uri: &str) -> String {
    let segment = uri.rsplit('/').next().unwrap_or(uri);
    if let Some((prefix, local)) = segment.split_once('_') {
        if ConceptSource::from_acronym(prefix).is_some() {
            return format!("{prefix}:{local}");
        }
    }
    match source.id_prefix() {
        Some(prefix) if !segment.starts_with(&format!("{prefix}:")) => {
            format!("{prefix}:{segment}")
        }
        _ => segment.to_string(),
    }
}

/// A text span mapped to an ontology concept.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConceptAnnotation {
    pub concept_id: String,
    pub concept_uri: String,
    pub label: String,
    pub source: ConceptSource,
    pub span_begin: usize,
    pub span_end: usize,
    pub score: f64,
}

impl ConceptAnnotation {
    /// Checks the span against the annotated text: offsets are char
    /// positions, 0-based, end-exclusive, and must cover a non-empty slice.
    pub fn validate_span(&self, text: &str) -> Result<(), DomainError> {
        let len = char_len(text);
        if self.span_begin >= self.span_end || self.span_end > len {
            return Err(DomainError::InvalidSpan {
                begin: self.span_begin,
                end: self.span_end,
                len,
            });
        }
        Ok(())
    }
}

/// PubMed identifier: a non-empty decimal digit string. Ordering is
/// numeric (leading zeros ignored), so sorts are stable across id widths.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Pmid(String);

impl Pmid {
    pub fn new(s: impl Into<String>) -> Result<Self, DomainError> {
        let s = s.into();
        if s.is_empty() || !s.bytes().all(|b| b.is_ascii_digit()) {
            return Err(DomainError::InvalidPmid(s));
        }
        Ok(Pmid(s))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }

    /// Canonical article URL for the answer file.
    pub fn pubmed_url(&self) -> String {
        format!("http://www.ncbi.nlm.nih.gov/pubmed/{}", self.0)
    }

    fn digits(&self) -> &str {
        let trimmed = self.0.trim_start_matches('0');
        if trimmed.is_empty() {
            "0"
        } else {
            trimmed
        }
    }
}

impl Ord for Pmid {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        let (a, b) = (self.digits(), other.digits());
        a.len().cmp(&b.len()).then_with(|| a.cmp(b)).then_with(|| self.0.cmp(&other.0))
    }
}

impl PartialOrd for Pmid {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for Pmid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// A retrieved PubMed record. `pub_date` must not exceed the configured
/// corpus cutoff; the retriever enforces that when building pools.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AbstractDoc {
    pub pmid: Pmid,
    pub title: String,
    pub text: String,
    pub pub_date: NaiveDate,
}

impl AbstractDoc {
    /// Title and abstract body as one annotation target.
    pub fn combined_text(&self) -> String {
        format!("{} {}", self.title, self.text)
    }
}

/// One lowercased word with its index in the token sequence.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Token {
    pub surface: String,
    pub position: usize,
}

/// Lowercases and splits on runs of non-alphanumeric characters, dropping
/// empty pieces. Characters whose lowercase form is not alphanumeric are
/// dropped from the token so the output re-tokenizes to itself.
pub fn tokenize(text: &str) -> Vec<Token> {
    let mut out = Vec::new();
    for piece in text.split(|c: char| !c.is_alphanumeric()) {
        if piece.is_empty() {
            continue;
        }
        let surface: String = piece
            .to_lowercase()
            .chars()
            .filter(|c| c.is_alphanumeric())
            .collect();
        if surface.is_empty() {
            continue;
        }
        let position = out.len();
        out.push(Token { surface, position });
    }
    out
}

/// All contiguous n-grams for 1 <= n <= n_max, space-joined, in order of
/// ascending n and then position. Duplicates are kept (multiset).
pub fn ngrams(tokens: &[Token], n_max: usize) -> Vec<String> {
    assert!(n_max >= 1, "n_max must be at least 1");
    let mut out = Vec::new();
    for n in 1..=n_max {
        if tokens.len() < n {
            break;
        }
        for window in tokens.windows(n) {
            let gram = window
                .iter()
                .map(|t| t.surface.as_str())
                .collect::<Vec<_>>()
                .join(" ");
            out.push(gram);
        }
    }
    out
}

/// Number of Unicode scalar values in `s`.
pub fn char_len(s: &str) -> usize {
    s.chars().count()
}

/// Slice by char positions [begin, end). Positions past the end clamp to
/// the end of the string.
pub fn char_slice(s: &str, begin: usize, end: usize) -> &str {
    assert!(begin <= end, "char_slice: begin > end");
    &s[byte_of_char_pos(s, begin)..byte_of_char_pos(s, end)]
}

fn byte_of_char_pos(s: &str, pos: usize) -> usize {
    if pos == 0 {
        return 0;
    }
    s.char_indices()
        .nth(pos)
        .map(|(i, _)| i)
        .unwrap_or(s.len())
}

#[derive(Debug, Deserialize)]
struct QuestionFileJson {
    questions: Vec<QuestionJson>,
}

#[derive(Debug, Deserialize)]
struct QuestionJson {
    id: String,
    body: String,
    #[serde(rename = "type")]
    qtype: QuestionType,
}

/// Parses the question input file `{"questions":[{"id","body","type"}]}`.
pub fn parse_questions(json: &str) -> Result<Vec<Question>, DomainError> {
    let file: QuestionFileJson =
        serde_json::from_str(json).map_err(|e| DomainError::QuestionFile(e.to_string()))?;
    file.questions
        .into_iter()
        .map(|q| Question::new(q.id, q.body, q.qtype))
        .collect()
}

/// Groups items into a map keyed by a projection, preserving order inside
/// each group.
pub fn group_by_key<T, K: Ord, F: Fn(&T) -> K>(items: &[T], key: F) -> BTreeMap<K, Vec<T>>
where
    T: Clone,
{
    let mut map: BTreeMap<K, Vec<T>> = BTreeMap::new();
    for item in items {
        map.entry(key(item)).or_default().push(item.clone());
    }
    map
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn tokenize_empty() {
        assert!(tokenize("").is_empty());
    }

    #[test]
    fn tokenize_hyphenated() {
        let toks: Vec<_> = tokenize("Oxygen-binding proteins")
            .into_iter()
            .map(|t| t.surface)
            .collect();
        assert_eq!(toks, vec!["oxygen", "binding", "proteins"]);
    }

    #[test]
    fn tokenize_question_matches_reference_split() {
        // reference oracle: regex-like split on non-alphanumerics, lowercased
        let text = "Is Rheumatoid Arthritis more common in men?";
        let expected: Vec<String> = text
            .split(|c: char| !c.is_alphanumeric())
            .filter(|p| !p.is_empty())
            .map(|p| p.to_lowercase())
            .collect();
        let got: Vec<_> = tokenize(text).into_iter().map(|t| t.surface).collect();
        assert_eq!(got, expected);
        assert_eq!(
            got,
            vec!["is", "rheumatoid", "arthritis", "more", "common", "in", "men"]
        );
    }

    #[test]
    fn ngram_enumeration() {
        let toks = tokenize("a b");
        let grams = ngrams(&toks, 2);
        assert_eq!(grams, vec!["a", "b", "a b"]);

        let toks = tokenize("a");
        assert_eq!(ngrams(&toks, 3), vec!["a"]);

        let toks = tokenize("a b c");
        assert_eq!(ngrams(&toks, 2), vec!["a", "b", "c", "a b", "b c"]);
    }

    #[test]
    fn ngrams_match_bruteforce_enumeration() {
        let toks = tokenize("one two three four five");
        let got = ngrams(&toks, 3);
        // oracle: enumerate all (start, n) pairs directly
        let words: Vec<&str> = vec!["one", "two", "three", "four", "five"];
        let mut expected = Vec::new();
        for n in 1..=3usize {
            for start in 0..=(words.len() - n) {
                expected.push(words[start..start + n].join(" "));
            }
        }
        expected.sort();
        let mut got_sorted = got.clone();
        got_sorted.sort();
        assert_eq!(got_sorted, expected);
    }

    #[test]
    fn pmid_validation_and_order() {
        assert!(Pmid::new("23687640").is_ok());
        assert!(Pmid::new("").is_err());
        assert!(Pmid::new("12a4").is_err());
        let a = Pmid::new("99").unwrap();
        let b = Pmid::new("100").unwrap();
        assert!(a < b);
        assert_eq!(
            Pmid::new("23687640").unwrap().pubmed_url(),
            "http://www.ncbi.nlm.nih.gov/pubmed/23687640"
        );
    }

    #[test]
    fn question_validation() {
        assert!(Question::new("", "body", QuestionType::YesNo).is_err());
        assert!(Question::new("q1", "   ", QuestionType::YesNo).is_err());
        assert!(Question::new("q1", "Is water wet?", QuestionType::YesNo).is_ok());
    }

    #[test]
    fn question_file_round_trip() {
        let json = r#"{"questions":[{"id":"q1","body":"Is water wet?","type":"yesno"}]}"#;
        let qs = parse_questions(json).unwrap();
        assert_eq!(qs.len(), 1);
        assert_eq!(qs[0].id, "q1");
        assert_eq!(qs[0].qtype, QuestionType::YesNo);
        assert!(parse_questions(r#"{"questions":[{"id":"q","body":"x","type":"bogus"}]}"#).is_err());
    }

    #[test]
    fn concept_uri_and_id_round_trip() {
        assert_eq!(
            concept_uri(ConceptSource::Chebi, "CHEBI:15365"),
            "http://purl.obolibrary.org/obo/CHEBI_15365"
        );
        assert_eq!(
            concept_id_from_uri(ConceptSource::Chebi, "http://purl.obolibrary.org/obo/CHEBI_15365"),
            "CHEBI:15365"
        );
        assert_eq!(
            concept_uri(ConceptSource::Mesh, "MESH:D006331"),
            "http://purl.bioontology.org/ontology/MESH/D006331"
        );
        assert_eq!(
            concept_id_from_uri(
                ConceptSource::Mesh,
                "http://purl.bioontology.org/ontology/MESH/D006331"
            ),
            "MESH:D006331"
        );
        assert_eq!(
            concept_id_from_uri(ConceptSource::Uniprot, "http://www.uniprot.org/uniprot/P12345"),
            "P12345"
        );
    }

    #[test]
    fn char_slice_handles_multibyte() {
        let s = "αβγ def";
        assert_eq!(char_len(s), 7);
        assert_eq!(char_slice(s, 0, 3), "αβγ");
        assert_eq!(char_slice(s, 4, 7), "def");
    }

    proptest! {
        #[test]
        fn tokenize_idempotent_on_joined_output(text in ".{0,120}") {
            let once: Vec<String> = tokenize(&text).into_iter().map(|t| t.surface).collect();
            let joined = once.join(" ");
            let twice: Vec<String> = tokenize(&joined).into_iter().map(|t| t.surface).collect();
            prop_assert_eq!(once, twice);
        }

        #[test]
        fn ngram_counts(text in "[a-z ]{0,60}") {
            let toks = tokenize(&text);
            let uni = ngrams(&toks, 1);
            prop_assert_eq!(uni.len(), toks.len());
            if !toks.is_empty() {
                let bi = ngrams(&toks, 2);
                prop_assert_eq!(bi.len(), 2 * toks.len() - 1);
            }
        }

        #[test]
        fn char_slice_round_trips(s in ".{1,40}", a in 0usize..40, b in 0usize..40) {
            let len = char_len(&s);
            let (x, y) = (a % (len + 1), b % (len + 1));
            let (lo, hi) = (x.min(y), x.max(y));
            let slice = char_slice(&s, lo, hi);
            prop_assert_eq!(char_len(slice), hi - lo);
        }
    }
}
