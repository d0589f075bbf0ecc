//! Request URL construction for every external service. These strings are
//! golden-tested byte-for-byte, so escaping is done here by hand instead
//! of through a generic URL library: query strings use `+` for spaces and
//! uppercase percent escapes, path segments use `%20`.

use std::fmt;
use std::sync::OnceLock;

use chrono::NaiveDate;
use regex::Regex;

use crate::gateway::{AnnotatorParams, GatewayError};
use crate::text::Pmid;

/// Date parameter for eutils queries: either a bare year or a full
/// `YYYY/MM/DD` date.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DateParam {
    Year(i32),
    Day(NaiveDate),
}

impl DateParam {
    /// Latest calendar day the parameter can denote, for cutoff checks.
    pub fn latest(&self) -> NaiveDate {
        match self {
            DateParam::Year(y) => NaiveDate::from_ymd_opt(*y, 12, 31).expect("valid year"),
            DateParam::Day(d) => *d,
        }
    }
}

impl fmt::Display for DateParam {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DateParam::Year(y) => write!(f, "{y}"),
            DateParam::Day(d) => write!(f, "{}", d.format("%Y/%m/%d")),
        }
    }
}

fn is_unreserved(b: u8) -> bool {
    b.is_ascii_alphanumeric() || matches!(b, b'-' | b'.' | b'_' | b'~')
}

/// Escapes a query-string value: space becomes `+`, unreserved bytes pass
/// through, everything else is `%XX` with uppercase hex.
pub fn query_escape(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for b in s.bytes() {
        if b == b' ' {
            out.push('+');
        } else if is_unreserved(b) {
            out.push(b as char);
        } else {
            out.push_str(&format!("%{b:02X}"));
        }
    }
    out
}

/// Escapes a path segment: like `query_escape` but space becomes `%20`.
pub fn path_escape(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for b in s.bytes() {
        if is_unreserved(b) {
            out.push(b as char);
        } else {
            out.push_str(&format!("%{b:02X}"));
        }
    }
    out
}

static ACCESSION_RE: OnceLock<Regex> = OnceLock::new();

/// UniProt accession check (canonical 6- and 10-character forms).
pub fn is_uniprot_accession(s: &str) -> bool {
    let re = ACCESSION_RE.get_or_init(|| {
        Regex::new(r"^([OPQ][0-9][A-Z0-9]{3}[0-9]|[A-NR-Z][0-9]([A-Z][A-Z0-9]{2}[0-9]){1,2})$")
            .expect("static regex")
    });
    re.is_match(s)
}

/// Service base URLs plus the corpus cutoff date. The defaults point at
/// the public hosts; tests only ever pin path and query structure.
#[derive(Debug, Clone)]
pub struct ServiceEndpoints {
    pub annotator_base: String,
    pub eutils_base: String,
    pub pubchem_base: String,
    pub uniprot_base: String,
    pub whatizit_base: String,
    pub sparql_base: String,
    pub cutoff: NaiveDate,
}

impl Default for ServiceEndpoints {
    fn default() -> Self {
        ServiceEndpoints {
            annotator_base: "http://data.bioontology.org/annotator".into(),
            eutils_base: "http://eutils.ncbi.nlm.nih.gov/entrez/eutils".into(),
            pubchem_base: "https://pubchem.ncbi.nlm.nih.gov/rest/pug".into(),
            uniprot_base: "http://www.uniprot.org/uniprot".into(),
            whatizit_base: "http://www.ebi.ac.uk/webservices/whatizit/rest".into(),
            sparql_base: "http://linkedlifedata.com/sparql".into(),
            cutoff: default_cutoff(),
        }
    }
}

pub fn default_cutoff() -> NaiveDate {
    NaiveDate::from_ymd_opt(2015, 11, 19).expect("static date")
}

impl ServiceEndpoints {
    /// Compound-name lookup returning PubMed cross-references as JSON.
    pub fn pubchem_url(&self, word: &str) -> String {
        format!(
            "{}/compound/name/{}/xrefs/PubMedID/JSON",
            self.pubchem_base,
            path_escape(word)
        )
    }

    /// Protein record in XML for one accession.
    pub fn uniprot_url(&self, accession: &str) -> Result<String, GatewayError> {
        if !is_uniprot_accession(accession) {
            return Err(GatewayError::BadAccession {
                accession: accession.to_string(),
            });
        }
        Ok(format!("{}/{}.xml", self.uniprot_base, accession))
    }

    /// PubMed id search. Parameter order is fixed: db, mindate (when
    /// present), maxdate, term.
    pub fn esearch_url(
        &self,
        term: &str,
        mindate: Option<DateParam>,
        maxdate: DateParam,
    ) -> Result<String, GatewayError> {
        if maxdate.latest() > self.cutoff {
            return Err(GatewayError::CutoffViolation {
                maxdate: maxdate.latest(),
                cutoff: self.cutoff,
            });
        }
        let mut url = format!("{}/esearch.fcgi?db=pubmed", self.eutils_base);
        if let Some(min) = mindate {
            url.push_str(&format!("&mindate={min}"));
        }
        url.push_str(&format!("&maxdate={maxdate}&term={}", query_escape(term)));
        Ok(url)
    }

    /// Abstract fetch for a comma-joined id list, XML output.
    pub fn efetch_url(&self, pmids: &[Pmid]) -> String {
        let ids: Vec<&str> = pmids.iter().map(Pmid::as_str).collect();
        format!(
            "{}/efetch.fcgi?db=pubmed&retmode=xml&id={}",
            self.eutils_base,
            ids.join(",")
        )
    }

    /// Concept annotator call. The four filter flags are always spelled
    /// out so recorded requests are self-describing.
    pub fn annotator_url(&self, text: &str, params: &AnnotatorParams) -> String {
        let ontologies: Vec<&str> = params.ontologies.iter().map(|s| s.acronym()).collect();
        format!(
            "{}?text={}&ontologies={}&longest_only={}&exclude_numbers={}&whole_word_only={}&exclude_synonyms={}",
            self.annotator_base,
            query_escape(text),
            ontologies.join(","),
            params.longest_only,
            params.exclude_numbers,
            params.whole_word_only,
            params.exclude_synonyms,
        )
    }

    /// Vocabulary-driven term tagger; response is XML with accession tags.
    pub fn whatizit_url(&self, text: &str, vocabulary: &str) -> String {
        format!(
            "{}/{}?text={}",
            self.whatizit_base,
            path_escape(vocabulary),
            query_escape(text)
        )
    }

    /// SPARQL SELECT returning JSON bindings.
    pub fn sparql_url(&self, query: &str) -> String {
        format!("{}?query={}&format=json", self.sparql_base, query_escape(query))
    }
}

/// SELECT query matching triples with `uri` as subject or object.
pub fn sparql_select_query(uri: &str, limit: usize) -> String {
    format!(
        "SELECT ?s ?p ?o WHERE {{ {{ ?s ?p ?o . FILTER(?s = <{uri}>) }} UNION {{ ?s ?p ?o . FILTER(?o = <{uri}>) }} }} LIMIT {limit}"
    )
}
