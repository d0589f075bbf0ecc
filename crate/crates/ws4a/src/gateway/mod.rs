//! Typed clients for the external services behind a single record/replay
//! seam. In replay mode every response comes from the fixture store and
//! the transport is a fail-on-use stub, so no test can touch the network.

pub mod clients;
pub mod store;
pub mod transport;
pub mod urls;

use std::collections::HashSet;
use std::str::FromStr;
use std::sync::{Condvar, Mutex};

use chrono::NaiveDate;
use thiserror::Error;

use crate::answer::Triple;
use crate::text::{AbstractDoc, ConceptAnnotation, ConceptSource, Pmid};
pub use store::{request_key, CacheEntryMeta, FixtureStore};
pub use transport::{FailTransport, HttpTransport, Transport, TransportResponse};
pub use urls::{DateParam, ServiceEndpoints};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ServiceKind {
    Annotator,
    EutilsSearch,
    EutilsFetch,
    Pubchem,
    Uniprot,
    Whatizit,
    Sparql,
}

impl std::fmt::Display for ServiceKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let name = match self {
            ServiceKind::Annotator => "annotator",
            ServiceKind::EutilsSearch => "eutils-search",
            ServiceKind::EutilsFetch => "eutils-fetch",
            ServiceKind::Pubchem => "pubchem",
            ServiceKind::Uniprot => "uniprot",
            ServiceKind::Whatizit => "whatizit",
            ServiceKind::Sparql => "sparql",
        };
        f.write_str(name)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    Get,
    Post,
}

impl Method {
    pub fn as_str(self) -> &'static str {
        match self {
            Method::Get => "GET",
            Method::Post => "POST",
        }
    }
}

/// One outgoing request. GET requests carry no body by construction.
#[derive(Debug, Clone)]
pub struct ServiceRequest {
    pub method: Method,
    pub url: String,
    pub body: Option<Vec<u8>>,
    pub service: ServiceKind,
}

impl ServiceRequest {
    pub fn get(service: ServiceKind, url: String) -> Self {
        ServiceRequest {
            method: Method::Get,
            url,
            body: None,
            service,
        }
    }

    pub fn key(&self) -> String {
        request_key(self.method, &self.url, self.body.as_deref())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GatewayMode {
    Record,
    Replay,
    Passthrough,
}

impl FromStr for GatewayMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "record" => Ok(GatewayMode::Record),
            "replay" => Ok(GatewayMode::Replay),
            "passthrough" => Ok(GatewayMode::Passthrough),
            other => Err(format!(
                "unknown gateway mode {other:?} (expected record, replay or passthrough)"
            )),
        }
    }
}

#[derive(Debug, Error)]
pub enum GatewayError {
    #[error("{service} transport error: {message}")]
    Transport {
        service: ServiceKind,
        message: String,
    },
    #[error("{service} response parse error: {message}")]
    Parse {
        service: ServiceKind,
        message: String,
    },
    #[error("replay miss for {url} (key {key})")]
    ReplayMiss { key: String, url: String },
    #[error("maxdate {maxdate} is past the corpus cutoff {cutoff}")]
    CutoffViolation {
        maxdate: NaiveDate,
        cutoff: NaiveDate,
    },
    #[error("not a UniProt accession: {accession:?}")]
    BadAccession { accession: String },
    #[error("fixture store error: {0}")]
    Store(String),
    #[error("empty pmid list passed to efetch")]
    EmptyFetch,
}

impl GatewayError {
    pub fn is_replay_miss(&self) -> bool {
        matches!(self, GatewayError::ReplayMiss { .. })
    }
}

/// Annotator filter flags and the ontologies to query.
#[derive(Debug, Clone)]
pub struct AnnotatorParams {
    pub longest_only: bool,
    pub exclude_numbers: bool,
    pub whole_word_only: bool,
    pub exclude_synonyms: bool,
    pub ontologies: Vec<ConceptSource>,
}

impl Default for AnnotatorParams {
    fn default() -> Self {
        AnnotatorParams {
            longest_only: false,
            exclude_numbers: false,
            whole_word_only: true,
            exclude_synonyms: false,
            ontologies: ConceptSource::remote_annotator_defaults(),
        }
    }
}

/// Counting semaphore bounding in-flight requests.
#[derive(Debug)]
struct Semaphore {
    permits: Mutex<usize>,
    available: Condvar,
}

impl Semaphore {
    fn new(permits: usize) -> Self {
        Semaphore {
            permits: Mutex::new(permits.max(1)),
            available: Condvar::new(),
        }
    }

    fn acquire(&self) -> SemaphoreGuard<'_> {
        let mut permits = self.permits.lock().expect("semaphore poisoned");
        while *permits == 0 {
            permits = self.available.wait(permits).expect("semaphore poisoned");
        }
        *permits -= 1;
        SemaphoreGuard { semaphore: self }
    }
}

struct SemaphoreGuard<'a> {
    semaphore: &'a Semaphore,
}

impl Drop for SemaphoreGuard<'_> {
    fn drop(&mut self) {
        let mut permits = self.semaphore.permits.lock().expect("semaphore poisoned");
        *permits += 1;
        self.semaphore.available.notify_one();
    }
}

/// All service access funnels through here. Mode decides where responses
/// come from; the typed operations below do request construction and
/// response parsing.
pub struct Gateway {
    mode: GatewayMode,
    endpoints: ServiceEndpoints,
    store: Option<FixtureStore>,
    transport: Box<dyn Transport>,
    efetch_chunk: usize,
    parallelism: Semaphore,
    misses: Mutex<Vec<(String, String)>>,
}

impl Gateway {
    /// Replay-only gateway: responses come from the store, the transport
    /// refuses everything.
    pub fn replay(
        endpoints: ServiceEndpoints,
        store_dir: impl AsRef<std::path::Path>,
    ) -> Result<Self, GatewayError> {
        Ok(Gateway {
            mode: GatewayMode::Replay,
            endpoints,
            store: Some(FixtureStore::open_replay(store_dir)?),
            transport: Box::new(FailTransport),
            efetch_chunk: 200,
            parallelism: Semaphore::new(4),
            misses: Mutex::new(Vec::new()),
        })
    }

    /// Recording gateway: every response is fetched through `transport`
    /// and persisted.
    pub fn record(
        endpoints: ServiceEndpoints,
        store_dir: impl AsRef<std::path::Path>,
        transport: Box<dyn Transport>,
    ) -> Result<Self, GatewayError> {
        Ok(Gateway {
            mode: GatewayMode::Record,
            endpoints,
            store: Some(FixtureStore::open_writable(store_dir)?),
            transport,
            efetch_chunk: 200,
            parallelism: Semaphore::new(4),
            misses: Mutex::new(Vec::new()),
        })
    }

    /// Network-only gateway, no persistence.
    pub fn passthrough(endpoints: ServiceEndpoints, transport: Box<dyn Transport>) -> Self {
        Gateway {
            mode: GatewayMode::Passthrough,
            endpoints,
            store: None,
            transport,
            efetch_chunk: 200,
            parallelism: Semaphore::new(4),
            misses: Mutex::new(Vec::new()),
        }
    }

    pub fn with_efetch_chunk(mut self, chunk: usize) -> Self {
        self.efetch_chunk = chunk.max(1);
        self
    }

    pub fn with_parallelism(mut self, limit: usize) -> Self {
        self.parallelism = Semaphore::new(limit);
        self
    }

    pub fn mode(&self) -> GatewayMode {
        self.mode
    }

    pub fn endpoints(&self) -> &ServiceEndpoints {
        &self.endpoints
    }

    /// Replay misses seen so far (key, url), in request order.
    pub fn recorded_misses(&self) -> Vec<(String, String)> {
        self.misses.lock().expect("miss log poisoned").clone()
    }

    fn execute(&self, request: &ServiceRequest) -> Result<Vec<u8>, GatewayError> {
        let _permit = self.parallelism.acquire();
        match self.mode {
            GatewayMode::Replay => {
                let key = request.key();
                let store = self.store.as_ref().expect("replay store present");
                match store.lookup(&key) {
                    Some((_, body)) => Ok(body.to_vec()),
                    None => {
                        self.misses
                            .lock()
                            .expect("miss log poisoned")
                            .push((key.clone(), request.url.clone()));
                        Err(GatewayError::ReplayMiss {
                            key,
                            url: request.url.clone(),
                        })
                    }
                }
            }
            GatewayMode::Record => {
                let response = self.transport.execute(request)?;
                let meta = CacheEntryMeta {
                    method: request.method.as_str().to_string(),
                    url: request.url.clone(),
                    content_type: response.content_type.clone(),
                    recorded_at: chrono::Utc::now().format("%Y-%m-%dT%H:%M:%SZ").to_string(),
                };
                self.store
                    .as_ref()
                    .expect("record store present")
                    .insert(&request.key(), &meta, &response.body)?;
                Ok(response.body)
            }
            GatewayMode::Passthrough => Ok(self.transport.execute(request)?.body),
        }
    }

    /// Runs the annotator on `text` and parses the concept annotations.
    pub fn annotate_remote(
        &self,
        text: &str,
        params: &AnnotatorParams,
    ) -> Result<Vec<ConceptAnnotation>, GatewayError> {
        let url = self.endpoints.annotator_url(text, params);
        let request = ServiceRequest::get(ServiceKind::Annotator, url);
        let body = self.execute(&request)?;
        clients::parse_annotator_response(&body, text)
    }

    /// PubMed ids cross-referenced to a compound name; empty when the
    /// service reports no hits.
    pub fn pubchem_pmids(&self, word: &str) -> Result<Vec<Pmid>, GatewayError> {
        let url = self.endpoints.pubchem_url(word);
        let request = ServiceRequest::get(ServiceKind::Pubchem, url);
        let body = self.execute(&request)?;
        clients::parse_pubchem_response(&body)
    }

    /// PubMed ids cited by one protein record.
    pub fn uniprot_pmids(&self, accession: &str) -> Result<Vec<Pmid>, GatewayError> {
        let url = self.endpoints.uniprot_url(accession)?;
        let request = ServiceRequest::get(ServiceKind::Uniprot, url);
        let body = self.execute(&request)?;
        clients::parse_uniprot_response(&body)
    }

    /// UniProt accessions found in `text` by the vocabulary tagger.
    pub fn whatizit_accessions(
        &self,
        text: &str,
        vocabulary: &str,
        id_tag: &str,
    ) -> Result<Vec<String>, GatewayError> {
        let url = self.endpoints.whatizit_url(text, vocabulary);
        let request = ServiceRequest::get(ServiceKind::Whatizit, url);
        let body = self.execute(&request)?;
        clients::parse_whatizit_response(&body, id_tag)
    }

    /// PubMed id search bounded by the corpus cutoff.
    pub fn esearch_pmids(
        &self,
        term: &str,
        mindate: Option<DateParam>,
        maxdate: DateParam,
    ) -> Result<Vec<Pmid>, GatewayError> {
        let url = self.endpoints.esearch_url(term, mindate, maxdate)?;
        let request = ServiceRequest::get(ServiceKind::EutilsSearch, url);
        let body = self.execute(&request)?;
        clients::parse_esearch_response(&body)
    }

    /// Fetches abstracts for the given ids, chunking requests. Records
    /// without abstracts are dropped by the parser.
    pub fn efetch_abstracts(&self, pmids: &[Pmid]) -> Result<Vec<AbstractDoc>, GatewayError> {
        if pmids.is_empty() {
            return Err(GatewayError::EmptyFetch);
        }
        let mut out = Vec::new();
        for chunk in pmids.chunks(self.efetch_chunk) {
            let url = self.endpoints.efetch_url(chunk);
            let request = ServiceRequest::get(ServiceKind::EutilsFetch, url);
            let body = self.execute(&request)?;
            out.extend(clients::parse_efetch_response(&body)?);
        }
        Ok(out)
    }

    /// Triples with each concept URI as subject or object, at most `limit`
    /// per concept, concatenated in request order.
    pub fn sparql_triples(
        &self,
        concept_uris: &[String],
        limit: usize,
    ) -> Result<Vec<Triple>, GatewayError> {
        assert!(limit >= 1, "sparql limit must be at least 1");
        let mut out = Vec::new();
        let mut seen_uris = HashSet::new();
        for uri in concept_uris {
            if !seen_uris.insert(uri.clone()) {
                continue;
            }
            let query = urls::sparql_select_query(uri, limit);
            let url = self.endpoints.sparql_url(&query);
            let request = ServiceRequest::get(ServiceKind::Sparql, url);
            let body = self.execute(&request)?;
            let mut triples = clients::parse_sparql_response(&body)?;
            triples.truncate(limit);
            out.extend(triples);
        }
        Ok(out)
    }
}
