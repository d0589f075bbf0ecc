//! Candidate document retrieval: turn question annotations into PubMed
//! ids per source, fetch the abstracts, and keep only the most recent
//! articles regardless of which ontology produced them.

use std::collections::{BTreeMap, BTreeSet, HashSet};

use chrono::NaiveDate;

use crate::annotate::AnnotationSet;
use crate::gateway::{DateParam, Gateway, GatewayError};
use crate::text::{AbstractDoc, ConceptSource, Pmid, Question};

/// Candidate abstracts for one question. Docs are sorted newest first
/// (ties: larger pmid first) and capped.
#[derive(Debug, Clone)]
pub struct CandidatePool {
    pub question_id: String,
    pub pmid_provenance: BTreeMap<Pmid, BTreeSet<ConceptSource>>,
    pub docs: Vec<AbstractDoc>,
    pub degraded: bool,
}

impl CandidatePool {
    pub fn empty(question_id: impl Into<String>) -> Self {
        CandidatePool {
            question_id: question_id.into(),
            pmid_provenance: BTreeMap::new(),
            docs: Vec::new(),
            degraded: false,
        }
    }
}

/// Stable selection of the `cap` newest docs by publication date, ties
/// broken by larger pmid first. Idempotent.
pub fn select_recent(docs: &[AbstractDoc], cap: usize) -> Vec<AbstractDoc> {
    assert!(cap >= 1, "recency cap must be at least 1");
    let mut sorted = docs.to_vec();
    sorted.sort_by(|a, b| {
        b.pub_date
            .cmp(&a.pub_date)
            .then_with(|| b.pmid.cmp(&a.pmid))
    });
    sorted.truncate(cap);
    sorted
}

pub struct Retriever<'a> {
    gateway: &'a Gateway,
    cutoff: NaiveDate,
    recency_cap: usize,
}

impl<'a> Retriever<'a> {
    pub fn new(gateway: &'a Gateway, recency_cap: usize) -> Self {
        Retriever {
            gateway,
            cutoff: gateway.endpoints().cutoff,
            recency_cap,
        }
    }

    /// PubMed ids per annotation, with per-pmid provenance union. MeSH,
    /// GO, Jochem and DO labels go through the id search (MeSH with its
    /// field filter), ChEBI labels through the compound lookup, UniProt
    /// accessions through the protein record. A failing annotation
    /// degrades the result; replay misses abort.
    pub fn gather_pmids(
        &self,
        annotations: &AnnotationSet,
    ) -> Result<(BTreeMap<Pmid, BTreeSet<ConceptSource>>, bool), GatewayError> {
        let mut merged: BTreeMap<Pmid, BTreeSet<ConceptSource>> = BTreeMap::new();
        let mut degraded = false;
        let mut queried: HashSet<(ConceptSource, String)> = HashSet::new();

        for annotation in &annotations.annotations {
            let query_id = match annotation.source {
                ConceptSource::Uniprot => annotation.concept_id.clone(),
                _ => annotation.label.clone(),
            };
            if query_id.trim().is_empty()
                || !queried.insert((annotation.source, query_id.clone()))
            {
                continue;
            }
            let result = match annotation.source {
                ConceptSource::Mesh => self.esearch(&annotation.label, true),
                ConceptSource::Go | ConceptSource::Jochem | ConceptSource::Do => {
                    self.esearch(&annotation.label, false)
                }
                ConceptSource::Chebi => self.gateway.pubchem_pmids(&annotation.label),
                ConceptSource::Uniprot => self.gateway.uniprot_pmids(&annotation.concept_id),
            };
            match result {
                Ok(pmids) => {
                    for pmid in pmids {
                        merged.entry(pmid).or_default().insert(annotation.source);
                    }
                }
                Err(e) if e.is_replay_miss() => return Err(e),
                Err(e) => {
                    eprintln!(
                        "warning: id lookup failed for {} ({}): {e}",
                        annotation.label, annotation.source
                    );
                    degraded = true;
                }
            }
        }
        Ok((merged, degraded))
    }

    fn esearch(&self, label: &str, mesh_filter: bool) -> Result<Vec<Pmid>, GatewayError> {
        let term = if mesh_filter {
            format!("\"{label}\"[mesh]")
        } else {
            format!("\"{label}\"")
        };
        self.gateway
            .esearch_pmids(&term, None, DateParam::Day(self.cutoff))
    }

    /// Full retrieval for one question: gather ids, fetch abstracts, drop
    /// anything past the cutoff, keep the newest `recency_cap`.
    pub fn build_pool(
        &self,
        question: &Question,
        annotations: &AnnotationSet,
    ) -> Result<CandidatePool, GatewayError> {
        let (provenance, mut degraded) = self.gather_pmids(annotations)?;
        if provenance.is_empty() {
            let mut pool = CandidatePool::empty(&question.id);
            pool.degraded = degraded;
            return Ok(pool);
        }
        let pmids: Vec<Pmid> = provenance.keys().cloned().collect();
        let fetched = match self.gateway.efetch_abstracts(&pmids) {
            Ok(docs) => docs,
            Err(e) if e.is_replay_miss() => return Err(e),
            Err(e) => {
                eprintln!("warning: abstract fetch failed for {}: {e}", question.id);
                degraded = true;
                Vec::new()
            }
        };
        let eligible: Vec<AbstractDoc> = fetched
            .into_iter()
            .filter(|d| d.pub_date <= self.cutoff && provenance.contains_key(&d.pmid))
            .collect();
        let docs = select_recent(&eligible, self.recency_cap);
        Ok(CandidatePool {
            question_id: question.id.clone(),
            pmid_provenance: provenance,
            docs,
            degraded,
        })
    }
}
