//! WS4A: a biomedical question-answering pipeline built around public web
//! services, with a record/replay gateway so every stage runs offline.
//!
//! The flow for one question: annotate the question text with ontology
//! concepts, gather PubMed ids for each concept, fetch and annotate the
//! candidate abstracts, score each (question, abstract) pair, decide
//! relevance by threshold or by a trained linear SVM, and assemble the
//! answer (documents, snippets, concepts, RDF triples). An evaluation
//! harness scores answer files against gold files.

pub mod annotate;
pub mod answer;
pub mod classify;
pub mod cli;
pub mod config;
pub mod eval;
pub mod evaluate;
pub mod gateway;
pub mod ontology;
pub mod pipeline;
pub mod retrieve;
pub mod text;
