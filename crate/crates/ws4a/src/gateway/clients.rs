//! Response parsers for the external services. Each parser takes the
//! verbatim response bytes and rejects anything malformed or truncated
//! instead of returning partial data.

use chrono::NaiveDate;
use serde_json::Value;

use crate::answer::{RdfTerm, Triple};
use crate::gateway::{GatewayError, ServiceKind};
use crate::text::{
    char_len, concept_id_from_uri, AbstractDoc, ConceptAnnotation, ConceptSource, Pmid,
};

fn parse_err(service: ServiceKind, message: impl Into<String>) -> GatewayError {
    GatewayError::Parse {
        service,
        message: message.into(),
    }
}

fn json_value(service: ServiceKind, bytes: &[u8]) -> Result<Value, GatewayError> {
    serde_json::from_slice(bytes).map_err(|e| parse_err(service, e.to_string()))
}

fn xml_doc(service: ServiceKind, text: &str) -> Result<roxmltree::Document<'_>, GatewayError> {
    roxmltree::Document::parse(text).map_err(|e| parse_err(service, e.to_string()))
}

fn utf8(service: ServiceKind, bytes: &[u8]) -> Result<&str, GatewayError> {
    std::str::from_utf8(bytes).map_err(|e| parse_err(service, e.to_string()))
}

/// Concatenated text of all descendant text nodes.
fn element_text(node: roxmltree::Node<'_, '_>) -> String {
    let mut out = String::new();
    for d in node.descendants() {
        if d.is_text() {
            out.push_str(d.text().unwrap_or(""));
        }
    }
    out
}

/// Annotator JSON: an array of annotated classes, each carrying the
/// concept (`annotatedClass`) and one or more matched spans
/// (`annotations`, with 1-based inclusive `from`/`to` character offsets).
/// Spans are re-validated against the annotated text; an out-of-range
/// span is a parse error, not a silent drop.
pub fn parse_annotator_response(
    bytes: &[u8],
    text: &str,
) -> Result<Vec<ConceptAnnotation>, GatewayError> {
    let service = ServiceKind::Annotator;
    let value = json_value(service, bytes)?;
    let items = value
        .as_array()
        .ok_or_else(|| parse_err(service, "expected a JSON array"))?;
    let text_len = char_len(text);
    let mut out = Vec::new();
    for item in items {
        let class = item
            .get("annotatedClass")
            .ok_or_else(|| parse_err(service, "missing annotatedClass"))?;
        let uri = class
            .get("@id")
            .and_then(Value::as_str)
            .ok_or_else(|| parse_err(service, "missing @id"))?;
        let ontology_url = class
            .pointer("/links/ontology")
            .and_then(Value::as_str)
            .ok_or_else(|| parse_err(service, "missing links.ontology"))?;
        let acronym = ontology_url.rsplit('/').next().unwrap_or("");
        let Some(source) = ConceptSource::from_acronym(acronym) else {
            // ontologies we did not ask for are skipped
            continue;
        };
        let label = class
            .get("prefLabel")
            .and_then(Value::as_str)
            .unwrap_or("")
            .to_string();
        let spans = item
            .get("annotations")
            .and_then(Value::as_array)
            .ok_or_else(|| parse_err(service, "missing annotations array"))?;
        for span in spans {
            let from = span
                .get("from")
                .and_then(Value::as_u64)
                .ok_or_else(|| parse_err(service, "missing from"))?;
            let to = span
                .get("to")
                .and_then(Value::as_u64)
                .ok_or_else(|| parse_err(service, "missing to"))?;
            if from == 0 || to < from || to as usize > text_len {
                return Err(parse_err(
                    service,
                    format!("span {from}..{to} outside text of length {text_len}"),
                ));
            }
            let score = span.get("score").and_then(Value::as_f64).unwrap_or(1.0);
            let label = if label.is_empty() {
                span.get("text")
                    .and_then(Value::as_str)
                    .unwrap_or("")
                    .to_string()
            } else {
                label.clone()
            };
            out.push(ConceptAnnotation {
                concept_id: concept_id_from_uri(source, uri),
                concept_uri: uri.to_string(),
                label,
                source,
                span_begin: (from - 1) as usize,
                span_end: to as usize,
                score: score.clamp(0.0, 1.0),
            });
        }
    }
    Ok(out)
}

/// PubChem xrefs JSON. A `Fault` payload means the compound name is
/// unknown and yields an empty id list.
pub fn parse_pubchem_response(bytes: &[u8]) -> Result<Vec<Pmid>, GatewayError> {
    let service = ServiceKind::Pubchem;
    let value = json_value(service, bytes)?;
    if value.get("Fault").is_some() {
        return Ok(Vec::new());
    }
    let infos = value
        .pointer("/InformationList/Information")
        .and_then(Value::as_array)
        .ok_or_else(|| parse_err(service, "missing InformationList.Information"))?;
    let mut out = Vec::new();
    let mut seen = std::collections::HashSet::new();
    for info in infos {
        if let Some(ids) = info.get("PubMedID").and_then(Value::as_array) {
            for id in ids {
                let id = match id {
                    Value::Number(n) => n.to_string(),
                    Value::String(s) => s.clone(),
                    other => return Err(parse_err(service, format!("bad PubMedID {other}"))),
                };
                let pmid =
                    Pmid::new(id).map_err(|e| parse_err(service, e.to_string()))?;
                if seen.insert(pmid.clone()) {
                    out.push(pmid);
                }
            }
        }
    }
    Ok(out)
}

/// UniProt entry XML: PubMed ids live in citation cross-references
/// (`dbReference type="PubMed" id="..."`).
pub fn parse_uniprot_response(bytes: &[u8]) -> Result<Vec<Pmid>, GatewayError> {
    let service = ServiceKind::Uniprot;
    let text = utf8(service, bytes)?;
    let doc = xml_doc(service, text)?;
    let mut out = Vec::new();
    let mut seen = std::collections::HashSet::new();
    for node in doc.descendants() {
        if node.is_element()
            && node.tag_name().name() == "dbReference"
            && node.attribute("type") == Some("PubMed")
        {
            if let Some(id) = node.attribute("id") {
                let pmid = Pmid::new(id).map_err(|e| parse_err(service, e.to_string()))?;
                if seen.insert(pmid.clone()) {
                    out.push(pmid);
                }
            }
        }
    }
    Ok(out)
}

/// Whatizit XML: accessions are read from elements whose local tag name
/// equals `id_tag`, either from a comma-separated `ids` attribute or from
/// the element text. Entries that are not plausible accessions are
/// skipped (the tagger marks many token kinds).
pub fn parse_whatizit_response(bytes: &[u8], id_tag: &str) -> Result<Vec<String>, GatewayError> {
    let service = ServiceKind::Whatizit;
    let text = utf8(service, bytes)?;
    let doc = xml_doc(service, text)?;
    let mut out = Vec::new();
    let mut seen = std::collections::HashSet::new();
    for node in doc.descendants() {
        if !node.is_element() || node.tag_name().name() != id_tag {
            continue;
        }
        let candidates: Vec<String> = match node.attribute("ids") {
            Some(ids) => ids.split(',').map(|s| s.trim().to_string()).collect(),
            None => vec![element_text(node).trim().to_string()],
        };
        for candidate in candidates {
            if crate::gateway::urls::is_uniprot_accession(&candidate)
                && seen.insert(candidate.clone())
            {
                out.push(candidate);
            }
        }
    }
    Ok(out)
}

/// esearch XML: ids in document order from `IdList/Id`.
pub fn parse_esearch_response(bytes: &[u8]) -> Result<Vec<Pmid>, GatewayError> {
    let service = ServiceKind::EutilsSearch;
    let text = utf8(service, bytes)?;
    let doc = xml_doc(service, text)?;
    if doc.root_element().tag_name().name() != "eSearchResult" {
        return Err(parse_err(service, "expected eSearchResult root"));
    }
    let mut out = Vec::new();
    for node in doc.descendants() {
        if node.is_element() && node.tag_name().name() == "Id" {
            let id = element_text(node);
            out.push(Pmid::new(id.trim()).map_err(|e| parse_err(service, e.to_string()))?);
        }
    }
    Ok(out)
}

fn month_number(s: &str) -> Option<u32> {
    match s.to_ascii_lowercase().as_str() {
        "jan" => Some(1),
        "feb" => Some(2),
        "mar" => Some(3),
        "apr" => Some(4),
        "may" => Some(5),
        "jun" => Some(6),
        "jul" => Some(7),
        "aug" => Some(8),
        "sep" => Some(9),
        "oct" => Some(10),
        "nov" => Some(11),
        "dec" => Some(12),
        other => other.parse().ok().filter(|m| (1..=12).contains(m)),
    }
}

fn parse_pub_date(node: roxmltree::Node<'_, '_>) -> Option<NaiveDate> {
    let mut year: Option<i32> = None;
    let mut month: u32 = 1;
    let mut day: u32 = 1;
    for child in node.children().filter(|c| c.is_element()) {
        let text = element_text(child);
        let text = text.trim();
        match child.tag_name().name() {
            "Year" => year = text.parse().ok(),
            "Month" => month = month_number(text).unwrap_or(1),
            "Day" => day = text.parse().unwrap_or(1),
            "MedlineDate" => {
                // e.g. "2015 Nov-Dec": take the leading year, default the rest
                let lead: String = text.chars().take_while(|c| c.is_ascii_digit()).collect();
                year = lead.parse().ok();
            }
            _ => {}
        }
    }
    NaiveDate::from_ymd_opt(year?, month, day)
        .or_else(|| NaiveDate::from_ymd_opt(year?, month, 1))
}

/// efetch XML: one `AbstractDoc` per `PubmedArticle` that has a PMID, a
/// publication date, and a non-empty abstract. Records without an
/// abstract are dropped. Multiple `AbstractText` sections are joined with
/// a single space.
pub fn parse_efetch_response(bytes: &[u8]) -> Result<Vec<AbstractDoc>, GatewayError> {
    let service = ServiceKind::EutilsFetch;
    let text = utf8(service, bytes)?;
    let doc = xml_doc(service, text)?;
    if doc.root_element().tag_name().name() != "PubmedArticleSet" {
        return Err(parse_err(service, "expected PubmedArticleSet root"));
    }
    let mut out = Vec::new();
    for article in doc
        .descendants()
        .filter(|n| n.is_element() && n.tag_name().name() == "PubmedArticle")
    {
        let mut pmid: Option<Pmid> = None;
        let mut title = String::new();
        let mut abstract_parts: Vec<String> = Vec::new();
        let mut date: Option<NaiveDate> = None;
        for node in article.descendants().filter(|n| n.is_element()) {
            match node.tag_name().name() {
                "PMID" if pmid.is_none() => {
                    let id = element_text(node);
                    pmid = Some(
                        Pmid::new(id.trim()).map_err(|e| parse_err(service, e.to_string()))?,
                    );
                }
                "ArticleTitle" => title = element_text(node).trim().to_string(),
                "AbstractText" => {
                    let part = element_text(node).trim().to_string();
                    if !part.is_empty() {
                        abstract_parts.push(part);
                    }
                }
                "PubDate" => date = parse_pub_date(node),
                _ => {}
            }
        }
        let Some(pmid) = pmid else {
            return Err(parse_err(service, "PubmedArticle without PMID"));
        };
        if abstract_parts.is_empty() {
            continue;
        }
        let Some(pub_date) = date else {
            return Err(parse_err(service, format!("article {pmid} without PubDate")));
        };
        out.push(AbstractDoc {
            pmid,
            title,
            text: abstract_parts.join(" "),
            pub_date,
        });
    }
    Ok(out)
}

/// SPARQL JSON results: bindings for variables `s`, `p`, `o` in response
/// order. Missing variables are a parse error.
pub fn parse_sparql_response(bytes: &[u8]) -> Result<Vec<Triple>, GatewayError> {
    let service = ServiceKind::Sparql;
    let value = json_value(service, bytes)?;
    let bindings = value
        .pointer("/results/bindings")
        .and_then(Value::as_array)
        .ok_or_else(|| parse_err(service, "missing results.bindings"))?;
    let mut out = Vec::new();
    for binding in bindings {
        let term = |var: &str| -> Result<(String, bool), GatewayError> {
            let node = binding
                .get(var)
                .ok_or_else(|| parse_err(service, format!("binding missing ?{var}")))?;
            let value = node
                .get("value")
                .and_then(Value::as_str)
                .ok_or_else(|| parse_err(service, format!("?{var} missing value")))?;
            let kind = node.get("type").and_then(Value::as_str).unwrap_or("uri");
            Ok((value.to_string(), kind != "uri"))
        };
        let (subject, _) = term("s")?;
        let (predicate, _) = term("p")?;
        let (object, is_literal) = term("o")?;
        out.push(Triple {
            subject,
            predicate,
            object: RdfTerm {
                value: object,
                is_literal,
            },
            score: 0.0,
        });
    }
    Ok(out)
}
