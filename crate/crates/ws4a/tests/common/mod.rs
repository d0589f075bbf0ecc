//! Shared test support: a deterministic in-memory service world that the
//! gateway can record fixtures from, plus config builders pointing at the
//! bundled data files.

#![allow(dead_code)]

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use chrono::NaiveDate;
use ws4a::config::{OntologyFileSection, PipelineConfig};
use ws4a::gateway::{GatewayError, ServiceKind, ServiceRequest, Transport, TransportResponse};
use ws4a::ontology::{OntologyFormat, OntologyGraph};
use ws4a::text::{concept_uri, ConceptSource};

pub fn crate_root() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
}

pub fn store_dir() -> PathBuf {
    crate_root().join("tests/data/store")
}

pub fn questions_path() -> PathBuf {
    crate_root().join("tests/data/questions.json")
}

pub fn gold_path() -> PathBuf {
    crate_root().join("tests/data/gold.json")
}

/// Pipeline config wired to the bundled ontologies and fixture store,
/// with absolute paths so tests are independent of the working directory.
pub fn fixture_config(mode: &str) -> PipelineConfig {
    let root = crate_root();
    let mut config = PipelineConfig::default();
    config.gateway.mode = mode.to_string();
    config.gateway.store = store_dir();
    config.gateway.rate_limit_ms = 0;
    config.ontology.files = vec![
        OntologyFileSection {
            path: root.join("data/ontologies/mesh.obo"),
            format: "obo-subset".into(),
            source: "MESH".into(),
        },
        OntologyFileSection {
            path: root.join("data/ontologies/go.obo"),
            format: "obo-subset".into(),
            source: "GO".into(),
        },
        OntologyFileSection {
            path: root.join("data/ontologies/do.obo"),
            format: "obo-subset".into(),
            source: "DO".into(),
        },
        OntologyFileSection {
            path: root.join("data/ontologies/chebi.obo"),
            format: "obo-subset".into(),
            source: "CHEBI".into(),
        },
        OntologyFileSection {
            path: root.join("data/ontologies/jochem.tsv"),
            format: "tsv-edges".into(),
            source: "JOCHEM".into(),
        },
    ];
    config
}

/// Writes the config to a TOML file for CLI-level tests.
pub fn write_config_file(path: &Path, mode: &str) -> std::io::Result<()> {
    let root = crate_root();
    let store = store_dir();
    let mut ontology_blocks = String::new();
    for (file, format, source) in [
        ("mesh.obo", "obo-subset", "MESH"),
        ("go.obo", "obo-subset", "GO"),
        ("do.obo", "obo-subset", "DO"),
        ("chebi.obo", "obo-subset", "CHEBI"),
        ("jochem.tsv", "tsv-edges", "JOCHEM"),
    ] {
        ontology_blocks.push_str(&format!(
            "[[ontology.files]]\npath = {:?}\nformat = \"{format}\"\nsource = \"{source}\"\n\n",
            root.join("data/ontologies").join(file)
        ));
    }
    let content = format!(
        "[gateway]\nmode = \"{mode}\"\nstore = {:?}\nrate_limit_ms = 0\n\n{ontology_blocks}",
        store
    );
    std::fs::write(path, content)
}

pub fn load_world_graph() -> OntologyGraph {
    let root = crate_root();
    let mut graph = OntologyGraph::default();
    for (file, format, source) in [
        ("mesh.obo", OntologyFormat::OboSubset, ConceptSource::Mesh),
        ("go.obo", OntologyFormat::OboSubset, ConceptSource::Go),
        ("do.obo", OntologyFormat::OboSubset, ConceptSource::Do),
        ("chebi.obo", OntologyFormat::OboSubset, ConceptSource::Chebi),
        ("jochem.tsv", OntologyFormat::TsvEdges, ConceptSource::Jochem),
    ] {
        let loaded =
            OntologyGraph::load(root.join("data/ontologies").join(file), format, source).unwrap();
        graph.merge(loaded).unwrap();
    }
    graph
}

#[derive(Debug, Clone)]
pub struct Article {
    pub pmid: &'static str,
    pub date: (i32, u32, u32),
    pub title: &'static str,
    pub text: Option<&'static str>,
}

/// The article universe. Dates all precede the corpus cutoff; 25000001
/// deliberately has no abstract.
pub fn articles() -> Vec<Article> {
    vec![
        Article { pmid: "26000001", date: (2015, 9, 12), title: "Rheumatoid arthritis prevalence in men and women.", text: Some("Rheumatoid arthritis is more common in women than in men. Epidemiology of rheumatic diseases shows a clear sex difference. We surveyed heart disease comorbidity in this cohort.") },
        Article { pmid: "26000002", date: (2015, 3, 2), title: "Sex differences in rheumatoid arthritis.", text: Some("Women develop rheumatoid arthritis more often than men. Diagnosis uses anti inflammatory agents sparingly.") },
        Article { pmid: "26000003", date: (2013, 4, 9), title: "History of aspirin use in rheumatic diseases.", text: Some("Aspirin was used for rheumatic diseases long before modern therapy. Early reports praised aspirin.") },
        Article { pmid: "26000004", date: (2014, 8, 27), title: "Lifestyle and heart disease.", text: Some("Heart disease risk falls with exercise. Diet changes heart disease outcomes in heart failure patients.") },
        Article { pmid: "26000005", date: (2015, 2, 11), title: "Diabetes mellitus management guidelines.", text: Some("Diabetes mellitus care starts with glucose monitoring. Insulin therapy remains central for diabetes mellitus.") },
        Article { pmid: "26000006", date: (2013, 12, 1), title: "Metabolic diseases overview.", text: Some("Metabolic diseases include diabetes mellitus. Insulin resistance drives progression.") },
        Article { pmid: "26000007", date: (2015, 8, 14), title: "Myocardial infarction after heart disease diagnosis.", text: Some("Myocardial infarction rates rise with untreated heart disease. We followed heart failure progression.") },
        Article { pmid: "26000008", date: (2015, 5, 30), title: "Glucose metabolic process in liver cells.", text: Some("Glucose metabolic process depends on insulin. Glycogen biosynthetic process follows feeding.") },
        Article { pmid: "26000009", date: (2015, 7, 23), title: "Insulin signaling in diabetes mellitus.", text: Some("What role does insulin play in glucose metabolic process regulation? Insulin signaling controls glucose metabolic process flux in diabetes mellitus.") },
        Article { pmid: "26000010", date: (2015, 10, 5), title: "Aspirin for primary prevention of heart disease.", text: Some("Is aspirin effective for the treatment of heart disease? This review weighs aspirin benefits in cardiovascular diseases. Aspirin reduced myocardial infarction risk.") },
        Article { pmid: "26000011", date: (2015, 6, 18), title: "Aspirin dosing and safety.", text: Some("Aspirin is a common anti-inflammatory drug. High doses of aspirin cause bleeding.") },
        Article { pmid: "26000012", date: (2015, 11, 10), title: "Oxygen therapy in myocardial infarction.", text: Some("Oxygen supplementation in myocardial infarction is debated. Hemoglobin carries oxygen to ischemic tissue.") },
        Article { pmid: "26000013", date: (2014, 11, 20), title: "Acute inflammatory response markers in rheumatoid arthritis.", text: Some("Acute inflammatory response tracks disease activity. Rheumatoid arthritis flares raise these markers.") },
        Article { pmid: "26000014", date: (2014, 2, 13), title: "Rheumatoid arthritis comorbidities.", text: Some("Rheumatoid arthritis patients develop heart disease often. Comorbidity tracking helps care.") },
        Article { pmid: "26000015", date: (2015, 1, 26), title: "Inflammation in breast neoplasms.", text: Some("Breast neoplasms show chronic inflammatory response. Breast cancer cells evade immune control.") },
        Article { pmid: "26000016", date: (2015, 8, 2), title: "Cell population proliferation in neoplasms.", text: Some("Does aspirin increase cell population proliferation in neoplasms? Aspirin slowed cell population proliferation in most neoplasms.") },
        Article { pmid: "26000017", date: (2015, 9, 29), title: "Ibuprofen and acute inflammatory response.", text: Some("Does ibuprofen reduce acute inflammatory response in patients? Ibuprofen lowered acute inflammatory response scores.") },
        Article { pmid: "26000018", date: (2015, 4, 17), title: "Breast cancer treatment outcomes.", text: Some("Breast cancer survival improves with early detection. Breast neoplasms respond to combined therapy.") },
        Article { pmid: "26000019", date: (2013, 7, 19), title: "Measuring cell population proliferation.", text: Some("Cell population proliferation assays vary. Proliferation markers need careful controls.") },
        Article { pmid: "26000020", date: (2014, 10, 8), title: "Ibuprofen pharmacokinetics.", text: Some("Ibuprofen is an anti-inflammatory drug. Dosing alters inflammatory response mildly.") },
        Article { pmid: "26000021", date: (2013, 9, 5), title: "Aspirin chemistry.", text: Some("Aspirin acetylates enzymes. The drug chemistry of aspirin is well understood.") },
        Article { pmid: "26000022", date: (2014, 6, 15), title: "Glucose and insulin homeostasis.", text: Some("Glucose clearance requires insulin. Metabolic process balance maintains homeostasis.") },
        Article { pmid: "26000023", date: (2015, 10, 22), title: "Hemoglobin variants and oxygen binding.", text: Some("Hemoglobin oxygen binding changes with structural variants. Oxygen affinity shifts in myocardial infarction patients.") },
        Article { pmid: "25000001", date: (2015, 6, 1), title: "Editorial: heart disease awareness.", text: None },
    ]
}

fn mesh_search_table() -> BTreeMap<&'static str, Vec<&'static str>> {
    BTreeMap::from([
        ("aspirin", vec!["26000010", "26000011", "26000003"]),
        ("myocardial infarction", vec!["26000007", "26000012"]),
        ("rheumatoid arthritis", vec!["26000001", "26000002", "26000013"]),
        ("diabetes mellitus", vec!["26000005", "26000006"]),
        ("neoplasms", vec!["26000016", "26000015"]),
    ])
}

fn plain_search_table() -> BTreeMap<&'static str, Vec<&'static str>> {
    BTreeMap::from([
        ("heart disease", vec!["26000004", "26000007", "25000001"]),
        ("rheumatoid arthritis", vec!["26000001", "26000014"]),
        ("glucose metabolic process", vec!["26000008"]),
        ("diabetes mellitus", vec!["26000005", "26000009"]),
        ("acute inflammatory response", vec!["26000013", "26000017"]),
        ("breast cancer", vec!["26000015", "26000018"]),
        ("cell population proliferation", vec!["26000016", "26000019"]),
        ("ibuprofen", vec!["26000017", "26000020"]),
    ])
}

fn pubchem_table() -> BTreeMap<&'static str, Vec<&'static str>> {
    BTreeMap::from([
        ("aspirin", vec!["26000011", "26000021"]),
        ("glucose", vec!["26000008", "26000022"]),
        ("insulin", vec!["26000009", "26000022"]),
        ("oxygen", vec!["26000012", "26000023"]),
        ("ibuprofen", vec!["26000020"]),
    ])
}

fn uniprot_table() -> BTreeMap<&'static str, Vec<&'static str>> {
    BTreeMap::from([
        ("P69905", vec!["26000023", "26000012"]),
        ("P01308", vec!["26000009", "26000022"]),
    ])
}

struct DictEntry {
    label: String,
    source: ConceptSource,
    concept_id: String,
    uri: String,
}

/// Deterministic stand-in for the live services: routes each request by
/// service kind and synthesizes a response from the world tables.
pub struct MockWorld {
    dictionary: Vec<DictEntry>,
    articles: BTreeMap<&'static str, Article>,
    mesh_search: BTreeMap<&'static str, Vec<&'static str>>,
    plain_search: BTreeMap<&'static str, Vec<&'static str>>,
    pubchem: BTreeMap<&'static str, Vec<&'static str>>,
    uniprot: BTreeMap<&'static str, Vec<&'static str>>,
    graph: OntologyGraph,
}

impl MockWorld {
    pub fn new() -> Self {
        let graph = load_world_graph();
        let mut dictionary: Vec<DictEntry> = graph
            .iter_nodes()
            .filter(|(_, info)| {
                matches!(
                    info.source,
                    ConceptSource::Mesh | ConceptSource::Go | ConceptSource::Do
                )
            })
            .map(|(id, info)| DictEntry {
                label: info.label.clone(),
                source: info.source,
                concept_id: id.clone(),
                uri: info.uri.clone(),
            })
            .collect();
        // Jochem terms carry opaque ids locally; the annotator knows the
        // human label.
        dictionary.push(DictEntry {
            label: "ibuprofen".into(),
            source: ConceptSource::Jochem,
            concept_id: "JOCHEM:J0004".into(),
            uri: concept_uri(ConceptSource::Jochem, "JOCHEM:J0004"),
        });
        dictionary.sort_by(|a, b| a.concept_id.cmp(&b.concept_id));
        MockWorld {
            dictionary,
            articles: articles().into_iter().map(|a| (a.pmid, a)).collect(),
            mesh_search: mesh_search_table(),
            plain_search: plain_search_table(),
            pubchem: pubchem_table(),
            uniprot: uniprot_table(),
            graph,
        }
    }

    fn annotator_response(&self, url: &str) -> String {
        let text = query_param(url, "text").expect("annotator request has text");
        let requested = query_param(url, "ontologies").unwrap_or_default();
        let requested: Vec<&str> = requested.split(',').collect();
        let chars: Vec<char> = text.chars().collect();
        let lower: Vec<char> = chars
            .iter()
            .map(|c| c.to_lowercase().next().unwrap_or(*c))
            .collect();
        let is_word = |i: usize| i < chars.len() && chars[i].is_alphanumeric();

        let mut per_concept: BTreeMap<&str, (usize, Vec<(usize, usize)>)> = BTreeMap::new();
        for (index, entry) in self.dictionary.iter().enumerate() {
            if !requested.contains(&entry.source.acronym()) {
                continue;
            }
            let pattern: Vec<char> = entry
                .label
                .chars()
                .map(|c| c.to_lowercase().next().unwrap_or(c))
                .collect();
            if pattern.is_empty() || pattern.len() > chars.len() {
                continue;
            }
            for start in 0..=chars.len() - pattern.len() {
                let end = start + pattern.len();
                if lower[start..end] == pattern[..]
                    && !(start > 0 && is_word(start - 1))
                    && !is_word(end)
                {
                    per_concept
                        .entry(entry.concept_id.as_str())
                        .or_insert((index, Vec::new()))
                        .1
                        .push((start, end));
                }
            }
        }
        let items: Vec<serde_json::Value> = per_concept
            .into_iter()
            .filter(|(_, (_, spans))| !spans.is_empty())
            .map(|(_, (index, spans))| {
                let entry = &self.dictionary[index];
                serde_json::json!({
                    "annotatedClass": {
                        "@id": entry.uri,
                        "prefLabel": entry.label,
                        "links": {
                            "ontology": format!(
                                "http://data.bioontology.org/ontologies/{}",
                                entry.source.acronym()
                            )
                        }
                    },
                    "annotations": spans.iter().map(|(b, e)| {
                        serde_json::json!({
                            "from": b + 1,
                            "to": e,
                            "text": chars[*b..*e].iter().collect::<String>()
                        })
                    }).collect::<Vec<_>>()
                })
            })
            .collect();
        serde_json::Value::Array(items).to_string()
    }

    fn esearch_response(&self, url: &str) -> String {
        let term = query_param(url, "term").expect("esearch request has term");
        let (label, mesh) = match term.strip_suffix("[mesh]") {
            Some(quoted) => (quoted.trim_matches('"').to_string(), true),
            None => (term.trim_matches('"').to_string(), false),
        };
        let table = if mesh { &self.mesh_search } else { &self.plain_search };
        let ids = table.get(label.as_str()).cloned().unwrap_or_default();
        let id_list: String = ids.iter().map(|id| format!("<Id>{id}</Id>")).collect();
        format!(
            "<eSearchResult><Count>{}</Count><IdList>{id_list}</IdList></eSearchResult>",
            ids.len()
        )
    }

    fn efetch_response(&self, url: &str) -> String {
        let ids = query_param(url, "id").expect("efetch request has ids");
        let mut out = String::from("<PubmedArticleSet>");
        for id in ids.split(',') {
            let Some(article) = self.articles.get(id) else {
                continue;
            };
            let (year, month, day) = article.date;
            out.push_str(&format!(
                "<PubmedArticle><MedlineCitation><PMID>{}</PMID><Article>\
                 <Journal><JournalIssue><PubDate><Year>{year}</Year><Month>{month}</Month><Day>{day}</Day></PubDate></JournalIssue></Journal>\
                 <ArticleTitle>{}</ArticleTitle>",
                article.pmid, article.title
            ));
            if let Some(text) = article.text {
                out.push_str(&format!(
                    "<Abstract><AbstractText>{text}</AbstractText></Abstract>"
                ));
            }
            out.push_str("</Article></MedlineCitation></PubmedArticle>");
        }
        out.push_str("</PubmedArticleSet>");
        out
    }

    fn pubchem_response(&self, url: &str) -> String {
        // .../compound/name/<word>/xrefs/PubMedID/JSON
        let segments: Vec<&str> = url.split('/').collect();
        let word = decode_component(segments[segments.len() - 4]);
        match self.pubchem.get(word.as_str()) {
            Some(ids) => {
                let numbers: Vec<u64> = ids.iter().map(|id| id.parse().unwrap()).collect();
                serde_json::json!({
                    "InformationList": {
                        "Information": [{"CID": 1, "PubMedID": numbers}]
                    }
                })
                .to_string()
            }
            None => serde_json::json!({
                "Fault": {"Code": "PUGREST.NotFound", "Message": "No CID found"}
            })
            .to_string(),
        }
    }

    fn whatizit_response(&self, url: &str) -> String {
        let text = query_param(url, "text").expect("whatizit request has text");
        let lower = text.to_lowercase();
        let mut hits: Vec<(&str, &str)> = Vec::new();
        if lower.contains("hemoglobin") || lower.contains("oxygen binding") {
            hits.push(("P69905", "hemoglobin"));
        }
        if lower.contains("insulin") {
            hits.push(("P01308", "insulin"));
        }
        let body: String = hits
            .iter()
            .map(|(acc, mention)| format!("<z:uniprot ids=\"{acc}\">{mention}</z:uniprot>"))
            .collect();
        format!("<result xmlns:z=\"http://ws4a.example/ns\">{body}</result>")
    }

    fn uniprot_response(&self, url: &str) -> String {
        let accession = url
            .rsplit('/')
            .next()
            .and_then(|s| s.strip_suffix(".xml"))
            .expect("uniprot url ends with <accession>.xml");
        let refs: String = self
            .uniprot
            .get(accession)
            .map(|ids| {
                ids.iter()
                    .map(|id| {
                        format!(
                            "<reference key=\"1\"><citation><dbReference type=\"PubMed\" id=\"{id}\"/></citation></reference>"
                        )
                    })
                    .collect()
            })
            .unwrap_or_default();
        format!("<uniprot><entry>{refs}</entry></uniprot>")
    }

    fn sparql_response(&self, url: &str) -> String {
        let query = query_param(url, "query").expect("sparql request has query");
        let uri = query
            .split('<')
            .nth(1)
            .and_then(|s| s.split('>').next())
            .expect("sparql query embeds a concept uri");
        let node = self
            .graph
            .iter_nodes()
            .find(|(_, info)| info.uri == uri);
        let mut bindings: Vec<serde_json::Value> = Vec::new();
        let mut bind = |s: &str, p: &str, o: &str, literal: bool| {
            bindings.push(serde_json::json!({
                "s": {"type": "uri", "value": s},
                "p": {"type": "uri", "value": p},
                "o": {"type": if literal { "literal" } else { "uri" }, "value": o}
            }));
        };
        if let Some((id, info)) = node {
            let local = id.split(':').nth(1).unwrap_or(id);
            bind(uri, "http://www.w3.org/2000/01/rdf-schema#label", &info.label, true);
            bind(
                uri,
                "http://id.nlm.nih.gov/mesh/vocab#identifier",
                local,
                true,
            );
            for parent in self.graph.parents_of(id) {
                let parent_uri = &self.graph.node(parent).unwrap().uri;
                bind(
                    uri,
                    "http://id.nlm.nih.gov/mesh/vocab#broaderDescriptor",
                    parent_uri,
                    false,
                );
            }
            for (child, child_info) in self.graph.iter_nodes() {
                if self.graph.parents_of(child).contains(&id.to_string()) {
                    bind(
                        &child_info.uri,
                        "http://id.nlm.nih.gov/mesh/vocab#broaderDescriptor",
                        uri,
                        false,
                    );
                }
            }
            bind(
                uri,
                "http://www.w3.org/2000/01/rdf-schema#comment",
                &format!("descriptor for {} indexed in medline", info.label),
                true,
            );
        }
        serde_json::json!({
            "head": {"vars": ["s", "p", "o"]},
            "results": {"bindings": bindings}
        })
        .to_string()
    }
}

impl Transport for MockWorld {
    fn execute(&self, request: &ServiceRequest) -> Result<TransportResponse, GatewayError> {
        let (content_type, body) = match request.service {
            ServiceKind::Annotator => ("application/json", self.annotator_response(&request.url)),
            ServiceKind::EutilsSearch => ("text/xml", self.esearch_response(&request.url)),
            ServiceKind::EutilsFetch => ("text/xml", self.efetch_response(&request.url)),
            ServiceKind::Pubchem => ("application/json", self.pubchem_response(&request.url)),
            ServiceKind::Whatizit => ("text/xml", self.whatizit_response(&request.url)),
            ServiceKind::Uniprot => ("text/xml", self.uniprot_response(&request.url)),
            ServiceKind::Sparql => (
                "application/sparql-results+json",
                self.sparql_response(&request.url),
            ),
        };
        Ok(TransportResponse {
            content_type: content_type.to_string(),
            body: body.into_bytes(),
        })
    }
}

/// Decodes %XX escapes and `+` for spaces.
pub fn decode_component(s: &str) -> String {
    let bytes = s.as_bytes();
    let mut out: Vec<u8> = Vec::with_capacity(bytes.len());
    let mut i = 0;
    while i < bytes.len() {
        match bytes[i] {
            b'+' => {
                out.push(b' ');
                i += 1;
            }
            b'%' if i + 2 < bytes.len() => {
                let hex = std::str::from_utf8(&bytes[i + 1..i + 3]).unwrap_or("");
                match u8::from_str_radix(hex, 16) {
                    Ok(b) => {
                        out.push(b);
                        i += 3;
                    }
                    Err(_) => {
                        out.push(bytes[i]);
                        i += 1;
                    }
                }
            }
            b => {
                out.push(b);
                i += 1;
            }
        }
    }
    String::from_utf8_lossy(&out).into_owned()
}

/// Value of a query parameter, decoded.
pub fn query_param(url: &str, name: &str) -> Option<String> {
    let query = url.split_once('?')?.1;
    for pair in query.split('&') {
        let (key, value) = pair.split_once('=').unwrap_or((pair, ""));
        if key == name {
            return Some(decode_component(value));
        }
    }
    None
}

pub fn world_date(article: &Article) -> NaiveDate {
    NaiveDate::from_ymd_opt(article.date.0, article.date.1, article.date.2).unwrap()
}
