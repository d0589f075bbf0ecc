//! Desk-scale ontology subsets loaded into an is-a DAG, with ancestor
//! queries and the hierarchical similarity score used by the abstract
//! evaluator.
//!
//! Two input formats are supported: a minimal OBO subset (only `[Term]`,
//! `id:`, `name:` and `is_a:` lines are interpreted) and a two-column
//! `child<TAB>parent` TSV with `#` comments.

use std::collections::{BTreeMap, BTreeSet, HashMap, VecDeque};
use std::path::Path;

use thiserror::Error;

use crate::text::{concept_uri, source_from_concept_id, ConceptAnnotation, ConceptSource};

#[derive(Debug, Error)]
pub enum OntologyError {
    #[error("cannot read ontology file: {0}")]
    Io(#[from] std::io::Error),
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("ontology graph has a cycle through {concept_id:?}")]
    Cycle { concept_id: String },
    #[error("unknown concept {0:?}")]
    UnknownConcept(String),
    #[error("source mismatch: {a} is {a_source}, {b} is {b_source}")]
    SourceMismatch {
        a: String,
        a_source: ConceptSource,
        b: String,
        b_source: ConceptSource,
    },
    #[error("duplicate concept {0:?} with conflicting definition")]
    DuplicateConcept(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OntologyFormat {
    OboSubset,
    TsvEdges,
}

#[derive(Debug, Clone)]
pub struct NodeInfo {
    pub label: String,
    pub source: ConceptSource,
    pub uri: String,
}

/// Transitive parents of one concept, excluding the concept itself.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AncestorSet {
    pub concept_id: String,
    pub ancestors: BTreeSet<String>,
}

/// Immutable is-a DAG over concepts from one or more sources. All queries
/// are read-only, so shared references can be used freely across threads.
#[derive(Debug, Clone, Default)]
pub struct OntologyGraph {
    nodes: BTreeMap<String, NodeInfo>,
    parents: BTreeMap<String, Vec<String>>,
}

impl OntologyGraph {
    /// Builds and validates a graph from explicit parts. Edge endpoints
    /// must exist among the nodes and the edge set must be acyclic.
    pub fn from_parts(
        nodes: Vec<(String, String, ConceptSource)>,
        edges: Vec<(String, String)>,
    ) -> Result<Self, OntologyError> {
        let mut node_map = BTreeMap::new();
        for (id, label, source) in nodes {
            let uri = concept_uri(source, &id);
            let info = NodeInfo { label, source, uri };
            if let Some(existing) = node_map.get(&id) {
                let existing: &NodeInfo = existing;
                if existing.label != info.label || existing.source != info.source {
                    return Err(OntologyError::DuplicateConcept(id));
                }
            }
            node_map.insert(id, info);
        }
        let mut parents: BTreeMap<String, Vec<String>> = BTreeMap::new();
        for (child, parent) in edges {
            if !node_map.contains_key(&child) {
                return Err(OntologyError::UnknownConcept(child));
            }
            if !node_map.contains_key(&parent) {
                return Err(OntologyError::UnknownConcept(parent));
            }
            let list = parents.entry(child).or_default();
            if !list.contains(&parent) {
                list.push(parent);
            }
        }
        for list in parents.values_mut() {
            list.sort();
        }
        let graph = OntologyGraph {
            nodes: node_map,
            parents,
        };
        graph.check_acyclic()?;
        Ok(graph)
    }

    pub fn load(
        path: impl AsRef<Path>,
        format: OntologyFormat,
        default_source: ConceptSource,
    ) -> Result<Self, OntologyError> {
        let content = std::fs::read_to_string(path)?;
        Self::parse(&content, format, default_source)
    }

    pub fn parse(
        content: &str,
        format: OntologyFormat,
        default_source: ConceptSource,
    ) -> Result<Self, OntologyError> {
        match format {
            OntologyFormat::OboSubset => Self::parse_obo(content, default_source),
            OntologyFormat::TsvEdges => Self::parse_tsv(content, default_source),
        }
    }

    fn parse_obo(content: &str, default_source: ConceptSource) -> Result<Self, OntologyError> {
        struct Stanza {
            id: Option<String>,
            name: Option<String>,
            parents: Vec<String>,
            is_term: bool,
        }
        let mut nodes: Vec<(String, String, ConceptSource)> = Vec::new();
        let mut edges: Vec<(String, String)> = Vec::new();
        let mut mentioned: Vec<String> = Vec::new();
        let mut stanza: Option<Stanza> = None;

        let mut flush = |stanza: Option<Stanza>, line: usize| -> Result<(), OntologyError> {
            let Some(s) = stanza else { return Ok(()) };
            if !s.is_term {
                return Ok(());
            }
            let id = s.id.ok_or(OntologyError::Parse {
                line,
                message: "[Term] stanza without id".into(),
            })?;
            let label = s.name.unwrap_or_else(|| id.clone());
            let source = source_from_concept_id(&id).unwrap_or(default_source);
            nodes.push((id.clone(), label, source));
            for parent in s.parents {
                mentioned.push(parent.clone());
                edges.push((id.clone(), parent));
            }
            Ok(())
        };

        for (lineno, raw) in content.lines().enumerate() {
            let line = raw.trim();
            if line.starts_with('[') {
                flush(stanza.take(), lineno)?;
                stanza = Some(Stanza {
                    id: None,
                    name: None,
                    parents: Vec::new(),
                    is_term: line == "[Term]",
                });
                continue;
            }
            let Some(s) = stanza.as_mut() else { continue };
            if let Some(rest) = line.strip_prefix("id:") {
                let id = rest.trim();
                if id.is_empty() {
                    return Err(OntologyError::Parse {
                        line: lineno + 1,
                        message: "empty id".into(),
                    });
                }
                s.id = Some(id.to_string());
            } else if let Some(rest) = line.strip_prefix("name:") {
                s.name = Some(rest.trim().to_string());
            } else if let Some(rest) = line.strip_prefix("is_a:") {
                // strip trailing "! <comment>"
                let target = rest.split('!').next().unwrap_or("").trim();
                if target.is_empty() {
                    return Err(OntologyError::Parse {
                        line: lineno + 1,
                        message: "is_a without target".into(),
                    });
                }
                s.parents.push(target.to_string());
            }
            // unknown lines ignored
        }
        flush(stanza.take(), content.lines().count())?;

        // parents referenced but never declared become label-less nodes
        let declared: BTreeSet<&String> = nodes.iter().map(|(id, _, _)| id).collect();
        let missing: Vec<String> = mentioned
            .into_iter()
            .filter(|id| !declared.contains(id))
            .collect();
        for id in missing {
            let source = source_from_concept_id(&id).unwrap_or(default_source);
            if !nodes.iter().any(|(n, _, _)| n == &id) {
                nodes.push((id.clone(), id.clone(), source));
            }
        }
        Self::from_parts(nodes, edges)
    }

    fn parse_tsv(content: &str, default_source: ConceptSource) -> Result<Self, OntologyError> {
        let mut nodes: Vec<(String, String, ConceptSource)> = Vec::new();
        let mut seen: BTreeSet<String> = BTreeSet::new();
        let mut edges = Vec::new();
        for (lineno, raw) in content.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let mut fields = line.split('\t');
            let (child, parent) = match (fields.next(), fields.next(), fields.next()) {
                (Some(c), Some(p), None) if !c.trim().is_empty() && !p.trim().is_empty() => {
                    (c.trim().to_string(), p.trim().to_string())
                }
                _ => {
                    return Err(OntologyError::Parse {
                        line: lineno + 1,
                        message: format!("expected child<TAB>parent, got {raw:?}"),
                    })
                }
            };
            for id in [&child, &parent] {
                if seen.insert(id.clone()) {
                    let source = source_from_concept_id(id).unwrap_or(default_source);
                    nodes.push((id.clone(), id.clone(), source));
                }
            }
            edges.push((child, parent));
        }
        Self::from_parts(nodes, edges)
    }

    fn check_acyclic(&self) -> Result<(), OntologyError> {
        // Kahn's algorithm over child -> parent edges
        let mut out_degree: BTreeMap<&str, usize> = BTreeMap::new();
        let mut children_of: HashMap<&str, Vec<&str>> = HashMap::new();
        for id in self.nodes.keys() {
            out_degree.insert(id, 0);
        }
        for (child, parents) in &self.parents {
            *out_degree.get_mut(child.as_str()).unwrap() = parents.len();
            for p in parents {
                children_of.entry(p.as_str()).or_default().push(child);
            }
        }
        let mut queue: VecDeque<&str> = out_degree
            .iter()
            .filter(|(_, d)| **d == 0)
            .map(|(id, _)| *id)
            .collect();
        let mut removed = 0usize;
        while let Some(id) = queue.pop_front() {
            removed += 1;
            if let Some(children) = children_of.get(id) {
                for child in children {
                    let d = out_degree.get_mut(child).unwrap();
                    *d -= 1;
                    if *d == 0 {
                        queue.push_back(child);
                    }
                }
            }
        }
        if removed != self.nodes.len() {
            let on_cycle = out_degree
                .iter()
                .filter(|(_, d)| **d > 0)
                .map(|(id, _)| id.to_string())
                .next()
                .unwrap_or_default();
            return Err(OntologyError::Cycle {
                concept_id: on_cycle,
            });
        }
        Ok(())
    }

    /// Merges another graph into this one. Identical duplicate nodes are
    /// allowed; conflicting definitions are an error.
    pub fn merge(&mut self, other: OntologyGraph) -> Result<(), OntologyError> {
        for (id, info) in other.nodes {
            if let Some(existing) = self.nodes.get(&id) {
                if existing.label != info.label || existing.source != info.source {
                    return Err(OntologyError::DuplicateConcept(id));
                }
            } else {
                self.nodes.insert(id, info);
            }
        }
        for (child, parents) in other.parents {
            let list = self.parents.entry(child).or_default();
            for p in parents {
                if !list.contains(&p) {
                    list.push(p);
                }
            }
            list.sort();
        }
        self.check_acyclic()
    }

    pub fn contains(&self, id: &str) -> bool {
        self.nodes.contains_key(id)
    }

    pub fn node(&self, id: &str) -> Option<&NodeInfo> {
        self.nodes.get(id)
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn iter_nodes(&self) -> impl Iterator<Item = (&String, &NodeInfo)> {
        self.nodes.iter()
    }

    pub fn parents_of(&self, id: &str) -> &[String] {
        self.parents.get(id).map(Vec::as_slice).unwrap_or(&[])
    }

    /// Exact transitive parent set of `id`, excluding `id` itself.
    pub fn ancestors(&self, id: &str) -> Result<AncestorSet, OntologyError> {
        if !self.contains(id) {
            return Err(OntologyError::UnknownConcept(id.to_string()));
        }
        let mut ancestors = BTreeSet::new();
        let mut queue: VecDeque<&str> = VecDeque::new();
        queue.push_back(id);
        while let Some(current) = queue.pop_front() {
            for parent in self.parents_of(current) {
                if ancestors.insert(parent.clone()) {
                    queue.push_back(parent);
                }
            }
        }
        ancestors.remove(id);
        Ok(AncestorSet {
            concept_id: id.to_string(),
            ancestors,
        })
    }

    /// Shortest up-edge distance from `id` to each of its ancestors-or-self.
    fn up_distances(&self, id: &str) -> HashMap<&str, usize> {
        let mut dist: HashMap<&str, usize> = HashMap::new();
        let mut queue: VecDeque<(&str, usize)> = VecDeque::new();
        let (key, _) = self.nodes.get_key_value(id).expect("caller checked id");
        dist.insert(key.as_str(), 0);
        queue.push_back((key.as_str(), 0));
        while let Some((current, d)) = queue.pop_front() {
            for parent in self.parents_of(current) {
                if !dist.contains_key(parent.as_str()) {
                    dist.insert(parent.as_str(), d + 1);
                    queue.push_back((parent.as_str(), d + 1));
                }
            }
        }
        dist
    }

    /// 1 / (1 + d) where d is the length of the shortest undirected is-a
    /// path between `a` and `b` through a common ancestor (a node may act
    /// as its own ancestor here). 0 when no common ancestor exists.
    pub fn hierarchical_similarity(&self, a: &str, b: &str) -> Result<f64, OntologyError> {
        let na = self
            .node(a)
            .ok_or_else(|| OntologyError::UnknownConcept(a.to_string()))?;
        let nb = self
            .node(b)
            .ok_or_else(|| OntologyError::UnknownConcept(b.to_string()))?;
        if na.source != nb.source {
            return Err(OntologyError::SourceMismatch {
                a: a.to_string(),
                a_source: na.source,
                b: b.to_string(),
                b_source: nb.source,
            });
        }
        let da = self.up_distances(a);
        let db = self.up_distances(b);
        let mut best: Option<usize> = None;
        for (node, &d1) in &da {
            if let Some(&d2) = db.get(node) {
                let total = d1 + d2;
                best = Some(best.map_or(total, |b| b.min(total)));
            }
        }
        Ok(match best {
            Some(d) => 1.0 / (1.0 + d as f64),
            None => 0.0,
        })
    }

    /// Similarity for evaluator use: unknown concepts and cross-source
    /// pairs contribute 0 instead of erroring.
    pub fn similarity_or_zero(&self, a: &str, b: &str) -> f64 {
        match (self.node(a), self.node(b)) {
            (Some(na), Some(nb)) if na.source == nb.source => {
                self.hierarchical_similarity(a, b).unwrap_or(0.0)
            }
            _ => 0.0,
        }
    }
}

/// True iff the annotation came from the MeSH vocabulary.
pub fn is_mesh(annotation: &ConceptAnnotation) -> bool {
    annotation.source == ConceptSource::Mesh
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn chain() -> OntologyGraph {
        // A <- B <- C
        OntologyGraph::from_parts(
            vec![
                ("A".into(), "a".into(), ConceptSource::Mesh),
                ("B".into(), "b".into(), ConceptSource::Mesh),
                ("C".into(), "c".into(), ConceptSource::Mesh),
            ],
            vec![("B".into(), "A".into()), ("C".into(), "B".into())],
        )
        .unwrap()
    }

    #[test]
    fn tsv_two_children() {
        let g = OntologyGraph::parse("B\tA\nC\tA\n", OntologyFormat::TsvEdges, ConceptSource::Go)
            .unwrap();
        assert_eq!(g.len(), 3);
        assert!(g.ancestors("B").unwrap().ancestors.contains("A"));
        assert!(g.ancestors("A").unwrap().ancestors.is_empty());
    }

    #[test]
    fn tsv_two_cycle_rejected() {
        let err = OntologyGraph::parse("A\tB\nB\tA\n", OntologyFormat::TsvEdges, ConceptSource::Go)
            .unwrap_err();
        assert!(matches!(err, OntologyError::Cycle { .. }));
    }

    #[test]
    fn tsv_malformed_line_reports_number() {
        let err = OntologyGraph::parse(
            "B\tA\nnot a pair\n",
            OntologyFormat::TsvEdges,
            ConceptSource::Go,
        )
        .unwrap_err();
        match err {
            OntologyError::Parse { line, .. } => assert_eq!(line, 2),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn obo_subset_parses_terms_and_is_a() {
        let obo = "\
format-version: 1.2

[Term]
id: CHEBI:1
name: chemical entity

[Term]
id: CHEBI:2
name: drug
is_a: CHEBI:1 ! chemical entity
xref: something-ignored

[Typedef]
id: part_of
";
        let g = OntologyGraph::parse(obo, OntologyFormat::OboSubset, ConceptSource::Chebi).unwrap();
        assert_eq!(g.len(), 2);
        assert_eq!(g.node("CHEBI:2").unwrap().label, "drug");
        assert_eq!(g.node("CHEBI:2").unwrap().source, ConceptSource::Chebi);
        assert_eq!(
            g.ancestors("CHEBI:2").unwrap().ancestors,
            BTreeSet::from(["CHEBI:1".to_string()])
        );
    }

    #[test]
    fn ancestors_of_root_and_chain() {
        let g = chain();
        assert!(g.ancestors("A").unwrap().ancestors.is_empty());
        assert_eq!(
            g.ancestors("C").unwrap().ancestors,
            BTreeSet::from(["A".to_string(), "B".to_string()])
        );
        assert!(matches!(
            g.ancestors("Z"),
            Err(OntologyError::UnknownConcept(_))
        ));
    }

    #[test]
    fn similarity_identity_and_siblings() {
        let g = OntologyGraph::from_parts(
            vec![
                ("P".into(), "p".into(), ConceptSource::Mesh),
                ("X".into(), "x".into(), ConceptSource::Mesh),
                ("Y".into(), "y".into(), ConceptSource::Mesh),
            ],
            vec![("X".into(), "P".into()), ("Y".into(), "P".into())],
        )
        .unwrap();
        assert_eq!(g.hierarchical_similarity("X", "X").unwrap(), 1.0);
        let sib = g.hierarchical_similarity("X", "Y").unwrap();
        assert!((sib - 1.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn similarity_cross_source_errors_but_helper_zeroes() {
        let g = OntologyGraph::from_parts(
            vec![
                ("M:1".into(), "m".into(), ConceptSource::Mesh),
                ("G:1".into(), "g".into(), ConceptSource::Go),
            ],
            vec![],
        )
        .unwrap();
        assert!(matches!(
            g.hierarchical_similarity("M:1", "G:1"),
            Err(OntologyError::SourceMismatch { .. })
        ));
        assert_eq!(g.similarity_or_zero("M:1", "G:1"), 0.0);
        assert_eq!(g.similarity_or_zero("M:1", "nope"), 0.0);
    }

    #[test]
    fn disconnected_pair_scores_zero() {
        let g = OntologyGraph::from_parts(
            vec![
                ("A".into(), "a".into(), ConceptSource::Mesh),
                ("B".into(), "b".into(), ConceptSource::Mesh),
            ],
            vec![],
        )
        .unwrap();
        assert_eq!(g.hierarchical_similarity("A", "B").unwrap(), 0.0);
    }

    #[test]
    fn is_mesh_filter() {
        let mk = |source| ConceptAnnotation {
            concept_id: "X".into(),
            concept_uri: "u".into(),
            label: "l".into(),
            source,
            span_begin: 0,
            span_end: 1,
            score: 1.0,
        };
        assert!(is_mesh(&mk(ConceptSource::Mesh)));
        assert!(!is_mesh(&mk(ConceptSource::Go)));
        let mixed: Vec<_> = [
            ConceptSource::Mesh,
            ConceptSource::Go,
            ConceptSource::Mesh,
            ConceptSource::Chebi,
        ]
        .into_iter()
        .map(mk)
        .collect();
        let kept: Vec<_> = mixed.iter().filter(|a| is_mesh(a)).collect();
        assert_eq!(kept.len(), 2);
    }

    /// Random DAG over ids n0..n{size-1} where edges only point from
    /// higher to lower indices, which guarantees acyclicity.
    pub(crate) fn random_dag(rng: &mut ChaCha8Rng, size: usize, edge_prob: f64) -> OntologyGraph {
        let nodes: Vec<(String, String, ConceptSource)> = (0..size)
            .map(|i| (format!("n{i}"), format!("node {i}"), ConceptSource::Mesh))
            .collect();
        let mut edges = Vec::new();
        for child in 1..size {
            for parent in 0..child {
                if rng.gen_bool(edge_prob) {
                    edges.push((format!("n{child}"), format!("n{parent}")));
                }
            }
        }
        OntologyGraph::from_parts(nodes, edges).unwrap()
    }

    /// Oracle: transitive-closure ancestors by iterating until fixpoint.
    fn closure_ancestors(g: &OntologyGraph, id: &str) -> BTreeSet<String> {
        let mut set: BTreeSet<String> = g.parents_of(id).iter().cloned().collect();
        loop {
            let mut grew = false;
            for a in set.clone() {
                for p in g.parents_of(&a) {
                    if set.insert(p.clone()) {
                        grew = true;
                    }
                }
            }
            if !grew {
                break;
            }
        }
        set.remove(id);
        set
    }

    /// Oracle: recursive up-distance with memoization, a different
    /// traversal than the BFS in the implementation. Sound because the
    /// graph is a DAG.
    fn oracle_updist(g: &OntologyGraph, from: &str, to: &str) -> Option<usize> {
        fn rec(
            g: &OntologyGraph,
            from: &str,
            to: &str,
            memo: &mut HashMap<String, Option<usize>>,
        ) -> Option<usize> {
            if from == to {
                return Some(0);
            }
            if let Some(v) = memo.get(from) {
                return *v;
            }
            let parents: Vec<String> = g.parents_of(from).to_vec();
            let best = parents
                .iter()
                .filter_map(|p| rec(g, p, to, memo))
                .min()
                .map(|d| d + 1);
            memo.insert(from.to_string(), best);
            best
        }
        rec(g, from, to, &mut HashMap::new())
    }

    fn oracle_similarity(g: &OntologyGraph, a: &str, b: &str) -> f64 {
        let ids: Vec<String> = g.iter_nodes().map(|(id, _)| id.clone()).collect();
        let mut best: Option<usize> = None;
        for c in &ids {
            if let (Some(d1), Some(d2)) = (oracle_updist(g, a, c), oracle_updist(g, b, c)) {
                let total = d1 + d2;
                best = Some(best.map_or(total, |x| x.min(total)));
            }
        }
        match best {
            Some(d) => 1.0 / (1.0 + d as f64),
            None => 0.0,
        }
    }

    #[test]
    fn ancestors_match_closure_oracle_on_random_dags() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..25 {
            let size = rng.gen_range(2..=30);
            let g = random_dag(&mut rng, size, 0.15);
            for i in 0..size {
                let id = format!("n{i}");
                assert_eq!(g.ancestors(&id).unwrap().ancestors, closure_ancestors(&g, &id));
            }
        }
    }

    #[test]
    fn similarity_matches_path_oracle_on_random_dags() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..25 {
            let size = rng.gen_range(2..=20);
            let g = random_dag(&mut rng, size, 0.2);
            for _ in 0..10 {
                let a = format!("n{}", rng.gen_range(0..size));
                let b = format!("n{}", rng.gen_range(0..size));
                let got = g.hierarchical_similarity(&a, &b).unwrap();
                let want = oracle_similarity(&g, &a, &b);
                assert!((got - want).abs() < 1e-12, "{a} vs {b}: {got} != {want}");
            }
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(40))]

        #[test]
        fn similarity_symmetric_bounded(seed in 0u64..500) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let size = rng.gen_range(2..=15);
            let g = random_dag(&mut rng, size, 0.25);
            let a = format!("n{}", rng.gen_range(0..size));
            let b = format!("n{}", rng.gen_range(0..size));
            let ab = g.hierarchical_similarity(&a, &b).unwrap();
            let ba = g.hierarchical_similarity(&b, &a).unwrap();
            prop_assert_eq!(ab, ba);
            prop_assert!((0.0..=1.0).contains(&ab));
            prop_assert_eq!(g.hierarchical_similarity(&a, &a).unwrap(), 1.0);
        }

        #[test]
        fn adding_edge_never_decreases_similarity(seed in 0u64..200) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let size = rng.gen_range(3..=12);
            let g = random_dag(&mut rng, size, 0.15);
            // candidate new edge child -> parent with child index > parent index
            let child = rng.gen_range(1..size);
            let parent = rng.gen_range(0..child);
            let mut nodes = Vec::new();
            for (id, info) in g.iter_nodes() {
                nodes.push((id.clone(), info.label.clone(), info.source));
            }
            let mut edges = Vec::new();
            for (id, _) in g.iter_nodes() {
                for p in g.parents_of(id) {
                    edges.push((id.clone(), p.clone()));
                }
            }
            edges.push((format!("n{child}"), format!("n{parent}")));
            let g2 = OntologyGraph::from_parts(nodes, edges).unwrap();
            for _ in 0..8 {
                let a = format!("n{}", rng.gen_range(0..size));
                let b = format!("n{}", rng.gen_range(0..size));
                let before = g.hierarchical_similarity(&a, &b).unwrap();
                let after = g2.hierarchical_similarity(&a, &b).unwrap();
                prop_assert!(after >= before - 1e-15);
            }
        }

        #[test]
        fn parent_ancestor_subset(seed in 0u64..200) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let size = rng.gen_range(2..=15);
            let g = random_dag(&mut rng, size, 0.25);
            for (id, _) in g.iter_nodes() {
                let anc_x = g.ancestors(id).unwrap().ancestors;
                for parent in g.parents_of(id) {
                    let mut anc_y = g.ancestors(parent).unwrap().ancestors;
                    anc_y.insert(parent.clone());
                    prop_assert!(anc_y.is_subset(&anc_x));
                }
            }
        }
    }
}
