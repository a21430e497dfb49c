//! Change-impact analysis: builds the dependency graph of artifacts
//! potentially affected by a change to one root entity, and answers the
//! transitive dependency question the run-time detectors rely on.
//!
//! # Design
//!
//! - A BDR is directed *target ← source*: the source artifact depends on
//!   the target. Impact therefore propagates against the arrows — from a
//!   changed artifact to everything whose BDR target it (transitively) is.
//! - Construction traverses Copy, InformationSharing and Concept edges
//!   only. ExistTogether edges are deliberately *not* followed: pulling a
//!   diagram's members in alongside the diagram would dissolve the
//!   composite-activity mechanism, which exists precisely to branch into
//!   those members on demand. [`reaches`] is broader — it walks **all**
//!   BDR kinds plus intra-diagram dependencies, because run-time conflict
//!   spread does not care how two artifacts ended up related.

use crate::model::{BdrKind, EntityId, IntraDepKind, ProjectModel};
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt::Write as _;
use thiserror::Error;

/// What relationship an edge in a [`DependencyGraph`] came from.
#[derive(
    Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize,
)]
#[serde(untagged)]
pub enum EdgeKind {
    Bdr(BdrKind),
    Intra(IntraDepKind),
}

/// One directed edge, source → target (the source depends on the target).
#[derive(
    Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize,
)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct Edge {
    pub source: EntityId,
    pub target: EntityId,
    pub kind: EdgeKind,
}

/// The artifacts potentially impacted by a change to `root`, with the
/// dependency edges that witnessed each inclusion.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct DependencyGraph {
    pub root: EntityId,
    pub vertices: BTreeSet<EntityId>,
    pub edges: BTreeSet<Edge>,
}

/// The requested change root is not an element or diagram of the model.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("unknown change root {id:?}")]
pub struct UnknownRootError {
    pub id: String,
}

/// The BDR kinds the graph construction follows.
const TRAVERSED: [BdrKind; 3] =
    [BdrKind::InformationSharing, BdrKind::Copy, BdrKind::Concept];

/// Build the dependency graph rooted at `root`.
///
/// Fixed point: starting from the root, every BDR whose target is already a
/// vertex contributes its source as a vertex and a source→target edge,
/// until nothing new appears. The result contains every traversable BDR
/// edge whose target lies inside the vertex set.
pub fn dependency_graph(
    model: &ProjectModel,
    root: &str,
) -> Result<DependencyGraph, UnknownRootError> {
    if model.entity(root).is_none() {
        return Err(UnknownRootError { id: root.to_string() });
    }

    let mut by_target: BTreeMap<&str, Vec<(&str, BdrKind)>> = BTreeMap::new();
    for bdr in &model.bdrs {
        if TRAVERSED.contains(&bdr.kind) {
            by_target
                .entry(bdr.target.as_str())
                .or_default()
                .push((bdr.source.as_str(), bdr.kind));
        }
    }

    let mut vertices: BTreeSet<EntityId> = BTreeSet::new();
    let mut edges: BTreeSet<Edge> = BTreeSet::new();
    let mut queue: VecDeque<String> = VecDeque::new();
    vertices.insert(root.to_string());
    queue.push_back(root.to_string());
    while let Some(target) = queue.pop_front() {
        for (source, kind) in by_target.get(target.as_str()).into_iter().flatten() {
            edges.insert(Edge {
                source: (*source).to_string(),
                target: target.clone(),
                kind: EdgeKind::Bdr(*kind),
            });
            if vertices.insert((*source).to_string()) {
                queue.push_back((*source).to_string());
            }
        }
    }

    Ok(DependencyGraph { root: root.to_string(), vertices, edges })
}

/// Does `from` transitively depend on `to`?
///
/// True iff a path of source→target steps over **all** BDRs and
/// intra-diagram dependencies leads from `from` to `to`. Reflexive.
#[must_use]
pub fn reaches(model: &ProjectModel, from: &str, to: &str) -> bool {
    if from == to {
        return true;
    }
    let mut by_source: BTreeMap<&str, Vec<&str>> = BTreeMap::new();
    for bdr in &model.bdrs {
        by_source.entry(bdr.source.as_str()).or_default().push(bdr.target.as_str());
    }
    for dep in &model.intra_deps {
        by_source.entry(dep.source.as_str()).or_default().push(dep.target.as_str());
    }

    let mut seen: BTreeSet<&str> = BTreeSet::new();
    let mut queue: VecDeque<&str> = VecDeque::new();
    seen.insert(from);
    queue.push_back(from);
    while let Some(node) = queue.pop_front() {
        for next in by_source.get(node).into_iter().flatten() {
            if *next == to {
                return true;
            }
            if seen.insert(next) {
                queue.push_back(next);
            }
        }
    }
    false
}

fn dot_quote(raw: &str) -> String {
    format!("\"{}\"", raw.replace('\\', "\\\\").replace('"', "\\\""))
}

fn edge_style(kind: EdgeKind) -> (&'static str, String) {
    match kind {
        EdgeKind::Bdr(BdrKind::ExistTogether) => ("dimgray", "ExistTogether".into()),
        EdgeKind::Bdr(BdrKind::InformationSharing) => {
            ("royalblue", "InformationSharing".into())
        }
        EdgeKind::Bdr(BdrKind::Copy) => ("firebrick", "Copy".into()),
        EdgeKind::Bdr(BdrKind::Concept) => ("forestgreen", "Concept".into()),
        EdgeKind::Intra(k) => ("darkorange", format!("{k:?}")),
    }
}

/// Render a graph as DOT text: one node statement per vertex (the root is
/// double-bordered), one edge statement per edge, one color per
/// relationship kind. Output is deterministic.
#[must_use]
pub fn export_dot(graph: &DependencyGraph) -> String {
    let mut out = String::from("digraph dependencies {\n  rankdir=LR;\n");
    for vertex in &graph.vertices {
        let shape = if *vertex == graph.root { "doubleoctagon" } else { "box" };
        let _ = writeln!(out, "  {} [shape={shape}];", dot_quote(vertex));
    }
    for edge in &graph.edges {
        let (color, label) = edge_style(edge.kind);
        let _ = writeln!(
            out,
            "  {} -> {} [label={}, color={color}];",
            dot_quote(&edge.source),
            dot_quote(&edge.target),
            dot_quote(&label),
        );
    }
    out.push_str("}\n");
    out
}

// ---------------------------------------------------------------------------
// Document form
// ---------------------------------------------------------------------------

/// On-disk form of a dependency graph.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct GraphDocument {
    pub schema_version: String,
    pub graph: DependencyGraph,
}

/// Parse a graph document, validating the schema version.
pub fn parse_graph(text: &str) -> Result<GraphDocument, crate::ingest::DocumentError> {
    let doc: GraphDocument =
        serde_json::from_str(text).map_err(crate::ingest::classify_json_error)?;
    crate::ingest::check_schema_version(&doc.schema_version)?;
    Ok(doc)
}

/// Serialize a graph into its document form. Deterministic: the underlying
/// sets are ordered.
#[must_use]
pub fn serialize_graph(graph: &DependencyGraph) -> String {
    let doc = GraphDocument {
        schema_version: crate::ingest::SCHEMA_VERSION.to_string(),
        graph: graph.clone(),
    };
    let mut text = serde_json::to_string_pretty(&doc).expect("graph documents serialize");
    text.push('\n');
    text
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{
        Bdr, Diagram, DiagramKind, ElementKind, IntraDependency, ModelElement, Phase,
    };

    fn bdr(target: &str, source: &str, kind: BdrKind) -> Bdr {
        Bdr { target: target.into(), source: source.into(), kind, rule_trace: vec![] }
    }

    /// One class diagram per phase, classes a/b/c, BDR chain a ← b ← c.
    fn chain_model() -> ProjectModel {
        ProjectModel {
            phases: vec![
                Phase { id: "p0".into(), name: "p0".into(), order: 0 },
                Phase { id: "p1".into(), name: "p1".into(), order: 1 },
                Phase { id: "p2".into(), name: "p2".into(), order: 2 },
            ],
            diagrams: (0..3)
                .map(|i| Diagram {
                    id: format!("D{i}"),
                    name: format!("D{i}"),
                    kind: DiagramKind::ClassDiagram,
                    phase: format!("p{i}"),
                })
                .collect(),
            elements: ["a", "b", "c"]
                .iter()
                .enumerate()
                .map(|(i, id)| ModelElement {
                    id: (*id).into(),
                    name: (*id).into(),
                    kind: ElementKind::Class,
                    classifier: None,
                    diagram: format!("D{i}"),
                })
                .collect(),
            intra_deps: vec![],
            bdrs: vec![
                bdr("a", "b", BdrKind::Concept),
                bdr("b", "c", BdrKind::Concept),
            ],
        }
    }

    #[test]
    fn test_root_without_incident_bdrs() {
        let graph = dependency_graph(&chain_model(), "c").unwrap();
        assert_eq!(graph.vertices.len(), 1);
        assert!(graph.edges.is_empty());
    }

    #[test]
    fn test_chain_closure() {
        let graph = dependency_graph(&chain_model(), "a").unwrap();
        assert_eq!(
            graph.vertices,
            ["a", "b", "c"].iter().map(|s| s.to_string()).collect()
        );
        assert_eq!(graph.edges.len(), 2);
        // Middle root picks up only its own dependants.
        let mid = dependency_graph(&chain_model(), "b").unwrap();
        assert_eq!(mid.vertices, ["b", "c"].iter().map(|s| s.to_string()).collect());
    }

    #[test]
    fn test_exist_together_is_not_traversed() {
        let mut model = chain_model();
        model.bdrs.push(bdr("a", "D0", BdrKind::ExistTogether));
        let graph = dependency_graph(&model, "a").unwrap();
        assert!(!graph.vertices.contains("D0"));
        assert!(graph.edges.iter().all(|e| e.kind != EdgeKind::Bdr(BdrKind::ExistTogether)));
    }

    #[test]
    fn test_unknown_root() {
        let err = dependency_graph(&chain_model(), "nope").unwrap_err();
        assert_eq!(err.id, "nope");
    }

    #[test]
    fn test_reaches_is_reflexive() {
        assert!(reaches(&chain_model(), "a", "a"));
    }

    #[test]
    fn test_reaches_two_step_path_over_intra_and_bdr() {
        // d6 and d4 share a diagram and d6 depends on d4 within it; d4 has a
        // BDR onto d2 in another diagram.
        let model = ProjectModel {
            phases: vec![Phase { id: "p".into(), name: "p".into(), order: 0 }],
            diagrams: vec![
                Diagram {
                    id: "DA".into(),
                    name: "DA".into(),
                    kind: DiagramKind::ClassDiagram,
                    phase: "p".into(),
                },
                Diagram {
                    id: "DB".into(),
                    name: "DB".into(),
                    kind: DiagramKind::StateChartDiagram,
                    phase: "p".into(),
                },
            ],
            elements: vec![
                ModelElement {
                    id: "d6".into(),
                    name: "Six".into(),
                    kind: ElementKind::Class,
                    classifier: None,
                    diagram: "DA".into(),
                },
                ModelElement {
                    id: "d4".into(),
                    name: "Four".into(),
                    kind: ElementKind::Class,
                    classifier: None,
                    diagram: "DA".into(),
                },
                ModelElement {
                    id: "d2".into(),
                    name: "Two".into(),
                    kind: ElementKind::State,
                    classifier: None,
                    diagram: "DB".into(),
                },
            ],
            intra_deps: vec![IntraDependency {
                target: "d4".into(),
                source: "d6".into(),
                kind: IntraDepKind::Association,
            }],
            bdrs: vec![bdr("d2", "d4", BdrKind::InformationSharing)],
        };
        assert!(reaches(&model, "d6", "d2"));
        assert!(!reaches(&model, "d2", "d6"), "steps are directed");
        assert!(!reaches(&model, "d6", "unrelated"));
    }

    #[test]
    fn test_reaches_walks_exist_together() {
        let mut model = chain_model();
        model.bdrs = vec![bdr("D0", "a", BdrKind::ExistTogether)];
        assert!(reaches(&model, "a", "D0"));
    }

    #[test]
    fn test_export_dot_chain() {
        let graph = dependency_graph(&chain_model(), "a").unwrap();
        let dot = export_dot(&graph);
        assert_eq!(dot.matches("[shape=").count(), 3);
        assert_eq!(dot.matches(" -> ").count(), 2);
        assert!(dot.contains("\"a\" [shape=doubleoctagon];"));
        assert!(dot.contains("\"b\" -> \"a\" [label=\"Concept\", color=forestgreen];"));
        assert!(dot.starts_with("digraph dependencies {"));
        assert!(dot.ends_with("}\n"));
        // Deterministic.
        assert_eq!(dot, export_dot(&graph));
    }

    #[test]
    fn test_graph_serializes_with_plain_kind_names() {
        let graph = dependency_graph(&chain_model(), "a").unwrap();
        let json = serde_json::to_string(&graph).unwrap();
        assert!(json.contains("\"kind\":\"Concept\""), "{json}");
        let back: DependencyGraph = serde_json::from_str(&json).unwrap();
        assert_eq!(back, graph);
    }

    #[test]
    fn test_graph_document_round_trip() {
        let graph = dependency_graph(&chain_model(), "a").unwrap();
        let text = serialize_graph(&graph);
        let doc = parse_graph(&text).unwrap();
        assert_eq!(doc.graph, graph);
        assert_eq!(serialize_graph(&doc.graph), text);
        assert!(parse_graph("{\"schemaVersion\":\"9\",\"graph\":null}").is_err());
    }
}
