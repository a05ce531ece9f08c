//! Directed scene graph over abstracted instances, with incremental
//! re-derivation of edges for changed instances.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::abstraction::AbstractedInstance;
use crate::relations::{relations_for_pair, Relation, RelationThresholds};
use crate::semantic_map::InstanceId;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GraphError {
    #[error("duplicate instance id {0}")]
    DuplicateInstanceId(InstanceId),
    #[error("unsupported export format `{0}`")]
    UnsupportedFormat(String),
    #[error("malformed graph document: {0}")]
    Malformed(String),
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct SceneGraph {
    pub nodes: BTreeMap<InstanceId, AbstractedInstance>,
    pub edges: BTreeSet<Relation>,
    pub version: u64,
}

impl SceneGraph {
    pub fn node(&self, id: InstanceId) -> Option<&AbstractedInstance> {
        self.nodes.get(&id)
    }

    pub fn edges_from(&self, id: InstanceId) -> impl Iterator<Item = &Relation> {
        self.edges.iter().filter(move |e| e.subject == id)
    }

    pub fn edges_between(&self, subject: InstanceId, object: InstanceId) -> impl Iterator<Item = &Relation> {
        let lo = Relation {
            subject,
            object,
            label: crate::relations::RelationLabel::ALL[0],
        };
        self.edges
            .range(lo..)
            .take_while(move |e| e.subject == subject && e.object == object)
    }

    pub fn with_version(mut self, version: u64) -> Self {
        self.version = version;
        self
    }
}

fn index_instances(instances: &[AbstractedInstance]) -> Result<BTreeMap<InstanceId, AbstractedInstance>, GraphError> {
    let mut nodes = BTreeMap::new();
    for inst in instances {
        if nodes.insert(inst.instance_id, inst.clone()).is_some() {
            return Err(GraphError::DuplicateInstanceId(inst.instance_id));
        }
    }
    Ok(nodes)
}

/// Evaluates every unordered pair once; `relations_for_pair` covers both
/// directions.
pub fn build_graph(instances: &[AbstractedInstance], th: &RelationThresholds) -> Result<SceneGraph, GraphError> {
    let nodes = index_instances(instances)?;
    let list: Vec<&AbstractedInstance> = nodes.values().collect();
    let mut edges = BTreeSet::new();
    for (i, a) in list.iter().enumerate() {
        for b in &list[i + 1..] {
            edges.extend(relations_for_pair(a, b, th));
        }
    }
    Ok(SceneGraph { nodes, edges, version: 0 })
}

/// Produces the graph for `instances`, re-deriving only edges incident to
/// `changed` instances. Ids that appear or disappear between the previous
/// graph and `instances` are treated as changed too.
pub fn update_graph(
    graph: &SceneGraph,
    changed: &BTreeSet<InstanceId>,
    instances: &[AbstractedInstance],
    th: &RelationThresholds,
) -> Result<SceneGraph, GraphError> {
    let nodes = index_instances(instances)?;
    let mut dirty: BTreeSet<InstanceId> = changed.clone();
    dirty.extend(nodes.keys().filter(|id| !graph.nodes.contains_key(id)));
    dirty.extend(graph.nodes.keys().filter(|id| !nodes.contains_key(id)));

    let mut edges: BTreeSet<Relation> = graph
        .edges
        .iter()
        .filter(|e| !dirty.contains(&e.subject) && !dirty.contains(&e.object))
        .copied()
        .collect();

    for id in dirty.iter().filter(|id| nodes.contains_key(id)) {
        let a = &nodes[id];
        for (other_id, b) in &nodes {
            // Pairs of two dirty nodes are handled once, from the smaller id.
            if other_id == id || (dirty.contains(other_id) && other_id < id) {
                continue;
            }
            edges.extend(relations_for_pair(a, b, th));
        }
    }

    Ok(SceneGraph {
        nodes,
        edges,
        version: graph.version + 1,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExportFormat {
    Dot,
    Structured,
}

impl FromStr for ExportFormat {
    type Err = GraphError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "dot" => Ok(ExportFormat::Dot),
            "structured" | "json" => Ok(ExportFormat::Structured),
            other => Err(GraphError::UnsupportedFormat(other.to_string())),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct NodeDoc {
    id: String,
    kind: String,
    category: String,
    affordances: Vec<String>,
    instance: AbstractedInstance,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct EdgeDoc {
    sub: String,
    obj: String,
    rel: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct GraphDoc {
    version: u64,
    nodes: Vec<NodeDoc>,
    edges: Vec<EdgeDoc>,
}

pub fn export_graph(graph: &SceneGraph, format: ExportFormat) -> String {
    match format {
        ExportFormat::Dot => export_dot(graph),
        ExportFormat::Structured => export_structured(graph),
    }
}

fn escape_dot(s: &str) -> String {
    s.replace('\\', "\\\\").replace('"', "\\\"")
}

fn export_dot(graph: &SceneGraph) -> String {
    let mut out = String::new();
    writeln!(out, "digraph scene {{").unwrap();
    for (id, node) in &graph.nodes {
        let mut label = format!("{id}: {}", node.category);
        if !node.attributes.is_empty() {
            let attrs: Vec<&str> = node.attributes.iter().map(|a| a.as_str()).collect();
            write!(label, "\\n[{}]", attrs.join(", ")).unwrap();
        }
        writeln!(out, "    n{id} [label=\"{}\"];", escape_dot(&label)).unwrap();
    }
    for e in &graph.edges {
        writeln!(out, "    n{} -> n{} [label=\"{}\"];", e.subject, e.object, e.label).unwrap();
    }
    writeln!(out, "}}").unwrap();
    out
}

fn export_structured(graph: &SceneGraph) -> String {
    let doc = GraphDoc {
        version: graph.version,
        nodes: graph
            .nodes
            .values()
            .map(|n| NodeDoc {
                id: n.instance_id.to_string(),
                kind: "real".into(),
                category: n.category.clone(),
                affordances: n.attributes.iter().map(|a| a.as_str().to_string()).collect(),
                instance: n.clone(),
            })
            .collect(),
        edges: graph
            .edges
            .iter()
            .map(|e| EdgeDoc {
                sub: e.subject.to_string(),
                obj: e.object.to_string(),
                rel: e.label.as_str().to_string(),
            })
            .collect(),
    };
    let mut s = serde_json::to_string_pretty(&doc).expect("graph document serializes");
    s.push('\n');
    s
}

/// Parses the structured form produced by [`export_graph`].
pub fn parse_structured(text: &str) -> Result<SceneGraph, GraphError> {
    let doc: GraphDoc = serde_json::from_str(text).map_err(|e| GraphError::Malformed(e.to_string()))?;
    let mut nodes = BTreeMap::new();
    for n in doc.nodes {
        let id: InstanceId = n
            .id
            .parse()
            .map_err(|_| GraphError::Malformed(format!("node id `{}` is not an instance id", n.id)))?;
        if id != n.instance.instance_id {
            return Err(GraphError::Malformed(format!("node id {id} disagrees with its instance")));
        }
        if nodes.insert(id, n.instance).is_some() {
            return Err(GraphError::DuplicateInstanceId(id));
        }
    }
    let mut edges = BTreeSet::new();
    for e in doc.edges {
        let parse_id = |s: &str| -> Result<InstanceId, GraphError> {
            let id: InstanceId = s.parse().map_err(|_| GraphError::Malformed(format!("bad edge endpoint `{s}`")))?;
            if nodes.contains_key(&id) {
                Ok(id)
            } else {
                Err(GraphError::Malformed(format!("edge endpoint {id} is not a node")))
            }
        };
        let subject = parse_id(&e.sub)?;
        let object = parse_id(&e.obj)?;
        if subject == object {
            return Err(GraphError::Malformed(format!("self edge on {subject}")));
        }
        let label = e.rel.parse().map_err(|err: crate::relations::RelationError| GraphError::Malformed(err.to_string()))?;
        edges.insert(Relation { subject, object, label });
    }
    Ok(SceneGraph {
        nodes,
        edges,
        version: doc.version,
    })
}
