//! Designer-authored context graphs: content nodes attached by action edges
//! to real objects, plus the real-only pattern derived from them.
//!
//! Document format:
//!
//! ```json
//! {"nodes": [{"id": "chair", "kind": "real", "category": "chair", "affordances": ["sittable"]},
//!            {"id": "character", "kind": "content", "category": "character"}],
//!  "edges": [{"sub": "character", "obj": "chair", "rel": "sitting_on"}]}
//! ```

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::abstraction::AbstractionConfig;
use crate::relations::RelationLabel;
use crate::semantic_map::Affordance;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ContentError {
    #[error("schema error: {0}")]
    SchemaError(String),
    #[error("unknown relation `{0}`")]
    UnknownRelation(String),
    #[error("unknown affordance `{0}`")]
    UnknownAffordance(String),
    #[error("edge {sub} -> {obj} references undeclared node `{missing}`")]
    DanglingEdge { sub: String, obj: String, missing: String },
    #[error("context graph has no real nodes to match")]
    EmptyMatchingGraph,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ActionLabel {
    SittingOn,
    StandingOn,
    PlacedOn,
    Pushing,
    LeaningOn,
    Opening,
}

impl ActionLabel {
    pub const ALL: [ActionLabel; 6] = [
        ActionLabel::SittingOn,
        ActionLabel::StandingOn,
        ActionLabel::PlacedOn,
        ActionLabel::Pushing,
        ActionLabel::LeaningOn,
        ActionLabel::Opening,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ActionLabel::SittingOn => "sitting_on",
            ActionLabel::StandingOn => "standing_on",
            ActionLabel::PlacedOn => "placed_on",
            ActionLabel::Pushing => "pushing",
            ActionLabel::LeaningOn => "leaning_on",
            ActionLabel::Opening => "opening",
        }
    }

    /// Affordance the action expects on its target.
    pub fn implied_affordance(self) -> Affordance {
        match self {
            ActionLabel::SittingOn => Affordance::Sittable,
            ActionLabel::StandingOn | ActionLabel::PlacedOn => Affordance::Supportable,
            ActionLabel::Pushing => Affordance::Pushable,
            ActionLabel::LeaningOn => Affordance::Leanable,
            ActionLabel::Opening => Affordance::Openable,
        }
    }

    /// Whether the resulting pose takes its heading from the target's front.
    pub fn needs_front(self) -> bool {
        matches!(self, ActionLabel::SittingOn)
    }
}

impl fmt::Display for ActionLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ActionLabel {
    type Err = ContentError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        ActionLabel::ALL
            .into_iter()
            .find(|a| a.as_str() == s)
            .ok_or_else(|| ContentError::UnknownRelation(s.to_string()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum EdgeLabel {
    Relation(RelationLabel),
    Action(ActionLabel),
}

impl EdgeLabel {
    pub fn as_str(self) -> &'static str {
        match self {
            EdgeLabel::Relation(r) => r.as_str(),
            EdgeLabel::Action(a) => a.as_str(),
        }
    }
}

impl FromStr for EdgeLabel {
    type Err = ContentError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if let Ok(r) = s.parse::<RelationLabel>() {
            return Ok(EdgeLabel::Relation(r));
        }
        s.parse::<ActionLabel>().map(EdgeLabel::Action)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NodeKind {
    Real,
    Content,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ContentNode {
    pub id: String,
    pub kind: NodeKind,
    pub category: String,
    pub required_affordances: BTreeSet<Affordance>,
    /// Reserved for richer constraints; not used for matching.
    pub attributes: BTreeMap<String, serde_json::Value>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ContentEdge {
    pub sub: String,
    pub obj: String,
    pub label: EdgeLabel,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ContentGraph {
    pub nodes: Vec<ContentNode>,
    pub edges: Vec<ContentEdge>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MatchEdge {
    pub sub: String,
    pub obj: String,
    pub label: RelationLabel,
}

/// Real-node pattern searched for in the scene graph.
#[derive(Debug, Clone, PartialEq)]
pub struct MatchingGraph {
    pub nodes: Vec<ContentNode>,
    pub edges: Vec<MatchEdge>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct NodeDoc {
    id: String,
    kind: String,
    #[serde(default)]
    category: String,
    #[serde(default)]
    affordances: Vec<String>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    attributes: BTreeMap<String, serde_json::Value>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct EdgeDoc {
    sub: String,
    obj: String,
    rel: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct GraphDoc {
    nodes: Vec<NodeDoc>,
    #[serde(default)]
    edges: Vec<EdgeDoc>,
}

impl ContentGraph {
    pub fn node(&self, id: &str) -> Option<&ContentNode> {
        self.nodes.iter().find(|n| n.id == id)
    }

    pub fn content_nodes(&self) -> impl Iterator<Item = &ContentNode> {
        self.nodes.iter().filter(|n| n.kind == NodeKind::Content)
    }

    pub fn action_edges_from<'a>(&'a self, content_id: &'a str) -> impl Iterator<Item = (&'a ContentEdge, ActionLabel)> + 'a {
        self.edges.iter().filter_map(move |e| match e.label {
            EdgeLabel::Action(a) if e.sub == content_id => Some((e, a)),
            _ => None,
        })
    }

    pub fn to_document(&self) -> String {
        let doc = GraphDoc {
            nodes: self
                .nodes
                .iter()
                .map(|n| NodeDoc {
                    id: n.id.clone(),
                    kind: match n.kind {
                        NodeKind::Real => "real".into(),
                        NodeKind::Content => "content".into(),
                    },
                    category: n.category.clone(),
                    affordances: n.required_affordances.iter().map(|a| a.as_str().to_string()).collect(),
                    attributes: n.attributes.clone(),
                })
                .collect(),
            edges: self
                .edges
                .iter()
                .map(|e| EdgeDoc {
                    sub: e.sub.clone(),
                    obj: e.obj.clone(),
                    rel: e.label.as_str().to_string(),
                })
                .collect(),
        };
        let mut s = serde_json::to_string_pretty(&doc).expect("content document serializes");
        s.push('\n');
        s
    }
}

pub fn parse_content_graph(text: &str) -> Result<ContentGraph, ContentError> {
    let doc: GraphDoc = serde_json::from_str(text).map_err(|e| ContentError::SchemaError(e.to_string()))?;

    let mut nodes = Vec::with_capacity(doc.nodes.len());
    let mut kinds: BTreeMap<String, NodeKind> = BTreeMap::new();
    for n in doc.nodes {
        let kind = match n.kind.as_str() {
            "real" => NodeKind::Real,
            "content" => NodeKind::Content,
            other => return Err(ContentError::SchemaError(format!("node `{}` has unknown kind `{other}`", n.id))),
        };
        if n.id.is_empty() {
            return Err(ContentError::SchemaError("empty node id".into()));
        }
        if kind == NodeKind::Real && n.category.is_empty() {
            return Err(ContentError::SchemaError(format!("real node `{}` needs a category", n.id)));
        }
        if kinds.insert(n.id.clone(), kind).is_some() {
            return Err(ContentError::SchemaError(format!("duplicate node id `{}`", n.id)));
        }
        let required_affordances = n
            .affordances
            .iter()
            .map(|a| a.parse::<Affordance>().map_err(|_| ContentError::UnknownAffordance(a.clone())))
            .collect::<Result<_, _>>()?;
        nodes.push(ContentNode {
            id: n.id,
            kind,
            category: n.category,
            required_affordances,
            attributes: n.attributes,
        });
    }
    if !kinds.values().any(|k| *k == NodeKind::Content) {
        return Err(ContentError::SchemaError("no content node".into()));
    }

    let mut edges = Vec::with_capacity(doc.edges.len());
    for e in doc.edges {
        let label: EdgeLabel = e.rel.parse()?;
        let kind_of = |id: &str| {
            kinds.get(id).copied().ok_or_else(|| ContentError::DanglingEdge {
                sub: e.sub.clone(),
                obj: e.obj.clone(),
                missing: id.to_string(),
            })
        };
        let (sk, ok) = (kind_of(&e.sub)?, kind_of(&e.obj)?);
        if e.sub == e.obj {
            return Err(ContentError::SchemaError(format!("self edge on `{}`", e.sub)));
        }
        match label {
            EdgeLabel::Action(_) if sk != NodeKind::Content || ok != NodeKind::Real => {
                return Err(ContentError::SchemaError(format!(
                    "action edge {} -> {} must run from a content node to a real node",
                    e.sub, e.obj
                )));
            }
            EdgeLabel::Relation(_) if sk != NodeKind::Real || ok != NodeKind::Real => {
                return Err(ContentError::SchemaError(format!(
                    "relation edge {} -> {} must join two real nodes",
                    e.sub, e.obj
                )));
            }
            _ => {}
        }
        edges.push(ContentEdge { sub: e.sub, obj: e.obj, label });
    }
    Ok(ContentGraph { nodes, edges })
}

/// Drops content nodes and every edge that is not real-to-real.
fn strip_content(nodes: &[ContentNode], edges: &[ContentEdge]) -> (Vec<ContentNode>, Vec<MatchEdge>) {
    let real: BTreeSet<&str> = nodes
        .iter()
        .filter(|n| n.kind == NodeKind::Real)
        .map(|n| n.id.as_str())
        .collect();
    let kept_nodes = nodes.iter().filter(|n| n.kind == NodeKind::Real).cloned().collect();
    let kept_edges = edges
        .iter()
        .filter_map(|e| match e.label {
            EdgeLabel::Relation(label) if real.contains(e.sub.as_str()) && real.contains(e.obj.as_str()) => {
                Some(MatchEdge {
                    sub: e.sub.clone(),
                    obj: e.obj.clone(),
                    label,
                })
            }
            _ => None,
        })
        .collect();
    (kept_nodes, kept_edges)
}

pub fn derive_matching_graph(g: &ContentGraph) -> Result<MatchingGraph, ContentError> {
    let (nodes, edges) = strip_content(&g.nodes, &g.edges);
    if nodes.is_empty() {
        return Err(ContentError::EmptyMatchingGraph);
    }
    Ok(MatchingGraph { nodes, edges })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Severity {
    Advisory,
    Warning,
    Error,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Diagnostic {
    pub severity: Severity,
    pub node: String,
    pub message: String,
}

/// Categories that usually carry a given affordance.
fn typical_categories(affordance: Affordance) -> &'static [&'static str] {
    match affordance {
        Affordance::Sittable => &["chair", "sofa", "bed", "toilet", "otherfurniture"],
        Affordance::Supportable => &["table", "bed", "bookshelf", "cabinet", "desk", "counter", "otherfurniture"],
        Affordance::Pushable => &["remote", "tv", "refrigerator", "sink", "toilet"],
        Affordance::Openable => &["refrigerator", "cabinet", "door", "sink", "toilet"],
        Affordance::Leanable => &["chair", "sofa"],
    }
}

pub fn validate_content_graph(g: &ContentGraph, config: &AbstractionConfig) -> Vec<Diagnostic> {
    let mut out = Vec::new();
    for content in g.content_nodes() {
        let actions: Vec<_> = g.action_edges_from(&content.id).collect();
        if actions.is_empty() {
            out.push(Diagnostic {
                severity: Severity::Error,
                node: content.id.clone(),
                message: "content node has no action edge".into(),
            });
        }
        for (edge, action) in actions {
            let Some(target) = g.node(&edge.obj) else { continue };
            if action.needs_front() && config.frontless_categories.contains(&target.category) {
                out.push(Diagnostic {
                    severity: Severity::Warning,
                    node: target.id.clone(),
                    message: format!(
                        "`{action}` takes its heading from the target's front, but `{}` is frontless",
                        target.category
                    ),
                });
            }
            let implied = action.implied_affordance();
            if !target.required_affordances.contains(&implied)
                && !typical_categories(implied).contains(&target.category.as_str())
            {
                out.push(Diagnostic {
                    severity: Severity::Advisory,
                    node: target.id.clone(),
                    message: format!(
                        "`{action}` prefers a {implied} target; `{}` is not expected to have one",
                        target.category
                    ),
                });
            }
        }
    }
    out
}
