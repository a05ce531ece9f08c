//! Embedding the real-node pattern of a context graph into the scene graph
//! and deriving content poses from the matched anchors.

use std::collections::{BTreeMap, BTreeSet};

use nalgebra::{Vector2, Vector3};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::abstraction::{AbstractedInstance, Obb};
use crate::content::{derive_matching_graph, ActionLabel, ContentGraph, ContentNode, MatchingGraph};
use crate::relations::support_surface;
use crate::scene_graph::SceneGraph;
use crate::semantic_map::{Affordance, InstanceId};

/// Injective map from pattern node id to scene instance.
pub type Embedding = BTreeMap<String, InstanceId>;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ArrangementConfig {
    /// Distance kept from pushable/openable parts.
    pub standoff: f64,
    pub limit_embeddings: usize,
}

impl Default for ArrangementConfig {
    fn default() -> Self {
        Self {
            standoff: 0.3,
            limit_embeddings: 64,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ArrangementError {
    #[error("content node `{0}` has no action edge onto a matched node")]
    MissingActionTarget(String),
    #[error("instance {anchor} has no {affordance} part")]
    MissingRequiredPart { anchor: InstanceId, affordance: Affordance },
}

/// Pose of one content node; serialized as the placement output record.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Placement {
    pub content: String,
    pub anchor: InstanceId,
    pub action: ActionLabel,
    pub position: Vector3<f64>,
    pub yaw: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Arrangement {
    pub embedding: Embedding,
    pub placements: Vec<Placement>,
}

fn node_admits(query: &ContentNode, inst: &AbstractedInstance) -> bool {
    inst.category == query.category && query.required_affordances.is_subset(&inst.attributes)
}

struct Degrees {
    out: BTreeMap<InstanceId, usize>,
    inn: BTreeMap<InstanceId, usize>,
}

fn scene_degrees(g: &SceneGraph) -> Degrees {
    let pairs: BTreeSet<(InstanceId, InstanceId)> = g.edges.iter().map(|e| (e.subject, e.object)).collect();
    let mut out = BTreeMap::new();
    let mut inn = BTreeMap::new();
    for (s, o) in pairs {
        *out.entry(s).or_insert(0) += 1;
        *inn.entry(o).or_insert(0) += 1;
    }
    Degrees { out, inn }
}

/// Whether the scene has an edge `(s, o)` that satisfies `required`.
fn scene_satisfies(g: &SceneGraph, s: InstanceId, o: InstanceId, required: crate::relations::RelationLabel) -> bool {
    g.edges_between(s, o).any(|e| e.label.satisfies(required))
}

/// Enumerates embeddings of `q` into `g`, in lexicographic order of the
/// instance ids taken in query-node-id order, stopping after `limit`.
pub fn find_embeddings(g: &SceneGraph, q: &MatchingGraph, limit: usize) -> Vec<Embedding> {
    let mut order: Vec<&ContentNode> = q.nodes.iter().collect();
    order.sort_by(|a, b| a.id.cmp(&b.id));
    let slot: BTreeMap<&str, usize> = order.iter().enumerate().map(|(i, n)| (n.id.as_str(), i)).collect();

    let mut q_out = vec![BTreeSet::new(); order.len()];
    let mut q_in = vec![BTreeSet::new(); order.len()];
    // Constraints checked when the later of the two endpoints is assigned.
    let mut checks: Vec<Vec<(usize, usize, crate::relations::RelationLabel)>> = vec![Vec::new(); order.len()];
    for e in &q.edges {
        let (s, o) = (slot[e.sub.as_str()], slot[e.obj.as_str()]);
        q_out[s].insert(o);
        q_in[o].insert(s);
        checks[s.max(o)].push((s, o, e.label));
    }

    let deg = scene_degrees(g);
    let candidates: Vec<Vec<InstanceId>> = order
        .iter()
        .enumerate()
        .map(|(i, qn)| {
            g.nodes
                .values()
                .filter(|inst| node_admits(qn, inst))
                .filter(|inst| {
                    deg.out.get(&inst.instance_id).copied().unwrap_or(0) >= q_out[i].len()
                        && deg.inn.get(&inst.instance_id).copied().unwrap_or(0) >= q_in[i].len()
                })
                .map(|inst| inst.instance_id)
                .collect()
        })
        .collect();

    let mut found = Vec::new();
    if limit == 0 || candidates.iter().any(Vec::is_empty) {
        return found;
    }
    let mut assigned: Vec<InstanceId> = Vec::with_capacity(order.len());
    search(g, &candidates, &checks, &mut assigned, limit, &mut |mapping: &[InstanceId]| {
        order.iter().zip(mapping).map(|(n, id)| (n.id.clone(), *id)).collect::<Embedding>()
    }, &mut found);

    for emb in &found {
        debug_assert!(verify_embedding(g, q, emb), "embedding failed self-check: {emb:?}");
    }
    found
}

fn search(
    g: &SceneGraph,
    candidates: &[Vec<InstanceId>],
    checks: &[Vec<(usize, usize, crate::relations::RelationLabel)>],
    assigned: &mut Vec<InstanceId>,
    limit: usize,
    build: &mut dyn FnMut(&[InstanceId]) -> Embedding,
    found: &mut Vec<Embedding>,
) {
    let depth = assigned.len();
    if depth == candidates.len() {
        found.push(build(assigned));
        return;
    }
    for &cand in &candidates[depth] {
        if assigned.contains(&cand) {
            continue;
        }
        assigned.push(cand);
        let consistent = checks[depth]
            .iter()
            .all(|&(s, o, label)| scene_satisfies(g, assigned[s], assigned[o], label));
        if consistent {
            search(g, candidates, checks, assigned, limit, build, found);
        }
        assigned.pop();
        if found.len() >= limit {
            return;
        }
    }
}

/// Replays every node and edge constraint of `q` under `emb`.
pub fn verify_embedding(g: &SceneGraph, q: &MatchingGraph, emb: &Embedding) -> bool {
    let ids: BTreeSet<_> = emb.values().collect();
    if ids.len() != emb.len() || emb.len() != q.nodes.len() {
        return false;
    }
    let nodes_ok = q.nodes.iter().all(|qn| {
        emb.get(&qn.id)
            .and_then(|id| g.node(*id))
            .is_some_and(|inst| node_admits(qn, inst))
    });
    nodes_ok
        && q.edges.iter().all(|e| match (emb.get(&e.sub), emb.get(&e.obj)) {
            (Some(&s), Some(&o)) => scene_satisfies(g, s, o, e.label),
            _ => false,
        })
}

pub fn select_embedding(embeddings: &[Embedding]) -> Option<&Embedding> {
    embeddings.first()
}

fn yaw_of(v: &Vector2<f64>) -> f64 {
    v.y.atan2(v.x)
}

/// Face normal of `part` (one of its six) best aligned with `dir`.
fn face_towards(part: &Obb, dir: &Vector3<f64>) -> (Vector3<f64>, f64) {
    let axes = part.axes();
    let mut best = (axes.column(0).into_owned(), part.extents[0] / 2.0);
    let mut best_dot = f64::NEG_INFINITY;
    for k in 0..3 {
        let a = axes.column(k).into_owned();
        for n in [a, -a] {
            let d = n.dot(dir);
            if d > best_dot {
                best_dot = d;
                best = (n, part.extents[k] / 2.0);
            }
        }
    }
    best
}

/// Horizontal direction from the instance center towards `part`, falling
/// back to the instance front and then to its local +x.
fn outward_dir(target: &AbstractedInstance, part: &Obb) -> Vector3<f64> {
    let d = (part.center - target.obb.center).xy();
    let h = if d.norm() > 1e-9 {
        d.normalize()
    } else if let Some(f) = target.obb.front {
        f
    } else {
        target.obb.horizontal_face_normals()[0]
    };
    Vector3::new(h.x, h.y, 0.0)
}

pub fn compute_placement(
    g: &SceneGraph,
    content: &ContentGraph,
    emb: &Embedding,
    content_node: &str,
    config: &ArrangementConfig,
) -> Result<Placement, ArrangementError> {
    let missing = || ArrangementError::MissingActionTarget(content_node.to_string());
    let (edge, action) = content
        .action_edges_from(content_node)
        .find(|(e, _)| emb.contains_key(&e.obj))
        .ok_or_else(missing)?;
    let anchor = emb[&edge.obj];
    let target = g.node(anchor).ok_or_else(missing)?;
    let front_yaw = || {
        target.obb.front_yaw().unwrap_or_else(|| {
            log::warn!("instance {anchor} has no front; using yaw 0 for `{content_node}`");
            0.0
        })
    };

    let (position, yaw) = match action {
        ActionLabel::SittingOn => {
            let seat = target.part(Affordance::Sittable).unwrap_or(&target.obb);
            (seat.top_face_center(), front_yaw())
        }
        ActionLabel::PlacedOn | ActionLabel::StandingOn => {
            let yaw = target.obb.front_yaw().unwrap_or(0.0);
            (support_surface(target).top_face_center(), yaw)
        }
        ActionLabel::Pushing | ActionLabel::Opening => {
            let affordance = action.implied_affordance();
            let part = target
                .part(affordance)
                .ok_or(ArrangementError::MissingRequiredPart { anchor, affordance })?;
            let out = outward_dir(target, part);
            let (normal, _) = face_towards(part, &out);
            let facing = if normal.xy().norm() > 1e-9 { -normal.xy() } else { -out.xy() };
            (part.center + normal * config.standoff, yaw_of(&facing))
        }
        ActionLabel::LeaningOn => {
            let affordance = Affordance::Leanable;
            let part = target
                .part(affordance)
                .ok_or(ArrangementError::MissingRequiredPart { anchor, affordance })?;
            let toward = target
                .obb
                .front
                .map(|f| Vector3::new(f.x, f.y, 0.0))
                .unwrap_or_else(|| outward_dir(target, part));
            let (normal, half) = face_towards(part, &toward);
            let away = if normal.xy().norm() > 1e-9 { normal.xy() } else { toward.xy() };
            (part.center + normal * half, yaw_of(&away))
        }
    };

    Ok(Placement {
        content: content_node.to_string(),
        anchor,
        action,
        position,
        yaw,
    })
}

fn place_all(
    g: &SceneGraph,
    content: &ContentGraph,
    emb: &Embedding,
    config: &ArrangementConfig,
) -> Result<Vec<Placement>, ArrangementError> {
    content
        .content_nodes()
        .map(|n| compute_placement(g, content, emb, &n.id, config))
        .collect()
}

/// Re-runs matching on a new graph. A still-valid previous embedding is kept
/// so content does not jump between equally good anchors; otherwise the
/// first embedding (in deterministic order) whose placements all succeed
/// wins.
pub fn rearrange_on_update(
    previous: Option<&Arrangement>,
    g: &SceneGraph,
    content: &ContentGraph,
    config: &ArrangementConfig,
) -> Option<Arrangement> {
    let q = derive_matching_graph(content).ok()?;
    if let Some(prev) = previous {
        if verify_embedding(g, &q, &prev.embedding) {
            if let Ok(placements) = place_all(g, content, &prev.embedding, config) {
                return Some(Arrangement {
                    embedding: prev.embedding.clone(),
                    placements,
                });
            }
        }
    }
    let embeddings = find_embeddings(g, &q, config.limit_embeddings);
    for emb in &embeddings {
        match place_all(g, content, emb, config) {
            Ok(placements) => {
                return Some(Arrangement {
                    embedding: emb.clone(),
                    placements,
                })
            }
            Err(e) => log::warn!("skipping embedding {emb:?}: {e}"),
        }
    }
    None
}
