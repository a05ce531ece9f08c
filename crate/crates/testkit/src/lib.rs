//! Slow, direct reference implementations used to check the engine.
//! Nothing here shares code with the routines it checks.

use std::collections::BTreeSet;
use std::f64::consts::PI;

use nalgebra::{Matrix3, Vector2, Vector3};
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

use ctxplace_core::abstraction::{AbstractedInstance, Obb};
use ctxplace_core::content::{ContentNode, MatchEdge, MatchingGraph, NodeKind};
use ctxplace_core::relations::{Relation, RelationLabel};
use ctxplace_core::scene_graph::SceneGraph;
use ctxplace_core::semantic_map::{Affordance, InstanceId};

/// Step of the brute-force yaw sweep, radians (0.05 degrees).
pub const SWEEP_STEP: f64 = 0.05 * PI / 180.0;

/// Area of the bounding rectangle of `points` with sides along `theta`.
pub fn rect_area_at(points: &[Vector2<f64>], theta: f64) -> f64 {
    let (s, c) = theta.sin_cos();
    let (mut ulo, mut uhi, mut vlo, mut vhi) = (f64::MAX, f64::MIN, f64::MAX, f64::MIN);
    for p in points {
        let u = c * p.x + s * p.y;
        let v = -s * p.x + c * p.y;
        ulo = ulo.min(u);
        uhi = uhi.max(u);
        vlo = vlo.min(v);
        vhi = vhi.max(v);
    }
    (uhi - ulo) * (vhi - vlo)
}

fn golden_min(points: &[Vector2<f64>], mut a: f64, mut b: f64) -> f64 {
    let g = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = b - g * (b - a);
    let mut x2 = a + g * (b - a);
    let mut f1 = rect_area_at(points, x1);
    let mut f2 = rect_area_at(points, x2);
    for _ in 0..80 {
        if f1 <= f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - g * (b - a);
            f1 = rect_area_at(points, x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + g * (b - a);
            f2 = rect_area_at(points, x2);
        }
    }
    f1.min(f2)
}

/// Minimum enclosing-rectangle area found by sweeping yaw over a quarter
/// turn at [`SWEEP_STEP`] and polishing the best few grid angles with a
/// golden-section search inside their neighboring grid cells.
pub fn sweep_min_rect_area(points: &[Vector2<f64>]) -> f64 {
    let steps = (PI / 2.0 / SWEEP_STEP).round() as usize;
    let mut grid: Vec<(f64, f64)> = (0..steps)
        .map(|i| {
            let t = i as f64 * SWEEP_STEP;
            (rect_area_at(points, t), t)
        })
        .collect();
    grid.sort_by(|a, b| a.0.total_cmp(&b.0));
    grid.iter()
        .take(5)
        .map(|&(f, t)| f.min(golden_min(points, t - SWEEP_STEP, t + SWEEP_STEP)))
        .fold(f64::INFINITY, f64::min)
}

/// Eigenpairs of a symmetric 3x3 matrix by cyclic Jacobi rotations, sorted
/// by descending eigenvalue. Eigenvectors are the columns of the matrix.
pub fn jacobi_eigen(m: &Matrix3<f64>) -> (Vector3<f64>, Matrix3<f64>) {
    let mut a = *m;
    let mut v = Matrix3::<f64>::identity();
    for _ in 0..100 {
        let off = a[(0, 1)].powi(2) + a[(0, 2)].powi(2) + a[(1, 2)].powi(2);
        if off < 1e-30 {
            break;
        }
        for (p, q) in [(0, 1), (0, 2), (1, 2)] {
            if a[(p, q)].abs() < 1e-300 {
                continue;
            }
            let theta = (a[(q, q)] - a[(p, p)]) / (2.0 * a[(p, q)]);
            let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
            let t = if theta == 0.0 { 1.0 } else { t };
            let c = 1.0 / (t * t + 1.0).sqrt();
            let s = t * c;
            let mut rot = Matrix3::identity();
            rot[(p, p)] = c;
            rot[(q, q)] = c;
            rot[(p, q)] = s;
            rot[(q, p)] = -s;
            a = rot.transpose() * a * rot;
            v *= rot;
        }
    }
    let mut idx = [0usize, 1, 2];
    idx.sort_by(|&i, &j| a[(j, j)].total_cmp(&a[(i, i)]));
    let vals = Vector3::new(a[(idx[0], idx[0])], a[(idx[1], idx[1])], a[(idx[2], idx[2])]);
    let vecs = Matrix3::from_columns(&[v.column(idx[0]), v.column(idx[1]), v.column(idx[2])]);
    (vals, vecs)
}

pub fn covariance(points: &[Vector3<f64>]) -> Matrix3<f64> {
    let n = points.len() as f64;
    let mean = points.iter().fold(Vector3::zeros(), |a, p| a + p) / n;
    points.iter().fold(Matrix3::zeros(), |acc, p| {
        let d = p - mean;
        acc + d * d.transpose()
    }) / n
}

/// A z-aligned box given by raw parameters.
#[derive(Debug, Clone, Copy)]
pub struct RawBox {
    pub center: [f64; 3],
    pub extents: [f64; 3],
    pub yaw: f64,
}

impl RawBox {
    pub fn contains(&self, p: [f64; 3]) -> bool {
        let dx = p[0] - self.center[0];
        let dy = p[1] - self.center[1];
        let (s, c) = self.yaw.sin_cos();
        let u = c * dx + s * dy;
        let v = -s * dx + c * dy;
        u.abs() <= self.extents[0] / 2.0
            && v.abs() <= self.extents[1] / 2.0
            && (p[2] - self.center[2]).abs() <= self.extents[2] / 2.0
    }

    fn bounds(&self) -> ([f64; 3], [f64; 3]) {
        let (s, c) = self.yaw.sin_cos();
        let rx = (c * self.extents[0]).abs() / 2.0 + (s * self.extents[1]).abs() / 2.0;
        let ry = (s * self.extents[0]).abs() / 2.0 + (c * self.extents[1]).abs() / 2.0;
        let rz = self.extents[2] / 2.0;
        (
            [self.center[0] - rx, self.center[1] - ry, self.center[2] - rz],
            [self.center[0] + rx, self.center[1] + ry, self.center[2] + rz],
        )
    }
}

/// Volumetric IoU by jittered stratified sampling of the joint bounding box
/// on a `cells`^3 grid, one sample per cell.
pub fn monte_carlo_iou(a: &RawBox, b: &RawBox, cells: usize, seed: u64) -> f64 {
    let (alo, ahi) = a.bounds();
    let (blo, bhi) = b.bounds();
    let lo: Vec<f64> = (0..3).map(|k| alo[k].min(blo[k])).collect();
    let hi: Vec<f64> = (0..3).map(|k| ahi[k].max(bhi[k])).collect();
    let step: Vec<f64> = (0..3).map(|k| (hi[k] - lo[k]) / cells as f64).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut inter, mut union) = (0u64, 0u64);
    for i in 0..cells {
        for j in 0..cells {
            for k in 0..cells {
                let p = [
                    lo[0] + (i as f64 + rng.random::<f64>()) * step[0],
                    lo[1] + (j as f64 + rng.random::<f64>()) * step[1],
                    lo[2] + (k as f64 + rng.random::<f64>()) * step[2],
                ];
                let (ia, ib) = (a.contains(p), b.contains(p));
                inter += (ia && ib) as u64;
                union += (ia || ib) as u64;
            }
        }
    }
    if union == 0 {
        0.0
    } else {
        inter as f64 / union as f64
    }
}

fn label_ok(have: RelationLabel, need: RelationLabel) -> bool {
    have == need || (need == RelationLabel::Near && have == RelationLabel::Adjacent)
}

/// Every injective, label-compatible map of the query into the scene,
/// found by enumerating all injective maps and filtering. Output order is
/// lexicographic over instance ids taken in query-node-id order.
pub fn exhaustive_embeddings(g: &SceneGraph, q: &MatchingGraph) -> Vec<Vec<(String, InstanceId)>> {
    let mut qids: Vec<&ContentNode> = q.nodes.iter().collect();
    qids.sort_by(|a, b| a.id.cmp(&b.id));
    let scene: Vec<&AbstractedInstance> = g.nodes.values().collect();
    let mut out = Vec::new();
    let mut pick = Vec::new();
    enumerate(&scene, qids.len(), &mut pick, &mut |mapping| {
        let m: Vec<(String, InstanceId)> = qids
            .iter()
            .zip(mapping)
            .map(|(n, &i)| (n.id.clone(), scene[i].instance_id))
            .collect();
        let of = |id: &str| m.iter().find(|(k, _)| k == id).map(|(_, v)| *v).unwrap();
        let nodes_ok = qids.iter().zip(mapping).all(|(n, &i)| {
            scene[i].category == n.category && n.required_affordances.iter().all(|a| scene[i].attributes.contains(a))
        });
        let edges_ok = q.edges.iter().all(|e| {
            let (s, o) = (of(&e.sub), of(&e.obj));
            g.edges
                .iter()
                .any(|r| r.subject == s && r.object == o && label_ok(r.label, e.label))
        });
        if nodes_ok && edges_ok {
            out.push(m);
        }
    });
    out
}

fn enumerate(scene: &[&AbstractedInstance], k: usize, pick: &mut Vec<usize>, visit: &mut dyn FnMut(&[usize])) {
    if pick.len() == k {
        visit(pick);
        return;
    }
    for i in 0..scene.len() {
        if !pick.contains(&i) {
            pick.push(i);
            enumerate(scene, k, pick, visit);
            pick.pop();
        }
    }
}

pub const CATEGORIES: [&str; 3] = ["chair", "tv", "table"];
const QUERY_AFFORDANCES: [Affordance; 2] = [Affordance::Sittable, Affordance::Supportable];

/// Random labeled digraph with up to `max_nodes` nodes. Geometry is
/// irrelevant to matching, so every node gets a unit box at the origin.
pub fn random_scene_graph(rng: &mut impl Rng, max_nodes: usize) -> SceneGraph {
    let n = rng.random_range(1..=max_nodes);
    let mut g = SceneGraph::default();
    for id in 0..n as InstanceId {
        let cat = CATEGORIES[rng.random_range(0..CATEGORIES.len())];
        let mut inst = AbstractedInstance::from_obb(id + 1, cat, Obb::z_aligned(Vector3::zeros(), Vector3::repeat(1.0), 0.0));
        for a in QUERY_AFFORDANCES {
            if rng.random_bool(0.4) {
                inst = inst.with_part(a, Obb::z_aligned(Vector3::zeros(), Vector3::repeat(0.5), 0.0));
            }
        }
        g.nodes.insert(id + 1, inst);
    }
    let ids: Vec<InstanceId> = g.nodes.keys().copied().collect();
    for &s in &ids {
        for &o in &ids {
            if s == o {
                continue;
            }
            for label in [RelationLabel::InFrontOf, RelationLabel::Near, RelationLabel::Adjacent, RelationLabel::On] {
                if rng.random_bool(0.2) {
                    g.edges.insert(Relation { subject: s, object: o, label });
                }
            }
        }
    }
    g
}

/// Random query with up to `max_nodes` nodes. Half the time it is lifted
/// from a random injective sample of the scene so matches exist.
pub fn random_query(rng: &mut impl Rng, g: &SceneGraph, max_nodes: usize) -> MatchingGraph {
    let ids: Vec<InstanceId> = g.nodes.keys().copied().collect();
    let k = rng.random_range(1..=max_nodes.min(ids.len()).max(1));
    let lifted = rng.random_bool(0.5);
    let chosen: Vec<InstanceId> = ids.choose_multiple(rng, k).copied().collect();
    let node_id = |i: usize| format!("q{}", (b'a' + i as u8) as char);
    let nodes: Vec<ContentNode> = (0..k)
        .map(|i| {
            let (category, required) = if lifted {
                let inst = &g.nodes[&chosen[i]];
                let req: BTreeSet<Affordance> = inst.attributes.iter().copied().filter(|_| rng.random_bool(0.5)).collect();
                (inst.category.clone(), req)
            } else {
                let req = QUERY_AFFORDANCES.iter().copied().filter(|_| rng.random_bool(0.2)).collect();
                (CATEGORIES[rng.random_range(0..CATEGORIES.len())].to_string(), req)
            };
            ContentNode {
                id: node_id(i),
                kind: NodeKind::Real,
                category,
                required_affordances: required,
                attributes: Default::default(),
            }
        })
        .collect();
    let mut edges = Vec::new();
    for i in 0..k {
        for j in 0..k {
            if i == j {
                continue;
            }
            if lifted {
                for r in g.edges.iter().filter(|r| r.subject == chosen[i] && r.object == chosen[j]) {
                    if rng.random_bool(0.5) {
                        let label = if r.label == RelationLabel::Adjacent && rng.random_bool(0.5) {
                            RelationLabel::Near
                        } else {
                            r.label
                        };
                        edges.push(MatchEdge { sub: node_id(i), obj: node_id(j), label });
                    }
                }
            } else if rng.random_bool(0.25) {
                let labels = [RelationLabel::InFrontOf, RelationLabel::Near, RelationLabel::Adjacent, RelationLabel::On];
                edges.push(MatchEdge {
                    sub: node_id(i),
                    obj: node_id(j),
                    label: labels[rng.random_range(0..labels.len())],
                });
            }
        }
    }
    MatchingGraph { nodes, edges }
}
