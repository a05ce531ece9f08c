use std::collections::BTreeSet;

use nalgebra::{Vector2, Vector3};
use proptest::prelude::*;

use ctxplace_core::abstraction::{AbstractedInstance, Obb};
use ctxplace_core::arrangement::{find_embeddings, verify_embedding};
use ctxplace_core::relations::RelationThresholds;
use ctxplace_core::scene_graph::{build_graph, export_graph, parse_structured, update_graph, ExportFormat};
use ctxplace_core::semantic_map::{Affordance, InstanceId};
use ctxplace_testkit::{exhaustive_embeddings, random_query, random_scene_graph};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const CATS: [&str; 4] = ["chair", "sofa", "tv", "table"];

fn instance() -> impl Strategy<Value = (usize, [f64; 3], [f64; 3], f64, Option<u8>, bool)> {
    (
        0..CATS.len(),
        [-4.0..4.0f64, -4.0..4.0f64, 0.0..1.5f64],
        [0.2..1.5f64, 0.2..1.5f64, 0.1..1.2f64],
        0.0..1.5f64,
        prop::option::of(0u8..4),
        any::<bool>(),
    )
}

fn make(id: InstanceId, p: &(usize, [f64; 3], [f64; 3], f64, Option<u8>, bool)) -> AbstractedInstance {
    let (cat, c, e, yaw, front, seat) = p;
    let mut obb = Obb::z_aligned(Vector3::from(*c), Vector3::from(*e), *yaw);
    obb.front = front.map(|k| obb.horizontal_face_normals()[k as usize]);
    let mut inst = AbstractedInstance::from_obb(id, CATS[*cat], obb);
    if *seat {
        let s = Obb::z_aligned(Vector3::from(*c), Vector3::new(e[0] / 2.0, e[1] / 2.0, 0.02), *yaw);
        inst = inst.with_part(Affordance::Sittable, s);
    }
    inst
}

#[derive(Debug, Clone)]
enum Mutation {
    Move(usize, f64, f64),
    Turn(usize, f64),
    Remove(usize),
    Add((usize, [f64; 3], [f64; 3], f64, Option<u8>, bool)),
}

fn mutation() -> impl Strategy<Value = Mutation> {
    prop_oneof![
        (0..64usize, -2.0..2.0f64, -2.0..2.0f64).prop_map(|(i, x, y)| Mutation::Move(i, x, y)),
        (0..64usize, 0.0..1.5f64).prop_map(|(i, t)| Mutation::Turn(i, t)),
        (0..64usize).prop_map(Mutation::Remove),
        instance().prop_map(Mutation::Add),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn incremental_matches_batch(init in prop::collection::vec(instance(), 0..10), steps in prop::collection::vec(prop::collection::vec(mutation(), 0..4), 1..6)) {
        let th = RelationThresholds::default();
        let mut insts: Vec<AbstractedInstance> = init.iter().enumerate().map(|(i, p)| make(i as InstanceId + 1, p)).collect();
        let mut next_id = insts.len() as InstanceId + 1;
        let mut graph = build_graph(&insts, &th).unwrap();
        for step in steps {
            let mut changed = BTreeSet::new();
            for m in step {
                match m {
                    Mutation::Move(i, x, y) if !insts.is_empty() => {
                        let k = i % insts.len();
                        insts[k].obb.center += Vector3::new(x, y, 0.0);
                        for p in insts[k].part_obbs.values_mut() {
                            p.center += Vector3::new(x, y, 0.0);
                        }
                        changed.insert(insts[k].instance_id);
                    }
                    Mutation::Turn(i, t) if !insts.is_empty() => {
                        let k = i % insts.len();
                        let c = insts[k].obb.center;
                        let front = insts[k].obb.front.map(|_| Vector2::new(t.cos(), t.sin()));
                        let mut obb = Obb::z_aligned(c, insts[k].obb.extents, t);
                        obb.front = front;
                        insts[k].obb = obb;
                        changed.insert(insts[k].instance_id);
                    }
                    Mutation::Remove(i) if !insts.is_empty() => {
                        let k = i % insts.len();
                        insts.remove(k);
                    }
                    Mutation::Add(p) => {
                        insts.push(make(next_id, &p));
                        next_id += 1;
                    }
                    _ => {}
                }
            }
            let updated = update_graph(&graph, &changed, &insts, &th).unwrap();
            let batch = build_graph(&insts, &th).unwrap();
            prop_assert_eq!(&updated.edges, &batch.edges);
            prop_assert_eq!(&updated.nodes, &batch.nodes);
            for e in &updated.edges {
                prop_assert!(e.subject != e.object);
                prop_assert!(updated.nodes.contains_key(&e.subject) && updated.nodes.contains_key(&e.object));
            }
            graph = updated;
        }
    }

    #[test]
    fn input_order_does_not_matter(init in prop::collection::vec(instance(), 0..8), seed in any::<u64>()) {
        use rand::seq::SliceRandom;
        let th = RelationThresholds::default();
        let insts: Vec<AbstractedInstance> = init.iter().enumerate().map(|(i, p)| make(i as InstanceId + 1, p)).collect();
        let mut shuffled = insts.clone();
        shuffled.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
        let a = build_graph(&insts, &th).unwrap();
        let b = build_graph(&shuffled, &th).unwrap();
        for f in [ExportFormat::Dot, ExportFormat::Structured] {
            prop_assert_eq!(export_graph(&a, f), export_graph(&b, f));
        }
        let text = export_graph(&a, ExportFormat::Structured);
        let back = parse_structured(&text).unwrap();
        prop_assert_eq!(export_graph(&back, ExportFormat::Structured), text);
    }
}

#[test]
fn matching_agrees_with_exhaustive_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(41);
    let mut nonempty = 0;
    for _ in 0..300 {
        let g = random_scene_graph(&mut rng, 8);
        let q = random_query(&mut rng, &g, 4);
        let got = find_embeddings(&g, &q, usize::MAX);
        let want = exhaustive_embeddings(&g, &q);
        let got_pairs: Vec<Vec<(String, InstanceId)>> =
            got.iter().map(|e| e.iter().map(|(k, v)| (k.clone(), *v)).collect()).collect();
        assert_eq!(got_pairs, want, "query {q:?}");
        for e in &got {
            assert!(verify_embedding(&g, &q, e));
        }
        if let Some(limit) = (!want.is_empty()).then(|| want.len().div_ceil(2)) {
            let first = find_embeddings(&g, &q, limit);
            assert_eq!(first[..], got[..limit]);
        }
        nonempty += usize::from(!want.is_empty());
    }
    assert!(nonempty > 50, "only {nonempty} queries had matches");
}
