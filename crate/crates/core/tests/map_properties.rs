use nalgebra::Vector3;
use proptest::prelude::*;

use ctxplace_core::semantic_map::{Affordance, LabeledObservation, LabeledVoxelMap};

fn observation() -> impl Strategy<Value = LabeledObservation> {
    (
        [-0.5..0.5f64, -0.5..0.5f64, 0.0..0.5f64],
        [-1.0..1.0f64, -1.0..1.0f64, 0.1..1.0f64],
        0u32..4,
        prop::sample::select(vec!["chair", "sofa", "table"]),
        prop::option::of(prop::sample::select(Affordance::ALL.to_vec())),
    )
        .prop_map(|(p, n, id, cat, aff)| {
            LabeledObservation::new(Vector3::from(p), Vector3::from(n).normalize(), id, cat, aff)
        })
}

fn frames() -> impl Strategy<Value = Vec<Vec<LabeledObservation>>> {
    prop::collection::vec(prop::collection::vec(observation(), 0..40), 0..6)
}

fn integrate_all(frames: &[Vec<LabeledObservation>], voxel: f64) -> LabeledVoxelMap {
    let mut m = LabeledVoxelMap::with_voxel_size(voxel).unwrap();
    for f in frames {
        m.integrate_frame(f).unwrap();
    }
    m
}

fn tallies(m: &LabeledVoxelMap) -> Vec<String> {
    m.instance_keys()
        .map(|k| {
            format!(
                "{k:?} {:?} {:?} {:?}",
                m.instance_votes(k),
                m.category_votes(k),
                m.affordance_votes(k)
            )
        })
        .collect()
}

fn approx_same_records(a: &LabeledVoxelMap, b: &LabeledVoxelMap, min: usize) -> Result<(), TestCaseError> {
    let (ra, rb) = (a.extract_instances(min), b.extract_instances(min));
    prop_assert_eq!(ra.len(), rb.len());
    for (x, y) in ra.iter().zip(&rb) {
        prop_assert_eq!(x.instance_id, y.instance_id);
        prop_assert_eq!(&x.category, &y.category);
        prop_assert_eq!(&x.points, &y.points);
        prop_assert_eq!(&x.parts, &y.parts);
        for (n, m) in x.normals.iter().zip(&y.normals) {
            prop_assert!((n - m).norm() < 1e-9);
        }
    }
    Ok(())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn stream_equals_batch(frames in frames(), min in 1usize..4) {
        let streamed = integrate_all(&frames, 0.1);
        let batch = integrate_all(&[frames.concat()], 0.1);
        prop_assert_eq!(tallies(&streamed), tallies(&batch));
        approx_same_records(&streamed, &batch, min)?;
        prop_assert_eq!(streamed.version(), frames.len() as u64);
    }

    #[test]
    fn frame_order_is_irrelevant(frames in frames(), min in 1usize..4) {
        let mut reversed = frames.clone();
        reversed.reverse();
        let a = integrate_all(&frames, 0.1);
        let b = integrate_all(&reversed, 0.1);
        prop_assert_eq!(tallies(&a), tallies(&b));
        approx_same_records(&a, &b, min)?;
    }

    #[test]
    fn double_integration_doubles_votes(frame in prop::collection::vec(observation(), 0..60)) {
        let once = integrate_all(std::slice::from_ref(&frame), 0.1);
        let twice = integrate_all(&[frame.clone(), frame], 0.1);
        let keys: Vec<_> = once.instance_keys().collect();
        prop_assert_eq!(&keys, &twice.instance_keys().collect::<Vec<_>>());
        for k in keys {
            let a = once.instance_votes(k).unwrap();
            let b = twice.instance_votes(k).unwrap();
            prop_assert!(a.iter().all(|(id, n)| b[id] == 2 * n));
        }
    }

    #[test]
    fn instance_layer_covers_other_layers(frames in frames()) {
        let m = integrate_all(&frames, 0.1);
        let inst: std::collections::BTreeSet<_> = m.instance_keys().collect();
        prop_assert!(m.category_keys().all(|k| inst.contains(k)));
        prop_assert!(m.affordance_keys().all(|k| inst.contains(k)));
        for r in m.extract_instances(1) {
            prop_assert!(!r.points.is_empty());
            for pts in r.parts.values() {
                prop_assert!(pts.iter().all(|p| r.points.contains(p)));
            }
        }
    }
}
