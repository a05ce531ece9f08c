//! Shared workloads for the criterion benches.

use ctxplace_core::content::{parse_content_graph, ContentGraph};
use ctxplace_core::semantic_map::InstanceRecord;
use ctxplace_core::synth::{self, SampleOptions};

pub const INSTANCES: usize = 50;
pub const POINTS_PER_INSTANCE: usize = 10_000;

/// Raw instance records for a row of furnished rooms.
pub fn room_records(instances: usize, points: usize) -> Vec<InstanceRecord> {
    let scene = synth::room_row(instances);
    let mut rng = synth::rng(8);
    scene
        .objects
        .iter()
        .map(|o| o.raw_record(points, &SampleOptions::default(), &mut rng))
        .collect()
}

pub fn context_a() -> ContentGraph {
    let path = concat!(env!("CARGO_MANIFEST_DIR"), "/../../fixtures/context_a.json");
    let text = std::fs::read_to_string(path).expect("context_a fixture");
    parse_content_graph(&text).expect("valid content graph")
}
