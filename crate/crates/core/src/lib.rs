//! Incremental semantic mapping, box abstraction, scene graphs and
//! context-driven placement of virtual content.

pub mod abstraction;
pub mod arrangement;
pub mod content;
pub mod eval;
pub mod geometry;
pub mod pipeline;
pub mod relations;
pub mod scene_graph;
pub mod semantic_map;
pub mod stream;
pub mod synth;

pub use abstraction::{abstract_instance, AbstractedInstance, AbstractionConfig, FrontSource, Obb, ObbKind};
pub use arrangement::{find_embeddings, rearrange_on_update, Arrangement, ArrangementConfig, Embedding, Placement};
pub use content::{derive_matching_graph, parse_content_graph, ContentGraph, MatchingGraph};
pub use eval::{eval_obbs, EvalReport, GroundTruthAnnotation};
pub use relations::{Relation, RelationLabel, RelationThresholds};
pub use scene_graph::{build_graph, export_graph, update_graph, ExportFormat, SceneGraph};
pub use semantic_map::{Affordance, InstanceId, InstanceRecord, LabeledObservation, LabeledVoxelMap};
pub use stream::{ObservationFrame, StreamReader};
pub use pipeline::{run_pipeline, Event, EventKind, ExportOptions, Mode, PipelineConfig, PipelineError, PipelineOutput};
