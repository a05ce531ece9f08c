//! The online loop: integrate frames, and every `rebuild_every` frames
//! re-abstract changed instances, update the scene graph and re-arrange
//! content. Events are written as JSON lines keyed by frame id.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::sync::mpsc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::abstraction::{abstract_instance, AbstractedInstance, AbstractionConfig};
use crate::arrangement::{rearrange_on_update, Arrangement, ArrangementConfig, Placement};
use crate::content::ContentGraph;
use crate::eval::GroundTruthAnnotation;
use crate::relations::{RelationError, RelationThresholds};
use crate::scene_graph::{build_graph, export_graph, update_graph, ExportFormat, GraphError, SceneGraph};
use crate::semantic_map::{
    InstanceId, LabeledObservation, LabeledVoxelMap, MapError, DEFAULT_MIN_VOXELS, DEFAULT_VOXEL_SIZE,
};
use crate::stream::{ObservationFrame, StreamError};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub voxel_size: f64,
    pub min_voxels: usize,
    pub rebuild_every: u64,
    pub thresholds: RelationThresholds,
    pub long_axis_categories: BTreeSet<String>,
    pub frontless_categories: BTreeSet<String>,
    pub standoff: f64,
    pub limit_embeddings: usize,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        let abstraction = AbstractionConfig::default();
        let arrangement = ArrangementConfig::default();
        Self {
            voxel_size: DEFAULT_VOXEL_SIZE,
            min_voxels: DEFAULT_MIN_VOXELS,
            rebuild_every: 10,
            thresholds: RelationThresholds::default(),
            long_axis_categories: abstraction.long_axis_categories,
            frontless_categories: abstraction.frontless_categories,
            standoff: arrangement.standoff,
            limit_embeddings: arrangement.limit_embeddings,
        }
    }
}

impl PipelineConfig {
    pub fn from_json(text: &str) -> Result<Self, PipelineError> {
        let cfg: Self = serde_json::from_str(text).map_err(|e| PipelineError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), PipelineError> {
        if !(self.voxel_size.is_finite() && self.voxel_size > 0.0) {
            return Err(PipelineError::Config(format!("voxel_size must be positive, got {}", self.voxel_size)));
        }
        if self.rebuild_every == 0 {
            return Err(PipelineError::Config("rebuild_every must be at least 1".into()));
        }
        if !(self.standoff.is_finite() && self.standoff >= 0.0) {
            return Err(PipelineError::Config(format!("standoff must be non-negative, got {}", self.standoff)));
        }
        self.thresholds
            .validate()
            .map_err(|e: RelationError| PipelineError::Config(e.to_string()))
    }

    pub fn abstraction(&self) -> AbstractionConfig {
        AbstractionConfig {
            long_axis_categories: self.long_axis_categories.clone(),
            frontless_categories: self.frontless_categories.clone(),
        }
    }

    pub fn arrangement(&self) -> ArrangementConfig {
        ArrangementConfig {
            standoff: self.standoff,
            limit_embeddings: self.limit_embeddings,
        }
    }
}

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("invalid config: {0}")]
    Config(String),
    #[error(transparent)]
    Stream(#[from] StreamError),
    #[error("frame {frame}: {source}")]
    Map { frame: u64, source: MapError },
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: io::Error },
    #[error("writing event log: {0}")]
    Log(io::Error),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "event", rename_all = "snake_case")]
pub enum EventKind {
    Graph { version: u64, nodes: usize, edges: usize },
    /// Content bound to a new set of anchors.
    Placement { record: Placement },
    /// Same anchors, refined pose.
    PoseUpdate { record: Placement },
    Withdrawn { content: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Event {
    pub frame: u64,
    #[serde(flatten)]
    pub kind: EventKind,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ExportOptions {
    /// Directory receiving one DOT file per graph rebuild.
    pub dot_dir: Option<PathBuf>,
    /// File receiving the final instance boxes in annotation format.
    pub obbs_path: Option<PathBuf>,
    pub scene_name: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Mode {
    #[default]
    Pipelined,
    Sequential,
}

#[derive(Debug, Clone, Default)]
pub struct PipelineOutput {
    pub frames: u64,
    pub rebuilds: usize,
    pub graph: Option<SceneGraph>,
    pub arrangement: Option<Arrangement>,
    pub events: Vec<Event>,
}

impl PipelineOutput {
    pub fn instances(&self) -> Vec<AbstractedInstance> {
        self.graph
            .as_ref()
            .map(|g| g.nodes.values().cloned().collect())
            .unwrap_or_default()
    }

    pub fn placement_events(&self) -> impl Iterator<Item = (u64, &Placement)> {
        self.events.iter().filter_map(|e| match &e.kind {
            EventKind::Placement { record } => Some((e.frame, record)),
            _ => None,
        })
    }
}

/// Map state handed from the integrating stage to the processing stage.
struct Snapshot {
    frame: u64,
    map: LabeledVoxelMap,
    changed: BTreeSet<InstanceId>,
}

fn write_file(path: &Path, contents: &str) -> Result<(), PipelineError> {
    fs::write(path, contents).map_err(|source| PipelineError::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Everything after integration: abstraction, graph, arrangement, events.
struct Processor<'a, W: Write> {
    config: &'a PipelineConfig,
    abstraction: AbstractionConfig,
    arrangement_config: ArrangementConfig,
    content: Option<&'a ContentGraph>,
    exports: &'a ExportOptions,
    log: W,
    instances: BTreeMap<InstanceId, AbstractedInstance>,
    out: PipelineOutput,
}

impl<W: Write> Processor<'_, W> {
    fn emit(&mut self, frame: u64, kind: EventKind) -> Result<(), PipelineError> {
        let event = Event { frame, kind };
        let mut line = serde_json::to_string(&event).expect("events serialize");
        line.push('\n');
        self.log.write_all(line.as_bytes()).map_err(PipelineError::Log)?;
        self.log.flush().map_err(PipelineError::Log)?;
        self.out.events.push(event);
        Ok(())
    }

    fn rebuild(&mut self, snap: Snapshot) -> Result<(), PipelineError> {
        let records = snap.map.extract_instances(self.config.min_voxels);
        let present: BTreeSet<InstanceId> = records.iter().map(|r| r.instance_id).collect();
        let mut dirty: BTreeSet<InstanceId> = self
            .instances
            .keys()
            .filter(|id| !present.contains(id))
            .copied()
            .collect();
        self.instances.retain(|id, _| present.contains(id));

        for rec in &records {
            let id = rec.instance_id;
            if self.instances.contains_key(&id) && !snap.changed.contains(&id) {
                continue;
            }
            dirty.insert(id);
            match abstract_instance(rec, &self.abstraction) {
                Ok(a) => {
                    for w in &a.warnings {
                        log::warn!("instance {id}: {w:?}");
                    }
                    self.instances.insert(id, a.instance);
                }
                Err(e) => {
                    log::warn!("instance {id} skipped: {e}");
                    self.instances.remove(&id);
                }
            }
        }

        let list: Vec<AbstractedInstance> = self.instances.values().cloned().collect();
        let graph = match &self.out.graph {
            None => build_graph(&list, &self.config.thresholds)?,
            Some(prev) => update_graph(prev, &dirty, &list, &self.config.thresholds)?,
        };
        self.out.rebuilds += 1;
        self.emit(
            snap.frame,
            EventKind::Graph {
                version: graph.version,
                nodes: graph.nodes.len(),
                edges: graph.edges.len(),
            },
        )?;
        if let Some(dir) = &self.exports.dot_dir {
            let path = dir.join(format!("scene_v{:04}.dot", graph.version));
            write_file(&path, &export_graph(&graph, ExportFormat::Dot))?;
        }

        if let Some(content) = self.content {
            let previous = self.out.arrangement.take();
            let next = rearrange_on_update(previous.as_ref(), &graph, content, &self.arrangement_config);
            match &next {
                Some(arr) => {
                    let rebound = previous.as_ref().is_none_or(|p| p.embedding != arr.embedding);
                    let old = previous.as_ref().map(|p| p.placements.as_slice()).unwrap_or_default();
                    for (i, p) in arr.placements.iter().enumerate() {
                        let record = p.clone();
                        if rebound {
                            self.emit(snap.frame, EventKind::Placement { record })?;
                        } else if old.get(i) != Some(p) {
                            self.emit(snap.frame, EventKind::PoseUpdate { record })?;
                        }
                    }
                }
                None => {
                    for p in previous.iter().flat_map(|a| &a.placements) {
                        self.emit(snap.frame, EventKind::Withdrawn { content: p.content.clone() })?;
                    }
                }
            }
            self.out.arrangement = next;
        }
        self.out.graph = Some(graph);
        Ok(())
    }

    fn finish(mut self) -> Result<PipelineOutput, PipelineError> {
        if let Some(path) = &self.exports.obbs_path {
            let ann = GroundTruthAnnotation::from_instances(self.exports.scene_name.clone(), &self.out.instances());
            let mut text = serde_json::to_string_pretty(&ann).expect("annotations serialize");
            text.push('\n');
            write_file(path, &text)?;
        }
        self.log.flush().map_err(PipelineError::Log)?;
        Ok(self.out)
    }
}

/// Integrates frames and yields a snapshot every `rebuild_every` frames and
/// once more at the end if frames remain unprocessed. Stops at the first
/// error, which is returned after the snapshots taken so far.
fn integrate<I>(frames: I, config: &PipelineConfig, mut sink: impl FnMut(Snapshot) -> bool) -> (u64, Option<PipelineError>)
where
    I: IntoIterator<Item = Result<(ObservationFrame, Vec<LabeledObservation>), StreamError>>,
{
    let mut map = match LabeledVoxelMap::with_voxel_size(config.voxel_size) {
        Ok(m) => m,
        Err(e) => return (0, Some(PipelineError::Config(e.to_string()))),
    };
    let mut count = 0u64;
    let mut pending: Option<u64> = None;
    for item in frames {
        let (frame, obs) = match item {
            Ok(x) => x,
            Err(e) => return (count, Some(e.into())),
        };
        if let Err(source) = map.integrate_frame(&obs) {
            return (count, Some(PipelineError::Map { frame: frame.frame_id, source }));
        }
        count += 1;
        pending = Some(frame.frame_id);
        if count.is_multiple_of(config.rebuild_every) {
            let snap = Snapshot {
                frame: frame.frame_id,
                changed: map.drain_changed(),
                map: map.clone(),
            };
            pending = None;
            if !sink(snap) {
                return (count, None);
            }
        }
    }
    if let Some(frame) = pending {
        let snap = Snapshot {
            frame,
            changed: map.drain_changed(),
            map,
        };
        sink(snap);
    }
    (count, None)
}

/// Runs the online loop over `frames`, writing events to `log` as they
/// happen. Both modes produce the same events; the pipelined mode overlaps
/// integration of later frames with processing of the latest snapshot.
pub fn run_pipeline<I, W>(
    frames: I,
    content: Option<&ContentGraph>,
    config: &PipelineConfig,
    exports: &ExportOptions,
    mode: Mode,
    log: W,
) -> Result<PipelineOutput, PipelineError>
where
    I: IntoIterator<Item = Result<(ObservationFrame, Vec<LabeledObservation>), StreamError>>,
    I::IntoIter: Send,
    W: Write,
{
    config.validate()?;
    if let Some(dir) = &exports.dot_dir {
        fs::create_dir_all(dir).map_err(|source| PipelineError::Io {
            path: dir.clone(),
            source,
        })?;
    }
    let mut proc = Processor {
        config,
        abstraction: config.abstraction(),
        arrangement_config: config.arrangement(),
        content,
        exports,
        log,
        instances: BTreeMap::new(),
        out: PipelineOutput::default(),
    };

    let (frames_seen, stream_err, proc_err) = match mode {
        Mode::Sequential => {
            let mut proc_err = None;
            let (n, err) = integrate(frames, config, |snap| match proc.rebuild(snap) {
                Ok(()) => true,
                Err(e) => {
                    proc_err = Some(e);
                    false
                }
            });
            (n, err, proc_err)
        }
        Mode::Pipelined => {
            let iter = frames.into_iter();
            std::thread::scope(|scope| {
                let (tx, rx) = mpsc::sync_channel::<Snapshot>(1);
                let producer = scope.spawn(move || integrate(iter, config, |snap| tx.send(snap).is_ok()));
                let mut proc_err = None;
                for snap in rx {
                    if let Err(e) = proc.rebuild(snap) {
                        proc_err = Some(e);
                        break;
                    }
                }
                let (n, err) = producer.join().expect("integration thread panicked");
                (n, err, proc_err)
            })
        }
    };
    if let Some(e) = proc_err.or(stream_err) {
        return Err(e);
    }
    let mut out = proc.finish()?;
    out.frames = frames_seen;
    Ok(out)
}
