//! Sparse multi-layer voxel map fed by labeled point observations.
//!
//! Each layer (instance, category, affordance) is an independent sparse
//! mapping from voxel index to integer vote counts. Labels are resolved by
//! plurality at read time, so integration order never changes the result.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const DEFAULT_VOXEL_SIZE: f64 = 0.04;
pub const DEFAULT_MIN_VOXELS: usize = 10;
const NORMAL_TOLERANCE: f64 = 1e-6;

pub type InstanceId = u32;
pub type VoxelIndex = [i64; 3];

/// Interaction offered by a region of an object.
///
/// Variants are declared in lexicographic token order so that the derived
/// `Ord` doubles as the vote tie-break.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Affordance {
    Leanable,
    Openable,
    Pushable,
    Sittable,
    Supportable,
}

impl Affordance {
    pub const ALL: [Affordance; 5] = [
        Affordance::Leanable,
        Affordance::Openable,
        Affordance::Pushable,
        Affordance::Sittable,
        Affordance::Supportable,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Affordance::Leanable => "leanable",
            Affordance::Openable => "openable",
            Affordance::Pushable => "pushable",
            Affordance::Sittable => "sittable",
            Affordance::Supportable => "supportable",
        }
    }
}

impl fmt::Display for Affordance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("unknown affordance token `{0}`")]
pub struct UnknownAffordance(pub String);

impl FromStr for Affordance {
    type Err = UnknownAffordance;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Affordance::ALL
            .into_iter()
            .find(|a| a.as_str() == s)
            .ok_or_else(|| UnknownAffordance(s.to_string()))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LabeledObservation {
    pub position: Vector3<f64>,
    pub normal: Vector3<f64>,
    pub instance_id: InstanceId,
    pub category: String,
    pub affordance: Option<Affordance>,
}

impl LabeledObservation {
    pub fn new(
        position: Vector3<f64>,
        normal: Vector3<f64>,
        instance_id: InstanceId,
        category: impl Into<String>,
        affordance: Option<Affordance>,
    ) -> Self {
        Self {
            position,
            normal,
            instance_id,
            category: category.into(),
            affordance,
        }
    }

    fn validate(&self) -> Result<(), MapError> {
        let finite = self.position.iter().chain(self.normal.iter()).all(|v| v.is_finite());
        if !finite {
            return Err(MapError::MalformedObservation("non-finite coordinate".into()));
        }
        let norm = self.normal.norm();
        if (norm - 1.0).abs() > NORMAL_TOLERANCE {
            return Err(MapError::MalformedObservation(format!(
                "normal has length {norm}, expected 1"
            )));
        }
        if self.category.is_empty() {
            return Err(MapError::MalformedObservation("empty category".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MapError {
    #[error("malformed observation: {0}")]
    MalformedObservation(String),
    #[error("invalid map configuration: {0}")]
    InvalidConfig(String),
}

/// One recognized object separated from the map.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstanceRecord {
    pub instance_id: InstanceId,
    pub category: String,
    /// Voxel centers, ordered by voxel index.
    pub points: Vec<Vector3<f64>>,
    /// Mean unit normal of each voxel, parallel to `points`.
    pub normals: Vec<Vector3<f64>>,
    pub parts: BTreeMap<Affordance, Vec<Vector3<f64>>>,
}

#[derive(Debug, Clone)]
pub struct LabeledVoxelMap {
    voxel_size: f64,
    instance_layer: BTreeMap<VoxelIndex, BTreeMap<InstanceId, u32>>,
    category_layer: BTreeMap<VoxelIndex, BTreeMap<String, u32>>,
    affordance_layer: BTreeMap<VoxelIndex, BTreeMap<Affordance, u32>>,
    normal_sums: BTreeMap<VoxelIndex, Vector3<f64>>,
    version: u64,
    changed: BTreeSet<InstanceId>,
}

impl Default for LabeledVoxelMap {
    fn default() -> Self {
        Self::with_voxel_size(DEFAULT_VOXEL_SIZE).expect("default voxel size is positive")
    }
}

impl LabeledVoxelMap {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_voxel_size(voxel_size: f64) -> Result<Self, MapError> {
        if !(voxel_size.is_finite() && voxel_size > 0.0) {
            return Err(MapError::InvalidConfig(format!("voxel_size must be > 0, got {voxel_size}")));
        }
        Ok(Self {
            voxel_size,
            instance_layer: BTreeMap::new(),
            category_layer: BTreeMap::new(),
            affordance_layer: BTreeMap::new(),
            normal_sums: BTreeMap::new(),
            version: 0,
            changed: BTreeSet::new(),
        })
    }

    pub fn voxel_size(&self) -> f64 {
        self.voxel_size
    }

    pub fn version(&self) -> u64 {
        self.version
    }

    pub fn voxel_count(&self) -> usize {
        self.instance_layer.len()
    }

    pub fn voxel_index(&self, p: &Vector3<f64>) -> VoxelIndex {
        voxel_index(p, self.voxel_size)
    }

    pub fn voxel_center(&self, idx: &VoxelIndex) -> Vector3<f64> {
        Vector3::new(
            (idx[0] as f64 + 0.5) * self.voxel_size,
            (idx[1] as f64 + 0.5) * self.voxel_size,
            (idx[2] as f64 + 0.5) * self.voxel_size,
        )
    }

    pub fn instance_votes(&self, idx: &VoxelIndex) -> Option<&BTreeMap<InstanceId, u32>> {
        self.instance_layer.get(idx)
    }

    pub fn category_votes(&self, idx: &VoxelIndex) -> Option<&BTreeMap<String, u32>> {
        self.category_layer.get(idx)
    }

    pub fn affordance_votes(&self, idx: &VoxelIndex) -> Option<&BTreeMap<Affordance, u32>> {
        self.affordance_layer.get(idx)
    }

    pub fn instance_keys(&self) -> impl Iterator<Item = &VoxelIndex> {
        self.instance_layer.keys()
    }

    pub fn category_keys(&self) -> impl Iterator<Item = &VoxelIndex> {
        self.category_layer.keys()
    }

    pub fn affordance_keys(&self) -> impl Iterator<Item = &VoxelIndex> {
        self.affordance_layer.keys()
    }

    /// Integrates one frame. The whole frame is validated before any vote
    /// lands, so a malformed observation leaves the map untouched.
    pub fn integrate_frame(&mut self, frame: &[LabeledObservation]) -> Result<(), MapError> {
        for obs in frame {
            obs.validate()?;
        }
        for obs in frame {
            let idx = self.voxel_index(&obs.position);
            let votes = self.instance_layer.entry(idx).or_default();
            *votes.entry(obs.instance_id).or_insert(0) += 1;
            // Every voter of a touched voxel may see its plurality change.
            self.changed.extend(votes.keys().copied());
            *self
                .category_layer
                .entry(idx)
                .or_default()
                .entry(obs.category.clone())
                .or_insert(0) += 1;
            if let Some(aff) = obs.affordance {
                *self.affordance_layer.entry(idx).or_default().entry(aff).or_insert(0) += 1;
            }
            *self.normal_sums.entry(idx).or_insert_with(Vector3::zeros) += obs.normal;
        }
        self.version += 1;
        Ok(())
    }

    /// Returns and clears the set of instances touched since the last drain.
    pub fn drain_changed(&mut self) -> BTreeSet<InstanceId> {
        std::mem::take(&mut self.changed)
    }

    pub fn pending_changes(&self) -> &BTreeSet<InstanceId> {
        &self.changed
    }

    fn mean_normal(&self, idx: &VoxelIndex) -> Vector3<f64> {
        let sum = self.normal_sums.get(idx).copied().unwrap_or_else(Vector3::zeros);
        let n = sum.norm();
        if n > 0.0 {
            sum / n
        } else {
            Vector3::zeros()
        }
    }

    /// Separates per-instance point sets. Instances with fewer than
    /// `min_voxels` voxels are withheld; output is ordered by instance id.
    pub fn extract_instances(&self, min_voxels: usize) -> Vec<InstanceRecord> {
        let mut owned: BTreeMap<InstanceId, Vec<VoxelIndex>> = BTreeMap::new();
        for (idx, votes) in &self.instance_layer {
            if let Some(owner) = plurality(votes) {
                owned.entry(*owner).or_default().push(*idx);
            }
        }

        owned
            .into_iter()
            .filter(|(_, voxels)| voxels.len() >= min_voxels.max(1))
            .map(|(instance_id, voxels)| self.record_for(instance_id, &voxels))
            .collect()
    }

    fn record_for(&self, instance_id: InstanceId, voxels: &[VoxelIndex]) -> InstanceRecord {
        let mut category_tally: BTreeMap<&str, u32> = BTreeMap::new();
        let mut points = Vec::with_capacity(voxels.len());
        let mut normals = Vec::with_capacity(voxels.len());
        let mut parts: BTreeMap<Affordance, Vec<Vector3<f64>>> = BTreeMap::new();

        for idx in voxels {
            let center = self.voxel_center(idx);
            points.push(center);
            normals.push(self.mean_normal(idx));
            if let Some(cat) = self.category_layer.get(idx).and_then(plurality) {
                *category_tally.entry(cat.as_str()).or_insert(0) += 1;
            }
            if let Some(aff) = self.affordance_layer.get(idx).and_then(plurality) {
                parts.entry(*aff).or_default().push(center);
            }
        }

        let category = plurality(&category_tally)
            .map(|c| c.to_string())
            .unwrap_or_default();
        InstanceRecord {
            instance_id,
            category,
            points,
            normals,
            parts,
        }
    }
}

pub fn voxel_index(p: &Vector3<f64>, voxel_size: f64) -> VoxelIndex {
    [
        (p.x / voxel_size).floor() as i64,
        (p.y / voxel_size).floor() as i64,
        (p.z / voxel_size).floor() as i64,
    ]
}

/// Key with the most votes; ties go to the smallest key.
fn plurality<K: Ord, V: Ord + Copy>(votes: &BTreeMap<K, V>) -> Option<&K> {
    let mut best: Option<(&K, V)> = None;
    for (k, v) in votes {
        match best {
            Some((_, bv)) if *v <= bv => {}
            _ => best = Some((k, *v)),
        }
    }
    best.map(|(k, _)| k)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn obs(p: [f64; 3], id: InstanceId, cat: &str, aff: Option<Affordance>) -> LabeledObservation {
        LabeledObservation::new(Vector3::from(p), Vector3::z(), id, cat, aff)
    }

    #[test]
    fn empty_frame_bumps_version_only() {
        let mut map = LabeledVoxelMap::new();
        map.integrate_frame(&[obs([0.0, 0.0, 0.0], 1, "chair", None)]).unwrap();
        map.drain_changed();
        let before = map.clone();
        map.integrate_frame(&[]).unwrap();
        assert_eq!(map.version(), before.version() + 1);
        assert!(map.pending_changes().is_empty());
        assert_eq!(map.voxel_count(), before.voxel_count());
        assert_eq!(map.extract_instances(1), before.extract_instances(1));
    }

    #[test]
    fn voxel_index_floors() {
        let mut map = LabeledVoxelMap::new();
        map.integrate_frame(&[obs([0.10, 0.02, 0.03], 1, "chair", None)]).unwrap();
        let keys: Vec<_> = map.instance_keys().copied().collect();
        assert_eq!(keys, vec![[2, 0, 0]]);
        assert_eq!(voxel_index(&Vector3::new(-0.01, 0.0, 0.0), 0.04), [-1, 0, 0]);
    }

    #[test]
    fn category_plurality() {
        let mut map = LabeledVoxelMap::new();
        let p = [0.01, 0.01, 0.01];
        map.integrate_frame(&[obs(p, 1, "chair", None), obs(p, 1, "chair", None), obs(p, 1, "sofa", None)])
            .unwrap();
        let recs = map.extract_instances(1);
        assert_eq!(recs[0].category, "chair");
    }

    #[test]
    fn ties_break_to_smallest() {
        let mut votes = BTreeMap::new();
        votes.insert("sofa".to_string(), 2);
        votes.insert("chair".to_string(), 2);
        assert_eq!(plurality(&votes).unwrap(), "chair");
        let mut ids = BTreeMap::new();
        ids.insert(9u32, 1u32);
        ids.insert(4, 1);
        assert_eq!(*plurality(&ids).unwrap(), 4);
    }

    #[test]
    fn rejects_malformed_frame_atomically() {
        let mut map = LabeledVoxelMap::new();
        let mut bad = obs([0.0, 0.0, 0.0], 2, "chair", None);
        bad.normal = Vector3::new(0.0, 0.0, 1.1);
        let err = map.integrate_frame(&[obs([1.0, 0.0, 0.0], 1, "chair", None), bad]);
        assert!(matches!(err, Err(MapError::MalformedObservation(_))));
        assert_eq!(map.voxel_count(), 0);
        assert_eq!(map.version(), 0);
        assert!(map.pending_changes().is_empty());

        let empty_cat = obs([0.0, 0.0, 0.0], 2, "", None);
        assert!(map.integrate_frame(&[empty_cat]).is_err());
    }

    #[test]
    fn unknown_affordance_token() {
        assert_eq!("sittable".parse::<Affordance>().unwrap(), Affordance::Sittable);
        assert!("floating".parse::<Affordance>().is_err());
    }

    fn instance_block(id: InstanceId, origin: [f64; 3], n: usize, cat: &str) -> Vec<LabeledObservation> {
        (0..n)
            .map(|i| obs([origin[0] + 0.04 * i as f64 + 0.02, origin[1] + 0.02, origin[2] + 0.02], id, cat, None))
            .collect()
    }

    #[test]
    fn below_min_voxels_withheld() {
        let mut map = LabeledVoxelMap::new();
        map.integrate_frame(&instance_block(1, [0.0; 3], 5, "chair")).unwrap();
        assert!(map.extract_instances(DEFAULT_MIN_VOXELS).is_empty());
    }

    #[test]
    fn parts_from_affordance_votes() {
        let mut map = LabeledVoxelMap::new();
        let mut frame = instance_block(1, [0.0; 3], 12, "chair");
        for o in frame.iter_mut().take(3) {
            o.affordance = Some(Affordance::Sittable);
        }
        map.integrate_frame(&frame).unwrap();
        let recs = map.extract_instances(DEFAULT_MIN_VOXELS);
        assert_eq!(recs.len(), 1);
        assert_eq!(recs[0].category, "chair");
        assert_eq!(recs[0].points.len(), 12);
        assert_eq!(recs[0].parts[&Affordance::Sittable].len(), 3);
    }

    #[test]
    fn records_ordered_by_id() {
        let mut map = LabeledVoxelMap::new();
        let mut frame = instance_block(7, [0.0; 3], 10, "chair");
        frame.extend(instance_block(3, [0.0, 1.0, 0.0], 10, "sofa"));
        map.integrate_frame(&frame).unwrap();
        let ids: Vec<_> = map.extract_instances(10).iter().map(|r| r.instance_id).collect();
        assert_eq!(ids, vec![3, 7]);
    }

    #[test]
    fn drain_semantics() {
        let mut map = LabeledVoxelMap::new();
        map.integrate_frame(&[obs([0.0; 3], 2, "chair", None), obs([1.0, 0.0, 0.0], 5, "tv", None)])
            .unwrap();
        assert_eq!(map.drain_changed(), BTreeSet::from([2, 5]));
        assert!(map.drain_changed().is_empty());

        map.integrate_frame(&[obs([0.0; 3], 2, "chair", None)]).unwrap();
        map.integrate_frame(&[obs([1.0, 0.0, 0.0], 5, "tv", None)]).unwrap();
        assert_eq!(map.drain_changed(), BTreeSet::from([2, 5]));
    }

    #[test]
    fn takeover_marks_previous_owner_changed() {
        let mut map = LabeledVoxelMap::new();
        map.integrate_frame(&[obs([0.0; 3], 2, "chair", None)]).unwrap();
        map.drain_changed();
        map.integrate_frame(&[obs([0.0; 3], 9, "chair", None), obs([0.0; 3], 9, "chair", None)])
            .unwrap();
        assert_eq!(map.drain_changed(), BTreeSet::from([2, 9]));
    }

    #[test]
    fn normals_renormalized() {
        let mut map = LabeledVoxelMap::new();
        let mut a = obs([0.0; 3], 1, "chair", None);
        a.normal = Vector3::x();
        let mut b = a.clone();
        b.normal = Vector3::y();
        map.integrate_frame(&[a, b]).unwrap();
        let rec = &map.extract_instances(1)[0];
        let n = rec.normals[0];
        assert!((n.norm() - 1.0).abs() < 1e-12);
        assert!((n.x - n.y).abs() < 1e-12);
    }
}
