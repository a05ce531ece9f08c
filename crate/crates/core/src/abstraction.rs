//! Oriented bounding boxes for instances and affordance parts, and front
//! direction estimation.
//!
//! Instance boxes are z-aligned: the footprint is the minimum-area rectangle
//! of the XY projection and the vertical span is `[min z, max z]`. Part boxes
//! use the principal axes of the point covariance. Fronts are picked from the
//! four horizontal face normals, in order of precedence:
//!
//! 1. sittable and leanable parts present: the face pointing from the
//!    backrest towards the seat;
//! 2. otherwise the face pair perpendicular to the longer horizontal extent
//!    (parallel for long-axis categories such as beds), signed by the mean
//!    horizontal observation normal;
//!
//! and frontless categories never get one.

use std::collections::{BTreeMap, BTreeSet};

use nalgebra::{Matrix3, SymmetricEigen, Vector2, Vector3};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{min_area_rect, Rect2};
use crate::semantic_map::{Affordance, InstanceId, InstanceRecord};

pub const EXTENT_EPSILON: f64 = 1e-4;
const DEGENERATE_NORMAL: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AbstractionError {
    #[error("insufficient points: {0}")]
    InsufficientPoints(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ObbKind {
    Instance,
    Part,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Orientation {
    /// Rotation about world z; local x is `(cos yaw, sin yaw, 0)`.
    Yaw(f64),
    /// Columns are the box axes.
    Basis(Matrix3<f64>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Obb {
    pub center: Vector3<f64>,
    /// Full side lengths along the box axes.
    pub extents: Vector3<f64>,
    pub orientation: Orientation,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub front: Option<Vector2<f64>>,
    pub kind: ObbKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub affordance: Option<Affordance>,
}

impl Obb {
    pub fn z_aligned(center: Vector3<f64>, extents: Vector3<f64>, yaw: f64) -> Self {
        Self {
            center,
            extents: extents.map(|e| e.max(EXTENT_EPSILON)),
            orientation: Orientation::Yaw(yaw),
            front: None,
            kind: ObbKind::Instance,
            affordance: None,
        }
    }

    pub fn with_front(mut self, front: Vector2<f64>) -> Self {
        self.front = Some(front);
        self
    }

    pub fn axes(&self) -> Matrix3<f64> {
        match self.orientation {
            Orientation::Yaw(yaw) => {
                let (s, c) = yaw.sin_cos();
                Matrix3::new(c, -s, 0.0, s, c, 0.0, 0.0, 0.0, 1.0)
            }
            Orientation::Basis(m) => m,
        }
    }

    pub fn yaw(&self) -> Option<f64> {
        match self.orientation {
            Orientation::Yaw(y) => Some(y),
            Orientation::Basis(_) => None,
        }
    }

    /// Half-height of the box projected on world z.
    fn vertical_half_span(&self) -> f64 {
        let axes = self.axes();
        (0..3).map(|k| axes[(2, k)].abs() * self.extents[k] / 2.0).sum()
    }

    pub fn top(&self) -> f64 {
        self.center.z + self.vertical_half_span()
    }

    pub fn bottom(&self) -> f64 {
        self.center.z - self.vertical_half_span()
    }

    /// XY footprint. For part boxes this is the minimum rectangle around the
    /// projected corners.
    pub fn footprint(&self) -> Rect2 {
        match self.orientation {
            Orientation::Yaw(yaw) => Rect2::new(self.center.xy(), yaw, self.extents.xy()),
            Orientation::Basis(_) => {
                let corners: Vec<Vector2<f64>> = self.corners().iter().map(|c| c.xy()).collect();
                min_area_rect(&corners).unwrap_or_else(|| {
                    let r = corners
                        .iter()
                        .map(|c| (c - self.center.xy()).norm())
                        .fold(EXTENT_EPSILON, f64::max);
                    Rect2::new(self.center.xy(), 0.0, Vector2::new(2.0 * r, 2.0 * r))
                })
            }
        }
    }

    pub fn corners(&self) -> [Vector3<f64>; 8] {
        let axes = self.axes();
        let h = self.extents / 2.0;
        let mut out = [Vector3::zeros(); 8];
        for (i, c) in out.iter_mut().enumerate() {
            let sx = if i & 1 == 0 { -1.0 } else { 1.0 };
            let sy = if i & 2 == 0 { -1.0 } else { 1.0 };
            let sz = if i & 4 == 0 { -1.0 } else { 1.0 };
            *c = self.center + axes * Vector3::new(sx * h.x, sy * h.y, sz * h.z);
        }
        out
    }

    pub fn contains(&self, p: &Vector3<f64>, eps: f64) -> bool {
        let local = self.axes().transpose() * (p - self.center);
        (0..3).all(|k| local[k].abs() <= self.extents[k] / 2.0 + eps)
    }

    /// Horizontal face normals of a z-aligned box in the order
    /// `[+x, +y, -x, -y]` of its local frame.
    pub fn horizontal_face_normals(&self) -> [Vector2<f64>; 4] {
        let yaw = self.yaw().unwrap_or(0.0);
        let (s, c) = yaw.sin_cos();
        let u = Vector2::new(c, s);
        let v = Vector2::new(-s, c);
        [u, v, -u, -v]
    }

    /// Yaw of the front direction, when one is set.
    pub fn front_yaw(&self) -> Option<f64> {
        self.front.map(|f| f.y.atan2(f.x))
    }

    /// Center of the face whose outward normal points most upward.
    pub fn top_face_center(&self) -> Vector3<f64> {
        let axes = self.axes();
        let k = (0..3)
            .max_by(|&a, &b| axes[(2, a)].abs().total_cmp(&axes[(2, b)].abs()))
            .unwrap();
        let axis = axes.column(k).into_owned();
        let sign = if axis.z >= 0.0 { 1.0 } else { -1.0 };
        self.center + axis * (sign * self.extents[k] / 2.0)
    }

    /// Half extent of the box along its local axis closest to `dir`.
    pub fn half_extent_towards(&self, dir: &Vector2<f64>) -> f64 {
        let (s, c) = self.yaw().unwrap_or(0.0).sin_cos();
        if dir.dot(&Vector2::new(c, s)).abs() >= dir.dot(&Vector2::new(-s, c)).abs() {
            self.extents.x / 2.0
        } else {
            self.extents.y / 2.0
        }
    }
}

/// Which heuristic produced the front direction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FrontSource {
    Affordance,
    Normals,
    Frontless,
    /// Normals cancel out and no affordance rule applies; front is absent.
    Degenerate,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AbstractionConfig {
    pub long_axis_categories: BTreeSet<String>,
    pub frontless_categories: BTreeSet<String>,
}

impl Default for AbstractionConfig {
    fn default() -> Self {
        Self {
            long_axis_categories: ["bed"].into_iter().map(String::from).collect(),
            frontless_categories: ["table", "floor", "wall", "ceiling", "otherprops"]
                .into_iter()
                .map(String::from)
                .collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AbstractedInstance {
    pub instance_id: InstanceId,
    pub category: String,
    pub obb: Obb,
    pub part_obbs: BTreeMap<Affordance, Obb>,
    pub attributes: BTreeSet<Affordance>,
    pub front_source: FrontSource,
}

impl AbstractedInstance {
    /// Instance with no parts; handy for tests and synthetic scenes.
    pub fn from_obb(instance_id: InstanceId, category: impl Into<String>, obb: Obb) -> Self {
        let front_source = if obb.front.is_some() {
            FrontSource::Normals
        } else {
            FrontSource::Frontless
        };
        Self {
            instance_id,
            category: category.into(),
            obb,
            part_obbs: BTreeMap::new(),
            attributes: BTreeSet::new(),
            front_source,
        }
    }

    pub fn with_part(mut self, affordance: Affordance, mut obb: Obb) -> Self {
        obb.kind = ObbKind::Part;
        obb.affordance = Some(affordance);
        self.part_obbs.insert(affordance, obb);
        self.attributes.insert(affordance);
        self
    }

    pub fn part(&self, affordance: Affordance) -> Option<&Obb> {
        self.part_obbs.get(&affordance)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum AbstractionWarning {
    PartDropped {
        affordance: Affordance,
        reason: AbstractionError,
    },
    DegenerateNormals,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Abstraction {
    pub instance: AbstractedInstance,
    pub warnings: Vec<AbstractionWarning>,
}

pub fn fit_zobb(points: &[Vector3<f64>]) -> Result<Obb, AbstractionError> {
    if points.len() < 3 {
        return Err(AbstractionError::InsufficientPoints(format!(
            "{} points, need at least 3",
            points.len()
        )));
    }
    let xy: Vec<Vector2<f64>> = points.iter().map(|p| p.xy()).collect();
    let rect = min_area_rect(&xy).ok_or_else(|| {
        AbstractionError::InsufficientPoints("points are horizontally collinear or coincident".into())
    })?;
    let (zmin, zmax) = points
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), p| (lo.min(p.z), hi.max(p.z)));
    Ok(Obb::z_aligned(
        Vector3::new(rect.center.x, rect.center.y, (zmin + zmax) / 2.0),
        Vector3::new(rect.size.x, rect.size.y, zmax - zmin),
        rect.angle,
    ))
}

pub fn fit_part_obb(points: &[Vector3<f64>]) -> Result<Obb, AbstractionError> {
    if points.len() < 3 {
        return Err(AbstractionError::InsufficientPoints(format!(
            "{} points, need at least 3",
            points.len()
        )));
    }
    let n = points.len() as f64;
    let mean = points.iter().sum::<Vector3<f64>>() / n;
    let cov = points
        .iter()
        .map(|p| {
            let d = p - mean;
            d * d.transpose()
        })
        .sum::<Matrix3<f64>>()
        / n;

    let eig = SymmetricEigen::new(cov);
    let mut order = [0usize, 1, 2];
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let first = canonical_sign(eig.eigenvectors.column(order[0]).normalize());
    let second = canonical_sign(eig.eigenvectors.column(order[1]).normalize());
    let third = first.cross(&second).normalize();
    let basis = Matrix3::from_columns(&[first, second, third]);

    let mut lo = Vector3::repeat(f64::INFINITY);
    let mut hi = Vector3::repeat(f64::NEG_INFINITY);
    for p in points {
        let local = basis.transpose() * (p - mean);
        lo = lo.inf(&local);
        hi = hi.sup(&local);
    }
    let mid = (lo + hi) / 2.0;
    Ok(Obb {
        center: mean + basis * mid,
        extents: (hi - lo).map(|e| e.max(EXTENT_EPSILON)),
        orientation: Orientation::Basis(basis),
        front: None,
        kind: ObbKind::Part,
        affordance: None,
    })
}

/// Flip so the largest-magnitude component is positive.
fn canonical_sign(v: Vector3<f64>) -> Vector3<f64> {
    let k = v.iamax();
    if v[k] < 0.0 {
        -v
    } else {
        v
    }
}

pub fn estimate_front(
    obb: &Obb,
    category: &str,
    normals: &[Vector3<f64>],
    parts: &BTreeMap<Affordance, Obb>,
    config: &AbstractionConfig,
) -> (Obb, FrontSource) {
    let mut out = obb.clone();
    out.front = None;
    if config.frontless_categories.contains(category) {
        return (out, FrontSource::Frontless);
    }
    let faces = obb.horizontal_face_normals();

    if let (Some(seat), Some(back)) = (parts.get(&Affordance::Sittable), parts.get(&Affordance::Leanable)) {
        let v = (seat.center - back.center).xy();
        if v.norm() > 1e-12 {
            out.front = Some(best_aligned(&faces, &v));
            return (out, FrontSource::Affordance);
        }
    }

    let long_is_x = obb.extents.x >= obb.extents.y;
    let along_long = config.long_axis_categories.contains(category);
    let candidates = if long_is_x != along_long {
        [faces[1], faces[3]]
    } else {
        [faces[0], faces[2]]
    };

    let mean = normals.iter().map(|n| n.xy()).sum::<Vector2<f64>>() / normals.len().max(1) as f64;
    if mean.norm() < DEGENERATE_NORMAL {
        return (out, FrontSource::Degenerate);
    }
    out.front = Some(best_aligned(&candidates, &mean));
    (out, FrontSource::Normals)
}

/// First candidate with maximal dot product against `dir`.
fn best_aligned(candidates: &[Vector2<f64>], dir: &Vector2<f64>) -> Vector2<f64> {
    let mut best = candidates[0];
    let mut best_dot = best.dot(dir);
    for c in &candidates[1..] {
        let d = c.dot(dir);
        if d > best_dot {
            best = *c;
            best_dot = d;
        }
    }
    best
}

pub fn abstract_instance(
    record: &InstanceRecord,
    config: &AbstractionConfig,
) -> Result<Abstraction, AbstractionError> {
    let obb = fit_zobb(&record.points)?;
    let mut warnings = Vec::new();
    let mut part_obbs = BTreeMap::new();
    for (&affordance, points) in &record.parts {
        match fit_part_obb(points) {
            Ok(mut part) => {
                part.affordance = Some(affordance);
                part_obbs.insert(affordance, part);
            }
            Err(reason) => warnings.push(AbstractionWarning::PartDropped { affordance, reason }),
        }
    }
    let (obb, front_source) = estimate_front(&obb, &record.category, &record.normals, &part_obbs, config);
    if front_source == FrontSource::Degenerate {
        warnings.push(AbstractionWarning::DegenerateNormals);
    }
    for w in &warnings {
        log::warn!("instance {}: {:?}", record.instance_id, w);
    }
    Ok(Abstraction {
        instance: AbstractedInstance {
            instance_id: record.instance_id,
            category: record.category.clone(),
            attributes: part_obbs.keys().copied().collect(),
            obb,
            part_obbs,
            front_source,
        },
        warnings,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{FRAC_PI_2, PI};

    fn box_corners(min: [f64; 3], max: [f64; 3]) -> Vec<Vector3<f64>> {
        let mut out = Vec::new();
        for &x in &[min[0], max[0]] {
            for &y in &[min[1], max[1]] {
                for &z in &[min[2], max[2]] {
                    out.push(Vector3::new(x, y, z));
                }
            }
        }
        out
    }

    fn rot_z(p: &Vector3<f64>, theta: f64) -> Vector3<f64> {
        let (s, c) = theta.sin_cos();
        Vector3::new(c * p.x - s * p.y, s * p.x + c * p.y, p.z)
    }

    /// Independent check: dense sweep of the yaw, min-area enclosing rect.
    fn sweep_min_area(points: &[Vector3<f64>], step_deg: f64) -> (f64, f64) {
        let mut best = (f64::INFINITY, 0.0);
        let steps = (90.0 / step_deg).round() as usize;
        for i in 0..steps {
            let t = (i as f64 * step_deg).to_radians();
            let (s, c) = t.sin_cos();
            let (mut ax, mut bx, mut ay, mut by) = (f64::MAX, f64::MIN, f64::MAX, f64::MIN);
            for p in points {
                let u = c * p.x + s * p.y;
                let v = -s * p.x + c * p.y;
                ax = ax.min(u);
                bx = bx.max(u);
                ay = ay.min(v);
                by = by.max(v);
            }
            let area = (bx - ax) * (by - ay);
            if area < best.0 {
                best = (area, t);
            }
        }
        best
    }

    #[test]
    fn axis_aligned_box() {
        let obb = fit_zobb(&box_corners([0.0; 3], [2.0, 1.0, 1.0])).unwrap();
        assert!((obb.center - Vector3::new(1.0, 0.5, 0.5)).norm() < 1e-12);
        assert!((obb.extents - Vector3::new(2.0, 1.0, 1.0)).norm() < 1e-12);
        assert!(obb.yaw().unwrap().abs() < 1e-12);
        assert_eq!(obb.kind, ObbKind::Instance);
    }

    #[test]
    fn rotated_box_matches_sweep() {
        let theta = 30f64.to_radians();
        let pts: Vec<_> = box_corners([0.0; 3], [2.0, 1.0, 1.0]).iter().map(|p| rot_z(p, theta)).collect();
        let (oracle_area, oracle_yaw) = sweep_min_area(&pts, 0.05);
        assert!((oracle_area - 2.0).abs() < 1e-9);
        assert!((oracle_yaw - theta).abs() < 1e-9);

        let obb = fit_zobb(&pts).unwrap();
        assert!((obb.extents.x * obb.extents.y - 2.0).abs() < 1e-9);
        let yaw = obb.yaw().unwrap();
        assert!(((yaw - theta).rem_euclid(FRAC_PI_2)).min(FRAC_PI_2 - (yaw - theta).rem_euclid(FRAC_PI_2)) < 1e-9);
        for p in &pts {
            assert!(obb.contains(p, 1e-9));
        }
    }

    #[test]
    fn coincident_points_rejected() {
        let p = Vector3::new(1.0, 1.0, 1.0);
        assert!(matches!(fit_zobb(&[p, p, p]), Err(AbstractionError::InsufficientPoints(_))));
        assert!(fit_zobb(&[p, p]).is_err());
        // vertical line: horizontally coincident
        let col: Vec<_> = (0..5).map(|i| Vector3::new(0.0, 0.0, i as f64)).collect();
        assert!(fit_zobb(&col).is_err());
    }

    #[test]
    fn planar_part_has_flat_extent_and_z_axis() {
        let mut pts = Vec::new();
        for i in 0..10 {
            for j in 0..8 {
                pts.push(Vector3::new(i as f64 * 0.05, j as f64 * 0.05, 0.45));
            }
        }
        let part = fit_part_obb(&pts).unwrap();
        assert_eq!(part.kind, ObbKind::Part);
        let flat = (0..3).filter(|&k| part.extents[k] == EXTENT_EPSILON).count();
        assert_eq!(flat, 1);
        let axes = part.axes();
        let has_z = (0..3).any(|k| axes.column(k).dot(&Vector3::z()).abs() > 1.0 - 1e-9);
        assert!(has_z);
        assert!((part.top_face_center().z - 0.45).abs() < 1e-3);
        assert!((axes.determinant() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn part_needs_three_points() {
        let p = Vector3::zeros();
        assert!(fit_part_obb(&[p, Vector3::x()]).is_err());
        assert!(fit_part_obb(&[p, Vector3::x(), Vector3::y()]).is_ok());
    }

    fn instance_box(ext: [f64; 3]) -> Obb {
        Obb::z_aligned(Vector3::new(0.0, 0.0, ext[2] / 2.0), Vector3::from(ext), 0.0)
    }

    fn part_at(c: [f64; 3]) -> Obb {
        let mut o = instance_box([0.4, 0.4, 0.05]);
        o.center = Vector3::from(c);
        o.kind = ObbKind::Part;
        o
    }

    #[test]
    fn affordance_rule_chair() {
        let obb = instance_box([0.5, 0.5, 0.9]);
        let mut parts = BTreeMap::new();
        parts.insert(Affordance::Sittable, part_at([0.0, 0.1, 0.45]));
        parts.insert(Affordance::Leanable, part_at([0.0, -0.1, 0.7]));
        let normals = vec![Vector3::new(0.0, -1.0, 0.0); 4];
        let (out, src) = estimate_front(&obb, "chair", &normals, &parts, &AbstractionConfig::default());
        assert_eq!(src, FrontSource::Affordance);
        assert_eq!(out.front, Some(Vector2::new(0.0, 1.0)));
    }

    #[test]
    fn normals_rule_sofa() {
        let obb = instance_box([1.8, 0.9, 0.8]);
        let normals = vec![Vector3::new(0.05, -1.0, 0.0).normalize(); 10];
        let (out, src) = estimate_front(&obb, "sofa", &normals, &BTreeMap::new(), &AbstractionConfig::default());
        assert_eq!(src, FrontSource::Normals);
        assert_eq!(out.front, Some(Vector2::new(0.0, -1.0)));
    }

    #[test]
    fn long_axis_exception_bed() {
        let obb = instance_box([1.0, 2.0, 0.5]);
        let normals = vec![Vector3::new(0.0, 1.0, 0.0); 10];
        let (out, src) = estimate_front(&obb, "bed", &normals, &BTreeMap::new(), &AbstractionConfig::default());
        assert_eq!(src, FrontSource::Normals);
        let f = out.front.unwrap();
        assert!((f - Vector2::new(0.0, 1.0)).norm() < 1e-12);
        // same normals on a non-exception category would pick the x pair
        let (other, _) = estimate_front(&obb, "cabinet", &normals, &BTreeMap::new(), &AbstractionConfig::default());
        assert!(other.front.unwrap().y.abs() < 1e-12);
    }

    #[test]
    fn frontless_and_degenerate() {
        let obb = instance_box([1.0, 1.0, 0.7]);
        let normals = vec![Vector3::x(); 3];
        let cfg = AbstractionConfig::default();
        let (out, src) = estimate_front(&obb, "table", &normals, &BTreeMap::new(), &cfg);
        assert_eq!((out.front, src), (None, FrontSource::Frontless));
        let cancel = vec![Vector3::x(), -Vector3::x(), Vector3::z()];
        let (out, src) = estimate_front(&obb, "cabinet", &cancel, &BTreeMap::new(), &cfg);
        assert_eq!((out.front, src), (None, FrontSource::Degenerate));
    }

    fn chair_record() -> InstanceRecord {
        let mut points = box_corners([-0.25, -0.25, 0.0], [0.25, 0.25, 0.9]);
        let seat: Vec<_> = (0..4)
            .map(|i| Vector3::new(-0.2 + 0.1 * i as f64, 0.1 + 0.02 * (i % 2) as f64, 0.45))
            .collect();
        let back: Vec<_> = (0..4)
            .map(|i| Vector3::new(-0.2 + 0.1 * i as f64, -0.2, 0.5 + 0.1 * i as f64))
            .collect();
        points.extend(seat.iter().chain(back.iter()));
        let normals = vec![Vector3::new(0.0, -1.0, 0.0); points.len()];
        let mut parts = BTreeMap::new();
        parts.insert(Affordance::Sittable, seat);
        parts.insert(Affordance::Leanable, back);
        InstanceRecord {
            instance_id: 1,
            category: "chair".into(),
            points,
            normals,
            parts,
        }
    }

    #[test]
    fn abstract_chair_uses_parts() {
        let out = abstract_instance(&chair_record(), &AbstractionConfig::default()).unwrap();
        assert_eq!(out.instance.part_obbs.len(), 2);
        assert_eq!(out.instance.front_source, FrontSource::Affordance);
        assert_eq!(out.instance.obb.front, Some(Vector2::new(0.0, 1.0)));
        assert_eq!(
            out.instance.attributes,
            BTreeSet::from([Affordance::Leanable, Affordance::Sittable])
        );
        assert!(out.warnings.is_empty());
    }

    #[test]
    fn dropped_part_falls_back_to_normals() {
        let mut rec = chair_record();
        rec.parts.get_mut(&Affordance::Leanable).unwrap().truncate(2);
        let out = abstract_instance(&rec, &AbstractionConfig::default()).unwrap();
        assert_eq!(out.instance.part_obbs.len(), 1);
        assert!(matches!(
            out.warnings[0],
            AbstractionWarning::PartDropped { affordance: Affordance::Leanable, .. }
        ));
        assert_eq!(out.instance.front_source, FrontSource::Normals);
        assert_eq!(out.instance.obb.front, Some(Vector2::new(0.0, -1.0)));
    }

    #[test]
    fn table_has_no_front() {
        let mut rec = chair_record();
        rec.category = "table".into();
        rec.parts.clear();
        let out = abstract_instance(&rec, &AbstractionConfig::default()).unwrap();
        assert_eq!(out.instance.obb.front, None);
    }

    #[test]
    fn box_geometry_helpers() {
        let obb = Obb::z_aligned(Vector3::new(1.0, 2.0, 0.5), Vector3::new(2.0, 1.0, 1.0), FRAC_PI_2)
            .with_front(Vector2::new(-1.0, 0.0));
        assert!((obb.top() - 1.0).abs() < 1e-12);
        assert!((obb.bottom()).abs() < 1e-12);
        assert!((obb.front_yaw().unwrap() - PI).abs() < 1e-12);
        assert!((obb.top_face_center() - Vector3::new(1.0, 2.0, 1.0)).norm() < 1e-12);
        // local x is world y after a quarter turn
        assert!(obb.contains(&Vector3::new(1.0, 2.9, 0.5), 0.0));
        assert!(!obb.contains(&Vector3::new(1.9, 2.0, 0.5), 0.0));
    }
}
