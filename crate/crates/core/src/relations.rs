//! Directional, distance and support relations between ordered box pairs.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use nalgebra::Vector2;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::abstraction::{AbstractedInstance, Obb};
use crate::semantic_map::{Affordance, InstanceId};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RelationThresholds {
    /// Widening of the directional bands beyond the object's footprint.
    pub d_offset: f64,
    pub d_adjacent: f64,
    pub d_near: f64,
    pub d_support: f64,
}

impl Default for RelationThresholds {
    fn default() -> Self {
        Self {
            d_offset: 0.5,
            d_adjacent: 0.1,
            d_near: 1.0,
            d_support: 0.1,
        }
    }
}

impl RelationThresholds {
    pub fn validate(&self) -> Result<(), RelationError> {
        let all = [self.d_offset, self.d_adjacent, self.d_near, self.d_support];
        if all.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(RelationError::InvalidThresholds("thresholds must be finite and >= 0".into()));
        }
        if self.d_adjacent >= self.d_near {
            return Err(RelationError::InvalidThresholds("d_adjacent must be < d_near".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RelationLabel {
    InFrontOf,
    Behind,
    OnLeft,
    OnRight,
    Near,
    Adjacent,
    On,
    Above,
    Under,
}

impl RelationLabel {
    pub const ALL: [RelationLabel; 9] = [
        RelationLabel::InFrontOf,
        RelationLabel::Behind,
        RelationLabel::OnLeft,
        RelationLabel::OnRight,
        RelationLabel::Near,
        RelationLabel::Adjacent,
        RelationLabel::On,
        RelationLabel::Above,
        RelationLabel::Under,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            RelationLabel::InFrontOf => "in_front_of",
            RelationLabel::Behind => "behind",
            RelationLabel::OnLeft => "on_left",
            RelationLabel::OnRight => "on_right",
            RelationLabel::Near => "near",
            RelationLabel::Adjacent => "adjacent",
            RelationLabel::On => "on",
            RelationLabel::Above => "above",
            RelationLabel::Under => "under",
        }
    }

    /// Whether a scene edge with label `self` satisfies a required label.
    /// `adjacent` is the tighter distance tier and so also satisfies `near`.
    pub fn satisfies(self, required: RelationLabel) -> bool {
        self == required || (self == RelationLabel::Adjacent && required == RelationLabel::Near)
    }
}

impl fmt::Display for RelationLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for RelationLabel {
    type Err = RelationError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        RelationLabel::ALL
            .into_iter()
            .find(|l| l.as_str() == s)
            .ok_or_else(|| RelationError::UnknownRelation(s.to_string()))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RelationError {
    #[error("object instance {0} has no front direction")]
    FrontMissing(InstanceId),
    #[error("unknown relation `{0}`")]
    UnknownRelation(String),
    #[error("invalid thresholds: {0}")]
    InvalidThresholds(String),
}

/// Directed, labeled relation `label(subject, object)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Relation {
    pub subject: InstanceId,
    pub object: InstanceId,
    pub label: RelationLabel,
}

/// Where `s` lies relative to the facing of `o`.
pub fn directional(
    s: &AbstractedInstance,
    o: &AbstractedInstance,
    th: &RelationThresholds,
) -> Result<Option<RelationLabel>, RelationError> {
    let front = o.obb.front.ok_or(RelationError::FrontMissing(o.instance_id))?;
    let left = Vector2::new(-front.y, front.x);
    let d = s.obb.center.xy() - o.obb.center.xy();
    let x = d.dot(&front);
    let y = d.dot(&left);
    let hx = o.obb.half_extent_towards(&front);
    let hy = o.obb.half_extent_towards(&left);

    let label = if y.abs() <= hy + th.d_offset && x > hx {
        Some(RelationLabel::InFrontOf)
    } else if y.abs() <= hy + th.d_offset && x < -hx {
        Some(RelationLabel::Behind)
    } else if x.abs() <= hx + th.d_offset && y > hy {
        Some(RelationLabel::OnLeft)
    } else if x.abs() <= hx + th.d_offset && y < -hy {
        Some(RelationLabel::OnRight)
    } else {
        None
    };
    Ok(label)
}

/// Gap between the two footprints along the segment joining their centers;
/// zero when the footprints overlap.
pub fn surface_gap(a: &Obb, b: &Obb) -> f64 {
    let fa = a.footprint();
    let fb = b.footprint();
    if fa.overlaps(&fb) {
        return 0.0;
    }
    let d = fb.center - fa.center;
    let len = d.norm();
    if len == 0.0 {
        return 0.0;
    }
    let dir = d / len;
    (len - fa.exit_distance(&dir) - fb.exit_distance(&dir)).max(0.0)
}

/// Distance tier; symmetric in its arguments.
pub fn distance(s: &AbstractedInstance, o: &AbstractedInstance, th: &RelationThresholds) -> Option<RelationLabel> {
    // Evaluate in a canonical order so the floating-point result is
    // bit-identical either way round.
    let gap = if (s.instance_id, s.obb.center.x, s.obb.center.y) <= (o.instance_id, o.obb.center.x, o.obb.center.y) {
        surface_gap(&s.obb, &o.obb)
    } else {
        surface_gap(&o.obb, &s.obb)
    };
    if gap <= th.d_adjacent {
        Some(RelationLabel::Adjacent)
    } else if gap <= th.d_near {
        Some(RelationLabel::Near)
    } else {
        None
    }
}

/// The part of `o` against which vertical relations are measured.
pub fn support_surface(o: &AbstractedInstance) -> &Obb {
    o.part(Affordance::Sittable)
        .or_else(|| o.part(Affordance::Supportable))
        .unwrap_or(&o.obb)
}

/// Vertical relation of `s` to `o`. Requires the center of `s` to lie inside
/// the footprint of `o`.
pub fn support(s: &AbstractedInstance, o: &AbstractedInstance, th: &RelationThresholds) -> Option<RelationLabel> {
    if !o.obb.footprint().contains(&s.obb.center.xy(), 0.0) {
        return None;
    }
    let surface = support_surface(o);
    let gap = s.obb.bottom() - surface.top();
    // `on` also requires the subject to sit above the surface it rests on,
    // which keeps the relation anti-symmetric for thin boxes.
    if gap.abs() <= th.d_support && s.obb.center.z > surface.top() {
        Some(RelationLabel::On)
    } else if gap > th.d_support {
        Some(RelationLabel::Above)
    } else if s.obb.top() < o.obb.bottom() - th.d_support {
        Some(RelationLabel::Under)
    } else {
        None
    }
}

/// All relations between `s` and `o`, in both directions.
pub fn relations_for_pair(
    s: &AbstractedInstance,
    o: &AbstractedInstance,
    th: &RelationThresholds,
) -> BTreeSet<Relation> {
    let mut out = BTreeSet::new();
    let mut push = |subject: &AbstractedInstance, object: &AbstractedInstance, label: Option<RelationLabel>| {
        if let Some(label) = label {
            out.insert(Relation {
                subject: subject.instance_id,
                object: object.instance_id,
                label,
            });
        }
    };
    push(s, o, directional(s, o, th).ok().flatten());
    push(o, s, directional(o, s, th).ok().flatten());
    let dist = distance(s, o, th);
    push(s, o, dist);
    push(o, s, dist);
    push(s, o, support(s, o, th));
    push(o, s, support(o, s, th));
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::Vector3;

    fn inst(id: InstanceId, c: [f64; 3], ext: [f64; 3], front: Option<[f64; 2]>) -> AbstractedInstance {
        let mut obb = Obb::z_aligned(Vector3::from(c), Vector3::from(ext), 0.0);
        obb.front = front.map(Vector2::from);
        AbstractedInstance::from_obb(id, "box", obb)
    }

    fn chair_o() -> AbstractedInstance {
        inst(1, [0.0, 0.0, 0.5], [1.0, 1.0, 1.0], Some([1.0, 0.0]))
    }

    #[test]
    fn directional_bands() {
        let th = RelationThresholds::default();
        let o = chair_o();
        let at = |x: f64, y: f64| directional(&inst(2, [x, y, 0.5], [0.2; 3], None), &o, &th).unwrap();
        assert_eq!(at(2.0, 0.0), Some(RelationLabel::InFrontOf));
        assert_eq!(at(-2.0, 0.0), Some(RelationLabel::Behind));
        assert_eq!(at(0.0, 2.0), Some(RelationLabel::OnLeft));
        assert_eq!(at(0.0, -2.0), Some(RelationLabel::OnRight));
        assert_eq!(at(2.0, 2.0), None);
        assert_eq!(at(0.1, 0.1), None);
    }

    #[test]
    fn directional_follows_front() {
        let th = RelationThresholds::default();
        let mut o = chair_o();
        o.obb.front = Some(Vector2::new(0.0, -1.0));
        let s = inst(2, [0.0, -2.0, 0.5], [0.2; 3], None);
        assert_eq!(directional(&s, &o, &th).unwrap(), Some(RelationLabel::InFrontOf));
        // facing -y, +x is on the left
        let s = inst(2, [2.0, 0.0, 0.5], [0.2; 3], None);
        assert_eq!(directional(&s, &o, &th).unwrap(), Some(RelationLabel::OnLeft));
    }

    #[test]
    fn directional_needs_front() {
        let o = inst(1, [0.0; 3], [1.0; 3], None);
        let s = inst(2, [2.0, 0.0, 0.0], [1.0; 3], None);
        assert_eq!(
            directional(&s, &o, &RelationThresholds::default()),
            Err(RelationError::FrontMissing(1))
        );
    }

    #[test]
    fn distance_tiers() {
        let th = RelationThresholds::default();
        let a = inst(1, [0.0, 0.0, 0.5], [1.0; 3], None);
        let b = |gap: f64| inst(2, [1.0 + gap, 0.0, 0.5], [1.0; 3], None);
        assert_eq!(distance(&a, &b(0.05), &th), Some(RelationLabel::Adjacent));
        assert_eq!(distance(&a, &b(0.5), &th), Some(RelationLabel::Near));
        assert_eq!(distance(&a, &b(2.0), &th), None);
        assert_eq!(distance(&b(0.5), &a, &th), Some(RelationLabel::Near));
    }

    #[test]
    fn support_relations() {
        let th = RelationThresholds::default();
        let table = inst(1, [0.0, 0.0, 0.36], [1.2, 0.8, 0.72], None);
        let lamp = |bottom: f64| inst(2, [0.1, 0.0, bottom + 0.2], [0.2, 0.2, 0.4], None);
        assert_eq!(support(&lamp(0.72), &table, &th), Some(RelationLabel::On));
        assert_eq!(support(&lamp(1.22), &table, &th), Some(RelationLabel::Above));
        assert_eq!(support(&table, &lamp(0.72), &th), None);
        let under = inst(3, [0.0, 0.0, 0.1], [0.2, 0.2, 0.2], None);
        let shelf_high = inst(4, [0.0, 0.0, 1.5], [1.0, 1.0, 0.2], None);
        assert_eq!(support(&under, &shelf_high, &th), Some(RelationLabel::Under));
        // center outside the footprint
        let off = inst(5, [3.0, 0.0, 1.0], [0.2; 3], None);
        assert_eq!(support(&off, &table, &th), None);
    }

    #[test]
    fn sittable_part_is_support_surface() {
        let th = RelationThresholds::default();
        let seat = Obb::z_aligned(Vector3::new(0.0, 0.1, 0.425), Vector3::new(1.6, 0.6, 0.05), 0.0);
        let sofa = inst(1, [0.0, 0.0, 0.4], [1.8, 0.9, 0.8], Some([0.0, 1.0])).with_part(Affordance::Sittable, seat);
        let character = inst(2, [0.0, 0.1, 0.45 + 0.6], [0.4, 0.4, 1.2], None);
        assert_eq!(support(&character, &sofa, &th), Some(RelationLabel::On));
    }

    #[test]
    fn pair_union() {
        let th = RelationThresholds::default();
        let chair = inst(1, [0.0, 0.0, 0.45], [0.5, 0.5, 0.9], Some([1.0, 0.0]));
        let tv = inst(2, [0.25 + 1.5 + 0.05, 0.0, 0.8], [0.1, 1.0, 0.6], Some([-1.0, 0.0]));
        let rel = relations_for_pair(&tv, &chair, &th);
        assert!(rel.contains(&Relation { subject: 2, object: 1, label: RelationLabel::InFrontOf }));
        assert!(rel.contains(&Relation { subject: 1, object: 2, label: RelationLabel::InFrontOf }));
        assert_eq!(rel.len(), 2);

        let a = inst(1, [0.0; 3], [1.0; 3], None);
        let b = inst(2, [5.0, 0.0, 0.0], [1.0; 3], None);
        assert!(relations_for_pair(&a, &b, &th).is_empty());
    }

    #[test]
    fn book_on_shelf() {
        let th = RelationThresholds::default();
        let shelf = inst(1, [0.0, 0.0, 0.5], [1.0, 0.4, 1.0], None);
        let book = inst(2, [0.0, 0.0, 1.02], [0.2, 0.15, 0.04], None);
        let rel = relations_for_pair(&book, &shelf, &th);
        let expected: BTreeSet<_> = [
            Relation { subject: 2, object: 1, label: RelationLabel::On },
            Relation { subject: 2, object: 1, label: RelationLabel::Adjacent },
            Relation { subject: 1, object: 2, label: RelationLabel::Adjacent },
        ]
        .into_iter()
        .collect();
        assert_eq!(rel, expected);
    }

    #[test]
    fn threshold_validation() {
        assert!(RelationThresholds::default().validate().is_ok());
        let bad = RelationThresholds { d_adjacent: 2.0, ..Default::default() };
        assert!(bad.validate().is_err());
        let neg = RelationThresholds { d_offset: -1.0, ..Default::default() };
        assert!(neg.validate().is_err());
    }

    #[test]
    fn label_tokens() {
        for l in RelationLabel::ALL {
            assert_eq!(l.as_str().parse::<RelationLabel>().unwrap(), l);
        }
        assert!("floats_above".parse::<RelationLabel>().is_err());
        assert!(RelationLabel::Adjacent.satisfies(RelationLabel::Near));
        assert!(!RelationLabel::Near.satisfies(RelationLabel::Adjacent));
    }
}
