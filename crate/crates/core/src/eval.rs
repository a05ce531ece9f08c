//! Scoring predicted instance boxes against z-aligned ground truth.
//!
//! Predictions are matched one-to-one to ground truth greedily by
//! descending IoU within each category. A matched pair is a true positive
//! at threshold `t` when its IoU is at least `t` and its orientation error
//! is at most [`TP_MAX_ORIENTATION_ERROR_DEG`].

use std::collections::{BTreeMap, BTreeSet};
use std::f64::consts::PI;

use nalgebra::{Vector2, Vector3};
use serde::{Deserialize, Serialize};

use crate::abstraction::{AbstractedInstance, Obb};
use crate::geometry::Rect2;
use crate::semantic_map::InstanceId;

pub const TP_MAX_ORIENTATION_ERROR_DEG: f64 = 20.0;
pub const DEFAULT_IOU_THRESHOLDS: [f64; 2] = [0.25, 0.5];
pub const MATCHER_NOTE: &str = "greedy one-to-one matching by descending IoU within category";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoxAnnotation {
    pub center: [f64; 3],
    pub extents: [f64; 3],
    pub yaw: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub front: Option<[f64; 2]>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnnotatedObject {
    pub instance_id: InstanceId,
    pub category: String,
    pub obb: BoxAnnotation,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct GroundTruthAnnotation {
    #[serde(default)]
    pub scene: String,
    pub objects: Vec<AnnotatedObject>,
}

impl GroundTruthAnnotation {
    pub fn validate(&self) -> Result<(), String> {
        let mut ids = BTreeSet::new();
        for o in &self.objects {
            if !ids.insert(o.instance_id) {
                return Err(format!("duplicate instance id {}", o.instance_id));
            }
            if o.obb.extents.iter().any(|e| e.is_nan() || *e <= 0.0) {
                return Err(format!("instance {} has non-positive extents", o.instance_id));
            }
        }
        Ok(())
    }

    pub fn from_instances(scene: impl Into<String>, instances: &[AbstractedInstance]) -> Self {
        Self {
            scene: scene.into(),
            objects: instances.iter().map(AnnotatedObject::from).collect(),
        }
    }
}

impl From<&AbstractedInstance> for AnnotatedObject {
    fn from(inst: &AbstractedInstance) -> Self {
        let o = &inst.obb;
        Self {
            instance_id: inst.instance_id,
            category: inst.category.clone(),
            obb: BoxAnnotation {
                center: o.center.into(),
                extents: o.extents.into(),
                yaw: o.yaw().unwrap_or(0.0),
                front: o.front.map(Into::into),
            },
        }
    }
}

impl BoxAnnotation {
    pub fn to_obb(&self) -> Obb {
        let mut obb = Obb::z_aligned(Vector3::from(self.center), Vector3::from(self.extents), self.yaw);
        obb.front = self.front.map(Vector2::from);
        obb
    }

    fn footprint(&self) -> Rect2 {
        Rect2::new(
            Vector2::new(self.center[0], self.center[1]),
            self.yaw,
            Vector2::new(self.extents[0], self.extents[1]),
        )
    }

    fn z_range(&self) -> (f64, f64) {
        (self.center[2] - self.extents[2] / 2.0, self.center[2] + self.extents[2] / 2.0)
    }

    fn volume(&self) -> f64 {
        self.extents.iter().product()
    }

    /// Direction of the longer horizontal side.
    fn long_axis_angle(&self) -> f64 {
        if self.extents[0] >= self.extents[1] {
            self.yaw
        } else {
            self.yaw + PI / 2.0
        }
    }
}

/// Volumetric IoU of two z-aligned boxes.
pub fn iou(a: &BoxAnnotation, b: &BoxAnnotation) -> f64 {
    let (alo, ahi) = a.z_range();
    let (blo, bhi) = b.z_range();
    let dz = (ahi.min(bhi) - alo.max(blo)).max(0.0);
    if dz == 0.0 {
        return 0.0;
    }
    let inter = a.footprint().intersection_area(&b.footprint()) * dz;
    let union = a.volume() + b.volume() - inter;
    if union <= 0.0 {
        0.0
    } else {
        (inter / union).clamp(0.0, 1.0)
    }
}

fn angle_between(a: f64, b: f64, period: f64) -> f64 {
    let d = (a - b).rem_euclid(period);
    d.min(period - d)
}

/// Orientation error in degrees. Uses front directions when the ground truth
/// has one (a missing predicted front counts as 180 degrees); otherwise the
/// long horizontal axes are compared modulo 180 degrees.
pub fn orientation_error_deg(pred: &BoxAnnotation, truth: &BoxAnnotation) -> f64 {
    match (pred.front, truth.front) {
        (Some(p), Some(t)) => angle_between(p[1].atan2(p[0]), t[1].atan2(t[0]), 2.0 * PI).to_degrees(),
        (None, Some(_)) => 180.0,
        (_, None) => angle_between(pred.long_axis_angle(), truth.long_axis_angle(), PI).to_degrees(),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatchedPair {
    pub predicted: usize,
    pub truth: usize,
    pub iou: f64,
    pub orientation_error_deg: f64,
}

/// Greedy one-to-one assignment within category, by descending IoU.
pub fn match_boxes(predicted: &[AnnotatedObject], truth: &[AnnotatedObject]) -> Vec<MatchedPair> {
    let mut pairs = Vec::new();
    for (pi, p) in predicted.iter().enumerate() {
        for (ti, t) in truth.iter().enumerate() {
            if p.category != t.category {
                continue;
            }
            let v = iou(&p.obb, &t.obb);
            if v > 0.0 {
                pairs.push((v, pi, ti));
            }
        }
    }
    pairs.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
    let mut used_p = vec![false; predicted.len()];
    let mut used_t = vec![false; truth.len()];
    let mut out = Vec::new();
    for (v, pi, ti) in pairs {
        if used_p[pi] || used_t[ti] {
            continue;
        }
        used_p[pi] = true;
        used_t[ti] = true;
        out.push(MatchedPair {
            predicted: pi,
            truth: ti,
            iou: v,
            orientation_error_deg: orientation_error_deg(&predicted[pi].obb, &truth[ti].obb),
        });
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub predictions: usize,
    pub ground_truth: usize,
    pub true_positives: usize,
    /// Median over matched pairs with IoU at or above the threshold.
    pub median_orientation_error_deg: Option<f64>,
    /// Mean IoU of true positives, percent.
    pub tp_iou: Option<f64>,
    pub precision: f64,
    pub recall: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThresholdReport {
    pub iou_threshold: f64,
    pub per_category: BTreeMap<String, Metrics>,
    /// Macro average over categories; the median is pooled over all pairs.
    pub overall: Metrics,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub matcher: String,
    pub max_orientation_error_deg: f64,
    pub thresholds: Vec<ThresholdReport>,
}

fn median(mut v: Vec<f64>) -> Option<f64> {
    if v.is_empty() {
        return None;
    }
    v.sort_by(f64::total_cmp);
    let n = v.len();
    Some(if n % 2 == 1 { v[n / 2] } else { (v[n / 2 - 1] + v[n / 2]) / 2.0 })
}

fn pct(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        100.0 * num as f64 / den as f64
    }
}

fn metrics_for(pairs: &[&MatchedPair], n_pred: usize, n_truth: usize, threshold: f64) -> Metrics {
    let passing: Vec<&&MatchedPair> = pairs.iter().filter(|p| p.iou >= threshold).collect();
    let tps: Vec<f64> = passing
        .iter()
        .filter(|p| p.orientation_error_deg <= TP_MAX_ORIENTATION_ERROR_DEG)
        .map(|p| p.iou)
        .collect();
    Metrics {
        predictions: n_pred,
        ground_truth: n_truth,
        true_positives: tps.len(),
        median_orientation_error_deg: median(passing.iter().map(|p| p.orientation_error_deg).collect()),
        tp_iou: (!tps.is_empty()).then(|| 100.0 * tps.iter().sum::<f64>() / tps.len() as f64),
        precision: pct(tps.len(), n_pred),
        recall: pct(tps.len(), n_truth),
    }
}

pub fn eval_obbs(predicted: &[AnnotatedObject], truth: &GroundTruthAnnotation, iou_thresholds: &[f64]) -> EvalReport {
    let pairs = match_boxes(predicted, &truth.objects);
    let categories: BTreeSet<&str> = predicted
        .iter()
        .chain(truth.objects.iter())
        .map(|o| o.category.as_str())
        .collect();

    let thresholds = iou_thresholds
        .iter()
        .map(|&t| {
            let per_category: BTreeMap<String, Metrics> = categories
                .iter()
                .map(|&cat| {
                    let cat_pairs: Vec<&MatchedPair> =
                        pairs.iter().filter(|p| predicted[p.predicted].category == cat).collect();
                    let n_pred = predicted.iter().filter(|o| o.category == cat).count();
                    let n_truth = truth.objects.iter().filter(|o| o.category == cat).count();
                    (cat.to_string(), metrics_for(&cat_pairs, n_pred, n_truth, t))
                })
                .collect();

            let all: Vec<&MatchedPair> = pairs.iter().collect();
            let pooled = metrics_for(&all, predicted.len(), truth.objects.len(), t);
            let k = per_category.len();
            let mean_of = |f: &dyn Fn(&Metrics) -> f64| {
                if k == 0 {
                    0.0
                } else {
                    per_category.values().map(f).sum::<f64>() / k as f64
                }
            };
            let tp_ious: Vec<f64> = per_category.values().filter_map(|m| m.tp_iou).collect();
            let overall = Metrics {
                precision: mean_of(&|m| m.precision),
                recall: mean_of(&|m| m.recall),
                tp_iou: (!tp_ious.is_empty()).then(|| tp_ious.iter().sum::<f64>() / tp_ious.len() as f64),
                ..pooled
            };
            ThresholdReport {
                iou_threshold: t,
                per_category,
                overall,
            }
        })
        .collect();

    EvalReport {
        matcher: MATCHER_NOTE.into(),
        max_orientation_error_deg: TP_MAX_ORIENTATION_ERROR_DEG,
        thresholds,
    }
}
