//! Synthetic furniture built from labeled boxes, sampled into observation
//! streams. Used for fixtures, tests and benchmarks.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use nalgebra::{Rotation3, Vector2, Vector3};
use rand::distr::weighted::WeightedIndex;
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use rand_distr::Normal;

use crate::semantic_map::{Affordance, InstanceId, InstanceRecord, LabeledObservation};
use crate::stream::ObservationFrame;

/// Face order used by [`BoxPart::hidden_faces`]: +x, -x, +y, -y, +z, -z.
pub const FACE_NORMALS: [[f64; 3]; 6] = [
    [1.0, 0.0, 0.0],
    [-1.0, 0.0, 0.0],
    [0.0, 1.0, 0.0],
    [0.0, -1.0, 0.0],
    [0.0, 0.0, 1.0],
    [0.0, 0.0, -1.0],
];

/// Axis-aligned box in the object's local frame (+x is the front).
#[derive(Debug, Clone, PartialEq)]
pub struct BoxPart {
    pub center: Vector3<f64>,
    pub extents: Vector3<f64>,
    pub affordance: Option<Affordance>,
    /// Bit `i` set means face `i` is never observed.
    pub hidden_faces: u8,
}

impl BoxPart {
    pub fn new(center: [f64; 3], extents: [f64; 3]) -> Self {
        Self {
            center: Vector3::from(center),
            extents: Vector3::from(extents),
            affordance: None,
            hidden_faces: 0,
        }
    }

    pub fn labeled(mut self, affordance: Affordance) -> Self {
        self.affordance = Some(affordance);
        self
    }

    pub fn hide(mut self, face: usize) -> Self {
        self.hidden_faces |= 1 << face;
        self
    }

    fn face_area(&self, face: usize) -> f64 {
        let e = &self.extents;
        match face / 2 {
            0 => e.y * e.z,
            1 => e.x * e.z,
            _ => e.x * e.y,
        }
    }

    fn sample_face(&self, face: usize, rng: &mut impl Rng) -> Vector3<f64> {
        let axis = face / 2;
        let sign = if face.is_multiple_of(2) { 1.0 } else { -1.0 };
        let mut p = Vector3::zeros();
        for k in 0..3 {
            p[k] = if k == axis {
                sign * self.extents[k] / 2.0
            } else {
                (rng.random::<f64>() - 0.5) * self.extents[k]
            };
        }
        self.center + p
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SampleOptions {
    /// Points per square meter of visible surface.
    pub density: f64,
    /// Standard deviation of isotropic position noise, meters.
    pub noise_sigma: f64,
    /// Fraction of sampled points discarded at random.
    pub drop_fraction: f64,
}

impl Default for SampleOptions {
    fn default() -> Self {
        Self {
            density: 300.0,
            noise_sigma: 0.0,
            drop_fraction: 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthObject {
    pub instance_id: InstanceId,
    pub category: String,
    /// Floor position of the local origin.
    pub position: Vector3<f64>,
    /// Heading of local +x in the world.
    pub front_yaw: f64,
    pub parts: Vec<BoxPart>,
    /// First frame id that carries points of this object.
    pub appear_at: u64,
}

impl SynthObject {
    pub fn new(instance_id: InstanceId, category: &str, at: [f64; 2], front_yaw: f64, parts: Vec<BoxPart>) -> Self {
        Self {
            instance_id,
            category: category.into(),
            position: Vector3::new(at[0], at[1], 0.0),
            front_yaw,
            parts,
            appear_at: 0,
        }
    }

    pub fn appearing_at(mut self, frame: u64) -> Self {
        self.appear_at = frame;
        self
    }

    pub fn chair(id: InstanceId, at: [f64; 2], front_yaw: f64) -> Self {
        let mut parts = vec![
            BoxPart::new([0.0, 0.0, 0.45], [0.5, 0.5, 0.06]).labeled(Affordance::Sittable),
            BoxPart::new([-0.22, 0.0, 0.75], [0.06, 0.5, 0.54]).labeled(Affordance::Leanable),
        ];
        for (sx, sy) in [(1.0, 1.0), (1.0, -1.0), (-1.0, 1.0), (-1.0, -1.0)] {
            parts.push(BoxPart::new([0.21 * sx, 0.21 * sy, 0.21], [0.04, 0.04, 0.42]));
        }
        Self::new(id, "chair", at, front_yaw, parts)
    }

    pub fn sofa(id: InstanceId, at: [f64; 2], front_yaw: f64) -> Self {
        let parts = vec![
            BoxPart::new([0.0, 0.0, 0.2], [0.9, 2.0, 0.4]),
            BoxPart::new([0.1, 0.0, 0.45], [0.7, 1.6, 0.1]).labeled(Affordance::Sittable),
            BoxPart::new([-0.35, 0.0, 0.65], [0.2, 2.0, 0.5]).labeled(Affordance::Leanable),
            BoxPart::new([0.1, 0.9, 0.55], [0.7, 0.2, 0.3]),
            BoxPart::new([0.1, -0.9, 0.55], [0.7, 0.2, 0.3]),
        ];
        Self::new(id, "sofa", at, front_yaw, parts)
    }

    /// A screen on a stand; the back of the screen faces a wall and is not
    /// observed.
    pub fn tv(id: InstanceId, at: [f64; 2], front_yaw: f64) -> Self {
        let parts = vec![
            BoxPart::new([0.0, 0.0, 1.1], [0.06, 1.1, 0.65]).hide(1),
            BoxPart::new([0.0, 0.0, 0.39], [0.3, 0.3, 0.78]),
        ];
        Self::new(id, "tv", at, front_yaw, parts)
    }

    pub fn table(id: InstanceId, at: [f64; 2], yaw: f64) -> Self {
        let mut parts = vec![BoxPart::new([0.0, 0.0, 0.7], [1.2, 0.8, 0.04]).labeled(Affordance::Supportable)];
        for (sx, sy) in [(1.0, 1.0), (1.0, -1.0), (-1.0, 1.0), (-1.0, -1.0)] {
            parts.push(BoxPart::new([0.55 * sx, 0.35 * sy, 0.34], [0.05, 0.05, 0.68]));
        }
        Self::new(id, "table", at, yaw, parts)
    }

    pub fn front(&self) -> Vector2<f64> {
        Vector2::new(self.front_yaw.cos(), self.front_yaw.sin())
    }

    fn rotation(&self) -> Rotation3<f64> {
        Rotation3::from_axis_angle(&Vector3::z_axis(), self.front_yaw)
    }

    pub fn to_world(&self, local: &Vector3<f64>) -> Vector3<f64> {
        self.rotation() * local + self.position
    }

    /// World-frame center of the first part carrying `affordance`.
    pub fn part_center(&self, affordance: Affordance) -> Option<Vector3<f64>> {
        self.parts
            .iter()
            .find(|p| p.affordance == Some(affordance))
            .map(|p| self.to_world(&p.center))
    }

    fn visible_faces(&self) -> (Vec<(usize, usize)>, Vec<f64>) {
        let mut faces = Vec::new();
        let mut areas = Vec::new();
        for (pi, part) in self.parts.iter().enumerate() {
            for f in 0..6 {
                if part.hidden_faces & (1 << f) == 0 {
                    faces.push((pi, f));
                    areas.push(part.face_area(f));
                }
            }
        }
        (faces, areas)
    }

    pub fn surface_area(&self) -> f64 {
        self.visible_faces().1.iter().sum()
    }

    /// Draws `n` area-weighted surface samples before noise and dropping.
    pub fn sample_n(&self, n: usize, opts: &SampleOptions, rng: &mut impl Rng) -> Vec<LabeledObservation> {
        let (faces, areas) = self.visible_faces();
        let Ok(pick) = WeightedIndex::new(&areas) else {
            return Vec::new();
        };
        let noise = Normal::new(0.0, opts.noise_sigma.max(0.0)).expect("finite sigma");
        let rot = self.rotation();
        let mut out = Vec::with_capacity(n);
        for _ in 0..n {
            let (pi, f) = faces[pick.sample(rng)];
            let part = &self.parts[pi];
            let local = part.sample_face(f, rng);
            let mut p = rot * local + self.position;
            if opts.noise_sigma > 0.0 {
                p += Vector3::new(noise.sample(rng), noise.sample(rng), noise.sample(rng));
            }
            let keep = rng.random::<f64>() >= opts.drop_fraction;
            if keep {
                let normal = rot * Vector3::from(FACE_NORMALS[f]);
                out.push(LabeledObservation::new(
                    p,
                    normal,
                    self.instance_id,
                    self.category.clone(),
                    part.affordance,
                ));
            }
        }
        out
    }

    pub fn sample(&self, opts: &SampleOptions, rng: &mut impl Rng) -> Vec<LabeledObservation> {
        let n = (self.surface_area() * opts.density).ceil() as usize;
        self.sample_n(n, opts, rng)
    }

    /// Instance record built straight from raw samples, bypassing voxelization.
    pub fn raw_record(&self, n: usize, opts: &SampleOptions, rng: &mut impl Rng) -> InstanceRecord {
        let obs = self.sample_n(n, opts, rng);
        let mut parts: BTreeMap<Affordance, Vec<Vector3<f64>>> = BTreeMap::new();
        for o in &obs {
            if let Some(a) = o.affordance {
                parts.entry(a).or_default().push(o.position);
            }
        }
        InstanceRecord {
            instance_id: self.instance_id,
            category: self.category.clone(),
            points: obs.iter().map(|o| o.position).collect(),
            normals: obs.iter().map(|o| o.normal).collect(),
            parts,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthScene {
    pub objects: Vec<SynthObject>,
    /// Frame ids run from 1 to `frames` inclusive.
    pub frames: u64,
}

impl SynthScene {
    pub fn object(&self, id: InstanceId) -> Option<&SynthObject> {
        self.objects.iter().find(|o| o.instance_id == id)
    }

    /// Samples every object once and spreads its points over the frames from
    /// its `appear_at` (at least 1) to the end, in shuffled order.
    pub fn stream(&self, seed: u64, opts: &SampleOptions) -> Vec<ObservationFrame> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut per_frame: Vec<Vec<LabeledObservation>> = vec![Vec::new(); self.frames as usize];
        for obj in &self.objects {
            let first = obj.appear_at.max(1);
            if first > self.frames {
                continue;
            }
            let mut obs = obj.sample(opts, &mut rng);
            obs.shuffle(&mut rng);
            let span = (self.frames - first + 1) as usize;
            for (i, o) in obs.into_iter().enumerate() {
                per_frame[first as usize - 1 + i % span].push(o);
            }
        }
        per_frame
            .iter()
            .enumerate()
            .map(|(i, obs)| ObservationFrame::from_observations(i as u64 + 1, obs))
            .collect()
    }
}

pub const FIXTURE_FRAMES: u64 = 100;

/// Chair facing a TV two meters away, plus a sofa and a table.
pub fn context_a_scene() -> SynthScene {
    SynthScene {
        objects: vec![
            SynthObject::chair(1, [0.0, 0.0], PI / 2.0),
            SynthObject::tv(2, [0.0, 2.0], -PI / 2.0),
            SynthObject::sofa(3, [-3.0, 0.5], 0.0),
            SynthObject::table(4, [3.0, -1.5], 0.0),
        ],
        frames: FIXTURE_FRAMES,
    }
}

/// Same room with the TV behind the chair.
pub fn context_a_violated_scene() -> SynthScene {
    SynthScene {
        objects: vec![
            SynthObject::chair(1, [0.0, 0.0], PI / 2.0),
            SynthObject::tv(2, [0.0, -2.0], PI / 2.0),
            SynthObject::sofa(3, [-3.0, 0.5], 0.0),
            SynthObject::table(4, [3.0, -1.5], 0.0),
        ],
        frames: FIXTURE_FRAMES,
    }
}

/// Context A room where the chair is first observed at frame 51.
pub fn late_chair_scene() -> SynthScene {
    let mut scene = context_a_scene();
    scene.objects[0] = SynthObject::chair(1, [0.0, 0.0], PI / 2.0).appearing_at(51);
    scene
}

/// Sofa facing +x with a table on its left and a TV across the room.
pub fn context_b_scene() -> SynthScene {
    SynthScene {
        objects: vec![
            SynthObject::sofa(1, [0.0, 0.0], 0.0),
            SynthObject::table(2, [0.0, 1.6], 0.0),
            SynthObject::tv(3, [3.5, 0.0], PI),
        ],
        frames: FIXTURE_FRAMES,
    }
}

/// `n` objects on a grid, cycling chair, sofa, tv, table, with seeded yaws.
pub fn grid_scene(n: usize, seed: u64) -> SynthScene {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let cols = (n as f64).sqrt().ceil() as usize;
    let objects = (0..n)
        .map(|i| {
            let at = [(i % cols) as f64 * 3.0, (i / cols) as f64 * 3.0];
            let yaw = rng.random::<f64>() * 2.0 * PI;
            let id = i as InstanceId + 1;
            match i % 4 {
                0 => SynthObject::chair(id, at, yaw),
                1 => SynthObject::sofa(id, at, yaw),
                2 => SynthObject::tv(id, at, yaw),
                _ => SynthObject::table(id, at, yaw),
            }
        })
        .collect();
    SynthScene { objects, frames: 1 }
}

/// Context A rooms laid out 8 m apart along x, cut off after `instances`
/// objects. Every complete room holds one TV-in-front-of-chair pattern.
pub fn room_row(instances: usize) -> SynthScene {
    let objects = (0..instances)
        .map(|i| {
            let x = (i / 4) as f64 * 8.0;
            let id = i as InstanceId + 1;
            match i % 4 {
                0 => SynthObject::chair(id, [x, 0.0], PI / 2.0),
                1 => SynthObject::tv(id, [x, 2.0], -PI / 2.0),
                2 => SynthObject::sofa(id, [x - 3.0, 0.5], 0.0),
                _ => SynthObject::table(id, [x + 3.0, -1.5], 0.0),
            }
        })
        .collect();
    SynthScene { objects, frames: 1 }
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}
