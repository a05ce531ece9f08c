//! Planar primitives: convex hull, minimum-area rectangle, rotated
//! rectangle intersection.

use std::f64::consts::FRAC_PI_2;

use nalgebra::Vector2;

/// Rotated rectangle in the XY plane.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rect2 {
    pub center: Vector2<f64>,
    /// Angle of the local x axis, radians counter-clockwise from world +x.
    pub angle: f64,
    /// Full side lengths along local x and y.
    pub size: Vector2<f64>,
}

impl Rect2 {
    pub fn new(center: Vector2<f64>, angle: f64, size: Vector2<f64>) -> Self {
        Self { center, angle, size }
    }

    pub fn axes(&self) -> (Vector2<f64>, Vector2<f64>) {
        let (s, c) = self.angle.sin_cos();
        (Vector2::new(c, s), Vector2::new(-s, c))
    }

    pub fn area(&self) -> f64 {
        self.size.x * self.size.y
    }

    /// Corners in counter-clockwise order.
    pub fn corners(&self) -> [Vector2<f64>; 4] {
        let (u, v) = self.axes();
        let hu = u * (self.size.x / 2.0);
        let hv = v * (self.size.y / 2.0);
        [
            self.center - hu - hv,
            self.center + hu - hv,
            self.center + hu + hv,
            self.center - hu + hv,
        ]
    }

    pub fn contains(&self, p: &Vector2<f64>, eps: f64) -> bool {
        let (u, v) = self.axes();
        let d = p - self.center;
        d.dot(&u).abs() <= self.size.x / 2.0 + eps && d.dot(&v).abs() <= self.size.y / 2.0 + eps
    }

    /// Distance from the center to the boundary along unit direction `dir`.
    pub fn exit_distance(&self, dir: &Vector2<f64>) -> f64 {
        let (u, v) = self.axes();
        let mut t = f64::INFINITY;
        for (axis, half) in [(u, self.size.x / 2.0), (v, self.size.y / 2.0)] {
            let c = dir.dot(&axis).abs();
            if c > 1e-15 {
                t = t.min(half / c);
            }
        }
        t
    }

    /// Separating-axis test; touching rectangles count as overlapping.
    pub fn overlaps(&self, other: &Rect2) -> bool {
        let a = self.corners();
        let b = other.corners();
        let (u1, v1) = self.axes();
        let (u2, v2) = other.axes();
        for axis in [u1, v1, u2, v2] {
            let (amin, amax) = project(&a, &axis);
            let (bmin, bmax) = project(&b, &axis);
            if amax < bmin || bmax < amin {
                return false;
            }
        }
        true
    }

    pub fn intersection_area(&self, other: &Rect2) -> f64 {
        let clipped = clip_convex(&self.corners(), &other.corners());
        polygon_area(&clipped).abs()
    }
}

fn project(pts: &[Vector2<f64>], axis: &Vector2<f64>) -> (f64, f64) {
    pts.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), p| {
        let d = p.dot(axis);
        (lo.min(d), hi.max(d))
    })
}

fn cross(o: &Vector2<f64>, a: &Vector2<f64>, b: &Vector2<f64>) -> f64 {
    (a.x - o.x) * (b.y - o.y) - (a.y - o.y) * (b.x - o.x)
}

/// Andrew's monotone chain. Counter-clockwise, collinear points dropped.
pub fn convex_hull(points: &[Vector2<f64>]) -> Vec<Vector2<f64>> {
    let mut pts: Vec<Vector2<f64>> = points.to_vec();
    pts.sort_by(|a, b| a.x.total_cmp(&b.x).then(a.y.total_cmp(&b.y)));
    pts.dedup();
    if pts.len() < 3 {
        return pts;
    }
    let mut hull: Vec<Vector2<f64>> = Vec::with_capacity(2 * pts.len());
    for p in pts.iter() {
        while hull.len() >= 2 && cross(&hull[hull.len() - 2], &hull[hull.len() - 1], p) <= 0.0 {
            hull.pop();
        }
        hull.push(*p);
    }
    let lower_len = hull.len() + 1;
    for p in pts.iter().rev().skip(1) {
        while hull.len() >= lower_len && cross(&hull[hull.len() - 2], &hull[hull.len() - 1], p) <= 0.0 {
            hull.pop();
        }
        hull.push(*p);
    }
    hull.pop();
    hull
}

pub fn polygon_area(poly: &[Vector2<f64>]) -> f64 {
    let n = poly.len();
    if n < 3 {
        return 0.0;
    }
    let mut s = 0.0;
    for i in 0..n {
        let a = poly[i];
        let b = poly[(i + 1) % n];
        s += a.x * b.y - b.x * a.y;
    }
    s / 2.0
}

/// Sutherland-Hodgman clip of `subject` by the convex counter-clockwise `clip`.
pub fn clip_convex(subject: &[Vector2<f64>], clip: &[Vector2<f64>]) -> Vec<Vector2<f64>> {
    let mut output = subject.to_vec();
    for i in 0..clip.len() {
        if output.is_empty() {
            break;
        }
        let a = clip[i];
        let b = clip[(i + 1) % clip.len()];
        let input = std::mem::take(&mut output);
        for j in 0..input.len() {
            let cur = input[j];
            let prev = input[(j + input.len() - 1) % input.len()];
            let cur_in = cross(&a, &b, &cur) >= 0.0;
            let prev_in = cross(&a, &b, &prev) >= 0.0;
            if cur_in {
                if !prev_in {
                    output.push(line_intersection(&prev, &cur, &a, &b));
                }
                output.push(cur);
            } else if prev_in {
                output.push(line_intersection(&prev, &cur, &a, &b));
            }
        }
    }
    output
}

fn line_intersection(p: &Vector2<f64>, q: &Vector2<f64>, a: &Vector2<f64>, b: &Vector2<f64>) -> Vector2<f64> {
    let r = q - p;
    let s = b - a;
    let denom = r.x * s.y - r.y * s.x;
    if denom.abs() < 1e-300 {
        return *q;
    }
    let t = ((a.x - p.x) * s.y - (a.y - p.y) * s.x) / denom;
    p + r * t
}

/// Minimum-area enclosing rectangle by rotating calipers over the convex
/// hull. Returns `None` when the hull is degenerate (fewer than three
/// non-collinear points). The angle is normalized to `[0, pi/2)`.
pub fn min_area_rect(points: &[Vector2<f64>]) -> Option<Rect2> {
    let hull = convex_hull(points);
    let h = hull.len();
    if h < 3 {
        return None;
    }

    let edge_dir = |i: usize| -> Vector2<f64> { (hull[(i + 1) % h] - hull[i]).normalize() };
    let dot_at = |k: usize, axis: &Vector2<f64>| hull[k % h].dot(axis);

    // Caliper indices for the first edge: max along the edge, max along the
    // inward normal, min along the edge.
    let e0 = edge_dir(0);
    let n0 = Vector2::new(-e0.y, e0.x);
    let argmax = |axis: &Vector2<f64>| {
        (0..h)
            .max_by(|&a, &b| dot_at(a, axis).total_cmp(&dot_at(b, axis)))
            .unwrap()
    };
    let mut right = argmax(&e0);
    let mut top = argmax(&n0);
    let mut left = argmax(&-e0);

    let mut best: Option<(f64, Rect2)> = None;
    for i in 0..h {
        let e = edge_dir(i);
        let n = Vector2::new(-e.y, e.x);
        let mut steps = 0;
        while steps < h && dot_at(right + 1, &e) >= dot_at(right, &e) {
            right = (right + 1) % h;
            steps += 1;
        }
        steps = 0;
        while steps < h && dot_at(top + 1, &n) >= dot_at(top, &n) {
            top = (top + 1) % h;
            steps += 1;
        }
        steps = 0;
        while steps < h && dot_at(left + 1, &-e) >= dot_at(left, &-e) {
            left = (left + 1) % h;
            steps += 1;
        }

        let origin = hull[i];
        let max_e = (hull[right] - origin).dot(&e);
        let min_e = (hull[left] - origin).dot(&e);
        let height = (hull[top] - origin).dot(&n);
        let width = max_e - min_e;
        let area = width * height;
        if best.as_ref().is_none_or(|(a, _)| area < *a) {
            let center = origin + e * ((max_e + min_e) / 2.0) + n * (height / 2.0);
            let rect = Rect2::new(center, e.y.atan2(e.x), Vector2::new(width, height));
            best = Some((area, rect));
        }
    }
    best.map(|(_, r)| normalize_quarter_turn(r))
}

/// Re-expresses a rectangle with its angle in `[0, pi/2)`, swapping side
/// lengths for odd quarter turns.
pub fn normalize_quarter_turn(r: Rect2) -> Rect2 {
    let turns = (r.angle / FRAC_PI_2).floor();
    let mut angle = r.angle - turns * FRAC_PI_2;
    let mut odd = (turns as i64).rem_euclid(2) == 1;
    if angle >= FRAC_PI_2 {
        angle -= FRAC_PI_2;
        odd = !odd;
    }
    if angle < 0.0 {
        angle = 0.0;
    }
    let size = if odd {
        Vector2::new(r.size.y, r.size.x)
    } else {
        r.size
    };
    Rect2::new(r.center, angle, size)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(x: f64, y: f64) -> Vector2<f64> {
        Vector2::new(x, y)
    }

    #[test]
    fn hull_of_square_with_interior() {
        let pts = vec![v(0.0, 0.0), v(1.0, 0.0), v(1.0, 1.0), v(0.0, 1.0), v(0.5, 0.5), v(0.5, 0.0)];
        let hull = convex_hull(&pts);
        assert_eq!(hull.len(), 4);
        assert!(polygon_area(&hull) > 0.0);
        assert!((polygon_area(&hull) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn collinear_hull_is_degenerate() {
        let pts = vec![v(0.0, 0.0), v(1.0, 1.0), v(2.0, 2.0)];
        assert!(min_area_rect(&pts).is_none());
        assert!(min_area_rect(&[v(1.0, 1.0); 3]).is_none());
    }

    #[test]
    fn rotated_rectangle_recovered() {
        let r = Rect2::new(v(3.0, -1.0), 0.4, v(2.0, 0.5));
        let fit = min_area_rect(&r.corners()).unwrap();
        assert!((fit.area() - 1.0).abs() < 1e-12);
        assert!((fit.angle - 0.4).abs() < 1e-12);
        assert!((fit.center - r.center).norm() < 1e-12);
        assert!((fit.size - r.size).norm() < 1e-12);
    }

    #[test]
    fn quarter_turn_normalization_swaps() {
        let r = normalize_quarter_turn(Rect2::new(v(0.0, 0.0), FRAC_PI_2 + 0.1, v(2.0, 1.0)));
        assert!((r.angle - 0.1).abs() < 1e-12);
        assert_eq!(r.size, v(1.0, 2.0));
        let r = normalize_quarter_turn(Rect2::new(v(0.0, 0.0), -0.1, v(2.0, 1.0)));
        assert!((r.angle - (FRAC_PI_2 - 0.1)).abs() < 1e-12);
        assert_eq!(r.size, v(1.0, 2.0));
    }

    #[test]
    fn intersection_of_offset_squares() {
        let a = Rect2::new(v(0.0, 0.0), 0.0, v(1.0, 1.0));
        let b = Rect2::new(v(0.5, 0.0), 0.0, v(1.0, 1.0));
        assert!((a.intersection_area(&b) - 0.5).abs() < 1e-12);
        let c = Rect2::new(v(0.0, 0.0), std::f64::consts::FRAC_PI_4, v(1.0, 1.0));
        assert!((c.intersection_area(&c) - 1.0).abs() < 1e-12);
        let far = Rect2::new(v(5.0, 0.0), 0.0, v(1.0, 1.0));
        assert_eq!(a.intersection_area(&far), 0.0);
        assert!(!a.overlaps(&far));
        assert!(a.overlaps(&b));
    }

    #[test]
    fn exit_distance_axis_and_diagonal() {
        let r = Rect2::new(v(0.0, 0.0), 0.0, v(2.0, 1.0));
        assert!((r.exit_distance(&v(1.0, 0.0)) - 1.0).abs() < 1e-12);
        assert!((r.exit_distance(&v(0.0, -1.0)) - 0.5).abs() < 1e-12);
        let d = v(1.0, 1.0).normalize();
        assert!((r.exit_distance(&d) - 0.5 * 2f64.sqrt()).abs() < 1e-12);
    }
}
