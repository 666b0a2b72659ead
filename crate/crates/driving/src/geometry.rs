//! Planar geometry: polylines with arc-length parametrization, oriented
//! boxes, overlap tests and constant-velocity time to collision.

use std::f64::consts::PI;

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Vec2 {
    pub x: f64,
    pub y: f64,
}

impl Vec2 {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn from_angle(theta: f64) -> Self {
        Self::new(theta.cos(), theta.sin())
    }

    pub fn dot(self, o: Vec2) -> f64 {
        self.x * o.x + self.y * o.y
    }

    pub fn cross(self, o: Vec2) -> f64 {
        self.x * o.y - self.y * o.x
    }

    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn scale(self, k: f64) -> Vec2 {
        Vec2::new(self.x * k, self.y * k)
    }

    pub fn angle(self) -> f64 {
        self.y.atan2(self.x)
    }

    /// Rotates by `theta` counter-clockwise.
    pub fn rotate(self, theta: f64) -> Vec2 {
        let (s, c) = theta.sin_cos();
        Vec2::new(c * self.x - s * self.y, s * self.x + c * self.y)
    }
}

impl std::ops::Add for Vec2 {
    type Output = Vec2;
    fn add(self, o: Vec2) -> Vec2 {
        Vec2::new(self.x + o.x, self.y + o.y)
    }
}

impl std::ops::Sub for Vec2 {
    type Output = Vec2;
    fn sub(self, o: Vec2) -> Vec2 {
        Vec2::new(self.x - o.x, self.y - o.y)
    }
}

/// Wraps an angle into `(-pi, pi]`.
pub fn wrap_angle(theta: f64) -> f64 {
    let mut t = theta % (2.0 * PI);
    if t <= -PI {
        t += 2.0 * PI;
    } else if t > PI {
        t -= 2.0 * PI;
    }
    t
}

/// A polyline parametrized by arc length.
#[derive(Debug, Clone, PartialEq)]
pub struct Path {
    points: Vec<Vec2>,
    cumulative: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Projection {
    pub s: f64,
    /// Signed offset, positive to the left of the direction of travel.
    pub lateral: f64,
    pub distance: f64,
}

impl Path {
    /// `None` when fewer than two points or any segment is degenerate.
    pub fn new(points: Vec<Vec2>) -> Option<Self> {
        if points.len() < 2 {
            return None;
        }
        let mut cumulative = vec![0.0];
        for w in points.windows(2) {
            let len = (w[1] - w[0]).norm();
            if !(len > 1e-9) {
                return None;
            }
            cumulative.push(cumulative.last().unwrap() + len);
        }
        Some(Self { points, cumulative })
    }

    pub fn points(&self) -> &[Vec2] {
        &self.points
    }

    pub fn length(&self) -> f64 {
        *self.cumulative.last().unwrap()
    }

    fn segment(&self, s: f64) -> usize {
        let n = self.points.len() - 1;
        match self.cumulative.binary_search_by(|c| c.total_cmp(&s)) {
            Ok(i) => i.min(n - 1),
            Err(i) => (i.max(1) - 1).min(n - 1),
        }
    }

    /// Point at arc length `s`; extrapolates linearly beyond both ends.
    pub fn point_at(&self, s: f64) -> Vec2 {
        let i = self.segment(s);
        let (a, b) = (self.points[i], self.points[i + 1]);
        let len = self.cumulative[i + 1] - self.cumulative[i];
        a + (b - a).scale((s - self.cumulative[i]) / len)
    }

    pub fn heading_at(&self, s: f64) -> f64 {
        let i = self.segment(s);
        (self.points[i + 1] - self.points[i]).angle()
    }

    pub fn project(&self, p: Vec2) -> Projection {
        let mut best = Projection {
            s: 0.0,
            lateral: 0.0,
            distance: f64::INFINITY,
        };
        let last = self.points.len() - 2;
        for i in 0..=last {
            let (a, b) = (self.points[i], self.points[i + 1]);
            let d = b - a;
            let len = self.cumulative[i + 1] - self.cumulative[i];
            let mut t = (p - a).dot(d) / (len * len);
            if i > 0 {
                t = t.max(0.0);
            }
            if i < last {
                t = t.min(1.0);
            }
            let q = a + d.scale(t);
            let dist = (p - q).norm();
            if dist < best.distance {
                best = Projection {
                    s: self.cumulative[i] + t * len,
                    lateral: d.cross(p - a) / len,
                    distance: dist,
                };
            }
        }
        best
    }

    pub fn transformed(&self, rotation: f64, shift: Vec2) -> Path {
        Path::new(self.points.iter().map(|p| p.rotate(rotation) + shift).collect()).expect("rigid motion keeps lengths")
    }
}

/// Oriented rectangle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Obb {
    pub center: Vec2,
    pub heading: f64,
    pub half_length: f64,
    pub half_width: f64,
}

impl Obb {
    fn axes(&self) -> [Vec2; 2] {
        let u = Vec2::from_angle(self.heading);
        [u, Vec2::new(-u.y, u.x)]
    }

    /// Projection interval onto a unit axis.
    fn interval(&self, axis: Vec2) -> (f64, f64) {
        let [u, v] = self.axes();
        let c = self.center.dot(axis);
        let r = self.half_length * u.dot(axis).abs() + self.half_width * v.dot(axis).abs();
        (c - r, c + r)
    }
}

/// Strict overlap; touching boxes do not collide.
pub fn overlaps(a: &Obb, b: &Obb) -> bool {
    a.axes().into_iter().chain(b.axes()).all(|ax| {
        let (a0, a1) = a.interval(ax);
        let (b0, b1) = b.interval(ax);
        a1 > b0 && b1 > a0
    })
}

/// First time at which two boxes translating with constant velocities
/// overlap; 0 if they already do, infinity if never.
pub fn time_to_collision(a: &Obb, va: Vec2, b: &Obb, vb: Vec2) -> f64 {
    let rel = vb - va;
    let (mut lo, mut hi) = (0.0f64, f64::INFINITY);
    for ax in a.axes().into_iter().chain(b.axes()) {
        let (a0, a1) = a.interval(ax);
        let (b0, b1) = b.interval(ax);
        let v = rel.dot(ax);
        if v.abs() < 1e-12 {
            if !(a1 > b0 && b1 > a0) {
                return f64::INFINITY;
            }
            continue;
        }
        let (t0, t1) = ((a0 - b1) / v, (a1 - b0) / v);
        let (t0, t1) = if t0 < t1 { (t0, t1) } else { (t1, t0) };
        lo = lo.max(t0);
        hi = hi.min(t1);
        if lo >= hi {
            return f64::INFINITY;
        }
    }
    lo
}

#[cfg(test)]
mod tests {
    use super::*;

    fn car(x: f64, y: f64, h: f64) -> Obb {
        Obb {
            center: Vec2::new(x, y),
            heading: h,
            half_length: 2.0,
            half_width: 0.9,
        }
    }

    #[test]
    fn head_on_gap_over_closing_speed() {
        // 6 m between bumpers, each moving 3 m/s toward the other.
        let t = time_to_collision(&car(0.0, 0.0, 0.0), Vec2::new(3.0, 0.0), &car(10.0, 0.0, PI), Vec2::new(-3.0, 0.0));
        assert!((t - 1.0).abs() < 1e-12);
    }

    #[test]
    fn parallel_agents_never_collide() {
        let v = Vec2::new(5.0, 0.0);
        assert_eq!(time_to_collision(&car(0.0, 0.0, 0.0), v, &car(0.0, 3.5, 0.0), v), f64::INFINITY);
    }

    #[test]
    fn overlapping_boxes_have_zero_ttc() {
        let (a, b) = (car(0.0, 0.0, 0.0), car(1.0, 0.5, 0.3));
        assert!(overlaps(&a, &b));
        assert_eq!(time_to_collision(&a, Vec2::default(), &b, Vec2::default()), 0.0);
    }

    #[test]
    fn path_projection_and_points() {
        let p = Path::new(vec![Vec2::new(0.0, 0.0), Vec2::new(10.0, 0.0), Vec2::new(10.0, 10.0)]).unwrap();
        assert_eq!(p.length(), 20.0);
        assert_eq!(p.point_at(15.0), Vec2::new(10.0, 5.0));
        let pr = p.project(Vec2::new(4.0, 1.0));
        assert_eq!((pr.s, pr.lateral), (4.0, 1.0));
        assert!(Path::new(vec![Vec2::new(1.0, 1.0), Vec2::new(1.0, 1.0)]).is_none());
    }

    #[test]
    fn wrap_angle_range() {
        assert!((wrap_angle(3.0 * PI) - PI).abs() < 1e-12);
        assert!((wrap_angle(-3.0 * PI / 2.0) - PI / 2.0).abs() < 1e-12);
    }
}
