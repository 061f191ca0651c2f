//! Planar geometry: vectors and arc-length parameterized paths built from
//! line segments and circular arcs.

use serde::{Deserialize, Serialize};
use std::ops::{Add, Mul, Sub};

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
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

    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn dist(self, o: Vec2) -> f64 {
        (self - o).norm()
    }

    /// Counter-clockwise rotation by `theta` radians.
    pub fn rotate(self, theta: f64) -> Self {
        let (s, c) = theta.sin_cos();
        Self::new(c * self.x - s * self.y, s * self.x + c * self.y)
    }

    pub fn lerp(self, o: Vec2, t: f64) -> Self {
        self + (o - self) * t
    }
}

impl Add for Vec2 {
    type Output = Vec2;
    fn add(self, o: Vec2) -> Vec2 {
        Vec2::new(self.x + o.x, self.y + o.y)
    }
}

impl Sub for Vec2 {
    type Output = Vec2;
    fn sub(self, o: Vec2) -> Vec2 {
        Vec2::new(self.x - o.x, self.y - o.y)
    }
}

impl Mul<f64> for Vec2 {
    type Output = Vec2;
    fn mul(self, k: f64) -> Vec2 {
        Vec2::new(self.x * k, self.y * k)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Segment {
    Line {
        start: Vec2,
        /// Unit direction.
        dir: Vec2,
        length: f64,
    },
    Arc {
        center: Vec2,
        radius: f64,
        /// Polar angle of the start point around `center`.
        start_angle: f64,
        /// Signed swept angle; positive is counter-clockwise (left turn).
        sweep: f64,
    },
}

impl Segment {
    pub fn length(&self) -> f64 {
        match *self {
            Segment::Line { length, .. } => length,
            Segment::Arc { radius, sweep, .. } => radius * sweep.abs(),
        }
    }

    fn point_at(&self, s: f64) -> Vec2 {
        match *self {
            Segment::Line { start, dir, .. } => start + dir * s,
            Segment::Arc {
                center,
                radius,
                start_angle,
                sweep,
            } => center + Vec2::from_angle(start_angle + sweep.signum() * s / radius) * radius,
        }
    }

    fn heading_at(&self, s: f64) -> f64 {
        match *self {
            Segment::Line { dir, .. } => dir.y.atan2(dir.x),
            Segment::Arc {
                radius,
                start_angle,
                sweep,
                ..
            } => {
                let sign = sweep.signum();
                start_angle + sign * s / radius + sign * std::f64::consts::FRAC_PI_2
            }
        }
    }

    /// Arc-length (within this segment) of the point closest to `p`.
    fn project(&self, p: Vec2) -> f64 {
        match *self {
            Segment::Line { start, dir, length } => (p - start).dot(dir).clamp(0.0, length),
            Segment::Arc {
                center,
                radius,
                start_angle,
                sweep,
            } => {
                let d = p - center;
                if d.norm() == 0.0 {
                    return 0.0;
                }
                let angle = d.y.atan2(d.x);
                // Angular offset from the start, measured in the sweep direction.
                let tau = std::f64::consts::TAU;
                let mut off = (angle - start_angle) * sweep.signum();
                off = off.rem_euclid(tau);
                let span = sweep.abs();
                if off <= span {
                    off * radius
                } else {
                    // Outside the swept span: pick the nearer endpoint.
                    let end = self.point_at(self.length());
                    let beg = self.point_at(0.0);
                    if p.dist(beg) <= p.dist(end) {
                        0.0
                    } else {
                        self.length()
                    }
                }
            }
        }
    }
}

/// A continuous, arc-length parameterized path. Positions outside
/// `[0, total_length]` are extrapolated along the end tangents.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathDef {
    segments: Vec<Segment>,
    total_length: f64,
}

impl PathDef {
    pub fn new(segments: Vec<Segment>) -> Self {
        assert!(!segments.is_empty(), "path needs at least one segment");
        let total_length = segments.iter().map(Segment::length).sum();
        Self {
            segments,
            total_length,
        }
    }

    pub fn segments(&self) -> &[Segment] {
        &self.segments
    }

    pub fn total_length(&self) -> f64 {
        self.total_length
    }

    fn locate(&self, s: f64) -> (usize, f64) {
        let mut rem = s;
        for (i, seg) in self.segments.iter().enumerate() {
            let len = seg.length();
            if rem <= len || i + 1 == self.segments.len() {
                return (i, rem);
            }
            rem -= len;
        }
        unreachable!()
    }

    pub fn position(&self, s: f64) -> Vec2 {
        if s < 0.0 {
            let first = &self.segments[0];
            return first.point_at(0.0) + Vec2::from_angle(first.heading_at(0.0)) * s;
        }
        if s > self.total_length {
            let last = self.segments.last().unwrap();
            let l = last.length();
            return last.point_at(l) + Vec2::from_angle(last.heading_at(l)) * (s - self.total_length);
        }
        let (i, local) = self.locate(s);
        self.segments[i].point_at(local)
    }

    pub fn heading(&self, s: f64) -> f64 {
        if s < 0.0 {
            return self.segments[0].heading_at(0.0);
        }
        if s > self.total_length {
            let last = self.segments.last().unwrap();
            return last.heading_at(last.length());
        }
        let (i, local) = self.locate(s);
        self.segments[i].heading_at(local)
    }

    pub fn tangent(&self, s: f64) -> Vec2 {
        Vec2::from_angle(self.heading(s))
    }

    /// Arc-length of the path point closest to `p` (first one on ties).
    pub fn closest_arclength(&self, p: Vec2) -> f64 {
        let mut best_s = 0.0;
        let mut best_d = f64::INFINITY;
        let mut offset = 0.0;
        for seg in &self.segments {
            let local = seg.project(p);
            let d = seg.point_at(local).dist(p);
            if d < best_d {
                best_d = d;
                best_s = offset + local;
            }
            offset += seg.length();
        }
        best_s
    }

    /// Arc-lengths sampled every `step` metres, including the end point.
    pub fn sample_arclengths(&self, step: f64) -> impl Iterator<Item = f64> + '_ {
        let n = (self.total_length / step).floor() as usize;
        (0..=n)
            .map(move |k| k as f64 * step)
            .chain(std::iter::once(self.total_length))
    }
}

/// Closest pair between two paths, by dense sampling of the parts of both
/// paths lying within `radius` of `around`. Among pairs within `tol` of the
/// minimum distance, the one with the smallest arc-length on `a` wins.
/// Returns `(s_a, s_b, distance)`.
pub fn closest_pair(
    a: &PathDef,
    b: &PathDef,
    around: Vec2,
    radius: f64,
    step: f64,
    tol: f64,
) -> Option<(f64, f64, f64)> {
    let near = |p: &PathDef| -> Vec<(f64, Vec2)> {
        p.sample_arclengths(step)
            .map(|s| (s, p.position(s)))
            .filter(|(_, q)| q.dist(around) <= radius)
            .collect()
    };
    let pa = near(a);
    let pb = near(b);
    let mut best: Vec<(f64, f64, f64)> = Vec::with_capacity(pa.len());
    let mut global = f64::INFINITY;
    for &(sa, qa) in &pa {
        let mut row_best = (f64::INFINITY, 0.0);
        for &(sb, qb) in &pb {
            let d = qa.dist(qb);
            if d < row_best.0 {
                row_best = (d, sb);
            }
        }
        if row_best.0.is_finite() {
            global = global.min(row_best.0);
            best.push((sa, row_best.1, row_best.0));
        }
    }
    best.into_iter().find(|&(_, _, d)| d <= global + tol)
}
