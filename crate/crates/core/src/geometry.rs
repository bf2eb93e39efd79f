//! Planar primitives shared by every stage of the pipeline.
//!
//! Coordinates follow the raster convention: origin at the top-left corner,
//! `x` grows rightward and `y` grows downward. Orientations are angles of
//! undirected lines and live in `[0, π)`.

use std::f64::consts::{FRAC_PI_2, PI};
use std::ops::{Add, Mul, Sub};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Minimum angular separation (radians) below which two lines are treated as parallel.
pub const PARALLEL_EPSILON: f64 = 1e-4;

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const fn new(x: f64, y: f64) -> Self {
        Point { x, y }
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }

    pub fn distance(&self, other: Point) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }

    pub fn dot(&self, other: Point) -> f64 {
        self.x * other.x + self.y * other.y
    }

    pub fn cross(&self, other: Point) -> f64 {
        self.x * other.y - self.y * other.x
    }

    pub fn norm(&self) -> f64 {
        self.x.hypot(self.y)
    }
}

impl Add for Point {
    type Output = Point;
    fn add(self, rhs: Point) -> Point {
        Point::new(self.x + rhs.x, self.y + rhs.y)
    }
}

impl Sub for Point {
    type Output = Point;
    fn sub(self, rhs: Point) -> Point {
        Point::new(self.x - rhs.x, self.y - rhs.y)
    }
}

impl Mul<f64> for Point {
    type Output = Point;
    fn mul(self, rhs: f64) -> Point {
        Point::new(self.x * rhs, self.y * rhs)
    }
}

/// A non-degenerate line segment. Endpoints are finite and distinct.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawSegment", into = "RawSegment")]
pub struct Segment {
    p1: Point,
    p2: Point,
}

#[derive(Serialize, Deserialize)]
struct RawSegment {
    p1: Point,
    p2: Point,
}

impl TryFrom<RawSegment> for Segment {
    type Error = Error;
    fn try_from(raw: RawSegment) -> Result<Self> {
        Segment::new(raw.p1, raw.p2)
    }
}

impl From<Segment> for RawSegment {
    fn from(s: Segment) -> Self {
        RawSegment { p1: s.p1, p2: s.p2 }
    }
}

impl Segment {
    pub fn new(p1: Point, p2: Point) -> Result<Self> {
        if !p1.is_finite() || !p2.is_finite() {
            return Err(Error::Geometry(format!(
                "non-finite endpoint in segment {p1:?} - {p2:?}"
            )));
        }
        if p1 == p2 {
            return Err(Error::Geometry(format!(
                "zero-length segment at ({}, {})",
                p1.x, p1.y
            )));
        }
        Ok(Segment { p1, p2 })
    }

    pub fn from_coords(x1: f64, y1: f64, x2: f64, y2: f64) -> Result<Self> {
        Segment::new(Point::new(x1, y1), Point::new(x2, y2))
    }

    pub fn p1(&self) -> Point {
        self.p1
    }

    pub fn p2(&self) -> Point {
        self.p2
    }

    pub fn endpoints(&self) -> [Point; 2] {
        [self.p1, self.p2]
    }

    pub fn midpoint(&self) -> Point {
        Point::new((self.p1.x + self.p2.x) * 0.5, (self.p1.y + self.p2.y) * 0.5)
    }

    pub fn direction(&self) -> Point {
        self.p2 - self.p1
    }

    pub fn coords(&self) -> [f64; 4] {
        [self.p1.x, self.p1.y, self.p2.x, self.p2.y]
    }

    pub fn translated(&self, dx: f64, dy: f64) -> Segment {
        let d = Point::new(dx, dy);
        Segment {
            p1: self.p1 + d,
            p2: self.p2 + d,
        }
    }

    pub fn rotated_about(&self, center: Point, theta: f64) -> Result<Segment> {
        Segment::new(
            rotate_about(self.p1, center, theta),
            rotate_about(self.p2, center, theta),
        )
    }

    /// Perpendicular distance from `p` to the infinite line through this segment.
    pub fn line_distance(&self, p: Point) -> f64 {
        let d = self.direction();
        (d.cross(p - self.p1)).abs() / d.norm()
    }

    /// Mirror image of `p` across the infinite line through this segment.
    pub fn reflect(&self, p: Point) -> Point {
        let d = self.direction();
        let u = d * (1.0 / d.norm());
        let rel = p - self.p1;
        let along = u * rel.dot(u);
        self.p1 + along * 2.0 - rel
    }
}

/// Axis-aligned rectangle `[x0, x1] × [y0, y1]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Rect {
    pub x0: f64,
    pub y0: f64,
    pub x1: f64,
    pub y1: f64,
}

impl Rect {
    pub fn new(x0: f64, y0: f64, x1: f64, y1: f64) -> Self {
        Rect { x0, y0, x1, y1 }
    }

    pub fn from_size(width: f64, height: f64) -> Self {
        Rect::new(0.0, 0.0, width, height)
    }

    pub fn width(&self) -> f64 {
        self.x1 - self.x0
    }

    pub fn height(&self) -> f64 {
        self.y1 - self.y0
    }

    pub fn diagonal(&self) -> f64 {
        self.width().hypot(self.height())
    }

    pub fn contains(&self, p: Point) -> bool {
        p.x >= self.x0 && p.x <= self.x1 && p.y >= self.y0 && p.y <= self.y1
    }

    pub fn corners(&self) -> [Point; 4] {
        [
            Point::new(self.x0, self.y0),
            Point::new(self.x1, self.y0),
            Point::new(self.x1, self.y1),
            Point::new(self.x0, self.y1),
        ]
    }

    /// Clip the infinite line through `origin` with direction `dir` to this
    /// rectangle (Liang–Barsky). Returns `None` when the line misses the
    /// rectangle or only touches it in a single point.
    pub fn clip_line(&self, origin: Point, dir: Point) -> Option<Segment> {
        let mut t0 = f64::NEG_INFINITY;
        let mut t1 = f64::INFINITY;
        for (p, lo, hi) in [
            (dir.x, self.x0 - origin.x, self.x1 - origin.x),
            (dir.y, self.y0 - origin.y, self.y1 - origin.y),
        ] {
            if p.abs() < 1e-15 {
                if lo > 0.0 || hi < 0.0 {
                    return None;
                }
            } else {
                let (a, b) = (lo / p, hi / p);
                let (a, b) = if a < b { (a, b) } else { (b, a) };
                t0 = t0.max(a);
                t1 = t1.min(b);
            }
        }
        if t1 - t0 <= 1e-9 {
            return None;
        }
        let a = self.clamp(origin + dir * t0);
        let b = self.clamp(origin + dir * t1);
        Segment::new(a, b).ok()
    }

    /// Clip a segment to this rectangle, keeping only the inside portion.
    pub fn clip_segment(&self, s: &Segment) -> Option<Segment> {
        let chord = self.clip_line(s.p1, s.direction())?;
        let d = s.direction();
        let len2 = d.dot(d);
        let param = |p: Point| (p - s.p1).dot(d) / len2;
        let (c0, c1) = (param(chord.p1), param(chord.p2));
        let (c0, c1) = if c0 <= c1 { (c0, c1) } else { (c1, c0) };
        let (t0, t1) = (c0.max(0.0), c1.min(1.0));
        if t1 - t0 <= 1e-12 {
            return None;
        }
        let a = self.clamp(s.p1 + d * t0);
        let b = self.clamp(s.p1 + d * t1);
        Segment::new(a, b).ok()
    }

    pub fn clamp(&self, p: Point) -> Point {
        Point::new(p.x.clamp(self.x0, self.x1), p.y.clamp(self.y0, self.y1))
    }
}

/// Orientation of the undirected line through `s`, in `[0, π)`.
pub fn orientation(s: &Segment) -> f64 {
    let d = s.direction();
    let mut a = d.y.atan2(d.x).rem_euclid(PI);
    // values a hair below π are the same line as 0
    if a >= PI - 1e-12 {
        a = 0.0;
    }
    a
}

/// Smallest angle between two undirected orientations, in `[0, π/2]`.
pub fn angular_difference(a: f64, b: f64) -> f64 {
    let d = (a - b).abs().rem_euclid(PI);
    d.min(PI - d)
}

/// Intersection of the infinite supporting lines of two segments.
pub fn line_intersection(a: &Segment, b: &Segment) -> Option<Point> {
    if angular_difference(orientation(a), orientation(b)) < PARALLEL_EPSILON {
        return None;
    }
    let da = a.direction();
    let db = b.direction();
    let denom = da.cross(db);
    if denom == 0.0 {
        return None;
    }
    let t = (b.p1 - a.p1).cross(db) / denom;
    Some(a.p1 + da * t)
}

/// Rigid rotation of `p` about `center` by `theta` radians.
pub fn rotate_about(p: Point, center: Point, theta: f64) -> Point {
    if theta == 0.0 {
        return p;
    }
    let (s, c) = theta.sin_cos();
    let rel = p - center;
    Point::new(
        center.x + rel.x * c - rel.y * s,
        center.y + rel.x * s + rel.y * c,
    )
}

pub fn segment_length(s: &Segment) -> f64 {
    s.p1.distance(s.p2)
}

/// Orientation perpendicular to `angle`, wrapped into `[0, π)`.
pub fn perpendicular(angle: f64) -> f64 {
    let p = (angle + FRAC_PI_2).rem_euclid(PI);
    if p >= PI - 1e-12 {
        0.0
    } else {
        p
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::f64::consts::FRAC_PI_4;

    fn seg(x1: f64, y1: f64, x2: f64, y2: f64) -> Segment {
        Segment::from_coords(x1, y1, x2, y2).unwrap()
    }

    #[test]
    fn orientation_examples() {
        assert!((orientation(&seg(0.0, 0.0, 1.0, 1.0)) - FRAC_PI_4).abs() < 1e-12);
        assert!((orientation(&seg(0.0, 0.0, 0.0, 5.0)) - FRAC_PI_2).abs() < 1e-12);
        assert!((orientation(&seg(0.0, 5.0, 0.0, 0.0)) - FRAC_PI_2).abs() < 1e-12);
        // atan(1/2)
        assert!((orientation(&seg(0.0, 0.0, 2.0, 1.0)) - 0.463_647_609_000_806_1).abs() < 1e-12);
        assert_eq!(orientation(&seg(3.0, 0.0, 0.0, 0.0)), 0.0);
    }

    #[test]
    fn angular_difference_examples() {
        assert!((angular_difference(FRAC_PI_4, 3.0 * FRAC_PI_4) - FRAC_PI_2).abs() < 1e-12);
        assert_eq!(angular_difference(1.234, 1.234), 0.0);
        assert!((angular_difference(0.1, 3.1) - 0.141_592_653_589_793_12).abs() < 1e-12);
    }

    #[test]
    fn intersection_examples() {
        let p = line_intersection(&seg(0.0, 0.0, 2.0, 2.0), &seg(0.0, 2.0, 2.0, 0.0)).unwrap();
        assert!((p.x - 1.0).abs() < 1e-12 && (p.y - 1.0).abs() < 1e-12);
        assert!(line_intersection(&seg(0.0, 0.0, 1.0, 0.0), &seg(0.0, 1.0, 1.0, 1.0)).is_none());
        let p = line_intersection(&seg(0.0, 0.0, 4.0, 0.0), &seg(1.0, -1.0, 1.0, 3.0)).unwrap();
        assert!((p.x - 1.0).abs() < 1e-12 && p.y.abs() < 1e-12);
    }

    #[test]
    fn nearly_parallel_is_rejected() {
        let a = seg(0.0, 0.0, 100.0, 0.0);
        let b = seg(0.0, 1.0, 100.0, 1.0 + 100.0 * 5e-5);
        assert!(line_intersection(&a, &b).is_none());
    }

    #[test]
    fn rotation_examples() {
        let p = rotate_about(Point::new(1.0, 0.0), Point::new(0.0, 0.0), FRAC_PI_2);
        assert!(p.x.abs() < 1e-12 && (p.y - 1.0).abs() < 1e-12);
        let c = Point::new(5.0, 5.0);
        assert_eq!(rotate_about(c, c, 0.77), c);
        let p = rotate_about(Point::new(2.0, 0.0), Point::new(1.0, 0.0), PI);
        assert!(p.x.abs() < 1e-12 && p.y.abs() < 1e-12);
    }

    #[test]
    fn length_examples() {
        assert_eq!(segment_length(&seg(0.0, 0.0, 3.0, 4.0)), 5.0);
        assert_eq!(segment_length(&seg(0.0, 0.0, 1.0, 0.0)), 1.0);
        assert_eq!(segment_length(&seg(1.0, 1.0, 4.0, 5.0)), 5.0);
    }

    #[test]
    fn degenerate_segments_rejected() {
        assert!(Segment::from_coords(1.0, 1.0, 1.0, 1.0).is_err());
        assert!(Segment::from_coords(f64::NAN, 1.0, 1.0, 2.0).is_err());
        let json = r#"{"p1":{"x":1.0,"y":1.0},"p2":{"x":1.0,"y":1.0}}"#;
        assert!(serde_json::from_str::<Segment>(json).is_err());
    }

    #[test]
    fn clip_line_to_rect() {
        let r = Rect::from_size(200.0, 100.0);
        let s = r
            .clip_line(Point::new(50.0, 50.0), Point::new(0.0, 1.0))
            .unwrap();
        assert_eq!(s.coords(), [50.0, 0.0, 50.0, 100.0]);
        assert!(r
            .clip_line(Point::new(-5.0, 0.0), Point::new(0.0, 1.0))
            .is_none());
        let s = r
            .clip_line(Point::new(0.0, 0.0), Point::new(1.0, 1.0))
            .unwrap();
        assert_eq!(s.coords(), [0.0, 0.0, 100.0, 100.0]);
    }

    #[test]
    fn reflect_across_vertical() {
        let s = seg(10.0, 0.0, 10.0, 5.0);
        let p = s.reflect(Point::new(7.0, 3.0));
        assert!((p.x - 13.0).abs() < 1e-12 && (p.y - 3.0).abs() < 1e-12);
    }

    fn arb_point() -> impl Strategy<Value = Point> {
        (-1e3..1e3f64, -1e3..1e3f64).prop_map(|(x, y)| Point::new(x, y))
    }

    fn arb_segment() -> impl Strategy<Value = Segment> {
        (arb_point(), arb_point())
            .prop_filter("distinct", |(a, b)| a.distance(*b) > 1e-3)
            .prop_map(|(a, b)| Segment::new(a, b).unwrap())
    }

    proptest! {
        #[test]
        fn orientation_ignores_endpoint_order(s in arb_segment()) {
            let r = Segment::new(s.p2(), s.p1()).unwrap();
            prop_assert!(angular_difference(orientation(&s), orientation(&r)) < 1e-12);
            let o = orientation(&s);
            prop_assert!((0.0..PI).contains(&o));
        }

        #[test]
        fn angular_difference_is_a_metric(a in 0.0..PI, b in 0.0..PI, c in 0.0..PI) {
            let ab = angular_difference(a, b);
            prop_assert!((0.0..=FRAC_PI_2).contains(&ab));
            prop_assert_eq!(ab, angular_difference(b, a));
            prop_assert!(ab <= angular_difference(a, c) + angular_difference(c, b) + 1e-12);
            prop_assert_eq!(angular_difference(a, a), 0.0);
        }

        #[test]
        fn rotation_round_trip(p in arb_point(), c in arb_point(), theta in -10.0..10.0f64) {
            let q = rotate_about(rotate_about(p, c, theta), c, -theta);
            prop_assert!(p.distance(q) < 1e-9);
        }

        #[test]
        fn rotation_preserves_length(s in arb_segment(), c in arb_point(), theta in -10.0..10.0f64) {
            let r = s.rotated_about(c, theta).unwrap();
            prop_assert!((segment_length(&s) - segment_length(&r)).abs() < 1e-9);
        }

        #[test]
        fn intersection_lies_on_both_lines(a in arb_segment(), b in arb_segment()) {
            if let Some(p) = line_intersection(&a, &b) {
                // scale tolerance by how far out the intersection is
                let scale = 1.0 + p.norm() / 1e3;
                prop_assert!(a.line_distance(p) < 1e-6 * scale);
                prop_assert!(b.line_distance(p) < 1e-6 * scale);
            }
        }
    }
}
