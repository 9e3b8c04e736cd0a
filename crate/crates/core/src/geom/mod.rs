//! Planar and 3D geometry in the local east-north metric frame.
//!
//! All coordinates are meters with `+x` east and `+y` north. Rings are stored
//! open (the closing vertex is not repeated). Exterior rings run
//! counterclockwise and hole rings clockwise.

mod clip;
mod hull;
mod visibility;

pub use clip::{
    clip_convex, clip_intersection, contains_convex, offset_polygon, rects_overlap, setback_region,
    Clipped, SNAP_SCALE,
};
pub use hull::{convex_hull, feret_diameters, min_rotated_box, rotate_roof, OrientedBox};
pub use visibility::segment_visible;

use alloc::vec::Vec;
use core::ops::{Add, Mul, Neg, Sub};
#[allow(unused_imports)] // inherent float methods are unavailable without std
use num_traits::Float;
use serde::{Deserialize, Serialize};

use crate::{error::invalid, Result};

/// Tolerance used for on-boundary and collinearity decisions, in meters.
pub const EPS: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(from = "[f64; 2]", into = "[f64; 2]")]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn dot(self, o: Point) -> f64 {
        self.x * o.x + self.y * o.y
    }

    pub fn cross(self, o: Point) -> f64 {
        self.x * o.y - self.y * o.x
    }

    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn dist(self, o: Point) -> f64 {
        (self - o).norm()
    }

    /// Counterclockwise rotation by `angle` radians about the origin.
    pub fn rotated(self, angle: f64) -> Point {
        let (s, c) = angle.sin_cos();
        Point::new(c * self.x - s * self.y, s * self.x + c * self.y)
    }

    pub fn lerp(self, o: Point, t: f64) -> Point {
        self + (o - self) * t
    }
}

impl From<[f64; 2]> for Point {
    fn from(v: [f64; 2]) -> Self {
        Point::new(v[0], v[1])
    }
}

impl From<Point> for [f64; 2] {
    fn from(p: Point) -> Self {
        [p.x, p.y]
    }
}

impl Add for Point {
    type Output = Point;
    fn add(self, o: Point) -> Point {
        Point::new(self.x + o.x, self.y + o.y)
    }
}

impl Sub for Point {
    type Output = Point;
    fn sub(self, o: Point) -> Point {
        Point::new(self.x - o.x, self.y - o.y)
    }
}

impl Mul<f64> for Point {
    type Output = Point;
    fn mul(self, s: f64) -> Point {
        Point::new(self.x * s, self.y * s)
    }
}

impl Neg for Point {
    type Output = Point;
    fn neg(self) -> Point {
        Point::new(-self.x, -self.y)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(from = "[f64; 3]", into = "[f64; 3]")]
pub struct Point3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Point3 {
    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Self { x, y, z }
    }

    pub fn dot(self, o: Point3) -> f64 {
        self.x * o.x + self.y * o.y + self.z * o.z
    }

    pub fn cross(self, o: Point3) -> Point3 {
        Point3::new(
            self.y * o.z - self.z * o.y,
            self.z * o.x - self.x * o.z,
            self.x * o.y - self.y * o.x,
        )
    }

    pub fn norm(self) -> f64 {
        self.dot(self).sqrt()
    }

    pub fn normalized(self) -> Point3 {
        let n = self.norm();
        Point3::new(self.x / n, self.y / n, self.z / n)
    }

    pub fn xy(self) -> Point {
        Point::new(self.x, self.y)
    }
}

impl From<[f64; 3]> for Point3 {
    fn from(v: [f64; 3]) -> Self {
        Point3::new(v[0], v[1], v[2])
    }
}

impl From<Point3> for [f64; 3] {
    fn from(p: Point3) -> Self {
        [p.x, p.y, p.z]
    }
}

impl Add for Point3 {
    type Output = Point3;
    fn add(self, o: Point3) -> Point3 {
        Point3::new(self.x + o.x, self.y + o.y, self.z + o.z)
    }
}

impl Sub for Point3 {
    type Output = Point3;
    fn sub(self, o: Point3) -> Point3 {
        Point3::new(self.x - o.x, self.y - o.y, self.z - o.z)
    }
}

impl Mul<f64> for Point3 {
    type Output = Point3;
    fn mul(self, s: f64) -> Point3 {
        Point3::new(self.x * s, self.y * s, self.z * s)
    }
}

/// Axis-aligned bounding box.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Aabb {
    pub min: Point,
    pub max: Point,
}

impl Aabb {
    pub fn empty() -> Self {
        Aabb {
            min: Point::new(f64::INFINITY, f64::INFINITY),
            max: Point::new(f64::NEG_INFINITY, f64::NEG_INFINITY),
        }
    }

    pub fn of(points: impl IntoIterator<Item = Point>) -> Self {
        let mut b = Aabb::empty();
        for p in points {
            b.expand(p);
        }
        b
    }

    pub fn expand(&mut self, p: Point) {
        self.min.x = self.min.x.min(p.x);
        self.min.y = self.min.y.min(p.y);
        self.max.x = self.max.x.max(p.x);
        self.max.y = self.max.y.max(p.y);
    }

    pub fn overlaps(&self, o: &Aabb) -> bool {
        self.min.x <= o.max.x && o.min.x <= self.max.x && self.min.y <= o.max.y && o.min.y <= self.max.y
    }

    pub fn width(&self) -> f64 {
        self.max.x - self.min.x
    }

    pub fn height(&self) -> f64 {
        self.max.y - self.min.y
    }
}

/// Where a point lies relative to a ring or polygon.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Location {
    Inside,
    Boundary,
    Outside,
}

/// Rooftop outline with obstacle holes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoofPolygon {
    pub exterior: Vec<Point>,
    #[serde(default)]
    pub holes: Vec<Vec<Point>>,
    /// Accumulated rotation applied by [`rotate_roof`], in degrees.
    #[serde(default)]
    pub rotation_applied: f64,
}

impl RoofPolygon {
    /// Builds a polygon, dropping repeated closing vertices and fixing ring
    /// orientation (exterior counterclockwise, holes clockwise).
    pub fn new(exterior: Vec<Point>, holes: Vec<Vec<Point>>) -> Self {
        let mut p = RoofPolygon {
            exterior,
            holes,
            rotation_applied: 0.0,
        };
        p.normalize();
        p
    }

    pub fn rectangle(x0: f64, y0: f64, x1: f64, y1: f64) -> Self {
        RoofPolygon::new(
            alloc::vec![
                Point::new(x0, y0),
                Point::new(x1, y0),
                Point::new(x1, y1),
                Point::new(x0, y1)
            ],
            Vec::new(),
        )
    }

    pub fn normalize(&mut self) {
        clean_ring(&mut self.exterior);
        if ring_signed_area(&self.exterior) < 0.0 {
            self.exterior.reverse();
        }
        for h in &mut self.holes {
            clean_ring(h);
            if ring_signed_area(h) > 0.0 {
                h.reverse();
            }
        }
        self.holes.retain(|h| h.len() >= 3);
    }

    /// Checks ring sizes, orientation, simplicity and hole placement.
    pub fn validate(&self) -> Result<()> {
        if self.exterior.len() < 3 {
            return Err(invalid("exterior ring needs at least 3 vertices"));
        }
        if self.exterior.iter().any(|p| !p.x.is_finite() || !p.y.is_finite()) {
            return Err(invalid("non-finite coordinate in exterior"));
        }
        if ring_signed_area(&self.exterior) <= 0.0 {
            return Err(invalid("exterior ring must be counterclockwise with positive area"));
        }
        if !ring_is_simple(&self.exterior) {
            return Err(invalid("exterior ring self-intersects"));
        }
        for (n, h) in self.holes.iter().enumerate() {
            if h.len() < 3 || ring_signed_area(h) >= 0.0 {
                return Err(invalid(alloc::format!("hole {n} must be clockwise with at least 3 vertices")));
            }
            if !ring_is_simple(h) {
                return Err(invalid(alloc::format!("hole {n} self-intersects")));
            }
            if h.iter().any(|&p| locate_in_ring(p, &self.exterior) != Location::Inside) {
                return Err(invalid(alloc::format!("hole {n} is not strictly inside the exterior")));
            }
            for other in &self.holes[n + 1..] {
                if rings_touch(h, other) {
                    return Err(invalid(alloc::format!("hole {n} overlaps another hole")));
                }
            }
        }
        Ok(())
    }

    pub fn area(&self) -> f64 {
        ring_signed_area(&self.exterior).abs() - self.holes.iter().map(|h| ring_signed_area(h).abs()).sum::<f64>()
    }

    /// Area-weighted centroid of the region (holes subtracted).
    pub fn centroid(&self) -> Point {
        let (mut a, mut c) = ring_moments(&self.exterior);
        for h in &self.holes {
            let (ha, hc) = ring_moments(h);
            // hole moments carry the opposite sign because the ring is clockwise
            a += ha;
            c = c + hc;
        }
        if a.abs() < EPS {
            return Aabb::of(self.exterior.iter().copied()).center();
        }
        c * (1.0 / a)
    }

    pub fn bbox(&self) -> Aabb {
        Aabb::of(self.exterior.iter().copied())
    }

    pub fn rings(&self) -> impl Iterator<Item = &[Point]> {
        core::iter::once(self.exterior.as_slice()).chain(self.holes.iter().map(|h| h.as_slice()))
    }

    /// Every ring edge as a segment.
    pub fn edges(&self) -> impl Iterator<Item = (Point, Point)> + '_ {
        self.rings().flat_map(ring_edges)
    }

    pub fn locate(&self, p: Point) -> Location {
        match locate_in_ring(p, &self.exterior) {
            Location::Outside => Location::Outside,
            Location::Boundary => Location::Boundary,
            Location::Inside => {
                for h in &self.holes {
                    match locate_in_ring(p, h) {
                        Location::Inside => return Location::Outside,
                        Location::Boundary => return Location::Boundary,
                        Location::Outside => {}
                    }
                }
                Location::Inside
            }
        }
    }

    pub fn transformed(&self, f: impl Fn(Point) -> Point) -> RoofPolygon {
        RoofPolygon {
            exterior: self.exterior.iter().map(|&p| f(p)).collect(),
            holes: self.holes.iter().map(|h| h.iter().map(|&p| f(p)).collect()).collect(),
            rotation_applied: self.rotation_applied,
        }
    }
}

impl Aabb {
    pub fn center(&self) -> Point {
        self.min.lerp(self.max, 0.5)
    }
}

fn clean_ring(ring: &mut Vec<Point>) {
    ring.dedup_by(|a, b| a.dist(*b) < EPS);
    while ring.len() > 1 && ring[0].dist(ring[ring.len() - 1]) < EPS {
        ring.pop();
    }
}

/// Shoelace area; positive for counterclockwise rings.
pub fn ring_signed_area(ring: &[Point]) -> f64 {
    if ring.len() < 3 {
        return 0.0;
    }
    let o = ring[0];
    let mut s = 0.0;
    for w in ring[1..].windows(2) {
        s += (w[0] - o).cross(w[1] - o);
    }
    0.5 * s
}

/// Signed area and first moment (area times centroid) of a ring.
fn ring_moments(ring: &[Point]) -> (f64, Point) {
    if ring.len() < 3 {
        return (0.0, Point::default());
    }
    let o = ring[0];
    let mut a = 0.0;
    let mut c = Point::default();
    for w in ring[1..].windows(2) {
        let (p, q) = (w[0] - o, w[1] - o);
        let t = 0.5 * p.cross(q);
        a += t;
        c = c + (p + q) * (t / 3.0);
    }
    (a, c + o * a)
}

pub fn ring_centroid(ring: &[Point]) -> Point {
    let (a, c) = ring_moments(ring);
    if a.abs() < EPS {
        return Aabb::of(ring.iter().copied()).center();
    }
    c * (1.0 / a)
}

pub fn ring_edges(ring: &[Point]) -> impl Iterator<Item = (Point, Point)> + '_ {
    let n = ring.len();
    (0..n).map(move |i| (ring[i], ring[(i + 1) % n]))
}

/// Twice the signed area of triangle `abc`.
pub fn orient(a: Point, b: Point, c: Point) -> f64 {
    (b - a).cross(c - a)
}

pub fn point_segment_distance(p: Point, a: Point, b: Point) -> f64 {
    let d = b - a;
    let len2 = d.dot(d);
    if len2 == 0.0 {
        return p.dist(a);
    }
    let t = ((p - a).dot(d) / len2).clamp(0.0, 1.0);
    p.dist(a + d * t)
}

/// Crossing-number test with an explicit boundary band of width [`EPS`].
pub fn locate_in_ring(p: Point, ring: &[Point]) -> Location {
    let mut inside = false;
    for (a, b) in ring_edges(ring) {
        if point_segment_distance(p, a, b) <= EPS {
            return Location::Boundary;
        }
        if (a.y > p.y) != (b.y > p.y) {
            let x = a.x + (p.y - a.y) / (b.y - a.y) * (b.x - a.x);
            if p.x < x {
                inside = !inside;
            }
        }
    }
    if inside {
        Location::Inside
    } else {
        Location::Outside
    }
}

pub fn is_convex(ring: &[Point]) -> bool {
    let n = ring.len();
    if n < 3 {
        return false;
    }
    let mut sign = 0.0;
    for i in 0..n {
        let o = orient(ring[i], ring[(i + 1) % n], ring[(i + 2) % n]);
        if o.abs() <= EPS {
            continue;
        }
        if sign == 0.0 {
            sign = o.signum();
        } else if o.signum() != sign {
            return false;
        }
    }
    sign != 0.0
}

/// True when closed segments `ab` and `cd` share at least one point.
pub fn segments_touch(a: Point, b: Point, c: Point, d: Point) -> bool {
    let o1 = orient(a, b, c);
    let o2 = orient(a, b, d);
    let o3 = orient(c, d, a);
    let o4 = orient(c, d, b);
    if ((o1 > EPS && o2 < -EPS) || (o1 < -EPS && o2 > EPS)) && ((o3 > EPS && o4 < -EPS) || (o3 < -EPS && o4 > EPS)) {
        return true;
    }
    point_segment_distance(c, a, b) <= EPS
        || point_segment_distance(d, a, b) <= EPS
        || point_segment_distance(a, c, d) <= EPS
        || point_segment_distance(b, c, d) <= EPS
}

/// True when the open interiors of `ab` and `cd` cross at a single point.
pub fn segments_cross_properly(a: Point, b: Point, c: Point, d: Point) -> bool {
    let o1 = orient(a, b, c);
    let o2 = orient(a, b, d);
    let o3 = orient(c, d, a);
    let o4 = orient(c, d, b);
    ((o1 > EPS && o2 < -EPS) || (o1 < -EPS && o2 > EPS)) && ((o3 > EPS && o4 < -EPS) || (o3 < -EPS && o4 > EPS))
}

fn ring_is_simple(ring: &[Point]) -> bool {
    let n = ring.len();
    for i in 0..n {
        let (a, b) = (ring[i], ring[(i + 1) % n]);
        for j in i + 1..n {
            let (c, d) = (ring[j], ring[(j + 1) % n]);
            let adjacent = j == i + 1 || (i == 0 && j == n - 1);
            if adjacent {
                // neighbours share a vertex; they must not fold back onto each other
                let (shared, p, q) = if j == i + 1 { (b, a, d) } else { (a, b, c) };
                let u = p - shared;
                let v = q - shared;
                if u.cross(v).abs() <= EPS * u.norm().max(v.norm()) && u.dot(v) > 0.0 {
                    return false;
                }
            } else if segments_touch(a, b, c, d) {
                return false;
            }
        }
    }
    true
}

fn rings_touch(r1: &[Point], r2: &[Point]) -> bool {
    for (a, b) in ring_edges(r1) {
        for (c, d) in ring_edges(r2) {
            if segments_touch(a, b, c, d) {
                return true;
            }
        }
    }
    locate_in_ring(r1[0], r2) != Location::Outside || locate_in_ring(r2[0], r1) != Location::Outside
}
