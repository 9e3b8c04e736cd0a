use alloc::vec::Vec;
#[allow(unused_imports)] // inherent float methods are unavailable without std
use num_traits::Float;
use serde::{Deserialize, Serialize};

use super::{orient, Point, RoofPolygon, EPS};
use crate::{error::invalid, Error, Result};

/// Rotated rectangle; `angle` is the direction of the long axis in degrees
/// counterclockwise from `+x`, in `[0, 180)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OrientedBox {
    pub center: Point,
    /// `(a, b)` with `a >= b`; `a` runs along the long axis.
    pub half_extents: (f64, f64),
    pub angle: f64,
    /// Set when the input was collinear and `b == 0`.
    pub degenerate: bool,
}

impl OrientedBox {
    pub fn long_axis(&self) -> Point {
        let r = self.angle.to_radians();
        Point::new(r.cos(), r.sin())
    }

    pub fn short_axis(&self) -> Point {
        let u = self.long_axis();
        Point::new(-u.y, u.x)
    }

    pub fn area(&self) -> f64 {
        4.0 * self.half_extents.0 * self.half_extents.1
    }

    /// Counterclockwise corners.
    pub fn corners(&self) -> [Point; 4] {
        let u = self.long_axis() * self.half_extents.0;
        let v = self.short_axis() * self.half_extents.1;
        let c = self.center;
        [c - u - v, c + u - v, c + u + v, c - u + v]
    }

    /// Midpoints of the two long sides.
    pub fn long_side_midpoints(&self) -> (Point, Point) {
        let v = self.short_axis() * self.half_extents.1;
        (self.center - v, self.center + v)
    }
}

/// Andrew's monotone chain. Returns the hull counterclockwise without collinear
/// vertices; fewer than 3 points come back for collinear input.
pub fn convex_hull(points: &[Point]) -> Vec<Point> {
    let mut pts: Vec<Point> = points.iter().copied().filter(|p| p.x.is_finite() && p.y.is_finite()).collect();
    pts.sort_by(|a, b| a.x.total_cmp(&b.x).then(a.y.total_cmp(&b.y)));
    pts.dedup();
    if pts.len() < 3 {
        return pts;
    }
    let mut hull: Vec<Point> = Vec::with_capacity(2 * pts.len());
    push_chain(&mut hull, pts.iter());
    push_chain(&mut hull, pts.iter().rev());
    if hull.len() < 3 {
        // all points collinear: return the two extremes
        let first = pts[0];
        let last = pts[pts.len() - 1];
        return alloc::vec![first, last];
    }
    hull
}

fn push_chain<'a>(hull: &mut Vec<Point>, points: impl Iterator<Item = &'a Point>) {
    let start = hull.len();
    for &p in points {
        while hull.len() >= start + 2 && orient(hull[hull.len() - 2], hull[hull.len() - 1], p) <= 0.0 {
            hull.pop();
        }
        hull.push(p);
    }
    hull.pop();
}

fn extremes(points: &[Point]) -> (Point, Point) {
    let mut best = (points[0], points[0]);
    let mut d = -1.0;
    for (i, &p) in points.iter().enumerate() {
        for &q in &points[i + 1..] {
            let dd = p.dist(q);
            if dd > d {
                d = dd;
                best = (p, q);
            }
        }
    }
    best
}

fn normalize_angle(deg: f64) -> f64 {
    let mut a = deg % 180.0;
    if a < 0.0 {
        a += 180.0;
    }
    if a >= 180.0 - 1e-12 {
        0.0
    } else {
        a
    }
}

/// Minimum-area enclosing rectangle by rotating calipers over the convex hull.
pub fn min_rotated_box(points: &[Point]) -> Result<OrientedBox> {
    if points.len() < 3 {
        return Err(invalid("minimum rotated box needs at least 3 vertices"));
    }
    let hull = convex_hull(points);
    if hull.len() < 3 {
        let (p, q) = extremes(&hull);
        let d = q - p;
        return Ok(OrientedBox {
            center: p.lerp(q, 0.5),
            half_extents: (0.5 * d.norm(), 0.0),
            angle: normalize_angle(d.y.atan2(d.x).to_degrees()),
            degenerate: true,
        });
    }
    let n = hull.len();
    let mut best: Option<(f64, Point, f64, f64, f64, f64)> = None;
    for i in 0..n {
        let e = hull[(i + 1) % n] - hull[i];
        let len = e.norm();
        if len <= EPS {
            continue;
        }
        let u = e * (1.0 / len);
        let v = Point::new(-u.y, u.x);
        let (mut umin, mut umax, mut vmin, mut vmax) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
        for &p in &hull {
            let (pu, pv) = (p.dot(u), p.dot(v));
            umin = umin.min(pu);
            umax = umax.max(pu);
            vmin = vmin.min(pv);
            vmax = vmax.max(pv);
        }
        let area = (umax - umin) * (vmax - vmin);
        if best.map_or(true, |b| area < b.0 * (1.0 - 1e-12)) {
            best = Some((area, u, umin, umax, vmin, vmax));
        }
    }
    let (_, u, umin, umax, vmin, vmax) = best.ok_or_else(|| Error::Degenerate("hull has no edges".into()))?;
    let v = Point::new(-u.y, u.x);
    let center = u * (0.5 * (umin + umax)) + v * (0.5 * (vmin + vmax));
    let (eu, ev) = (0.5 * (umax - umin), 0.5 * (vmax - vmin));
    let (long, a, b) = if eu >= ev { (u, eu, ev) } else { (v, ev, eu) };
    Ok(OrientedBox {
        center,
        half_extents: (a, b),
        angle: normalize_angle(long.y.atan2(long.x).to_degrees()),
        degenerate: b <= EPS,
    })
}

/// Maximum and minimum Feret diameters: the hull diameter and the minimum
/// width over hull edge directions. Collinear input gives `(length, 0)`.
pub fn feret_diameters(points: &[Point]) -> Result<(f64, f64)> {
    if points.len() < 3 {
        return Err(invalid("Feret diameters need at least 3 vertices"));
    }
    let hull = convex_hull(points);
    let (p, q) = extremes(&hull);
    let max = p.dist(q);
    if hull.len() < 3 {
        return Ok((max, 0.0));
    }
    let n = hull.len();
    let mut min = f64::INFINITY;
    for i in 0..n {
        let (a, b) = (hull[i], hull[(i + 1) % n]);
        let len = a.dist(b);
        if len <= EPS {
            continue;
        }
        let width = hull.iter().map(|&p| orient(a, b, p).abs() / len).fold(0.0, f64::max);
        min = min.min(width);
    }
    Ok((max, min))
}

/// Rotates the roof about its centroid so the long axis of its minimum rotated
/// box makes `target_angle` degrees with the east axis.
pub fn rotate_roof(p: &RoofPolygon, target_angle: f64) -> Result<RoofPolygon> {
    if !(0.0..180.0).contains(&target_angle) {
        return Err(invalid("target angle must be in [0, 180)"));
    }
    let bbox = min_rotated_box(&p.exterior)?;
    if bbox.degenerate {
        return Err(Error::Degenerate("roof has a degenerate bounding box".into()));
    }
    let mut delta = target_angle - bbox.angle;
    if delta > 90.0 {
        delta -= 180.0;
    } else if delta <= -90.0 {
        delta += 180.0;
    }
    let c = p.centroid();
    let r = delta.to_radians();
    let mut out = p.transformed(|q| c + (q - c).rotated(r));
    out.rotation_applied = p.rotation_applied + delta;
    Ok(out)
}
