use alloc::vec;
use alloc::vec::Vec;
use core::cmp::Ordering;

use i_overlay::core::fill_rule::FillRule;
use i_overlay::core::overlay_rule::OverlayRule;
use i_overlay::float::scale::FixedScaleFloatOverlay;
use i_overlay::float::single::SingleFloatOverlay;
use i_overlay::mesh::float::outline::offset::OutlineOffset;
use i_overlay::mesh::float::style::{LineJoin, OutlineStyle};

use super::{is_convex, ring_centroid, ring_edges, ring_signed_area, segments_touch, Location, Point, RoofPolygon, EPS};

/// Coordinates are snapped to a 1e-6 m grid before general boolean operations.
pub const SNAP_SCALE: f64 = 1e6;

/// Miter joins are kept while the miter length stays within twice the offset
/// distance, i.e. for interior angles of at least 60 degrees; sharper corners
/// are beveled.
const MITER_MIN_ANGLE: f64 = core::f64::consts::FRAC_PI_3;

/// Result of a polygon intersection.
#[derive(Debug, Clone, PartialEq)]
pub struct Clipped {
    pub pieces: Vec<RoofPolygon>,
    pub area: f64,
}

/// Sutherland-Hodgman clip of `subject` against the convex polygon `clip`.
///
/// Both rings may have either orientation. The result is counterclockwise and
/// may be empty.
pub fn clip_convex(subject: &[Point], clip: &[Point]) -> Vec<Point> {
    if subject.len() < 3 || clip.len() < 3 {
        return Vec::new();
    }
    let ccw_clip = ring_signed_area(clip) >= 0.0;
    let mut output: Vec<Point> = if ring_signed_area(subject) >= 0.0 {
        subject.to_vec()
    } else {
        subject.iter().rev().copied().collect()
    };
    let mut input = Vec::with_capacity(output.len() + clip.len());
    let n = clip.len();
    for i in 0..n {
        let (a, b) = if ccw_clip {
            (clip[i], clip[(i + 1) % n])
        } else {
            (clip[(i + 1) % n], clip[i])
        };
        core::mem::swap(&mut input, &mut output);
        output.clear();
        if input.is_empty() {
            break;
        }
        let edge = b - a;
        let side = |p: Point| edge.cross(p - a);
        let mut prev = input[input.len() - 1];
        let mut prev_side = side(prev);
        for &cur in input.iter() {
            let cur_side = side(cur);
            if cur_side >= 0.0 {
                if prev_side < 0.0 {
                    output.push(prev.lerp(cur, prev_side / (prev_side - cur_side)));
                }
                output.push(cur);
            } else if prev_side >= 0.0 {
                output.push(prev.lerp(cur, prev_side / (prev_side - cur_side)));
            }
            prev = cur;
            prev_side = cur_side;
        }
    }
    if output.len() < 3 {
        output.clear();
    }
    output
}

fn ring_cmp(a: &[Point], b: &[Point]) -> Ordering {
    a.len().cmp(&b.len()).then_with(|| {
        for (p, q) in a.iter().zip(b) {
            let o = p.x.total_cmp(&q.x).then(p.y.total_cmp(&q.y));
            if o != Ordering::Equal {
                return o;
            }
        }
        Ordering::Equal
    })
}

fn to_contour(ring: &[Point]) -> Vec<[f64; 2]> {
    ring.iter().map(|&p| [p.x, p.y]).collect()
}

fn from_shapes(shapes: Vec<Vec<Vec<[f64; 2]>>>) -> Vec<RoofPolygon> {
    shapes
        .into_iter()
        .filter_map(|shape| {
            let mut rings = shape.into_iter().map(|c| c.into_iter().map(Point::from).collect::<Vec<_>>());
            let exterior = rings.next()?;
            let p = RoofPolygon::new(exterior, rings.collect());
            (p.exterior.len() >= 3 && p.area() > 0.0).then_some(p)
        })
        .collect()
}

/// Boolean intersection of two simple polygons.
///
/// Convex pairs are clipped directly; anything else goes through the snapped
/// general overlay. Operands are put in a canonical order first, so the area is
/// exactly symmetric in `a` and `b`.
pub fn clip_intersection(a: &[Point], b: &[Point]) -> Clipped {
    let (a, b) = if ring_cmp(a, b) == Ordering::Greater { (b, a) } else { (a, b) };
    let empty = Clipped {
        pieces: Vec::new(),
        area: 0.0,
    };
    if a.len() < 3 || b.len() < 3 || ring_signed_area(a).abs() <= EPS || ring_signed_area(b).abs() <= EPS {
        return empty;
    }
    if is_convex(a) && is_convex(b) {
        let ring = clip_convex(a, b);
        let area = ring_signed_area(&ring).max(0.0);
        if area == 0.0 {
            return empty;
        }
        return Clipped {
            pieces: vec![RoofPolygon::new(ring, Vec::new())],
            area,
        };
    }
    let (ca, cb) = (to_contour(a), to_contour(b));
    let shapes = ca
        .overlay_with_fixed_scale(&cb, OverlayRule::Intersect, FillRule::NonZero, SNAP_SCALE)
        .unwrap_or_else(|_| ca.overlay(&cb, OverlayRule::Intersect, FillRule::NonZero));
    let pieces = from_shapes(shapes);
    let area = pieces.iter().map(RoofPolygon::area).sum::<f64>().max(0.0);
    Clipped { pieces, area }
}

fn outline(p: &RoofPolygon, outer: f64, inner: f64) -> Vec<RoofPolygon> {
    if p.exterior.len() < 3 {
        return Vec::new();
    }
    if outer == 0.0 && inner == 0.0 {
        return vec![p.clone()];
    }
    let shape: Vec<Vec<[f64; 2]>> = p.rings().map(to_contour).collect();
    let mut style = OutlineStyle::new(outer);
    style.outer_offset = outer;
    style.inner_offset = inner;
    style.join = LineJoin::Miter(MITER_MIN_ANGLE);
    let shapes = shape
        .outline_fixed_scale(&style, SNAP_SCALE)
        .unwrap_or_else(|_| shape.outline(&style));
    let mut out = from_shapes(shapes);
    for q in &mut out {
        q.rotation_applied = p.rotation_applied;
    }
    out
}

/// Offsets the exterior outward by `distance` and every hole inward by the same
/// amount. A negative distance applies a setback: the exterior shrinks and the
/// obstacles grow. The result may split into several polygons or vanish.
pub fn offset_polygon(p: &RoofPolygon, distance: f64) -> Vec<RoofPolygon> {
    outline(p, distance, distance)
}

/// Region left after shrinking the exterior by `boundary` and growing every hole
/// by `obstacle`.
pub fn setback_region(p: &RoofPolygon, boundary: f64, obstacle: f64) -> Vec<RoofPolygon> {
    outline(p, -boundary, -obstacle)
}

/// Positive-area overlap test for two convex polygons by separating axes.
///
/// Polygons whose projections overlap by no more than `tol` on some axis are
/// treated as disjoint, so edge-sharing neighbours do not overlap.
pub fn rects_overlap(a: &[Point], b: &[Point], tol: f64) -> bool {
    for poly in [a, b] {
        for (p, q) in ring_edges(poly) {
            let d = q - p;
            let len = d.norm();
            if len <= EPS {
                continue;
            }
            let axis = Point::new(-d.y / len, d.x / len);
            let (amin, amax) = project(a, axis);
            let (bmin, bmax) = project(b, axis);
            if amax.min(bmax) - amin.max(bmin) <= tol {
                return false;
            }
        }
    }
    true
}

fn project(poly: &[Point], axis: Point) -> (f64, f64) {
    poly.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), p| {
        let v = p.dot(axis);
        (lo.min(v), hi.max(v))
    })
}

/// Whether the convex polygon `shape`, shrunk by `inset` toward its centroid,
/// lies inside one of the `region` polygons.
pub fn contains_convex(region: &[RoofPolygon], shape: &[Point], inset: f64) -> bool {
    if shape.len() < 3 {
        return false;
    }
    let c = ring_centroid(shape);
    let inner: Vec<Point> = shape
        .iter()
        .map(|&p| {
            let d = c - p;
            let len = d.norm();
            if len <= inset {
                c
            } else {
                p + d * (inset / len)
            }
        })
        .collect();
    let bbox = super::Aabb::of(inner.iter().copied());
    region.iter().any(|poly| {
        if !poly.bbox().overlaps(&bbox) {
            return false;
        }
        if inner.iter().any(|&p| poly.locate(p) != Location::Inside) {
            return false;
        }
        // no boundary edge may reach into the shape
        !poly.edges().any(|(a, b)| {
            let eb = super::Aabb::of([a, b]);
            eb.overlaps(&bbox) && segment_meets_convex(a, b, &inner)
        })
    })
}

fn segment_meets_convex(a: Point, b: Point, poly: &[Point]) -> bool {
    if super::locate_in_ring(a, poly) != Location::Outside || super::locate_in_ring(b, poly) != Location::Outside {
        return true;
    }
    ring_edges(poly).any(|(p, q)| segments_touch(a, b, p, q))
}
