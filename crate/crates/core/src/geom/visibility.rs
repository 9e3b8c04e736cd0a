use alloc::vec::Vec;

use super::{orient, point_segment_distance, Location, Point, RoofPolygon, EPS};
use crate::{error::invalid, Result};

/// Whether the straight segment `p1`-`p2` stays inside the roof (boundary
/// included) without crossing any obstacle hole.
///
/// Both endpoints must lie inside the roof or on its boundary.
pub fn segment_visible(p1: Point, p2: Point, roof: &RoofPolygon) -> Result<bool> {
    if roof.locate(p1) == Location::Outside || roof.locate(p2) == Location::Outside {
        return Err(invalid("segment endpoint lies outside the roof"));
    }
    let d = p2 - p1;
    let len2 = d.dot(d);
    if len2 <= EPS * EPS {
        return Ok(true);
    }
    let mut cuts: Vec<f64> = Vec::with_capacity(8);
    cuts.push(0.0);
    cuts.push(1.0);
    for (a, b) in roof.edges() {
        let o1 = orient(p1, p2, a);
        let o2 = orient(p1, p2, b);
        let o3 = orient(a, b, p1);
        let o4 = orient(a, b, p2);
        let tol1 = EPS * d.norm();
        let tol2 = EPS * a.dist(b);
        if ((o1 > tol1 && o2 < -tol1) || (o1 < -tol1 && o2 > tol1))
            && ((o3 > tol2 && o4 < -tol2) || (o3 < -tol2 && o4 > tol2))
        {
            // a proper crossing always leaves the region
            return Ok(false);
        }
        for v in [a, b] {
            if point_segment_distance(v, p1, p2) <= EPS {
                cuts.push((v - p1).dot(d) / len2);
            }
        }
    }
    cuts.sort_by(f64::total_cmp);
    cuts.dedup_by(|a, b| (*a - *b).abs() < 1e-12);
    for w in cuts.windows(2) {
        let mid = p1.lerp(p2, 0.5 * (w[0] + w[1]));
        if roof.locate(mid) == Location::Outside {
            return Ok(false);
        }
    }
    Ok(true)
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn l_shape() -> RoofPolygon {
        RoofPolygon::new(
            vec![
                Point::new(0.0, 0.0),
                Point::new(4.0, 0.0),
                Point::new(4.0, 1.0),
                Point::new(1.0, 1.0),
                Point::new(1.0, 4.0),
                Point::new(0.0, 4.0),
            ],
            vec![],
        )
    }

    #[test]
    fn convex_interior_points_see_each_other() {
        let sq = RoofPolygon::rectangle(0.0, 0.0, 5.0, 5.0);
        assert!(segment_visible(Point::new(1.0, 1.0), Point::new(4.0, 3.0), &sq).unwrap());
        assert!(segment_visible(Point::new(0.0, 0.0), Point::new(5.0, 5.0), &sq).unwrap());
        // along an edge
        assert!(segment_visible(Point::new(0.0, 0.0), Point::new(5.0, 0.0), &sq).unwrap());
    }

    #[test]
    fn hole_blocks_view() {
        let mut p = RoofPolygon::rectangle(0.0, 0.0, 10.0, 10.0);
        p.holes.push(vec![
            Point::new(4.0, 4.0),
            Point::new(6.0, 4.0),
            Point::new(6.0, 6.0),
            Point::new(4.0, 6.0),
        ]);
        p.normalize();
        assert!(!segment_visible(Point::new(1.0, 5.0), Point::new(9.0, 5.0), &p).unwrap());
        assert!(segment_visible(Point::new(1.0, 1.0), Point::new(9.0, 1.0), &p).unwrap());
        // grazing the hole corner is still visible
        assert!(segment_visible(Point::new(3.0, 5.0), Point::new(5.0, 3.0), &p).unwrap());
    }

    #[test]
    fn l_bend_blocks_and_reflex_corner_grazes() {
        let l = l_shape();
        assert!(!segment_visible(Point::new(3.5, 0.5), Point::new(0.5, 3.5), &l).unwrap());
        assert!(!segment_visible(Point::new(3.0, 0.0), Point::new(0.0, 3.0), &l).unwrap());
        // through the reflex vertex exactly
        assert!(segment_visible(Point::new(2.0, 0.0), Point::new(0.0, 2.0), &l).unwrap());
        assert!(segment_visible(Point::new(0.5, 3.5), Point::new(0.5, 0.5), &l).unwrap());
    }

    #[test]
    fn outside_point_is_rejected() {
        let l = l_shape();
        assert!(segment_visible(Point::new(3.0, 3.0), Point::new(0.5, 0.5), &l).is_err());
    }

    #[test]
    fn symmetric() {
        let l = l_shape();
        let pts = [Point::new(3.5, 0.5), Point::new(0.5, 3.5), Point::new(0.5, 0.5), Point::new(1.0, 1.0)];
        for &a in &pts {
            for &b in &pts {
                assert_eq!(segment_visible(a, b, &l).unwrap(), segment_visible(b, a, &l).unwrap());
            }
        }
    }
}
