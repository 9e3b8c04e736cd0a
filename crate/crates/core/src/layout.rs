//! Candidate panels over azimuth, tilt and shift grids, and the conflict graph
//! between them.
//!
//! Each grid is laid out in a frame aligned with its azimuth: `u` runs along
//! the panel width and `v` points the way the panel faces. The grid starts at
//! the minimum corner of the setback region's bounding box in that frame, so a
//! roof and its rotated copy produce the same candidates.

use alloc::vec;
use alloc::vec::Vec;
#[allow(unused_imports)] // inherent float methods are unavailable without std
use num_traits::Float;
use serde::{Deserialize, Serialize};

use crate::geom::{contains_convex, rects_overlap, ring_signed_area, setback_region, Aabb, Point, Point3, RoofPolygon};
use crate::solar::PanelOrientation;
use crate::{Error, Result};

/// Tolerance for containment and overlap tests, meters.
const LAYOUT_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PanelSpec {
    /// Along the tilt axis, meters.
    pub length: f64,
    /// Along the horizontal edge, meters.
    pub width: f64,
    pub rated_power: f64,
}

impl Default for PanelSpec {
    fn default() -> Self {
        PanelSpec {
            length: 1.6,
            width: 1.0,
            rated_power: 300.0,
        }
    }
}

impl PanelSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.length > 0.0 && self.width > 0.0) {
            return Err(Error::Config("panel length and width must be positive".into()));
        }
        if !(self.rated_power > 0.0) {
            return Err(Error::Config("rated power must be positive".into()));
        }
        Ok(())
    }

    pub fn area(&self) -> f64 {
        self.length * self.width
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GridOptions {
    pub azimuths: Vec<f64>,
    pub tilts: Vec<f64>,
    /// Grid offsets in half-panel units along the width and depth axes.
    pub shifts: Vec<[f64; 2]>,
    pub boundary_setback: f64,
    pub obstacle_setback: f64,
    pub access_clearance: f64,
}

impl Default for GridOptions {
    fn default() -> Self {
        GridOptions {
            azimuths: (0..8).map(|i| 45.0 * i as f64).collect(),
            tilts: vec![0.0, 10.0, 20.0, 30.0],
            shifts: vec![[0.0, 0.0], [1.0, 0.0], [0.0, 1.0], [1.0, 1.0]],
            boundary_setback: 0.6,
            obstacle_setback: 0.3,
            access_clearance: 0.6,
        }
    }
}

impl GridOptions {
    pub fn validate(&self) -> Result<()> {
        if self.azimuths.is_empty() || self.tilts.is_empty() || self.shifts.is_empty() {
            return Err(Error::Config("azimuth, tilt and shift lists must be nonempty".into()));
        }
        if self.azimuths.iter().any(|a| !(0.0..360.0).contains(a)) {
            return Err(Error::Config("azimuths must be in [0, 360)".into()));
        }
        if self.tilts.iter().any(|t| !(0.0..90.0).contains(t)) {
            return Err(Error::Config("tilts must be in [0, 90)".into()));
        }
        if !(self.boundary_setback >= 0.0 && self.obstacle_setback >= 0.0 && self.access_clearance >= 0.0) {
            return Err(Error::Config("setbacks and clearance must be non-negative".into()));
        }
        Ok(())
    }

    /// Evenly spaced azimuths starting at north.
    pub fn with_azimuth_count(mut self, n: usize) -> Self {
        self.azimuths = (0..n).map(|i| 360.0 * i as f64 / n as f64).collect();
        self
    }

    /// Orientations in azimuth-major order; index `a * tilts.len() + t`.
    pub fn orientations(&self) -> Vec<PanelOrientation> {
        self.azimuths
            .iter()
            .flat_map(|&a| self.tilts.iter().map(move |&t| PanelOrientation::new(a, t)))
            .collect()
    }

    pub fn num_configs(&self) -> usize {
        self.azimuths.len() * self.tilts.len() * self.shifts.len()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PanelConfig {
    pub azimuth: f64,
    pub tilt: f64,
    /// Index into [`GridOptions::shifts`].
    pub shift: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CandidatePanel {
    pub id: usize,
    pub config: PanelConfig,
    /// Row of the generation table, see [`GridOptions::orientations`].
    pub orientation: usize,
    /// `(row, column)` in the configuration's grid; rows advance along the
    /// facing direction.
    pub grid: (i32, i32),
    /// Footprint center.
    pub anchor: Point,
    /// Counterclockwise footprint rectangle.
    pub footprint: [Point; 4],
    /// Low edge (height 0) first, then the high edge, in footprint order.
    pub corners3d: [Point3; 4],
    pub region_id: Option<usize>,
}

fn facing(azimuth: f64) -> Point {
    let a = azimuth.to_radians();
    Point::new(a.sin(), a.cos())
}

fn width_axis(azimuth: f64) -> Point {
    let a = azimuth.to_radians();
    Point::new(a.cos(), -a.sin())
}

impl CandidatePanel {
    pub fn orientation_angles(&self) -> PanelOrientation {
        PanelOrientation::new(self.config.azimuth, self.config.tilt)
    }

    /// Clearance strip of the given depth in front of the low edge.
    pub fn access_zone(&self, clearance: f64) -> [Point; 4] {
        let f = facing(self.config.azimuth) * clearance;
        let (a, b) = (self.corners3d[0].xy(), self.corners3d[1].xy());
        let zone = [a, b, b + f, a + f];
        if ring_signed_area(&zone) < 0.0 {
            [a + f, b + f, b, a]
        } else {
            zone
        }
    }

    pub fn bbox(&self) -> Aabb {
        Aabb::of(self.footprint.iter().copied())
    }

    /// Upward unit normal of the panel surface.
    pub fn normal(&self) -> Point3 {
        self.orientation_angles().normal()
    }

    /// Height of the top edge above the roof.
    pub fn ridge_height(&self) -> f64 {
        self.corners3d[2].z
    }
}

/// Places one panel with its footprint centered on `anchor`.
pub fn panel_geometry(spec: &PanelSpec, config: PanelConfig, anchor: Point) -> CandidatePanel {
    let t = config.tilt.to_radians();
    let depth = spec.length * t.cos();
    let height = spec.length * t.sin();
    let f = facing(config.azimuth) * (depth / 2.0);
    let w = width_axis(config.azimuth) * (spec.width / 2.0);
    let low = [anchor + f - w, anchor + f + w];
    let high = [anchor - f + w, anchor - f - w];
    let mut corners3d = [
        Point3::new(low[0].x, low[0].y, 0.0),
        Point3::new(low[1].x, low[1].y, 0.0),
        Point3::new(high[0].x, high[0].y, height),
        Point3::new(high[1].x, high[1].y, height),
    ];
    let mut footprint = [low[0], low[1], high[0], high[1]];
    if ring_signed_area(&footprint) < 0.0 {
        corners3d = [corners3d[1], corners3d[0], corners3d[3], corners3d[2]];
        footprint = [footprint[1], footprint[0], footprint[3], footprint[2]];
    }
    CandidatePanel {
        id: 0,
        config,
        orientation: 0,
        grid: (0, 0),
        anchor,
        footprint,
        corners3d,
        region_id: None,
    }
}

/// Lays every (azimuth, tilt, shift) grid over the roof and keeps footprints
/// inside the setback region. Ids follow azimuth, tilt, shift, then row-major
/// grid order.
pub fn generate_candidates(roof: &RoofPolygon, spec: &PanelSpec, opts: &GridOptions) -> Result<Vec<CandidatePanel>> {
    spec.validate()?;
    opts.validate()?;
    if roof.exterior.len() < 3 || roof.area() <= 0.0 {
        return Ok(Vec::new());
    }
    let region = setback_region(roof, opts.boundary_setback, opts.obstacle_setback);
    if region.is_empty() {
        return Ok(Vec::new());
    }
    let mut out = Vec::new();
    for (ai, &az) in opts.azimuths.iter().enumerate() {
        let (u_axis, v_axis) = (width_axis(az), facing(az));
        let (mut umin, mut umax, mut vmin, mut vmax) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
        for p in region.iter().flat_map(|r| r.exterior.iter()) {
            let (u, v) = (p.dot(u_axis), p.dot(v_axis));
            umin = umin.min(u);
            umax = umax.max(u);
            vmin = vmin.min(v);
            vmax = vmax.max(v);
        }
        for (ti, &tilt) in opts.tilts.iter().enumerate() {
            let depth = spec.length * tilt.to_radians().cos();
            for (si, shift) in opts.shifts.iter().enumerate() {
                let u0 = umin + shift[0] * spec.width / 2.0;
                let v0 = vmin + shift[1] * depth / 2.0;
                let cols = ((umax - u0) / spec.width + LAYOUT_TOL).floor().max(0.0) as i32;
                let rows = ((vmax - v0) / depth + LAYOUT_TOL).floor().max(0.0) as i32;
                let config = PanelConfig { azimuth: az, tilt, shift: si };
                for r in 0..rows {
                    for c in 0..cols {
                        let u = u0 + (c as f64 + 0.5) * spec.width;
                        let v = v0 + (r as f64 + 0.5) * depth;
                        let anchor = u_axis * u + v_axis * v;
                        let mut panel = panel_geometry(spec, config, anchor);
                        if !contains_convex(&region, &panel.footprint, LAYOUT_TOL) {
                            continue;
                        }
                        panel.id = out.len();
                        panel.orientation = ai * opts.tilts.len() + ti;
                        panel.grid = (r, c);
                        out.push(panel);
                    }
                }
            }
        }
    }
    Ok(out)
}

/// Undirected graph of mutually exclusive candidates.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ConflictGraph {
    pub num_nodes: usize,
    /// Sorted pairs with `i < j`.
    pub edges: Vec<(u32, u32)>,
    #[serde(skip)]
    adjacency: Vec<Vec<u32>>,
}

impl ConflictGraph {
    pub fn from_edges(num_nodes: usize, edges: impl IntoIterator<Item = (usize, usize)>) -> Self {
        let mut e: Vec<(u32, u32)> = edges
            .into_iter()
            .filter(|(i, j)| i != j)
            .map(|(i, j)| (i.min(j) as u32, i.max(j) as u32))
            .collect();
        e.sort_unstable();
        e.dedup();
        let mut adjacency = vec![Vec::new(); num_nodes];
        for &(i, j) in &e {
            adjacency[i as usize].push(j);
            adjacency[j as usize].push(i);
        }
        for a in &mut adjacency {
            a.sort_unstable();
        }
        ConflictGraph {
            num_nodes,
            edges: e,
            adjacency,
        }
    }

    pub fn neighbors(&self, i: usize) -> &[u32] {
        &self.adjacency[i]
    }

    pub fn has_edge(&self, i: usize, j: usize) -> bool {
        self.adjacency[i].binary_search(&(j as u32)).is_ok()
    }

    pub fn is_independent(&self, x: &[bool]) -> bool {
        self.edges.iter().all(|&(i, j)| !(x[i as usize] && x[j as usize]))
    }

    /// Induced subgraph on `nodes`; node `k` of the result is `nodes[k]`.
    pub fn induced(&self, nodes: &[usize]) -> ConflictGraph {
        let mut local = vec![u32::MAX; self.num_nodes];
        for (k, &n) in nodes.iter().enumerate() {
            local[n] = k as u32;
        }
        let mut edges = Vec::new();
        for (k, &n) in nodes.iter().enumerate() {
            for &m in self.neighbors(n) {
                let l = local[m as usize];
                if l != u32::MAX && (k as u32) < l {
                    edges.push((k, l as usize));
                }
            }
        }
        ConflictGraph::from_edges(nodes.len(), edges)
    }

    /// Rebuilds the adjacency lists after deserialization.
    pub fn rebuild(self) -> Self {
        let edges = self.edges.iter().map(|&(i, j)| (i as usize, j as usize)).collect::<Vec<_>>();
        ConflictGraph::from_edges(self.num_nodes, edges)
    }
}

/// Whether two candidates may not both be installed: their footprints overlap
/// with positive area, or either one's access strip covers part of the other.
pub fn panels_conflict(a: &CandidatePanel, b: &CandidatePanel, clearance: f64) -> bool {
    if rects_overlap(&a.footprint, &b.footprint, LAYOUT_TOL) {
        return true;
    }
    clearance > 0.0
        && (rects_overlap(&a.access_zone(clearance), &b.footprint, LAYOUT_TOL)
            || rects_overlap(&b.access_zone(clearance), &a.footprint, LAYOUT_TOL))
}

/// Conflict graph with candidate pairs culled through a uniform spatial grid.
pub fn build_conflict_graph(candidates: &[CandidatePanel], opts: &GridOptions) -> ConflictGraph {
    let n = candidates.len();
    let clearance = opts.access_clearance;
    let boxes: Vec<Aabb> = candidates
        .iter()
        .map(|c| {
            let mut b = c.bbox();
            for p in c.access_zone(clearance) {
                b.expand(p);
            }
            b
        })
        .collect();
    let pairs = grid_pairs(&boxes);
    let edges = pairs
        .into_iter()
        .filter(|&(i, j)| panels_conflict(&candidates[i], &candidates[j], clearance));
    ConflictGraph::from_edges(n, edges)
}

/// Every pair `(i, j)`, `i < j`, whose boxes overlap, found by bucketing boxes
/// into square cells as large as the largest box. Each pair is reported once,
/// from the cell holding the minimum corner of the two boxes' intersection.
pub fn grid_pairs(boxes: &[Aabb]) -> Vec<(usize, usize)> {
    let mut all = Aabb::empty();
    let mut cell = 0.0f64;
    for b in boxes {
        all.expand(b.min);
        all.expand(b.max);
        cell = cell.max(b.width()).max(b.height());
    }
    if boxes.is_empty() {
        return Vec::new();
    }
    let cell = cell.max(1e-3);
    let nx = ((all.width() / cell).floor() as usize + 1).max(1);
    let ny = ((all.height() / cell).floor() as usize + 1).max(1);
    let index = |p: Point| -> (usize, usize) {
        let cx = (((p.x - all.min.x) / cell).floor().max(0.0) as usize).min(nx - 1);
        let cy = (((p.y - all.min.y) / cell).floor().max(0.0) as usize).min(ny - 1);
        (cx, cy)
    };
    let mut cells: Vec<Vec<usize>> = vec![Vec::new(); nx * ny];
    for (i, b) in boxes.iter().enumerate() {
        let (x0, y0) = index(b.min);
        let (x1, y1) = index(b.max);
        for cy in y0..=y1 {
            for cx in x0..=x1 {
                cells[cy * nx + cx].push(i);
            }
        }
    }
    let mut out = Vec::new();
    for (ci, members) in cells.iter().enumerate() {
        for (a, &i) in members.iter().enumerate() {
            for &j in &members[a + 1..] {
                let (bi, bj) = (&boxes[i], &boxes[j]);
                if !bi.overlaps(bj) {
                    continue;
                }
                let corner = Point::new(bi.min.x.max(bj.min.x), bi.min.y.max(bj.min.y));
                let (cx, cy) = index(corner);
                if cy * nx + cx == ci {
                    out.push((i.min(j), i.max(j)));
                }
            }
        }
    }
    out.sort_unstable();
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn single(az: f64, tilt: f64) -> GridOptions {
        GridOptions {
            azimuths: vec![az],
            tilts: vec![tilt],
            shifts: vec![[0.0, 0.0]],
            ..GridOptions::default()
        }
    }

    fn cfg(az: f64, tilt: f64) -> PanelConfig {
        PanelConfig { azimuth: az, tilt, shift: 0 }
    }

    #[test]
    fn flat_panel_geometry() {
        let p = panel_geometry(&PanelSpec::default(), cfg(180.0, 0.0), Point::new(5.0, 5.0));
        let b = p.bbox();
        assert!((b.width() - 1.0).abs() < 1e-12 && (b.height() - 1.6).abs() < 1e-12);
        assert!(p.corners3d.iter().all(|c| c.z == 0.0));
        assert!(ring_signed_area(&p.footprint) > 0.0);
    }

    #[test]
    fn tilted_south_panel_geometry() {
        let p = panel_geometry(&PanelSpec::default(), cfg(180.0, 30.0), Point::new(0.0, 0.0));
        let b = p.bbox();
        assert!((b.height() - 1.6 * 30f64.to_radians().cos()).abs() < 1e-12);
        assert!((p.ridge_height() - 0.8).abs() < 1e-12);
        // low edge on the south side
        assert!(p.corners3d[0].y < 0.0 && p.corners3d[0].z == 0.0);
        assert!(p.corners3d[2].y > 0.0);
        for (c, f) in p.corners3d.iter().zip(&p.footprint) {
            assert_eq!(c.xy(), *f);
        }
        // corners are coplanar with the panel normal
        let n = p.normal();
        let d0 = n.dot(p.corners3d[0]);
        assert!(p.corners3d.iter().all(|c| (n.dot(*c) - d0).abs() < 1e-12));
    }

    #[test]
    fn east_facing_width_runs_north_south() {
        let p = panel_geometry(&PanelSpec::default(), cfg(90.0, 0.0), Point::new(0.0, 0.0));
        let b = p.bbox();
        assert!((b.width() - 1.6).abs() < 1e-12 && (b.height() - 1.0).abs() < 1e-12);
        let low = p.corners3d[1].xy() - p.corners3d[0].xy();
        assert!(low.x.abs() < 1e-12);
        assert!(p.corners3d[0].x > 0.0);
    }

    #[test]
    fn default_options_give_128_grids() {
        assert_eq!(GridOptions::default().num_configs(), 128);
        assert_eq!(GridOptions::default().orientations().len(), 32);
    }

    #[test]
    fn open_square_grid_count() {
        let roof = RoofPolygon::rectangle(0.0, 0.0, 10.0, 10.0);
        let c = generate_candidates(&roof, &PanelSpec::default(), &single(180.0, 0.0)).unwrap();
        assert_eq!(c.len(), 40);
        assert!(c.iter().enumerate().all(|(i, p)| p.id == i));
        let tiny = RoofPolygon::rectangle(0.0, 0.0, 2.0, 2.5);
        assert!(generate_candidates(&tiny, &PanelSpec::default(), &GridOptions::default()).unwrap().is_empty());
    }

    #[test]
    fn invalid_options_are_config_errors() {
        let roof = RoofPolygon::rectangle(0.0, 0.0, 10.0, 10.0);
        let mut o = single(180.0, 0.0);
        o.tilts.clear();
        assert!(matches!(generate_candidates(&roof, &PanelSpec::default(), &o), Err(Error::Config(_))));
        let mut o = single(180.0, 0.0);
        o.boundary_setback = -1.0;
        assert!(generate_candidates(&roof, &PanelSpec::default(), &o).is_err());
    }

    #[test]
    fn candidates_respect_setbacks_around_holes() {
        let mut roof = RoofPolygon::rectangle(0.0, 0.0, 12.0, 12.0);
        roof.holes.push(RoofPolygon::rectangle(5.0, 5.0, 7.0, 7.0).exterior);
        roof.normalize();
        let opts = GridOptions::default();
        let c = generate_candidates(&roof, &PanelSpec::default(), &opts).unwrap();
        assert!(!c.is_empty());
        let grown = Aabb::of([Point::new(4.7, 4.7), Point::new(7.3, 7.3)]);
        for p in &c {
            let b = p.bbox();
            assert!(b.min.x >= 0.6 - 1e-6 && b.min.y >= 0.6 - 1e-6 && b.max.x <= 11.4 + 1e-6 && b.max.y <= 11.4 + 1e-6);
            let inner = [
                grown.min,
                Point::new(grown.max.x, grown.min.y),
                grown.max,
                Point::new(grown.min.x, grown.max.y),
            ];
            assert!(!rects_overlap(&p.footprint, &inner, 1e-6), "{p:?}");
        }
    }

    #[test]
    fn access_zone_conflicts() {
        let spec = PanelSpec::default();
        let opts = GridOptions::default();
        let a = panel_geometry(&spec, cfg(180.0, 0.0), Point::new(0.0, 0.0));
        let south = |gap: f64| panel_geometry(&spec, cfg(180.0, 0.0), Point::new(0.0, -1.6 - gap));
        assert!(panels_conflict(&a, &south(0.3), opts.access_clearance));
        assert!(!panels_conflict(&a, &south(0.7), opts.access_clearance));
        assert!(panels_conflict(&a, &a.clone(), opts.access_clearance));
        let far = panel_geometry(&spec, cfg(90.0, 20.0), Point::new(5.0, 0.0));
        assert!(!panels_conflict(&a, &far, opts.access_clearance));
        let side = panel_geometry(&spec, cfg(180.0, 0.0), Point::new(1.0, 0.0));
        assert!(!panels_conflict(&a, &side, opts.access_clearance));
        let g = build_conflict_graph(&[a.clone(), south(0.3), side], &opts);
        assert_eq!(g.edges, vec![(0, 1)]);
    }

    #[test]
    fn graph_matches_all_pairs_scan() {
        let roof = RoofPolygon::rectangle(0.0, 0.0, 9.0, 7.0);
        let opts = GridOptions {
            azimuths: vec![90.0, 135.0, 180.0],
            tilts: vec![0.0, 20.0],
            ..GridOptions::default()
        };
        let c = generate_candidates(&roof, &PanelSpec::default(), &opts).unwrap();
        let g = build_conflict_graph(&c, &opts);
        let mut brute = Vec::new();
        for i in 0..c.len() {
            for j in i + 1..c.len() {
                if panels_conflict(&c[i], &c[j], opts.access_clearance) {
                    brute.push((i as u32, j as u32));
                }
            }
        }
        assert_eq!(g.edges, brute);
        assert!(g.edges.iter().all(|&(i, j)| i < j));
        for &(i, j) in &g.edges {
            assert!(g.has_edge(i as usize, j as usize) && g.has_edge(j as usize, i as usize));
        }
        assert_eq!(build_conflict_graph(&c, &opts), g);
    }

    #[test]
    fn rotation_by_quarter_turn_relabels_azimuths() {
        let mut roof = RoofPolygon::new(
            vec![
                Point::new(0.0, 0.0),
                Point::new(11.0, 0.0),
                Point::new(11.0, 6.0),
                Point::new(6.0, 9.0),
                Point::new(0.0, 9.0),
            ],
            vec![RoofPolygon::rectangle(3.0, 3.0, 4.0, 5.0).exterior],
        );
        roof.normalize();
        let c = roof.centroid();
        let turned = roof.transformed(|p| c + (p - c).rotated(core::f64::consts::FRAC_PI_2));
        let opts = GridOptions::default();
        let spec = PanelSpec::default();
        let a = generate_candidates(&roof, &spec, &opts).unwrap();
        let b = generate_candidates(&turned, &spec, &opts).unwrap();
        assert_eq!(a.len(), b.len());
        // a counterclockwise quarter turn maps compass azimuth z to z - 90
        for az in &opts.azimuths {
            let before = a.iter().filter(|p| p.config.azimuth == *az).count();
            let rel = (az + 270.0) % 360.0;
            let after = b.iter().filter(|p| p.config.azimuth == rel).count();
            assert_eq!(before, after, "azimuth {az}");
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]
        #[test]
        fn random_roofs_keep_invariants(w in 3.0f64..12.0, h in 3.0f64..12.0, hx in 0.2f64..0.8, hy in 0.2f64..0.8) {
            let mut roof = RoofPolygon::rectangle(0.0, 0.0, w, h);
            let (cx, cy) = (hx * w, hy * h);
            roof.holes.push(RoofPolygon::rectangle(cx - 0.4, cy - 0.4, cx + 0.4, cy + 0.4).exterior);
            roof.normalize();
            let opts = GridOptions::default();
            let c = generate_candidates(&roof, &PanelSpec::default(), &opts).unwrap();
            let region = setback_region(&roof, opts.boundary_setback, opts.obstacle_setback);
            for p in &c {
                prop_assert!(contains_convex(&region, &p.footprint, 1e-5));
            }
            let g = build_conflict_graph(&c, &opts);
            prop_assert!(g.edges.iter().all(|&(i, j)| i < j));
            let again = generate_candidates(&roof, &PanelSpec::default(), &opts).unwrap();
            prop_assert_eq!(again, c);
        }
    }
}
