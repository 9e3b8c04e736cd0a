//! Panel-on-panel shading and the sparse time-sampled shadow matrix.
//!
//! A caster shades a receiver where the ray from a receiver point toward the
//! sun passes through the caster. Equivalently, the part of the caster lying on
//! the sun side of the receiver plane is projected along the anti-sun direction
//! onto that plane and clipped against the receiver rectangle.
//!
//! Fractions are stored as fixed-point integers (`2^31` = fully shaded) so that
//! incremental sums in the optimizer add and subtract exactly.

use alloc::vec;
use alloc::vec::Vec;
#[allow(unused_imports)] // inherent float methods are unavailable without std
use num_traits::Float;
use serde::{Deserialize, Serialize};

use crate::geom::{clip_convex, ring_signed_area, Aabb, Point, Point3};
use crate::layout::{grid_pairs, CandidatePanel, ConflictGraph};
use crate::solar::{SunVector, TimeSampleSet};

/// Fixed-point scale of stored fractions.
pub const FRAC_ONE: u32 = 1 << 31;

pub fn quantize(f: f64) -> u32 {
    (f.clamp(0.0, 1.0) * FRAC_ONE as f64).round() as u32
}

pub fn dequantize(q: u32) -> f64 {
    q as f64 / FRAC_ONE as f64
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ShadowOptions {
    /// Pairs whose footprint centers are farther apart are never tested, meters.
    pub cull_distance: f64,
    /// Samples with the sun lower than this, degrees, carry no shading.
    pub min_elevation: f64,
}

impl Default for ShadowOptions {
    fn default() -> Self {
        ShadowOptions {
            cull_distance: 30.0,
            min_elevation: 3.0,
        }
    }
}

/// A caster lying within this distance of the receiver plane casts nothing.
const PLANE_TOL: f64 = 1e-9;

/// Caster quad swept along the anti-sun direction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShadowPrism {
    pub base: [Point3; 4],
    /// Unit vector pointing away from the sun.
    pub direction: Point3,
}

impl ShadowPrism {
    pub fn new(caster: &CandidatePanel, sun: &SunVector) -> Self {
        let s = sun.unit_vector;
        ShadowPrism {
            base: caster.corners3d,
            direction: Point3::new(-s.x, -s.y, -s.z),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Plane {
    pub point: Point3,
    pub normal: Point3,
}

/// Shadow of the prism on the plane. Only caster points between the plane and
/// the sun cast; the rest of the quad is clipped away first. Returns an empty
/// polygon when the direction is parallel to the plane.
pub fn shadow_on_plane(prism: &ShadowPrism, plane: &Plane) -> Vec<Point3> {
    let d = prism.direction;
    let denom = d.dot(plane.normal);
    if denom.abs() < 1e-12 {
        return Vec::new();
    }
    // distance along -d (toward the sun) from the plane to the point
    let t = |q: Point3| -((q - plane.point).dot(plane.normal)) / denom;
    let mut kept: Vec<(Point3, f64)> = Vec::with_capacity(6);
    for i in 0..4 {
        let (a, b) = (prism.base[i], prism.base[(i + 1) % 4]);
        let (ta, tb) = (t(a), t(b));
        if ta >= 0.0 {
            kept.push((a, ta));
        }
        if (ta >= 0.0) != (tb >= 0.0) {
            let s = ta / (ta - tb);
            kept.push((a + (b - a) * s, 0.0));
        }
    }
    kept.into_iter().map(|(q, tq)| q + d * tq).collect()
}

/// Fraction of the receiver's area shaded by the caster.
pub fn shaded_fraction(caster: &CandidatePanel, receiver: &CandidatePanel, sun: &SunVector) -> f64 {
    if !sun.is_up() || !may_shade(caster, receiver, sun) {
        return 0.0;
    }
    let r = &receiver.corners3d;
    let plane = Plane {
        point: r[0],
        normal: receiver.normal(),
    };
    if caster.corners3d.iter().all(|q| (*q - plane.point).dot(plane.normal).abs() <= PLANE_TOL) {
        return 0.0;
    }
    let shadow = shadow_on_plane(&ShadowPrism::new(caster, sun), &plane);
    if shadow.len() < 3 {
        return 0.0;
    }
    let e1 = (r[1] - r[0]).normalized();
    let e2 = (r[3] - r[0]).normalized();
    let to2d = |q: Point3| {
        let v = q - r[0];
        Point::new(v.dot(e1), v.dot(e2))
    };
    let rect: Vec<Point> = r.iter().map(|&q| to2d(q)).collect();
    let poly: Vec<Point> = shadow.into_iter().map(to2d).collect();
    let area = ring_signed_area(&rect).abs();
    if area <= 0.0 {
        return 0.0;
    }
    let clipped = clip_convex(&poly, &rect);
    (ring_signed_area(&clipped).abs() / area).clamp(0.0, 1.0)
}

/// Conservative test: the receiver must overlap the plan-view sweep of the
/// caster from its own footprint down to its ground shadow.
fn may_shade(caster: &CandidatePanel, receiver: &CandidatePanel, sun: &SunVector) -> bool {
    if caster.ridge_height() <= 0.0 && receiver.ridge_height() <= 0.0 {
        return false;
    }
    let s = sun.unit_vector;
    let mut b = Aabb::empty();
    for q in caster.corners3d {
        b.expand(q.xy());
        let h = q.z / s.z;
        b.expand(Point::new(q.x - s.x * h, q.y - s.y * h));
    }
    b.overlaps(&receiver.bbox())
}

/// Unordered candidate pairs whose footprint centers lie within
/// `cull_distance`, skipping pairs joined in `skip`.
pub fn shadow_pairs(candidates: &[CandidatePanel], cull_distance: f64, skip: Option<&ConflictGraph>) -> Vec<(u32, u32)> {
    let n = candidates.len();
    let mut pairs = Vec::new();
    if n < 2 {
        return pairs;
    }
    if cull_distance.is_finite() {
        let half = cull_distance / 2.0;
        let boxes: Vec<Aabb> = candidates
            .iter()
            .map(|c| Aabb::of([c.anchor - Point::new(half, half), c.anchor + Point::new(half, half)]))
            .collect();
        for (i, j) in grid_pairs(&boxes) {
            if candidates[i].anchor.dist(candidates[j].anchor) <= cull_distance {
                pairs.push((i as u32, j as u32));
            }
        }
    } else {
        for i in 0..n {
            for j in i + 1..n {
                pairs.push((i as u32, j as u32));
            }
        }
    }
    if let Some(g) = skip {
        pairs.retain(|&(i, j)| !g.has_edge(i as usize, j as usize));
    }
    pairs
}

/// Nonzero `(receiver, caster, fraction)` triples of one sample, both
/// directions of every pair.
pub fn sample_entries(candidates: &[CandidatePanel], pairs: &[(u32, u32)], sun: &SunVector) -> Vec<(u32, u32, u32)> {
    let mut out = Vec::new();
    for &(i, j) in pairs {
        let (a, b) = (&candidates[i as usize], &candidates[j as usize]);
        for (recv, cast, r, c) in [(i, j, a, b), (j, i, b, a)] {
            let q = quantize(shaded_fraction(c, r, sun));
            if q > 0 {
                out.push((recv, cast, q));
            }
        }
    }
    out
}

/// Sparse `S[i][j][k]` with a dense fixed-shading diagonal.
///
/// Off-diagonal entries are grouped per ordered pair (receiver `i`, caster
/// `j`) and indexed both by receiver and by caster.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ShadowMatrix {
    num_candidates: usize,
    num_samples: usize,
    diagonal: Vec<u32>,
    /// `(receiver, caster, start)` sorted; entries of pair `p` are
    /// `start[p]..start[p + 1]`.
    pairs: Vec<(u32, u32, u32)>,
    recv_ptr: Vec<u32>,
    cast_ptr: Vec<u32>,
    /// Pair indices sorted by caster.
    by_caster: Vec<u32>,
    samples: Vec<u16>,
    fracs: Vec<u32>,
}

/// Entries of one (receiver, caster) pair.
#[derive(Debug, Clone, Copy)]
pub struct PairEntries<'a> {
    pub receiver: usize,
    pub caster: usize,
    pub samples: &'a [u16],
    /// Quantized fractions, see [`FRAC_ONE`].
    pub fracs: &'a [u32],
}

impl ShadowMatrix {
    pub fn empty(num_candidates: usize, num_samples: usize) -> Self {
        Self::from_quantized(num_candidates, num_samples, Vec::new())
    }

    /// Builds from `(receiver, caster, k, fraction)`; zero fractions, self
    /// pairs and duplicates (the first wins) are dropped.
    pub fn from_entries(num_candidates: usize, num_samples: usize, entries: impl IntoIterator<Item = (usize, usize, usize, f64)>) -> Self {
        let q = entries.into_iter().map(|(i, j, k, f)| (i as u32, j as u32, k as u16, quantize(f))).collect();
        Self::from_quantized(num_candidates, num_samples, q)
    }

    pub fn from_quantized(num_candidates: usize, num_samples: usize, mut entries: Vec<(u32, u32, u16, u32)>) -> Self {
        entries.retain(|e| e.3 > 0 && e.0 != e.1 && (e.0 as usize) < num_candidates && (e.1 as usize) < num_candidates && (e.2 as usize) < num_samples);
        entries.sort_by_key(|e| (e.0, e.1, e.2));
        entries.dedup_by_key(|e| (e.0, e.1, e.2));
        let mut pairs: Vec<(u32, u32, u32)> = Vec::new();
        let mut samples = Vec::with_capacity(entries.len());
        let mut fracs = Vec::with_capacity(entries.len());
        for (i, j, k, f) in entries {
            if pairs.last().map_or(true, |p| (p.0, p.1) != (i, j)) {
                pairs.push((i, j, samples.len() as u32));
            }
            samples.push(k);
            fracs.push(f.min(FRAC_ONE));
        }
        let mut recv_ptr = vec![0u32; num_candidates + 1];
        let mut cast_ptr = vec![0u32; num_candidates + 1];
        for p in &pairs {
            recv_ptr[p.0 as usize + 1] += 1;
            cast_ptr[p.1 as usize + 1] += 1;
        }
        for i in 0..num_candidates {
            recv_ptr[i + 1] += recv_ptr[i];
            cast_ptr[i + 1] += cast_ptr[i];
        }
        let mut by_caster: Vec<u32> = (0..pairs.len() as u32).collect();
        by_caster.sort_by_key(|&p| (pairs[p as usize].1, pairs[p as usize].0));
        ShadowMatrix {
            num_candidates,
            num_samples,
            diagonal: vec![0; num_candidates * num_samples],
            pairs,
            recv_ptr,
            cast_ptr,
            by_caster,
            samples,
            fracs,
        }
    }

    pub fn num_candidates(&self) -> usize {
        self.num_candidates
    }

    pub fn num_samples(&self) -> usize {
        self.num_samples
    }

    /// Number of stored off-diagonal entries.
    pub fn num_entries(&self) -> usize {
        self.samples.len()
    }

    pub fn num_pairs(&self) -> usize {
        self.pairs.len()
    }

    fn pair(&self, p: usize) -> PairEntries<'_> {
        let (i, j, start) = self.pairs[p];
        let end = self.pairs.get(p + 1).map_or(self.samples.len(), |q| q.2 as usize);
        PairEntries {
            receiver: i as usize,
            caster: j as usize,
            samples: &self.samples[start as usize..end],
            fracs: &self.fracs[start as usize..end],
        }
    }

    /// Pairs shading `receiver`, ordered by caster.
    pub fn receiver_pairs(&self, receiver: usize) -> impl Iterator<Item = PairEntries<'_>> + '_ {
        (self.recv_ptr[receiver] as usize..self.recv_ptr[receiver + 1] as usize).map(move |p| self.pair(p))
    }

    /// Pairs cast by `caster`, ordered by receiver.
    pub fn caster_pairs(&self, caster: usize) -> impl Iterator<Item = PairEntries<'_>> + '_ {
        (self.cast_ptr[caster] as usize..self.cast_ptr[caster + 1] as usize).map(move |p| self.pair(self.by_caster[p] as usize))
    }

    pub fn get(&self, i: usize, j: usize, k: usize) -> f64 {
        if i == j {
            return self.diagonal(i, k);
        }
        self.receiver_pairs(i)
            .find(|p| p.caster == j)
            .and_then(|p| p.samples.binary_search(&(k as u16)).ok().map(|n| dequantize(p.fracs[n])))
            .unwrap_or(0.0)
    }

    pub fn diagonal(&self, i: usize, k: usize) -> f64 {
        dequantize(self.diagonal[i * self.num_samples + k])
    }

    pub fn diagonal_row_quantized(&self, i: usize) -> &[u32] {
        &self.diagonal[i * self.num_samples..(i + 1) * self.num_samples]
    }

    /// Replaces receiver `i`'s fixed shading; values are capped at 1.
    pub fn set_diagonal(&mut self, i: usize, row: &[f64]) {
        let k = self.num_samples;
        for (d, &v) in self.diagonal[i * k..(i + 1) * k].iter_mut().zip(row) {
            *d = quantize(v);
        }
    }

    /// Quantized form of [`ShadowMatrix::set_diagonal`]; sums above one are capped.
    pub fn set_diagonal_quantized(&mut self, i: usize, row: &[u64]) {
        let k = self.num_samples;
        for (d, &v) in self.diagonal[i * k..(i + 1) * k].iter_mut().zip(row) {
            *d = v.min(FRAC_ONE as u64) as u32;
        }
    }

    pub fn clear_diagonal(&mut self) {
        self.diagonal.iter_mut().for_each(|d| *d = 0);
    }

    /// Off-diagonal entries as `(receiver, caster, k, fraction)`, sorted.
    pub fn entries(&self) -> impl Iterator<Item = (usize, usize, usize, f64)> + '_ {
        (0..self.pairs.len()).flat_map(move |p| {
            let e = self.pair(p);
            e.samples.iter().zip(e.fracs).map(move |(&k, &f)| (e.receiver, e.caster, k as usize, dequantize(f)))
        })
    }

    pub fn quantized_entries(&self) -> impl Iterator<Item = (u32, u32, u16, u32)> + '_ {
        (0..self.pairs.len()).flat_map(move |p| {
            let e = self.pair(p);
            e.samples.iter().zip(e.fracs).map(move |(&k, &f)| (e.receiver as u32, e.caster as u32, k, f))
        })
    }

    /// Restriction to `ids`; node `n` of the result is `ids[n]`. The diagonal
    /// is carried over.
    pub fn submatrix(&self, ids: &[usize]) -> ShadowMatrix {
        let mut local = vec![u32::MAX; self.num_candidates];
        for (n, &i) in ids.iter().enumerate() {
            local[i] = n as u32;
        }
        let mut entries = Vec::new();
        for &i in ids {
            for p in self.receiver_pairs(i) {
                let j = local[p.caster];
                if j == u32::MAX {
                    continue;
                }
                for (&k, &f) in p.samples.iter().zip(p.fracs) {
                    entries.push((local[i], j, k, f));
                }
            }
        }
        let mut m = ShadowMatrix::from_quantized(ids.len(), self.num_samples, entries);
        for (n, &i) in ids.iter().enumerate() {
            let k = self.num_samples;
            m.diagonal[n * k..(n + 1) * k].copy_from_slice(self.diagonal_row_quantized(i));
        }
        m
    }
}

/// Full pairwise matrix over every sample with the sun at least
/// `min_elevation` high.
pub fn build_shadow_matrix(candidates: &[CandidatePanel], samples: &TimeSampleSet, cull_distance: f64, min_elevation: f64) -> ShadowMatrix {
    let pairs = shadow_pairs(candidates, cull_distance, None);
    build_for_pairs(candidates, samples, &pairs, min_elevation)
}

/// Matrix restricted to the given unordered pairs.
pub fn build_for_pairs(candidates: &[CandidatePanel], samples: &TimeSampleSet, pairs: &[(u32, u32)], min_elevation: f64) -> ShadowMatrix {
    let mut entries = Vec::new();
    for s in &samples.samples {
        if s.sun.elevation < min_elevation || !s.sun.is_up() {
            continue;
        }
        for (i, j, f) in sample_entries(candidates, pairs, &s.sun) {
            entries.push((i, j, s.k as u16, f));
        }
    }
    ShadowMatrix::from_quantized(candidates.len(), samples.len(), entries)
}

/// Fixed shading on each target from the already placed panels, capped at 1.
pub fn fixed_shading_row(target: &CandidatePanel, placed: &[&CandidatePanel], samples: &TimeSampleSet, opts: &ShadowOptions) -> Vec<f64> {
    let near: Vec<&&CandidatePanel> = placed
        .iter()
        .filter(|p| p.id != target.id || p.anchor != target.anchor)
        .filter(|p| p.anchor.dist(target.anchor) <= opts.cull_distance)
        .collect();
    samples
        .samples
        .iter()
        .map(|s| {
            if s.sun.elevation < opts.min_elevation || !s.sun.is_up() {
                return 0.0;
            }
            near.iter().map(|c| shaded_fraction(c, target, &s.sun)).sum::<f64>().min(1.0)
        })
        .collect()
}

/// Overwrites the diagonal of each `targets[n]` (a matrix index whose panel is
/// `candidates[targets[n]]`) with shading from `placed`.
pub fn apply_fixed_shading(
    matrix: &mut ShadowMatrix,
    candidates: &[CandidatePanel],
    placed: &[&CandidatePanel],
    targets: &[usize],
    samples: &TimeSampleSet,
    opts: &ShadowOptions,
) {
    for &t in targets {
        let row = fixed_shading_row(&candidates[t], placed, samples, opts);
        matrix.set_diagonal(t, &row);
    }
}

/// Construction of shadow matrices and fixed-shading rows, so callers can
/// swap in a parallel implementation.
pub trait ShadowBuilder {
    fn matrix(&self, candidates: &[CandidatePanel], samples: &TimeSampleSet, pairs: &[(u32, u32)], min_elevation: f64) -> ShadowMatrix;

    /// One [`fixed_shading_row`] per target.
    fn fixed_rows(&self, targets: &[CandidatePanel], placed: &[&CandidatePanel], samples: &TimeSampleSet, opts: &ShadowOptions) -> Vec<Vec<f64>>;
}

/// Single-threaded [`ShadowBuilder`].
#[derive(Debug, Clone, Copy, Default)]
pub struct SerialBuilder;

impl ShadowBuilder for SerialBuilder {
    fn matrix(&self, candidates: &[CandidatePanel], samples: &TimeSampleSet, pairs: &[(u32, u32)], min_elevation: f64) -> ShadowMatrix {
        build_for_pairs(candidates, samples, pairs, min_elevation)
    }

    fn fixed_rows(&self, targets: &[CandidatePanel], placed: &[&CandidatePanel], samples: &TimeSampleSet, opts: &ShadowOptions) -> Vec<Vec<f64>> {
        targets.iter().map(|t| fixed_shading_row(t, placed, samples, opts)).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::layout::{generate_candidates, panel_geometry, GridOptions, PanelConfig, PanelSpec};
    use crate::solar::{build_time_samples, synthetic_clear_sky_year, Site, TimeSample};
    use crate::geom::RoofPolygon;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn panel(az: f64, tilt: f64, x: f64, y: f64) -> CandidatePanel {
        panel_geometry(&PanelSpec::default(), PanelConfig { azimuth: az, tilt, shift: 0 }, Point::new(x, y))
    }

    /// Fraction of receiver points whose ray toward the sun hits the caster quad.
    fn monte_carlo(caster: &CandidatePanel, receiver: &CandidatePanel, sun: &SunVector, rays: usize, seed: u64) -> f64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let r = receiver.corners3d;
        let c = caster.corners3d;
        let n = (c[1] - c[0]).cross(c[3] - c[0]);
        let s = sun.unit_vector;
        let mut hits = 0usize;
        for _ in 0..rays {
            let (a, b): (f64, f64) = (rng.random(), rng.random());
            let p = r[0] + (r[1] - r[0]) * a + (r[3] - r[0]) * b;
            let denom = s.dot(n);
            if denom.abs() < 1e-15 {
                continue;
            }
            let t = (c[0] - p).dot(n) / denom;
            if t <= 0.0 {
                continue;
            }
            let q = p + s * t;
            let (u, v) = (c[1] - c[0], c[3] - c[0]);
            let (qu, qv) = ((q - c[0]).dot(u) / u.dot(u), (q - c[0]).dot(v) / v.dot(v));
            if (0.0..=1.0).contains(&qu) && (0.0..=1.0).contains(&qv) {
                hits += 1;
            }
        }
        hits as f64 / rays as f64
    }

    #[test]
    fn flat_caster_projects_to_its_footprint() {
        let c = panel(180.0, 0.0, 2.0, 3.0);
        let sun = SunVector::from_angles(200.0, 35.0);
        let ground = Plane {
            point: Point3::new(0.0, 0.0, 0.0),
            normal: Point3::new(0.0, 0.0, 1.0),
        };
        let shadow = shadow_on_plane(&ShadowPrism::new(&c, &sun), &ground);
        assert_eq!(shadow.len(), 4);
        for (s, f) in shadow.iter().zip(&c.footprint) {
            assert!(s.xy().dist(*f) < 1e-12);
        }
    }

    #[test]
    fn vertical_square_at_45_degrees() {
        let wall = ShadowPrism {
            base: [
                Point3::new(0.0, 0.0, 0.0),
                Point3::new(1.0, 0.0, 0.0),
                Point3::new(1.0, 0.0, 1.0),
                Point3::new(0.0, 0.0, 1.0),
            ],
            direction: SunVector::from_angles(0.0, 45.0).unit_vector * -1.0,
        };
        let ground = Plane {
            point: Point3::new(0.0, 0.0, 0.0),
            normal: Point3::new(0.0, 0.0, 1.0),
        };
        let shadow: Vec<Point> = shadow_on_plane(&wall, &ground).iter().map(|p| p.xy()).collect();
        let expect = [Point::new(0.0, 0.0), Point::new(1.0, 0.0), Point::new(1.0, -1.0), Point::new(0.0, -1.0)];
        for (s, e) in shadow.iter().zip(&expect) {
            assert!(s.dist(*e) < 1e-12, "{shadow:?}");
        }
    }

    proptest! {
        #[test]
        fn projection_matches_per_corner_ray_cast(tilt in 5.0f64..60.0, az in 0.0f64..360.0,
                                                  sun_az in 0.0f64..360.0, el in 5.0f64..85.0,
                                                  nx in -0.5f64..0.5, ny in -0.5f64..0.5, h in -2.0f64..0.0) {
            let caster = panel(az, tilt, 0.0, 0.0);
            let sun = SunVector::from_angles(sun_az, el);
            let normal = Point3::new(nx, ny, 1.0).normalized();
            let plane = Plane { point: Point3::new(0.0, 0.0, h), normal };
            let shadow = shadow_on_plane(&ShadowPrism::new(&caster, &sun), &plane);
            // the caster sits entirely on the sun side of this plane, so every corner projects
            prop_assume!(sun.unit_vector.dot(normal) > 0.0);
            prop_assume!(caster.corners3d.iter().all(|q| (*q - plane.point).dot(normal) > 0.0));
            prop_assert_eq!(shadow.len(), 4);
            let d = sun.unit_vector * -1.0;
            for (q, s) in caster.corners3d.iter().zip(&shadow) {
                let t = (plane.point - *q).dot(normal) / d.dot(normal);
                let hit = *q + d * t;
                prop_assert!((hit - *s).norm() < 1e-9);
            }
        }
    }

    #[test]
    fn shaded_fraction_examples() {
        let night = SunVector::from_angles(180.0, -5.0);
        let (a, b) = (panel(180.0, 30.0, 0.0, 1.0), panel(180.0, 30.0, 0.0, -1.0));
        assert_eq!(shaded_fraction(&a, &b, &night), 0.0);

        let sun = SunVector::from_angles(180.0, 20.0);
        let (f1, f2) = (panel(180.0, 0.0, 0.0, 0.0), panel(180.0, 0.0, 0.0, -1.6));
        assert_eq!(shaded_fraction(&f1, &f2, &sun), 0.0);
        assert_eq!(shaded_fraction(&f2, &f1, &sun), 0.0);

        // caster 0.6 m north of the receiver with the sun due south: the caster
        // is behind the receiver and cannot shade it, while the reverse holds
        let depth = 1.6 * 30f64.to_radians().cos();
        let recv = panel(180.0, 30.0, 0.0, 0.0);
        let cast = panel(180.0, 30.0, 0.0, depth + 0.6);
        let exact = shaded_fraction(&cast, &recv, &sun);
        let mc = monte_carlo(&cast, &recv, &sun, 100_000, 7);
        assert_eq!(exact, 0.0);
        assert!((exact - mc).abs() <= 0.02, "{exact} vs {mc}");
        let reverse = shaded_fraction(&recv, &cast, &sun);
        let mc = monte_carlo(&recv, &cast, &sun, 100_000, 8);
        assert!(reverse > 0.2 && (reverse - mc).abs() <= 0.02, "{reverse} vs {mc}");
    }

    fn random_fixture(rng: &mut ChaCha8Rng) -> (CandidatePanel, CandidatePanel, SunVector) {
        let az = |rng: &mut ChaCha8Rng| 45.0 * rng.random_range(0..8) as f64;
        let tilt = |rng: &mut ChaCha8Rng| rng.random_range(0.0..40.0);
        let r = panel(az(rng), tilt(rng), 0.0, 0.0);
        let dist = rng.random_range(1.0..3.5);
        let dir = rng.random_range(0.0..core::f64::consts::TAU);
        let c = panel(az(rng), tilt(rng), dist * dir.cos(), dist * dir.sin());
        let sun = SunVector::from_angles(rng.random_range(0.0..360.0), rng.random_range(5.0..60.0));
        (c, r, sun)
    }

    #[test]
    fn matches_monte_carlo_on_random_fixtures() {
        let mut rng = ChaCha8Rng::seed_from_u64(2024);
        let mut shaded = 0;
        let mut tried = 0;
        while shaded < 12 && tried < 2000 {
            tried += 1;
            let (c, r, sun) = random_fixture(&mut rng);
            if crate::geom::rects_overlap(&c.footprint, &r.footprint, 1e-9) {
                continue;
            }
            let exact = shaded_fraction(&c, &r, &sun);
            let mc = monte_carlo(&c, &r, &sun, 20_000, tried);
            assert!((exact - mc).abs() <= 0.02, "fixture {tried}: {exact} vs {mc}");
            if exact > 0.0 {
                shaded += 1;
            }
        }
        assert!(shaded >= 12);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(200))]
        #[test]
        fn no_back_shading(seed in 0u64..10_000) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let (c, r, sun) = random_fixture(&mut rng);
            let s = sun.unit_vector;
            // every receiver point is at least as close to the sun as every caster point
            let recv_min = r.corners3d.iter().map(|q| q.dot(s)).fold(f64::MAX, f64::min);
            let cast_max = c.corners3d.iter().map(|q| q.dot(s)).fold(f64::MIN, f64::max);
            if recv_min >= cast_max {
                prop_assert_eq!(shaded_fraction(&c, &r, &sun), 0.0);
            }
            let f = shaded_fraction(&c, &r, &sun);
            prop_assert!((0.0..=1.0).contains(&f));
        }
    }

    fn fixture_samples() -> TimeSampleSet {
        let site = Site::at(40.0, 10.0);
        build_time_samples(&site, &synthetic_clear_sky_year(&site, 2023).unwrap()).unwrap()
    }

    fn roof_candidates() -> Vec<CandidatePanel> {
        let opts = GridOptions {
            azimuths: vec![135.0, 180.0],
            tilts: vec![0.0, 30.0],
            shifts: vec![[0.0, 0.0], [1.0, 1.0]],
            ..GridOptions::default()
        };
        generate_candidates(&RoofPolygon::rectangle(0.0, 0.0, 6.0, 6.0), &PanelSpec::default(), &opts).unwrap()
    }

    #[test]
    fn matrix_trivial_cases() {
        let samples = fixture_samples();
        let one = [panel(180.0, 30.0, 0.0, 0.0)];
        assert_eq!(build_shadow_matrix(&one, &samples, 30.0, 3.0).num_entries(), 0);
        let flat: Vec<CandidatePanel> = roof_candidates().into_iter().filter(|c| c.config.tilt == 0.0).collect();
        assert!(!flat.is_empty());
        assert_eq!(build_shadow_matrix(&flat, &samples, 30.0, 3.0).num_entries(), 0);
    }

    #[test]
    fn stored_entries_equal_direct_calls() {
        let samples = fixture_samples();
        let c = roof_candidates();
        let m = build_shadow_matrix(&c, &samples, f64::INFINITY, 0.0);
        assert!(m.num_entries() > 0);
        for (i, j, k, f) in m.entries() {
            let direct = shaded_fraction(&c[j], &c[i], &samples.samples[k].sun);
            assert_eq!(f, dequantize(quantize(direct)));
            assert!(f > 0.0 && f <= 1.0);
        }
        // complete: every nonzero direct value is stored
        let mut count = 0;
        for s in &samples.samples {
            for i in 0..c.len() {
                for j in 0..c.len() {
                    if i != j && quantize(shaded_fraction(&c[j], &c[i], &s.sun)) > 0 {
                        count += 1;
                        assert_eq!(m.get(i, j, s.k), dequantize(quantize(shaded_fraction(&c[j], &c[i], &s.sun))));
                    }
                }
            }
        }
        assert_eq!(count, m.num_entries());
        // indexes agree
        let by_caster: usize = (0..c.len()).flat_map(|j| m.caster_pairs(j)).map(|p| p.samples.len()).sum();
        assert_eq!(by_caster, m.num_entries());
    }

    #[test]
    fn matrix_is_independent_of_order_and_monotone_in_cull() {
        let samples = fixture_samples();
        let c = roof_candidates();
        let m = build_shadow_matrix(&c, &samples, 30.0, 3.0);
        let mut rev: Vec<CandidatePanel> = c.iter().rev().cloned().collect();
        for (n, p) in rev.iter_mut().enumerate() {
            p.id = n;
        }
        let mr = build_shadow_matrix(&rev, &samples, 30.0, 3.0);
        let n = c.len();
        let mut a: Vec<_> = m.quantized_entries().collect();
        let mut b: Vec<_> = mr
            .quantized_entries()
            .map(|(i, j, k, f)| ((n - 1 - i as usize) as u32, (n - 1 - j as usize) as u32, k, f))
            .collect();
        a.sort_unstable();
        b.sort_unstable();
        assert_eq!(a, b);

        let small = build_shadow_matrix(&c, &samples, 2.0, 3.0);
        let big = build_shadow_matrix(&c, &samples, 4.0, 3.0);
        assert!(small.num_entries() <= big.num_entries());
        for (i, j, k, f) in small.entries() {
            assert_eq!(big.get(i, j, k), f);
        }
    }

    #[test]
    fn submatrix_keeps_entries_and_diagonal() {
        let samples = fixture_samples();
        let c = roof_candidates();
        let mut m = build_shadow_matrix(&c, &samples, 30.0, 3.0);
        let row: Vec<f64> = (0..samples.len()).map(|k| k as f64 / 200.0).collect();
        m.set_diagonal(3, &row);
        let ids: Vec<usize> = (0..c.len()).step_by(2).collect();
        let sub = m.submatrix(&ids);
        for (a, &i) in ids.iter().enumerate() {
            for (b, &j) in ids.iter().enumerate() {
                for k in (0..samples.len()).step_by(7) {
                    assert_eq!(sub.get(a, b, k), m.get(i, j, k));
                }
            }
        }
    }

    #[test]
    fn fixed_shading_examples() {
        let samples = fixture_samples();
        let opts = ShadowOptions::default();
        let c = roof_candidates();
        let mut m = ShadowMatrix::empty(c.len(), samples.len());
        apply_fixed_shading(&mut m, &c, &[], &[0, 1], &samples, &opts);
        assert!((0..samples.len()).all(|k| m.diagonal(0, k) == 0.0));
        let flat = panel(180.0, 0.0, 20.0, 20.0);
        apply_fixed_shading(&mut m, &c, &[&flat], &[0], &samples, &opts);
        assert!((0..samples.len()).all(|k| m.diagonal(0, k) == 0.0));

        // a tall wall-like caster right behind a flat receiver covers it completely
        let recv = panel(180.0, 0.0, 0.0, 0.0);
        let mut big = panel(180.0, 80.0, 0.0, 0.0);
        let lift = |p: Point3, dz: f64, dy: f64| Point3::new(p.x * 20.0, p.y + dy, p.z + dz);
        big.corners3d = [
            lift(big.corners3d[0], 0.0, 2.0),
            lift(big.corners3d[1], 0.0, 2.0),
            lift(big.corners3d[2], 30.0, 2.0),
            lift(big.corners3d[3], 30.0, 2.0),
        ];
        big.anchor = Point::new(0.0, 2.0);
        big.footprint = [big.corners3d[0].xy(), big.corners3d[1].xy(), big.corners3d[2].xy(), big.corners3d[3].xy()];
        big.id = 99;
        let noon = TimeSample {
            k: 0,
            timestamp: samples.samples[0].timestamp,
            sun: SunVector::from_angles(0.0, 30.0),
            weather: samples.samples[0].weather,
        };
        let one = TimeSampleSet {
            samples: vec![noon],
            annual_scale: samples.annual_scale,
        };
        let single = shaded_fraction(&big, &recv, &noon.sun);
        assert_eq!(single, 1.0);
        let row = fixed_shading_row(&recv, &[&big, &big], &one, &opts);
        assert_eq!(row, vec![1.0]);
    }
}
