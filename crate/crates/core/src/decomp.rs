//! Polygon decomposition for large roofs.
//!
//! The roof boundary is sampled into a visibility graph whose Walktrap
//! communities seed the regions. Candidates join the community whose nodes
//! lie nearest, oversized regions are bisected across their rotated bounding
//! box, and [`sequential_optimize`] then solves one region at a time with
//! every panel placed elsewhere acting as fixed shading.

use alloc::collections::{BTreeMap, BinaryHeap};
use alloc::vec;
use alloc::vec::Vec;
use core::cmp::Ordering;
#[allow(unused_imports)] // inherent float methods are unavailable without std
use num_traits::Float;
use serde::{Deserialize, Serialize};

use crate::geom::{min_rotated_box, segment_visible, Point, RoofPolygon, EPS};
use crate::layout::{CandidatePanel, ConflictGraph};
use crate::opt::{solve, EconomicParams, ObjectiveContext, Solution, SolverOptions};
use crate::shade::{shadow_pairs, SerialBuilder, ShadowBuilder, ShadowMatrix, ShadowOptions};
use crate::solar::{GenerationTable, TimeSampleSet};
use crate::{error::invalid, Error, Result};

/// Boundary samples and the pairs that see each other.
#[derive(Debug, Clone, PartialEq)]
pub struct VisibilityGraph {
    pub nodes: Vec<Point>,
    /// Pairs with `i < j`, sorted.
    pub edges: Vec<(u32, u32)>,
    adjacency: Vec<Vec<u32>>,
}

impl VisibilityGraph {
    pub fn from_edges(nodes: Vec<Point>, edges: impl IntoIterator<Item = (usize, usize)>) -> Self {
        let n = nodes.len();
        let mut e: Vec<(u32, u32)> = edges
            .into_iter()
            .filter(|(i, j)| i != j && *i < n && *j < n)
            .map(|(i, j)| (i.min(j) as u32, i.max(j) as u32))
            .collect();
        e.sort_unstable();
        e.dedup();
        let mut adjacency = vec![Vec::new(); n];
        for &(i, j) in &e {
            adjacency[i as usize].push(j);
            adjacency[j as usize].push(i);
        }
        for a in &mut adjacency {
            a.sort_unstable();
        }
        VisibilityGraph { nodes, edges: e, adjacency }
    }

    pub fn num_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn neighbors(&self, i: usize) -> &[u32] {
        &self.adjacency[i]
    }
}

/// Points at uniform arc-length spacing around every ring, starting at each
/// ring's first vertex.
pub fn sample_boundary(roof: &RoofPolygon, spacing: f64) -> Result<Vec<Point>> {
    if !(spacing > 0.0) {
        return Err(invalid("sample spacing must be positive"));
    }
    let mut out = Vec::new();
    for ring in roof.rings() {
        let m = ring.len();
        let lengths: Vec<f64> = (0..m).map(|i| ring[i].dist(ring[(i + 1) % m])).collect();
        let perimeter: f64 = lengths.iter().sum();
        if perimeter <= EPS {
            continue;
        }
        let count = ((perimeter / spacing) - 1e-9).ceil().max(1.0) as usize;
        let step = perimeter / count as f64;
        let (mut edge, mut start) = (0usize, 0.0f64);
        for s in 0..count {
            let at = s as f64 * step;
            while edge + 1 < m && at > start + lengths[edge] {
                start += lengths[edge];
                edge += 1;
            }
            let t = if lengths[edge] > 0.0 { ((at - start) / lengths[edge]).clamp(0.0, 1.0) } else { 0.0 };
            out.push(ring[edge].lerp(ring[(edge + 1) % m], t));
        }
    }
    Ok(out)
}

/// Nodes `j > i` visible from node `i`.
pub fn visible_from(nodes: &[Point], roof: &RoofPolygon, i: usize) -> Result<Vec<u32>> {
    let mut out = Vec::new();
    for j in i + 1..nodes.len() {
        if segment_visible(nodes[i], nodes[j], roof)? {
            out.push(j as u32);
        }
    }
    Ok(out)
}

pub fn build_visibility_graph(roof: &RoofPolygon, spacing: f64) -> Result<VisibilityGraph> {
    let nodes = sample_boundary(roof, spacing)?;
    if nodes.len() < 3 {
        return Err(invalid("visibility graph needs at least 3 boundary samples"));
    }
    let mut edges = Vec::new();
    for i in 0..nodes.len() {
        edges.extend(visible_from(&nodes, roof, i)?.into_iter().map(|j| (i, j as usize)));
    }
    Ok(VisibilityGraph::from_edges(nodes, edges))
}

/// Merge history of an agglomerative clustering over `num_nodes` leaves.
///
/// Step `s` merges clusters `merges[s]`; leaves are `0..num_nodes` and the
/// cluster created by step `s` is `num_nodes + s`.
#[derive(Debug, Clone, PartialEq)]
pub struct Dendrogram {
    pub num_nodes: usize,
    pub merges: Vec<(usize, usize)>,
    /// Modularity after `s` merges, `s = 0..=merges.len()`.
    pub modularity: Vec<f64>,
}

impl Dendrogram {
    /// Communities after the first `steps` merges, each sorted, ordered by
    /// their smallest node.
    pub fn cut(&self, steps: usize) -> Vec<Vec<usize>> {
        let n = self.num_nodes;
        let mut parent: Vec<usize> = (0..n + self.merges.len()).collect();
        fn find(parent: &mut [usize], mut x: usize) -> usize {
            while parent[x] != x {
                parent[x] = parent[parent[x]];
                x = parent[x];
            }
            x
        }
        for (s, &(a, b)) in self.merges.iter().take(steps).enumerate() {
            parent[a] = n + s;
            parent[b] = n + s;
        }
        let mut groups: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
        for v in 0..n {
            let r = find(&mut parent, v);
            groups.entry(r).or_default().push(v);
        }
        let mut out: Vec<Vec<usize>> = groups.into_values().collect();
        out.sort_by_key(|c| c[0]);
        out
    }

    /// Number of merges giving the highest modularity; ties go to the
    /// coarser cut.
    pub fn best_cut(&self) -> usize {
        let mut best = 0;
        for (s, &q) in self.modularity.iter().enumerate() {
            if q >= self.modularity[best] - 1e-12 {
                best = s;
            }
        }
        best
    }
}

#[derive(PartialEq)]
struct Candidate {
    delta: f64,
    a: usize,
    b: usize,
}

impl Eq for Candidate {}

impl Ord for Candidate {
    // reversed so the max-heap pops the smallest delta, then the smallest ids
    fn cmp(&self, o: &Self) -> Ordering {
        o.delta.total_cmp(&self.delta).then(o.a.cmp(&self.a)).then(o.b.cmp(&self.b))
    }
}

impl PartialOrd for Candidate {
    fn partial_cmp(&self, o: &Self) -> Option<Ordering> {
        Some(self.cmp(o))
    }
}

struct Community {
    size: f64,
    /// Walk distribution scaled by `1 / sqrt(d(k))`.
    prob: Vec<f64>,
    /// Edge count to each adjacent community.
    links: BTreeMap<usize, f64>,
    degree: f64,
}

/// Pons–Latapy Walktrap with exact `walk_length`-step transition
/// probabilities. Every vertex carries a self-loop for the walk; modularity
/// is measured on the graph as given.
pub fn walktrap_dendrogram(g: &VisibilityGraph, walk_length: usize) -> Dendrogram {
    let n = g.num_nodes();
    let m = g.edges.len() as f64;
    let deg: Vec<f64> = (0..n).map(|i| g.neighbors(i).len() as f64 + 1.0).collect();
    let scale: Vec<f64> = deg.iter().map(|d| 1.0 / d.sqrt()).collect();

    let mut comms: Vec<Option<Community>> = Vec::with_capacity(2 * n);
    let mut cur = vec![0.0; n];
    let mut next = vec![0.0; n];
    for i in 0..n {
        cur.iter_mut().for_each(|v| *v = 0.0);
        cur[i] = 1.0;
        for _ in 0..walk_length {
            next.iter_mut().for_each(|v| *v = 0.0);
            for l in 0..n {
                let v = cur[l];
                if v == 0.0 {
                    continue;
                }
                let share = v / deg[l];
                next[l] += share;
                for &j in g.neighbors(l) {
                    next[j as usize] += share;
                }
            }
            core::mem::swap(&mut cur, &mut next);
        }
        comms.push(Some(Community {
            size: 1.0,
            prob: cur.iter().zip(&scale).map(|(p, s)| p * s).collect(),
            links: g.neighbors(i).iter().map(|&j| (j as usize, 1.0)).collect(),
            degree: deg[i] - 1.0,
        }));
    }

    let sigma = |a: &Community, b: &Community| {
        let r2: f64 = a.prob.iter().zip(&b.prob).map(|(x, y)| (x - y) * (x - y)).sum();
        a.size * b.size / (a.size + b.size) * r2 / n as f64
    };
    let mut heap = BinaryHeap::new();
    for &(i, j) in &g.edges {
        let (i, j) = (i as usize, j as usize);
        let d = sigma(comms[i].as_ref().unwrap(), comms[j].as_ref().unwrap());
        heap.push(Candidate { delta: d, a: i, b: j });
    }

    let two_m = 2.0 * m;
    let mut q = if m > 0.0 { -deg.iter().map(|d| ((d - 1.0) / two_m).powi(2)).sum::<f64>() } else { 0.0 };
    let mut modularity = vec![q];
    let mut merges = Vec::new();
    while let Some(Candidate { a, b, .. }) = heap.pop() {
        if comms[a].is_none() || comms[b].is_none() {
            continue;
        }
        let ca = comms[a].take().unwrap();
        let cb = comms[b].take().unwrap();
        let id = comms.len();
        let w_ab = ca.links.get(&b).copied().unwrap_or(0.0);
        q += 2.0 * w_ab / two_m - 2.0 * ca.degree * cb.degree / (two_m * two_m);
        let size = ca.size + cb.size;
        let prob = ca.prob.iter().zip(&cb.prob).map(|(x, y)| (ca.size * x + cb.size * y) / size).collect();
        let mut links = ca.links;
        for (k, w) in cb.links {
            *links.entry(k).or_insert(0.0) += w;
        }
        links.remove(&a);
        links.remove(&b);
        let merged = Community {
            size,
            prob,
            links,
            degree: ca.degree + cb.degree,
        };
        for (&x, &w) in &merged.links {
            let cx = comms[x].as_mut().unwrap();
            cx.links.remove(&a);
            cx.links.remove(&b);
            cx.links.insert(id, w);
        }
        let pushes: Vec<Candidate> = merged
            .links
            .keys()
            .map(|&x| Candidate {
                delta: sigma(&merged, comms[x].as_ref().unwrap()),
                a: x,
                b: id,
            })
            .collect();
        heap.extend(pushes);
        comms.push(Some(merged));
        merges.push((a, b));
        modularity.push(q);
    }
    Dendrogram {
        num_nodes: n,
        merges,
        modularity,
    }
}

/// Communities at the maximum-modularity cut of the Walktrap dendrogram.
/// Components never merge, so each is clustered independently.
pub fn walktrap_communities(g: &VisibilityGraph, walk_length: usize) -> Vec<Vec<usize>> {
    let d = walktrap_dendrogram(g, walk_length);
    d.cut(d.best_cut())
}

/// Candidate ids per region plus the inverse map.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegionPartition {
    pub regions: Vec<Vec<usize>>,
    pub assignment: Vec<usize>,
}

impl RegionPartition {
    /// Everything in one region.
    pub fn single(num_candidates: usize) -> Self {
        RegionPartition {
            regions: vec![(0..num_candidates).collect()],
            assignment: vec![0; num_candidates],
        }
    }

    pub fn from_regions(num_candidates: usize, regions: Vec<Vec<usize>>) -> Result<Self> {
        let mut assignment = vec![usize::MAX; num_candidates];
        for (r, ids) in regions.iter().enumerate() {
            for &i in ids {
                if i >= num_candidates || assignment[i] != usize::MAX {
                    return Err(invalid("regions must be disjoint and within range"));
                }
                assignment[i] = r;
            }
        }
        if assignment.contains(&usize::MAX) {
            return Err(invalid("every candidate must belong to a region"));
        }
        Ok(RegionPartition { regions, assignment })
    }

    pub fn num_regions(&self) -> usize {
        self.regions.len()
    }
}

/// Splits points across the mid-line joining the long sides of their
/// minimum rotated bounding box. Points on the line go to the first half.
pub fn bisect_region(centroids: &[Point]) -> Result<(Vec<usize>, Vec<usize>)> {
    if centroids.len() < 2 {
        return Err(invalid("bisection needs at least 2 candidates"));
    }
    let p0 = centroids[0];
    let far = centroids.iter().map(|p| p.dist(p0)).fold(0.0, f64::max);
    if far <= EPS {
        return Err(Error::CannotSplit);
    }
    let (center, axis) = if centroids.len() == 2 {
        let d = centroids[1] - p0;
        (p0.lerp(centroids[1], 0.5), d * (1.0 / d.norm()))
    } else {
        let b = min_rotated_box(centroids)?;
        (b.center, b.long_axis())
    };
    let tol = 1e-9 * (1.0 + far);
    let (mut first, mut second) = (Vec::new(), Vec::new());
    for (i, &p) in centroids.iter().enumerate() {
        if (p - center).dot(axis) <= tol {
            first.push(i);
        } else {
            second.push(i);
        }
    }
    if first.is_empty() || second.is_empty() {
        return Err(Error::CannotSplit);
    }
    Ok((first, second))
}

/// How many community nodes are averaged when measuring proximity.
const NEAREST_NODES: usize = 5;

/// Assigns each candidate centroid to the community with the smallest mean
/// distance to its five nearest nodes, then bisects regions above `cap`.
/// Empty communities produce no region.
pub fn partition_regions(graph: &VisibilityGraph, communities: &[Vec<usize>], centroids: &[Point], cap: usize) -> Result<RegionPartition> {
    if communities.is_empty() || communities.iter().all(|c| c.is_empty()) {
        return Err(invalid("at least one nonempty community is required"));
    }
    if cap == 0 {
        return Err(invalid("region candidate cap must be positive"));
    }
    let mut buckets: Vec<Vec<usize>> = vec![Vec::new(); communities.len()];
    let mut dist = Vec::new();
    for (i, &c) in centroids.iter().enumerate() {
        let mut best = (f64::INFINITY, 0usize);
        for (ci, comm) in communities.iter().enumerate() {
            if comm.is_empty() {
                continue;
            }
            dist.clear();
            dist.extend(comm.iter().map(|&v| graph.nodes[v].dist(c)));
            let take = NEAREST_NODES.min(dist.len());
            if take < dist.len() {
                dist.select_nth_unstable_by(take - 1, f64::total_cmp);
            }
            let mean = dist[..take].iter().sum::<f64>() / take as f64;
            if mean < best.0 {
                best = (mean, ci);
            }
        }
        buckets[best.1].push(i);
    }
    let mut regions = Vec::new();
    let mut pending: Vec<Vec<usize>> = buckets.into_iter().filter(|b| !b.is_empty()).rev().collect();
    while let Some(ids) = pending.pop() {
        if ids.len() <= cap {
            regions.push(ids);
            continue;
        }
        let pts: Vec<Point> = ids.iter().map(|&i| centroids[i]).collect();
        let (a, b) = bisect_region(&pts)?;
        pending.push(b.into_iter().map(|n| ids[n]).collect());
        pending.push(a.into_iter().map(|n| ids[n]).collect());
    }
    RegionPartition::from_regions(centroids.len(), regions)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SequentialOptions {
    pub sweeps: usize,
    pub solver: SolverOptions,
}

impl Default for SequentialOptions {
    fn default() -> Self {
        SequentialOptions {
            sweeps: 2,
            solver: SolverOptions::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SequentialResult {
    pub solution: Solution,
    /// Global objective after each sweep.
    pub sweep_objectives: Vec<f64>,
}

/// A problem that can be solved one region at a time.
pub trait RegionProblem {
    fn num_candidates(&self) -> usize;

    fn graph(&self) -> &ConflictGraph;

    /// Sub-problem over `ids` (global candidate numbers). The panels selected
    /// in `x` act as fixed shading on the diagonal; none of them is in `ids`.
    fn region_context(&self, ids: &[usize], x: &[bool]) -> Result<ObjectiveContext>;

    /// Global solution for the selection `x`.
    fn evaluate(&self, x: &[bool]) -> Result<Solution>;
}

impl RegionProblem for ObjectiveContext {
    fn num_candidates(&self) -> usize {
        ObjectiveContext::num_candidates(self)
    }

    fn graph(&self) -> &ConflictGraph {
        ObjectiveContext::graph(self)
    }

    /// Fixed shading is read from the matrix columns of the selected panels.
    fn region_context(&self, ids: &[usize], x: &[bool]) -> Result<ObjectiveContext> {
        let mut shadow = self.shadow().submatrix(ids);
        let mut row = vec![0u64; self.num_samples()];
        for (local, &i) in ids.iter().enumerate() {
            for (r, &d) in row.iter_mut().zip(self.shadow().diagonal_row_quantized(i)) {
                *r = d as u64;
            }
            for p in self.shadow().receiver_pairs(i) {
                if x[p.caster] {
                    for (&s, &f) in p.samples.iter().zip(p.fracs) {
                        row[s as usize] += f as u64;
                    }
                }
            }
            shadow.set_diagonal_quantized(local, &row);
        }
        self.restrict(ids, shadow)
    }

    fn evaluate(&self, x: &[bool]) -> Result<Solution> {
        Ok(Solution::evaluate(self, x))
    }
}

/// Region problem that projects shadows on demand instead of holding a
/// matrix over every candidate pair.
pub struct GeometricProblem<'a, B = SerialBuilder> {
    pub candidates: &'a [CandidatePanel],
    pub samples: &'a TimeSampleSet,
    pub generation: &'a GenerationTable,
    pub econ: &'a EconomicParams,
    pub graph: &'a ConflictGraph,
    /// `None` ignores shading altogether.
    pub shading: Option<ShadowOptions>,
    pub area_ratio: f64,
    pub builder: B,
}

impl<B: ShadowBuilder> GeometricProblem<'_, B> {
    /// Context over `ids` with its own pairwise matrix and no fixed shading.
    pub fn context(&self, ids: &[usize]) -> Result<ObjectiveContext> {
        let sub: Vec<CandidatePanel> = ids.iter().map(|&i| self.candidates[i].clone()).collect();
        let graph = self.graph.induced(ids);
        let k = self.samples.len();
        let shadow = match &self.shading {
            Some(o) => {
                let pairs = shadow_pairs(&sub, o.cull_distance, Some(&graph));
                self.builder.matrix(&sub, self.samples, &pairs, o.min_elevation)
            }
            None => ShadowMatrix::empty(ids.len(), k),
        };
        let mut ctx = ObjectiveContext::from_generation(self.generation, &sub, self.econ, shadow, graph)?;
        ctx.area_ratio = self.area_ratio;
        Ok(ctx)
    }
}

impl<B: ShadowBuilder> RegionProblem for GeometricProblem<'_, B> {
    fn num_candidates(&self) -> usize {
        self.candidates.len()
    }

    fn graph(&self) -> &ConflictGraph {
        self.graph
    }

    fn region_context(&self, ids: &[usize], x: &[bool]) -> Result<ObjectiveContext> {
        let mut ctx = self.context(ids)?;
        if let Some(o) = &self.shading {
            let placed: Vec<&CandidatePanel> = (0..x.len()).filter(|&j| x[j]).map(|j| &self.candidates[j]).collect();
            if !placed.is_empty() {
                let targets: Vec<CandidatePanel> = ids.iter().map(|&i| self.candidates[i].clone()).collect();
                for (local, row) in self.builder.fixed_rows(&targets, &placed, self.samples, o).iter().enumerate() {
                    ctx.shadow_mut().set_diagonal(local, row);
                }
            }
        }
        Ok(ctx)
    }

    /// Only pairs among the selected panels matter, so the matrix is built
    /// over those alone.
    fn evaluate(&self, x: &[bool]) -> Result<Solution> {
        let ids: Vec<usize> = (0..x.len()).filter(|&i| x[i]).collect();
        let ctx = self.context(&ids)?;
        let local = Solution::evaluate(&ctx, &vec![true; ids.len()]);
        Ok(Solution {
            selected: x.to_vec(),
            ..local
        })
    }
}

/// Region-by-region optimization over several sweeps, starting from the
/// best of `seeds`.
///
/// For each region, in order of decreasing size: its panels are cleared,
/// candidates conflicting with a panel selected elsewhere are frozen out,
/// the shading cast by panels selected elsewhere becomes fixed shading, and
/// the restricted problem is solved. `seeds` are global selections whose
/// restrictions seed every region solve, together with the region's
/// previous selection. A region update that lowers the global objective is
/// discarded.
pub fn sequential_optimize<P: RegionProblem + ?Sized>(
    partition: &RegionPartition,
    problem: &P,
    seeds: &[Solution],
    opts: &SequentialOptions,
) -> Result<SequentialResult> {
    let n = problem.num_candidates();
    if opts.sweeps == 0 {
        return Err(Error::Config("at least one sweep is required".into()));
    }
    if partition.assignment.len() != n {
        return Err(invalid("partition does not cover the candidate set"));
    }
    let graph = problem.graph();
    let mut order: Vec<usize> = (0..partition.num_regions()).collect();
    order.sort_by(|&a, &b| partition.regions[b].len().cmp(&partition.regions[a].len()).then(a.cmp(&b)));

    let mut x = vec![false; n];
    let mut value = 0.0;
    for s in seeds.iter().filter(|s| s.selected.len() == n && graph.is_independent(&s.selected)) {
        let v = problem.evaluate(&s.selected)?.objective;
        if v > value {
            x.copy_from_slice(&s.selected);
            value = v;
        }
    }
    let mut sweep_objectives = Vec::with_capacity(opts.sweeps);
    for sweep in 0..opts.sweeps {
        for (pos, &r) in order.iter().enumerate() {
            let region = &partition.regions[r];
            let previous = x.clone();
            for &i in region {
                x[i] = false;
            }
            let ids: Vec<usize> = region
                .iter()
                .copied()
                .filter(|&i| graph.neighbors(i).iter().all(|&j| !x[j as usize]))
                .collect();
            if ids.is_empty() {
                x = previous;
                continue;
            }
            let sub = problem.region_context(&ids, &x)?;
            let restrict = |sel: &[bool]| {
                let local: Vec<bool> = ids.iter().map(|&i| sel[i]).collect();
                Solution::evaluate(&sub, &local)
            };
            let mut region_seeds = Vec::with_capacity(seeds.len() + 1);
            if ids.iter().any(|&i| previous[i]) {
                region_seeds.push(restrict(&previous));
            }
            region_seeds.extend(seeds.iter().filter(|s| s.selected.len() == n).map(|s| restrict(&s.selected)));
            let mut solver = opts.solver.clone();
            let salt = (sweep * order.len() + pos) as u64;
            solver.rng_seed = solver.rng_seed.wrapping_add(salt.wrapping_mul(0x9E37_79B9_7F4A_7C15));
            let found = solve(&sub, &region_seeds, &solver)?;
            for (local, &i) in ids.iter().enumerate() {
                x[i] = found.selected[local];
            }
            let updated = problem.evaluate(&x)?.objective;
            if updated + 1e-9 * (1.0 + value.abs()) < value {
                log::debug!("sweep {sweep}: region {r} update rejected ({updated} < {value})");
                x = previous;
            } else {
                value = updated;
            }
        }
        log::debug!("sweep {sweep}: objective {value}");
        sweep_objectives.push(value);
    }
    let solution = problem.evaluate(&x)?;
    if !graph.is_independent(&solution.selected) {
        return Err(Error::Degenerate("sequential solution violates a conflict".into()));
    }
    Ok(SequentialResult { solution, sweep_objectives })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::layout::{build_conflict_graph, generate_candidates, GridOptions, PanelSpec};
    use crate::opt::{anneal, solve_exact, EconomicParams};
    use crate::shade::{build_shadow_matrix, fixed_shading_row, ShadowMatrix, ShadowOptions};
    use crate::solar::{baseline_generation, build_time_samples, synthetic_clear_sky_year, PanelOrientation, Site};
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn dumbbell() -> RoofPolygon {
        // two 6 x 6 lobes joined by a 4 m long, 0.6 m wide corridor
        RoofPolygon::new(
            vec![
                Point::new(0.0, 0.0),
                Point::new(6.0, 0.0),
                Point::new(6.0, 2.7),
                Point::new(10.0, 2.7),
                Point::new(10.0, 0.0),
                Point::new(16.0, 0.0),
                Point::new(16.0, 6.0),
                Point::new(10.0, 6.0),
                Point::new(10.0, 3.3),
                Point::new(6.0, 3.3),
                Point::new(6.0, 6.0),
                Point::new(0.0, 6.0),
            ],
            vec![],
        )
    }

    fn modularity(g: &VisibilityGraph, comms: &[Vec<usize>]) -> f64 {
        let m = g.edges.len() as f64;
        let mut label = vec![0; g.num_nodes()];
        for (c, members) in comms.iter().enumerate() {
            for &v in members {
                label[v] = c;
            }
        }
        let mut q = 0.0;
        for i in 0..g.num_nodes() {
            for j in 0..g.num_nodes() {
                if label[i] != label[j] {
                    continue;
                }
                let a = if g.neighbors(i).contains(&(j as u32)) { 1.0 } else { 0.0 };
                q += a - g.neighbors(i).len() as f64 * g.neighbors(j).len() as f64 / (2.0 * m);
            }
        }
        q / (2.0 * m)
    }

    fn barbell(size: usize) -> VisibilityGraph {
        let mut edges = Vec::new();
        for base in [0, size] {
            for i in 0..size {
                for j in i + 1..size {
                    edges.push((base + i, base + j));
                }
            }
        }
        edges.push((size - 1, size));
        VisibilityGraph::from_edges(vec![Point::new(0.0, 0.0); 2 * size], edges)
    }

    #[test]
    fn boundary_sampling() {
        let sq = RoofPolygon::rectangle(0.0, 0.0, 4.0, 2.0);
        let pts = sample_boundary(&sq, 0.5).unwrap();
        assert_eq!(pts.len(), 24);
        for w in pts.windows(2) {
            assert!((w[0].dist(w[1]) - 0.5).abs() < 1e-9 || (w[0].dist(w[1]) - 0.5f64.hypot(0.0)).abs() < 1e-9);
        }
        assert!(build_visibility_graph(&RoofPolygon::rectangle(0.0, 0.0, 0.1, 0.1), 1.0).is_err());
        assert!(sample_boundary(&sq, 0.0).is_err());
    }

    #[test]
    fn convex_roof_is_complete() {
        let g = build_visibility_graph(&RoofPolygon::rectangle(0.0, 0.0, 5.0, 3.0), 0.5).unwrap();
        let n = g.num_nodes();
        assert_eq!(g.edges.len(), n * (n - 1) / 2);
        assert_eq!(walktrap_communities(&g, 4).len(), 1);
    }

    #[test]
    fn hole_blocks_straddling_pairs() {
        let hole = vec![Point::new(4.0, 4.0), Point::new(6.0, 4.0), Point::new(6.0, 6.0), Point::new(4.0, 6.0)];
        let roof = RoofPolygon::new(RoofPolygon::rectangle(0.0, 0.0, 10.0, 10.0).exterior, vec![hole]);
        let g = build_visibility_graph(&roof, 1.0).unwrap();
        let left = g.nodes.iter().position(|p| p.dist(Point::new(0.0, 5.0)) < 1e-9).unwrap();
        let right = g.nodes.iter().position(|p| p.dist(Point::new(10.0, 5.0)) < 1e-9).unwrap();
        assert!(!g.neighbors(left).contains(&(right as u32)));
        for &(i, j) in &g.edges {
            assert!(segment_visible(g.nodes[i as usize], g.nodes[j as usize], &roof).unwrap());
        }
    }

    fn lobe(p: Point) -> Option<usize> {
        if p.x <= 6.0 && !(p.x == 6.0 && p.y > 2.0 && p.y < 4.0) {
            Some(0)
        } else if p.x >= 10.0 && !(p.x == 10.0 && p.y > 2.0 && p.y < 4.0) {
            Some(1)
        } else {
            None
        }
    }

    #[test]
    fn dumbbell_visibility_and_lobes() {
        let roof = dumbbell();
        let g = build_visibility_graph(&roof, 0.5).unwrap();
        // exhaustive check against the visibility predicate
        let n = g.num_nodes();
        let mut cross = 0;
        for i in 0..n {
            for j in i + 1..n {
                let vis = segment_visible(g.nodes[i], g.nodes[j], &roof).unwrap();
                assert_eq!(vis, g.neighbors(i).contains(&(j as u32)));
                if vis && matches!((lobe(g.nodes[i]), lobe(g.nodes[j])), (Some(a), Some(b)) if a != b) {
                    cross += 1;
                }
            }
        }
        assert!(cross * 50 < g.edges.len(), "{cross} of {}", g.edges.len());

        let comms = walktrap_communities(&g, 4);
        assert!(comms.len() >= 2);
        for l in 0..2 {
            let members: Vec<usize> = (0..n).filter(|&v| lobe(g.nodes[v]) == Some(l)).collect();
            let best = comms.iter().map(|c| members.iter().filter(|v| c.contains(v)).count()).max().unwrap();
            assert!(best * 10 >= members.len() * 9, "lobe {l}: {best} of {}", members.len());
        }
    }

    #[test]
    fn barbell_splits_at_best_modularity() {
        let g = barbell(6);
        let d = walktrap_dendrogram(&g, 4);
        assert_eq!(d.merges.len(), 11);
        let comms = walktrap_communities(&g, 4);
        assert_eq!(comms, vec![(0..6).collect::<Vec<_>>(), (6..12).collect()]);
        let qs: Vec<f64> = (0..=d.merges.len()).map(|s| modularity(&g, &d.cut(s))).collect();
        for (s, q) in qs.iter().enumerate() {
            assert!((q - d.modularity[s]).abs() < 1e-9);
        }
        let best = qs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        assert!((modularity(&g, &comms) - best).abs() < 1e-12);
    }

    #[test]
    fn components_stay_apart_and_edgeless_graphs_are_singletons() {
        let g = VisibilityGraph::from_edges(vec![Point::new(0.0, 0.0); 6], [(0, 1), (1, 2), (0, 2), (3, 4), (4, 5), (3, 5)]);
        assert_eq!(walktrap_communities(&g, 4), vec![vec![0, 1, 2], vec![3, 4, 5]]);
        let g = VisibilityGraph::from_edges(vec![Point::new(0.0, 0.0); 3], []);
        assert_eq!(walktrap_communities(&g, 4).len(), 3);
    }

    #[test]
    fn bisection_examples() {
        let pts: Vec<Point> = (0..20).map(|i| Point::new((i % 10) as f64 * 2.0, (i / 10) as f64 * 2.0 + 1.0)).collect();
        let (a, b) = bisect_region(&pts).unwrap();
        assert_eq!((a.len(), b.len()), (10, 10));
        // split line is perpendicular to the long axis
        assert!(a.iter().all(|&i| pts[i].x < 9.0) && b.iter().all(|&i| pts[i].x > 9.0));
        assert_eq!(bisect_region(&[Point::new(1.0, 1.0); 4]), Err(Error::CannotSplit));
        assert!(bisect_region(&[Point::new(1.0, 1.0)]).is_err());
        let (a, b) = bisect_region(&[Point::new(0.0, 0.0), Point::new(0.0, 3.0)]).unwrap();
        assert_eq!((a, b), (vec![0], vec![1]));
        // on-line centroid goes to the first half
        let (a, _) = bisect_region(&[Point::new(0.0, 0.0), Point::new(1.0, 0.0), Point::new(2.0, 0.0)]).unwrap();
        assert_eq!(a, vec![0, 1]);
    }

    #[test]
    fn partition_examples() {
        let roof = RoofPolygon::rectangle(0.0, 0.0, 40.0, 4.0);
        let g = build_visibility_graph(&roof, 1.0).unwrap();
        let comms = walktrap_communities(&g, 4);
        assert_eq!(comms.len(), 1);
        let cents: Vec<Point> = (0..40).map(|i| Point::new(0.5 + i as f64, 1.0 + (i % 2) as f64)).collect();
        let p = partition_regions(&g, &comms, &cents, 40).unwrap();
        assert_eq!(p.regions, vec![(0..40).collect::<Vec<_>>()]);
        let p = partition_regions(&g, &comms, &cents, 20).unwrap();
        assert_eq!(p.regions.len(), 2);
        assert_eq!((p.regions[0].len(), p.regions[1].len()), (20, 20));
        // no cap: regions follow the communities
        let two = vec![(0..g.num_nodes() / 2).collect::<Vec<_>>(), (g.num_nodes() / 2..g.num_nodes()).collect()];
        let p = partition_regions(&g, &two, &cents, usize::MAX).unwrap();
        assert!(p.regions.len() <= 2);
        assert!(partition_regions(&g, &[], &cents, 10).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]
        #[test]
        fn partitions_are_exhaustive_disjoint_and_capped(seed in 0u64..500, count in 1usize..120, cap in 1usize..30) {
            let roof = dumbbell();
            let g = build_visibility_graph(&roof, 1.0).unwrap();
            let comms = walktrap_communities(&g, 4);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let cents: Vec<Point> = (0..count).map(|_| Point::new(rng.random_range(0.0..16.0), rng.random_range(0.0..6.0))).collect();
            let p = partition_regions(&g, &comms, &cents, cap).unwrap();
            let mut seen = vec![0; count];
            for (r, ids) in p.regions.iter().enumerate() {
                prop_assert!(!ids.is_empty() && ids.len() <= cap);
                for &i in ids {
                    seen[i] += 1;
                    prop_assert_eq!(p.assignment[i], r);
                }
            }
            prop_assert!(seen.iter().all(|&s| s == 1));
            prop_assert_eq!(partition_regions(&g, &comms, &cents, cap).unwrap(), p);
        }
    }

    fn random_ctx(seed: u64, n: usize, k: usize, pe: f64, ps: f64, allowed: impl Fn(usize, usize) -> bool) -> ObjectiveContext {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut edges = Vec::new();
        let mut entries = Vec::new();
        for i in 0..n {
            for j in 0..n {
                if i == j || !allowed(i, j) {
                    continue;
                }
                if i < j && rng.random::<f64>() < pe {
                    edges.push((i, j));
                }
                if rng.random::<f64>() < ps {
                    for s in 0..k {
                        entries.push((i, j, s, rng.random_range(0.0..0.6)));
                    }
                }
            }
        }
        let energy = (0..n * k).map(|_| rng.random_range(0.0..100.0)).collect();
        let cost = (0..n).map(|_| rng.random_range(0.0..40.0 * k as f64)).collect();
        ObjectiveContext::new(
            energy,
            cost,
            &vec![1.0; k],
            ShadowMatrix::from_entries(n, k, entries),
            crate::layout::ConflictGraph::from_edges(n, edges),
        )
        .unwrap()
    }

    #[test]
    fn single_region_matches_direct_solve() {
        let ctx = random_ctx(1, 24, 5, 0.1, 0.3, |_, _| true);
        let opts = SequentialOptions {
            sweeps: 1,
            ..Default::default()
        };
        let seq = sequential_optimize(&RegionPartition::single(24), &ctx, &[], &opts).unwrap();
        let direct = solve(&ctx, &[], &opts.solver).unwrap();
        assert_eq!(seq.solution, direct);
        // above the exact cap the local search path is taken
        let ctx = random_ctx(2, 45, 4, 0.05, 0.2, |_, _| true);
        let seq = sequential_optimize(&RegionPartition::single(45), &ctx, &[], &opts).unwrap();
        assert_eq!(seq.solution, solve(&ctx, &[], &opts.solver).unwrap());
    }

    #[test]
    fn separable_regions_equal_independent_solves() {
        let half = |i: usize| i / 10;
        let ctx = random_ctx(4, 20, 6, 0.2, 0.3, |i, j| half(i) == half(j));
        let regions = vec![(0..10).collect::<Vec<_>>(), (10..20).collect()];
        let part = RegionPartition::from_regions(20, regions.clone()).unwrap();
        let seq = sequential_optimize(&part, &ctx, &[], &SequentialOptions::default()).unwrap();
        let mut total = 0.0;
        for ids in &regions {
            let sub = ctx.restrict(ids, ctx.shadow().submatrix(ids)).unwrap();
            total += solve_exact(&sub, u64::MAX).unwrap().objective;
        }
        assert!((seq.solution.objective - total).abs() < 1e-6 * (1.0 + total.abs()));
    }

    #[test]
    fn sweeps_never_lower_the_objective() {
        for seed in 0..12 {
            let ctx = random_ctx(seed, 60, 6, 0.06, 0.15, |_, _| true);
            let regions: Vec<Vec<usize>> = (0..4).map(|r| (r * 15..(r + 1) * 15).collect()).collect();
            let part = RegionPartition::from_regions(60, regions).unwrap();
            let opts = SequentialOptions {
                sweeps: 3,
                ..Default::default()
            };
            let a = sequential_optimize(&part, &ctx, &[], &opts).unwrap();
            assert!(a.solution.is_feasible(ctx.graph()));
            for w in a.sweep_objectives.windows(2) {
                assert!(w[1] >= w[0] - 1e-9, "seed {seed}: {:?}", a.sweep_objectives);
            }
            assert_eq!(a, sequential_optimize(&part, &ctx, &[], &opts).unwrap());
        }
        let ctx = random_ctx(0, 4, 2, 0.0, 0.0, |_, _| true);
        let bad = SequentialOptions { sweeps: 0, ..Default::default() };
        assert!(matches!(sequential_optimize(&RegionPartition::single(4), &ctx, &[], &bad), Err(Error::Config(_))));
    }

    #[test]
    fn never_below_the_best_seed() {
        for seed in 0..8 {
            let ctx = random_ctx(100 + seed, 60, 6, 0.08, 0.2, |_, _| true);
            let regions: Vec<Vec<usize>> = (0..6).map(|r| (r * 10..(r + 1) * 10).collect()).collect();
            let part = RegionPartition::from_regions(60, regions).unwrap();
            let seeds: Vec<Solution> = (0..3)
                .map(|s| {
                    let x = anneal(&ctx, &vec![false; 60], 5_000, s);
                    Solution::evaluate(&ctx, &x)
                })
                .collect();
            let best = seeds.iter().map(|s| s.objective).fold(0.0, f64::max);
            let opts = SequentialOptions {
                sweeps: 1,
                solver: SolverOptions {
                    budget: 500,
                    ..Default::default()
                },
            };
            let out = sequential_optimize(&part, &ctx, &seeds, &opts).unwrap();
            assert!(out.solution.objective >= best - 1e-9 * (1.0 + best), "seed {seed}");
        }
        let ctx = random_ctx(0, 4, 2, 0.0, 0.0, |_, _| true);
        let bad = SequentialOptions { sweeps: 0, ..Default::default() };
        assert!(matches!(sequential_optimize(&RegionPartition::single(4), &ctx, &[], &bad), Err(Error::Config(_))));
    }

    #[test]
    fn folded_shading_matches_projected_shading() {
        let site = Site::at(40.0, -105.0);
        let weather = synthetic_clear_sky_year(&site, 2023).unwrap();
        let samples = build_time_samples(&site, &weather).unwrap();
        let roof = RoofPolygon::rectangle(0.0, 0.0, 12.0, 12.0);
        let opts = GridOptions {
            azimuths: vec![180.0],
            tilts: vec![30.0],
            shifts: vec![[0.0, 0.0]],
            ..Default::default()
        };
        let cands = generate_candidates(&roof, &PanelSpec::default(), &opts).unwrap();
        let graph = build_conflict_graph(&cands, &opts);
        let shadow = build_shadow_matrix(&cands, &samples, 30.0, 3.0);
        let orients: Vec<PanelOrientation> = opts.orientations();
        let gen = baseline_generation(&orients, &samples, 300.0, 0.86).unwrap();
        let ctx = ObjectiveContext::from_generation(&gen, &cands, &EconomicParams::default(), shadow, graph).unwrap();

        let mut x = vec![false; cands.len()];
        for i in 0..cands.len() {
            if ctx.graph().neighbors(i).iter().all(|&j| !x[j as usize]) && i % 3 != 0 {
                x[i] = true;
            }
        }
        let placed: Vec<&crate::layout::CandidatePanel> = (0..cands.len()).filter(|&i| x[i]).map(|i| &cands[i]).collect();
        let shade_opts = ShadowOptions::default();
        let mut checked = 0;
        for t in (0..cands.len()).filter(|&t| !x[t] && ctx.graph().neighbors(t).iter().all(|&j| !x[j as usize])) {
            let projected = fixed_shading_row(&cands[t], &placed, &samples, &shade_opts);
            let mut folded = vec![0.0; samples.len()];
            for p in ctx.shadow().receiver_pairs(t).filter(|p| x[p.caster]) {
                for (&s, &f) in p.samples.iter().zip(p.fracs) {
                    folded[s as usize] += crate::shade::dequantize(f);
                }
            }
            for (a, b) in projected.iter().zip(&folded) {
                assert!((a - b.min(1.0)).abs() < 1e-6);
            }
            checked += 1;
        }
        assert!(checked > 0);
    }
}
