//! Objective evaluation and independent-set solvers.
//!
//! The shaded objective of a selection `x` is
//!
//! ```text
//! sum_i x_i * ( -C_i + sum_k V_i(k) * (1 - min(1, S_ii(k) + sum_{j != i} x_j S_ij(k))) )
//! ```
//!
//! where `V_i(k)` is the lifetime value of panel `i`'s unshaded energy in
//! sample `k`. With an empty shadow matrix it reduces to the linear objective.
//!
//! [`Evaluator`] keeps the shading sums of every panel as fixed-point integers
//! so a flip touches only the matrix entries cast by the flipped panel and can
//! be undone exactly.

use alloc::vec;
use alloc::vec::Vec;
#[allow(unused_imports)] // inherent float methods are unavailable without std
use num_traits::Float;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::layout::{CandidatePanel, ConflictGraph};
use crate::shade::{ShadowMatrix, FRAC_ONE};
use crate::solar::GenerationTable;
use crate::{error::invalid, Error, Result};

const INV_ONE: f64 = 1.0 / FRAC_ONE as f64;

/// Energy price, constant or per time sample, in currency per Wh.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Tariff {
    Flat(f64),
    PerSample(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EconomicParams {
    pub panel_cost: f64,
    pub tariff: Tariff,
    pub lifetime_years: f64,
}

impl Default for EconomicParams {
    fn default() -> Self {
        EconomicParams {
            panel_cost: 450.0,
            // 0.07 per kWh
            tariff: Tariff::Flat(7.0e-5),
            lifetime_years: 20.0,
        }
    }
}

impl EconomicParams {
    /// Lifetime value of one annual Wh in each sample.
    pub fn lifetime_tariff(&self, num_samples: usize) -> Result<Vec<f64>> {
        if !(self.panel_cost >= 0.0) || !(self.lifetime_years >= 0.0) {
            return Err(Error::Config("panel cost and lifetime must be non-negative".into()));
        }
        let per_k = match &self.tariff {
            Tariff::Flat(t) => vec![*t; num_samples],
            Tariff::PerSample(v) if v.len() == num_samples => v.clone(),
            Tariff::PerSample(v) => {
                return Err(Error::Config(alloc::format!(
                    "tariff has {} entries but there are {num_samples} samples",
                    v.len()
                )))
            }
        };
        if per_k.iter().any(|t| !(*t >= 0.0)) {
            return Err(Error::Config("tariff must be non-negative".into()));
        }
        Ok(per_k.into_iter().map(|t| t * self.lifetime_years).collect())
    }
}

/// Everything the objective needs, indexed by local candidate number.
#[derive(Debug, Clone)]
pub struct ObjectiveContext {
    n: usize,
    k: usize,
    /// `n * k` annual Wh per sample.
    energy: Vec<f64>,
    /// `n * k` lifetime currency per sample.
    value: Vec<f64>,
    cost: Vec<f64>,
    gain: Vec<f64>,
    shadow: ShadowMatrix,
    graph: ConflictGraph,
    /// Panel area over roof area; turns a panel count into a packing density.
    pub area_ratio: f64,
}

impl ObjectiveContext {
    /// `energy` is row-major `n x k`; `tariff` holds one lifetime factor per sample.
    pub fn new(energy: Vec<f64>, cost: Vec<f64>, tariff: &[f64], shadow: ShadowMatrix, graph: ConflictGraph) -> Result<Self> {
        let n = cost.len();
        let k = tariff.len();
        if energy.len() != n * k {
            return Err(invalid("energy table must be candidates x samples"));
        }
        if shadow.num_candidates() != n || shadow.num_samples() != k || graph.num_nodes != n {
            return Err(invalid("shadow matrix and conflict graph must match the candidate count"));
        }
        let value: Vec<f64> = energy.iter().enumerate().map(|(idx, e)| e * tariff[idx % k.max(1)]).collect();
        let gain = (0..n).map(|i| value[i * k..(i + 1) * k].iter().sum::<f64>() - cost[i]).collect();
        Ok(ObjectiveContext {
            n,
            k,
            energy,
            value,
            cost,
            gain,
            shadow,
            graph,
            area_ratio: 0.0,
        })
    }

    /// Context whose candidate `i` takes generation row `candidates[i].orientation`.
    pub fn from_generation(
        generation: &GenerationTable,
        candidates: &[CandidatePanel],
        econ: &EconomicParams,
        shadow: ShadowMatrix,
        graph: ConflictGraph,
    ) -> Result<Self> {
        let k = shadow.num_samples();
        let mut energy = Vec::with_capacity(candidates.len() * k);
        for c in candidates {
            let row = generation.g.get(c.orientation).ok_or_else(|| invalid("candidate orientation has no generation row"))?;
            if row.len() != k {
                return Err(invalid("generation rows must have one entry per sample"));
            }
            energy.extend_from_slice(row);
        }
        let tariff = econ.lifetime_tariff(k)?;
        ObjectiveContext::new(energy, vec![econ.panel_cost; candidates.len()], &tariff, shadow, graph)
    }

    pub fn num_candidates(&self) -> usize {
        self.n
    }

    pub fn num_samples(&self) -> usize {
        self.k
    }

    pub fn shadow(&self) -> &ShadowMatrix {
        &self.shadow
    }

    pub fn shadow_mut(&mut self) -> &mut ShadowMatrix {
        &mut self.shadow
    }

    pub fn set_shadow(&mut self, shadow: ShadowMatrix) -> Result<()> {
        if shadow.num_candidates() != self.n || shadow.num_samples() != self.k {
            return Err(invalid("shadow matrix does not match the context"));
        }
        self.shadow = shadow;
        Ok(())
    }

    pub fn graph(&self) -> &ConflictGraph {
        &self.graph
    }

    pub fn cost(&self, i: usize) -> f64 {
        self.cost[i]
    }

    pub fn energy_row(&self, i: usize) -> &[f64] {
        &self.energy[i * self.k..(i + 1) * self.k]
    }

    pub fn value_row(&self, i: usize) -> &[f64] {
        &self.value[i * self.k..(i + 1) * self.k]
    }

    /// Net value of panel `i` with no shading at all.
    pub fn unshaded_gain(&self, i: usize) -> f64 {
        self.gain[i]
    }

    /// Copy restricted to `ids` with the given shadow matrix (already local).
    pub fn restrict(&self, ids: &[usize], shadow: ShadowMatrix) -> Result<ObjectiveContext> {
        let k = self.k;
        let mut energy = Vec::with_capacity(ids.len() * k);
        let mut value = Vec::with_capacity(ids.len() * k);
        for &i in ids {
            energy.extend_from_slice(self.energy_row(i));
            value.extend_from_slice(self.value_row(i));
        }
        if shadow.num_candidates() != ids.len() || shadow.num_samples() != k {
            return Err(invalid("restricted shadow matrix has the wrong shape"));
        }
        Ok(ObjectiveContext {
            n: ids.len(),
            k,
            energy,
            value,
            cost: ids.iter().map(|&i| self.cost[i]).collect(),
            gain: ids.iter().map(|&i| self.gain[i]).collect(),
            shadow,
            graph: self.graph.induced(ids),
            area_ratio: self.area_ratio,
        })
    }
}

/// A selection with its metrics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Solution {
    pub selected: Vec<bool>,
    pub objective: f64,
    /// Shaded annual energy, Wh.
    pub annual_energy: f64,
    pub unshaded_energy: f64,
    pub shading_loss: f64,
    pub panel_count: usize,
    pub packing_density: f64,
}

impl Solution {
    pub fn evaluate(ctx: &ObjectiveContext, x: &[bool]) -> Solution {
        let ev = Evaluator::with_selection(ctx, x);
        let (mut shaded, mut unshaded) = (0.0, 0.0);
        for i in (0..ctx.n).filter(|&i| x[i]) {
            let e = ctx.energy_row(i);
            let acc = ev.acc_row(i);
            for k in 0..ctx.k {
                unshaded += e[k];
                shaded += e[k] * (FRAC_ONE as u64 - acc[k].min(FRAC_ONE as u64)) as f64 * INV_ONE;
            }
        }
        let panel_count = x.iter().filter(|&&b| b).count();
        Solution {
            selected: x.to_vec(),
            objective: ev.recompute(),
            annual_energy: shaded,
            unshaded_energy: unshaded,
            shading_loss: if unshaded > 0.0 { (1.0 - shaded / unshaded).clamp(0.0, 1.0) } else { 0.0 },
            panel_count,
            packing_density: panel_count as f64 * ctx.area_ratio,
        }
    }

    pub fn empty(ctx: &ObjectiveContext) -> Solution {
        Solution::evaluate(ctx, &vec![false; ctx.n])
    }

    pub fn selected_ids(&self) -> Vec<usize> {
        (0..self.selected.len()).filter(|&i| self.selected[i]).collect()
    }

    pub fn is_feasible(&self, graph: &ConflictGraph) -> bool {
        self.selected.len() == graph.num_nodes && graph.is_independent(&self.selected)
    }
}

/// Linear objective: shading ignored.
pub fn objective_unshaded(x: &[bool], ctx: &ObjectiveContext) -> f64 {
    (0..ctx.n).filter(|&i| x[i]).map(|i| ctx.gain[i]).sum()
}

/// Shaded objective with the per-sample shading sum capped at 1.
pub fn objective_shaded(x: &[bool], ctx: &ObjectiveContext) -> f64 {
    Evaluator::with_selection(ctx, x).recompute()
}

/// Incremental objective state for one selection.
#[derive(Debug, Clone)]
pub struct Evaluator<'a> {
    ctx: &'a ObjectiveContext,
    x: Vec<bool>,
    /// `n * k` fixed-point shading sums, diagonal included, for every panel.
    acc: Vec<u64>,
    /// Number of selected conflict neighbours.
    blocked: Vec<u32>,
    value: f64,
}

impl<'a> Evaluator<'a> {
    pub fn new(ctx: &'a ObjectiveContext) -> Self {
        let mut acc = vec![0u64; ctx.n * ctx.k];
        for i in 0..ctx.n {
            for (a, &d) in acc[i * ctx.k..(i + 1) * ctx.k].iter_mut().zip(ctx.shadow.diagonal_row_quantized(i)) {
                *a = d as u64;
            }
        }
        Evaluator {
            ctx,
            x: vec![false; ctx.n],
            acc,
            blocked: vec![0; ctx.n],
            value: 0.0,
        }
    }

    /// State for `x`; conflicts are allowed here but counted in `blocked`.
    pub fn with_selection(ctx: &'a ObjectiveContext, x: &[bool]) -> Self {
        let mut ev = Evaluator::new(ctx);
        for i in (0..ctx.n).filter(|&i| x[i]) {
            ev.apply(i);
        }
        ev.value = ev.recompute();
        ev
    }

    pub fn selection(&self) -> &[bool] {
        &self.x
    }

    pub fn is_selected(&self, i: usize) -> bool {
        self.x[i]
    }

    /// Running objective value.
    pub fn value(&self) -> f64 {
        self.value
    }

    /// True when no selected panel conflicts with `i`.
    pub fn is_free(&self, i: usize) -> bool {
        self.blocked[i] == 0
    }

    fn acc_row(&self, i: usize) -> &[u64] {
        &self.acc[i * self.ctx.k..(i + 1) * self.ctx.k]
    }

    /// Panel `i`'s own term given the current shading sums.
    pub fn own_term(&self, i: usize) -> f64 {
        let one = FRAC_ONE as u64;
        let lit: f64 = self
            .ctx
            .value_row(i)
            .iter()
            .zip(self.acc_row(i))
            .map(|(v, &a)| v * (one - a.min(one)) as f64)
            .sum();
        lit * INV_ONE - self.ctx.cost[i]
    }

    /// Full objective from the shading sums.
    pub fn recompute(&self) -> f64 {
        (0..self.ctx.n).filter(|&i| self.x[i]).map(|i| self.own_term(i)).sum()
    }

    /// Objective change from toggling `p`, without changing state.
    pub fn delta(&self, p: usize) -> f64 {
        let one = FRAC_ONE as u64;
        let k = self.ctx.k;
        let adding = !self.x[p];
        let mut others = 0.0;
        for pair in self.ctx.shadow.caster_pairs(p) {
            let i = pair.receiver;
            if !self.x[i] {
                continue;
            }
            let v = self.ctx.value_row(i);
            let acc = &self.acc[i * k..(i + 1) * k];
            let mut d = 0.0;
            for (&s, &f) in pair.samples.iter().zip(pair.fracs) {
                let (s, f) = (s as usize, f as u64);
                let a = acc[s];
                let changed = if adding {
                    (a + f).min(one) - a.min(one)
                } else {
                    a.min(one) - (a - f).min(one)
                };
                d += v[s] * changed as f64;
            }
            others += d;
        }
        let others = others * INV_ONE;
        if adding {
            self.own_term(p) - others
        } else {
            others - self.own_term(p)
        }
    }

    /// Toggles `p` and returns the objective change.
    pub fn flip(&mut self, p: usize) -> f64 {
        let d = self.delta(p);
        self.apply(p);
        self.value += d;
        d
    }

    fn apply(&mut self, p: usize) {
        let k = self.ctx.k;
        let adding = !self.x[p];
        self.x[p] = adding;
        for pair in self.ctx.shadow.caster_pairs(p) {
            let row = &mut self.acc[pair.receiver * k..(pair.receiver + 1) * k];
            for (&s, &f) in pair.samples.iter().zip(pair.fracs) {
                if adding {
                    row[s as usize] += f as u64;
                } else {
                    row[s as usize] -= f as u64;
                }
            }
        }
        for &q in self.ctx.graph.neighbors(p) {
            if adding {
                self.blocked[q as usize] += 1;
            } else {
                self.blocked[q as usize] -= 1;
            }
        }
    }

    /// Re-derives the running value from scratch to shed rounding drift.
    pub fn resync(&mut self) {
        self.value = self.recompute();
    }
}

/// `objective(x with p toggled) - objective(x)`; `scratch` must hold `x`.
pub fn objective_delta(flip: usize, scratch: &mut Evaluator<'_>) -> f64 {
    scratch.flip(flip)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverOptions {
    /// Largest problem handed to the exact solver.
    pub exact_cap: usize,
    pub node_limit: u64,
    /// Annealing moves per start.
    pub budget: usize,
    pub rng_seed: u64,
    /// Number of row-baseline seeds, best first, besides the greedy seed.
    pub max_row_seeds: usize,
    /// Fall back to local search when the exact solver hits its node limit.
    pub exact_fallback: bool,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            exact_cap: 30,
            node_limit: 5_000_000,
            budget: 100_000,
            rng_seed: 42,
            max_row_seeds: 3,
            exact_fallback: true,
        }
    }
}

/// Depth-first branch and bound. The bound adds the unshaded gain of every
/// remaining compatible candidate, which is valid because shading only ever
/// lowers values.
pub fn solve_exact(ctx: &ObjectiveContext, node_limit: u64) -> Result<Solution> {
    let mut order: Vec<usize> = (0..ctx.n).filter(|&i| ctx.gain[i] > 0.0).collect();
    order.sort_by(|&a, &b| ctx.gain[b].total_cmp(&ctx.gain[a]).then(a.cmp(&b)));
    let mut search = Search {
        ev: Evaluator::new(ctx),
        order,
        best: vec![false; ctx.n],
        best_value: 0.0,
        nodes: 0,
        limit: node_limit,
    };
    search.branch(0)?;
    Ok(Solution::evaluate(ctx, &search.best))
}

struct Search<'a> {
    ev: Evaluator<'a>,
    order: Vec<usize>,
    best: Vec<bool>,
    best_value: f64,
    nodes: u64,
    limit: u64,
}

impl Search<'_> {
    fn branch(&mut self, depth: usize) -> Result<()> {
        self.nodes += 1;
        if self.nodes > self.limit {
            return Err(Error::NotProvenOptimal { nodes: self.limit });
        }
        let value = self.ev.value();
        if value > self.best_value {
            self.best_value = value;
            self.best.copy_from_slice(self.ev.selection());
        }
        let gains = &self.ev.ctx.gain;
        let rest: f64 = self.order[depth..].iter().filter(|&&e| self.ev.is_free(e)).map(|&e| gains[e]).sum();
        if value + rest <= self.best_value + 1e-12 * (1.0 + self.best_value.abs()) {
            return Ok(());
        }
        let Some(pos) = (depth..self.order.len()).find(|&d| self.ev.is_free(self.order[d])) else {
            return Ok(());
        };
        let e = self.order[pos];
        self.ev.flip(e);
        let r = self.branch(pos + 1);
        self.ev.flip(e);
        r?;
        self.branch(pos + 1)
    }
}

/// Adds candidates by decreasing unshaded value whenever compatible and
/// still profitable given the shading of those already chosen.
pub fn greedy_seed(ctx: &ObjectiveContext) -> Solution {
    let mut order: Vec<usize> = (0..ctx.n).filter(|&i| ctx.gain[i] > 0.0).collect();
    order.sort_by(|&a, &b| ctx.gain[b].total_cmp(&ctx.gain[a]).then(a.cmp(&b)));
    let mut ev = Evaluator::new(ctx);
    for i in order {
        if ev.is_free(i) && ev.delta(i) > 0.0 {
            ev.flip(i);
        }
    }
    Solution::evaluate(ctx, ev.selection())
}

/// Simulated annealing from one seed; returns the best selection visited.
///
/// Moves pick a random candidate: selected ones are removed, compatible ones
/// added, and blocked ones swapped in by dropping their selected neighbours.
pub fn anneal(ctx: &ObjectiveContext, seed: &[bool], budget: usize, rng_seed: u64) -> Vec<bool> {
    let n = ctx.n;
    let mut ev = Evaluator::with_selection(ctx, seed);
    let mut best = ev.selection().to_vec();
    let mut best_value = ev.value();
    if n == 0 || budget == 0 {
        return best;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    let mut temp = initial_temperature(&mut ev, &mut rng);
    let alpha = (1e-4f64).powf(1.0 / budget as f64);
    let mut dropped: Vec<usize> = Vec::new();
    for step in 0..budget {
        let p = rng.random_range(0..n);
        let accept = |d: f64, rng: &mut ChaCha8Rng| d >= 0.0 || (temp > 0.0 && rng.random::<f64>() < (d / temp).exp());
        if ev.is_selected(p) || ev.is_free(p) {
            let d = ev.delta(p);
            if accept(d, &mut rng) {
                ev.flip(p);
            }
        } else {
            dropped.clear();
            dropped.extend(ctx.graph.neighbors(p).iter().map(|&q| q as usize).filter(|&q| ev.is_selected(q)));
            let mut d = 0.0;
            for &q in &dropped {
                d += ev.flip(q);
            }
            d += ev.flip(p);
            if !accept(d, &mut rng) {
                ev.flip(p);
                for &q in dropped.iter().rev() {
                    ev.flip(q);
                }
            }
        }
        if step % 4096 == 4095 {
            ev.resync();
        }
        if ev.value() > best_value + 1e-12 * (1.0 + best_value.abs()) {
            ev.resync();
            if ev.value() > best_value {
                best_value = ev.value();
                best.copy_from_slice(ev.selection());
            }
        }
        temp *= alpha;
    }
    best
}

/// 90th percentile of `|delta|` over 1000 random single flips.
fn initial_temperature(ev: &mut Evaluator<'_>, rng: &mut ChaCha8Rng) -> f64 {
    let n = ev.ctx.n;
    let mut d: Vec<f64> = (0..1000).map(|_| ev.delta(rng.random_range(0..n)).abs()).collect();
    let idx = 899;
    let (_, v, _) = d.select_nth_unstable_by(idx, |a, b| a.total_cmp(b));
    *v
}

/// Best-of multi-start annealing. Never returns less than the best seed.
pub fn solve_local_search(ctx: &ObjectiveContext, seeds: &[Solution], budget: usize, rng_seed: u64) -> Solution {
    let mut best = Solution::empty(ctx);
    for s in seeds {
        let s = Solution::evaluate(ctx, &s.selected);
        if s.objective > best.objective && s.is_feasible(&ctx.graph) {
            best = s;
        }
    }
    for (n, s) in seeds.iter().enumerate() {
        if !ctx.graph.is_independent(&s.selected) {
            continue;
        }
        let x = anneal(ctx, &s.selected, budget, rng_seed.wrapping_add(n as u64));
        let cand = Solution::evaluate(ctx, &x);
        if cand.objective > best.objective {
            best = cand;
        }
    }
    best
}

/// Exact search for small problems, seeded annealing otherwise.
pub fn solve(ctx: &ObjectiveContext, seeds: &[Solution], opts: &SolverOptions) -> Result<Solution> {
    if ctx.n <= opts.exact_cap {
        match solve_exact(ctx, opts.node_limit) {
            Ok(s) => return Ok(s),
            Err(e @ Error::NotProvenOptimal { .. }) if !opts.exact_fallback => return Err(e),
            Err(e) => log::warn!("{e}; falling back to local search"),
        }
    }
    let mut all = Vec::with_capacity(seeds.len() + 1);
    all.push(greedy_seed(ctx));
    all.extend(seeds.iter().cloned());
    Ok(solve_local_search(ctx, &all, opts.budget, opts.rng_seed))
}

/// Unshaded net value of each candidate under `generation` and `econ`.
pub fn unshaded_gains(generation: &GenerationTable, candidates: &[CandidatePanel], econ: &EconomicParams) -> Result<Vec<f64>> {
    let k = generation.g.first().map_or(0, Vec::len);
    let tariff = econ.lifetime_tariff(k)?;
    candidates
        .iter()
        .map(|c| {
            let row = generation.g.get(c.orientation).ok_or_else(|| invalid("candidate orientation has no generation row"))?;
            Ok(row.iter().zip(&tariff).map(|(g, t)| g * t).sum::<f64>() - econ.panel_cost)
        })
        .collect()
}

/// One full-row layout per (azimuth, tilt, shift) configuration, in order of
/// first appearance.
///
/// Rows are the grid rows of a configuration. Within a configuration the
/// rows are chosen by an exact maximum-weight independent set over whole
/// rows weighted by their unshaded gains; a row that conflicts with itself
/// is never chosen.
pub fn row_layouts(candidates: &[CandidatePanel], graph: &ConflictGraph, gains: &[f64]) -> Result<Vec<Vec<bool>>> {
    let n = candidates.len();
    if graph.num_nodes != n || gains.len() != n {
        return Err(invalid("candidates, graph and gains must agree"));
    }
    let mut groups: Vec<(crate::layout::PanelConfig, Vec<usize>)> = Vec::new();
    for (i, c) in candidates.iter().enumerate() {
        match groups.iter_mut().find(|g| g.0 == c.config) {
            Some(g) => g.1.push(i),
            None => groups.push((c.config, vec![i])),
        }
    }
    let mut out = Vec::with_capacity(groups.len());
    let mut row_of = vec![usize::MAX; n];
    for (_, members) in groups {
        let mut rows: Vec<(i32, Vec<usize>)> = Vec::new();
        for &i in &members {
            let r = candidates[i].grid.0;
            match rows.iter_mut().find(|row| row.0 == r) {
                Some(row) => row.1.push(i),
                None => rows.push((r, vec![i])),
            }
        }
        rows.sort_by_key(|r| r.0);
        for (ri, r) in rows.iter().enumerate() {
            for &i in &r.1 {
                row_of[i] = ri;
            }
        }
        let mut edges = Vec::new();
        let mut internal = vec![false; rows.len()];
        for (ri, r) in rows.iter().enumerate() {
            for &i in &r.1 {
                for &j in graph.neighbors(i) {
                    match row_of[j as usize] {
                        usize::MAX => {}
                        rj if rj == ri => internal[ri] = true,
                        rj => edges.push((ri, rj)),
                    }
                }
            }
        }
        let weights: Vec<f64> = rows
            .iter()
            .enumerate()
            .map(|(ri, r)| if internal[ri] { 0.0 } else { r.1.iter().map(|&i| gains[i]).sum() })
            .collect();
        let row_ctx = ObjectiveContext::new(
            weights,
            vec![0.0; rows.len()],
            &[1.0],
            ShadowMatrix::empty(rows.len(), 1),
            ConflictGraph::from_edges(rows.len(), edges),
        )?;
        let picked = solve_exact(&row_ctx, u64::MAX)?;
        let mut x = vec![false; n];
        for ri in picked.selected_ids() {
            for &i in &rows[ri].1 {
                x[i] = true;
            }
        }
        for r in &rows {
            for &i in &r.1 {
                row_of[i] = usize::MAX;
            }
        }
        out.push(x);
    }
    Ok(out)
}

/// Row layouts scored with the shaded objective, best first. `candidates[i]`
/// is context candidate `i`.
pub fn row_baselines(candidates: &[CandidatePanel], ctx: &ObjectiveContext) -> Result<Vec<Solution>> {
    let mut out: Vec<Solution> = row_layouts(candidates, &ctx.graph, &ctx.gain)?
        .iter()
        .map(|x| Solution::evaluate(ctx, x))
        .collect();
    out.sort_by(|a, b| b.objective.total_cmp(&a.objective));
    Ok(out)
}

/// Best full-row layout over all configurations; empty when nothing fits.
pub fn parallel_row_baseline(candidates: &[CandidatePanel], ctx: &ObjectiveContext) -> Result<Solution> {
    let best = row_baselines(candidates, ctx)?.into_iter().next();
    Ok(best.filter(|s| s.objective > 0.0).unwrap_or_else(|| Solution::empty(ctx)))
}
