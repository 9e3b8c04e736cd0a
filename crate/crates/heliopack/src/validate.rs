//! Property oracles behind the `validate` verb: solvers against exhaustive
//! enumeration, shadow geometry against ray casting, time sampling against
//! the full hourly year.

use std::fmt;

use heliopack_core::geom::{Point, Point3};
use heliopack_core::layout::{panel_geometry, CandidatePanel, ConflictGraph, PanelConfig, PanelSpec};
use heliopack_core::opt::{greedy_seed, solve_exact, solve_local_search, ObjectiveContext};
use heliopack_core::shade::{shaded_fraction, ShadowMatrix};
use heliopack_core::solar::{
    build_time_samples, full_year_energy, generation_row, synthetic_clear_sky_year, PanelOrientation, Site, SunVector, DEFAULT_ALBEDO,
    DEFAULT_DERATE, DEFAULT_RATED_POWER,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

/// Outcome of one oracle.
#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

impl fmt::Display for Check {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {}: {}", if self.passed { "PASS" } else { "FAIL" }, self.name, self.detail)
    }
}

/// A random instance with `n` candidates, `k` samples, conflict density
/// `pe` and shadow density `ps`.
pub fn random_instance(seed: u64, n: usize, k: usize, pe: f64, ps: f64) -> ObjectiveContext {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut edges = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            if rng.random_bool(pe) {
                edges.push((i, j));
            }
        }
    }
    let mut entries = Vec::new();
    for i in 0..n {
        for j in 0..n {
            for kk in 0..k {
                if i != j && rng.random_bool(ps) {
                    entries.push((i, j, kk, rng.random_range(0.05..0.8)));
                }
            }
        }
    }
    let mut shadow = ShadowMatrix::from_entries(n, k, entries);
    for i in 0..n {
        if rng.random_bool(0.2) {
            let row: Vec<f64> = (0..k).map(|_| rng.random_range(0.0..0.3)).collect();
            shadow.set_diagonal(i, &row);
        }
    }
    let energy: Vec<f64> = (0..n * k).map(|_| rng.random_range(0.0..100.0)).collect();
    let cost: Vec<f64> = (0..n).map(|_| rng.random_range(50.0..300.0)).collect();
    let tariff = vec![1.0; k];
    ObjectiveContext::new(energy, cost, &tariff, shadow, ConflictGraph::from_edges(n, edges)).expect("valid instance")
}

/// Plain floating-point objective straight from the definition.
pub fn reference_objective(ctx: &ObjectiveContext, x: &[bool]) -> f64 {
    let n = ctx.num_candidates();
    let mut total = 0.0;
    for i in (0..n).filter(|&i| x[i]) {
        total -= ctx.cost(i);
        for (k, v) in ctx.value_row(i).iter().enumerate() {
            let s: f64 = ctx.shadow().diagonal(i, k) + (0..n).filter(|&j| j != i && x[j]).map(|j| ctx.shadow().get(i, j, k)).sum::<f64>();
            total += v * (1.0 - s.min(1.0));
        }
    }
    total
}

/// Best objective over every independent set.
pub fn enumerate_optimum(ctx: &ObjectiveContext) -> f64 {
    let n = ctx.num_candidates();
    let g = ctx.graph();
    let mut best = 0.0f64;
    let mut x = vec![false; n];
    for mask in 0u32..(1 << n) {
        for (i, b) in x.iter_mut().enumerate() {
            *b = mask >> i & 1 == 1;
        }
        if g.is_independent(&x) {
            best = best.max(reference_objective(ctx, &x));
        }
    }
    best
}

/// Exact solver against enumeration and local search against the optimum
/// on `instances` random problems with at most 15 candidates.
pub fn solver_oracle(instances: usize, budget: usize, seed: u64) -> Check {
    let results: Vec<(bool, f64)> = (0..instances)
        .into_par_iter()
        .map(|t| {
            let s = seed.wrapping_add(t as u64);
            let n = 6 + t % 10;
            let ctx = random_instance(s, n, 6, 0.25, 0.15);
            let opt = enumerate_optimum(&ctx);
            let exact = solve_exact(&ctx, u64::MAX).map(|s| reference_objective(&ctx, &s.selected)).unwrap_or(f64::NAN);
            let exact_ok = (exact - opt).abs() <= 1e-9 * opt.abs().max(1.0);
            let local = solve_local_search(&ctx, &[greedy_seed(&ctx)], budget, s);
            let ratio = if opt > 0.0 { reference_objective(&ctx, &local.selected) / opt } else { 1.0 };
            (exact_ok && ctx.graph().is_independent(&local.selected), ratio)
        })
        .collect();
    let exact_ok = results.iter().filter(|r| r.0).count();
    let worst = results.iter().map(|r| r.1).fold(1.0, f64::min);
    Check {
        name: "solvers",
        passed: exact_ok == instances && worst >= 0.99,
        detail: format!("exact optimal on {exact_ok}/{instances}, worst local/optimal ratio {worst:.4}"),
    }
}

/// Fraction of receiver points whose ray toward the sun hits the caster.
pub fn monte_carlo_fraction(caster: &CandidatePanel, receiver: &CandidatePanel, sun: &SunVector, rays: usize, seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let [r0, r1, _, r3] = receiver.corners3d;
    let [c0, c1, _, c3] = caster.corners3d;
    let (u, v) = (c1 - c0, c3 - c0);
    let n = u.cross(v);
    let s = sun.unit_vector;
    let denom = s.dot(n);
    if denom.abs() < 1e-12 {
        return 0.0;
    }
    let mut hits = 0usize;
    for _ in 0..rays {
        let p: Point3 = r0 + (r1 - r0) * rng.random::<f64>() + (r3 - r0) * rng.random::<f64>();
        let t = (c0 - p).dot(n) / denom;
        if t <= 0.0 {
            continue;
        }
        let q = p + s * t - c0;
        let (a, b) = (q.dot(u) / u.dot(u), q.dot(v) / v.dot(v));
        if (0.0..=1.0).contains(&a) && (0.0..=1.0).contains(&b) {
            hits += 1;
        }
    }
    hits as f64 / rays as f64
}

/// A caster just south of a receiver, both random orientations, with a sun
/// in front of the receiver.
pub fn random_shading_fixture(seed: u64) -> (CandidatePanel, CandidatePanel, SunVector) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let spec = PanelSpec::default();
    let cfg = |rng: &mut ChaCha8Rng| PanelConfig {
        azimuth: rng.random_range(90.0..270.0),
        tilt: rng.random_range(5.0..45.0),
        shift: 0,
    };
    let receiver = panel_geometry(&spec, cfg(&mut rng), Point::new(0.0, 0.0));
    loop {
        let anchor = Point::new(rng.random_range(-1.5..1.5), rng.random_range(-3.0..-1.2));
        let caster = panel_geometry(&spec, cfg(&mut rng), anchor);
        let sun = SunVector::from_angles(rng.random_range(120.0..240.0), rng.random_range(8.0..50.0));
        if sun.unit_vector.dot(receiver.normal()) > 0.05 && sun.unit_vector.dot(caster.normal()) > 0.05 {
            return (caster, receiver, sun);
        }
    }
}

/// Exact shaded fractions against ray casting on `fixtures` random setups.
/// Returns the check and the largest absolute difference.
pub fn shading_oracle(fixtures: usize, rays: usize, seed: u64) -> (Check, f64) {
    let diffs: Vec<(f64, f64)> = (0..fixtures)
        .into_par_iter()
        .map(|t| {
            let (c, r, sun) = random_shading_fixture(seed.wrapping_add(t as u64));
            let exact = shaded_fraction(&c, &r, &sun);
            ((exact - monte_carlo_fraction(&c, &r, &sun, rays, seed ^ t as u64)).abs(), exact)
        })
        .collect();
    let worst = diffs.iter().map(|d| d.0).fold(0.0, f64::max);
    let shaded = diffs.iter().filter(|d| d.1 > 0.0).count();
    let check = Check {
        name: "shading",
        passed: worst <= 0.02,
        detail: format!("{fixtures} fixtures ({shaded} shaded), max |exact - ray cast| {worst:.4}"),
    };
    (check, worst)
}

/// Relative error of the sampled annual energy of a flat panel against the
/// full hourly synthetic year at `latitude`.
pub fn sampling_error(latitude: f64) -> f64 {
    let site = Site::at(latitude, 0.0);
    let year = synthetic_clear_sky_year(&site, 2023).expect("non-leap year");
    let samples = build_time_samples(&site, &year).expect("complete year");
    let flat = PanelOrientation::new(180.0, 0.0);
    let sampled: f64 = generation_row(&flat, &samples, DEFAULT_RATED_POWER, DEFAULT_DERATE, DEFAULT_ALBEDO).iter().sum();
    let full = full_year_energy(&site, &flat, &year, DEFAULT_RATED_POWER, DEFAULT_DERATE, DEFAULT_ALBEDO);
    (sampled - full).abs() / full
}

pub fn sampling_oracle(latitudes: &[f64]) -> Check {
    let errs: Vec<f64> = latitudes.iter().map(|&l| sampling_error(l)).collect();
    let worst = errs.iter().copied().fold(0.0, f64::max);
    Check {
        name: "time sampling",
        passed: worst <= 0.05,
        detail: format!(
            "relative error {} at latitudes {latitudes:?}",
            errs.iter().map(|e| format!("{e:.4}")).collect::<Vec<_>>().join(", ")
        ),
    }
}

/// Every oracle at reduced size, for the command line.
pub fn run_all(seed: u64) -> Vec<Check> {
    vec![solver_oracle(30, 100_000, seed), shading_oracle(20, 20_000, seed).0, sampling_oracle(&[0.0, 25.0, 47.0])]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reference_objective_by_hand() {
        let shadow = ShadowMatrix::from_entries(2, 1, [(0, 1, 0, 0.25)]);
        let ctx = ObjectiveContext::new(vec![100.0, 100.0], vec![10.0, 10.0], &[1.0], shadow, ConflictGraph::from_edges(2, [])).unwrap();
        assert_eq!(reference_objective(&ctx, &[true, false]), 90.0);
        assert_eq!(reference_objective(&ctx, &[true, true]), 75.0 - 10.0 + 90.0);
        assert_eq!(enumerate_optimum(&ctx), 155.0);
    }

    #[test]
    fn ray_cast_of_a_flat_overhead_caster() {
        let spec = PanelSpec::default();
        let flat = PanelConfig { azimuth: 180.0, tilt: 0.0, shift: 0 };
        let r = panel_geometry(&spec, flat, Point::new(0.0, 0.0));
        let mut c = r.clone();
        for p in &mut c.corners3d {
            p.z += 1.0;
        }
        let sun = SunVector::from_angles(180.0, 90.0);
        assert!((monte_carlo_fraction(&c, &r, &sun, 2000, 1) - 1.0).abs() < 1e-12);
        assert_eq!(monte_carlo_fraction(&r, &c, &sun, 2000, 1), 0.0);
    }

    #[test]
    fn quick_oracles_pass() {
        for c in [solver_oracle(8, 20_000, 3), shading_oracle(5, 20_000, 3).0, sampling_oracle(&[25.0])] {
            assert!(c.passed, "{c}");
        }
    }
}
