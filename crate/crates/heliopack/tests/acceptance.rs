//! Acceptance suite: one PASS/FAIL line per criterion, non-zero exit when
//! any fails.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use heliopack::config::PipelineConfig;
use heliopack::pipeline::{optimize_roof, run_pipeline, time_samples, RoofRun};
use heliopack::report::RunReport;
use heliopack::sweep::{run_sweep, SweepOptions};
use heliopack::validate::{sampling_oracle, shading_oracle, solver_oracle};
use heliopack_core::geom::{contains_convex, setback_region, RoofPolygon};
use heliopack_core::layout::{generate_candidates, panels_conflict};

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(name)
}

fn config(name: &str, out: &Path) -> PipelineConfig {
    let mut cfg = PipelineConfig::load(&fixture(&format!("{name}.toml"))).expect("fixture config");
    cfg.output = out.to_path_buf();
    cfg
}

struct Suite {
    failed: usize,
}

impl Suite {
    fn report(&mut self, n: usize, name: &str, passed: bool, detail: impl std::fmt::Display) {
        println!("{} criterion {n:>2} {name}: {detail}", if passed { "PASS" } else { "FAIL" });
        if !passed {
            self.failed += 1;
        }
    }
}

/// Checks a run's layout pair by pair and panel by panel, independently of
/// the conflict graph the solver used.
fn feasible(run: &RoofRun, cfg: &PipelineConfig) -> bool {
    let chosen: Vec<_> = run.solution.selected_ids().into_iter().map(|i| &run.candidates[i]).collect();
    let region = setback_region(&run.roof, cfg.grid.boundary_setback, cfg.grid.obstacle_setback);
    let inside = chosen.iter().all(|c| contains_convex(&region, &c.footprint, 1e-6));
    let apart = chosen
        .iter()
        .enumerate()
        .all(|(a, p)| chosen[a + 1..].iter().all(|q| !panels_conflict(p, q, cfg.grid.access_clearance)));
    inside && apart
}

fn find<'a>(reports: &'a [RunReport], lat: f64, angle: f64, mode: &str) -> &'a RunReport {
    reports
        .iter()
        .find(|r| r.latitude == lat && r.rotation == Some(angle) && r.mode == mode)
        .expect("sweep entry")
}

/// `a >= b` up to the rounding left by rotating the roof.
fn at_least(a: f64, b: f64) -> bool {
    a >= b * (1.0 - 1e-9)
}

fn files(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut v: Vec<_> = fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (e.file_name().to_string_lossy().into_owned(), fs::read(e.path()).unwrap())
        })
        .collect();
    v.sort();
    v
}

/// Smallest open square roof with at least `n` candidates under `cfg`.
fn roof_with_candidates(cfg: &PipelineConfig, n: usize) -> (RoofPolygon, usize) {
    let mut side = 3.0;
    loop {
        let roof = RoofPolygon::rectangle(0.0, 0.0, side, side);
        let count = generate_candidates(&roof, &cfg.panel, &cfg.grid).map(|c| c.len()).unwrap_or(0);
        if count >= n {
            return (roof, count);
        }
        side += 0.1;
    }
}

fn main() -> ExitCode {
    let _ = env_logger::builder().is_test(true).try_init();
    let mut suite = Suite { failed: 0 };
    let tmp = tempfile::tempdir().unwrap();
    let mut feasibility: Vec<(String, bool)> = Vec::new();
    let mut shaded_losses: Vec<(String, f64)> = Vec::new();

    let t = Instant::now();
    let c = solver_oracle(100, 100_000, 2024);
    let secs = t.elapsed().as_secs_f64();
    suite.report(1, "solver oracle", c.passed && secs < 300.0, format!("{}, {secs:.1} s", c.detail));

    let t = Instant::now();
    let (c, worst) = shading_oracle(50, 100_000, 2024);
    let secs = t.elapsed().as_secs_f64();
    suite.report(2, "shading oracle", c.passed && worst <= 0.02 && secs < 120.0, format!("{}, {secs:.1} s", c.detail));

    let c = sampling_oracle(&[0.0, 25.0, 47.0]);
    suite.report(3, "time sampling", c.passed, c.detail);

    let cluttered_cfg = config("cluttered_small", &tmp.path().join("cluttered"));
    let large_cfg = config("open_large", &tmp.path().join("large"));
    let cluttered = run_pipeline(&cluttered_cfg).expect("cluttered run");
    let large = run_pipeline(&large_cfg).expect("large run");
    for (name, runs, cfg) in [("cluttered_small", &cluttered, &cluttered_cfg), ("open_large", &large, &large_cfg)] {
        feasibility.push((name.into(), feasible(&runs[0], cfg)));
        shaded_losses.push((name.into(), runs[0].report.shading_loss));
    }
    let (c, l) = (&cluttered[0].report, &large[0].report);
    suite.report(
        4,
        "row baseline dominance",
        c.energy_gain_vs_rows() >= 0.10 && l.gap_vs_rows >= 0.0,
        format!(
            "cluttered energy {:+.1}% vs rows; open large energy {:+.1}%, objective gap {:+.1}",
            100.0 * c.energy_gain_vs_rows(),
            100.0 * l.energy_gain_vs_rows(),
            l.gap_vs_rows
        ),
    );

    let mut rect_cfg = config("open_rect", &tmp.path().join("rect"));
    rect_cfg.solver.rng_seed = 7;
    let opts = SweepOptions {
        latitudes: vec![25.0, 47.0],
        angles: vec![0.0, 45.0],
        azimuths16: false,
        svg: false,
    };
    let sweep = run_sweep(&rect_cfg, &opts).expect("rectangle sweep");
    for r in &sweep {
        feasibility.push((format!("open_rect lat {} rot {:?} {}", r.latitude, r.rotation, r.mode), r.error.is_none()));
        if r.mode == "shaded" {
            shaded_losses.push((format!("open_rect lat {} rot {:?}", r.latitude, r.rotation), r.shading_loss));
        }
    }

    let north = find(&sweep, 47.0, 0.0, "shaded");
    let (mode_az, share) = north.azimuth_histogram.mode().unwrap_or((f64::NAN, 0.0));
    let equator = north.azimuth_histogram.get(180.0) as f64 / north.panel_count.max(1) as f64;
    suite.report(
        5,
        "azimuth concentration",
        equator >= 0.5 && equator >= share,
        format!("azimuth 180 holds {:.0}% of {} panels, largest bin {mode_az} at {:.0}%", 100.0 * equator, north.panel_count, 100.0 * share),
    );

    let worst = shaded_losses.iter().map(|l| l.1).fold(0.0, f64::max);
    let mean = shaded_losses.iter().map(|l| l.1).sum::<f64>() / shaded_losses.len() as f64;
    suite.report(
        6,
        "shading loss",
        mean <= 0.05 && worst <= 0.05,
        format!("mean {:.2}%, worst {:.2}% over {} shaded runs", 100.0 * mean, 100.0 * worst, shaded_losses.len()),
    );

    let lat = rect_cfg.site.latitude;
    let d = |angle, mode| find(&sweep, lat, angle, mode).packing_density;
    let (u0, u45, s0, s45) = (d(0.0, "unshaded"), d(45.0, "unshaded"), d(0.0, "shaded"), d(45.0, "shaded"));
    let at47 = |angle, mode| find(&sweep, 47.0, angle, mode).packing_density;
    suite.report(
        7,
        "density inversion",
        at_least(u45, u0) && at_least(s0, s45),
        format!(
            "latitude {lat}: unshaded 0/45 = {u0:.4}/{u45:.4}, shaded 0/45 = {s0:.4}/{s45:.4} (latitude 47: unshaded {:.4}/{:.4}, shaded {:.4}/{:.4})",
            at47(0.0, "unshaded"),
            at47(45.0, "unshaded"),
            at47(0.0, "shaded"),
            at47(45.0, "shaded")
        ),
    );

    let mut c10_cfg = config("open_rect", &tmp.path().join("throughput"));
    c10_cfg.grid = Default::default();
    c10_cfg.solver = Default::default();
    let (roof, count) = roof_with_candidates(&c10_cfg, 600);
    c10_cfg.decomposition.max_candidates_per_region = count;
    let t = Instant::now();
    let samples = time_samples(&c10_cfg, c10_cfg.site.latitude).expect("samples");
    let region = optimize_roof(&roof, &samples, &c10_cfg, "region", "shaded").expect("600-candidate region");
    let secs = t.elapsed().as_secs_f64();
    feasibility.push(("600-candidate region".into(), feasible(&region, &c10_cfg)));

    let bad: Vec<&str> = feasibility.iter().filter(|f| !f.1).map(|f| f.0.as_str()).collect();
    suite.report(
        8,
        "feasibility",
        bad.is_empty(),
        if bad.is_empty() { format!("{} solutions feasible", feasibility.len()) } else { format!("infeasible: {bad:?}") },
    );

    let sweep_opts = SweepOptions {
        angles: vec![0.0, 30.0],
        ..Default::default()
    };
    let mut outputs = Vec::new();
    for run in ["first", "second"] {
        let cfg = config("cluttered_small", &tmp.path().join(run));
        run_sweep(&cfg, &sweep_opts).expect("determinism sweep");
        outputs.push(files(&cfg.output));
    }
    let same = outputs[0] == outputs[1];
    suite.report(9, "determinism", same && outputs[0].len() >= 6, format!("{} files, identical: {same}", outputs[0].len()));

    suite.report(
        10,
        "throughput",
        secs <= 1200.0,
        format!(
            "{count} candidates, {} panels, shadow build and solve in {secs:.1} s on {} threads",
            region.report.panel_count,
            rayon::current_num_threads()
        ),
    );

    if suite.failed == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{} criteria failed", suite.failed);
        ExitCode::FAILURE
    }
}
