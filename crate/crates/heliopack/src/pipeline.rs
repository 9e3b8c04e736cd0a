//! The end-to-end run: roofs and weather in, layouts and reports out.

use std::path::Path;
use std::time::Instant;

use heliopack_core::decomp::{
    build_visibility_graph, partition_regions, sample_boundary, sequential_optimize, walktrap_communities, GeometricProblem,
    RegionPartition, RegionProblem, SequentialOptions, VisibilityGraph,
};
use heliopack_core::geom::{contains_convex, ring_edges, rotate_roof, setback_region, Point, RoofPolygon};
use heliopack_core::layout::{build_conflict_graph, generate_candidates, CandidatePanel, ConflictGraph};
use heliopack_core::opt::{row_layouts, solve, unshaded_gains, ObjectiveContext, Solution};
use heliopack_core::raster::{
    filter_regions, label_regions, morphological_gradient, ndvi_mask, otsu_threshold, regions_to_polygons, shadow_mask,
    threshold_and_fill, RasterImage, StructuringKernel,
};
use heliopack_core::shade::{shaded_fraction, ShadowOptions};
use heliopack_core::solar::{baseline_generation, build_time_samples, synthetic_clear_sky_year, GenerationTable, TimeSampleSet};
use rayon::prelude::*;
use serde::Serialize;

use crate::config::{PipelineConfig, SegmentationConfig};
use crate::error::{Error, Result, Stage, StageExt};
use crate::formats::{
    read_polygons, read_raster, read_shadow_cache, read_weather_csv, shadow_cache_key, write_atomic, write_candidates,
    write_json, write_shadow_cache, ProblemDump, RegionDump,
};
use crate::parallel::RayonBuilder;
use crate::report::{export_metrics, Histogram, RunReport};
use crate::svg::render_svg;

/// Extracts rooftop polygons from imagery.
pub fn segment(image: &RasterImage, cfg: &SegmentationConfig) -> Result<Vec<RoofPolygon>> {
    let grad = morphological_gradient(image, &StructuringKernel::disk(cfg.kernel_radius)).stage(Stage::Raster)?;
    let thr = cfg.threshold.unwrap_or_else(|| otsu_threshold(&grad));
    let mask = threshold_and_fill(&grad, thr).stage(Stage::Raster)?;
    let mut exclusion = None;
    if let (Some(red), Some(nir)) = (cfg.red_band, cfg.nir_band) {
        exclusion = Some(ndvi_mask(image, red, nir, cfg.ndvi_threshold).stage(Stage::Raster)?);
    }
    if !cfg.shadow_lengths.is_empty() {
        let dark = shadow_mask(image, &cfg.shadow_lengths, cfg.shadow_threshold).stage(Stage::Raster)?;
        exclusion = Some(match exclusion {
            Some(e) => e.union(&dark),
            None => dark,
        });
    }
    let regions = label_regions(&mask, image.resolution);
    let kept = filter_regions(&regions, cfg.min_area, cfg.max_elongation).stage(Stage::Raster)?;
    log::info!("segmentation: {} regions, {} kept", regions.len(), kept.len());
    regions_to_polygons(&kept, image.width, image.height, image.resolution, exclusion.as_ref()).stage(Stage::Raster)
}

pub fn load_roofs(cfg: &PipelineConfig) -> Result<Vec<RoofPolygon>> {
    match (&cfg.polygon, &cfg.raster) {
        (Some(p), _) => read_polygons(p),
        (None, Some(r)) => segment(&read_raster(r, cfg.segmentation.resolution)?, &cfg.segmentation),
        (None, None) => Err(Error::Config("no input".into())),
    }
}

/// Representative samples at `latitude` (the configured site otherwise).
pub fn time_samples(cfg: &PipelineConfig, latitude: f64) -> Result<TimeSampleSet> {
    let mut site = cfg.site.site();
    site.latitude = latitude;
    let weather = match &cfg.weather {
        Some(path) => read_weather_csv(path)?,
        None => synthetic_clear_sky_year(&site, cfg.weather_year).stage(Stage::Solar)?,
    };
    build_time_samples(&site, &weather).stage(Stage::Solar)
}

/// Everything one roof's run produced.
#[derive(Debug, Clone)]
pub struct RoofRun {
    pub report: RunReport,
    /// The roof after rotation.
    pub roof: RoofPolygon,
    pub candidates: Vec<CandidatePanel>,
    pub solution: Solution,
    pub rows: Solution,
    pub regions: Option<RegionDump>,
    pub problem: Option<ProblemDump>,
}

/// Visibility graph with the sample spacing widened until it has at most
/// `max_nodes` nodes.
pub fn visibility_graph(roof: &RoofPolygon, spacing: f64, max_nodes: usize) -> Result<VisibilityGraph> {
    let perimeter: f64 = roof.rings().map(|r| ring_edges(r).map(|(a, b)| a.dist(b)).sum::<f64>()).sum();
    let mut s = spacing.max(perimeter / max_nodes.max(1) as f64);
    while sample_boundary(roof, s).stage(Stage::Geometry)?.len() > max_nodes {
        s *= 1.05;
    }
    if s > spacing {
        log::info!("visibility spacing widened to {s:.3} m");
    }
    build_visibility_graph(roof, s).stage(Stage::Geometry)
}

/// Annual shaded energy of a selection recomputed with unquantized
/// fractions.
pub fn recompute_energy(
    candidates: &[CandidatePanel],
    selected: &[bool],
    generation: &GenerationTable,
    samples: &TimeSampleSet,
    shading: Option<&ShadowOptions>,
) -> f64 {
    let chosen: Vec<&CandidatePanel> = candidates.iter().zip(selected).filter(|(_, &x)| x).map(|(c, _)| c).collect();
    chosen
        .par_iter()
        .map(|r| {
            let row = &generation.g[r.orientation];
            samples
                .samples
                .iter()
                .map(|s| {
                    let f = match shading {
                        Some(o) if s.sun.is_up() && s.sun.elevation >= o.min_elevation => chosen
                            .iter()
                            .filter(|c| c.id != r.id && c.anchor.dist(r.anchor) <= o.cull_distance)
                            .map(|c| shaded_fraction(c, r, &s.sun))
                            .sum::<f64>()
                            .min(1.0),
                        _ => 0.0,
                    };
                    row[s.k] * (1.0 - f)
                })
                .sum::<f64>()
        })
        .sum()
}

fn check_feasible(roof: &RoofPolygon, cfg: &PipelineConfig, candidates: &[CandidatePanel], graph: &ConflictGraph, x: &[bool]) -> Result<()> {
    let degenerate = |m: String| Error::Stage {
        stage: Stage::Optimize,
        source: heliopack_core::Error::Degenerate(m),
    };
    if !graph.is_independent(x) {
        return Err(degenerate("solution violates a conflict".into()));
    }
    let region = setback_region(roof, cfg.grid.boundary_setback, cfg.grid.obstacle_setback);
    for (c, _) in candidates.iter().zip(x).filter(|(_, &s)| s) {
        if !contains_convex(&region, &c.footprint, 1e-6) {
            return Err(degenerate(format!("panel {} leaves the setback region", c.id)));
        }
    }
    Ok(())
}

/// Runs layout, shading and optimization for one roof. `cfg.rotation`,
/// `cfg.shading` and `cfg.grid` select the variant; `mode` labels it.
pub fn optimize_roof(roof: &RoofPolygon, samples: &TimeSampleSet, cfg: &PipelineConfig, name: &str, mode: &str) -> Result<RoofRun> {
    let start = Instant::now();
    let roof = match cfg.rotation {
        Some(a) => rotate_roof(roof, a).stage(Stage::Geometry)?,
        None => roof.clone(),
    };
    let candidates = generate_candidates(&roof, &cfg.panel, &cfg.grid).stage(Stage::Layout)?;
    let graph = build_conflict_graph(&candidates, &cfg.grid);
    let n = candidates.len();
    log::info!("{name}: {n} candidates, {} conflicts", graph.edges.len());
    let generation = baseline_generation(&cfg.grid.orientations(), samples, cfg.panel.rated_power, cfg.derate).stage(Stage::Solar)?;
    let shading = cfg.shading.options();
    let physical = shading.unwrap_or_else(|| cfg.shading.shadow_options());
    let area_ratio = cfg.panel.area() / roof.area();
    let problem = GeometricProblem {
        candidates: &candidates,
        samples,
        generation: &generation,
        econ: &cfg.economics,
        graph: &graph,
        shading,
        area_ratio,
        builder: RayonBuilder,
    };
    let shaded_problem = GeometricProblem {
        shading: Some(physical),
        ..problem
    };

    let gains = unshaded_gains(&generation, &candidates, &cfg.economics).stage(Stage::Optimize)?;
    let layouts = row_layouts(&candidates, &graph, &gains).stage(Stage::Optimize)?;
    let mut rows: Vec<Solution> = layouts.par_iter().map(|x| problem.evaluate(x)).collect::<heliopack_core::Result<_>>().stage(Stage::Shade)?;
    rows.sort_by(|a, b| b.objective.total_cmp(&a.objective));
    let seeds = &rows[..rows.len().min(cfg.solver.max_row_seeds)];

    let cap = cfg.decomposition.max_candidates_per_region;
    let (mut solution, regions, dump) = if n <= cap {
        let ctx = whole_context(&problem, cfg)?;
        let dump = cfg.dump_problem.then(|| ProblemDump::from_context(&ctx));
        let s = solve(&ctx, seeds, &cfg.solver).stage(Stage::Optimize)?;
        (s, None, dump)
    } else {
        let vg = visibility_graph(&roof, cfg.decomposition.spacing, cfg.decomposition.max_nodes)?;
        let communities = walktrap_communities(&vg, cfg.decomposition.walk_length);
        let centroids: Vec<Point> = candidates.iter().map(|c| c.anchor).collect();
        let partition = partition_regions(&vg, &communities, &centroids, cap).stage(Stage::Optimize)?;
        log::info!("{name}: {} communities, {} regions", communities.len(), partition.num_regions());
        let opts = SequentialOptions {
            sweeps: cfg.decomposition.sweeps,
            solver: cfg.solver.clone(),
        };
        let out = sequential_optimize(&partition, &problem, seeds, &opts).stage(Stage::Optimize)?;
        if cfg.dump_problem {
            log::warn!("{name}: problem dump skipped, the roof was decomposed into {} regions", partition.num_regions());
        }
        (out.solution, Some(RegionDump::new(Some(&vg), &communities, &partition)), None)
    };
    let best_row = match rows.first() {
        Some(r) => r.clone(),
        None => problem.evaluate(&vec![false; n]).stage(Stage::Shade)?,
    };
    if best_row.objective > solution.objective {
        log::info!("{name}: best row layout {} beats the optimized {}, keeping rows", best_row.objective, solution.objective);
        solution = best_row.clone();
    }
    // metrics always come from a fresh evaluation of the final selection
    let solution = problem.evaluate(&solution.selected).stage(Stage::Shade)?;
    check_feasible(&roof, cfg, &candidates, &graph, &solution.selected)?;
    let physical_sol = match shading {
        Some(_) => solution.clone(),
        None => shaded_problem.evaluate(&solution.selected).stage(Stage::Shade)?,
    };
    let rows_physical = match shading {
        Some(_) => best_row.clone(),
        None => shaded_problem.evaluate(&best_row.selected).stage(Stage::Shade)?,
    };

    let exact = recompute_energy(&candidates, &solution.selected, &generation, samples, Some(&physical));
    if (exact - physical_sol.annual_energy).abs() > 1e-6 * exact.abs().max(1.0) {
        return Err(Error::Stage {
            stage: Stage::Report,
            source: heliopack_core::Error::Degenerate(format!("energy cross-check failed: {} vs {exact}", physical_sol.annual_energy)),
        });
    }

    let chosen = candidates.iter().zip(&solution.selected).filter(|(_, &x)| x).map(|(c, _)| c);
    let report = RunReport {
        roof: name.into(),
        latitude: cfg.site.latitude,
        rotation: cfg.rotation,
        mode: mode.into(),
        candidates: n,
        regions: regions.as_ref().map_or(1, |r| r.regions.len()),
        panel_count: solution.panel_count,
        annual_energy_wh: physical_sol.annual_energy,
        unshaded_energy_wh: physical_sol.unshaded_energy,
        objective: solution.objective,
        shaded_objective: physical_sol.objective,
        shading_loss: physical_sol.shading_loss,
        packing_density: solution.packing_density,
        rows_objective: best_row.objective,
        rows_panel_count: best_row.panel_count,
        rows_annual_energy_wh: rows_physical.annual_energy,
        gap_vs_rows: solution.objective - best_row.objective,
        azimuth_histogram: Histogram::count(&cfg.grid.azimuths, chosen.clone().map(|c| c.config.azimuth)),
        tilt_histogram: Histogram::count(&cfg.grid.tilts, chosen.map(|c| c.config.tilt)),
        error: None,
        runtime_seconds: start.elapsed().as_secs_f64(),
    };
    log::info!(
        "{name} [{mode}]: {} panels, objective {:.1}, loss {:.4}, {:.1} s",
        report.panel_count,
        report.objective,
        report.shading_loss,
        report.runtime_seconds
    );
    Ok(RoofRun {
        report,
        roof,
        candidates,
        solution,
        rows: best_row,
        regions,
        problem: dump,
    })
}

/// Whole-roof context, read from or written to the shadow cache when one
/// is configured.
fn whole_context(problem: &GeometricProblem<'_, RayonBuilder>, cfg: &PipelineConfig) -> Result<ObjectiveContext> {
    let all: Vec<usize> = (0..problem.candidates.len()).collect();
    let (Some(path), Some(opts)) = (&cfg.shadow_cache, &problem.shading) else {
        return problem.context(&all).stage(Stage::Shade);
    };
    let key = shadow_cache_key(problem.candidates, problem.graph, problem.samples, opts);
    if let Some(m) = read_shadow_cache(path, &key)? {
        log::info!("shadow matrix read from {}", path.display());
        let mut ctx = ObjectiveContext::from_generation(problem.generation, problem.candidates, problem.econ, m, problem.graph.clone())
            .stage(Stage::Shade)?;
        ctx.area_ratio = problem.area_ratio;
        return Ok(ctx);
    }
    let ctx = problem.context(&all).stage(Stage::Shade)?;
    write_shadow_cache(path, &key, ctx.shadow())?;
    Ok(ctx)
}

#[derive(Debug, Serialize)]
struct PanelOut {
    id: usize,
    azimuth: f64,
    tilt: f64,
    shift: usize,
    anchor: [f64; 2],
    footprint: [[f64; 2]; 4],
}

#[derive(Debug, Serialize)]
struct SolutionOut<'a> {
    roof: &'a str,
    mode: &'a str,
    rotation: Option<f64>,
    objective: f64,
    annual_energy_wh: f64,
    panel_count: usize,
    panels: Vec<PanelOut>,
}

fn solution_out(run: &RoofRun) -> SolutionOut<'_> {
    let r = run.report.rounded();
    SolutionOut {
        roof: &run.report.roof,
        mode: &run.report.mode,
        rotation: r.rotation,
        objective: r.objective,
        annual_energy_wh: r.annual_energy_wh,
        panel_count: r.panel_count,
        panels: run
            .candidates
            .iter()
            .zip(&run.solution.selected)
            .filter(|(_, &x)| x)
            .map(|(c, _)| PanelOut {
                id: c.id,
                azimuth: c.config.azimuth,
                tilt: c.config.tilt,
                shift: c.config.shift,
                anchor: [c.anchor.x, c.anchor.y],
                footprint: c.footprint.map(|p| [p.x, p.y]),
            })
            .collect(),
    }
}

/// Layout drawing of one run.
pub fn run_svg(run: &RoofRun, azimuths: &[f64]) -> String {
    let title = format!("{} {} rotation {:?}: {} panels", run.report.roof, run.report.mode, run.report.rotation, run.report.panel_count);
    render_svg(&run.roof, &run.candidates, &run.solution.selected, azimuths, &title)
}

/// Solution JSON, metrics, SVGs and requested dumps under `cfg.output`.
pub fn write_artifacts(cfg: &PipelineConfig, runs: &[RoofRun]) -> Result<()> {
    let dir = &cfg.output;
    let solutions: Vec<SolutionOut> = runs.iter().map(solution_out).collect();
    write_json(&dir.join("solution.json"), &solutions)?;
    let reports: Vec<RunReport> = runs.iter().map(|r| r.report.clone()).collect();
    export_metrics(dir, "metrics", &reports)?;
    for run in runs {
        let name = &run.report.roof;
        write_atomic(&dir.join(format!("layout_{name}.svg")), run_svg(run, &cfg.grid.azimuths).as_bytes())?;
        if cfg.dump_candidates {
            write_candidates(&dir.join(format!("candidates_{name}.json")), &run.candidates)?;
        }
        if let Some(p) = &run.problem {
            write_json(&dir.join(format!("problem_{name}.json")), p)?;
        }
        if cfg.region_dump {
            let d = run.regions.clone().unwrap_or_else(|| RegionDump::new(None, &[], &RegionPartition::single(run.candidates.len())));
            write_json(&dir.join(format!("regions_{name}.json")), &d)?;
        }
    }
    Ok(())
}

/// Validates `cfg`, optimizes every roof and writes the artifacts.
pub fn run_pipeline(cfg: &PipelineConfig) -> Result<Vec<RoofRun>> {
    cfg.validate()?;
    let roofs = load_roofs(cfg)?;
    let samples = time_samples(cfg, cfg.site.latitude)?;
    let mode = if cfg.shading.enabled { "shaded" } else { "unshaded" };
    let runs = roofs
        .iter()
        .enumerate()
        .map(|(n, r)| optimize_roof(r, &samples, cfg, &format!("roof{n}"), mode))
        .collect::<Result<Vec<_>>>()?;
    write_artifacts(cfg, &runs)?;
    Ok(runs)
}

/// Segments `cfg.raster` and writes the roofs to `out`.
pub fn run_segment(cfg: &PipelineConfig, out: &Path) -> Result<Vec<RoofPolygon>> {
    let Some(raster) = &cfg.raster else {
        return Err(Error::Config("segment needs a raster input".into()));
    };
    let roofs = segment(&read_raster(raster, cfg.segmentation.resolution)?, &cfg.segmentation)?;
    crate::formats::write_polygons(out, &roofs)?;
    Ok(roofs)
}
