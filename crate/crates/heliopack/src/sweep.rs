//! Rotation and latitude experiments.

use rayon::prelude::*;

use crate::config::PipelineConfig;
use crate::error::{Error, Result};
use crate::formats::write_atomic;
use crate::pipeline::{load_roofs, optimize_roof, run_svg, time_samples};
use crate::report::{export_metrics, RunReport};

pub const DEFAULT_ANGLES: [f64; 5] = [0.0, 22.5, 45.0, 67.5, 90.0];

#[derive(Debug, Clone, PartialEq)]
pub struct SweepOptions {
    /// Site latitudes; empty means the configured one.
    pub latitudes: Vec<f64>,
    /// Long-axis angles, degrees in `[0, 90]`.
    pub angles: Vec<f64>,
    /// Adds an unshaded run with 16 azimuth options.
    pub azimuths16: bool,
    pub svg: bool,
}

impl Default for SweepOptions {
    fn default() -> Self {
        SweepOptions {
            latitudes: Vec::new(),
            angles: DEFAULT_ANGLES.to_vec(),
            azimuths16: false,
            svg: true,
        }
    }
}

struct Entry {
    latitude: usize,
    angle: f64,
    roof: usize,
    mode: &'static str,
}

fn label(x: f64) -> String {
    format!("{x}").replace('-', "m")
}

/// Runs every (latitude, angle, roof, mode) combination in parallel and
/// writes `sweep.csv`, `sweep.json` and one SVG per run into `cfg.output`.
/// A failed run becomes a report row carrying its error.
pub fn run_sweep(cfg: &PipelineConfig, opts: &SweepOptions) -> Result<Vec<RunReport>> {
    cfg.validate()?;
    if opts.angles.is_empty() || opts.angles.iter().any(|a| !(0.0..=90.0).contains(a)) {
        return Err(Error::Config("sweep angles must lie in [0, 90]".into()));
    }
    let latitudes = if opts.latitudes.is_empty() { vec![cfg.site.latitude] } else { opts.latitudes.clone() };
    if latitudes.iter().any(|l| !(l.abs() <= 90.0)) {
        return Err(Error::Config("latitude out of range".into()));
    }
    let roofs = load_roofs(cfg)?;
    let samples = latitudes.par_iter().map(|&lat| time_samples(cfg, lat)).collect::<Result<Vec<_>>>()?;

    let mut modes = vec!["shaded", "unshaded"];
    if opts.azimuths16 {
        modes.push("unshaded16");
    }
    let mut entries = Vec::new();
    for latitude in 0..latitudes.len() {
        for &angle in &opts.angles {
            for roof in 0..roofs.len() {
                for &mode in &modes {
                    entries.push(Entry { latitude, angle, roof, mode });
                }
            }
        }
    }
    let results: Vec<(RunReport, Option<String>)> = entries
        .par_iter()
        .map(|e| {
            let mut c = cfg.clone();
            c.site.latitude = latitudes[e.latitude];
            c.rotation = Some(e.angle);
            c.shading.enabled = e.mode == "shaded";
            if e.mode == "unshaded16" {
                c.grid = c.grid.clone().with_azimuth_count(16);
            }
            let name = format!("roof{}", e.roof);
            match optimize_roof(&roofs[e.roof], &samples[e.latitude], &c, &name, e.mode) {
                Ok(run) => {
                    let svg = opts.svg.then(|| run_svg(&run, &c.grid.azimuths));
                    (run.report, svg)
                }
                Err(err) => {
                    log::warn!("{name} at latitude {} angle {} [{}]: {err}", c.site.latitude, e.angle, e.mode);
                    (RunReport::failed(&name, c.site.latitude, c.rotation, e.mode, &err), None)
                }
            }
        })
        .collect();

    let dir = &cfg.output;
    for (e, (report, svg)) in entries.iter().zip(&results) {
        if let Some(svg) = svg {
            let file = format!("sweep_lat{}_rot{}_{}_{}.svg", label(latitudes[e.latitude]), label(e.angle), e.mode, report.roof);
            write_atomic(&dir.join(file), svg.as_bytes())?;
        }
    }
    let reports: Vec<RunReport> = results.into_iter().map(|r| r.0).collect();
    export_metrics(dir, "sweep", &reports)?;
    Ok(reports)
}
