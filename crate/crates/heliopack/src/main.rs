use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use heliopack::config::PipelineConfig;
use heliopack::error::{Error, Result};
use heliopack::parallel::init_thread_pool;
use heliopack::pipeline::{run_pipeline, run_segment};
use heliopack::sweep::{run_sweep, SweepOptions, DEFAULT_ANGLES};
use heliopack::validate;

/// Shading-aware rooftop PV layout optimization.
#[derive(Parser)]
#[command(name = "heliopack", version, about)]
struct Cli {
    /// More log output (-v info, -vv debug).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    verbose: u8,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Extract rooftop polygons from an image.
    Segment {
        #[command(flatten)]
        run: RunArgs,
        /// Polygon file to write.
        #[arg(long, default_value = "roofs.json")]
        out: PathBuf,
    },
    /// Optimize the layout of every roof.
    Optimize {
        #[command(flatten)]
        run: RunArgs,
    },
    /// Rotation and latitude experiments, shaded and unshaded.
    Sweep {
        #[command(flatten)]
        run: RunArgs,
        /// Latitudes to run; defaults to the configured site.
        #[arg(long, value_delimiter = ',')]
        latitudes: Vec<f64>,
        /// Long-axis angles in degrees.
        #[arg(long, value_delimiter = ',')]
        angles: Vec<f64>,
        /// Add an unshaded run with 16 azimuth options.
        #[arg(long)]
        azimuths16: bool,
        /// Skip the per-run SVGs.
        #[arg(long)]
        no_svg: bool,
    },
    /// Run the built-in property oracles.
    Validate {
        #[arg(long, default_value_t = 42)]
        seed: u64,
    },
}

/// Inputs and overrides shared by the pipeline verbs; flags win over the
/// config file.
#[derive(Args)]
struct RunArgs {
    /// TOML or JSON run configuration.
    #[arg(short, long)]
    config: Option<PathBuf>,
    #[arg(long)]
    polygon: Option<PathBuf>,
    #[arg(long)]
    raster: Option<PathBuf>,
    /// Hourly weather CSV.
    #[arg(long)]
    weather: Option<PathBuf>,
    /// Use the built-in clear-sky year.
    #[arg(long)]
    synthetic_weather: bool,
    #[arg(long, allow_hyphen_values = true)]
    latitude: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    longitude: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    utc_offset: Option<f64>,
    /// Rotate the roof's long axis to this angle from east, degrees.
    #[arg(long)]
    rotation: Option<f64>,
    /// Ignore shading and optimize the linear objective.
    #[arg(long)]
    no_shading: bool,
    /// Number of evenly spaced azimuth options.
    #[arg(long)]
    azimuths: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Annealing moves per solve.
    #[arg(long)]
    budget: Option<usize>,
    /// Largest problem handed to the exact solver.
    #[arg(long)]
    exact_cap: Option<usize>,
    #[arg(long)]
    region_cap: Option<usize>,
    #[arg(long)]
    sweeps: Option<usize>,
    /// Meters per pixel of the raster input.
    #[arg(long)]
    resolution: Option<f64>,
    #[arg(long)]
    red_band: Option<usize>,
    #[arg(long)]
    nir_band: Option<usize>,
    #[arg(short, long)]
    output: Option<PathBuf>,
    /// Write the candidate panels as JSON.
    #[arg(long)]
    dump_candidates: bool,
    /// Write the optimization problem as JSON.
    #[arg(long)]
    dump_problem: bool,
    /// Write the region decomposition as JSON.
    #[arg(long)]
    region_dump: bool,
    /// Shadow matrix cache file.
    #[arg(long)]
    shadow_cache: Option<PathBuf>,
}

impl RunArgs {
    fn config(self) -> Result<PipelineConfig> {
        let mut c = match &self.config {
            Some(p) => PipelineConfig::load(p)?,
            None => PipelineConfig::default(),
        };
        if self.polygon.is_some() || self.raster.is_some() {
            c.polygon = self.polygon;
            c.raster = self.raster;
        }
        if self.weather.is_some() {
            c.weather = self.weather;
        }
        c.synthetic_weather |= self.synthetic_weather;
        c.site.latitude = self.latitude.unwrap_or(c.site.latitude);
        c.site.longitude = self.longitude.unwrap_or(c.site.longitude);
        c.site.utc_offset = self.utc_offset.unwrap_or(c.site.utc_offset);
        c.rotation = self.rotation.or(c.rotation);
        if self.no_shading {
            c.shading.enabled = false;
        }
        if let Some(n) = self.azimuths {
            if n == 0 {
                return Err(Error::Config("--azimuths must be positive".into()));
            }
            c.grid = c.grid.with_azimuth_count(n);
        }
        c.solver.rng_seed = self.seed.unwrap_or(c.solver.rng_seed);
        c.solver.budget = self.budget.unwrap_or(c.solver.budget);
        c.solver.exact_cap = self.exact_cap.unwrap_or(c.solver.exact_cap);
        let d = &mut c.decomposition;
        d.max_candidates_per_region = self.region_cap.unwrap_or(d.max_candidates_per_region);
        d.sweeps = self.sweeps.unwrap_or(d.sweeps);
        let s = &mut c.segmentation;
        s.resolution = self.resolution.or(s.resolution);
        s.red_band = self.red_band.or(s.red_band);
        s.nir_band = self.nir_band.or(s.nir_band);
        c.output = self.output.unwrap_or(c.output);
        c.dump_candidates |= self.dump_candidates;
        c.dump_problem |= self.dump_problem;
        c.region_dump |= self.region_dump;
        c.shadow_cache = self.shadow_cache.or(c.shadow_cache);
        Ok(c)
    }
}

fn run(command: Command) -> Result<bool> {
    match command {
        Command::Segment { run, out } => {
            let cfg = run.config()?;
            let roofs = run_segment(&cfg, &out)?;
            println!("{} roofs written to {}", roofs.len(), out.display());
        }
        Command::Optimize { run } => {
            let cfg = run.config()?;
            for r in run_pipeline(&cfg)? {
                let r = r.report;
                println!(
                    "{} [{}]: {} panels, {:.6e} Wh/yr, objective {:.2}, shading loss {:.2}%, {:+.2} vs rows",
                    r.roof,
                    r.mode,
                    r.panel_count,
                    r.annual_energy_wh,
                    r.objective,
                    100.0 * r.shading_loss,
                    r.gap_vs_rows
                );
            }
            println!("results in {}", cfg.output.display());
        }
        Command::Sweep {
            run,
            latitudes,
            angles,
            azimuths16,
            no_svg,
        } => {
            let cfg = run.config()?;
            let opts = SweepOptions {
                latitudes,
                angles: if angles.is_empty() { DEFAULT_ANGLES.to_vec() } else { angles },
                azimuths16,
                svg: !no_svg,
            };
            let reports = run_sweep(&cfg, &opts)?;
            let failed = reports.iter().filter(|r| r.error.is_some()).count();
            println!("{} runs ({failed} failed), table in {}", reports.len(), cfg.output.join("sweep.csv").display());
        }
        Command::Validate { seed } => {
            let checks = validate::run_all(seed);
            for c in &checks {
                println!("{c}");
            }
            return Ok(checks.iter().all(|c| c.passed));
        }
    }
    Ok(true)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    if let Err(msg) = init_thread_pool() {
        eprintln!("error: {msg}");
        return ExitCode::from(1);
    }
    match run(cli.command) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
