//! Run configuration: one TOML or JSON file, overridden by command-line flags.

use std::fs;
use std::path::{Path, PathBuf};

use heliopack_core::layout::{GridOptions, PanelSpec};
use heliopack_core::opt::{EconomicParams, SolverOptions};
use heliopack_core::raster::DEFAULT_RESOLUTION;
use heliopack_core::shade::ShadowOptions;
use heliopack_core::solar::{Site, DEFAULT_DERATE};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    /// Roof polygon file; exclusive with `raster`.
    pub polygon: Option<PathBuf>,
    /// Imagery to segment; exclusive with `polygon`.
    pub raster: Option<PathBuf>,
    pub site: SiteConfig,
    /// Hourly weather CSV.
    pub weather: Option<PathBuf>,
    /// Use the built-in clear-sky year instead of a weather file.
    pub synthetic_weather: bool,
    /// Year of the synthetic weather; must not be a leap year.
    pub weather_year: i32,
    /// Angle of the roof's long axis from east after rotation, degrees;
    /// unset keeps the input orientation.
    pub rotation: Option<f64>,
    pub derate: f64,
    pub grid: GridOptions,
    pub panel: PanelSpec,
    pub economics: EconomicParams,
    pub solver: SolverOptions,
    pub decomposition: DecompositionConfig,
    pub shading: ShadingConfig,
    pub segmentation: SegmentationConfig,
    pub output: PathBuf,
    pub dump_candidates: bool,
    pub dump_problem: bool,
    pub region_dump: bool,
    pub shadow_cache: Option<PathBuf>,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            polygon: None,
            raster: None,
            site: SiteConfig::default(),
            weather: None,
            synthetic_weather: false,
            weather_year: 2023,
            rotation: None,
            derate: DEFAULT_DERATE,
            grid: GridOptions::default(),
            panel: PanelSpec::default(),
            economics: EconomicParams::default(),
            solver: SolverOptions::default(),
            decomposition: DecompositionConfig::default(),
            shading: ShadingConfig::default(),
            segmentation: SegmentationConfig::default(),
            output: PathBuf::from("out"),
            dump_candidates: false,
            dump_problem: false,
            region_dump: false,
            shadow_cache: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SiteConfig {
    pub latitude: f64,
    pub longitude: f64,
    /// Hours ahead of UTC of the weather timestamps.
    pub utc_offset: f64,
}

impl Default for SiteConfig {
    fn default() -> Self {
        SiteConfig {
            latitude: 25.0,
            longitude: 0.0,
            utc_offset: 0.0,
        }
    }
}

impl SiteConfig {
    pub fn site(&self) -> Site {
        Site {
            latitude: self.latitude,
            longitude: self.longitude,
            utc_offset: self.utc_offset,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DecompositionConfig {
    pub max_candidates_per_region: usize,
    pub sweeps: usize,
    /// Boundary sample spacing of the visibility graph, meters.
    pub spacing: f64,
    pub walk_length: usize,
    /// The spacing is widened until the graph has at most this many nodes.
    pub max_nodes: usize,
}

impl Default for DecompositionConfig {
    fn default() -> Self {
        DecompositionConfig {
            max_candidates_per_region: 600,
            sweeps: 2,
            spacing: 0.5,
            walk_length: 4,
            max_nodes: 1200,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ShadingConfig {
    /// `false` optimizes the linear objective and ignores shading.
    pub enabled: bool,
    pub cull_distance: f64,
    pub min_elevation: f64,
}

impl Default for ShadingConfig {
    fn default() -> Self {
        let o = ShadowOptions::default();
        ShadingConfig {
            enabled: true,
            cull_distance: o.cull_distance,
            min_elevation: o.min_elevation,
        }
    }
}

impl ShadingConfig {
    pub fn options(&self) -> Option<ShadowOptions> {
        self.enabled.then(|| self.shadow_options())
    }

    /// The geometry settings, whether or not shading is enabled.
    pub fn shadow_options(&self) -> ShadowOptions {
        ShadowOptions {
            cull_distance: self.cull_distance,
            min_elevation: self.min_elevation,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SegmentationConfig {
    /// Meters per pixel; overrides any resolution stored in the image.
    pub resolution: Option<f64>,
    pub kernel_radius: usize,
    /// Gradient threshold; Otsu's method when unset.
    pub threshold: Option<f32>,
    /// Smallest kept region, m².
    pub min_area: f64,
    /// Largest kept max/min Feret ratio.
    pub max_elongation: f64,
    pub red_band: Option<usize>,
    pub nir_band: Option<usize>,
    pub ndvi_threshold: f64,
    /// Linear kernel lengths of the shadow index, pixels; empty disables it.
    pub shadow_lengths: Vec<usize>,
    pub shadow_threshold: f32,
}

impl Default for SegmentationConfig {
    fn default() -> Self {
        SegmentationConfig {
            resolution: None,
            kernel_radius: 3,
            threshold: None,
            min_area: 25.0,
            max_elongation: 10.0,
            red_band: None,
            nir_band: None,
            ndvi_threshold: 0.2,
            shadow_lengths: Vec::new(),
            shadow_threshold: 40.0,
        }
    }
}

impl SegmentationConfig {
    pub fn resolution_or_default(&self, stored: Option<f64>) -> f64 {
        self.resolution.or(stored).unwrap_or(DEFAULT_RESOLUTION)
    }
}

impl PipelineConfig {
    /// Reads a `.toml` or `.json` file. Relative paths inside it resolve
    /// against the file's directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut cfg: PipelineConfig = match path.extension().and_then(|e| e.to_str()) {
            Some("json") => serde_json::from_str(&text).map_err(|e| Error::parse(path, e))?,
            _ => toml::from_str(&text).map_err(|e| Error::parse(path, e))?,
        };
        if let Some(dir) = path.parent() {
            cfg.resolve_relative(dir);
        }
        Ok(cfg)
    }

    fn resolve_relative(&mut self, dir: &Path) {
        let fix = |p: &mut Option<PathBuf>| {
            if let Some(q) = p {
                if q.is_relative() {
                    *q = dir.join(&*q);
                }
            }
        };
        fix(&mut self.polygon);
        fix(&mut self.raster);
        fix(&mut self.weather);
        fix(&mut self.shadow_cache);
        if self.output.is_relative() {
            self.output = dir.join(&self.output);
        }
    }

    pub fn validate(&self) -> Result<()> {
        match (&self.polygon, &self.raster) {
            (Some(_), Some(_)) => return Err(Error::Config("give either a polygon or a raster input, not both".into())),
            (None, None) => return Err(Error::Config("an input polygon or raster is required".into())),
            _ => {}
        }
        for p in [&self.polygon, &self.raster, &self.weather].into_iter().flatten() {
            if !p.exists() {
                return Err(Error::Config(format!("{} does not exist", p.display())));
            }
        }
        if self.weather.is_none() && !self.synthetic_weather {
            return Err(Error::Config("a weather file or --synthetic-weather is required".into()));
        }
        if !(self.site.latitude.abs() <= 90.0) || !(self.site.longitude.abs() <= 180.0) {
            return Err(Error::Config("latitude or longitude out of range".into()));
        }
        if self.rotation.is_some_and(|r| !(0.0..180.0).contains(&r)) {
            return Err(Error::Config("rotation must be in [0, 180)".into()));
        }
        if self.decomposition.max_candidates_per_region == 0 || self.decomposition.sweeps == 0 {
            return Err(Error::Config("region cap and sweep count must be positive".into()));
        }
        if !(self.decomposition.spacing > 0.0) {
            return Err(Error::Config("visibility spacing must be positive".into()));
        }
        self.grid.validate().map_err(|e| Error::Config(e.to_string()))?;
        self.panel.validate().map_err(|e| Error::Config(e.to_string()))?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn toml_and_json_agree() {
        let dir = tempfile::tempdir().unwrap();
        let t = dir.path().join("run.toml");
        fs::write(
            &t,
            "polygon = \"roof.json\"\nsynthetic_weather = true\n[site]\nlatitude = 47.0\n[shading]\nenabled = false\n[economics]\ntariff = [1.0, 2.0]\n",
        )
        .unwrap();
        let a = PipelineConfig::load(&t).unwrap();
        assert_eq!(a.site.latitude, 47.0);
        assert!(!a.shading.enabled);
        assert_eq!(a.polygon, Some(dir.path().join("roof.json")));
        assert_eq!(a.output, dir.path().join("out"));
        assert_eq!(a.economics.tariff, heliopack_core::opt::Tariff::PerSample(vec![1.0, 2.0]));

        let j = dir.path().join("run.json");
        fs::write(&j, serde_json::to_string(&a).unwrap()).unwrap();
        assert_eq!(PipelineConfig::load(&j).unwrap(), a);
    }

    #[test]
    fn rejects_bad_configs() {
        let dir = tempfile::tempdir().unwrap();
        let t = dir.path().join("bad.toml");
        fs::write(&t, "polygn = \"x\"\n").unwrap();
        assert!(matches!(PipelineConfig::load(&t), Err(Error::Parse { .. })));

        let mut c = PipelineConfig::default();
        assert!(c.validate().is_err());
        let roof = dir.path().join("roof.json");
        fs::write(&roof, "{}").unwrap();
        c.polygon = Some(roof.clone());
        assert!(c.validate().is_err(), "weather is mandatory");
        c.synthetic_weather = true;
        c.validate().unwrap();
        c.raster = Some(roof);
        assert!(c.validate().is_err());
    }
}
