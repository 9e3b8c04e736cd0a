//! Thread pool setup and the multi-threaded shadow builder.

use heliopack_core::layout::CandidatePanel;
use heliopack_core::shade::{dequantize, fixed_shading_row, quantize, sample_entries, ShadowBuilder, ShadowMatrix, ShadowOptions};
use heliopack_core::solar::TimeSampleSet;
use rayon::prelude::*;

pub const THREADS_ENV: &str = "HELIOPACK_THREADS";

/// Sizes the global rayon pool from `HELIOPACK_THREADS`, if set. Later calls
/// are no-ops.
pub fn init_thread_pool() -> Result<(), String> {
    let Ok(v) = std::env::var(THREADS_ENV) else {
        return Ok(());
    };
    let n: usize = v
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| format!("{THREADS_ENV} must be a positive integer, got {v:?}"))?;
    // a pool that already exists keeps its size
    let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    Ok(())
}

/// Rounds a quantized fraction through `f32`, the precision of the shadow
/// cache, so cached and fresh matrices are identical.
pub fn round_f32(q: u32) -> u32 {
    quantize(dequantize(q) as f32 as f64)
}

/// [`ShadowBuilder`] that spreads samples and targets over the rayon pool.
#[derive(Debug, Clone, Copy, Default)]
pub struct RayonBuilder;

impl ShadowBuilder for RayonBuilder {
    fn matrix(&self, candidates: &[CandidatePanel], samples: &TimeSampleSet, pairs: &[(u32, u32)], min_elevation: f64) -> ShadowMatrix {
        let entries: Vec<(u32, u32, u16, u32)> = samples
            .samples
            .par_iter()
            .filter(|s| s.sun.is_up() && s.sun.elevation >= min_elevation)
            .flat_map_iter(|s| {
                sample_entries(candidates, pairs, &s.sun)
                    .into_iter()
                    .map(move |(i, j, f)| (i, j, s.k as u16, round_f32(f)))
            })
            .collect();
        ShadowMatrix::from_quantized(candidates.len(), samples.len(), entries)
    }

    fn fixed_rows(&self, targets: &[CandidatePanel], placed: &[&CandidatePanel], samples: &TimeSampleSet, opts: &ShadowOptions) -> Vec<Vec<f64>> {
        targets.par_iter().map(|t| fixed_shading_row(t, placed, samples, opts)).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use heliopack_core::geom::RoofPolygon;
    use heliopack_core::layout::{generate_candidates, GridOptions, PanelSpec};
    use heliopack_core::shade::{shadow_pairs, SerialBuilder};
    use heliopack_core::solar::{build_time_samples, synthetic_clear_sky_year, Site};

    #[test]
    fn matches_serial_up_to_f32() {
        let site = Site::at(47.0, 8.0);
        let samples = build_time_samples(&site, &synthetic_clear_sky_year(&site, 2023).unwrap()).unwrap();
        let opts = GridOptions {
            azimuths: vec![135.0, 180.0],
            tilts: vec![30.0],
            shifts: vec![[0.0, 0.0]],
            ..Default::default()
        };
        let cands = generate_candidates(&RoofPolygon::rectangle(0.0, 0.0, 6.0, 6.0), &PanelSpec::default(), &opts).unwrap();
        let pairs = shadow_pairs(&cands, 30.0, None);
        let a = SerialBuilder.matrix(&cands, &samples, &pairs, 3.0);
        let b = RayonBuilder.matrix(&cands, &samples, &pairs, 3.0);
        assert!(b.num_entries() > 0);
        assert_eq!(a.num_entries(), b.num_entries());
        for ((i, j, k, f), (i2, j2, k2, f2)) in a.entries().zip(b.entries()) {
            assert_eq!((i, j, k), (i2, j2, k2));
            assert!((f - f2).abs() < 1e-6);
        }
        let rebuilt: Vec<_> = b.quantized_entries().map(|(i, j, k, f)| (i, j, k, round_f32(f))).collect();
        assert!(rebuilt.iter().zip(b.quantized_entries()).all(|(x, y)| *x == y), "rounding is idempotent");
    }
}
