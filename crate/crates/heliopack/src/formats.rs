//! File formats: roof polygons, weather CSV, raster imagery, the shadow
//! cache and debugging dumps.

use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use chrono::NaiveDate;
use heliopack_core::decomp::{RegionPartition, VisibilityGraph};
use heliopack_core::geom::{Point, RoofPolygon};
use heliopack_core::layout::{CandidatePanel, ConflictGraph, PanelConfig};
use heliopack_core::opt::ObjectiveContext;
use heliopack_core::raster::RasterImage;
use heliopack_core::shade::{dequantize, quantize, ShadowMatrix, ShadowOptions};
use heliopack_core::solar::{TimeSampleSet, WeatherRecord};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

/// Writes through a temporary file in the target directory, then renames.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| Error::io(dir, e))?;
    tmp.write_all(bytes).map_err(|e| Error::io(path, e))?;
    tmp.persist(path).map_err(|e| Error::io(path, e.error))?;
    Ok(())
}

pub fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| Error::parse(path, e))?;
    text.push('\n');
    write_atomic(path, text.as_bytes())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct PolygonRecord {
    exterior: Vec<[f64; 2]>,
    #[serde(default)]
    holes: Vec<Vec<[f64; 2]>>,
}

#[derive(Deserialize)]
#[serde(untagged)]
enum PolygonFile {
    One(PolygonRecord),
    Many(Vec<PolygonRecord>),
}

fn to_points(ring: &[[f64; 2]]) -> Vec<Point> {
    ring.iter().map(|p| Point::new(p[0], p[1])).collect()
}

fn to_pairs(ring: &[Point]) -> Vec<[f64; 2]> {
    ring.iter().map(|p| [p.x, p.y]).collect()
}

/// Reads one polygon object or an array of them; coordinates in meters.
pub fn read_polygons(path: &Path) -> Result<Vec<RoofPolygon>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let file: PolygonFile = serde_json::from_str(&text).map_err(|e| Error::parse(path, e))?;
    let records = match file {
        PolygonFile::One(r) => vec![r],
        PolygonFile::Many(v) => v,
    };
    if records.is_empty() {
        return Err(Error::parse(path, "no polygons"));
    }
    records
        .into_iter()
        .enumerate()
        .map(|(n, r)| {
            let p = RoofPolygon::new(to_points(&r.exterior), r.holes.iter().map(|h| to_points(h)).collect());
            p.validate().map_err(|e| Error::parse(path, format!("polygon {n}: {e}")))?;
            Ok(p)
        })
        .collect()
}

/// Writes a single object for one polygon, an array otherwise.
pub fn write_polygons(path: &Path, polygons: &[RoofPolygon]) -> Result<()> {
    let records: Vec<PolygonRecord> = polygons
        .iter()
        .map(|p| PolygonRecord {
            exterior: to_pairs(&p.exterior),
            holes: p.holes.iter().map(|h| to_pairs(h)).collect(),
        })
        .collect();
    match records.as_slice() {
        [one] => write_json(path, one),
        _ => write_json(path, &records),
    }
}

const WEATHER_COLUMNS: [&str; 7] = ["year", "month", "day", "hour", "ghi", "dni", "dhi"];

/// Reads an NSRDB-style hourly CSV. Lines before the header row (the first
/// row naming Year, Month, Day, Hour, GHI, DNI and DHI) are skipped; names
/// match case-insensitively. Minute and temperature columns are optional.
pub fn read_weather_csv(path: &Path) -> Result<Vec<WeatherRecord>> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| Error::parse(path, e))?;
    let mut columns: Option<([usize; 7], Option<usize>, Option<usize>)> = None;
    let mut out = Vec::new();
    for (line, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| Error::parse(path, e))?;
        let Some((idx, minute, temp)) = columns else {
            let names: Vec<String> = rec.iter().map(|f| f.to_ascii_lowercase()).collect();
            let find = |want: &str| names.iter().position(|n| n == want);
            if let [Some(a), Some(b), Some(c), Some(d), Some(e), Some(f), Some(g)] = WEATHER_COLUMNS.map(find) {
                let temp = names.iter().position(|n| n == "temperature" || n == "temp_air" || n == "air temperature");
                columns = Some(([a, b, c, d, e, f, g], find("minute"), temp));
            }
            continue;
        };
        if rec.iter().all(|f| f.is_empty()) {
            continue;
        }
        let field = |i: usize| -> Result<f64> {
            let s = rec.get(i).ok_or_else(|| Error::parse(path, format!("line {}: missing column", line + 1)))?;
            s.parse::<f64>()
                .map_err(|_| Error::parse(path, format!("line {}: bad number {s:?}", line + 1)))
        };
        let [y, mo, d, h, ghi, dni, dhi] = idx.map(field);
        let minute = minute.map(field).transpose()?.unwrap_or(0.0);
        let (y, mo, d, h) = (y?, mo?, d?, h?);
        let ts = NaiveDate::from_ymd_opt(y as i32, mo as u32, d as u32)
            .and_then(|date| date.and_hms_opt(h as u32, minute as u32, 0))
            .ok_or_else(|| Error::parse(path, format!("line {}: invalid date", line + 1)))?;
        let mut w = WeatherRecord::new(ts, ghi?, dni?, dhi?);
        w.temp_air = temp.map(field).transpose()?;
        out.push(w);
    }
    if columns.is_none() {
        return Err(Error::parse(path, "no header row with Year, Month, Day, Hour, GHI, DNI, DHI"));
    }
    Ok(out)
}

/// Writes records in the layout [`read_weather_csv`] accepts, after two
/// metadata lines.
pub fn write_weather_csv(path: &Path, records: &[WeatherRecord], latitude: f64, longitude: f64) -> Result<()> {
    use chrono::{Datelike, Timelike};
    let mut buf = Vec::new();
    {
        let mut w = csv::WriterBuilder::new().flexible(true).from_writer(&mut buf);
        let io = |e: csv::Error| Error::parse(path, e);
        w.write_record(["Source", "Latitude", "Longitude"]).map_err(io)?;
        w.write_record(["heliopack clear sky", &latitude.to_string(), &longitude.to_string()]).map_err(io)?;
        w.write_record(["Year", "Month", "Day", "Hour", "Minute", "GHI", "DNI", "DHI"]).map_err(io)?;
        for r in records {
            let t = r.timestamp;
            w.write_record([
                t.year().to_string(),
                t.month().to_string(),
                t.day().to_string(),
                t.hour().to_string(),
                t.minute().to_string(),
                format!("{:.3}", r.ghi),
                format!("{:.3}", r.dni),
                format!("{:.3}", r.dhi),
            ])
            .map_err(io)?;
        }
        w.flush().map_err(|e| Error::io(path, e))?;
    }
    write_atomic(path, &buf)
}

/// Loads a PNG (8 or 16 bit) or an uncompressed TIFF. Alpha is dropped; the
/// remaining channels become bands with raw integer intensities. Returns the
/// image and any pixel size stored in the file.
pub fn read_raster(path: &Path, resolution: Option<f64>) -> Result<RasterImage> {
    let ext = path.extension().and_then(|e| e.to_str()).map(str::to_ascii_lowercase);
    let (w, h, bands, stored) = match ext.as_deref() {
        Some("tif" | "tiff") => read_tiff(path)?,
        _ => read_png(path)?,
    };
    let res = resolution.or(stored).unwrap_or(heliopack_core::raster::DEFAULT_RESOLUTION);
    RasterImage::new(w, h, res, bands).map_err(|e| Error::parse(path, e))
}

type Bands = (usize, usize, Vec<Vec<f32>>, Option<f64>);

fn split_bands<T: Copy + Into<f32>>(data: &[T], channels: usize, keep: usize) -> Vec<Vec<f32>> {
    (0..keep).map(|c| data.iter().skip(c).step_by(channels).map(|&v| v.into()).collect()).collect()
}

fn read_png(path: &Path) -> Result<Bands> {
    use image::DynamicImage as D;
    let img = image::ImageReader::open(path)
        .map_err(|e| Error::io(path, e))?
        .decode()
        .map_err(|e| Error::parse(path, e))?;
    let (w, h) = (img.width() as usize, img.height() as usize);
    let bands = match img {
        D::ImageLuma8(b) => split_bands(b.as_raw(), 1, 1),
        D::ImageLumaA8(b) => split_bands(b.as_raw(), 2, 1),
        D::ImageRgb8(b) => split_bands(b.as_raw(), 3, 3),
        D::ImageRgba8(b) => split_bands(b.as_raw(), 4, 3),
        D::ImageLuma16(b) => split_bands(b.as_raw(), 1, 1),
        D::ImageLumaA16(b) => split_bands(b.as_raw(), 2, 1),
        D::ImageRgb16(b) => split_bands(b.as_raw(), 3, 3),
        D::ImageRgba16(b) => split_bands(b.as_raw(), 4, 3),
        other => split_bands(other.to_rgb32f().as_raw(), 3, 3),
    };
    Ok((w, h, bands, None))
}

fn read_tiff(path: &Path) -> Result<Bands> {
    use tiff::decoder::{Decoder, DecodingResult};
    use tiff::tags::Tag;
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut dec = Decoder::new(BufReader::new(file)).map_err(|e| Error::parse(path, e))?;
    let (w, h) = dec.dimensions().map_err(|e| Error::parse(path, e))?;
    let (w, h) = (w as usize, h as usize);
    let scale = dec
        .find_tag(Tag::ModelPixelScaleTag)
        .ok()
        .flatten()
        .and_then(|v| v.into_f64_vec().ok())
        .and_then(|v| v.first().copied())
        .filter(|s| *s > 0.0);
    let img = dec.read_image().map_err(|e| Error::parse(path, e))?;
    let n = w * h;
    let bands = match img {
        DecodingResult::U8(d) => split_bands(&d, d.len() / n, d.len() / n),
        DecodingResult::U16(d) => split_bands(&d, d.len() / n, d.len() / n),
        DecodingResult::F32(d) => split_bands(&d, d.len() / n, d.len() / n),
        _ => return Err(Error::parse(path, "unsupported TIFF sample format")),
    };
    Ok((w, h, bands, scale))
}

const CACHE_MAGIC: &[u8; 4] = b"HPSM";
const CACHE_VERSION: u32 = 1;

/// Hash of everything a shadow matrix depends on.
pub fn shadow_cache_key(candidates: &[CandidatePanel], graph: &ConflictGraph, samples: &TimeSampleSet, opts: &ShadowOptions) -> [u8; 32] {
    let mut h = Sha256::new();
    h.update(b"heliopack shadow matrix");
    h.update((candidates.len() as u64).to_le_bytes());
    for c in candidates {
        for q in c.corners3d {
            for v in [q.x, q.y, q.z] {
                h.update(v.to_bits().to_le_bytes());
            }
        }
    }
    for &(i, j) in &graph.edges {
        h.update(i.to_le_bytes());
        h.update(j.to_le_bytes());
    }
    h.update((samples.len() as u64).to_le_bytes());
    for s in &samples.samples {
        let u = s.sun.unit_vector;
        for v in [u.x, u.y, u.z, s.sun.elevation] {
            h.update(v.to_bits().to_le_bytes());
        }
    }
    h.update(opts.cull_distance.to_bits().to_le_bytes());
    h.update(opts.min_elevation.to_bits().to_le_bytes());
    h.finalize().into()
}

/// Header (magic, version, key, N, K, entry count) then little-endian
/// `(i: u32, j: u32, k: u16, fraction: f32)` records. The diagonal is not
/// stored.
pub fn write_shadow_cache(path: &Path, key: &[u8; 32], m: &ShadowMatrix) -> Result<()> {
    let mut buf = Vec::with_capacity(56 + 14 * m.num_entries());
    buf.extend_from_slice(CACHE_MAGIC);
    buf.extend_from_slice(&CACHE_VERSION.to_le_bytes());
    buf.extend_from_slice(key);
    buf.extend_from_slice(&(m.num_candidates() as u32).to_le_bytes());
    buf.extend_from_slice(&(m.num_samples() as u32).to_le_bytes());
    buf.extend_from_slice(&(m.num_entries() as u64).to_le_bytes());
    for (i, j, k, f) in m.quantized_entries() {
        buf.extend_from_slice(&i.to_le_bytes());
        buf.extend_from_slice(&j.to_le_bytes());
        buf.extend_from_slice(&k.to_le_bytes());
        buf.extend_from_slice(&(dequantize(f) as f32).to_le_bytes());
    }
    write_atomic(path, &buf)
}

/// The cached matrix, or `None` when the file is missing or was built for
/// other inputs.
pub fn read_shadow_cache(path: &Path, key: &[u8; 32]) -> Result<Option<ShadowMatrix>> {
    let mut bytes = Vec::new();
    match File::open(path) {
        Ok(f) => BufReader::new(f).read_to_end(&mut bytes).map_err(|e| Error::io(path, e))?,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(None),
        Err(e) => return Err(Error::io(path, e)),
    };
    let bad = || Error::parse(path, "truncated or corrupt shadow cache");
    if bytes.len() < 56 || &bytes[..4] != CACHE_MAGIC {
        return Err(bad());
    }
    let u32_at = |o: usize| u32::from_le_bytes(bytes[o..o + 4].try_into().unwrap());
    if u32_at(4) != CACHE_VERSION || bytes[8..40] != key[..] {
        return Ok(None);
    }
    let (n, k) = (u32_at(40) as usize, u32_at(44) as usize);
    let count = u64::from_le_bytes(bytes[48..56].try_into().unwrap()) as usize;
    if bytes.len() != 56 + 14 * count {
        return Err(bad());
    }
    let entries = bytes[56..]
        .chunks_exact(14)
        .map(|r| {
            let f = f32::from_le_bytes(r[10..14].try_into().unwrap());
            (
                u32::from_le_bytes(r[0..4].try_into().unwrap()),
                u32::from_le_bytes(r[4..8].try_into().unwrap()),
                u16::from_le_bytes(r[8..10].try_into().unwrap()),
                quantize(f as f64),
            )
        })
        .collect();
    Ok(Some(ShadowMatrix::from_quantized(n, k, entries)))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CandidateRecord {
    pub id: usize,
    pub config: PanelConfig,
    pub anchor: [f64; 2],
    pub footprint: [[f64; 2]; 4],
    pub corners3d: [[f64; 3]; 4],
}

impl From<&CandidatePanel> for CandidateRecord {
    fn from(c: &CandidatePanel) -> Self {
        CandidateRecord {
            id: c.id,
            config: c.config,
            anchor: [c.anchor.x, c.anchor.y],
            footprint: c.footprint.map(|p| [p.x, p.y]),
            corners3d: c.corners3d.map(|p| [p.x, p.y, p.z]),
        }
    }
}

pub fn write_candidates(path: &Path, candidates: &[CandidatePanel]) -> Result<()> {
    let records: Vec<CandidateRecord> = candidates.iter().map(CandidateRecord::from).collect();
    write_json(path, &records)
}

/// Self-contained optimization problem for external solvers.
///
/// `value[i][k]` is the lifetime value of candidate `i`'s unshaded energy in
/// sample `k`, `weights[i]` its unshaded net value, `shadow` holds
/// `[receiver, caster, k, fraction]` and `diagonal` holds `[i, k, fraction]`.
/// The objective of a selection `x` is
/// `sum_i x_i (-cost_i + sum_k value_ik (1 - min(1, diag_ik + sum_j x_j S_ijk)))`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProblemDump {
    pub format: String,
    pub num_candidates: usize,
    pub num_samples: usize,
    pub cost: Vec<f64>,
    pub weights: Vec<f64>,
    pub value: Vec<Vec<f64>>,
    pub edges: Vec<(u32, u32)>,
    pub shadow: Vec<(u32, u32, u16, f64)>,
    pub diagonal: Vec<(u32, u16, f64)>,
}

impl ProblemDump {
    pub const FORMAT: &'static str = "heliopack-problem/1";

    pub fn from_context(ctx: &ObjectiveContext) -> Self {
        let n = ctx.num_candidates();
        let mut diagonal = Vec::new();
        for i in 0..n {
            for (k, &q) in ctx.shadow().diagonal_row_quantized(i).iter().enumerate() {
                if q > 0 {
                    diagonal.push((i as u32, k as u16, dequantize(q)));
                }
            }
        }
        ProblemDump {
            format: Self::FORMAT.into(),
            num_candidates: n,
            num_samples: ctx.num_samples(),
            cost: (0..n).map(|i| ctx.cost(i)).collect(),
            weights: (0..n).map(|i| ctx.unshaded_gain(i)).collect(),
            value: (0..n).map(|i| ctx.value_row(i).to_vec()).collect(),
            edges: ctx.graph().edges.clone(),
            shadow: ctx.shadow().quantized_entries().map(|(i, j, k, f)| (i, j, k, dequantize(f))).collect(),
            diagonal,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegionDump {
    pub nodes: Vec<[f64; 2]>,
    pub communities: Vec<Vec<usize>>,
    pub regions: Vec<Vec<usize>>,
    pub assignment: Vec<usize>,
}

impl RegionDump {
    pub fn new(graph: Option<&VisibilityGraph>, communities: &[Vec<usize>], partition: &RegionPartition) -> Self {
        RegionDump {
            nodes: graph.map(|g| g.nodes.iter().map(|p| [p.x, p.y]).collect()).unwrap_or_default(),
            communities: communities.to_vec(),
            regions: partition.regions.clone(),
            assignment: partition.assignment.clone(),
        }
    }
}

/// Buffered writer for large text outputs.
pub fn create_buffered(path: &Path) -> Result<BufWriter<File>> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    File::create(path).map(BufWriter::new).map_err(|e| Error::io(path, e))
}
