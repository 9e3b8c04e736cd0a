//! Run reports and their CSV/JSON export.

use std::fmt;
use std::path::Path;

use serde::de::{MapAccess, Visitor};
use serde::ser::SerializeMap;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::formats::{write_atomic, write_json};

/// Rounds to 6 significant digits.
pub fn sig6(x: f64) -> f64 {
    if !x.is_finite() || x == 0.0 {
        return x;
    }
    format!("{x:.5e}").parse().unwrap_or(x)
}

/// Shortest decimal form of an angle, used as histogram key.
fn angle_key(a: f64) -> String {
    format!("{}", sig6(a))
}

/// Panel counts per angle, in grid order. Serialized as a map from angle to
/// count.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Histogram(pub Vec<(f64, usize)>);

impl Histogram {
    /// Counts `values` into the bins `bins`; values not in the grid get a bin
    /// of their own at the end.
    pub fn count(bins: &[f64], values: impl IntoIterator<Item = f64>) -> Self {
        let mut h: Vec<(f64, usize)> = bins.iter().map(|&b| (b, 0)).collect();
        for v in values {
            match h.iter_mut().find(|(b, _)| *b == v) {
                Some(e) => e.1 += 1,
                None => h.push((v, 1)),
            }
        }
        Histogram(h)
    }

    pub fn total(&self) -> usize {
        self.0.iter().map(|e| e.1).sum()
    }

    /// Share of the most populated bin and its angle.
    pub fn mode(&self) -> Option<(f64, f64)> {
        let total = self.total();
        if total == 0 {
            return None;
        }
        let (a, c) = self.0.iter().fold(self.0[0], |best, &e| if e.1 > best.1 { e } else { best });
        Some((a, c as f64 / total as f64))
    }

    pub fn get(&self, angle: f64) -> usize {
        self.0.iter().find(|e| e.0 == angle).map_or(0, |e| e.1)
    }

    /// `"0=3;45=0"`.
    pub fn to_compact(&self) -> String {
        self.0.iter().map(|(a, c)| format!("{}={c}", angle_key(*a))).collect::<Vec<_>>().join(";")
    }

    pub fn from_compact(s: &str) -> Option<Self> {
        if s.is_empty() {
            return Some(Histogram::default());
        }
        s.split(';')
            .map(|kv| {
                let (k, v) = kv.split_once('=')?;
                Some((k.parse().ok()?, v.parse().ok()?))
            })
            .collect::<Option<Vec<_>>>()
            .map(Histogram)
    }
}

impl Serialize for Histogram {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let mut m = s.serialize_map(Some(self.0.len()))?;
        for (a, c) in &self.0 {
            m.serialize_entry(&angle_key(*a), c)?;
        }
        m.end()
    }
}

impl<'de> Deserialize<'de> for Histogram {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        struct V;
        impl<'de> Visitor<'de> for V {
            type Value = Histogram;
            fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
                f.write_str("a map from angle to count")
            }
            fn visit_map<M: MapAccess<'de>>(self, mut m: M) -> std::result::Result<Histogram, M::Error> {
                let mut out = Vec::new();
                while let Some((k, v)) = m.next_entry::<String, usize>()? {
                    let a = k.parse().map_err(|_| serde::de::Error::custom(format!("bad angle {k:?}")))?;
                    out.push((a, v));
                }
                Ok(Histogram(out))
            }
        }
        d.deserialize_map(V)
    }
}

/// Metrics of one optimization run. Energies in Wh per year, money in the
/// tariff's currency over the panel lifetime.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct RunReport {
    pub roof: String,
    pub latitude: f64,
    /// Long-axis angle the roof was rotated to, degrees; `None` keeps the
    /// input orientation.
    pub rotation: Option<f64>,
    /// `shaded`, `unshaded` or `unshaded16`.
    pub mode: String,
    pub candidates: usize,
    pub regions: usize,
    pub panel_count: usize,
    pub annual_energy_wh: f64,
    pub unshaded_energy_wh: f64,
    /// Objective of the run's mode.
    pub objective: f64,
    /// Shaded objective of the same selection.
    pub shaded_objective: f64,
    pub shading_loss: f64,
    pub packing_density: f64,
    pub rows_objective: f64,
    pub rows_panel_count: usize,
    pub rows_annual_energy_wh: f64,
    /// `objective - rows_objective`; never negative for a successful run.
    pub gap_vs_rows: f64,
    pub azimuth_histogram: Histogram,
    pub tilt_histogram: Histogram,
    pub error: Option<String>,
    /// Wall time; left out of every export so reruns compare equal.
    #[serde(skip)]
    pub runtime_seconds: f64,
}

impl RunReport {
    pub fn failed(roof: &str, latitude: f64, rotation: Option<f64>, mode: &str, err: &Error) -> Self {
        RunReport {
            roof: roof.into(),
            latitude,
            rotation,
            mode: mode.into(),
            error: Some(err.to_string()),
            ..Default::default()
        }
    }

    /// Every float at 6 significant digits, as exported.
    pub fn rounded(&self) -> RunReport {
        RunReport {
            latitude: sig6(self.latitude),
            rotation: self.rotation.map(sig6),
            annual_energy_wh: sig6(self.annual_energy_wh),
            unshaded_energy_wh: sig6(self.unshaded_energy_wh),
            objective: sig6(self.objective),
            shaded_objective: sig6(self.shaded_objective),
            shading_loss: sig6(self.shading_loss),
            packing_density: sig6(self.packing_density),
            rows_objective: sig6(self.rows_objective),
            rows_annual_energy_wh: sig6(self.rows_annual_energy_wh),
            gap_vs_rows: sig6(self.gap_vs_rows),
            azimuth_histogram: Histogram(self.azimuth_histogram.0.iter().map(|&(a, c)| (sig6(a), c)).collect()),
            tilt_histogram: Histogram(self.tilt_histogram.0.iter().map(|&(a, c)| (sig6(a), c)).collect()),
            runtime_seconds: 0.0,
            ..self.clone()
        }
    }

    /// Relative annual energy gain over the best row layout.
    pub fn energy_gain_vs_rows(&self) -> f64 {
        if self.rows_annual_energy_wh > 0.0 {
            self.annual_energy_wh / self.rows_annual_energy_wh - 1.0
        } else {
            0.0
        }
    }
}

/// Flat CSV form of a [`RunReport`].
#[derive(Debug, Serialize, Deserialize)]
struct CsvRow {
    roof: String,
    latitude: f64,
    rotation: Option<f64>,
    mode: String,
    candidates: usize,
    regions: usize,
    panel_count: usize,
    annual_energy_wh: f64,
    unshaded_energy_wh: f64,
    objective: f64,
    shaded_objective: f64,
    shading_loss: f64,
    packing_density: f64,
    rows_objective: f64,
    rows_panel_count: usize,
    rows_annual_energy_wh: f64,
    gap_vs_rows: f64,
    azimuth_histogram: String,
    tilt_histogram: String,
    error: Option<String>,
}

impl From<RunReport> for CsvRow {
    fn from(r: RunReport) -> Self {
        CsvRow {
            azimuth_histogram: r.azimuth_histogram.to_compact(),
            tilt_histogram: r.tilt_histogram.to_compact(),
            roof: r.roof,
            latitude: r.latitude,
            rotation: r.rotation,
            mode: r.mode,
            candidates: r.candidates,
            regions: r.regions,
            panel_count: r.panel_count,
            annual_energy_wh: r.annual_energy_wh,
            unshaded_energy_wh: r.unshaded_energy_wh,
            objective: r.objective,
            shaded_objective: r.shaded_objective,
            shading_loss: r.shading_loss,
            packing_density: r.packing_density,
            rows_objective: r.rows_objective,
            rows_panel_count: r.rows_panel_count,
            rows_annual_energy_wh: r.rows_annual_energy_wh,
            gap_vs_rows: r.gap_vs_rows,
            error: r.error,
        }
    }
}

impl CsvRow {
    fn into_report(self) -> Option<RunReport> {
        Some(RunReport {
            azimuth_histogram: Histogram::from_compact(&self.azimuth_histogram)?,
            tilt_histogram: Histogram::from_compact(&self.tilt_histogram)?,
            roof: self.roof,
            latitude: self.latitude,
            rotation: self.rotation,
            mode: self.mode,
            candidates: self.candidates,
            regions: self.regions,
            panel_count: self.panel_count,
            annual_energy_wh: self.annual_energy_wh,
            unshaded_energy_wh: self.unshaded_energy_wh,
            objective: self.objective,
            shaded_objective: self.shaded_objective,
            shading_loss: self.shading_loss,
            packing_density: self.packing_density,
            rows_objective: self.rows_objective,
            rows_panel_count: self.rows_panel_count,
            rows_annual_energy_wh: self.rows_annual_energy_wh,
            gap_vs_rows: self.gap_vs_rows,
            error: self.error,
            runtime_seconds: 0.0,
        })
    }
}

pub fn metrics_csv(reports: &[RunReport]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in reports {
        w.serialize(CsvRow::from(r.rounded())).map_err(|e| Error::Config(e.to_string()))?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Config(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

pub fn parse_metrics_csv(text: &str) -> std::result::Result<Vec<RunReport>, String> {
    csv::Reader::from_reader(text.as_bytes())
        .deserialize::<CsvRow>()
        .map(|row| {
            let row = row.map_err(|e| e.to_string())?;
            row.into_report().ok_or_else(|| "bad histogram".to_string())
        })
        .collect()
}

/// Writes `<stem>.csv` and `<stem>.json` into `dir`.
pub fn export_metrics(dir: &Path, stem: &str, reports: &[RunReport]) -> Result<()> {
    if reports.is_empty() {
        return Err(Error::Config("no reports to export".into()));
    }
    write_atomic(&dir.join(format!("{stem}.csv")), metrics_csv(reports)?.as_bytes())?;
    let rounded: Vec<RunReport> = reports.iter().map(RunReport::rounded).collect();
    write_json(&dir.join(format!("{stem}.json")), &rounded)
}
