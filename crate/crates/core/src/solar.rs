//! Sun position, plane-of-array irradiance and the per-orientation generation
//! table sampled on 168 representative hours.
//!
//! Sampling takes the 14th day of every month at 06:00 through 19:00 local
//! standard time. Each sample stands in for one hour of a representative
//! month, so sample energies are scaled by `365 / 12` to annual units.

use alloc::vec::Vec;
use chrono::{Datelike, NaiveDate, NaiveDateTime, Timelike};
use core::f64::consts::PI;
#[allow(unused_imports)] // inherent float methods are unavailable without std
use num_traits::Float;
use serde::{Deserialize, Serialize};

use crate::geom::Point3;
use crate::{error::invalid, Error, Result};

pub const SAMPLE_DAY: u32 = 14;
pub const FIRST_HOUR: u32 = 6;
pub const LAST_HOUR: u32 = 19;
pub const SAMPLES_PER_DAY: usize = (LAST_HOUR - FIRST_HOUR + 1) as usize;
/// Number of time samples, `K`.
pub const NUM_SAMPLES: usize = 12 * SAMPLES_PER_DAY;
pub const ANNUAL_SCALE: f64 = 365.0 / 12.0;
pub const DEFAULT_ALBEDO: f64 = 0.2;
pub const DEFAULT_DERATE: f64 = 0.86;
pub const DEFAULT_RATED_POWER: f64 = 300.0;
const SOLAR_CONSTANT: f64 = 1367.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Site {
    pub latitude: f64,
    pub longitude: f64,
    /// Hours east of UTC for the local standard time zone.
    pub utc_offset: f64,
}

impl Site {
    /// Site with the time zone implied by the longitude (15 degrees per hour).
    pub fn at(latitude: f64, longitude: f64) -> Self {
        Site {
            latitude,
            longitude,
            utc_offset: (longitude / 15.0).round(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SunVector {
    /// Compass degrees, 0 = north, 90 = east.
    pub azimuth: f64,
    /// Degrees above the horizon.
    pub elevation: f64,
    /// East, north, up components pointing from the surface toward the sun.
    pub unit_vector: Point3,
}

impl SunVector {
    pub fn from_angles(azimuth: f64, elevation: f64) -> Self {
        let (a, e) = (azimuth.to_radians(), elevation.to_radians());
        SunVector {
            azimuth,
            elevation,
            unit_vector: Point3::new(e.cos() * a.sin(), e.cos() * a.cos(), e.sin()),
        }
    }

    pub fn is_up(&self) -> bool {
        self.elevation > 0.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WeatherRecord {
    /// Local standard time.
    pub timestamp: NaiveDateTime,
    pub ghi: f64,
    pub dni: f64,
    pub dhi: f64,
    pub temp_air: Option<f64>,
}

impl WeatherRecord {
    pub fn new(timestamp: NaiveDateTime, ghi: f64, dni: f64, dhi: f64) -> Self {
        WeatherRecord {
            timestamp,
            ghi,
            dni,
            dhi,
            temp_air: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeSample {
    pub k: usize,
    pub timestamp: NaiveDateTime,
    pub sun: SunVector,
    pub weather: WeatherRecord,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TimeSampleSet {
    pub samples: Vec<TimeSample>,
    pub annual_scale: f64,
}

impl TimeSampleSet {
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PanelOrientation {
    /// Compass degrees the panel faces, 0 = north.
    pub azimuth: f64,
    /// Degrees from horizontal.
    pub tilt: f64,
}

impl PanelOrientation {
    pub fn new(azimuth: f64, tilt: f64) -> Self {
        PanelOrientation { azimuth, tilt }
    }

    /// Upward unit normal of the panel surface (east, north, up).
    pub fn normal(&self) -> Point3 {
        let (a, t) = (self.azimuth.to_radians(), self.tilt.to_radians());
        Point3::new(a.sin() * t.sin(), a.cos() * t.sin(), t.cos())
    }
}

/// Unshaded energy per configuration and sample, Wh in annual units.
#[derive(Debug, Clone, PartialEq)]
pub struct GenerationTable {
    pub g: Vec<Vec<f64>>,
    pub rated_power: f64,
    pub derate: f64,
}

/// Spencer's Fourier series for declination (radians) and the equation of time
/// (minutes) at fractional day angle `gamma`.
fn spencer(gamma: f64) -> (f64, f64) {
    let (s1, c1) = gamma.sin_cos();
    let (s2, c2) = (2.0 * gamma).sin_cos();
    let (s3, c3) = (3.0 * gamma).sin_cos();
    let decl = 0.006918 - 0.399912 * c1 + 0.070257 * s1 - 0.006758 * c2 + 0.000907 * s2 - 0.002697 * c3 + 0.00148 * s3;
    let eot = 229.18 * (0.000075 + 0.001868 * c1 - 0.032077 * s1 - 0.014615 * c2 - 0.040849 * s2);
    (decl, eot)
}

/// Sun direction for a local standard time.
pub fn sun_position(latitude: f64, longitude: f64, timestamp: NaiveDateTime, utc_offset: f64) -> SunVector {
    let hour = timestamp.hour() as f64 + timestamp.minute() as f64 / 60.0 + timestamp.second() as f64 / 3600.0;
    let days_in_year = if timestamp.date().leap_year() { 366.0 } else { 365.0 };
    let gamma = 2.0 * PI / days_in_year * (timestamp.ordinal0() as f64 + (hour - utc_offset - 12.0) / 24.0);
    let (decl, eot) = spencer(gamma);
    let solar_time = hour + (4.0 * longitude - 60.0 * utc_offset + eot) / 60.0;
    let omega = (15.0 * (solar_time - 12.0)).to_radians();
    let phi = latitude.to_radians();
    let east = -decl.cos() * omega.sin();
    let north = decl.sin() * phi.cos() - decl.cos() * phi.sin() * omega.cos();
    let up = decl.sin() * phi.sin() + decl.cos() * phi.cos() * omega.cos();
    let mut azimuth = east.atan2(north).to_degrees();
    if azimuth < 0.0 {
        azimuth += 360.0;
    }
    SunVector {
        azimuth,
        elevation: up.clamp(-1.0, 1.0).asin().to_degrees(),
        unit_vector: Point3::new(east, north, up).normalized(),
    }
}

pub fn sample_timestamps(year: i32) -> Vec<NaiveDateTime> {
    let mut out = Vec::with_capacity(NUM_SAMPLES);
    for month in 1..=12 {
        for hour in FIRST_HOUR..=LAST_HOUR {
            if let Some(t) = NaiveDate::from_ymd_opt(year, month, SAMPLE_DAY).and_then(|d| d.and_hms_opt(hour, 0, 0)) {
                out.push(t);
            }
        }
    }
    out
}

/// Picks the weather record for every sampled hour and pairs it with the sun
/// position at the record's own timestamp.
pub fn build_time_samples(site: &Site, weather: &[WeatherRecord]) -> Result<TimeSampleSet> {
    if !(site.latitude.abs() <= 90.0) {
        return Err(invalid("latitude must be within [-90, 90]"));
    }
    let mut slots: [[Option<&WeatherRecord>; SAMPLES_PER_DAY]; 12] = [[None; SAMPLES_PER_DAY]; 12];
    for w in weather {
        let t = w.timestamp;
        if t.day() == SAMPLE_DAY && (FIRST_HOUR..=LAST_HOUR).contains(&t.hour()) {
            let slot = &mut slots[t.month0() as usize][(t.hour() - FIRST_HOUR) as usize];
            if slot.is_none() {
                *slot = Some(w);
            }
        }
    }
    let mut gaps = Vec::new();
    let mut samples = Vec::with_capacity(NUM_SAMPLES);
    for (m, day) in slots.iter().enumerate() {
        for (h, slot) in day.iter().enumerate() {
            match slot {
                None => gaps.push((m as u32 + 1, SAMPLE_DAY, FIRST_HOUR + h as u32)),
                Some(w) => {
                    if w.ghi > w.dni + w.dhi + 50.0 {
                        log::warn!("weather at {} has GHI above DNI + DHI + 50", w.timestamp);
                    }
                    samples.push(TimeSample {
                        k: samples.len(),
                        timestamp: w.timestamp,
                        sun: sun_position(site.latitude, site.longitude, w.timestamp, site.utc_offset),
                        weather: **w,
                    });
                }
            }
        }
    }
    if !gaps.is_empty() {
        return Err(Error::MissingWeather(gaps));
    }
    Ok(TimeSampleSet {
        samples,
        annual_scale: ANNUAL_SCALE,
    })
}

/// Isotropic-sky plane-of-array irradiance in W/m^2.
pub fn poa_irradiance(sun: &SunVector, orient: &PanelOrientation, w: &WeatherRecord, albedo: f64) -> f64 {
    if sun.elevation <= 0.0 {
        return 0.0;
    }
    let cos_aoi = sun.unit_vector.dot(orient.normal());
    let cos_tilt = orient.tilt.to_radians().cos();
    let beam = w.dni.max(0.0) * cos_aoi.max(0.0);
    let diffuse = w.dhi.max(0.0) * (1.0 + cos_tilt) / 2.0;
    let ground = w.ghi.max(0.0) * albedo * (1.0 - cos_tilt) / 2.0;
    (beam + diffuse + ground).max(0.0)
}

/// Energy per sample for one orientation, Wh scaled to annual units.
pub fn generation_row(
    orient: &PanelOrientation,
    samples: &TimeSampleSet,
    rated_power: f64,
    derate: f64,
    albedo: f64,
) -> Vec<f64> {
    samples
        .samples
        .iter()
        .map(|s| rated_power * derate * poa_irradiance(&s.sun, orient, &s.weather, albedo) / 1000.0 * samples.annual_scale)
        .collect()
}

pub fn check_panel_power(rated_power: f64, derate: f64) -> Result<()> {
    if !(rated_power > 0.0) {
        return Err(Error::Config("rated power must be positive".into()));
    }
    if !(derate > 0.0 && derate <= 1.0) {
        return Err(Error::Config("derate must be in (0, 1]".into()));
    }
    Ok(())
}

/// One row per orientation, at the default albedo.
pub fn baseline_generation(
    orientations: &[PanelOrientation],
    samples: &TimeSampleSet,
    rated_power: f64,
    derate: f64,
) -> Result<GenerationTable> {
    check_panel_power(rated_power, derate)?;
    Ok(GenerationTable {
        g: orientations
            .iter()
            .map(|o| generation_row(o, samples, rated_power, derate, DEFAULT_ALBEDO))
            .collect(),
        rated_power,
        derate,
    })
}

/// Unsampled annual energy in Wh: every record counts as one hour.
pub fn full_year_energy(
    site: &Site,
    orient: &PanelOrientation,
    weather: &[WeatherRecord],
    rated_power: f64,
    derate: f64,
    albedo: f64,
) -> f64 {
    weather
        .iter()
        .map(|w| {
            let sun = sun_position(site.latitude, site.longitude, w.timestamp, site.utc_offset);
            rated_power * derate * poa_irradiance(&sun, orient, w, albedo) / 1000.0
        })
        .sum()
}

/// Hourly clear-sky weather for a non-leap year, stamped at the middle of each
/// hour. Beam follows Meinel's attenuation with Kasten-Young air mass; diffuse
/// is 30% of the attenuated extraterrestrial horizontal irradiance; GHI closes
/// exactly as `DNI cos(z) + DHI`.
pub fn synthetic_clear_sky_year(site: &Site, year: i32) -> Result<Vec<WeatherRecord>> {
    let start = NaiveDate::from_ymd_opt(year, 1, 1).ok_or_else(|| invalid("year out of range"))?;
    if start.leap_year() {
        return Err(invalid("synthetic weather needs a non-leap year"));
    }
    let mut out = Vec::with_capacity(8760);
    for day in start.iter_days().take(365) {
        for hour in 0..24 {
            let t = day.and_hms_opt(hour, 30, 0).ok_or_else(|| invalid("bad timestamp"))?;
            let sun = sun_position(site.latitude, site.longitude, t, site.utc_offset);
            let (ghi, dni, dhi) = clear_sky(sun.elevation);
            out.push(WeatherRecord::new(t, ghi, dni, dhi));
        }
    }
    Ok(out)
}

fn clear_sky(elevation: f64) -> (f64, f64, f64) {
    if elevation <= 0.0 {
        return (0.0, 0.0, 0.0);
    }
    let zenith = 90.0 - elevation;
    let cos_z = elevation.to_radians().sin();
    let air_mass = 1.0 / (cos_z + 0.50572 * (96.07995 - zenith).powf(-1.6364));
    let dni = SOLAR_CONSTANT * 0.7f64.powf(air_mass.powf(0.678));
    let dhi = 0.3 * (SOLAR_CONSTANT - dni) * cos_z;
    (dni * cos_z + dhi, dni, dhi)
}
