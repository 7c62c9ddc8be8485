//! Traffic-cluster profiles and harvest traces: file loaders, resampling,
//! peak scaling, and the seeded synthetic generators used when no external
//! dataset is available.
//!
//! File formats (comma separated, one header row, decimal numbers with `.`):
//!
//! * clusters: `slot,cluster0,cluster1,cluster2,cluster3`, one row per slot
//!   of the day, values in `[0, 1]`.
//! * harvest: `timestamp,solar,wind`, timestamps in seconds, strictly
//!   increasing, raw non-negative energy per sample in any unit.

use std::f64::consts::PI;
use std::io::{Read, Write};
use std::path::Path;

use rand::Rng;

use crate::domain::HarvestSample;
use crate::error::{Error, Result};

pub const CLUSTER_COUNT: usize = 4;

/// Share of each load profile that is computation workload. Informational:
/// no energy computation depends on it.
pub const COMPUTATION_SHARE: f64 = 0.8;

#[derive(Debug, Clone, PartialEq)]
pub struct LoadProfileSet {
    pub clusters: Vec<Vec<f64>>,
    /// Cluster index per station.
    pub assignment: Vec<usize>,
    pub computation_share: f64,
}

impl LoadProfileSet {
    /// Each station draws one of the clusters uniformly at random.
    pub fn assign<R: Rng + ?Sized>(clusters: Vec<Vec<f64>>, stations: usize, rng: &mut R) -> Self {
        let assignment = (0..stations).map(|_| rng.gen_range(0..clusters.len())).collect();
        LoadProfileSet {
            clusters,
            assignment,
            computation_share: COMPUTATION_SHARE,
        }
    }

    pub fn slots_per_day(&self) -> usize {
        self.clusters[0].len()
    }

    /// Normalised load of station `bs` in `slot`; profiles repeat daily.
    pub fn load_at(&self, bs: usize, slot: usize) -> f64 {
        let c = &self.clusters[self.assignment[bs]];
        c[slot % c.len()]
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RawHarvest {
    pub timestamp_s: f64,
    pub solar: f64,
    pub wind: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct HarvestTraceSet {
    pub solar_j: Vec<f64>,
    pub wind_j: Vec<f64>,
    /// Joules per raw unit applied by peak scaling.
    pub scale_j_per_unit: f64,
}

impl HarvestTraceSet {
    pub fn len(&self) -> usize {
        self.solar_j.len()
    }

    pub fn is_empty(&self) -> bool {
        self.solar_j.is_empty()
    }

    pub fn sample(&self, slot: usize) -> HarvestSample {
        HarvestSample {
            slot_index: slot,
            solar_j: self.solar_j[slot],
            wind_j: self.wind_j[slot],
        }
    }

    /// Resampled and peak-scaled trace.
    pub fn from_raw(samples: &[RawHarvest], slot_duration_s: f64, peak_target_j: f64, label: &str) -> Result<Self> {
        let windows = resample(samples, slot_duration_s, label)?;
        let (solar, wind): (Vec<f64>, Vec<f64>) = windows.into_iter().unzip();
        let scale = peak_scale_factor(&solar, peak_target_j);
        Ok(HarvestTraceSet {
            solar_j: solar.iter().map(|v| v * scale).collect(),
            wind_j: wind.iter().map(|v| v * scale).collect(),
            scale_j_per_unit: scale,
        })
    }
}

/// Solar when it reaches the off-peak threshold, wind otherwise.
pub fn harvest_select(solar_j: f64, wind_j: f64, offpeak_threshold_j: f64) -> f64 {
    if solar_j >= offpeak_threshold_j {
        solar_j
    } else {
        wind_j
    }
}

/// Factor mapping the solar peak onto `target_j`. A trace with no sunlight is
/// left unscaled.
pub fn peak_scale_factor(solar: &[f64], target_j: f64) -> f64 {
    let peak = solar.iter().copied().fold(0.0, f64::max);
    if peak > 0.0 {
        target_j / peak
    } else {
        1.0
    }
}

fn parse_err(label: &str, line: u64, msg: impl Into<String>) -> Error {
    Error::Parse {
        path: label.to_string(),
        line,
        msg: msg.into(),
    }
}

fn csv_reader<R: Read>(reader: R) -> csv::Reader<R> {
    csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_reader(reader)
}

fn parse_number(label: &str, line: u64, field: &str, what: &str) -> Result<f64> {
    field
        .parse::<f64>()
        .ok()
        .filter(|v| v.is_finite())
        .ok_or_else(|| parse_err(label, line, format!("{what}: `{field}` is not a number")))
}

pub fn parse_profiles<R: Read>(reader: R, label: &str, slots_per_day: usize) -> Result<Vec<Vec<f64>>> {
    let mut rdr = csv_reader(reader);
    let expected = ["slot", "cluster0", "cluster1", "cluster2", "cluster3"];
    let headers = rdr.headers()?.clone();
    if headers.iter().collect::<Vec<_>>() != expected {
        return Err(parse_err(label, 1, format!("header must be `{}`", expected.join(","))));
    }
    let mut clusters: Vec<Vec<f64>> = (0..CLUSTER_COUNT).map(|_| Vec::with_capacity(slots_per_day)).collect();
    for (row, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line());
            parse_err(label, line, e.to_string())
        })?;
        let line = rec.position().map_or(0, |p| p.line());
        if rec.len() != expected.len() {
            return Err(parse_err(label, line, format!("expected {} fields, got {}", expected.len(), rec.len())));
        }
        let slot = parse_number(label, line, &rec[0], "slot")?;
        if slot != row as f64 {
            return Err(parse_err(label, line, format!("slot {slot} out of order, expected {row}")));
        }
        for (c, cluster) in clusters.iter_mut().enumerate() {
            let v = parse_number(label, line, &rec[c + 1], "load")?;
            if !(0.0..=1.0).contains(&v) {
                return Err(parse_err(label, line, format!("cluster{c} value {v} outside [0, 1]")));
            }
            cluster.push(v);
        }
    }
    let len = clusters[0].len();
    if len != slots_per_day {
        return Err(parse_err(
            label,
            len as u64 + 1,
            format!("profile has {len} slots, expected {slots_per_day}"),
        ));
    }
    Ok(clusters)
}

pub fn load_profiles<R: Rng + ?Sized>(
    path: &Path,
    slots_per_day: usize,
    stations: usize,
    rng: &mut R,
) -> Result<LoadProfileSet> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let clusters = parse_profiles(file, &path.display().to_string(), slots_per_day)?;
    Ok(LoadProfileSet::assign(clusters, stations, rng))
}

pub fn parse_harvest<R: Read>(reader: R, label: &str) -> Result<Vec<RawHarvest>> {
    let mut rdr = csv_reader(reader);
    let expected = ["timestamp", "solar", "wind"];
    let headers = rdr.headers()?.clone();
    if headers.iter().collect::<Vec<_>>() != expected {
        return Err(parse_err(label, 1, format!("header must be `{}`", expected.join(","))));
    }
    let mut out: Vec<RawHarvest> = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line());
            parse_err(label, line, e.to_string())
        })?;
        let line = rec.position().map_or(0, |p| p.line());
        if rec.len() != 3 {
            return Err(parse_err(label, line, format!("expected 3 fields, got {}", rec.len())));
        }
        let sample = RawHarvest {
            timestamp_s: parse_number(label, line, &rec[0], "timestamp")?,
            solar: parse_number(label, line, &rec[1], "solar")?,
            wind: parse_number(label, line, &rec[2], "wind")?,
        };
        if sample.solar < 0.0 || sample.wind < 0.0 {
            return Err(parse_err(label, line, "harvested energy must be non-negative"));
        }
        if let Some(prev) = out.last() {
            if sample.timestamp_s <= prev.timestamp_s {
                return Err(parse_err(label, line, "timestamps must be strictly increasing"));
            }
        }
        out.push(sample);
    }
    if out.is_empty() {
        return Err(parse_err(label, 1, "no samples"));
    }
    Ok(out)
}

/// Sums samples into slot-long windows starting at the window that holds the
/// first timestamp. Every window up to the last one must hold a sample.
pub fn resample(samples: &[RawHarvest], slot_duration_s: f64, label: &str) -> Result<Vec<(f64, f64)>> {
    let Some(first) = samples.first() else {
        return Ok(Vec::new());
    };
    let origin = (first.timestamp_s / slot_duration_s).floor();
    let window = |ts: f64| ((ts / slot_duration_s).floor() - origin) as usize;
    let count = window(samples[samples.len() - 1].timestamp_s) + 1;
    let mut sums = vec![(0.0, 0.0); count];
    let mut seen = vec![false; count];
    for s in samples {
        let w = window(s.timestamp_s);
        sums[w].0 += s.solar;
        sums[w].1 += s.wind;
        seen[w] = true;
    }
    let missing: Vec<usize> = seen.iter().enumerate().filter(|(_, &s)| !s).map(|(i, _)| i).collect();
    if !missing.is_empty() {
        return Err(Error::MissingWindows {
            path: label.to_string(),
            windows: missing,
        });
    }
    Ok(sums)
}

pub fn load_harvest(path: &Path, slot_duration_s: f64, beta_max_j: f64, peak_fraction: f64) -> Result<HarvestTraceSet> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let label = path.display().to_string();
    let samples = parse_harvest(file, &label)?;
    HarvestTraceSet::from_raw(&samples, slot_duration_s, peak_fraction * beta_max_j, &label)
}

pub fn write_profiles<W: Write>(out: W, clusters: &[Vec<f64>]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["slot", "cluster0", "cluster1", "cluster2", "cluster3"])?;
    for slot in 0..clusters[0].len() {
        let mut row = vec![slot.to_string()];
        row.extend(clusters.iter().map(|c| format!("{:.4}", c[slot])));
        w.write_record(&row)?;
    }
    w.flush().map_err(|e| Error::io("<profiles>", e))?;
    Ok(())
}

pub fn write_harvest<W: Write>(out: W, samples: &[RawHarvest]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["timestamp", "solar", "wind"])?;
    for s in samples {
        w.write_record([
            format!("{}", s.timestamp_s),
            format!("{:.6}", s.solar),
            format!("{:.6}", s.wind),
        ])?;
    }
    w.flush().map_err(|e| Error::io("<harvest>", e))?;
    Ok(())
}

fn bump(hour: f64, centre: f64, width: f64) -> f64 {
    // circular distance on the 24 h clock
    let d = (hour - centre).rem_euclid(24.0);
    let d = d.min(24.0 - d);
    (-d * d / (2.0 * width * width)).exp()
}

/// Four bimodal daytime clusters: (base, first peak, second peak).
const CLUSTER_SHAPES: [(f64, (f64, f64, f64), (f64, f64, f64)); CLUSTER_COUNT] = [
    (0.08, (11.0, 0.80, 2.0), (16.0, 0.70, 2.0)),
    (0.12, (13.0, 0.55, 2.5), (21.0, 0.80, 2.0)),
    (0.10, (10.0, 0.65, 2.0), (19.0, 0.65, 2.5)),
    (0.15, (14.0, 0.50, 3.0), (23.0, 0.75, 1.5)),
];

pub fn synthetic_profiles<R: Rng + ?Sized>(slots_per_day: usize, rng: &mut R) -> Vec<Vec<f64>> {
    CLUSTER_SHAPES
        .iter()
        .map(|&(base, (c1, a1, w1), (c2, a2, w2))| {
            (0..slots_per_day)
                .map(|s| {
                    let h = s as f64 * 24.0 / slots_per_day as f64;
                    let v = base + a1 * bump(h, c1, w1) + a2 * bump(h, c2, w2) + rng.gen_range(-0.03..=0.03);
                    v.clamp(0.0, 1.0)
                })
                .collect()
        })
        .collect()
}

/// Raw solar/wind samples every `sample_period_s`: a solar bell between 06:00
/// and 18:00 with a per-day amplitude, and a mean-reverting noisy wind.
pub fn synthetic_harvest<R: Rng + ?Sized>(days: usize, sample_period_s: f64, rng: &mut R) -> Vec<RawHarvest> {
    let per_day = (86_400.0 / sample_period_s).round() as usize;
    let mut wind: f64 = 0.3;
    let mut out = Vec::with_capacity(days * per_day);
    for day in 0..days {
        let amplitude = rng.gen_range(0.85..=1.0);
        for i in 0..per_day {
            let t = (day * per_day + i) as f64 * sample_period_s;
            let h = i as f64 * sample_period_s / 3_600.0;
            let solar = if (6.0..18.0).contains(&h) {
                let s = (PI * (h - 6.0) / 12.0).sin().powf(1.5);
                (amplitude * s * (1.0 + rng.gen_range(-0.05..=0.05))).max(0.0)
            } else {
                0.0
            };
            wind = (0.97 * wind + 0.03 * 0.3 + rng.gen_range(-0.04..=0.04)).max(0.0);
            out.push(RawHarvest {
                timestamp_s: t,
                solar,
                wind,
            });
        }
    }
    out
}
