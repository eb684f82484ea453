//! Solar, load and temperature inputs.
//!
//! Synthetic use archetypes stand in for measured household demand. Field
//! logs come in through [`ingest_csv`]. [`stress_factors`] summarises a
//! simulated or measured battery trace.

use std::path::Path;

use chrono::{DateTime, NaiveDate, NaiveDateTime, TimeDelta};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const SECONDS_PER_DAY: f64 = 86_400.0;
const TIMESTAMP_FORMAT: &str = "%Y-%m-%dT%H:%M:%S";

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Sample {
    pub load_w: f64,
    pub solar_w: f64,
    pub temp_c: f64,
}

/// Uniformly sampled inputs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimeSeries {
    pub start_time: NaiveDateTime,
    pub dt_s: f64,
    pub samples: Vec<Sample>,
}

impl TimeSeries {
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn timestamp(&self, index: usize) -> NaiveDateTime {
        self.start_time + TimeDelta::milliseconds((index as f64 * self.dt_s * 1000.0).round() as i64)
    }

    /// Mean load energy per day (Wh).
    pub fn mean_daily_load_wh(&self) -> f64 {
        self.daily_energy(|s| s.load_w)
    }

    pub fn mean_daily_solar_wh(&self) -> f64 {
        self.daily_energy(|s| s.solar_w)
    }

    fn daily_energy(&self, f: impl Fn(&Sample) -> f64) -> f64 {
        if self.samples.is_empty() {
            return 0.0;
        }
        let wh: f64 = self.samples.iter().map(&f).sum::<f64>() * self.dt_s / 3600.0;
        let days = self.samples.len() as f64 * self.dt_s / SECONDS_PER_DAY;
        wh / days
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt_s > 0.0) {
            return Err(Error::Profile("dt must be positive".into()));
        }
        if self.samples.is_empty() {
            return Err(Error::Profile("time series is empty".into()));
        }
        if let Some(i) = self
            .samples
            .iter()
            .position(|s| !(s.load_w >= 0.0 && s.solar_w >= 0.0 && s.temp_c.is_finite()))
        {
            return Err(Error::Profile(format!("invalid sample at index {i}")));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum UseArchetype {
    High,
    Moderate,
    Low,
    Infrequent,
}

impl UseArchetype {
    pub const ALL: [UseArchetype; 4] = [
        UseArchetype::High,
        UseArchetype::Moderate,
        UseArchetype::Low,
        UseArchetype::Infrequent,
    ];

    pub fn name(self) -> &'static str {
        match self {
            UseArchetype::High => "high",
            UseArchetype::Moderate => "moderate",
            UseArchetype::Low => "low",
            UseArchetype::Infrequent => "infrequent",
        }
    }
}

impl std::str::FromStr for UseArchetype {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        UseArchetype::ALL
            .into_iter()
            .find(|a| a.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown archetype `{s}`")))
    }
}

/// Shape parameters of one synthetic household.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ArchetypeSpec {
    pub archetype: UseArchetype,
    /// Load energy on a day of use (Wh).
    pub daily_energy_wh: f64,
    /// Share of the daily load drawn after sunset.
    pub evening_fraction: f64,
    /// Length of each zero-load run (days); zero for regular use.
    pub nonuse_run_length: u32,
    /// Bounds on the length of the use runs between idle runs (days).
    pub use_run_length: (u32, u32),
    /// Day-to-day relative spread of the load energy.
    pub daily_variation: f64,
    pub panel_wp: f64,
    /// Daily weather factor bounds on the panel peak.
    pub weather_range: (f64, f64),
    pub temp_min_c: f64,
    pub temp_max_c: f64,
    /// Hour of the daily temperature peak.
    pub temp_peak_hour: f64,
}

impl ArchetypeSpec {
    pub fn defaults(archetype: UseArchetype) -> Self {
        let (daily_energy_wh, evening_fraction, nonuse_run_length) = match archetype {
            UseArchetype::High => (120.0, 0.7, 0),
            UseArchetype::Moderate => (80.0, 0.7, 0),
            UseArchetype::Low => (40.0, 0.7, 0),
            UseArchetype::Infrequent => (40.0, 0.7, 10),
        };
        Self {
            archetype,
            daily_energy_wh,
            evening_fraction,
            nonuse_run_length,
            use_run_length: (8, 14),
            daily_variation: 0.15,
            panel_wp: 50.0,
            weather_range: (0.3, 1.0),
            temp_min_c: 22.0,
            temp_max_c: 32.0,
            temp_peak_hour: 14.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |what: &str| Err(Error::Profile(format!("archetype {}: {what}", self.archetype.name())));
        if !(self.daily_energy_wh >= 0.0) {
            return bad("daily energy must be non-negative");
        }
        if !(0.0..=1.0).contains(&self.evening_fraction) {
            return bad("evening fraction must lie in [0, 1]");
        }
        if !(0.0..1.0).contains(&self.daily_variation) {
            return bad("daily variation must lie in [0, 1)");
        }
        if !(self.panel_wp >= 0.0) {
            return bad("panel rating must be non-negative");
        }
        let (w0, w1) = self.weather_range;
        if !(0.0 <= w0 && w0 <= w1 && w1 <= 1.0) {
            return bad("weather range must satisfy 0 <= lo <= hi <= 1");
        }
        if self.use_run_length.0 == 0 || self.use_run_length.0 > self.use_run_length.1 {
            return bad("use run length bounds must satisfy 1 <= lo <= hi");
        }
        if self.temp_min_c > self.temp_max_c {
            return bad("temp_min_c above temp_max_c");
        }
        Ok(())
    }
}

impl Default for ArchetypeSpec {
    fn default() -> Self {
        Self::defaults(UseArchetype::Low)
    }
}

/// Per-day random draws.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DayProfile {
    pub weather: f64,
    pub load_scale: f64,
    pub in_use: bool,
}

const SUNRISE_H: f64 = 6.0;
const SUNSET_H: f64 = 18.0;
const DAY_LOAD_START_H: f64 = 7.0;
const EVENING_END_H: f64 = 23.0;

/// Endless day-by-day generator; deterministic for a given seed.
#[derive(Debug, Clone)]
pub struct ArchetypeGenerator {
    spec: ArchetypeSpec,
    rng: ChaCha8Rng,
    use_left: u32,
    idle_left: u32,
}

impl ArchetypeGenerator {
    pub fn new(spec: ArchetypeSpec, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let use_left = if spec.nonuse_run_length > 0 {
            rng.gen_range(spec.use_run_length.0..=spec.use_run_length.1)
        } else {
            u32::MAX
        };
        Self {
            spec,
            rng,
            use_left,
            idle_left: 0,
        }
    }

    pub fn spec(&self) -> &ArchetypeSpec {
        &self.spec
    }

    pub fn next_day(&mut self) -> DayProfile {
        let (w0, w1) = self.spec.weather_range;
        let weather = w0 + (w1 - w0) * self.rng.gen::<f64>();
        let v = self.spec.daily_variation;
        let load_scale = 1.0 + v * (2.0 * self.rng.gen::<f64>() - 1.0);

        let in_use = if self.spec.nonuse_run_length == 0 {
            true
        } else if self.idle_left > 0 {
            self.idle_left -= 1;
            if self.idle_left == 0 {
                let (a, b) = self.spec.use_run_length;
                self.use_left = self.rng.gen_range(a..=b);
            }
            false
        } else {
            self.use_left -= 1;
            if self.use_left == 0 {
                self.idle_left = self.spec.nonuse_run_length;
            }
            true
        };
        DayProfile {
            weather,
            load_scale,
            in_use,
        }
    }

    /// Inputs at `seconds` into a day described by `day`.
    pub fn sample(&self, day: &DayProfile, seconds: f64) -> Sample {
        let s = &self.spec;
        let hour = seconds / 3600.0;
        let solar_w = if (SUNRISE_H..SUNSET_H).contains(&hour) {
            let phase = std::f64::consts::PI * (hour - SUNRISE_H) / (SUNSET_H - SUNRISE_H);
            (s.panel_wp * day.weather * phase.sin()).clamp(0.0, s.panel_wp)
        } else {
            0.0
        };
        let load_w = if !day.in_use {
            0.0
        } else {
            let energy = s.daily_energy_wh * day.load_scale;
            if (DAY_LOAD_START_H..SUNSET_H).contains(&hour) {
                energy * (1.0 - s.evening_fraction) / (SUNSET_H - DAY_LOAD_START_H)
            } else if (SUNSET_H..EVENING_END_H).contains(&hour) {
                energy * s.evening_fraction / (EVENING_END_H - SUNSET_H)
            } else {
                0.0
            }
        };
        let mean = 0.5 * (s.temp_max_c + s.temp_min_c);
        let amp = 0.5 * (s.temp_max_c - s.temp_min_c);
        let temp_c = mean
            + amp * (2.0 * std::f64::consts::PI * (hour - s.temp_peak_hour + 6.0) / 24.0).sin();
        Sample {
            load_w,
            solar_w,
            temp_c,
        }
    }
}

fn epoch() -> NaiveDateTime {
    NaiveDate::from_ymd_opt(2020, 1, 1)
        .and_then(|d| d.and_hms_opt(0, 0, 0))
        .expect("valid epoch")
}

/// `days` of synthetic inputs at resolution `dt_s`.
pub fn generate_archetype(spec: &ArchetypeSpec, days: u32, seed: u64, dt_s: f64) -> Result<TimeSeries> {
    spec.validate()?;
    if days == 0 {
        return Err(Error::Profile("need at least one day".into()));
    }
    let steps_per_day = steps_per_day(dt_s)?;
    let mut gen = ArchetypeGenerator::new(spec.clone(), seed);
    let mut samples = Vec::with_capacity(days as usize * steps_per_day);
    for _ in 0..days {
        let day = gen.next_day();
        samples.extend((0..steps_per_day).map(|k| gen.sample(&day, k as f64 * dt_s)));
    }
    Ok(TimeSeries {
        start_time: epoch(),
        dt_s,
        samples,
    })
}

/// Number of steps in a day; `dt_s` must divide it.
pub fn steps_per_day(dt_s: f64) -> Result<usize> {
    let n = SECONDS_PER_DAY / dt_s;
    if !(dt_s > 0.0) || (n - n.round()).abs() > 1e-9 || n.round() < 1.0 {
        return Err(Error::param("dt", format!("{dt_s} s does not divide one day")));
    }
    Ok(n.round() as usize)
}

/// CSV column names for ingestion.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ColumnMap {
    pub timestamp: String,
    pub load_w: String,
    pub solar_w: String,
    pub temp_c: String,
}

impl Default for ColumnMap {
    fn default() -> Self {
        Self {
            timestamp: "timestamp".into(),
            load_w: "load_w".into(),
            solar_w: "solar_w".into(),
            temp_c: "temp_c".into(),
        }
    }
}

/// Grid points filled by holding the previous value.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GapReport {
    pub filled: usize,
    pub expected: usize,
    pub filled_indices: Vec<usize>,
}

/// Largest tolerated share of filled grid points.
pub const MAX_GAP_FRACTION: f64 = 0.2;

fn parse_timestamp(raw: &str) -> Option<NaiveDateTime> {
    let raw = raw.trim();
    ["%Y-%m-%dT%H:%M:%S%.f", "%Y-%m-%d %H:%M:%S%.f", "%Y-%m-%dT%H:%M"]
        .iter()
        .find_map(|f| NaiveDateTime::parse_from_str(raw, f).ok())
        .or_else(|| DateTime::parse_from_rfc3339(raw).ok().map(|d| d.naive_utc()))
}

/// Reads a time-series CSV and resamples it onto a `dt_target` grid.
///
/// Each grid cell `[t, t + dt)` takes the first row inside it; an empty cell
/// holds the previous value and is counted in the gap report.
pub fn ingest_csv(path: &Path, columns: &ColumnMap, dt_target: f64) -> Result<(TimeSeries, GapReport)> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    ingest_reader(file, columns, dt_target)
}

pub fn ingest_reader<R: std::io::Read>(
    reader: R,
    columns: &ColumnMap,
    dt_target: f64,
) -> Result<(TimeSeries, GapReport)> {
    if !(dt_target > 0.0) {
        return Err(Error::param("dt", "target resolution must be positive"));
    }
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let headers = rdr.headers()?.clone();
    let col = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::Profile(format!("missing column `{name}`")))
    };
    let idx = [
        col(&columns.timestamp)?,
        col(&columns.load_w)?,
        col(&columns.solar_w)?,
        col(&columns.temp_c)?,
    ];

    let mut rows: Vec<(NaiveDateTime, Sample)> = Vec::new();
    let mut bad = Vec::new();
    for (i, record) in rdr.records().enumerate() {
        // header is line 1
        let line = i as u64 + 2;
        let Ok(record) = record else {
            bad.push(line);
            continue;
        };
        let field = |k: usize| record.get(idx[k]).unwrap_or("");
        let num = |k: usize| field(k).parse::<f64>().ok().filter(|v| v.is_finite());
        match (parse_timestamp(field(0)), num(1), num(2), num(3)) {
            (Some(t), Some(load_w), Some(solar_w), Some(temp_c)) if load_w >= 0.0 && solar_w >= 0.0 => {
                rows.push((t, Sample { load_w, solar_w, temp_c }))
            }
            _ => bad.push(line),
        }
    }
    if !bad.is_empty() {
        return Err(Error::CsvRows {
            count: bad.len(),
            lines: bad,
        });
    }
    if rows.is_empty() {
        return Err(Error::Profile("no data rows".into()));
    }
    if let Some(i) = rows.windows(2).position(|w| w[1].0 <= w[0].0) {
        return Err(Error::NonMonotone { index: i + 1 });
    }

    let start = rows[0].0;
    let offset = |t: NaiveDateTime| (t - start).num_milliseconds() as f64 / 1000.0;
    let span = offset(rows[rows.len() - 1].0);
    let n = (span / dt_target + 1e-9).floor() as usize + 1;

    let mut samples = Vec::with_capacity(n);
    let mut filled_indices = Vec::new();
    let mut cursor = 0;
    for k in 0..n {
        let lo = k as f64 * dt_target;
        let hi = lo + dt_target;
        while cursor < rows.len() && offset(rows[cursor].0) < lo - 1e-6 {
            cursor += 1;
        }
        if cursor < rows.len() && offset(rows[cursor].0) < hi - 1e-6 {
            samples.push(rows[cursor].1);
        } else {
            let held = samples.last().copied().unwrap_or(rows[0].1);
            samples.push(held);
            filled_indices.push(k);
        }
    }
    let report = GapReport {
        filled: filled_indices.len(),
        expected: n,
        filled_indices,
    };
    if report.filled as f64 > MAX_GAP_FRACTION * n as f64 {
        return Err(Error::TooManyGaps {
            missing: report.filled,
            expected: n,
        });
    }
    Ok((
        TimeSeries {
            start_time: start,
            dt_s: dt_target,
            samples,
        },
        report,
    ))
}

/// Writes a series in the dialect read by [`ingest_csv`].
pub fn write_csv(series: &TimeSeries, path: &Path) -> Result<()> {
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    write_series(series, file)
}

pub fn write_series<W: std::io::Write>(series: &TimeSeries, writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["timestamp", "load_w", "solar_w", "temp_c"])?;
    for (i, s) in series.samples.iter().enumerate() {
        w.write_record([
            series.timestamp(i).format(TIMESTAMP_FORMAT).to_string(),
            s.load_w.to_string(),
            s.solar_w.to_string(),
            s.temp_c.to_string(),
        ])?;
    }
    w.flush().map_err(|e| Error::io("<csv writer>", e))?;
    Ok(())
}

/// One step of a battery trace.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceStep {
    /// Positive while charging (A).
    pub current_a: f64,
    pub soc: f64,
    /// A full recharge completed during this step.
    pub full_charge: bool,
    /// The charger was in float during this step.
    #[serde(default)]
    pub float: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BatteryTrace {
    pub dt_s: f64,
    pub steps: Vec<TraceStep>,
}

#[derive(Serialize, Deserialize)]
struct TraceRow {
    time_s: f64,
    current_a: f64,
    soc: f64,
    full_charge: u8,
    #[serde(default)]
    float: u8,
}

impl BatteryTrace {
    pub fn write_csv<W: std::io::Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        for (i, s) in self.steps.iter().enumerate() {
            w.serialize(TraceRow {
                time_s: i as f64 * self.dt_s,
                current_a: s.current_a,
                soc: s.soc,
                full_charge: s.full_charge.into(),
                float: s.float.into(),
            })?;
        }
        w.flush().map_err(|e| Error::io("<trace writer>", e))?;
        Ok(())
    }

    /// Reads a trace CSV (`time_s,current_a,soc,full_charge[,float]`). The
    /// step is taken from the first two rows.
    pub fn read_csv<R: std::io::Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::Reader::from_reader(reader);
        let mut times = Vec::new();
        let mut steps = Vec::new();
        for row in rdr.deserialize::<TraceRow>() {
            let row = row?;
            times.push(row.time_s);
            steps.push(TraceStep {
                current_a: row.current_a,
                soc: row.soc,
                full_charge: row.full_charge != 0,
                float: row.float != 0,
            });
        }
        if steps.is_empty() {
            return Err(Error::Profile("trace is empty".into()));
        }
        let dt_s = if times.len() > 1 { times[1] - times[0] } else { 900.0 };
        if !(dt_s > 0.0) {
            return Err(Error::NonMonotone { index: 1 });
        }
        Ok(Self { dt_s, steps })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GapStats {
    pub count: usize,
    pub mean_h: f64,
    pub max_h: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StressFactors {
    /// Charge in over charge out; absent without any discharge.
    pub charge_factor: Option<f64>,
    /// Discharged charge (Ah).
    pub ah_throughput: f64,
    pub charge_ah: f64,
    /// Largest discharge current magnitude (A).
    pub highest_discharge_rate: f64,
    pub time_between_full_charge: Option<GapStats>,
    pub time_at_low_soc_h: f64,
    /// Counts of depth-of-discharge between consecutive full charges, in
    /// tenths (`[0, 0.1)`, ..., `[0.9, 1.0]`).
    pub partial_cycling: [u32; 10],
    pub days: usize,
    pub days_with_full_recharge: usize,
    pub full_recharge_day_fraction: f64,
    pub days_at_float: f64,
}

pub const LOW_SOC_THRESHOLD: f64 = 0.5;

/// Svoboda-style stress factors of a battery trace.
pub fn stress_factors(trace: &BatteryTrace) -> Result<StressFactors> {
    if trace.steps.is_empty() {
        return Err(Error::Profile("trace is empty".into()));
    }
    let dt_h = trace.dt_s / 3600.0;
    let steps_per_day = (SECONDS_PER_DAY / trace.dt_s).round().max(1.0) as usize;

    let mut charge_ah = 0.0;
    let mut discharge_ah = 0.0;
    let mut peak = 0.0_f64;
    let mut low_h = 0.0;
    let mut float_h = 0.0;
    let mut events = Vec::new();
    let mut partial = [0u32; 10];
    let mut min_since_full: Option<f64> = None;

    for (i, s) in trace.steps.iter().enumerate() {
        if s.current_a > 0.0 {
            charge_ah += s.current_a * dt_h;
        } else if s.current_a < 0.0 {
            discharge_ah -= s.current_a * dt_h;
            peak = peak.max(-s.current_a);
        }
        if s.soc < LOW_SOC_THRESHOLD {
            low_h += dt_h;
        }
        if s.float {
            float_h += dt_h;
        }
        if let Some(m) = min_since_full.as_mut() {
            *m = m.min(s.soc);
        }
        if s.full_charge {
            if let Some(m) = min_since_full {
                let depth = (1.0 - m).clamp(0.0, 1.0);
                partial[((depth * 10.0) as usize).min(9)] += 1;
            }
            min_since_full = Some(s.soc);
            events.push(i);
        }
    }

    let gaps: Vec<f64> = events.windows(2).map(|w| (w[1] - w[0]) as f64 * dt_h).collect();
    let time_between_full_charge = (!gaps.is_empty()).then(|| GapStats {
        count: gaps.len(),
        mean_h: gaps.iter().sum::<f64>() / gaps.len() as f64,
        max_h: gaps.iter().copied().fold(0.0, f64::max),
    });

    let days = trace.steps.len().div_ceil(steps_per_day);
    let mut full_days: Vec<usize> = events.iter().map(|i| i / steps_per_day).collect();
    full_days.dedup();
    Ok(StressFactors {
        charge_factor: (discharge_ah > 0.0).then(|| charge_ah / discharge_ah),
        ah_throughput: discharge_ah,
        charge_ah,
        highest_discharge_rate: peak,
        time_between_full_charge,
        time_at_low_soc_h: low_h,
        partial_cycling: partial,
        days,
        days_with_full_recharge: full_days.len(),
        full_recharge_day_fraction: full_days.len() as f64 / days as f64,
        days_at_float: float_h / 24.0,
    })
}
