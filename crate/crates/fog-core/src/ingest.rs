//! Daphnet-format recording ingestion and synthetic recording generation.
//!
//! The Daphnet text format carries one sample per line: 11 whitespace
//! separated integers, in the order
//!
//! ```text
//! time_ms  ankle_x ankle_y ankle_z  thigh_x thigh_y thigh_z  trunk_x trunk_y trunk_z  annotation
//! ```
//!
//! Accelerations are integer milli-g. The annotation is 0 (outside the
//! experiment protocol), 1 (no freeze) or 2 (freeze). The sampling rate is
//! fixed at 64 Hz.

use std::fmt;
use std::io::{BufRead, Write};
use std::ops::Range;
use std::path::Path;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Fixed sampling rate of the Daphnet sensors.
pub const SAMPLE_RATE_HZ: u32 = 64;

/// Per-sample ground-truth annotation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Annotation {
    /// Subject was not performing the experiment protocol.
    OutOfExperiment,
    NoFreeze,
    Freeze,
}

impl Annotation {
    pub fn from_raw(value: i64) -> Option<Self> {
        match value {
            0 => Some(Annotation::OutOfExperiment),
            1 => Some(Annotation::NoFreeze),
            2 => Some(Annotation::Freeze),
            _ => None,
        }
    }

    pub fn as_raw(self) -> i64 {
        match self {
            Annotation::OutOfExperiment => 0,
            Annotation::NoFreeze => 1,
            Annotation::Freeze => 2,
        }
    }
}

/// One accelerometer sample: timestamp, 9 acceleration axes, annotation.
///
/// Accelerations stay in integer milli-g until feature extraction so that
/// ingestion is lossless.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Sample {
    pub time_ms: i64,
    /// Ordered ankle x,y,z, thigh x,y,z, trunk x,y,z.
    pub accel: [i32; 9],
    pub annotation: Annotation,
}

/// Body placement of a sensor.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Sensor {
    Ankle,
    Thigh,
    Trunk,
}

impl Sensor {
    pub const ALL: [Sensor; 3] = [Sensor::Ankle, Sensor::Thigh, Sensor::Trunk];

    pub fn name(self) -> &'static str {
        match self {
            Sensor::Ankle => "ankle",
            Sensor::Thigh => "thigh",
            Sensor::Trunk => "trunk",
        }
    }

    /// Index into the 3-sensor layout (0 = ankle, 1 = thigh, 2 = trunk).
    pub fn index(self) -> usize {
        match self {
            Sensor::Ankle => 0,
            Sensor::Thigh => 1,
            Sensor::Trunk => 2,
        }
    }
}

impl fmt::Display for Sensor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Axis of a sensor channel. `Magnitude` is the derived Euclidean norm.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Axis {
    X,
    Y,
    Z,
    Magnitude,
}

impl Axis {
    pub const ALL: [Axis; 4] = [Axis::X, Axis::Y, Axis::Z, Axis::Magnitude];

    pub fn name(self) -> &'static str {
        match self {
            Axis::X => "x",
            Axis::Y => "y",
            Axis::Z => "z",
            Axis::Magnitude => "mag",
        }
    }
}

/// One of the 12 signal channels: 9 raw axes plus 3 derived magnitudes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Channel {
    pub sensor: Sensor,
    pub axis: Axis,
}

impl Channel {
    pub fn new(sensor: Sensor, axis: Axis) -> Self {
        Channel { sensor, axis }
    }

    /// All 12 valid channels, grouped per sensor as x, y, z, magnitude.
    pub fn all() -> [Channel; 12] {
        let mut out = [Channel::new(Sensor::Ankle, Axis::X); 12];
        let mut i = 0;
        for sensor in Sensor::ALL {
            for axis in Axis::ALL {
                out[i] = Channel::new(sensor, axis);
                i += 1;
            }
        }
        out
    }

    /// The 9 raw (non-magnitude) axes in accel layout order.
    pub fn raw_axes() -> [Channel; 9] {
        let mut out = [Channel::new(Sensor::Ankle, Axis::X); 9];
        let mut i = 0;
        for sensor in Sensor::ALL {
            for axis in [Axis::X, Axis::Y, Axis::Z] {
                out[i] = Channel::new(sensor, axis);
                i += 1;
            }
        }
        out
    }

    pub fn name(&self) -> String {
        format!("{}_{}", self.sensor.name(), self.axis.name())
    }

    /// Index into `Sample::accel` for raw axes; `None` for magnitudes.
    pub fn accel_index(&self) -> Option<usize> {
        let axis = match self.axis {
            Axis::X => 0,
            Axis::Y => 1,
            Axis::Z => 2,
            Axis::Magnitude => return None,
        };
        Some(self.sensor.index() * 3 + axis)
    }
}

impl fmt::Display for Channel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}_{}", self.sensor.name(), self.axis.name())
    }
}

/// One patient session: ordered samples, derived magnitude channels, and the
/// contiguous segment spans left over after annotation-0 removal.
#[derive(Debug, Clone, PartialEq)]
pub struct Recording {
    pub patient_id: String,
    pub sample_rate_hz: u32,
    pub samples: Vec<Sample>,
    /// One magnitude series per sensor (ankle, thigh, trunk), each of the
    /// same length as `samples`. Empty until [`compute_magnitudes`] runs.
    pub magnitudes: Vec<Vec<f64>>,
    /// Half-open index ranges of samples that were contiguous in the source.
    /// Windows must never span a boundary between two segments.
    pub segments: Vec<Range<usize>>,
}

impl Recording {
    /// An empty recording for the given patient.
    pub fn empty(patient_id: impl Into<String>) -> Self {
        Recording {
            patient_id: patient_id.into(),
            sample_rate_hz: SAMPLE_RATE_HZ,
            samples: Vec::new(),
            magnitudes: Vec::new(),
            segments: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn has_magnitudes(&self) -> bool {
        self.magnitudes.len() == 3 && self.magnitudes.iter().all(|m| m.len() == self.samples.len())
    }

    /// Value of `channel` at sample index `i`. Magnitude channels require
    /// [`compute_magnitudes`] to have run.
    pub fn channel_value(&self, channel: Channel, i: usize) -> f64 {
        match channel.accel_index() {
            Some(a) => f64::from(self.samples[i].accel[a]),
            None => self.magnitudes[channel.sensor.index()][i],
        }
    }
}

/// Parse a Daphnet-format text stream into a [`Recording`].
///
/// Every sample is kept, including annotation-0 ones; removal is a separate
/// step ([`filter_annotation_zero`]). Empty lines are skipped. Returns a
/// parse error with a 1-based line number for malformed lines.
pub fn parse_daphnet(reader: impl BufRead, patient_id: &str) -> Result<Recording> {
    let mut samples = Vec::new();
    let mut prev_time: Option<i64> = None;
    for (idx, line) in reader.lines().enumerate() {
        let line_no = idx + 1;
        let line = line?;
        let trimmed = line.trim();
        if trimmed.is_empty() {
            continue;
        }
        let fields: Vec<&str> = trimmed.split_whitespace().collect();
        if fields.len() != 11 {
            return Err(Error::parse(
                line_no,
                format!("expected 11 fields, found {}", fields.len()),
            ));
        }
        let mut values = [0i64; 11];
        for (j, field) in fields.iter().enumerate() {
            values[j] = field.parse::<i64>().map_err(|_| {
                Error::parse(line_no, format!("field {} is not an integer: {field:?}", j + 1))
            })?;
        }
        let time_ms = values[0];
        if let Some(prev) = prev_time {
            if time_ms <= prev {
                return Err(Error::parse(
                    line_no,
                    format!("timestamps must be strictly increasing ({prev} then {time_ms})"),
                ));
            }
        }
        prev_time = Some(time_ms);
        let mut accel = [0i32; 9];
        for (j, slot) in accel.iter_mut().enumerate() {
            let v = values[j + 1];
            *slot = i32::try_from(v).map_err(|_| {
                Error::parse(line_no, format!("acceleration out of range: {v}"))
            })?;
        }
        let annotation = Annotation::from_raw(values[10]).ok_or_else(|| {
            Error::parse(line_no, format!("annotation must be 0, 1 or 2, found {}", values[10]))
        })?;
        samples.push(Sample {
            time_ms,
            accel,
            annotation,
        });
    }
    let segments = if samples.is_empty() {
        Vec::new()
    } else {
        Vec::from([0..samples.len()])
    };
    Ok(Recording {
        patient_id: patient_id.to_string(),
        sample_rate_hz: SAMPLE_RATE_HZ,
        samples,
        magnitudes: Vec::new(),
        segments,
    })
}

/// Serialize a recording back to the Daphnet 11-column text format.
pub fn write_daphnet(recording: &Recording, mut writer: impl Write) -> Result<()> {
    for s in &recording.samples {
        write!(writer, "{}", s.time_ms)?;
        for a in s.accel {
            write!(writer, " {a}")?;
        }
        writeln!(writer, " {}", s.annotation.as_raw())?;
    }
    Ok(())
}

/// Remove annotation-0 samples, recording contiguity breaks as segment
/// boundaries so later windowing never bridges a removed gap.
pub fn filter_annotation_zero(recording: &Recording) -> Recording {
    let had_magnitudes = recording.has_magnitudes();
    let mut samples = Vec::with_capacity(recording.samples.len());
    let mut magnitudes: Vec<Vec<f64>> = if had_magnitudes {
        vec![Vec::new(), Vec::new(), Vec::new()]
    } else {
        Vec::new()
    };
    let mut segments: Vec<Range<usize>> = Vec::new();
    let mut prev_source_idx: Option<usize> = None;

    for (i, sample) in recording.samples.iter().enumerate() {
        if sample.annotation == Annotation::OutOfExperiment {
            continue;
        }
        let contiguous = prev_source_idx.is_some_and(|p| p + 1 == i);
        if contiguous {
            segments.last_mut().expect("segment open").end += 1;
        } else {
            let start = samples.len();
            segments.push(start..start + 1);
        }
        samples.push(*sample);
        if had_magnitudes {
            for (k, series) in magnitudes.iter_mut().enumerate() {
                series.push(recording.magnitudes[k][i]);
            }
        }
        prev_source_idx = Some(i);
    }

    Recording {
        patient_id: recording.patient_id.clone(),
        sample_rate_hz: recording.sample_rate_hz,
        samples,
        magnitudes,
        segments,
    }
}

/// Derive the per-sensor magnitude channel sqrt(x^2 + y^2 + z^2).
pub fn compute_magnitudes(recording: &Recording) -> Recording {
    let mut out = recording.clone();
    out.magnitudes = Sensor::ALL
        .iter()
        .map(|sensor| {
            let base = sensor.index() * 3;
            recording
                .samples
                .iter()
                .map(|s| {
                    let x = f64::from(s.accel[base]);
                    let y = f64::from(s.accel[base + 1]);
                    let z = f64::from(s.accel[base + 2]);
                    (x * x + y * y + z * z).sqrt()
                })
                .collect()
        })
        .collect();
    out
}

/// Dump a recording as CSV with raw axes, magnitudes and the annotation.
/// Magnitudes are computed on the fly when absent.
pub fn write_csv(recording: &Recording, mut writer: impl Write) -> Result<()> {
    write!(writer, "time_ms")?;
    for ch in Channel::raw_axes() {
        write!(writer, ",{}", ch.name())?;
    }
    for sensor in Sensor::ALL {
        write!(writer, ",{}_mag", sensor.name())?;
    }
    writeln!(writer, ",annotation")?;

    let rec = if recording.has_magnitudes() {
        recording.clone()
    } else {
        compute_magnitudes(recording)
    };
    for (i, s) in rec.samples.iter().enumerate() {
        write!(writer, "{}", s.time_ms)?;
        for a in s.accel {
            write!(writer, ",{a}")?;
        }
        for series in &rec.magnitudes {
            write!(writer, ",{}", format_float(series[i]))?;
        }
        writeln!(writer, ",{}", s.annotation.as_raw())?;
    }
    Ok(())
}

/// 17 significant digits: enough for a lossless f64 round trip.
pub(crate) fn format_float(v: f64) -> String {
    format!("{v:.16e}")
}

/// One scripted freeze episode of a synthetic recording.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FreezeEpisode {
    pub start_s: f64,
    pub duration_s: f64,
}

/// Recipe for a synthetic labeled recording.
///
/// Walking spans carry a dominant sinusoid in the locomotor band, freeze
/// spans one in the freeze band, both plus Gaussian noise, on all 9 axes.
/// Each sensor also carries a constant gravity component (a random direction
/// scaled to `gravity_mg`); without it the derived magnitude channel would
/// rectify the oscillation and double its frequency, which real
/// accelerometer signals do not do.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SynthSpec {
    pub patient_id: String,
    pub duration_s: f64,
    pub episodes: Vec<FreezeEpisode>,
    /// Standard deviation of additive noise, milli-g.
    pub noise_mg: f64,
    /// Dominant walking frequency, Hz (locomotor band is 0.5-3 Hz).
    pub walk_hz: f64,
    /// Dominant freeze-trembling frequency, Hz (freeze band is 3-8 Hz).
    pub freeze_hz: f64,
    /// Sinusoid amplitude, milli-g.
    pub amplitude_mg: f64,
    /// Magnitude of the constant per-sensor gravity offset, milli-g.
    pub gravity_mg: f64,
}

impl Default for SynthSpec {
    fn default() -> Self {
        SynthSpec {
            patient_id: "synth".to_string(),
            duration_s: 60.0,
            episodes: Vec::new(),
            noise_mg: 50.0,
            walk_hz: 2.0,
            freeze_hz: 6.0,
            amplitude_mg: 400.0,
            gravity_mg: 1000.0,
        }
    }
}

/// Generate a deterministic synthetic recording.
///
/// Each axis gets its own random phase and amplitude scale so the nine
/// channels are correlated but not identical. Sample values are rounded to
/// integer milli-g so the result round-trips through the text format.
pub fn generate_synthetic(spec: &SynthSpec, seed: u64) -> Result<Recording> {
    let positive = |v: f64| v.is_finite() && v > 0.0;
    if !positive(spec.duration_s) {
        return Err(Error::invalid("synthetic duration must be positive"));
    }
    if !positive(spec.walk_hz) || !positive(spec.freeze_hz) || spec.amplitude_mg < 0.0 {
        return Err(Error::invalid("synthetic frequencies and amplitude must be positive"));
    }
    if spec.noise_mg < 0.0 || spec.gravity_mg < 0.0 {
        return Err(Error::invalid("noise and gravity levels must be non-negative"));
    }
    let fs = f64::from(SAMPLE_RATE_HZ);
    let n = (spec.duration_s * fs).round() as usize;
    if n == 0 {
        return Err(Error::invalid("synthetic duration too short for one sample"));
    }
    for ep in &spec.episodes {
        if ep.start_s < 0.0 || ep.duration_s <= 0.0 || ep.start_s + ep.duration_s > spec.duration_s {
            return Err(Error::invalid(format!(
                "freeze episode {:.2}s+{:.2}s does not fit in {:.2}s",
                ep.start_s, ep.duration_s, spec.duration_s
            )));
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    // One phase per sensor (limb axes oscillate coherently), one amplitude
    // scale per axis, one gravity direction per sensor. Gravity components
    // stay positive and bounded away from zero so the oscillation always has
    // a strong projection onto the gravity axis; that keeps the derived
    // magnitude channel dominated by the fundamental frequency instead of
    // its rectified double.
    let mut phases = [0.0f64; 3];
    let mut scales = [1.0f64; 9];
    let mut gravity = [0.0f64; 9];
    for s in 0..3 {
        phases[s] = rng.random_range(0.0..std::f64::consts::TAU);
        for a in 0..3 {
            scales[s * 3 + a] = rng.random_range(0.8..1.2);
        }
        let mut dir = [0.0f64; 3];
        for d in dir.iter_mut() {
            *d = rng.random_range(0.2..1.0);
        }
        let norm = dir.iter().map(|v| v * v).sum::<f64>().sqrt();
        for (a, d) in dir.iter().enumerate() {
            gravity[s * 3 + a] = spec.gravity_mg * d / norm;
        }
    }
    let noise = Normal::new(0.0, spec.noise_mg.max(f64::MIN_POSITIVE))
        .expect("valid normal distribution");

    // Per-sample freeze mask from the episode list.
    let mut frozen = vec![false; n];
    for ep in &spec.episodes {
        let start = (ep.start_s * fs).round() as usize;
        let end = ((ep.start_s + ep.duration_s) * fs).round() as usize;
        for flag in frozen.iter_mut().take(end.min(n)).skip(start) {
            *flag = true;
        }
    }

    // The oscillation phase integrates the instantaneous frequency so regime
    // changes are waveform-continuous; a hard phase jump would splash
    // broadband energy into both bands around every episode boundary.
    let mut samples = Vec::with_capacity(n);
    let mut theta = phases;
    for (i, &is_frozen) in frozen.iter().enumerate() {
        let freq = if is_frozen { spec.freeze_hz } else { spec.walk_hz };
        let mut accel = [0i32; 9];
        for k in 0..9 {
            let mut v = gravity[k] + spec.amplitude_mg * scales[k] * theta[k / 3].sin();
            if spec.noise_mg > 0.0 {
                v += noise.sample(&mut rng);
            }
            accel[k] = v.round() as i32;
        }
        for th in theta.iter_mut() {
            *th += std::f64::consts::TAU * freq / fs;
        }
        samples.push(Sample {
            time_ms: (i as f64 * 1000.0 / fs).round() as i64,
            accel,
            annotation: if is_frozen {
                Annotation::Freeze
            } else {
                Annotation::NoFreeze
            },
        });
    }

    Ok(Recording {
        patient_id: spec.patient_id.clone(),
        sample_rate_hz: SAMPLE_RATE_HZ,
        samples,
        magnitudes: Vec::new(),
        segments: Vec::from([0..n]),
    })
}

/// Load every Daphnet session file (`S##R##.txt`) under `dir`.
///
/// Returns one recording per file, sorted by file name; the patient id is
/// the `S##` prefix, so multiple sessions of one patient share an id.
pub fn load_daphnet_dir(dir: &Path) -> Result<Vec<Recording>> {
    let mut paths: Vec<_> = std::fs::read_dir(dir)?
        .filter_map(|entry| entry.ok().map(|e| e.path()))
        .filter(|p| {
            p.extension().is_some_and(|e| e == "txt")
                && p.file_stem()
                    .and_then(|s| s.to_str())
                    .is_some_and(is_session_stem)
        })
        .collect();
    paths.sort();
    if paths.is_empty() {
        return Err(Error::invalid(format!(
            "no Daphnet session files (S##R##.txt) found in {}",
            dir.display()
        )));
    }
    let mut recordings = Vec::with_capacity(paths.len());
    for path in paths {
        let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or_default();
        let patient_id = stem[..3].to_string();
        let file = std::fs::File::open(&path)?;
        let reader = std::io::BufReader::new(file);
        recordings.push(parse_daphnet(reader, &patient_id)?);
    }
    Ok(recordings)
}

fn is_session_stem(stem: &str) -> bool {
    let bytes = stem.as_bytes();
    bytes.len() == 6
        && bytes[0] == b'S'
        && bytes[1].is_ascii_digit()
        && bytes[2].is_ascii_digit()
        && bytes[3] == b'R'
        && bytes[4].is_ascii_digit()
        && bytes[5].is_ascii_digit()
}
