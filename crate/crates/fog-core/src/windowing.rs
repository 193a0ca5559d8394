//! Fixed-length overlapping window segmentation with binary freeze labels.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::{Annotation, Channel, Recording};

/// How a window's per-sample annotations collapse into one binary label.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LabelRule {
    /// Freeze iff strictly more than half the samples are freeze;
    /// ties resolve to no-freeze.
    #[default]
    Majority,
    /// Freeze iff at least one sample is freeze.
    AnyFreeze,
}

/// Window geometry: 256 samples (4 s at 64 Hz) advancing 32 samples (0.5 s)
/// by default.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct WindowSpec {
    pub length_samples: usize,
    pub stride_samples: usize,
    pub label_rule: LabelRule,
}

impl Default for WindowSpec {
    fn default() -> Self {
        WindowSpec {
            length_samples: 256,
            stride_samples: 32,
            label_rule: LabelRule::Majority,
        }
    }
}

impl WindowSpec {
    pub fn validate(&self) -> Result<()> {
        if self.stride_samples == 0 || self.stride_samples > self.length_samples {
            return Err(Error::invalid(format!(
                "stride must satisfy 0 < stride <= length, got stride {} length {}",
                self.stride_samples, self.length_samples
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WindowLabel {
    NoFreeze,
    Freeze,
}

impl WindowLabel {
    pub fn is_freeze(self) -> bool {
        self == WindowLabel::Freeze
    }
}

/// One fixed-length slice of a recording: all 12 channels plus a label.
///
/// `data` is ordered as [`Channel::all`]; every channel holds exactly
/// `length_samples` values. A window never crosses a segment boundary.
#[derive(Debug, Clone, PartialEq)]
pub struct Window {
    pub patient_id: String,
    pub segment: usize,
    /// Index of the first sample within the (filtered) recording.
    pub start_index: usize,
    pub data: Vec<Vec<f64>>,
    pub label: WindowLabel,
}

impl Window {
    pub fn len(&self) -> usize {
        self.data.first().map_or(0, Vec::len)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Channel data by position in the [`Channel::all`] layout.
    pub fn channel(&self, index: usize) -> &[f64] {
        &self.data[index]
    }
}

/// Collapse per-sample annotations into a window label.
///
/// Annotation-0 samples must already be filtered out.
pub fn label_window(annotations: &[Annotation], rule: LabelRule) -> WindowLabel {
    let freeze = annotations
        .iter()
        .filter(|a| **a == Annotation::Freeze)
        .count();
    let is_freeze = match rule {
        LabelRule::Majority => 2 * freeze > annotations.len(),
        LabelRule::AnyFreeze => freeze > 0,
    };
    if is_freeze {
        WindowLabel::Freeze
    } else {
        WindowLabel::NoFreeze
    }
}

/// Slice each contiguous segment of `recording` into overlapping windows.
///
/// A segment of N samples yields floor((N - W)/S) + 1 windows left-aligned at
/// multiples of the stride S; segments shorter than W yield none. Requires a
/// filtered recording with magnitudes computed.
pub fn segment(recording: &Recording, spec: &WindowSpec) -> Result<Vec<Window>> {
    spec.validate()?;
    if !recording.has_magnitudes() {
        return Err(Error::invalid(
            "recording has no magnitude channels; run compute_magnitudes first",
        ));
    }
    if recording
        .samples
        .iter()
        .any(|s| s.annotation == Annotation::OutOfExperiment)
    {
        return Err(Error::invalid(
            "recording still contains annotation-0 samples; run filter_annotation_zero first",
        ));
    }

    let channels = Channel::all();
    let w = spec.length_samples;
    let s = spec.stride_samples;
    let mut windows = Vec::new();
    for (seg_idx, seg) in recording.segments.iter().enumerate() {
        let n = seg.end - seg.start;
        if n < w {
            continue;
        }
        let count = (n - w) / s + 1;
        for k in 0..count {
            let start = seg.start + k * s;
            let data: Vec<Vec<f64>> = channels
                .iter()
                .map(|ch| (start..start + w).map(|i| recording.channel_value(*ch, i)).collect())
                .collect();
            let annotations: Vec<Annotation> = recording.samples[start..start + w]
                .iter()
                .map(|smp| smp.annotation)
                .collect();
            windows.push(Window {
                patient_id: recording.patient_id.clone(),
                segment: seg_idx,
                start_index: start,
                data,
                label: label_window(&annotations, spec.label_rule),
            });
        }
    }
    Ok(windows)
}
