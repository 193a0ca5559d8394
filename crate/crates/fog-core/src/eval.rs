//! Window-level confusion metrics, ROC/AUC and the train/test split
//! protocols.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::FeatureMatrix;

/// Window-level confusion counts; freeze is the positive class.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ConfusionCounts {
    pub true_pos: usize,
    pub false_pos: usize,
    pub true_neg: usize,
    pub false_neg: usize,
}

impl ConfusionCounts {
    pub fn total(&self) -> usize {
        self.true_pos + self.false_pos + self.true_neg + self.false_neg
    }

    pub fn add(&mut self, other: &ConfusionCounts) {
        self.true_pos += other.true_pos;
        self.false_pos += other.false_pos;
        self.true_neg += other.true_neg;
        self.false_neg += other.false_neg;
    }
}

/// Threshold `scores` (predicted freeze iff score >= threshold) against the
/// labels.
pub fn confusion(scores: &[f64], labels: &[bool], threshold: f64) -> Result<ConfusionCounts> {
    if scores.is_empty() {
        return Err(Error::invalid("cannot build a confusion matrix from zero windows"));
    }
    if scores.len() != labels.len() {
        return Err(Error::ShapeMismatch(
            "scores and labels must have equal lengths".to_string(),
        ));
    }
    let mut counts = ConfusionCounts::default();
    for (&score, &label) in scores.iter().zip(labels) {
        let predicted = score >= threshold;
        match (predicted, label) {
            (true, true) => counts.true_pos += 1,
            (true, false) => counts.false_pos += 1,
            (false, false) => counts.true_neg += 1,
            (false, true) => counts.false_neg += 1,
        }
    }
    Ok(counts)
}

/// Sensitivity TP/(TP+FN) and specificity TN/(TN+FP). A metric whose
/// denominator is zero is undefined and reported as `None`, never as 0.
pub fn sens_spec(counts: &ConfusionCounts) -> (Option<f64>, Option<f64>) {
    let sens = if counts.true_pos + counts.false_neg > 0 {
        Some(counts.true_pos as f64 / (counts.true_pos + counts.false_neg) as f64)
    } else {
        None
    };
    let spec = if counts.true_neg + counts.false_pos > 0 {
        Some(counts.true_neg as f64 / (counts.true_neg + counts.false_pos) as f64)
    } else {
        None
    };
    (sens, spec)
}

/// One operating point of the ROC curve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RocPoint {
    pub fpr: f64,
    pub tpr: f64,
    pub threshold: f64,
}

/// ROC curve (thresholds swept over the unique scores, plus sentinels) and
/// its trapezoidal area. Requires both classes present.
pub fn roc_auc(scores: &[f64], labels: &[bool]) -> Result<(Vec<RocPoint>, f64)> {
    if scores.len() != labels.len() {
        return Err(Error::ShapeMismatch(
            "scores and labels must have equal lengths".to_string(),
        ));
    }
    let positives = labels.iter().filter(|l| **l).count();
    let negatives = labels.len() - positives;
    if positives == 0 || negatives == 0 {
        return Err(Error::invalid("ROC needs both classes present"));
    }

    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| {
        scores[b]
            .partial_cmp(&scores[a])
            .expect("finite scores")
            .then(a.cmp(&b))
    });

    let mut points = vec![RocPoint {
        fpr: 0.0,
        tpr: 0.0,
        threshold: f64::INFINITY,
    }];
    let mut tp = 0usize;
    let mut fp = 0usize;
    let mut idx = 0;
    while idx < order.len() {
        let threshold = scores[order[idx]];
        // consume the whole tie group at once
        while idx < order.len() && scores[order[idx]] == threshold {
            if labels[order[idx]] {
                tp += 1;
            } else {
                fp += 1;
            }
            idx += 1;
        }
        points.push(RocPoint {
            fpr: fp as f64 / negatives as f64,
            tpr: tp as f64 / positives as f64,
            threshold,
        });
    }
    debug_assert_eq!(points.last().map(|p| (p.fpr, p.tpr)), Some((1.0, 1.0)));

    let mut auc = 0.0;
    for pair in points.windows(2) {
        auc += (pair[1].fpr - pair[0].fpr) * (pair[1].tpr + pair[0].tpr) / 2.0;
    }
    Ok((points, auc))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SplitMode {
    /// Disjoint train/test patients.
    SubjectIndependent,
    /// Per-patient stratified 70/30 split.
    SubjectDependent,
}

impl SplitMode {
    pub fn name(self) -> &'static str {
        match self {
            SplitMode::SubjectIndependent => "subject_independent",
            SplitMode::SubjectDependent => "subject_dependent",
        }
    }
}

/// How to divide windows into train and test sets.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SplitPlan {
    pub mode: SplitMode,
    /// Independent mode: training patient ids.
    pub train_patients: Vec<String>,
    /// Independent mode: test patient ids.
    pub test_patients: Vec<String>,
    /// Dependent mode: fraction of each class placed in training.
    pub train_fraction: f64,
    pub seed: u64,
    /// Dependent mode: take each class's first windows chronologically
    /// (limits leakage from overlapping windows); false draws a uniform
    /// random stratified split instead.
    pub chronological: bool,
}

impl Default for SplitPlan {
    fn default() -> Self {
        SplitPlan::independent_default()
    }
}

impl SplitPlan {
    /// The published protocol: train on patients 5-9, test on patients 1-3.
    pub fn independent_default() -> Self {
        SplitPlan {
            mode: SplitMode::SubjectIndependent,
            train_patients: ["S05", "S06", "S07", "S08", "S09"]
                .iter()
                .map(|s| s.to_string())
                .collect(),
            test_patients: ["S01", "S02", "S03"].iter().map(|s| s.to_string()).collect(),
            train_fraction: 0.7,
            seed: 0,
            chronological: true,
        }
    }

    pub fn dependent_default() -> Self {
        SplitPlan {
            mode: SplitMode::SubjectDependent,
            ..SplitPlan::independent_default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self.mode {
            SplitMode::SubjectIndependent => {
                if self.train_patients.is_empty() || self.test_patients.is_empty() {
                    return Err(Error::invalid(
                        "independent split needs non-empty train and test patient lists",
                    ));
                }
                if self
                    .train_patients
                    .iter()
                    .any(|p| self.test_patients.contains(p))
                {
                    return Err(Error::invalid("train and test patients must be disjoint"));
                }
            }
            SplitMode::SubjectDependent => {
                if !(self.train_fraction > 0.0 && self.train_fraction < 1.0) {
                    return Err(Error::invalid(format!(
                        "train fraction must lie in (0, 1), got {}",
                        self.train_fraction
                    )));
                }
            }
        }
        Ok(())
    }
}

/// Partition a feature matrix into train and test rows.
///
/// Independent mode selects rows by patient id. Dependent mode draws a
/// stratified split within one patient's matrix: per class, the first
/// `train_fraction` of windows by time go to training (or a seeded uniform
/// draw when `chronological` is off). No row ever appears in both halves.
pub fn split(matrix: &FeatureMatrix, plan: &SplitPlan) -> Result<(FeatureMatrix, FeatureMatrix)> {
    plan.validate()?;
    match plan.mode {
        SplitMode::SubjectIndependent => {
            let train_rows: Vec<usize> = (0..matrix.n_rows())
                .filter(|&i| plan.train_patients.contains(&matrix.rows[i].patient_id))
                .collect();
            let test_rows: Vec<usize> = (0..matrix.n_rows())
                .filter(|&i| plan.test_patients.contains(&matrix.rows[i].patient_id))
                .collect();
            if train_rows.is_empty() || test_rows.is_empty() {
                return Err(Error::invalid(
                    "independent split matched no rows for train or test patients",
                ));
            }
            Ok((matrix.select_rows(&train_rows), matrix.select_rows(&test_rows)))
        }
        SplitMode::SubjectDependent => {
            let (freeze, no_freeze) = matrix.class_counts();
            if freeze == 0 || no_freeze == 0 {
                return Err(Error::invalid(
                    "dependent split needs at least one window of each class",
                ));
            }
            let mut train_rows = Vec::new();
            let mut test_rows = Vec::new();
            let mut rng = ChaCha8Rng::seed_from_u64(plan.seed);
            for class in [true, false] {
                let mut rows: Vec<usize> = (0..matrix.n_rows())
                    .filter(|&i| matrix.labels[i] == class)
                    .collect();
                rows.sort_by_key(|&i| {
                    (
                        matrix.rows[i].patient_id.clone(),
                        matrix.rows[i].segment,
                        matrix.rows[i].start_index,
                        i,
                    )
                });
                if !plan.chronological {
                    rows.shuffle(&mut rng);
                }
                let k = (rows.len() as f64 * plan.train_fraction).round() as usize;
                let k = k.min(rows.len());
                train_rows.extend_from_slice(&rows[..k]);
                test_rows.extend_from_slice(&rows[k..]);
            }
            train_rows.sort_unstable();
            test_rows.sort_unstable();
            Ok((matrix.select_rows(&train_rows), matrix.select_rows(&test_rows)))
        }
    }
}
