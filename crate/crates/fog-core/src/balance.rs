//! SMOTE oversampling of the minority class.
//!
//! Applied to training matrices only, after the train/test split. Each
//! synthetic row interpolates between a minority row and one of its k
//! nearest minority neighbors; neighbor distances use z-scored columns so no
//! single feature scale dominates, while interpolation happens in the
//! original feature space.

use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::{column_mean_std, FeatureMatrix, RowMeta};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SmoteSpec {
    pub k_neighbors: usize,
    /// Desired minority:majority ratio after resampling.
    pub target_ratio: f64,
    pub seed: u64,
}

impl Default for SmoteSpec {
    fn default() -> Self {
        SmoteSpec {
            k_neighbors: 5,
            target_ratio: 1.0,
            seed: 0,
        }
    }
}

impl SmoteSpec {
    pub fn validate(&self) -> Result<()> {
        if self.k_neighbors == 0 {
            return Err(Error::invalid("smote k_neighbors must be at least 1"));
        }
        if !(self.target_ratio > 0.0 && self.target_ratio <= 1.0) {
            return Err(Error::invalid(format!(
                "smote target_ratio must lie in (0, 1], got {}",
                self.target_ratio
            )));
        }
        Ok(())
    }
}

/// Append synthetic minority rows until the class ratio reaches the target.
///
/// Original rows are untouched; synthetic rows are appended after them,
/// flagged in their [`RowMeta`], and the result is deterministic for a given
/// seed. Exactly `ceil(target * majority) - minority` rows are created.
pub fn smote(matrix: &FeatureMatrix, spec: &SmoteSpec) -> Result<FeatureMatrix> {
    spec.validate()?;
    let (freeze, no_freeze) = matrix.class_counts();
    if freeze == 0 || no_freeze == 0 {
        return Err(Error::invalid(
            "smote needs both classes present in the training matrix",
        ));
    }
    // Tie goes to the freeze class so behavior does not depend on row order.
    let minority_label = freeze <= no_freeze;
    let (minority_count, majority_count) = if minority_label {
        (freeze, no_freeze)
    } else {
        (no_freeze, freeze)
    };
    if minority_count < spec.k_neighbors + 1 {
        return Err(Error::invalid(format!(
            "smote needs at least k+1 = {} minority rows, found {minority_count}; lower k_neighbors",
            spec.k_neighbors + 1
        )));
    }

    let needed = (spec.target_ratio * majority_count as f64).ceil() as usize;
    let synth_count = needed.saturating_sub(minority_count);
    if synth_count == 0 {
        return Ok(matrix.clone());
    }

    let minority_rows: Vec<usize> = matrix
        .labels
        .iter()
        .enumerate()
        .filter(|(_, l)| **l == minority_label)
        .map(|(i, _)| i)
        .collect();

    // z-scored copy of the minority rows for neighbor search
    let (means, stds) = column_mean_std(&matrix.values);
    let n_cols = matrix.n_cols();
    let mut scored = Array2::zeros((minority_rows.len(), n_cols));
    for (r, &idx) in minority_rows.iter().enumerate() {
        for c in 0..n_cols {
            if stds[c] > 0.0 {
                scored[[r, c]] = (matrix.values[[idx, c]] - means[c]) / stds[c];
            }
        }
    }

    // Brute-force k nearest neighbors among minority rows; ties resolve by
    // row index so the result is deterministic.
    let m = minority_rows.len();
    let k = spec.k_neighbors.min(m - 1);
    let mut neighbors: Vec<Vec<usize>> = Vec::with_capacity(m);
    for i in 0..m {
        let mut dist: Vec<(f64, usize)> = (0..m)
            .filter(|&j| j != i)
            .map(|j| {
                let d = (&scored.row(i) - &scored.row(j)).mapv(|v| v * v).sum();
                (d, j)
            })
            .collect();
        dist.sort_by(|a, b| a.0.partial_cmp(&b.0).expect("finite distances").then(a.1.cmp(&b.1)));
        neighbors.push(dist[..k].iter().map(|(_, j)| *j).collect());
    }

    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut values = matrix.values.clone();
    let mut labels = matrix.labels.clone();
    let mut rows = matrix.rows.clone();
    values = {
        let mut grown = Array2::zeros((matrix.n_rows() + synth_count, n_cols));
        grown
            .slice_mut(ndarray::s![..matrix.n_rows(), ..])
            .assign(&values);
        grown
    };
    for s in 0..synth_count {
        let pick = rng.random_range(0..m);
        let neighbor = neighbors[pick][rng.random_range(0..k)];
        let lambda: f64 = rng.random_range(0.0..=1.0);
        let base = matrix.values.row(minority_rows[pick]);
        let other = matrix.values.row(minority_rows[neighbor]);
        let row_idx = matrix.n_rows() + s;
        for c in 0..n_cols {
            values[[row_idx, c]] = base[c] + lambda * (other[c] - base[c]);
        }
        labels.push(minority_label);
        rows.push(RowMeta {
            patient_id: matrix.rows[minority_rows[pick]].patient_id.clone(),
            segment: usize::MAX,
            start_index: s,
            synthetic: true,
        });
    }

    Ok(FeatureMatrix {
        descriptors: matrix.descriptors.clone(),
        values,
        labels,
        rows,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::features::{FeatureDescriptor, FeatureKind};
    use proptest::prelude::*;

    fn matrix_from(rows: Vec<Vec<f64>>, labels: Vec<bool>) -> FeatureMatrix {
        let n_cols = rows[0].len();
        let flat: Vec<f64> = rows.iter().flatten().copied().collect();
        FeatureMatrix {
            descriptors: (0..n_cols)
                .map(|j| FeatureDescriptor {
                    name: format!("f{j}"),
                    channel: None,
                    kind: FeatureKind::Statistical,
                })
                .collect(),
            values: Array2::from_shape_vec((labels.len(), n_cols), flat).unwrap(),
            labels: labels.clone(),
            rows: (0..labels.len())
                .map(|i| RowMeta {
                    patient_id: "p".to_string(),
                    segment: 0,
                    start_index: i,
                    synthetic: false,
                })
                .collect(),
        }
    }

    fn imbalanced(minority: usize, majority: usize, seed: u64) -> FeatureMatrix {
        use rand::Rng;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut rows = Vec::new();
        let mut labels = Vec::new();
        for _ in 0..minority {
            rows.push(vec![rng.random_range(0.0..1.0), rng.random_range(5.0..6.0)]);
            labels.push(true);
        }
        for _ in 0..majority {
            rows.push(vec![rng.random_range(9.0..10.0), rng.random_range(-2.0..0.0)]);
            labels.push(false);
        }
        matrix_from(rows, labels)
    }

    #[test]
    fn balances_exactly() {
        let m = imbalanced(10, 50, 1);
        let out = smote(&m, &SmoteSpec::default()).unwrap();
        let (freeze, no_freeze) = out.class_counts();
        assert_eq!((freeze, no_freeze), (50, 50));
        assert_eq!(out.n_rows(), 100);
    }

    #[test]
    fn interpolation_stays_on_segment() {
        // two minority points (0,0) and (1,1), k=1: synthetics are (l,l)
        let mut rows = vec![vec![0.0, 0.0], vec![1.0, 1.0]];
        let mut labels = vec![true, true];
        for _ in 0..10 {
            rows.push(vec![3.0, -3.0]);
            labels.push(false);
        }
        let m = matrix_from(rows, labels);
        let spec = SmoteSpec {
            k_neighbors: 1,
            ..SmoteSpec::default()
        };
        let out = smote(&m, &spec).unwrap();
        for i in m.n_rows()..out.n_rows() {
            let a = out.values[[i, 0]];
            let b = out.values[[i, 1]];
            assert!((a - b).abs() < 1e-12, "synthetic row ({a}, {b}) off the diagonal");
            assert!((0.0..=1.0).contains(&a));
            assert!(out.rows[i].synthetic);
        }
    }

    #[test]
    fn deterministic_given_seed() {
        let m = imbalanced(8, 40, 2);
        let spec = SmoteSpec::default();
        let a = smote(&m, &spec).unwrap();
        let b = smote(&m, &spec).unwrap();
        assert_eq!(a, b);
        let c = smote(&m, &SmoteSpec { seed: 9, ..spec }).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn originals_unchanged() {
        let m = imbalanced(7, 30, 3);
        let out = smote(&m, &SmoteSpec::default()).unwrap();
        assert_eq!(out.values.slice(ndarray::s![..m.n_rows(), ..]), m.values);
        assert_eq!(&out.labels[..m.n_rows()], &m.labels[..]);
    }

    #[test]
    fn single_class_is_error() {
        let m = matrix_from(vec![vec![1.0], vec![2.0]], vec![true, true]);
        assert!(smote(&m, &SmoteSpec::default()).is_err());
    }

    #[test]
    fn too_few_minority_rows_is_error() {
        let m = imbalanced(4, 20, 4);
        let err = smote(&m, &SmoteSpec::default()).unwrap_err();
        assert!(err.to_string().contains("lower k_neighbors"), "{err}");
    }

    #[test]
    fn already_balanced_is_identity() {
        let m = imbalanced(20, 20, 5);
        let out = smote(&m, &SmoteSpec::default()).unwrap();
        assert_eq!(out, m);
    }

    proptest! {
        #[test]
        fn synthetic_rows_stay_in_minority_bounding_box(
            minority in 6usize..20,
            majority in 20usize..60,
            seed in 0u64..500,
        ) {
            let m = imbalanced(minority, majority, seed);
            let out = smote(&m, &SmoteSpec { seed, ..SmoteSpec::default() }).unwrap();

            // exact synthetic count
            prop_assert_eq!(out.n_rows() - m.n_rows(), majority - minority);

            let minority_values: Vec<_> = (0..m.n_rows())
                .filter(|&i| m.labels[i])
                .map(|i| m.values.row(i))
                .collect();
            for c in 0..m.n_cols() {
                let lo = minority_values.iter().map(|r| r[c]).fold(f64::INFINITY, f64::min);
                let hi = minority_values.iter().map(|r| r[c]).fold(f64::NEG_INFINITY, f64::max);
                for i in m.n_rows()..out.n_rows() {
                    let v = out.values[[i, c]];
                    prop_assert!(v >= lo - 1e-12 && v <= hi + 1e-12);
                }
            }
        }
    }
}
