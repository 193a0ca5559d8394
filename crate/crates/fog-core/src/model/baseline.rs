//! Freeze-Index threshold baseline.
//!
//! Detection rule: a window is a freeze iff its Freeze Index exceeds one
//! threshold AND its total band power exceeds another; the power gate keeps
//! near-still windows (standing) from tripping the ratio. Both thresholds
//! come from a grid search maximizing Youden's J = Sens + Spec - 1 on the
//! training windows.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Calibrated thresholds plus the training-set J they achieved.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FiBaseline {
    pub fi_threshold: f64,
    pub power_threshold: f64,
    pub train_youden_j: f64,
}

/// Maximum number of candidate thresholds per axis; larger training sets are
/// subsampled to quantiles.
const MAX_CANDIDATES: usize = 128;

fn candidates(values: &[f64]) -> Vec<f64> {
    let mut sorted = values.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("finite feature values"));
    sorted.dedup();
    let mut out = Vec::with_capacity(MAX_CANDIDATES + 1);
    // A sentinel that disables this axis of the rule. FI and band power are
    // non-negative, so it must sit below zero, not merely below the training
    // minimum: test windows may fall under the training range.
    out.push(sorted[0].min(0.0) - 1.0);
    if sorted.len() <= MAX_CANDIDATES {
        out.extend(sorted);
    } else {
        for i in 0..MAX_CANDIDATES {
            let idx = i * (sorted.len() - 1) / (MAX_CANDIDATES - 1);
            out.push(sorted[idx]);
        }
        out.dedup();
    }
    out
}

/// Grid-search (FI threshold x power threshold) maximizing Youden's J on the
/// training windows. Ties keep the lowest threshold pair.
pub fn fi_baseline_calibrate(fi: &[f64], power: &[f64], labels: &[bool]) -> Result<FiBaseline> {
    if fi.len() != power.len() || fi.len() != labels.len() {
        return Err(Error::ShapeMismatch(
            "fi, power and labels must have equal lengths".to_string(),
        ));
    }
    if fi.is_empty() {
        return Err(Error::invalid("cannot calibrate on zero windows"));
    }
    let positives = labels.iter().filter(|l| **l).count();
    let negatives = labels.len() - positives;
    if positives == 0 || negatives == 0 {
        return Err(Error::invalid(
            "baseline calibration needs both classes in the training data",
        ));
    }

    let fi_grid = candidates(fi);
    let power_grid = candidates(power);
    let (c1, c2) = (fi_grid.len(), power_grid.len());

    // For each window, the number of grid thresholds strictly below its
    // value; the window is predicted freeze under grid cell (i, j) iff
    // i < a and j < b.
    let rank = |grid: &[f64], v: f64| grid.partition_point(|c| *c < v);
    let mut hist_pos = vec![0u32; (c1 + 1) * (c2 + 1)];
    let mut hist_neg = vec![0u32; (c1 + 1) * (c2 + 1)];
    for k in 0..fi.len() {
        let a = rank(&fi_grid, fi[k]);
        let b = rank(&power_grid, power[k]);
        let slot = a * (c2 + 1) + b;
        if labels[k] {
            hist_pos[slot] += 1;
        } else {
            hist_neg[slot] += 1;
        }
    }
    // suffix[i][j] = count of windows with a >= i and b >= j
    let suffix = |hist: &[u32]| -> Vec<u32> {
        let mut s = hist.to_vec();
        for i in (0..=c1).rev() {
            for j in (0..=c2).rev() {
                let mut v = s[i * (c2 + 1) + j];
                if i < c1 {
                    v += s[(i + 1) * (c2 + 1) + j];
                }
                if j < c2 {
                    v += s[i * (c2 + 1) + j + 1];
                }
                if i < c1 && j < c2 {
                    v -= s[(i + 1) * (c2 + 1) + j + 1];
                }
                s[i * (c2 + 1) + j] = v;
            }
        }
        s
    };
    let suf_pos = suffix(&hist_pos);
    let suf_neg = suffix(&hist_neg);

    let mut best = FiBaseline {
        fi_threshold: fi_grid[0],
        power_threshold: power_grid[0],
        train_youden_j: f64::NEG_INFINITY,
    };
    for i in 0..c1 {
        for j in 0..c2 {
            let tp = suf_pos[(i + 1) * (c2 + 1) + j + 1] as f64;
            let fp = suf_neg[(i + 1) * (c2 + 1) + j + 1] as f64;
            let sens = tp / positives as f64;
            let spec = (negatives as f64 - fp) / negatives as f64;
            let j_stat = sens + spec - 1.0;
            if j_stat > best.train_youden_j {
                best = FiBaseline {
                    fi_threshold: fi_grid[i],
                    power_threshold: power_grid[j],
                    train_youden_j: j_stat,
                };
            }
        }
    }
    Ok(best)
}

/// Apply the calibrated rule: freeze iff FI > t_fi and power > t_power.
pub fn fi_baseline_predict(baseline: &FiBaseline, fi: &[f64], power: &[f64]) -> Vec<bool> {
    fi.iter()
        .zip(power)
        .map(|(&f, &p)| f > baseline.fi_threshold && p > baseline.power_threshold)
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn disjoint_distributions_reach_perfect_j() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut fi = Vec::new();
        let mut power = Vec::new();
        let mut labels = Vec::new();
        for _ in 0..50 {
            fi.push(rng.random_range(4.0..8.0));
            power.push(rng.random_range(5.0..20.0));
            labels.push(true);
        }
        for _ in 0..200 {
            fi.push(rng.random_range(0.05..0.6));
            power.push(rng.random_range(5.0..20.0));
            labels.push(false);
        }
        let baseline = fi_baseline_calibrate(&fi, &power, &labels).unwrap();
        assert_eq!(baseline.train_youden_j, 1.0);
        let preds = fi_baseline_predict(&baseline, &fi, &power);
        assert_eq!(preds, labels);
    }

    #[test]
    fn thresholds_come_from_the_searched_grid() {
        let fi = vec![0.2, 0.4, 3.0, 5.0, 0.3, 4.0];
        let power = vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0];
        let labels = vec![false, false, true, true, false, true];
        let baseline = fi_baseline_calibrate(&fi, &power, &labels).unwrap();
        assert!(fi.contains(&baseline.fi_threshold) || baseline.fi_threshold == -1.0);
        assert!(power.contains(&baseline.power_threshold) || baseline.power_threshold == -1.0);
    }

    #[test]
    fn single_class_is_error() {
        let fi = vec![1.0, 2.0];
        let power = vec![1.0, 1.0];
        assert!(fi_baseline_calibrate(&fi, &power, &[false, false]).is_err());
        assert!(fi_baseline_calibrate(&fi, &power, &[true, true]).is_err());
    }

    #[test]
    fn power_gate_suppresses_low_power_windows() {
        // High-FI but near-zero power windows (standing) are negative; the
        // power threshold must learn to exclude them.
        let fi = vec![5.0, 6.0, 5.5, 5.2, 0.3, 0.2];
        let power = vec![0.01, 0.02, 10.0, 12.0, 11.0, 9.0];
        let labels = vec![false, false, true, true, false, false];
        let baseline = fi_baseline_calibrate(&fi, &power, &labels).unwrap();
        assert_eq!(baseline.train_youden_j, 1.0);
        let preds = fi_baseline_predict(&baseline, &fi, &power);
        assert_eq!(preds, labels);
    }

    #[test]
    fn quantile_subsampling_keeps_grid_bounded() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let n = 5000;
        let fi: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..10.0)).collect();
        let power: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..10.0)).collect();
        let labels: Vec<bool> = fi.iter().map(|&v| v > 5.0).collect();
        let baseline = fi_baseline_calibrate(&fi, &power, &labels).unwrap();
        assert!(baseline.train_youden_j > 0.95);
    }
}
