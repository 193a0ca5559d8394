//! Recursive feature elimination with a linear logistic scorer.
//!
//! Columns are z-scored, an L2-regularized logistic model is fit by
//! full-batch gradient descent, and the feature with the smallest absolute
//! weight is dropped; this repeats until `k` features remain. Constant
//! columns carry no information and are eliminated before any fit. The
//! procedure is fully deterministic: weights start at zero and the data
//! order never changes.

use ndarray::{Array1, Array2};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::{column_mean_std, FeatureMatrix};

/// Elimination rank of one feature: all `k` survivors share rank 1, the last
/// feature eliminated has rank 2, and so on.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeatureRank {
    pub name: String,
    pub rank: usize,
}

const FIT_ITERS: usize = 300;
const FIT_LR: f64 = 0.5;
const FIT_L2: f64 = 1e-4;

/// Reduce `matrix` to its `k` most informative columns.
///
/// Returns the reduced matrix and the full elimination ranking in catalog
/// order.
pub fn rfe_select(matrix: &FeatureMatrix, k: usize) -> Result<(FeatureMatrix, Vec<FeatureRank>)> {
    let n_cols = matrix.n_cols();
    if k == 0 || k >= n_cols {
        return Err(Error::invalid(format!(
            "rfe target k must satisfy 0 < k < {n_cols}, got {k}"
        )));
    }
    if matrix.n_rows() == 0 {
        return Err(Error::invalid("rfe needs at least one row"));
    }

    let (means, stds) = column_mean_std(&matrix.values);
    let mut scored = matrix.values.clone();
    for (mut col, (mean, std)) in scored.columns_mut().into_iter().zip(means.iter().zip(&stds)) {
        if *std > 0.0 {
            col.mapv_inplace(|v| (v - mean) / std);
        } else {
            col.fill(0.0);
        }
    }
    let targets: Array1<f64> = matrix.labels.iter().map(|&l| f64::from(u8::from(l))).collect();

    let mut active: Vec<usize> = (0..n_cols).collect();
    // Eliminated column indices, earliest first.
    let mut eliminated: Vec<usize> = Vec::new();

    // Constant columns go first, in catalog order.
    for (j, std) in stds.iter().enumerate() {
        if *std == 0.0 && active.len() > k {
            active.retain(|&a| a != j);
            eliminated.push(j);
        }
    }

    while active.len() > k {
        let subset = gather_columns(&scored, &active);
        let weights = fit_logistic(&subset, &targets);
        let (drop_pos, _) = weights
            .iter()
            .map(|w| w.abs())
            .enumerate()
            .fold((0usize, f64::INFINITY), |(bi, bw), (i, w)| {
                if w < bw {
                    (i, w)
                } else {
                    (bi, bw)
                }
            });
        eliminated.push(active.remove(drop_pos));
    }

    let mut ranks = vec![1usize; n_cols];
    for (i, &col) in eliminated.iter().rev().enumerate() {
        ranks[col] = i + 2;
    }
    let ranking = matrix
        .descriptors
        .iter()
        .zip(&ranks)
        .map(|(d, &rank)| FeatureRank {
            name: d.name.clone(),
            rank,
        })
        .collect();
    Ok((matrix.select_columns(&active), ranking))
}

fn gather_columns(values: &Array2<f64>, columns: &[usize]) -> Array2<f64> {
    let mut out = Array2::zeros((values.nrows(), columns.len()));
    for (j_new, &j) in columns.iter().enumerate() {
        out.column_mut(j_new).assign(&values.column(j));
    }
    out
}

/// Full-batch gradient descent on the L2-regularized logistic loss,
/// returning the learned weights (bias is fit but not returned).
fn fit_logistic(x: &Array2<f64>, y: &Array1<f64>) -> Array1<f64> {
    let n = x.nrows() as f64;
    let mut w = Array1::<f64>::zeros(x.ncols());
    let mut b = 0.0f64;
    for _ in 0..FIT_ITERS {
        let z = x.dot(&w) + b;
        let p = z.mapv(|v| 1.0 / (1.0 + (-v).exp()));
        let residual = &p - y;
        let grad_w = x.t().dot(&residual) / n + FIT_L2 * &w;
        let grad_b = residual.sum() / n;
        w -= &(FIT_LR * grad_w);
        b -= FIT_LR * grad_b;
    }
    w
}
