//! AUC-ROC via the Mann-Whitney rank-sum identity.
//!
//! Binary AUC is the probability that a random positive outscores a random
//! negative, ties counting one half. Multi-class AUC is the unweighted mean
//! of the one-vs-rest AUCs of every class present in the labels.

use log::warn;

use crate::error::{Error, Result};

/// Dense row-major score matrix, one row per example and one column per class.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreMatrix {
    n_rows: usize,
    n_cols: usize,
    data: Vec<f64>,
}

impl ScoreMatrix {
    pub fn new(n_rows: usize, n_cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != n_rows * n_cols {
            return Err(Error::Data(format!(
                "score matrix {n_rows}x{n_cols} given {} values",
                data.len()
            )));
        }
        Ok(ScoreMatrix { n_rows, n_cols, data })
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.data[row * self.n_cols + col]
    }

    pub fn row(&self, row: usize) -> &[f64] {
        &self.data[row * self.n_cols..(row + 1) * self.n_cols]
    }

    pub fn column(&self, col: usize) -> Vec<f64> {
        (0..self.n_rows).map(|r| self.get(r, col)).collect()
    }
}

/// Binary AUC of `scores` against `positive` flags.
///
/// Counts are kept as exact integers (twice the Mann-Whitney U), so the
/// result equals a pairwise count divided by `n_pos * n_neg`.
pub fn binary_auc(scores: &[f64], positive: &[bool]) -> Result<f64> {
    if scores.len() != positive.len() {
        return Err(Error::Data(format!(
            "{} scores but {} labels",
            scores.len(),
            positive.len()
        )));
    }
    if scores.iter().any(|s| s.is_nan()) {
        return Err(Error::Numeric("NaN score".into()));
    }
    let n_pos = positive.iter().filter(|&&p| p).count() as u64;
    let n_neg = positive.len() as u64 - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return Err(Error::Data("AUC needs both positive and negative examples".into()));
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));

    let mut twice_u: u64 = 0;
    let mut neg_below: u64 = 0;
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        let (mut p, mut q) = (0u64, 0u64);
        while j < order.len() && scores[order[j]] == scores[order[i]] {
            if positive[order[j]] {
                p += 1;
            } else {
                q += 1;
            }
            j += 1;
        }
        twice_u += p * (2 * neg_below + q);
        neg_below += q;
        i = j;
    }
    Ok(twice_u as f64 / (2 * n_pos * n_neg) as f64)
}

/// AUC-ROC of class scores against integer labels.
///
/// Two columns: AUC of column 1 with label 1 as the positive class.
/// More columns: macro one-vs-rest over the classes present in `labels`;
/// absent classes are skipped with a warning.
pub fn auc_roc(scores: &ScoreMatrix, labels: &[usize]) -> Result<f64> {
    if labels.len() != scores.n_rows() {
        return Err(Error::Data(format!(
            "{} score rows but {} labels",
            scores.n_rows(),
            labels.len()
        )));
    }
    let k = scores.n_cols();
    let mut counts = vec![0usize; k];
    for &l in labels {
        if l >= k {
            return Err(Error::Data(format!("label {l} out of range for {k} score columns")));
        }
        counts[l] += 1;
    }
    let present = counts.iter().filter(|&&c| c > 0).count();
    if present < 2 {
        return Err(Error::Data("AUC needs at least two classes in the labels".into()));
    }
    if k == 2 {
        let positive: Vec<bool> = labels.iter().map(|&l| l == 1).collect();
        return binary_auc(&scores.column(1), &positive);
    }
    let mut total = 0.0;
    for (c, &count) in counts.iter().enumerate() {
        if count == 0 {
            warn!("class {c} absent from labels; skipped in macro AUC");
            continue;
        }
        let positive: Vec<bool> = labels.iter().map(|&l| l == c).collect();
        total += binary_auc(&scores.column(c), &positive)?;
    }
    Ok(total / present as f64)
}
