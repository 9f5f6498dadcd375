//! Pearson correlation and the Kruskal-Wallis H test, used to relate vector
//! norms to class labels.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::error::{Error, Result};

/// Relative spread below which a series is treated as constant.
const CONSTANT_SPREAD: f64 = 1e-9;

fn is_constant(xs: &[f64]) -> bool {
    let (lo, hi) = xs
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &x| (lo.min(x), hi.max(x)));
    let scale = lo.abs().max(hi.abs());
    hi - lo <= CONSTANT_SPREAD * scale
}

/// Product-moment correlation, computed in two passes.
pub fn pearson(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::Data(format!(
            "pearson: lengths differ ({} vs {})",
            x.len(),
            y.len()
        )));
    }
    if x.len() < 3 {
        return Err(Error::Data("pearson needs at least 3 points".into()));
    }
    if is_constant(x) || is_constant(y) {
        return Err(Error::Numeric("pearson: constant input, correlation undefined".into()));
    }
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        let (dx, dy) = (a - mx, b - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    Ok((sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KruskalWallis {
    pub h: f64,
    pub p: f64,
}

/// Kruskal-Wallis H with ties correction; p from chi-squared with k-1 df.
pub fn kruskal_wallis(groups: &[Vec<f64>]) -> Result<KruskalWallis> {
    if groups.len() < 2 {
        return Err(Error::Data("Kruskal-Wallis needs at least 2 groups".into()));
    }
    if groups.iter().any(Vec::is_empty) {
        return Err(Error::Data("Kruskal-Wallis groups must be non-empty".into()));
    }
    let mut pooled: Vec<(f64, usize)> = groups
        .iter()
        .enumerate()
        .flat_map(|(g, xs)| xs.iter().map(move |&x| (x, g)))
        .collect();
    let n = pooled.len();
    if n < 5 {
        return Err(Error::Data("Kruskal-Wallis needs at least 5 observations".into()));
    }
    if pooled.iter().any(|(x, _)| x.is_nan()) {
        return Err(Error::Numeric("Kruskal-Wallis: NaN observation".into()));
    }
    pooled.sort_by(|a, b| a.0.total_cmp(&b.0));

    let mut rank_sums = vec![0.0; groups.len()];
    let mut tie_term = 0.0;
    let mut i = 0;
    while i < n {
        let mut j = i;
        while j < n && pooled[j].0 == pooled[i].0 {
            j += 1;
        }
        // ranks i+1..=j share their average
        let avg = (i + 1 + j) as f64 / 2.0;
        for &(_, g) in &pooled[i..j] {
            rank_sums[g] += avg;
        }
        let t = (j - i) as f64;
        tie_term += t * t * t - t;
        i = j;
    }
    let nf = n as f64;
    let sum: f64 = rank_sums
        .iter()
        .zip(groups)
        .map(|(r, g)| r * r / g.len() as f64)
        .sum();
    let h_raw = 12.0 / (nf * (nf + 1.0)) * sum - 3.0 * (nf + 1.0);
    let correction = 1.0 - tie_term / (nf * nf * nf - nf);
    let h = if correction <= 0.0 { 0.0 } else { (h_raw / correction).max(0.0) };
    let df = (groups.len() - 1) as f64;
    let chi = ChiSquared::new(df).map_err(|e| Error::Numeric(e.to_string()))?;
    let p = (1.0 - chi.cdf(h)).clamp(0.0, 1.0);
    Ok(KruskalWallis { h, p })
}

/// Correlation of L1 and L2 norms with class labels under one transform.
///
/// Pearson uses `label_values[label]` as the label variable. A norm that is constant up to
/// rounding (e.g. the L2 norm after L2 normalization) carries no linear
/// association and is reported as 0. Kruskal-Wallis is only computed for
/// tasks with more than two classes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelationReport {
    pub task: String,
    pub transform: String,
    pub pearson_l1: f64,
    pub pearson_l2: f64,
    pub kruskal_l1: Option<KruskalWallis>,
    pub kruskal_l2: Option<KruskalWallis>,
    pub n: usize,
}

fn pearson_or_zero(norms: &[f64], labels: &[f64]) -> Result<f64> {
    if is_constant(norms) && norms.len() >= 3 && !is_constant(labels) {
        return Ok(0.0);
    }
    pearson(norms, labels)
}

fn by_class(values: &[f64], labels: &[usize], n_classes: usize) -> Vec<Vec<f64>> {
    let mut groups = vec![Vec::new(); n_classes];
    for (&v, &l) in values.iter().zip(labels) {
        groups[l].push(v);
    }
    groups.retain(|g| !g.is_empty());
    groups
}

pub fn correlation_report(
    task: &str,
    transform: &str,
    l1: &[f64],
    l2: &[f64],
    labels: &[usize],
    label_values: &[f64],
) -> Result<CorrelationReport> {
    if l1.len() != labels.len() || l2.len() != labels.len() {
        return Err(Error::Data("norms and labels must align".into()));
    }
    let n_classes = label_values.len();
    if let Some(&bad) = labels.iter().find(|&&l| l >= n_classes) {
        return Err(Error::Data(format!("label {bad} has no value ({n_classes} classes)")));
    }
    let y: Vec<f64> = labels.iter().map(|&l| label_values[l]).collect();
    let pearson_l1 = pearson_or_zero(l1, &y)?;
    let pearson_l2 = pearson_or_zero(l2, &y)?;
    let (kruskal_l1, kruskal_l2) = if n_classes > 2 {
        (
            Some(kruskal_wallis(&by_class(l1, labels, n_classes))?),
            Some(kruskal_wallis(&by_class(l2, labels, n_classes))?),
        )
    } else {
        (None, None)
    };
    Ok(CorrelationReport {
        task: task.to_string(),
        transform: transform.to_string(),
        pearson_l1,
        pearson_l2,
        kruskal_l1,
        kruskal_l2,
        n: labels.len(),
    })
}
