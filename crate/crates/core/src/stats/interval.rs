//! Repeated-run summaries and the CI-overlap decision rule.

use rand::Rng;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::error::{Error, Result};
use crate::rng;

/// Confidence level of every interval in the crate.
pub const CI_LEVEL: f64 = 0.99;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunResult {
    pub condition_id: String,
    pub run_index: usize,
    pub seed: u64,
    pub auc: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "lowercase")]
pub enum CiMethod {
    /// Student-t interval on the run scores.
    T,
    /// Percentile bootstrap of the mean.
    Bootstrap { resamples: usize, seed: u64 },
}

impl Default for CiMethod {
    fn default() -> Self {
        CiMethod::T
    }
}

impl CiMethod {
    pub fn describe(&self) -> String {
        match self {
            CiMethod::T => "student-t".to_string(),
            CiMethod::Bootstrap { resamples, .. } => format!("percentile bootstrap ({resamples} resamples)"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionSummary {
    pub condition_id: String,
    pub n_runs: usize,
    pub mean_auc: f64,
    pub ci_half_width: f64,
    pub runs: Vec<RunResult>,
}

impl ConditionSummary {
    pub fn ci_low(&self) -> f64 {
        self.mean_auc - self.ci_half_width
    }

    pub fn ci_high(&self) -> f64 {
        self.mean_auc + self.ci_half_width
    }

    pub fn contains(&self, value: f64) -> bool {
        self.ci_low() <= value && value <= self.ci_high()
    }
}

fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Mean AUC and 99% CI half-width of one condition's runs.
pub fn summarize(runs: Vec<RunResult>, method: &CiMethod) -> Result<ConditionSummary> {
    if runs.len() < 2 {
        return Err(Error::Numeric(format!(
            "a summary needs at least 2 runs, got {}",
            runs.len()
        )));
    }
    let id = runs[0].condition_id.clone();
    if let Some(other) = runs.iter().find(|r| r.condition_id != id) {
        return Err(Error::Data(format!(
            "runs from conditions {id} and {} mixed in one summary",
            other.condition_id
        )));
    }
    let scores: Vec<f64> = runs.iter().map(|r| r.auc).collect();
    let n = scores.len();
    let m = mean(&scores);
    let half_width = match *method {
        CiMethod::T => {
            let var = scores.iter().map(|s| (s - m).powi(2)).sum::<f64>() / (n - 1) as f64;
            let t = StudentsT::new(0.0, 1.0, (n - 1) as f64)
                .map_err(|e| Error::Numeric(e.to_string()))?
                .inverse_cdf(0.5 + CI_LEVEL / 2.0);
            t * var.sqrt() / (n as f64).sqrt()
        }
        CiMethod::Bootstrap { resamples, seed } => {
            if resamples < 2 {
                return Err(Error::Config("bootstrap needs at least 2 resamples".into()));
            }
            let mut r = rng::seeded(seed);
            let mut means: Vec<f64> = (0..resamples)
                .map(|_| (0..n).map(|_| scores[r.gen_range(0..n)]).sum::<f64>() / n as f64)
                .collect();
            means.sort_by(f64::total_cmp);
            let lo = quantile(&means, (1.0 - CI_LEVEL) / 2.0);
            let hi = quantile(&means, 0.5 + CI_LEVEL / 2.0);
            (hi - lo) / 2.0
        }
    };
    Ok(ConditionSummary {
        condition_id: id,
        n_runs: n,
        mean_auc: m,
        ci_half_width: half_width,
        runs,
    })
}

/// Linear-interpolation quantile of sorted data.
fn quantile(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

/// True iff the two intervals `mean ± half-width` intersect.
pub fn same_distribution(a: &ConditionSummary, b: &ConditionSummary) -> bool {
    a.ci_low() <= b.ci_high() && b.ci_low() <= a.ci_high()
}
