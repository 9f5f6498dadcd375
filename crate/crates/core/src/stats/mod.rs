//! Scoring, interval estimation and norm/label correlation statistics.

mod auc;
mod correlation;
mod interval;

pub use auc::{auc_roc, binary_auc, ScoreMatrix};
pub use correlation::{
    correlation_report, kruskal_wallis, pearson, CorrelationReport, KruskalWallis,
};
pub use interval::{same_distribution, summarize, CiMethod, ConditionSummary, RunResult, CI_LEVEL};
