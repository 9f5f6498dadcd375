//! Rendering of run ledgers into results and correlation tables.
//!
//! Rendering only formats: means, half-widths and verdicts come from the
//! ledger via [`summaries_from_ledger`] and [`crate::experiment::classify`].
//! Display values use 4 decimals with ties rounded to even; JSON output also
//! carries the full-precision numbers.

use std::collections::BTreeMap;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::error::{Error, Result};
use crate::experiment::{self, ConditionClassification, LedgerRecord};
use crate::stats::{self, CiMethod, ConditionSummary, CorrelationReport, RunResult, CI_LEVEL};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[serde(alias = "markdown")]
    Md,
    Csv,
    Json,
}

impl Format {
    pub fn extension(self) -> &'static str {
        match self {
            Format::Md => "md",
            Format::Csv => "csv",
            Format::Json => "json",
        }
    }
}

impl FromStr for Format {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "md" | "markdown" => Ok(Format::Md),
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            other => Err(Error::Config(format!("unknown format {other:?} (md, csv, json)"))),
        }
    }
}

/// Fixed 4-decimal display. Exact binary ties round to even.
pub fn fmt4(x: f64) -> String {
    let s = format!("{x:.4}");
    if s == "-0.0000" {
        "0.0000".into()
    } else {
        s
    }
}

/// `<task>__<encoder>__<kind>.<ext>`
pub fn output_file_name(task: &str, encoder: &str, kind: &str, format: Format) -> String {
    format!("{task}__{encoder}__{kind}.{}", format.extension())
}

/// Metadata printed under every results table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Caption {
    pub n_runs: usize,
    pub ci_level: f64,
    pub ci_method: String,
    pub seed: u64,
    pub encoder: String,
    pub provenance: String,
    pub auc_mode: String,
    /// Label names in id order, per task.
    pub label_orders: BTreeMap<String, Vec<String>>,
}

impl Caption {
    pub fn new(n_runs: usize, ci_method: &CiMethod, seed: u64, encoder: &str, provenance: &str) -> Self {
        Caption {
            n_runs,
            ci_level: CI_LEVEL,
            ci_method: ci_method.describe(),
            seed,
            encoder: encoder.to_string(),
            provenance: provenance.to_string(),
            auc_mode: "binary: positive-class AUC; multi-class: macro one-vs-rest over present classes"
                .to_string(),
            label_orders: BTreeMap::new(),
        }
    }

    fn lines(&self) -> Vec<String> {
        let mut out = vec![
            format!(
                "Mean AUC-ROC ± {:.0}% CI half-width ({}) over {} runs per condition; master seed {}.",
                self.ci_level * 100.0,
                self.ci_method,
                self.n_runs,
                self.seed
            ),
            format!("Encoder: {} ({}).", self.encoder, self.provenance),
            format!("AUC mode: {}.", self.auc_mode),
            "Tags: RANDOM = same distribution as a random baseline; VANILLA = same as vanilla; \
             DISTINCT = distinct from both; BOTH = overlaps both."
                .to_string(),
        ];
        for (task, labels) in &self.label_orders {
            out.push(format!("Label order ({task}): {}.", labels.join(", ")));
        }
        out
    }
}

/// One task's column of a results table.
#[derive(Debug, Clone, PartialEq)]
pub struct TaskResults {
    pub task: String,
    pub summaries: Vec<ConditionSummary>,
    pub classifications: Vec<ConditionClassification>,
    pub norm_encoding: Option<bool>,
}

impl TaskResults {
    /// Summarize and classify a task's ledger records.
    pub fn from_ledger(task: &str, ledger: &[LedgerRecord], ci: &CiMethod) -> Result<Self> {
        let summaries = summaries_from_ledger(ledger, task, ci)?;
        let classifications = experiment::classify(&summaries)?;
        let norm_encoding = experiment::infer_norm_encoding(&classifications).ok();
        Ok(TaskResults {
            task: task.to_string(),
            summaries,
            classifications,
            norm_encoding,
        })
    }

    fn cell(&self, condition: &str) -> Result<(&ConditionSummary, &ConditionClassification)> {
        let s = self.summaries.iter().find(|s| s.condition_id == condition);
        let c = self.classifications.iter().find(|c| c.condition_id == condition);
        match (s, c) {
            (Some(s), Some(c)) => Ok((s, c)),
            _ => Err(Error::Data(format!(
                "task {} has no result for condition {condition}",
                self.task
            ))),
        }
    }
}

/// Group a ledger's records for `task` by condition (first-appearance
/// order) and summarize each group.
pub fn summaries_from_ledger(ledger: &[LedgerRecord], task: &str, ci: &CiMethod) -> Result<Vec<ConditionSummary>> {
    let mut order: Vec<&str> = Vec::new();
    let mut groups: BTreeMap<&str, Vec<RunResult>> = BTreeMap::new();
    for r in ledger.iter().filter(|r| r.task == task) {
        if !groups.contains_key(r.condition.as_str()) {
            order.push(&r.condition);
        }
        groups.entry(&r.condition).or_default().push(RunResult {
            condition_id: r.condition.clone(),
            run_index: r.run_index,
            seed: r.seed,
            auc: r.auc,
        });
    }
    if order.is_empty() {
        return Err(Error::Data(format!("ledger has no records for task {task}")));
    }
    order
        .into_iter()
        .map(|c| {
            let mut runs = groups.remove(c).unwrap_or_default();
            runs.sort_by_key(|r| r.run_index);
            stats::summarize(runs, ci)
        })
        .collect()
}

/// One JSON object per line.
pub fn ledger_to_jsonl(ledger: &[LedgerRecord]) -> Result<String> {
    let mut out = String::new();
    for r in ledger {
        out.push_str(&serde_json::to_string(r).map_err(|e| Error::Runtime(e.to_string()))?);
        out.push('\n');
    }
    Ok(out)
}

pub fn ledger_from_jsonl(text: &str) -> Result<Vec<LedgerRecord>> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            serde_json::from_str(l).map_err(|e| Error::Data(format!("ledger line {}: {e}", i + 1)))
        })
        .collect()
}

fn csv_string(rows: &[Vec<String>]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for row in rows {
        w.write_record(row).map_err(|e| Error::Runtime(e.to_string()))?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Runtime(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| Error::Runtime(e.to_string()))
}

fn markdown_table(header: &[String], rows: &[Vec<String>]) -> String {
    let mut out = format!("| {} |\n", header.join(" | "));
    out.push_str(&format!("|{}\n", header.iter().map(|_| "---|").collect::<String>()));
    for row in rows {
        out.push_str(&format!("| {} |\n", row.join(" | ")));
    }
    out
}

fn to_json(v: &serde_json::Value) -> Result<String> {
    let mut s = serde_json::to_string_pretty(v).map_err(|e| Error::Runtime(e.to_string()))?;
    s.push('\n');
    Ok(s)
}

/// Conditions as rows, tasks as columns. Every task must carry every
/// condition of the first task.
pub fn render_results(tasks: &[TaskResults], caption: &Caption, format: Format) -> Result<String> {
    let first = tasks
        .first()
        .ok_or_else(|| Error::Data("no task results to render".into()))?;
    let conditions: Vec<&str> = first.summaries.iter().map(|s| s.condition_id.as_str()).collect();
    for t in tasks {
        for c in &conditions {
            t.cell(c)?;
        }
        if t.summaries.len() != conditions.len() {
            return Err(Error::Data(format!(
                "task {} has {} conditions, expected {}",
                t.task,
                t.summaries.len(),
                conditions.len()
            )));
        }
    }
    match format {
        Format::Md => {
            let mut header = vec!["condition".to_string()];
            header.extend(tasks.iter().map(|t| t.task.clone()));
            let mut rows = Vec::new();
            for c in &conditions {
                let mut row = vec![c.to_string()];
                for t in tasks {
                    let (s, k) = t.cell(c)?;
                    row.push(format!(
                        "{} ± {} {}",
                        fmt4(s.mean_auc),
                        fmt4(s.ci_half_width),
                        k.verdict.tag()
                    ));
                }
                rows.push(row);
            }
            let mut enc = vec!["norm encodes task".to_string()];
            enc.extend(tasks.iter().map(|t| match t.norm_encoding {
                Some(true) => "yes".to_string(),
                Some(false) => "no".to_string(),
                None => "n/a".to_string(),
            }));
            rows.push(enc);
            let mut out = markdown_table(&header, &rows);
            out.push('\n');
            for line in caption.lines() {
                out.push_str(&line);
                out.push('\n');
            }
            Ok(out)
        }
        Format::Csv => {
            let mut rows = vec![[
                "task",
                "condition",
                "mean_auc",
                "ci_half_width",
                "ci_low",
                "ci_high",
                "tag",
                "n_runs",
            ]
            .map(String::from)
            .to_vec()];
            for t in tasks {
                for c in &conditions {
                    let (s, k) = t.cell(c)?;
                    rows.push(vec![
                        t.task.clone(),
                        c.to_string(),
                        fmt4(s.mean_auc),
                        fmt4(s.ci_half_width),
                        fmt4(s.ci_low()),
                        fmt4(s.ci_high()),
                        k.verdict.tag().to_string(),
                        s.n_runs.to_string(),
                    ]);
                }
            }
            csv_string(&rows)
        }
        Format::Json => {
            let mut out_tasks = Vec::new();
            for t in tasks {
                let mut conds = Vec::new();
                for c in &conditions {
                    let (s, k) = t.cell(c)?;
                    conds.push(json!({
                        "condition": c,
                        "n_runs": s.n_runs,
                        "mean_auc": s.mean_auc,
                        "ci_half_width": s.ci_half_width,
                        "ci_low": s.ci_low(),
                        "ci_high": s.ci_high(),
                        "display": {
                            "mean_auc": fmt4(s.mean_auc),
                            "ci_half_width": fmt4(s.ci_half_width),
                        },
                        "verdict": k.verdict,
                        "tag": k.verdict.tag(),
                        "above_random": k.above_random,
                    }));
                }
                out_tasks.push(json!({
                    "task": t.task,
                    "infer_norm_encoding": t.norm_encoding,
                    "conditions": conds,
                }));
            }
            to_json(&json!({ "caption": caption, "tasks": out_tasks }))
        }
    }
}

fn kw_cells(k: &Option<stats::KruskalWallis>) -> [String; 2] {
    match k {
        Some(k) => [fmt4(k.h), format!("{:.4e}", k.p)],
        None => [String::new(), String::new()],
    }
}

/// One row per task and transform with Pearson r against the L1 and L2
/// norms, plus Kruskal-Wallis H and p when the task has more than two classes.
pub fn render_correlations(reports: &[CorrelationReport], format: Format) -> Result<String> {
    if reports.is_empty() {
        return Err(Error::Data("no correlation reports to render".into()));
    }
    let header: Vec<String> = [
        "task", "transform", "pearson_l1", "pearson_l2", "kw_h_l1", "kw_p_l1", "kw_h_l2", "kw_p_l2", "n",
    ]
    .map(String::from)
    .to_vec();
    let rows: Vec<Vec<String>> = reports
        .iter()
        .map(|r| {
            let mut row = vec![
                r.task.clone(),
                r.transform.clone(),
                fmt4(r.pearson_l1),
                fmt4(r.pearson_l2),
            ];
            row.extend(kw_cells(&r.kruskal_l1));
            row.extend(kw_cells(&r.kruskal_l2));
            row.push(r.n.to_string());
            row
        })
        .collect();
    match format {
        Format::Md => Ok(markdown_table(&header, &rows)),
        Format::Csv => {
            let mut all = vec![header];
            all.extend(rows);
            csv_string(&all)
        }
        Format::Json => {
            let items: Vec<serde_json::Value> = reports
                .iter()
                .map(|r| {
                    json!({
                        "task": r.task,
                        "transform": r.transform,
                        "pearson_l1": r.pearson_l1,
                        "pearson_l2": r.pearson_l2,
                        "kruskal_l1": r.kruskal_l1,
                        "kruskal_l2": r.kruskal_l2,
                        "n": r.n,
                        "display": {
                            "pearson_l1": fmt4(r.pearson_l1),
                            "pearson_l2": fmt4(r.pearson_l2),
                        },
                    })
                })
                .collect();
            to_json(&json!({ "correlations": items }))
        }
    }
}
