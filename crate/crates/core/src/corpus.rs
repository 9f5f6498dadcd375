//! SentEval-style probing task files.
//!
//! One example per line, three tab-separated columns: a partition code
//! (`tr`, `va`, `te`), the raw label, and the sentence. Labels are encoded
//! by order of first appearance.

use std::collections::HashMap;
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Partition {
    Train,
    Dev,
    Test,
}

impl Partition {
    pub fn code(self) -> &'static str {
        match self {
            Partition::Train => "tr",
            Partition::Dev => "va",
            Partition::Test => "te",
        }
    }

    pub fn from_code(code: &str) -> Option<Self> {
        match code {
            "tr" => Some(Partition::Train),
            "va" => Some(Partition::Dev),
            "te" => Some(Partition::Test),
            _ => None,
        }
    }
}

impl fmt::Display for Partition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            Partition::Train => "train",
            Partition::Dev => "dev",
            Partition::Test => "test",
        };
        f.write_str(name)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProbingExample {
    pub partition: Partition,
    pub label_id: usize,
    pub raw_label: String,
    pub sentence: String,
}

/// A labeled probing task. Immutable once built.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProbingDataset {
    pub task_name: String,
    pub examples: Vec<ProbingExample>,
    pub label_names: Vec<String>,
    pub n_classes: usize,
}

impl ProbingDataset {
    /// Build a dataset from `(partition, raw label, sentence)` rows, encoding
    /// labels by first appearance.
    pub fn from_rows<I, L, S>(task_name: impl Into<String>, rows: I) -> Result<Self>
    where
        I: IntoIterator<Item = (Partition, L, S)>,
        L: Into<String>,
        S: Into<String>,
    {
        let mut label_names: Vec<String> = Vec::new();
        let mut label_ids: HashMap<String, usize> = HashMap::new();
        let mut examples = Vec::new();
        for (partition, raw_label, sentence) in rows {
            let raw_label = raw_label.into();
            let sentence = sentence.into();
            if sentence.trim().is_empty() {
                return Err(Error::Data(format!(
                    "example {} has an empty sentence",
                    examples.len()
                )));
            }
            let label_id = match label_ids.get(&raw_label) {
                Some(&id) => id,
                None => {
                    let id = label_names.len();
                    label_ids.insert(raw_label.clone(), id);
                    label_names.push(raw_label.clone());
                    id
                }
            };
            examples.push(ProbingExample {
                partition,
                label_id,
                raw_label,
                sentence,
            });
        }
        let ds = ProbingDataset {
            task_name: task_name.into(),
            n_classes: label_names.len(),
            examples,
            label_names,
        };
        ds.validate()?;
        Ok(ds)
    }

    fn validate(&self) -> Result<()> {
        if self.examples.is_empty() {
            return Err(Error::Data(format!("task {}: no examples", self.task_name)));
        }
        if self.n_classes < 2 {
            return Err(Error::Data(format!(
                "task {}: need at least 2 distinct labels, found {}",
                self.task_name, self.n_classes
            )));
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.examples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.examples.is_empty()
    }

    /// Indices of the examples in `partition`, in file order.
    pub fn partition_indices(&self, partition: Partition) -> Vec<usize> {
        self.examples
            .iter()
            .enumerate()
            .filter(|(_, e)| e.partition == partition)
            .map(|(i, _)| i)
            .collect()
    }

    pub fn labels(&self) -> Vec<usize> {
        self.examples.iter().map(|e| e.label_id).collect()
    }

    /// Serialize back to the 3-column format (LF line endings).
    pub fn to_tsv(&self) -> String {
        let mut out = String::new();
        for e in &self.examples {
            out.push_str(e.partition.code());
            out.push('\t');
            out.push_str(&e.raw_label);
            out.push('\t');
            out.push_str(&e.sentence);
            out.push('\n');
        }
        out
    }
}

/// Parse a probing task file. The task name is the file stem.
pub fn parse_probing_file(path: impl AsRef<Path>) -> Result<ProbingDataset> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    let task = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "task".to_string());
    parse_probing_bytes(&task, &bytes, path)
}

/// Parse in-memory file contents; `origin` is only used in error messages.
pub fn parse_probing_bytes(task: &str, bytes: &[u8], origin: &Path) -> Result<ProbingDataset> {
    if bytes.is_empty() {
        return Err(Error::parse(origin, 0, "empty file"));
    }
    let mut rows = Vec::new();
    let mut lines: Vec<&[u8]> = bytes.split(|&b| b == b'\n').collect();
    if lines.last().is_some_and(|l| l.is_empty()) {
        lines.pop();
    }
    for (i, raw) in lines.into_iter().enumerate() {
        let lineno = i + 1;
        let raw = raw.strip_suffix(b"\r").unwrap_or(raw);
        let line = std::str::from_utf8(raw)
            .map_err(|e| Error::parse(origin, lineno, format!("invalid UTF-8: {e}")))?;
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() != 3 {
            return Err(Error::parse(
                origin,
                lineno,
                format!("expected 3 tab-separated fields, found {}", fields.len()),
            ));
        }
        let partition = Partition::from_code(fields[0]).ok_or_else(|| {
            Error::parse(origin, lineno, format!("unknown partition code {:?}", fields[0]))
        })?;
        if fields[2].trim().is_empty() {
            return Err(Error::parse(origin, lineno, "empty sentence"));
        }
        rows.push((partition, fields[1], fields[2]));
    }
    if rows.is_empty() {
        return Err(Error::parse(origin, 0, "empty file"));
    }
    ProbingDataset::from_rows(task, rows).map_err(|e| e.context(origin.display().to_string()))
}

/// Numeric value of every label id: the raw label itself when every label
/// parses as a finite number (e.g. length bins), the label id otherwise.
pub fn label_values(ds: &ProbingDataset) -> Vec<f64> {
    let parsed: Option<Vec<f64>> = ds
        .label_names
        .iter()
        .map(|l| l.trim().parse::<f64>().ok().filter(|v| v.is_finite()))
        .collect();
    parsed.unwrap_or_else(|| (0..ds.n_classes).map(|i| i as f64).collect())
}

/// `(label_id, count)` for every label of the dataset, ordered by label id.
pub fn class_distribution(ds: &ProbingDataset, partition: Partition) -> Vec<(usize, usize)> {
    let mut counts = vec![0usize; ds.n_classes];
    for e in ds.examples.iter().filter(|e| e.partition == partition) {
        counts[e.label_id] += 1;
    }
    counts.into_iter().enumerate().collect()
}
