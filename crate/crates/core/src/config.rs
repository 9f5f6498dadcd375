//! TOML run configuration shared by the `pool` and `probe` commands.
//!
//! ```toml
//! encoder = "glove"
//! output_dir = "out"            # or $NOISEPROBE_OUTPUT_DIR
//! word_table = "glove.txt"      # or per-task `embeddings`, never both
//! n_runs = 50
//! seed = 0
//! conditions = ["rand_pred", "rand_vec", "vanilla", "ablate_norm", "ablate_dims", "ablate_both"]
//!
//! [[tasks]]
//! dataset = "sentence_length.txt"
//!
//! [ranges]
//! mode = "auto"                 # or "explicit" with norm_l2 / dim (and norm_l1)
//!
//! [ci]
//! method = "t"                  # or "bootstrap" with resamples and seed
//!
//! [probe]
//! hidden_size = 100
//! ```
//!
//! Relative paths resolve against the directory holding the config file.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::experiment::{self, Condition, Ranges};
use crate::probe::ProbeConfig;
use crate::report::Format;
use crate::stats::CiMethod;

pub const OUTPUT_DIR_ENV: &str = "NOISEPROBE_OUTPUT_DIR";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TaskEntry {
    pub dataset: PathBuf,
    /// Pre-computed sentence embeddings aligned with `dataset`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub embeddings: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RangeMode {
    #[default]
    Auto,
    Explicit,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RangeConfig {
    pub mode: RangeMode,
    pub norm_l1: Option<(f64, f64)>,
    pub norm_l2: Option<(f64, f64)>,
    pub dim: Option<(f64, f64)>,
    /// Further sentence-embedding files pooled into the automatic ranges.
    pub extra: Vec<PathBuf>,
}

fn default_encoder() -> String {
    "encoder".into()
}
fn default_runs() -> usize {
    experiment::DEFAULT_RUNS
}
fn default_workers() -> usize {
    1
}
fn default_conditions() -> Vec<String> {
    experiment::default_conditions().into_iter().map(String::from).collect()
}
fn default_format() -> Format {
    Format::Md
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default = "default_encoder")]
    pub encoder: String,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
    #[serde(default)]
    pub word_table: Option<PathBuf>,
    pub tasks: Vec<TaskEntry>,
    #[serde(default = "default_runs")]
    pub n_runs: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_workers")]
    pub workers: usize,
    #[serde(default = "default_conditions")]
    pub conditions: Vec<String>,
    #[serde(default)]
    pub ranges: RangeConfig,
    #[serde(default)]
    pub ci: CiMethod,
    #[serde(default)]
    pub probe: ProbeConfig,
    #[serde(default = "default_format")]
    pub format: Format,
    /// Seeded subsample size for each task's training split.
    #[serde(default)]
    pub train_limit: Option<usize>,
    #[serde(default)]
    pub freeze_noise: bool,
    #[serde(default)]
    pub freeze_probe: bool,
    /// Also compute norm/label correlations on each test split.
    #[serde(default = "yes")]
    pub correlations: bool,
}

fn yes() -> bool {
    true
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    /// Parse a config file and resolve its relative paths.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut cfg = Self::from_toml(&text).map_err(|e| e.context(path.display().to_string()))?;
        let base = path.parent().unwrap_or_else(|| Path::new("."));
        cfg.resolve_paths(base);
        Ok(cfg)
    }

    pub fn resolve_paths(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        self.output_dir.iter_mut().for_each(fix);
        self.word_table.iter_mut().for_each(fix);
        for t in &mut self.tasks {
            fix(&mut t.dataset);
            t.embeddings.iter_mut().for_each(fix);
        }
        self.ranges.extra.iter_mut().for_each(fix);
    }

    /// Structural checks that need no file access.
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if self.encoder.is_empty() || self.encoder.contains(['/', '\\']) {
            return bad(format!("encoder: {:?} is not usable in file names", self.encoder));
        }
        if self.tasks.is_empty() {
            return bad("tasks: at least one task is required".into());
        }
        let with_embeddings = self.tasks.iter().filter(|t| t.embeddings.is_some()).count();
        match (&self.word_table, with_embeddings) {
            (Some(_), 0) => {}
            (Some(_), _) => {
                return bad("word_table and per-task embeddings are both set; choose one source".into())
            }
            (None, n) if n == self.tasks.len() => {}
            (None, _) => {
                return bad("every task needs `embeddings` unless a word_table is given".into())
            }
        }
        let mut stems: Vec<String> = self.tasks.iter().map(|t| task_name(&t.dataset)).collect();
        stems.sort();
        if let Some(w) = stems.windows(2).find(|w| w[0] == w[1]) {
            return bad(format!("tasks: two datasets share the task name {}", w[0]));
        }
        if self.n_runs < 2 {
            return bad(format!("n_runs: must be at least 2, got {}", self.n_runs));
        }
        if self.workers == 0 {
            return bad("workers: must be at least 1".into());
        }
        if let CiMethod::Bootstrap { resamples, .. } = self.ci {
            if resamples < 100 {
                return bad(format!("ci.resamples: need at least 100, got {resamples}"));
            }
        }
        if self.train_limit == Some(0) {
            return bad("train_limit: must be positive".into());
        }
        self.probe.validate()?;
        let placeholder = Ranges {
            norm_l1: (1.0, 1.0),
            norm_l2: (1.0, 1.0),
            dim: (-1.0, 1.0),
        };
        let conditions = self.parse_conditions(&placeholder)?;
        let ids: Vec<String> = conditions.iter().map(Condition::id).collect();
        if !ids.iter().any(|c| c == "vanilla") {
            return bad("conditions: vanilla is required".into());
        }
        if !ids.iter().any(|c| c == "rand_pred") || !ids.iter().any(|c| c.starts_with("rand_vec")) {
            return bad("conditions: rand_pred and rand_vec are required".into());
        }
        if self.ranges.mode == RangeMode::Explicit {
            if self.ranges.norm_l2.is_none() || self.ranges.dim.is_none() {
                return bad("ranges: explicit mode needs norm_l2 and dim".into());
            }
            if self.ranges.norm_l1.is_none() && self.needs_l1() {
                return bad("ranges: L1 conditions need an explicit norm_l1".into());
            }
            self.explicit_ranges()?;
        } else if self.ranges.norm_l1.is_some() || self.ranges.norm_l2.is_some() || self.ranges.dim.is_some() {
            return bad("ranges: values are only allowed with mode = \"explicit\"".into());
        }
        Ok(())
    }

    fn needs_l1(&self) -> bool {
        self.conditions.iter().any(|c| c.ends_with("_l1"))
    }

    pub fn parse_conditions(&self, ranges: &Ranges) -> Result<Vec<Condition>> {
        if self.conditions.is_empty() {
            return Err(Error::Config("conditions: list is empty".into()));
        }
        self.conditions
            .iter()
            .map(|c| Condition::parse(c, ranges).map_err(|e| e.context("conditions")))
            .collect()
    }

    /// Ranges given in the config; `None` in auto mode.
    pub fn explicit_ranges(&self) -> Result<Option<Ranges>> {
        if self.ranges.mode == RangeMode::Auto {
            return Ok(None);
        }
        let (Some(norm_l2), Some(dim)) = (self.ranges.norm_l2, self.ranges.dim) else {
            return Err(Error::Config("ranges: explicit mode needs norm_l2 and dim".into()));
        };
        let ranges = Ranges {
            // only read by L1 conditions, which validation rejects without it
            norm_l1: self.ranges.norm_l1.unwrap_or(norm_l2),
            norm_l2,
            dim,
        };
        // surface bad bounds here rather than at the first condition
        for order in [crate::embed::NormOrder::L1, crate::embed::NormOrder::L2] {
            crate::ablate::AblationSpec::new(
                crate::ablate::AblationKind::AblateBoth,
                order,
                ranges.norm(order),
                ranges.dim,
            )
            .map_err(|e| e.context("ranges"))?;
        }
        Ok(Some(ranges))
    }

    /// The configured output directory, falling back to the environment.
    pub fn output_dir(&self) -> Result<PathBuf> {
        if let Some(d) = &self.output_dir {
            return Ok(d.clone());
        }
        match std::env::var_os(OUTPUT_DIR_ENV) {
            Some(d) if !d.is_empty() => Ok(PathBuf::from(d)),
            _ => Err(Error::Config(format!(
                "output_dir: not set in the config and {OUTPUT_DIR_ENV} is empty"
            ))),
        }
    }
}

/// Task name of a dataset file: its stem.
pub fn task_name(dataset: &Path) -> String {
    dataset
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "task".into())
}
