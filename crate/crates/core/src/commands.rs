//! The `pool`, `probe` and `synth` commands, independent of argument parsing.

use std::collections::{BTreeMap, HashSet};
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Duration;

use serde::Serialize;
use serde_json::json;

use crate::config::{task_name, RunConfig};
use crate::corpus::{self, Partition, ProbingDataset};
use crate::embed::{self, NormStats, SentenceEmbeddingSet};
use crate::error::{Error, Result};
use crate::experiment::{self, ExperimentPlan, PlanOptions, Ranges, TimingRecord};
use crate::report::{self, Caption, TaskResults};
use crate::rng;
use crate::stats::RunResult;
use crate::synth::{self, SynthSpec};

/// Write `contents` to a temporary sibling of `path`, then rename it into place.
pub fn write_atomic(path: &Path, contents: &[u8]) -> Result<()> {
    let dir = path.parent().filter(|d| !d.as_os_str().is_empty()).unwrap_or(Path::new("."));
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let name = path
        .file_name()
        .ok_or_else(|| Error::Config(format!("{} is not a file path", path.display())))?;
    let tmp = dir.join(format!(".{}.tmp", name.to_string_lossy()));
    let mut f = fs::File::create(&tmp).map_err(|e| Error::io(&tmp, e))?;
    f.write_all(contents).map_err(|e| Error::io(&tmp, e))?;
    f.sync_all().map_err(|e| Error::io(&tmp, e))?;
    fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
}

fn prepare_output_dir(cfg: &RunConfig) -> Result<PathBuf> {
    let dir = cfg.output_dir()?;
    fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
    let probe = dir.join(".noiseprobe-write-test");
    fs::write(&probe, b"").map_err(|e| Error::io(&dir, e))?;
    let _ = fs::remove_file(&probe);
    Ok(dir)
}

/// Seed of the OOV draws when pooling `task`.
pub fn pool_seed(master: u64, task: &str) -> u64 {
    rng::derive_seed(master, "pool", 0) ^ rng::derive_seed(master, task, 0)
}

struct LoadedTask {
    name: String,
    dataset: ProbingDataset,
    embeddings: SentenceEmbeddingSet,
    oov: Option<usize>,
}

fn load_datasets(cfg: &RunConfig) -> Result<Vec<ProbingDataset>> {
    cfg.tasks
        .iter()
        .map(|t| corpus::parse_probing_file(&t.dataset))
        .collect()
}

fn pool_all(cfg: &RunConfig, datasets: Vec<ProbingDataset>) -> Result<Vec<LoadedTask>> {
    let table_path = cfg
        .word_table
        .as_ref()
        .ok_or_else(|| Error::Config("word_table: required for pooling".into()))?;
    let mut vocab = HashSet::new();
    for ds in &datasets {
        vocab.extend(embed::dataset_vocabulary(ds));
    }
    log::info!("loading word table {} ({} dataset types)", table_path.display(), vocab.len());
    let table = embed::load_word_table_filtered(table_path, Some(&vocab))?;
    datasets
        .into_iter()
        .map(|dataset| {
            let name = dataset.task_name.clone();
            let provenance = format!("{} mean-pooled word vectors", cfg.encoder);
            let (embeddings, oov) = embed::pool_dataset(&table, &dataset, pool_seed(cfg.seed, &name), &provenance)
                .map_err(|e| e.context(format!("pooling {name}")))?;
            Ok(LoadedTask {
                name,
                dataset,
                embeddings,
                oov: Some(oov),
            })
        })
        .collect()
}

fn load_tasks(cfg: &RunConfig) -> Result<Vec<LoadedTask>> {
    let datasets = load_datasets(cfg)?;
    if cfg.word_table.is_some() {
        return pool_all(cfg, datasets);
    }
    datasets
        .into_iter()
        .zip(&cfg.tasks)
        .map(|(dataset, entry)| {
            let path = entry
                .embeddings
                .as_ref()
                .ok_or_else(|| Error::Config(format!("task {}: embeddings not set", dataset.task_name)))?;
            let embeddings = embed::load_sentence_embeddings(path, Some(dataset.len()))?;
            Ok(LoadedTask {
                name: dataset.task_name.clone(),
                dataset,
                embeddings,
                oov: None,
            })
        })
        .collect()
}

#[derive(Debug, Clone, Serialize)]
pub struct PoolOutput {
    pub task: String,
    pub embeddings: PathBuf,
    pub metadata: PathBuf,
    pub rows: usize,
    pub dim: usize,
    pub oov_tokens: usize,
}

/// Pool every task's sentences and write one interchange file per task,
/// each with a `.meta.json` sibling recording the OOV count and seed.
pub fn cmd_pool(cfg: &RunConfig) -> Result<Vec<PoolOutput>> {
    cfg.validate()?;
    if cfg.word_table.is_none() {
        return Err(Error::Config("word_table: the pool command needs a word table".into()));
    }
    let dir = prepare_output_dir(cfg)?;
    let tasks = pool_all(cfg, load_datasets(cfg)?)?;
    let mut out = Vec::new();
    for t in tasks {
        let path = dir.join(format!("{}__{}.vec", t.name, cfg.encoder));
        write_atomic(&path, t.embeddings.to_interchange_string().as_bytes())?;
        let meta_path = dir.join(format!("{}__{}.vec.meta.json", t.name, cfg.encoder));
        let oov = t.oov.unwrap_or(0);
        let meta = json!({
            "task": t.name,
            "encoder": cfg.encoder,
            "rows": t.embeddings.len(),
            "dim": t.embeddings.dim,
            "oov_tokens": oov,
            "seed": cfg.seed,
            "pool_seed": pool_seed(cfg.seed, &t.name),
            "word_table": cfg.word_table,
            "provenance": t.embeddings.provenance,
        });
        write_atomic(&meta_path, to_pretty(&meta)?.as_bytes())?;
        log::info!("{}: {} rows, {} OOV tokens", t.name, t.embeddings.len(), oov);
        out.push(PoolOutput {
            task: t.name,
            embeddings: path,
            metadata: meta_path,
            rows: t.embeddings.len(),
            dim: t.embeddings.dim,
            oov_tokens: oov,
        });
    }
    Ok(out)
}

fn to_pretty(v: &serde_json::Value) -> Result<String> {
    let mut s = serde_json::to_string_pretty(v).map_err(|e| Error::Runtime(e.to_string()))?;
    s.push('\n');
    Ok(s)
}

/// Ranges pooled over every task's sentence embeddings plus any extra files.
fn auto_ranges(cfg: &RunConfig, tasks: &[LoadedTask]) -> Result<Ranges> {
    let mut stats: Option<NormStats> = None;
    let mut add = |s: NormStats| {
        stats = Some(match stats {
            Some(prev) => prev.merge(&s),
            None => s,
        })
    };
    for t in tasks {
        add(embed::norm_stats(&t.embeddings)?);
    }
    for path in &cfg.ranges.extra {
        add(embed::norm_stats(&embed::load_sentence_embeddings(path, None)?)?);
    }
    stats
        .map(Ranges::from)
        .ok_or_else(|| Error::Data("no embeddings to compute ranges from".into()))
}

#[derive(Debug, Clone, Serialize)]
pub struct TaskOutput {
    pub task: String,
    pub ledger: PathBuf,
    pub timings: PathBuf,
    pub results: PathBuf,
    pub correlations: Option<PathBuf>,
    pub infer_norm_encoding: Option<bool>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ProbeOutput {
    pub ranges: Ranges,
    pub tasks: Vec<TaskOutput>,
    /// Combined table over all tasks when there is more than one.
    pub combined: Option<PathBuf>,
}

/// The resolved plan printed by `--dry-run`.
pub fn describe_plan(cfg: &RunConfig) -> Result<serde_json::Value> {
    cfg.validate()?;
    Ok(json!({
        "encoder": cfg.encoder,
        "output_dir": cfg.output_dir()?,
        "source": match &cfg.word_table {
            Some(w) => json!({ "word_table": w }),
            None => json!("sentence_embeddings"),
        },
        "tasks": cfg.tasks.iter().map(|t| json!({
            "task": task_name(&t.dataset),
            "dataset": t.dataset,
            "embeddings": t.embeddings,
        })).collect::<Vec<_>>(),
        "conditions": cfg.conditions,
        "n_runs": cfg.n_runs,
        "seed": cfg.seed,
        "workers": cfg.workers,
        "ranges": match cfg.explicit_ranges()? {
            Some(r) => json!(r),
            None => json!({ "mode": "auto", "extra": cfg.ranges.extra }),
        },
        "ci": cfg.ci,
        "ci_level": crate::stats::CI_LEVEL,
        "probe": cfg.probe,
        "train_limit": cfg.train_limit,
        "freeze_noise": cfg.freeze_noise,
        "freeze_probe": cfg.freeze_probe,
        "format": cfg.format,
    }))
}

/// Run every configured task through the full protocol and write the run
/// ledger, per-run timings, results table and correlation table per task.
pub fn cmd_probe(
    cfg: &RunConfig,
    progress: &(dyn Fn(&str, &RunResult, Duration) + Sync),
) -> Result<ProbeOutput> {
    cfg.validate()?;
    let dir = prepare_output_dir(cfg)?;
    let tasks = load_tasks(cfg)?;
    let ranges = match cfg.explicit_ranges()? {
        Some(r) => r,
        None => auto_ranges(cfg, &tasks)?,
    };
    log::info!("ablation ranges: {ranges:?}");
    let conditions = cfg.parse_conditions(&ranges)?;
    let options = PlanOptions {
        n_runs: cfg.n_runs,
        master_seed: cfg.seed,
        probe: cfg.probe.clone(),
        ci_method: cfg.ci,
        freeze_noise: cfg.freeze_noise,
        freeze_probe: cfg.freeze_probe,
        train_limit: cfg.train_limit,
    };
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.workers)
        .build()
        .map_err(|e| Error::Runtime(e.to_string()))?;

    let mut outputs = Vec::new();
    let mut all_results = Vec::new();
    let mut label_orders = BTreeMap::new();
    let mut provenance = Vec::new();
    for t in &tasks {
        let plan = ExperimentPlan::new(&t.dataset, &t.embeddings, conditions.clone(), options.clone())
            .map_err(|e| e.context(format!("task {}", t.name)))?;
        let outcome = pool
            .install(|| experiment::run_plan_with(&plan, &|r, d| progress(&t.name, r, d)))
            .map_err(|e| e.context(format!("task {}", t.name)))?;

        let ledger_path = dir.join(format!("{}__{}__ledger.jsonl", t.name, cfg.encoder));
        write_atomic(&ledger_path, report::ledger_to_jsonl(&outcome.ledger)?.as_bytes())?;
        let timing_path = dir.join(format!("{}__{}__timing.jsonl", t.name, cfg.encoder));
        write_atomic(&timing_path, timings_to_jsonl(&outcome.timings)?.as_bytes())?;

        // tables are rendered from the ledger as written
        let text = fs::read_to_string(&ledger_path).map_err(|e| Error::io(&ledger_path, e))?;
        let results = TaskResults::from_ledger(&t.name, &report::ledger_from_jsonl(&text)?, &cfg.ci)?;
        let mut caption = Caption::new(cfg.n_runs, &cfg.ci, cfg.seed, &cfg.encoder, &t.embeddings.provenance);
        caption.label_orders.insert(t.name.clone(), t.dataset.label_names.clone());
        label_orders.insert(t.name.clone(), t.dataset.label_names.clone());
        provenance.push(t.embeddings.provenance.clone());
        let results_path = dir.join(report::output_file_name(&t.name, &cfg.encoder, "results", cfg.format));
        write_atomic(
            &results_path,
            report::render_results(std::slice::from_ref(&results), &caption, cfg.format)?.as_bytes(),
        )?;

        let correlations = if cfg.correlations {
            let test = t.dataset.partition_indices(Partition::Test);
            let reports = experiment::correlation_suite(&t.dataset, &t.embeddings, &test, &ranges, cfg.seed)?;
            let path = dir.join(report::output_file_name(&t.name, &cfg.encoder, "correlations", cfg.format));
            write_atomic(&path, report::render_correlations(&reports, cfg.format)?.as_bytes())?;
            Some(path)
        } else {
            None
        };
        outputs.push(TaskOutput {
            task: t.name.clone(),
            ledger: ledger_path,
            timings: timing_path,
            results: results_path,
            correlations,
            infer_norm_encoding: results.norm_encoding,
        });
        all_results.push(results);
    }

    let combined = if all_results.len() > 1 {
        provenance.dedup();
        let mut caption = Caption::new(cfg.n_runs, &cfg.ci, cfg.seed, &cfg.encoder, &provenance.join("; "));
        caption.label_orders = label_orders;
        let path = dir.join(report::output_file_name("all", &cfg.encoder, "results", cfg.format));
        write_atomic(&path, report::render_results(&all_results, &caption, cfg.format)?.as_bytes())?;
        Some(path)
    } else {
        None
    };
    Ok(ProbeOutput {
        ranges,
        tasks: outputs,
        combined,
    })
}

fn timings_to_jsonl(timings: &[TimingRecord]) -> Result<String> {
    let mut out = String::new();
    for t in timings {
        out.push_str(&serde_json::to_string(t).map_err(|e| Error::Runtime(e.to_string()))?);
        out.push('\n');
    }
    Ok(out)
}

pub fn load_synth_spec(path: &Path) -> Result<SynthSpec> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let spec: SynthSpec = toml::from_str(&text)
        .map_err(|e| Error::Config(e.to_string()).context(path.display().to_string()))?;
    spec.validate()?;
    Ok(spec)
}

#[derive(Debug, Clone, Serialize)]
pub struct SynthOutput {
    pub dataset: PathBuf,
    pub embeddings: PathBuf,
    /// A probe config pointing at the two files.
    pub config: PathBuf,
}

/// Write `<task>.txt`, `<task>.vec` and a ready-to-run `<task>.toml` probe config.
pub fn cmd_synth(spec: &SynthSpec, out_dir: &Path) -> Result<SynthOutput> {
    let data = synth::generate(spec)?;
    let dataset = out_dir.join(format!("{}.txt", spec.task_name));
    let embeddings = out_dir.join(format!("{}.vec", spec.task_name));
    let config = out_dir.join(format!("{}.toml", spec.task_name));
    write_atomic(&dataset, data.dataset.to_tsv().as_bytes())?;
    write_atomic(&embeddings, data.embeddings.to_interchange_string().as_bytes())?;
    let probe_cfg = format!(
        "encoder = \"synth\"\noutput_dir = \"results\"\nseed = {}\n\n[[tasks]]\ndataset = \"{}.txt\"\nembeddings = \"{}.vec\"\n",
        spec.seed, spec.task_name, spec.task_name
    );
    write_atomic(&config, probe_cfg.as_bytes())?;
    Ok(SynthOutput {
        dataset,
        embeddings,
        config,
    })
}
