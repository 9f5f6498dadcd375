//! Acceptance suite. Prints one `PASS`, `FAIL` or `SKIP` line per criterion
//! and exits nonzero if any criterion fails.
//!
//! The GloVe reproduction needs external data:
//!   NOISEPROBE_SENTEVAL_DIR  directory holding sentence_length.txt
//!   NOISEPROBE_GLOVE         GloVe text file (300-d)

use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::{Duration, Instant};

use rand::Rng;
use rand_distr::StandardNormal;

use noiseprobe::ablate::{self, AblationKind, AblationSpec, NormOrder};
use noiseprobe::commands;
use noiseprobe::corpus::{self, Partition};
use noiseprobe::embed::{self, norm_stats, EmbeddingVector};
use noiseprobe::experiment::{
    self, run_condition, run_plan, Condition, ExperimentPlan, PlanOptions, PlanOutcome, Ranges, Verdict,
};
use noiseprobe::probe::{self, ProbeConfig};
use noiseprobe::rng;
use noiseprobe::stats::{self, pearson, summarize, CiMethod, ScoreMatrix};
use noiseprobe::synth::{generate, Placement, SynthSpec};

type Outcome = Result<String, String>;

const GLOVE_NORM: (f64, f64) = (2.0041, 8.0359);
const GLOVE_DIM: (f64, f64) = (-2.5446, 3.1976);

fn check(ok: bool, msg: impl Into<String>) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn gaussian_vector(dim: usize, r: &mut rng::SeededRng) -> EmbeddingVector {
    EmbeddingVector::new((0..dim).map(|_| 2.0 * r.sample::<f64, _>(StandardNormal)).collect())
}

/// Two-sample Kolmogorov-Smirnov statistic.
fn ks_statistic(a: &[f64], b: &[f64]) -> f64 {
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (n, m) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j, mut d) = (0, 0, 0.0f64);
    while i < a.len() && j < b.len() {
        let x = a[i].min(b[j]);
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / n - j as f64 / m).abs());
    }
    d
}

fn ablation_invariants() -> Outcome {
    const N: usize = 10_000;
    const DIM: usize = 300;
    let mut worst = (0.0f64, 0.0f64, 0.0f64);
    let mut r = rng::seeded(rng::derive_seed(1, "acceptance-inputs", 0));
    let mut noise = rng::seeded(rng::derive_seed(1, "acceptance-noise", 0));
    for order in [NormOrder::L1, NormOrder::L2] {
        let dims = AblationSpec::new(AblationKind::AblateDims, order, GLOVE_NORM, GLOVE_DIM).map_err(|e| e.to_string())?;
        let norm = AblationSpec::new(AblationKind::AblateNorm, order, GLOVE_NORM, GLOVE_DIM).map_err(|e| e.to_string())?;
        let unit = AblationSpec::deterministic(AblationKind::Normalize, order);
        for _ in 0..N {
            let v = gaussian_vector(DIM, &mut r);
            let d = ablate::ablate_dimensions(&v, &dims, &mut noise).map_err(|e| e.to_string())?;
            worst.0 = worst.0.max((d.norm(order) - v.norm(order)).abs() / v.norm(order));
            let a = ablate::ablate_norm(&v, &norm, &mut noise).map_err(|e| e.to_string())?;
            worst.1 = worst.1.max((a.cosine(&v) - 1.0).abs());
            let len = a.norm(order);
            check(
                len >= GLOVE_NORM.0 * (1.0 - 1e-12) && len <= GLOVE_NORM.1 * (1.0 + 1e-12),
                format!("ablate_norm {} norm {len} outside range", order.as_str()),
            )?;
            let u = ablate::normalize(&v, &unit).map_err(|e| e.to_string())?;
            worst.2 = worst.2.max((u.norm(order) - 1.0).abs());
        }
    }
    check(worst.0 < 1e-9, format!("ablate_dims relative norm error {:e}", worst.0))?;
    check(worst.1 < 1e-9, format!("ablate_norm cosine error {:e}", worst.1))?;
    check(worst.2 < 1e-9, format!("normalize error {:e}", worst.2))?;

    // ablate_both on arbitrary inputs against random_vector
    let both = AblationSpec::new(AblationKind::AblateBoth, NormOrder::L2, GLOVE_NORM, GLOVE_DIM).map_err(|e| e.to_string())?;
    let random = AblationSpec { kind: AblationKind::RandomVector, ..both };
    let mut in_rng = rng::seeded(rng::derive_seed(2, "acceptance-inputs", 0));
    let mut both_rng = rng::seeded(rng::derive_seed(2, "acceptance-both", 0));
    let mut vec_rng = rng::seeded(rng::derive_seed(2, "acceptance-random", 0));
    let mut dir_rng = rng::seeded(rng::derive_seed(2, "acceptance-direction", 0));
    let direction: Vec<f64> = (0..DIM).map(|_| dir_rng.sample(StandardNormal)).collect();
    let mut x: Vec<EmbeddingVector> = Vec::with_capacity(N);
    let mut y: Vec<EmbeddingVector> = Vec::with_capacity(N);
    for _ in 0..N {
        let v = gaussian_vector(DIM, &mut in_rng);
        x.push(ablate::ablate_both(&v, &both, &mut both_rng).map_err(|e| e.to_string())?);
        y.push(ablate::random_vector(DIM, &random, &mut vec_rng).map_err(|e| e.to_string())?);
    }
    let projections: [(&str, Box<dyn Fn(&EmbeddingVector) -> f64>); 5] = [
        ("l2 norm", Box::new(|v| v.l2())),
        ("l1 norm", Box::new(|v| v.l1())),
        ("first component", Box::new(|v| v.values()[0])),
        ("last component", Box::new(|v| v.values()[DIM - 1])),
        ("random direction", Box::new(move |v| v.values().iter().zip(&direction).map(|(a, b)| a * b).sum())),
    ];
    // family-wise alpha 0.01 over the projections (Bonferroni)
    let alpha = 0.01 / projections.len() as f64;
    let critical = (-(alpha / 2.0).ln() / 2.0).sqrt() * ((2.0 * N as f64) / (N as f64 * N as f64)).sqrt();
    let mut worst_d = 0.0f64;
    for (name, f) in &projections {
        let a: Vec<f64> = x.iter().map(f).collect();
        let b: Vec<f64> = y.iter().map(f).collect();
        let d = ks_statistic(&a, &b);
        check(d < critical, format!("KS on {name}: D = {d:.5} >= {critical:.5}"))?;
        worst_d = worst_d.max(d);
    }
    Ok(format!(
        "{N} vectors x 2 orders, max errors {:.1e}/{:.1e}/{:.1e}, KS max D {worst_d:.4} < {critical:.4}",
        worst.0, worst.1, worst.2
    ))
}

fn pairwise_auc(scores: &[f64], positive: &[bool]) -> f64 {
    let (mut num, mut pairs) = (0.0, 0.0);
    for (i, &si) in scores.iter().enumerate() {
        for (j, &sj) in scores.iter().enumerate() {
            if positive[i] && !positive[j] {
                pairs += 1.0;
                num += if si > sj { 1.0 } else if si == sj { 0.5 } else { 0.0 };
            }
        }
    }
    num / pairs
}

fn two_pass_pearson(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let cov: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let vx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    let vy: f64 = y.iter().map(|b| (b - my).powi(2)).sum();
    cov / (vx.sqrt() * vy.sqrt())
}

fn statistic_oracles() -> Outcome {
    let mut r = rng::seeded(rng::derive_seed(3, "acceptance-auc", 0));
    let mut instances = 0;
    while instances < 500 {
        let n = r.gen_range(4..=200);
        let k = if instances % 2 == 0 { 2 } else { r.gen_range(3..=5) };
        let labels: Vec<usize> = (0..n).map(|_| r.gen_range(0..k)).collect();
        if (0..k).any(|c| !labels.contains(&c)) {
            continue;
        }
        // coarse scores so ties occur
        let data: Vec<f64> = (0..n * k).map(|_| r.gen_range(0..12) as f64 / 11.0).collect();
        let m = ScoreMatrix::new(n, k, data).map_err(|e| e.to_string())?;
        let got = stats::auc_roc(&m, &labels).map_err(|e| e.to_string())?;
        let want = if k == 2 {
            let pos: Vec<bool> = labels.iter().map(|&l| l == 1).collect();
            pairwise_auc(&m.column(1), &pos)
        } else {
            (0..k)
                .map(|c| {
                    let pos: Vec<bool> = labels.iter().map(|&l| l == c).collect();
                    pairwise_auc(&m.column(c), &pos)
                })
                .sum::<f64>()
                / k as f64
        };
        check(got == want, format!("auc instance {instances}: {got} vs oracle {want}"))?;
        instances += 1;
    }

    let mut worst_r = 0.0f64;
    for _ in 0..500 {
        let n = r.gen_range(3..=300);
        let x: Vec<f64> = (0..n).map(|_| r.gen_range(-50.0..50.0)).collect();
        let y: Vec<f64> = x.iter().map(|v| 0.3 * v + r.gen_range(-40.0..40.0)).collect();
        let got = pearson(&x, &y).map_err(|e| e.to_string())?;
        worst_r = worst_r.max((got - two_pass_pearson(&x, &y)).abs());
    }
    check(worst_r <= 1e-12, format!("pearson differs from two-pass oracle by {worst_r:e}"))?;

    // ranks 1..3 vs 4..6: H = 12/(6*7) * (6^2/3 + 15^2/3) - 3*7 = 27/7
    let kw = stats::kruskal_wallis(&[vec![1.0, 2.0, 3.0], vec![4.0, 5.0, 6.0]]).map_err(|e| e.to_string())?;
    check((kw.h - 27.0 / 7.0).abs() < 1e-12, format!("Kruskal-Wallis H {} vs 27/7", kw.h))?;

    let mut worst_g = 0.0f64;
    for seed in 0..5u64 {
        let mut gr = rng::seeded(rng::derive_seed(seed, "acceptance-gradient", 0));
        let rows: Vec<EmbeddingVector> = (0..6)
            .map(|_| EmbeddingVector::new((0..5).map(|_| gr.gen_range(-1.0..1.0)).collect()))
            .collect();
        let labels: Vec<usize> = (0..6).map(|i| i % 3).collect();
        let cfg = ProbeConfig {
            hidden_size: 7,
            seed,
            ..ProbeConfig::default()
        };
        worst_g = worst_g.max(probe::gradient_check(&cfg, 3, &rows, &labels).map_err(|e| e.to_string())?);
        let binary: Vec<usize> = (0..6).map(|i| i % 2).collect();
        worst_g = worst_g.max(probe::gradient_check(&cfg, 2, &rows, &binary).map_err(|e| e.to_string())?);
    }
    check(worst_g < 1e-4, format!("gradient check max relative error {worst_g:e}"))?;
    Ok(format!(
        "500 AUC instances exact, pearson max diff {worst_r:.1e}, H = {:.6}, gradient max rel err {worst_g:.1e}",
        kw.h
    ))
}

fn synthetic_outcome(placement: Placement) -> Result<PlanOutcome, String> {
    let d = generate(&SynthSpec::new(placement, 4000, 1000, 50)).map_err(|e| e.to_string())?;
    let ranges: Ranges = norm_stats(&d.embeddings).map_err(|e| e.to_string())?.into();
    let conditions = experiment::default_conditions()
        .iter()
        .map(|c| Condition::parse(c, &ranges))
        .collect::<noiseprobe::Result<Vec<_>>>()
        .map_err(|e| e.to_string())?;
    let options = PlanOptions {
        n_runs: 20,
        master_seed: 2021,
        ..PlanOptions::default()
    };
    let plan = ExperimentPlan::new(&d.dataset, &d.embeddings, conditions, options).map_err(|e| e.to_string())?;
    run_plan(&plan).map_err(|e| e.to_string())
}

fn verdict(out: &PlanOutcome, id: &str) -> Result<(Verdict, bool, f64), String> {
    let c = out
        .classifications
        .iter()
        .find(|c| c.condition_id == id)
        .ok_or_else(|| format!("no classification for {id}"))?;
    let s = out.summaries.iter().find(|s| s.condition_id == id).unwrap();
    Ok((c.verdict, c.above_random, s.mean_auc))
}

fn synthetic_end_to_end() -> Outcome {
    let start = Instant::now();
    let dims = synthetic_outcome(Placement::DimsOnly)?;
    let (vd, _, vanilla) = verdict(&dims, "vanilla")?;
    let (dd, _, dims_auc) = verdict(&dims, "ablate_dims")?;
    let (bd, _, _) = verdict(&dims, "ablate_both")?;
    check(vanilla >= 0.9, format!("dims_only vanilla mean AUC {vanilla:.4} < 0.9"))?;
    check(dd == Verdict::SameAsRandom, format!("dims_only ablate_dims verdict {dd:?} ({dims_auc:.4})"))?;
    check(bd == Verdict::SameAsRandom, format!("dims_only ablate_both verdict {bd:?}"))?;
    check(dims.norm_encoding == Some(false), "dims_only infers norm encoding")?;

    let norm = synthetic_outcome(Placement::NormOnly)?;
    let (dn, above, norm_dims_auc) = verdict(&norm, "ablate_dims")?;
    let (bn, _, _) = verdict(&norm, "ablate_both")?;
    check(
        dn == Verdict::DistinctFromBoth && above && norm_dims_auc >= 0.8,
        format!("norm_only ablate_dims verdict {dn:?}, mean AUC {norm_dims_auc:.4}"),
    )?;
    check(bn == Verdict::SameAsRandom, format!("norm_only ablate_both verdict {bn:?}"))?;
    check(norm.norm_encoding == Some(true), "norm_only does not infer norm encoding")?;

    let elapsed = start.elapsed();
    check(elapsed <= Duration::from_secs(600), format!("took {:.0} s > 600 s", elapsed.as_secs_f64()))?;
    Ok(format!(
        "dims_only vanilla {vanilla:.4} {vd:?}, ablate_dims {dims_auc:.4} {dd:?}; norm_only ablate_dims {norm_dims_auc:.4} {dn:?}, ablate_both {bn:?}; {:.0} s",
        elapsed.as_secs_f64()
    ))
}

fn baseline_sanity() -> Outcome {
    let start = Instant::now();
    let d = generate(&SynthSpec::new(Placement::Both, 300, 300, 10)).map_err(|e| e.to_string())?;
    let ranges: Ranges = norm_stats(&d.embeddings).map_err(|e| e.to_string())?.into();
    let conditions = experiment::default_conditions()
        .iter()
        .map(|c| Condition::parse(c, &ranges))
        .collect::<noiseprobe::Result<Vec<_>>>()
        .map_err(|e| e.to_string())?;
    let mut hits = [0usize; 2];
    const REPS: usize = 20;
    for rep in 0..REPS {
        let options = PlanOptions {
            n_runs: 50,
            master_seed: 100 + rep as u64,
            ..PlanOptions::default()
        };
        let plan = ExperimentPlan::new(&d.dataset, &d.embeddings, conditions.clone(), options).map_err(|e| e.to_string())?;
        for (slot, id) in ["rand_pred", "rand_vec"].iter().enumerate() {
            let cond = conditions.iter().find(|c| c.id() == *id).unwrap();
            let runs = (0..50)
                .map(|i| run_condition(&plan, cond, i))
                .collect::<noiseprobe::Result<Vec<_>>>()
                .map_err(|e| e.to_string())?;
            let s = summarize(runs, &CiMethod::T).map_err(|e| e.to_string())?;
            hits[slot] += s.contains(0.5) as usize;
        }
    }
    let elapsed = start.elapsed();
    let need = (0.95 * REPS as f64).ceil() as usize;
    check(hits[0] >= need, format!("rand_pred CI contains 0.5 in {}/{REPS}", hits[0]))?;
    check(hits[1] >= need, format!("rand_vec CI contains 0.5 in {}/{REPS}", hits[1]))?;
    check(elapsed <= Duration::from_secs(300), format!("took {:.0} s > 300 s", elapsed.as_secs_f64()))?;
    Ok(format!(
        "CI contains 0.5: rand_pred {}/{REPS}, rand_vec {}/{REPS}; {:.0} s",
        hits[0],
        hits[1],
        elapsed.as_secs_f64()
    ))
}

/// `Ok(None)` means the data is not available.
fn glove_reproduction() -> Result<Option<String>, String> {
    let (Some(dir), Some(glove)) = (
        std::env::var_os("NOISEPROBE_SENTEVAL_DIR"),
        std::env::var_os("NOISEPROBE_GLOVE"),
    ) else {
        return Ok(None);
    };
    let task = corpus::parse_probing_file(Path::new(&dir).join("sentence_length.txt")).map_err(|e| e.to_string())?;
    let vocab = embed::dataset_vocabulary(&task);
    let table = embed::load_word_table_filtered(&glove, Some(&vocab)).map_err(|e| e.to_string())?;
    let seed = 2021;
    let (set, _) = embed::pool_dataset(&table, &task, commands::pool_seed(seed, "sentence_length"), "glove mean")
        .map_err(|e| e.to_string())?;
    let ranges: Ranges = norm_stats(&set).map_err(|e| e.to_string())?.into();
    let conditions = experiment::default_conditions()
        .iter()
        .map(|c| Condition::parse(c, &ranges))
        .collect::<noiseprobe::Result<Vec<_>>>()
        .map_err(|e| e.to_string())?;
    let options = PlanOptions {
        n_runs: 20,
        master_seed: seed,
        train_limit: Some(10_000),
        ..PlanOptions::default()
    };
    let plan = ExperimentPlan::new(&task, &set, conditions, options).map_err(|e| e.to_string())?;
    let out = run_plan(&plan).map_err(|e| e.to_string())?;
    let mean = |id: &str| out.summaries.iter().find(|s| s.condition_id == id).unwrap().mean_auc;
    let (v, n, d, b) = (mean("vanilla"), mean("ablate_norm"), mean("ablate_dims"), mean("ablate_both"));
    check(v > n && n > d && d > b, format!("ordering broken: {v:.4} {n:.4} {d:.4} {b:.4}"))?;
    let (dv, above, _) = verdict(&out, "ablate_dims")?;
    check(
        matches!(dv, Verdict::DistinctFromBoth) && above,
        format!("ablate_dims verdict {dv:?}, above random {above}"),
    )?;

    let test = task.partition_indices(Partition::Test);
    let reports = experiment::correlation_suite(&task, &set, &test, &ranges, seed).map_err(|e| e.to_string())?;
    let r = reports.iter().find(|r| r.transform == "vanilla").unwrap().pearson_l1;
    check(r <= -0.60 && (r + 0.7278).abs() <= 0.13, format!("Pearson(L1, labels) = {r:.4}"))?;
    Ok(Some(format!(
        "vanilla {v:.4} > ablate_norm {n:.4} > ablate_dims {d:.4} > ablate_both {b:.4}; Pearson(L1) {r:.4}"
    )))
}

fn bin(args: &[&str], dir: &Path) -> Result<(), String> {
    let out = Command::new(env!("CARGO_BIN_EXE_noiseprobe"))
        .args(args)
        .current_dir(dir)
        .env_remove("NOISEPROBE_OUTPUT_DIR")
        .output()
        .map_err(|e| e.to_string())?;
    check(
        out.status.success(),
        format!("noiseprobe {args:?} failed: {}", String::from_utf8_lossy(&out.stderr)),
    )
}

fn snapshot(dir: &Path) -> Result<Vec<(PathBuf, Vec<u8>)>, String> {
    let mut files = Vec::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for entry in fs::read_dir(&d).map_err(|e| e.to_string())? {
            let path = entry.map_err(|e| e.to_string())?.path();
            if path.is_dir() {
                stack.push(path);
            } else if !path.to_string_lossy().ends_with("__timing.jsonl") {
                let bytes = fs::read(&path).map_err(|e| e.to_string())?;
                files.push((path.strip_prefix(dir).unwrap().to_path_buf(), bytes));
            }
        }
    }
    files.sort();
    Ok(files)
}

fn run_all_commands(dir: &Path) -> Result<Vec<(PathBuf, Vec<u8>)>, String> {
    fs::write(
        dir.join("spec.toml"),
        "task_name = \"planted\"\nn_train = 600\nn_test = 300\ndim = 12\nplacement = \"both\"\nseed = 3\n",
    )
    .map_err(|e| e.to_string())?;
    bin(&["synth", "--config", "spec.toml"], dir)?;
    let cfg = fs::read_to_string(dir.join("planted.toml")).map_err(|e| e.to_string())?;
    let cfg = cfg.replacen("seed = 3\n", "seed = 3\nn_runs = 3\nworkers = 2\n\n[probe]\nmax_epochs = 40\n", 1);
    fs::write(dir.join("planted.toml"), cfg).map_err(|e| e.to_string())?;
    bin(&["probe", "--config", "planted.toml"], dir)?;

    let mut table = String::new();
    let mut tr = rng::seeded(7);
    for word in ["the", "a", "cat", "dog", "sat", "ran", "on", "mat", "fast", "slowly"] {
        let row: Vec<String> = (0..6).map(|_| format!("{:.4}", tr.gen_range(-1.0..1.0))).collect();
        table.push_str(&format!("{word} {}\n", row.join(" ")));
    }
    fs::write(dir.join("words.txt"), table).map_err(|e| e.to_string())?;
    let mut tsv = String::new();
    for i in 0..60 {
        let part = if i < 40 { "tr" } else { "te" };
        let (label, sentence) = if i % 2 == 0 {
            ("short", format!("the cat sat v{i}"))
        } else {
            ("long", format!("a dog ran on the mat fast slowly w{i}"))
        };
        tsv.push_str(&format!("{part}\t{label}\t{sentence}\n"));
    }
    fs::write(dir.join("toy.txt"), tsv).map_err(|e| e.to_string())?;
    fs::write(
        dir.join("pool.toml"),
        "encoder = \"toy\"\noutput_dir = \"pooled\"\nword_table = \"words.txt\"\nseed = 4\nn_runs = 3\n\n[probe]\nmax_epochs = 20\n\n[[tasks]]\ndataset = \"toy.txt\"\n",
    )
    .map_err(|e| e.to_string())?;
    bin(&["pool", "--config", "pool.toml"], dir)?;
    bin(&["probe", "--config", "pool.toml", "--format", "json"], dir)?;
    snapshot(dir)
}

fn determinism() -> Outcome {
    let a = tempfile::tempdir().map_err(|e| e.to_string())?;
    let b = tempfile::tempdir().map_err(|e| e.to_string())?;
    let first = run_all_commands(a.path())?;
    let second = run_all_commands(b.path())?;
    check(first.len() == second.len(), "different file sets")?;
    for ((pa, ba), (pb, bb)) in first.iter().zip(&second) {
        check(pa == pb, format!("file sets differ at {}", pa.display()))?;
        check(ba == bb, format!("{} differs between runs", pa.display()))?;
    }
    check(
        first.iter().any(|(p, _)| p.to_string_lossy().ends_with("planted__synth__ledger.jsonl")),
        "synthetic ledger missing",
    )?;
    check(
        first.iter().any(|(p, _)| p.to_string_lossy().ends_with("toy__toy__ledger.jsonl")),
        "pooled ledger missing",
    )?;
    Ok(format!("synth, probe and pool outputs byte-identical across reruns ({} files)", first.len()))
}

fn main() {
    let mut failed = 0;
    let mut report = |name: &str, outcome: Result<Option<String>, String>| match outcome {
        Ok(Some(detail)) => println!("PASS {name}: {detail}"),
        Ok(None) => println!("SKIP {name}: set NOISEPROBE_SENTEVAL_DIR and NOISEPROBE_GLOVE to run"),
        Err(why) => {
            failed += 1;
            println!("FAIL {name}: {why}");
        }
    };
    report("ablation invariants", ablation_invariants().map(Some));
    report("statistic oracles", statistic_oracles().map(Some));
    report("baseline sanity", baseline_sanity().map(Some));
    report("determinism", determinism().map(Some));
    report("synthetic end-to-end", synthetic_end_to_end().map(Some));
    report("scaled GloVe reproduction", glove_reproduction());
    if failed > 0 {
        println!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
}
