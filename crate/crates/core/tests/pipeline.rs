use noiseprobe::ablate::{self, AblationKind, AblationSpec, NormOrder};
use noiseprobe::embed::{norm_stats, SentenceEmbeddingSet};
use noiseprobe::experiment::{
    self, classify, run_condition, run_plan, Condition, ExperimentPlan, PlanOptions, Ranges, Verdict,
};
use noiseprobe::probe::ProbeConfig;
use noiseprobe::report::{self, Caption, Format, TaskResults};
use noiseprobe::stats::{self, pearson, CiMethod};
use noiseprobe::synth::{generate, Placement, SynthData, SynthSpec};

fn quick_probe() -> ProbeConfig {
    ProbeConfig {
        hidden_size: 16,
        max_epochs: 30,
        ..ProbeConfig::default()
    }
}

fn small(placement: Placement, seed: u64) -> SynthData {
    generate(&SynthSpec {
        seed,
        ..SynthSpec::new(placement, 300, 150, 8)
    })
    .unwrap()
}

fn conditions(d: &SynthData) -> (Ranges, Vec<Condition>) {
    let ranges: Ranges = norm_stats(&d.embeddings).unwrap().into();
    let conds = experiment::default_conditions()
        .iter()
        .map(|c| Condition::parse(c, &ranges).unwrap())
        .collect();
    (ranges, conds)
}

fn options(n_runs: usize) -> PlanOptions {
    PlanOptions {
        n_runs,
        master_seed: 11,
        probe: quick_probe(),
        ..PlanOptions::default()
    }
}

/// AUC of scoring each test row by its own L2 norm.
fn stump_auc(set: &SentenceEmbeddingSet, labels: &[usize]) -> f64 {
    let norms = set.norms(NormOrder::L2);
    let positive: Vec<bool> = labels.iter().map(|&l| l == 1).collect();
    stats::binary_auc(&norms, &positive).unwrap()
}

fn test_labels(d: &SynthData) -> Vec<usize> {
    let n_train = d.train().len();
    d.labels()[n_train..].to_vec()
}

#[test]
fn rerunning_a_plan_is_bit_exact() {
    let d = small(Placement::Both, 1);
    let (_, conds) = conditions(&d);
    let plan = ExperimentPlan::new(&d.dataset, &d.embeddings, conds, options(2)).unwrap();
    let a = run_plan(&plan).unwrap();
    let b = run_plan(&plan).unwrap();
    assert_eq!(a.ledger, b.ledger);
    for (x, y) in a.ledger.iter().zip(&b.ledger) {
        assert_eq!(x.auc.to_bits(), y.auc.to_bits());
    }
}

#[test]
fn execution_order_does_not_matter() {
    let d = small(Placement::DimsOnly, 2);
    let (_, conds) = conditions(&d);
    let plan = ExperimentPlan::new(&d.dataset, &d.embeddings, conds.clone(), options(2)).unwrap();
    let outcome = run_plan(&plan).unwrap();
    let mut reversed = Vec::new();
    for c in conds.iter().rev() {
        for r in (0..2).rev() {
            reversed.push(run_condition(&plan, c, r).unwrap());
        }
    }
    for rec in &outcome.ledger {
        let hit = reversed
            .iter()
            .find(|r| r.condition_id == rec.condition && r.run_index == rec.run_index)
            .unwrap();
        assert_eq!(hit.auc.to_bits(), rec.auc.to_bits());
        assert_eq!(hit.seed, rec.seed);
    }
    // a single-thread pool gives the same answer as the global pool
    let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
    let serial = pool.install(|| run_plan(&plan)).unwrap();
    assert_eq!(serial.ledger, outcome.ledger);
}

#[test]
fn runs_differ_unless_both_sources_are_frozen() {
    let d = small(Placement::NormOnly, 3);
    let (_, conds) = conditions(&d);
    let vanilla = conds.iter().find(|c| c.id() == "ablate_dims").unwrap();
    let aucs = |freeze_noise, freeze_probe| {
        let opts = PlanOptions {
            freeze_noise,
            freeze_probe,
            ..options(3)
        };
        let plan = ExperimentPlan::new(&d.dataset, &d.embeddings, conds.clone(), opts).unwrap();
        (0..3)
            .map(|r| run_condition(&plan, vanilla, r).unwrap().auc)
            .collect::<Vec<_>>()
    };
    let free = aucs(false, false);
    assert!(free[0] != free[1] || free[1] != free[2]);
    let frozen = aucs(true, true);
    assert!(frozen.iter().all(|&a| a == frozen[0]));
    let noise_only = aucs(true, false);
    assert!(noise_only[0] != noise_only[1] || noise_only[1] != noise_only[2]);
}

#[test]
fn vanilla_is_deterministic_per_run_index() {
    let d = small(Placement::DimsOnly, 4);
    let (_, conds) = conditions(&d);
    let plan = ExperimentPlan::new(&d.dataset, &d.embeddings, conds.clone(), options(2)).unwrap();
    let v = conds.iter().find(|c| c.id() == "vanilla").unwrap();
    assert_eq!(run_condition(&plan, v, 1).unwrap(), run_condition(&plan, v, 1).unwrap());
    assert!(run_condition(&plan, v, 2).is_err());
}

#[test]
fn plan_validation() {
    let d = small(Placement::None, 5);
    let (ranges, _) = conditions(&d);
    let no_vanilla = vec![
        Condition::parse("rand_pred", &ranges).unwrap(),
        Condition::parse("rand_vec", &ranges).unwrap(),
    ];
    assert!(ExperimentPlan::new(&d.dataset, &d.embeddings, no_vanilla, options(2)).is_err());
    let (_, conds) = conditions(&d);
    assert!(ExperimentPlan::new(&d.dataset, &d.embeddings, conds.clone(), options(1)).is_err());
    let short = d.embeddings.subset(&[0, 1, 2]);
    assert!(ExperimentPlan::new(&d.dataset, &short, conds, options(2)).is_err());
}

#[test]
fn train_limit_subsamples_deterministically() {
    let d = small(Placement::DimsOnly, 6);
    let (_, conds) = conditions(&d);
    let opts = PlanOptions {
        train_limit: Some(100),
        ..options(2)
    };
    let a = ExperimentPlan::new(&d.dataset, &d.embeddings, conds.clone(), opts.clone()).unwrap();
    let b = ExperimentPlan::new(&d.dataset, &d.embeddings, conds, opts).unwrap();
    assert_eq!(a.train_indices().len(), 100);
    assert_eq!(a.train_indices(), b.train_indices());
    assert!(a.train_indices().windows(2).all(|w| w[0] < w[1]));
}

#[test]
fn no_signal_gives_random_verdicts_everywhere() {
    let d = small(Placement::None, 7);
    let (_, conds) = conditions(&d);
    let plan = ExperimentPlan::new(&d.dataset, &d.embeddings, conds, options(5)).unwrap();
    let out = run_plan(&plan).unwrap();
    for s in &out.summaries {
        assert!(s.contains(0.5) || (s.mean_auc - 0.5).abs() < 0.05, "{} {}", s.condition_id, s.mean_auc);
    }
    for c in &out.classifications {
        if c.condition_id != "vanilla" {
            assert!(
                matches!(c.verdict, Verdict::SameAsRandom | Verdict::SameAsBoth),
                "{} {:?}",
                c.condition_id,
                c.verdict
            );
        }
    }
}

#[test]
fn random_vector_matches_ablate_both() {
    let d = small(Placement::Both, 8);
    let (_, conds) = conditions(&d);
    let plan = ExperimentPlan::new(&d.dataset, &d.embeddings, conds, options(6)).unwrap();
    let out = run_plan(&plan).unwrap();
    let get = |id: &str| out.summaries.iter().find(|s| s.condition_id == id).unwrap();
    assert!(stats::same_distribution(get("rand_vec"), get("ablate_both")));
}

#[test]
fn tables_render_from_the_ledger() {
    let d = small(Placement::NormOnly, 9);
    let (_, conds) = conditions(&d);
    let plan = ExperimentPlan::new(&d.dataset, &d.embeddings, conds, options(3)).unwrap();
    let out = run_plan(&plan).unwrap();
    let text = report::ledger_to_jsonl(&out.ledger).unwrap();
    let from_ledger = TaskResults::from_ledger("synthetic", &report::ledger_from_jsonl(&text).unwrap(), &CiMethod::T).unwrap();
    assert_eq!(from_ledger.summaries, out.summaries);
    assert_eq!(from_ledger.classifications, out.classifications);
    let caption = Caption::new(3, &CiMethod::T, 11, "synth", &d.embeddings.provenance);
    let md = report::render_results(&[from_ledger.clone()], &caption, Format::Md).unwrap();
    let md2 = report::render_results(&[from_ledger], &caption, Format::Md).unwrap();
    assert_eq!(md, md2);
    assert!(classify(&out.summaries).is_ok());
}

#[test]
fn norm_only_stump_is_perfect_until_the_norm_is_ablated() {
    let d = generate(&SynthSpec::new(Placement::NormOnly, 1000, 2000, 20)).unwrap();
    let test = d.test();
    let labels = test_labels(&d);
    assert_eq!(stump_auc(&test, &labels), 1.0);
    let ranges: Ranges = norm_stats(&d.embeddings).unwrap().into();
    let spec = AblationSpec::new(AblationKind::AblateNorm, NormOrder::L2, ranges.norm_l2, ranges.dim).unwrap();
    let ablated = ablate::apply_condition(&test, &spec, 1).unwrap();
    assert!((stump_auc(&ablated, &labels) - 0.5).abs() < 0.05);
}

#[test]
fn dims_only_norm_is_uncorrelated_with_labels() {
    let d = generate(&SynthSpec::new(Placement::DimsOnly, 5000, 5000, 20)).unwrap();
    let y: Vec<f64> = d.labels().iter().map(|&l| l as f64).collect();
    let r = pearson(&d.embeddings.norms(NormOrder::L2), &y).unwrap();
    assert!(r.abs() < 0.05, "{r}");
}

#[test]
fn correlation_suite_on_planted_norms() {
    let spec = SynthSpec {
        n_classes: 3,
        ..SynthSpec::new(Placement::NormOnly, 100, 6000, 10)
    };
    let d = generate(&spec).unwrap();
    let ranges: Ranges = norm_stats(&d.embeddings).unwrap().into();
    let test: Vec<usize> = (100..6100).collect();
    let reports = experiment::correlation_suite(&d.dataset, &d.embeddings, &test, &ranges, 5).unwrap();
    let get = |t: &str| reports.iter().find(|r| r.transform == t).unwrap();
    assert!(get("vanilla").pearson_l2 > 0.8);
    assert!(get("vanilla").kruskal_l2.unwrap().p < 1e-10);
    assert_eq!(get("normalize_l2").pearson_l2, 0.0);
    assert!(get("ablate_norm").pearson_l1.abs() < 0.05);
    assert!(get("ablate_norm").pearson_l2.abs() < 0.05);
    assert!(get("ablate_norm").kruskal_l2.unwrap().p > 1e-4);
}

#[test]
fn multiclass_plan_runs() {
    let spec = SynthSpec {
        n_classes: 4,
        ..SynthSpec::new(Placement::DimsOnly, 400, 200, 8)
    };
    let d = generate(&spec).unwrap();
    let (_, conds) = conditions(&d);
    let opts = PlanOptions {
        probe: ProbeConfig {
            max_epochs: 100,
            ..ProbeConfig::default()
        },
        ..options(2)
    };
    let plan = ExperimentPlan::new(&d.dataset, &d.embeddings, conds, opts).unwrap();
    let out = run_plan(&plan).unwrap();
    let vanilla = out.summaries.iter().find(|s| s.condition_id == "vanilla").unwrap();
    assert!(vanilla.mean_auc > 0.8, "{}", vanilla.mean_auc);
}
