//! Synthetic embedding sets with a known location of the label signal.
//!
//! Label information is planted in the direction (`dims_only`), in the L2
//! norm (`norm_only`), in both, or nowhere. Labels cycle `0, 1, .., k-1`
//! over the rows so the first-appearance label encoding survives a round
//! trip through the dataset file.

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::{Partition, ProbingDataset};
use crate::embed::{EmbeddingVector, SentenceEmbeddingSet};
use crate::error::{Error, Result};
use crate::rng::{self, SeededRng};

const PROTOTYPE_ATTEMPTS: usize = 10_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Placement {
    DimsOnly,
    NormOnly,
    Both,
    None,
}

impl Placement {
    pub fn as_str(self) -> &'static str {
        match self {
            Placement::DimsOnly => "dims_only",
            Placement::NormOnly => "norm_only",
            Placement::Both => "both",
            Placement::None => "none",
        }
    }

    fn in_dims(self) -> bool {
        matches!(self, Placement::DimsOnly | Placement::Both)
    }

    fn in_norm(self) -> bool {
        matches!(self, Placement::NormOnly | Placement::Both)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SynthSpec {
    #[serde(default = "default_task")]
    pub task_name: String,
    pub n_train: usize,
    pub n_test: usize,
    pub dim: usize,
    #[serde(default = "default_classes")]
    pub n_classes: usize,
    pub placement: Placement,
    #[serde(default = "default_strength")]
    pub signal_strength: f64,
    #[serde(default = "default_sigma")]
    pub noise_sigma: f64,
    #[serde(default)]
    pub seed: u64,
    /// L2 norms are drawn from this range; class bands partition it.
    #[serde(default = "default_norm_range")]
    pub norm_range: (f64, f64),
    /// Minimum pairwise angle between class prototypes, in degrees.
    #[serde(default = "default_min_angle")]
    pub min_angle_deg: f64,
    /// Length of a shared mean offset added to every raw vector, relative to
    /// the expected noise norm. Zero gives isotropic directions.
    #[serde(default = "default_anisotropy")]
    pub anisotropy: f64,
}

fn default_task() -> String {
    "synthetic".into()
}
fn default_classes() -> usize {
    2
}
fn default_strength() -> f64 {
    1.0
}
fn default_sigma() -> f64 {
    0.5
}
fn default_norm_range() -> (f64, f64) {
    (1.0, 3.0)
}
fn default_min_angle() -> f64 {
    45.0
}
fn default_anisotropy() -> f64 {
    2.0
}

impl SynthSpec {
    pub fn new(placement: Placement, n_train: usize, n_test: usize, dim: usize) -> Self {
        SynthSpec {
            task_name: default_task(),
            n_train,
            n_test,
            dim,
            n_classes: default_classes(),
            placement,
            signal_strength: default_strength(),
            noise_sigma: default_sigma(),
            seed: 0,
            norm_range: default_norm_range(),
            min_angle_deg: default_min_angle(),
            anisotropy: default_anisotropy(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |field: &str, why: String| Err(Error::Config(format!("synth.{field}: {why}")));
        if self.task_name.is_empty() || self.task_name.contains(['/', '\\', '\n']) {
            return bad("task_name", format!("{:?} is not a usable file stem", self.task_name));
        }
        if self.n_classes < 2 {
            return bad("n_classes", format!("must be at least 2, got {}", self.n_classes));
        }
        if self.n_train < self.n_classes {
            return bad("n_train", format!("must be at least n_classes ({})", self.n_classes));
        }
        if self.n_test < self.n_classes {
            return bad("n_test", format!("must be at least n_classes ({})", self.n_classes));
        }
        if self.dim == 0 {
            return bad("dim", "must be positive".into());
        }
        if !(0.0..=1.0).contains(&self.signal_strength) {
            return bad("signal_strength", format!("{} is outside [0, 1]", self.signal_strength));
        }
        if !(self.noise_sigma.is_finite() && self.noise_sigma > 0.0) {
            return bad("noise_sigma", format!("{} is not a positive real", self.noise_sigma));
        }
        let (lo, hi) = self.norm_range;
        if !(lo.is_finite() && hi.is_finite() && lo > 0.0 && lo < hi) {
            return bad("norm_range", format!("[{lo}, {hi}] needs 0 < min < max"));
        }
        if !(self.anisotropy.is_finite() && self.anisotropy >= 0.0) {
            return bad("anisotropy", format!("{} is not a non-negative real", self.anisotropy));
        }
        if !(0.0..90.0).contains(&self.min_angle_deg) {
            return bad("min_angle_deg", format!("{} is outside [0, 90)", self.min_angle_deg));
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.n_train + self.n_test
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Norm band of class `c`: the full range at strength 0, disjoint
    /// equal-width slices at strength 1.
    pub fn norm_band(&self, c: usize) -> (f64, f64) {
        let (lo, hi) = self.norm_range;
        if !self.placement.in_norm() {
            return (lo, hi);
        }
        let k = self.n_classes as f64;
        let w = (hi - lo) / k;
        let s = self.signal_strength;
        (lo + s * c as f64 * w, hi - s * (k - 1.0 - c as f64) * w)
    }

    fn provenance(&self) -> String {
        format!(
            "synth placement={} strength={} sigma={} anisotropy={} seed={}",
            self.placement.as_str(),
            self.signal_strength,
            self.noise_sigma,
            self.anisotropy,
            self.seed
        )
    }
}

/// A generated task: rows `0..n_train` are train, the rest test.
#[derive(Debug, Clone)]
pub struct SynthData {
    pub dataset: ProbingDataset,
    pub embeddings: SentenceEmbeddingSet,
    pub prototypes: Vec<Vec<f64>>,
}

impl SynthData {
    pub fn labels(&self) -> Vec<usize> {
        self.dataset.labels()
    }

    pub fn train(&self) -> SentenceEmbeddingSet {
        self.embeddings
            .subset(&self.dataset.partition_indices(Partition::Train))
    }

    pub fn test(&self) -> SentenceEmbeddingSet {
        self.embeddings
            .subset(&self.dataset.partition_indices(Partition::Test))
    }
}

fn gaussian(rng: &mut SeededRng, dim: usize) -> Vec<f64> {
    (0..dim).map(|_| rng.sample::<f64, _>(StandardNormal)).collect()
}

fn unit(mut v: Vec<f64>) -> Vec<f64> {
    let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    v.iter_mut().for_each(|x| *x /= n);
    v
}

/// Unit vector shared by every class.
fn common_direction(spec: &SynthSpec) -> Vec<f64> {
    let mut r = rng::seeded(rng::derive_seed(spec.seed, "synth-offset", 0));
    unit(gaussian(&mut r, spec.dim))
}

/// Unit-sphere prototypes with every pairwise angle at least `min_angle_deg`.
fn prototypes(spec: &SynthSpec) -> Result<Vec<Vec<f64>>> {
    let mut r = rng::seeded(rng::derive_seed(spec.seed, "synth-prototypes", 0));
    let max_cos = spec.min_angle_deg.to_radians().cos();
    for _ in 0..PROTOTYPE_ATTEMPTS {
        let protos: Vec<Vec<f64>> = (0..spec.n_classes)
            .map(|_| unit(gaussian(&mut r, spec.dim)))
            .collect();
        let separated = (0..protos.len()).all(|i| {
            (0..i).all(|j| {
                let c: f64 = protos[i].iter().zip(&protos[j]).map(|(a, b)| a * b).sum();
                c <= max_cos
            })
        });
        if separated {
            return Ok(protos);
        }
    }
    Err(Error::Config(format!(
        "synth.min_angle_deg: could not place {} prototypes {}° apart in {} dimensions",
        spec.n_classes, spec.min_angle_deg, spec.dim
    )))
}

pub fn generate(spec: &SynthSpec) -> Result<SynthData> {
    spec.validate()?;
    let protos = prototypes(spec)?;
    let offset: Vec<f64> = common_direction(spec)
        .into_iter()
        .map(|m| m * spec.anisotropy * (spec.dim as f64).sqrt())
        .collect();
    let k = spec.n_classes;
    let row_seed = rng::derive_seed(spec.seed, "synth-rows", 0);
    let vectors: Vec<EmbeddingVector> = (0..spec.len())
        .into_par_iter()
        .map(|i| {
            let mut r = rng::element_rng(row_seed, i);
            let c = i % k;
            let mut v = gaussian(&mut r, spec.dim);
            for (x, o) in v.iter_mut().zip(&offset) {
                *x = spec.noise_sigma * (*x + o);
            }
            if spec.placement.in_dims() {
                for (x, p) in v.iter_mut().zip(&protos[c]) {
                    *x += spec.signal_strength * p;
                }
            }
            let (lo, hi) = spec.norm_band(c);
            let t = rng::uniform(&mut r, lo, hi);
            let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            EmbeddingVector::new(v.into_iter().map(|x| x * t / n).collect())
        })
        .collect();
    let rows = (0..spec.len()).map(|i| {
        let partition = if i < spec.n_train {
            Partition::Train
        } else {
            Partition::Test
        };
        (partition, format!("c{}", i % k), format!("synthetic example {i}"))
    });
    let dataset = ProbingDataset::from_rows(spec.task_name.clone(), rows)?;
    let embeddings = SentenceEmbeddingSet::new(spec.dim, vectors, spec.provenance())?;
    Ok(SynthData {
        dataset,
        embeddings,
        prototypes: protos,
    })
}
