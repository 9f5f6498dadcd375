//! Noise functions that destroy the information held in the dimension values,
//! in the norm, or in both, plus plain L1/L2 normalization.
//!
//! Dimension ablation replaces the components with uniform noise and rescales
//! it to the original norm. Norm ablation keeps the direction and rescales to
//! a uniformly drawn norm. Doing both yields a vector independent of the input.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::embed::{EmbeddingVector, SentenceEmbeddingSet};
use crate::error::{Error, Result};
use crate::rng::{self, SeededRng};

pub use crate::embed::NormOrder;

/// Attempts at drawing a non-zero random vector before giving up.
pub const MAX_RESAMPLES: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AblationKind {
    Vanilla,
    AblateDims,
    AblateNorm,
    AblateBoth,
    Normalize,
    RandomVector,
}

impl AblationKind {
    pub fn as_str(self) -> &'static str {
        match self {
            AblationKind::Vanilla => "vanilla",
            AblationKind::AblateDims => "ablate_dims",
            AblationKind::AblateNorm => "ablate_norm",
            AblationKind::AblateBoth => "ablate_both",
            AblationKind::Normalize => "normalize",
            AblationKind::RandomVector => "random_vector",
        }
    }
}

/// A vector transform plus the sampling ranges it draws from.
///
/// `norm_order` selects the preserved norm for dimension ablation, the target
/// norm for norm ablation, both-ablation and random vectors, and the
/// normalized norm for [`AblationKind::Normalize`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AblationSpec {
    pub kind: AblationKind,
    pub norm_order: NormOrder,
    pub norm_range: (f64, f64),
    pub dim_range: (f64, f64),
}

impl AblationSpec {
    pub fn new(
        kind: AblationKind,
        norm_order: NormOrder,
        norm_range: (f64, f64),
        dim_range: (f64, f64),
    ) -> Result<Self> {
        let spec = AblationSpec {
            kind,
            norm_order,
            norm_range,
            dim_range,
        };
        spec.validate()?;
        Ok(spec)
    }

    /// A spec for transforms that sample nothing (vanilla, normalize).
    pub fn deterministic(kind: AblationKind, norm_order: NormOrder) -> Self {
        AblationSpec {
            kind,
            norm_order,
            norm_range: (1.0, 1.0),
            dim_range: (-1.0, 1.0),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let (nlo, nhi) = self.norm_range;
        let (dlo, dhi) = self.dim_range;
        if ![nlo, nhi, dlo, dhi].iter().all(|v| v.is_finite()) {
            return Err(Error::Config("ablation ranges must be finite".into()));
        }
        if !(nlo > 0.0 && nlo <= nhi) {
            return Err(Error::Config(format!(
                "norm range [{nlo}, {nhi}] must satisfy 0 < min <= max"
            )));
        }
        if dlo > dhi {
            return Err(Error::Config(format!(
                "dimension range [{dlo}, {dhi}] must satisfy min <= max"
            )));
        }
        Ok(())
    }

    fn expect(&self, kind: AblationKind) -> Result<()> {
        if self.kind == kind {
            Ok(())
        } else {
            Err(Error::Config(format!(
                "{} called with a {} spec",
                kind.as_str(),
                self.kind.as_str()
            )))
        }
    }
}

fn nonzero(v: &EmbeddingVector, order: NormOrder, what: &str) -> Result<f64> {
    let n = v.norm(order);
    if n > 0.0 && n.is_finite() {
        Ok(n)
    } else {
        Err(Error::Numeric(format!(
            "{what}: input has {} norm {n}, direction undefined",
            order.as_str()
        )))
    }
}

fn scaled(values: &[f64], factor: f64) -> EmbeddingVector {
    EmbeddingVector::new(values.iter().map(|x| x * factor).collect())
}

/// Uniform components from `spec.dim_range`, redrawn while the chosen norm is zero.
fn random_components(dim: usize, spec: &AblationSpec, rng: &mut SeededRng) -> Result<EmbeddingVector> {
    let (lo, hi) = spec.dim_range;
    for _ in 0..MAX_RESAMPLES {
        let v = EmbeddingVector::new((0..dim).map(|_| rng::uniform(rng, lo, hi)).collect());
        if v.norm(spec.norm_order) > 0.0 {
            return Ok(v);
        }
    }
    Err(Error::Numeric(format!(
        "random vector had zero norm after {MAX_RESAMPLES} draws from [{lo}, {hi}]"
    )))
}

/// Replace the dimension values by noise, keeping the chosen norm of `v`.
pub fn ablate_dimensions(
    v: &EmbeddingVector,
    spec: &AblationSpec,
    rng: &mut SeededRng,
) -> Result<EmbeddingVector> {
    spec.expect(AblationKind::AblateDims)?;
    let target = nonzero(v, spec.norm_order, "ablate_dims")?;
    let r = random_components(v.dim(), spec, rng)?;
    Ok(scaled(r.values(), target / r.norm(spec.norm_order)))
}

/// Keep the direction of `v`, rescale to a norm drawn from `spec.norm_range`.
pub fn ablate_norm(
    v: &EmbeddingVector,
    spec: &AblationSpec,
    rng: &mut SeededRng,
) -> Result<EmbeddingVector> {
    spec.expect(AblationKind::AblateNorm)?;
    let current = nonzero(v, spec.norm_order, "ablate_norm")?;
    let t = rng::uniform(rng, spec.norm_range.0, spec.norm_range.1);
    Ok(scaled(v.values(), t / current))
}

fn sample_random(dim: usize, spec: &AblationSpec, rng: &mut SeededRng) -> Result<EmbeddingVector> {
    let r = random_components(dim, spec, rng)?;
    let t = rng::uniform(rng, spec.norm_range.0, spec.norm_range.1);
    Ok(scaled(r.values(), t / r.norm(spec.norm_order)))
}

/// Dimension ablation followed by norm ablation; only the dimensionality of
/// `v` survives.
pub fn ablate_both(
    v: &EmbeddingVector,
    spec: &AblationSpec,
    rng: &mut SeededRng,
) -> Result<EmbeddingVector> {
    spec.expect(AblationKind::AblateBoth)?;
    sample_random(v.dim(), spec, rng)
}

/// The same draw as [`ablate_both`], without an input vector.
pub fn random_vector(dim: usize, spec: &AblationSpec, rng: &mut SeededRng) -> Result<EmbeddingVector> {
    spec.expect(AblationKind::RandomVector)?;
    sample_random(dim, spec, rng)
}

pub fn normalize(v: &EmbeddingVector, spec: &AblationSpec) -> Result<EmbeddingVector> {
    spec.expect(AblationKind::Normalize)?;
    let n = nonzero(v, spec.norm_order, "normalize")?;
    Ok(scaled(v.values(), 1.0 / n))
}

/// Apply any transform to one vector.
pub fn apply(v: &EmbeddingVector, spec: &AblationSpec, rng: &mut SeededRng) -> Result<EmbeddingVector> {
    match spec.kind {
        AblationKind::Vanilla => Ok(v.clone()),
        AblationKind::AblateDims => ablate_dimensions(v, spec, rng),
        AblationKind::AblateNorm => ablate_norm(v, spec, rng),
        AblationKind::AblateBoth => ablate_both(v, spec, rng),
        AblationKind::Normalize => normalize(v, spec),
        AblationKind::RandomVector => random_vector(v.dim(), spec, rng),
    }
}

/// Transform every vector of `set`; element `i` draws from the stream `(seed, i)`.
pub fn apply_condition(
    set: &SentenceEmbeddingSet,
    spec: &AblationSpec,
    seed: u64,
) -> Result<SentenceEmbeddingSet> {
    let all: Vec<usize> = (0..set.len()).collect();
    apply_condition_indexed(set, &all, spec, seed)
}

/// Transform the subset `indices` of `set`, in that order. Streams are keyed
/// by the original index, so a vector's noise does not depend on which other
/// vectors are selected.
pub fn apply_condition_indexed(
    set: &SentenceEmbeddingSet,
    indices: &[usize],
    spec: &AblationSpec,
    seed: u64,
) -> Result<SentenceEmbeddingSet> {
    spec.validate()?;
    if spec.kind == AblationKind::Vanilla {
        return Ok(set.subset(indices));
    }
    let vectors = indices
        .par_iter()
        .map(|&i| {
            let mut r = rng::element_rng(seed, i);
            apply(&set.vectors[i], spec, &mut r).map_err(|e| e.context(format!("vector {i}")))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SentenceEmbeddingSet {
        dim: set.dim,
        vectors,
        provenance: set.provenance.clone(),
    })
}
