//! Probing with noise: locate where linguistic information lives inside
//! sentence embeddings, in the dimension values or in the vector norm.
//!
//! The pipeline trains a small MLP probe on vanilla embeddings and on copies
//! whose dimensions, norm, or both have been replaced by noise, then compares
//! the repeated-run AUC scores against vanilla and random baselines using
//! overlapping 99% confidence intervals.
//!
//! Module map:
//! - [`corpus`]: 3-column probing task files.
//! - [`embed`]: word tables, mean pooling, the sentence-embedding interchange format.
//! - [`ablate`]: dimension/norm ablation, normalization, random vectors.
//! - [`probe`]: the MLP classifier trained with Adam.
//! - [`stats`]: AUC-ROC, confidence intervals, Pearson, Kruskal-Wallis.
//! - [`experiment`]: seeded repeated runs and verdict classification.
//! - [`synth`]: synthetic data with planted signal.
//! - [`report`]: markdown/csv/json tables.
//! - [`config`] and [`commands`]: the command-line layer.

pub mod ablate;
pub mod commands;
pub mod config;
pub mod corpus;
pub mod embed;
pub mod error;
pub mod experiment;
pub mod probe;
pub mod report;
pub mod rng;
pub mod stats;
pub mod synth;

pub use error::{Error, Result};
