//! Word-embedding tables, mean pooling into sentence vectors, and the
//! sentence-embedding interchange format.
//!
//! Interchange format: a header line `dim=<d> count=<n> provenance=<tag>`
//! followed by `n` lines of `d` space-separated decimal floats written with
//! shortest round-trip precision. Norms are never stored; they are recomputed
//! on load.

use std::collections::{HashMap, HashSet};
use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::ProbingDataset;
use crate::error::{Error, Result};
use crate::rng::{self, SeededRng};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NormOrder {
    L1,
    L2,
}

impl NormOrder {
    pub fn as_str(self) -> &'static str {
        match self {
            NormOrder::L1 => "l1",
            NormOrder::L2 => "l2",
        }
    }
}

/// A dense vector with cached L1 and L2 norms.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingVector {
    values: Vec<f64>,
    l1: f64,
    l2: f64,
}

impl EmbeddingVector {
    pub fn new(values: Vec<f64>) -> Self {
        let l1 = values.iter().map(|v| v.abs()).sum();
        let l2 = values.iter().map(|v| v * v).sum::<f64>().sqrt();
        EmbeddingVector { values, l1, l2 }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn dim(&self) -> usize {
        self.values.len()
    }

    pub fn l1(&self) -> f64 {
        self.l1
    }

    pub fn l2(&self) -> f64 {
        self.l2
    }

    pub fn norm(&self, order: NormOrder) -> f64 {
        match order {
            NormOrder::L1 => self.l1,
            NormOrder::L2 => self.l2,
        }
    }

    pub fn cosine(&self, other: &EmbeddingVector) -> f64 {
        let dot: f64 = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| a * b)
            .sum();
        dot / (self.l2 * other.l2)
    }
}

/// Static word vectors keyed by token.
#[derive(Debug, Clone)]
pub struct WordEmbeddingTable {
    dim: usize,
    entries: HashMap<String, Vec<f64>>,
    component_min: Vec<f64>,
    component_max: Vec<f64>,
    rows_read: usize,
}

impl WordEmbeddingTable {
    /// Build from `(token, vector)` pairs; all vectors must share one length.
    pub fn from_entries<I>(entries: I) -> Result<Self>
    where
        I: IntoIterator<Item = (String, Vec<f64>)>,
    {
        let mut builder: Option<TableBuilder> = None;
        for (i, (token, vector)) in entries.into_iter().enumerate() {
            let b = builder.get_or_insert_with(|| TableBuilder::new(vector.len()));
            b.add(token, vector, true)
                .map_err(|m| Error::Data(format!("entry {}: {m}", i + 1)))?;
        }
        builder
            .ok_or_else(|| Error::Data("empty word table".into()))?
            .finish()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Number of rows in the source, including rows dropped by a vocabulary filter.
    pub fn rows_read(&self) -> usize {
        self.rows_read
    }

    pub fn get(&self, token: &str) -> Option<&[f64]> {
        self.entries.get(token).map(Vec::as_slice)
    }

    /// Per-component `(min, max)` over every row of the source table.
    pub fn component_range(&self, i: usize) -> (f64, f64) {
        (self.component_min[i], self.component_max[i])
    }
}

struct TableBuilder {
    dim: usize,
    entries: HashMap<String, Vec<f64>>,
    component_min: Vec<f64>,
    component_max: Vec<f64>,
    seen: HashSet<String>,
    rows_read: usize,
}

impl TableBuilder {
    fn new(dim: usize) -> Self {
        TableBuilder {
            dim,
            entries: HashMap::new(),
            component_min: vec![f64::INFINITY; dim],
            component_max: vec![f64::NEG_INFINITY; dim],
            seen: HashSet::new(),
            rows_read: 0,
        }
    }

    fn add(&mut self, token: String, vector: Vec<f64>, keep: bool) -> std::result::Result<(), String> {
        if vector.len() != self.dim {
            return Err(format!(
                "expected {} components, found {}",
                self.dim,
                vector.len()
            ));
        }
        if let Some(bad) = vector.iter().find(|v| !v.is_finite()) {
            return Err(format!("non-finite component {bad}"));
        }
        if !self.seen.insert(token.clone()) {
            return Err(format!("duplicate token {token:?}"));
        }
        for (i, &v) in vector.iter().enumerate() {
            self.component_min[i] = self.component_min[i].min(v);
            self.component_max[i] = self.component_max[i].max(v);
        }
        self.rows_read += 1;
        if keep {
            self.entries.insert(token, vector);
        }
        Ok(())
    }

    fn finish(self) -> Result<WordEmbeddingTable> {
        if self.dim == 0 {
            return Err(Error::Data("word table has zero-dimensional vectors".into()));
        }
        Ok(WordEmbeddingTable {
            dim: self.dim,
            entries: self.entries,
            component_min: self.component_min,
            component_max: self.component_max,
            rows_read: self.rows_read,
        })
    }
}

/// Load a whitespace-separated word table (token followed by floats).
pub fn load_word_table(path: impl AsRef<Path>) -> Result<WordEmbeddingTable> {
    load_word_table_filtered(path, None)
}

/// Like [`load_word_table`] but only keeps tokens in `vocab`. Component
/// ranges are still computed over the whole file.
pub fn load_word_table_filtered(
    path: impl AsRef<Path>,
    vocab: Option<&HashSet<String>>,
) -> Result<WordEmbeddingTable> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    read_word_table(BufReader::new(file), path, vocab)
}

pub fn read_word_table<R: BufRead>(
    reader: R,
    origin: &Path,
    vocab: Option<&HashSet<String>>,
) -> Result<WordEmbeddingTable> {
    let mut builder: Option<TableBuilder> = None;
    for (i, line) in reader.lines().enumerate() {
        let lineno = i + 1;
        let line = line.map_err(|e| Error::parse(origin, lineno, e.to_string()))?;
        let line = line.trim_end_matches(['\r', ' ']);
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(' ').collect();
        if fields.len() < 2 {
            return Err(Error::parse(origin, lineno, "expected a token followed by floats"));
        }
        let dim = builder.as_ref().map_or(fields.len() - 1, |b| b.dim);
        if fields.len() < dim + 1 {
            return Err(Error::parse(
                origin,
                lineno,
                format!("expected {dim} components, found {}", fields.len() - 1),
            ));
        }
        // A few published tables contain tokens with embedded spaces; the
        // extra leading fields belong to the token unless they look numeric.
        let split = fields.len() - dim;
        if fields[1..split].iter().any(|f| f.parse::<f64>().is_ok()) {
            return Err(Error::parse(
                origin,
                lineno,
                format!("expected {dim} components, found {}", fields.len() - 1),
            ));
        }
        let token = fields[..split].join(" ");
        let vector = fields[split..]
            .iter()
            .map(|f| {
                f.parse::<f64>()
                    .map_err(|_| Error::parse(origin, lineno, format!("unparsable float {f:?}")))
            })
            .collect::<Result<Vec<f64>>>()?;
        let keep = vocab.is_none_or(|v| v.contains(&token));
        builder
            .get_or_insert_with(|| TableBuilder::new(dim))
            .add(token, vector, keep)
            .map_err(|m| Error::parse(origin, lineno, m))?;
    }
    builder
        .ok_or_else(|| Error::parse(origin, 0, "empty word table"))?
        .finish()
}

/// Lowercase, then split on whitespace.
pub fn tokenize(sentence: &str) -> Vec<String> {
    sentence
        .to_lowercase()
        .split_whitespace()
        .map(str::to_string)
        .collect()
}

/// Distinct tokens of every sentence in `ds`, as [`tokenize`] produces them.
pub fn dataset_vocabulary(ds: &ProbingDataset) -> HashSet<String> {
    ds.examples
        .iter()
        .flat_map(|e| tokenize(&e.sentence))
        .collect()
}

/// Mean of the word vectors of `sentence`. Each out-of-vocabulary token
/// occurrence is replaced by a fresh vector drawn uniformly from the table's
/// per-component ranges.
pub fn pool_sentence(
    table: &WordEmbeddingTable,
    sentence: &str,
    rng: &mut SeededRng,
) -> Result<EmbeddingVector> {
    pool_tokens(table, &tokenize(sentence), rng).map(|(v, _)| v)
}

fn pool_tokens(
    table: &WordEmbeddingTable,
    tokens: &[String],
    rng: &mut SeededRng,
) -> Result<(EmbeddingVector, usize)> {
    if tokens.is_empty() {
        return Err(Error::Data("cannot pool an empty sentence".into()));
    }
    let mut sum = vec![0.0; table.dim];
    let mut oov = 0;
    let mut scratch = vec![0.0; table.dim];
    for token in tokens {
        let v: &[f64] = match table.get(token) {
            Some(v) => v,
            None => {
                oov += 1;
                for (i, s) in scratch.iter_mut().enumerate() {
                    let (lo, hi) = table.component_range(i);
                    *s = rng::uniform(rng, lo, hi);
                }
                &scratch
            }
        };
        for (s, x) in sum.iter_mut().zip(v) {
            *s += x;
        }
    }
    let n = tokens.len() as f64;
    for s in &mut sum {
        *s /= n;
    }
    Ok((EmbeddingVector::new(sum), oov))
}

/// Pool every example of `ds`. Sentence `i` uses its own rng stream derived
/// from `(seed, i)`. Returns the set and the total OOV occurrence count.
pub fn pool_dataset(
    table: &WordEmbeddingTable,
    ds: &ProbingDataset,
    seed: u64,
    provenance: &str,
) -> Result<(SentenceEmbeddingSet, usize)> {
    let pooled: Vec<(EmbeddingVector, usize)> = ds
        .examples
        .par_iter()
        .enumerate()
        .map(|(i, e)| {
            let mut r = rng::element_rng(seed, i);
            pool_tokens(table, &tokenize(&e.sentence), &mut r)
                .map_err(|err| err.context(format!("example {i}")))
        })
        .collect::<Result<_>>()?;
    let oov = pooled.iter().map(|(_, n)| n).sum();
    let vectors = pooled.into_iter().map(|(v, _)| v).collect();
    Ok((SentenceEmbeddingSet::new(table.dim, vectors, provenance)?, oov))
}

/// Sentence vectors aligned by index with a dataset's examples.
#[derive(Debug, Clone, PartialEq)]
pub struct SentenceEmbeddingSet {
    pub dim: usize,
    pub vectors: Vec<EmbeddingVector>,
    pub provenance: String,
}

impl SentenceEmbeddingSet {
    pub fn new(dim: usize, vectors: Vec<EmbeddingVector>, provenance: impl Into<String>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::Data("embedding dimension must be positive".into()));
        }
        if let Some((i, v)) = vectors.iter().enumerate().find(|(_, v)| v.dim() != dim) {
            return Err(Error::Data(format!(
                "vector {i} has dimension {}, expected {dim}",
                v.dim()
            )));
        }
        let provenance = provenance.into();
        if provenance.contains('\n') {
            return Err(Error::Data("provenance tag may not contain newlines".into()));
        }
        Ok(SentenceEmbeddingSet {
            dim,
            vectors,
            provenance,
        })
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    pub fn subset(&self, indices: &[usize]) -> SentenceEmbeddingSet {
        SentenceEmbeddingSet {
            dim: self.dim,
            vectors: indices.iter().map(|&i| self.vectors[i].clone()).collect(),
            provenance: self.provenance.clone(),
        }
    }

    pub fn norms(&self, order: NormOrder) -> Vec<f64> {
        self.vectors.iter().map(|v| v.norm(order)).collect()
    }

    pub fn write_to<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(
            w,
            "dim={} count={} provenance={}",
            self.dim,
            self.vectors.len(),
            self.provenance
        )?;
        let mut line = String::new();
        for v in &self.vectors {
            line.clear();
            for (i, x) in v.values().iter().enumerate() {
                if i > 0 {
                    line.push(' ');
                }
                line.push_str(&x.to_string());
            }
            line.push('\n');
            w.write_all(line.as_bytes())?;
        }
        w.flush()
    }

    pub fn to_interchange_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_to(&mut buf).expect("writing to a Vec cannot fail");
        String::from_utf8(buf).expect("interchange output is ASCII plus provenance")
    }
}

fn parse_header(line: &str, origin: &Path) -> Result<(usize, usize, String)> {
    let bad = |m: &str| Error::parse(origin, 1, format!("malformed header: {m}"));
    let rest = line.strip_prefix("dim=").ok_or_else(|| bad("missing dim="))?;
    let (dim, rest) = rest.split_once(' ').ok_or_else(|| bad("missing count="))?;
    let rest = rest.strip_prefix("count=").ok_or_else(|| bad("missing count="))?;
    let (count, rest) = rest.split_once(' ').ok_or_else(|| bad("missing provenance="))?;
    let provenance = rest
        .strip_prefix("provenance=")
        .ok_or_else(|| bad("missing provenance="))?;
    let dim = dim.parse().map_err(|_| bad("dim is not an integer"))?;
    let count = count.parse().map_err(|_| bad("count is not an integer"))?;
    Ok((dim, count, provenance.to_string()))
}

/// Load an interchange file. When `expected_rows` is given the row count must match.
pub fn load_sentence_embeddings(
    path: impl AsRef<Path>,
    expected_rows: Option<usize>,
) -> Result<SentenceEmbeddingSet> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    read_sentence_embeddings(BufReader::new(file), path, expected_rows)
}

pub fn read_sentence_embeddings<R: BufRead>(
    reader: R,
    origin: &Path,
    expected_rows: Option<usize>,
) -> Result<SentenceEmbeddingSet> {
    let mut lines = reader.lines();
    let header = lines
        .next()
        .ok_or_else(|| Error::parse(origin, 1, "missing header"))?
        .map_err(|e| Error::parse(origin, 1, e.to_string()))?;
    let (dim, count, provenance) = parse_header(header.trim_end_matches('\r'), origin)?;
    if dim == 0 {
        return Err(Error::parse(origin, 1, "dim must be positive"));
    }
    let mut vectors = Vec::with_capacity(count);
    for (row, line) in lines.enumerate() {
        let lineno = row + 2;
        let line = line.map_err(|e| Error::parse(origin, lineno, e.to_string()))?;
        let line = line.trim_end_matches('\r');
        if line.is_empty() {
            continue;
        }
        let values = line
            .split(' ')
            .map(|f| {
                f.parse::<f64>().map_err(|_| {
                    Error::parse(origin, lineno, format!("row {row}: unparsable float {f:?}"))
                })
            })
            .collect::<Result<Vec<f64>>>()?;
        if values.len() != dim {
            return Err(Error::parse(
                origin,
                lineno,
                format!("row {row}: expected {dim} values, found {}", values.len()),
            ));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::parse(
                origin,
                lineno,
                format!("row {row}: non-finite value"),
            ));
        }
        vectors.push(EmbeddingVector::new(values));
    }
    if vectors.len() != count {
        return Err(Error::parse(
            origin,
            1,
            format!("header declares {count} rows, found {}", vectors.len()),
        ));
    }
    if let Some(expected) = expected_rows {
        if expected != count {
            return Err(Error::Data(format!(
                "{}: {count} rows but the dataset has {expected} examples",
                origin.display()
            )));
        }
    }
    SentenceEmbeddingSet::new(dim, vectors, provenance)
}

/// Extrema of the norms and of all pooled components of a set.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormStats {
    pub l1_min: f64,
    pub l1_max: f64,
    pub l2_min: f64,
    pub l2_max: f64,
    pub dim_min: f64,
    pub dim_max: f64,
}

impl NormStats {
    pub fn norm_range(&self, order: NormOrder) -> (f64, f64) {
        match order {
            NormOrder::L1 => (self.l1_min, self.l1_max),
            NormOrder::L2 => (self.l2_min, self.l2_max),
        }
    }

    pub fn dim_range(&self) -> (f64, f64) {
        (self.dim_min, self.dim_max)
    }

    pub fn merge(&self, other: &NormStats) -> NormStats {
        NormStats {
            l1_min: self.l1_min.min(other.l1_min),
            l1_max: self.l1_max.max(other.l1_max),
            l2_min: self.l2_min.min(other.l2_min),
            l2_max: self.l2_max.max(other.l2_max),
            dim_min: self.dim_min.min(other.dim_min),
            dim_max: self.dim_max.max(other.dim_max),
        }
    }
}

pub fn norm_stats(set: &SentenceEmbeddingSet) -> Result<NormStats> {
    if set.is_empty() {
        return Err(Error::Data("norm statistics of an empty set".into()));
    }
    let mut s = NormStats {
        l1_min: f64::INFINITY,
        l1_max: f64::NEG_INFINITY,
        l2_min: f64::INFINITY,
        l2_max: f64::NEG_INFINITY,
        dim_min: f64::INFINITY,
        dim_max: f64::NEG_INFINITY,
    };
    for v in &set.vectors {
        s.l1_min = s.l1_min.min(v.l1());
        s.l1_max = s.l1_max.max(v.l1());
        s.l2_min = s.l2_min.min(v.l2());
        s.l2_max = s.l2_max.max(v.l2());
        for &x in v.values() {
            s.dim_min = s.dim_min.min(x);
            s.dim_max = s.dim_max.max(x);
        }
    }
    Ok(s)
}
