//! Overlap between source datasets and rank correlation of their citation
//! counts.
//!
//! Every set operation works on strictly ascending sequences, so k sources can
//! be combined in a single merge pass without hashing or loading all of them
//! at once. [`partition_sorted`] is that merge; it accepts fallible streams so
//! persisted edge files can be fed to it directly.

use std::collections::BTreeMap;
use std::convert::Infallible;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{CitationEdge, DocKey, SourceDataset};
use crate::ratio::Ratio;

#[derive(Error, Debug, Clone, PartialEq, Eq)]
pub enum SetOpsError {
    #[error("at least 2 sources are required, got {0}")]
    TooFewSources(usize),
    #[error("at most 64 sources are supported, got {0}")]
    TooManySources(usize),
    #[error("vectors differ in length ({0} vs {1})")]
    LengthMismatch(usize, usize),
    #[error("at least 2 observations are required, got {0}")]
    TooShort(usize),
    #[error("a constant vector has no rank correlation")]
    ConstantVector,
    #[error("vectors must not contain NaN")]
    NotANumber,
}

#[derive(Error, Debug)]
pub enum MergeError<E> {
    #[error("stream {0} is not strictly ascending")]
    Unsorted(usize),
    #[error(transparent)]
    Source(E),
}

/// Whether overlap is measured on citing documents or on citation edges.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Level {
    Document,
    Edge,
}

impl Level {
    pub fn as_str(self) -> &'static str {
        match self {
            Level::Document => "document",
            Level::Edge => "edge",
        }
    }
}

/// Counts, for every combination of streams, the elements present in exactly
/// that combination. Keys are bitmasks over stream indices; empty cells are
/// absent.
pub fn partition_sorted<T, E, I>(streams: Vec<I>) -> Result<BTreeMap<u64, u64>, MergeError<E>>
where
    T: Ord,
    I: Iterator<Item = Result<T, E>>,
{
    let mut streams = streams;
    let mut heads: Vec<Option<T>> = Vec::with_capacity(streams.len());
    for s in streams.iter_mut() {
        heads.push(s.next().transpose().map_err(MergeError::Source)?);
    }
    let mut cells = BTreeMap::new();
    while let Some(min) = heads.iter().flatten().min() {
        let mut mask = 0u64;
        for (i, head) in heads.iter().enumerate() {
            if head.as_ref() == Some(min) {
                mask |= 1 << i;
            }
        }
        *cells.entry(mask).or_insert(0) += 1;
        for i in 0..heads.len() {
            if mask & (1 << i) == 0 {
                continue;
            }
            let next = streams[i].next().transpose().map_err(MergeError::Source)?;
            if let (Some(prev), Some(n)) = (&heads[i], &next) {
                if n <= prev {
                    return Err(MergeError::Unsorted(i));
                }
            }
            heads[i] = next;
        }
    }
    Ok(cells)
}

fn count_intersection<T: Ord>(a: &[T], b: &[T]) -> u64 {
    let (mut i, mut j, mut n) = (0, 0, 0);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                n += 1;
                i += 1;
                j += 1;
            }
        }
    }
    n
}

fn check_source_count(n: usize) -> Result<(), SetOpsError> {
    if n < 2 {
        Err(SetOpsError::TooFewSources(n))
    } else if n > 64 {
        Err(SetOpsError::TooManySources(n))
    } else {
        Ok(())
    }
}

/// Elements of a dataset at one level, as a sorted slice.
enum Elements<'a> {
    Docs(&'a [DocKey]),
    Edges(&'a [CitationEdge]),
}

fn elements(source: &SourceDataset, level: Level) -> Elements<'_> {
    match level {
        Level::Document => Elements::Docs(source.covered_docs()),
        Level::Edge => Elements::Edges(source.edges()),
    }
}

fn infallible<T: Copy>(items: &[T]) -> impl Iterator<Item = Result<T, Infallible>> + '_ {
    items.iter().copied().map(Ok)
}

fn merge_cells(sources: &[&SourceDataset], level: Level) -> BTreeMap<u64, u64> {
    let result = match level {
        Level::Document => partition_sorted(sources.iter().map(|s| infallible(s.covered_docs())).collect()),
        Level::Edge => partition_sorted(sources.iter().map(|s| infallible(s.edges())).collect()),
    };
    match result {
        Ok(cells) => cells,
        Err(MergeError::Unsorted(i)) => unreachable!("dataset {i} violates its sort invariant"),
        Err(MergeError::Source(never)) => match never {},
    }
}

/// The exclusive-combination partition of the union of several sources.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OverlapPartition {
    pub level: Level,
    pub sources: Vec<String>,
    /// Bitmask over `sources` → element count. Zero cells are omitted.
    pub cells: BTreeMap<u64, u64>,
    pub universe_size: u64,
}

impl OverlapPartition {
    /// Builds a partition from precomputed cells.
    pub fn from_cells(level: Level, sources: Vec<String>, cells: BTreeMap<u64, u64>) -> Self {
        let universe_size = cells.values().sum();
        OverlapPartition {
            level,
            sources,
            cells,
            universe_size,
        }
    }

    fn mask_of(&self, names: &[&str]) -> Option<u64> {
        names.iter().try_fold(0u64, |mask, n| {
            self.sources.iter().position(|s| s == n).map(|i| mask | (1 << i))
        })
    }

    /// Count of elements found in exactly the named sources.
    pub fn cell(&self, names: &[&str]) -> u64 {
        self.mask_of(names)
            .and_then(|m| self.cells.get(&m))
            .copied()
            .unwrap_or(0)
    }

    /// Source names of a cell, sorted.
    pub fn names(&self, mask: u64) -> Vec<&str> {
        let mut names: Vec<&str> = self
            .sources
            .iter()
            .enumerate()
            .filter(|(i, _)| mask & (1 << i) != 0)
            .map(|(_, s)| s.as_str())
            .collect();
        names.sort_unstable();
        names
    }

    /// Sum of cells containing source `index`, i.e. that source's size.
    pub fn source_total(&self, index: usize) -> u64 {
        self.cells
            .iter()
            .filter(|(m, _)| *m & (1 << index) != 0)
            .map(|(_, c)| c)
            .sum()
    }
}

/// Assigns every element of the union to the exact set of sources holding it.
pub fn exclusive_partition(sources: &[&SourceDataset], level: Level) -> Result<OverlapPartition, SetOpsError> {
    check_source_count(sources.len())?;
    let names = sources.iter().map(|s| s.name().to_string()).collect();
    Ok(OverlapPartition::from_cells(level, names, merge_cells(sources, level)))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Row {
    /// The union of all sources.
    Overall,
    Source(usize),
}

/// Pairwise containment: the share of a row's elements also present in a column.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ContainmentMatrix {
    pub level: Level,
    pub sources: Vec<String>,
    pub sizes: Vec<u64>,
    pub union_size: u64,
    /// `intersections[r][c] = |r ∩ c|`; the diagonal holds the sizes.
    pub intersections: Vec<Vec<u64>>,
}

impl ContainmentMatrix {
    /// `None` when the row has no elements.
    pub fn value(&self, row: Row, column: usize) -> Option<Ratio> {
        match row {
            Row::Overall => Ratio::new(self.sizes[column], self.union_size),
            Row::Source(r) => Ratio::new(self.intersections[r][column], self.sizes[r]),
        }
    }

    /// Sources whose row is undefined because they are empty.
    pub fn empty_rows(&self) -> Vec<&str> {
        self.sizes
            .iter()
            .zip(&self.sources)
            .filter(|(n, _)| **n == 0)
            .map(|(_, s)| s.as_str())
            .collect()
    }
}

/// Computes every row/column containment ratio by pairwise sorted intersection.
pub fn pairwise_containment(sources: &[&SourceDataset], level: Level) -> Result<ContainmentMatrix, SetOpsError> {
    check_source_count(sources.len())?;
    let k = sources.len();
    let pairs: Vec<(usize, usize)> = (0..k).flat_map(|i| (i + 1..k).map(move |j| (i, j))).collect();
    let counts: Vec<u64> = pairs
        .par_iter()
        .map(
            |&(i, j)| match (elements(sources[i], level), elements(sources[j], level)) {
                (Elements::Docs(a), Elements::Docs(b)) => count_intersection(a, b),
                (Elements::Edges(a), Elements::Edges(b)) => count_intersection(a, b),
                _ => unreachable!("both sides use the same level"),
            },
        )
        .collect();
    let sizes: Vec<u64> = sources
        .iter()
        .map(|s| match elements(s, level) {
            Elements::Docs(d) => d.len() as u64,
            Elements::Edges(e) => e.len() as u64,
        })
        .collect();
    let mut intersections = vec![vec![0; k]; k];
    for (i, size) in sizes.iter().enumerate() {
        intersections[i][i] = *size;
    }
    for ((i, j), n) in pairs.into_iter().zip(counts) {
        intersections[i][j] = n;
        intersections[j][i] = n;
    }
    let union_size = merge_cells(sources, level).values().sum();
    let mut names: Vec<String> = Vec::with_capacity(k);
    names.extend(sources.iter().map(|s| s.name().to_string()));
    if let Some(empty) = sizes.iter().position(|s| *s == 0) {
        log::warn!("source {} is empty; its containment row is undefined", names[empty]);
    }
    Ok(ContainmentMatrix {
        level,
        sources: names,
        sizes,
        union_size,
        intersections,
    })
}

/// Citations received by each cited document, counted within one source.
/// Documents never cited are absent.
pub fn citation_counts(source: &SourceDataset) -> BTreeMap<DocKey, u64> {
    let mut counts = BTreeMap::new();
    for e in source.edges() {
        *counts.entry(e.cited).or_insert(0) += 1;
    }
    counts
}

fn cited_set(source: &SourceDataset) -> Vec<DocKey> {
    let mut cited: Vec<DocKey> = source.edges().iter().map(|e| e.cited).collect();
    cited.sort_unstable();
    cited.dedup();
    cited
}

/// Documents cited in every source.
pub fn shared_cited_docs(sources: &[&SourceDataset]) -> Result<Vec<DocKey>, SetOpsError> {
    if sources.len() < 2 {
        return Err(SetOpsError::TooFewSources(sources.len()));
    }
    let mut shared = cited_set(sources[0]);
    for s in &sources[1..] {
        let other = cited_set(s);
        let mut j = 0;
        shared.retain(|k| {
            while j < other.len() && other[j] < *k {
                j += 1;
            }
            j < other.len() && other[j] == *k
        });
    }
    Ok(shared)
}

/// Average ranks (1-based); tied values share the mean of the ranks they span.
pub fn average_ranks(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|a, b| values[*a].total_cmp(&values[*b]));
    let mut ranks = vec![0.0; values.len()];
    let mut start = 0;
    while start < order.len() {
        let mut end = start + 1;
        while end < order.len() && values[order[end]] == values[order[start]] {
            end += 1;
        }
        // Ranks start+1 ..= end, mean (start + 1 + end) / 2.
        let rank = (start + 1 + end) as f64 / 2.0;
        for &i in &order[start..end] {
            ranks[i] = rank;
        }
        start = end;
    }
    ranks
}

/// Spearman rank correlation: the Pearson correlation of average ranks, which
/// stays valid under ties.
///
/// ```
/// use citegauge::setops::spearman;
/// let rho = spearman(&[1.0, 2.0, 2.0, 4.0], &[10.0, 20.0, 30.0, 40.0]).unwrap();
/// assert!((rho - 0.9487).abs() < 1e-4);
/// ```
pub fn spearman(x: &[f64], y: &[f64]) -> Result<f64, SetOpsError> {
    if x.len() != y.len() {
        return Err(SetOpsError::LengthMismatch(x.len(), y.len()));
    }
    if x.len() < 2 {
        return Err(SetOpsError::TooShort(x.len()));
    }
    if x.iter().chain(y).any(|v| v.is_nan()) {
        return Err(SetOpsError::NotANumber);
    }
    let rx = average_ranks(x);
    let ry = average_ranks(y);
    // Average ranks always sum to n(n+1)/2.
    let mean = (x.len() + 1) as f64 / 2.0;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in rx.iter().zip(&ry) {
        let (dx, dy) = (a - mean, b - mean);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(SetOpsError::ConstantVector);
    }
    Ok((sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0))
}

/// Spearman correlation of citation counts between every pair of sources,
/// over the documents cited in all of them.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationMatrix {
    pub sources: Vec<String>,
    pub shared_docs: u64,
    /// `None` where a pair has no defined correlation (constant counts or
    /// fewer than two shared documents).
    pub values: Vec<Vec<Option<f64>>>,
}

pub fn correlation_matrix(sources: &[&SourceDataset]) -> Result<CorrelationMatrix, SetOpsError> {
    check_source_count(sources.len())?;
    let shared = shared_cited_docs(sources)?;
    let vectors: Vec<Vec<f64>> = sources
        .par_iter()
        .map(|s| {
            let counts = citation_counts(s);
            shared.iter().map(|k| counts[k] as f64).collect()
        })
        .collect();
    let k = sources.len();
    let mut values = vec![vec![None; k]; k];
    for i in 0..k {
        for j in i..k {
            let rho = spearman(&vectors[i], &vectors[j]).ok();
            values[i][j] = rho;
            values[j][i] = rho;
        }
    }
    Ok(CorrelationMatrix {
        sources: sources.iter().map(|s| s.name().to_string()).collect(),
        shared_docs: shared.len() as u64,
        values,
    })
}
