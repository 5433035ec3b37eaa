//! Coverage and citation-quality metrics of a source dataset against a gold
//! standard.
//!
//! Coverage is the share of documents for which a source supplies at least one
//! resolved reference. The quality metrics are macro averages over the
//! documents a source covers: each covered gold document gets its own
//! precision, recall and F1, and the dataset-level value is their unweighted
//! mean. Accuracy is the share of covered documents whose reference list is
//! reproduced exactly.
//!
//! Two coverages are reported. `global_coverage` divides by the whole corpus
//! (or one year of it); `gold_coverage` divides by the gold standard's
//! documents, which is the population the quality metrics are computed over.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{BaselineCorpus, DatasetCounts, DocKey, SourceDataset};
use crate::linkage::GoldStandard;
use crate::ratio::Ratio;

#[derive(Error, Debug, Clone, PartialEq, Eq)]
pub enum EvalError {
    #[error("the corpus has no documents")]
    EmptyCorpus,
    #[error("the corpus has no journal articles or reviews")]
    NoEligibleDocuments,
    #[error("the source covers no documents")]
    EmptySource,
    #[error("the gold standard has no documents")]
    EmptyGold,
}

/// Share of corpus documents with at least one resolved reference.
pub fn coverage(source: &SourceDataset, corpus: &BaselineCorpus) -> Result<f64, EvalError> {
    Ratio::new(source.covered_docs().len() as u64, corpus.len() as u64)
        .map(Ratio::value)
        .ok_or(EvalError::EmptyCorpus)
}

/// Coverage with the denominator restricted to journal articles and reviews.
pub fn adjusted_coverage(source: &SourceDataset, corpus: &BaselineCorpus) -> Result<f64, EvalError> {
    adjusted_coverage_from_counts(
        source.covered_docs().len() as u64,
        corpus.article_or_review_count() as u64,
    )
}

pub fn adjusted_coverage_from_counts(covered: u64, articles_and_reviews: u64) -> Result<f64, EvalError> {
    Ratio::new(covered, articles_and_reviews)
        .map(Ratio::value)
        .ok_or(EvalError::NoEligibleDocuments)
}

/// Mean number of resolved references per covered document.
pub fn avg_references(source: &SourceDataset) -> Result<f64, EvalError> {
    avg_references_from_counts(source.counts())
}

pub fn avg_references_from_counts(counts: DatasetCounts) -> Result<f64, EvalError> {
    Ratio::new(counts.edges, counts.covered_docs)
        .map(Ratio::value)
        .ok_or(EvalError::EmptySource)
}

/// Confusion counts and metrics of one covered document.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DocComparison {
    pub doc: DocKey,
    pub true_positives: u64,
    pub false_positives: u64,
    pub false_negatives: u64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

impl DocComparison {
    /// True when the source reproduces the gold reference list exactly.
    pub fn is_exact(&self) -> bool {
        self.false_positives == 0 && self.false_negatives == 0 && self.true_positives > 0
    }
}

fn ratio_or_zero(num: u64, den: u64) -> f64 {
    Ratio::new(num, den).map_or(0.0, Ratio::value)
}

/// Compares one document's source references with its gold references.
///
/// Both slices must be sorted ascending without duplicates. F1 is 0 when
/// precision and recall are both 0.
pub fn compare_doc(doc: DocKey, source_refs: &[DocKey], gold_refs: &[DocKey]) -> DocComparison {
    debug_assert!(source_refs.windows(2).all(|w| w[0] < w[1]));
    debug_assert!(gold_refs.windows(2).all(|w| w[0] < w[1]));
    let (mut i, mut j, mut tp) = (0, 0, 0u64);
    while i < source_refs.len() && j < gold_refs.len() {
        match source_refs[i].cmp(&gold_refs[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                tp += 1;
                i += 1;
                j += 1;
            }
        }
    }
    let fp = source_refs.len() as u64 - tp;
    let fn_ = gold_refs.len() as u64 - tp;
    let precision = ratio_or_zero(tp, tp + fp);
    let recall = ratio_or_zero(tp, tp + fn_);
    let f1 = if precision + recall > 0.0 {
        2.0 * precision * recall / (precision + recall)
    } else {
        0.0
    };
    DocComparison {
        doc,
        true_positives: tp,
        false_positives: fp,
        false_negatives: fn_,
        precision,
        recall,
        f1,
    }
}

/// Neumaier-compensated running sum.
#[derive(Debug, Default, Clone, Copy)]
struct CompensatedSum {
    sum: f64,
    compensation: f64,
}

impl CompensatedSum {
    fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.compensation += (self.sum - t) + x;
        } else {
            self.compensation += (x - t) + self.sum;
        }
        self.sum = t;
    }

    fn total(self) -> f64 {
        self.sum + self.compensation
    }
}

/// All metrics of one source against one gold standard, optionally restricted
/// to one publication year.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub source_name: String,
    pub gold_name: String,
    pub year: Option<i32>,
    /// Corpus documents in scope.
    pub corpus_docs: u64,
    /// Journal articles and reviews in scope.
    pub eligible_docs: u64,
    /// Documents in scope the source covers, anywhere in the corpus.
    pub source_covered_docs: u64,
    /// Edges of those documents.
    pub source_edges: u64,
    pub gold_docs: u64,
    /// Gold documents the source covers: the `n` of the macro means.
    pub covered_doc_count: u64,
    /// Covered gold documents reproduced exactly.
    pub exact_doc_count: u64,
    pub true_positives: u64,
    pub false_positives: u64,
    pub false_negatives: u64,
    pub global_coverage: Option<f64>,
    pub adjusted_coverage: Option<f64>,
    pub gold_coverage: f64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub accuracy: f64,
    pub avg_references: Option<f64>,
    /// False when no gold document is covered; precision, recall, F1 and
    /// accuracy are then reported as 0 but are undefined.
    pub metrics_defined: bool,
}

impl EvaluationReport {
    pub fn global_coverage_ratio(&self) -> Option<Ratio> {
        Ratio::new(self.source_covered_docs, self.corpus_docs)
    }

    pub fn adjusted_coverage_ratio(&self) -> Option<Ratio> {
        Ratio::new(self.source_covered_docs, self.eligible_docs)
    }

    pub fn gold_coverage_ratio(&self) -> Option<Ratio> {
        Ratio::new(self.covered_doc_count, self.gold_docs)
    }

    pub fn accuracy_ratio(&self) -> Option<Ratio> {
        Ratio::new(self.exact_doc_count, self.covered_doc_count)
    }

    pub fn avg_references_ratio(&self) -> Option<Ratio> {
        Ratio::new(self.source_edges, self.source_covered_docs)
    }
}

#[derive(Debug, Default, Clone, Copy)]
struct Population {
    corpus_docs: u64,
    eligible_docs: u64,
    covered_docs: u64,
    edges: u64,
}

fn per_doc(source: &SourceDataset, gold_docs: &[(DocKey, &[DocKey])]) -> Vec<Option<DocComparison>> {
    gold_docs
        .par_iter()
        .map_init(Vec::new, |buf, (doc, gold_refs)| {
            let run = source.edges_of(*doc);
            if run.is_empty() {
                return None;
            }
            buf.clear();
            buf.extend(run.iter().map(|e| e.cited));
            Some(compare_doc(*doc, buf, gold_refs))
        })
        .collect()
}

fn build_report(
    source: &SourceDataset,
    gold: &GoldStandard,
    year: Option<i32>,
    population: Population,
    gold_docs: &[(DocKey, &[DocKey])],
) -> EvaluationReport {
    let comparisons = per_doc(source, gold_docs);
    let (mut p, mut r, mut f) = (
        CompensatedSum::default(),
        CompensatedSum::default(),
        CompensatedSum::default(),
    );
    let (mut covered, mut exact, mut tp, mut fp, mut fn_) = (0u64, 0u64, 0u64, 0u64, 0u64);
    // gold_docs is ascending by key, so the reduction order is fixed.
    for c in comparisons.iter().flatten() {
        covered += 1;
        exact += u64::from(c.is_exact());
        tp += c.true_positives;
        fp += c.false_positives;
        fn_ += c.false_negatives;
        p.add(c.precision);
        r.add(c.recall);
        f.add(c.f1);
    }
    let mean = |s: CompensatedSum| if covered > 0 { s.total() / covered as f64 } else { 0.0 };
    EvaluationReport {
        source_name: source.name().to_string(),
        gold_name: gold.name().to_string(),
        year,
        corpus_docs: population.corpus_docs,
        eligible_docs: population.eligible_docs,
        source_covered_docs: population.covered_docs,
        source_edges: population.edges,
        gold_docs: gold_docs.len() as u64,
        covered_doc_count: covered,
        exact_doc_count: exact,
        true_positives: tp,
        false_positives: fp,
        false_negatives: fn_,
        global_coverage: Ratio::new(population.covered_docs, population.corpus_docs).map(Ratio::value),
        adjusted_coverage: Ratio::new(population.covered_docs, population.eligible_docs).map(Ratio::value),
        gold_coverage: ratio_or_zero(covered, gold_docs.len() as u64),
        precision: mean(p),
        recall: mean(r),
        f1: mean(f),
        accuracy: ratio_or_zero(exact, covered),
        avg_references: Ratio::new(population.edges, population.covered_docs).map(Ratio::value),
        metrics_defined: covered > 0,
    }
}

/// Evaluates a source against a gold standard over the gold standard's
/// documents.
///
/// When no gold document is covered the report still carries the coverages,
/// with `metrics_defined == false`.
pub fn evaluate(
    source: &SourceDataset,
    gold: &GoldStandard,
    corpus: &BaselineCorpus,
) -> Result<EvaluationReport, EvalError> {
    if corpus.is_empty() {
        return Err(EvalError::EmptyCorpus);
    }
    if gold.is_empty() {
        return Err(EvalError::EmptyGold);
    }
    let population = Population {
        corpus_docs: corpus.len() as u64,
        eligible_docs: corpus.article_or_review_count() as u64,
        covered_docs: source.covered_docs().len() as u64,
        edges: source.edges().len() as u64,
    };
    let gold_docs: Vec<(DocKey, &[DocKey])> = gold.iter().collect();
    Ok(build_report(source, gold, None, population, &gold_docs))
}

/// Evaluates per publication year of the gold documents. Years without gold
/// documents are omitted, as are gold documents without a year.
pub fn temporal_breakdown(
    source: &SourceDataset,
    gold: &GoldStandard,
    corpus: &BaselineCorpus,
) -> Result<BTreeMap<i32, EvaluationReport>, EvalError> {
    if corpus.is_empty() {
        return Err(EvalError::EmptyCorpus);
    }
    if gold.is_empty() {
        return Err(EvalError::EmptyGold);
    }
    let year_of = |k: DocKey| corpus.get(k).and_then(|d| d.year);

    let mut populations: BTreeMap<i32, Population> = BTreeMap::new();
    for doc in corpus.documents() {
        if let Some(y) = doc.year {
            let p = populations.entry(y).or_default();
            p.corpus_docs += 1;
            p.eligible_docs += u64::from(doc.is_article_or_review());
        }
    }
    for (doc, run) in source.by_citing() {
        if let Some(p) = year_of(doc).and_then(|y| populations.get_mut(&y)) {
            p.covered_docs += 1;
            p.edges += run.len() as u64;
        }
    }

    let mut by_year: BTreeMap<i32, Vec<(DocKey, &[DocKey])>> = BTreeMap::new();
    for (doc, refs) in gold.iter() {
        if let Some(y) = year_of(doc) {
            by_year.entry(y).or_default().push((doc, refs));
        }
    }
    Ok(by_year
        .into_iter()
        .map(|(year, docs)| {
            let population = populations.get(&year).copied().unwrap_or_default();
            (year, build_report(source, gold, Some(year), population, &docs))
        })
        .collect())
}
