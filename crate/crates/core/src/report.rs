//! Report files: evaluation summaries, per-year tables, overlap exports and
//! the coverage/metric/correlation tables.
//!
//! Metric percentages carry one decimal, containment percentages two, and both
//! round half-up. Every table is written in a fixed row order so identical
//! inputs give identical bytes.

use std::collections::BTreeMap;
use std::io::{self, Write};

use serde::{Deserialize, Serialize};

use crate::corpus::DatasetCounts;
use crate::evaluation::EvaluationReport;
use crate::ratio::{format_percent, round_half_up, Ratio};
use crate::setops::{ContainmentMatrix, CorrelationMatrix, OverlapPartition, Row};

pub const METRIC_DECIMALS: u32 = 1;
pub const CONTAINMENT_DECIMALS: u32 = 2;

/// A ratio with its full-precision value and its rendered percentage.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RenderedRatio {
    pub value: f64,
    pub percent: String,
}

impl RenderedRatio {
    fn exact(r: Ratio) -> Self {
        RenderedRatio {
            value: r.value(),
            percent: r.percent(METRIC_DECIMALS),
        }
    }

    fn mean(value: f64) -> Self {
        RenderedRatio {
            value,
            percent: format_percent(value, METRIC_DECIMALS as usize),
        }
    }
}

/// Serialized form of an [`EvaluationReport`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationFile {
    pub source: String,
    pub gold: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub year: Option<i32>,
    pub corpus_docs: u64,
    pub eligible_docs: u64,
    pub source_covered_docs: u64,
    pub source_edges: u64,
    pub gold_docs: u64,
    pub covered_docs: u64,
    pub exact_docs: u64,
    pub true_positives: u64,
    pub false_positives: u64,
    pub false_negatives: u64,
    pub metrics_defined: bool,
    pub global_coverage: Option<RenderedRatio>,
    pub adjusted_coverage: Option<RenderedRatio>,
    pub gold_coverage: Option<RenderedRatio>,
    pub precision: RenderedRatio,
    pub recall: RenderedRatio,
    pub f1: RenderedRatio,
    pub accuracy: RenderedRatio,
    pub avg_references: Option<f64>,
}

impl From<&EvaluationReport> for EvaluationFile {
    fn from(r: &EvaluationReport) -> Self {
        EvaluationFile {
            source: r.source_name.clone(),
            gold: r.gold_name.clone(),
            year: r.year,
            corpus_docs: r.corpus_docs,
            eligible_docs: r.eligible_docs,
            source_covered_docs: r.source_covered_docs,
            source_edges: r.source_edges,
            gold_docs: r.gold_docs,
            covered_docs: r.covered_doc_count,
            exact_docs: r.exact_doc_count,
            true_positives: r.true_positives,
            false_positives: r.false_positives,
            false_negatives: r.false_negatives,
            metrics_defined: r.metrics_defined,
            global_coverage: r.global_coverage_ratio().map(RenderedRatio::exact),
            adjusted_coverage: r.adjusted_coverage_ratio().map(RenderedRatio::exact),
            gold_coverage: r.gold_coverage_ratio().map(RenderedRatio::exact),
            precision: RenderedRatio::mean(r.precision),
            recall: RenderedRatio::mean(r.recall),
            f1: RenderedRatio::mean(r.f1),
            accuracy: r
                .accuracy_ratio()
                .map_or_else(|| RenderedRatio::mean(0.0), RenderedRatio::exact),
            avg_references: r.avg_references,
        }
    }
}

pub fn write_evaluation_json<W: Write>(mut out: W, report: &EvaluationReport) -> io::Result<()> {
    serde_json::to_writer_pretty(&mut out, &EvaluationFile::from(report))?;
    writeln!(out)
}

pub const TEMPORAL_HEADER: &str = "year,gold_docs,covered,gold_coverage,precision,recall,f1,accuracy";

/// Per-year table; ratios at full precision.
pub fn write_temporal_csv<W: Write>(mut out: W, by_year: &BTreeMap<i32, EvaluationReport>) -> io::Result<()> {
    writeln!(out, "{TEMPORAL_HEADER}")?;
    for (year, r) in by_year {
        writeln!(
            out,
            "{year},{},{},{},{},{},{},{}",
            r.gold_docs, r.covered_doc_count, r.gold_coverage, r.precision, r.recall, r.f1, r.accuracy
        )?;
    }
    out.flush()
}

/// Two-column `subset,count` export, largest cells first. Subsets are the
/// `+`-joined sorted source names.
pub fn write_partition_csv<W: Write>(mut out: W, partition: &OverlapPartition) -> io::Result<()> {
    let mut rows: Vec<(String, u64)> = partition
        .cells
        .iter()
        .map(|(mask, count)| (partition.names(*mask).join("+"), *count))
        .collect();
    rows.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    writeln!(out, "subset,count")?;
    for (subset, count) in rows {
        writeln!(out, "{subset},{count}")?;
    }
    out.flush()
}

/// Containment table with an `Overall` row first; undefined rows print `NA`.
pub fn write_containment_csv<W: Write>(mut out: W, matrix: &ContainmentMatrix) -> io::Result<()> {
    writeln!(out, ",{}", matrix.sources.join(","))?;
    let rows = std::iter::once(("Overall", Row::Overall)).chain(
        matrix
            .sources
            .iter()
            .enumerate()
            .map(|(i, s)| (s.as_str(), Row::Source(i))),
    );
    for (label, row) in rows {
        let cells: Vec<String> = (0..matrix.sources.len())
            .map(|c| {
                matrix
                    .value(row, c)
                    .map_or_else(|| "NA".to_string(), |r| r.percent(CONTAINMENT_DECIMALS))
            })
            .collect();
        writeln!(out, "{label},{}", cells.join(","))?;
    }
    out.flush()
}

/// Correlation matrix at two decimals.
pub fn write_correlation_csv<W: Write>(mut out: W, matrix: &CorrelationMatrix) -> io::Result<()> {
    writeln!(out, ",{}", matrix.sources.join(","))?;
    for (name, row) in matrix.sources.iter().zip(&matrix.values) {
        let cells: Vec<String> = row
            .iter()
            .map(|v| v.map_or_else(|| "NA".to_string(), |x| round_half_up(x, 2)))
            .collect();
        writeln!(out, "{name},{}", cells.join(","))?;
    }
    out.flush()
}

/// One row of the source coverage table.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CoverageRow {
    pub name: String,
    pub counts: DatasetCounts,
}

/// Publications, coverage, adjusted coverage, relationships and mean
/// references per source.
pub fn write_coverage_table<W: Write>(
    mut out: W,
    rows: &[CoverageRow],
    corpus_docs: u64,
    articles_and_reviews: u64,
) -> io::Result<()> {
    writeln!(
        out,
        "database,publications,coverage,adjusted_coverage,relationships,avg_references"
    )?;
    let pct = |r: Option<Ratio>| r.map_or_else(|| "NA".to_string(), |r| r.percent(METRIC_DECIMALS));
    for row in rows {
        let avg = Ratio::new(row.counts.edges, row.counts.covered_docs)
            .map_or_else(|| "NA".to_string(), |r| round_half_up(r.value(), 1));
        writeln!(
            out,
            "{},{},{},{},{},{}",
            row.name,
            row.counts.covered_docs,
            pct(Ratio::new(row.counts.covered_docs, corpus_docs)),
            pct(Ratio::new(row.counts.covered_docs, articles_and_reviews)),
            row.counts.edges,
            avg
        )?;
    }
    out.flush()
}

/// Metric rows (coverage, precision, recall, F1, accuracy) by source columns
/// for one gold standard.
pub fn write_metrics_table<W: Write>(mut out: W, reports: &[EvaluationReport]) -> io::Result<()> {
    let names: Vec<&str> = reports.iter().map(|r| r.source_name.as_str()).collect();
    writeln!(out, "metric,{}", names.join(","))?;
    let mean = |r: &EvaluationReport, v: f64| {
        if r.metrics_defined {
            format_percent(v, METRIC_DECIMALS as usize)
        } else {
            "NA".to_string()
        }
    };
    let exact = |r: Option<Ratio>| r.map_or_else(|| "NA".to_string(), |x| x.percent(METRIC_DECIMALS));
    for label in ["Coverage", "Precision", "Recall", "F1-score", "Accuracy"] {
        let cells: Vec<String> = reports
            .iter()
            .map(|r| match label {
                "Coverage" => exact(r.gold_coverage_ratio()),
                "Precision" => mean(r, r.precision),
                "Recall" => mean(r, r.recall),
                "F1-score" => mean(r, r.f1),
                _ => exact(r.accuracy_ratio()),
            })
            .collect();
        writeln!(out, "{label},{}", cells.join(","))?;
    }
    out.flush()
}
