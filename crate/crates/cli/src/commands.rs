//! One function per subcommand. Every output goes through [`Layout`] so the
//! tree under `output_dir` is fully determined by the manifest and inputs.

use std::fmt::Write as _;
use std::fs::{self, File, OpenOptions};
use std::io::{self, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use anyhow::{anyhow, Context};
use citegauge::corpus::{BaselineCorpus, SourceDataset};
use citegauge::evaluation::{evaluate, temporal_breakdown, EvaluationReport};
use citegauge::ingest::{load_baseline, load_reference_export, EdgeDumpReader, IngestLog};
use citegauge::linkage::{
    build_gold_standard, extract_baseline_gold, resolve_edges, sample_gold_candidates, GoldStandard, Provenance,
};
use citegauge::ratio::round_half_up;
use citegauge::report::{
    write_containment_csv, write_correlation_csv, write_coverage_table, write_evaluation_json, write_metrics_table,
    write_partition_csv, write_temporal_csv, CoverageRow,
};
use citegauge::setops::{correlation_matrix, exclusive_partition, pairwise_containment, Level};
use citegauge::store::{read_edge_file, write_edge_file, DatasetKind, DatasetManifest};
use rayon::prelude::*;
use serde::Serialize;

use crate::manifest::{AuditManifest, GoldInput, GoldSpec, SourceSpec};

/// A hard error with a stable, machine-readable code.
#[derive(Debug)]
pub struct Failure {
    pub code: &'static str,
    pub error: anyhow::Error,
}

pub trait WithCode<T> {
    fn code(self, code: &'static str) -> Result<T, Failure>;
}

impl<T, E: Into<anyhow::Error>> WithCode<T> for Result<T, E> {
    fn code(self, code: &'static str) -> Result<T, Failure> {
        self.map_err(|e| Failure { code, error: e.into() })
    }
}

fn fail<T>(code: &'static str, message: String) -> Result<T, Failure> {
    Err(Failure {
        code,
        error: anyhow!(message),
    })
}

pub type CmdResult = Result<(), Failure>;

/// Paths of every artifact under the output directory.
pub struct Layout {
    root: PathBuf,
}

impl Layout {
    pub fn new(root: &Path) -> Self {
        Layout {
            root: root.to_path_buf(),
        }
    }

    fn dir(kind: DatasetKind) -> &'static str {
        match kind {
            DatasetKind::Source => "sources",
            DatasetKind::Gold => "golds",
        }
    }

    pub fn edges(&self, kind: DatasetKind, name: &str) -> PathBuf {
        self.root.join(Self::dir(kind)).join(format!("{name}.edges.csv"))
    }

    pub fn sidecar(&self, kind: DatasetKind, name: &str) -> PathBuf {
        self.root.join(Self::dir(kind)).join(format!("{name}.json"))
    }

    pub fn evaluation(&self, gold: &str, source: &str, suffix: &str) -> PathBuf {
        self.root
            .join("evaluation")
            .join(gold)
            .join(format!("{source}.{suffix}"))
    }

    pub fn overlap(&self, level: Level, what: &str) -> PathBuf {
        self.root.join("overlap").join(format!("{}.{what}.csv", level.as_str()))
    }

    pub fn correlation(&self, ext: &str) -> PathBuf {
        self.root.join("correlation").join(format!("spearman.{ext}"))
    }

    pub fn sample(&self, file: &str) -> PathBuf {
        self.root.join("sample").join(file)
    }

    pub fn report(&self, file: &str) -> PathBuf {
        self.root.join("report").join(file)
    }

    pub fn log(&self, command: &str) -> PathBuf {
        self.root.join("logs").join(format!("{command}.log"))
    }

    /// Wall-clock timings; the only output that differs between reruns.
    pub fn timings(&self) -> PathBuf {
        self.root.join("timings.log")
    }
}

/// Writes through a temporary sibling and renames, so readers never see a
/// half-written file.
fn write_output(path: &Path, body: impl FnOnce(&mut BufWriter<File>) -> io::Result<()>) -> Result<(), Failure> {
    let run = || -> io::Result<()> {
        if let Some(dir) = path.parent() {
            fs::create_dir_all(dir)?;
        }
        let mut tmp = path.as_os_str().to_owned();
        tmp.push(".partial");
        let mut out = BufWriter::new(File::create(&tmp)?);
        body(&mut out)?;
        out.into_inner().map_err(|e| e.into_error())?.sync_all()?;
        fs::rename(&tmp, path)
    };
    run()
        .with_context(|| format!("cannot write {}", path.display()))
        .code("io")
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), Failure> {
    write_output(path, |w| {
        serde_json::to_writer_pretty(&mut *w, value)?;
        writeln!(w)
    })
}

/// Deterministic per-command log kept with the outputs.
struct RunLog {
    command: String,
    text: String,
    started: Instant,
}

impl RunLog {
    fn new(command: impl Into<String>) -> Self {
        RunLog {
            command: command.into(),
            text: String::new(),
            started: Instant::now(),
        }
    }

    fn info(&mut self, line: String) {
        log::info!("{line}");
        let _ = writeln!(self.text, "{line}");
    }

    fn warn(&mut self, line: String) {
        log::warn!("{line}");
        let _ = writeln!(self.text, "warning: {line}");
    }

    fn finish(self, layout: &Layout) -> CmdResult {
        write_output(&layout.log(&self.command), |w| w.write_all(self.text.as_bytes()))?;
        let elapsed = self.started.elapsed();
        let stamp = SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0);
        let line = format!("{stamp} {} {:.3}s\n", self.command, elapsed.as_secs_f64());
        OpenOptions::new()
            .create(true)
            .append(true)
            .open(layout.timings())
            .and_then(|mut f| f.write_all(line.as_bytes()))
            .with_context(|| format!("cannot append to {}", layout.timings().display()))
            .code("io")
    }
}

fn open(path: &Path, what: &str) -> Result<BufReader<File>, Failure> {
    File::open(path)
        .map(|f| BufReader::with_capacity(1 << 20, f))
        .with_context(|| format!("{what}: cannot open {}", path.display()))
        .code("io")
}

fn load_corpus(m: &AuditManifest) -> Result<(BaselineCorpus, IngestLog), Failure> {
    let reader = open(&m.baseline, "baseline")?;
    load_baseline(reader)
        .with_context(|| format!("baseline {}", m.baseline.display()))
        .code("ingest")
}

fn select_sources<'a>(m: &'a AuditManifest, only: Option<&str>) -> Result<Vec<&'a SourceSpec>, Failure> {
    match only {
        Some(name) => match m.source(name) {
            Some(s) => Ok(vec![s]),
            None => fail("unknown-source", format!("no source named {name:?} in the manifest")),
        },
        None => Ok(m.sources.iter().collect()),
    }
}

fn select_golds<'a>(m: &'a AuditManifest, only: Option<&str>) -> Result<Vec<&'a GoldSpec>, Failure> {
    match only {
        Some(name) => match m.gold(name) {
            Some(g) => Ok(vec![g]),
            None => fail(
                "unknown-gold",
                format!("no gold standard named {name:?} in the manifest"),
            ),
        },
        None => Ok(m.golds.iter().collect()),
    }
}

fn persist(layout: &Layout, dataset: &SourceDataset, sidecar: &DatasetManifest) -> CmdResult {
    write_output(&layout.edges(sidecar.kind, &sidecar.name), |w| {
        write_edge_file(w, dataset.edges())
    })?;
    write_json(&layout.sidecar(sidecar.kind, &sidecar.name), sidecar)
}

fn load_artifact(layout: &Layout, kind: DatasetKind, name: &str) -> Result<(SourceDataset, DatasetManifest), Failure> {
    let label = match kind {
        DatasetKind::Source => "source",
        DatasetKind::Gold => "gold standard",
    };
    let (edges, sidecar) = (layout.edges(kind, name), layout.sidecar(kind, name));
    if !edges.exists() || !sidecar.exists() {
        return fail(
            "missing-artifact",
            format!(
                "{label} {name:?} has not been resolved ({} not found); run `citegauge resolve` first",
                edges.display()
            ),
        );
    }
    let meta: DatasetManifest = serde_json::from_reader(open(&sidecar, label)?)
        .with_context(|| format!("{label} {name:?}: unreadable sidecar {}", sidecar.display()))
        .code("corrupt-artifact")?;
    let dataset = read_edge_file(open(&edges, label)?, name)
        .with_context(|| format!("{label} {name:?}: {}", edges.display()))
        .code("corrupt-artifact")?;
    if dataset.counts() != meta.counts {
        return fail(
            "corrupt-artifact",
            format!("{label} {name:?}: edge file does not match its sidecar counts"),
        );
    }
    Ok((dataset, meta))
}

fn load_gold(layout: &Layout, name: &str) -> Result<GoldStandard, Failure> {
    let (dataset, meta) = load_artifact(layout, DatasetKind::Gold, name)?;
    Ok(GoldStandard::from_dataset(
        &dataset,
        meta.provenance.unwrap_or(Provenance::ExternalExport),
    ))
}

fn load_sources(layout: &Layout, specs: &[&SourceSpec]) -> Result<Vec<SourceDataset>, Failure> {
    specs
        .par_iter()
        .map(|s| load_artifact(layout, DatasetKind::Source, &s.name).map(|(d, _)| d))
        .collect()
}

fn resolve_source(spec: &SourceSpec, corpus: &BaselineCorpus) -> Result<(SourceDataset, DatasetManifest), Failure> {
    let mut reader = EdgeDumpReader::new(
        open(&spec.path, &format!("source {:?}", spec.name))?,
        spec.columns.clone(),
    );
    let (dataset, resolution) = resolve_edges(reader.by_ref(), corpus, &spec.name);
    let ingest = reader
        .finish()
        .with_context(|| format!("source {:?}: error reading {}", spec.name, spec.path.display()))
        .code("io")?;
    let mut sidecar = DatasetManifest::new(&spec.name, DatasetKind::Source, dataset.counts());
    sidecar.ingest = Some(ingest);
    sidecar.resolution = Some(resolution);
    Ok((dataset, sidecar))
}

fn build_gold(spec: &GoldSpec, corpus: &BaselineCorpus) -> Result<(SourceDataset, DatasetManifest), Failure> {
    let (gold, mut sidecar) = match &spec.input {
        GoldInput::Baseline => {
            let (gold, dangling) = extract_baseline_gold(corpus, &spec.name);
            let mut sidecar = DatasetManifest::new(&spec.name, DatasetKind::Gold, Default::default());
            sidecar.dangling_references = Some(dangling);
            (gold, sidecar)
        }
        GoldInput::Export {
            path,
            columns,
            delimiter,
        } => {
            let reader = open(path, &format!("gold {:?}", spec.name))?;
            let (refs, ingest) = load_reference_export(reader, columns, *delimiter)
                .with_context(|| format!("gold {:?}: {}", spec.name, path.display()))
                .code("ingest")?;
            let (gold, matching) = build_gold_standard(&refs, corpus, &spec.name);
            let mut sidecar = DatasetManifest::new(&spec.name, DatasetKind::Gold, Default::default());
            sidecar.ingest = Some(ingest);
            sidecar.matching = Some(matching);
            (gold, sidecar)
        }
    };
    let dataset = gold.to_dataset();
    sidecar.provenance = Some(gold.provenance());
    sidecar.counts = dataset.counts();
    Ok((dataset, sidecar))
}

/// Resolves every source (or one) and builds every gold standard.
pub fn resolve(m: &AuditManifest, only: Option<&str>) -> CmdResult {
    let sources = select_sources(m, only)?;
    let golds: Vec<&GoldSpec> = if only.is_some() {
        Vec::new()
    } else {
        m.golds.iter().collect()
    };
    if sources.is_empty() {
        log::warn!("manifest lists no sources; nothing to resolve");
        if golds.is_empty() {
            return Ok(());
        }
    }
    for s in &sources {
        if !s.path.is_file() {
            return fail(
                "io",
                format!("source {:?}: file not found: {}", s.name, s.path.display()),
            );
        }
    }

    let layout = Layout::new(&m.output_dir);
    let mut run = RunLog::new("resolve");
    let (corpus, baseline_log) = load_corpus(m)?;
    run.info(format!(
        "baseline: {} documents, {} articles or reviews, {} records rejected",
        corpus.len(),
        corpus.article_or_review_count(),
        baseline_log.rejected
    ));

    let resolved: Vec<_> = sources.par_iter().map(|s| resolve_source(s, &corpus)).collect();
    for result in resolved {
        let (dataset, sidecar) = result?;
        persist(&layout, &dataset, &sidecar)?;
        let (ingest, res) = (sidecar.ingest.as_ref().unwrap(), sidecar.resolution.unwrap());
        run.info(format!(
            "source {}: {} lines, {} rejected, {} kept, {} unresolved, {} self-loops, {} duplicates; {} documents",
            sidecar.name,
            ingest.total(),
            ingest.rejected,
            res.kept,
            res.endpoint_unresolved,
            res.self_loop_dropped,
            res.duplicate_merged,
            sidecar.counts.covered_docs
        ));
        if dataset.edges().is_empty() {
            run.warn(format!("source {}: no edge resolved onto the baseline", sidecar.name));
        }
    }

    for spec in golds {
        let (dataset, sidecar) = build_gold(spec, &corpus)?;
        persist(&layout, &dataset, &sidecar)?;
        run.info(format!(
            "gold {}: {} documents, {} references",
            sidecar.name, sidecar.counts.covered_docs, sidecar.counts.edges
        ));
        if dataset.edges().is_empty() {
            run.warn(format!("gold {}: empty gold standard", sidecar.name));
        }
    }
    run.finish(&layout)
}

/// Scores sources against gold standards, one report and one per-year table
/// per pair.
pub fn evaluate_cmd(m: &AuditManifest, source: Option<&str>, gold: Option<&str>) -> CmdResult {
    let sources = select_sources(m, source)?;
    let golds = select_golds(m, gold)?;
    if sources.is_empty() || golds.is_empty() {
        log::warn!("manifest needs at least one source and one gold standard to evaluate");
        return Ok(());
    }
    let layout = Layout::new(&m.output_dir);
    let mut run = RunLog::new("evaluate");
    let datasets = load_sources(&layout, &sources)?;
    let gold_sets = golds
        .iter()
        .map(|g| load_gold(&layout, &g.name))
        .collect::<Result<Vec<_>, _>>()?;
    let (corpus, _) = load_corpus(m)?;

    let pairs: Vec<(&GoldStandard, &SourceDataset)> = gold_sets
        .iter()
        .flat_map(|g| datasets.iter().map(move |s| (g, s)))
        .collect();
    let results: Vec<_> = pairs
        .par_iter()
        .map(|(g, s)| {
            let context = || format!("evaluating {:?} against {:?}", s.name(), g.name());
            let whole = evaluate(s, g, &corpus).with_context(context).code("evaluation")?;
            let by_year = temporal_breakdown(s, g, &corpus)
                .with_context(context)
                .code("evaluation")?;
            Ok::<_, Failure>((whole, by_year))
        })
        .collect();
    for result in results {
        let (whole, by_year) = result?;
        let (g, s) = (&whole.gold_name, &whole.source_name);
        write_output(&layout.evaluation(g, s, "report.json"), |w| {
            write_evaluation_json(w, &whole)
        })?;
        write_output(&layout.evaluation(g, s, "temporal.csv"), |w| {
            write_temporal_csv(w, &by_year)
        })?;
        run.info(format!(
            "{s} vs {g}: {} of {} gold documents covered, {} exact",
            whole.covered_doc_count, whole.gold_docs, whole.exact_doc_count
        ));
        if !whole.metrics_defined {
            run.warn(format!("{s} vs {g}: no gold document is covered; metrics undefined"));
        }
    }
    run.finish(&layout)
}

fn require_sources(m: &AuditManifest) -> Result<Vec<&SourceSpec>, Failure> {
    if m.sources.len() < 2 {
        return fail(
            "too-few-sources",
            format!("need at least 2 sources, manifest lists {}", m.sources.len()),
        );
    }
    Ok(m.sources.iter().collect())
}

/// Exclusive partition and containment table over all sources.
pub fn overlap(m: &AuditManifest, level: Level) -> CmdResult {
    let specs = require_sources(m)?;
    let layout = Layout::new(&m.output_dir);
    let mut run = RunLog::new(format!("overlap.{}", level.as_str()));
    let datasets = load_sources(&layout, &specs)?;
    let refs: Vec<&SourceDataset> = datasets.iter().collect();
    let partition = exclusive_partition(&refs, level).code("too-many-sources")?;
    let containment = pairwise_containment(&refs, level).code("too-many-sources")?;
    write_output(&layout.overlap(level, "partition"), |w| {
        write_partition_csv(w, &partition)
    })?;
    write_output(&layout.overlap(level, "containment"), |w| {
        write_containment_csv(w, &containment)
    })?;
    run.info(format!(
        "{} level: {} elements in the union, {} non-empty subsets",
        level.as_str(),
        partition.universe_size,
        partition.cells.len()
    ));
    for name in containment.empty_rows() {
        run.warn(format!(
            "source {name} is empty at the {} level; its row is undefined",
            level.as_str()
        ));
    }
    run.finish(&layout)
}

#[derive(Serialize)]
struct CorrelationFile<'a> {
    sources: &'a [String],
    shared_docs: u64,
    values: &'a [Vec<Option<f64>>],
}

/// Spearman correlation of citation counts between sources.
pub fn correlate(m: &AuditManifest) -> CmdResult {
    let specs = require_sources(m)?;
    let layout = Layout::new(&m.output_dir);
    let mut run = RunLog::new("correlate");
    let datasets = load_sources(&layout, &specs)?;
    let refs: Vec<&SourceDataset> = datasets.iter().collect();
    let matrix = correlation_matrix(&refs).code("too-many-sources")?;
    write_output(&layout.correlation("csv"), |w| write_correlation_csv(w, &matrix))?;
    write_json(
        &layout.correlation("json"),
        &CorrelationFile {
            sources: &matrix.sources,
            shared_docs: matrix.shared_docs,
            values: &matrix.values,
        },
    )?;
    run.info(format!("{} documents cited in every source", matrix.shared_docs));
    if matrix.values.iter().flatten().any(Option::is_none) {
        run.warn("some pairs have no defined correlation".to_string());
    }
    run.finish(&layout)
}

/// Stratified candidate sample for an externally collected gold standard.
pub fn sample(m: &AuditManifest, seed: Option<u64>) -> CmdResult {
    let Some(range) = m.year_range else {
        return fail(
            "no-year-range",
            "sampling needs `year_range` in the manifest".to_string(),
        );
    };
    let seed = seed.unwrap_or(m.seed);
    let layout = Layout::new(&m.output_dir);
    let mut run = RunLog::new("sample");
    let (corpus, _) = load_corpus(m)?;
    let drawn = sample_gold_candidates(&corpus, range, m.per_year, seed).code("sample")?;
    write_output(&layout.sample("candidates.txt"), |w| {
        drawn.keys.iter().try_for_each(|k| writeln!(w, "{k}"))
    })?;
    write_output(&layout.sample("strata.csv"), |w| {
        writeln!(w, "year,eligible,sampled")?;
        drawn
            .strata
            .iter()
            .try_for_each(|(y, c)| writeln!(w, "{y},{},{}", c.eligible, c.sampled))
    })?;
    run.info(format!(
        "seed {seed}: {} candidates over {}-{}, {} per year",
        drawn.keys.len(),
        range.0,
        range.1,
        m.per_year
    ));
    for year in drawn.empty_strata() {
        run.warn(format!("no eligible documents for year {year}"));
    }
    run.finish(&layout)
}

/// Summary tables: source coverage, gold standards, and metrics per gold.
pub fn report(m: &AuditManifest) -> CmdResult {
    let layout = Layout::new(&m.output_dir);
    let mut run = RunLog::new("report");
    let specs: Vec<&SourceSpec> = m.sources.iter().collect();
    let datasets = load_sources(&layout, &specs)?;
    let gold_sets = m
        .golds
        .iter()
        .map(|g| load_gold(&layout, &g.name))
        .collect::<Result<Vec<_>, _>>()?;
    let (corpus, _) = load_corpus(m)?;

    let mut rows: Vec<CoverageRow> = datasets
        .iter()
        .map(|d| CoverageRow {
            name: d.name().to_string(),
            counts: d.counts(),
        })
        .collect();
    if datasets.len() > 1 {
        let combined = SourceDataset::union("Combined", &datasets);
        rows.push(CoverageRow {
            name: "Combined".to_string(),
            counts: combined.counts(),
        });
    }
    let (docs, eligible) = (corpus.len() as u64, corpus.article_or_review_count() as u64);
    write_output(&layout.report("coverage.csv"), |w| {
        write_coverage_table(w, &rows, docs, eligible)
    })?;
    write_output(&layout.report("golds.csv"), |w| {
        writeln!(w, "gold,documents,references,avg_references")?;
        gold_sets.iter().try_for_each(|g| {
            let (n, refs) = (g.len(), g.reference_count());
            let avg = if n == 0 {
                "NA".to_string()
            } else {
                round_half_up(refs as f64 / n as f64, 1)
            };
            writeln!(w, "{},{n},{refs},{avg}", g.name())
        })
    })?;
    run.info(format!(
        "coverage table: {} rows over {docs} documents ({eligible} articles or reviews)",
        rows.len()
    ));

    for gold in &gold_sets {
        if datasets.is_empty() || gold.is_empty() {
            continue;
        }
        let reports: Vec<EvaluationReport> = datasets
            .par_iter()
            .map(|s| {
                evaluate(s, gold, &corpus)
                    .with_context(|| format!("evaluating {:?} against {:?}", s.name(), gold.name()))
                    .code("evaluation")
            })
            .collect::<Result<_, _>>()?;
        write_output(&layout.report(&format!("metrics.{}.csv", gold.name())), |w| {
            write_metrics_table(w, &reports)
        })?;
        run.info(format!(
            "metrics table for gold {}: {} sources",
            gold.name(),
            reports.len()
        ));
    }
    run.finish(&layout)
}
