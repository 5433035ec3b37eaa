//! Record linkage onto the baseline: resolving dump edges by identifier,
//! matching exported references by identifier, venue locator or title, and
//! building gold standards from the results.

use std::collections::BTreeMap;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{
    normalize_doi, normalize_title, BaselineCorpus, CitationEdge, CompositeKey, DocKey, SourceDataset, VenueKey,
};
use crate::ingest::{RawEdge, RawReference, Scheme};

#[derive(Error, Debug, Clone, PartialEq, Eq)]
pub enum LinkageError {
    #[error("gold standard entry for document {0} has no references")]
    EmptyReferenceSet(DocKey),
    #[error("document {0} is not in the baseline")]
    UnknownDocument(DocKey),
    #[error("per_year must be at least 1")]
    ZeroPerYear,
    #[error("year range {0}..={1} is empty")]
    EmptyYearRange(i32, i32),
}

/// Outcome counts of [`resolve_edges`]. The four outcome counters always sum
/// to `input`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ResolutionLog {
    pub input: u64,
    pub kept: u64,
    pub endpoint_unresolved: u64,
    pub self_loop_dropped: u64,
    pub duplicate_merged: u64,
}

fn resolve_endpoint(scheme: Scheme, id: &str, corpus: &BaselineCorpus) -> Option<DocKey> {
    match scheme {
        Scheme::Pmid => DocKey::parse(id).filter(|k| corpus.contains(*k)),
        Scheme::Doi => normalize_doi(id).ok().and_then(|d| corpus.lookup_doi(&d)),
    }
}

/// Resolves raw edges onto the baseline. An edge is kept when both endpoints
/// resolve to distinct documents; the kept set is deduplicated.
pub fn resolve_edges<I>(raw_edges: I, corpus: &BaselineCorpus, name: &str) -> (SourceDataset, ResolutionLog)
where
    I: IntoIterator<Item = RawEdge>,
{
    let mut log = ResolutionLog::default();
    let mut edges = Vec::new();
    for raw in raw_edges {
        log.input += 1;
        let citing = resolve_endpoint(raw.citing_scheme, &raw.citing_id, corpus);
        let cited = resolve_endpoint(raw.cited_scheme, &raw.cited_id, corpus);
        match (citing, cited) {
            (Some(citing), Some(cited)) => match CitationEdge::new(citing, cited) {
                Ok(edge) => edges.push(edge),
                Err(_) => log.self_loop_dropped += 1,
            },
            _ => log.endpoint_unresolved += 1,
        }
    }
    let resolved = edges.len() as u64;
    let dataset = SourceDataset::from_edges(name, edges);
    log.kept = dataset.edges().len() as u64;
    log.duplicate_merged = resolved - log.kept;
    (dataset, log)
}

/// Encodes resolved edges back into PMID-to-PMID raw edges.
pub fn to_raw_edges(dataset: &SourceDataset) -> impl Iterator<Item = RawEdge> + '_ {
    dataset.edges().iter().enumerate().map(|(i, e)| RawEdge {
        citing_scheme: Scheme::Pmid,
        citing_id: e.citing.to_string(),
        cited_scheme: Scheme::Pmid,
        cited_id: e.cited.to_string(),
        source_line: i as u64 + 1,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MatchResult {
    Matched(DocKey),
    NoMatch,
    Ambiguous,
}

/// Which rule produced a match.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Criterion {
    /// Same PMID or DOI.
    Identifier,
    /// Same venue locator (ISSN, volume, year, start page), or the five-field
    /// composite including first author.
    Composite,
    /// Same normalized title and year, with exactly one candidate.
    TitleYear,
    None,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MatchOutcome {
    pub result: MatchResult,
    pub criterion: Criterion,
}

impl MatchOutcome {
    fn matched(key: DocKey, criterion: Criterion) -> Self {
        MatchOutcome {
            result: MatchResult::Matched(key),
            criterion,
        }
    }

    const NO_MATCH: MatchOutcome = MatchOutcome {
        result: MatchResult::NoMatch,
        criterion: Criterion::None,
    };
    const AMBIGUOUS: MatchOutcome = MatchOutcome {
        result: MatchResult::Ambiguous,
        criterion: Criterion::None,
    };

    pub fn key(&self) -> Option<DocKey> {
        match self.result {
            MatchResult::Matched(k) => Some(k),
            _ => None,
        }
    }
}

/// The five bibliographic fields of a composite match, as raw text.
#[derive(Debug, Clone, Copy, Default)]
pub struct CompositeFields<'a> {
    pub first_author_last: Option<&'a str>,
    pub venue_issn: Option<&'a str>,
    pub year: Option<i32>,
    pub volume: Option<&'a str>,
    pub start_page: Option<&'a str>,
}

/// Matches a record to the baseline on all five composite fields.
///
/// Any missing field (or an ISSN failing its check digit) is a no-match
/// without lookup; two or more agreeing documents are ambiguous.
pub fn match_by_composite(fields: &CompositeFields<'_>, corpus: &BaselineCorpus) -> MatchOutcome {
    let Some(key) = CompositeKey::from_raw(
        fields.first_author_last,
        fields.venue_issn,
        fields.year,
        fields.volume,
        fields.start_page,
    ) else {
        return MatchOutcome::NO_MATCH;
    };
    match corpus.lookup_composite(&key) {
        [] => MatchOutcome::NO_MATCH,
        [only] => MatchOutcome::matched(*only, Criterion::Composite),
        _ => MatchOutcome::AMBIGUOUS,
    }
}

/// What happened on the way to a [`MatchOutcome`], for logging.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct MatchTrace {
    pub identifier_conflict: bool,
    pub venue_ambiguous: bool,
    pub title_ambiguous: bool,
}

/// Applies the identifier, venue-locator and title-year criteria in order.
pub fn match_reference(reference: &RawReference, corpus: &BaselineCorpus) -> MatchOutcome {
    match_reference_traced(reference, corpus).0
}

pub fn match_reference_traced(reference: &RawReference, corpus: &BaselineCorpus) -> (MatchOutcome, MatchTrace) {
    let mut trace = MatchTrace::default();

    let by_pmid = reference
        .ref_pmid
        .as_deref()
        .and_then(|p| resolve_endpoint(Scheme::Pmid, p, corpus));
    let by_doi = reference
        .ref_doi
        .as_deref()
        .and_then(|d| resolve_endpoint(Scheme::Doi, d, corpus));
    match (by_pmid, by_doi) {
        (Some(a), Some(b)) if a != b => trace.identifier_conflict = true,
        (Some(k), _) | (None, Some(k)) => return (MatchOutcome::matched(k, Criterion::Identifier), trace),
        (None, None) => {}
    }

    if let Some(venue) = VenueKey::from_raw(
        reference.ref_venue_issn.as_deref(),
        reference.ref_year,
        reference.ref_volume.as_deref(),
        reference.ref_start_page.as_deref(),
    ) {
        match corpus.lookup_venue(&venue) {
            [] => {}
            [only] => return (MatchOutcome::matched(*only, Criterion::Composite), trace),
            _ => trace.venue_ambiguous = true,
        }
    }

    if let (Some(title), Some(year)) = (reference.ref_title.as_deref(), reference.ref_year) {
        if let Ok(title) = normalize_title(title) {
            match corpus.lookup_title_year(&title, year) {
                [] => {}
                [only] => return (MatchOutcome::matched(*only, Criterion::TitleYear), trace),
                _ => trace.title_ambiguous = true,
            }
        }
    }

    (MatchOutcome::NO_MATCH, trace)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Provenance {
    BaselineShipped,
    ExternalExport,
}

/// Trusted per-document reference sets. Every entry is non-empty and sorted.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GoldStandard {
    name: String,
    provenance: Provenance,
    refs_by_doc: BTreeMap<DocKey, Vec<DocKey>>,
}

impl GoldStandard {
    /// Builds a gold standard, sorting and deduplicating every reference set.
    pub fn new(
        name: impl Into<String>,
        provenance: Provenance,
        refs_by_doc: BTreeMap<DocKey, Vec<DocKey>>,
    ) -> Result<Self, LinkageError> {
        let mut refs_by_doc = refs_by_doc;
        for (doc, refs) in refs_by_doc.iter_mut() {
            if refs.is_empty() {
                return Err(LinkageError::EmptyReferenceSet(*doc));
            }
            refs.sort_unstable();
            refs.dedup();
        }
        Ok(GoldStandard {
            name: name.into(),
            provenance,
            refs_by_doc,
        })
    }

    /// Rebuilds a gold standard from a resolved edge set.
    pub fn from_dataset(dataset: &SourceDataset, provenance: Provenance) -> Self {
        let refs_by_doc = dataset
            .by_citing()
            .map(|(doc, run)| (doc, run.iter().map(|e| e.cited).collect()))
            .collect();
        GoldStandard {
            name: dataset.name().to_string(),
            provenance,
            refs_by_doc,
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn provenance(&self) -> Provenance {
        self.provenance
    }

    /// Number of documents with a reference list.
    pub fn len(&self) -> usize {
        self.refs_by_doc.len()
    }

    pub fn is_empty(&self) -> bool {
        self.refs_by_doc.is_empty()
    }

    pub fn refs(&self, doc: DocKey) -> Option<&[DocKey]> {
        self.refs_by_doc.get(&doc).map(Vec::as_slice)
    }

    /// Documents with their sorted reference lists, ascending by key.
    pub fn iter(&self) -> impl Iterator<Item = (DocKey, &[DocKey])> {
        self.refs_by_doc.iter().map(|(k, v)| (*k, v.as_slice()))
    }

    pub fn reference_count(&self) -> usize {
        self.refs_by_doc.values().map(Vec::len).sum()
    }

    /// The gold standard as an edge set, for persistence and overlap analysis.
    pub fn to_dataset(&self) -> SourceDataset {
        let edges = self
            .iter()
            .flat_map(|(doc, refs)| refs.iter().map(move |r| CitationEdge { citing: doc, cited: *r }))
            .collect();
        SourceDataset::from_sorted(self.name.clone(), edges).expect("BTreeMap order with sorted refs is ascending")
    }

    pub fn validate_against(&self, corpus: &BaselineCorpus) -> Result<(), LinkageError> {
        for (doc, refs) in self.iter() {
            if !corpus.contains(doc) {
                return Err(LinkageError::UnknownDocument(doc));
            }
            if let Some(missing) = refs.iter().find(|r| !corpus.contains(**r)) {
                return Err(LinkageError::UnknownDocument(*missing));
            }
        }
        Ok(())
    }
}

/// Per-criterion and per-failure counts of [`build_gold_standard`].
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct MatchLog {
    pub references: u64,
    pub matched: BTreeMap<Criterion, u64>,
    pub no_match: u64,
    pub unknown_citing_key: u64,
    pub self_reference: u64,
    pub duplicate_merged: u64,
    pub identifier_conflicts: u64,
    pub venue_ambiguous: u64,
    pub title_ambiguous: u64,
    pub documents_without_matches: u64,
}

/// Matches exported references and groups them into a gold standard.
///
/// Documents whose references all fail to match are left out.
pub fn build_gold_standard(refs: &[RawReference], corpus: &BaselineCorpus, name: &str) -> (GoldStandard, MatchLog) {
    let outcomes: Vec<Option<(DocKey, MatchOutcome, MatchTrace)>> = refs
        .par_iter()
        .map(|r| {
            let citing = r.citing_key.filter(|k| corpus.contains(*k))?;
            let (outcome, trace) = match_reference_traced(r, corpus);
            Some((citing, outcome, trace))
        })
        .collect();

    let mut log = MatchLog {
        references: refs.len() as u64,
        ..Default::default()
    };
    let mut refs_by_doc: BTreeMap<DocKey, Vec<DocKey>> = BTreeMap::new();
    let mut seen_citing = std::collections::BTreeSet::new();
    for outcome in outcomes {
        let Some((citing, outcome, trace)) = outcome else {
            log.unknown_citing_key += 1;
            continue;
        };
        seen_citing.insert(citing);
        log.identifier_conflicts += u64::from(trace.identifier_conflict);
        log.venue_ambiguous += u64::from(trace.venue_ambiguous);
        log.title_ambiguous += u64::from(trace.title_ambiguous);
        match outcome.key() {
            Some(k) if k == citing => log.self_reference += 1,
            Some(k) => {
                *log.matched.entry(outcome.criterion).or_default() += 1;
                refs_by_doc.entry(citing).or_default().push(k);
            }
            None => log.no_match += 1,
        }
    }
    for list in refs_by_doc.values_mut() {
        let before = list.len();
        list.sort_unstable();
        list.dedup();
        log.duplicate_merged += (before - list.len()) as u64;
    }
    log.documents_without_matches = seen_citing.iter().filter(|k| !refs_by_doc.contains_key(k)).count() as u64;
    let gold = GoldStandard {
        name: name.to_string(),
        provenance: Provenance::ExternalExport,
        refs_by_doc,
    };
    (gold, log)
}

/// Builds the gold standard shipped inside the baseline itself. Returns the
/// number of dangling references (keys not in the corpus) that were dropped.
pub fn extract_baseline_gold(corpus: &BaselineCorpus, name: &str) -> (GoldStandard, u64) {
    let mut dangling = 0;
    let mut refs_by_doc = BTreeMap::new();
    for doc in corpus.documents() {
        let Some(refs) = &doc.baseline_refs else { continue };
        let mut kept: Vec<DocKey> = refs
            .iter()
            .copied()
            .filter(|r| {
                let ok = corpus.contains(*r);
                dangling += u64::from(!ok);
                ok
            })
            .collect();
        if !kept.is_empty() {
            kept.sort_unstable();
            refs_by_doc.insert(doc.key, kept);
        }
    }
    let gold = GoldStandard {
        name: name.to_string(),
        provenance: Provenance::BaselineShipped,
        refs_by_doc,
    };
    (gold, dangling)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct StratumCounts {
    pub eligible: u64,
    pub sampled: u64,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GoldSample {
    /// Sampled keys sorted by (year, key).
    pub keys: Vec<DocKey>,
    pub strata: BTreeMap<i32, StratumCounts>,
}

impl GoldSample {
    /// Years with no eligible document.
    pub fn empty_strata(&self) -> impl Iterator<Item = i32> + '_ {
        self.strata.iter().filter(|(_, c)| c.eligible == 0).map(|(y, _)| *y)
    }
}

/// The generator for one year stratum: ChaCha8 keyed by `seed`, on stream
/// number `year`. Strata never share random draws, so one year's sample does
/// not depend on another year's population.
pub fn stratum_rng(seed: u64, year: i32) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(year as u32 as u64);
    rng
}

/// Draws up to `per_year` candidate documents per publication year.
///
/// Eligible documents are journal articles or reviews with a year and without
/// baseline-shipped references. Each stratum is sorted by key before sampling
/// without replacement, so input order never affects the draw.
pub fn sample_gold_candidates(
    corpus: &BaselineCorpus,
    year_range: (i32, i32),
    per_year: usize,
    seed: u64,
) -> Result<GoldSample, LinkageError> {
    let (first, last) = year_range;
    if per_year == 0 {
        return Err(LinkageError::ZeroPerYear);
    }
    if first > last {
        return Err(LinkageError::EmptyYearRange(first, last));
    }
    let mut eligible: BTreeMap<i32, Vec<DocKey>> = (first..=last).map(|y| (y, Vec::new())).collect();
    for doc in corpus.documents() {
        let Some(year) = doc.year else { continue };
        if doc.baseline_refs.is_some() || !doc.is_article_or_review() {
            continue;
        }
        if let Some(stratum) = eligible.get_mut(&year) {
            stratum.push(doc.key);
        }
    }

    let mut keys = Vec::new();
    let mut strata = BTreeMap::new();
    for (year, mut pool) in eligible {
        pool.sort_unstable();
        let take = per_year.min(pool.len());
        let mut rng = stratum_rng(seed, year);
        let mut picked: Vec<DocKey> = rand::seq::index::sample(&mut rng, pool.len(), take)
            .into_iter()
            .map(|i| pool[i])
            .collect();
        picked.sort_unstable();
        if pool.is_empty() {
            log::warn!("no eligible documents for year {year}");
        }
        strata.insert(
            year,
            StratumCounts {
                eligible: pool.len() as u64,
                sampled: take as u64,
            },
        );
        keys.extend(picked);
    }
    Ok(GoldSample { keys, strata })
}
