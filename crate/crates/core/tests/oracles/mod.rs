//! Brute-force reference implementations and fixture generators shared by the
//! integration tests and the acceptance suite. Everything here favours
//! obviousness over speed.

#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet, HashSet};

use citegauge::corpus::{
    normalize_doi, normalize_title, BaselineCorpus, CitationEdge, DocKey, Document, Issn, PubType, SourceDataset,
    VenueKey,
};
use citegauge::ingest::RawReference;
use citegauge::linkage::{Criterion, GoldStandard, MatchOutcome, MatchResult, Provenance};
use citegauge::setops::Level;
use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn key(v: u64) -> DocKey {
    DocKey::new(v).unwrap()
}

pub fn edge(a: u64, b: u64) -> CitationEdge {
    CitationEdge::new(key(a), key(b)).unwrap()
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

// ---------------------------------------------------------------- metrics

/// A corpus with one source and one gold standard over it.
pub struct MetricsCase {
    pub corpus: BaselineCorpus,
    pub source: SourceDataset,
    pub gold: GoldStandard,
}

/// Random case with at most `max_docs` documents and `max_edges` source edges.
/// Source reference lists are perturbations of the gold lists so that exact,
/// partial, disjoint and uncovered documents all occur.
pub fn random_metrics_case(rng: &mut ChaCha8Rng, max_docs: usize, max_edges: usize) -> MetricsCase {
    let n = rng.gen_range(2..=max_docs);
    let mut keys: Vec<u64> = rand::seq::index::sample(rng, 20 * max_docs, n)
        .into_iter()
        .map(|i| i as u64 + 1)
        .collect();
    keys.sort_unstable();

    let mut corpus = BaselineCorpus::new();
    for &k in &keys {
        let mut doc = Document::new(key(k));
        doc.year = rng.gen_bool(0.9).then(|| rng.gen_range(2000..2006));
        if rng.gen_bool(0.8) {
            doc.pub_types.insert(if rng.gen_bool(0.8) {
                PubType::JournalArticle
            } else {
                PubType::Review
            });
        }
        corpus.insert(doc).unwrap();
    }

    let pick_other = |rng: &mut ChaCha8Rng, citing: u64| loop {
        let c = *keys.choose(rng).unwrap();
        if c != citing {
            return c;
        }
    };

    let mut gold = BTreeMap::new();
    let mut source_edges = Vec::new();
    for &citing in &keys {
        if source_edges.len() >= max_edges {
            break;
        }
        let in_gold = rng.gen_bool(0.5);
        let gold_refs: Vec<u64> = if in_gold {
            let len = rng.gen_range(1..=12);
            let mut refs: Vec<u64> = (0..len).map(|_| pick_other(rng, citing)).collect();
            refs.sort_unstable();
            refs.dedup();
            gold.insert(key(citing), refs.iter().map(|r| key(*r)).collect::<Vec<_>>());
            refs
        } else {
            Vec::new()
        };
        let source_refs: Vec<u64> = match rng.gen_range(0..5) {
            0 => Vec::new(),
            1 => gold_refs.clone(),
            2 => (0..rng.gen_range(1..=10)).map(|_| pick_other(rng, citing)).collect(),
            _ => {
                let mut refs: Vec<u64> = gold_refs.iter().copied().filter(|_| rng.gen_bool(0.7)).collect();
                refs.extend((0..rng.gen_range(0..4)).map(|_| pick_other(rng, citing)));
                refs
            }
        };
        let room = max_edges - source_edges.len();
        source_edges.extend(source_refs.into_iter().take(room).map(|r| edge(citing, r)));
    }
    if gold.is_empty() {
        let (a, b) = (keys[0], keys[1]);
        gold.insert(key(a), vec![key(b)]);
    }
    MetricsCase {
        corpus,
        source: SourceDataset::from_edges("source", source_edges),
        gold: GoldStandard::new("gold", Provenance::ExternalExport, gold).unwrap(),
    }
}

/// Metrics recomputed from the definitions with hash sets and plain sums.
#[derive(Debug, Clone, PartialEq)]
pub struct NaiveMetrics {
    pub gold_coverage: f64,
    pub covered: usize,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub accuracy: f64,
}

pub fn naive_metrics(source: &SourceDataset, gold: &GoldStandard) -> NaiveMetrics {
    let mut per_doc = Vec::new();
    for (doc, gold_refs) in gold.iter() {
        let provided: HashSet<DocKey> = source
            .edges()
            .iter()
            .filter(|e| e.citing == doc)
            .map(|e| e.cited)
            .collect();
        if provided.is_empty() {
            continue;
        }
        let truth: HashSet<DocKey> = gold_refs.iter().copied().collect();
        let tp = provided.intersection(&truth).count() as f64;
        let fp = provided.difference(&truth).count() as f64;
        let fn_ = truth.difference(&provided).count() as f64;
        let p = tp / (tp + fp);
        let r = tp / (tp + fn_);
        let f1 = if p + r == 0.0 { 0.0 } else { 2.0 * p * r / (p + r) };
        per_doc.push((p, r, f1, provided == truth));
    }
    let n = per_doc.len();
    let mean = |values: Vec<f64>| {
        if n == 0 {
            0.0
        } else {
            values.iter().sum::<f64>() / n as f64
        }
    };
    NaiveMetrics {
        gold_coverage: n as f64 / gold.len() as f64,
        covered: n,
        precision: mean(per_doc.iter().map(|d| d.0).collect()),
        recall: mean(per_doc.iter().map(|d| d.1).collect()),
        f1: mean(per_doc.iter().map(|d| d.2).collect()),
        accuracy: mean(per_doc.iter().map(|d| if d.3 { 1.0 } else { 0.0 }).collect()),
    }
}

// ---------------------------------------------------------------- overlap

/// Element sets of one source at a level, as plain integers pairs.
pub fn elements(source: &SourceDataset, level: Level) -> BTreeSet<(u64, u64)> {
    match level {
        Level::Document => source.edges().iter().map(|e| (e.citing.get(), 0)).collect(),
        Level::Edge => source.edges().iter().map(|e| (e.citing.get(), e.cited.get())).collect(),
    }
}

/// `k` random sources over a shared pool so that every kind of overlap occurs;
/// at most `max_elements` edges each.
pub fn random_sources(rng: &mut ChaCha8Rng, k: usize, max_elements: usize) -> Vec<SourceDataset> {
    let docs = rng.gen_range(2..=400u64);
    let pool_size = rng.gen_range(1..=max_elements);
    let pool: Vec<CitationEdge> = (0..pool_size)
        .map(|_| loop {
            let (a, b) = (rng.gen_range(1..=docs), rng.gen_range(1..=docs));
            if a != b {
                return edge(a, b);
            }
        })
        .collect();
    (0..k)
        .map(|i| {
            let keep = rng.gen_range(0.0..1.0);
            let edges = pool
                .iter()
                .copied()
                .filter(|_| rng.gen_bool(keep))
                .take(max_elements)
                .collect();
            SourceDataset::from_edges(format!("s{i}"), edges)
        })
        .collect()
}

/// Membership vector of every element of the union, by direct lookup.
pub fn naive_membership(sources: &[&SourceDataset], level: Level) -> BTreeMap<(u64, u64), Vec<usize>> {
    let sets: Vec<BTreeSet<(u64, u64)>> = sources.iter().map(|s| elements(s, level)).collect();
    let universe: BTreeSet<(u64, u64)> = sets.iter().flatten().copied().collect();
    universe
        .into_iter()
        .map(|x| {
            let members = (0..sets.len()).filter(|i| sets[*i].contains(&x)).collect();
            (x, members)
        })
        .collect()
}

/// `|A ∩ B|` and `|A|` for every ordered pair, by nested membership checks.
pub fn naive_intersections(sources: &[&SourceDataset], level: Level) -> Vec<Vec<u64>> {
    let sets: Vec<BTreeSet<(u64, u64)>> = sources.iter().map(|s| elements(s, level)).collect();
    sets.iter()
        .map(|a| {
            sets.iter()
                .map(|b| a.iter().filter(|x| b.contains(x)).count() as u64)
                .collect()
        })
        .collect()
}

// ---------------------------------------------------------------- spearman

/// Average rank by counting: 1 + #smaller + (#equal - 1) / 2.
pub fn naive_ranks(values: &[f64]) -> Vec<f64> {
    values
        .iter()
        .map(|v| {
            let smaller = values.iter().filter(|w| *w < v).count() as f64;
            let equal = values.iter().filter(|w| *w == v).count() as f64;
            1.0 + smaller + (equal - 1.0) / 2.0
        })
        .collect()
}

/// Textbook Pearson correlation of the naive ranks.
pub fn naive_spearman(x: &[f64], y: &[f64]) -> Option<f64> {
    let (rx, ry) = (naive_ranks(x), naive_ranks(y));
    let n = x.len() as f64;
    let mx = rx.iter().sum::<f64>() / n;
    let my = ry.iter().sum::<f64>() / n;
    let cov: f64 = rx.iter().zip(&ry).map(|(a, b)| (a - mx) * (b - my)).sum();
    let vx: f64 = rx.iter().map(|a| (a - mx).powi(2)).sum();
    let vy: f64 = ry.iter().map(|b| (b - my).powi(2)).sum();
    (vx > 0.0 && vy > 0.0).then(|| cov / (vx * vy).sqrt())
}

/// A random vector of length `n`; `distinct` caps the number of different
/// values so heavy ties appear.
pub fn random_vector(rng: &mut ChaCha8Rng, n: usize, distinct: u32) -> Vec<f64> {
    (0..n).map(|_| f64::from(rng.gen_range(0..distinct))).collect()
}

// ---------------------------------------------------------------- matching

/// Applies the three criteria by scanning every document, without indexes.
pub fn brute_force_match(reference: &RawReference, docs: &[Document]) -> MatchOutcome {
    let unique = |hits: Vec<DocKey>| if hits.len() == 1 { Some(hits[0]) } else { None };

    let by_pmid = reference
        .ref_pmid
        .as_deref()
        .and_then(|p| p.trim().parse::<u64>().ok())
        .and_then(|p| docs.iter().find(|d| d.key.get() == p))
        .map(|d| d.key);
    let by_doi = reference
        .ref_doi
        .as_deref()
        .and_then(|d| normalize_doi(d).ok())
        .and_then(|doi| docs.iter().find(|d| d.doi.as_ref() == Some(&doi)))
        .map(|d| d.key);
    let conflict = matches!((by_pmid, by_doi), (Some(a), Some(b)) if a != b);
    if !conflict {
        if let Some(k) = by_pmid.or(by_doi) {
            return MatchOutcome {
                result: MatchResult::Matched(k),
                criterion: Criterion::Identifier,
            };
        }
    }

    let venue = VenueKey::from_raw(
        reference.ref_venue_issn.as_deref(),
        reference.ref_year,
        reference.ref_volume.as_deref(),
        reference.ref_start_page.as_deref(),
    );
    if let Some(venue) = venue {
        let hits = docs
            .iter()
            .filter(|d| d.venue_key().as_ref() == Some(&venue))
            .map(|d| d.key)
            .collect();
        if let Some(k) = unique(hits) {
            return MatchOutcome {
                result: MatchResult::Matched(k),
                criterion: Criterion::Composite,
            };
        }
    }

    let title = reference.ref_title.as_deref().and_then(|t| normalize_title(t).ok());
    if let (Some(title), Some(year)) = (title, reference.ref_year) {
        let hits = docs
            .iter()
            .filter(|d| d.year == Some(year) && normalize_title(&d.title).ok().as_ref() == Some(&title))
            .map(|d| d.key)
            .collect();
        if let Some(k) = unique(hits) {
            return MatchOutcome {
                result: MatchResult::Matched(k),
                criterion: Criterion::TitleYear,
            };
        }
    }
    MatchOutcome {
        result: MatchResult::NoMatch,
        criterion: Criterion::None,
    }
}

fn doc(k: u64, title: &str, year: i32, venue: Option<(&str, &str, &str)>, doi: Option<&str>) -> Document {
    let mut d = Document::new(key(k));
    d.title = title.to_string();
    d.year = Some(year);
    d.doi = doi.map(|x| normalize_doi(x).unwrap());
    if let Some((issn, volume, page)) = venue {
        d.venue_issn = Issn::parse(issn);
        d.volume = Some(volume.to_string());
        d.start_page = Some(page.to_string());
    }
    d.pub_types.insert(PubType::JournalArticle);
    d
}

/// The hand-built matching fixture: a small corpus plus labelled references
/// with their expected outcomes.
pub struct MatchingFixture {
    pub docs: Vec<Document>,
    pub corpus: BaselineCorpus,
    pub cases: Vec<(&'static str, RawReference, Option<u64>, Criterion)>,
}

#[derive(Default)]
struct Ref {
    pmid: Option<&'static str>,
    doi: Option<&'static str>,
    title: Option<&'static str>,
    year: Option<i32>,
    venue: Option<(&'static str, &'static str, &'static str)>,
}

impl Ref {
    fn build(self) -> RawReference {
        let mut r = RawReference::new(key(1000));
        r.ref_pmid = self.pmid.map(str::to_string);
        r.ref_doi = self.doi.map(str::to_string);
        r.ref_title = self.title.map(str::to_string);
        r.ref_year = self.year;
        if let Some((issn, volume, page)) = self.venue {
            r.ref_venue_issn = Some(issn.to_string());
            r.ref_volume = Some(volume.to_string());
            r.ref_start_page = Some(page.to_string());
        }
        r
    }
}

pub fn matching_fixture() -> MatchingFixture {
    const J1: &str = "0138-9130";
    const J2: &str = "2049-3630";
    const J3: &str = "2434-561X";
    let docs = vec![
        doc(1, "alpha study", 2001, Some((J1, "10", "100")), Some("10.1000/a")),
        doc(2, "beta study", 2002, Some((J1, "11", "5")), Some("10.1000/b")),
        doc(3, "shared title", 2003, Some((J2, "1", "1")), None),
        doc(4, "shared title", 2003, Some((J2, "1", "1")), None),
        doc(5, "unique gamma", 2003, Some((J2, "2", "7")), None),
        doc(6, "shared title", 2004, Some((J3, "3", "9")), None),
        doc(7, "shared title", 2004, Some((J3, "3", "10")), None),
        doc(8, "venue dup", 2005, Some((J1, "20", "1")), None),
        doc(9, "other venue dup", 2005, Some((J1, "20", "1")), None),
        doc(10, "delta", 2006, None, Some("10.1000/j")),
        doc(1000, "citing document", 2010, None, None),
    ];
    let mut corpus = BaselineCorpus::new();
    for d in &docs {
        corpus.insert(d.clone()).unwrap();
    }
    use Criterion::{Composite, Identifier, TitleYear};
    let v5 = Some((J2, "2", "7"));
    let v34 = Some((J2, "1", "1"));
    let v89 = Some((J1, "20", "1"));
    let cases = vec![
        (
            "pmid alone",
            Ref {
                pmid: Some("1"),
                ..Default::default()
            },
            Some(1),
            Identifier,
        ),
        (
            "doi with resolver prefix",
            Ref {
                doi: Some("https://doi.org/10.1000/B"),
                ..Default::default()
            },
            Some(2),
            Identifier,
        ),
        (
            "pmid and doi agree",
            Ref {
                pmid: Some("1"),
                doi: Some("10.1000/a"),
                ..Default::default()
            },
            Some(1),
            Identifier,
        ),
        (
            "identifier beats venue and title",
            Ref {
                pmid: Some("1"),
                title: Some("Unique gamma"),
                year: Some(2003),
                venue: v5,
                ..Default::default()
            },
            Some(1),
            Identifier,
        ),
        (
            "pmid beats another document's title",
            Ref {
                pmid: Some("6"),
                title: Some("Unique gamma"),
                year: Some(2003),
                ..Default::default()
            },
            Some(6),
            Identifier,
        ),
        (
            "identifier conflict alone",
            Ref {
                pmid: Some("2"),
                doi: Some("10.1000/a"),
                ..Default::default()
            },
            None,
            Criterion::None,
        ),
        (
            "identifier conflict falls to title",
            Ref {
                pmid: Some("2"),
                doi: Some("10.1000/a"),
                title: Some("Unique gamma"),
                year: Some(2003),
                ..Default::default()
            },
            Some(5),
            TitleYear,
        ),
        (
            "identifier conflict falls to venue",
            Ref {
                pmid: Some("2"),
                doi: Some("10.1000/a"),
                year: Some(2003),
                venue: v5,
                ..Default::default()
            },
            Some(5),
            Composite,
        ),
        (
            "unknown pmid falls to venue",
            Ref {
                pmid: Some("999"),
                year: Some(2001),
                venue: Some((J1, "10", "100")),
                ..Default::default()
            },
            Some(1),
            Composite,
        ),
        (
            "invalid pmid, doi decides",
            Ref {
                pmid: Some("abc"),
                doi: Some("doi:10.1000/J"),
                ..Default::default()
            },
            Some(10),
            Identifier,
        ),
        (
            "ambiguous venue falls to unique title",
            Ref {
                title: Some("Unique gamma"),
                year: Some(2003),
                venue: v34,
                ..Default::default()
            },
            Some(5),
            TitleYear,
        ),
        (
            "ambiguous venue and ambiguous title",
            Ref {
                title: Some("Shared title"),
                year: Some(2003),
                venue: v34,
                ..Default::default()
            },
            None,
            Criterion::None,
        ),
        (
            "title shared by two documents",
            Ref {
                title: Some("Shared title"),
                year: Some(2004),
                ..Default::default()
            },
            None,
            Criterion::None,
        ),
        (
            "venue disambiguates shared title",
            Ref {
                title: Some("Shared title"),
                year: Some(2004),
                venue: Some((J3, "3", "10")),
                ..Default::default()
            },
            Some(7),
            Composite,
        ),
        (
            "ambiguous venue, unique title",
            Ref {
                title: Some("Venue dup"),
                year: Some(2005),
                venue: v89,
                ..Default::default()
            },
            Some(8),
            TitleYear,
        ),
        (
            "ambiguous venue, nothing else",
            Ref {
                year: Some(2005),
                venue: v89,
                ..Default::default()
            },
            None,
            Criterion::None,
        ),
        (
            "title normalization",
            Ref {
                title: Some("  ALPHA   Study! "),
                year: Some(2001),
                ..Default::default()
            },
            Some(1),
            TitleYear,
        ),
        (
            "title with wrong year",
            Ref {
                title: Some("Alpha study"),
                year: Some(2002),
                ..Default::default()
            },
            None,
            Criterion::None,
        ),
        (
            "invalid issn check digit",
            Ref {
                year: Some(2001),
                venue: Some(("0138-9131", "10", "100")),
                ..Default::default()
            },
            None,
            Criterion::None,
        ),
        (
            "locator normalization",
            Ref {
                year: Some(2001),
                venue: Some(("0138 9130", "010", "pp. 100-110")),
                ..Default::default()
            },
            Some(1),
            Composite,
        ),
        (
            "malformed doi falls to title",
            Ref {
                doi: Some("not-a-doi"),
                title: Some("Delta"),
                year: Some(2006),
                ..Default::default()
            },
            Some(10),
            TitleYear,
        ),
        (
            "unknown identifiers only",
            Ref {
                pmid: Some("999"),
                doi: Some("10.1000/zzz"),
                ..Default::default()
            },
            None,
            Criterion::None,
        ),
        (
            "incomplete venue falls to title",
            Ref {
                title: Some("Beta study"),
                year: Some(2002),
                venue: Some((J1, "11", "")),
                ..Default::default()
            },
            Some(2),
            TitleYear,
        ),
        (
            "year only",
            Ref {
                year: Some(2001),
                ..Default::default()
            },
            None,
            Criterion::None,
        ),
        (
            "title without year",
            Ref {
                title: Some("Alpha study"),
                ..Default::default()
            },
            None,
            Criterion::None,
        ),
    ]
    .into_iter()
    .map(|(label, r, expected, criterion)| (label, r.build(), expected, criterion))
    .collect();
    MatchingFixture { docs, corpus, cases }
}
