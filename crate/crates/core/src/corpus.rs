//! Domain types shared by every stage of an audit: document keys, canonical
//! identifiers, baseline documents with their lookup indexes, citation edges
//! and resolved source datasets.
//!
//! Matching across datasets only works if every identifier is brought into a
//! single canonical form first, so the normalization functions live here next
//! to the types they produce.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Error, Debug, Clone, PartialEq, Eq)]
pub enum CorpusError {
    #[error("malformed DOI: {0:?}")]
    MalformedDoi(String),
    #[error("text is empty after normalization")]
    EmptyAfterNormalization,
    #[error("document key must be a positive integer, got {0}")]
    InvalidDocKey(u64),
    #[error("duplicate document key {0}")]
    DuplicateKey(DocKey),
    #[error("DOI {doi} already assigned to document {existing}, cannot assign to {new}")]
    DuplicateDoi { doi: Doi, existing: DocKey, new: DocKey },
    #[error("publication year {0} outside [1800, 2100]")]
    YearOutOfRange(i32),
    #[error("document {0} lists itself as a reference")]
    SelfReference(DocKey),
    #[error("document {doc} lists reference {reference} more than once")]
    DuplicateReference { doc: DocKey, reference: DocKey },
    #[error("edge list is not strictly ascending at position {0}")]
    UnsortedEdges(usize),
    #[error("self-citation edge on document {0}")]
    SelfLoop(DocKey),
}

/// Positive integer identifier of a baseline document (the PMID).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "u64", into = "u64")]
pub struct DocKey(u64);

impl DocKey {
    pub fn new(value: u64) -> Result<Self, CorpusError> {
        if value == 0 {
            Err(CorpusError::InvalidDocKey(value))
        } else {
            Ok(DocKey(value))
        }
    }

    pub fn get(self) -> u64 {
        self.0
    }

    /// Parses a decimal PMID, tolerating surrounding whitespace.
    pub fn parse(text: &str) -> Option<Self> {
        text.trim().parse::<u64>().ok().and_then(|v| DocKey::new(v).ok())
    }
}

impl TryFrom<u64> for DocKey {
    type Error = CorpusError;

    fn try_from(value: u64) -> Result<Self, Self::Error> {
        DocKey::new(value)
    }
}

impl From<DocKey> for u64 {
    fn from(key: DocKey) -> u64 {
        key.0
    }
}

impl fmt::Display for DocKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// A canonical DOI: lowercase, trimmed, without resolver prefix.
///
/// Only [`normalize_doi`] constructs one, so two `Doi` values denote the same
/// work exactly when they compare equal.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(transparent)]
pub struct Doi(String);

impl Doi {
    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for Doi {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

const DOI_PREFIXES: &[&str] = &[
    "https://doi.org/",
    "http://doi.org/",
    "https://dx.doi.org/",
    "http://dx.doi.org/",
    "doi.org/",
    "dx.doi.org/",
    "urn:doi:",
    "doi:",
];

/// Canonicalizes a raw DOI string.
///
/// The input is trimmed and lowercased, then one resolver prefix (`https://doi.org/`,
/// `doi:` and friends) is stripped. The result must look like
/// `10.<registrant>/<suffix>` with no whitespace.
///
/// ```
/// use citegauge::corpus::normalize_doi;
/// let doi = normalize_doi("https://doi.org/10.1007/S11192-016-2026-Y").unwrap();
/// assert_eq!(doi.as_str(), "10.1007/s11192-016-2026-y");
/// ```
pub fn normalize_doi(raw: &str) -> Result<Doi, CorpusError> {
    let lowered = raw.trim().to_lowercase();
    let mut body = lowered.as_str();
    for prefix in DOI_PREFIXES {
        if let Some(rest) = body.strip_prefix(prefix) {
            body = rest.trim_start();
            break;
        }
    }
    let body = body.trim();
    let malformed = || CorpusError::MalformedDoi(raw.to_string());
    let (prefix, suffix) = body.split_once('/').ok_or_else(malformed)?;
    let registrant = prefix.strip_prefix("10.").ok_or_else(malformed)?;
    if registrant.is_empty() || suffix.is_empty() || body.chars().any(char::is_whitespace) {
        return Err(malformed());
    }
    Ok(Doi(body.to_string()))
}

/// Case-folds a title, removes punctuation and collapses whitespace.
///
/// ```
/// use citegauge::corpus::normalize_title;
/// assert_eq!(
///     normalize_title("The  Expansion of Google Scholar.").unwrap(),
///     "the expansion of google scholar"
/// );
/// ```
pub fn normalize_title(raw: &str) -> Result<String, CorpusError> {
    let mut out = String::with_capacity(raw.len());
    let mut pending_space = false;
    for c in raw.chars().flat_map(char::to_lowercase) {
        if c.is_whitespace() {
            pending_space = true;
        } else if c.is_alphanumeric() {
            if pending_space && !out.is_empty() {
                out.push(' ');
            }
            pending_space = false;
            out.push(c);
        }
    }
    if out.is_empty() {
        Err(CorpusError::EmptyAfterNormalization)
    } else {
        Ok(out)
    }
}

/// Normalizes a volume or page value for exact comparison.
///
/// Page ranges keep their first page, a leading `p`/`pp` marker is dropped and
/// purely numeric values lose leading zeros, so `"pp. 007-19"` becomes `"7"`
/// while `"S12"` stays `"s12"`. Returns `None` when nothing is left.
pub fn normalize_locator(raw: &str) -> Option<String> {
    let mut value = raw.trim();
    if let Some((first, rest)) = value.split_once(['-', '\u{2013}']) {
        if !first.trim().is_empty() && !rest.trim().is_empty() {
            value = first.trim();
        }
    }
    let lowered = value.to_lowercase();
    let mut value = lowered.as_str();
    // Markers only count when a digit follows, so "pages" or "px1" survive.
    for marker in ["pp.", "pp", "p.", "p"] {
        if let Some(rest) = value.strip_prefix(marker) {
            let rest = rest.trim_start();
            if rest.starts_with(|c: char| c.is_ascii_digit()) {
                value = rest;
                break;
            }
        }
    }
    let value = value.trim();
    if value.is_empty() {
        return None;
    }
    if value.bytes().all(|b| b.is_ascii_digit()) {
        let stripped = value.trim_start_matches('0');
        return Some(if stripped.is_empty() { "0" } else { stripped }.to_string());
    }
    Some(value.to_string())
}

/// Case-folds and whitespace-collapses a personal name.
pub fn normalize_name(raw: &str) -> Option<String> {
    let folded: Vec<String> = raw.split_whitespace().map(str::to_lowercase).collect();
    if folded.is_empty() {
        None
    } else {
        Some(folded.join(" "))
    }
}

/// An ISSN stored hyphen-free and uppercase, with its check digit verdict.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
pub struct Issn {
    value: String,
    valid: bool,
}

impl Issn {
    /// Parses an ISSN. Anything non-empty is kept; `is_valid` reports whether it
    /// has eight characters and a correct check digit.
    pub fn parse(raw: &str) -> Option<Issn> {
        let value: String = raw
            .trim()
            .chars()
            .filter(|c| *c != '-' && !c.is_whitespace())
            .flat_map(char::to_uppercase)
            .collect();
        if value.is_empty() {
            return None;
        }
        let valid = issn_check_digit_ok(&value);
        Some(Issn { value, valid })
    }

    pub fn as_str(&self) -> &str {
        &self.value
    }

    pub fn is_valid(&self) -> bool {
        self.valid
    }
}

fn issn_check_digit_ok(value: &str) -> bool {
    let bytes = value.as_bytes();
    if bytes.len() != 8 || !bytes[..7].iter().all(u8::is_ascii_digit) {
        return false;
    }
    let sum: u32 = bytes[..7]
        .iter()
        .enumerate()
        .map(|(i, b)| u32::from(b - b'0') * (8 - i as u32))
        .sum();
    let check = (11 - sum % 11) % 11;
    match bytes[7] {
        b'X' => check == 10,
        b @ b'0'..=b'9' => u32::from(b - b'0') == check,
        _ => false,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PubType {
    JournalArticle,
    Review,
    Other,
}

impl PubType {
    pub fn parse(tag: &str) -> Option<PubType> {
        match tag {
            "journal-article" => Some(PubType::JournalArticle),
            "review" => Some(PubType::Review),
            "other" => Some(PubType::Other),
            _ => None,
        }
    }
}

/// One baseline record. Text fields used for matching are stored normalized.
#[derive(Debug, Clone, PartialEq)]
pub struct Document {
    pub key: DocKey,
    pub doi: Option<Doi>,
    pub title: String,
    pub year: Option<i32>,
    pub venue_issn: Option<Issn>,
    pub volume: Option<String>,
    pub start_page: Option<String>,
    pub first_author_last: Option<String>,
    pub pub_types: BTreeSet<PubType>,
    pub baseline_refs: Option<Vec<DocKey>>,
}

impl Document {
    pub fn new(key: DocKey) -> Self {
        Document {
            key,
            doi: None,
            title: String::new(),
            year: None,
            venue_issn: None,
            volume: None,
            start_page: None,
            first_author_last: None,
            pub_types: BTreeSet::new(),
            baseline_refs: None,
        }
    }

    /// True for journal articles and reviews, the types expected to carry references.
    pub fn is_article_or_review(&self) -> bool {
        self.pub_types.contains(&PubType::JournalArticle) || self.pub_types.contains(&PubType::Review)
    }

    fn valid_issn(&self) -> Option<&str> {
        self.venue_issn.as_ref().filter(|i| i.is_valid()).map(Issn::as_str)
    }

    pub fn composite_key(&self) -> Option<CompositeKey> {
        Some(CompositeKey {
            first_author_last: self.first_author_last.clone()?,
            venue: VenueKey {
                issn: self.valid_issn()?.to_string(),
                year: self.year?,
                volume: self.volume.clone()?,
                start_page: self.start_page.clone()?,
            },
        })
    }

    pub fn venue_key(&self) -> Option<VenueKey> {
        Some(VenueKey {
            issn: self.valid_issn()?.to_string(),
            year: self.year?,
            volume: self.volume.clone()?,
            start_page: self.start_page.clone()?,
        })
    }

    pub fn title_key(&self) -> Option<(String, i32)> {
        Some((normalize_title(&self.title).ok()?, self.year?))
    }

    fn validate(&self) -> Result<(), CorpusError> {
        if let Some(year) = self.year {
            if !(1800..=2100).contains(&year) {
                return Err(CorpusError::YearOutOfRange(year));
            }
        }
        if let Some(refs) = &self.baseline_refs {
            let mut seen = BTreeSet::new();
            for r in refs {
                if *r == self.key {
                    return Err(CorpusError::SelfReference(self.key));
                }
                if !seen.insert(*r) {
                    return Err(CorpusError::DuplicateReference {
                        doc: self.key,
                        reference: *r,
                    });
                }
            }
        }
        Ok(())
    }
}

/// Venue, year, volume and start page: the bibliographic locator of an article.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct VenueKey {
    pub issn: String,
    pub year: i32,
    pub volume: String,
    pub start_page: String,
}

/// The five-field composite (first author, ISSN, year, volume, start page).
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct CompositeKey {
    pub first_author_last: String,
    pub venue: VenueKey,
}

impl CompositeKey {
    /// Builds a key from raw field values; `None` if any field is missing,
    /// empty after normalization, or the ISSN fails its check digit.
    pub fn from_raw(
        first_author_last: Option<&str>,
        issn: Option<&str>,
        year: Option<i32>,
        volume: Option<&str>,
        start_page: Option<&str>,
    ) -> Option<CompositeKey> {
        Some(CompositeKey {
            first_author_last: normalize_name(first_author_last?)?,
            venue: VenueKey::from_raw(issn, year, volume, start_page)?,
        })
    }
}

impl VenueKey {
    pub fn from_raw(
        issn: Option<&str>,
        year: Option<i32>,
        volume: Option<&str>,
        start_page: Option<&str>,
    ) -> Option<VenueKey> {
        let issn = Issn::parse(issn?).filter(Issn::is_valid)?;
        Some(VenueKey {
            issn: issn.value,
            year: year?,
            volume: normalize_locator(volume?)?,
            start_page: normalize_locator(start_page?)?,
        })
    }
}

/// The closed universe of documents all edges are resolved against.
#[derive(Debug, Default)]
pub struct BaselineCorpus {
    documents: BTreeMap<DocKey, Document>,
    doi_index: HashMap<Doi, DocKey>,
    composite_index: HashMap<CompositeKey, Vec<DocKey>>,
    venue_index: HashMap<VenueKey, Vec<DocKey>>,
    titleyear_index: HashMap<(String, i32), Vec<DocKey>>,
    article_or_review: usize,
}

fn push_sorted(keys: &mut Vec<DocKey>, key: DocKey) {
    if let Err(pos) = keys.binary_search(&key) {
        keys.insert(pos, key);
    }
}

impl BaselineCorpus {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds a document and indexes it. Nothing is modified on error.
    pub fn insert(&mut self, doc: Document) -> Result<(), CorpusError> {
        doc.validate()?;
        if self.documents.contains_key(&doc.key) {
            return Err(CorpusError::DuplicateKey(doc.key));
        }
        if let Some(doi) = &doc.doi {
            if let Some(existing) = self.doi_index.get(doi) {
                return Err(CorpusError::DuplicateDoi {
                    doi: doi.clone(),
                    existing: *existing,
                    new: doc.key,
                });
            }
            self.doi_index.insert(doi.clone(), doc.key);
        }
        if let Some(k) = doc.composite_key() {
            push_sorted(self.composite_index.entry(k).or_default(), doc.key);
        }
        if let Some(k) = doc.venue_key() {
            push_sorted(self.venue_index.entry(k).or_default(), doc.key);
        }
        if let Some(k) = doc.title_key() {
            push_sorted(self.titleyear_index.entry(k).or_default(), doc.key);
        }
        if doc.is_article_or_review() {
            self.article_or_review += 1;
        }
        self.documents.insert(doc.key, doc);
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.documents.len()
    }

    pub fn is_empty(&self) -> bool {
        self.documents.is_empty()
    }

    pub fn get(&self, key: DocKey) -> Option<&Document> {
        self.documents.get(&key)
    }

    pub fn contains(&self, key: DocKey) -> bool {
        self.documents.contains_key(&key)
    }

    /// Documents in ascending key order.
    pub fn documents(&self) -> impl Iterator<Item = &Document> {
        self.documents.values()
    }

    pub fn lookup_doi(&self, doi: &Doi) -> Option<DocKey> {
        self.doi_index.get(doi).copied()
    }

    pub fn lookup_composite(&self, key: &CompositeKey) -> &[DocKey] {
        self.composite_index.get(key).map_or(&[], Vec::as_slice)
    }

    pub fn lookup_venue(&self, key: &VenueKey) -> &[DocKey] {
        self.venue_index.get(key).map_or(&[], Vec::as_slice)
    }

    pub fn lookup_title_year(&self, normalized_title: &str, year: i32) -> &[DocKey] {
        // HashMap<(String, i32)> cannot be queried with a borrowed tuple.
        self.titleyear_index
            .get(&(normalized_title.to_string(), year))
            .map_or(&[], Vec::as_slice)
    }

    /// Number of journal articles and reviews, the adjusted-coverage denominator.
    pub fn article_or_review_count(&self) -> usize {
        self.article_or_review
    }

    pub fn doi_entries(&self) -> impl Iterator<Item = (&Doi, DocKey)> {
        self.doi_index.iter().map(|(d, k)| (d, *k))
    }

    pub fn composite_entries(&self) -> impl Iterator<Item = (&CompositeKey, &[DocKey])> {
        self.composite_index.iter().map(|(c, k)| (c, k.as_slice()))
    }
}

/// An ordered (citing, cited) pair of distinct baseline documents.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct CitationEdge {
    pub citing: DocKey,
    pub cited: DocKey,
}

impl CitationEdge {
    pub fn new(citing: DocKey, cited: DocKey) -> Result<Self, CorpusError> {
        if citing == cited {
            Err(CorpusError::SelfLoop(citing))
        } else {
            Ok(CitationEdge { citing, cited })
        }
    }
}

/// A named, deduplicated set of resolved citation edges, sorted by
/// `(citing, cited)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SourceDataset {
    name: String,
    edges: Vec<CitationEdge>,
    covered: Vec<DocKey>,
}

impl SourceDataset {
    /// Builds a dataset from edges in any order; duplicates are merged.
    pub fn from_edges(name: impl Into<String>, mut edges: Vec<CitationEdge>) -> Self {
        edges.sort_unstable();
        edges.dedup();
        Self::assemble(name.into(), edges)
    }

    /// Builds a dataset from edges that are already strictly ascending.
    pub fn from_sorted(name: impl Into<String>, edges: Vec<CitationEdge>) -> Result<Self, CorpusError> {
        if let Some(pos) = edges.windows(2).position(|w| w[0] >= w[1]) {
            return Err(CorpusError::UnsortedEdges(pos + 1));
        }
        Ok(Self::assemble(name.into(), edges))
    }

    fn assemble(name: String, edges: Vec<CitationEdge>) -> Self {
        let mut covered: Vec<DocKey> = edges.iter().map(|e| e.citing).collect();
        covered.dedup();
        SourceDataset { name, edges, covered }
    }

    /// Merges several datasets, deduplicating shared edges.
    pub fn union<'a>(name: impl Into<String>, parts: impl IntoIterator<Item = &'a SourceDataset>) -> Self {
        let edges = parts.into_iter().flat_map(|p| p.edges.iter().copied()).collect();
        Self::from_edges(name, edges)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn edges(&self) -> &[CitationEdge] {
        &self.edges
    }

    /// Citing documents, ascending.
    pub fn covered_docs(&self) -> &[DocKey] {
        &self.covered
    }

    pub fn is_covered(&self, doc: DocKey) -> bool {
        self.covered.binary_search(&doc).is_ok()
    }

    /// The contiguous run of edges whose citing side is `doc`.
    pub fn edges_of(&self, doc: DocKey) -> &[CitationEdge] {
        let start = self.edges.partition_point(|e| e.citing < doc);
        let end = start + self.edges[start..].partition_point(|e| e.citing == doc);
        &self.edges[start..end]
    }

    /// Groups edges by citing document, ascending.
    pub fn by_citing(&self) -> impl Iterator<Item = (DocKey, &[CitationEdge])> {
        self.edges
            .chunk_by(|a, b| a.citing == b.citing)
            .map(|run| (run[0].citing, run))
    }

    pub fn counts(&self) -> DatasetCounts {
        DatasetCounts {
            edges: self.edges.len() as u64,
            covered_docs: self.covered.len() as u64,
        }
    }
}

/// Edge and covered-document totals of a dataset.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct DatasetCounts {
    pub edges: u64,
    pub covered_docs: u64,
}
