//! Streaming loaders for the baseline corpus, citation edge dumps and
//! gold-standard reference exports.
//!
//! Malformed records are skipped and counted in an [`IngestLog`]; only I/O
//! failures and identifier collisions in the baseline abort a load.

use std::collections::BTreeMap;
use std::io::{self, BufRead};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{
    normalize_doi, normalize_locator, normalize_name, BaselineCorpus, CorpusError, DocKey, Document, Issn, PubType,
};

#[derive(Error, Debug)]
pub enum IngestError {
    #[error("I/O error: {0}")]
    Io(#[from] io::Error),
    #[error("line {line}: duplicate document key {key}")]
    DuplicateKey { line: u64, key: DocKey },
    #[error("line {line}: {source}")]
    DuplicateDoi { line: u64, source: CorpusError },
    #[error("unknown reference export format {0:?}")]
    UnknownFormat(String),
    #[error("reference export header lacks required column {0:?}")]
    MissingColumn(String),
}

/// Why a record was rejected.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum RejectReason {
    FormatError,
    InvalidUtf8,
    InvalidField,
    MissingCitingKey,
    NoReferenceFields,
}

/// Per-loader record accounting. `accepted + rejected` always equals the
/// number of records read; `notes` counts repairs made to accepted records.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct IngestLog {
    pub accepted: u64,
    pub rejected: u64,
    pub reasons: BTreeMap<RejectReason, u64>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub notes: BTreeMap<String, u64>,
}

impl IngestLog {
    pub fn total(&self) -> u64 {
        self.accepted + self.rejected
    }

    pub fn reject(&mut self, reason: RejectReason) {
        self.rejected += 1;
        *self.reasons.entry(reason).or_default() += 1;
    }

    pub fn note(&mut self, what: &str) {
        *self.notes.entry(what.to_string()).or_default() += 1;
    }

    /// Adds another log's counts into this one.
    pub fn merge(&mut self, other: &IngestLog) {
        self.accepted += other.accepted;
        self.rejected += other.rejected;
        for (k, v) in &other.reasons {
            *self.reasons.entry(*k).or_default() += v;
        }
        for (k, v) in &other.notes {
            *self.notes.entry(k.clone()).or_default() += v;
        }
    }
}

/// Reads newline-terminated lines into a reused buffer. Yields the 1-based
/// line number and the line without its terminator, or `None` for invalid UTF-8.
struct Lines<R> {
    reader: R,
    buf: Vec<u8>,
    line: u64,
}

impl<R: BufRead> Lines<R> {
    fn new(reader: R) -> Self {
        Lines {
            reader,
            buf: Vec::with_capacity(256),
            line: 0,
        }
    }

    fn next_line(&mut self) -> io::Result<Option<(u64, Option<&str>)>> {
        self.buf.clear();
        if self.reader.read_until(b'\n', &mut self.buf)? == 0 {
            return Ok(None);
        }
        self.line += 1;
        let mut end = self.buf.len();
        if end > 0 && self.buf[end - 1] == b'\n' {
            end -= 1;
        }
        if end > 0 && self.buf[end - 1] == b'\r' {
            end -= 1;
        }
        Ok(Some((self.line, std::str::from_utf8(&self.buf[..end]).ok())))
    }
}

#[derive(Deserialize)]
#[serde(untagged)]
enum TextOrNumber {
    Text(String),
    Int(i64),
}

impl TextOrNumber {
    fn into_string(self) -> String {
        match self {
            TextOrNumber::Text(s) => s,
            TextOrNumber::Int(i) => i.to_string(),
        }
    }
}

#[derive(Deserialize)]
struct BaselineRecord {
    pmid: u64,
    doi: Option<String>,
    title: Option<String>,
    year: Option<i32>,
    issn: Option<String>,
    volume: Option<TextOrNumber>,
    page: Option<TextOrNumber>,
    author_last: Option<String>,
    #[serde(default)]
    types: Vec<String>,
    refs: Option<Vec<u64>>,
}

fn record_to_document(rec: BaselineRecord, notes: &mut Vec<&'static str>) -> Result<Document, RejectReason> {
    let key = DocKey::new(rec.pmid).map_err(|_| RejectReason::InvalidField)?;
    let mut doc = Document::new(key);
    if let Some(raw) = rec.doi.as_deref().filter(|d| !d.trim().is_empty()) {
        match normalize_doi(raw) {
            Ok(doi) => doc.doi = Some(doi),
            Err(_) => notes.push("malformed_doi_dropped"),
        }
    }
    doc.title = rec.title.unwrap_or_default();
    if let Some(year) = rec.year {
        if !(1800..=2100).contains(&year) {
            return Err(RejectReason::InvalidField);
        }
        doc.year = Some(year);
    }
    doc.venue_issn = rec.issn.as_deref().and_then(Issn::parse);
    if doc.venue_issn.as_ref().is_some_and(|i| !i.is_valid()) {
        notes.push("invalid_issn_flagged");
    }
    doc.volume = rec
        .volume
        .map(TextOrNumber::into_string)
        .as_deref()
        .and_then(normalize_locator);
    doc.start_page = rec
        .page
        .map(TextOrNumber::into_string)
        .as_deref()
        .and_then(normalize_locator);
    doc.first_author_last = rec.author_last.as_deref().and_then(normalize_name);
    for tag in &rec.types {
        doc.pub_types
            .insert(PubType::parse(tag).ok_or(RejectReason::InvalidField)?);
    }
    if let Some(raw_refs) = rec.refs {
        let mut refs = Vec::with_capacity(raw_refs.len());
        let mut seen = std::collections::HashSet::with_capacity(raw_refs.len());
        for r in raw_refs {
            let r = DocKey::new(r).map_err(|_| RejectReason::InvalidField)?;
            if r == key {
                notes.push("self_reference_dropped");
            } else if !seen.insert(r) {
                notes.push("duplicate_reference_merged");
            } else {
                refs.push(r);
            }
        }
        doc.baseline_refs = Some(refs);
    }
    Ok(doc)
}

/// Loads a baseline in the newline-delimited JSON record format.
///
/// Each line is an object with `pmid` (required), `doi`, `title`, `year`, `issn`,
/// `volume`, `page`, `author_last`, `types` and `refs`.
pub fn load_baseline<R: BufRead>(reader: R) -> Result<(BaselineCorpus, IngestLog), IngestError> {
    let mut corpus = BaselineCorpus::new();
    let mut log = IngestLog::default();
    let mut lines = Lines::new(reader);
    let mut notes = Vec::new();
    while let Some((line_no, line)) = lines.next_line()? {
        let Some(line) = line else {
            log.reject(RejectReason::InvalidUtf8);
            continue;
        };
        notes.clear();
        let record: BaselineRecord = match serde_json::from_str(line) {
            Ok(r) => r,
            Err(_) => {
                log.reject(RejectReason::FormatError);
                continue;
            }
        };
        let doc = match record_to_document(record, &mut notes) {
            Ok(d) => d,
            Err(reason) => {
                log.reject(reason);
                continue;
            }
        };
        match corpus.insert(doc) {
            Ok(()) => {
                log.accepted += 1;
                for n in &notes {
                    log.note(n);
                }
            }
            Err(CorpusError::DuplicateKey(key)) => return Err(IngestError::DuplicateKey { line: line_no, key }),
            Err(e @ CorpusError::DuplicateDoi { .. }) => {
                return Err(IngestError::DuplicateDoi {
                    line: line_no,
                    source: e,
                })
            }
            // Remaining invariants were established by record_to_document.
            Err(_) => log.reject(RejectReason::InvalidField),
        }
    }
    Ok((corpus, log))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scheme {
    Pmid,
    Doi,
}

impl Scheme {
    fn parse(tag: &str) -> Option<Scheme> {
        match tag.trim().to_ascii_lowercase().as_str() {
            "pmid" => Some(Scheme::Pmid),
            "doi" => Some(Scheme::Doi),
            _ => None,
        }
    }
}

/// Where one edge endpoint lives in a dump line.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum EndpointColumns {
    /// Every line uses the same scheme.
    Fixed { scheme: Scheme, column: usize },
    /// A separate column names the scheme per line (`pmid` or `doi`).
    Tagged { scheme_column: usize, id_column: usize },
}

impl EndpointColumns {
    fn max_column(&self) -> usize {
        match self {
            EndpointColumns::Fixed { column, .. } => *column,
            EndpointColumns::Tagged {
                scheme_column,
                id_column,
            } => (*scheme_column).max(*id_column),
        }
    }

    fn extract(&self, fields: &[&str]) -> Option<(Scheme, String)> {
        let (scheme, id) = match self {
            EndpointColumns::Fixed { scheme, column } => (*scheme, fields[*column]),
            EndpointColumns::Tagged {
                scheme_column,
                id_column,
            } => (Scheme::parse(fields[*scheme_column])?, fields[*id_column]),
        };
        let id = id.trim();
        (!id.is_empty()).then(|| (scheme, id.to_string()))
    }
}

/// Column layout of a header-less edge dump.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ColumnConfig {
    #[serde(default = "default_delimiter", with = "delimiter_char")]
    pub delimiter: u8,
    pub citing: EndpointColumns,
    pub cited: EndpointColumns,
}

fn default_delimiter() -> u8 {
    b','
}

mod delimiter_char {
    use serde::{de::Error, Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(d: &u8, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(if *d == b'\t' {
            "\\t"
        } else {
            std::str::from_utf8(std::slice::from_ref(d)).unwrap_or(",")
        })
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<u8, D::Error> {
        let s = String::deserialize(d)?;
        match s.as_str() {
            "\\t" | "\t" | "tab" => Ok(b'\t'),
            _ if s.len() == 1 && s.is_ascii() => Ok(s.as_bytes()[0]),
            _ => Err(D::Error::custom(format!(
                "delimiter must be one ASCII character, got {s:?}"
            ))),
        }
    }
}

impl ColumnConfig {
    /// Two columns, both endpoints in one scheme (e.g. DOI-to-DOI links).
    pub fn uniform(scheme: Scheme) -> Self {
        ColumnConfig {
            delimiter: b',',
            citing: EndpointColumns::Fixed { scheme, column: 0 },
            cited: EndpointColumns::Fixed { scheme, column: 1 },
        }
    }

    fn min_fields(&self) -> usize {
        self.citing.max_column().max(self.cited.max_column()) + 1
    }
}

/// One unresolved citation link as it appears in a dump.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RawEdge {
    pub citing_scheme: Scheme,
    pub citing_id: String,
    pub cited_scheme: Scheme,
    pub cited_id: String,
    pub source_line: u64,
}

/// Streams [`RawEdge`]s from a dump without buffering the file.
///
/// Iteration stops at the first I/O error; [`EdgeDumpReader::finish`] reports it.
pub struct EdgeDumpReader<R> {
    lines: Lines<R>,
    config: ColumnConfig,
    log: IngestLog,
    error: Option<io::Error>,
}

impl<R: BufRead> EdgeDumpReader<R> {
    pub fn new(reader: R, config: ColumnConfig) -> Self {
        EdgeDumpReader {
            lines: Lines::new(reader),
            config,
            log: IngestLog::default(),
            error: None,
        }
    }

    pub fn log(&self) -> &IngestLog {
        &self.log
    }

    pub fn finish(self) -> Result<IngestLog, io::Error> {
        match self.error {
            Some(e) => Err(e),
            None => Ok(self.log),
        }
    }
}

impl<R: BufRead> Iterator for EdgeDumpReader<R> {
    type Item = RawEdge;

    fn next(&mut self) -> Option<RawEdge> {
        if self.error.is_some() {
            return None;
        }
        loop {
            let (line_no, line) = match self.lines.next_line() {
                Ok(Some(l)) => l,
                Ok(None) => return None,
                Err(e) => {
                    self.error = Some(e);
                    return None;
                }
            };
            let Some(line) = line else {
                self.log.reject(RejectReason::InvalidUtf8);
                continue;
            };
            let fields: Vec<&str> = line.split(self.config.delimiter as char).collect();
            if line.trim().is_empty() || fields.len() < self.config.min_fields() {
                self.log.reject(RejectReason::FormatError);
                continue;
            }
            match (self.config.citing.extract(&fields), self.config.cited.extract(&fields)) {
                (Some((citing_scheme, citing_id)), Some((cited_scheme, cited_id))) => {
                    self.log.accepted += 1;
                    return Some(RawEdge {
                        citing_scheme,
                        citing_id,
                        cited_scheme,
                        cited_id,
                        source_line: line_no,
                    });
                }
                _ => self.log.reject(RejectReason::FormatError),
            }
        }
    }
}

/// Loads a whole edge dump into memory, in file order.
pub fn load_edge_dump<R: BufRead>(reader: R, config: &ColumnConfig) -> Result<(Vec<RawEdge>, IngestLog), IngestError> {
    let mut stream = EdgeDumpReader::new(reader, config.clone());
    let edges: Vec<RawEdge> = stream.by_ref().collect();
    Ok((edges, stream.finish()?))
}

/// One reference of a gold-standard document, before matching.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct RawReference {
    pub citing_key: Option<DocKey>,
    pub ref_pmid: Option<String>,
    pub ref_doi: Option<String>,
    pub ref_title: Option<String>,
    pub ref_year: Option<i32>,
    pub ref_venue_issn: Option<String>,
    pub ref_volume: Option<String>,
    pub ref_start_page: Option<String>,
    pub source_line: u64,
}

impl RawReference {
    pub fn new(citing_key: DocKey) -> Self {
        RawReference {
            citing_key: Some(citing_key),
            ..Default::default()
        }
    }

    fn has_reference_fields(&self) -> bool {
        self.ref_pmid.is_some()
            || self.ref_doi.is_some()
            || self.ref_title.is_some()
            || self.ref_year.is_some()
            || self.ref_venue_issn.is_some()
            || self.ref_volume.is_some()
            || self.ref_start_page.is_some()
    }
}

/// Header names of a reference export.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct ReferenceColumns {
    pub citing_pmid: String,
    pub ref_pmid: String,
    pub ref_doi: String,
    pub ref_title: String,
    pub ref_year: String,
    pub ref_issn: String,
    pub ref_volume: String,
    pub ref_page: String,
}

impl Default for ReferenceColumns {
    fn default() -> Self {
        ReferenceColumns {
            citing_pmid: "citing_pmid".into(),
            ref_pmid: "ref_pmid".into(),
            ref_doi: "ref_doi".into(),
            ref_title: "ref_title".into(),
            ref_year: "ref_year".into(),
            ref_issn: "ref_issn".into(),
            ref_volume: "ref_volume".into(),
            ref_page: "ref_page".into(),
        }
    }
}

impl ReferenceColumns {
    /// Column profile for a format tag. `canonical` is the only built-in profile;
    /// other layouts are described with explicit column names.
    pub fn for_tag(tag: &str) -> Result<Self, IngestError> {
        match tag {
            "canonical" | "csv" => Ok(Self::default()),
            other => Err(IngestError::UnknownFormat(other.to_string())),
        }
    }
}

struct ColumnIndex {
    citing: usize,
    pmid: Option<usize>,
    doi: Option<usize>,
    title: Option<usize>,
    year: Option<usize>,
    issn: Option<usize>,
    volume: Option<usize>,
    page: Option<usize>,
}

/// Loads a reference export (delimited text with a header row).
///
/// Records keep file order. Rows without a valid `citing_pmid` are rejected as
/// `MissingCitingKey`, rows with no reference field at all as `NoReferenceFields`.
pub fn load_reference_export<R: io::Read>(
    reader: R,
    columns: &ReferenceColumns,
    delimiter: u8,
) -> Result<(Vec<RawReference>, IngestLog), IngestError> {
    let mut csv = csv::ReaderBuilder::new()
        .delimiter(delimiter)
        .has_headers(true)
        .flexible(false)
        .from_reader(reader);
    let header = csv.byte_headers().map_err(csv_hard_error)?.clone();
    let find = |name: &str| header.iter().position(|h| h.trim_ascii() == name.as_bytes());
    let index = ColumnIndex {
        citing: find(&columns.citing_pmid).ok_or_else(|| IngestError::MissingColumn(columns.citing_pmid.clone()))?,
        pmid: find(&columns.ref_pmid),
        doi: find(&columns.ref_doi),
        title: find(&columns.ref_title),
        year: find(&columns.ref_year),
        issn: find(&columns.ref_issn),
        volume: find(&columns.ref_volume),
        page: find(&columns.ref_page),
    };

    let mut out = Vec::new();
    let mut log = IngestLog::default();
    let mut record = csv::ByteRecord::new();
    loop {
        match csv.read_byte_record(&mut record) {
            Ok(false) => break,
            Ok(true) => {}
            Err(e) if matches!(e.kind(), csv::ErrorKind::Io(_)) => return Err(csv_hard_error(e)),
            Err(_) => {
                log.reject(RejectReason::FormatError);
                continue;
            }
        }
        let line = record.position().map_or(0, |p| p.line());
        match parse_reference(&record, &index, line) {
            Ok(r) => {
                log.accepted += 1;
                out.push(r);
            }
            Err(reason) => log.reject(reason),
        }
    }
    Ok((out, log))
}

fn csv_hard_error(e: csv::Error) -> IngestError {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => IngestError::Io(io),
        other => IngestError::Io(io::Error::new(io::ErrorKind::InvalidData, format!("{other:?}"))),
    }
}

fn parse_reference(record: &csv::ByteRecord, index: &ColumnIndex, line: u64) -> Result<RawReference, RejectReason> {
    let field = |i: Option<usize>| -> Result<Option<String>, RejectReason> {
        let Some(bytes) = i.and_then(|i| record.get(i)) else {
            return Ok(None);
        };
        let text = std::str::from_utf8(bytes)
            .map_err(|_| RejectReason::InvalidUtf8)?
            .trim();
        Ok((!text.is_empty()).then(|| text.to_string()))
    };
    let citing = field(Some(index.citing))?;
    let ref_year = match field(index.year)? {
        Some(y) => Some(y.parse::<i32>().map_err(|_| RejectReason::FormatError)?),
        None => None,
    };
    let reference = RawReference {
        citing_key: citing.as_deref().and_then(DocKey::parse),
        ref_pmid: field(index.pmid)?,
        ref_doi: field(index.doi)?,
        ref_title: field(index.title)?,
        ref_year,
        ref_venue_issn: field(index.issn)?,
        ref_volume: field(index.volume)?,
        ref_start_page: field(index.page)?,
        source_line: line,
    };
    if reference.citing_key.is_none() {
        return Err(RejectReason::MissingCitingKey);
    }
    if !reference.has_reference_fields() {
        return Err(RejectReason::NoReferenceFields);
    }
    Ok(reference)
}
