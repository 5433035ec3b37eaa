//! On-disk form of resolved datasets: a sorted `citing,cited` PMID edge file
//! and a JSON sidecar describing where the edges came from.

use std::io::{self, BufRead, Write};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{CitationEdge, DatasetCounts, DocKey, SourceDataset};
use crate::ingest::IngestLog;
use crate::linkage::{MatchLog, Provenance, ResolutionLog};

pub const SIDECAR_SCHEMA: &str = "citegauge-dataset/1";

#[derive(Error, Debug)]
pub enum EdgeFileError {
    #[error("I/O error: {0}")]
    Io(#[from] io::Error),
    #[error("line {0}: expected two positive integers separated by a comma")]
    Malformed(u64),
    #[error("line {0}: edges are not strictly ascending")]
    Unsorted(u64),
    #[error("line {0}: self-citation edge")]
    SelfLoop(u64),
}

/// Writes edges one per line as `citing,cited`.
pub fn write_edge_file<W: Write>(mut out: W, edges: &[CitationEdge]) -> io::Result<()> {
    for e in edges {
        writeln!(out, "{},{}", e.citing, e.cited)?;
    }
    out.flush()
}

/// Streams edges from an edge file, checking that they are strictly ascending.
pub struct EdgeFileReader<R> {
    reader: R,
    line: u64,
    buf: String,
    last: Option<CitationEdge>,
    failed: bool,
}

impl<R: BufRead> EdgeFileReader<R> {
    pub fn new(reader: R) -> Self {
        EdgeFileReader {
            reader,
            line: 0,
            buf: String::new(),
            last: None,
            failed: false,
        }
    }

    fn read_next(&mut self) -> Result<Option<CitationEdge>, EdgeFileError> {
        self.buf.clear();
        if self.reader.read_line(&mut self.buf)? == 0 {
            return Ok(None);
        }
        self.line += 1;
        let text = self.buf.trim_end_matches(['\n', '\r']);
        let (a, b) = text.split_once(',').ok_or(EdgeFileError::Malformed(self.line))?;
        let parse = |s: &str| s.parse::<u64>().ok().and_then(|v| DocKey::new(v).ok());
        let (citing, cited) = parse(a).zip(parse(b)).ok_or(EdgeFileError::Malformed(self.line))?;
        let edge = CitationEdge::new(citing, cited).map_err(|_| EdgeFileError::SelfLoop(self.line))?;
        if self.last.is_some_and(|prev| prev >= edge) {
            return Err(EdgeFileError::Unsorted(self.line));
        }
        self.last = Some(edge);
        Ok(Some(edge))
    }
}

impl<R: BufRead> Iterator for EdgeFileReader<R> {
    type Item = Result<CitationEdge, EdgeFileError>;

    fn next(&mut self) -> Option<Self::Item> {
        if self.failed {
            return None;
        }
        let item = self.read_next().transpose();
        self.failed = matches!(item, Some(Err(_)));
        item
    }
}

/// Reads a whole edge file into a dataset.
pub fn read_edge_file<R: BufRead>(reader: R, name: &str) -> Result<SourceDataset, EdgeFileError> {
    let edges = EdgeFileReader::new(reader).collect::<Result<Vec<_>, _>>()?;
    Ok(SourceDataset::from_sorted(name, edges).expect("reader enforces strict order"))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DatasetKind {
    Source,
    Gold,
}

/// Sidecar of a persisted edge file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetManifest {
    pub schema: String,
    pub name: String,
    pub kind: DatasetKind,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub provenance: Option<Provenance>,
    pub counts: DatasetCounts,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ingest: Option<IngestLog>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub resolution: Option<ResolutionLog>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub matching: Option<MatchLog>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dangling_references: Option<u64>,
}

impl DatasetManifest {
    pub fn new(name: &str, kind: DatasetKind, counts: DatasetCounts) -> Self {
        DatasetManifest {
            schema: SIDECAR_SCHEMA.to_string(),
            name: name.to_string(),
            kind,
            provenance: None,
            counts,
            ingest: None,
            resolution: None,
            matching: None,
            dangling_references: None,
        }
    }
}
