//! Measure how well bibliographic data sources cover a baseline corpus of
//! documents and how faithfully they reproduce its references.
//!
//! The workflow:
//!
//! 1. Load a baseline corpus ([`ingest::load_baseline`]) into a
//!    [`corpus::BaselineCorpus`].
//! 2. Stream each source's edge dump ([`ingest::load_edge_dump`]) and resolve
//!    endpoints to baseline keys ([`linkage::resolve_edges`]).
//! 3. Build gold standards from the baseline's own references
//!    ([`linkage::extract_baseline_gold`]) or from matched reference exports
//!    ([`linkage::build_gold_standard`]).
//! 4. Score sources against golds ([`evaluation::evaluate`]) and against each
//!    other ([`setops`]).
//!
//! ```
//! use citegauge::corpus::{BaselineCorpus, CitationEdge, DocKey, Document, SourceDataset};
//! use citegauge::evaluation::coverage;
//!
//! let key = |v| DocKey::new(v).unwrap();
//! let mut corpus = BaselineCorpus::new();
//! for k in 1..=4 {
//!     corpus.insert(Document::new(key(k))).unwrap();
//! }
//! let source = SourceDataset::from_edges("demo", vec![CitationEdge::new(key(1), key(2)).unwrap()]);
//! assert_eq!(coverage(&source, &corpus).unwrap(), 0.25);
//! ```

pub mod corpus;
pub mod evaluation;
pub mod ingest;
pub mod linkage;
pub mod ratio;
pub mod report;
pub mod setops;
pub mod store;
