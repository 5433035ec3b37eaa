//! Compiles each chapter of the book as a module so `cargo test` runs every
//! Rust listing in it.

#[doc = include_str!("../../../book/src/introduction.md")]
pub mod introduction {}
#[doc = include_str!("../../../book/src/identifiers.md")]
pub mod identifiers {}
#[doc = include_str!("../../../book/src/ingest.md")]
pub mod ingest {}
#[doc = include_str!("../../../book/src/linkage.md")]
pub mod linkage {}
#[doc = include_str!("../../../book/src/metrics.md")]
pub mod metrics {}
#[doc = include_str!("../../../book/src/overlap.md")]
pub mod overlap {}
#[doc = include_str!("../../../book/src/cli.md")]
pub mod cli {}
