//! Core engine for a coherence-guarded repository of formal articles.
//!
//! A library is a set of articles with declared imports. Changes are
//! admitted through a gate that re-verifies exactly the influenced
//! dependency subgraph in a sandbox, promotes successful builds into a
//! clean snapshot, commits them to a central branch, and publishes
//! cross-linked HTML incrementally.
//!
//! Module map:
//! - [`lang`] — the article language: parsing, evaluation, formatting
//! - [`depgraph`] — dependency manifests, the library DAG, dirty sets
//! - [`verify`] — article verification, export signatures, minimal builds
//! - [`sandbox`] — clean/dirty sandboxes, hash-indexed tree sync, locking
//! - [`html`] — cross-linked static pages, incremental publication
//! - [`repo`] — backends, the commit gate, repository lifecycle

pub mod depgraph;
pub mod diag;
pub mod hash;
pub mod html;
pub mod lang;
pub mod repo;
pub mod sandbox;
pub mod verify;

pub use diag::{Diagnostic, DiagnosticKind};
pub use hash::ContentHash;
