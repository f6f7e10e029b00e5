//! Article verification, build records and minimal parallel re-verification.

pub mod build;
pub mod check;
pub mod signature;
pub mod state;

pub use build::{plan_build, run_build, verify_full, BuildOutcome, BuildPlan, BuildReport};
pub use check::verify_article;
pub use signature::{ExportEntry, ExportPayload, ExportSignature};
pub use state::{BuildRecord, BuildState, LibraryVerdict, StateError, Verdict};
