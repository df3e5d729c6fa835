// SPDX-License-Identifier: Apache-2.0

//! m-CFA for a small Scheme subset.
//!
//! The same abstract semantics is implemented twice: as deductive rules run by
//! a semi-naive fixpoint engine ([`analysis`]), and as a worklist over a
//! global-store abstract machine ([`oracle`]). Both produce an
//! [`AnalysisResult`] with the same canonical serialization, so the two can be
//! diffed tuple for tuple.

pub mod analysis;
pub mod cli;
pub mod engine;
pub mod frontend;
pub mod model;
pub mod oracle;
pub mod output;
pub mod result;
pub mod termgen;

pub use analysis::{analyze, AnalysisConfig, AnalysisError, Truthiness};
pub use frontend::{parse_program, FrontendOptions, LabeledProgram};
pub use result::{AnalysisResult, RelationName};

/// Default divergence guard, in derived facts or worklist steps.
pub const DEFAULT_FACT_CEILING: u64 = 5_000_000;

/// Environment variable overriding [`DEFAULT_FACT_CEILING`].
pub const FACT_CEILING_ENV: &str = "SCHEMEFLOW_FACT_CEILING";
