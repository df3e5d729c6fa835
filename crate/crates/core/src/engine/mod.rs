// SPDX-License-Identifier: Apache-2.0

//! A small stratified Horn-clause evaluator over hash-consed terms.
//!
//! Rules are built programmatically ([`Rule`], [`RuleSet::builder`]), facts
//! live in a [`TupleStore`], and [`saturate`] computes the least fixpoint
//! semi-naively. [`saturate_naive`] is the slow reference evaluator.

mod eval;
mod rules;
mod store;
mod term;

use thiserror::Error;

pub use eval::{apply_once, saturate, saturate_naive, SaturationStats};
pub use rules::{
    app, atom, build_ruleset, call, int, sym, var, wild, Atom, ColumnKind, Pattern, RelationDecl,
    Rule, RuleSet, RuleSetBuilder, Stratum, TermFn,
};
pub use store::{Relation, Tuple, TupleStore};
pub use term::{TermData, TermId, TermPool};

#[derive(Clone, Debug, Error, PartialEq, Eq)]
pub enum EngineError {
    #[error("unknown relation `{0}`")]
    UnknownRelation(String),
    #[error("relation `{0}` declared twice")]
    DuplicateRelation(String),
    #[error("relation `{0}` has no columns")]
    ZeroArity(String),
    #[error("relation `{relation}` has arity {expected}, got {found}")]
    ArityMismatch {
        relation: String,
        expected: usize,
        found: usize,
    },
    #[error("rule `{rule}`: variable `{var}` is not bound by the body")]
    UnboundVariable { rule: String, var: String },
    #[error("unknown function `{0}`")]
    UnknownFunction(String),
    #[error("rule `{0}` has no head")]
    NoHead(String),
    #[error("rule `{0}`: function calls and wildcards are not allowed in body or constraints")]
    CallInBody(String),
    #[error("rule `{0}`: wildcard in head")]
    WildcardInHead(String),
    #[error("ill-typed value in column {column} of `{relation}`")]
    IllTyped { relation: String, column: usize },
    #[error("fact ceiling of {ceiling} exceeded ({facts} facts)")]
    FactCeiling { ceiling: u64, facts: u64 },
}
