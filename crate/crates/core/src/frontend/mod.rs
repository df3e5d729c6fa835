// SPDX-License-Identifier: Apache-2.0

//! Source reading, labeling, validation and fact extraction.

pub mod facts;
pub mod freevars;
pub mod program;
pub mod reader;

use thiserror::Error;

pub use facts::{extract_facts, Cell, CellKind, Edb, Fact, FactsError, EDB_SCHEMA};
pub use freevars::{all_free_vars, syntactic_free_vars};
pub use program::{
    label_program, FrontendOptions, LabeledProgram, Node, ValidationError, ValidationRule,
};
pub use reader::{read_sexprs, ParseError, Pos, SExpr, SExprKind};

#[derive(Clone, Debug, Error, PartialEq, Eq)]
pub enum FrontendError {
    #[error("parse error at {0}")]
    Parse(#[from] ParseError),
    #[error("validation error at {0}")]
    Validation(#[from] ValidationError),
}

impl FrontendError {
    pub fn pos(&self) -> Pos {
        match self {
            FrontendError::Parse(e) => e.pos,
            FrontendError::Validation(e) => e.pos,
        }
    }
}

/// Reads, labels and validates one program.
pub fn parse_program(text: &str, opts: &FrontendOptions) -> Result<LabeledProgram, FrontendError> {
    let forms = read_sexprs(text)?;
    Ok(label_program(&forms, opts)?)
}
