//! µXPath queries: AST, concrete syntax, validation and closure.

mod ast;
mod closure;
mod normalize;
mod parse;
mod render;

pub use ast::{Axis, Equation, FixKind, FixpointBlock, MuXPathQuery, NodeExpr, PathExpr};
pub use closure::{closure, closure_rule_step, subexpression_count, ClosureSet};
pub use normalize::{block_order, check_monotone, dualize, nnf, validate_query, NormalizedQuery};
pub use parse::{parse_node_expr, parse_query};
pub(crate) use parse::check_definitions;
pub use render::{render_expr, render_path, render_query};

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum QueryError {
    #[error("syntax error at {line}:{col}: {msg}")]
    Syntax { line: usize, col: usize, msg: String },
    #[error("variable `${0}` is defined by more than one equation")]
    DuplicateEquation(String),
    #[error("variable `${0}` is used but never defined")]
    Undefined(String),
    #[error("`${var}` occurs negatively in the body of `${equation}` in its own block: {occurrence}")]
    NotMonotone { var: String, equation: String, occurrence: String },
    #[error("fixpoint blocks depend on each other cyclically (blocks {0:?})")]
    CyclicBlocks(Vec<usize>),
    #[error("`${var}`: {detail}")]
    Alternation { var: String, detail: String },
}
