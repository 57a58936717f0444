//! The mini language: syntax tree, parser, transformations and printer.

mod ast;
mod emit;
mod error;
mod parse;
mod transform;

pub use ast::*;
pub use emit::{emit, expr_to_string, print_program};
pub use error::{Error, Pos};
pub use parse::parse_program;
pub use transform::{augment, inline_calls, subprogram, Abstraction, Location, SlicingCriterion};
