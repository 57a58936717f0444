use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use super::ast::Label;

/// 1-based line/column of a source position.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Pos {
    pub line: u32,
    pub col: u32,
}

impl fmt::Display for Pos {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.col)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Error {
    Syntax { pos: Pos, message: String },
    GotoUnsupported { pos: Pos },
    /// A cycle in the call graph; the names form the cycle in call order.
    Recursion { cycle: Vec<String> },
    UnknownProcedure { name: String, pos: Pos },
    Arity { name: String, expected: usize, found: usize, pos: Pos },
    DuplicateLabel { label: Label, pos: Pos },
    BadLocation(String),
    UnknownVariable(String),
    /// `label` is kept but its enclosing statement `enclosing` is not.
    StructureViolation { label: Label, enclosing: Label },
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::Syntax { pos, message } => write!(f, "syntax error at {pos}: {message}"),
            Error::GotoUnsupported { pos } => write!(f, "goto is not supported ({pos})"),
            Error::Recursion { cycle } => {
                write!(f, "recursive call cycle: ")?;
                for (i, name) in cycle.iter().enumerate() {
                    if i > 0 {
                        write!(f, " -> ")?;
                    }
                    write!(f, "{name}")?;
                }
                Ok(())
            }
            Error::UnknownProcedure { name, pos } => write!(f, "call to unknown procedure `{name}` at {pos}"),
            Error::Arity { name, expected, found, pos } => write!(
                f,
                "procedure `{name}` takes {expected} argument(s) but {found} were given at {pos}"
            ),
            Error::DuplicateLabel { label, pos } => write!(f, "duplicate label @{label} at {pos}"),
            Error::BadLocation(msg) => write!(f, "bad location: {msg}"),
            Error::UnknownVariable(v) => write!(f, "unknown variable `{v}`"),
            Error::StructureViolation { label, enclosing } => write!(
                f,
                "statement @{label} is kept but its enclosing statement @{enclosing} is not"
            ),
        }
    }
}

impl core::error::Error for Error {}
