//! A small SQL-like language for CMI queries against an ensemble.
//!
//! Four statement forms are supported:
//!
//! ```text
//! SIMULATE MUTUAL INFORMATION OF (a, ..) WITH (b, ..) [GIVEN (c = 1, d)] [USING n SAMPLES]
//!     FROM MODELS OF m
//! ESTIMATE PROBABILITY OF (MUTUAL INFORMATION OF .. WITH .. [GIVEN ..] < 0.1) BY MODELS OF m
//! ESTIMATE DEPENDENCE PROBABILITY OF a WITH b BY MODELS OF m
//! SIMULATE (SELECT * FROM VARIABLES OF m
//!     [WHERE PROBABILITY OF (MUTUAL INFORMATION WITH v < 0.1) > 0.9]) FROM m LIMIT n
//! ```
//!
//! Keywords are case-insensitive and reserved; other names may be written
//! bare or in double quotes. In `GIVEN`, an entry with a value is fixed and
//! one without is marginalized. Nominal values are written as a quoted label
//! or as a number, which is matched against the labels first and otherwise
//! read as a category index.

use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

mod ast;
mod exec;
mod lexer;
mod parser;

pub use ast::{Given, Literal, MiSpec, Statement, VarFilter};
pub use exec::{plan, plan_and_execute, plan_and_execute_with, ExecOptions, Plan, QueryResult};
pub use lexer::{tokenize, Keyword, Pos, Token};
pub use parser::parse;

/// Parse failure with the 1-based position of the offending token.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SyntaxError {
    pub line: usize,
    pub column: usize,
    pub expected: Vec<String>,
    pub found: String,
}

impl fmt::Display for SyntaxError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "syntax error at line {}, column {}: expected ",
            self.line, self.column
        )?;
        match self.expected.as_slice() {
            [] => f.write_str("nothing")?,
            [one] => f.write_str(one)?,
            many => {
                f.write_str("one of ")?;
                for (i, e) in many.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    f.write_str(e)?;
                }
            }
        }
        write!(f, ", found {}", self.found)
    }
}

impl core::error::Error for SyntaxError {}
