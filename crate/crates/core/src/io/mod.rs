//! Text formats: truth tables, the expression language, schedule and set
//! literals, and DOT state portraits.

mod dot;
mod expr;
mod literal;
mod table;

use thiserror::Error;

pub use dot::export_dot;
pub use expr::{compile_exprs, parse_expr, parse_network_exprs, Expr};
pub use literal::{parse_rational, parse_schedule, parse_state_set, render_state_set};
pub use table::{parse_network_table, render_network_table};

/// A located diagnostic. Lines and columns are 1-based; column 0 means the
/// whole line.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("line {line}{}: {message}", column_suffix(*.column))]
pub struct ParseError {
    pub line: usize,
    pub column: usize,
    pub message: String,
}

fn column_suffix(column: usize) -> String {
    if column == 0 {
        String::new()
    } else {
        format!(", column {column}")
    }
}

impl ParseError {
    pub(crate) fn new(line: usize, column: usize, message: impl Into<String>) -> Self {
        ParseError { line, column, message: message.into() }
    }
}

/// Lines with `#` comments stripped, paired with their 1-based numbers;
/// blank lines are dropped.
pub(crate) fn content_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines().enumerate().filter_map(|(k, line)| {
        let body = line.split('#').next().unwrap_or("").trim();
        (!body.is_empty()).then_some((k + 1, body))
    })
}
