//! The miniSL front end: lexing, parsing and well-formedness checking of
//! serverless function sources (`.msl`, one function per file).

mod ast;
mod lexer;
mod parser;
mod pretty;
mod wellformed;

use thiserror::Error;

use crate::diagnostic::Diagnostic;
use crate::span::Span;

pub use ast::{BinOp, Expr, FunctionDef, Stmt};
pub use lexer::is_identifier;
pub use parser::parse_function;
pub use wellformed::check_wellformed;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SyntaxError {
    #[error("{line}:{column}: {message}")]
    Lexical {
        message: String,
        line: u32,
        column: u32,
    },
    #[error("{line}:{column}: expected {expected}, found {found}")]
    Unexpected {
        expected: String,
        found: String,
        line: u32,
        column: u32,
    },
}

impl SyntaxError {
    pub fn position(&self) -> Span {
        match self {
            SyntaxError::Lexical { line, column, .. } | SyntaxError::Unexpected { line, column, .. } => {
                Span::new(*line, *column)
            }
        }
    }

    pub fn to_diagnostic(&self) -> Diagnostic {
        let pos = self.position();
        let message = match self {
            SyntaxError::Lexical { message, .. } => format!("lexical error: {message}"),
            SyntaxError::Unexpected {
                expected, found, ..
            } => format!("syntax error: expected {expected}, found {found}"),
        };
        Diagnostic::error(pos.line, pos.column, message)
    }
}

impl FunctionDef {
    /// Builds a function with its header on line 1, mainly for tests and
    /// programmatic construction.
    pub fn new(params: Vec<String>, body: Stmt) -> Self {
        Self {
            source_name: String::new(),
            tag: None,
            params,
            body,
            header: Span::new(1, 1),
        }
    }

    /// Services in first-use order (pre-order over the body).
    pub fn services(&self) -> Vec<&str> {
        let mut out: Vec<&str> = Vec::new();
        self.body.walk(&mut |s| {
            if let Stmt::Call { service, .. } | Stmt::IfCall { service, .. } = s {
                if !out.contains(&service.as_str()) {
                    out.push(service);
                }
            }
        });
        out
    }
}
