//! cAPP scheduling scripts: tagged policies made of worker blocks, each with
//! a selection strategy and an invalidation rule.
//!
//! ```yaml
//! - mapReduce :
//!   - workers:
//!     - wrk: W1
//!     - wrk: W2
//!   strategy: random
//!   invalidate:
//!     max_latency: 300
//! ```

mod parse;
mod serialize;
mod validate;

use std::fmt;

use indexmap::IndexMap;
use serde::Serialize;
use thiserror::Error;

use crate::rational::{serde_exact, Rational};
use crate::span::Span;

pub use parse::parse_capp;
pub use validate::validate;

/// Name of the fallback policy.
pub const DEFAULT_TAG: &str = "default";

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize)]
pub struct CappScript {
    pub policies: IndexMap<String, Policy>,
}

impl CappScript {
    pub fn policy(&self, tag: &str) -> Option<&Policy> {
        self.policies.get(tag)
    }

    pub fn default_policy(&self) -> Option<&Policy> {
        self.policies.get(DEFAULT_TAG)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Policy {
    pub tag: String,
    pub blocks: Vec<Block>,
    /// `None` when the script omits `followup`, which then behaves as
    /// [`Followup::Default`].
    pub followup: Option<Followup>,
    #[serde(skip)]
    pub span: Span,
}

impl Policy {
    pub fn effective_followup(&self) -> Followup {
        self.followup.unwrap_or(Followup::Default)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Block {
    pub workers: Workers,
    pub strategy: Strategy,
    pub invalidate: Invalidate,
    #[serde(skip)]
    pub span: Span,
}

impl Block {
    pub fn new(workers: Workers) -> Self {
        Self {
            workers,
            strategy: Strategy::Platform,
            invalidate: Invalidate::Overload,
            span: Span::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Workers {
    All,
    Labels(Vec<String>),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Strategy {
    Platform,
    Random,
    BestFirst,
    MinLatency,
}

impl Strategy {
    pub fn keyword(self) -> &'static str {
        match self {
            Strategy::Platform => "platform",
            Strategy::Random => "random",
            Strategy::BestFirst => "best_first",
            Strategy::MinLatency => "min_latency",
        }
    }

    pub fn from_keyword(s: &str) -> Option<Strategy> {
        Some(match s {
            "platform" => Strategy::Platform,
            "random" => Strategy::Random,
            "best_first" | "best-first" => Strategy::BestFirst,
            "min_latency" => Strategy::MinLatency,
            _ => return None,
        })
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.keyword())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Invalidate {
    None,
    /// Percentage of memory, 0 to 100.
    CapacityUsed(u32),
    MaxConcurrentInvocations(u64),
    Overload,
    /// Threshold in milliseconds.
    MaxLatency(#[serde(with = "serde_exact")] Rational),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Followup {
    Default,
    Fail,
}

impl Followup {
    pub fn keyword(self) -> &'static str {
        match self {
            Followup::Default => "default",
            Followup::Fail => "fail",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CappError {
    #[error("line {line}: {message}")]
    Syntax { line: u32, message: String },
    #[error("line {line}: unknown strategy {name:?}")]
    UnknownStrategy { line: u32, name: String },
    #[error("line {line}: unknown invalidate option {name:?}")]
    UnknownInvalidate { line: u32, name: String },
    #[error("line {line}: duplicate tag {tag}")]
    DuplicateTag { line: u32, tag: String },
    #[error("line {line}: {message}")]
    InvalidBlock { line: u32, message: String },
}

impl CappError {
    pub fn line(&self) -> u32 {
        match self {
            CappError::Syntax { line, .. }
            | CappError::UnknownStrategy { line, .. }
            | CappError::UnknownInvalidate { line, .. }
            | CappError::DuplicateTag { line, .. }
            | CappError::InvalidBlock { line, .. } => *line,
        }
    }

    pub fn to_diagnostic(&self) -> crate::Diagnostic {
        let message = match self {
            CappError::Syntax { message, .. } | CappError::InvalidBlock { message, .. } => message.clone(),
            other => {
                let text = other.to_string();
                text.split_once(": ").map(|(_, m)| m.to_string()).unwrap_or(text)
            }
        };
        crate::Diagnostic::error(self.line(), 1, message)
    }
}
