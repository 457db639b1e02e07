//! Evaluation of cost programs.
//!
//! * [`evaluate_concrete`] unfolds a program under a full binding.
//! * [`solve_symbolic`] computes a closed form under a partial binding.
//! * [`instantiate`] values a closed form, e.g. with a worker's latencies.
//! * [`export_interchange`] prints clauses for external cost analysers.

mod concrete;
mod export;
mod symbolic;

use std::collections::BTreeMap;

use thiserror::Error;

use crate::cost::CostExpr;
use crate::rational::Rational;

pub use concrete::{evaluate_concrete, Evaluation};
pub use export::export_interchange;
pub use symbolic::{solve_symbolic, solve_symbolic_with, SolveOptions};

/// Symbol values; loop bounds and guard variables must be integers.
pub type Binding = BTreeMap<String, Rational>;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SolveError {
    #[error("unsupported equation shape: {0}")]
    UnsupportedShape(String),
    #[error("fuel exhausted after {0} unfolding steps")]
    FuelExhausted(u64),
    #[error("symbol {0} is not bound")]
    UnboundSymbol(String),
    #[error("cost function {0} is not defined")]
    UndefinedFunction(String),
    #[error("cannot export {0}")]
    UnsupportedExpr(String),
    #[error("empty cost program")]
    EmptyProgram,
}

/// A cost expression after substitution.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Instantiated {
    Value(Rational),
    Residual(CostExpr),
}

impl Instantiated {
    pub fn value(&self) -> Option<&Rational> {
        match self {
            Instantiated::Value(q) => Some(q),
            Instantiated::Residual(_) => None,
        }
    }

    pub fn into_expr(self) -> CostExpr {
        match self {
            Instantiated::Value(q) => CostExpr::Const(q),
            Instantiated::Residual(e) => e,
        }
    }
}

impl std::fmt::Display for Instantiated {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Instantiated::Value(q) => f.write_str(&crate::rational::format_rational(q)),
            Instantiated::Residual(e) => write!(f, "{e}"),
        }
    }
}

/// Substitutes `b` into `c`; a value when no free symbols remain.
pub fn instantiate(c: &CostExpr, b: &Binding) -> Instantiated {
    let e = c.substitute(b);
    match e {
        CostExpr::Const(q) => Instantiated::Value(q),
        e => match e.eval(&|_| None) {
            Some(q) => Instantiated::Value(q),
            None => Instantiated::Residual(e),
        },
    }
}
