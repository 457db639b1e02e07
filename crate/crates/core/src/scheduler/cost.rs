use std::fmt;

use serde::{Serialize, Serializer};

use crate::cost::CostExpr;
use crate::rational::{format_rational, Exact, Rational};
use crate::solver::{instantiate, solve_symbolic, Binding, Instantiated};

use super::{FunctionEntry, InvocationRequest, WorkerState};

/// A worker's cost for one invocation, in milliseconds.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CostValue {
    Value(Rational),
    Unresolved(String),
}

impl CostValue {
    pub fn value(&self) -> Option<&Rational> {
        match self {
            CostValue::Value(q) => Some(q),
            CostValue::Unresolved(_) => None,
        }
    }
}

impl fmt::Display for CostValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CostValue::Value(q) => f.write_str(&format_rational(q)),
            CostValue::Unresolved(_) => f.write_str("unresolved"),
        }
    }
}

impl Serialize for CostValue {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        match self {
            CostValue::Value(q) => Exact(q.clone()).serialize(serializer),
            CostValue::Unresolved(_) => serializer.serialize_str("unresolved"),
        }
    }
}

/// The closed form for a request's bindings. Reuses the deployment-time
/// solution when nothing is bound.
pub(crate) fn request_expression(entry: &FunctionEntry, req: &InvocationRequest) -> Result<CostExpr, String> {
    let binding = entry.symbol_binding(&req.bindings)?;
    if binding.is_empty() {
        return entry.base_expression.clone().map_err(|e| e.to_string());
    }
    solve_symbolic(&entry.program, &binding).map_err(|e| e.to_string())
}

/// Values `expr` with the latencies of `w`.
pub(crate) fn cost_on(entry: &FunctionEntry, expr: &CostExpr, w: &WorkerState) -> CostValue {
    let mut binding = Binding::new();
    for (service, symbol) in &entry.env.services {
        match w.latency_ms.get(service) {
            Some(ms) => {
                binding.insert(symbol.clone(), ms.clone());
            }
            None if expr.mentions(symbol) => {
                return CostValue::Unresolved(format!("unknown service {service} on {}", w.label));
            }
            None => {}
        }
    }
    match instantiate(expr, &binding) {
        Instantiated::Value(q) => CostValue::Value(q),
        Instantiated::Residual(e) => CostValue::Unresolved(format!("residual cost {e}")),
    }
}

/// Solves the entry's program under the request bindings and instantiates
/// the result with the worker's service latencies.
pub fn worker_cost(entry: &FunctionEntry, req: &InvocationRequest, w: &WorkerState) -> CostValue {
    match request_expression(entry, req) {
        Ok(expr) => cost_on(entry, &expr, w),
        Err(why) => CostValue::Unresolved(why),
    }
}
