//! Cost-aware worker selection for function invocations.
//!
//! A [`Registry`] holds deployed functions together with their inferred
//! cost programs, a [`Fleet`] holds worker state, and a [`Scheduler`] runs a
//! [`CappScript`](crate::capp::CappScript) against both. [`simulate`] replays
//! a request trace through the scheduler.

mod config;
mod cost;
mod select;
mod simulate;

pub use config::{ConfigError, FunctionEntry, Registry};
pub use cost::{worker_cost, CostValue};
pub use select::{
    invalidate_check, strategy_order, BlockStep, Invalidation, Outcome, ScheduleDecision, ScheduleError, Scheduler,
    SelectionState, Validity,
};
pub use simulate::{parse_trace, simulate, write_log, Event};

use std::collections::BTreeMap;

use num::Zero;
use serde::{Deserialize, Serialize};

use crate::rational::{serde_exact, serde_map, Rational};

/// One invocation holding memory on a worker until `completion_ms`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Activation {
    pub invocation: String,
    #[serde(with = "serde_exact")]
    pub memory_mb: Rational,
    #[serde(with = "serde_exact")]
    pub completion_ms: Rational,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WorkerState {
    pub label: String,
    /// Access latency per service name.
    #[serde(with = "serde_map", default)]
    pub latency_ms: BTreeMap<String, Rational>,
    #[serde(rename = "memory_mb", with = "serde_exact")]
    pub memory_capacity_mb: Rational,
    pub concurrency_limit: u64,
    #[serde(skip_deserializing)]
    pub active: Vec<Activation>,
}

impl WorkerState {
    pub fn new(label: &str, memory_capacity_mb: Rational, concurrency_limit: u64) -> Self {
        Self {
            label: label.to_string(),
            latency_ms: BTreeMap::new(),
            memory_capacity_mb,
            concurrency_limit,
            active: Vec::new(),
        }
    }

    pub fn with_latency(mut self, service: &str, ms: Rational) -> Self {
        self.latency_ms.insert(service.to_string(), ms);
        self
    }

    pub fn memory_used(&self) -> Rational {
        self.active.iter().fold(Rational::zero(), |acc, a| acc + &a.memory_mb)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Fleet {
    pub workers: Vec<WorkerState>,
}

impl Fleet {
    pub fn new(workers: Vec<WorkerState>) -> Result<Self, ConfigError> {
        let fleet = Fleet { workers };
        fleet.check()?;
        Ok(fleet)
    }

    pub fn from_json(text: &str) -> Result<Self, ConfigError> {
        let fleet: Fleet = serde_json::from_str(text).map_err(|e| ConfigError::Json(format!("fleet: {e}")))?;
        fleet.check()?;
        Ok(fleet)
    }

    fn check(&self) -> Result<(), ConfigError> {
        for (k, w) in self.workers.iter().enumerate() {
            if self.workers[..k].iter().any(|o| o.label == w.label) {
                return Err(ConfigError::Invalid(format!("duplicate worker {}", w.label)));
            }
            if w.memory_capacity_mb <= Rational::zero() {
                return Err(ConfigError::Invalid(format!("worker {} needs a positive memory_mb", w.label)));
            }
            if w.concurrency_limit == 0 {
                return Err(ConfigError::Invalid(format!("worker {} needs a positive concurrency_limit", w.label)));
            }
            if let Some((s, _)) = w.latency_ms.iter().find(|(_, v)| **v < Rational::zero()) {
                return Err(ConfigError::Invalid(format!("worker {} has a negative latency for {s}", w.label)));
            }
        }
        Ok(())
    }

    pub fn labels(&self) -> Vec<String> {
        self.workers.iter().map(|w| w.label.clone()).collect()
    }

    pub fn worker(&self, label: &str) -> Option<&WorkerState> {
        self.workers.iter().find(|w| w.label == label)
    }

    pub fn worker_mut(&mut self, label: &str) -> Option<&mut WorkerState> {
        self.workers.iter_mut().find(|w| w.label == label)
    }
}

/// A function invocation; bindings are keyed by parameter name.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InvocationRequest {
    pub id: String,
    pub function: String,
    #[serde(with = "serde_map", default)]
    pub bindings: BTreeMap<String, Rational>,
    #[serde(with = "serde_exact", default = "Rational::zero")]
    pub arrival_ms: Rational,
}

impl InvocationRequest {
    pub fn new(id: &str, function: &str) -> Self {
        Self {
            id: id.to_string(),
            function: function.to_string(),
            bindings: BTreeMap::new(),
            arrival_ms: Rational::zero(),
        }
    }

    pub fn bind(mut self, param: &str, value: Rational) -> Self {
        self.bindings.insert(param.to_string(), value);
        self
    }

    pub fn at(mut self, arrival_ms: Rational) -> Self {
        self.arrival_ms = arrival_ms;
        self
    }
}
