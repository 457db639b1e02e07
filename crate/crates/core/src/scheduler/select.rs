use std::collections::HashMap;

use indexmap::IndexMap;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use thiserror::Error;

use crate::capp::{Block, CappScript, Followup, Invalidate, Policy, Strategy, Workers, DEFAULT_TAG};
use crate::rational::{int, serde_exact, Rational};

use super::cost::{cost_on, request_expression};
use super::{Activation, CostValue, Fleet, FunctionEntry, InvocationRequest, Registry, WorkerState};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ScheduleError {
    #[error("unknown function {0}")]
    UnknownFunction(String),
    #[error("no policy for tag {0} and no default policy")]
    NoPolicy(String),
    #[error("policy {0} falls back to a missing default policy")]
    MissingDefaultPolicy(String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Validity {
    Valid,
    Invalid(String),
}

/// Random generator and round-robin counters shared across decisions.
#[derive(Debug, Clone)]
pub struct SelectionState {
    rng: ChaCha8Rng,
    round_robin: HashMap<(String, usize), usize>,
}

impl SelectionState {
    pub fn new(seed: u64) -> Self {
        Self {
            rng: ChaCha8Rng::seed_from_u64(seed),
            round_robin: HashMap::new(),
        }
    }
}

/// Orders the candidates of block `block` of policy `tag`. An error means
/// the block is skipped.
pub fn strategy_order(
    strategy: Strategy,
    (tag, block): (&str, usize),
    candidates: &[String],
    costs: &IndexMap<String, CostValue>,
    state: &mut SelectionState,
) -> Result<Vec<String>, String> {
    let mut order = candidates.to_vec();
    match strategy {
        Strategy::BestFirst => {}
        Strategy::Random => order.shuffle(&mut state.rng),
        Strategy::Platform => {
            let counter = state.round_robin.entry((tag.to_string(), block)).or_insert(0);
            if !order.is_empty() {
                let shift = *counter % order.len();
                order.rotate_left(shift);
            }
            *counter += 1;
        }
        Strategy::MinLatency => {
            let mut keyed = Vec::with_capacity(order.len());
            for w in order {
                match costs.get(&w) {
                    Some(CostValue::Value(q)) => keyed.push((q.clone(), w)),
                    _ => return Err(format!("cost unresolved on {w}")),
                }
            }
            keyed.sort_by(|a, b| a.0.cmp(&b.0));
            order = keyed.into_iter().map(|(_, w)| w).collect();
        }
    }
    Ok(order)
}

pub fn invalidate_check(w: &WorkerState, rule: &Invalidate, cost: &CostValue, entry: &FunctionEntry) -> Validity {
    let active = w.active.len() as u64;
    let invalid = |reason: String| Validity::Invalid(reason);
    match rule {
        Invalidate::None => Validity::Valid,
        Invalidate::CapacityUsed(p) => {
            let used = (w.memory_used() + &entry.memory_mb) / &w.memory_capacity_mb;
            if used > int(*p as i64) / int(100) {
                invalid(format!("capacity_used above {p}%"))
            } else {
                Validity::Valid
            }
        }
        Invalidate::MaxConcurrentInvocations(n) if active >= *n => {
            invalid(format!("{active} active invocations, limit {n}"))
        }
        Invalidate::MaxConcurrentInvocations(_) => Validity::Valid,
        Invalidate::Overload if active >= w.concurrency_limit => {
            invalid(format!("overloaded: {active} active invocations, limit {}", w.concurrency_limit))
        }
        Invalidate::Overload => Validity::Valid,
        Invalidate::MaxLatency(t) => match cost {
            CostValue::Unresolved(_) => invalid("unresolved".into()),
            CostValue::Value(q) if q > t => invalid(format!(
                "cost {} above max_latency {}",
                crate::rational::format_rational(q),
                crate::rational::format_rational(t)
            )),
            CostValue::Value(_) => Validity::Valid,
        },
    }
}

fn fits_memory(w: &WorkerState, entry: &FunctionEntry) -> bool {
    w.memory_used() + &entry.memory_mb <= w.memory_capacity_mb
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Outcome {
    Chosen(String),
    Failed(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Invalidation {
    pub worker: String,
    pub reason: String,
}

/// What happened in one block.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct BlockStep {
    pub policy: String,
    pub block: usize,
    pub order: Vec<String>,
    pub invalidations: Vec<Invalidation>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub skipped: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ScheduleDecision {
    pub request: String,
    pub function: String,
    pub outcome: Outcome,
    /// Costs of every candidate considered, by worker label.
    pub candidate_costs: IndexMap<String, CostValue>,
    /// Reasons for the unresolved entries of `candidate_costs`.
    #[serde(skip_serializing_if = "IndexMap::is_empty")]
    pub unresolved: IndexMap<String, String>,
    pub trace: Vec<BlockStep>,
    /// How long the chosen worker is occupied.
    #[serde(with = "opt_exact", skip_serializing_if = "Option::is_none")]
    pub duration_ms: Option<Rational>,
}

impl ScheduleDecision {
    pub fn chosen(&self) -> Option<&str> {
        match &self.outcome {
            Outcome::Chosen(w) => Some(w),
            Outcome::Failed(_) => None,
        }
    }
}

mod opt_exact {
    use super::*;
    use serde::Serializer;

    pub fn serialize<S: Serializer>(value: &Option<Rational>, serializer: S) -> Result<S::Ok, S::Error> {
        match value {
            Some(q) => serde_exact::serialize(q, serializer),
            None => serializer.serialize_none(),
        }
    }
}

/// Runs a script against a fleet, one decision at a time.
#[derive(Debug, Clone)]
pub struct Scheduler {
    pub script: CappScript,
    pub registry: Registry,
    pub fleet: Fleet,
    pub state: SelectionState,
    /// Occupancy for invocations whose cost is unresolved.
    pub default_duration_ms: Rational,
}

struct Request<'a> {
    entry: &'a FunctionEntry,
    expression: Result<crate::cost::CostExpr, String>,
}

impl Scheduler {
    pub fn new(script: CappScript, registry: Registry, fleet: Fleet, seed: u64) -> Self {
        Self {
            script,
            registry,
            fleet,
            state: SelectionState::new(seed),
            default_duration_ms: int(100),
        }
    }

    /// Picks a worker for `req` and admits the invocation there until
    /// `arrival + duration`.
    pub fn schedule(&mut self, req: &InvocationRequest) -> Result<ScheduleDecision, ScheduleError> {
        let decision = self.decide(req)?;
        if let (Some(label), Some(duration)) = (decision.chosen(), &decision.duration_ms) {
            let memory_mb = self.registry.get(&req.function).expect("decided").memory_mb.clone();
            self.fleet
                .worker_mut(label)
                .expect("chosen from the fleet")
                .active
                .push(Activation {
                    invocation: req.id.clone(),
                    memory_mb,
                    completion_ms: &req.arrival_ms + duration,
                });
        }
        Ok(decision)
    }

    /// Releases `invocation` from `worker`; false when it was not active.
    pub fn complete(&mut self, worker: &str, invocation: &str) -> bool {
        let Some(w) = self.fleet.worker_mut(worker) else { return false };
        match w.active.iter().position(|a| a.invocation == invocation) {
            Some(k) => {
                w.active.remove(k);
                true
            }
            None => false,
        }
    }

    /// The selection without admission.
    pub fn decide(&mut self, req: &InvocationRequest) -> Result<ScheduleDecision, ScheduleError> {
        let entry = self
            .registry
            .get(&req.function)
            .ok_or_else(|| ScheduleError::UnknownFunction(req.function.clone()))?;
        let tag = entry.tag.as_deref().unwrap_or(DEFAULT_TAG);
        let policy = match (self.script.policy(tag), self.script.default_policy()) {
            (Some(p), _) | (None, Some(p)) => p,
            (None, None) => return Err(ScheduleError::NoPolicy(tag.to_string())),
        };
        let request = Request {
            entry,
            expression: request_expression(entry, req),
        };
        let mut decision = ScheduleDecision {
            request: req.id.clone(),
            function: req.function.clone(),
            outcome: Outcome::Failed("policy exhausted".into()),
            candidate_costs: IndexMap::new(),
            unresolved: IndexMap::new(),
            trace: Vec::new(),
            duration_ms: None,
        };
        let chosen = match run_policy(&self.fleet, &mut self.state, policy, &request, &mut decision) {
            Some(w) => Some(w),
            None => match (policy.followup, self.script.default_policy()) {
                (Some(Followup::Fail), _) => None,
                (_, Some(default)) if default.tag != policy.tag => {
                    run_policy(&self.fleet, &mut self.state, default, &request, &mut decision)
                }
                (Some(Followup::Default), None) => return Err(ScheduleError::MissingDefaultPolicy(policy.tag.clone())),
                _ => None,
            },
        };
        if let Some(w) = chosen {
            decision.duration_ms = Some(match &decision.candidate_costs[&w] {
                CostValue::Value(q) => q.clone(),
                CostValue::Unresolved(_) => self.default_duration_ms.clone(),
            });
            decision.outcome = Outcome::Chosen(w);
        }
        Ok(decision)
    }
}

fn candidates(fleet: &Fleet, block: &Block, step: &mut BlockStep) -> Vec<String> {
    match &block.workers {
        Workers::All => fleet.labels(),
        Workers::Labels(labels) => {
            let mut out = Vec::new();
            for label in labels {
                if fleet.worker(label).is_some() {
                    if !out.contains(label) {
                        out.push(label.clone());
                    }
                } else {
                    step.invalidations.push(Invalidation {
                        worker: label.clone(),
                        reason: "unknown worker".into(),
                    });
                }
            }
            out
        }
    }
}

fn run_policy(
    fleet: &Fleet,
    state: &mut SelectionState,
    policy: &Policy,
    request: &Request<'_>,
    decision: &mut ScheduleDecision,
) -> Option<String> {
    for (index, block) in policy.blocks.iter().enumerate() {
        let mut step = BlockStep {
            policy: policy.tag.clone(),
            block: index,
            order: Vec::new(),
            invalidations: Vec::new(),
            skipped: None,
        };
        let labels = candidates(fleet, block, &mut step);
        let mut costs = IndexMap::new();
        for label in &labels {
            let cost = decision
                .candidate_costs
                .entry(label.clone())
                .or_insert_with(|| match &request.expression {
                    Ok(e) => cost_on(request.entry, e, fleet.worker(label).expect("candidate")),
                    Err(why) => CostValue::Unresolved(why.clone()),
                })
                .clone();
            if let CostValue::Unresolved(why) = &cost {
                decision.unresolved.insert(label.clone(), why.clone());
            }
            costs.insert(label.clone(), cost);
        }
        if labels.is_empty() {
            step.skipped = Some("no candidate workers".into());
            decision.trace.push(step);
            continue;
        }
        match strategy_order(block.strategy, (&policy.tag, index), &labels, &costs, state) {
            Err(why) => step.skipped = Some(why),
            Ok(order) => {
                step.order = order.clone();
                for label in order {
                    let w = fleet.worker(&label).expect("candidate");
                    let verdict = if !fits_memory(w, request.entry) {
                        Validity::Invalid("insufficient memory".into())
                    } else {
                        invalidate_check(w, &block.invalidate, &costs[&label], request.entry)
                    };
                    match verdict {
                        Validity::Valid => {
                            decision.trace.push(step);
                            return Some(label);
                        }
                        Validity::Invalid(reason) => step.invalidations.push(Invalidation { worker: label, reason }),
                    }
                }
            }
        }
        decision.trace.push(step);
    }
    None
}

impl Default for SelectionState {
    fn default() -> Self {
        Self::new(0)
    }
}
