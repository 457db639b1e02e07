use std::collections::HashMap;

use num::Zero;

use crate::program::{CostEquation, CostProgram};
use crate::rational::Rational;

use super::{Binding, SolveError};

/// Result of unfolding a program under a full binding.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Evaluation {
    pub value: Rational,
    /// Unfolding steps consumed.
    pub steps: u64,
    /// Call sites where no equation applied (each contributed 0).
    pub unmatched: Vec<String>,
}

struct Alternative {
    direct: Rational,
    calls: Vec<(usize, Vec<Rational>)>,
}

struct Frame {
    alternatives: Vec<Alternative>,
    alt: usize,
    call: usize,
    acc: Rational,
    best: Option<Rational>,
}

/// Unfolds `p` from `main`. Overlapping guards take the maximum alternative;
/// a call no equation applies to contributes 0. Each unfolding consumes one
/// unit of `fuel`.
pub fn evaluate_concrete(p: &CostProgram, b: &Binding, fuel: u64) -> Result<Evaluation, SolveError> {
    let main = p.main().ok_or(SolveError::EmptyProgram)?;
    let heads: Vec<&str> = p.heads();
    let index: HashMap<&str, usize> = heads.iter().enumerate().map(|(k, h)| (*h, k)).collect();
    let by_head: Vec<Vec<&CostEquation>> = heads.iter().map(|h| p.equations_for(h).collect()).collect();

    let mut args = Vec::new();
    for param in &main.params {
        args.push(b.get(param).cloned().ok_or_else(|| SolveError::UnboundSymbol(param.clone()))?);
    }

    let mut steps = 0u64;
    let mut unmatched = Vec::new();
    let mut expand = |head: usize, args: &[Rational], steps: &mut u64| -> Result<Frame, SolveError> {
        if *steps >= fuel {
            return Err(SolveError::FuelExhausted(*steps));
        }
        *steps += 1;
        let eqs = &by_head[head];
        let mut alternatives = Vec::new();
        for eq in eqs {
            let value_of = |v: &str| eq.params.iter().position(|x| x == v).map(|k| args[k].clone());
            if eq.guard.holds(&value_of) != Some(true) {
                continue;
            }
            let direct = eq.direct.eval(&value_of).expect("closed equation");
            let mut calls = Vec::new();
            for c in &eq.calls {
                let callee = *index
                    .get(c.callee.as_str())
                    .ok_or_else(|| SolveError::UndefinedFunction(c.callee.clone()))?;
                let values = c.args.iter().map(|a| a.eval(&value_of).expect("closed equation")).collect();
                calls.push((callee, values));
            }
            alternatives.push(Alternative { direct, calls });
        }
        if alternatives.is_empty() {
            let shown: Vec<String> = args.iter().map(crate::rational::format_fraction).collect();
            unmatched.push(format!("{}({})", heads[head], shown.join(",")));
        }
        Ok(Frame {
            alternatives,
            alt: 0,
            call: 0,
            acc: Rational::zero(),
            best: None,
        })
    };

    let mut stack = vec![expand(0, &args, &mut steps)?];
    loop {
        let top = stack.last_mut().unwrap();
        if top.alt < top.alternatives.len() {
            let alt = &top.alternatives[top.alt];
            if top.call < alt.calls.len() {
                let (callee, values) = &alt.calls[top.call];
                let (callee, values) = (*callee, values.clone());
                let frame = expand(callee, &values, &mut steps)?;
                stack.push(frame);
            } else {
                let total = &alt.direct + &top.acc;
                if top.best.as_ref().is_none_or(|b| total > *b) {
                    top.best = Some(total);
                }
                top.alt += 1;
                top.call = 0;
                top.acc = Rational::zero();
            }
            continue;
        }
        let value = top.best.take().unwrap_or_else(Rational::zero);
        stack.pop();
        match stack.last_mut() {
            Some(parent) => {
                parent.acc += value;
                parent.call += 1;
            }
            None => {
                return Ok(Evaluation {
                    value,
                    steps,
                    unmatched,
                });
            }
        }
    }
}
