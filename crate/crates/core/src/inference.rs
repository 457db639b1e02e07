//! Derivation of cost programs from miniSL functions.
//!
//! Every `call h(..)` contributes the symbolic cost of accessing `h`.
//! Conditionals on expressions become pairs of guarded equations,
//! conditionals on service calls take the maximum of both branches, and
//! each loop becomes a recursive equation with its base case.

use std::collections::{BTreeSet, HashMap};
use std::fmt;
use std::str::FromStr;

use indexmap::IndexMap;
use num::{One, Zero};
use thiserror::Error;

use crate::diagnostic::Diagnostic;
use crate::minisl::{check_wellformed, is_identifier, parse_function, BinOp, Expr, FunctionDef, Stmt, SyntaxError};
use crate::presburger::{Constraint, Guard, PExpr, Relation};
use crate::program::{CostCall, CostEquation, CostProgram};
use crate::rational::Rational;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum InferenceError {
    #[error("symbol collision on {0}")]
    SymbolCollision(String),
    #[error("non-linear expression {0}")]
    NonLinear(String),
    #[error("boolean expression {0} used where an integer is expected")]
    BooleanInIntegerContext(String),
    #[error("unbound name {0}")]
    UnboundName(String),
    #[error("invalid alias {0}")]
    InvalidAlias(String),
}

/// Typing environment: symbols for parameters and services, live counters,
/// and the symbols known to range over booleans.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Env {
    pub params: IndexMap<String, String>,
    pub services: IndexMap<String, String>,
    pub counters: Vec<String>,
    pub booleans: BTreeSet<String>,
}

impl Env {
    pub fn param_symbol(&self, name: &str) -> Result<&str, InferenceError> {
        self.params
            .get(name)
            .map(String::as_str)
            .ok_or_else(|| InferenceError::UnboundName(name.to_string()))
    }

    pub fn service_symbol(&self, name: &str) -> Result<&str, InferenceError> {
        self.services
            .get(name)
            .map(String::as_str)
            .ok_or_else(|| InferenceError::UnboundName(name.to_string()))
    }

    fn symbol_in_use(&self, symbol: &str) -> bool {
        self.params.values().chain(self.services.values()).any(|s| s == symbol)
            || self.counters.iter().any(|c| c == symbol)
    }

    /// Gives a parameter or service a different symbol, e.g.
    /// `isPremiumUser` → `u`.
    pub fn rename(&mut self, name: &str, symbol: &str) -> Result<(), InferenceError> {
        if !is_identifier(symbol) {
            return Err(InferenceError::InvalidAlias(format!("{name}={symbol}")));
        }
        let old = match (self.params.get(name), self.services.get(name)) {
            (Some(s), _) | (None, Some(s)) => s.clone(),
            (None, None) => return Err(InferenceError::InvalidAlias(format!("{name} is not a parameter or service"))),
        };
        if old == symbol {
            return Ok(());
        }
        if self.symbol_in_use(symbol) {
            return Err(InferenceError::SymbolCollision(symbol.to_string()));
        }
        for s in self.params.values_mut().chain(self.services.values_mut()) {
            if *s == old {
                *s = symbol.to_string();
            }
        }
        if self.booleans.remove(&old) {
            self.booleans.insert(symbol.to_string());
        }
        Ok(())
    }

    /// The environment extended with counter `i`.
    pub fn with_counter(&self, counter: &str) -> Result<Env, InferenceError> {
        if self.symbol_in_use(counter) {
            return Err(InferenceError::SymbolCollision(counter.to_string()));
        }
        let mut env = self.clone();
        env.counters.push(counter.to_string());
        Ok(env)
    }
}

/// Symbols named after the identifiers; parameters used as bare guards are
/// recorded as booleans.
pub fn build_env(f: &FunctionDef) -> Result<Env, InferenceError> {
    let mut env = Env::default();
    for p in &f.params {
        env.params.insert(p.clone(), p.clone());
    }
    for h in f.services() {
        if env.params.contains_key(h) {
            return Err(InferenceError::SymbolCollision(h.to_string()));
        }
        env.services.insert(h.to_string(), h.to_string());
    }
    let mut counters = Vec::new();
    f.body.walk(&mut |s| match s {
        Stmt::IfExp { guard, .. } => mark_booleans(guard, &mut env.booleans),
        Stmt::For { counter, .. } => counters.push(counter.clone()),
        _ => {}
    });
    if let Some(c) = counters.iter().find(|c| env.services.contains_key(c.as_str())) {
        return Err(InferenceError::SymbolCollision(c.clone()));
    }
    Ok(env)
}

fn mark_booleans(guard: &Expr, out: &mut BTreeSet<String>) {
    match guard {
        Expr::ParamRef { name, .. } => {
            out.insert(name.clone());
        }
        Expr::BinOp {
            op: BinOp::And,
            lhs,
            rhs,
        } => {
            mark_booleans(lhs, out);
            mark_booleans(rhs, out);
        }
        _ => {}
    }
}

/// Value of an expression built from literals only.
fn constant_value(e: &Expr) -> Option<Rational> {
    match e {
        Expr::IntLit { value } => Some(Rational::from_integer((*value).into())),
        Expr::BinOp { op, lhs, rhs } => {
            let (l, r) = (constant_value(lhs)?, constant_value(rhs)?);
            match op {
                BinOp::Add => Some(l + r),
                BinOp::Sub => Some(l - r),
                BinOp::Mul => Some(l * r),
                BinOp::Div if !r.is_zero() => Some(l / r),
                _ => None,
            }
        }
        _ => None,
    }
}

pub fn infer_expr(env: &Env, e: &Expr) -> Result<PExpr, InferenceError> {
    Ok(match e {
        Expr::IntLit { value } => PExpr::Const(Rational::from_integer((*value).into())),
        Expr::ParamRef { name, .. } => PExpr::Var(env.param_symbol(name)?.to_string()),
        Expr::CounterRef { name, .. } => {
            if !env.counters.contains(name) {
                return Err(InferenceError::UnboundName(name.clone()));
            }
            PExpr::Var(name.clone())
        }
        Expr::BinOp { op, lhs, rhs } => match op {
            BinOp::Add => PExpr::Add(Box::new(infer_expr(env, lhs)?), Box::new(infer_expr(env, rhs)?)),
            BinOp::Sub => PExpr::Sub(Box::new(infer_expr(env, lhs)?), Box::new(infer_expr(env, rhs)?)),
            BinOp::Mul => match (constant_value(lhs), constant_value(rhs)) {
                (Some(l), Some(r)) => PExpr::constant(l * r),
                (Some(c), None) => PExpr::scaled(c, infer_expr(env, rhs)?),
                (None, Some(c)) => PExpr::scaled(c, infer_expr(env, lhs)?),
                (None, None) => {
                    // Report a boolean operand before the product itself.
                    infer_expr(env, lhs)?;
                    infer_expr(env, rhs)?;
                    return Err(InferenceError::NonLinear(e.to_string()));
                }
            },
            BinOp::Div => match constant_value(rhs) {
                Some(c) if !c.is_zero() => match constant_value(lhs) {
                    Some(l) => PExpr::constant(l / c),
                    None => PExpr::scaled(Rational::one() / c, infer_expr(env, lhs)?),
                },
                _ => return Err(InferenceError::NonLinear(e.to_string())),
            },
            BinOp::Gt | BinOp::Eq | BinOp::Ge | BinOp::And => {
                return Err(InferenceError::BooleanInIntegerContext(e.to_string()))
            }
        },
    })
}

pub fn infer_guard(env: &Env, e: &Expr) -> Result<Guard, InferenceError> {
    match e {
        Expr::BinOp { op, lhs, rhs } if op.is_boolean() => {
            if *op == BinOp::And {
                return Ok(infer_guard(env, lhs)?.and(infer_guard(env, rhs)?));
            }
            let l = infer_expr(env, lhs)?;
            let r = infer_expr(env, rhs)?;
            Ok(Guard::single(match op {
                BinOp::Ge => Constraint::ge(l, r),
                BinOp::Gt => Constraint::ge(l, r.plus_one()),
                _ => Constraint::eq(l, r),
            }))
        }
        e => Ok(Guard::single(Constraint::eq(infer_expr(env, e)?, PExpr::Const(Rational::one())))),
    }
}

/// The negation of `g` as a list of guards whose disjunction is `¬g`.
///
/// A conjunct `v = 1` over a boolean symbol negates to `v = 0`.
pub fn negate_guard(g: &Guard, booleans: &BTreeSet<String>) -> Vec<Guard> {
    let mut out = Vec::new();
    for c in g.constraints() {
        match c.relation {
            Relation::Ge => out.push(Guard::single(Constraint::ge(c.rhs.clone(), c.lhs.plus_one()))),
            Relation::Eq => match (&c.lhs, &c.rhs) {
                (PExpr::Var(v), PExpr::Const(one)) if one.is_one() && booleans.contains(v) => {
                    out.push(Guard::single(Constraint::eq(c.lhs.clone(), PExpr::zero())));
                }
                _ => {
                    out.push(Guard::single(Constraint::ge(c.lhs.clone(), c.rhs.plus_one())));
                    out.push(Guard::single(Constraint::ge(c.rhs.clone(), c.lhs.plus_one())));
                }
            },
        }
    }
    out
}

/// Guards emitted for loop iterations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum LoopBound {
    /// `range(0, e)` iterates `e` times: recur on `e >= i + 1`, stop on `i >= e`.
    #[default]
    Exclusive,
    /// Recur on `e >= i`, stop on `i >= e + 1` (one extra iteration).
    Inclusive,
}

impl FromStr for LoopBound {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "exclusive" => Ok(LoopBound::Exclusive),
            "inclusive" => Ok(LoopBound::Inclusive),
            other => Err(format!("unknown loop-bound mode {other:?} (expected exclusive or inclusive)")),
        }
    }
}

impl fmt::Display for LoopBound {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            LoopBound::Exclusive => "exclusive",
            LoopBound::Inclusive => "inclusive",
        })
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct InferOptions {
    pub loop_bound: LoopBound,
    /// `(name, symbol)` renamings applied to the built environment.
    pub aliases: Vec<(String, String)>,
}

/// Cost of one statement: direct cost, pending cost-function calls, and the
/// equations defining those functions.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StmtCost {
    pub direct: PExpr,
    pub calls: Vec<CostCall>,
    pub equations: Vec<CostEquation>,
}

impl StmtCost {
    fn empty() -> Self {
        Self {
            direct: PExpr::zero(),
            calls: Vec::new(),
            equations: Vec::new(),
        }
    }
}

/// Inference state for one function: fresh names and symbol ordering.
pub struct Inference {
    loop_bound: LoopBound,
    names: HashMap<*const Stmt, String>,
    rank: HashMap<String, usize>,
    booleans: BTreeSet<String>,
}

impl Inference {
    pub fn new(f: &FunctionDef, env: &Env, loop_bound: LoopBound) -> Self {
        let mut rank = HashMap::new();
        let mut next = 0;
        let mut push = |sym: &str, rank: &mut HashMap<String, usize>| {
            rank.entry(sym.to_string()).or_insert_with(|| {
                next += 1;
                next
            });
        };
        for p in &f.params {
            if let Some(sym) = env.params.get(p) {
                push(sym, &mut rank);
            }
        }
        let mut constructs: Vec<(&'static str, u32, u32, *const Stmt)> = Vec::new();
        f.body.walk(&mut |s| match s {
            Stmt::For { counter, span, .. } => {
                push(counter, &mut rank);
                constructs.push(("for", f.line_code(*span), span.column, s as *const Stmt));
            }
            Stmt::IfExp { span, .. } => {
                constructs.push(("if", f.line_code(*span), span.column, s as *const Stmt));
            }
            _ => {}
        });
        for sym in env.services.values() {
            push(sym, &mut rank);
        }
        let mut names = HashMap::new();
        let mut used = BTreeSet::new();
        for &(kind, line, column, ptr) in &constructs {
            let shared = constructs
                .iter()
                .filter(|(k, l, _, _)| *k == kind && *l == line)
                .count()
                > 1;
            let base = if shared {
                format!("{kind}_{line}_{column}")
            } else {
                format!("{kind}_{line}")
            };
            let mut name = base.clone();
            let mut n = 1;
            while !used.insert(name.clone()) {
                n += 1;
                name = format!("{base}_{n}");
            }
            names.insert(ptr, name);
        }
        Self {
            loop_bound,
            names,
            rank,
            booleans: env.booleans.clone(),
        }
    }

    fn fresh(&self, s: &Stmt) -> String {
        self.names
            .get(&(s as *const Stmt))
            .cloned()
            .unwrap_or_else(|| format!("fn_{:x}", s as *const Stmt as usize))
    }

    /// Distinct symbols ordered by rank, then by first occurrence.
    fn ordered<'a>(&self, symbols: impl IntoIterator<Item = &'a str>) -> Vec<String> {
        let mut seen: Vec<&str> = Vec::new();
        for s in symbols {
            if !seen.contains(&s) {
                seen.push(s);
            }
        }
        let mut keyed: Vec<(usize, usize, &str)> = seen
            .iter()
            .enumerate()
            .map(|(k, s)| (self.rank.get(*s).copied().unwrap_or(usize::MAX), k, *s))
            .collect();
        keyed.sort();
        keyed.into_iter().map(|(_, _, s)| s.to_string()).collect()
    }

    fn cost_vars<'a>(direct: &'a PExpr, calls: &'a [CostCall]) -> Vec<&'a str> {
        let mut out = direct.vars();
        for c in calls {
            for a in &c.args {
                a.collect_vars(&mut out);
            }
        }
        out
    }

    pub fn stmt(&self, env: &Env, s: &Stmt) -> Result<StmtCost, InferenceError> {
        match s {
            Stmt::Empty => Ok(StmtCost::empty()),
            Stmt::Call { service, cont, .. } => {
                let mut rest = self.stmt(env, cont)?;
                rest.direct = PExpr::Var(env.service_symbol(service)?.to_string()).plus(rest.direct);
                Ok(rest)
            }
            Stmt::IfCall {
                service,
                then_branch,
                else_branch,
                ..
            } => {
                let h = PExpr::Var(env.service_symbol(service)?.to_string());
                let t = self.stmt(env, then_branch)?;
                let e = self.stmt(env, else_branch)?;
                let mut calls = t.calls;
                calls.extend(e.calls);
                let mut equations = t.equations;
                equations.extend(e.equations);
                Ok(StmtCost {
                    direct: h.plus(PExpr::max_of(vec![t.direct, e.direct])),
                    calls,
                    equations,
                })
            }
            Stmt::IfExp {
                guard,
                then_branch,
                else_branch,
                ..
            } => {
                let phi = infer_guard(env, guard)?;
                let t = self.stmt(env, then_branch)?;
                let e = self.stmt(env, else_branch)?;
                let mut vars = phi.vars();
                vars.extend(Self::cost_vars(&t.direct, &t.calls));
                vars.extend(Self::cost_vars(&e.direct, &e.calls));
                let params = self.ordered(vars);
                let head = self.fresh(s);
                let mut equations = vec![CostEquation {
                    head: head.clone(),
                    params: params.clone(),
                    direct: t.direct,
                    calls: t.calls,
                    guard: phi.clone(),
                }];
                for psi in negate_guard(&phi, &self.booleans) {
                    equations.push(CostEquation {
                        head: head.clone(),
                        params: params.clone(),
                        direct: e.direct.clone(),
                        calls: e.calls.clone(),
                        guard: psi,
                    });
                }
                equations.extend(t.equations);
                equations.extend(e.equations);
                Ok(StmtCost {
                    direct: PExpr::zero(),
                    calls: vec![CostCall {
                        callee: head,
                        args: params.iter().map(|p| PExpr::Var(p.clone())).collect(),
                    }],
                    equations,
                })
            }
            Stmt::For {
                counter, bound, body, ..
            } => {
                let bound = infer_expr(env, bound)?;
                let inner = env.with_counter(counter)?;
                let b = self.stmt(&inner, body)?;
                let mut vars = bound.vars();
                vars.extend(Self::cost_vars(&b.direct, &b.calls));
                let rest = self.ordered(vars.into_iter().filter(|v| v != counter));
                let head = self.fresh(s);
                let mut params = vec![counter.clone()];
                params.extend(rest.iter().cloned());
                let i = PExpr::Var(counter.clone());
                let rest_args: Vec<PExpr> = rest.iter().map(|p| PExpr::Var(p.clone())).collect();
                let (recur, stop) = match self.loop_bound {
                    LoopBound::Exclusive => (
                        Constraint::ge(bound.clone(), i.plus_one()),
                        Constraint::ge(i.clone(), bound.clone()),
                    ),
                    LoopBound::Inclusive => (
                        Constraint::ge(bound.clone(), i.clone()),
                        Constraint::ge(i.clone(), bound.plus_one()),
                    ),
                };
                let mut calls = b.calls;
                let mut self_args = vec![i.plus_one()];
                self_args.extend(rest_args.iter().cloned());
                calls.push(CostCall {
                    callee: head.clone(),
                    args: self_args,
                });
                let mut equations = vec![
                    CostEquation {
                        head: head.clone(),
                        params: params.clone(),
                        direct: b.direct,
                        calls,
                        guard: Guard::single(recur),
                    },
                    CostEquation {
                        head: head.clone(),
                        params,
                        direct: PExpr::zero(),
                        calls: Vec::new(),
                        guard: Guard::single(stop),
                    },
                ];
                equations.extend(b.equations);
                let mut start_args = vec![PExpr::zero()];
                start_args.extend(rest_args);
                Ok(StmtCost {
                    direct: PExpr::zero(),
                    calls: vec![CostCall {
                        callee: head,
                        args: start_args,
                    }],
                    equations,
                })
            }
        }
    }

    pub fn program(&self, env: &Env, f: &FunctionDef) -> Result<CostProgram, InferenceError> {
        let body = self.stmt(env, &f.body)?;
        let params = self.ordered(Self::cost_vars(&body.direct, &body.calls));
        let mut equations = vec![CostEquation {
            head: "main".to_string(),
            params,
            direct: body.direct,
            calls: body.calls,
            guard: Guard::truth(),
        }];
        equations.extend(body.equations);
        Ok(CostProgram { equations })
    }
}

/// The cost program of `f` under `env` with exclusive loop bounds.
pub fn infer_function(env: &Env, f: &FunctionDef) -> Result<CostProgram, InferenceError> {
    infer_function_with(env, f, LoopBound::Exclusive)
}

pub fn infer_function_with(env: &Env, f: &FunctionDef, loop_bound: LoopBound) -> Result<CostProgram, InferenceError> {
    Inference::new(f, env, loop_bound).program(env, f)
}

/// Failure anywhere between source text and cost program.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AnalysisError {
    #[error(transparent)]
    Syntax(#[from] SyntaxError),
    #[error("function is not well formed: {}", .0.iter().map(|d| d.message.as_str()).collect::<Vec<_>>().join("; "))]
    NotWellFormed(Vec<Diagnostic>),
    #[error(transparent)]
    Inference(#[from] InferenceError),
}

impl AnalysisError {
    pub fn diagnostics(&self) -> Vec<Diagnostic> {
        match self {
            AnalysisError::Syntax(e) => vec![e.to_diagnostic()],
            AnalysisError::NotWellFormed(d) => d.clone(),
            AnalysisError::Inference(e) => vec![Diagnostic::error(0, 0, e.to_string())],
        }
    }
}

/// A parsed, checked function together with its environment and program.
#[derive(Debug, Clone)]
pub struct Analysis {
    pub function: FunctionDef,
    pub env: Env,
    pub program: CostProgram,
}

/// Parses, checks and infers in one step.
pub fn analyze(source: &str, source_name: &str, options: &InferOptions) -> Result<Analysis, AnalysisError> {
    let function = parse_function(source, source_name)?;
    let diags = check_wellformed(&function);
    if !diags.is_empty() {
        return Err(AnalysisError::NotWellFormed(diags));
    }
    let mut env = build_env(&function)?;
    for (name, symbol) in &options.aliases {
        env.rename(name, symbol)?;
    }
    let program = infer_function_with(&env, &function, options.loop_bound)?;
    Ok(Analysis {
        function,
        env,
        program,
    })
}
