#![allow(dead_code)]

use std::collections::BTreeMap;

use capp::inference::{analyze, Analysis, InferOptions};
use capp::minisl::{BinOp, Expr, FunctionDef, Stmt};
use capp::rational::{int, Rational};
use capp::solver::Binding;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Integer parameters; `flag` is only ever used as a bare guard.
pub const INT_PARAMS: [&str; 2] = ["a", "b"];
pub const FLAG: &str = "flag";
pub const SERVICES: [&str; 4] = ["S0", "S1", "S2", "S3"];

/// Random well-formed miniSL functions.
pub struct Gen {
    rng: ChaCha8Rng,
    /// Largest literal loop bound.
    pub max_bound: u64,
    /// Whether loops may appear inside loops.
    pub nested_loops: bool,
}

impl Gen {
    pub fn new(seed: u64) -> Self {
        Self {
            rng: ChaCha8Rng::seed_from_u64(seed),
            max_bound: 5,
            nested_loops: true,
        }
    }

    pub fn rng(&mut self) -> &mut ChaCha8Rng {
        &mut self.rng
    }

    fn service(&mut self) -> String {
        SERVICES[self.rng.gen_range(0..SERVICES.len())].to_string()
    }

    fn int_param(&mut self) -> Expr {
        Expr::param(INT_PARAMS[self.rng.gen_range(0..INT_PARAMS.len())])
    }

    fn value(&mut self, counters: &[String]) -> Expr {
        match self.rng.gen_range(0..4) {
            0 => Expr::int(self.rng.gen_range(0..=5)),
            1 if !counters.is_empty() => Expr::counter(&counters[self.rng.gen_range(0..counters.len())]),
            2 => Expr::bin(BinOp::Add, self.int_param(), Expr::int(1)),
            _ => self.int_param(),
        }
    }

    fn guard(&mut self, counters: &[String], depth: u32) -> Expr {
        match self.rng.gen_range(0..6) {
            0 => Expr::param(FLAG),
            1 => Expr::bin(BinOp::Gt, self.int_param(), Expr::int(self.rng.gen_range(0..=5))),
            2 => {
                let rhs = self.value(counters);
                Expr::bin(BinOp::Ge, self.int_param(), rhs)
            }
            3 => Expr::bin(BinOp::Eq, self.int_param(), Expr::int(self.rng.gen_range(0..=3))),
            4 if depth > 0 => {
                let l = self.guard(counters, depth - 1);
                let r = self.guard(counters, depth - 1);
                Expr::bin(BinOp::And, l, r)
            }
            _ => {
                let lhs = self.value(counters);
                let rhs = self.value(counters);
                Expr::bin(BinOp::Gt, lhs, rhs)
            }
        }
    }

    fn args(&mut self, counters: &[String]) -> Vec<Expr> {
        (0..self.rng.gen_range(0..3)).map(|_| self.value(counters)).collect()
    }

    fn stmt(&mut self, depth: u32, counters: &mut Vec<String>) -> Stmt {
        if depth == 0 {
            return Stmt::Empty;
        }
        let loops_allowed = self.nested_loops || counters.is_empty();
        match self.rng.gen_range(0..10) {
            0 => Stmt::Empty,
            1..=3 => {
                let service = self.service();
                let args = self.args(counters);
                let cont = self.stmt(depth - 1, counters);
                Stmt::call(&service, args, cont)
            }
            4 | 5 => {
                let guard = self.guard(counters, 1);
                let then_branch = self.stmt(depth - 1, counters);
                let else_branch = self.stmt(depth - 1, counters);
                Stmt::if_exp(guard, then_branch, else_branch, 0)
            }
            6 => {
                let service = self.service();
                let args = self.args(counters);
                let then_branch = self.stmt(depth - 1, counters);
                let else_branch = self.stmt(depth - 1, counters);
                Stmt::if_call(&service, args, then_branch, else_branch, 0)
            }
            _ if loops_allowed => {
                let counter = format!("k{}", counters.len());
                let bound = if !counters.is_empty() && self.rng.gen_bool(0.4) {
                    Expr::counter(&counters[self.rng.gen_range(0..counters.len())])
                } else {
                    Expr::int(self.rng.gen_range(0..=self.max_bound))
                };
                counters.push(counter.clone());
                let body = self.stmt(depth - 1, counters);
                counters.pop();
                Stmt::for_loop(&counter, bound, body, 0)
            }
            _ => {
                let service = self.service();
                Stmt::call(&service, Vec::new(), Stmt::Empty)
            }
        }
    }

    /// A function of AST depth at most `depth`, printed and reparsed so
    /// that every construct carries its source line.
    pub fn function(&mut self, depth: u32) -> FunctionDef {
        let body = self.stmt(depth, &mut Vec::new());
        let mut params: Vec<String> = INT_PARAMS.iter().map(|s| s.to_string()).collect();
        params.push(FLAG.to_string());
        let f = FunctionDef::new(params, body);
        capp::minisl::parse_function(&f.to_string(), "gen").expect("generated source parses")
    }

    /// Analysis of `function(depth)`.
    pub fn analysis(&mut self, depth: u32) -> Analysis {
        let f = self.function(depth);
        analyze(&f.to_string(), "gen", &InferOptions::default()).expect("generated function infers")
    }

    /// Parameter values: integers in `[0, 20]`, flags in `{0, 1}`.
    pub fn params(&mut self, a: &Analysis) -> Binding {
        let mut b = Binding::new();
        for (name, symbol) in &a.env.params {
            let v = if a.env.booleans.contains(symbol) || name == FLAG {
                self.rng.gen_range(0..=1)
            } else {
                self.rng.gen_range(0..=20)
            };
            b.insert(symbol.clone(), int(v));
        }
        b
    }

    /// Service latencies in `[0, 50]`, some fractional.
    pub fn latencies(&mut self, a: &Analysis) -> Binding {
        let mut b = Binding::new();
        for symbol in a.env.services.values() {
            let n: i64 = self.rng.gen_range(0..=100);
            b.insert(symbol.clone(), Rational::new(n.into(), 2.into()));
        }
        b
    }
}

pub fn union(a: &Binding, b: &Binding) -> Binding {
    let mut out = a.clone();
    out.extend(b.iter().map(|(k, v)| (k.clone(), v.clone())));
    out
}

/// Reference cost of running `f`: every call costs its service's latency,
/// an if-call costs its service plus the dearer branch. Interprets the AST
/// directly, independent of cost programs.
///
/// Cost programs price an if-call as `h + max(e', e'') + C + C'`, adding
/// both branches' function calls, so they agree with this only when no
/// if-call branch holds a loop or an if-exp (see [`if_call_is_flat`]).
pub fn reference_cost(f: &FunctionDef, params: &BTreeMap<String, i64>, latency: &BTreeMap<String, Rational>) -> Rational {
    fn eval(e: &Expr, env: &BTreeMap<String, i64>) -> i64 {
        match e {
            Expr::IntLit { value } => *value as i64,
            Expr::CounterRef { name, .. } | Expr::ParamRef { name, .. } => env[name],
            Expr::BinOp { op, lhs, rhs } => {
                let (l, r) = (eval(lhs, env), eval(rhs, env));
                match op {
                    BinOp::Add => l + r,
                    BinOp::Sub => l - r,
                    BinOp::Mul => l * r,
                    BinOp::Div => l / r,
                    BinOp::Gt => (l > r) as i64,
                    BinOp::Ge => (l >= r) as i64,
                    BinOp::Eq => (l == r) as i64,
                    BinOp::And => (l != 0 && r != 0) as i64,
                }
            }
        }
    }
    fn truthy(e: &Expr, env: &BTreeMap<String, i64>) -> bool {
        match e {
            Expr::BinOp { op, .. } if op.is_boolean() => eval(e, env) != 0,
            e => eval(e, env) == 1,
        }
    }
    fn run(s: &Stmt, env: &mut BTreeMap<String, i64>, latency: &BTreeMap<String, Rational>) -> Rational {
        match s {
            Stmt::Empty => int(0),
            Stmt::Call { service, cont, .. } => latency[service].clone() + run(cont, env, latency),
            Stmt::IfExp {
                guard,
                then_branch,
                else_branch,
                ..
            } => {
                if truthy(guard, env) {
                    run(then_branch, env, latency)
                } else {
                    run(else_branch, env, latency)
                }
            }
            Stmt::IfCall {
                service,
                then_branch,
                else_branch,
                ..
            } => {
                let t = run(then_branch, env, latency);
                let e = run(else_branch, env, latency);
                latency[service].clone() + t.max(e)
            }
            Stmt::For { counter, bound, body, .. } => {
                let n = eval(bound, env);
                let mut total = int(0);
                for k in 0..n.max(0) {
                    env.insert(counter.clone(), k);
                    total += run(body, env, latency);
                }
                env.remove(counter);
                total
            }
        }
    }
    run(&f.body, &mut params.clone(), latency)
}

/// Whether every if-call branch consists of plain calls only.
pub fn if_call_is_flat(f: &FunctionDef) -> bool {
    fn plain(s: &Stmt) -> bool {
        match s {
            Stmt::Empty => true,
            Stmt::Call { cont, .. } => plain(cont),
            _ => false,
        }
    }
    let mut flat = true;
    f.body.walk(&mut |s| {
        if let Stmt::IfCall {
            then_branch,
            else_branch,
            ..
        } = s
        {
            flat &= plain(then_branch) && plain(else_branch);
        }
    });
    flat
}

/// Every point of `[lo, hi]^names.len()`.
pub fn box_points(names: &[String], lo: i64, hi: i64) -> Vec<BTreeMap<String, i64>> {
    let mut points = vec![BTreeMap::new()];
    for n in names {
        let mut next = Vec::with_capacity(points.len() * (hi - lo + 1) as usize);
        for p in &points {
            for v in lo..=hi {
                let mut q = p.clone();
                q.insert(n.clone(), v);
                next.push(q);
            }
        }
        points = next;
    }
    points
}
