use std::collections::HashMap;

use num::{One, Signed, ToPrimitive, Zero};

use crate::cost::CostExpr;
use crate::poly::{sum_over, Poly};
use crate::presburger::{Constraint, PExpr, Relation};
use crate::program::{CostEquation, CostProgram};
use crate::rational::Rational;

use super::{Binding, SolveError};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SolveOptions {
    /// Loops with a constant trip count up to this size are unrolled.
    pub unroll_limit: u64,
    /// Total unrolled iterations allowed in one solve.
    pub unroll_budget: u64,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self {
            unroll_limit: 10_000,
            unroll_budget: 200_000,
        }
    }
}

/// Closed form of `p` with the symbols of `partial` fixed.
///
/// Symbols left free are assumed nonnegative, which lets loop counts such as
/// `m` stand without a `max(0, m)` guard.
pub fn solve_symbolic(p: &CostProgram, partial: &Binding) -> Result<CostExpr, SolveError> {
    solve_symbolic_with(p, partial, SolveOptions::default())
}

pub fn solve_symbolic_with(p: &CostProgram, partial: &Binding, options: SolveOptions) -> Result<CostExpr, SolveError> {
    let main = p.main().ok_or(SolveError::EmptyProgram)?;
    let mut solver = Solver {
        by_head: p.heads().into_iter().map(|h| (h, p.equations_for(h).collect())).collect(),
        stack: Vec::new(),
        options,
        unrolled: 0,
        fresh: 0,
    };
    let args: Vec<CostExpr> = main
        .params
        .iter()
        .map(|v| match partial.get(v) {
            Some(q) => CostExpr::Const(q.clone()),
            None => CostExpr::var(v),
        })
        .collect();
    solver.call(&main.head, &args)
}

struct Solver<'p> {
    by_head: HashMap<&'p str, Vec<&'p CostEquation>>,
    stack: Vec<String>,
    options: SolveOptions,
    unrolled: u64,
    fresh: usize,
}

#[derive(Debug, PartialEq, Eq)]
enum Truth {
    True,
    False,
    Unknown,
}

fn decide(c: &Constraint, subst: &dyn Fn(&str) -> CostExpr) -> Truth {
    let diff = Poly::from_cost(&CostExpr::from_pexpr_with(&c.lhs, subst))
        .sub(&Poly::from_cost(&CostExpr::from_pexpr_with(&c.rhs, subst)));
    if let Some(q) = diff.as_constant() {
        let holds = match c.relation {
            Relation::Ge => !q.is_negative(),
            Relation::Eq => q.is_zero(),
        };
        return if holds { Truth::True } else { Truth::False };
    }
    match c.relation {
        Relation::Ge if diff.provably_nonnegative() => Truth::True,
        Relation::Ge if diff.neg().sub(&Poly::int(1)).provably_nonnegative() => Truth::False,
        _ => Truth::Unknown,
    }
}

fn conjunction(cs: &[Constraint], subst: &dyn Fn(&str) -> CostExpr) -> Truth {
    let mut all = Truth::True;
    for c in cs {
        match decide(c, subst) {
            Truth::False => return Truth::False,
            Truth::Unknown => all = Truth::Unknown,
            Truth::True => {}
        }
    }
    all
}

fn substitution<'a>(params: &'a [String], args: &'a [CostExpr]) -> impl Fn(&str) -> CostExpr + 'a {
    move |v| match params.iter().position(|p| p == v) {
        Some(k) => args[k].clone(),
        None => CostExpr::var(v),
    }
}

/// The loop structure of a self-recursive cost function.
struct LoopShape<'p> {
    step_eq: &'p CostEquation,
    counter: usize,
    step: Rational,
    bound: Constraint,
    invariant: Vec<Constraint>,
}

impl<'p> Solver<'p> {
    fn call(&mut self, head: &str, args: &[CostExpr]) -> Result<CostExpr, SolveError> {
        let eqs = self
            .by_head
            .get(head)
            .cloned()
            .ok_or_else(|| SolveError::UndefinedFunction(head.to_string()))?;
        if self.stack.iter().any(|h| h == head) {
            return Err(SolveError::UnsupportedShape(format!("{head} is mutually recursive")));
        }
        self.stack.push(head.to_string());
        let result = if eqs.iter().any(|eq| eq.calls_itself()) {
            self.recursive(head, &eqs, args)
        } else {
            self.alternatives(&eqs, args)
        };
        self.stack.pop();
        result
    }

    /// `direct + calls` of one equation under `args`.
    fn body(&mut self, eq: &CostEquation, args: &[CostExpr], skip_self: bool) -> Result<CostExpr, SolveError> {
        let subst = substitution(&eq.params, args);
        let mut total = CostExpr::from_pexpr_with(&eq.direct, &subst);
        for c in &eq.calls {
            if skip_self && c.callee == eq.head {
                continue;
            }
            let call_args: Vec<CostExpr> = c.args.iter().map(|a| CostExpr::from_pexpr_with(a, &subst)).collect();
            let value = self.call(&c.callee, &call_args)?;
            total = CostExpr::add(total, value);
        }
        Ok(total)
    }

    /// Guarded alternatives: decided guards select, undecided ones are
    /// joined by `max`; nothing applicable costs 0.
    fn alternatives(&mut self, eqs: &[&CostEquation], args: &[CostExpr]) -> Result<CostExpr, SolveError> {
        let mut options = Vec::new();
        for eq in eqs {
            let subst = substitution(&eq.params, args);
            if conjunction(eq.guard.constraints(), &subst) == Truth::False {
                continue;
            }
            options.push(self.body(eq, args, false)?);
        }
        Ok(CostExpr::max(options))
    }

    fn shape(&self, head: &str, eqs: &[&'p CostEquation]) -> Result<LoopShape<'p>, SolveError> {
        let unsupported = |why: &str| SolveError::UnsupportedShape(format!("{head}: {why}"));
        let steps: Vec<&&CostEquation> = eqs.iter().filter(|eq| eq.calls_itself()).collect();
        if steps.len() != 1 {
            return Err(unsupported("expected exactly one recursive equation"));
        }
        let step_eq: &'p CostEquation = steps[0];
        let self_calls: Vec<_> = step_eq.calls.iter().filter(|c| c.callee == head).collect();
        if self_calls.len() != 1 {
            return Err(unsupported("expected exactly one recursive call"));
        }
        let mut counter = None;
        for (k, (param, arg)) in step_eq.params.iter().zip(&self_calls[0].args).enumerate() {
            if *arg == PExpr::Var(param.clone()) {
                continue;
            }
            let lin = arg.to_linear().ok_or_else(|| unsupported("non-linear recursive argument"))?;
            let delta = lin.constant.clone();
            if counter.is_some()
                || lin.coeffs.len() != 1
                || !lin.coeff(param).is_one()
                || !(delta.is_one() || (-delta.clone()).is_one())
            {
                return Err(unsupported("recursive call must step one parameter by 1"));
            }
            counter = Some((k, delta));
        }
        let (counter, step) = counter.ok_or_else(|| unsupported("recursive call does not change its arguments"))?;
        let name = &step_eq.params[counter];
        let mut bound = None;
        let mut invariant = Vec::new();
        for c in step_eq.guard.constraints() {
            let diff = c.difference().ok_or_else(|| unsupported("max inside a guard"))?;
            if diff.coeff(name).is_zero() {
                invariant.push(c.clone());
                continue;
            }
            // The guard must read `counter <= U` when counting up, `counter >= L` when counting down.
            if bound.is_some() || c.relation != Relation::Ge || diff.coeff(name) != -step.clone() {
                return Err(unsupported("loop guard is not a single bound on the counter"));
            }
            bound = Some(c.clone());
        }
        let bound = bound.ok_or_else(|| unsupported("loop guard does not bound the counter"))?;
        for eq in eqs {
            if !eq.calls_itself() && !(eq.direct.is_zero() && eq.calls.is_empty()) {
                return Err(unsupported("base case with a nonzero cost"));
            }
        }
        Ok(LoopShape {
            step_eq,
            counter,
            step,
            bound,
            invariant,
        })
    }

    fn recursive(&mut self, head: &str, eqs: &[&'p CostEquation], args: &[CostExpr]) -> Result<CostExpr, SolveError> {
        let shape = self.shape(head, eqs)?;
        let eq = shape.step_eq;
        let subst = substitution(&eq.params, args);
        match conjunction(&shape.invariant, &subst) {
            Truth::True => {}
            Truth::False => return Ok(CostExpr::zero()),
            Truth::Unknown => {
                return Err(SolveError::UnsupportedShape(format!("{head}: undecided loop-invariant guard")))
            }
        }
        let name = &eq.params[shape.counter];
        let diff = shape.bound.difference().expect("linear bound");
        // counting up: diff = U - i, so U = diff without i; counting down: diff = i - L.
        let rest = Poly::from_cost(&CostExpr::from_pexpr_with(&diff.without(name).to_pexpr(), &subst));
        let start = Poly::from_cost(&args[shape.counter]);
        let count = if shape.step.is_positive() {
            rest.sub(&start).add(&Poly::int(1))
        } else {
            start.add(&rest).add(&Poly::int(1))
        };

        if let Some(n) = count.as_constant() {
            if !n.is_positive() {
                return Ok(CostExpr::zero());
            }
            let n = n.floor().to_integer().to_u64().unwrap_or(u64::MAX);
            if n <= self.options.unroll_limit && self.unrolled + n <= self.options.unroll_budget {
                self.unrolled += n;
                let mut total = Poly::zero();
                for k in 0..n {
                    let mut step_args = args.to_vec();
                    let offset = Poly::constant(&shape.step * Rational::from_integer(k.into()));
                    step_args[shape.counter] = start.add(&offset).to_cost();
                    total = total.add(&Poly::from_cost(&self.body(eq, &step_args, true)?));
                }
                return Ok(total.to_cost());
            }
        }

        self.fresh += 1;
        let symbol = format!("{name}#{}", self.fresh);
        let mut step_args = args.to_vec();
        step_args[shape.counter] = CostExpr::var(&symbol);
        let body = self.body(eq, &step_args, true)?;
        let nat = if count.provably_nonnegative() {
            count.to_cost()
        } else {
            CostExpr::max(vec![CostExpr::zero(), count.to_cost()])
        };
        if !body.mentions(&symbol) {
            return Ok(CostExpr::mul(nat, body));
        }
        let body = Poly::from_cost(&body);
        if body.mentions_under_max(&symbol) {
            return Err(SolveError::UnsupportedShape(format!(
                "{head}: per-iteration cost takes a maximum that depends on the counter"
            )));
        }
        Ok(sum_over(&body, &symbol, &start, &shape.step, &Poly::from_cost(&nat)).to_cost())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::int;

    fn binding(pairs: &[(&str, i64)]) -> Binding {
        pairs.iter().map(|(k, v)| (k.to_string(), int(*v))).collect()
    }

    fn program(text: &str) -> CostProgram {
        text.parse().unwrap()
    }

    const PREMIUM: &str = "main(u,P,B) = if_2(u,P,B) []\nif_2(u,P,B) = P [u = 1]\nif_2(u,P,B) = B [u = 0]\n";
    const MAP_REDUCE: &str = "main(m,r,M,R) = for_2(0,m,r,M,R) []
for_2(i,m,r,M,R) = M + for_4(0,r,R) + for_2(i+1,m,r,M,R) [m >= i + 1]
for_2(i,m,r,M,R) = 0 [i >= m]
for_4(j,r,R) = R + for_4(j+1,r,R) [r >= j + 1]
for_4(j,r,R) = 0 [j >= r]
";

    #[test]
    fn premium_branch() {
        let p = program(PREMIUM);
        assert_eq!(solve_symbolic(&p, &Binding::new()).unwrap().to_string(), "max(P, B)");
        assert_eq!(solve_symbolic(&p, &binding(&[("u", 1)])).unwrap().to_string(), "P");
        assert_eq!(solve_symbolic(&p, &binding(&[("u", 0)])).unwrap().to_string(), "B");
    }

    #[test]
    fn map_reduce_loops() {
        let p = program(MAP_REDUCE);
        let e = solve_symbolic(&p, &Binding::new()).unwrap();
        assert_eq!(e.to_string(), "m * (M + r * R)");
        let e = solve_symbolic(&p, &binding(&[("m", 2), ("r", 3)])).unwrap();
        assert_eq!(Poly::from_cost(&e), Poly::from_cost(&CostExpr::parse("2 * M + 6 * R").unwrap()));
    }

    #[test]
    fn linear_recursion() {
        let p = program("main(N,M) = f(N,M) []\nf(N,M) = M + f(N-1,M) [N >= 1]\nf(N,M) = 0 [N = 0]\n");
        assert_eq!(solve_symbolic(&p, &Binding::new()).unwrap().to_string(), "N * M");
    }

    #[test]
    fn counter_dependent_bodies_use_closed_sums() {
        let p = program(
            "main(n,W) = for_2(0,n,W) []
for_2(i,n,W) = for_3(0,i,W) + for_2(i+1,n,W) [n >= i + 1]
for_2(i,n,W) = 0 [i >= n]
for_3(j,i,W) = W + for_3(j+1,i,W) [i >= j + 1]
for_3(j,i,W) = 0 [j >= i]
",
        );
        let e = solve_symbolic(&p, &Binding::new()).unwrap();
        for n in 0..6i64 {
            let b = binding(&[("n", n), ("W", 3)]);
            let value = super::super::instantiate(&e, &b);
            assert_eq!(value.value(), Some(&int(3 * n * (n - 1) / 2)), "{e}");
        }
    }

    #[test]
    fn possibly_negative_counts_are_clamped() {
        let p = program(
            "main(m,W) = for_2(0,m,W) []\nfor_2(i,m,W) = W + for_2(i+1,m,W) [m - 3 >= i + 1]\nfor_2(i,m,W) = 0 [i >= m - 3]\n",
        );
        let e = solve_symbolic(&p, &Binding::new()).unwrap();
        assert_eq!(e.to_string(), "max(0, m - 3) * W");
    }

    #[test]
    fn unsupported_shapes() {
        let p = program("main(n) = f(n) []\nf(n) = 1 + f(n) [n >= 0]\n");
        assert!(matches!(solve_symbolic(&p, &Binding::new()), Err(SolveError::UnsupportedShape(_))));
        let p = program("main(n) = f(n) []\nf(n) = g(n) []\ng(n) = f(n) []\n");
        assert!(matches!(solve_symbolic(&p, &Binding::new()), Err(SolveError::UnsupportedShape(_))));
        let p = program("main(n) = f(n) []\nf(n) = 1 + f(n+2) [5 >= n]\nf(n) = 0 [n >= 6]\n");
        assert!(matches!(solve_symbolic(&p, &Binding::new()), Err(SolveError::UnsupportedShape(_))));
    }

    #[test]
    fn empty_program() {
        let p = program("main() = 0 []\n");
        assert_eq!(solve_symbolic(&p, &Binding::new()).unwrap(), CostExpr::zero());
    }
}
