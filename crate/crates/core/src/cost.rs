//! Closed-form cost expressions produced by the solver.
//!
//! Unlike [`PExpr`], a cost expression may multiply two symbolic factors:
//! solving a loop multiplies its iteration count by the per-iteration cost,
//! as in `m * (M + r * R)`.

use std::collections::BTreeMap;
use std::fmt::{self, Write};

use num::{One, Signed, Zero};
use serde::{Serialize, Serializer};

use crate::presburger::PExpr;
use crate::rational::{format_fraction, Rational};
use crate::syntax::{Term, TermParser};

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum CostExpr {
    Const(Rational),
    Var(String),
    Add(Box<CostExpr>, Box<CostExpr>),
    Sub(Box<CostExpr>, Box<CostExpr>),
    Mul(Box<CostExpr>, Box<CostExpr>),
    Max(Vec<CostExpr>),
}

#[allow(clippy::should_implement_trait)]
impl CostExpr {
    pub fn zero() -> CostExpr {
        CostExpr::Const(Rational::zero())
    }

    pub fn int(n: i64) -> CostExpr {
        CostExpr::Const(crate::rational::int(n))
    }

    pub fn var(name: &str) -> CostExpr {
        CostExpr::Var(name.to_string())
    }

    pub fn as_const(&self) -> Option<&Rational> {
        match self {
            CostExpr::Const(q) => Some(q),
            _ => None,
        }
    }

    pub fn is_zero(&self) -> bool {
        matches!(self, CostExpr::Const(q) if q.is_zero())
    }

    pub fn add(a: CostExpr, b: CostExpr) -> CostExpr {
        match (a, b) {
            (CostExpr::Const(x), CostExpr::Const(y)) => CostExpr::Const(x + y),
            (a, b) if b.is_zero() => a,
            (a, b) if a.is_zero() => b,
            (a, CostExpr::Add(x, y)) => CostExpr::add(CostExpr::add(a, *x), *y),
            (a, b) => CostExpr::Add(Box::new(a), Box::new(b)),
        }
    }

    pub fn sub(a: CostExpr, b: CostExpr) -> CostExpr {
        match (a, b) {
            (CostExpr::Const(x), CostExpr::Const(y)) => CostExpr::Const(x - y),
            (a, b) if b.is_zero() => a,
            (a, b) if a == b => CostExpr::zero(),
            (a, b) => CostExpr::Sub(Box::new(a), Box::new(b)),
        }
    }

    pub fn mul(a: CostExpr, b: CostExpr) -> CostExpr {
        match (a, b) {
            (CostExpr::Const(x), CostExpr::Const(y)) => CostExpr::Const(x * y),
            (a, b) if a.is_zero() || b.is_zero() => CostExpr::zero(),
            (CostExpr::Const(x), b) if x.is_one() => b,
            (a, CostExpr::Const(y)) if y.is_one() => a,
            // Coefficients go on the left and merge.
            (a, CostExpr::Const(y)) => CostExpr::mul(CostExpr::Const(y), a),
            (CostExpr::Const(x), CostExpr::Mul(l, r)) if l.as_const().is_some() => {
                let y = l.as_const().unwrap().clone();
                CostExpr::mul(CostExpr::Const(x * y), *r)
            }
            (a, b) => CostExpr::Mul(Box::new(a), Box::new(b)),
        }
    }

    /// Flattens nested maxima, drops duplicates and merges constants.
    pub fn max(args: Vec<CostExpr>) -> CostExpr {
        let mut flat: Vec<CostExpr> = Vec::new();
        let mut constant: Option<(usize, Rational)> = None;
        let mut push = |e: CostExpr, flat: &mut Vec<CostExpr>| match e {
            CostExpr::Const(q) => match &mut constant {
                Some((_, best)) => {
                    if q > *best {
                        *best = q;
                    }
                }
                None => {
                    constant = Some((flat.len(), q.clone()));
                    flat.push(CostExpr::Const(q));
                }
            },
            e => {
                if !flat.contains(&e) {
                    flat.push(e);
                }
            }
        };
        for a in args {
            match a {
                CostExpr::Max(inner) => inner.into_iter().for_each(|x| push(x, &mut flat)),
                a => push(a, &mut flat),
            }
        }
        if let Some((at, best)) = constant {
            flat[at] = CostExpr::Const(best);
        }
        match flat.len() {
            0 => CostExpr::zero(),
            1 => flat.pop().unwrap(),
            _ => CostExpr::Max(flat),
        }
    }

    pub fn from_pexpr(e: &PExpr) -> CostExpr {
        CostExpr::from_pexpr_with(e, &|v| CostExpr::var(v))
    }

    /// Converts `e`, replacing each variable by `subst(v)`.
    pub fn from_pexpr_with(e: &PExpr, subst: &dyn Fn(&str) -> CostExpr) -> CostExpr {
        match e {
            PExpr::Var(v) => subst(v),
            PExpr::Const(q) => CostExpr::Const(q.clone()),
            PExpr::Add(a, b) => CostExpr::add(
                CostExpr::from_pexpr_with(a, subst),
                CostExpr::from_pexpr_with(b, subst),
            ),
            PExpr::Sub(a, b) => CostExpr::sub(
                CostExpr::from_pexpr_with(a, subst),
                CostExpr::from_pexpr_with(b, subst),
            ),
            PExpr::Scale(q, a) => CostExpr::mul(CostExpr::Const(q.clone()), CostExpr::from_pexpr_with(a, subst)),
            PExpr::Max(args) => CostExpr::max(args.iter().map(|a| CostExpr::from_pexpr_with(a, subst)).collect()),
        }
    }

    /// Rebuilds the expression with `f` applied to every variable.
    pub fn map_vars(&self, f: &dyn Fn(&str) -> CostExpr) -> CostExpr {
        match self {
            CostExpr::Var(v) => f(v),
            CostExpr::Const(_) => self.clone(),
            CostExpr::Add(a, b) => CostExpr::add(a.map_vars(f), b.map_vars(f)),
            CostExpr::Sub(a, b) => CostExpr::sub(a.map_vars(f), b.map_vars(f)),
            CostExpr::Mul(a, b) => CostExpr::mul(a.map_vars(f), b.map_vars(f)),
            CostExpr::Max(args) => CostExpr::max(args.iter().map(|a| a.map_vars(f)).collect()),
        }
    }

    /// Substitutes bound symbols and simplifies.
    pub fn substitute(&self, binding: &BTreeMap<String, Rational>) -> CostExpr {
        self.map_vars(&|v| match binding.get(v) {
            Some(q) => CostExpr::Const(q.clone()),
            None => CostExpr::var(v),
        })
    }

    pub fn eval(&self, value_of: &dyn Fn(&str) -> Option<Rational>) -> Option<Rational> {
        Some(match self {
            CostExpr::Var(v) => value_of(v)?,
            CostExpr::Const(q) => q.clone(),
            CostExpr::Add(a, b) => a.eval(value_of)? + b.eval(value_of)?,
            CostExpr::Sub(a, b) => a.eval(value_of)? - b.eval(value_of)?,
            CostExpr::Mul(a, b) => a.eval(value_of)? * b.eval(value_of)?,
            CostExpr::Max(args) => {
                let mut best: Option<Rational> = None;
                for a in args {
                    let v = a.eval(value_of)?;
                    if best.as_ref().is_none_or(|b| v > *b) {
                        best = Some(v);
                    }
                }
                best?
            }
        })
    }

    /// Free symbols in left-to-right order of first occurrence.
    pub fn free_vars(&self) -> Vec<&str> {
        let mut out = Vec::new();
        self.collect_vars(&mut out);
        out
    }

    fn collect_vars<'a>(&'a self, out: &mut Vec<&'a str>) {
        match self {
            CostExpr::Var(v) => {
                if !out.contains(&v.as_str()) {
                    out.push(v);
                }
            }
            CostExpr::Const(_) => {}
            CostExpr::Add(a, b) | CostExpr::Sub(a, b) | CostExpr::Mul(a, b) => {
                a.collect_vars(out);
                b.collect_vars(out);
            }
            CostExpr::Max(args) => args.iter().for_each(|a| a.collect_vars(out)),
        }
    }

    pub fn mentions(&self, symbol: &str) -> bool {
        self.free_vars().contains(&symbol)
    }

    /// Reads the printed form back; `max` is the only function allowed.
    pub fn parse(text: &str) -> Result<CostExpr, String> {
        let mut p = TermParser::new(text)?;
        let t = p.term()?;
        if !p.at_end() {
            return Err(p.error("end of expression"));
        }
        CostExpr::from_term(&t)
    }

    pub(crate) fn from_term(t: &Term) -> Result<CostExpr, String> {
        Ok(match t {
            Term::Num(q) => CostExpr::Const(q.clone()),
            Term::Name(v) => CostExpr::var(v),
            Term::App(f, args) if f == "max" && !args.is_empty() => {
                CostExpr::max(args.iter().map(CostExpr::from_term).collect::<Result<_, _>>()?)
            }
            Term::App(f, _) => return Err(format!("unexpected call of {f} in a cost expression")),
            Term::Add(a, b) => CostExpr::add(CostExpr::from_term(a)?, CostExpr::from_term(b)?),
            Term::Sub(a, b) => CostExpr::sub(CostExpr::from_term(a)?, CostExpr::from_term(b)?),
            Term::Mul(a, b) => CostExpr::mul(CostExpr::from_term(a)?, CostExpr::from_term(b)?),
            Term::Neg(a) => CostExpr::sub(CostExpr::zero(), CostExpr::from_term(a)?),
        })
    }
}

const PREC_SUM: u8 = 1;
const PREC_MUL: u8 = 2;

fn write_cost(out: &mut impl Write, e: &CostExpr, min_prec: u8) -> fmt::Result {
    match e {
        CostExpr::Var(v) => out.write_str(v),
        CostExpr::Const(q) => {
            if q.is_negative() && min_prec > 0 {
                write!(out, "({})", format_fraction(q))
            } else {
                out.write_str(&format_fraction(q))
            }
        }
        CostExpr::Add(a, b) | CostExpr::Sub(a, b) => {
            let paren = min_prec > PREC_SUM;
            if paren {
                out.write_char('(')?;
            }
            write_cost(out, a, PREC_SUM)?;
            out.write_str(if matches!(e, CostExpr::Add(..)) { " + " } else { " - " })?;
            write_cost(out, b, PREC_SUM + 1)?;
            if paren {
                out.write_char(')')?;
            }
            Ok(())
        }
        CostExpr::Mul(a, b) => {
            let paren = min_prec > PREC_MUL;
            if paren {
                out.write_char('(')?;
            }
            write_cost(out, a, PREC_MUL)?;
            out.write_str(" * ")?;
            write_cost(out, b, PREC_MUL)?;
            if paren {
                out.write_char(')')?;
            }
            Ok(())
        }
        CostExpr::Max(args) => {
            out.write_str("max(")?;
            for (k, a) in args.iter().enumerate() {
                if k > 0 {
                    out.write_str(", ")?;
                }
                write_cost(out, a, 0)?;
            }
            out.write_char(')')
        }
    }
}

impl fmt::Display for CostExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_cost(f, self, 0)
    }
}

impl Serialize for CostExpr {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}
