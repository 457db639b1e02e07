//! Presburger arithmetic expressions and linear conjunctive guards, the
//! building blocks of cost equations.

use std::collections::BTreeMap;
use std::fmt::{self, Write};

use num::{One, Signed, Zero};

use crate::rational::{format_fraction, Rational};

/// `x | q | e + e | e - e | q * e | max(e1, ..., ek)` with `q ≥ 0`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum PExpr {
    Var(String),
    Const(Rational),
    Add(Box<PExpr>, Box<PExpr>),
    Sub(Box<PExpr>, Box<PExpr>),
    Scale(Rational, Box<PExpr>),
    Max(Vec<PExpr>),
}

impl PExpr {
    pub fn var(name: &str) -> PExpr {
        PExpr::Var(name.to_string())
    }

    pub fn int(n: i64) -> PExpr {
        PExpr::constant(crate::rational::int(n))
    }

    pub fn zero() -> PExpr {
        PExpr::Const(Rational::zero())
    }

    /// A literal; negative values become `0 - |q|` to keep constants in range.
    pub fn constant(q: Rational) -> PExpr {
        if q.is_negative() {
            PExpr::Sub(Box::new(PExpr::zero()), Box::new(PExpr::Const(-q)))
        } else {
            PExpr::Const(q)
        }
    }

    /// `q * e`, keeping the coefficient nonnegative.
    pub fn scaled(q: Rational, e: PExpr) -> PExpr {
        if q.is_negative() {
            PExpr::Sub(Box::new(PExpr::zero()), Box::new(PExpr::Scale(-q, Box::new(e))))
        } else {
            PExpr::Scale(q, Box::new(e))
        }
    }

    pub fn is_zero(&self) -> bool {
        matches!(self, PExpr::Const(q) if q.is_zero())
    }

    pub fn as_const(&self) -> Option<&Rational> {
        match self {
            PExpr::Const(q) => Some(q),
            _ => None,
        }
    }

    /// Sum with zero elimination; a right operand that is itself a sum is
    /// reassociated to the left so chains print flat.
    pub fn plus(self, rhs: PExpr) -> PExpr {
        if rhs.is_zero() {
            return self;
        }
        if self.is_zero() {
            return rhs;
        }
        match rhs {
            PExpr::Add(x, y) => self.plus(*x).plus(*y),
            rhs => PExpr::Add(Box::new(self), Box::new(rhs)),
        }
    }

    /// `e + 1`, folding into a constant operand.
    pub fn plus_one(&self) -> PExpr {
        match self {
            PExpr::Const(q) => PExpr::Const(q + Rational::one()),
            e => PExpr::Add(Box::new(e.clone()), Box::new(PExpr::Const(Rational::one()))),
        }
    }

    /// `max` with nested maxima flattened and duplicate arguments removed.
    pub fn max_of(args: Vec<PExpr>) -> PExpr {
        let mut flat: Vec<PExpr> = Vec::new();
        for a in args {
            match a {
                PExpr::Max(inner) => {
                    for x in inner {
                        if !flat.contains(&x) {
                            flat.push(x);
                        }
                    }
                }
                a => {
                    if !flat.contains(&a) {
                        flat.push(a);
                    }
                }
            }
        }
        match flat.len() {
            0 => PExpr::zero(),
            1 => flat.pop().unwrap(),
            _ => PExpr::Max(flat),
        }
    }

    pub fn contains_max(&self) -> bool {
        match self {
            PExpr::Var(_) | PExpr::Const(_) => false,
            PExpr::Add(a, b) | PExpr::Sub(a, b) => a.contains_max() || b.contains_max(),
            PExpr::Scale(_, e) => e.contains_max(),
            PExpr::Max(_) => true,
        }
    }

    /// Variables in left-to-right order of first occurrence.
    pub fn vars(&self) -> Vec<&str> {
        let mut out = Vec::new();
        self.collect_vars(&mut out);
        out
    }

    pub(crate) fn collect_vars<'a>(&'a self, out: &mut Vec<&'a str>) {
        match self {
            PExpr::Var(v) => {
                if !out.contains(&v.as_str()) {
                    out.push(v);
                }
            }
            PExpr::Const(_) => {}
            PExpr::Add(a, b) | PExpr::Sub(a, b) => {
                a.collect_vars(out);
                b.collect_vars(out);
            }
            PExpr::Scale(_, e) => e.collect_vars(out),
            PExpr::Max(args) => args.iter().for_each(|a| a.collect_vars(out)),
        }
    }

    pub fn eval(&self, value_of: &dyn Fn(&str) -> Option<Rational>) -> Option<Rational> {
        Some(match self {
            PExpr::Var(v) => value_of(v)?,
            PExpr::Const(q) => q.clone(),
            PExpr::Add(a, b) => a.eval(value_of)? + b.eval(value_of)?,
            PExpr::Sub(a, b) => a.eval(value_of)? - b.eval(value_of)?,
            PExpr::Scale(q, e) => q * e.eval(value_of)?,
            PExpr::Max(args) => {
                let mut best: Option<Rational> = None;
                for a in args {
                    let v = a.eval(value_of)?;
                    best = Some(match best {
                        Some(b) if b >= v => b,
                        _ => v,
                    });
                }
                best?
            }
        })
    }

    /// Replaces variables by expressions; unmapped variables are kept.
    pub fn substitute(&self, map: &BTreeMap<String, PExpr>) -> PExpr {
        match self {
            PExpr::Var(v) => map.get(v).cloned().unwrap_or_else(|| self.clone()),
            PExpr::Const(_) => self.clone(),
            PExpr::Add(a, b) => PExpr::Add(Box::new(a.substitute(map)), Box::new(b.substitute(map))),
            PExpr::Sub(a, b) => PExpr::Sub(Box::new(a.substitute(map)), Box::new(b.substitute(map))),
            PExpr::Scale(q, e) => PExpr::Scale(q.clone(), Box::new(e.substitute(map))),
            PExpr::Max(args) => PExpr::Max(args.iter().map(|a| a.substitute(map)).collect()),
        }
    }

    /// Linear form, or `None` when the expression contains `max`.
    pub fn to_linear(&self) -> Option<Linear> {
        Some(match self {
            PExpr::Var(v) => Linear::var(v),
            PExpr::Const(q) => Linear::constant(q.clone()),
            PExpr::Add(a, b) => a.to_linear()?.add(&b.to_linear()?),
            PExpr::Sub(a, b) => a.to_linear()?.add(&b.to_linear()?.scale(&-Rational::one())),
            PExpr::Scale(q, e) => e.to_linear()?.scale(q),
            PExpr::Max(_) => return None,
        })
    }

    /// Compact rendering without spaces, used for call arguments.
    pub fn compact(&self) -> String {
        let mut out = String::new();
        write_pexpr(&mut out, self, 0, false).expect("string write");
        out
    }
}

const PREC_SUM: u8 = 1;
const PREC_SCALE: u8 = 2;

fn write_pexpr(out: &mut impl Write, e: &PExpr, min_prec: u8, spaced: bool) -> fmt::Result {
    let op = |out: &mut dyn Write, sym: &str| {
        if spaced {
            write!(out, " {sym} ")
        } else {
            out.write_str(sym)
        }
    };
    match e {
        PExpr::Var(v) => out.write_str(v),
        PExpr::Const(q) => {
            // A fraction under a scale would re-read as a division chain.
            if !q.is_integer() && min_prec > PREC_SCALE {
                write!(out, "({})", format_fraction(q))
            } else {
                out.write_str(&format_fraction(q))
            }
        }
        PExpr::Add(a, b) | PExpr::Sub(a, b) => {
            let paren = min_prec > PREC_SUM;
            if paren {
                out.write_char('(')?;
            }
            write_pexpr(out, a, PREC_SUM, spaced)?;
            op(out, if matches!(e, PExpr::Add(..)) { "+" } else { "-" })?;
            write_pexpr(out, b, PREC_SUM + 1, spaced)?;
            if paren {
                out.write_char(')')?;
            }
            Ok(())
        }
        PExpr::Scale(q, inner) => {
            let paren = min_prec > PREC_SCALE;
            if paren {
                out.write_char('(')?;
            }
            out.write_str(&format_fraction(q))?;
            op(out, "*")?;
            write_pexpr(out, inner, PREC_SCALE + 1, spaced)?;
            if paren {
                out.write_char(')')?;
            }
            Ok(())
        }
        PExpr::Max(args) => {
            out.write_str("max(")?;
            for (k, a) in args.iter().enumerate() {
                if k > 0 {
                    out.write_str(if spaced { ", " } else { "," })?;
                }
                write_pexpr(out, a, 0, spaced)?;
            }
            out.write_char(')')
        }
    }
}

impl fmt::Display for PExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_pexpr(f, self, 0, true)
    }
}

/// `Σ coeff·var + constant` over exact rationals.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Linear {
    pub coeffs: BTreeMap<String, Rational>,
    pub constant: Rational,
}

#[allow(clippy::should_implement_trait)]
impl Linear {
    pub fn var(v: &str) -> Linear {
        let mut coeffs = BTreeMap::new();
        coeffs.insert(v.to_string(), Rational::one());
        Linear {
            coeffs,
            constant: Rational::zero(),
        }
    }

    pub fn constant(q: Rational) -> Linear {
        Linear {
            coeffs: BTreeMap::new(),
            constant: q,
        }
    }

    pub fn add(mut self, other: &Linear) -> Linear {
        for (v, c) in &other.coeffs {
            let entry = self.coeffs.entry(v.clone()).or_insert_with(Rational::zero);
            *entry += c;
        }
        self.coeffs.retain(|_, c| !c.is_zero());
        self.constant += &other.constant;
        self
    }

    pub fn scale(mut self, q: &Rational) -> Linear {
        if q.is_zero() {
            return Linear::default();
        }
        for c in self.coeffs.values_mut() {
            *c *= q;
        }
        self.constant *= q;
        self
    }

    pub fn coeff(&self, v: &str) -> Rational {
        self.coeffs.get(v).cloned().unwrap_or_else(Rational::zero)
    }

    /// The form with `v` removed.
    pub fn without(&self, v: &str) -> Linear {
        let mut out = self.clone();
        out.coeffs.remove(v);
        out
    }

    /// Back to an expression: positive terms first, then subtracted ones.
    pub fn to_pexpr(&self) -> PExpr {
        let mut pos = PExpr::zero();
        let mut neg = PExpr::zero();
        let term = |v: &str, c: &Rational| {
            if c.is_one() {
                PExpr::var(v)
            } else {
                PExpr::Scale(c.clone(), Box::new(PExpr::var(v)))
            }
        };
        for (v, c) in &self.coeffs {
            if c.is_positive() {
                pos = pos.plus(term(v, c));
            } else {
                neg = neg.plus(term(v, &-c));
            }
        }
        if self.constant.is_positive() {
            pos = pos.plus(PExpr::Const(self.constant.clone()));
        } else if self.constant.is_negative() {
            neg = neg.plus(PExpr::Const(-self.constant.clone()));
        }
        if neg.is_zero() {
            pos
        } else {
            PExpr::Sub(Box::new(pos), Box::new(neg))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Relation {
    Ge,
    Eq,
}

/// `lhs ≥ rhs` or `lhs = rhs`; both sides are `max`-free.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Constraint {
    pub relation: Relation,
    pub lhs: PExpr,
    pub rhs: PExpr,
}

impl Constraint {
    pub fn ge(lhs: PExpr, rhs: PExpr) -> Constraint {
        Constraint {
            relation: Relation::Ge,
            lhs,
            rhs,
        }
    }

    pub fn eq(lhs: PExpr, rhs: PExpr) -> Constraint {
        Constraint {
            relation: Relation::Eq,
            lhs,
            rhs,
        }
    }

    /// `None` when a variable is unbound.
    pub fn holds(&self, value_of: &dyn Fn(&str) -> Option<Rational>) -> Option<bool> {
        let l = self.lhs.eval(value_of)?;
        let r = self.rhs.eval(value_of)?;
        Some(match self.relation {
            Relation::Ge => l >= r,
            Relation::Eq => l == r,
        })
    }

    pub fn substitute(&self, map: &BTreeMap<String, PExpr>) -> Constraint {
        Constraint {
            relation: self.relation,
            lhs: self.lhs.substitute(map),
            rhs: self.rhs.substitute(map),
        }
    }

    /// `lhs - rhs` as a linear form.
    pub fn difference(&self) -> Option<Linear> {
        Some(
            self.lhs
                .to_linear()?
                .add(&self.rhs.to_linear()?.scale(&-Rational::one())),
        )
    }
}

impl fmt::Display for Constraint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let rel = match self.relation {
            Relation::Ge => ">=",
            Relation::Eq => "=",
        };
        write!(f, "{} {rel} {}", self.lhs, self.rhs)
    }
}

/// A conjunction of constraints; the empty guard is `true`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default, PartialOrd, Ord)]
pub struct Guard(pub Vec<Constraint>);

impl Guard {
    pub fn truth() -> Guard {
        Guard(Vec::new())
    }

    pub fn single(c: Constraint) -> Guard {
        Guard(vec![c])
    }

    pub fn is_true(&self) -> bool {
        self.0.is_empty()
    }

    pub fn constraints(&self) -> &[Constraint] {
        &self.0
    }

    pub fn and(mut self, other: Guard) -> Guard {
        self.0.extend(other.0);
        self
    }

    /// `None` when some constraint mentions an unbound variable.
    pub fn holds(&self, value_of: &dyn Fn(&str) -> Option<Rational>) -> Option<bool> {
        let mut result = true;
        for c in &self.0 {
            result &= c.holds(value_of)?;
        }
        Some(result)
    }

    pub fn vars(&self) -> Vec<&str> {
        let mut out = Vec::new();
        for c in &self.0 {
            c.lhs.collect_vars(&mut out);
            c.rhs.collect_vars(&mut out);
        }
        out
    }

    pub fn substitute(&self, map: &BTreeMap<String, PExpr>) -> Guard {
        Guard(self.0.iter().map(|c| c.substitute(map)).collect())
    }
}

impl fmt::Display for Guard {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_char('[')?;
        for (k, c) in self.0.iter().enumerate() {
            if k > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{c}")?;
        }
        f.write_char(']')
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{int, ratio};

    fn v(name: &str) -> PExpr {
        PExpr::var(name)
    }

    #[test]
    fn display_precedence() {
        let e = PExpr::Scale(int(2), Box::new(v("m").plus(PExpr::int(1))));
        assert_eq!(e.to_string(), "2 * (m + 1)");
        assert_eq!(e.compact(), "2*(m+1)");
        let e = PExpr::Sub(Box::new(v("a")), Box::new(v("b").plus(v("c"))));
        assert_eq!(e.to_string(), "a - (b + c)");
        let e = PExpr::Scale(ratio(1, 2), Box::new(PExpr::Const(ratio(3, 4))));
        assert_eq!(e.to_string(), "1/2 * (3/4)");
        let e = v("K").plus(PExpr::max_of(vec![v("P"), v("B")]));
        assert_eq!(e.to_string(), "K + max(P, B)");
        assert_eq!(e.compact(), "K+max(P,B)");
    }

    #[test]
    fn plus_flattens_and_drops_zero() {
        let e = v("A").plus(v("B").plus(v("C"))).plus(PExpr::zero());
        assert_eq!(e.to_string(), "A + B + C");
        assert_eq!(PExpr::zero().plus(v("x")), v("x"));
    }

    #[test]
    fn max_dedupes() {
        assert_eq!(PExpr::max_of(vec![v("P"), v("P")]), v("P"));
        assert_eq!(
            PExpr::max_of(vec![v("a"), PExpr::Max(vec![v("b"), v("a")])]),
            PExpr::Max(vec![v("a"), v("b")])
        );
    }

    #[test]
    fn linear_forms() {
        let e = PExpr::Sub(
            Box::new(PExpr::Scale(int(2), Box::new(v("m").plus(PExpr::int(1))))),
            Box::new(v("m")),
        );
        let lin = e.to_linear().unwrap();
        assert_eq!(lin.coeff("m"), int(1));
        assert_eq!(lin.constant, int(2));
        assert_eq!(lin.to_pexpr().to_string(), "m + 2");
        assert!(PExpr::max_of(vec![v("a"), v("b")]).to_linear().is_none());
    }

    #[test]
    fn guard_evaluation() {
        let g = Guard(vec![Constraint::ge(v("m"), v("i").plus_one()), Constraint::eq(v("u"), PExpr::int(1))]);
        assert_eq!(g.to_string(), "[m >= i + 1, u = 1]");
        let env = |name: &str| match name {
            "m" => Some(int(3)),
            "i" => Some(int(2)),
            "u" => Some(int(1)),
            _ => None,
        };
        assert_eq!(g.holds(&env), Some(true));
        let partial = |name: &str| if name == "m" { Some(int(3)) } else { None };
        assert_eq!(g.holds(&partial), None);
        assert_eq!(Guard::truth().to_string(), "[]");
    }
}
