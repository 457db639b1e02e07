//! Canonical polynomial normal form over symbols and `max` atoms.
//!
//! Two cost expressions that denote the same polynomial have equal
//! [`Poly`] values, which is how expressions are compared "up to
//! normalization". The form also supports closed-form summation over a
//! loop counter.

use std::collections::BTreeMap;

use num::{BigInt, One, Signed, Zero};

use crate::cost::CostExpr;
use crate::rational::Rational;

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Atom {
    Sym(String),
    /// Arguments sorted and deduplicated.
    Max(Vec<Poly>),
}

/// Product of atoms with positive exponents.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct Monomial(pub BTreeMap<Atom, u32>);

impl Monomial {
    pub fn one() -> Monomial {
        Monomial::default()
    }

    pub fn is_one(&self) -> bool {
        self.0.is_empty()
    }

    fn times(&self, other: &Monomial) -> Monomial {
        let mut out = self.clone();
        for (a, e) in &other.0 {
            *out.0.entry(a.clone()).or_insert(0) += e;
        }
        out
    }

    pub fn degree_of(&self, sym: &str) -> u32 {
        self.0.get(&Atom::Sym(sym.to_string())).copied().unwrap_or(0)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct Poly(pub BTreeMap<Monomial, Rational>);

impl Poly {
    pub fn zero() -> Poly {
        Poly::default()
    }

    pub fn constant(q: Rational) -> Poly {
        let mut p = Poly::zero();
        if !q.is_zero() {
            p.0.insert(Monomial::one(), q);
        }
        p
    }

    pub fn int(n: i64) -> Poly {
        Poly::constant(crate::rational::int(n))
    }

    pub fn atom(a: Atom) -> Poly {
        let mut m = Monomial::one();
        m.0.insert(a, 1);
        let mut p = Poly::zero();
        p.0.insert(m, Rational::one());
        p
    }

    pub fn sym(name: &str) -> Poly {
        Poly::atom(Atom::Sym(name.to_string()))
    }

    /// `max` of the arguments, folded when all are constants.
    pub fn max_of(args: Vec<Poly>) -> Poly {
        let mut args: Vec<Poly> = args
            .into_iter()
            .flat_map(|p| match p.as_single_max() {
                Some(inner) => inner,
                None => vec![p],
            })
            .collect();
        if args.iter().all(|a| a.as_constant().is_some()) {
            return args
                .iter()
                .map(|a| a.as_constant().unwrap())
                .max()
                .map(Poly::constant)
                .unwrap_or_else(Poly::zero);
        }
        args.sort();
        args.dedup();
        if args.len() == 1 {
            return args.pop().unwrap();
        }
        Poly::atom(Atom::Max(args))
    }

    fn as_single_max(&self) -> Option<Vec<Poly>> {
        if self.0.len() != 1 {
            return None;
        }
        let (m, c) = self.0.iter().next().unwrap();
        if !c.is_one() || m.0.len() != 1 {
            return None;
        }
        match m.0.iter().next().unwrap() {
            (Atom::Max(args), 1) => Some(args.clone()),
            _ => None,
        }
    }

    pub fn is_zero(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_constant(&self) -> Option<Rational> {
        match self.0.len() {
            0 => Some(Rational::zero()),
            1 => self.0.get(&Monomial::one()).cloned(),
            _ => None,
        }
    }

    pub fn add(&self, other: &Poly) -> Poly {
        let mut out = self.clone();
        for (m, c) in &other.0 {
            let entry = out.0.entry(m.clone()).or_insert_with(Rational::zero);
            *entry += c;
            if entry.is_zero() {
                out.0.remove(m);
            }
        }
        out
    }

    pub fn neg(&self) -> Poly {
        Poly(self.0.iter().map(|(m, c)| (m.clone(), -c)).collect())
    }

    pub fn sub(&self, other: &Poly) -> Poly {
        self.add(&other.neg())
    }

    pub fn scale(&self, q: &Rational) -> Poly {
        if q.is_zero() {
            return Poly::zero();
        }
        Poly(self.0.iter().map(|(m, c)| (m.clone(), c * q)).collect())
    }

    pub fn mul(&self, other: &Poly) -> Poly {
        let mut out = Poly::zero();
        for (m1, c1) in &self.0 {
            for (m2, c2) in &other.0 {
                let term = Poly(BTreeMap::from([(m1.times(m2), c1 * c2)]));
                out = out.add(&term);
            }
        }
        out
    }

    pub fn pow(&self, k: u32) -> Poly {
        let mut out = Poly::int(1);
        for _ in 0..k {
            out = out.mul(self);
        }
        out
    }

    pub fn from_cost(e: &CostExpr) -> Poly {
        match e {
            CostExpr::Const(q) => Poly::constant(q.clone()),
            CostExpr::Var(v) => Poly::sym(v),
            CostExpr::Add(a, b) => Poly::from_cost(a).add(&Poly::from_cost(b)),
            CostExpr::Sub(a, b) => Poly::from_cost(a).sub(&Poly::from_cost(b)),
            CostExpr::Mul(a, b) => Poly::from_cost(a).mul(&Poly::from_cost(b)),
            CostExpr::Max(args) => Poly::max_of(args.iter().map(Poly::from_cost).collect()),
        }
    }

    /// Sum of monomials in canonical order, coefficients first.
    pub fn to_cost(&self) -> CostExpr {
        let mut out = CostExpr::zero();
        let mut negative = CostExpr::zero();
        for (m, c) in &self.0 {
            let mut term = CostExpr::Const(c.abs());
            for (a, e) in &m.0 {
                let factor = match a {
                    Atom::Sym(v) => CostExpr::var(v),
                    Atom::Max(args) => CostExpr::max(args.iter().map(Poly::to_cost).collect()),
                };
                for _ in 0..*e {
                    term = CostExpr::mul(term, factor.clone());
                }
            }
            if c.is_negative() {
                negative = CostExpr::add(negative, term);
            } else {
                out = CostExpr::add(out, term);
            }
        }
        CostExpr::sub(out, negative)
    }

    /// True when the atom occurs anywhere, including inside `max` arguments.
    pub fn mentions(&self, sym: &str) -> bool {
        self.0.keys().any(|m| {
            m.0.keys().any(|a| match a {
                Atom::Sym(v) => v == sym,
                Atom::Max(args) => args.iter().any(|p| p.mentions(sym)),
            })
        })
    }

    /// True when `sym` occurs inside some `max` atom.
    pub fn mentions_under_max(&self, sym: &str) -> bool {
        self.0.keys().any(|m| {
            m.0.keys().any(|a| match a {
                Atom::Sym(_) => false,
                Atom::Max(args) => args.iter().any(|p| p.mentions(sym)),
            })
        })
    }

    /// Sufficient check for `p ≥ 0` when every symbol is nonnegative.
    pub fn provably_nonnegative(&self) -> bool {
        self.0.iter().all(|(m, c)| {
            !c.is_negative()
                && m.0.keys().all(|a| match a {
                    Atom::Sym(_) => true,
                    Atom::Max(args) => args.iter().any(Poly::provably_nonnegative),
                })
        })
    }

    /// Coefficients of `sym^d` for each degree `d` (max-free in `sym`).
    pub fn coefficients_in(&self, sym: &str) -> BTreeMap<u32, Poly> {
        let key = Atom::Sym(sym.to_string());
        let mut out: BTreeMap<u32, Poly> = BTreeMap::new();
        for (m, c) in &self.0 {
            let d = m.degree_of(sym);
            let mut rest = m.clone();
            rest.0.remove(&key);
            let term = Poly(BTreeMap::from([(rest, c.clone())]));
            let slot = out.entry(d).or_default();
            *slot = slot.add(&term);
        }
        out
    }

    /// Replaces a symbol by a polynomial (outside `max` atoms only).
    pub fn substitute_sym(&self, sym: &str, value: &Poly) -> Poly {
        let mut out = Poly::zero();
        for (d, coeff) in self.coefficients_in(sym) {
            out = out.add(&coeff.mul(&value.pow(d)));
        }
        out
    }

    pub fn eval(&self, value_of: &dyn Fn(&str) -> Option<Rational>) -> Option<Rational> {
        let mut total = Rational::zero();
        for (m, c) in &self.0 {
            let mut term = c.clone();
            for (a, e) in &m.0 {
                let base = match a {
                    Atom::Sym(v) => value_of(v)?,
                    Atom::Max(args) => {
                        let mut best: Option<Rational> = None;
                        for p in args {
                            let x = p.eval(value_of)?;
                            if best.as_ref().is_none_or(|b| x > *b) {
                                best = Some(x);
                            }
                        }
                        best?
                    }
                };
                term *= num::pow(base, *e as usize);
            }
            total += term;
        }
        Some(total)
    }
}

/// Bernoulli numbers `B_0..=B_n` with `B_1 = +1/2`.
fn bernoulli_plus(n: usize) -> Vec<Rational> {
    let mut b: Vec<Rational> = Vec::with_capacity(n + 1);
    for m in 0..=n {
        // Σ_{k=0}^{m} C(m+1, k) B_k = m + 1 with the + convention.
        let mut acc = Rational::from_integer(BigInt::from(m as u64 + 1));
        for (k, bk) in b.iter().enumerate() {
            acc -= Rational::from_integer(binomial(m + 1, k)) * bk;
        }
        b.push(acc / Rational::from_integer(binomial(m + 1, m)));
    }
    b
}

fn binomial(n: usize, k: usize) -> BigInt {
    let mut out = BigInt::one();
    for j in 0..k {
        out = out * BigInt::from(n - j) / BigInt::from(j + 1);
    }
    out
}

/// `Σ_{k=0}^{n-1} k^d` as a polynomial in `n`.
pub fn power_sum(d: u32, n: &Poly) -> Poly {
    if d == 0 {
        return n.clone();
    }
    // Faulhaber: Σ_{k=1}^{N} k^d = 1/(d+1) Σ_j C(d+1, j) B_j N^{d+1-j}, at N = n - 1.
    let d = d as usize;
    let big_n = n.sub(&Poly::int(1));
    let b = bernoulli_plus(d);
    let mut out = Poly::zero();
    for (j, bj) in b.iter().enumerate() {
        let coeff = Rational::from_integer(binomial(d + 1, j)) * bj;
        out = out.add(&big_n.pow((d + 1 - j) as u32).scale(&coeff));
    }
    out.scale(&Rational::new(BigInt::one(), BigInt::from(d + 1)))
}

/// `Σ_{k=0}^{n-1} body[sym := start + step·k]` in closed form.
///
/// `sym` must not occur under `max` in `body`.
pub fn sum_over(body: &Poly, sym: &str, start: &Poly, step: &Rational, n: &Poly) -> Poly {
    let k = "\u{0}k";
    let shifted = body.substitute_sym(sym, &start.add(&Poly::sym(k).scale(step)));
    let mut out = Poly::zero();
    for (d, coeff) in shifted.coefficients_in(k) {
        out = out.add(&coeff.mul(&power_sum(d, n)));
    }
    out
}
