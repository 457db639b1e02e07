//! Cost programs: ordered lists of guarded cost equations, and their
//! line-oriented text format.
//!
//! ```text
//! main(m,r,M,R) = for_2(0,m,r,M,R) []
//! for_2(i,m,r,M,R) = M + for_4(0,r,R) + for_2(i+1,m,r,M,R) [m >= i + 1]
//! for_2(i,m,r,M,R) = 0 [i >= m]
//! ```

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::presburger::{Constraint, Guard, PExpr};
use crate::syntax::{Term, Tok, TermParser};

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct CostCall {
    pub callee: String,
    pub args: Vec<PExpr>,
}

impl fmt::Display for CostCall {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let args: Vec<String> = self.args.iter().map(PExpr::compact).collect();
        write!(f, "{}({})", self.callee, args.join(","))
    }
}

/// `head(params) = direct + calls [guard]`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct CostEquation {
    pub head: String,
    pub params: Vec<String>,
    pub direct: PExpr,
    pub calls: Vec<CostCall>,
    pub guard: Guard,
}

impl CostEquation {
    pub fn calls_itself(&self) -> bool {
        self.calls.iter().any(|c| c.callee == self.head)
    }
}

impl fmt::Display for CostEquation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}({}) = ", self.head, self.params.join(","))?;
        let mut first = true;
        if !self.direct.is_zero() || self.calls.is_empty() {
            write!(f, "{}", self.direct)?;
            first = false;
        }
        for c in &self.calls {
            if !first {
                f.write_str(" + ")?;
            }
            write!(f, "{c}")?;
            first = false;
        }
        write!(f, " {}", self.guard)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct CostProgram {
    pub equations: Vec<CostEquation>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ProgramError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("{0}")]
    Malformed(String),
}

impl CostProgram {
    pub fn new(equations: Vec<CostEquation>) -> Self {
        Self { equations }
    }

    pub fn main(&self) -> Option<&CostEquation> {
        self.equations.first()
    }

    /// Heads in order of first definition.
    pub fn heads(&self) -> Vec<&str> {
        let mut out: Vec<&str> = Vec::new();
        for eq in &self.equations {
            if !out.contains(&eq.head.as_str()) {
                out.push(&eq.head);
            }
        }
        out
    }

    pub fn equations_for<'a>(&'a self, head: &'a str) -> impl Iterator<Item = &'a CostEquation> + 'a {
        self.equations.iter().filter(move |eq| eq.head == head)
    }

    /// Every symbol that occurs as a parameter of `main`.
    pub fn main_params(&self) -> &[String] {
        self.main().map(|eq| eq.params.as_slice()).unwrap_or(&[])
    }

    /// Checks the structural invariants: nonempty, `main` first, callees
    /// defined with matching arity, and equations closed over their params.
    pub fn check_closed(&self) -> Result<(), ProgramError> {
        let main = self
            .main()
            .ok_or_else(|| ProgramError::Malformed("empty cost program".into()))?;
        if main.head != "main" {
            return Err(ProgramError::Malformed(format!(
                "first equation defines {} instead of main",
                main.head
            )));
        }
        let mut arity: BTreeMap<&str, usize> = BTreeMap::new();
        for eq in &self.equations {
            let n = *arity.entry(&eq.head).or_insert(eq.params.len());
            if n != eq.params.len() {
                return Err(ProgramError::Malformed(format!("{} defined with different arities", eq.head)));
            }
            let distinct: BTreeSet<&String> = eq.params.iter().collect();
            if distinct.len() != eq.params.len() {
                return Err(ProgramError::Malformed(format!("{} has repeated parameters", eq.head)));
            }
        }
        for eq in &self.equations {
            let mut free: Vec<&str> = eq.direct.vars();
            for c in &eq.calls {
                for a in &c.args {
                    a.collect_vars(&mut free);
                }
                match arity.get(c.callee.as_str()) {
                    None => {
                        return Err(ProgramError::Malformed(format!("{} calls undefined {}", eq.head, c.callee)))
                    }
                    Some(&n) if n != c.args.len() => {
                        return Err(ProgramError::Malformed(format!(
                            "{} calls {} with {} arguments, expected {n}",
                            eq.head,
                            c.callee,
                            c.args.len()
                        )))
                    }
                    _ => {}
                }
            }
            for c in eq.guard.constraints() {
                if c.lhs.contains_max() || c.rhs.contains_max() {
                    return Err(ProgramError::Malformed(format!("max inside a guard of {}", eq.head)));
                }
            }
            free.extend(eq.guard.vars());
            if let Some(v) = free.iter().find(|v| !eq.params.iter().any(|p| p == *v)) {
                return Err(ProgramError::Malformed(format!("{v} is free in an equation of {}", eq.head)));
            }
        }
        Ok(())
    }
}

impl fmt::Display for CostProgram {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for eq in &self.equations {
            writeln!(f, "{eq}")?;
        }
        Ok(())
    }
}

impl FromStr for CostProgram {
    type Err = ProgramError;

    /// Parses the text format. Blank lines and lines starting with `#` are
    /// skipped.
    fn from_str(text: &str) -> Result<Self, Self::Err> {
        let mut equations = Vec::new();
        for (k, line) in text.lines().enumerate() {
            let trimmed = line.trim();
            if trimmed.is_empty() || trimmed.starts_with('#') {
                continue;
            }
            let eq = parse_equation(trimmed).map_err(|message| ProgramError::Parse { line: k + 1, message })?;
            equations.push(eq);
        }
        Ok(CostProgram { equations })
    }
}

fn parse_equation(text: &str) -> Result<CostEquation, String> {
    let mut p = TermParser::new(text)?;
    let head = p.ident()?;
    if head == "max" {
        return Err("max cannot be defined".into());
    }
    p.expect(&Tok::LParen, "'('")?;
    let mut params = Vec::new();
    if !p.eat(&Tok::RParen) {
        loop {
            params.push(p.ident()?);
            if p.eat(&Tok::RParen) {
                break;
            }
            p.expect(&Tok::Comma, "',' or ')'")?;
        }
    }
    p.expect(&Tok::Eq, "'='")?;
    let rhs = p.term()?;
    p.expect(&Tok::LBracket, "'[' opening the guard")?;
    let mut constraints = Vec::new();
    if !p.eat(&Tok::RBracket) {
        loop {
            let lhs = pexpr_of(&p.term()?)?;
            let ge = if p.eat(&Tok::Ge) {
                true
            } else if p.eat(&Tok::Eq) {
                false
            } else {
                return Err(p.error("'>=' or '='"));
            };
            let rhs = pexpr_of(&p.term()?)?;
            constraints.push(if ge { Constraint::ge(lhs, rhs) } else { Constraint::eq(lhs, rhs) });
            if p.eat(&Tok::RBracket) {
                break;
            }
            p.expect(&Tok::Comma, "',' or ']'")?;
        }
    }
    if !p.at_end() {
        return Err(p.error("end of line"));
    }
    let mut summands = Vec::new();
    left_spine(rhs, &mut summands);
    let mut direct = PExpr::zero();
    let mut calls = Vec::new();
    let mut seen_direct = false;
    for s in summands {
        match s {
            Term::App(callee, args) if callee != "max" => calls.push(CostCall {
                callee,
                args: args.iter().map(pexpr_of).collect::<Result<_, _>>()?,
            }),
            other => {
                let e = pexpr_of(&other)?;
                direct = if seen_direct {
                    PExpr::Add(Box::new(direct), Box::new(e))
                } else {
                    e
                };
                seen_direct = true;
            }
        }
    }
    Ok(CostEquation {
        head,
        params,
        direct,
        calls,
        guard: Guard(constraints),
    })
}

fn left_spine(t: Term, out: &mut Vec<Term>) {
    match t {
        Term::Add(a, b) => {
            left_spine(*a, out);
            out.push(*b);
        }
        t => out.push(t),
    }
}

fn pexpr_of(t: &Term) -> Result<PExpr, String> {
    Ok(match t {
        Term::Num(q) => PExpr::constant(q.clone()),
        Term::Name(v) => PExpr::Var(v.clone()),
        Term::Add(a, b) => PExpr::Add(Box::new(pexpr_of(a)?), Box::new(pexpr_of(b)?)),
        Term::Sub(a, b) => PExpr::Sub(Box::new(pexpr_of(a)?), Box::new(pexpr_of(b)?)),
        Term::Neg(a) => PExpr::Sub(Box::new(PExpr::zero()), Box::new(pexpr_of(a)?)),
        Term::Mul(a, b) => match (a.as_ref(), b.as_ref()) {
            (Term::Num(q), e) | (e, Term::Num(q)) => PExpr::scaled(q.clone(), pexpr_of(e)?),
            _ => return Err("products of two non-constant expressions are not Presburger".into()),
        },
        Term::App(f, args) if f == "max" && !args.is_empty() => {
            PExpr::Max(args.iter().map(pexpr_of).collect::<Result<_, _>>()?)
        }
        Term::App(f, _) => return Err(format!("call of {f} must be a top-level summand")),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    const MAP_REDUCE: &str = "main(m,r,M,R) = for_2(0,m,r,M,R) []
for_2(i,m,r,M,R) = M + for_4(0,r,R) + for_2(i+1,m,r,M,R) [m >= i + 1]
for_2(i,m,r,M,R) = 0 [i >= m]
for_4(j,r,R) = R + for_4(j+1,r,R) [r >= j + 1]
for_4(j,r,R) = 0 [j >= r]
";

    #[test]
    fn text_round_trip() {
        let p: CostProgram = MAP_REDUCE.parse().unwrap();
        assert_eq!(p.equations.len(), 5);
        assert_eq!(p.heads(), ["main", "for_2", "for_4"]);
        assert_eq!(p.to_string(), MAP_REDUCE);
        p.check_closed().unwrap();
    }

    #[test]
    fn direct_costs_with_max_and_rationals() {
        let text = "main(K,P,B) = K + max(P, B) []\n";
        let p: CostProgram = text.parse().unwrap();
        assert_eq!(p.to_string(), text);
        let text = "f(x,A) = 1/2 * A + 2 * (x + 1) - x + f(x-1,A) [x >= 1, x = x]\n";
        let p: CostProgram = text.parse().unwrap();
        assert_eq!(p.to_string(), text);
    }

    #[test]
    fn closedness_violations() {
        let p: CostProgram = "main(a) = b []\n".parse().unwrap();
        assert!(p.check_closed().is_err());
        let p: CostProgram = "main() = g() []\n".parse().unwrap();
        assert!(p.check_closed().is_err());
        let p: CostProgram = "f() = 0 []\n".parse().unwrap();
        assert!(p.check_closed().is_err());
        let p: CostProgram = "main() = 0 []\n".parse().unwrap();
        p.check_closed().unwrap();
    }

    #[test]
    fn parse_errors_carry_the_line() {
        let err = "main() = 0 []\n\nmain( = 0 []".parse::<CostProgram>().unwrap_err();
        assert!(matches!(err, ProgramError::Parse { line: 3, .. }), "{err}");
        assert!("main() = 0".parse::<CostProgram>().is_err());
        assert!("main(a) = a * a []".parse::<CostProgram>().is_err());
    }
}
