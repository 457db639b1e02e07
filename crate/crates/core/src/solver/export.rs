use std::collections::BTreeMap;
use std::fmt::Write;

use crate::presburger::{Constraint, PExpr, Relation};
use crate::program::{CostEquation, CostProgram};
use crate::rational::format_fraction;

use super::SolveError;

const MAX_CLAUSES_PER_EQUATION: usize = 1024;

/// Prints `p` as `eq(head(X1,..), direct, [calls], [guards]).` clauses.
///
/// Variables are capitalised, symbolic costs are wrapped in `nat(..)`, and
/// a direct cost containing `max` becomes one clause per alternative.
pub fn export_interchange(p: &CostProgram) -> Result<String, SolveError> {
    let mut out = String::new();
    for eq in &p.equations {
        let names = variable_names(&eq.params);
        let alternatives = max_free(&eq.direct)
            .map_err(|why| SolveError::UnsupportedExpr(format!("direct cost of {}: {why}", eq.head)))?;
        if alternatives.len() > MAX_CLAUSES_PER_EQUATION {
            return Err(SolveError::UnsupportedExpr(format!(
                "direct cost of {} expands to {} clauses",
                eq.head,
                alternatives.len()
            )));
        }
        for direct in &alternatives {
            clause(&mut out, eq, direct, &names);
        }
    }
    Ok(out)
}

fn variable_names(params: &[String]) -> BTreeMap<String, String> {
    let mut taken: Vec<String> = Vec::new();
    let mut names = BTreeMap::new();
    for p in params {
        let mut chars = p.chars();
        let base: String = match chars.next() {
            Some(c) => c.to_uppercase().chain(chars).collect(),
            None => "X".into(),
        };
        let mut name = base.clone();
        let mut n = 0;
        while taken.contains(&name) {
            n += 1;
            name = format!("{base}{n}");
        }
        taken.push(name.clone());
        names.insert(p.clone(), name);
    }
    names
}

/// Expands `max` into its alternatives.
fn max_free(e: &PExpr) -> Result<Vec<PExpr>, String> {
    Ok(match e {
        PExpr::Var(_) | PExpr::Const(_) => vec![e.clone()],
        PExpr::Add(a, b) => {
            let (xs, ys) = (max_free(a)?, max_free(b)?);
            let mut out = Vec::with_capacity(xs.len() * ys.len());
            for x in &xs {
                for y in &ys {
                    out.push(PExpr::Add(Box::new(x.clone()), Box::new(y.clone())));
                }
                if out.len() > MAX_CLAUSES_PER_EQUATION {
                    return Ok(out);
                }
            }
            out
        }
        PExpr::Sub(a, b) => {
            if b.contains_max() {
                return Err("max under subtraction".into());
            }
            max_free(a)?
                .into_iter()
                .map(|x| PExpr::Sub(Box::new(x), b.clone()))
                .collect()
        }
        PExpr::Scale(q, a) => max_free(a)?
            .into_iter()
            .map(|x| PExpr::Scale(q.clone(), Box::new(x)))
            .collect(),
        PExpr::Max(args) => {
            let mut out = Vec::new();
            for a in args {
                out.extend(max_free(a)?);
            }
            out
        }
    })
}

fn write_term(out: &mut String, e: &PExpr, names: &BTreeMap<String, String>, nat: bool, min_prec: u8) {
    let name = |v: &str| names.get(v).cloned().unwrap_or_else(|| v.to_string());
    match e {
        PExpr::Var(v) if nat => {
            let _ = write!(out, "nat({})", name(v));
        }
        PExpr::Var(v) => out.push_str(&name(v)),
        PExpr::Const(q) => out.push_str(&format_fraction(q)),
        PExpr::Add(a, b) | PExpr::Sub(a, b) => {
            if min_prec > 1 {
                out.push('(');
            }
            write_term(out, a, names, nat, 1);
            out.push(if matches!(e, PExpr::Add(..)) { '+' } else { '-' });
            write_term(out, b, names, nat, 2);
            if min_prec > 1 {
                out.push(')');
            }
        }
        PExpr::Scale(q, a) => {
            if min_prec > 2 {
                out.push('(');
            }
            out.push_str(&format_fraction(q));
            out.push('*');
            write_term(out, a, names, nat, 3);
            if min_prec > 2 {
                out.push(')');
            }
        }
        PExpr::Max(_) => unreachable!("expanded before printing"),
    }
}

fn term(e: &PExpr, names: &BTreeMap<String, String>, nat: bool) -> String {
    let mut out = String::new();
    write_term(&mut out, e, names, nat, 0);
    out
}

fn application(out: &mut String, head: &str, args: &[String]) {
    out.push_str(head);
    if !args.is_empty() {
        out.push('(');
        out.push_str(&args.join(","));
        out.push(')');
    }
}

fn constraint(c: &Constraint, names: &BTreeMap<String, String>) -> String {
    let rel = match c.relation {
        Relation::Ge => ">=",
        Relation::Eq => "=",
    };
    format!("{} {rel} {}", term(&c.lhs, names, false), term(&c.rhs, names, false))
}

fn clause(out: &mut String, eq: &CostEquation, direct: &PExpr, names: &BTreeMap<String, String>) {
    out.push_str("eq(");
    let params: Vec<String> = eq.params.iter().map(|p| names[p].clone()).collect();
    application(out, &eq.head, &params);
    out.push_str(", ");
    out.push_str(&term(direct, names, true));
    out.push_str(", [");
    for (k, c) in eq.calls.iter().enumerate() {
        if k > 0 {
            out.push_str(", ");
        }
        let args: Vec<String> = c.args.iter().map(|a| term(a, names, false)).collect();
        application(out, &c.callee, &args);
    }
    out.push_str("], [");
    let guards: Vec<String> = eq.guard.constraints().iter().map(|c| constraint(c, names)).collect();
    out.push_str(&guards.join(", "));
    out.push_str("]).\n");
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn linear_recursion_golden() {
        let p: CostProgram = "f(N,M) = M + f(N-1,M) [N >= 1]\nf(N,M) = 0 [N = 0]\n".parse().unwrap();
        assert_eq!(
            export_interchange(&p).unwrap(),
            "eq(f(N,M), nat(M), [f(N-1,M)], [N >= 1]).\neq(f(N,M), 0, [], [N = 0]).\n"
        );
    }

    #[test]
    fn empty_main() {
        let p: CostProgram = "main() = 0 []\n".parse().unwrap();
        assert_eq!(export_interchange(&p).unwrap(), "eq(main, 0, [], []).\n");
    }

    #[test]
    fn max_splits_into_clauses() {
        let p: CostProgram = "main(K,P,B) = K + max(P, B) []\n".parse().unwrap();
        assert_eq!(
            export_interchange(&p).unwrap(),
            "eq(main(K,P,B), nat(K)+nat(P), [], []).\neq(main(K,P,B), nat(K)+nat(B), [], []).\n"
        );
        let p: CostProgram = "main(K,P) = K - max(P, K) []\n".parse().unwrap();
        assert!(matches!(export_interchange(&p), Err(SolveError::UnsupportedExpr(_))));
    }

    #[test]
    fn lowercase_variables_are_capitalised_without_clashes() {
        let p: CostProgram = "for_2(i,m,r,M,R) = M + for_4(0,r,R) + for_2(i+1,m,r,M,R) [m >= i + 1]\n"
            .parse()
            .unwrap();
        assert_eq!(
            export_interchange(&p).unwrap(),
            "eq(for_2(I,M,R,M1,R1), nat(M1), [for_4(0,R,R1), for_2(I+1,M,R,M1,R1)], [M >= I+1]).\n"
        );
    }
}
