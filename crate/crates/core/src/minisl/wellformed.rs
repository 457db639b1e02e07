use std::collections::HashSet;

use crate::diagnostic::Diagnostic;
use crate::span::Span;

use super::ast::{Expr, FunctionDef, Stmt};
use super::lexer::is_identifier;

/// Checks name binding and loop-bound typing. An empty result means `f` is
/// well-formed.
pub fn check_wellformed(f: &FunctionDef) -> Vec<Diagnostic> {
    let mut checker = Checker {
        params: HashSet::new(),
        counters: Vec::new(),
        diags: Vec::new(),
    };
    for p in &f.params {
        if !checker.params.insert(p.as_str()) {
            checker.report(f.header, format!("duplicate parameter {p}"));
        }
    }
    checker.stmt(&f.body);
    checker.diags
}

struct Checker<'a> {
    params: HashSet<&'a str>,
    counters: Vec<&'a str>,
    diags: Vec<Diagnostic>,
}

impl<'a> Checker<'a> {
    fn report(&mut self, span: Span, message: String) {
        self.diags
            .push(Diagnostic::error(span.line, span.column, message));
    }

    fn service(&mut self, name: &str, span: Span) {
        if !is_identifier(name) {
            self.report(span, format!("invalid service name {name:?}"));
        }
    }

    fn expr(&mut self, e: &'a Expr) {
        match e {
            Expr::IntLit { .. } => {}
            Expr::ParamRef { name, span } => {
                if !self.params.contains(name.as_str()) {
                    if self.counters.contains(&name.as_str()) {
                        self.report(*span, format!("{name} refers to a counter but is marked as a parameter"));
                    } else {
                        self.report(*span, format!("unbound name {name}"));
                    }
                }
            }
            Expr::CounterRef { name, span } => {
                if !self.counters.contains(&name.as_str()) {
                    self.report(*span, format!("unbound counter {name}"));
                }
            }
            Expr::BinOp { lhs, rhs, .. } => {
                self.expr(lhs);
                self.expr(rhs);
            }
        }
    }

    fn stmt(&mut self, s: &'a Stmt) {
        match s {
            Stmt::Empty => {}
            Stmt::Call {
                service,
                args,
                cont,
                span,
            } => {
                self.service(service, *span);
                args.iter().for_each(|a| self.expr(a));
                self.stmt(cont);
            }
            Stmt::IfExp {
                guard,
                then_branch,
                else_branch,
                ..
            } => {
                self.expr(guard);
                self.stmt(then_branch);
                self.stmt(else_branch);
            }
            Stmt::IfCall {
                service,
                args,
                then_branch,
                else_branch,
                span,
            } => {
                self.service(service, *span);
                args.iter().for_each(|a| self.expr(a));
                self.stmt(then_branch);
                self.stmt(else_branch);
            }
            Stmt::For {
                counter,
                bound,
                body,
                span,
            } => {
                self.expr(bound);
                if bound.mentions_boolean_operator() {
                    self.report(
                        *span,
                        format!("loop bound of {counter} must be an integer expression"),
                    );
                }
                if self.counters.contains(&counter.as_str()) {
                    self.report(*span, format!("counter {counter} shadows live counter"));
                } else if self.params.contains(counter.as_str()) {
                    self.report(*span, format!("counter {counter} shadows parameter"));
                }
                self.counters.push(counter);
                self.stmt(body);
                self.counters.pop();
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::minisl::{parse_function, BinOp};

    fn messages(f: &FunctionDef) -> Vec<String> {
        check_wellformed(f).into_iter().map(|d| d.message).collect()
    }

    #[test]
    fn nested_loops_are_wellformed() {
        let f = parse_function(
            "( jobs, m, r ) => {
  for(i in range(0, m)) {
    call Map(jobs, i)
    for(j in range(0, r)) {
      call Reduce(jobs, i, j)
    }
  }
}",
            "map_reduce",
        )
        .unwrap();
        assert!(check_wellformed(&f).is_empty());
    }

    #[test]
    fn unbound_counter() {
        let f = FunctionDef::new(
            vec!["p".into()],
            Stmt::call("h", vec![Expr::counter("j")], Stmt::Empty),
        );
        assert_eq!(messages(&f), ["unbound counter j"]);
    }

    #[test]
    fn shadowing_counter() {
        let f = parse_function(
            "(n) => { for (i in range(0, n)) { for (i in range(0, n)) { call h(i) } } }",
            "s",
        )
        .unwrap();
        assert_eq!(messages(&f), ["counter i shadows live counter"]);
    }

    #[test]
    fn shadowing_parameter_and_unbound_name() {
        let f = parse_function("(n) => { for (n in range(0, 2)) { call h(q) } }", "s").unwrap();
        assert_eq!(messages(&f), ["counter n shadows parameter", "unbound name q"]);
    }

    #[test]
    fn boolean_loop_bound() {
        let f = FunctionDef::new(
            vec!["n".into()],
            Stmt::for_loop(
                "i",
                Expr::bin(BinOp::Gt, Expr::param("n"), Expr::int(1)),
                Stmt::Empty,
                2,
            ),
        );
        assert_eq!(messages(&f), ["loop bound of i must be an integer expression"]);
    }

    #[test]
    fn duplicate_parameters_and_bad_service() {
        let f = FunctionDef::new(
            vec!["a".into(), "a".into()],
            Stmt::call("not valid", vec![], Stmt::Empty),
        );
        assert_eq!(
            messages(&f),
            ["duplicate parameter a", "invalid service name \"not valid\""]
        );
    }

    #[test]
    fn sibling_loops_may_reuse_a_counter() {
        let f = parse_function(
            "(n) => { call a() for (i in range(0, n)) { if (call b()) { for (j in range(0, i)) { } } else { for (j in range(0, n)) { } } } }",
            "s",
        )
        .unwrap();
        assert!(check_wellformed(&f).is_empty());
    }
}
