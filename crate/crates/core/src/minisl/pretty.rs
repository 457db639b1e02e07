//! Source rendering in the layout of the reference examples.

use std::fmt::{self, Write};

use super::ast::{Expr, FunctionDef, Stmt};

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_expr(f, self, 0)
    }
}

fn write_expr(out: &mut impl Write, e: &Expr, min_prec: u8) -> fmt::Result {
    match e {
        Expr::IntLit { value } => write!(out, "{value}"),
        Expr::CounterRef { name, .. } | Expr::ParamRef { name, .. } => out.write_str(name),
        Expr::BinOp { op, lhs, rhs } => {
            let prec = op.precedence();
            let paren = prec < min_prec;
            if paren {
                out.write_char('(')?;
            }
            write_expr(out, lhs, prec)?;
            write!(out, " {} ", op.symbol())?;
            // Left-associative: an equal-precedence right operand needs parens.
            write_expr(out, rhs, prec + 1)?;
            if paren {
                out.write_char(')')?;
            }
            Ok(())
        }
    }
}

fn write_args(out: &mut String, args: &[Expr]) {
    let rendered: Vec<String> = args.iter().map(ToString::to_string).collect();
    out.push_str(&rendered.join(", "));
}

fn indent(out: &mut String, depth: usize) {
    for _ in 0..depth {
        out.push_str("  ");
    }
}

fn write_branches(out: &mut String, then_branch: &Stmt, else_branch: &Stmt, depth: usize) {
    write_stmt(out, then_branch, depth + 1);
    indent(out, depth);
    if matches!(else_branch, Stmt::Empty) {
        out.push_str("}\n");
    } else {
        out.push_str("} else {\n");
        write_stmt(out, else_branch, depth + 1);
        indent(out, depth);
        out.push_str("}\n");
    }
}

fn write_stmt(out: &mut String, s: &Stmt, depth: usize) {
    match s {
        Stmt::Empty => {}
        Stmt::Call {
            service,
            args,
            cont,
            ..
        } => {
            indent(out, depth);
            out.push_str("call ");
            out.push_str(service);
            out.push('(');
            write_args(out, args);
            out.push_str(")\n");
            write_stmt(out, cont, depth);
        }
        Stmt::IfExp {
            guard,
            then_branch,
            else_branch,
            ..
        } => {
            indent(out, depth);
            out.push_str(&format!("if( {guard} ) {{\n"));
            write_branches(out, then_branch, else_branch, depth);
        }
        Stmt::IfCall {
            service,
            args,
            then_branch,
            else_branch,
            ..
        } => {
            indent(out, depth);
            out.push_str("if( call ");
            out.push_str(service);
            out.push('(');
            write_args(out, args);
            out.push_str(") ) {\n");
            write_branches(out, then_branch, else_branch, depth);
        }
        Stmt::For {
            counter,
            bound,
            body,
            ..
        } => {
            indent(out, depth);
            out.push_str(&format!("for({counter} in range(0, {bound})) {{\n"));
            write_stmt(out, body, depth + 1);
            indent(out, depth);
            out.push_str("}\n");
        }
    }
}

impl fmt::Display for FunctionDef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut out = String::new();
        if let Some(tag) = &self.tag {
            out.push_str(&format!("// tag: {tag}\n"));
        }
        if self.params.is_empty() {
            out.push_str("( ) => {\n");
        } else {
            out.push_str(&format!("( {} ) => {{\n", self.params.join(", ")));
        }
        write_stmt(&mut out, &self.body, 1);
        out.push_str("}\n");
        f.write_str(&out)
    }
}
