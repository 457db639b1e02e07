use serde::Serialize;

use crate::span::Span;

/// One parsed miniSL function: `( p1, ..., pn ) => { S }`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct FunctionDef {
    pub source_name: String,
    /// Policy tag from a leading `// tag: <name>` comment.
    pub tag: Option<String>,
    pub params: Vec<String>,
    pub body: Stmt,
    /// Position of the opening `(` of the parameter list.
    pub header: Span,
}

impl FunctionDef {
    /// Line of `span` counted from the function header (header line = 1).
    ///
    /// Cost-function names use this, so a leading tag comment does not
    /// renumber `if_ℓ`/`for_ℓ`.
    pub fn line_code(&self, span: Span) -> u32 {
        span.line.saturating_sub(self.header.line) + 1
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "kind")]
pub enum Stmt {
    Empty,
    Call {
        service: String,
        args: Vec<Expr>,
        cont: Box<Stmt>,
        span: Span,
    },
    IfExp {
        guard: Expr,
        then_branch: Box<Stmt>,
        else_branch: Box<Stmt>,
        span: Span,
    },
    IfCall {
        service: String,
        args: Vec<Expr>,
        then_branch: Box<Stmt>,
        else_branch: Box<Stmt>,
        span: Span,
    },
    For {
        counter: String,
        bound: Expr,
        body: Box<Stmt>,
        span: Span,
    },
}

impl Stmt {
    pub fn call(service: &str, args: Vec<Expr>, cont: Stmt) -> Stmt {
        Stmt::Call {
            service: service.to_string(),
            args,
            cont: Box::new(cont),
            span: Span::default(),
        }
    }

    pub fn if_exp(guard: Expr, then_branch: Stmt, else_branch: Stmt, line: u32) -> Stmt {
        Stmt::IfExp {
            guard,
            then_branch: Box::new(then_branch),
            else_branch: Box::new(else_branch),
            span: Span::new(line, 1),
        }
    }

    pub fn if_call(
        service: &str,
        args: Vec<Expr>,
        then_branch: Stmt,
        else_branch: Stmt,
        line: u32,
    ) -> Stmt {
        Stmt::IfCall {
            service: service.to_string(),
            args,
            then_branch: Box::new(then_branch),
            else_branch: Box::new(else_branch),
            span: Span::new(line, 1),
        }
    }

    pub fn for_loop(counter: &str, bound: Expr, body: Stmt, line: u32) -> Stmt {
        Stmt::For {
            counter: counter.to_string(),
            bound,
            body: Box::new(body),
            span: Span::new(line, 1),
        }
    }

    /// Pre-order visit of every statement node.
    pub fn walk<'a>(&'a self, visit: &mut impl FnMut(&'a Stmt)) {
        visit(self);
        match self {
            Stmt::Empty => {}
            Stmt::Call { cont, .. } => cont.walk(visit),
            Stmt::IfExp {
                then_branch,
                else_branch,
                ..
            }
            | Stmt::IfCall {
                then_branch,
                else_branch,
                ..
            } => {
                then_branch.walk(visit);
                else_branch.walk(visit);
            }
            Stmt::For { body, .. } => body.walk(visit),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum BinOp {
    #[serde(rename = "+")]
    Add,
    #[serde(rename = "-")]
    Sub,
    #[serde(rename = ">")]
    Gt,
    #[serde(rename = "==")]
    Eq,
    #[serde(rename = ">=")]
    Ge,
    #[serde(rename = "&&")]
    And,
    #[serde(rename = "*")]
    Mul,
    #[serde(rename = "/")]
    Div,
}

impl BinOp {
    pub fn symbol(self) -> &'static str {
        match self {
            BinOp::Add => "+",
            BinOp::Sub => "-",
            BinOp::Gt => ">",
            BinOp::Eq => "==",
            BinOp::Ge => ">=",
            BinOp::And => "&&",
            BinOp::Mul => "*",
            BinOp::Div => "/",
        }
    }

    pub fn precedence(self) -> u8 {
        match self {
            BinOp::And => 1,
            BinOp::Gt | BinOp::Eq | BinOp::Ge => 2,
            BinOp::Add | BinOp::Sub => 3,
            BinOp::Mul | BinOp::Div => 4,
        }
    }

    pub fn is_boolean(self) -> bool {
        matches!(self, BinOp::Gt | BinOp::Eq | BinOp::Ge | BinOp::And)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "kind")]
pub enum Expr {
    IntLit { value: u64 },
    CounterRef { name: String, span: Span },
    ParamRef { name: String, span: Span },
    BinOp {
        op: BinOp,
        lhs: Box<Expr>,
        rhs: Box<Expr>,
    },
}

impl Expr {
    pub fn int(value: u64) -> Expr {
        Expr::IntLit { value }
    }

    pub fn param(name: &str) -> Expr {
        Expr::ParamRef {
            name: name.to_string(),
            span: Span::default(),
        }
    }

    pub fn counter(name: &str) -> Expr {
        Expr::CounterRef {
            name: name.to_string(),
            span: Span::default(),
        }
    }

    pub fn bin(op: BinOp, lhs: Expr, rhs: Expr) -> Expr {
        Expr::BinOp {
            op,
            lhs: Box::new(lhs),
            rhs: Box::new(rhs),
        }
    }

    pub fn mentions_boolean_operator(&self) -> bool {
        match self {
            Expr::BinOp { op, lhs, rhs } => {
                op.is_boolean() || lhs.mentions_boolean_operator() || rhs.mentions_boolean_operator()
            }
            _ => false,
        }
    }

    /// Names referenced by the expression, in left-to-right order.
    pub fn names(&self) -> Vec<&str> {
        let mut out = Vec::new();
        self.collect_names(&mut out);
        out
    }

    fn collect_names<'a>(&'a self, out: &mut Vec<&'a str>) {
        match self {
            Expr::IntLit { .. } => {}
            Expr::CounterRef { name, .. } | Expr::ParamRef { name, .. } => out.push(name),
            Expr::BinOp { lhs, rhs, .. } => {
                lhs.collect_names(out);
                rhs.collect_names(out);
            }
        }
    }
}
