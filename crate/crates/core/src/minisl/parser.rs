//! Recursive descent parser for miniSL functions.

use crate::span::Span;

use super::ast::{BinOp, Expr, FunctionDef, Stmt};
use super::lexer::{tokenize, Token, TokenKind};
use super::SyntaxError;

/// Parses one function source. `source_name` is recorded verbatim.
pub fn parse_function(text: &str, source_name: &str) -> Result<FunctionDef, SyntaxError> {
    let lexed = tokenize(text)?;
    let mut parser = Parser {
        tokens: lexed.tokens,
        pos: 0,
        counters: Vec::new(),
    };
    let header = parser.peek().span;
    let tag = lexed
        .tags
        .iter()
        .rfind(|t| (t.span.line, t.span.column) < (header.line, header.column))
        .map(|t| t.name.clone());

    parser.expect(TokenKind::LParen, "`(` opening the parameter list")?;
    let mut params = Vec::new();
    if !parser.at(&TokenKind::RParen) {
        loop {
            params.push(parser.ident("parameter name")?.0);
            if !parser.eat(&TokenKind::Comma) {
                break;
            }
        }
    }
    parser.expect(TokenKind::RParen, "`)` closing the parameter list")?;
    parser.expect(TokenKind::Arrow, "`=>`")?;
    let body = parser.block()?;
    parser.expect(TokenKind::Eof, "end of input after the function body")?;

    Ok(FunctionDef {
        source_name: source_name.to_string(),
        tag,
        params,
        body,
        header,
    })
}

struct Parser {
    tokens: Vec<Token>,
    pos: usize,
    /// Counters bound by enclosing `for` headers, innermost last.
    counters: Vec<String>,
}

impl Parser {
    fn peek(&self) -> &Token {
        &self.tokens[self.pos]
    }

    fn at(&self, kind: &TokenKind) -> bool {
        &self.peek().kind == kind
    }

    fn bump(&mut self) -> Token {
        let tok = self.tokens[self.pos].clone();
        if tok.kind != TokenKind::Eof {
            self.pos += 1;
        }
        tok
    }

    fn eat(&mut self, kind: &TokenKind) -> bool {
        if self.at(kind) {
            self.bump();
            true
        } else {
            false
        }
    }

    fn error(&self, expected: &str) -> SyntaxError {
        let tok = self.peek();
        SyntaxError::Unexpected {
            expected: expected.to_string(),
            found: tok.kind.to_string(),
            line: tok.span.line,
            column: tok.span.column,
        }
    }

    fn expect(&mut self, kind: TokenKind, expected: &str) -> Result<Span, SyntaxError> {
        if self.at(&kind) {
            Ok(self.bump().span)
        } else {
            Err(self.error(expected))
        }
    }

    fn ident(&mut self, expected: &str) -> Result<(String, Span), SyntaxError> {
        match &self.peek().kind {
            TokenKind::Ident(name) => {
                let name = name.clone();
                let span = self.bump().span;
                Ok((name, span))
            }
            _ => Err(self.error(expected)),
        }
    }

    fn block(&mut self) -> Result<Stmt, SyntaxError> {
        self.expect(TokenKind::LBrace, "`{`")?;
        let stmt = self.stmt()?;
        self.expect(TokenKind::RBrace, "`}`")?;
        Ok(stmt)
    }

    fn stmt(&mut self) -> Result<Stmt, SyntaxError> {
        match self.peek().kind {
            TokenKind::RBrace => Ok(Stmt::Empty),
            TokenKind::Call => {
                let span = self.bump().span;
                let (service, args) = self.call_tail()?;
                let cont = self.stmt()?;
                Ok(Stmt::Call {
                    service,
                    args,
                    cont: Box::new(cont),
                    span,
                })
            }
            TokenKind::If => {
                let stmt = self.if_stmt()?;
                self.end_of_sequence("if")?;
                Ok(stmt)
            }
            TokenKind::For => {
                let stmt = self.for_stmt()?;
                self.end_of_sequence("for")?;
                Ok(stmt)
            }
            _ => Err(self.error("a statement (`call`, `if`, `for`) or `}`")),
        }
    }

    /// Only `call` may be followed by further statements.
    fn end_of_sequence(&self, construct: &str) -> Result<(), SyntaxError> {
        if self.at(&TokenKind::RBrace) {
            Ok(())
        } else {
            Err(self.error(&format!(
                "`}}` (a statement cannot follow `{construct}`; only `call` may be sequenced)"
            )))
        }
    }

    fn call_tail(&mut self) -> Result<(String, Vec<Expr>), SyntaxError> {
        let (service, _) = self.ident("service name after `call`")?;
        self.expect(TokenKind::LParen, "`(` opening the argument list")?;
        let mut args = Vec::new();
        if !self.at(&TokenKind::RParen) {
            loop {
                if self.at(&TokenKind::Call) {
                    return Err(self.error("an expression (calls cannot be nested in arguments)"));
                }
                args.push(self.expr()?);
                if !self.eat(&TokenKind::Comma) {
                    break;
                }
            }
        }
        self.expect(TokenKind::RParen, "`)` closing the argument list")?;
        Ok((service, args))
    }

    fn if_stmt(&mut self) -> Result<Stmt, SyntaxError> {
        let span = self.bump().span;
        self.expect(TokenKind::LParen, "`(` after `if`")?;
        let service_guard = if self.eat(&TokenKind::Call) {
            Some(self.call_tail()?)
        } else {
            None
        };
        let expr_guard = match service_guard {
            Some(_) => None,
            None => Some(self.expr()?),
        };
        self.expect(TokenKind::RParen, "`)` closing the guard")?;
        let then_branch = Box::new(self.block()?);
        let else_branch = Box::new(if self.eat(&TokenKind::Else) {
            self.block()?
        } else {
            Stmt::Empty
        });
        Ok(match (service_guard, expr_guard) {
            (Some((service, args)), _) => Stmt::IfCall {
                service,
                args,
                then_branch,
                else_branch,
                span,
            },
            (None, guard) => Stmt::IfExp {
                guard: guard.expect("expression guard parsed"),
                then_branch,
                else_branch,
                span,
            },
        })
    }

    fn for_stmt(&mut self) -> Result<Stmt, SyntaxError> {
        let span = self.bump().span;
        self.expect(TokenKind::LParen, "`(` after `for`")?;
        let (counter, _) = self.ident("counter name")?;
        self.expect(TokenKind::In, "`in`")?;
        self.expect(TokenKind::Range, "`range`")?;
        self.expect(TokenKind::LParen, "`(` after `range`")?;
        if !self.at(&TokenKind::Int(0)) {
            return Err(self.error("`0` (ranges always start at 0)"));
        }
        self.bump();
        self.expect(TokenKind::Comma, "`,`")?;
        let bound = self.expr()?;
        self.expect(TokenKind::RParen, "`)` closing `range`")?;
        self.expect(TokenKind::RParen, "`)` closing the loop header")?;
        self.counters.push(counter.clone());
        let body = self.block();
        self.counters.pop();
        Ok(Stmt::For {
            counter,
            bound,
            body: Box::new(body?),
            span,
        })
    }

    fn expr(&mut self) -> Result<Expr, SyntaxError> {
        self.binary(1)
    }

    fn binary_op(&self) -> Option<BinOp> {
        Some(match self.peek().kind {
            TokenKind::AndAnd => BinOp::And,
            TokenKind::Gt => BinOp::Gt,
            TokenKind::EqEq => BinOp::Eq,
            TokenKind::Ge => BinOp::Ge,
            TokenKind::Plus => BinOp::Add,
            TokenKind::Minus => BinOp::Sub,
            TokenKind::Star => BinOp::Mul,
            TokenKind::Slash => BinOp::Div,
            _ => return None,
        })
    }

    /// Precedence climbing; every level is left-associative.
    fn binary(&mut self, min_prec: u8) -> Result<Expr, SyntaxError> {
        let mut lhs = self.atom()?;
        while let Some(op) = self.binary_op() {
            if op.precedence() < min_prec {
                break;
            }
            self.bump();
            let rhs = self.binary(op.precedence() + 1)?;
            lhs = Expr::bin(op, lhs, rhs);
        }
        Ok(lhs)
    }

    fn atom(&mut self) -> Result<Expr, SyntaxError> {
        match self.peek().kind.clone() {
            TokenKind::Int(value) => {
                self.bump();
                Ok(Expr::IntLit { value })
            }
            TokenKind::True => {
                self.bump();
                Ok(Expr::int(1))
            }
            TokenKind::False => {
                self.bump();
                Ok(Expr::int(0))
            }
            TokenKind::Ident(name) => {
                let span = self.bump().span;
                if self.counters.iter().any(|c| c == &name) {
                    Ok(Expr::CounterRef { name, span })
                } else {
                    Ok(Expr::ParamRef { name, span })
                }
            }
            TokenKind::LParen => {
                self.bump();
                let inner = self.expr()?;
                self.expect(TokenKind::RParen, "`)`")?;
                Ok(inner)
            }
            TokenKind::Call => Err(self.error("an expression (calls are only allowed as statements or whole `if` guards)")),
            _ => Err(self.error("an expression")),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const PREMIUM_SOURCE: &str = "( isPremiumUser, par ) => {
  if( isPremiumUser ) {
    call PremiumService( par )
  } else {
    call BasicService( par )
  }
}
";

    #[test]
    fn premium_branch_shape() {
        let f = parse_function(PREMIUM_SOURCE, "premium").unwrap();
        assert_eq!(f.params, ["isPremiumUser", "par"]);
        let expected = Stmt::if_exp(
            Expr::param("isPremiumUser"),
            Stmt::call("PremiumService", vec![Expr::param("par")], Stmt::Empty),
            Stmt::call("BasicService", vec![Expr::param("par")], Stmt::Empty),
            2,
        );
        assert_eq!(f.body, expected);
        match &f.body {
            Stmt::IfExp { span, .. } => assert_eq!((span.line, span.column), (2, 3)),
            other => panic!("unexpected {other:?}"),
        }
        assert_eq!(f.tag, None);
    }

    #[test]
    fn empty_function() {
        let f = parse_function("( ) => { }", "empty").unwrap();
        assert!(f.params.is_empty());
        assert_eq!(f.body, Stmt::Empty);
    }

    #[test]
    fn call_without_service_is_rejected_on_line_one() {
        let err = parse_function("( p ) => { call }", "bad").unwrap_err();
        match err {
            SyntaxError::Unexpected { line, column, .. } => assert_eq!((line, column), (1, 17)),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn call_chains_nest_to_the_right() {
        let f = parse_function("(x) => { call h(x) call g() }", "seq").unwrap();
        assert_eq!(
            f.body,
            Stmt::call(
                "h",
                vec![Expr::param("x")],
                Stmt::call("g", vec![], Stmt::Empty)
            )
        );
    }

    #[test]
    fn statements_cannot_follow_if_or_for() {
        assert!(parse_function("(x) => { if (x) { } else { } call h() }", "s").is_err());
        assert!(parse_function("(n) => { for (i in range(0, n)) { } call h() }", "s").is_err());
    }

    #[test]
    fn nested_call_in_argument_is_rejected() {
        let err = parse_function("(x) => { call h(call g()) }", "s").unwrap_err();
        assert!(err.to_string().contains("nested"), "{err}");
    }

    #[test]
    fn range_must_start_at_zero() {
        assert!(parse_function("(n) => { for (i in range(1, n)) { } }", "s").is_err());
    }

    #[test]
    fn counters_resolve_by_scope_and_precedence_is_standard() {
        let f = parse_function(
            "(n, m) => { for (i in range(0, n)) { if (i > 0 && m >= i + 1 * 2) { call a(i) } } }",
            "s",
        )
        .unwrap();
        let Stmt::For { body, .. } = &f.body else {
            panic!()
        };
        let Stmt::IfExp { guard, .. } = body.as_ref() else {
            panic!()
        };
        let expected = Expr::bin(
            BinOp::And,
            Expr::bin(BinOp::Gt, Expr::counter("i"), Expr::int(0)),
            Expr::bin(
                BinOp::Ge,
                Expr::param("m"),
                Expr::bin(
                    BinOp::Add,
                    Expr::counter("i"),
                    Expr::bin(BinOp::Mul, Expr::int(1), Expr::int(2)),
                ),
            ),
        );
        assert_eq!(guard, &expected);
    }

    #[test]
    fn tag_comment_before_header() {
        let f = parse_function("// tag: mapReduce\n( jobs ) => { }", "t").unwrap();
        assert_eq!(f.tag.as_deref(), Some("mapReduce"));
        assert_eq!(f.header.line, 2);
        let f = parse_function("( jobs ) => {\n // tag: late\n }", "t").unwrap();
        assert_eq!(f.tag, None);
    }

    #[test]
    fn booleans_desugar_to_integers() {
        let f = parse_function("() => { if (true) { call a() } else { call b() } }", "t").unwrap();
        let Stmt::IfExp { guard, .. } = &f.body else {
            panic!()
        };
        assert_eq!(guard, &Expr::int(1));
    }

    #[test]
    fn missing_else_is_empty() {
        let f = parse_function("(x) => { if (x) { call a() } }", "t").unwrap();
        let Stmt::IfExp { else_branch, .. } = &f.body else {
            panic!()
        };
        assert_eq!(else_branch.as_ref(), &Stmt::Empty);
    }
}
