//! Tokenizer and term parser shared by the cost-program text format and
//! printed cost expressions.

use num::{BigInt, One};

use crate::rational::Rational;

#[derive(Debug, Clone, PartialEq)]
pub(crate) enum Tok {
    Ident(String),
    Num(Rational),
    Plus,
    Minus,
    Star,
    LParen,
    RParen,
    LBracket,
    RBracket,
    Comma,
    Eq,
    Ge,
}

impl Tok {
    fn describe(&self) -> String {
        match self {
            Tok::Ident(s) => format!("identifier {s}"),
            Tok::Num(q) => format!("number {q}"),
            Tok::Plus => "'+'".into(),
            Tok::Minus => "'-'".into(),
            Tok::Star => "'*'".into(),
            Tok::LParen => "'('".into(),
            Tok::RParen => "')'".into(),
            Tok::LBracket => "'['".into(),
            Tok::RBracket => "']'".into(),
            Tok::Comma => "','".into(),
            Tok::Eq => "'='".into(),
            Tok::Ge => "'>='".into(),
        }
    }
}

/// `n/d` with no surrounding spaces is a single rational literal.
pub(crate) fn tokenize(text: &str) -> Result<Vec<(Tok, usize)>, String> {
    let chars: Vec<char> = text.chars().collect();
    let mut out = Vec::new();
    let mut k = 0;
    while k < chars.len() {
        let c = chars[k];
        let start = k + 1;
        if c.is_whitespace() {
            k += 1;
            continue;
        }
        if c.is_ascii_digit() {
            let mut end = k;
            while end < chars.len() && chars[end].is_ascii_digit() {
                end += 1;
            }
            let numer: BigInt = chars[k..end].iter().collect::<String>().parse().unwrap();
            let mut value = Rational::from_integer(numer.clone());
            if end + 1 < chars.len() && chars[end] == '/' && chars[end + 1].is_ascii_digit() {
                let mut dend = end + 1;
                while dend < chars.len() && chars[dend].is_ascii_digit() {
                    dend += 1;
                }
                let denom: BigInt = chars[end + 1..dend].iter().collect::<String>().parse().unwrap();
                if denom == BigInt::from(0) {
                    return Err(format!("column {start}: zero denominator"));
                }
                value = Rational::new(numer, denom);
                end = dend;
            } else if end + 1 < chars.len() && chars[end] == '.' && chars[end + 1].is_ascii_digit() {
                let mut dend = end + 1;
                while dend < chars.len() && chars[dend].is_ascii_digit() {
                    dend += 1;
                }
                let digits: String = chars[end + 1..dend].iter().collect();
                let frac: BigInt = digits.parse().unwrap();
                let scale = num::pow(BigInt::one() * 10, digits.len());
                value = Rational::new(numer * &scale + frac, scale);
                end = dend;
            }
            out.push((Tok::Num(value), start));
            k = end;
            continue;
        }
        if c.is_alphabetic() || c == '_' {
            let mut end = k;
            while end < chars.len() && (chars[end].is_alphanumeric() || chars[end] == '_') {
                end += 1;
            }
            out.push((Tok::Ident(chars[k..end].iter().collect()), start));
            k = end;
            continue;
        }
        let tok = match c {
            '+' => Tok::Plus,
            '-' => Tok::Minus,
            '*' => Tok::Star,
            '(' => Tok::LParen,
            ')' => Tok::RParen,
            '[' => Tok::LBracket,
            ']' => Tok::RBracket,
            ',' => Tok::Comma,
            '=' => Tok::Eq,
            '>' if chars.get(k + 1) == Some(&'=') => {
                k += 1;
                Tok::Ge
            }
            other => return Err(format!("column {start}: unexpected character {other:?}")),
        };
        out.push((tok, start));
        k += 1;
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub(crate) enum Term {
    Num(Rational),
    Name(String),
    App(String, Vec<Term>),
    Add(Box<Term>, Box<Term>),
    Sub(Box<Term>, Box<Term>),
    Mul(Box<Term>, Box<Term>),
    Neg(Box<Term>),
}

pub(crate) struct TermParser {
    toks: Vec<(Tok, usize)>,
    pos: usize,
}

impl TermParser {
    pub(crate) fn new(text: &str) -> Result<Self, String> {
        Ok(Self {
            toks: tokenize(text)?,
            pos: 0,
        })
    }

    pub(crate) fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|(t, _)| t)
    }

    pub(crate) fn at_end(&self) -> bool {
        self.pos >= self.toks.len()
    }

    pub(crate) fn column(&self) -> usize {
        self.toks
            .get(self.pos)
            .map(|(_, c)| *c)
            .unwrap_or_else(|| self.toks.last().map(|(_, c)| c + 1).unwrap_or(1))
    }

    pub(crate) fn error(&self, expected: &str) -> String {
        let found = self.peek().map(Tok::describe).unwrap_or_else(|| "end of input".into());
        format!("column {}: expected {expected}, found {found}", self.column())
    }

    pub(crate) fn eat(&mut self, tok: &Tok) -> bool {
        if self.peek() == Some(tok) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    pub(crate) fn expect(&mut self, tok: &Tok, expected: &str) -> Result<(), String> {
        if self.eat(tok) {
            Ok(())
        } else {
            Err(self.error(expected))
        }
    }

    pub(crate) fn ident(&mut self) -> Result<String, String> {
        match self.peek() {
            Some(Tok::Ident(name)) => {
                let name = name.clone();
                self.pos += 1;
                Ok(name)
            }
            _ => Err(self.error("identifier")),
        }
    }

    pub(crate) fn term(&mut self) -> Result<Term, String> {
        let mut lhs = self.product()?;
        loop {
            if self.eat(&Tok::Plus) {
                lhs = Term::Add(Box::new(lhs), Box::new(self.product()?));
            } else if self.eat(&Tok::Minus) {
                lhs = Term::Sub(Box::new(lhs), Box::new(self.product()?));
            } else {
                return Ok(lhs);
            }
        }
    }

    fn product(&mut self) -> Result<Term, String> {
        let mut lhs = self.unary()?;
        while self.eat(&Tok::Star) {
            lhs = Term::Mul(Box::new(lhs), Box::new(self.unary()?));
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Term, String> {
        if self.eat(&Tok::Minus) {
            return Ok(Term::Neg(Box::new(self.unary()?)));
        }
        self.atom()
    }

    fn atom(&mut self) -> Result<Term, String> {
        match self.peek().cloned() {
            Some(Tok::Num(q)) => {
                self.pos += 1;
                Ok(Term::Num(q))
            }
            Some(Tok::Ident(name)) => {
                self.pos += 1;
                if self.eat(&Tok::LParen) {
                    let args = self.args(&Tok::RParen)?;
                    Ok(Term::App(name, args))
                } else {
                    Ok(Term::Name(name))
                }
            }
            Some(Tok::LParen) => {
                self.pos += 1;
                let t = self.term()?;
                self.expect(&Tok::RParen, "')'")?;
                Ok(t)
            }
            _ => Err(self.error("expression")),
        }
    }

    /// Comma-separated terms up to the closing token, which is consumed.
    pub(crate) fn args(&mut self, close: &Tok) -> Result<Vec<Term>, String> {
        let mut args = Vec::new();
        if self.eat(close) {
            return Ok(args);
        }
        loop {
            args.push(self.term()?);
            if self.eat(close) {
                return Ok(args);
            }
            self.expect(&Tok::Comma, "',' or closing bracket")?;
        }
    }
}
