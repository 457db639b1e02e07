use std::fmt;

use crate::span::Span;

use super::SyntaxError;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TokenKind {
    Ident(String),
    Int(u64),
    Call,
    If,
    Else,
    For,
    In,
    Range,
    True,
    False,
    LParen,
    RParen,
    LBrace,
    RBrace,
    Comma,
    Arrow,
    Plus,
    Minus,
    Gt,
    EqEq,
    Ge,
    AndAnd,
    Star,
    Slash,
    Eof,
}

impl fmt::Display for TokenKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let text = match self {
            TokenKind::Ident(name) => return write!(f, "identifier `{name}`"),
            TokenKind::Int(n) => return write!(f, "integer `{n}`"),
            TokenKind::Call => "`call`",
            TokenKind::If => "`if`",
            TokenKind::Else => "`else`",
            TokenKind::For => "`for`",
            TokenKind::In => "`in`",
            TokenKind::Range => "`range`",
            TokenKind::True => "`true`",
            TokenKind::False => "`false`",
            TokenKind::LParen => "`(`",
            TokenKind::RParen => "`)`",
            TokenKind::LBrace => "`{`",
            TokenKind::RBrace => "`}`",
            TokenKind::Comma => "`,`",
            TokenKind::Arrow => "`=>`",
            TokenKind::Plus => "`+`",
            TokenKind::Minus => "`-`",
            TokenKind::Gt => "`>`",
            TokenKind::EqEq => "`==`",
            TokenKind::Ge => "`>=`",
            TokenKind::AndAnd => "`&&`",
            TokenKind::Star => "`*`",
            TokenKind::Slash => "`/`",
            TokenKind::Eof => "end of input",
        };
        f.write_str(text)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Token {
    pub kind: TokenKind,
    pub span: Span,
}

/// A `// tag: <name>` comment.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TagComment {
    pub name: String,
    pub span: Span,
}

#[derive(Debug, Default)]
pub struct Lexed {
    pub tokens: Vec<Token>,
    pub tags: Vec<TagComment>,
}

pub fn is_identifier(text: &str) -> bool {
    let mut chars = text.chars();
    match chars.next() {
        Some(c) if c.is_ascii_alphabetic() || c == '_' => {}
        _ => return false,
    }
    chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

fn keyword(word: &str) -> Option<TokenKind> {
    Some(match word {
        "call" => TokenKind::Call,
        "if" => TokenKind::If,
        "else" => TokenKind::Else,
        "for" => TokenKind::For,
        "in" => TokenKind::In,
        "range" => TokenKind::Range,
        "true" => TokenKind::True,
        "false" => TokenKind::False,
        _ => return None,
    })
}

fn tag_of_comment(body: &str) -> Option<String> {
    let rest = body.trim().strip_prefix("tag")?.trim_start().strip_prefix(':')?;
    let name = rest.trim();
    is_identifier(name).then(|| name.to_string())
}

pub fn tokenize(text: &str) -> Result<Lexed, SyntaxError> {
    let chars: Vec<char> = text.chars().collect();
    let mut out = Lexed::default();
    let mut i = 0;
    let mut line = 1u32;
    let mut col = 1u32;

    while i < chars.len() {
        let c = chars[i];
        let span = Span::new(line, col);
        if c == '\n' {
            i += 1;
            line += 1;
            col = 1;
            continue;
        }
        if c.is_whitespace() {
            i += 1;
            col += 1;
            continue;
        }
        if c == '/' && chars.get(i + 1) == Some(&'/') {
            let start = i + 2;
            let mut end = start;
            while end < chars.len() && chars[end] != '\n' {
                end += 1;
            }
            let body: String = chars[start..end].iter().collect();
            if let Some(name) = tag_of_comment(&body) {
                out.tags.push(TagComment { name, span });
            }
            col += (end - i) as u32;
            i = end;
            continue;
        }
        if c.is_ascii_alphabetic() || c == '_' {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                i += 1;
            }
            let word: String = chars[start..i].iter().collect();
            col += (i - start) as u32;
            let kind = keyword(&word).unwrap_or(TokenKind::Ident(word));
            out.tokens.push(Token { kind, span });
            continue;
        }
        if c.is_ascii_digit() {
            let start = i;
            while i < chars.len() && chars[i].is_ascii_digit() {
                i += 1;
            }
            let digits: String = chars[start..i].iter().collect();
            col += (i - start) as u32;
            let value = digits.parse::<u64>().map_err(|_| SyntaxError::Lexical {
                message: format!("integer literal `{digits}` is too large"),
                line: span.line,
                column: span.column,
            })?;
            out.tokens.push(Token {
                kind: TokenKind::Int(value),
                span,
            });
            continue;
        }
        let next = chars.get(i + 1).copied();
        let (kind, width) = match (c, next) {
            ('=', Some('>')) => (TokenKind::Arrow, 2),
            ('=', Some('=')) => (TokenKind::EqEq, 2),
            ('>', Some('=')) => (TokenKind::Ge, 2),
            ('&', Some('&')) => (TokenKind::AndAnd, 2),
            ('>', _) => (TokenKind::Gt, 1),
            ('(', _) => (TokenKind::LParen, 1),
            (')', _) => (TokenKind::RParen, 1),
            ('{', _) => (TokenKind::LBrace, 1),
            ('}', _) => (TokenKind::RBrace, 1),
            (',', _) => (TokenKind::Comma, 1),
            ('+', _) => (TokenKind::Plus, 1),
            ('-', _) => (TokenKind::Minus, 1),
            ('*', _) => (TokenKind::Star, 1),
            ('/', _) => (TokenKind::Slash, 1),
            _ => {
                return Err(SyntaxError::Lexical {
                    message: format!("unknown token `{c}`"),
                    line: span.line,
                    column: span.column,
                })
            }
        };
        out.tokens.push(Token { kind, span });
        i += width;
        col += width as u32;
    }
    out.tokens.push(Token {
        kind: TokenKind::Eof,
        span: Span::new(line, col),
    });
    Ok(out)
}
