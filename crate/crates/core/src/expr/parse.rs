//! Recursive-descent parser.
//!
//! Precedence, lowest first: `+ -`, `* /`, unary minus, `^` (right
//! associative, binding tighter than unary minus so `-x^2 = -(x^2)`).
//! Besides the one-argument functions there are two builtins:
//! `pow(a, b)` and `quad(integrand, upper, anchor)`.

use std::fmt;

use thiserror::Error;

use super::{Bindings, Expr, Func};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ParseErrorKind {
    UnexpectedChar(char),
    UnexpectedToken(String),
    UnexpectedEnd,
    Expected(&'static str),
    UnknownFunction(String),
    BadNumber(String),
    ArgumentCount { name: String, expected: usize, found: usize },
    NonConstantAnchor,
}

impl fmt::Display for ParseErrorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ParseErrorKind::UnexpectedChar(c) => write!(f, "unknown character `{c}`"),
            ParseErrorKind::UnexpectedToken(t) => write!(f, "unexpected `{t}`"),
            ParseErrorKind::UnexpectedEnd => f.write_str("unexpected end of input"),
            ParseErrorKind::Expected(what) => write!(f, "expected {what}"),
            ParseErrorKind::UnknownFunction(n) => write!(f, "unknown function `{n}`"),
            ParseErrorKind::BadNumber(s) => write!(f, "malformed number `{s}`"),
            ParseErrorKind::ArgumentCount {
                name,
                expected,
                found,
            } => write!(f, "`{name}` takes {expected} argument(s), found {found}"),
            ParseErrorKind::NonConstantAnchor => {
                f.write_str("quadrature anchor must be a constant")
            }
        }
    }
}

/// Parse failure. `offset` is the 1-based byte position of the offending
/// token; errors at end of input point one past the last byte.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("syntax error at offset {offset}: {kind}")]
pub struct ParseError {
    pub kind: ParseErrorKind,
    pub offset: usize,
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    Op(char),
    LParen,
    RParen,
    Comma,
    End,
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tok::Num(v) => write!(f, "{v}"),
            Tok::Ident(s) => f.write_str(s),
            Tok::Op(c) => write!(f, "{c}"),
            Tok::LParen => f.write_str("("),
            Tok::RParen => f.write_str(")"),
            Tok::Comma => f.write_str(","),
            Tok::End => f.write_str("end of input"),
        }
    }
}

fn err(kind: ParseErrorKind, pos: usize) -> ParseError {
    ParseError {
        kind,
        offset: pos + 1,
    }
}

fn tokenize(src: &str) -> Result<Vec<(Tok, usize)>, ParseError> {
    let bytes = src.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i];
        if c.is_ascii_whitespace() {
            i += 1;
            continue;
        }
        let start = i;
        if c.is_ascii_digit() || (c == b'.' && bytes.get(i + 1).is_some_and(u8::is_ascii_digit)) {
            while i < bytes.len() && (bytes[i].is_ascii_digit() || bytes[i] == b'.') {
                i += 1;
            }
            if i < bytes.len() && (bytes[i] == b'e' || bytes[i] == b'E') {
                let mut j = i + 1;
                if j < bytes.len() && (bytes[j] == b'+' || bytes[j] == b'-') {
                    j += 1;
                }
                if j < bytes.len() && bytes[j].is_ascii_digit() {
                    while j < bytes.len() && bytes[j].is_ascii_digit() {
                        j += 1;
                    }
                    i = j;
                }
            }
            let text = &src[start..i];
            let v: f64 = text
                .parse()
                .map_err(|_| err(ParseErrorKind::BadNumber(text.to_string()), start))?;
            out.push((Tok::Num(v), start));
            continue;
        }
        if c.is_ascii_alphabetic() || c == b'_' {
            while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                i += 1;
            }
            out.push((Tok::Ident(src[start..i].to_string()), start));
            continue;
        }
        let tok = match c {
            b'+' | b'-' | b'*' | b'/' | b'^' => Tok::Op(c as char),
            b'(' => Tok::LParen,
            b')' => Tok::RParen,
            b',' => Tok::Comma,
            _ => {
                let ch = src[start..].chars().next().unwrap_or('?');
                return Err(err(ParseErrorKind::UnexpectedChar(ch), start));
            }
        };
        out.push((tok, start));
        i += 1;
    }
    out.push((Tok::End, src.len()));
    Ok(out)
}

struct Parser {
    toks: Vec<(Tok, usize)>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].0
    }

    fn offset(&self) -> usize {
        self.toks[self.pos].1
    }

    fn bump(&mut self) -> Tok {
        let t = self.toks[self.pos].0.clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn unexpected(&self) -> ParseError {
        match self.peek() {
            Tok::End => err(ParseErrorKind::UnexpectedEnd, self.offset()),
            t => err(ParseErrorKind::UnexpectedToken(t.to_string()), self.offset()),
        }
    }

    fn expect(&mut self, tok: Tok, what: &'static str) -> Result<(), ParseError> {
        if *self.peek() == tok {
            self.bump();
            Ok(())
        } else {
            Err(err(ParseErrorKind::Expected(what), self.offset()))
        }
    }

    fn expr(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.term()?;
        loop {
            match self.peek() {
                Tok::Op('+') => {
                    self.bump();
                    lhs = raw(super::BinOp::Add, lhs, self.term()?);
                }
                Tok::Op('-') => {
                    self.bump();
                    lhs = raw(super::BinOp::Sub, lhs, self.term()?);
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn term(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.unary()?;
        loop {
            match self.peek() {
                Tok::Op('*') => {
                    self.bump();
                    lhs = raw(super::BinOp::Mul, lhs, self.unary()?);
                }
                Tok::Op('/') => {
                    self.bump();
                    lhs = raw(super::BinOp::Div, lhs, self.unary()?);
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn unary(&mut self) -> Result<Expr, ParseError> {
        match self.peek() {
            Tok::Op('-') => {
                self.bump();
                let inner = self.unary()?;
                Ok(match inner {
                    Expr::Const(c) => Expr::Const(-c),
                    other => Expr::Neg(std::sync::Arc::new(other)),
                })
            }
            Tok::Op('+') => {
                self.bump();
                self.unary()
            }
            _ => self.power(),
        }
    }

    fn power(&mut self) -> Result<Expr, ParseError> {
        let base = self.atom()?;
        if *self.peek() == Tok::Op('^') {
            self.bump();
            let exp = self.unary()?;
            return Ok(raw(super::BinOp::Pow, base, exp));
        }
        Ok(base)
    }

    fn args(&mut self) -> Result<Vec<(Expr, usize)>, ParseError> {
        self.expect(Tok::LParen, "`(`")?;
        let mut args = Vec::new();
        loop {
            let at = self.offset();
            args.push((self.expr()?, at));
            match self.peek() {
                Tok::Comma => {
                    self.bump();
                }
                Tok::RParen => {
                    self.bump();
                    return Ok(args);
                }
                _ => return Err(err(ParseErrorKind::Expected("`)`"), self.offset())),
            }
        }
    }

    fn atom(&mut self) -> Result<Expr, ParseError> {
        let at = self.offset();
        match self.peek().clone() {
            Tok::Num(v) => {
                self.bump();
                Ok(Expr::Const(v))
            }
            Tok::LParen => {
                self.bump();
                let e = self.expr()?;
                self.expect(Tok::RParen, "`)`")?;
                Ok(e)
            }
            Tok::Ident(name) => {
                self.bump();
                if *self.peek() != Tok::LParen {
                    return Ok(Expr::symbol(&name));
                }
                let args = self.args()?;
                let count = |expected: usize| -> Result<(), ParseError> {
                    if args.len() == expected {
                        Ok(())
                    } else {
                        Err(err(
                            ParseErrorKind::ArgumentCount {
                                name: name.clone(),
                                expected,
                                found: args.len(),
                            },
                            at,
                        ))
                    }
                };
                match name.as_str() {
                    "pow" => {
                        count(2)?;
                        Ok(raw(super::BinOp::Pow, args[0].0.clone(), args[1].0.clone()))
                    }
                    "quad" => {
                        count(3)?;
                        let anchor = args[2]
                            .0
                            .eval(&Bindings::new())
                            .map_err(|_| err(ParseErrorKind::NonConstantAnchor, args[2].1))?;
                        Ok(Expr::Quad(std::sync::Arc::new(super::Quadrature {
                            integrand: args[0].0.clone(),
                            upper: args[1].0.clone(),
                            anchor,
                        })))
                    }
                    _ => {
                        let f = Func::from_name(&name)
                            .ok_or_else(|| err(ParseErrorKind::UnknownFunction(name.clone()), at))?;
                        count(1)?;
                        Ok(Expr::Call(f, std::sync::Arc::new(args[0].0.clone())))
                    }
                }
            }
            _ => Err(self.unexpected()),
        }
    }
}

fn raw(op: super::BinOp, a: Expr, b: Expr) -> Expr {
    Expr::Binary(op, std::sync::Arc::new(a), std::sync::Arc::new(b))
}

/// Parses an expression. The tree mirrors the input text; no
/// simplification is applied.
pub fn parse(src: &str) -> Result<Expr, ParseError> {
    let toks = tokenize(src)?;
    let mut p = Parser { toks, pos: 0 };
    let e = p.expr()?;
    if *p.peek() != Tok::End {
        return Err(p.unexpected());
    }
    Ok(e)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::{BinOp, Var};

    #[test]
    fn simple_difference() {
        let e = parse("dy - dym").unwrap();
        assert_eq!(
            e,
            raw(BinOp::Sub, Expr::Var(Var::Dy), Expr::Var(Var::Dym))
        );
    }

    #[test]
    fn two_car_right_hand_side() {
        let e = parse("alpha*dy^n1*(dy0m - dym)/(x0m - ym)^n2").unwrap();
        let params: Vec<_> = e.params().into_iter().collect();
        assert_eq!(params, ["alpha", "dy0m", "n1", "n2", "x0m"]);
        assert_eq!(
            e.to_string(),
            "(((alpha * (dy ^ n1)) * (dy0m - dym)) / ((x0m - ym) ^ n2))"
        );
    }

    #[test]
    fn unbalanced_parenthesis_offset() {
        let e = parse("ln(-1").unwrap_err();
        assert_eq!(e.offset, 6);
        assert_eq!(e.kind, ParseErrorKind::Expected("`)`"));
    }

    #[test]
    fn error_kinds() {
        assert!(matches!(
            parse("foo(x)").unwrap_err().kind,
            ParseErrorKind::UnknownFunction(_)
        ));
        let e = parse("x $ y").unwrap_err();
        assert_eq!(e.kind, ParseErrorKind::UnexpectedChar('$'));
        assert_eq!(e.offset, 3);
        assert!(parse("x +").is_err());
        assert!(parse("sin(x, y)").is_err());
        assert!(parse("quad(x, x, y)").is_err());
    }

    #[test]
    fn precedence() {
        assert_eq!(parse("-x^2").unwrap().to_string(), "(-(x ^ 2))");
        assert_eq!(parse("2^3^2").unwrap().to_string(), "(2 ^ (3 ^ 2))");
        assert_eq!(parse("a-b-c").unwrap().to_string(), "((a - b) - c)");
        assert_eq!(parse("a/b*c").unwrap().to_string(), "((a / b) * c)");
        assert_eq!(parse("2^-1").unwrap().to_string(), "(2 ^ (-1))");
        assert_eq!(parse("1.5e-3").unwrap(), Expr::Const(1.5e-3));
        assert_eq!(parse("pow(x, 2)").unwrap().to_string(), "(x ^ 2)");
    }

    #[test]
    fn print_parse_round_trip_is_structural() {
        for src in [
            "sin(x)*exp(-y/2) - ln(dy^2 + 1)",
            "-3 - -x",
            "quad(exp(x), x - 1, 0.5)",
            "abs(xm - x)^(-0.25) / sgn(dym)",
        ] {
            let e = parse(src).unwrap();
            let back = parse(&e.to_string()).unwrap();
            assert_eq!(e.to_string(), back.to_string(), "{src}");
        }
    }
}
