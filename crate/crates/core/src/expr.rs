//! A small expression language for sampled functions.
//!
//! ```text
//! expr   := term (('+' | '-') term)*
//! term   := factor ('*' factor)*
//! factor := number | var | func '(' expr ')' | '(' expr ')' | '-' factor
//! ```
//!
//! Variables are `x0 .. x{d-1}` and `y0 .. y{d-1}` (`x` and `y` alias the
//! first coordinate), functions are `sin`, `cos` and `exp`, and `pi` is a
//! constant.

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Func {
    Sin,
    Cos,
    Exp,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Const(f64),
    X(usize),
    Y(usize),
    Neg(Box<Expr>),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Call(Func, Box<Expr>),
}

impl Expr {
    /// Evaluates at the slow variable `x` and the fast variable `y`.
    pub fn eval(&self, x: &[f64], y: &[f64]) -> f64 {
        match self {
            Expr::Const(c) => *c,
            Expr::X(i) => x[*i],
            Expr::Y(i) => y[*i],
            Expr::Neg(a) => -a.eval(x, y),
            Expr::Add(a, b) => a.eval(x, y) + b.eval(x, y),
            Expr::Sub(a, b) => a.eval(x, y) - b.eval(x, y),
            Expr::Mul(a, b) => a.eval(x, y) * b.eval(x, y),
            Expr::Call(f, a) => {
                let v = a.eval(x, y);
                match f {
                    Func::Sin => v.sin(),
                    Func::Cos => v.cos(),
                    Func::Exp => v.exp(),
                }
            }
        }
    }

    /// Evaluates with both variable families bound to the same point.
    pub fn eval_at(&self, p: &[f64]) -> f64 {
        self.eval(p, p)
    }

    pub fn uses_x(&self) -> bool {
        match self {
            Expr::X(_) => true,
            Expr::Const(_) | Expr::Y(_) => false,
            Expr::Neg(a) | Expr::Call(_, a) => a.uses_x(),
            Expr::Add(a, b) | Expr::Sub(a, b) | Expr::Mul(a, b) => a.uses_x() || b.uses_x(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    Plus,
    Minus,
    Star,
    LParen,
    RParen,
    Comma,
}

fn tokenize(src: &str) -> Result<Vec<(Tok, usize)>> {
    let bytes = src.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i];
        let start = i;
        match c {
            b' ' | b'\t' | b'\n' | b'\r' => {
                i += 1;
                continue;
            }
            b'+' => out.push((Tok::Plus, start)),
            b'-' => out.push((Tok::Minus, start)),
            b'*' => out.push((Tok::Star, start)),
            b'(' => out.push((Tok::LParen, start)),
            b')' => out.push((Tok::RParen, start)),
            b',' => out.push((Tok::Comma, start)),
            b'0'..=b'9' | b'.' => {
                while i < bytes.len() && (bytes[i].is_ascii_digit() || bytes[i] == b'.') {
                    i += 1;
                }
                if i < bytes.len() && (bytes[i] == b'e' || bytes[i] == b'E') {
                    let mut j = i + 1;
                    if j < bytes.len() && (bytes[j] == b'+' || bytes[j] == b'-') {
                        j += 1;
                    }
                    if j < bytes.len() && bytes[j].is_ascii_digit() {
                        i = j;
                        while i < bytes.len() && bytes[i].is_ascii_digit() {
                            i += 1;
                        }
                    }
                }
                let text = &src[start..i];
                let v = text
                    .parse::<f64>()
                    .map_err(|_| Error::Parse { msg: format!("bad number `{text}`"), offset: start })?;
                out.push((Tok::Num(v), start));
                continue;
            }
            c if c.is_ascii_alphabetic() || c == b'_' => {
                while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                    i += 1;
                }
                out.push((Tok::Ident(src[start..i].to_string()), start));
                continue;
            }
            _ => {
                let ch = src[start..].chars().next().unwrap_or('?');
                return Err(Error::Parse { msg: format!("unexpected character `{ch}`"), offset: start });
            }
        }
        i += 1;
    }
    Ok(out)
}

struct Parser {
    toks: Vec<(Tok, usize)>,
    pos: usize,
    end: usize,
    dim: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|(t, _)| t)
    }

    fn offset(&self) -> usize {
        self.toks.get(self.pos).map_or(self.end, |(_, o)| *o)
    }

    fn err<T>(&self, msg: impl Into<String>) -> Result<T> {
        Err(Error::Parse { msg: msg.into(), offset: self.offset() })
    }

    fn expr(&mut self) -> Result<Expr> {
        let mut lhs = self.term()?;
        loop {
            match self.peek() {
                Some(Tok::Plus) => {
                    self.pos += 1;
                    lhs = Expr::Add(Box::new(lhs), Box::new(self.term()?));
                }
                Some(Tok::Minus) => {
                    self.pos += 1;
                    lhs = Expr::Sub(Box::new(lhs), Box::new(self.term()?));
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn term(&mut self) -> Result<Expr> {
        let mut lhs = self.factor()?;
        while let Some(Tok::Star) = self.peek() {
            self.pos += 1;
            lhs = Expr::Mul(Box::new(lhs), Box::new(self.factor()?));
        }
        Ok(lhs)
    }

    fn factor(&mut self) -> Result<Expr> {
        let offset = self.offset();
        let Some(tok) = self.peek().cloned() else {
            return self.err("unexpected end of expression");
        };
        self.pos += 1;
        match tok {
            Tok::Num(v) => Ok(Expr::Const(v)),
            Tok::Minus => Ok(Expr::Neg(Box::new(self.factor()?))),
            Tok::LParen => {
                let inner = self.expr()?;
                self.expect_rparen()?;
                Ok(inner)
            }
            Tok::Ident(name) => self.ident(&name, offset),
            other => {
                self.pos -= 1;
                self.err(format!("unexpected token {other:?}"))
            }
        }
    }

    fn ident(&mut self, name: &str, offset: usize) -> Result<Expr> {
        let func = match name {
            "sin" => Some(Func::Sin),
            "cos" => Some(Func::Cos),
            "exp" => Some(Func::Exp),
            _ => None,
        };
        if let Some(func) = func {
            if self.peek() != Some(&Tok::LParen) {
                return self.err(format!("`{name}` must be followed by `(`"));
            }
            self.pos += 1;
            let arg = self.expr()?;
            if self.peek() == Some(&Tok::Comma) {
                return self.err(format!("`{name}` takes exactly one argument"));
            }
            self.expect_rparen()?;
            return Ok(Expr::Call(func, Box::new(arg)));
        }
        if name == "pi" {
            return Ok(Expr::Const(std::f64::consts::PI));
        }
        let var = |rest: &str| -> Option<usize> {
            if rest.is_empty() {
                Some(0)
            } else if rest.bytes().all(|b| b.is_ascii_digit()) {
                rest.parse().ok()
            } else {
                None
            }
        };
        let parsed = if let Some(rest) = name.strip_prefix('x') {
            var(rest).map(|i| (i, true))
        } else if let Some(rest) = name.strip_prefix('y') {
            var(rest).map(|i| (i, false))
        } else {
            None
        };
        match parsed {
            Some((i, is_x)) if i < self.dim => Ok(if is_x { Expr::X(i) } else { Expr::Y(i) }),
            _ => Err(Error::Parse { msg: format!("unknown variable `{name}`"), offset }),
        }
    }

    fn expect_rparen(&mut self) -> Result<()> {
        if self.peek() == Some(&Tok::RParen) {
            self.pos += 1;
            Ok(())
        } else {
            self.err("expected `)`")
        }
    }
}

/// Parses `src` for a `dim`-dimensional setting.
pub fn parse_expression(src: &str, dim: usize) -> Result<Expr> {
    let toks = tokenize(src)?;
    if toks.is_empty() {
        return Err(Error::Parse { msg: "empty expression".into(), offset: 0 });
    }
    let mut p = Parser { toks, pos: 0, end: src.len(), dim };
    let e = p.expr()?;
    if p.pos != p.toks.len() {
        return p.err("trailing input");
    }
    Ok(e)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn eval1(src: &str, x: f64) -> f64 {
        parse_expression(src, 1).unwrap().eval_at(&[x])
    }

    #[test]
    fn examples() {
        assert!(parse_expression("sin(2*pi*x0)", 1).is_ok());
        match parse_expression("x1", 1) {
            Err(Error::Parse { msg, offset }) => {
                assert!(msg.contains("unknown variable"));
                assert_eq!(offset, 0);
            }
            other => panic!("{other:?}"),
        }
        assert_eq!(eval1("x0*x0", 0.5), 0.25);
    }

    #[test]
    fn precedence_and_unary_minus() {
        assert_eq!(eval1("1 + 2 * 3", 0.0), 7.0);
        assert_eq!(eval1("(1 + 2) * 3", 0.0), 9.0);
        assert_eq!(eval1("-x*2 - 1", 1.5), -4.0);
        assert_eq!(eval1("2 - 3 - 4", 0.0), -5.0);
        assert_eq!(eval1("1.5e-1 + 2E2", 0.0), 200.15);
        assert!((eval1("exp(x) * cos(0)", 1.0) - std::f64::consts::E).abs() < 1e-15);
    }

    #[test]
    fn two_scale_variables() {
        let e = parse_expression("x1 * y0 + y1", 2).unwrap();
        assert_eq!(e.eval(&[0.0, 2.0], &[3.0, 1.0]), 7.0);
        assert!(e.uses_x());
        assert!(!parse_expression("sin(2*pi*y)", 1).unwrap().uses_x());
    }

    #[test]
    fn errors_carry_offsets() {
        let offset = |src: &str| match parse_expression(src, 1) {
            Err(Error::Parse { offset, .. }) => offset,
            other => panic!("{src}: {other:?}"),
        };
        assert_eq!(offset(""), 0);
        assert_eq!(offset("1 + "), 4);
        assert_eq!(offset("sin(x, x)"), 5);
        assert_eq!(offset("tan(x)"), 0);
        assert_eq!(offset("(x"), 2);
        assert_eq!(offset("x $ 2"), 2);
        assert_eq!(offset("x x"), 2);
        assert_eq!(offset("sin x"), 4);
    }
}
