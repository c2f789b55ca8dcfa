//! Recursive-descent parser for the field grammar:
//!
//! ```text
//! expr   := term (("+"|"-") term)* ;
//! term   := factor (("*"|"/") factor)* ;
//! factor := base ("^" integer)? ;
//! base   := number | variable | function "(" expr ")" | "(" expr ")" | "-" base ;
//! ```
//!
//! Note that `-z^2` is `(-z)^2` under this grammar.

use alloc::string::{String, ToString};

use super::expr::{BinOp, Expr, Func, Var};
use crate::chart::SurfaceKind;
use crate::Error;

const BASE_EXPECTED: &str = "a number, a variable, a function, `(` or `-`";

pub fn parse_expr(text: &str, surface: SurfaceKind) -> Result<Expr, Error> {
    let mut p = Parser {
        src: text.as_bytes(),
        pos: 0,
        surface,
    };
    p.skip_ws();
    if p.pos == p.src.len() {
        return Err(p.expected(BASE_EXPECTED));
    }
    let e = p.expr()?;
    p.skip_ws();
    if p.pos != p.src.len() {
        return Err(p.expected("an operator or end of input"));
    }
    Ok(e)
}

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
    surface: SurfaceKind,
}

impl Parser<'_> {
    fn skip_ws(&mut self) {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.src.get(self.pos).copied()
    }

    fn expected(&self, what: &str) -> Error {
        Error::Syntax {
            position: self.pos,
            expected: what.to_string(),
        }
    }

    fn expr(&mut self) -> Result<Expr, Error> {
        let mut lhs = self.term()?;
        loop {
            let op = match self.peek() {
                Some(b'+') => BinOp::Add,
                Some(b'-') => BinOp::Sub,
                _ => return Ok(lhs),
            };
            self.pos += 1;
            let rhs = self.term()?;
            lhs = Expr::Bin(op, lhs.into(), rhs.into());
        }
    }

    fn term(&mut self) -> Result<Expr, Error> {
        let mut lhs = self.factor()?;
        loop {
            let op = match self.peek() {
                Some(b'*') => BinOp::Mul,
                Some(b'/') => BinOp::Div,
                _ => return Ok(lhs),
            };
            self.pos += 1;
            let rhs = self.factor()?;
            lhs = Expr::Bin(op, lhs.into(), rhs.into());
        }
    }

    fn factor(&mut self) -> Result<Expr, Error> {
        let base = self.base()?;
        if self.peek() != Some(b'^') {
            return Ok(base);
        }
        self.pos += 1;
        let start = {
            self.skip_ws();
            self.pos
        };
        match self.src.get(self.pos) {
            Some(c) if c.is_ascii_digit() => {}
            Some(b'-') | Some(b'.') => return Err(Error::NonIntegerExponent { position: start }),
            _ => return Err(self.expected("a non-negative integer exponent")),
        }
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        if matches!(self.src.get(self.pos), Some(b'.') | Some(b'e') | Some(b'E')) {
            return Err(Error::NonIntegerExponent { position: start });
        }
        let digits = core::str::from_utf8(&self.src[start..self.pos]).expect("ascii digits");
        let n: u32 = digits
            .parse()
            .map_err(|_| Error::NonIntegerExponent { position: start })?;
        Ok(Expr::Pow(base.into(), n))
    }

    fn base(&mut self) -> Result<Expr, Error> {
        match self.peek() {
            Some(b'-') => {
                self.pos += 1;
                Ok(Expr::Neg(self.base()?.into()))
            }
            Some(b'(') => {
                self.pos += 1;
                let e = self.expr()?;
                self.close_paren()?;
                Ok(e)
            }
            Some(c) if c.is_ascii_digit() || c == b'.' => self.number(),
            Some(c) if c.is_ascii_alphabetic() || c == b'_' => self.identifier(),
            _ => Err(self.expected(BASE_EXPECTED)),
        }
    }

    fn close_paren(&mut self) -> Result<(), Error> {
        if self.peek() == Some(b')') {
            self.pos += 1;
            Ok(())
        } else {
            Err(self.expected("`)`"))
        }
    }

    fn number(&mut self) -> Result<Expr, Error> {
        let start = self.pos;
        let mut digits = 0;
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_digit() {
            self.pos += 1;
            digits += 1;
        }
        if self.src.get(self.pos) == Some(&b'.') {
            self.pos += 1;
            while self.pos < self.src.len() && self.src[self.pos].is_ascii_digit() {
                self.pos += 1;
                digits += 1;
            }
        }
        if digits == 0 {
            self.pos = start;
            return Err(self.expected("a decimal number"));
        }
        let text = core::str::from_utf8(&self.src[start..self.pos]).expect("ascii number");
        let value: f64 = text.parse().map_err(|_| Error::Syntax {
            position: start,
            expected: "a decimal number".to_string(),
        })?;
        Ok(Expr::Const(value))
    }

    fn identifier(&mut self) -> Result<Expr, Error> {
        let start = self.pos;
        while self.pos < self.src.len()
            && (self.src[self.pos].is_ascii_alphanumeric() || self.src[self.pos] == b'_')
        {
            self.pos += 1;
        }
        let name = core::str::from_utf8(&self.src[start..self.pos]).expect("ascii identifier");
        if let Some(func) = Func::lookup(name) {
            if self.peek() != Some(b'(') {
                return Err(self.expected("`(` after function name"));
            }
            self.pos += 1;
            let arg = self.expr()?;
            self.close_paren()?;
            return Ok(Expr::Func(func, arg.into()));
        }
        match Var::lookup(name, self.surface) {
            Some(v) => Ok(Expr::Var(v)),
            None => Err(Error::UnknownVariable(String::from(name))),
        }
    }
}
