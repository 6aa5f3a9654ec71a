//! Recursive-descent parser for
//!
//! ```text
//! expr   := term (('+'|'-') term)*
//! term   := factor (('*'|'/') factor)*
//! factor := base ('^' int)?
//! base   := number | ident | func '(' expr ')' | '(' expr ')'
//! ```

use super::{BinOp, Expr, Func, Var};
use crate::error::{Error, Result};

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
    m: usize,
    r: usize,
}

pub(super) fn parse(src: &str, m: usize, r: usize) -> Result<Expr> {
    let mut p = Parser { src: src.as_bytes(), pos: 0, m, r };
    let e = p.expr()?;
    p.skip_ws();
    if p.pos != p.src.len() {
        return Err(p.err("unexpected trailing input"));
    }
    Ok(e)
}

impl Parser<'_> {
    fn err(&self, msg: &str) -> Error {
        Error::Syntax { pos: self.pos, msg: msg.to_string() }
    }

    fn skip_ws(&mut self) {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.src.get(self.pos).copied()
    }

    fn expect(&mut self, c: u8) -> Result<()> {
        if self.peek() == Some(c) {
            self.pos += 1;
            Ok(())
        } else {
            Err(self.err(&format!("expected '{}'", c as char)))
        }
    }

    fn expr(&mut self) -> Result<Expr> {
        let mut lhs = self.term()?;
        loop {
            let op = match self.peek() {
                Some(b'+') => BinOp::Add,
                Some(b'-') => BinOp::Sub,
                _ => return Ok(lhs),
            };
            self.pos += 1;
            let rhs = self.term()?;
            lhs = Expr::raw_bin(op, lhs, rhs);
        }
    }

    fn term(&mut self) -> Result<Expr> {
        let mut lhs = self.factor()?;
        loop {
            let op = match self.peek() {
                Some(b'*') => BinOp::Mul,
                Some(b'/') => BinOp::Div,
                _ => return Ok(lhs),
            };
            self.pos += 1;
            let rhs = self.factor()?;
            lhs = Expr::raw_bin(op, lhs, rhs);
        }
    }

    fn factor(&mut self) -> Result<Expr> {
        let base = self.base()?;
        if self.peek() == Some(b'^') {
            self.pos += 1;
            let n = self.int()?;
            return Ok(Expr::raw_pow(base, n));
        }
        Ok(base)
    }

    fn int(&mut self) -> Result<i32> {
        self.skip_ws();
        let start = self.pos;
        if self.src.get(self.pos) == Some(&b'-') {
            self.pos += 1;
        }
        let digits = self.pos;
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        if self.pos == digits {
            self.pos = start;
            return Err(self.err("expected integer exponent"));
        }
        let text = std::str::from_utf8(&self.src[start..self.pos]).unwrap();
        text.parse().map_err(|_| Error::Syntax { pos: start, msg: "exponent out of range".into() })
    }

    fn base(&mut self) -> Result<Expr> {
        match self.peek() {
            Some(b'(') => {
                self.pos += 1;
                let e = self.expr()?;
                self.expect(b')')?;
                Ok(e)
            }
            Some(c) if c.is_ascii_digit() || c == b'.' => self.number(),
            Some(c) if c.is_ascii_alphabetic() => self.ident(),
            Some(_) => Err(self.err("unexpected character")),
            None => Err(self.err("unexpected end of input")),
        }
    }

    fn number(&mut self) -> Result<Expr> {
        let start = self.pos;
        let s = self.src;
        let digits = |p: &mut usize| {
            while *p < s.len() && s[*p].is_ascii_digit() {
                *p += 1;
            }
        };
        digits(&mut self.pos);
        if self.pos < s.len() && s[self.pos] == b'.' {
            self.pos += 1;
            digits(&mut self.pos);
        }
        if self.pos < s.len() && (s[self.pos] == b'e' || s[self.pos] == b'E') {
            let mark = self.pos;
            self.pos += 1;
            if self.pos < s.len() && (s[self.pos] == b'+' || s[self.pos] == b'-') {
                self.pos += 1;
            }
            let exp_digits = self.pos;
            digits(&mut self.pos);
            if self.pos == exp_digits {
                self.pos = mark;
            }
        }
        let text = std::str::from_utf8(&s[start..self.pos]).unwrap();
        match text.parse::<f64>() {
            Ok(v) if v.is_finite() => Ok(Expr::num(v)),
            _ => Err(Error::Syntax { pos: start, msg: format!("invalid number '{text}'") }),
        }
    }

    fn ident(&mut self) -> Result<Expr> {
        let start = self.pos;
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_alphanumeric() {
            self.pos += 1;
        }
        let name = std::str::from_utf8(&self.src[start..self.pos]).unwrap();
        if let Some(f) = Func::from_name(name) {
            self.expect(b'(')?;
            let arg = self.expr()?;
            self.expect(b')')?;
            return Ok(Expr::raw_call(f, arg));
        }
        let (kind, rest) = name.split_at(1);
        let index: Option<usize> =
            if !rest.is_empty() && rest.bytes().all(|b| b.is_ascii_digit()) { rest.parse().ok() } else { None };
        let var = match (kind, index) {
            ("x", Some(i)) if i >= 1 && i <= self.m => Var::X(i - 1),
            ("y", Some(a)) if a >= 1 && a <= self.r => Var::Y(a - 1),
            ("x", Some(_)) | ("y", Some(_)) => {
                return Err(Error::Arity { name: name.to_string(), m: self.m, r: self.r })
            }
            _ => return Err(Error::Syntax { pos: start, msg: format!("unknown identifier '{name}'") }),
        };
        Ok(Expr::var(var))
    }
}

#[cfg(test)]
mod tests {
    use super::super::Node;
    use super::*;

    #[test]
    fn parses_precedence_and_associativity() {
        let e = parse("x1*y2 + 3", 2, 2).unwrap();
        match e.node() {
            Node::Bin(BinOp::Add, l, r) => {
                assert!(matches!(l.node(), Node::Bin(BinOp::Mul, _, _)));
                assert_eq!(r.as_num(), Some(3.0));
            }
            other => panic!("unexpected tree {other:?}"),
        }
        let e = parse("1 - 2 - 3", 1, 1).unwrap();
        assert_eq!(e.eval(&[0.0], &[0.0]).unwrap(), -4.0);
        let e = parse("sin(x1)^2", 1, 1).unwrap();
        assert!(matches!(e.node(), Node::Pow(_, 2)));
    }

    #[test]
    fn rejects_bad_input() {
        assert!(matches!(parse("x1 +", 1, 1), Err(Error::Syntax { .. })));
        assert!(matches!(parse("foo(x1)", 1, 1), Err(Error::Syntax { .. })));
        assert!(matches!(parse("x0", 1, 1), Err(Error::Arity { .. })));
        assert!(matches!(parse("y3", 1, 2), Err(Error::Arity { .. })));
        assert!(matches!(parse("(x1", 1, 1), Err(Error::Syntax { .. })));
        assert!(matches!(parse("x1 x1", 1, 1), Err(Error::Syntax { .. })));
        assert!(matches!(parse("x1^y1", 1, 1), Err(Error::Syntax { .. })));
    }

    #[test]
    fn numbers_with_exponents() {
        let e = parse("1.5e-3 * x1", 1, 0).unwrap();
        assert_eq!(e.eval(&[2.0], &[]).unwrap(), 3e-3);
    }
}
