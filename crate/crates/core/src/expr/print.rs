use std::fmt;

use super::{BinOp, Expr, Node};

fn prec(e: &Expr) -> u8 {
    match e.node() {
        Node::Bin(BinOp::Add | BinOp::Sub, _, _) => 1,
        Node::Bin(BinOp::Mul | BinOp::Div, _, _) => 2,
        Node::Pow(_, _) => 3,
        _ => 4,
    }
}

fn wrap(f: &mut fmt::Formatter<'_>, e: &Expr, paren: bool) -> fmt::Result {
    if paren {
        write!(f, "({e})")
    } else {
        write!(f, "{e}")
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.node() {
            // Negative literals only arise from folding; the grammar has no
            // unary minus, so they go through `neg`.
            Node::Num(v) if v.is_sign_negative() && *v != 0.0 => write!(f, "neg({})", -v),
            Node::Num(v) => write!(f, "{}", v.abs()),
            Node::Var(v) => write!(f, "{v}"),
            Node::Call(func, a) => write!(f, "{}({a})", func.name()),
            Node::Pow(a, n) => {
                wrap(f, a, prec(a) < 4)?;
                write!(f, "^{n}")
            }
            Node::Bin(op, a, b) => {
                let p = prec(self);
                wrap(f, a, prec(a) < p)?;
                f.write_str(match op {
                    BinOp::Add => " + ",
                    BinOp::Sub => " - ",
                    BinOp::Mul => "*",
                    BinOp::Div => "/",
                })?;
                wrap(f, b, prec(b) <= p)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn round(s: &str) -> String {
        Expr::parse(s, 3, 3).unwrap().to_string()
    }

    #[test]
    fn prints_minimal_parentheses() {
        assert_eq!(round("x1*y2 + 3"), "x1*y2 + 3");
        assert_eq!(round("x1 - (y1 - y2)"), "x1 - (y1 - y2)");
        assert_eq!(round("(x1 - y1) - y2"), "x1 - y1 - y2");
        assert_eq!(round("(x1 + y1)^2"), "(x1 + y1)^2");
        assert_eq!(round("sin(x1)^-2"), "sin(x1)^-2");
        assert_eq!(round("(x1^2)^3"), "(x1^2)^3");
        assert_eq!(round("0.1*x1"), "0.1*x1");
    }

    #[test]
    fn negative_literal_prints_through_neg() {
        let e = Expr::num(-2.5);
        assert_eq!(e.to_string(), "neg(2.5)");
        let back = Expr::parse(&e.to_string(), 0, 0).unwrap();
        assert_eq!(back.eval(&[], &[]).unwrap(), -2.5);
    }
}
