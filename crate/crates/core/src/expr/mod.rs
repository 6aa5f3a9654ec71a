//! Scalar field expressions in base coordinates `x1..xm` and fiber
//! coordinates `y1..yr`.
//!
//! Trees are immutable and reference counted, so cloning is cheap and
//! subtrees are shared freely. The `add`/`mul`/... constructors fold
//! constants and drop neutral elements; the parser builds raw nodes so
//! that printing reproduces the parsed structure.

mod parse;
mod print;
mod tape;

pub use tape::Tape;

use std::collections::BTreeSet;
use std::fmt;
use std::ops;
use std::sync::Arc;

use crate::error::{Error, Result};

/// Coordinate variable, zero-based internally and printed one-based.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Var {
    X(usize),
    Y(usize),
}

impl fmt::Display for Var {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Var::X(i) => write!(f, "x{}", i + 1),
            Var::Y(a) => write!(f, "y{}", a + 1),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Func {
    Sin,
    Cos,
    Exp,
    Log,
    Sqrt,
    Neg,
}

impl Func {
    pub fn name(self) -> &'static str {
        match self {
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Exp => "exp",
            Func::Log => "log",
            Func::Sqrt => "sqrt",
            Func::Neg => "neg",
        }
    }

    pub fn from_name(s: &str) -> Option<Func> {
        Some(match s {
            "sin" => Func::Sin,
            "cos" => Func::Cos,
            "exp" => Func::Exp,
            "log" => Func::Log,
            "sqrt" => Func::Sqrt,
            "neg" => Func::Neg,
            _ => return None,
        })
    }

    fn apply(self, v: f64) -> Result<f64> {
        match self {
            Func::Sin => Ok(v.sin()),
            Func::Cos => Ok(v.cos()),
            Func::Exp => Ok(v.exp()),
            Func::Neg => Ok(-v),
            Func::Log => {
                if v <= 0.0 {
                    Err(Error::Domain(format!("log of non-positive value {v}")))
                } else {
                    Ok(v.ln())
                }
            }
            Func::Sqrt => {
                if v < 0.0 {
                    Err(Error::Domain(format!("sqrt of negative value {v}")))
                } else {
                    Ok(v.sqrt())
                }
            }
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
}

#[derive(Debug, PartialEq)]
pub enum Node {
    Num(f64),
    Var(Var),
    Call(Func, Expr),
    Bin(BinOp, Expr, Expr),
    Pow(Expr, i32),
}

#[derive(Clone, PartialEq)]
pub struct Expr(Arc<Node>);

impl fmt::Debug for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Expr({self})")
    }
}

/// A point of the total space: base coordinates and fiber coordinates.
#[derive(Clone, Debug, PartialEq, serde::Serialize)]
pub struct FiberPoint {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
}

impl FiberPoint {
    pub fn new(x: Vec<f64>, y: Vec<f64>) -> Self {
        FiberPoint { x, y }
    }
}

fn bin_op(op: BinOp, u: f64, v: f64) -> Result<f64> {
    Ok(match op {
        BinOp::Add => u + v,
        BinOp::Sub => u - v,
        BinOp::Mul => u * v,
        BinOp::Div => {
            if v == 0.0 {
                return Err(Error::Domain("division by zero".into()));
            }
            u / v
        }
    })
}

fn pow_op(u: f64, n: i32) -> Result<f64> {
    if u == 0.0 && n < 0 {
        return Err(Error::Domain("division by zero in negative power".into()));
    }
    Ok(u.powi(n))
}

fn finite(v: f64, what: &str) -> Result<f64> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::Domain(format!("{what} produced a non-finite value")))
    }
}

impl Expr {
    pub fn node(&self) -> &Node {
        &self.0
    }

    fn raw(node: Node) -> Expr {
        Expr(Arc::new(node))
    }

    pub fn num(v: f64) -> Expr {
        Expr::raw(Node::Num(v))
    }

    pub fn zero() -> Expr {
        Expr::num(0.0)
    }

    pub fn one() -> Expr {
        Expr::num(1.0)
    }

    pub fn var(v: Var) -> Expr {
        Expr::raw(Node::Var(v))
    }

    /// Base coordinate, zero-based index.
    pub fn x(i: usize) -> Expr {
        Expr::var(Var::X(i))
    }

    /// Fiber coordinate, zero-based index.
    pub fn y(a: usize) -> Expr {
        Expr::var(Var::Y(a))
    }

    pub fn as_num(&self) -> Option<f64> {
        match *self.0 {
            Node::Num(v) => Some(v),
            _ => None,
        }
    }

    pub fn is_zero(&self) -> bool {
        self.as_num() == Some(0.0)
    }

    pub fn is_one(&self) -> bool {
        self.as_num() == Some(1.0)
    }

    pub(crate) fn raw_bin(op: BinOp, a: Expr, b: Expr) -> Expr {
        Expr::raw(Node::Bin(op, a, b))
    }

    pub(crate) fn raw_call(f: Func, a: Expr) -> Expr {
        Expr::raw(Node::Call(f, a))
    }

    pub(crate) fn raw_pow(a: Expr, n: i32) -> Expr {
        Expr::raw(Node::Pow(a, n))
    }

    pub fn add(a: Expr, b: Expr) -> Expr {
        match (a.as_num(), b.as_num()) {
            (Some(u), Some(v)) => Expr::num(u + v),
            (Some(u), _) if u == 0.0 => b,
            (_, Some(v)) if v == 0.0 => a,
            _ => Expr::raw_bin(BinOp::Add, a, b),
        }
    }

    pub fn sub(a: Expr, b: Expr) -> Expr {
        match (a.as_num(), b.as_num()) {
            (Some(u), Some(v)) => Expr::num(u - v),
            (_, Some(v)) if v == 0.0 => a,
            (Some(u), _) if u == 0.0 => Expr::neg(b),
            _ => Expr::raw_bin(BinOp::Sub, a, b),
        }
    }

    pub fn mul(a: Expr, b: Expr) -> Expr {
        match (a.as_num(), b.as_num()) {
            (Some(u), Some(v)) => Expr::num(u * v),
            (Some(u), _) | (_, Some(u)) if u == 0.0 => Expr::zero(),
            (Some(u), _) if u == 1.0 => b,
            (_, Some(v)) if v == 1.0 => a,
            (Some(u), _) if u == -1.0 => Expr::neg(b),
            (_, Some(v)) if v == -1.0 => Expr::neg(a),
            _ => Expr::raw_bin(BinOp::Mul, a, b),
        }
    }

    pub fn div(a: Expr, b: Expr) -> Expr {
        match (a.as_num(), b.as_num()) {
            (Some(u), Some(v)) if v != 0.0 => Expr::num(u / v),
            (Some(u), _) if u == 0.0 => Expr::zero(),
            (_, Some(v)) if v == 1.0 => a,
            _ => Expr::raw_bin(BinOp::Div, a, b),
        }
    }

    pub fn pow(a: Expr, n: i32) -> Expr {
        if n == 0 {
            return Expr::one();
        }
        if n == 1 {
            return a;
        }
        match a.as_num() {
            Some(u) if u != 0.0 || n > 0 => Expr::num(u.powi(n)),
            _ => Expr::raw_pow(a, n),
        }
    }

    pub fn call(f: Func, a: Expr) -> Expr {
        if let Some(u) = a.as_num() {
            if let Ok(v) = f.apply(u) {
                if v.is_finite() {
                    return Expr::num(v);
                }
            }
        }
        if f == Func::Neg {
            if let Node::Call(Func::Neg, inner) = a.node() {
                return inner.clone();
            }
        }
        Expr::raw_call(f, a)
    }

    pub fn neg(a: Expr) -> Expr {
        Expr::call(Func::Neg, a)
    }

    pub fn sin(a: Expr) -> Expr {
        Expr::call(Func::Sin, a)
    }

    pub fn cos(a: Expr) -> Expr {
        Expr::call(Func::Cos, a)
    }

    pub fn exp(a: Expr) -> Expr {
        Expr::call(Func::Exp, a)
    }

    pub fn log(a: Expr) -> Expr {
        Expr::call(Func::Log, a)
    }

    pub fn sqrt(a: Expr) -> Expr {
        Expr::call(Func::Sqrt, a)
    }

    pub fn sum<I: IntoIterator<Item = Expr>>(terms: I) -> Expr {
        terms.into_iter().fold(Expr::zero(), Expr::add)
    }

    pub fn scale(&self, c: f64) -> Expr {
        Expr::mul(Expr::num(c), self.clone())
    }

    /// Parse against the declared arity `m` (base) and `r` (fiber).
    pub fn parse(src: &str, m: usize, r: usize) -> Result<Expr> {
        parse::parse(src, m, r)
    }

    pub fn eval(&self, x: &[f64], y: &[f64]) -> Result<f64> {
        let v = match self.node() {
            Node::Num(v) => *v,
            Node::Var(Var::X(i)) => {
                *x.get(*i).ok_or_else(|| Error::Arity { name: format!("x{}", i + 1), m: x.len(), r: y.len() })?
            }
            Node::Var(Var::Y(a)) => {
                *y.get(*a).ok_or_else(|| Error::Arity { name: format!("y{}", a + 1), m: x.len(), r: y.len() })?
            }
            Node::Call(f, a) => f.apply(a.eval(x, y)?)?,
            Node::Bin(op, a, b) => bin_op(*op, a.eval(x, y)?, b.eval(x, y)?)?,
            Node::Pow(a, n) => pow_op(a.eval(x, y)?, *n)?,
        };
        finite(v, "evaluation")
    }

    pub fn eval_at(&self, p: &FiberPoint) -> Result<f64> {
        self.eval(&p.x, &p.y)
    }

    /// Symbolic partial derivative.
    pub fn diff(&self, v: Var) -> Expr {
        match self.node() {
            Node::Num(_) => Expr::zero(),
            Node::Var(w) => {
                if *w == v {
                    Expr::one()
                } else {
                    Expr::zero()
                }
            }
            Node::Call(f, a) => {
                let da = a.diff(v);
                if da.is_zero() {
                    return Expr::zero();
                }
                let outer = match f {
                    Func::Neg => return Expr::neg(da),
                    Func::Sin => Expr::cos(a.clone()),
                    Func::Cos => Expr::neg(Expr::sin(a.clone())),
                    Func::Exp => self.clone(),
                    Func::Log => return Expr::div(da, a.clone()),
                    Func::Sqrt => return Expr::div(da, Expr::mul(Expr::num(2.0), self.clone())),
                };
                Expr::mul(outer, da)
            }
            Node::Bin(op, a, b) => {
                let da = a.diff(v);
                let db = b.diff(v);
                match op {
                    BinOp::Add => Expr::add(da, db),
                    BinOp::Sub => Expr::sub(da, db),
                    BinOp::Mul => Expr::add(Expr::mul(da, b.clone()), Expr::mul(a.clone(), db)),
                    BinOp::Div => Expr::sub(
                        Expr::div(da, b.clone()),
                        Expr::div(Expr::mul(a.clone(), db), Expr::pow(b.clone(), 2)),
                    ),
                }
            }
            Node::Pow(a, n) => {
                let da = a.diff(v);
                if da.is_zero() {
                    return Expr::zero();
                }
                Expr::mul(Expr::mul(Expr::num(*n as f64), Expr::pow(a.clone(), n - 1)), da)
            }
        }
    }

    pub fn dx(&self, i: usize) -> Expr {
        self.diff(Var::X(i))
    }

    pub fn dy(&self, a: usize) -> Expr {
        self.diff(Var::Y(a))
    }

    /// Replace variables for which `f` returns `Some`. The result is
    /// rebuilt with the folding constructors.
    pub fn substitute(&self, f: &dyn Fn(Var) -> Option<Expr>) -> Expr {
        match self.node() {
            Node::Num(_) => self.clone(),
            Node::Var(v) => f(*v).unwrap_or_else(|| self.clone()),
            Node::Call(g, a) => Expr::call(*g, a.substitute(f)),
            Node::Bin(op, a, b) => {
                let a = a.substitute(f);
                let b = b.substitute(f);
                match op {
                    BinOp::Add => Expr::add(a, b),
                    BinOp::Sub => Expr::sub(a, b),
                    BinOp::Mul => Expr::mul(a, b),
                    BinOp::Div => Expr::div(a, b),
                }
            }
            Node::Pow(a, n) => Expr::pow(a.substitute(f), *n),
        }
    }

    /// Precompose with a base map: every `x_i` becomes `xs[i]`.
    pub fn compose_base(&self, xs: &[Expr]) -> Expr {
        self.substitute(&|v| match v {
            Var::X(i) => xs.get(i).cloned(),
            Var::Y(_) => None,
        })
    }

    pub fn vars(&self) -> BTreeSet<Var> {
        let mut out = BTreeSet::new();
        self.collect_vars(&mut out);
        out
    }

    fn collect_vars(&self, out: &mut BTreeSet<Var>) {
        match self.node() {
            Node::Num(_) => {}
            Node::Var(v) => {
                out.insert(*v);
            }
            Node::Call(_, a) | Node::Pow(a, _) => a.collect_vars(out),
            Node::Bin(_, a, b) => {
                a.collect_vars(out);
                b.collect_vars(out);
            }
        }
    }

    pub fn depends_on_fiber(&self) -> bool {
        self.vars().iter().any(|v| matches!(v, Var::Y(_)))
    }

    /// Fail if the expression mentions a variable beyond `(m, r)`.
    pub fn check_arity(&self, m: usize, r: usize) -> Result<()> {
        for v in self.vars() {
            let ok = match v {
                Var::X(i) => i < m,
                Var::Y(a) => a < r,
            };
            if !ok {
                return Err(Error::Arity { name: v.to_string(), m, r });
            }
        }
        Ok(())
    }

    /// Number of nodes counted as a tree (shared subtrees counted again).
    pub fn size(&self) -> usize {
        match self.node() {
            Node::Num(_) | Node::Var(_) => 1,
            Node::Call(_, a) | Node::Pow(a, _) => 1 + a.size(),
            Node::Bin(_, a, b) => 1 + a.size() + b.size(),
        }
    }
}

impl From<f64> for Expr {
    fn from(v: f64) -> Expr {
        Expr::num(v)
    }
}

macro_rules! bin_ops {
    ($tr:ident, $method:ident, $ctor:path) => {
        impl ops::$tr<Expr> for Expr {
            type Output = Expr;
            fn $method(self, rhs: Expr) -> Expr {
                $ctor(self, rhs)
            }
        }
        impl ops::$tr<&Expr> for Expr {
            type Output = Expr;
            fn $method(self, rhs: &Expr) -> Expr {
                $ctor(self, rhs.clone())
            }
        }
        impl ops::$tr<Expr> for &Expr {
            type Output = Expr;
            fn $method(self, rhs: Expr) -> Expr {
                $ctor(self.clone(), rhs)
            }
        }
        impl ops::$tr<&Expr> for &Expr {
            type Output = Expr;
            fn $method(self, rhs: &Expr) -> Expr {
                $ctor(self.clone(), rhs.clone())
            }
        }
    };
}

bin_ops!(Add, add, Expr::add);
bin_ops!(Sub, sub, Expr::sub);
bin_ops!(Mul, mul, Expr::mul);
bin_ops!(Div, div, Expr::div);

impl ops::Neg for Expr {
    type Output = Expr;
    fn neg(self) -> Expr {
        Expr::neg(self)
    }
}

impl ops::Neg for &Expr {
    type Output = Expr;
    fn neg(self) -> Expr {
        Expr::neg(self.clone())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(s: &str) -> Expr {
        Expr::parse(s, 3, 3).unwrap()
    }

    #[test]
    fn folding_drops_neutral_elements() {
        let x = Expr::x(0);
        assert_eq!(Expr::add(Expr::zero(), x.clone()), x);
        assert_eq!(Expr::mul(Expr::one(), x.clone()), x);
        assert!(Expr::mul(Expr::zero(), x.clone()).is_zero());
        assert_eq!(Expr::pow(x.clone(), 1), x);
        assert_eq!(Expr::add(Expr::num(2.0), Expr::num(3.0)).as_num(), Some(5.0));
        assert_eq!(Expr::neg(Expr::neg(x.clone())), x);
    }

    #[test]
    fn derivative_of_product_and_chain() {
        let e = p("x1*y2 + sin(x1)^2");
        let d = e.dx(0);
        let (x, y) = ([0.3, 0.0, 0.0], [0.0, -1.2, 0.0]);
        let want = -1.2 + 2.0 * 0.3f64.sin() * 0.3f64.cos();
        assert!((d.eval(&x, &y).unwrap() - want).abs() < 1e-15);
        assert!(e.dy(0).is_zero());
    }

    #[test]
    fn domain_errors_are_reported() {
        let z = [0.0; 3];
        assert!(matches!(p("1/x1").eval(&z, &z), Err(Error::Domain(_))));
        assert!(matches!(p("log(x1)").eval(&z, &z), Err(Error::Domain(_))));
        assert!(matches!(p("sqrt(neg(1) + x1)").eval(&z, &z), Err(Error::Domain(_))));
        assert!(matches!(p("x1^-1").eval(&z, &z), Err(Error::Domain(_))));
    }

    #[test]
    fn compose_base_substitutes_only_x() {
        let e = p("x1*y1 + x2");
        let h = vec![p("x1 + 1"), p("2*x2")];
        let c = e.compose_base(&h);
        let v = c.eval(&[1.0, 3.0], &[2.0]).unwrap();
        assert_eq!(v, 2.0 * 2.0 + 6.0);
    }

    #[test]
    fn arity_is_checked() {
        assert!(p("x3 + y1").check_arity(2, 1).is_err());
        assert!(p("x2 + y1").check_arity(2, 1).is_ok());
    }
}
