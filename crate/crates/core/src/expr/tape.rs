//! Flattened evaluation of many expressions at once. Shared subtrees are
//! evaluated once per point, which matters for the deeply nested trees
//! built by covariant derivatives and Bianchi sums.

use std::collections::HashMap;

use super::{bin_op, finite, pow_op, BinOp, Expr, Func, Node, Var};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug)]
enum Op {
    Num(f64),
    X(usize),
    Y(usize),
    Call(Func, usize),
    Bin(BinOp, usize, usize),
    Pow(usize, i32),
}

#[derive(Clone, Debug)]
pub struct Tape {
    ops: Vec<Op>,
    outputs: Vec<usize>,
}

impl Tape {
    pub fn new(exprs: &[Expr]) -> Tape {
        let mut ops = Vec::new();
        let mut slot: HashMap<*const Node, usize> = HashMap::new();
        let mut outputs = Vec::with_capacity(exprs.len());
        for root in exprs {
            // Iterative post-order so deep trees cannot overflow the stack.
            let mut stack: Vec<(&Expr, bool)> = vec![(root, false)];
            while let Some((e, expanded)) = stack.pop() {
                let key = e.node() as *const Node;
                if slot.contains_key(&key) {
                    continue;
                }
                let children: Vec<&Expr> = match e.node() {
                    Node::Num(_) | Node::Var(_) => vec![],
                    Node::Call(_, a) | Node::Pow(a, _) => vec![a],
                    Node::Bin(_, a, b) => vec![a, b],
                };
                if !expanded && children.iter().any(|c| !slot.contains_key(&(c.node() as *const Node))) {
                    stack.push((e, true));
                    stack.extend(children.into_iter().rev().map(|c| (c, false)));
                    continue;
                }
                let at = |c: &Expr| slot[&(c.node() as *const Node)];
                let op = match e.node() {
                    Node::Num(v) => Op::Num(*v),
                    Node::Var(Var::X(i)) => Op::X(*i),
                    Node::Var(Var::Y(a)) => Op::Y(*a),
                    Node::Call(f, a) => Op::Call(*f, at(a)),
                    Node::Pow(a, n) => Op::Pow(at(a), *n),
                    Node::Bin(op, a, b) => Op::Bin(*op, at(a), at(b)),
                };
                slot.insert(key, ops.len());
                ops.push(op);
            }
            outputs.push(slot[&(root.node() as *const Node)]);
        }
        Tape { ops, outputs }
    }

    pub fn len(&self) -> usize {
        self.ops.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ops.is_empty()
    }

    /// Values of every input expression, in order.
    pub fn eval(&self, x: &[f64], y: &[f64]) -> Result<Vec<f64>> {
        let mut val = Vec::with_capacity(self.ops.len());
        for op in &self.ops {
            let v = match *op {
                Op::Num(v) => v,
                Op::X(i) => *x.get(i).ok_or_else(|| arity(format!("x{}", i + 1), x, y))?,
                Op::Y(a) => *y.get(a).ok_or_else(|| arity(format!("y{}", a + 1), x, y))?,
                Op::Call(f, a) => f.apply(val[a])?,
                Op::Bin(o, a, b) => bin_op(o, val[a], val[b])?,
                Op::Pow(a, n) => pow_op(val[a], n)?,
            };
            val.push(finite(v, "evaluation")?);
        }
        Ok(self.outputs.iter().map(|&k| val[k]).collect())
    }

    pub fn max_abs(&self, x: &[f64], y: &[f64]) -> Result<f64> {
        Ok(self.eval(x, y)?.into_iter().fold(0.0, |m, v| m.max(v.abs())))
    }
}

fn arity(name: String, x: &[f64], y: &[f64]) -> Error {
    Error::Arity { name, m: x.len(), r: y.len() }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn matches_tree_evaluation_and_shares_nodes() {
        let a = Expr::parse("sin(x1*y2) + y1^2", 2, 2).unwrap();
        let b = &a * &a - &a;
        let c = (&b + Expr::x(1)) / (Expr::num(1.0) + &a * &a);
        let tape = Tape::new(&[a.clone(), b.clone(), c.clone()]);
        let (x, y) = ([0.3, -0.7], [1.1, 0.4]);
        let got = tape.eval(&x, &y).unwrap();
        for (e, v) in [a.clone(), b, c].iter().zip(&got) {
            assert_eq!(e.eval(&x, &y).unwrap(), *v);
        }
        assert!(tape.len() < 20);
    }

    #[test]
    fn propagates_domain_errors() {
        let e = Expr::parse("1/(x1 - 1) + log(y1)", 1, 1).unwrap();
        let tape = Tape::new(&[e]);
        assert!(matches!(tape.eval(&[1.0], &[1.0]), Err(Error::Domain(_))));
        assert!(matches!(tape.eval(&[0.0], &[-1.0]), Err(Error::Domain(_))));
        assert!(matches!(tape.eval(&[], &[1.0]), Err(Error::Arity { .. })));
    }
}
