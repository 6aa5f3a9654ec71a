//! Shared fixtures for unit tests.

use std::sync::Arc;

use crate::algebroid::{DiffeoMap, GenAlgebroid, GhMorphism, StructureFunctions};
use crate::connection::{NlConnection, TangentSection};
use crate::expr::Expr;

pub fn p(s: &str) -> Expr {
    Expr::parse(s, 2, 2).unwrap()
}

fn base(s: &str) -> Expr {
    Expr::parse(s, 2, 0).unwrap()
}

/// Frames `e1 = ∂1`, `e2 = x1²∂1 + ∂2` (so `L^1_{12} = 2x1`), pulled back
/// through a translation `h` and twisted by a shear `η`.
pub fn frame_algebroid() -> GenAlgebroid {
    let rho = vec![vec![base("1"), base("x1^2")], vec![base("0"), base("1")]];
    let mut l = StructureFunctions::zero(2);
    l.set(0, 0, 1, base("2*x1")).unwrap();
    let h =
        DiffeoMap::new(vec![base("x1 + 0.5"), base("x2 - 0.25")], vec![base("x1 - 0.5"), base("x2 + 0.25")]).unwrap();
    let eta = DiffeoMap::new(vec![base("x1"), base("x2 + x1")], vec![base("x1"), base("x2 - x1")]).unwrap();
    GenAlgebroid::new(2, 2, rho, l, h, eta).unwrap()
}

pub fn frame_connection(gamma: [[&str; 2]; 2]) -> NlConnection {
    let alg = Arc::new(frame_algebroid());
    let gh = Arc::new(GhMorphism::identity(&alg));
    let g = gamma.iter().map(|row| row.iter().map(|s| p(s)).collect()).collect();
    NlConnection::new(alg, gh, g).unwrap()
}

pub fn probe_sections() -> [TangentSection; 4] {
    [
        TangentSection { h: vec![p("y1"), p("x1")], v: vec![p("1"), p("x2*y2")] },
        TangentSection { h: vec![p("x1*y2"), p("1")], v: vec![p("x2"), p("y1")] },
        TangentSection { h: vec![p("1"), p("y2")], v: vec![p("x1*x2"), p("0")] },
        TangentSection { h: vec![p("x2"), p("y1*y2")], v: vec![p("y2"), p("1")] },
    ]
}
