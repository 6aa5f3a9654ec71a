//! Nonlinear connections `Γ^a_c(x, y)` on the total space, adapted frames
//! `δ̃_a = ∂̃_a − Γ^b_a ∂̇̃_b`, `∂̇̃_a`, the generalized tangent bracket, and
//! the projector algebra.
//!
//! Sections carry their adapted-frame coefficients
//! `X = X^a δ̃_a + Ẋ^a ∂̇̃_a`; the natural frame `X^a ∂̃_a + X̃^a ∂̇̃_a` is
//! reached through `X̃^a = Ẋ^a − Γ^a_b X^b`.

use std::sync::Arc;

use crate::algebroid::{GenAlgebroid, GhMorphism};
use crate::error::{Error, Result};
use crate::expr::{Expr, FiberPoint};
use crate::report::{scan_max_abs, scan_max_abs_diff, CheckReport, Scan};

/// Vector field on the total space: `base^i ∂_i + fiber^a ∂/∂y^a`.
#[derive(Clone, Debug, PartialEq)]
pub struct VectorField {
    pub base: Vec<Expr>,
    pub fiber: Vec<Expr>,
}

impl VectorField {
    pub fn apply(&self, f: &Expr) -> Expr {
        let b = self.base.iter().enumerate().map(|(i, c)| c * f.dx(i));
        let v = self.fiber.iter().enumerate().map(|(a, c)| c * f.dy(a));
        Expr::sum(b.chain(v))
    }

    /// Ordinary Lie bracket of vector fields, component by component.
    pub fn lie_bracket(&self, other: &VectorField) -> VectorField {
        let comp = |u: &Expr, v: &Expr| self.apply(v) - other.apply(u);
        VectorField {
            base: self.base.iter().zip(&other.base).map(|(u, v)| comp(u, v)).collect(),
            fiber: self.fiber.iter().zip(&other.fiber).map(|(u, v)| comp(u, v)).collect(),
        }
    }

    pub fn components(&self) -> Vec<Expr> {
        self.base.iter().chain(&self.fiber).cloned().collect()
    }
}

/// Section of the generalized tangent bundle in the adapted frame.
#[derive(Clone, Debug, PartialEq)]
pub struct TangentSection {
    /// Coefficients on `δ̃_a`.
    pub h: Vec<Expr>,
    /// Coefficients on `∂̇̃_a`.
    pub v: Vec<Expr>,
}

impl TangentSection {
    pub fn zero(r: usize) -> Self {
        TangentSection { h: vec![Expr::zero(); r], v: vec![Expr::zero(); r] }
    }

    pub fn rank(&self) -> usize {
        self.h.len()
    }

    /// `δ̃_a`.
    pub fn delta(r: usize, a: usize) -> Self {
        let mut s = TangentSection::zero(r);
        s.h[a] = Expr::one();
        s
    }

    /// `∂̇̃_a`.
    pub fn vdot(r: usize, a: usize) -> Self {
        let mut s = TangentSection::zero(r);
        s.v[a] = Expr::one();
        s
    }

    pub fn add(&self, o: &TangentSection) -> TangentSection {
        TangentSection {
            h: self.h.iter().zip(&o.h).map(|(a, b)| a + b).collect(),
            v: self.v.iter().zip(&o.v).map(|(a, b)| a + b).collect(),
        }
    }

    pub fn sub(&self, o: &TangentSection) -> TangentSection {
        TangentSection {
            h: self.h.iter().zip(&o.h).map(|(a, b)| a - b).collect(),
            v: self.v.iter().zip(&o.v).map(|(a, b)| a - b).collect(),
        }
    }

    pub fn scale(&self, f: &Expr) -> TangentSection {
        TangentSection { h: self.h.iter().map(|a| f * a).collect(), v: self.v.iter().map(|a| f * a).collect() }
    }

    pub fn components(&self) -> Vec<Expr> {
        self.h.iter().chain(&self.v).cloned().collect()
    }

    pub fn horizontal(&self) -> TangentSection {
        TangentSection { h: self.h.clone(), v: vec![Expr::zero(); self.rank()] }
    }

    pub fn vertical(&self) -> TangentSection {
        TangentSection { h: vec![Expr::zero(); self.rank()], v: self.v.clone() }
    }
}

/// Section in the natural frame `X^a ∂̃_a + X̃^a ∂̇̃_a`.
#[derive(Clone, Debug, PartialEq)]
pub struct NaturalSection {
    pub a: Vec<Expr>,
    pub b: Vec<Expr>,
}

#[derive(Clone, Debug)]
pub struct NlConnection {
    pub alg: Arc<GenAlgebroid>,
    pub gh: Arc<GhMorphism>,
    /// `gamma[a][c] = Γ^a_c`.
    pub gamma: Vec<Vec<Expr>>,
}

impl NlConnection {
    pub fn new(alg: Arc<GenAlgebroid>, gh: Arc<GhMorphism>, gamma: Vec<Vec<Expr>>) -> Result<Self> {
        let r = alg.r;
        if gamma.len() != r || gamma.iter().any(|row| row.len() != r) {
            return Err(Error::Dimension(format!("connection coefficients must be {r}x{r}")));
        }
        for e in gamma.iter().flatten() {
            e.check_arity(alg.m, r)?;
        }
        if gh.g.len() != r {
            return Err(Error::Dimension("morphism rank does not match algebroid".into()));
        }
        Ok(NlConnection { alg, gh, gamma })
    }

    pub fn m(&self) -> usize {
        self.alg.m
    }

    pub fn r(&self) -> usize {
        self.alg.r
    }

    /// `Γ^a_c`.
    pub fn gamma(&self, a: usize, c: usize) -> &Expr {
        &self.gamma[a][c]
    }

    /// `δ̃_a(f) = (ρ^i_a∘h) ∂_i f − Γ^b_a ∂̇_b f`.
    pub fn delta_action(&self, a: usize, f: &Expr) -> Expr {
        let vert = (0..self.r()).map(|b| &self.gamma[b][a] * f.dy(b));
        self.alg.anchor_derivative(a, f) - Expr::sum(vert)
    }

    /// The vector field on the total space that `δ̃_a` is anchored to.
    pub fn delta_field(&self, a: usize) -> VectorField {
        VectorField {
            base: (0..self.m()).map(|i| self.alg.rho_h(i, a).clone()).collect(),
            fiber: (0..self.r()).map(|b| -&self.gamma[b][a]).collect(),
        }
    }

    pub fn vdot_field(&self, a: usize) -> VectorField {
        VectorField {
            base: vec![Expr::zero(); self.m()],
            fiber: (0..self.r()).map(|b| if a == b { Expr::one() } else { Expr::zero() }).collect(),
        }
    }

    /// `ℝ^c_{ab} = δ̃_b(Γ^c_a) − δ̃_a(Γ^c_b) + (L^d_{ab}∘h) Γ^c_d`.
    pub fn curvature_r(&self, c: usize, a: usize, b: usize) -> Expr {
        let lterm = Expr::sum((0..self.r()).map(|d| self.alg.l_h(d, a, b) * &self.gamma[c][d]));
        self.delta_action(b, &self.gamma[c][a]) - self.delta_action(a, &self.gamma[c][b]) + lterm
    }

    /// All `ℝ^c_{ab}`, flattened as `[c][a][b]`.
    pub fn curvature_all(&self) -> Vec<Expr> {
        let r = self.r();
        let mut out = Vec::with_capacity(r * r * r);
        for c in 0..r {
            for a in 0..r {
                for b in 0..r {
                    out.push(self.curvature_r(c, a, b));
                }
            }
        }
        out
    }

    /// Anchor image `ρ̃(X)` of an adapted-frame section.
    pub fn anchor(&self, x: &TangentSection) -> VectorField {
        let (m, r) = (self.m(), self.r());
        VectorField {
            base: (0..m).map(|i| Expr::sum((0..r).map(|a| &x.h[a] * self.alg.rho_h(i, a)))).collect(),
            fiber: (0..r).map(|b| &x.v[b] - Expr::sum((0..r).map(|a| &self.gamma[b][a] * &x.h[a]))).collect(),
        }
    }

    /// `ρ̃(X)(f) = X^a δ̃_a f + Ẋ^a ∂̇_a f`.
    pub fn act(&self, x: &TangentSection, f: &Expr) -> Expr {
        let h = (0..self.r()).map(|a| &x.h[a] * self.delta_action(a, f));
        let v = (0..self.r()).map(|a| &x.v[a] * f.dy(a));
        Expr::sum(h.chain(v))
    }

    pub fn to_natural(&self, x: &TangentSection) -> NaturalSection {
        let r = self.r();
        NaturalSection {
            a: x.h.clone(),
            b: (0..r).map(|c| &x.v[c] - Expr::sum((0..r).map(|d| &self.gamma[c][d] * &x.h[d]))).collect(),
        }
    }

    pub fn from_natural(&self, x: &NaturalSection) -> TangentSection {
        let r = self.r();
        TangentSection {
            h: x.a.clone(),
            v: (0..r).map(|c| &x.b[c] + Expr::sum((0..r).map(|d| &self.gamma[c][d] * &x.a[d]))).collect(),
        }
    }

    /// Natural-frame action `X^a (ρ^i_a∘h) ∂_i f + X̃^a ∂̇_a f`.
    fn act_natural(&self, x: &NaturalSection, f: &Expr) -> Expr {
        let h = (0..self.r()).map(|a| &x.a[a] * self.alg.anchor_derivative(a, f));
        let v = (0..self.r()).map(|a| &x.b[a] * f.dy(a));
        Expr::sum(h.chain(v))
    }

    /// Generalized tangent bracket computed in the natural frame, where
    /// `[∂̃_a, ∂̃_b] = (L^c_{ab}∘h) ∂̃_c` and the other frame brackets vanish.
    pub fn natural_bracket(&self, x: &NaturalSection, y: &NaturalSection) -> NaturalSection {
        let r = self.r();
        let a = (0..r)
            .map(|c| {
                let mut t = vec![self.act_natural(x, &y.a[c]), -self.act_natural(y, &x.a[c])];
                for p in 0..r {
                    for q in 0..r {
                        let l = self.alg.l_h(c, p, q);
                        if !l.is_zero() {
                            t.push(&x.a[p] * &y.a[q] * l);
                        }
                    }
                }
                Expr::sum(t)
            })
            .collect();
        let b = (0..r).map(|c| self.act_natural(x, &y.b[c]) - self.act_natural(y, &x.b[c])).collect();
        NaturalSection { a, b }
    }

    pub fn bracket(&self, x: &TangentSection, y: &TangentSection) -> TangentSection {
        self.from_natural(&self.natural_bracket(&self.to_natural(x), &self.to_natural(y)))
    }

    pub fn apply_v(&self, x: &TangentSection) -> TangentSection {
        x.vertical()
    }

    pub fn apply_h(&self, x: &TangentSection) -> TangentSection {
        x.horizontal()
    }

    /// Almost product structure: `δ̃_a ↦ δ̃_a`, `∂̇̃_a ↦ −∂̇̃_a`.
    pub fn apply_p(&self, x: &TangentSection) -> TangentSection {
        TangentSection { h: x.h.clone(), v: x.v.iter().map(|e| -e).collect() }
    }

    /// Tangent structure: `δ̃_a ↦ (g̃^b_a∘h) ∂̇̃_b`, `∂̇̃_a ↦ 0`.
    pub fn apply_j(&self, x: &TangentSection) -> TangentSection {
        let r = self.r();
        TangentSection {
            h: vec![Expr::zero(); r],
            v: (0..r).map(|b| Expr::sum((0..r).map(|a| self.gh.gtil_h(b, a) * &x.h[a]))).collect(),
        }
    }

    /// Pointwise checks of the three frame brackets against commutators of
    /// the anchored vector fields, probed on every coordinate.
    pub fn frame_bracket_check(&self, points: &[FiberPoint], tol: f64) -> Vec<CheckReport> {
        let r = self.r();
        let mut hh = Scan::empty();
        let mut hv = Scan::empty();
        let mut vv = Scan::empty();
        for a in 0..r {
            for b in 0..r {
                let lhs = self.delta_field(a).lie_bracket(&self.delta_field(b));
                let mut rhs = TangentSection::zero(r);
                for c in 0..r {
                    rhs.h[c] = self.alg.l_h(c, a, b);
                    rhs.v[c] = self.curvature_r(c, a, b);
                }
                let rhs = self.anchor(&rhs);
                let (l, rr) = (lhs.components(), rhs.components());
                hh = hh.merge(scan_max_abs_diff(points, &l, &rr));

                let lhs = self.delta_field(a).lie_bracket(&self.vdot_field(b));
                let mut rhs = TangentSection::zero(r);
                for c in 0..r {
                    rhs.v[c] = self.gamma[c][a].dy(b);
                }
                let rhs = self.anchor(&rhs);
                let (l, rr) = (lhs.components(), rhs.components());
                hv = hv.merge(scan_max_abs_diff(points, &l, &rr));

                let l = self.vdot_field(a).lie_bracket(&self.vdot_field(b)).components();
                vv = vv.merge(scan_max_abs(points, &l));
            }
        }
        vec![
            hh.report("[δa, δb] = L δc + R ∂c", "frame brackets, horizontal pair", tol),
            hv.report("[δa, ∂b] = ∂b(Γ) ∂c", "frame brackets, mixed pair", tol),
            vv.report("[∂a, ∂b] = 0", "frame brackets, vertical pair", tol),
        ]
    }

    /// Vertical part of the commutator `[ρ̃δ̃_a, ρ̃δ̃_b]` read in the adapted
    /// frame: its `∂/∂y^c` component plus `Γ^c_d L^d_{ab}∘h`.
    pub fn commutator_vertical_part(&self, c: usize, a: usize, b: usize) -> Expr {
        let comm = self.delta_field(a).lie_bracket(&self.delta_field(b));
        let corr = Expr::sum((0..self.r()).map(|d| &self.gamma[c][d] * self.alg.l_h(d, a, b)));
        &comm.fiber[c] + corr
    }

    /// The projector identities on a probe section.
    pub fn projector_check(&self, x: &TangentSection, points: &[FiberPoint], tol: f64) -> Vec<CheckReport> {
        let id = |s: &TangentSection| s.clone();
        type Op<'a> = Box<dyn Fn(&TangentSection) -> TangentSection + 'a>;
        let j: Op = Box::new(|s| self.apply_j(s));
        let p: Op = Box::new(|s| self.apply_p(s));
        let h: Op = Box::new(|s| self.apply_h(s));
        let v: Op = Box::new(|s| self.apply_v(s));
        let cases: Vec<(&str, TangentSection, TangentSection)> = vec![
            ("J∘P = J", j(&p(x)), j(x)),
            ("P∘J = −J", p(&j(x)), TangentSection::zero(self.r()).sub(&j(x))),
            ("J∘H = J", j(&h(x)), j(x)),
            ("H∘J = 0", h(&j(x)), TangentSection::zero(self.r())),
            ("J∘V = 0", j(&v(x)), TangentSection::zero(self.r())),
            ("V∘J = J", v(&j(x)), j(x)),
            ("J∘J = 0", j(&j(x)), TangentSection::zero(self.r())),
            ("P∘P = Id", p(&p(x)), id(x)),
            ("H + V = Id", h(x).add(&v(x)), id(x)),
        ];
        cases
            .into_iter()
            .map(|(name, l, rr)| {
                let (l, rr) = (l.components(), rr.components());
                scan_max_abs_diff(points, &l, &rr).report(name, "projector algebra", tol)
            })
            .collect()
    }
}
