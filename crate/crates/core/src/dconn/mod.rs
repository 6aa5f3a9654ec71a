//! Distinguished linear connections `(H, H̃, V, Ṽ)` on the generalized
//! tangent bundle, their torsion and curvature, and the Ricci and Bianchi
//! identities.
//!
//! Defining rules:
//! `D_{δ̃_c} δ̃_b = H^a_{bc} δ̃_a`, `D_{δ̃_c} ∂̇̃_b = H̃^a_{bc} ∂̇̃_a`,
//! `D_{∂̇̃_c} δ̃_b = V^a_{bc} δ̃_a`, `D_{∂̇̃_c} ∂̇̃_b = Ṽ^a_{bc} ∂̇̃_a`.

mod identities;
pub mod tensor;

use std::sync::OnceLock;

pub use identities::*;
pub use tensor::{cov_deriv, h_deriv, multi_indices, v_deriv, Signature, TensorField};

use crate::connection::{NlConnection, TangentSection};
use crate::error::{Error, Result};
use crate::expr::Expr;

/// Three-index coefficient table `C^a_{bc}`, stored `[a][b][c]`.
#[derive(Clone, Debug, PartialEq)]
pub struct Coeffs3 {
    pub r: usize,
    pub data: Vec<Expr>,
}

impl Coeffs3 {
    pub fn zero(r: usize) -> Self {
        Coeffs3 { r, data: vec![Expr::zero(); r * r * r] }
    }

    pub fn from_fn(r: usize, mut f: impl FnMut(usize, usize, usize) -> Expr) -> Self {
        let mut data = Vec::with_capacity(r * r * r);
        for a in 0..r {
            for b in 0..r {
                for c in 0..r {
                    data.push(f(a, b, c));
                }
            }
        }
        Coeffs3 { r, data }
    }

    pub fn get(&self, a: usize, b: usize, c: usize) -> &Expr {
        &self.data[(a * self.r + b) * self.r + c]
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(Expr::is_zero)
    }
}

/// Four-index table `C^a_{bcd}`, stored `[a][b][c][d]`.
#[derive(Clone, Debug, PartialEq)]
pub struct Coeffs4 {
    pub r: usize,
    pub data: Vec<Expr>,
}

impl Coeffs4 {
    pub fn from_fn(r: usize, mut f: impl FnMut(usize, usize, usize, usize) -> Expr) -> Self {
        let mut data = Vec::with_capacity(r.pow(4));
        for idx in multi_indices(4, r) {
            data.push(f(idx[0], idx[1], idx[2], idx[3]));
        }
        Coeffs4 { r, data }
    }

    pub fn get(&self, a: usize, b: usize, c: usize, d: usize) -> &Expr {
        &self.data[((a * self.r + b) * self.r + c) * self.r + d]
    }
}

#[derive(Clone, Debug)]
pub struct DConnection {
    pub conn: NlConnection,
    pub h: Coeffs3,
    pub ht: Coeffs3,
    pub v: Coeffs3,
    pub vt: Coeffs3,
    curv: OnceLock<Coeffs3>,
}

/// The five torsion families, each indexed `[a][b][c]`.
#[derive(Clone, Debug)]
pub struct TorsionFamilies {
    pub t: Coeffs3,
    pub tt: Coeffs3,
    pub p: Coeffs3,
    pub pt: Coeffs3,
    pub s: Coeffs3,
}

/// The six curvature families, each indexed `[a][b][c][d]`.
#[derive(Clone, Debug)]
pub struct CurvatureFamilies {
    pub r: Coeffs4,
    pub rt: Coeffs4,
    pub p: Coeffs4,
    pub pt: Coeffs4,
    pub s: Coeffs4,
    pub st: Coeffs4,
}

impl DConnection {
    pub fn new(conn: NlConnection, h: Coeffs3, ht: Coeffs3, v: Coeffs3, vt: Coeffs3) -> Result<Self> {
        let r = conn.r();
        for (name, c) in [("H", &h), ("H~", &ht), ("V", &v), ("V~", &vt)] {
            if c.r != r || c.data.len() != r * r * r {
                return Err(Error::Dimension(format!("{name} must have {r}^3 components")));
            }
            for e in &c.data {
                e.check_arity(conn.m(), r)?;
            }
        }
        Ok(DConnection { conn, h, ht, v, vt, curv: OnceLock::new() })
    }

    /// Berwald connection: `H = H̃ = ∂Γ^a_c/∂y^b`, `V = Ṽ = 0`.
    pub fn berwald(conn: NlConnection) -> Self {
        let r = conn.r();
        let h = Coeffs3::from_fn(r, |a, b, c| conn.gamma(a, c).dy(b));
        DConnection { ht: h.clone(), h, v: Coeffs3::zero(r), vt: Coeffs3::zero(r), conn, curv: OnceLock::new() }
    }

    pub fn r(&self) -> usize {
        self.conn.r()
    }

    pub fn is_normal(&self) -> bool {
        self.h == self.ht && self.v == self.vt
    }

    /// `ℝ^c_{ab}` of the underlying nonlinear connection, cached.
    pub fn rcurv(&self, c: usize, a: usize, b: usize) -> &Expr {
        self.curv.get_or_init(|| Coeffs3::from_fn(self.r(), |c, a, b| self.conn.curvature_r(c, a, b))).get(c, a, b)
    }

    fn lh(&self, c: usize, a: usize, b: usize) -> Expr {
        self.conn.alg.l_h(c, a, b)
    }

    /// `D_X Y` for sections in the adapted frame.
    pub fn cov_deriv_section(&self, x: &TangentSection, y: &TangentSection) -> TangentSection {
        let r = self.r();
        let part = |coef: &Coeffs3, ycomp: &[Expr], a: usize, c: usize, horizontal: bool| -> Expr {
            let d = if horizontal { self.conn.delta_action(c, &ycomp[a]) } else { ycomp[a].dy(c) };
            let lin = (0..r).filter(|&b| !ycomp[b].is_zero()).map(|b| coef.get(a, b, c) * &ycomp[b]);
            Expr::sum(std::iter::once(d).chain(lin))
        };
        let mut out = TangentSection::zero(r);
        for a in 0..r {
            let mut th = Vec::new();
            let mut tv = Vec::new();
            for c in 0..r {
                if !x.h[c].is_zero() {
                    th.push(&x.h[c] * part(&self.h, &y.h, a, c, true));
                    tv.push(&x.h[c] * part(&self.ht, &y.v, a, c, true));
                }
                if !x.v[c].is_zero() {
                    th.push(&x.v[c] * part(&self.v, &y.h, a, c, false));
                    tv.push(&x.v[c] * part(&self.vt, &y.v, a, c, false));
                }
            }
            out.h[a] = Expr::sum(th);
            out.v[a] = Expr::sum(tv);
        }
        out
    }

    /// `𝕋(X,Y) = D_X Y − D_Y X − [X,Y]`.
    pub fn torsion_op(&self, x: &TangentSection, y: &TangentSection) -> TangentSection {
        self.cov_deriv_section(x, y).sub(&self.cov_deriv_section(y, x)).sub(&self.conn.bracket(x, y))
    }

    /// `ℝ(X,Y)Z = D_X D_Y Z − D_Y D_X Z − D_{[X,Y]} Z`.
    pub fn curvature_op(&self, x: &TangentSection, y: &TangentSection, z: &TangentSection) -> TangentSection {
        let a = self.cov_deriv_section(x, &self.cov_deriv_section(y, z));
        let b = self.cov_deriv_section(y, &self.cov_deriv_section(x, z));
        let c = self.cov_deriv_section(&self.conn.bracket(x, y), z);
        a.sub(&b).sub(&c)
    }

    /// Torsion families in closed form, consistent with `torsion_op` on
    /// frame sections: `H𝕋(δ̃_c, δ̃_b) = 𝕋^a_{bc} δ̃_a`, and so on.
    pub fn torsion_components(&self) -> TorsionFamilies {
        let r = self.r();
        let conn = &self.conn;
        TorsionFamilies {
            t: Coeffs3::from_fn(r, |a, b, c| self.h.get(a, b, c) - self.h.get(a, c, b) + self.lh(a, b, c)),
            tt: Coeffs3::from_fn(r, |a, b, c| self.rcurv(a, b, c).clone()),
            p: self.v.clone(),
            pt: Coeffs3::from_fn(r, |a, b, c| conn.gamma(a, b).dy(c) - self.ht.get(a, c, b)),
            s: Coeffs3::from_fn(r, |a, b, c| self.vt.get(a, b, c) - self.vt.get(a, c, b)),
        }
    }

    /// Torsion families in their literal closed-form transcription, where
    /// the horizontal family carries `−L^a_{bc}∘h`.
    pub fn torsion_components_printed(&self) -> TorsionFamilies {
        let mut f = self.torsion_components();
        f.t = Coeffs3::from_fn(self.r(), |a, b, c| self.h.get(a, b, c) - self.h.get(a, c, b) - self.lh(a, b, c));
        f
    }

    fn sum_e(&self, f: impl Fn(usize) -> Expr) -> Expr {
        Expr::sum((0..self.r()).map(f))
    }

    /// Curvature families in closed form, consistent with `curvature_op`
    /// on frame sections: `ℝ(δ̃_d, δ̃_c)δ̃_b = R^a_{bcd} δ̃_a`, and so on.
    pub fn curvature_components(&self) -> CurvatureFamilies {
        let r = self.r();
        let conn = &self.conn;
        let hh = |h: &Coeffs3, v: &Coeffs3| {
            Coeffs4::from_fn(r, |a, b, c, d| {
                conn.delta_action(d, h.get(a, b, c)) - conn.delta_action(c, h.get(a, b, d))
                    + self.sum_e(|e| h.get(e, b, c) * h.get(a, e, d) - h.get(e, b, d) * h.get(a, e, c))
                    - self.sum_e(|e| self.lh(e, d, c) * h.get(a, b, e) + self.rcurv(e, d, c) * v.get(a, b, e))
            })
        };
        let hv = |h: &Coeffs3, v: &Coeffs3| {
            Coeffs4::from_fn(r, |a, b, c, d| {
                h.get(a, b, c).dy(d) - conn.delta_action(c, v.get(a, b, d))
                    + self.sum_e(|e| {
                        v.get(a, e, d) * h.get(e, b, c) - h.get(a, e, c) * v.get(e, b, d)
                            + conn.gamma(e, c).dy(d) * v.get(a, b, e)
                    })
            })
        };
        let vv = |v: &Coeffs3| {
            Coeffs4::from_fn(r, |a, b, c, d| {
                v.get(a, b, c).dy(d) - v.get(a, b, d).dy(c)
                    + self.sum_e(|e| v.get(a, e, d) * v.get(e, b, c) - v.get(a, e, c) * v.get(e, b, d))
            })
        };
        CurvatureFamilies {
            r: hh(&self.h, &self.v),
            rt: hh(&self.ht, &self.vt),
            p: hv(&self.h, &self.v),
            pt: hv(&self.ht, &self.vt),
            s: vv(&self.v),
            st: vv(&self.vt),
        }
    }

    /// Curvature families in their literal closed-form transcription,
    /// kept only to flag where they disagree with the operator form.
    pub fn curvature_components_printed(&self) -> CurvatureFamilies {
        let r = self.r();
        let conn = &self.conn;
        let (h, ht, v, vt) = (&self.h, &self.ht, &self.v, &self.vt);
        let head = |h: &Coeffs3, a, b, c, d| {
            conn.delta_action(d, h.get(a, b, c)) - conn.delta_action(c, h.get(a, b, d))
                + self.sum_e(|e| h.get(a, e, d) * h.get(e, b, c) - h.get(a, e, c) * h.get(e, b, d))
        };
        let rr = Coeffs4::from_fn(r, |a, b, c, d| {
            head(h, a, b, c, d)
                - self.sum_e(|e| self.rcurv(e, c, d) * h.get(a, b, e) + self.lh(e, c, d) * h.get(a, b, e))
        });
        let rt = Coeffs4::from_fn(r, |a, b, c, d| {
            head(ht, a, b, c, d)
                - self.sum_e(|e| self.rcurv(e, d, c) * vt.get(a, b, e) + self.lh(e, c, d) * vt.get(a, b, e))
        });
        let p = Coeffs4::from_fn(r, |a, b, c, d| {
            h.get(a, b, c).dy(d) - conn.delta_action(c, v.get(a, b, d))
                + self.sum_e(|e| {
                    v.get(a, e, d) * h.get(e, b, c) - h.get(a, e, c) * v.get(e, b, d)
                        + conn.gamma(e, c).dy(c) * v.get(a, b, e)
                })
        });
        let pt = Coeffs4::from_fn(r, |a, b, c, d| {
            ht.get(a, b, c).dy(d) - conn.delta_action(c, vt.get(a, b, d))
                + self.sum_e(|e| {
                    vt.get(a, e, d) * ht.get(e, b, c) - ht.get(a, e, c) * vt.get(e, b, d)
                        + conn.gamma(e, c).dy(d) * vt.get(a, b, e)
                })
        });
        let s = Coeffs4::from_fn(r, |a, b, c, d| {
            v.get(a, b, c).dy(d) - v.get(a, b, d).dy(c)
                + self.sum_e(|e| v.get(a, e, d) * v.get(e, b, c) - v.get(e, e, c) * v.get(e, b, d))
        });
        let st = Coeffs4::from_fn(r, |a, b, c, d| {
            vt.get(a, b, c).dy(d) - vt.get(a, b, d).dy(c)
                + self.sum_e(|e| vt.get(a, e, d) * vt.get(e, b, c) - vt.get(a, e, c) * vt.get(e, b, d))
        });
        CurvatureFamilies { r: rr, rt, p, pt, s, st }
    }

    /// Torsion families read off `torsion_op` on frame sections.
    pub fn torsion_from_operator(&self) -> TorsionFamilies {
        let r = self.r();
        let d = |a| TangentSection::delta(r, a);
        let v = |a| TangentSection::vdot(r, a);
        let mut hh = vec![vec![TangentSection::zero(r); r]; r];
        let mut vh = hh.clone();
        let mut vv = hh.clone();
        for b in 0..r {
            for c in 0..r {
                hh[b][c] = self.torsion_op(&d(c), &d(b));
                vh[b][c] = self.torsion_op(&v(c), &d(b));
                vv[b][c] = self.torsion_op(&v(c), &v(b));
            }
        }
        TorsionFamilies {
            t: Coeffs3::from_fn(r, |a, b, c| hh[b][c].h[a].clone()),
            tt: Coeffs3::from_fn(r, |a, b, c| hh[b][c].v[a].clone()),
            p: Coeffs3::from_fn(r, |a, b, c| vh[b][c].h[a].clone()),
            pt: Coeffs3::from_fn(r, |a, b, c| vh[b][c].v[a].clone()),
            s: Coeffs3::from_fn(r, |a, b, c| vv[b][c].v[a].clone()),
        }
    }

    /// `H𝕋(∂̇̃_c, ∂̇̃_b)`, which has no named family and must vanish.
    pub fn torsion_vv_horizontal(&self) -> Vec<Expr> {
        let r = self.r();
        let mut out = Vec::new();
        for b in 0..r {
            for c in 0..r {
                out.extend(self.torsion_op(&TangentSection::vdot(r, c), &TangentSection::vdot(r, b)).h);
            }
        }
        out
    }

    /// Curvature families read off `curvature_op` on frame sections.
    pub fn curvature_from_operator(&self) -> CurvatureFamilies {
        let r = self.r();
        let d = |a| TangentSection::delta(r, a);
        let v = |a| TangentSection::vdot(r, a);
        let table = |first: &dyn Fn(usize) -> TangentSection,
                     second: &dyn Fn(usize) -> TangentSection,
                     arg: &dyn Fn(usize) -> TangentSection,
                     horizontal: bool| {
            let mut vals = vec![Expr::zero(); r.pow(4)];
            for b in 0..r {
                for c in 0..r {
                    for dd in 0..r {
                        let out = self.curvature_op(&first(dd), &second(c), &arg(b));
                        for a in 0..r {
                            vals[((a * r + b) * r + c) * r + dd] =
                                if horizontal { out.h[a].clone() } else { out.v[a].clone() };
                        }
                    }
                }
            }
            Coeffs4 { r, data: vals }
        };
        CurvatureFamilies {
            r: table(&d, &d, &d, true),
            rt: table(&d, &d, &v, false),
            p: table(&v, &d, &d, true),
            pt: table(&v, &d, &v, false),
            s: table(&v, &v, &d, true),
            st: table(&v, &v, &v, false),
        }
    }

    /// `ℙ(X,Y)Z = ℝ(VX, HY)Z` assembled from the `P`, `P̃` families.
    pub fn mixed_curvature(
        &self,
        fam: &CurvatureFamilies,
        x: &TangentSection,
        y: &TangentSection,
        z: &TangentSection,
    ) -> TangentSection {
        let r = self.r();
        let mut out = TangentSection::zero(r);
        for a in 0..r {
            let mut th = Vec::new();
            let mut tv = Vec::new();
            for b in 0..r {
                for c in 0..r {
                    for d in 0..r {
                        let w = &x.v[d] * &y.h[c];
                        if w.is_zero() {
                            continue;
                        }
                        th.push(&w * &z.h[b] * fam.p.get(a, b, c, d));
                        tv.push(&w * &z.v[b] * fam.pt.get(a, b, c, d));
                    }
                }
            }
            out.h[a] = Expr::sum(th);
            out.v[a] = Expr::sum(tv);
        }
        out
    }

    /// Horizontal and vertical parts of a section as tensor fields of type
    /// `(1,0;0,0)` and `(0,0;1,0)`.
    pub fn section_tensors(&self, y: &TangentSection) -> (TensorField, TensorField) {
        let r = self.r();
        (
            TensorField { sig: Signature::new(1, 0, 0, 0), r, comps: y.h.clone() },
            TensorField { sig: Signature::new(0, 0, 1, 0), r, comps: y.v.clone() },
        )
    }
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::algebroid::{GenAlgebroid, GhMorphism};
    use crate::report::{max_abs_diff, CheckReport, Status};
    use crate::sampling::SampleSpec;

    fn p(s: &str) -> Expr {
        Expr::parse(s, 2, 2).unwrap()
    }

    fn berwald() -> DConnection {
        let alg = Arc::new(GenAlgebroid::tangent(2));
        let gh = Arc::new(GhMorphism::identity(&alg));
        let gamma = vec![vec![p("x2*y1 + y2^2"), p("x1*y2")], vec![p("y1*y2"), p("x1*y1")]];
        DConnection::berwald(NlConnection::new(alg, gh, gamma).unwrap())
    }

    #[test]
    fn section_rule_matches_tensor_rule() {
        let dc = berwald();
        let x = TangentSection { h: vec![p("y1"), p("x1")], v: vec![p("1"), p("x2*y2")] };
        let y = TangentSection { h: vec![p("x1*y2"), p("y1^2")], v: vec![p("x2"), p("y1")] };
        let direct = dc.cov_deriv_section(&x, &y);
        let (yh, yv) = dc.section_tensors(&y);
        let th = cov_deriv(&dc, &x.h, &x.v, &yh);
        let tv = cov_deriv(&dc, &x.h, &x.v, &yv);
        for q in SampleSpec::default().with_count(20).points(2, 2) {
            assert!(max_abs_diff(&direct.h, &th.comps, &q).unwrap() < 1e-12);
            assert!(max_abs_diff(&direct.v, &tv.comps, &q).unwrap() < 1e-12);
        }
    }

    #[test]
    fn berwald_is_normal() {
        assert!(berwald().is_normal());
    }

    #[test]
    fn signature_mismatch_is_an_error() {
        let a = TensorField::scalar(Expr::one(), 2);
        let b = TensorField { sig: Signature::new(1, 0, 0, 0), r: 2, comps: vec![Expr::one(), Expr::zero()] };
        assert!(matches!(a.add(&b), Err(Error::Signature(_))));
    }

    use crate::testdata::{frame_connection, probe_sections};

    const GAMMA: [[&str; 2]; 2] = [["x1*y1 + y2^2", "sin(x2)*y1"], ["y1*y2 - x2", "x1^2*y2"]];

    fn general() -> DConnection {
        let conn = frame_connection(GAMMA);
        let gen = |seed: usize| {
            let pool = ["x1*y2", "y1", "x2^2", "1", "y1*y2", "0", "x1 - y2", "2*x2*y1"];
            Coeffs3::from_fn(2, |a, b, c| p(pool[(seed + 3 * a + 5 * b + 7 * c) % pool.len()]))
        };
        DConnection::new(conn, gen(0), gen(1), gen(2), gen(3)).unwrap()
    }

    fn fails(reps: &[CheckReport]) -> Vec<&CheckReport> {
        reps.iter().filter(|r| r.status == Status::Fail || r.status == Status::Inconclusive).collect()
    }

    #[test]
    fn torsion_and_curvature_match_operator_forms() {
        let dc = general();
        let pts = SampleSpec::default().with_count(15).points(2, 2);
        let t = torsion_check(&dc, &pts, 1e-9);
        assert!(fails(&t).is_empty(), "{:#?}", fails(&t));
        let c = curvature_check(&dc, &pts, 1e-8);
        assert!(fails(&c).is_empty(), "{:#?}", fails(&c));
        // The printed horizontal torsion carries the wrong sign on L.
        assert!(t.iter().any(|r| r.status == Status::MismatchFlag));
    }

    #[test]
    fn ricci_formulas_hold_for_general_connection() {
        let dc = general();
        let pts = SampleSpec::default().with_count(15).points(2, 2);
        let [y, ..] = probe_sections();
        let reps = ricci_check(&dc, &y, &pts, 1e-8);
        assert!(fails(&reps).is_empty(), "{:#?}", fails(&reps));
    }

    #[test]
    fn bianchi_and_split_for_berwald() {
        let dc = DConnection::berwald(frame_connection(GAMMA));
        let pts = SampleSpec::default().with_count(10).points(2, 2);
        let [x, y, z, u] = probe_sections();
        let b = bianchi_check(&dc, [&x, &y, &z, &u], &pts, 1e-7);
        assert!(fails(&b).is_empty(), "{:#?}", fails(&b));
        let s = split_check(&dc, [&x, &y, &z, &u], &pts, 1e-10);
        assert!(fails(&s).is_empty(), "{:#?}", fails(&s));
        assert!(mixed_curvature_check(&dc, [&x, &y, &z], &pts, 1e-10).passed());
    }

    #[test]
    fn bianchi_for_general_connection() {
        let dc = general();
        let pts = SampleSpec::default().with_count(5).points(2, 2);
        let [x, y, z, u] = probe_sections();
        let b = bianchi_check(&dc, [&x, &y, &z, &u], &pts, 1e-7);
        assert!(fails(&b).is_empty(), "{:#?}", fails(&b));
    }
}
