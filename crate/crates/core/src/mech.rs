//! Mechanical systems on a generalized Lie algebroid: the canonical
//! semispray `S = (g^a_b∘h) y^b ∂̃_a − 2(G^a − F^a/4) ∂̇̃_a`, its horizontal
//! projector, the induced Berwald derivative and the vertical calculus
//! (v-derivative, Hessian, homogeneity).

use std::sync::Arc;

use crate::algebroid::{GenAlgebroid, GhMorphism};
use crate::connection::{NaturalSection, NlConnection, TangentSection};
use crate::dconn::{self, DConnection, Signature, TensorField};
use crate::error::{Error, Result};
use crate::expr::{Expr, FiberPoint};
use crate::report::{scan_max_abs, scan_max_abs_diff, CheckReport, Status};

#[derive(Clone, Debug)]
pub struct MechSystem {
    pub alg: Arc<GenAlgebroid>,
    pub gh: Arc<GhMorphism>,
    /// Spray coefficients `G^a`.
    pub g: Vec<Expr>,
    /// External force `F^a`.
    pub force: Vec<Expr>,
}

fn sum(it: impl IntoIterator<Item = Expr>) -> Expr {
    Expr::sum(it)
}

impl MechSystem {
    pub fn new(alg: Arc<GenAlgebroid>, gh: Arc<GhMorphism>, g: Vec<Expr>, force: Vec<Expr>) -> Result<Self> {
        let (m, r) = (alg.m, alg.r);
        if g.len() != r || force.len() != r {
            return Err(Error::Dimension(format!("G and F need {r} components")));
        }
        for e in g.iter().chain(&force) {
            e.check_arity(m, r)?;
        }
        Ok(MechSystem { alg, gh, g, force })
    }

    pub fn m(&self) -> usize {
        self.alg.m
    }

    pub fn r(&self) -> usize {
        self.alg.r
    }

    /// `G^a − F^a/4`, the part of the spray that drives the fiber motion.
    pub fn ghat(&self, a: usize) -> Expr {
        &self.g[a] - self.force[a].scale(0.25)
    }

    /// A connection used only for natural-frame brackets (which do not
    /// depend on `Γ`).
    fn bracket_host(&self) -> NlConnection {
        let r = self.r();
        NlConnection::new(self.alg.clone(), self.gh.clone(), vec![vec![Expr::zero(); r]; r])
            .expect("zero connection is valid")
    }

    /// `(g^a_b∘h) y^b`, the horizontal natural components of `S`.
    pub fn lifted_fiber(&self, a: usize) -> Expr {
        sum((0..self.r()).map(|b| self.gh.g_h(a, b) * Expr::y(b)))
    }

    pub fn semispray(&self) -> NaturalSection {
        let r = self.r();
        NaturalSection {
            a: (0..r).map(|a| self.lifted_fiber(a)).collect(),
            b: (0..r).map(|a| self.ghat(a).scale(-2.0)).collect(),
        }
    }

    /// Liouville section `ℂ = y^a ∂̇̃_a`.
    pub fn liouville(&self) -> NaturalSection {
        let r = self.r();
        NaturalSection { a: vec![Expr::zero(); r], b: (0..r).map(Expr::y).collect() }
    }

    /// `J_{(g,h)}` in the natural frame: `∂̃_a ↦ (g̃^b_a∘h) ∂̇̃_b`.
    pub fn apply_j(&self, x: &NaturalSection) -> NaturalSection {
        let r = self.r();
        NaturalSection {
            a: vec![Expr::zero(); r],
            b: (0..r).map(|b| sum((0..r).map(|a| self.gh.gtil_h(b, a) * &x.a[a]))).collect(),
        }
    }

    /// `J(S) = ℂ`: the semispray property of `S`.
    pub fn liouville_pairing(&self, points: &[FiberPoint], tol: f64) -> CheckReport {
        let js = self.apply_j(&self.semispray());
        let c = self.liouville();
        scan_max_abs_diff(points, &js.b, &c.b).report("J(S) = C", "semispray", tol)
    }

    /// `U^b ∂̇_b(G^a − F^a/4) − 2(G^a − F^a/4)`.
    pub fn spray_residual(&self) -> Vec<Expr> {
        let r = self.r();
        (0..r)
            .map(|a| {
                let gh = self.ghat(a);
                sum((0..r).map(|b| Expr::y(b) * gh.dy(b))) - gh.scale(2.0)
            })
            .collect()
    }

    pub fn spray_condition(&self, points: &[FiberPoint], tol: f64) -> CheckReport {
        let res = self.spray_residual();
        scan_max_abs(points, &res).report("spray condition", "2-homogeneity of G - F/4", tol)
    }

    /// `[ℂ, S] − S` through the bracket machinery.
    pub fn spray_deviation(&self) -> NaturalSection {
        let host = self.bracket_host();
        let s = self.semispray();
        let br = host.natural_bracket(&self.liouville(), &s);
        NaturalSection {
            a: br.a.iter().zip(&s.a).map(|(u, v)| u - v).collect(),
            b: br.b.iter().zip(&s.b).map(|(u, v)| u - v).collect(),
        }
    }

    /// The deviation equals `2(2Ĝ − U∂̇Ĝ) ∂̇̃_a`, so it vanishes exactly when
    /// the spray condition holds.
    pub fn deviation_check(&self, points: &[FiberPoint], tol: f64) -> CheckReport {
        let dev = self.spray_deviation();
        let mut want: Vec<Expr> = vec![Expr::zero(); self.r()];
        want.extend(self.spray_residual().iter().map(|e| e.scale(-2.0)));
        let mut got = dev.a.clone();
        got.extend(dev.b.iter().cloned());
        scan_max_abs_diff(points, &got, &want).report("[C,S] - S vs spray residual", "deviation of a semispray", tol)
    }

    /// `Γ^a_c` of the canonical semispray, four terms as displayed with the
    /// mechanical system. Indexed `[a][c]`.
    pub fn canonical_gamma(&self) -> Vec<Vec<Expr>> {
        let (m, r) = (self.m(), self.r());
        let gh = &self.gh;
        let alg = &self.alg;
        (0..r)
            .map(|a| {
                (0..r)
                    .map(|c| {
                        let t1 = sum((0..r).map(|b| gh.gtil_h(b, c) * self.ghat(a).dy(b)));
                        let t2 = sum((0..r).flat_map(|f| {
                            (0..r).map(move |d| alg.l_h(f, d, c) * self.lifted_fiber(d) * gh.gtil_h(a, f))
                        }));
                        let t3 = sum((0..r).flat_map(|b| {
                            (0..m).map(move |j| {
                                let dg = sum((0..r).map(|e| gh.g_h(b, e).dx(j) * Expr::y(e)));
                                alg.rho_h(j, c) * dg * gh.gtil_h(a, b)
                            })
                        }));
                        let t4 = sum((0..r).flat_map(|b| {
                            (0..m).map(move |i| self.lifted_fiber(b) * alg.rho_h(i, b) * gh.gtil_h(a, c).dx(i))
                        }));
                        t1 - t2.scale(0.5) + t3.scale(0.5) - t4.scale(0.5)
                    })
                    .collect()
            })
            .collect()
    }

    pub fn canonical_connection(&self) -> NlConnection {
        NlConnection::new(self.alg.clone(), self.gh.clone(), self.canonical_gamma())
            .expect("arity checked on construction")
    }

    /// Components `ℋ^b_a` of the horizontal projector of `S`, so that
    /// `ℋ_S(∂̃_a) = ∂̃_a + ℋ^b_a ∂̇̃_b`. Indexed `[b][a]`.
    pub fn hs_coeffs(&self) -> Vec<Vec<Expr>> {
        let (m, r) = (self.m(), self.r());
        let gh = &self.gh;
        let alg = &self.alg;
        (0..r)
            .map(|b| {
                (0..r)
                    .map(|a| {
                        let l = sum((0..r).flat_map(|d| {
                            (0..r).map(move |e| self.lifted_fiber(d) * gh.gtil_h(b, e) * alg.l_h(e, d, a))
                        }));
                        let dg = sum((0..r).flat_map(|e| {
                            (0..m).map(move |i| {
                                let d = sum((0..r).map(|c| gh.g_h(e, c).dx(i) * Expr::y(c)));
                                alg.rho_h(i, a) * d * gh.gtil_h(b, e)
                            })
                        }));
                        let dgt = sum((0..r).flat_map(|c| {
                            (0..m).map(move |i| self.lifted_fiber(c) * alg.rho_h(i, c) * gh.gtil_h(b, a).dx(i))
                        }));
                        let v = sum((0..r).map(|c| gh.gtil_h(c, a) * self.ghat(b).dy(c)));
                        (l - dg - dgt - v.scale(2.0)).scale(0.5)
                    })
                    .collect()
            })
            .collect()
    }

    /// The nonlinear connection induced by `ℋ_S`: `Γ^b_a = −ℋ^b_a`.
    pub fn hs_connection(&self) -> NlConnection {
        let gamma = self.hs_coeffs().into_iter().map(|row| row.into_iter().map(|e| -e).collect()).collect();
        NlConnection::new(self.alg.clone(), self.gh.clone(), gamma).expect("arity checked on construction")
    }

    /// Berwald derivative induced by `ℋ_S`.
    pub fn berwald_nabla(&self) -> DConnection {
        DConnection::berwald(self.hs_connection())
    }

    /// `ℋ_S(X) = ½(X + [JX, S] − J[X, S])` evaluated through brackets.
    pub fn hs_by_definition(&self, x: &NaturalSection) -> NaturalSection {
        let host = self.bracket_host();
        let s = self.semispray();
        let jx_s = host.natural_bracket(&self.apply_j(x), &s);
        let j_xs = self.apply_j(&host.natural_bracket(x, &s));
        let half = |a: &Expr, b: &Expr, c: &Expr| (a + b - c).scale(0.5);
        NaturalSection {
            a: (0..self.r()).map(|k| half(&x.a[k], &jx_s.a[k], &j_xs.a[k])).collect(),
            b: (0..self.r()).map(|k| half(&x.b[k], &jx_s.b[k], &j_xs.b[k])).collect(),
        }
    }

    /// Component form of `ℋ_S` against the bracket definition on the natural
    /// frame, plus idempotency and the vertical kernel.
    pub fn hs_check(&self, points: &[FiberPoint], tol: f64) -> Vec<CheckReport> {
        let r = self.r();
        let hs = self.hs_coeffs();
        let unit = |k: usize| (0..r).map(|c| if c == k { Expr::one() } else { Expr::zero() }).collect::<Vec<_>>();
        let zero = vec![Expr::zero(); r];
        let mut got = Vec::new();
        let mut want = Vec::new();
        let mut kernel = Vec::new();
        let mut idem = Vec::new();
        for a in 0..r {
            let x = NaturalSection { a: unit(a), b: zero.clone() };
            let hx = self.hs_by_definition(&x);
            got.extend(hx.a.iter().chain(&hx.b).cloned());
            want.extend(unit(a));
            want.extend((0..r).map(|b| hs[b][a].clone()));
            let hhx = self.hs_by_definition(&hx);
            idem.extend(hhx.a.iter().zip(&hx.a).chain(hhx.b.iter().zip(&hx.b)).map(|(u, v)| u - v));
            let v = self.hs_by_definition(&NaturalSection { a: zero.clone(), b: unit(a) });
            kernel.extend(v.a.into_iter().chain(v.b));
        }
        let anchor = "horizontal projector of a semispray";
        vec![
            scan_max_abs_diff(points, &got, &want).report("H_S components vs bracket definition", anchor, tol),
            scan_max_abs(points, &idem).report("H_S idempotent", anchor, tol),
            scan_max_abs(points, &kernel).report("H_S kills vertical sections", anchor, tol),
        ]
    }

    /// Closure of the canonical connection: `Γ^a_c g^c_f y^f` plus the three
    /// correction terms reproduces `2(G^a − F^a/4)`.
    pub fn closure_check(&self, points: &[FiberPoint], tol: f64) -> CheckReport {
        let (m, r) = (self.m(), self.r());
        let gamma = self.canonical_gamma();
        let gh = &self.gh;
        let alg = &self.alg;
        let res: Vec<Expr> = (0..r)
            .map(|a| {
                let gu = |c: usize| self.lifted_fiber(c);
                let t0 = sum((0..r).map(|c| &gamma[a][c] * gu(c)));
                let t1 = sum((0..r).flat_map(|d| {
                    (0..r).flat_map(move |c| (0..r).map(move |b| gu(d) * alg.l_h(b, d, c) * gh.gtil_h(a, b) * gu(c)))
                }));
                let t2 = sum((0..r).flat_map(|c| {
                    (0..r).flat_map(move |b| {
                        (0..m).map(move |j| {
                            let dg = sum((0..r).map(|e| gh.g_h(b, e).dx(j) * Expr::y(e)));
                            alg.rho_h(j, c) * dg * gh.gtil_h(a, b) * gu(c)
                        })
                    })
                }));
                let t3 = sum((0..r).flat_map(|c| {
                    (0..r)
                        .flat_map(move |b| (0..m).map(move |i| gu(b) * alg.rho_h(i, b) * gh.gtil_h(a, c).dx(i) * gu(c)))
                }));
                t0 + t1.scale(0.5) - t2.scale(0.5) + t3.scale(0.5) - self.ghat(a).scale(2.0)
            })
            .collect();
        scan_max_abs(points, &res).report("canonical spray closure", "canonical spray of a mechanical system", tol)
    }

    /// Agreement of the displayed canonical connection with `−ℋ_S`. The two
    /// differ in the sign of the `∂(g̃)` term, so they only agree when `g̃∘h`
    /// is constant along the anchor.
    pub fn canonical_vs_hs(&self, points: &[FiberPoint], tol: f64) -> CheckReport {
        let a: Vec<Expr> = self.canonical_gamma().into_iter().flatten().collect();
        let b: Vec<Expr> = self.hs_connection().gamma.into_iter().flatten().collect();
        scan_max_abs_diff(points, &a, &b)
            .report("displayed canonical connection = -H_S", "canonical semispray connection", tol)
            .as_flag()
    }

    /// `U = y^a(δ̃_a + ∂̇̃_a)`.
    pub fn u_section(&self) -> TangentSection {
        let y: Vec<Expr> = (0..self.r()).map(Expr::y).collect();
        TangentSection { h: y.clone(), v: y }
    }

    /// `∇_S U` for the Berwald derivative of `ℋ_S`.
    pub fn nabla_s_u(&self) -> TangentSection {
        let dc = self.berwald_nabla();
        let s = dc.conn.from_natural(&self.semispray());
        dc.cov_deriv_section(&s, &self.u_section())
    }

    /// Homogeneity of `ℋ_S`: `U^c ∂̇_c Γ^b_a = Γ^b_a` and the defining
    /// property `∇_{ℋX} U = 0` on frame sections.
    pub fn homogeneity_check(&self, points: &[FiberPoint], tol: f64) -> Vec<CheckReport> {
        let r = self.r();
        let conn = self.hs_connection();
        let euler: Vec<Expr> =
            conn.gamma.iter().flatten().map(|g| sum((0..r).map(|c| Expr::y(c) * g.dy(c))) - g).collect();
        let dc = self.berwald_nabla();
        let u = self.u_section();
        let mut nab = Vec::new();
        for a in 0..r {
            let d = dc.cov_deriv_section(&TangentSection::delta(r, a), &u);
            nab.extend(d.components());
        }
        let anchor = "homogeneous horizontal projector";
        vec![
            scan_max_abs(points, &euler).report("U^c d_c Gamma = Gamma", anchor, tol),
            scan_max_abs(points, &nab).report("nabla_(H X) U = 0", anchor, tol),
        ]
    }

    /// `∇_S U = 0` (needs a spray).
    pub fn nabla_s_u_check(&self, points: &[FiberPoint], tol: f64) -> CheckReport {
        let d = self.nabla_s_u().components();
        scan_max_abs(points, &d).report("nabla_S U = 0", "Berwald derivative of a spray", tol)
    }

    /// Mixed curvature of the Berwald derivative on `U`:
    /// `ℙ(X,Y)U = ℙ(U,X)Y = 0` for the given probe pairs. Inconclusive when
    /// the system is not a spray.
    pub fn mixed_curvature_check(
        &self,
        probes: &[(TangentSection, TangentSection)],
        points: &[FiberPoint],
        tol: f64,
    ) -> Vec<CheckReport> {
        let anchor = "mixed curvature of a homogeneous projector";
        let dc = self.berwald_nabla();
        let fam = dc.curvature_components();
        let u = self.u_section();
        let mut first = Vec::new();
        let mut second = Vec::new();
        for (x, y) in probes {
            first.extend(dc.mixed_curvature(&fam, x, y, &u).components());
            second.extend(dc.mixed_curvature(&fam, &u, x, y).components());
        }
        let mut out = vec![
            scan_max_abs(points, &first).report("P(X,Y)U = 0", anchor, tol),
            scan_max_abs(points, &second).report("P(U,X)Y = 0", anchor, tol),
        ];
        if !self.spray_condition(points, tol).passed() {
            for rep in &mut out {
                rep.status = Status::Inconclusive;
                rep.note = Some("system is not a spray".into());
            }
        }
        out
    }
}

/// `∇^v_X f = Ẋ^a ∂̇_a f`.
pub fn v_derivative(x: &TangentSection, f: &Expr) -> Expr {
    sum(x.v.iter().enumerate().map(|(a, xa)| xa * f.dy(a)))
}

/// `Hess f = (∂̇_a ∂̇_b f) δỹ^a ⊗ δỹ^b`.
pub fn hessian(f: &Expr, r: usize) -> TensorField {
    TensorField::from_fn(Signature::new(0, 0, 0, 2), r, |i| f.dy(i[0]).dy(i[1]))
}

/// Residual of `U^a ∂̇_a f = f`.
pub fn homog1_residual(f: &Expr, r: usize) -> Expr {
    sum((0..r).map(|a| Expr::y(a) * f.dy(a))) - f
}

pub fn homog1_check(f: &Expr, r: usize, points: &[FiberPoint], tol: f64) -> CheckReport {
    let res = [homog1_residual(f, r)];
    scan_max_abs(points, &res).report("f is 1-homogeneous", "1-homogeneity in the fiber", tol)
}

/// `∇^v_U(Hess f) + Hess f`, contracted with the Berwald v-derivative.
pub fn hessian_lemma(dc: &DConnection, f: &Expr) -> Vec<Expr> {
    let r = dc.r();
    let hess = hessian(f, r);
    let d = dconn::v_deriv(dc, &hess);
    dconn::multi_indices(2, r)
        .map(|i| sum((0..r).map(|c| Expr::y(c) * d.get(&[i[0], i[1], c]))) + hess.get(&i))
        .collect()
}

pub fn hessian_lemma_check(dc: &DConnection, f: &Expr, points: &[FiberPoint], tol: f64) -> CheckReport {
    let res = hessian_lemma(dc, f);
    scan_max_abs(points, &res).report("nabla^v_U Hess f = -Hess f", "Hessian of a 1-homogeneous function", tol)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sampling::SampleSpec;
    use crate::testdata::{frame_algebroid, p, probe_sections};

    fn quadratic(alg: GenAlgebroid, gh: Option<(Vec<Vec<&str>>, Vec<Vec<&str>>)>) -> MechSystem {
        let alg = Arc::new(alg);
        let base = |s: &str| Expr::parse(s, 2, 0).unwrap();
        let gh = match gh {
            None => GhMorphism::identity(&alg),
            Some((g, gt)) => {
                let conv = |m: Vec<Vec<&str>>| m.into_iter().map(|r| r.into_iter().map(base).collect()).collect();
                GhMorphism::new(&alg, conv(g), conv(gt)).unwrap()
            }
        };
        let g = vec![p("x1*y1^2 + y1*y2"), p("y2^2 - x2*y1*y2")];
        let f = vec![p("4*y1*y2"), p("x1*y1^2")];
        MechSystem::new(alg, Arc::new(gh), g, f).unwrap()
    }

    fn nonidentity() -> MechSystem {
        quadratic(
            frame_algebroid(),
            Some((
                vec![vec!["1", "x1"], vec!["0", "1 + x2^2"]],
                vec![vec!["1", "neg(x1)/(1 + x2^2)"], vec!["0", "1/(1 + x2^2)"]],
            )),
        )
    }

    fn pts() -> Vec<FiberPoint> {
        SampleSpec::default().with_count(30).away_from_zero().points(2, 2)
    }

    #[test]
    fn quadratic_spray_passes_spray_checks() {
        for sys in [quadratic(GenAlgebroid::tangent(2), None), quadratic(frame_algebroid(), None), nonidentity()] {
            let pts = pts();
            assert!(sys.spray_condition(&pts, 1e-12).passed());
            assert!(sys.deviation_check(&pts, 1e-12).passed());
            assert!(sys.liouville_pairing(&pts, 1e-12).passed());
            assert!(sys.closure_check(&pts, 1e-9).passed());
            assert!(sys.nabla_s_u_check(&pts, 1e-8).passed(), "{}", sys.nabla_s_u_check(&pts, 1e-8));
            for r in sys.hs_check(&pts, 1e-9).into_iter().chain(sys.homogeneity_check(&pts, 1e-8)) {
                assert!(r.passed(), "{r}");
            }
            let [x, y, z, _] = probe_sections();
            for r in sys.mixed_curvature_check(&[(x, y.clone()), (y, z)], &pts, 1e-8) {
                assert!(r.passed(), "{r}");
            }
        }
    }

    #[test]
    fn canonical_connection_differs_from_hs_only_for_varying_g() {
        let pts = pts();
        assert!(quadratic(frame_algebroid(), None).canonical_vs_hs(&pts, 1e-12).passed());
        assert_eq!(nonidentity().canonical_vs_hs(&pts, 1e-9).status, Status::MismatchFlag);
    }

    #[test]
    fn classical_quadratic_spray_gives_christoffel_connection() {
        // G^a = ½ Γ̂^a_{bc} y^b y^c with Γ̂^1_{12} = Γ̂^1_{21} = x2, Γ̂^2_{11} = x1.
        let alg = Arc::new(GenAlgebroid::tangent(2));
        let gh = Arc::new(GhMorphism::identity(&alg));
        let sys = MechSystem::new(alg, gh, vec![p("x2*y1*y2"), p("0.5*x1*y1^2")], vec![p("0"), p("0")]).unwrap();
        let gamma = sys.canonical_gamma();
        let want = [[p("x2*y2"), p("x2*y1")], [p("x1*y1"), p("0")]];
        for q in pts() {
            for a in 0..2 {
                assert!(crate::report::max_abs_diff(&gamma[a], &want[a], &q).unwrap() < 1e-14);
            }
        }
    }

    #[test]
    fn cubic_g_is_not_a_spray() {
        let alg = Arc::new(GenAlgebroid::tangent(2));
        let gh = Arc::new(GhMorphism::identity(&alg));
        let sys = MechSystem::new(alg, gh, vec![p("y1^3"), p("0")], vec![p("0"), p("0")]).unwrap();
        let res = sys.spray_residual();
        assert_eq!(res[0].eval(&[0.0, 0.0], &[1.0, 0.0]).unwrap(), 1.0);
        assert_eq!(sys.nabla_s_u_check(&pts(), 1e-8).status, Status::Fail);
        assert_eq!(sys.homogeneity_check(&pts(), 1e-8)[0].status, Status::Fail);
        let [x, y, ..] = probe_sections();
        let reps = sys.mixed_curvature_check(&[(x, y)], &pts(), 1e-8);
        assert!(reps.iter().all(|r| r.status == Status::Inconclusive));
    }

    #[test]
    fn hessian_and_homogeneity() {
        let sys = quadratic(GenAlgebroid::tangent(2), None);
        let dc = sys.berwald_nabla();
        let pts = pts();
        for f in ["y1 + 2*y2", "sqrt(y1^2 + y2^2)", "x1*y1 - y2"] {
            let f = p(f);
            assert!(homog1_check(&f, 2, &pts, 1e-12).passed());
            assert!(hessian_lemma_check(&dc, &f, &pts, 1e-9).passed());
        }
        let sq = p("y1^2");
        assert_eq!(homog1_residual(&sq, 2).eval(&[0.0, 0.0], &[1.0, 0.0]).unwrap(), 1.0);
        assert!(hessian(&p("y1"), 2).comps.iter().all(Expr::is_zero));
    }
}
