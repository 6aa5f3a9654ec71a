//! Sampled identity suites for a distinguished connection: component vs
//! operator torsion and curvature, Ricci-type commutation formulas, the
//! Bianchi identities and the split of the curvature operator.

use super::{tensor, CurvatureFamilies, DConnection, TensorField, TorsionFamilies};
use crate::connection::TangentSection;
use crate::expr::{Expr, FiberPoint};
use crate::report::{scan_max_abs, scan_max_abs_diff, CheckReport};

fn compare(points: &[FiberPoint], a: &[Expr], b: &[Expr], check: &str, anchor: &str, tol: f64) -> CheckReport {
    scan_max_abs_diff(points, a, b).report(check, anchor, tol)
}

fn vanishes(points: &[FiberPoint], a: &[Expr], check: &str, anchor: &str, tol: f64) -> CheckReport {
    scan_max_abs(points, a).report(check, anchor, tol)
}

fn torsion_list(f: &TorsionFamilies) -> [(&'static str, &[Expr]); 5] {
    [("T", &f.t.data), ("T~", &f.tt.data), ("P", &f.p.data), ("P~", &f.pt.data), ("S", &f.s.data)]
}

fn curvature_list(f: &CurvatureFamilies) -> [(&'static str, &[Expr]); 6] {
    [("R", &f.r.data), ("R~", &f.rt.data), ("P", &f.p.data), ("P~", &f.pt.data), ("S", &f.s.data), ("S~", &f.st.data)]
}

/// Closed-form torsion families against the operator `D_X Y − D_Y X − [X,Y]`
/// on frame sections. The printed horizontal family is reported as a flag.
pub fn torsion_check(dc: &DConnection, points: &[FiberPoint], tol: f64) -> Vec<CheckReport> {
    let op = dc.torsion_from_operator();
    let comp = dc.torsion_components();
    let printed = dc.torsion_components_printed();
    let mut out: Vec<CheckReport> = torsion_list(&comp)
        .iter()
        .zip(torsion_list(&op))
        .map(|((name, c), (_, o))| {
            compare(points, c, o, &format!("torsion {name} vs operator"), "torsion components", tol)
        })
        .collect();
    out.push(vanishes(
        points,
        &dc.torsion_vv_horizontal(),
        "horizontal torsion of vertical pair",
        "torsion components",
        tol,
    ));
    out.push(
        compare(points, &printed.t.data, &op.t.data, "torsion T as printed (-L term)", "torsion components", tol)
            .as_flag(),
    );
    let r = dc.r();
    let anti: Vec<Expr> = (0..r * r * r)
        .map(|k| {
            let (a, b, c) = (k / (r * r), (k / r) % r, k % r);
            comp.s.get(a, b, c) + comp.s.get(a, c, b)
        })
        .collect();
    out.push(vanishes(points, &anti, "S antisymmetric in (b,c)", "torsion components", tol));
    out
}

/// Closed-form curvature families against `D_X D_Y − D_Y D_X − D_[X,Y]` on
/// frame sections, plus the literal transcriptions as flags.
pub fn curvature_check(dc: &DConnection, points: &[FiberPoint], tol: f64) -> Vec<CheckReport> {
    let op = dc.curvature_from_operator();
    let comp = dc.curvature_components();
    let printed = dc.curvature_components_printed();
    let mut out = Vec::new();
    for ((name, c), (_, o)) in curvature_list(&comp).iter().zip(curvature_list(&op)) {
        out.push(compare(points, c, o, &format!("curvature {name} vs operator"), "curvature components", tol));
    }
    for ((name, p), (_, o)) in curvature_list(&printed).iter().zip(curvature_list(&op)) {
        out.push(compare(points, p, o, &format!("curvature {name} as printed"), "curvature components", tol).as_flag());
    }
    let r = dc.r();
    for (name, fam) in [("R", &comp.r), ("R~", &comp.rt), ("S", &comp.s), ("S~", &comp.st)] {
        let anti: Vec<Expr> = tensor::multi_indices(4, r)
            .map(|i| fam.get(i[0], i[1], i[2], i[3]) + fam.get(i[0], i[1], i[3], i[2]))
            .collect();
        out.push(vanishes(points, &anti, &format!("{name} antisymmetric in (c,d)"), "curvature components", tol));
    }
    out
}

/// Iterated covariant derivatives of one block (`Y^a` or `Ẏ^a`) of a
/// section, addressed as `[a][c][b]`.
struct Iterated {
    r: usize,
    comp: Vec<Expr>,
    /// `Y_{|c|b}`
    hh: Vec<Expr>,
    /// `Y_{|c}|_b`
    hv: Vec<Expr>,
    /// `Y|_b{}_{|c}`
    vh: Vec<Expr>,
    /// `Y|_c|_b`
    vv: Vec<Expr>,
    /// `Y_{|e}` as `[a][e]`
    dh: Vec<Expr>,
    /// `Y|_e` as `[a][e]`
    dv: Vec<Expr>,
}

impl Iterated {
    fn new(dc: &DConnection, t: &TensorField, comp: Vec<Expr>) -> Self {
        let r = dc.r();
        let vertical = t.sig.vu == 1;
        let dh = tensor::h_deriv(dc, t);
        let dv = tensor::v_deriv(dc, t);
        let hh = tensor::h_deriv(dc, &dh);
        let hv = tensor::v_deriv(dc, &dh);
        let vh = tensor::h_deriv(dc, &dv);
        let vv = tensor::v_deriv(dc, &dv);
        let idx3 = |f: &dyn Fn(usize, usize, usize) -> Vec<usize>, t: &TensorField| -> Vec<Expr> {
            tensor::multi_indices(3, r).map(|i| t.get(&f(i[0], i[1], i[2])).clone()).collect()
        };
        let idx2 = |f: &dyn Fn(usize, usize) -> Vec<usize>, t: &TensorField| -> Vec<Expr> {
            tensor::multi_indices(2, r).map(|i| t.get(&f(i[0], i[1])).clone()).collect()
        };
        // Index layout: horizontal lower slots precede the vertical upper one.
        if vertical {
            Iterated {
                r,
                comp,
                hh: idx3(&|a, c, b| vec![c, b, a], &hh),
                hv: idx3(&|a, c, b| vec![c, a, b], &hv),
                vh: idx3(&|a, c, b| vec![c, a, b], &vh),
                vv: idx3(&|a, c, b| vec![a, c, b], &vv),
                dh: idx2(&|a, e| vec![e, a], &dh),
                dv: idx2(&|a, e| vec![a, e], &dv),
            }
        } else {
            Iterated {
                r,
                comp,
                hh: idx3(&|a, c, b| vec![a, c, b], &hh),
                hv: idx3(&|a, c, b| vec![a, c, b], &hv),
                vh: idx3(&|a, c, b| vec![a, c, b], &vh),
                vv: idx3(&|a, c, b| vec![a, c, b], &vv),
                dh: idx2(&|a, e| vec![a, e], &dh),
                dv: idx2(&|a, e| vec![a, e], &dv),
            }
        }
    }

    fn i3(&self, a: usize, c: usize, b: usize) -> usize {
        (a * self.r + c) * self.r + b
    }

    fn i2(&self, a: usize, e: usize) -> usize {
        a * self.r + e
    }

    /// Residuals `lhs − rhs` over all `(a,c,b)`.
    fn residual(
        &self,
        lhs: impl Fn(usize, usize, usize) -> Expr,
        rhs: impl Fn(usize, usize, usize) -> Expr,
    ) -> Vec<Expr> {
        tensor::multi_indices(3, self.r).map(|i| lhs(i[0], i[1], i[2]) - rhs(i[0], i[1], i[2])).collect()
    }
}

/// The six Ricci-type commutation formulas for the section `y`, in the form
/// obtained from the operator definitions of torsion and curvature. The
/// literal transcriptions (with the extra `L` term and the undefined
/// `ℍ` read as `H`) are reported as flags.
pub fn ricci_check(dc: &DConnection, y: &TangentSection, points: &[FiberPoint], tol: f64) -> Vec<CheckReport> {
    let r = dc.r();
    let tf = dc.torsion_components();
    let tp = dc.torsion_components_printed();
    let cf = dc.curvature_components();
    let (yh, yv) = dc.section_tensors(y);
    let blocks = [
        (Iterated::new(dc, &yh, y.h.clone()), "Y", &cf.r, &cf.p, &cf.s, &dc.h),
        (Iterated::new(dc, &yv, y.v.clone()), "Y~", &cf.rt, &cf.pt, &cf.st, &dc.ht),
    ];
    let sum = |f: &dyn Fn(usize) -> Expr| Expr::sum((0..r).map(f));
    let mut out = Vec::new();
    for (it, label, rr, pp, ss, hcoef) in &blocks {
        let vertical = *label == "Y~";
        let hh = |a, c, b| &it.hh[it.i3(a, c, b)] - &it.hh[it.i3(a, b, c)];
        let hv = |a, c, b| &it.hv[it.i3(a, c, b)] - &it.vh[it.i3(a, c, b)];
        let vv = |a, c, b| &it.vv[it.i3(a, c, b)] - &it.vv[it.i3(a, b, c)];
        let dh = |a, e| &it.dh[it.i2(a, e)];
        let dv = |a, e| &it.dv[it.i2(a, e)];

        let hh_with = |tt: &super::Coeffs3, extra_l: bool, a: usize, c: usize, b: usize| {
            sum(&|e| {
                let mut s =
                    rr.get(a, e, c, b) * &it.comp[e] + tf.tt.get(e, b, c) * dv(a, e) + tt.get(e, b, c) * dh(a, e);
                if extra_l {
                    s = s + dc.conn.alg.l_h(e, b, c) * dh(a, e);
                }
                s
            })
        };
        let hv_rhs = |a, c, b| {
            sum(&|e| pp.get(a, e, c, b) * &it.comp[e] - tf.pt.get(e, c, b) * dv(a, e) - tf.p.get(e, c, b) * dh(a, e))
        };
        let hv_printed = |a, c, b| {
            sum(&|e| pp.get(a, e, c, b) * &it.comp[e] - tf.pt.get(e, c, b) * dv(a, e) - hcoef.get(e, b, c) * dv(a, e))
        };
        let vv_rhs = |a, c, b| sum(&|e| ss.get(a, e, c, b) * &it.comp[e] + tf.s.get(e, b, c) * dv(a, e));
        let vv_printed = |a: usize, c: usize, b: usize| {
            if vertical {
                // The printed vertical formula contracts with the free index b.
                sum(&|e| ss.get(a, e, c, b) * &it.comp[b] + tf.s.get(e, b, c) * dv(a, e))
            } else {
                vv_rhs(a, c, b)
            }
        };

        let anchor =
            if vertical { "Ricci-type formulas, vertical block" } else { "Ricci-type formulas, horizontal block" };
        let zero = |v: Vec<Expr>, name: String| vanishes(points, &v, &name, anchor, tol);
        out.push(zero(it.residual(hh, |a, c, b| hh_with(&tf.t, false, a, c, b)), format!("{label}|c|b - {label}|b|c")));
        out.push(zero(it.residual(hv, hv_rhs), format!("{label}|c v|b - {label} v|b |c")));
        out.push(zero(it.residual(vv, vv_rhs), format!("{label} v|c v|b - {label} v|b v|c")));
        out.push(
            zero(it.residual(hh, |a, c, b| hh_with(&tp.t, true, a, c, b)), format!("{label}|c|b as printed")).as_flag(),
        );
        out.push(zero(it.residual(hv, hv_printed), format!("{label}|c v|b as printed (H reading)")).as_flag());
        out.push(zero(it.residual(vv, vv_printed), format!("{label} v|c v|b as printed")).as_flag());
    }
    out
}

fn h_part(s: &TangentSection) -> &[Expr] {
    &s.h
}

fn v_part(s: &TangentSection) -> &[Expr] {
    &s.v
}

/// `(D_X 𝕋)(Y,Z)`, or the literal `D_X(𝕋(Y,Z))` when `literal` is set.
fn torsion_derivative(
    dc: &DConnection,
    x: &TangentSection,
    y: &TangentSection,
    z: &TangentSection,
    literal: bool,
) -> TangentSection {
    let d = dc.cov_deriv_section(x, &dc.torsion_op(y, z));
    if literal {
        return d;
    }
    d.sub(&dc.torsion_op(&dc.cov_deriv_section(x, y), z)).sub(&dc.torsion_op(y, &dc.cov_deriv_section(x, z)))
}

/// `(D_X ℝ)(Y,Z)U`, or the literal `D_X(ℝ(Y,Z)U)`.
fn curvature_derivative(
    dc: &DConnection,
    x: &TangentSection,
    y: &TangentSection,
    z: &TangentSection,
    u: &TangentSection,
    literal: bool,
) -> TangentSection {
    let d = dc.cov_deriv_section(x, &dc.curvature_op(y, z, u));
    if literal {
        return d;
    }
    d.sub(&dc.curvature_op(&dc.cov_deriv_section(x, y), z, u))
        .sub(&dc.curvature_op(y, &dc.cov_deriv_section(x, z), u))
        .sub(&dc.curvature_op(y, z, &dc.cov_deriv_section(x, u)))
}

/// First Bianchi identity
/// `Σ_cyc{(D_X𝕋)(Y,Z) − ℝ(X,Y)Z + 𝕋(ℋ𝕋(X,Y),Z) + 𝕋(𝒱𝕋(X,Y),Z)} = 0`.
pub fn first_bianchi(
    dc: &DConnection,
    x: &TangentSection,
    y: &TangentSection,
    z: &TangentSection,
    literal: bool,
) -> TangentSection {
    let r = dc.r();
    let mut acc = TangentSection::zero(r);
    for (a, b, c) in [(x, y, z), (y, z, x), (z, x, y)] {
        let t = dc.torsion_op(a, b);
        let term = torsion_derivative(dc, a, b, c, literal)
            .sub(&dc.curvature_op(a, b, c))
            .add(&dc.torsion_op(&t.horizontal(), c))
            .add(&dc.torsion_op(&t.vertical(), c));
        acc = acc.add(&term);
    }
    acc
}

/// Second Bianchi identity
/// `Σ_cyc(X,Y,Z){(D_Xℝ)(Y,Z)U + ℝ(ℋ𝕋(X,Y),Z)U + ℝ(𝒱𝕋(X,Y),Z)U} = 0`.
pub fn second_bianchi(
    dc: &DConnection,
    x: &TangentSection,
    y: &TangentSection,
    z: &TangentSection,
    u: &TangentSection,
) -> TangentSection {
    let mut acc = TangentSection::zero(dc.r());
    for (a, b, c) in [(x, y, z), (y, z, x), (z, x, y)] {
        let t = dc.torsion_op(a, b);
        acc = acc
            .add(&curvature_derivative(dc, a, b, c, u, false))
            .add(&dc.curvature_op(&t.horizontal(), c, u))
            .add(&dc.curvature_op(&t.vertical(), c, u));
    }
    acc
}

/// Literal transcription: four-term cyclic sum over `(X,Y,Z,U)` of
/// `D_X(ℝ(Y,Z)U) − ℝ(ℋ𝕋(X,Y),Z)U − ℝ(𝒱𝕋(X,Y),Z)U`.
pub fn second_bianchi_printed(
    dc: &DConnection,
    x: &TangentSection,
    y: &TangentSection,
    z: &TangentSection,
    u: &TangentSection,
) -> TangentSection {
    let mut acc = TangentSection::zero(dc.r());
    let s = [x, y, z, u];
    for k in 0..4 {
        let (a, b, c, d) = (s[k], s[(k + 1) % 4], s[(k + 2) % 4], s[(k + 3) % 4]);
        let t = dc.torsion_op(a, b);
        acc = acc
            .add(&dc.cov_deriv_section(a, &dc.curvature_op(b, c, d)))
            .sub(&dc.curvature_op(&t.horizontal(), c, d))
            .sub(&dc.curvature_op(&t.vertical(), c, d));
    }
    acc
}

/// Both Bianchi identities, horizontal and vertical parts, for the probe
/// sections `x, y, z, u`.
pub fn bianchi_check(
    dc: &DConnection,
    [x, y, z, u]: [&TangentSection; 4],
    points: &[FiberPoint],
    tol: f64,
) -> Vec<CheckReport> {
    let first = first_bianchi(dc, x, y, z, false);
    let first_lit = first_bianchi(dc, x, y, z, true);
    let second = second_bianchi(dc, x, y, z, u);
    let second_lit = second_bianchi_printed(dc, x, y, z, u);
    let a1 = "Bianchi identities, torsion";
    let a2 = "Bianchi identities, curvature";
    let mut out = Vec::new();
    for (part, f) in [("H", h_part as fn(&TangentSection) -> &[Expr]), ("V", v_part)] {
        out.push(vanishes(points, f(&first), &format!("{part} first Bianchi"), a1, tol));
        out.push(vanishes(points, f(&second), &format!("{part} second Bianchi"), a2, tol));
    }
    for (part, f) in [("H", h_part as fn(&TangentSection) -> &[Expr]), ("V", v_part)] {
        out.push(
            vanishes(points, f(&first_lit), &format!("{part} first Bianchi, D_X(T(Y,Z)) reading"), a1, tol).as_flag(),
        );
        out.push(vanishes(points, f(&second_lit), &format!("{part} second Bianchi as printed"), a2, tol).as_flag());
    }
    out
}

/// The curvature operator preserves the horizontal/vertical split.
pub fn split_check(
    dc: &DConnection,
    [x, y, z, u]: [&TangentSection; 4],
    points: &[FiberPoint],
    tol: f64,
) -> Vec<CheckReport> {
    let anchor = "curvature preserves the splitting";
    let rxy_hz = dc.curvature_op(x, y, &z.horizontal());
    let rxy_vz = dc.curvature_op(x, y, &z.vertical());
    let d_hu = dc.cov_deriv_section(x, &dc.curvature_op(y, z, &u.horizontal()));
    let d_vu = dc.cov_deriv_section(x, &dc.curvature_op(y, z, &u.vertical()));
    let full = dc.curvature_op(x, y, z);
    let split = rxy_hz.horizontal().add(&rxy_vz.vertical());
    vec![
        vanishes(points, &rxy_hz.v, "V R(X,Y) HZ = 0", anchor, tol),
        vanishes(points, &rxy_vz.h, "H R(X,Y) VZ = 0", anchor, tol),
        vanishes(points, &d_hu.v, "V D_X(R(Y,Z) HU) = 0", anchor, tol),
        vanishes(points, &d_vu.h, "H D_X(R(Y,Z) VU) = 0", anchor, tol),
        compare(points, &full.components(), &split.components(), "R(X,Y)Z = HR(X,Y)HZ + VR(X,Y)VZ", anchor, tol),
    ]
}

/// Mixed curvature from the `P`, `P̃` families against `ℝ(𝒱X, ℋY)Z`.
pub fn mixed_curvature_check(
    dc: &DConnection,
    [x, y, z]: [&TangentSection; 3],
    points: &[FiberPoint],
    tol: f64,
) -> CheckReport {
    let fam = dc.curvature_components();
    let lhs = dc.mixed_curvature(&fam, x, y, z);
    let rhs = dc.curvature_op(&x.vertical(), &y.horizontal(), z);
    compare(points, &lhs.components(), &rhs.components(), "mixed curvature vs R(VX, HY)Z", "mixed curvature", tol)
}
