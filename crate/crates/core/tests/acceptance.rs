//! End-to-end acceptance run. Prints one PASS/FAIL line per criterion and
//! exits non-zero if any criterion fails.

mod common;

use std::process::ExitCode;

use algebroid_engine::cli::{self, Command};
use algebroid_engine::config::System;
use algebroid_engine::dconn::DConnection;
use algebroid_engine::expr::{Expr, FiberPoint};
use algebroid_engine::geo;
use algebroid_engine::mech;
use algebroid_engine::report::{CheckReport, Status};

struct Outcome {
    ok: bool,
    detail: String,
}

impl Outcome {
    fn new(ok: bool, detail: impl Into<String>) -> Self {
        Outcome { ok, detail: detail.into() }
    }

    fn and(self, other: Outcome) -> Outcome {
        Outcome { ok: self.ok && other.ok, detail: format!("{}; {}", self.detail, other.detail) }
    }
}

fn load(name: &str) -> System {
    System::load(&common::config(name)).unwrap_or_else(|e| panic!("{name}: {e}"))
}

fn reports(cmd: Command, name: &str) -> Vec<CheckReport> {
    cli::run(cmd, &load(name)).unwrap_or_else(|e| panic!("{name}: {e}")).reports
}

/// Worst residual among the named checks, each of which must be present,
/// evaluated, and below `tol`.
fn bounded(label: &str, reps: &[CheckReport], names: &[&str], tol: f64) -> Outcome {
    let mut worst = 0.0f64;
    let mut bad = Vec::new();
    for name in names {
        let hits: Vec<&CheckReport> = reps.iter().filter(|r| r.check == *name).collect();
        if hits.is_empty() {
            bad.push(format!("missing '{name}'"));
        }
        for r in hits {
            worst = worst.max(r.max_residual);
            if r.status == Status::Inconclusive || r.max_residual.is_nan() || r.max_residual >= tol {
                bad.push(format!("'{name}' = {:.3e}", r.max_residual));
            }
        }
    }
    let mut detail = format!("{label} worst {worst:.3e} < {tol:.0e}");
    if !bad.is_empty() {
        detail.push_str(&format!(" [{}]", bad.join(", ")));
    }
    Outcome::new(bad.is_empty(), detail)
}

fn max_abs_at(exprs: &[Expr], points: &[FiberPoint]) -> f64 {
    let mut m = 0.0f64;
    for p in points {
        for e in exprs {
            m = m.max(e.eval_at(p).map(f64::abs).unwrap_or(f64::INFINITY));
        }
    }
    m
}

fn classical_reduction() -> Outcome {
    let sys = load("flat");
    let pts = sys.cfg.sampling.points(2, 2);
    let conn = sys.connection().unwrap();
    let rr = max_abs_at(&conn.curvature_all(), &pts);
    let fam = DConnection::berwald(conn).curvature_components();
    let all: Vec<Expr> =
        [&fam.r, &fam.rt, &fam.p, &fam.pt, &fam.s, &fam.st].iter().flat_map(|c| c.data.iter().cloned()).collect();
    let fams = max_abs_at(&all, &pts);

    let geo = sys.cfg.geodesic.clone().unwrap();
    let field = geo::GeodesicField::new(sys.mech().unwrap());
    let traj = geo::integrate(&field, &geo.x0, &geo.y0, geo.t1, 1e-3).unwrap();
    let end = traj.last();
    let err = (0..2).map(|i| (end.x[i] - (geo.x0[i] + geo.y0[i] * geo.t1)).abs()).fold(0.0, f64::max);
    Outcome::new(
        rr == 0.0 && fams == 0.0 && err < 1e-10 && traj.error.is_none(),
        format!("curvature {rr:.1e}, six families {fams:.1e}, endpoint error {err:.3e} < 1e-10"),
    )
}

/// Fourth-order central difference of `f` along direction `v` at `(x, y)`.
fn directional(f: &Expr, x: &[f64], y: &[f64], vx: &[f64], vy: &[f64], h: f64) -> f64 {
    let at = |s: f64| {
        let xs: Vec<f64> = x.iter().zip(vx).map(|(a, b)| a + s * b).collect();
        let ys: Vec<f64> = y.iter().zip(vy).map(|(a, b)| a + s * b).collect();
        f.eval(&xs, &ys).unwrap()
    };
    (-at(2.0 * h) + 8.0 * at(h) - 8.0 * at(-h) + at(-2.0 * h)) / (12.0 * h)
}

/// `ℝ^c_{ab}` against the vertical part of `[δ̃_a, δ̃_b]`, with the
/// commutator taken by finite differences of the evaluated frame fields.
fn frame_bracket() -> Outcome {
    let sys = load("general_connection");
    let conn = sys.connection().unwrap();
    let (m, r) = (conn.m(), conn.r());
    let pts = sys.cfg.sampling.clone().with_count(100).points(m, r);
    let fields: Vec<_> = (0..r).map(|a| conn.delta_field(a)).collect();
    let eval = |es: &[Expr], p: &FiberPoint| -> Vec<f64> { es.iter().map(|e| e.eval_at(p).unwrap()).collect() };
    let mut worst = 0.0f64;
    for p in &pts {
        for a in 0..r {
            for b in 0..r {
                let (xa, ya) = (eval(&fields[a].base, p), eval(&fields[a].fiber, p));
                let (xb, yb) = (eval(&fields[b].base, p), eval(&fields[b].fiber, p));
                for c in 0..r {
                    let comm = directional(&fields[b].fiber[c], &p.x, &p.y, &xa, &ya, 1e-3)
                        - directional(&fields[a].fiber[c], &p.x, &p.y, &xb, &yb, 1e-3);
                    let corr: f64 = (0..r)
                        .map(|d| conn.gamma(c, d).eval_at(p).unwrap() * conn.alg.l_h(d, a, b).eval_at(p).unwrap())
                        .sum();
                    let want = comm + corr;
                    let got = conn.curvature_r(c, a, b).eval_at(p).unwrap();
                    worst = worst.max((got - want).abs());
                }
            }
        }
    }
    let own = bounded(
        "symbolic commutator",
        &reports(Command::Frame, "general_connection"),
        &["[δa, δb] = L δc + R ∂c"],
        1e-9,
    );
    Outcome::new(worst < 1e-9, format!("finite-difference commutator worst {worst:.3e} < 1e-9 at 100 points")).and(own)
}

fn operator_equivalence() -> Outcome {
    let names = [
        "torsion T vs operator",
        "torsion T~ vs operator",
        "torsion P vs operator",
        "torsion P~ vs operator",
        "torsion S vs operator",
        "curvature R vs operator",
        "curvature R~ vs operator",
        "curvature P vs operator",
        "curvature P~ vs operator",
        "curvature S vs operator",
        "curvature S~ vs operator",
    ];
    ["general_connection", "berwald", "nonidentity_g"]
        .iter()
        .map(|c| bounded(c, &reports(Command::Curvature, c), &names, 1e-8))
        .reduce(Outcome::and)
        .unwrap()
}

fn ricci_bianchi() -> Outcome {
    let reps = reports(Command::Identities, "berwald");
    let ricci = [
        "Y|c|b - Y|b|c",
        "Y|c v|b - Y v|b |c",
        "Y v|c v|b - Y v|b v|c",
        "Y~|c|b - Y~|b|c",
        "Y~|c v|b - Y~ v|b |c",
        "Y~ v|c v|b - Y~ v|b v|c",
        "H first Bianchi",
        "H second Bianchi",
        "V first Bianchi",
        "V second Bianchi",
    ];
    let split = [
        "V R(X,Y) HZ = 0",
        "H R(X,Y) VZ = 0",
        "V D_X(R(Y,Z) HU) = 0",
        "H D_X(R(Y,Z) VU) = 0",
        "R(X,Y)Z = HR(X,Y)HZ + VR(X,Y)VZ",
    ];
    bounded("Ricci/Bianchi", &reps, &ricci, 1e-7).and(bounded("split", &reps, &split, 1e-10))
}

fn spray_calculus() -> Outcome {
    let reps = reports(Command::Spray, "quadratic_spray");
    // Independent Euler check: G - F/4 scales by λ² along the fiber.
    let sys = load("quadratic_spray");
    let ms = sys.mech().unwrap();
    let pts = sys.cfg.sampling.points(2, 2);
    let mut euler = 0.0f64;
    for p in &pts {
        let y2: Vec<f64> = p.y.iter().map(|v| 2.0 * v).collect();
        for a in 0..2 {
            let e = &ms.g[a] - ms.force[a].scale(0.25);
            euler = euler.max((e.eval(&p.x, &y2).unwrap() - 4.0 * e.eval_at(p).unwrap()).abs());
        }
    }
    Outcome::new(euler < 1e-12, format!("scaling residual {euler:.3e} < 1e-12"))
        .and(bounded("spray condition", &reps, &["spray condition"], 1e-12))
        .and(bounded("nabla_S U", &reps, &["nabla_S U = 0"], 1e-8))
        .and(bounded("homogeneity", &reps, &["U^c d_c Gamma = Gamma", "nabla_(H X) U = 0"], 1e-8))
        .and(bounded("mixed curvature", &reps, &["P(X,Y)U = 0", "P(U,X)Y = 0"], 1e-8))
}

fn hessian_lemma() -> Outcome {
    // Linear factors have Hess f = 0; the last two make the check bite.
    let fs = [
        "y1",
        "2*y1 - 3*y2",
        "x1*y1 + sin(x2)*y2",
        "exp(x2)*y2 - x1^2*y1",
        "sqrt(y1^2 + y2^2)",
        "(y1^3 + x1*y2^3)/(y1^2 + y2^2)",
    ];
    let mut worst = 0.0f64;
    let mut ok = true;
    for c in ["quadratic_spray", "berwald", "nonidentity_g"] {
        let sys = load(c);
        let dc = sys.mech().unwrap().berwald_nabla();
        let pts = sys.cfg.sampling.clone().away_from_zero().points(2, 2);
        for src in fs {
            let f = Expr::parse(src, 2, 2).unwrap();
            let rep = mech::hessian_lemma_check(&dc, &f, &pts, 1e-9);
            worst = worst.max(rep.max_residual);
            ok &= rep.passed();
        }
    }
    Outcome::new(ok && worst < 1e-9, format!("worst {worst:.3e} < 1e-9 over {} factors on 3 configs", fs.len()))
}

fn projective_relation() -> Outcome {
    ["quadratic_spray", "nonidentity_g"]
        .iter()
        .map(|c| bounded(c, &reports(Command::Weyl, c), &["H-bar = H + A (components)"], 1e-8))
        .reduce(Outcome::and)
        .unwrap()
}

fn weyl_geodesics() -> Outcome {
    let reps = reports(Command::Weyl, "quadratic_spray");
    let mono = reps.iter().find(|r| r.check == "parameter change s(t) strictly increasing");
    let mono_ok = mono.is_some_and(|r| r.passed());
    bounded("path deviation", &reps, &["S and S-bar geodesics trace the same path"], 1e-4)
        .and(Outcome::new(mono_ok, format!("s(t) increasing: {mono_ok}")))
        .and(bounded("round trip", &reps, &["recovered factor equals f"], 1e-8))
}

fn numerics() -> Outcome {
    let mut worst = 0.0f64;
    for seed in 0..50u64 {
        let e = common::random_expr(seed, 2, 2);
        let x = [0.3 + 0.01 * seed as f64, -0.4];
        let y = [0.7, 0.2 - 0.01 * seed as f64];
        worst = worst.max(common::fd_relative_error(&e, &x, &y, 1e-6));
    }
    // x'' = -x from (1, 0): the exact state at t = 1 is (cos 1, -sin 1).
    let osc = |_t: f64, z: &[f64]| Ok(vec![z[1], -z[0]]);
    let err = |dt: f64| {
        let (states, _, e) = geo::rk4(osc, 0.0, vec![1.0, 0.0], 1.0, dt).unwrap();
        assert!(e.is_none());
        let z = &states.last().unwrap().1;
        ((z[0] - 1f64.cos()).powi(2) + (z[1] + 1f64.sin()).powi(2)).sqrt()
    };
    let ratio = err(0.1) / err(0.05);
    Outcome::new(
        worst < 1e-6 && (12.0..=20.0).contains(&ratio),
        format!("finite differences worst relative {worst:.3e} < 1e-6; RK4 error ratio {ratio:.2} in [12, 20]"),
    )
}

fn determinism() -> Outcome {
    let cmds = ["validate", "frame", "curvature", "identities", "spray", "geodesic", "weyl"];
    let dir = tempfile::tempdir().unwrap();
    let mut diffs = Vec::new();
    for cmd in cmds {
        let mut bytes = Vec::new();
        for run in 0..2 {
            let out = dir.path().join(format!("{cmd}-{run}"));
            let cfg = common::config("quadratic_spray");
            let (code, _, err) = common::run_cli(&[
                cmd,
                "--config",
                cfg.to_str().unwrap(),
                "--out",
                out.to_str().unwrap(),
                "--seed",
                "17",
            ]);
            assert_eq!(code, 0, "{cmd}: {err}");
            bytes.push(std::fs::read(out.join("report.json")).unwrap());
        }
        if bytes[0] != bytes[1] || bytes[0].is_empty() {
            diffs.push(cmd);
        }
    }
    Outcome::new(diffs.is_empty(), format!("{} commands compared, differing: {diffs:?}", cmds.len()))
}

type Criterion = (&'static str, fn() -> Outcome);

fn main() -> ExitCode {
    let criteria: [Criterion; 10] = [
        ("classical reduction", classical_reduction),
        ("frame-bracket curvature", frame_bracket),
        ("torsion/curvature operator equivalence", operator_equivalence),
        ("Ricci and Bianchi identities", ricci_bianchi),
        ("spray calculus", spray_calculus),
        ("Hessian lemma", hessian_lemma),
        ("projective-change relation", projective_relation),
        ("Weyl geodesic equivalence", weyl_geodesics),
        ("numerics hygiene", numerics),
        ("determinism", determinism),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let o = run();
        println!("criterion {:>2} {:<40} {}  {}", i + 1, name, if o.ok { "PASS" } else { "FAIL" }, o.detail);
        failed += usize::from(!o.ok);
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
