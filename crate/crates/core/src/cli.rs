//! Batch front end: load a system, run one family of checks, print a
//! summary and write `report.json` (plus `geodesic.csv` for `geodesic`).
//!
//! Exit codes: 0 when no check failed, 1 when one did, 2 for config or
//! I/O errors.

use std::ffi::OsString;
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use clap::{Parser, ValueEnum};

use crate::config::System;
use crate::connection::{NaturalSection, TangentSection};
use crate::dconn::{self, DConnection};
use crate::error::{Error, Result};
use crate::expr::{Expr, FiberPoint};
use crate::geo::{integrate, path_deviation, GeodesicField, Trajectory};
use crate::mech;
use crate::report::{CheckReport, Status};
use crate::weyl;

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Command {
    /// Algebroid axioms and morphism inverses.
    Validate,
    /// Brackets of the adapted frame and the projector algebra.
    Frame,
    /// Torsion and curvature families against their operator forms.
    Curvature,
    /// Ricci and Bianchi identities, splitting, mixed curvature.
    Identities,
    /// Spray condition, induced projector, homogeneity, Hessian lemma.
    Spray,
    /// Integrate the geodesic of `[geodesic]` and write a CSV.
    Geodesic,
    /// Projective change by `f`.
    Weyl,
}

#[derive(Debug, Parser)]
#[command(
    name = "algebroid-engine",
    version,
    about = "Connections, sprays and projective changes on generalized Lie algebroids"
)]
pub struct Cli {
    #[arg(value_enum)]
    pub command: Command,
    /// System description (TOML).
    #[arg(long)]
    pub config: PathBuf,
    /// Directory for report.json and CSV output.
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
    /// Overrides `sampling.seed`.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Overrides `tolerances.symbolic_tol`.
    #[arg(long)]
    pub tol: Option<f64>,
    /// Overrides `tolerances.dt`.
    #[arg(long)]
    pub dt: Option<f64>,
}

#[derive(Debug, Default)]
pub struct RunOutput {
    pub reports: Vec<CheckReport>,
    pub trajectory: Option<Trajectory>,
}

impl RunOutput {
    pub fn failed(&self) -> bool {
        self.reports.iter().any(|r| r.status == Status::Fail)
    }
}

/// Four polynomial sections used as generic arguments of identities.
pub fn probe_sections(m: usize, r: usize) -> [TangentSection; 4] {
    let p = |s: String| Expr::parse(&s, m, r).expect("probe expression");
    let x = |i: usize| format!("x{}", i % m + 1);
    let y = |a: usize| format!("y{}", a % r + 1);
    let build = |hf: &dyn Fn(usize) -> String, vf: &dyn Fn(usize) -> String| TangentSection {
        h: (0..r).map(|a| p(hf(a))).collect(),
        v: (0..r).map(|a| p(vf(a))).collect(),
    };
    [
        build(&|a| format!("{} + {}", y(a), x(a)), &|a| format!("1 + {}*{}", x(a + 1), y(a + 1))),
        build(&|a| format!("{}*{} + 1", x(a), y(a + 1)), &|a| format!("{} + {}", x(a + 1), y(a))),
        build(&|a| format!("1 + {}*{}", a + 1, y(a)), &|a| format!("{}*{}", x(a), x(a + 1))),
        build(&|a| format!("{} + {}*{}", x(a + 1), y(a), y(a + 1)), &|a| format!("{} - 1", y(a + 1))),
    ]
}

fn frame_pairs(r: usize) -> Vec<(TangentSection, TangentSection)> {
    let mut out = Vec::new();
    for a in 0..r {
        for b in 0..r {
            out.push((TangentSection::delta(r, a), TangentSection::delta(r, b)));
        }
    }
    out
}

fn notice(check: &str, anchor: &str, note: &str) -> CheckReport {
    CheckReport::new(check, anchor, Status::Inconclusive, 0.0).with_note(note)
}

/// Run one command against a loaded system.
pub fn run(cmd: Command, sys: &System) -> Result<RunOutput> {
    let (m, r) = (sys.cfg.m, sys.cfg.r);
    let tol = sys.cfg.tolerances.symbolic_tol;
    let pts = sys.cfg.sampling.points(m, r);
    let probes = probe_sections(m, r);
    let [px, py, pz, pw] = &probes;
    let mut out = RunOutput::default();
    let reps = &mut out.reports;
    match cmd {
        Command::Validate => {
            reps.extend(sys.alg.validate_axioms(Some(&sys.gh), &pts, tol));
        }
        Command::Frame => {
            let conn = sys.connection()?;
            reps.extend(conn.frame_bracket_check(&pts, tol));
            reps.extend(conn.projector_check(px, &pts, tol));
        }
        Command::Curvature => {
            let conn = sys.connection()?;
            reps.extend(conn.frame_bracket_check(&pts, tol));
            let dc = DConnection::berwald(conn);
            reps.extend(dconn::torsion_check(&dc, &pts, tol));
            reps.extend(dconn::curvature_check(&dc, &pts, tol));
        }
        Command::Identities => {
            let dc = DConnection::berwald(sys.connection()?);
            reps.extend(dconn::ricci_check(&dc, px, &pts, tol));
            reps.extend(dconn::bianchi_check(&dc, [px, py, pz, pw], &pts, tol));
            reps.extend(dconn::split_check(&dc, [px, py, pz, pw], &pts, tol));
            reps.push(dconn::mixed_curvature_check(&dc, [px, py, pz], &pts, tol));
            reps.push(notice(
                "Cartan structure equations",
                "Cartan-type 2-form identities",
                "not evaluated; their content is covered by the torsion and curvature component checks",
            ));
        }
        Command::Spray => {
            let ms = sys.mech()?;
            let hpts = sys.cfg.sampling.clone().away_from_zero().points(m, r);
            reps.push(ms.spray_condition(&hpts, tol));
            reps.push(ms.deviation_check(&hpts, tol));
            reps.push(ms.liouville_pairing(&pts, tol));
            reps.push(ms.closure_check(&pts, tol));
            reps.push(ms.canonical_vs_hs(&pts, tol));
            reps.extend(ms.hs_check(&pts, tol));
            reps.extend(ms.homogeneity_check(&hpts, tol));
            reps.push(ms.nabla_s_u_check(&hpts, tol));
            reps.extend(ms.mixed_curvature_check(&[(px.clone(), py.clone()), (pz.clone(), pw.clone())], &hpts, tol));
            let dc = ms.berwald_nabla();
            let linear = Expr::sum((0..r).map(|a| Expr::y(a).scale((a + 1) as f64)));
            reps.push(mech::hessian_lemma_check(&dc, &linear, &hpts, tol));
            if let Some(f) = &sys.f {
                let h = mech::homog1_check(f, r, &hpts, tol);
                if h.passed() {
                    reps.push(mech::hessian_lemma_check(&dc, f, &hpts, tol));
                }
                reps.push(h);
            }
        }
        Command::Geodesic => {
            let ms = sys.mech()?;
            let gc =
                sys.cfg.geodesic.as_ref().ok_or_else(|| Error::Config("geodesic needs a [geodesic] table".into()))?;
            let dt = sys.cfg.tolerances.dt;
            let field = GeodesicField::new(ms);
            let tr = integrate(&field, &gc.x0, &gc.y0, gc.t1, dt)?;
            let anchor = "geodesics of a mechanical system";
            let mut done = CheckReport::new(
                "integration reached t1",
                anchor,
                if tr.error.is_none() { Status::Pass } else { Status::Fail },
                0.0,
            );
            if let Some(e) = &tr.error {
                done = done.with_note(format!("stopped at t = {}: {e}", tr.last().t));
            }
            reps.push(done);
            let mut worst = (0.0f64, 0usize);
            for (k, s) in tr.states.iter().enumerate() {
                let v = field.transport_residual(&s.x, &s.y)?;
                if v > worst.0 {
                    worst = (v, k);
                }
            }
            let mut tr_rep = CheckReport::new(
                "base velocity equals transported fiber",
                anchor,
                if worst.0 < 1e-12 { Status::Pass } else { Status::Fail },
                worst.0,
            );
            let ws = &tr.states[worst.1];
            tr_rep.worst_point = FiberPoint::new(ws.x.clone(), ws.y.clone());
            reps.push(tr_rep);
            let hpts = sys.cfg.sampling.clone().away_from_zero().points(m, r);
            if ms.spray_condition(&hpts, tol).passed() && tr.error.is_none() {
                // A spray's paths do not depend on the speed. A factor of 3
                // keeps the rescaled arithmetic from being exact.
                let y3: Vec<f64> = gc.y0.iter().map(|v| 3.0 * v).collect();
                let fast = integrate(&field, &gc.x0, &y3, gc.t1 / 3.0, dt / 3.0)?;
                let dev = path_deviation(&tr.base_path(), &fast.base_path());
                reps.push(CheckReport::new(
                    "path independent of initial speed",
                    anchor,
                    if dev < 1e-5 && fast.error.is_none() { Status::Pass } else { Status::Fail },
                    dev,
                ));
            } else {
                reps.push(notice("path independent of initial speed", anchor, "system is not a spray"));
            }
            out.trajectory = Some(tr);
        }
        Command::Weyl => {
            let ms = sys.mech()?;
            let f = sys.f.clone().ok_or_else(|| Error::Config("weyl needs a projective factor f".into()))?;
            let tolr = &sys.cfg.tolerances;
            let hpts = sys.cfg.sampling.clone().away_from_zero().points(m, r);
            let pc = match weyl::make_projective_change(ms, f.clone(), &hpts, tol) {
                Ok(pc) => pc,
                Err(Error::Invalid(msg)) => {
                    let mut h = mech::homog1_check(&f, r, &hpts, tol);
                    h.note = Some(msg);
                    reps.push(h);
                    return Ok(out);
                }
                Err(e) => return Err(e),
            };
            reps.push(mech::homog1_check(&f, r, &hpts, tol));
            reps.push(pc.bar.spray_condition(&hpts, tol));
            let natural: Vec<NaturalSection> =
                probes.iter().map(|s| NaturalSection { a: s.h.clone(), b: s.v.clone() }).collect();
            reps.extend(weyl::hs_relation_check(&pc, &natural, &pts, tol));
            let mut pairs = frame_pairs(r);
            pairs.push((px.clone(), py.clone()));
            pairs.push((pz.clone(), pw.clone()));
            reps.push(weyl::berwald_relation_check(&pc, &pairs, &pts, tol));
            let triples = [[px.clone(), py.clone(), pz.clone()], [pw.clone(), px.clone(), py.clone()]];
            reps.push(weyl::mixed_curvature_change_check(&pc, &triples, &pts, tol));
            if let Some(gc) = &sys.cfg.geodesic {
                let eq = weyl::geodesic_equivalence_check(&pc, &gc.x0, &gc.y0, gc.t1, tolr.dt, tolr.path_tol)?;
                reps.push(eq.deviation);
                reps.push(eq.monotone);
            }
            let rec = weyl::projective_factor(&pc.base, &pc.bar, &hpts, tolr.spread_tol, tol)?;
            reps.push(rec.consistency);
            reps.push(rec.homogeneity);
            reps.push(weyl::round_trip_check(&pc, &hpts, tol.max(1e-8))?);
        }
    }
    Ok(out)
}

pub fn write_outputs(out_dir: &Path, run: &RunOutput) -> io::Result<()> {
    fs::create_dir_all(out_dir)?;
    let json = serde_json::to_string_pretty(&run.reports).map_err(io::Error::other)?;
    fs::write(out_dir.join("report.json"), json + "\n")?;
    if let Some(tr) = &run.trajectory {
        let f = fs::File::create(out_dir.join("geodesic.csv"))?;
        let mut w = io::BufWriter::new(f);
        tr.write_csv(&mut w)?;
        w.flush()?;
    }
    Ok(())
}

fn summary(reps: &[CheckReport]) -> String {
    let count = |s: Status| reps.iter().filter(|r| r.status == s).count();
    format!(
        "{} checks: {} pass, {} fail, {} inconclusive, {} mismatch-flag",
        reps.len(),
        count(Status::Pass),
        count(Status::Fail),
        count(Status::Inconclusive),
        count(Status::MismatchFlag)
    )
}

/// Entry point shared by the binary and the tests. Returns the exit code.
pub fn main_with_args<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = if code == 0 { write!(stdout, "{e}") } else { write!(stderr, "{e}") };
            return code;
        }
    };
    let load = || -> Result<System> {
        let mut cfg = crate::config::SystemConfig::load(&cli.config)?;
        if let Some(s) = cli.seed {
            cfg.sampling.seed = s;
        }
        if let Some(t) = cli.tol {
            cfg.tolerances.symbolic_tol = t;
        }
        if let Some(dt) = cli.dt {
            cfg.tolerances.dt = dt;
        }
        cfg.build()
    };
    let sys = match load() {
        Ok(s) => s,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            return 2;
        }
    };
    let run_out = match run(cli.command, &sys) {
        Ok(o) => o,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            return 2;
        }
    };
    let name = sys.cfg.name.clone().unwrap_or_else(|| cli.config.display().to_string());
    let _ = writeln!(stdout, "{:?} on {name}", cli.command);
    for rep in &run_out.reports {
        let _ = writeln!(stdout, "{rep}");
    }
    let _ = writeln!(stdout, "{}", summary(&run_out.reports));
    if let Err(e) = write_outputs(&cli.out, &run_out) {
        let _ = writeln!(stderr, "error: writing to {}: {e}", cli.out.display());
        return 2;
    }
    i32::from(run_out.failed())
}
