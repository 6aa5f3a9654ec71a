//! Geodesics of mechanical systems, parallel lifts along base curves, and
//! the fixed-step RK4 integrator behind both.

use std::io::{self, Write};

use serde::Serialize;

use crate::connection::NlConnection;
use crate::error::{Error, Result};
use crate::expr::Expr;
use crate::mech::MechSystem;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct OdeState {
    pub t: f64,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
}

#[derive(Clone, Debug)]
pub struct Trajectory {
    pub states: Vec<OdeState>,
    pub dt: f64,
    pub t0: f64,
    pub t1: f64,
    /// Set when a field evaluation failed; `states` then stops early.
    pub error: Option<Error>,
}

/// Classical RK4 with a uniform step. The step is adjusted so that `t1` is
/// hit exactly; node times are `t0 + k·h`.
pub fn rk4<F>(f: F, t0: f64, z0: Vec<f64>, t1: f64, dt: f64) -> Result<(Vec<(f64, Vec<f64>)>, f64, Option<Error>)>
where
    F: Fn(f64, &[f64]) -> Result<Vec<f64>>,
{
    if !(dt > 0.0) || !(t1 > t0) || !dt.is_finite() || !t1.is_finite() {
        return Err(Error::Invalid(format!("need dt > 0 and t1 > t0 (dt = {dt}, t0 = {t0}, t1 = {t1})")));
    }
    let n = ((t1 - t0) / dt).round().max(1.0) as usize;
    let h = (t1 - t0) / n as f64;
    let axpy = |z: &[f64], k: &[f64], s: f64| -> Vec<f64> { z.iter().zip(k).map(|(a, b)| a + s * b).collect() };
    let mut out = Vec::with_capacity(n + 1);
    out.push((t0, z0.clone()));
    let mut z = z0;
    for step in 0..n {
        let t = t0 + step as f64 * h;
        let stage = || -> Result<Vec<f64>> {
            let k1 = f(t, &z)?;
            let k2 = f(t + h / 2.0, &axpy(&z, &k1, h / 2.0))?;
            let k3 = f(t + h / 2.0, &axpy(&z, &k2, h / 2.0))?;
            let k4 = f(t + h, &axpy(&z, &k3, h))?;
            Ok((0..z.len()).map(|i| z[i] + h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i])).collect())
        };
        match stage() {
            Ok(next) => {
                if next.iter().any(|v| !v.is_finite()) {
                    return Ok((out, h, Some(Error::Domain(format!("non-finite state at t = {}", t + h)))));
                }
                z = next;
                out.push((t0 + (step + 1) as f64 * h, z.clone()));
            }
            Err(e) => return Ok((out, h, Some(e))),
        }
    }
    Ok((out, h, None))
}

/// Right-hand side of the geodesic system as expressions in `(x, y)`:
/// `d(η∘h∘c)/dt = ρ(η∘h∘c) g(h∘c) y` solved for `ċ`, and
/// `dy/dt = −2(G − F/4)` evaluated over `η∘h∘c`.
#[derive(Clone, Debug)]
pub struct GeodesicField {
    pub m: usize,
    pub r: usize,
    pub xdot: Vec<Expr>,
    pub ydot: Vec<Expr>,
    /// `ρ(η h x) g(h x) y`, the anchor-transported fiber.
    pub transported: Vec<Expr>,
    /// Jacobian of `η∘h` at `x`, `[j][i]`.
    pub jac: Vec<Vec<Expr>>,
}

impl GeodesicField {
    pub fn new(sys: &MechSystem) -> Self {
        let (m, r) = (sys.m(), sys.r());
        let alg = &sys.alg;
        let k = alg.eta.after(&alg.h);
        let kinv = crate::algebroid::DiffeoMap { fwd: k.inv.clone(), inv: k.fwd.clone() };
        let jinv: Vec<Vec<Expr>> =
            kinv.jacobian().into_iter().map(|row| row.into_iter().map(|e| e.compose_base(&k.fwd)).collect()).collect();
        let transported: Vec<Expr> = (0..m)
            .map(|j| Expr::sum((0..r).map(|b| alg.rho[j][b].compose_base(&k.fwd) * sys.lifted_fiber(b))))
            .collect();
        let xdot = (0..m).map(|i| Expr::sum((0..m).map(|j| &jinv[i][j] * &transported[j]))).collect();
        let ydot = (0..r).map(|a| sys.ghat(a).compose_base(&k.fwd).scale(-2.0)).collect();
        GeodesicField { m, r, xdot, ydot, transported, jac: k.jacobian() }
    }

    pub fn eval(&self, x: &[f64], y: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
        let dx = self.xdot.iter().map(|e| e.eval(x, y)).collect::<Result<_>>()?;
        let dy = self.ydot.iter().map(|e| e.eval(x, y)).collect::<Result<_>>()?;
        Ok((dx, dy))
    }

    /// `|J_{η∘h}(x)·ẋ − ρ(η h x) g(h x) y|`, which vanishes identically.
    pub fn transport_residual(&self, x: &[f64], y: &[f64]) -> Result<f64> {
        let (dx, _) = self.eval(x, y)?;
        let mut worst = 0.0f64;
        for j in 0..self.m {
            let mut s = 0.0;
            for (i, dxi) in dx.iter().enumerate() {
                s += self.jac[j][i].eval(x, y)? * dxi;
            }
            worst = worst.max((s - self.transported[j].eval(x, y)?).abs());
        }
        Ok(worst)
    }

    /// The flat state vector `(x, y)` and its derivative.
    pub fn rhs(&self, z: &[f64]) -> Result<Vec<f64>> {
        let (x, y) = z.split_at(self.m);
        let (mut dx, dy) = self.eval(x, y)?;
        dx.extend(dy);
        Ok(dx)
    }
}

pub fn integrate(field: &GeodesicField, x0: &[f64], y0: &[f64], t1: f64, dt: f64) -> Result<Trajectory> {
    if x0.len() != field.m || y0.len() != field.r {
        return Err(Error::Dimension(format!("initial state must have {} + {} entries", field.m, field.r)));
    }
    let z0: Vec<f64> = x0.iter().chain(y0).copied().collect();
    let (nodes, h, error) = rk4(|_, z| field.rhs(z), 0.0, z0, t1, dt)?;
    let states =
        nodes.into_iter().map(|(t, z)| OdeState { t, x: z[..field.m].to_vec(), y: z[field.m..].to_vec() }).collect();
    Ok(Trajectory { states, dt: h, t0: 0.0, t1, error })
}

/// Format with 17 significant digits so values round-trip exactly.
pub fn fmt17(v: f64) -> String {
    format!("{v:.16e}")
}

impl Trajectory {
    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        let (m, r) = self.states.first().map(|s| (s.x.len(), s.y.len())).unwrap_or((0, 0));
        let mut head = vec!["t".to_string()];
        head.extend((1..=m).map(|i| format!("x{i}")));
        head.extend((1..=r).map(|a| format!("y{a}")));
        writeln!(w, "{}", head.join(","))?;
        for s in &self.states {
            let row: Vec<String> =
                std::iter::once(s.t).chain(s.x.iter().copied()).chain(s.y.iter().copied()).map(fmt17).collect();
            writeln!(w, "{}", row.join(","))?;
        }
        Ok(())
    }

    pub fn base_path(&self) -> Vec<Vec<f64>> {
        self.states.iter().map(|s| s.x.clone()).collect()
    }

    pub fn last(&self) -> &OdeState {
        self.states.last().expect("trajectory has at least the initial state")
    }
}

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(u, v)| (u - v).powi(2)).sum::<f64>().sqrt()
}

/// Resample a polyline at `n` nodes equally spaced in normalized arc length.
pub fn resample_arclength(path: &[Vec<f64>], n: usize) -> Vec<Vec<f64>> {
    let mut cum = vec![0.0];
    for w in path.windows(2) {
        cum.push(cum.last().unwrap() + dist(&w[0], &w[1]));
    }
    let total = *cum.last().unwrap();
    if total == 0.0 || n < 2 {
        return vec![path[0].clone(); n];
    }
    let mut out = Vec::with_capacity(n);
    let mut seg = 0;
    for k in 0..n {
        let s = total * k as f64 / (n - 1) as f64;
        while seg + 2 < cum.len() && cum[seg + 1] < s {
            seg += 1;
        }
        let len = cum[seg + 1] - cum[seg];
        let lam = if len > 0.0 { ((s - cum[seg]) / len).clamp(0.0, 1.0) } else { 0.0 };
        out.push(path[seg].iter().zip(&path[seg + 1]).map(|(a, b)| a + lam * (b - a)).collect());
    }
    out
}

/// Max Euclidean deviation between two paths after arc-length resampling
/// at 256 nodes.
pub fn path_deviation(a: &[Vec<f64>], b: &[Vec<f64>]) -> f64 {
    const NODES: usize = 256;
    let (ra, rb) = (resample_arclength(a, NODES), resample_arclength(b, NODES));
    ra.iter().zip(&rb).map(|(u, v)| dist(u, v)).fold(0.0, f64::max)
}

/// Parallel `(g,h)`-lift along a base curve:
/// `du^a/dt = −Γ^a_d(η h c(t), u) g^d_b(h c(t)) u^b`.
pub struct ParallelLift<'a> {
    pub conn: &'a NlConnection,
    /// Base curve `c(t)`.
    pub curve: &'a dyn Fn(f64) -> Vec<f64>,
}

impl ParallelLift<'_> {
    pub fn rhs(&self, t: f64, u: &[f64]) -> Result<Vec<f64>> {
        let alg = &self.conn.alg;
        let c = (self.curve)(t);
        let hc = alg.h.eval(&c)?;
        let ehc = alg.eta.eval(&hc)?;
        let r = self.conn.r();
        let mut gu = vec![0.0; r];
        for (d, slot) in gu.iter_mut().enumerate() {
            for (b, ub) in u.iter().enumerate() {
                *slot += self.conn.gh.g[d][b].eval(&hc, &[])? * ub;
            }
        }
        (0..r)
            .map(|a| {
                let mut s = 0.0;
                for (d, gd) in gu.iter().enumerate() {
                    s += self.conn.gamma(a, d).eval(&ehc, u)? * gd;
                }
                Ok(-s)
            })
            .collect()
    }

    pub fn integrate(&self, u0: &[f64], t1: f64, dt: f64) -> Result<Trajectory> {
        let (nodes, h, error) = rk4(|t, u| self.rhs(t, u), 0.0, u0.to_vec(), t1, dt)?;
        let states = nodes.into_iter().map(|(t, u)| OdeState { x: (self.curve)(t), t, y: u }).collect();
        Ok(Trajectory { states, dt: h, t0: 0.0, t1, error })
    }

    /// Max residual of the lift equation on interior nodes, with `du/dt`
    /// from a five-point central stencil.
    pub fn residual(&self, traj: &Trajectory) -> Result<f64> {
        let s = &traj.states;
        let h = traj.dt;
        let mut worst = 0.0f64;
        for k in 2..s.len().saturating_sub(2) {
            let rhs = self.rhs(s[k].t, &s[k].y)?;
            for (a, ra) in rhs.iter().enumerate() {
                let d = (s[k - 2].y[a] - 8.0 * s[k - 1].y[a] + 8.0 * s[k + 1].y[a] - s[k + 2].y[a]) / (12.0 * h);
                worst = worst.max((d - ra).abs());
            }
        }
        Ok(worst)
    }
}
