//! Check results shared by every module and serialized by the CLI.

use std::fmt;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::expr::{Expr, FiberPoint, Tape};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Status {
    Pass,
    Fail,
    Inconclusive,
    /// A formula reproduced as printed disagrees with its independent
    /// evaluation. Informational; does not fail a run.
    MismatchFlag,
}

impl fmt::Display for Status {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Status::Pass => "pass",
            Status::Fail => "fail",
            Status::Inconclusive => "inconclusive",
            Status::MismatchFlag => "mismatch-flag",
        })
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct CheckReport {
    pub check: String,
    pub status: Status,
    pub max_residual: f64,
    pub worst_point: FiberPoint,
    pub anchor: String,
    #[serde(skip)]
    pub note: Option<String>,
}

impl CheckReport {
    pub fn new(check: impl Into<String>, anchor: impl Into<String>, status: Status, max_residual: f64) -> Self {
        CheckReport {
            check: check.into(),
            status,
            max_residual,
            worst_point: FiberPoint::new(vec![], vec![]),
            anchor: anchor.into(),
            note: None,
        }
    }

    pub fn with_note(mut self, note: impl Into<String>) -> Self {
        self.note = Some(note.into());
        self
    }

    pub fn passed(&self) -> bool {
        self.status == Status::Pass
    }

    /// Turn a failure into a mismatch flag (used for formulas reproduced as printed).
    pub fn as_flag(mut self) -> Self {
        if self.status == Status::Fail {
            self.status = Status::MismatchFlag;
        }
        self
    }
}

impl fmt::Display for CheckReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{:<13}] {:<48} max residual {:.3e}", self.status.to_string(), self.check, self.max_residual)?;
        if !self.worst_point.x.is_empty() || !self.worst_point.y.is_empty() {
            write!(f, " at x={:?} y={:?}", self.worst_point.x, self.worst_point.y)?;
        }
        if let Some(n) = &self.note {
            write!(f, " ({n})")?;
        }
        Ok(())
    }
}

/// Outcome of evaluating a residual over a sample set.
#[derive(Clone, Debug)]
pub struct Scan {
    pub max: f64,
    pub worst: Option<FiberPoint>,
    pub evaluated: usize,
    pub skipped: usize,
    pub first_error: Option<Error>,
}

impl Scan {
    pub fn empty() -> Self {
        Scan { max: 0.0, worst: None, evaluated: 0, skipped: 0, first_error: None }
    }

    fn push(&mut self, p: &FiberPoint, r: Result<f64>) {
        match r {
            Ok(v) => {
                self.evaluated += 1;
                let v = if v.is_nan() { f64::INFINITY } else { v };
                if v > self.max || self.worst.is_none() {
                    self.max = v;
                    self.worst = Some(p.clone());
                }
            }
            Err(e) => {
                self.skipped += 1;
                if self.first_error.is_none() {
                    self.first_error = Some(e);
                }
            }
        }
    }

    pub fn merge(mut self, other: Scan) -> Scan {
        if other.evaluated > 0 && (other.max > self.max || self.worst.is_none()) {
            self.max = other.max;
            self.worst = other.worst;
        }
        self.evaluated += other.evaluated;
        self.skipped += other.skipped;
        if self.first_error.is_none() {
            self.first_error = other.first_error;
        }
        self
    }

    pub fn report(self, check: impl Into<String>, anchor: impl Into<String>, tol: f64) -> CheckReport {
        let status = if self.evaluated == 0 {
            Status::Inconclusive
        } else if self.max < tol {
            Status::Pass
        } else {
            Status::Fail
        };
        let mut rep = CheckReport::new(check, anchor, status, self.max);
        if let Some(w) = self.worst {
            rep.worst_point = w;
        }
        if self.skipped > 0 {
            let why = self.first_error.map(|e| e.to_string()).unwrap_or_default();
            rep.note = Some(format!("{} sample(s) skipped: {why}", self.skipped));
        }
        rep
    }
}

/// Evaluate `f` at every point (in parallel) and keep the largest value.
/// Ties resolve to the earliest point so results are deterministic.
pub fn scan<F>(points: &[FiberPoint], f: F) -> Scan
where
    F: Fn(&FiberPoint) -> Result<f64> + Sync,
{
    let values: Vec<Result<f64>> = points.par_iter().map(&f).collect();
    let mut s = Scan::empty();
    for (p, v) in points.iter().zip(values) {
        s.push(p, v);
    }
    s
}

/// Largest absolute value among `exprs` at `p`.
pub fn max_abs(exprs: &[Expr], p: &FiberPoint) -> Result<f64> {
    let mut m = 0.0f64;
    for e in exprs {
        m = m.max(e.eval_at(p)?.abs());
    }
    Ok(m)
}

/// Largest absolute difference between paired expressions at `p`.
pub fn max_abs_diff(a: &[Expr], b: &[Expr], p: &FiberPoint) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::Dimension(format!("{} vs {} components", a.len(), b.len())));
    }
    let mut m = 0.0f64;
    for (u, v) in a.iter().zip(b) {
        m = m.max((u.eval_at(p)? - v.eval_at(p)?).abs());
    }
    Ok(m)
}

/// `scan` of `max_abs`, compiling the expressions once so shared
/// subtrees are evaluated once per point.
pub fn scan_max_abs(points: &[FiberPoint], exprs: &[Expr]) -> Scan {
    let tape = Tape::new(exprs);
    scan(points, |p| tape.max_abs(&p.x, &p.y))
}

/// `scan` of `max_abs_diff` on a shared tape.
pub fn scan_max_abs_diff(points: &[FiberPoint], a: &[Expr], b: &[Expr]) -> Scan {
    if a.len() != b.len() {
        let e = Error::Dimension(format!("{} vs {} components", a.len(), b.len()));
        return scan(points, |_| Err(e.clone()));
    }
    let tape = Tape::new(&[a, b].concat());
    let n = a.len();
    scan(points, |p| {
        let v = tape.eval(&p.x, &p.y)?;
        Ok((0..n).fold(0.0, |m: f64, k| m.max((v[k] - v[n + k]).abs())))
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scan_keeps_first_worst_point() {
        let pts: Vec<FiberPoint> = (0..4).map(|i| FiberPoint::new(vec![i as f64], vec![])).collect();
        let s = scan(&pts, |p| Ok(if p.x[0] >= 2.0 { 1.0 } else { 0.5 }));
        assert_eq!(s.max, 1.0);
        assert_eq!(s.worst.unwrap().x, vec![2.0]);
    }

    #[test]
    fn all_skipped_is_inconclusive() {
        let pts = vec![FiberPoint::new(vec![0.0], vec![])];
        let s = scan(&pts, |_| Err(Error::Domain("x".into())));
        assert_eq!(s.report("c", "a", 1.0).status, Status::Inconclusive);
    }

    #[test]
    fn serializes_schema_keys() {
        let r = CheckReport::new("c", "a", Status::MismatchFlag, 0.5);
        let j = serde_json::to_string(&r).unwrap();
        assert_eq!(
            j,
            r#"{"check":"c","status":"mismatch-flag","max_residual":0.5,"worst_point":{"x":[],"y":[]},"anchor":"a"}"#
        );
    }
}
