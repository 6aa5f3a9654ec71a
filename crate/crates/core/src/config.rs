//! TOML system descriptions. Every field is a string in the expression
//! grammar; indices in `L` entries are 1-based like the math.
//!
//! ```toml
//! m = 2
//! r = 2
//! rho = [["1", "x1^2"], ["0", "1"]]        # rho[i][a]
//! L = [{ c = 1, a = 1, b = 2, expr = "2*x1" }]
//! h = { fwd = ["x1 + 0.5", "x2"], inv = ["x1 - 0.5", "x2"] }
//! G = ["x1*y1^2", "y2^2"]
//! f = "y1 + y2"
//!
//! [sampling]
//! count = 100
//! seed = 42
//! ```
//!
//! Omitted `rho`, `h`, `eta`, `g`, `gtil` default to identities, `L` and
//! `F` to zero. `Gamma[a][c]` is optional; without it the connection is
//! the one induced by the spray `G`.

use std::path::Path;
use std::sync::Arc;

use serde::Deserialize;

use crate::algebroid::{DiffeoMap, GenAlgebroid, GhMorphism, StructureFunctions};
use crate::connection::NlConnection;
use crate::error::{Error, Result};
use crate::expr::Expr;
use crate::mech::MechSystem;
use crate::sampling::SampleSpec;

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MapConfig {
    pub fwd: Vec<String>,
    pub inv: Vec<String>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LEntry {
    pub c: usize,
    pub a: usize,
    pub b: usize,
    pub expr: String,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    pub symbolic_tol: f64,
    pub fd_tol: f64,
    pub dt: f64,
    /// Arc-length path deviation allowed between projectively related geodesics.
    pub path_tol: f64,
    /// Cross-index spread allowed when recovering a projective factor.
    pub spread_tol: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances { symbolic_tol: 1e-9, fd_tol: 1e-6, dt: 1e-3, path_tol: 1e-4, spread_tol: 1e-6 }
    }
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeodesicConfig {
    pub x0: Vec<f64>,
    pub y0: Vec<f64>,
    pub t1: f64,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemConfig {
    #[serde(default)]
    pub name: Option<String>,
    pub m: usize,
    pub r: usize,
    #[serde(default)]
    pub rho: Option<Vec<Vec<String>>>,
    #[serde(default, rename = "L")]
    pub l: Vec<LEntry>,
    #[serde(default)]
    pub h: Option<MapConfig>,
    #[serde(default)]
    pub eta: Option<MapConfig>,
    #[serde(default)]
    pub g: Option<Vec<Vec<String>>>,
    #[serde(default)]
    pub gtil: Option<Vec<Vec<String>>>,
    #[serde(default, rename = "Gamma")]
    pub gamma: Option<Vec<Vec<String>>>,
    #[serde(default, rename = "G")]
    pub spray: Option<Vec<String>>,
    #[serde(default, rename = "F")]
    pub force: Option<Vec<String>>,
    #[serde(default)]
    pub f: Option<String>,
    #[serde(default)]
    pub sampling: SampleSpec,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default)]
    pub geodesic: Option<GeodesicConfig>,
}

/// A parsed configuration with every expression built.
#[derive(Clone, Debug)]
pub struct System {
    pub cfg: SystemConfig,
    pub alg: Arc<GenAlgebroid>,
    pub gh: Arc<GhMorphism>,
    pub gamma: Option<Vec<Vec<Expr>>>,
    pub mech: Option<MechSystem>,
    pub f: Option<Expr>,
}

fn parse_at(field: &str, src: &str, m: usize, r: usize) -> Result<Expr> {
    Expr::parse(src, m, r).map_err(|e| Error::Config(format!("{field}: {e} in '{src}'")))
}

fn vector(field: &str, v: &[String], n: usize, m: usize, r: usize) -> Result<Vec<Expr>> {
    if v.len() != n {
        return Err(Error::Config(format!("{field} needs {n} entries, got {}", v.len())));
    }
    v.iter().enumerate().map(|(i, s)| parse_at(&format!("{field}[{}]", i + 1), s, m, r)).collect()
}

fn matrix(field: &str, v: &[Vec<String>], rows: usize, cols: usize, m: usize, r: usize) -> Result<Vec<Vec<Expr>>> {
    if v.len() != rows {
        return Err(Error::Config(format!("{field} needs {rows} rows, got {}", v.len())));
    }
    v.iter().enumerate().map(|(i, row)| vector(&format!("{field}[{}]", i + 1), row, cols, m, r)).collect()
}

fn identity(n: usize, m: usize) -> Vec<Vec<Expr>> {
    (0..n).map(|i| (0..m).map(|a| if i == a { Expr::one() } else { Expr::zero() }).collect()).collect()
}

impl SystemConfig {
    pub fn from_toml(src: &str) -> Result<Self> {
        let cfg: SystemConfig = toml::from_str(src).map_err(|e| Error::Config(e.to_string()))?;
        if cfg.m == 0 || cfg.r == 0 {
            return Err(Error::Config("m and r must be positive".into()));
        }
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let src = std::fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Self::from_toml(&src)
    }

    pub fn build(self) -> Result<System> {
        let (m, r) = (self.m, self.r);
        let rho = match &self.rho {
            Some(v) => matrix("rho", v, m, r, m, 0)?,
            None if m == r => identity(m, r),
            None => return Err(Error::Config("rho is required when m != r".into())),
        };
        let mut l = StructureFunctions::zero(r);
        for e in &self.l {
            if e.c == 0 || e.a == 0 || e.b == 0 {
                return Err(Error::Config("L indices are 1-based".into()));
            }
            let field = format!("L^{}_{{{}{}}}", e.c, e.a, e.b);
            l.set(e.c - 1, e.a - 1, e.b - 1, parse_at(&field, &e.expr, m, 0)?)
                .map_err(|err| Error::Config(format!("{field}: {err}")))?;
        }
        let map = |name: &str, mc: &Option<MapConfig>| -> Result<DiffeoMap> {
            match mc {
                None => Ok(DiffeoMap::identity(m)),
                Some(mc) => DiffeoMap::new(
                    vector(&format!("{name}.fwd"), &mc.fwd, m, m, 0)?,
                    vector(&format!("{name}.inv"), &mc.inv, m, m, 0)?,
                ),
            }
        };
        let alg = Arc::new(GenAlgebroid::new(m, r, rho, l, map("h", &self.h)?, map("eta", &self.eta)?)?);
        let gh = match (&self.g, &self.gtil) {
            (None, None) => GhMorphism::identity(&alg),
            (Some(g), Some(gt)) => GhMorphism::new(&alg, matrix("g", g, r, r, m, 0)?, matrix("gtil", gt, r, r, m, 0)?)?,
            _ => return Err(Error::Config("g and gtil must be given together".into())),
        };
        let gh = Arc::new(gh);
        let gamma = self.gamma.as_ref().map(|v| matrix("Gamma", v, r, r, m, r)).transpose()?;
        let mech = match &self.spray {
            Some(g) => {
                let g = vector("G", g, r, m, r)?;
                let force = match &self.force {
                    Some(fv) => vector("F", fv, r, m, r)?,
                    None => vec![Expr::zero(); r],
                };
                Some(MechSystem::new(alg.clone(), gh.clone(), g, force)?)
            }
            None if self.force.is_some() => return Err(Error::Config("F given without G".into())),
            None => None,
        };
        let f = self.f.as_ref().map(|s| parse_at("f", s, m, r)).transpose()?;
        if let Some(geo) = &self.geodesic {
            if geo.x0.len() != m || geo.y0.len() != r {
                return Err(Error::Config(format!("geodesic.x0/y0 need {m} and {r} entries")));
            }
        }
        Ok(System { cfg: self, alg, gh, gamma, mech, f })
    }
}

impl System {
    pub fn load(path: &Path) -> Result<Self> {
        SystemConfig::load(path)?.build()
    }

    /// `Gamma` if given, else the connection induced by the spray.
    pub fn connection(&self) -> Result<NlConnection> {
        match (&self.gamma, &self.mech) {
            (Some(g), _) => NlConnection::new(self.alg.clone(), self.gh.clone(), g.clone()),
            (None, Some(mech)) => Ok(mech.hs_connection()),
            (None, None) => Err(Error::Config("need Gamma or G to define a connection".into())),
        }
    }

    pub fn mech(&self) -> Result<&MechSystem> {
        self.mech.as_ref().ok_or_else(|| Error::Config("this command needs G".into()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_config_defaults_to_identities() {
        let sys = SystemConfig::from_toml("m = 2\nr = 2\nG = [\"0\", \"0\"]").unwrap().build().unwrap();
        assert!(sys.alg.h.is_identity() && sys.gh.is_identity());
        assert_eq!(sys.cfg.tolerances.dt, 1e-3);
        assert!(sys.connection().is_ok());
    }

    #[test]
    fn errors_name_the_field() {
        let e = SystemConfig::from_toml("m = 1\nr = 1\nG = [\"y1 +\"]").unwrap().build().unwrap_err();
        assert!(e.to_string().contains("G[1]"), "{e}");
        let e = SystemConfig::from_toml("m = 1\nr = 1\nrho = [[\"y1\"]]").unwrap().build().unwrap_err();
        assert!(e.to_string().contains("rho[1][1]"), "{e}");
        assert!(SystemConfig::from_toml("m = 1\nr = 1\nbogus = 3").is_err());
        let e = SystemConfig::from_toml("m = 2\nr = 2\nL = [{c = 1, a = 1, b = 1, expr = \"x1\"}]").unwrap().build();
        assert!(e.is_err());
    }
}
