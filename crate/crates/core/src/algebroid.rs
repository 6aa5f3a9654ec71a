//! Generalized Lie algebroids in one global chart: anchor `ρ^i_a`,
//! structure functions `L^c_{ab}`, and the base diffeomorphisms `h`, `η`.

use crate::error::{Error, Result};
use crate::expr::{Expr, FiberPoint};
use crate::report::{scan, scan_max_abs, CheckReport, Scan};

/// A diffeomorphism of the base together with its user-supplied inverse.
#[derive(Clone, Debug, PartialEq)]
pub struct DiffeoMap {
    pub fwd: Vec<Expr>,
    pub inv: Vec<Expr>,
}

impl DiffeoMap {
    pub fn identity(m: usize) -> Self {
        let id: Vec<Expr> = (0..m).map(Expr::x).collect();
        DiffeoMap { fwd: id.clone(), inv: id }
    }

    pub fn new(fwd: Vec<Expr>, inv: Vec<Expr>) -> Result<Self> {
        if fwd.len() != inv.len() {
            return Err(Error::Dimension(format!("map has {} components, inverse {}", fwd.len(), inv.len())));
        }
        let m = fwd.len();
        for e in fwd.iter().chain(&inv) {
            if e.depends_on_fiber() {
                return Err(Error::Invalid(format!("base map component '{e}' depends on fiber coordinates")));
            }
            e.check_arity(m, 0)?;
        }
        Ok(DiffeoMap { fwd, inv })
    }

    pub fn dim(&self) -> usize {
        self.fwd.len()
    }

    pub fn is_identity(&self) -> bool {
        self.fwd.iter().chain(&self.inv).enumerate().all(|(k, e)| *e == Expr::x(k % self.dim()))
    }

    /// `self ∘ other` with inverse `other⁻¹ ∘ self⁻¹`.
    pub fn after(&self, other: &DiffeoMap) -> DiffeoMap {
        DiffeoMap {
            fwd: self.fwd.iter().map(|e| e.compose_base(&other.fwd)).collect(),
            inv: other.inv.iter().map(|e| e.compose_base(&self.inv)).collect(),
        }
    }

    /// Jacobian `J[j][i] = ∂fwd^j/∂x^i`.
    pub fn jacobian(&self) -> Vec<Vec<Expr>> {
        self.fwd.iter().map(|e| (0..self.dim()).map(|i| e.dx(i)).collect()).collect()
    }

    pub fn eval(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.fwd.iter().map(|e| e.eval(x, &[])).collect()
    }

    pub fn eval_inv(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.inv.iter().map(|e| e.eval(x, &[])).collect()
    }

    /// Max of `|fwd(inv(x)) - x|` and `|inv(fwd(x)) - x|` at `p`.
    pub fn inverse_residual(&self, p: &FiberPoint) -> Result<f64> {
        let a = self.eval(&self.eval_inv(&p.x)?)?;
        let b = self.eval_inv(&self.eval(&p.x)?)?;
        Ok(a.iter().chain(&b).zip(p.x.iter().chain(&p.x)).map(|(u, v)| (u - v).abs()).fold(0.0, f64::max))
    }
}

/// `L^c_{ab}` with antisymmetry built in: only `a < b` is stored.
#[derive(Clone, Debug, PartialEq)]
pub struct StructureFunctions {
    r: usize,
    upper: Vec<Expr>,
}

impl StructureFunctions {
    pub fn zero(r: usize) -> Self {
        let pairs = r * r.saturating_sub(1) / 2;
        StructureFunctions { r, upper: vec![Expr::zero(); r * pairs] }
    }

    pub fn rank(&self) -> usize {
        self.r
    }

    fn slot(&self, c: usize, a: usize, b: usize) -> usize {
        debug_assert!(a < b && b < self.r);
        let pair = a * (2 * self.r - a - 1) / 2 + (b - a - 1);
        c * (self.r * (self.r - 1) / 2) + pair
    }

    /// Set `L^c_{ab}` (and implicitly `L^c_{ba} = -L^c_{ab}`).
    pub fn set(&mut self, c: usize, a: usize, b: usize, e: Expr) -> Result<()> {
        if c >= self.r || a >= self.r || b >= self.r {
            return Err(Error::Dimension(format!("structure index ({c},{a},{b}) out of range for rank {}", self.r)));
        }
        match a.cmp(&b) {
            std::cmp::Ordering::Less => {
                let s = self.slot(c, a, b);
                self.upper[s] = e;
            }
            std::cmp::Ordering::Greater => {
                let s = self.slot(c, b, a);
                self.upper[s] = Expr::neg(e);
            }
            std::cmp::Ordering::Equal => {
                if !e.is_zero() {
                    return Err(Error::Invalid(format!(
                        "L^{}_{{{}{}}} must vanish by antisymmetry",
                        c + 1,
                        a + 1,
                        a + 1
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn get(&self, c: usize, a: usize, b: usize) -> Expr {
        match a.cmp(&b) {
            std::cmp::Ordering::Less => self.upper[self.slot(c, a, b)].clone(),
            std::cmp::Ordering::Greater => Expr::neg(self.upper[self.slot(c, b, a)].clone()),
            std::cmp::Ordering::Equal => Expr::zero(),
        }
    }

    pub fn map(&self, f: impl Fn(&Expr) -> Expr) -> Self {
        StructureFunctions { r: self.r, upper: self.upper.iter().map(f).collect() }
    }

    pub fn is_zero(&self) -> bool {
        self.upper.iter().all(Expr::is_zero)
    }

    fn exprs(&self) -> impl Iterator<Item = &Expr> {
        self.upper.iter()
    }
}

/// Invertible bundle map `g^a_b` with user-supplied inverse `g̃^b_a`, both
/// stored row-major by upper index: `g[a][b] = g^a_b`.
#[derive(Clone, Debug, PartialEq)]
pub struct GhMorphism {
    pub g: Vec<Vec<Expr>>,
    pub gtil: Vec<Vec<Expr>>,
    g_h: Vec<Vec<Expr>>,
    gtil_h: Vec<Vec<Expr>>,
}

impl GhMorphism {
    pub fn identity(alg: &GenAlgebroid) -> Self {
        let r = alg.r;
        let id: Vec<Vec<Expr>> =
            (0..r).map(|a| (0..r).map(|b| if a == b { Expr::one() } else { Expr::zero() }).collect()).collect();
        GhMorphism::new(alg, id.clone(), id).expect("identity morphism is valid")
    }

    pub fn new(alg: &GenAlgebroid, g: Vec<Vec<Expr>>, gtil: Vec<Vec<Expr>>) -> Result<Self> {
        let r = alg.r;
        for (name, mat) in [("g", &g), ("gtil", &gtil)] {
            if mat.len() != r || mat.iter().any(|row| row.len() != r) {
                return Err(Error::Dimension(format!("{name} must be {r}x{r}")));
            }
            for e in mat.iter().flatten() {
                if e.depends_on_fiber() {
                    return Err(Error::Invalid(format!("{name} component '{e}' depends on fiber coordinates")));
                }
                e.check_arity(alg.m, 0)?;
            }
        }
        let compose = |mat: &Vec<Vec<Expr>>| -> Vec<Vec<Expr>> {
            mat.iter().map(|row| row.iter().map(|e| e.compose_base(&alg.h.fwd)).collect()).collect()
        };
        let g_h = compose(&g);
        let gtil_h = compose(&gtil);
        Ok(GhMorphism { g, gtil, g_h, gtil_h })
    }

    /// `g^a_b ∘ h`.
    pub fn g_h(&self, a: usize, b: usize) -> &Expr {
        &self.g_h[a][b]
    }

    /// `g̃^a_b ∘ h`.
    pub fn gtil_h(&self, a: usize, b: usize) -> &Expr {
        &self.gtil_h[a][b]
    }

    pub fn is_identity(&self) -> bool {
        let r = self.g.len();
        (0..r).all(|a| {
            (0..r).all(|b| {
                let want = if a == b { 1.0 } else { 0.0 };
                self.g[a][b].as_num() == Some(want) && self.gtil[a][b].as_num() == Some(want)
            })
        })
    }

    /// Max of `|g̃ g - I|` at `p` (base part only).
    pub fn inverse_residual(&self, p: &FiberPoint) -> Result<f64> {
        let r = self.g.len();
        let mut worst = 0.0f64;
        for b in 0..r {
            for a in 0..r {
                let mut s = 0.0;
                for c in 0..r {
                    s += self.gtil[b][c].eval_at(p)? * self.g[c][a].eval_at(p)?;
                }
                let want = if a == b { 1.0 } else { 0.0 };
                worst = worst.max((s - want).abs());
            }
        }
        Ok(worst)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct GenAlgebroid {
    pub m: usize,
    pub r: usize,
    /// `rho[i][a] = ρ^i_a`.
    pub rho: Vec<Vec<Expr>>,
    pub l: StructureFunctions,
    pub h: DiffeoMap,
    pub eta: DiffeoMap,
    rho_h: Vec<Vec<Expr>>,
    l_h: StructureFunctions,
}

impl GenAlgebroid {
    pub fn new(
        m: usize,
        r: usize,
        rho: Vec<Vec<Expr>>,
        l: StructureFunctions,
        h: DiffeoMap,
        eta: DiffeoMap,
    ) -> Result<Self> {
        if rho.len() != m || rho.iter().any(|row| row.len() != r) {
            return Err(Error::Dimension(format!("anchor must be {m}x{r}")));
        }
        if l.rank() != r {
            return Err(Error::Dimension(format!("structure functions have rank {}, expected {r}", l.rank())));
        }
        if h.dim() != m || eta.dim() != m {
            return Err(Error::Dimension(format!("h and eta must act on a {m}-dimensional base")));
        }
        for e in rho.iter().flatten().chain(l.exprs()) {
            if e.depends_on_fiber() {
                return Err(Error::Invalid(format!("anchor/structure component '{e}' depends on fiber coordinates")));
            }
            e.check_arity(m, 0)?;
        }
        let rho_h = rho.iter().map(|row| row.iter().map(|e| e.compose_base(&h.fwd)).collect()).collect();
        let l_h = l.map(|e| e.compose_base(&h.fwd));
        Ok(GenAlgebroid { m, r, rho, l, h, eta, rho_h, l_h })
    }

    /// Trivial algebroid: `ρ = Id`, `L = 0`, `h = η = Id` (needs `m = r`).
    pub fn tangent(m: usize) -> Self {
        let rho = (0..m).map(|i| (0..m).map(|a| if i == a { Expr::one() } else { Expr::zero() }).collect()).collect();
        GenAlgebroid::new(m, m, rho, StructureFunctions::zero(m), DiffeoMap::identity(m), DiffeoMap::identity(m))
            .expect("tangent algebroid is valid")
    }

    /// `ρ^i_a ∘ h`.
    pub fn rho_h(&self, i: usize, a: usize) -> &Expr {
        &self.rho_h[i][a]
    }

    /// `L^c_{ab} ∘ h`.
    pub fn l_h(&self, c: usize, a: usize, b: usize) -> Expr {
        self.l_h.get(c, a, b)
    }

    /// `Σ_i (ρ^i_a∘h) ∂_i f`: the pulled-back anchor of `S_a` acting on `f`.
    pub fn anchor_derivative(&self, a: usize, f: &Expr) -> Expr {
        Expr::sum((0..self.m).map(|i| self.rho_h[i][a].clone() * f.dx(i)))
    }

    /// Coordinate section `S_a` of the pull-back bundle.
    pub fn basis_section(&self, a: usize) -> Vec<Expr> {
        (0..self.r).map(|b| if a == b { Expr::one() } else { Expr::zero() }).collect()
    }

    fn check_section(&self, s: &[Expr]) -> Result<()> {
        if s.len() != self.r {
            return Err(Error::Dimension(format!("section has {} coefficients, rank is {}", s.len(), self.r)));
        }
        for e in s {
            e.check_arity(self.m, self.r)?;
        }
        Ok(())
    }

    /// Bracket of pull-back sections `X^a S_a`, `Y^b S_b`.
    pub fn pullback_bracket(&self, x: &[Expr], y: &[Expr]) -> Result<Vec<Expr>> {
        self.check_section(x)?;
        self.check_section(y)?;
        let r = self.r;
        let out = (0..r)
            .map(|c| {
                let mut terms = Vec::new();
                for a in 0..r {
                    for b in 0..r {
                        let l = self.l_h(c, a, b);
                        if !l.is_zero() {
                            terms.push(&x[a] * &y[b] * l);
                        }
                    }
                    terms.push(&x[a] * self.anchor_derivative(a, &y[c]));
                    terms.push(-(&y[a] * self.anchor_derivative(a, &x[c])));
                }
                Expr::sum(terms)
            })
            .collect();
        Ok(out)
    }

    /// Action of `Γ(Th∘ρ, h∘η)(u)` on a base function `f`, where `u` has
    /// base-only coefficients. Built symbolically through the inverse maps.
    pub fn anchored_action(&self, u: &[Expr], f: &Expr) -> Result<Expr> {
        self.check_section(u)?;
        for e in u.iter().chain([f]) {
            if e.depends_on_fiber() {
                return Err(Error::Invalid(format!("'{e}' must depend on base coordinates only")));
            }
        }
        // z = (h∘η)⁻¹(x)
        let z: Vec<Expr> = self.eta.inv.iter().map(|e| e.compose_base(&self.h.inv)).collect();
        let eta_z: Vec<Expr> = self.eta.fwd.iter().map(|e| e.compose_base(&z)).collect();
        let jac = self.h.jacobian();
        let mut terms = Vec::new();
        for j in 0..self.m {
            let df = f.dx(j);
            if df.is_zero() {
                continue;
            }
            for i in 0..self.m {
                let dh = jac[j][i].compose_base(&eta_z);
                for a in 0..self.r {
                    let rho_u = self.rho[i][a].compose_base(&z) * u[a].compose_base(&z);
                    terms.push(&dh * rho_u * &df);
                }
            }
        }
        Ok(Expr::sum(terms))
    }

    /// Cyclic sum `[S_a,[S_b,S_c]] + [S_b,[S_c,S_a]] + [S_c,[S_a,S_b]]`.
    pub fn jacobiator(&self, a: usize, b: usize, c: usize) -> Vec<Expr> {
        let s = |k| self.basis_section(k);
        let br = |u: &[Expr], v: &[Expr]| self.pullback_bracket(u, v).expect("basis sections have the right rank");
        let t1 = br(&s(a), &br(&s(b), &s(c)));
        let t2 = br(&s(b), &br(&s(c), &s(a)));
        let t3 = br(&s(c), &br(&s(a), &s(b)));
        (0..self.r).map(|e| &t1[e] + &t2[e] + &t3[e]).collect()
    }

    /// `(L^c_{ab}∘h)(ρ^i_c∘h) - [ρ̂_a, ρ̂_b]^i`: how far the pulled-back
    /// anchor is from preserving brackets on coordinate sections.
    pub fn anchor_defect(&self, a: usize, b: usize) -> Vec<Expr> {
        (0..self.m)
            .map(|i| {
                let lhs = Expr::sum((0..self.r).map(|c| self.l_h(c, a, b) * self.rho_h(i, c)));
                let comm = self.anchor_derivative(a, &self.rho_h[i][b]) - self.anchor_derivative(b, &self.rho_h[i][a]);
                lhs - comm
            })
            .collect()
    }

    /// Sampled axiom residuals. `gh` is checked when supplied.
    pub fn validate_axioms(&self, gh: Option<&GhMorphism>, points: &[FiberPoint], tol: f64) -> Vec<CheckReport> {
        let mut out = vec![
            scan(points, |p| self.h.inverse_residual(p)).report("h inverse", "base diffeomorphism h", tol),
            scan(points, |p| self.eta.inverse_residual(p)).report("eta inverse", "base diffeomorphism eta", tol),
        ];
        if let Some(gh) = gh {
            out.push(scan(points, |p| gh.inverse_residual(p)).report("g inverse", "invertible (g,h) morphism", tol));
        }
        let mut jac = Scan::empty();
        for a in 0..self.r {
            for b in a + 1..self.r {
                for c in b + 1..self.r {
                    let j = self.jacobiator(a, b, c);
                    jac = jac.merge(scan_max_abs(points, &j));
                }
            }
        }
        if self.r < 3 {
            jac.evaluated = points.len();
        }
        out.push(jac.report("Jacobi identity", "pull-back bracket on coordinate sections", tol));

        let mut defect = Scan::empty();
        for a in 0..self.r {
            for b in a + 1..self.r {
                let d = self.anchor_defect(a, b);
                defect = defect.merge(scan_max_abs(points, &d));
            }
        }
        if self.r < 2 {
            defect.evaluated = points.len();
        }
        out.push(defect.report("anchor preserves brackets", "pull-back anchor on coordinate sections", tol));
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sampling::SampleSpec;

    fn e(s: &str, m: usize, r: usize) -> Expr {
        Expr::parse(s, m, r).unwrap()
    }

    #[test]
    fn structure_functions_are_antisymmetric() {
        let mut l = StructureFunctions::zero(3);
        l.set(2, 0, 1, Expr::x(0)).unwrap();
        l.set(0, 2, 1, Expr::num(3.0)).unwrap();
        assert_eq!(l.get(2, 0, 1), Expr::x(0));
        assert_eq!(l.get(2, 1, 0), Expr::neg(Expr::x(0)));
        assert_eq!(l.get(0, 1, 2).as_num(), Some(-3.0));
        assert!(l.get(1, 1, 1).is_zero());
        assert!(l.set(0, 1, 1, Expr::one()).is_err());
    }

    #[test]
    fn rejects_fiber_dependent_anchor() {
        let rho = vec![vec![e("y1", 1, 1)]];
        let r =
            GenAlgebroid::new(1, 1, rho, StructureFunctions::zero(1), DiffeoMap::identity(1), DiffeoMap::identity(1));
        assert!(r.is_err());
    }

    #[test]
    fn anchored_action_on_identity_data() {
        let alg = GenAlgebroid::tangent(2);
        let u = alg.basis_section(0);
        let v = alg.anchored_action(&u, &Expr::x(0)).unwrap();
        assert_eq!(v.eval(&[0.3, -0.2], &[]).unwrap(), 1.0);
        assert!(alg.anchored_action(&u, &Expr::num(4.0)).unwrap().is_zero());
    }

    #[test]
    fn heisenberg_constants_satisfy_jacobi() {
        let mut l = StructureFunctions::zero(3);
        l.set(2, 0, 1, Expr::one()).unwrap();
        let rho = vec![vec![Expr::zero(); 3]];
        let alg = GenAlgebroid::new(1, 3, rho, l, DiffeoMap::identity(1), DiffeoMap::identity(1)).unwrap();
        let pts = SampleSpec::default().points(1, 3);
        let reps = alg.validate_axioms(None, &pts, 1e-12);
        assert!(reps.iter().all(|r| r.passed()), "{reps:?}");
    }
}
