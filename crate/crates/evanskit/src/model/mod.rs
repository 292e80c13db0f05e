//! Conservation-law systems, structural hypothesis checks and the scalar constants Λ, β, B*.

mod systems;

use std::sync::Arc;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{c64, eigenvalues, null_vector, to_complex, RMat, RVec};

pub use systems::{Burgers, Gnl2x2, JinXin, MultidModel};

pub type State = RVec;

/// `u_t + f(u)_x = (B(u) u_x)_x`.
pub trait ViscousSystem: Send + Sync {
    fn name(&self) -> String;
    fn n(&self) -> usize;
    fn flux(&self, u: &State) -> State;
    fn jacobian(&self, u: &State) -> RMat;
    /// Second derivative action `D²f(u)(a, b)`.
    fn hessian(&self, u: &State, a: &State, b: &State) -> State;
    fn viscosity(&self, u: &State) -> RMat;
    /// `DB(u)(v)`, the derivative of `B` in direction `v`.
    fn viscosity_derivative(&self, u: &State, _v: &State) -> RMat {
        RMat::zeros(u.len(), u.len())
    }
    fn base_state(&self) -> State;
    fn radius(&self) -> f64;
    /// Left state of the profile with half-jump `eps` in the principal coordinate.
    fn left_state(&self, eps: f64) -> State;
}

/// First Jacobians of a relaxation system at a point.
#[derive(Debug, Clone)]
pub struct RelaxJacobians {
    pub fu: RMat,
    pub fv: RMat,
    pub gu: RMat,
    pub gv: RMat,
    pub qu: RMat,
    pub qv: RMat,
}

impl RelaxJacobians {
    /// Full flux Jacobian `[[f̃_u, f̃_v], [g̃_u, g̃_v]]`.
    pub fn flux_matrix(&self) -> RMat {
        let (n, r) = (self.fu.nrows(), self.gv.nrows());
        let mut a = RMat::zeros(n + r, n + r);
        a.view_mut((0, 0), (n, n)).copy_from(&self.fu);
        a.view_mut((0, n), (n, r)).copy_from(&self.fv);
        a.view_mut((n, 0), (r, n)).copy_from(&self.gu);
        a.view_mut((n, n), (r, r)).copy_from(&self.gv);
        a
    }

    /// Source Jacobian `[[0, 0], [q_u, q_v]]`.
    pub fn source_matrix(&self) -> RMat {
        let (n, r) = (self.fu.nrows(), self.gv.nrows());
        let mut q = RMat::zeros(n + r, n + r);
        q.view_mut((n, 0), (r, n)).copy_from(&self.qu);
        q.view_mut((n, n), (r, r)).copy_from(&self.qv);
        q
    }
}

/// `(u, v)_t + (f̃, g̃)_x = (0, q)`.
pub trait RelaxationSystem: Send + Sync {
    fn name(&self) -> String;
    fn n(&self) -> usize;
    fn r(&self) -> usize;
    fn f_tilde(&self, u: &State, v: &State) -> State;
    fn g_tilde(&self, u: &State, v: &State) -> State;
    fn source(&self, u: &State, v: &State) -> State;
    fn jacobians(&self, u: &State, v: &State) -> RelaxJacobians;
    /// Equilibrium map `v*(u)` with `q(u, v*(u)) = 0`.
    fn equilibrium(&self, u: &State) -> State;
    fn base_state(&self) -> State;
    fn radius(&self) -> f64;
    fn left_state(&self, eps: f64) -> State;

    fn reduced_flux(&self, u: &State) -> State {
        self.f_tilde(u, &self.equilibrium(u))
    }

    /// `v*_u = −q_v⁻¹ q_u`.
    fn equilibrium_jacobian(&self, u: &State) -> Result<RMat> {
        let j = self.jacobians(u, &self.equilibrium(u));
        let qvi = j.qv.clone().try_inverse().ok_or(Error::SingularRelaxation)?;
        Ok(-(qvi * j.qu))
    }

    fn reduced_jacobian(&self, u: &State) -> Result<RMat> {
        let j = self.jacobians(u, &self.equilibrium(u));
        let vu = self.equilibrium_jacobian(u)?;
        Ok(&j.fu + &j.fv * vu)
    }

    fn reduced_hessian(&self, u: &State, a: &State, b: &State) -> State {
        let h = 1e-5 * (1.0 + u.norm()) / b.norm().max(1e-300);
        let jp = self.reduced_jacobian(&(u + b * h)).unwrap_or_else(|_| RMat::zeros(u.len(), u.len()));
        let jm = self.reduced_jacobian(&(u - b * h)).unwrap_or_else(|_| RMat::zeros(u.len(), u.len()));
        (jp - jm) * a / (2.0 * h)
    }
}

/// A registered system of either kind.
#[derive(Clone)]
pub enum Model {
    Viscous(Arc<dyn ViscousSystem>),
    Relaxation(Arc<dyn RelaxationSystem>),
}

impl std::fmt::Debug for Model {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Model::Viscous(s) => write!(f, "Viscous({})", s.name()),
            Model::Relaxation(s) => write!(f, "Relaxation({})", s.name()),
        }
    }
}

impl Model {
    pub fn viscous(s: impl ViscousSystem + 'static) -> Self {
        Model::Viscous(Arc::new(s))
    }

    pub fn relaxation(s: impl RelaxationSystem + 'static) -> Self {
        Model::Relaxation(Arc::new(s))
    }

    pub fn name(&self) -> String {
        match self {
            Model::Viscous(s) => s.name(),
            Model::Relaxation(s) => s.name(),
        }
    }

    pub fn n(&self) -> usize {
        match self {
            Model::Viscous(s) => s.n(),
            Model::Relaxation(s) => s.n(),
        }
    }

    pub fn r(&self) -> usize {
        match self {
            Model::Viscous(_) => 0,
            Model::Relaxation(s) => s.r(),
        }
    }

    pub fn base_state(&self) -> State {
        match self {
            Model::Viscous(s) => s.base_state(),
            Model::Relaxation(s) => s.base_state(),
        }
    }

    pub fn radius(&self) -> f64 {
        match self {
            Model::Viscous(s) => s.radius(),
            Model::Relaxation(s) => s.radius(),
        }
    }

    pub fn left_state(&self, eps: f64) -> State {
        match self {
            Model::Viscous(s) => s.left_state(eps),
            Model::Relaxation(s) => s.left_state(eps),
        }
    }

    /// Equilibrium flux `f(u)`.
    pub fn flux(&self, u: &State) -> State {
        match self {
            Model::Viscous(s) => s.flux(u),
            Model::Relaxation(s) => s.reduced_flux(u),
        }
    }

    pub fn jacobian(&self, u: &State) -> Result<RMat> {
        match self {
            Model::Viscous(s) => Ok(s.jacobian(u)),
            Model::Relaxation(s) => s.reduced_jacobian(u),
        }
    }

    pub fn hessian(&self, u: &State, a: &State, b: &State) -> State {
        match self {
            Model::Viscous(s) => s.hessian(u, a, b),
            Model::Relaxation(s) => s.reduced_hessian(u, a, b),
        }
    }

    /// `B(u)` or the Chapman–Enskog `B*(u)`.
    pub fn diffusion(&self, u: &State) -> Result<RMat> {
        match self {
            Model::Viscous(s) => Ok(s.viscosity(u)),
            Model::Relaxation(s) => chapman_enskog_viscosity(s.as_ref(), u),
        }
    }
}

/// Real, sorted, binormalized eigen-decomposition of a strictly hyperbolic matrix.
#[derive(Debug, Clone)]
pub struct SpectralDecomposition {
    pub a: Vec<f64>,
    /// Rows are the left eigenvectors `l_j`.
    pub l: RMat,
    /// Columns are the right eigenvectors `r_j`.
    pub r: RMat,
    pub p: usize,
}

impl SpectralDecomposition {
    pub fn l_row(&self, j: usize) -> RVec {
        self.l.row(j).transpose()
    }

    pub fn r_col(&self, j: usize) -> RVec {
        self.r.column(j).into_owned()
    }

    /// Smallest pairwise eigenvalue gap.
    pub fn min_gap(&self) -> f64 {
        self.a.windows(2).map(|w| w[1] - w[0]).fold(f64::INFINITY, f64::min)
    }
}

pub fn characteristic_decomposition(a: &RMat) -> Result<SpectralDecomposition> {
    let n = a.nrows();
    let scale = a.norm().max(1e-300);
    let eig = eigenvalues(&to_complex(a))?;
    let mut re = Vec::with_capacity(n);
    for z in &eig {
        if z.im.abs() > 1e-8 * (1.0 + scale) {
            return Err(Error::NotStrictlyHyperbolic(format!("non-real eigenvalue {z}")));
        }
        re.push(z.re);
    }
    re.sort_by(|x, y| x.partial_cmp(y).unwrap());
    for w in re.windows(2) {
        if w[1] - w[0] <= 1e-7 * scale {
            return Err(Error::NotStrictlyHyperbolic(format!(
                "eigenvalues {} and {} coalesce",
                w[0], w[1]
            )));
        }
    }
    let mut r = RMat::zeros(n, n);
    for (j, &aj) in re.iter().enumerate() {
        let mut v = null_vector(&(a - RMat::identity(n, n) * aj));
        let vmax = v.amax();
        let k = (0..n).find(|&i| v[i].abs() >= vmax * (1.0 - 1e-12)).unwrap_or(0);
        v /= v[k];
        r.set_column(j, &v);
    }
    let l = r
        .clone()
        .try_inverse()
        .ok_or_else(|| Error::NotStrictlyHyperbolic("eigenvectors are dependent".into()))?;
    let p = (0..n)
        .fold((0, f64::INFINITY), |acc, j| if re[j].abs() < acc.1 { (j, re[j].abs()) } else { acc })
        .0;
    Ok(SpectralDecomposition { a: re, l, r, p })
}

/// `(Λ, β)` at `u`: genuine-nonlinearity coefficient and principal diffusion.
pub fn genuine_nonlinearity_and_diffusion(model: &Model, u: &State) -> Result<(f64, f64)> {
    let d = characteristic_decomposition(&model.jacobian(u)?)?;
    let (lp, rp) = (d.l_row(d.p), d.r_col(d.p));
    let lam = lp.dot(&model.hessian(u, &rp, &rp));
    if !(lam.abs() >= 1e-8) {
        return Err(Error::DegenerateField(lam));
    }
    let b = model.diffusion(u)?;
    let beta = lp.dot(&(b * rp));
    if !(beta > 0.0) {
        return Err(Error::NonDissipative(beta));
    }
    Ok((lam, beta))
}

/// Chapman–Enskog viscosity `B* = −f̃_v q_v⁻¹ (g_u − v*_u f_u)` on the equilibrium manifold.
pub fn chapman_enskog_viscosity(sys: &dyn RelaxationSystem, u: &State) -> Result<RMat> {
    let v = sys.equilibrium(u);
    let j = sys.jacobians(u, &v);
    let qvi = j.qv.clone().try_inverse().ok_or(Error::SingularRelaxation)?;
    if qvi.iter().any(|x| !x.is_finite()) {
        return Err(Error::SingularRelaxation);
    }
    let vu = -(&qvi * &j.qu);
    let f_u = &j.fu + &j.fv * &vu;
    let g_u = &j.gu + &j.gv * &vu;
    Ok(-(&j.fv * qvi * (g_u - vu * f_u)))
}

#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct HypothesisCheck {
    pub name: String,
    pub passed: bool,
    /// Nonnegative measured margin; zero when the check fails.
    pub margin: f64,
    pub witness: Option<String>,
}

impl HypothesisCheck {
    fn new(name: &str, value: f64, witness: Option<String>) -> Self {
        let passed = witness.is_none() && value > 0.0;
        HypothesisCheck { name: name.into(), passed, margin: if passed { value } else { value.max(0.0) }, witness }
    }
}

#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct HypothesisReport {
    pub system: String,
    pub checks: Vec<HypothesisCheck>,
    pub genuine_nonlinearity: Option<f64>,
    pub beta: Option<f64>,
}

impl HypothesisReport {
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn get(&self, name: &str) -> Option<&HypothesisCheck> {
        self.checks.iter().find(|c| c.name == name)
    }
}

fn neighborhood_samples(u0: &State, radius: f64) -> Vec<State> {
    let mut out = vec![u0.clone()];
    for j in 0..u0.len() {
        for s in [-0.5, 0.5] {
            let mut u = u0.clone();
            u[j] += s * radius;
            out.push(u);
        }
    }
    out
}

fn xi_grid() -> Vec<f64> {
    (0..=256).map(|k| 10f64.powf(-2.0 + k as f64 / 64.0)).collect()
}

fn fmt_state(u: &State) -> String {
    let parts: Vec<String> = u.iter().map(|x| format!("{x:.4}")).collect();
    format!("({})", parts.join(", "))
}

fn hyperbolicity_check(mats: &[(RMat, String)]) -> HypothesisCheck {
    let mut margin = f64::INFINITY;
    for (a, at) in mats {
        match characteristic_decomposition(a) {
            Ok(d) => {
                if d.a.len() > 1 {
                    margin = margin.min(d.min_gap() / a.norm().max(1e-300));
                }
            }
            Err(e) => return HypothesisCheck::new("H2", 0.0, Some(format!("{e} at u = {at}"))),
        }
    }
    HypothesisCheck::new("H2", if margin.is_finite() { margin } else { 1.0 }, None)
}

fn nonlinearity_check(
    jac: &dyn Fn(&State) -> Result<RMat>,
    hess: &dyn Fn(&State, &State, &State) -> State,
    u0: &State,
) -> (HypothesisCheck, Option<f64>) {
    let a = match jac(u0) {
        Ok(a) => a,
        Err(e) => return (HypothesisCheck::new("H4", 0.0, Some(e.to_string())), None),
    };
    let d = match characteristic_decomposition(&a) {
        Ok(d) => d,
        Err(e) => return (HypothesisCheck::new("H4", 0.0, Some(e.to_string())), None),
    };
    let ap = d.a[d.p];
    if ap.abs() > 1e-6 * (1.0 + a.norm()) {
        return (
            HypothesisCheck::new("H4", 0.0, Some(format!("no vanishing characteristic speed: a_p = {ap}"))),
            None,
        );
    }
    let (lp, rp) = (d.l_row(d.p), d.r_col(d.p));
    let lam = lp.dot(&hess(u0, &rp, &rp));
    if lam.abs() < 1e-8 {
        return (HypothesisCheck::new("H4", 0.0, Some(format!("Λ = {lam:e}"))), Some(lam));
    }
    (HypothesisCheck::new("H4", lam.abs(), None), Some(lam))
}

pub fn check_hypotheses_viscous(sys: &dyn ViscousSystem) -> HypothesisReport {
    let u0 = sys.base_state();
    let samples = neighborhood_samples(&u0, sys.radius());

    let mut h1 = f64::INFINITY;
    let mut h1w = None;
    for u in &samples {
        let b = sys.viscosity(u);
        match eigenvalues(&to_complex(&b)) {
            Ok(ev) => {
                for z in ev {
                    if z.re < h1 {
                        h1 = z.re;
                        if z.re <= 0.0 {
                            h1w = Some(format!("Re σ(B) = {} at u = {}", z.re, fmt_state(u)));
                        }
                    }
                }
            }
            Err(e) => h1w = Some(e.to_string()),
        }
    }
    let h1 = HypothesisCheck::new("H1", h1, h1w);

    let mats: Vec<(RMat, String)> = samples.iter().map(|u| (sys.jacobian(u), fmt_state(u))).collect();
    let h2 = hyperbolicity_check(&mats);

    let mut theta = f64::INFINITY;
    let mut h3w = None;
    for u in &samples {
        let a = to_complex(&sys.jacobian(u));
        let b = to_complex(&sys.viscosity(u));
        for xi in xi_grid() {
            let m = &a * c64(0.0, -xi) - &b * c64(xi * xi, 0.0);
            let worst = eigenvalues(&m).map(|ev| ev.iter().map(|z| z.re).fold(f64::NEG_INFINITY, f64::max));
            match worst {
                Ok(w) => {
                    let t = -w / (xi * xi);
                    if t < theta {
                        theta = t;
                        if t <= 0.0 {
                            h3w = Some(format!("Re σ = {w} at ξ = {xi}, u = {}", fmt_state(u)));
                        }
                    }
                }
                Err(e) => h3w = Some(e.to_string()),
            }
        }
    }
    let h3 = HypothesisCheck::new("H3", theta, h3w);

    let (h4, lam) = nonlinearity_check(&|u| Ok(sys.jacobian(u)), &|u, a, b| sys.hessian(u, a, b), &u0);
    let beta = characteristic_decomposition(&sys.jacobian(&u0))
        .ok()
        .map(|d| d.l_row(d.p).dot(&(sys.viscosity(&u0) * d.r_col(d.p))));
    HypothesisReport { system: sys.name(), checks: vec![h1, h2, h3, h4], genuine_nonlinearity: lam, beta }
}

pub fn check_hypotheses_relaxation(sys: &dyn RelaxationSystem) -> HypothesisReport {
    let u0 = sys.base_state();
    let samples = neighborhood_samples(&u0, sys.radius());
    let r = sys.r();

    let mut h1 = f64::INFINITY;
    let mut h1w = None;
    let mut sub = f64::INFINITY;
    let mut subw = None;
    let mut stab = f64::INFINITY;
    let mut stabw = None;
    let mut sub0 = f64::INFINITY;
    let mut reduced = Vec::new();
    for (si, u) in samples.iter().enumerate() {
        let v = sys.equilibrium(u);
        let j = sys.jacobians(u, &v);
        let full = j.flux_matrix();
        match characteristic_decomposition(&full) {
            Ok(d) => {
                let smallest = d.a.iter().map(|x| x.abs()).fold(f64::INFINITY, f64::min);
                h1 = h1.min(smallest.min(d.min_gap()));
                if smallest <= 1e-10 {
                    h1w = Some(format!("zero frozen speed at u = {}", fmt_state(u)));
                }
                if let Ok(eq) = sys.reduced_jacobian(u).and_then(|a| characteristic_decomposition(&a)) {
                    for (k, &ak) in eq.a.iter().enumerate() {
                        let (lo, hi) = (d.a[k], d.a[k + r]);
                        let m = (hi - ak) * (ak - lo) / ((hi - lo).powi(2) / 4.0);
                        if si == 0 {
                            sub0 = sub0.min(m);
                        }
                        if m < sub {
                            sub = m;
                            if m <= 0.0 {
                                subw = Some(format!(
                                    "equilibrium speed {ak} outside frozen interval [{lo}, {hi}] at u = {}",
                                    fmt_state(u)
                                ));
                            }
                        }
                    }
                }
            }
            Err(e) => h1w = Some(format!("{e} at u = {}", fmt_state(u))),
        }
        match eigenvalues(&to_complex(&j.qv)) {
            Ok(ev) => {
                for z in ev {
                    if -z.re < stab {
                        stab = -z.re;
                        if z.re >= 0.0 {
                            stabw = Some(format!("Re σ(q_v) = {} at u = {}", z.re, fmt_state(u)));
                        }
                    }
                }
            }
            Err(e) => stabw = Some(e.to_string()),
        }
        match sys.reduced_jacobian(u) {
            Ok(a) => reduced.push((a, fmt_state(u))),
            Err(e) => stabw = Some(e.to_string()),
        }
    }
    let h1 = HypothesisCheck::new("H1", h1, h1w);
    // reported at the base state; every sample must pass
    let sub = HypothesisCheck::new("subcharacteristic", if sub > 0.0 { sub0 } else { sub }, subw);
    let stab = HypothesisCheck::new("equilibrium_stability", stab, stabw);
    let h2 = if reduced.len() == samples.len() {
        hyperbolicity_check(&reduced)
    } else {
        HypothesisCheck::new("H2", 0.0, Some("reduced Jacobian unavailable".into()))
    };

    let mut theta = f64::INFINITY;
    let mut h3w = None;
    for u in &samples {
        let v = sys.equilibrium(u);
        let j = sys.jacobians(u, &v);
        let a = to_complex(&j.flux_matrix());
        let q = to_complex(&j.source_matrix());
        for xi in xi_grid() {
            let m = &a * c64(0.0, xi) + &q;
            match eigenvalues(&m) {
                Ok(ev) => {
                    let w = ev.iter().map(|z| z.re).fold(f64::NEG_INFINITY, f64::max);
                    let t = -w * (1.0 + xi * xi) / (xi * xi);
                    if t < theta {
                        theta = t;
                        if t <= 0.0 {
                            h3w = Some(format!("Re σ = {w} at ξ = {xi}, u = {}", fmt_state(u)));
                        }
                    }
                }
                Err(e) => h3w = Some(e.to_string()),
            }
        }
    }
    let h3 = HypothesisCheck::new("H3", theta, h3w);

    let (h4, lam) = nonlinearity_check(&|u| sys.reduced_jacobian(u), &|u, a, b| sys.reduced_hessian(u, a, b), &u0);
    let beta = sys
        .reduced_jacobian(&u0)
        .and_then(|a| characteristic_decomposition(&a))
        .and_then(|d| {
            let b = chapman_enskog_viscosity(sys, &u0)?;
            Ok(d.l_row(d.p).dot(&(b * d.r_col(d.p))))
        })
        .ok();
    HypothesisReport {
        system: sys.name(),
        checks: vec![h1, sub, stab, h2, h3, h4],
        genuine_nonlinearity: lam,
        beta,
    }
}

/// Hypothesis report for either kind of system.
pub fn check_hypotheses(model: &Model) -> HypothesisReport {
    match model {
        Model::Viscous(s) => check_hypotheses_viscous(s.as_ref()),
        Model::Relaxation(s) => check_hypotheses_relaxation(s.as_ref()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn st(v: &[f64]) -> State {
        State::from_column_slice(v)
    }

    #[test]
    fn diagonal_decomposition() {
        let a = RMat::from_diagonal(&st(&[-1.0, 0.0, 2.0]));
        let d = characteristic_decomposition(&a).unwrap();
        assert_eq!(d.a, vec![-1.0, 0.0, 2.0]);
        assert_eq!(d.p, 1);
        assert!((&d.l - RMat::identity(3, 3)).norm() < 1e-14);
        assert!((&d.r - RMat::identity(3, 3)).norm() < 1e-14);
    }

    #[test]
    fn lower_triangular_two_by_two() {
        let a = RMat::from_row_slice(2, 2, &[0.0, 0.0, 1.0, 1.0]);
        let d = characteristic_decomposition(&a).unwrap();
        assert!(d.a[0].abs() < 1e-15 && (d.a[1] - 1.0).abs() < 1e-14);
        assert_eq!(d.p, 0);
        assert!((d.r_col(0) - st(&[1.0, -1.0])).norm() < 1e-14);
        assert!((d.l_row(0) - st(&[1.0, 0.0])).norm() < 1e-14);
    }

    #[test]
    fn coalescing_spectrum_rejected() {
        let a = RMat::from_row_slice(2, 2, &[1.0, 1.0, 0.0, 1.0]);
        assert!(matches!(characteristic_decomposition(&a), Err(Error::NotStrictlyHyperbolic(_))));
        let rot = RMat::from_row_slice(2, 2, &[0.0, -1.0, 1.0, 0.0]);
        assert!(matches!(characteristic_decomposition(&rot), Err(Error::NotStrictlyHyperbolic(_))));
    }

    #[test]
    fn burgers_hypotheses() {
        let rep = check_hypotheses_viscous(&Burgers);
        assert!(rep.all_passed(), "{rep:?}");
        assert!((rep.genuine_nonlinearity.unwrap() - 1.0).abs() < 1e-14);
        let (lam, beta) = genuine_nonlinearity_and_diffusion(&Model::viscous(Burgers), &st(&[0.0])).unwrap();
        assert_eq!((lam, beta), (1.0, 1.0));
    }

    #[test]
    fn gnl2x2_constants() {
        let m = Model::viscous(Gnl2x2::default());
        let rep = check_hypotheses(&m);
        assert!(rep.all_passed(), "{rep:?}");
        let (lam, beta) = genuine_nonlinearity_and_diffusion(&m, &st(&[0.0, 0.0])).unwrap();
        assert!((lam - 1.0).abs() < 1e-14 && (beta - 1.0).abs() < 1e-14);
    }

    struct Swap;
    impl ViscousSystem for Swap {
        fn name(&self) -> String {
            "swap".into()
        }
        fn n(&self) -> usize {
            2
        }
        fn flux(&self, u: &State) -> State {
            st(&[u[1], u[0]])
        }
        fn jacobian(&self, _u: &State) -> RMat {
            RMat::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0])
        }
        fn hessian(&self, _u: &State, _a: &State, _b: &State) -> State {
            State::zeros(2)
        }
        fn viscosity(&self, _u: &State) -> RMat {
            RMat::identity(2, 2)
        }
        fn base_state(&self) -> State {
            State::zeros(2)
        }
        fn radius(&self) -> f64 {
            0.5
        }
        fn left_state(&self, eps: f64) -> State {
            st(&[eps, 0.0])
        }
    }

    #[test]
    fn linear_symmetric_flux_fails_h4() {
        let rep = check_hypotheses_viscous(&Swap);
        let h4 = rep.get("H4").unwrap();
        assert!(!h4.passed);
        assert!(h4.witness.as_ref().unwrap().contains("a_p"));
        assert!(rep.get("H2").unwrap().passed);
    }

    #[test]
    fn jin_xin_hypotheses() {
        let jx = JinXin::default();
        let rep = check_hypotheses_relaxation(&jx);
        assert!(rep.all_passed(), "{rep:?}");
        assert!((rep.get("subcharacteristic").unwrap().margin - 1.0).abs() < 1e-12);
        assert!((rep.beta.unwrap() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn jin_xin_subcharacteristic_margin_at_base() {
        // sample-wise margin at u0 alone
        let jx = JinXin::default();
        let u = st(&[0.0]);
        let j = jx.jacobians(&u, &jx.equilibrium(&u));
        let d = characteristic_decomposition(&j.flux_matrix()).unwrap();
        assert!((d.a[0] + 1.0).abs() < 1e-14 && (d.a[1] - 1.0).abs() < 1e-14);
    }

    #[test]
    fn jin_xin_fast_equilibrium_speed_fails() {
        let jx = JinXin { u0: 1.5, ..JinXin::default() };
        let rep = check_hypotheses_relaxation(&jx);
        let sc = rep.get("subcharacteristic").unwrap();
        assert!(!sc.passed);
        assert_eq!(sc.margin, 0.0);
        assert!(sc.witness.is_some());
    }

    #[test]
    fn chapman_enskog_jin_xin() {
        let jx = JinXin::default();
        let b0 = chapman_enskog_viscosity(&jx, &st(&[0.0])).unwrap();
        assert!((b0[(0, 0)] - 1.0).abs() < 1e-15);
        let b3 = chapman_enskog_viscosity(&jx, &st(&[0.3])).unwrap();
        assert!((b3[(0, 0)] - 0.91).abs() < 1e-14);
        let (lam, beta) = genuine_nonlinearity_and_diffusion(&Model::relaxation(jx), &st(&[0.0])).unwrap();
        assert!((lam - 1.0).abs() < 1e-9 && (beta - 1.0).abs() < 1e-14);
    }

    struct Unstable {
        qv: f64,
    }
    impl RelaxationSystem for Unstable {
        fn name(&self) -> String {
            "unstable-relaxation".into()
        }
        fn n(&self) -> usize {
            1
        }
        fn r(&self) -> usize {
            1
        }
        fn f_tilde(&self, _u: &State, v: &State) -> State {
            v.clone()
        }
        fn g_tilde(&self, u: &State, _v: &State) -> State {
            u.clone()
        }
        fn source(&self, u: &State, v: &State) -> State {
            st(&[self.qv * (v[0] - 0.5 * u[0] * u[0])])
        }
        fn jacobians(&self, u: &State, _v: &State) -> RelaxJacobians {
            let m = |x: f64| RMat::from_element(1, 1, x);
            RelaxJacobians { fu: m(0.0), fv: m(1.0), gu: m(1.0), gv: m(0.0), qu: m(-self.qv * u[0]), qv: m(self.qv) }
        }
        fn equilibrium(&self, u: &State) -> State {
            st(&[0.5 * u[0] * u[0]])
        }
        fn base_state(&self) -> State {
            st(&[0.0])
        }
        fn radius(&self) -> f64 {
            0.5
        }
        fn left_state(&self, eps: f64) -> State {
            st(&[eps])
        }
    }

    #[test]
    fn growing_relaxation_fails_equilibrium_stability() {
        let rep = check_hypotheses_relaxation(&Unstable { qv: 1.0 });
        let c = rep.get("equilibrium_stability").unwrap();
        assert!(!c.passed && c.witness.is_some());
    }

    #[test]
    fn singular_relaxation_detected() {
        let s = Unstable { qv: 0.0 };
        assert_eq!(chapman_enskog_viscosity(&s, &st(&[0.0])), Err(Error::SingularRelaxation));
    }
}
