//! First-order eigenvalue systems `W' = 𝔸(x, λ) W` built from a model and its profile.

use std::sync::Arc;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{c64, eigenvalues, CMat, RMat, C64};
use crate::model::{Model, MultidModel, RelaxationSystem, State, ViscousSystem};
use crate::profile::ShockProfile;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum Formulation {
    IntegratedIdentityViscous,
    IntegratedGeneralViscous,
    UnintegratedViscous,
    BalancedFluxRelaxation,
    MultidModel { xi2: f64 },
    Synthetic,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Side {
    Minus,
    Plus,
}

type CoeffFn = dyn Fn(f64, C64) -> CMat + Send + Sync;
type LimitFn = dyn Fn(Side, C64) -> CMat + Send + Sync;

/// Coefficient map `𝔸(x, λ)` on `[-L, L]` with its limits `𝔸±(λ)`.
#[derive(Clone)]
pub struct EigenvalueSystem {
    pub dim: usize,
    pub formulation: Formulation,
    pub half_length: f64,
    /// `(C₁, C₂)` with `‖𝔸(x,1) − 𝔸±(1)‖ ≤ C₁ e^{−|x|/C₂}` on the grid.
    pub decay: (f64, f64),
    pub profile: Option<Arc<ShockProfile>>,
    pub model: Option<Model>,
    coeff: Arc<CoeffFn>,
    limit: Arc<LimitFn>,
}

impl std::fmt::Debug for EigenvalueSystem {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("EigenvalueSystem")
            .field("dim", &self.dim)
            .field("formulation", &self.formulation)
            .field("half_length", &self.half_length)
            .field("decay", &self.decay)
            .finish()
    }
}

impl EigenvalueSystem {
    /// Builds a system from raw coefficient and limit maps (used for test doubles).
    pub fn custom(
        dim: usize,
        half_length: f64,
        decay: (f64, f64),
        coeff: impl Fn(f64, C64) -> CMat + Send + Sync + 'static,
        limit: impl Fn(Side, C64) -> CMat + Send + Sync + 'static,
    ) -> Self {
        EigenvalueSystem {
            dim,
            formulation: Formulation::Synthetic,
            half_length,
            decay,
            profile: None,
            model: None,
            coeff: Arc::new(coeff),
            limit: Arc::new(limit),
        }
    }

    pub fn coefficient(&self, x: f64, lambda: C64) -> CMat {
        (self.coeff)(x, lambda)
    }

    pub fn asymptotic_matrix(&self, side: Side, lambda: C64) -> CMat {
        (self.limit)(side, lambda)
    }

    /// Largest `‖𝔸(x,λ) − 𝔸±(λ)‖` over `|x| ≥ x_min` on the profile grid (or a uniform grid).
    pub fn tail_deviation(&self, lambda: C64, x_min: f64) -> f64 {
        self.sample_grid()
            .into_iter()
            .filter(|x| x.abs() >= x_min)
            .map(|x| self.deviation(x, lambda))
            .fold(0.0, f64::max)
    }

    fn deviation(&self, x: f64, lambda: C64) -> f64 {
        let side = if x < 0.0 { Side::Minus } else { Side::Plus };
        (self.coefficient(x, lambda) - self.asymptotic_matrix(side, lambda)).norm()
    }

    fn sample_grid(&self) -> Vec<f64> {
        match &self.profile {
            Some(p) => p.x.clone(),
            None => (0..=400).map(|i| -self.half_length + self.half_length * i as f64 / 200.0).collect(),
        }
    }

    /// Measures `(C₁, C₂)` at `λ`: `C₂` from the profile tail rate, `C₁` the tightest cover on the grid.
    pub fn measure_decay(&self, lambda: C64) -> (f64, f64) {
        let c2 = match &self.profile {
            Some(p) if p.theta_hat.is_finite() && p.theta_hat > 0.0 => 1.0 / p.theta_hat,
            _ => self.half_length,
        };
        let c1 = self
            .sample_grid()
            .into_iter()
            .map(|x| self.deviation(x, lambda) * (x.abs() / c2).exp())
            .fold(0.0, f64::max);
        (c1 * (1.0 + 1e-9) + 1e-300, c2)
    }

    fn with_decay(mut self) -> Self {
        self.decay = self.measure_decay(c64(1.0, 0.0));
        self
    }
}

pub(crate) fn cx(m: &RMat) -> CMat {
    m.map(|v| c64(v, 0.0))
}

fn two_by_two(tl: &CMat, tr: &CMat, bl: &CMat, br: &CMat) -> CMat {
    let (n1, n2) = (tl.nrows(), bl.nrows());
    let (m1, m2) = (tl.ncols(), tr.ncols());
    let mut out = CMat::zeros(n1 + n2, m1 + m2);
    out.view_mut((0, 0), (n1, m1)).copy_from(tl);
    out.view_mut((0, m1), (n1, m2)).copy_from(tr);
    out.view_mut((n1, 0), (n2, m1)).copy_from(bl);
    out.view_mut((n1, m1), (n2, m2)).copy_from(br);
    out
}

fn integrated_viscous(b_inv: &RMat, a: &RMat, lambda: C64) -> CMat {
    let n = a.nrows();
    let bi = cx(b_inv);
    two_by_two(&CMat::zeros(n, n), &CMat::identity(n, n), &(&bi * lambda), &(bi * cx(a)))
}

fn require_viscous(p: &ShockProfile, model: &Model) -> Result<Arc<dyn ViscousSystem>> {
    match model {
        Model::Viscous(s) if p.v.is_none() => Ok(s.clone()),
        _ => Err(Error::WrongFormulation("viscous assembly needs a viscous model and profile".into())),
    }
}

/// Integrated (or unintegrated) eigenvalue system for `B ≡ I`.
pub fn assemble_identity_viscous(profile: Arc<ShockProfile>, model: &Model, integrated: bool) -> Result<EigenvalueSystem> {
    let sys = require_viscous(&profile, model)?;
    let n = sys.n();
    for u in [&profile.u_minus, &profile.u_plus, &profile.u[profile.points() / 2]] {
        let b = sys.viscosity(u);
        if (b - RMat::identity(n, n)).amax() > 1e-14 {
            return Err(Error::WrongFormulation("viscosity is not the identity".into()));
        }
    }
    let id = RMat::identity(n, n);
    let (p, s) = (profile.clone(), sys.clone());
    let coeff = move |x: f64, lambda: C64| -> CMat {
        let (u, du) = p.eval(x);
        let a = s.jacobian(&u);
        if integrated {
            return integrated_viscous(&id, &a, lambda);
        }
        // w̃'' = A w̃' + (A' + λ) w̃
        let mut da = RMat::zeros(n, n);
        for j in 0..n {
            let mut e = State::zeros(n);
            e[j] = 1.0;
            da.set_column(j, &s.hessian(&u, &du, &e));
        }
        let bl = cx(&da) + CMat::identity(n, n) * lambda;
        two_by_two(&CMat::zeros(n, n), &CMat::identity(n, n), &bl, &cx(&a))
    };
    let (um, up, s) = (profile.u_minus.clone(), profile.u_plus.clone(), sys.clone());
    let id = RMat::identity(n, n);
    let limit = move |side: Side, lambda: C64| -> CMat {
        let u = if side == Side::Minus { &um } else { &up };
        integrated_viscous(&id, &s.jacobian(u), lambda)
    };
    Ok(EigenvalueSystem {
        dim: 2 * n,
        formulation: if integrated { Formulation::IntegratedIdentityViscous } else { Formulation::UnintegratedViscous },
        half_length: profile.half_length,
        decay: (0.0, 0.0),
        profile: Some(profile),
        model: Some(model.clone()),
        coeff: Arc::new(coeff),
        limit: Arc::new(limit),
    }
    .with_decay())
}

/// Discrete L² norm of `W' − 𝔸(x, 0) W` for the translational mode `W = (ū', ū'')` of the unintegrated system.
pub fn translational_residual(es: &EigenvalueSystem) -> Result<f64> {
    if es.formulation != Formulation::UnintegratedViscous {
        return Err(Error::WrongFormulation("translational residual needs the unintegrated form".into()));
    }
    let p = es.profile.as_ref().ok_or_else(|| Error::WrongFormulation("missing profile".into()))?;
    let sys = require_viscous(p, es.model.as_ref().ok_or_else(|| Error::WrongFormulation("missing model".into()))?)?;
    let n = sys.n();
    // ū'' = Df(ū) ū' from the profile equation with B = I
    let w: Vec<CMat> = p
        .u
        .iter()
        .zip(&p.du)
        .map(|(u, du)| {
            let d2 = sys.jacobian(u) * du;
            CMat::from_fn(2 * n, 1, |i, _| c64(if i < n { du[i] } else { d2[i - n] }, 0.0))
        })
        .collect();
    let h = p.spacing();
    let mut acc = 0.0;
    for i in 1..w.len() - 1 {
        let dw = (&w[i + 1] - &w[i - 1]) / c64(2.0 * h, 0.0);
        let r = dw - es.coefficient(p.x[i], c64(0.0, 0.0)) * &w[i];
        acc += h * r.norm_squared();
    }
    Ok(acc.sqrt())
}

// A^ε v = Df v − (DB v) ū'
pub(crate) fn a_eps(sys: &dyn ViscousSystem, u: &State, du: &State) -> RMat {
    let n = sys.n();
    let mut a = sys.jacobian(u);
    for j in 0..n {
        let mut e = State::zeros(n);
        e[j] = 1.0;
        let col = sys.viscosity_derivative(u, &e) * du;
        let mut c = a.column_mut(j);
        c -= col;
    }
    a
}

/// Integrated eigenvalue system `[[0, I], [λB⁻¹, B⁻¹A^ε]]` for general viscosity.
pub fn assemble_general_viscous(profile: Arc<ShockProfile>, model: &Model) -> Result<EigenvalueSystem> {
    let sys = require_viscous(&profile, model)?;
    let n = sys.n();
    for u in profile.u.iter() {
        let b = sys.viscosity(u);
        let smin = b.clone().svd(false, false).singular_values.min();
        if !(smin > 1e-12 * b.norm()) {
            return Err(Error::SingularViscosity(smin));
        }
    }
    let (p, s) = (profile.clone(), sys.clone());
    let coeff = move |x: f64, lambda: C64| -> CMat {
        let (u, du) = p.eval(x);
        let bi = s.viscosity(&u).try_inverse().unwrap_or_else(|| RMat::from_element(n, n, f64::NAN));
        integrated_viscous(&bi, &a_eps(s.as_ref(), &u, &du), lambda)
    };
    let (um, up, s) = (profile.u_minus.clone(), profile.u_plus.clone(), sys.clone());
    let limit = move |side: Side, lambda: C64| -> CMat {
        let u = if side == Side::Minus { &um } else { &up };
        let bi = s.viscosity(u).try_inverse().unwrap_or_else(|| RMat::from_element(n, n, f64::NAN));
        integrated_viscous(&bi, &s.jacobian(u), lambda)
    };
    Ok(EigenvalueSystem {
        dim: 2 * n,
        formulation: Formulation::IntegratedGeneralViscous,
        half_length: profile.half_length,
        decay: (0.0, 0.0),
        profile: Some(profile),
        model: Some(model.clone()),
        coeff: Arc::new(coeff),
        limit: Arc::new(limit),
    }
    .with_decay())
}

/// Blocks of the balanced-flux coefficient at a state.
#[derive(Debug, Clone)]
pub struct BalancedBlocks {
    pub e_tilde: RMat,
    pub e: RMat,
    pub h_tilde: RMat,
    pub h: RMat,
    pub f_tilde: RMat,
    pub f: RMat,
}

pub fn balanced_blocks(sys: &dyn RelaxationSystem, u: &State, v: &State) -> Result<BalancedBlocks> {
    let (n, r) = (sys.n(), sys.r());
    let j = sys.jacobians(u, v);
    let a = j.flux_matrix();
    let det = a.determinant();
    let p = a.try_inverse().ok_or(Error::SingularA(det))?;
    if !(det.abs() > 1e-14) {
        return Err(Error::SingularA(det));
    }
    let p11 = p.view((0, 0), (n, n)).into_owned();
    let p12 = p.view((0, n), (n, r)).into_owned();
    let p21 = p.view((n, 0), (r, n)).into_owned();
    let p22 = p.view((n, n), (r, r)).into_owned();
    Ok(BalancedBlocks {
        e_tilde: -&p11,
        e: -&p12,
        h_tilde: &j.qu * &p11 + &j.qv * &p21,
        h: &j.qu * &p12 + &j.qv * &p22,
        f_tilde: -p21,
        f: -p22,
    })
}

/// `𝔸 = [[λẼ, E], [λH̃ + λ²F̃, H + λF]]`, the expanded definition line (finite at λ = 0).
pub fn balanced_matrix(b: &BalancedBlocks, lambda: C64) -> CMat {
    two_by_two(
        &(cx(&b.e_tilde) * lambda),
        &cx(&b.e),
        &(cx(&b.h_tilde) * lambda + cx(&b.f_tilde) * (lambda * lambda)),
        &(cx(&b.h) + cx(&b.f) * lambda),
    )
}

/// Balanced-flux eigenvalue system of a relaxation profile.
pub fn assemble_relaxation_balanced_flux(profile: Arc<ShockProfile>, model: &Model) -> Result<EigenvalueSystem> {
    let sys = match model {
        Model::Relaxation(s) if profile.v.is_some() => s.clone(),
        _ => return Err(Error::WrongFormulation("balanced flux needs a relaxation model and profile".into())),
    };
    let (n, r) = (sys.n(), sys.r());
    let vs = profile.v.as_ref().unwrap();
    for (u, v) in profile.u.iter().zip(vs) {
        balanced_blocks(sys.as_ref(), u, v)?;
    }
    let (p, s) = (profile.clone(), sys.clone());
    let coeff = move |x: f64, lambda: C64| -> CMat {
        let (u, _) = p.eval(x);
        let (v, _) = p.eval_v(x).unwrap();
        match balanced_blocks(s.as_ref(), &u, &v) {
            Ok(b) => balanced_matrix(&b, lambda),
            Err(_) => CMat::from_element(n + r, n + r, c64(f64::NAN, 0.0)),
        }
    };
    let bm = balanced_blocks(sys.as_ref(), &profile.u_minus, profile.v_minus.as_ref().unwrap())?;
    let bp = balanced_blocks(sys.as_ref(), &profile.u_plus, profile.v_plus.as_ref().unwrap())?;
    let limit = move |side: Side, lambda: C64| -> CMat {
        balanced_matrix(if side == Side::Minus { &bm } else { &bp }, lambda)
    };
    Ok(EigenvalueSystem {
        dim: n + r,
        formulation: Formulation::BalancedFluxRelaxation,
        half_length: profile.half_length,
        decay: (0.0, 0.0),
        profile: Some(profile),
        model: Some(model.clone()),
        coeff: Arc::new(coeff),
        limit: Arc::new(limit),
    }
    .with_decay())
}

/// Smallest `θ̂ = (H₁₁ − |H₁₂|²/H₂₂)/|ξ|²` over the unit-circle ξ grid, `H` the Hermitian part
/// of the second-order symbol `Σ ξ_j ξ_k B^{jk} + i Σ ξ_j A^j(u)` at the given state.
pub fn symbol_positivity(m: &MultidModel, u: &State, samples: usize) -> f64 {
    let mut worst = f64::INFINITY;
    for k in 0..samples {
        let t = std::f64::consts::TAU * k as f64 / samples as f64;
        let (x1, x2) = (t.cos(), t.sin());
        let mut p = CMat::zeros(2, 2);
        for c in 0..2 {
            p[(c, c)] = c64(x1 * x1 * m.b11[c] + x1 * x2 * (m.b12[c] + m.b21[c]) + x2 * x2 * m.b22[c], 0.0);
        }
        let a1 = [u[0], m.a];
        for c in 0..2 {
            p[(c, c)] += c64(0.0, x1 * a1[c]);
        }
        p[(0, 1)] += c64(0.0, x2);
        p[(1, 0)] += c64(0.0, x2);
        let h = (&p + p.adjoint()) * c64(0.5, 0.0);
        let theta = if h[(1, 1)].re > 0.0 {
            h[(0, 0)].re - h[(0, 1)].norm_sqr() / h[(1, 1)].re
        } else {
            f64::NEG_INFINITY
        };
        worst = worst.min(theta);
    }
    worst
}

fn parabolicity_check(m: &MultidModel) -> Result<()> {
    if (m.b11[0] - 1.0).abs() > 1e-14 {
        return Err(Error::NotParabolic("B¹¹₁₁ must equal 1".into()));
    }
    for c in 0..2 {
        // per component: ξ₁² b11 + ξ₁ξ₂ (b12 + b21) + ξ₂² b22 > 0 for ξ ≠ 0
        let off = 0.5 * (m.b12[c] + m.b21[c]);
        let det = m.b11[c] * m.b22[c] - off * off;
        if !(m.b11[c] > 0.0 && m.b22[c] > 0.0 && det > 0.0) {
            return Err(Error::NotParabolic(format!("component {c}: quadratic form not positive definite")));
        }
    }
    Ok(())
}

fn multid_matrix(m: &MultidModel, u: &State, xi2: f64, lambda: C64) -> CMat {
    let i = c64(0.0, 1.0);
    let mut bl = CMat::zeros(2, 2);
    let mut br = CMat::zeros(2, 2);
    let a1 = [u[0], m.a];
    for c in 0..2 {
        let bi = 1.0 / m.b11[c];
        bl[(c, c)] = (lambda + xi2 * xi2 * m.b22[c]) * bi;
        br[(c, c)] = (c64(a1[c], 0.0) + i * xi2 * (m.b12[c] + m.b21[c])) * bi;
    }
    // A² = [[0, 1], [1, 0]]
    bl[(0, 1)] = i * xi2 / m.b11[0];
    bl[(1, 0)] = i * xi2 / m.b11[1];
    two_by_two(&CMat::zeros(2, 2), &CMat::identity(2, 2), &bl, &br)
}

/// Integrated first-order form of the two-dimensional model at transverse frequency `ξ₂`.
pub fn assemble_multid_model(profile: Arc<ShockProfile>, m: MultidModel, xi2: f64) -> Result<EigenvalueSystem> {
    parabolicity_check(&m)?;
    for u in [&profile.u_minus, &profile.u_plus] {
        if !(symbol_positivity(&m, u, 256) > 0.0) {
            return Err(Error::NotParabolic("symbol not positive at an endpoint".into()));
        }
    }
    let p = profile.clone();
    let coeff = move |x: f64, lambda: C64| multid_matrix(&m, &p.eval(x).0, xi2, lambda);
    let (um, up) = (profile.u_minus.clone(), profile.u_plus.clone());
    let limit = move |side: Side, lambda: C64| multid_matrix(&m, if side == Side::Minus { &um } else { &up }, xi2, lambda);
    Ok(EigenvalueSystem {
        dim: 4,
        formulation: Formulation::MultidModel { xi2 },
        half_length: profile.half_length,
        decay: (0.0, 0.0),
        profile: Some(profile),
        model: Some(Model::viscous(m)),
        coeff: Arc::new(coeff),
        limit: Arc::new(limit),
    }
    .with_decay())
}

/// Default assembly for a model: integrated viscous or balanced flux.
pub fn assemble(profile: Arc<ShockProfile>, model: &Model) -> Result<EigenvalueSystem> {
    match model {
        Model::Viscous(_) => assemble_general_viscous(profile, model),
        Model::Relaxation(_) => assemble_relaxation_balanced_flux(profile, model),
    }
}

/// `(k₊, k₋)`: stable dimension of `𝔸₊` and unstable dimension of `𝔸₋`, requiring `k₊ + k₋ = N`.
pub fn check_consistent_splitting(es: &EigenvalueSystem, lambda: C64) -> Result<(usize, usize)> {
    let mut dims = [0usize; 2];
    for (k, side) in [Side::Plus, Side::Minus].into_iter().enumerate() {
        let m = es.asymptotic_matrix(side, lambda);
        let tol = crate::subspace::splitting_tol(&m);
        for mu in eigenvalues(&m)? {
            if !mu.re.is_finite() || mu.re.abs() <= tol {
                return Err(Error::SplittingFailure(mu));
            }
            if (side == Side::Plus && mu.re < 0.0) || (side == Side::Minus && mu.re > 0.0) {
                dims[k] += 1;
            }
        }
    }
    if dims[0] + dims[1] != es.dim {
        return Err(Error::SplittingFailure(lambda));
    }
    Ok((dims[0], dims[1]))
}

/// A frequency with its optional rescaled image `λ̂ = βλ/(Λ²ε²)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SpectralPoint {
    pub lambda: C64,
    pub regime: Option<crate::reduction::Regime>,
    pub rescaled: Option<C64>,
    pub scale: f64,
}

impl SpectralPoint {
    pub fn new(lambda: C64) -> Self {
        SpectralPoint { lambda, regime: None, rescaled: None, scale: 1.0 }
    }

    /// Attaches the rescaling `λ̂ = βλ/(Λ²ε²)`.
    pub fn with_rescaling(lambda: C64, big_lambda: f64, beta: f64, eps: f64) -> Self {
        let scale = beta / (big_lambda * big_lambda * eps * eps);
        SpectralPoint { lambda, regime: None, rescaled: Some(lambda * scale), scale }
    }

    pub fn from_rescaled(lambda_hat: C64, big_lambda: f64, beta: f64, eps: f64) -> Self {
        let scale = beta / (big_lambda * big_lambda * eps * eps);
        SpectralPoint { lambda: lambda_hat / scale, regime: None, rescaled: Some(lambda_hat), scale }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Burgers, Gnl2x2, JinXin};
    use crate::linalg::max_abs;
    use crate::profile::{burgers_profile, multid_profile, solve_profile};

    fn burgers_es(integrated: bool) -> EigenvalueSystem {
        let p = Arc::new(burgers_profile(1.0, 24.0));
        assemble_identity_viscous(p, &Model::viscous(Burgers), integrated).unwrap()
    }

    fn close(a: &CMat, b: &CMat, tol: f64) -> bool {
        max_abs(&(a - b)) <= tol
    }

    #[test]
    fn burgers_integrated_entries() {
        let es = burgers_es(true);
        let m = es.coefficient(0.0, c64(2.0, 0.0));
        let want = CMat::from_row_slice(2, 2, &[c64(0.0, 0.0), c64(1.0, 0.0), c64(2.0, 0.0), c64(0.0, 0.0)]);
        assert!(close(&m, &want, 1e-15));
        let lam = c64(0.3, 0.7);
        let ap = es.asymptotic_matrix(Side::Plus, lam);
        let want = CMat::from_row_slice(2, 2, &[c64(0.0, 0.0), c64(1.0, 0.0), lam, c64(-1.0, 0.0)]);
        assert!(close(&ap, &want, 1e-15));
    }

    #[test]
    fn burgers_limit_eigenvalues() {
        let es = burgers_es(true);
        let lam = c64(0.4, -1.3);
        for (side, a) in [(Side::Plus, -1.0), (Side::Minus, 1.0)] {
            let mut mus = eigenvalues(&es.asymptotic_matrix(side, lam)).unwrap();
            let sq = (c64(1.0, 0.0) + lam * 4.0).sqrt();
            let mut want = vec![(sq + a) * 0.5, (-sq + a) * 0.5];
            let key = |z: &C64| (z.re, z.im);
            mus.sort_by(|x, y| key(x).partial_cmp(&key(y)).unwrap());
            want.sort_by(|x, y| key(x).partial_cmp(&key(y)).unwrap());
            for (m, w) in mus.iter().zip(&want) {
                assert!((m - w).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn burgers_decay_rate() {
        let es = burgers_es(true);
        let (c1, c2) = es.decay;
        // 1 − tanh(x/2) ≈ 2e^{−x}
        assert!((c2 - 1.0).abs() < 1e-3, "{c2}");
        assert!(c1 > 1.0 && c1 < 3.0, "{c1}");
        let tail = es.tail_deviation(c64(1.0, 0.0), es.half_length);
        assert!(tail <= c1 * (-es.half_length / c2).exp());
    }

    #[test]
    fn identity_and_general_agree() {
        let es1 = burgers_es(true);
        let es2 = assemble_general_viscous(es1.profile.clone().unwrap(), &Model::viscous(Burgers)).unwrap();
        for x in [-3.0, -0.2, 0.0, 1.7] {
            let lam = c64(0.5, x);
            assert!(close(&es1.coefficient(x, lam), &es2.coefficient(x, lam), 1e-14));
        }
    }

    #[test]
    fn identity_assembly_rejects_general_b() {
        let m = Model::viscous(Gnl2x2 { b: [1.0, 2.0] });
        let p = Arc::new(solve_profile(&m, 0.1, None).unwrap());
        assert!(matches!(assemble_identity_viscous(p, &m, true), Err(Error::WrongFormulation(_))));
    }

    #[test]
    fn gnl2x2_general_b_lower_left() {
        let m = Model::viscous(Gnl2x2 { b: [1.0, 2.0] });
        let p = Arc::new(solve_profile(&m, 0.1, None).unwrap());
        let es = assemble_general_viscous(p.clone(), &m).unwrap();
        let a = es.coefficient(0.0, c64(1.0, 0.0));
        assert_eq!(a[(2, 0)], c64(1.0, 0.0));
        assert_eq!(a[(3, 1)], c64(0.5, 0.0));
        assert_eq!(a[(2, 1)], c64(0.0, 0.0));
        assert_eq!(a[(0, 2)], c64(1.0, 0.0));
        // right block is B⁻¹ Df(ū(0))
        let u0 = p.eval(0.0).0;
        let want = [[u0[0], 0.0], [0.5, 0.5]];
        for i in 0..2 {
            for j in 0..2 {
                assert!((a[(2 + i, 2 + j)].re - want[i][j]).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn jin_xin_balanced_flux_at_zero() {
        let sys = JinXin::default();
        let u = State::from_element(1, 0.0);
        let v = sys.equilibrium(&u);
        let b = balanced_blocks(&sys, &u, &v).unwrap();
        let lam = c64(0.3, -0.8);
        let m = balanced_matrix(&b, lam);
        let want = CMat::from_row_slice(2, 2, &[c64(0.0, 0.0), c64(-1.0, 0.0), -lam * (lam + 1.0), c64(0.0, 0.0)]);
        assert!(close(&m, &want, 1e-15));
        assert!((sys.jacobians(&u, &v).flux_matrix().determinant() + 1.0).abs() < 1e-15);
    }

    #[test]
    fn balanced_flux_is_the_definition_line() {
        let sys = JinXin::default();
        for uu in [-0.3, 0.1, 0.45] {
            let u = State::from_element(1, uu);
            let v = sys.equilibrium(&u);
            let j = sys.jacobians(&u, &v);
            let lam = c64(0.7, 0.2);
            let ainv = cx(&j.flux_matrix().try_inverse().unwrap());
            let q = cx(&j.source_matrix());
            let left = CMat::from_diagonal(&nalgebra::DVector::from_vec(vec![lam.inv(), c64(1.0, 0.0)]));
            let right = CMat::from_diagonal(&nalgebra::DVector::from_vec(vec![lam, c64(1.0, 0.0)]));
            let def = &left * (q - CMat::identity(2, 2) * lam) * &ainv * &right;
            let m = balanced_matrix(&balanced_blocks(&sys, &u, &v).unwrap(), lam);
            assert!(close(&m, &def, 1e-14));
            // the simplified second form drops the −λ terms and does not agree
            let simplified = CMat::from_row_slice(2, 2, &[c64(1.0, 0.0), c64(0.0, 0.0), c64(j.qu[(0, 0)], 0.0), c64(j.qv[(0, 0)], 0.0)]) * &ainv * &right;
            assert!(max_abs(&(m - simplified)) > 0.1);
            // leading order in λ: [[0, −1], [−λ, f'(ū)]]
            let small = c64(1e-4, 1e-4);
            let m = balanced_matrix(&balanced_blocks(&sys, &u, &v).unwrap(), small);
            let lead = CMat::from_row_slice(2, 2, &[c64(0.0, 0.0), c64(-1.0, 0.0), -small, c64(uu, 0.0)]);
            assert!(max_abs(&(m - lead)) <= 2.0 * small.norm_sqr() + 1e-12 + small.norm() * 1.01);
        }
    }

    #[test]
    fn jin_xin_plus_limit() {
        let m = Model::relaxation(JinXin::default());
        let p = Arc::new(solve_profile(&m, 0.1, None).unwrap());
        let es = assemble_relaxation_balanced_flux(p, &m).unwrap();
        let lam = c64(0.5, 0.25);
        let ap = es.asymptotic_matrix(Side::Plus, lam);
        // ū₊ = −0.1: Ẽ = 0, E = −1, H̃ = −1, H = f'(ū₊) = −0.1, F̃ = −1, F = 0
        let want = CMat::from_row_slice(2, 2, &[c64(0.0, 0.0), c64(-1.0, 0.0), -lam - lam * lam, c64(-0.1, 0.0)]);
        assert!(close(&ap, &want, 1e-14));
    }

    #[test]
    fn splitting_dimensions() {
        let es = burgers_es(true);
        assert_eq!(check_consistent_splitting(&es, c64(1.0, 0.0)).unwrap(), (1, 1));
        assert!(matches!(check_consistent_splitting(&es, c64(0.0, 0.0)), Err(Error::SplittingFailure(_))));
        assert!(check_consistent_splitting(&es, c64(0.0, 1.0)).is_ok());
    }

    #[test]
    fn multid_decouples_at_zero_frequency() {
        let m = MultidModel::default();
        let p = Arc::new(multid_profile(&m, 1.0, 24.0));
        let es = assemble_multid_model(p.clone(), m, 0.0).unwrap();
        let b = burgers_es(true);
        let lam = c64(0.6, 0.4);
        for x in [-2.0, 0.0, 0.5] {
            let a = es.coefficient(x, lam);
            let bb = b.coefficient(x, lam);
            // component 1 rows/cols (0, 2) carry Burgers
            assert!((a[(2, 0)] - bb[(1, 0)]).norm() < 1e-14);
            assert!((a[(2, 2)] - bb[(1, 1)]).norm() < 1e-7);
            assert_eq!(a[(2, 1)], c64(0.0, 0.0));
            assert_eq!(a[(2, 3)], c64(0.0, 0.0));
            assert_eq!(a[(3, 0)], c64(0.0, 0.0));
            assert_eq!(a[(3, 3)], c64(1.0, 0.0));
            assert_eq!(a[(3, 1)], lam);
        }
    }

    #[test]
    fn multid_hand_built() {
        let m = MultidModel::default();
        let p = Arc::new(multid_profile(&m, 1.0, 24.0));
        let es = assemble_multid_model(p.clone(), m, 0.5).unwrap();
        let u1 = p.eval(0.0).0[0];
        let z = c64(0.0, 0.0);
        let o = c64(1.0, 0.0);
        let want = CMat::from_row_slice(
            4,
            4,
            &[z, z, o, z, z, z, z, o, c64(1.25, 0.0), c64(0.0, 0.5), c64(u1, 0.0), z, c64(0.0, 0.5), c64(1.25, 0.0), z, o],
        );
        assert!(close(&es.coefficient(0.0, o), &want, 1e-15));
    }

    #[test]
    fn multid_symbol_positive_and_parabolicity() {
        let m = MultidModel::default();
        for u in [-1.0, 1.0] {
            let th = symbol_positivity(&m, &State::from_column_slice(&[u, 0.0]), 512);
            assert!((th - 1.0).abs() < 1e-12);
        }
        let bad = MultidModel { b12: [3.0, 0.0], ..MultidModel::default() };
        assert!(matches!(parabolicity_check(&bad), Err(Error::NotParabolic(_))));
    }

    #[test]
    fn spectral_point_roundtrip() {
        let lam = c64(0.013, -0.2);
        let sp = SpectralPoint::with_rescaling(lam, -0.9, 1.3, 0.05);
        let back = SpectralPoint::from_rescaled(sp.rescaled.unwrap(), -0.9, 1.3, 0.05);
        assert!((back.lambda - lam).norm() <= 1e-14 * lam.norm());
    }

    #[test]
    fn translational_mode_residual_is_small() {
        let p = Arc::new(burgers_profile(0.1, 240.0));
        let es = assemble_identity_viscous(p, &Model::viscous(Burgers), false).unwrap();
        let r = translational_residual(&es).unwrap();
        assert!(r < 1e-6, "{r}");
        assert!(matches!(translational_residual(&burgers_es(true)), Err(Error::WrongFormulation(_))));
    }

    #[test]
    fn unintegrated_burgers_kernel() {
        let es = burgers_es(false);
        let p = es.profile.clone().unwrap();
        // 𝔸(x, 0) ū'-column: (ū', ū'') with ū'' = ū ū'
        let x = 0.7;
        let (u, du) = p.eval(x);
        let a = es.coefficient(x, c64(0.0, 0.0));
        assert!((a[(1, 0)].re - du[0]).abs() < 1e-12);
        assert!((a[(1, 1)].re - u[0]).abs() < 1e-12);
    }
}
