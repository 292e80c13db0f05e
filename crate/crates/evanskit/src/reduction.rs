//! Slow/fast block reduction of the eigenvalue systems and the frequency regimes.

use std::sync::Arc;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::evalsys::{a_eps, balanced_blocks, cx, EigenvalueSystem, Formulation};
use crate::linalg::{c64, eigenvalues, max_abs, spectral_norm, spectral_projector, CMat, RMat, C64};
use crate::model::{
    characteristic_decomposition, genuine_nonlinearity_and_diffusion, Model, RelaxationSystem, SpectralDecomposition, State,
    ViscousSystem,
};
use crate::ode::Dopri5;
use crate::profile::burgers_eta;

/// Frequency regimes in rescaled `λ̂`: gap, reduced parabolic and parabolic.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Regime {
    I,
    II,
    III,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum BlockKind {
    /// Fast decaying transverse modes.
    NuMinus,
    /// Superslow modes decaying for `Re λ > 0`.
    RhoMinus,
    /// The two-dimensional `(η, z)` block.
    Principal,
    RhoPlus,
    NuPlus,
}

const ORDER: [BlockKind; 5] = [BlockKind::NuMinus, BlockKind::RhoMinus, BlockKind::Principal, BlockKind::RhoPlus, BlockKind::NuPlus];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Block {
    pub kind: BlockKind,
    pub start: usize,
    pub size: usize,
}

impl Block {
    pub fn range(&self) -> std::ops::Range<usize> {
        self.start..self.start + self.size
    }
}

fn find(blocks: &[Block], kind: BlockKind) -> Block {
    *blocks.iter().find(|b| b.kind == kind).expect("all five blocks are listed")
}

enum Source {
    Viscous { sys: Arc<dyn ViscousSystem>, identity: bool, base_a: SpectralDecomposition, base_g: SpectralDecomposition },
    Relaxation { sys: Arc<dyn RelaxationSystem> },
}

struct Frozen {
    l: CMat,
    r: CMat,
    blocks: Vec<Block>,
    units: Vec<(usize, usize)>,
}

// eigen-decomposition with r_j scaled against the base covectors, so it varies smoothly with the state
fn aligned(a: &RMat, base: &SpectralDecomposition) -> Result<SpectralDecomposition> {
    let mut d = characteristic_decomposition(a)?;
    for j in 0..d.a.len() {
        let c = base.l_row(j).dot(&d.r_col(j));
        if !(c.abs() > 1e-8) {
            return Err(Error::DegenerateMode(c.abs()));
        }
        let mut col = d.r.column_mut(j);
        col /= c;
    }
    d.l = d.r.clone().try_inverse().ok_or_else(|| Error::NotStrictlyHyperbolic("eigenvectors are dependent".into()))?;
    d.p = base.p;
    Ok(d)
}

fn cvec(v: &State) -> CMat {
    CMat::from_iterator(v.len(), 1, v.iter().map(|&x| c64(x, 0.0)))
}

fn crow(v: &State) -> CMat {
    cvec(v).transpose()
}

fn stack_cols(parts: &[CMat]) -> CMat {
    let rows = parts[0].nrows();
    let cols: usize = parts.iter().map(|p| p.ncols()).sum();
    let mut out = CMat::zeros(rows, cols);
    let mut c = 0;
    for p in parts {
        out.view_mut((0, c), (rows, p.ncols())).copy_from(p);
        c += p.ncols();
    }
    out
}

fn stack_rows(parts: &[CMat]) -> CMat {
    let cols = parts[0].ncols();
    let rows: usize = parts.iter().map(|p| p.nrows()).sum();
    let mut out = CMat::zeros(rows, cols);
    let mut r = 0;
    for p in parts {
        out.view_mut((r, 0), (p.nrows(), cols)).copy_from(p);
        r += p.nrows();
    }
    out
}

// (x, y) -> column [x; y]
fn pair_col(top: &CMat, bottom: &CMat) -> CMat {
    stack_rows(&[top.clone(), bottom.clone()])
}

fn pair_row(left: &CMat, right: &CMat) -> CMat {
    stack_cols(&[left.clone(), right.clone()])
}

struct Group {
    kind: BlockKind,
    order_key: f64,
    preds: Vec<C64>,
    ref_r: CMat,
    ref_l: CMat,
}

impl Source {
    fn from_system(es: &EigenvalueSystem) -> Result<Source> {
        let model = es.model.as_ref().ok_or_else(|| Error::WrongFormulation("reduction needs a model".into()))?;
        match (es.formulation, model) {
            (Formulation::IntegratedIdentityViscous | Formulation::IntegratedGeneralViscous, Model::Viscous(sys)) => {
                let u0 = sys.base_state();
                let a0 = sys.jacobian(&u0);
                let b0 = sys.viscosity(&u0);
                let bi = b0.try_inverse().ok_or(Error::SingularViscosity(0.0))?;
                Ok(Source::Viscous {
                    sys: sys.clone(),
                    identity: es.formulation == Formulation::IntegratedIdentityViscous,
                    base_g: characteristic_decomposition(&(&bi * &a0))?,
                    base_a: characteristic_decomposition(&a0)?,
                })
            }
            (Formulation::BalancedFluxRelaxation, Model::Relaxation(sys)) => {
                if sys.n() != 1 || sys.r() != 1 {
                    return Err(Error::WrongFormulation("relaxation reduction is implemented for n = r = 1".into()));
                }
                Ok(Source::Relaxation { sys: sys.clone() })
            }
            _ => Err(Error::WrongFormulation(format!("no block reduction for {:?}", es.formulation))),
        }
    }

    fn frozen(&self, u: &State, du: &State, v: Option<&State>, lambda: C64) -> Result<Frozen> {
        match self {
            Source::Relaxation { sys } => {
                let v = v.ok_or_else(|| Error::WrongFormulation("missing relaxation variable".into()))?;
                let b = balanced_blocks(sys.as_ref(), u, v)?;
                let e = c64(b.e[(0, 0)], 0.0);
                let l = CMat::from_row_slice(2, 2, &[c64(1.0, 0.0), c64(0.0, 0.0), c64(0.0, 0.0), e]);
                let r = CMat::from_row_slice(2, 2, &[c64(1.0, 0.0), c64(0.0, 0.0), c64(0.0, 0.0), c64(1.0, 0.0) / e]);
                let mut blocks: Vec<Block> = ORDER.iter().map(|&kind| Block { kind, start: 0, size: 0 }).collect();
                for (i, b) in blocks.iter_mut().enumerate() {
                    if b.kind == BlockKind::Principal {
                        b.size = 2;
                    } else if i > 2 {
                        b.start = 2;
                    }
                }
                Ok(Frozen { l, r, blocks, units: vec![(0, 2)] })
            }
            Source::Viscous { sys, identity, base_a, base_g } => viscous_frozen(sys.as_ref(), *identity, base_a, base_g, u, du, lambda),
        }
    }
}

fn viscous_frozen(
    sys: &dyn ViscousSystem,
    identity: bool,
    base_a: &SpectralDecomposition,
    base_g: &SpectralDecomposition,
    u: &State,
    du: &State,
    lambda: C64,
) -> Result<Frozen> {
    let n = sys.n();
    let b = sys.viscosity(u);
    let bi = b.clone().try_inverse().ok_or(Error::SingularViscosity(0.0))?;
    let a = if identity { sys.jacobian(u) } else { a_eps(sys, u, du) };
    let g = &bi * &a;
    let da = aligned(&a, base_a)?;
    let dg = aligned(&g, base_g)?;
    let (p, pg) = (da.p, dg.p);

    let zero_c = CMat::zeros(n, 1);
    let zero_r = CMat::zeros(1, n);
    let bc = cx(&b);
    let bic = cx(&bi);
    let mut groups: Vec<Group> = Vec::new();
    let mut fast_min = f64::INFINITY;
    let mut slow_min = f64::INFINITY;
    for j in (0..n).filter(|&j| j != pg) {
        let gam = dg.a[j];
        if gam.abs() < 1e-8 {
            return Err(Error::DegenerateMode(gam.abs()));
        }
        fast_min = fast_min.min(gam.abs());
        let s = cvec(&dg.r_col(j));
        let st = crow(&dg.l_row(j));
        groups.push(Group {
            kind: if gam < 0.0 { BlockKind::NuMinus } else { BlockKind::NuPlus },
            order_key: gam,
            preds: vec![c64(gam, 0.0)],
            ref_r: pair_col(&s, &(&s * c64(gam, 0.0))),
            ref_l: pair_row(&zero_r, &(st / c64(gam, 0.0))),
        });
    }
    for j in (0..n).filter(|&j| j != p) {
        let aj = da.a[j];
        if aj.abs() < 1e-8 {
            return Err(Error::DegenerateMode(aj.abs()));
        }
        slow_min = slow_min.min(aj.abs());
        let (lj, rj) = (crow(&da.l_row(j)), cvec(&da.r_col(j)));
        let beta_j = (&lj * &bc * &rj)[(0, 0)];
        groups.push(Group {
            kind: if aj > 0.0 { BlockKind::RhoMinus } else { BlockKind::RhoPlus },
            order_key: j as f64,
            preds: vec![-lambda / aj + lambda * lambda * beta_j / (aj * aj * aj)],
            ref_r: pair_col(&rj, &zero_c),
            ref_l: pair_row(&lj, &(-(&lj * &bc) / c64(aj, 0.0))),
        });
    }
    if n > 1 {
        let lambda_max = 0.25 * fast_min * slow_min;
        if lambda.norm() > lambda_max {
            return Err(Error::ExpansionDomainExceeded(lambda.norm()));
        }
    }
    let (lp, rp) = (crow(&da.l_row(p)), cvec(&da.r_col(p)));
    let mut sp = cvec(&dg.r_col(pg));
    let mut stp = crow(&dg.l_row(pg));
    let k = (&lp * &sp)[(0, 0)];
    sp /= k;
    stp *= k;
    let beta_p = (&lp * &bc * &rp)[(0, 0)];
    let ap = c64(da.a[p], 0.0);
    let disc = (ap * ap + beta_p * lambda * 4.0).sqrt();
    groups.push(Group {
        kind: BlockKind::Principal,
        order_key: 0.0,
        preds: vec![(ap + disc) / (beta_p * 2.0), (ap - disc) / (beta_p * 2.0)],
        ref_r: stack_cols(&[pair_col(&rp, &zero_c), pair_col(&zero_c, &sp)]),
        ref_l: stack_rows(&[pair_row(&lp, &zero_r), pair_row(&zero_r, &stp)]),
    });

    let mut m = CMat::zeros(2 * n, 2 * n);
    m.view_mut((0, n), (n, n)).copy_from(&CMat::identity(n, n));
    m.view_mut((n, 0), (n, n)).copy_from(&(&bic * lambda));
    m.view_mut((n, n), (n, n)).copy_from(&cx(&g));
    let eig = eigenvalues(&m)?;

    // greedy matching of eigenvalues to predicted locations
    let preds: Vec<(usize, C64)> = groups.iter().enumerate().flat_map(|(gi, g)| g.preds.iter().map(move |&z| (gi, z))).collect();
    let mut pairs: Vec<(f64, usize, usize)> = Vec::new();
    for (pi, &(_, z)) in preds.iter().enumerate() {
        for (ei, &e) in eig.iter().enumerate() {
            pairs.push(((z - e).norm(), pi, ei));
        }
    }
    pairs.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    let mut pred_used = vec![false; preds.len()];
    let mut eig_group = vec![usize::MAX; eig.len()];
    let mut eig_pred = vec![0; eig.len()];
    for (_, pi, ei) in pairs {
        if !pred_used[pi] && eig_group[ei] == usize::MAX {
            pred_used[pi] = true;
            eig_group[ei] = preds[pi].0;
            eig_pred[ei] = pi;
        }
    }
    for (ei, &e) in eig.iter().enumerate() {
        let own = (e - preds[eig_pred[ei]].1).norm();
        let other = preds.iter().filter(|(g, _)| *g != eig_group[ei]).map(|(_, z)| (e - z).norm()).fold(f64::INFINITY, f64::min);
        if !(own < other) {
            return Err(Error::DegenerateMode(other));
        }
    }
    let nearest_group = |z: C64| -> usize {
        let k = (0..eig.len()).min_by(|&a, &b| (eig[a] - z).norm().partial_cmp(&(eig[b] - z).norm()).unwrap()).unwrap();
        eig_group[k]
    };

    let mut ls = Vec::new();
    let mut rs = Vec::new();
    let mut blocks = Vec::new();
    let mut units = Vec::new();
    let mut start = 0;
    for kind in ORDER {
        let mut members: Vec<usize> = (0..groups.len()).filter(|&gi| groups[gi].kind == kind).collect();
        members.sort_by(|&a, &b| groups[a].order_key.partial_cmp(&groups[b].order_key).unwrap());
        let bstart = start;
        for gi in members {
            let gr = &groups[gi];
            let proj = spectral_projector(&m, |z| nearest_group(z) == gi)?;
            let rg = &proj * &gr.ref_r;
            let pair = &gr.ref_l * &proj * &rg;
            let inv = pair.try_inverse().ok_or(Error::BranchCrossing(lambda))?;
            let lg = inv * &gr.ref_l * &proj;
            units.push((start, rg.ncols()));
            start += rg.ncols();
            rs.push(rg);
            ls.push(lg);
        }
        blocks.push(Block { kind, start: bstart, size: start - bstart });
    }
    Ok(Frozen { l: stack_rows(&ls), r: stack_cols(&rs), blocks, units })
}

/// Block bases `𝕃(x)`, `ℝ̂(x)` and `ℝ̂'(x)` on a grid at fixed `λ`.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockBasis {
    pub lambda: C64,
    pub x: Vec<f64>,
    pub l: Vec<CMat>,
    pub r: Vec<CMat>,
    pub dr: Vec<CMat>,
    pub blocks: Vec<Block>,
    /// Diagonal units renormalized together: every transverse mode alone, and the principal pair.
    pub units: Vec<(usize, usize)>,
    pub normalized: bool,
}

impl BlockBasis {
    pub fn dim(&self) -> usize {
        self.l[0].nrows()
    }

    pub fn block(&self, kind: BlockKind) -> Block {
        find(&self.blocks, kind)
    }

    /// `max_x |𝕃ℝ̂ − I|`.
    pub fn biorthogonality_defect(&self) -> f64 {
        let n = self.dim();
        self.l.iter().zip(&self.r).map(|(l, r)| max_abs(&(l * r - CMat::identity(n, n)))).fold(0.0, f64::max)
    }

    /// `max_x |l r'|` restricted to the diagonal units.
    pub fn unit_derivative_defect(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for (l, dr) in self.l.iter().zip(&self.dr) {
            for &(s, k) in &self.units {
                worst = worst.max(max_abs(&(l.rows(s, k) * dr.columns(s, k))));
            }
        }
        worst
    }
}

fn grid_indices(points: usize, target: usize) -> Vec<usize> {
    let mid = (points - 1) / 2;
    let stride = ((points - 1) / (target.max(3) - 1)).max(1);
    let k = mid / stride;
    (0..=2 * k).map(|i| mid + i * stride - k * stride).collect()
}

pub const DEFAULT_BASIS_POINTS: usize = 401;

pub fn build_block_basis(es: &EigenvalueSystem, lambda: C64) -> Result<BlockBasis> {
    build_block_basis_with(es, lambda, DEFAULT_BASIS_POINTS)
}

/// Mode-classified bases at `points` profile grid points; `ℝ̂'` is the state-space derivative along `ū'`.
pub fn build_block_basis_with(es: &EigenvalueSystem, lambda: C64, points: usize) -> Result<BlockBasis> {
    let src = Source::from_system(es)?;
    let prof = es.profile.as_ref().ok_or_else(|| Error::WrongFormulation("reduction needs a profile".into()))?;
    let idx = grid_indices(prof.points(), points);
    let mut basis = BlockBasis {
        lambda,
        x: Vec::with_capacity(idx.len()),
        l: Vec::with_capacity(idx.len()),
        r: Vec::with_capacity(idx.len()),
        dr: Vec::with_capacity(idx.len()),
        blocks: Vec::new(),
        units: Vec::new(),
        normalized: false,
    };
    for &i in &idx {
        let (u, du) = (&prof.u[i], &prof.du[i]);
        let v = prof.v.as_ref().map(|v| &v[i]);
        let dv = prof.dv.as_ref().map(|d| &d[i]);
        let f = src.frozen(u, du, v, lambda)?;
        let speed = (du.norm_squared() + dv.map_or(0.0, |d| d.norm_squared())).sqrt();
        let dr = if speed > 0.0 {
            let scale = 1e-5 * (1.0 + u.norm() + v.map_or(0.0, |v| v.norm()));
            let h = scale / speed;
            let up = u + du * h;
            let um = u - du * h;
            let vp = v.zip(dv).map(|(v, d)| v + d * h);
            let vm = v.zip(dv).map(|(v, d)| v - d * h);
            let fp = src.frozen(&up, du, vp.as_ref(), lambda)?;
            let fm = src.frozen(&um, du, vm.as_ref(), lambda)?;
            (fp.r - fm.r) / c64(2.0 * h, 0.0)
        } else {
            CMat::zeros(f.r.nrows(), f.r.ncols())
        };
        if basis.blocks.is_empty() {
            basis.blocks = f.blocks.clone();
            basis.units = f.units.clone();
        } else if basis.blocks != f.blocks {
            return Err(Error::DegenerateMode(prof.x[i]));
        }
        basis.x.push(prof.x[i]);
        basis.l.push(f.l);
        basis.r.push(f.r);
        basis.dr.push(dr);
    }
    Ok(basis)
}

/// Renormalizes each diagonal unit by `α' = −(l r') α`, `α(0) = I`.
pub fn normalize_basis(basis: &BlockBasis) -> BlockBasis {
    let mut out = basis.clone();
    let np = basis.x.len();
    let mid = (0..np).min_by(|&a, &b| basis.x[a].abs().partial_cmp(&basis.x[b].abs()).unwrap()).unwrap();
    for &(s, k) in &basis.units {
        let kmat: Vec<CMat> = (0..np).map(|i| basis.l[i].rows(s, k) * basis.dr[i].columns(s, k)).collect();
        let id = CMat::identity(k, k);
        let mut alpha = vec![id.clone(); np];
        let step = |from: usize, to: usize, a: &CMat| -> CMat {
            let h = c64(basis.x[to] - basis.x[from], 0.0);
            let lhs = &id + &kmat[to] * (h * 0.5);
            let rhs = (&id - &kmat[from] * (h * 0.5)) * a;
            lhs.lu().solve(&rhs).unwrap_or(rhs)
        };
        for i in mid..np - 1 {
            alpha[i + 1] = step(i, i + 1, &alpha[i]);
        }
        for i in (1..=mid).rev() {
            alpha[i - 1] = step(i, i - 1, &alpha[i]);
        }
        for i in 0..np {
            let a = &alpha[i];
            let ai = a.clone().try_inverse().unwrap_or_else(|| id.clone());
            let da = -(&kmat[i] * a);
            let rows = &ai * basis.l[i].rows(s, k);
            let cols = basis.r[i].columns(s, k) * a;
            let dcols = basis.dr[i].columns(s, k) * a + basis.r[i].columns(s, k) * da;
            out.l[i].rows_mut(s, k).copy_from(&rows);
            out.r[i].columns_mut(s, k).copy_from(&cols);
            out.dr[i].columns_mut(s, k).copy_from(&dcols);
        }
    }
    out.normalized = true;
    out
}

/// `Z' = (𝕄 + δΘ) Z` with `𝕄` block diagonal, on the basis grid.
#[derive(Debug, Clone, PartialEq)]
pub struct ReducedSystem {
    pub lambda: C64,
    pub eps: f64,
    pub big_lambda: f64,
    pub beta: f64,
    pub x: Vec<f64>,
    pub blocks: Vec<Block>,
    pub m: Vec<CMat>,
    pub theta: Vec<CMat>,
    pub delta: Vec<f64>,
    /// Principal characteristic speed `a_p(ū(x))`.
    pub a_p: Vec<f64>,
    /// `max |𝕃𝔸ℝ̂ − 𝕃ℝ̂' − (𝕄 + δΘ)|`.
    pub conjugacy_residual: f64,
    pub theta_sup: f64,
    /// `max |Θ|` on the `(η, z)` block.
    pub principal_theta_sup: f64,
    /// Fit `δ(x) ≤ C_δ (Λ/β) ε² e^{−θ̂ (Λ/β) ε |x|}`.
    pub delta_constant: f64,
    pub delta_rate: f64,
    /// Smallest `|Re μ|` of the fast blocks at `x = ±L`.
    pub fast_gap: Option<f64>,
}

pub const C_THETA: f64 = 20.0;
pub const C_DELTA: f64 = 2.0;

impl ReducedSystem {
    pub fn block(&self, kind: BlockKind) -> Block {
        find(&self.blocks, kind)
    }

    pub fn m0(&self, i: usize) -> CMat {
        let b = self.block(BlockKind::Principal);
        self.m[i].view((b.start, b.start), (2, 2)).into_owned()
    }

    /// The full reduced coefficient at grid index `i`.
    pub fn coefficient(&self, i: usize) -> CMat {
        &self.m[i] + &self.theta[i] * c64(self.delta[i], 0.0)
    }
}

fn endpoints_lp(model: &Model, u_minus: &State) -> Result<State> {
    let d = characteristic_decomposition(&model.jacobian(u_minus)?)?;
    Ok(d.l_row(d.p))
}

/// Conjugates the system by a (normalized) basis and measures `δ`, `Θ` and their certificates.
pub fn block_diagonalize(es: &EigenvalueSystem, basis: &BlockBasis) -> Result<ReducedSystem> {
    let basis = if basis.normalized { basis.clone() } else { normalize_basis(basis) };
    let prof = es.profile.as_ref().ok_or_else(|| Error::WrongFormulation("reduction needs a profile".into()))?;
    let model = es.model.as_ref().ok_or_else(|| Error::WrongFormulation("reduction needs a model".into()))?;
    let (big_lambda, beta) = genuine_nonlinearity_and_diffusion(model, &prof.u_minus)?;
    let lp = endpoints_lp(model, &prof.u_minus)?;
    let eps = prof.eps;
    let lambda = basis.lambda;
    let n = basis.dim();
    let mut red = ReducedSystem {
        lambda,
        eps,
        big_lambda,
        beta,
        x: basis.x.clone(),
        blocks: basis.blocks.clone(),
        m: Vec::new(),
        theta: Vec::new(),
        delta: Vec::new(),
        a_p: Vec::new(),
        conjugacy_residual: 0.0,
        theta_sup: 0.0,
        principal_theta_sup: 0.0,
        delta_constant: 0.0,
        delta_rate: f64::NAN,
        fast_gap: None,
    };
    let pb = red.block(BlockKind::Principal);
    for (i, &x) in basis.x.iter().enumerate() {
        let (u, du) = prof.eval(x);
        let a = es.coefficient(x, lambda);
        let t = &basis.l[i] * a * &basis.r[i];
        let full = &t - &basis.l[i] * &basis.dr[i];
        let mut m = CMat::zeros(n, n);
        for b in &basis.blocks {
            if b.size > 0 {
                m.view_mut((b.start, b.start), (b.size, b.size)).copy_from(&t.view((b.start, b.start), (b.size, b.size)));
            }
        }
        let delta = lp.dot(&du).abs();
        let coupling = &full - &m;
        let theta = if delta > 0.0 { &coupling / c64(delta, 0.0) } else { CMat::zeros(n, n) };
        red.conjugacy_residual = red.conjugacy_residual.max(max_abs(&(&full - (&m + &theta * c64(delta, 0.0)))));
        red.theta_sup = red.theta_sup.max(max_abs(&theta));
        red.principal_theta_sup = red.principal_theta_sup.max(max_abs(&theta.view((pb.start, pb.start), (2, 2)).into_owned()));
        let d = characteristic_decomposition(&model.jacobian(&u)?)?;
        red.a_p.push(d.a[d.p]);
        red.m.push(m);
        red.theta.push(theta);
        red.delta.push(delta);
    }
    let k = big_lambda.abs() / beta;
    let (rate, constant) = fit_envelope(&red.x, &red.delta, k * eps, prof.half_length / 2.0, eps * eps * k);
    red.delta_rate = rate;
    red.delta_constant = constant;

    let fast: Vec<Block> = red.blocks.iter().filter(|b| matches!(b.kind, BlockKind::NuMinus | BlockKind::NuPlus) && b.size > 0).cloned().collect();
    if !fast.is_empty() {
        let mut g = f64::INFINITY;
        for i in [0, red.x.len() - 1] {
            for b in &fast {
                for j in b.range() {
                    g = g.min(red.m[i][(j, j)].re.abs());
                }
            }
        }
        red.fast_gap = Some(g);
    }
    if red.theta_sup > 2.0 * C_THETA {
        return Err(Error::CertificateFailure(format!("sup |Θ| = {} exceeds 2·{C_THETA}", red.theta_sup)));
    }
    if red.delta_constant > 2.0 * C_DELTA {
        return Err(Error::CertificateFailure(format!("δ envelope constant {} exceeds 2·{C_DELTA}", red.delta_constant)));
    }
    Ok(red)
}

// fits y ≤ C·amp·e^{−θ k |x|}: θ from the tails |x| ≥ x_min, C as the sup ratio
fn fit_envelope(x: &[f64], y: &[f64], k: f64, x_min: f64, amp: f64) -> (f64, f64) {
    let pts: Vec<(f64, f64)> = x
        .iter()
        .zip(y)
        .filter(|(x, y)| x.abs() >= x_min && **y > 1e-300)
        .map(|(x, y)| (k * x.abs(), y.ln()))
        .collect();
    if pts.len() < 3 {
        return (f64::NAN, 0.0);
    }
    let m = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / m;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / m;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    let theta = -sxy / sxx;
    let c = x.iter().zip(y).map(|(x, y)| y / (amp * (-theta * k * x.abs()).exp())).fold(0.0, f64::max);
    (theta, c)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KeyFacts {
    /// `max_± |E s_p − r_p|`.
    pub e_s_minus_r: f64,
    /// `max_± |s̃_p H̃ − l_p/β|` with `s̃_p s_p = 1`.
    pub s_h_minus_l_over_beta: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BurgersBlockReport {
    pub lambda: C64,
    pub eps: f64,
    /// `sup_x |M₀ − M̃₀|` entrywise.
    pub diff: [[f64; 2]; 2],
    /// `[[|λ|, |λ|+ε], [|λ|ε, |λ|+ε²]]`.
    pub orders: [[f64; 2]; 2],
    /// `diff / orders`.
    pub constants: [[f64; 2]; 2],
    pub key_facts: Option<KeyFacts>,
}

/// Compares the principal block with `M̃₀ = [[0, 1], [λ/β, a_p/β]]`.
pub fn compare_burgers_block(es: &EigenvalueSystem, red: &ReducedSystem) -> Result<BurgersBlockReport> {
    let (lam, beta, eps) = (red.lambda, red.beta, red.eps);
    let mut diff = [[0.0f64; 2]; 2];
    for i in 0..red.x.len() {
        let m0 = red.m0(i);
        let mt = CMat::from_row_slice(2, 2, &[c64(0.0, 0.0), c64(1.0, 0.0), lam / beta, c64(red.a_p[i] / beta, 0.0)]);
        for r in 0..2 {
            for c in 0..2 {
                diff[r][c] = diff[r][c].max((m0[(r, c)] - mt[(r, c)]).norm());
            }
        }
    }
    let a = lam.norm();
    let orders = [[a, a + eps], [a * eps, a + eps * eps]];
    let mut constants = [[0.0; 2]; 2];
    for r in 0..2 {
        for c in 0..2 {
            constants[r][c] = if orders[r][c] > 0.0 { diff[r][c] / orders[r][c] } else { 0.0 };
        }
    }
    let key_facts = match (es.model.as_ref(), es.profile.as_ref()) {
        (Some(Model::Relaxation(sys)), Some(p)) if sys.n() == 1 && sys.r() == 1 => {
            let mut kf = KeyFacts { e_s_minus_r: 0.0, s_h_minus_l_over_beta: 0.0 };
            for (u, v) in [(&p.u_minus, p.v_minus.as_ref()), (&p.u_plus, p.v_plus.as_ref())] {
                let v = v.ok_or_else(|| Error::WrongFormulation("missing relaxation endpoint".into()))?;
                let b = balanced_blocks(sys.as_ref(), u, v)?;
                let e = b.e[(0, 0)];
                let (sp, stp) = (1.0 / e, e);
                kf.e_s_minus_r = kf.e_s_minus_r.max((e * sp - 1.0).abs());
                kf.s_h_minus_l_over_beta = kf.s_h_minus_l_over_beta.max((stp * b.h_tilde[(0, 0)] - 1.0 / beta).abs());
            }
            Some(kf)
        }
        _ => None,
    };
    Ok(BurgersBlockReport { lambda: lam, eps, diff, orders, constants, key_facts })
}

/// Two-block system `Z' = F(x) Z`, `F = [[F₁₁, F₁₂], [F₂₁, F₂₂]]`, block 1 of size `k1` growing faster.
#[derive(Debug, Clone, PartialEq)]
pub struct TrackingProblem {
    pub x: Vec<f64>,
    pub full: Vec<CMat>,
    pub k1: usize,
}

impl TrackingProblem {
    pub fn constant(f: CMat, k1: usize, half_length: f64, points: usize) -> Self {
        let x: Vec<f64> = (0..points).map(|i| -half_length + 2.0 * half_length * i as f64 / (points - 1) as f64).collect();
        TrackingProblem { full: vec![f; points], x, k1 }
    }

    /// Splits a reduced system with the listed blocks first.
    pub fn from_reduced(red: &ReducedSystem, first: &[BlockKind]) -> Self {
        let mut order: Vec<usize> = Vec::new();
        for b in red.blocks.iter().filter(|b| first.contains(&b.kind)) {
            order.extend(b.range());
        }
        let k1 = order.len();
        for b in red.blocks.iter().filter(|b| !first.contains(&b.kind)) {
            order.extend(b.range());
        }
        let full = (0..red.x.len())
            .map(|i| {
                let c = red.coefficient(i);
                CMat::from_fn(order.len(), order.len(), |r, s| c[(order[r], order[s])])
            })
            .collect();
        TrackingProblem { x: red.x.clone(), full, k1 }
    }

    pub fn at(&self, x: f64) -> CMat {
        let n = self.x.len();
        if x <= self.x[0] {
            return self.full[0].clone();
        }
        if x >= self.x[n - 1] {
            return self.full[n - 1].clone();
        }
        let i = self.x.partition_point(|&g| g <= x).saturating_sub(1).min(n - 2);
        let t = (x - self.x[i]) / (self.x[i + 1] - self.x[i]);
        &self.full[i] * c64(1.0 - t, 0.0) + &self.full[i + 1] * c64(t, 0.0)
    }

    fn split(&self, f: &CMat) -> (CMat, CMat, CMat, CMat) {
        let (k1, n) = (self.k1, f.nrows());
        let k2 = n - k1;
        (
            f.view((0, 0), (k1, k1)).into_owned(),
            f.view((0, k1), (k1, k2)).into_owned(),
            f.view((k1, 0), (k2, k1)).into_owned(),
            f.view((k1, k1), (k2, k2)).into_owned(),
        )
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrackingResult {
    /// `Z₁ = Φ₁ Z₂`: the slow manifold, decaying toward `+∞`.
    pub phi1: Vec<CMat>,
    /// `Z₂ = Φ₂ Z₁`: the fast manifold, decaying toward `−∞`.
    pub phi2: Vec<CMat>,
    /// Asymptotic graphs at `(−∞, +∞)` for each of `Φ₁`, `Φ₂`.
    pub phi1_limits: (CMat, CMat),
    pub phi2_limits: (CMat, CMat),
    pub gap: f64,
    pub coupling: f64,
    pub sup_phi: f64,
    /// `sup|Φ| · η̂ / δ̂`.
    pub certificate: f64,
    pub iterations: usize,
}

// solves a X − X b = c
fn sylvester(a: &CMat, b: &CMat, c: &CMat) -> Option<CMat> {
    let (m, n) = (a.nrows(), b.nrows());
    let k = CMat::identity(n, n).kronecker(a) - b.transpose().kronecker(&CMat::identity(m, m));
    let vc = CMat::from_column_slice(m * n, 1, c.as_slice());
    let x = k.lu().solve(&vc)?;
    Some(CMat::from_column_slice(m, n, x.as_slice()))
}

// fixed point of  a X − X b + c − X d X = 0
fn riccati_fixed_point(a: &CMat, b: &CMat, c: &CMat, d: &CMat) -> Result<(CMat, usize)> {
    let mut x = CMat::zeros(c.nrows(), c.ncols());
    for it in 1..=200 {
        let rhs = -(c - &x * d * &x);
        let next = sylvester(a, b, &rhs).ok_or(Error::NoContraction(it))?;
        let change = max_abs(&(&next - &x));
        if !change.is_finite() || max_abs(&next) > 1e6 {
            return Err(Error::NoContraction(it));
        }
        x = next;
        if change <= 1e-15 * (1.0 + max_abs(&x)) {
            return Ok((x, it));
        }
    }
    Err(Error::NoContraction(200))
}

pub const TRACKING_THRESHOLD: f64 = 0.1;

/// Invariant graphs of the two-block system from the matrix Riccati equations with decay conditions.
pub fn tracking_reduce(p: &TrackingProblem) -> Result<TrackingResult> {
    let n = p.x.len();
    let mut coupling: f64 = 0.0;
    for f in &p.full {
        let (_, f12, f21, _) = p.split(f);
        coupling = coupling.max(spectral_norm(&f12)).max(spectral_norm(&f21));
    }
    let mut gap = f64::INFINITY;
    for f in [&p.full[0], &p.full[n - 1]] {
        let (f11, _, _, f22) = p.split(f);
        let lo = eigenvalues(&f11)?.iter().map(|z| z.re).fold(f64::INFINITY, f64::min);
        let hi = eigenvalues(&f22)?.iter().map(|z| z.re).fold(f64::NEG_INFINITY, f64::max);
        gap = gap.min(lo - hi);
    }
    if !(gap > 0.0) {
        return Err(Error::GapTooSmall(f64::INFINITY));
    }
    if coupling / gap >= TRACKING_THRESHOLD {
        return Err(Error::GapTooSmall(coupling / gap));
    }
    let mut iterations = 0;
    let mut limits = |f: &CMat| -> Result<(CMat, CMat)> {
        let (f11, f12, f21, f22) = p.split(f);
        let (phi2, i2) = riccati_fixed_point(&f22, &f11, &f21, &f12)?;
        let (phi1, i1) = riccati_fixed_point(&f11, &f22, &f12, &f21)?;
        iterations = iterations.max(i1).max(i2);
        Ok((phi1, phi2))
    };
    let (phi1_m, phi2_m) = limits(&p.full[0])?;
    let (phi1_p, phi2_p) = limits(&p.full[n - 1])?;

    let ode = Dopri5 { rtol: 1e-12, atol: 1e-15, ..Default::default() };
    let (phi2, _) = ode.integrate_grid(
        |x, phi: &CMat| {
            let (f11, f12, f21, f22) = p.split(&p.at(x));
            &f22 * phi - phi * &f11 + f21 - phi * f12 * phi
        },
        &p.x,
        phi2_m.clone(),
        |_, _| {},
    )?;
    let rev: Vec<f64> = p.x.iter().rev().cloned().collect();
    let (mut phi1, _) = ode.integrate_grid(
        |x, phi: &CMat| {
            let (f11, f12, f21, f22) = p.split(&p.at(x));
            &f11 * phi - phi * &f22 + f12 - phi * f21 * phi
        },
        &rev,
        phi1_p.clone(),
        |_, _| {},
    )?;
    phi1.reverse();
    let sup_phi = phi1.iter().chain(&phi2).map(spectral_norm).fold(0.0, f64::max);
    let certificate = if coupling > 0.0 { sup_phi * gap / coupling } else { 0.0 };
    Ok(TrackingResult {
        phi1,
        phi2,
        phi1_limits: (phi1_m, phi1_p),
        phi2_limits: (phi2_m, phi2_p),
        gap,
        coupling,
        sup_phi,
        certificate,
        iterations,
    })
}

/// Relative distance from the fast graph after evolving `z1` on it from grid point `i` to `i + 1`.
pub fn graph_drift(p: &TrackingProblem, res: &TrackingResult, i: usize, z1: &CMat) -> Result<f64> {
    let z0 = stack_rows(&[z1.clone(), &res.phi2[i] * z1]);
    let ode = Dopri5 { rtol: 1e-13, atol: 1e-16, ..Default::default() };
    let (z, _) = ode.integrate(|x, z: &CMat| p.at(x) * z, p.x[i], p.x[i + 1], z0, |_, _| {})?;
    let k1 = p.k1;
    let top = z.rows(0, k1).into_owned();
    let bottom = z.rows(k1, z.nrows() - k1).into_owned();
    Ok((bottom - &res.phi2[i + 1] * &top).norm() / z.norm())
}

/// One frequency regime with its rescaling maps `x̂ = x_scale·x`, `λ̂ = lambda_scale·λ`, `ẑ = z_scale·z`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RegimeSegment {
    pub tag: Regime,
    /// `|λ|` range in original coordinates.
    pub lo: f64,
    pub hi: f64,
    pub lo_hat: f64,
    pub hi_hat: f64,
    pub x_scale: f64,
    pub lambda_scale: f64,
    pub z_scale: f64,
}

impl RegimeSegment {
    pub fn to_hat_lambda(&self, l: C64) -> C64 {
        l * self.lambda_scale
    }
    pub fn from_hat_lambda(&self, l: C64) -> C64 {
        l / self.lambda_scale
    }
    pub fn to_hat_x(&self, x: f64) -> f64 {
        x * self.x_scale
    }
    pub fn from_hat_x(&self, x: f64) -> f64 {
        x / self.x_scale
    }
    pub fn to_hat_z(&self, z: C64) -> C64 {
        z * self.z_scale
    }
    pub fn from_hat_z(&self, z: C64) -> C64 {
        z / self.z_scale
    }
}

/// Splits `(r_min, R_max)` at `|λ̂| = C` and `|λ̂| = C/ε`.
pub fn regime_partition(eps: f64, c: f64, big_lambda: f64, beta: f64, r_min: f64, r_max: f64) -> Result<Vec<RegimeSegment>> {
    if !(eps > 0.0 && eps <= 0.25) {
        return Err(Error::InvalidConfig(format!("regime analysis needs 0 < ε ≤ 0.25, got {eps}")));
    }
    if !(c >= 4.0) {
        return Err(Error::InvalidConfig(format!("regime constant C must be at least 4, got {c}")));
    }
    if !(r_min > 0.0 && r_min < r_max) {
        return Err(Error::InvalidConfig("need 0 < r_min < R_max".into()));
    }
    let lambda_scale = beta / (big_lambda * big_lambda * eps * eps);
    let x_scale = big_lambda.abs() * eps / beta;
    let z_scale = beta / (big_lambda.abs() * eps);
    let cuts = [r_min, (c / lambda_scale).clamp(r_min, r_max), (c / (eps * lambda_scale)).clamp(r_min, r_max), r_max];
    let tags = [Regime::I, Regime::II, Regime::III];
    Ok((0..3)
        .filter(|&k| cuts[k + 1] > cuts[k])
        .map(|k| RegimeSegment {
            tag: tags[k],
            lo: cuts[k],
            hi: cuts[k + 1],
            lo_hat: cuts[k] * lambda_scale,
            hi_hat: cuts[k + 1] * lambda_scale,
            x_scale,
            lambda_scale,
            z_scale,
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RegimeOneCertificate {
    pub lambda_hat: Vec<C64>,
    /// `max |Φ(±∞)|` over the fast/slow graphs.
    pub phi_at_infinity: f64,
    /// `sup |Φ(x) − Φ(±∞)| e^{θ|x̂|} / ((1+|λ̂|)ε)` with `θ = 1/2`.
    pub phi_decay_constant: f64,
    /// Fitted decay rate of `|Φ(x) − Φ(±∞)|` in `x̂`.
    pub phi_decay_rate: f64,
    /// Worst `sup|Φ| η̂/δ̂` over the samples.
    pub tracking_certificate: f64,
    /// `sup |N̂| e^{θ|x̂|}`.
    pub n_constant: f64,
    /// `sup |M̂_ρ| / (ε|λ̂|)`.
    pub m_rho_constant: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RegimeTwoCertificate {
    /// `min |√(η̄² + 4λ̂)| / |λ̂|^{1/2}` over the samples.
    pub root_gap: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RegimeThreeCertificate {
    /// `min ∓Re μ̂_ρ∓ / (C² ε)`.
    pub theta: f64,
    pub samples: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NormalFormReport {
    pub eps: f64,
    pub c: f64,
    pub segments: Vec<RegimeSegment>,
    pub regime_i: Option<RegimeOneCertificate>,
    pub regime_ii: Option<RegimeTwoCertificate>,
    pub regime_iii: Option<RegimeThreeCertificate>,
}

const CERT_THETA: f64 = 0.5;

fn regime_one(es: &EigenvalueSystem, seg: &RegimeSegment, eps: f64, c: f64) -> Result<RegimeOneCertificate> {
    let lambda_hat: Vec<C64> = vec![c64(0.25 * c, 0.0), c64(0.5 * c, 0.5 * c), c64(0.0, 0.75 * c), c64(0.1 * c, -0.6 * c)];
    let mut cert = RegimeOneCertificate {
        lambda_hat: lambda_hat.clone(),
        phi_at_infinity: 0.0,
        phi_decay_constant: 0.0,
        phi_decay_rate: f64::NAN,
        tracking_certificate: 0.0,
        n_constant: 0.0,
        m_rho_constant: 0.0,
    };
    let mut rates = Vec::new();
    for &lh in &lambda_hat {
        let lam = seg.from_hat_lambda(lh);
        let red = block_diagonalize(es, &normalize_basis(&build_block_basis(es, lam)?))?;
        let xh: Vec<f64> = red.x.iter().map(|&x| seg.to_hat_x(x).abs()).collect();
        let scale = (1.0 + lh.norm()) * eps;
        for (first, size) in [
            (vec![BlockKind::NuPlus], red.block(BlockKind::NuPlus).size),
            (vec![BlockKind::NuMinus, BlockKind::RhoMinus, BlockKind::Principal, BlockKind::RhoPlus], red.block(BlockKind::NuMinus).size),
        ] {
            if size == 0 {
                continue;
            }
            let prob = TrackingProblem::from_reduced(&red, &first);
            let res = tracking_reduce(&prob)?;
            cert.tracking_certificate = cert.tracking_certificate.max(res.certificate);
            for lim in [&res.phi1_limits.0, &res.phi1_limits.1, &res.phi2_limits.0, &res.phi2_limits.1] {
                cert.phi_at_infinity = cert.phi_at_infinity.max(max_abs(lim));
            }
            let dev: Vec<f64> = (0..red.x.len())
                .map(|i| {
                    let (l1, l2) = if red.x[i] < 0.0 { (&res.phi1_limits.0, &res.phi2_limits.0) } else { (&res.phi1_limits.1, &res.phi2_limits.1) };
                    max_abs(&(&res.phi1[i] - l1)).max(max_abs(&(&res.phi2[i] - l2)))
                })
                .collect();
            for i in 0..dev.len() {
                cert.phi_decay_constant = cert.phi_decay_constant.max(dev[i] * (CERT_THETA * xh[i]).exp() / scale);
            }
            let floor = 1e-11 * dev.iter().cloned().fold(0.0, f64::max);
            let tail: Vec<(f64, f64)> = xh.iter().zip(&dev).filter(|(x, d)| **x >= 2.0 && **d > floor.max(1e-300)).map(|(x, d)| (*x, *d)).collect();
            if tail.len() >= 3 {
                let (xs, ds): (Vec<f64>, Vec<f64>) = tail.into_iter().unzip();
                rates.push(fit_envelope(&xs, &ds, 1.0, 0.0, 1.0).0);
            }
        }
        let pb = red.block(BlockKind::Principal);
        for kind in [BlockKind::RhoMinus, BlockKind::RhoPlus] {
            let rb = red.block(kind);
            if rb.size == 0 {
                continue;
            }
            for i in 0..red.x.len() {
                let coup = red.coefficient(i).view((pb.start, rb.start), (2, rb.size)).into_owned();
                let nh = max_abs(&coup) / seg.x_scale;
                cert.n_constant = cert.n_constant.max(nh * (CERT_THETA * xh[i]).exp());
                let mr = max_abs(&red.m[i].view((rb.start, rb.start), (rb.size, rb.size)).into_owned()) / seg.x_scale;
                cert.m_rho_constant = cert.m_rho_constant.max(mr / (eps * lh.norm()));
            }
        }
    }
    if !rates.is_empty() {
        cert.phi_decay_rate = rates.iter().cloned().fold(f64::INFINITY, f64::min);
    }
    Ok(cert)
}

fn regime_two(seg: &RegimeSegment) -> RegimeTwoCertificate {
    let dirs = [c64(1.0, 0.0), C64::from_polar(1.0, 0.25 * std::f64::consts::PI), c64(0.0, 1.0), C64::from_polar(1.0, -0.25 * std::f64::consts::PI), c64(0.0, -1.0)];
    let mut gap = f64::INFINITY;
    for k in 0..8 {
        let r = seg.lo_hat * (seg.hi_hat / seg.lo_hat).powf(k as f64 / 7.0);
        for d in dirs {
            let lh = d * r;
            for j in 0..=400 {
                let eta = burgers_eta(-20.0 + 0.1 * j as f64);
                let disc = (c64(eta * eta, 0.0) + lh * 4.0).sqrt();
                gap = gap.min(disc.norm() / r.sqrt());
            }
        }
    }
    RegimeTwoCertificate { root_gap: gap }
}

// superslow eigenvalues of 𝔸±(λ), continued from small |λ| along the ray through λ
fn superslow_roots(es: &EigenvalueSystem, red0: &ReducedSystem, side_index: usize, lambda: C64) -> Result<Vec<(BlockKind, C64)>> {
    let side = if side_index == 0 { crate::evalsys::Side::Minus } else { crate::evalsys::Side::Plus };
    let mut tracked: Vec<(BlockKind, C64)> = Vec::new();
    for kind in [BlockKind::RhoMinus, BlockKind::RhoPlus] {
        let b = red0.block(kind);
        for j in b.range() {
            tracked.push((kind, red0.m[side_index][(j, j)]));
        }
    }
    let steps = 80;
    let (r0, r1) = (red0.lambda.norm(), lambda.norm());
    let dir = lambda / r1;
    for s in 1..=steps {
        let l = dir * (r0 * (r1 / r0).powf(s as f64 / steps as f64));
        let eig = eigenvalues(&es.asymptotic_matrix(side, l))?;
        for t in tracked.iter_mut() {
            t.1 = *eig.iter().min_by(|a, b| (*a - t.1).norm().partial_cmp(&(*b - t.1).norm()).unwrap()).unwrap();
        }
    }
    Ok(tracked)
}

fn regime_three(es: &EigenvalueSystem, seg: &RegimeSegment, eps: f64, c: f64) -> Result<Option<RegimeThreeCertificate>> {
    let dirs = [c64(0.0, 1.0), C64::from_polar(1.0, 0.25 * std::f64::consts::PI), c64(1.0, 0.0), C64::from_polar(1.0, -0.25 * std::f64::consts::PI), c64(0.0, -1.0)];
    let mut theta = f64::INFINITY;
    let mut samples = 0;
    for d in dirs {
        let seed = d * (1e-3 * seg.lo);
        let basis = build_block_basis_with(es, seed, 21)?;
        let red0 = block_diagonalize(es, &normalize_basis(&basis))?;
        let last = red0.x.len() - 1;
        if red0.block(BlockKind::RhoMinus).size + red0.block(BlockKind::RhoPlus).size == 0 {
            return Ok(None);
        }
        let mut red_ends = red0.clone();
        red_ends.m = vec![red0.m[0].clone(), red0.m[last].clone()];
        for k in 0..6 {
            let r = seg.lo * (seg.hi / seg.lo).powf(k as f64 / 5.0);
            for side in 0..2 {
                for (kind, mu) in superslow_roots(es, &red_ends, side, d * r)? {
                    let re = mu.re / seg.x_scale;
                    let signed = if kind == BlockKind::RhoMinus { -re } else { re };
                    theta = theta.min(signed / (c * c * eps));
                    samples += 1;
                }
            }
        }
    }
    Ok(Some(RegimeThreeCertificate { theta, samples }))
}

/// Regime segments of `(r_min, R_max)` with measured regime I–III normal-form certificates.
pub fn regime_partition_and_normal_form(es: &EigenvalueSystem, c: f64, r_min: f64, r_max: f64) -> Result<NormalFormReport> {
    Source::from_system(es)?;
    let prof = es.profile.as_ref().ok_or_else(|| Error::WrongFormulation("regimes need a profile".into()))?;
    let model = es.model.as_ref().ok_or_else(|| Error::WrongFormulation("regimes need a model".into()))?;
    let (big_lambda, beta) = genuine_nonlinearity_and_diffusion(model, &prof.u_minus)?;
    let eps = prof.eps;
    let segments = regime_partition(eps, c, big_lambda, beta, r_min, r_max)?;
    let mut report = NormalFormReport { eps, c, segments: segments.clone(), regime_i: None, regime_ii: None, regime_iii: None };
    for seg in &segments {
        match seg.tag {
            Regime::I => report.regime_i = Some(regime_one(es, seg, eps, c)?),
            Regime::II => report.regime_ii = Some(regime_two(seg)),
            Regime::III => report.regime_iii = regime_three(es, seg, eps, c)?,
        }
    }
    if let Some(r) = &report.regime_iii {
        if !(r.theta > 0.0) {
            return Err(Error::CertificateFailure(format!("regime III superslow modes not definite (θ = {})", r.theta)));
        }
    }
    if let Some(r) = &report.regime_i {
        if r.phi_at_infinity > 1e-9 {
            return Err(Error::CertificateFailure(format!("Φ(±∞) = {} is not zero", r.phi_at_infinity)));
        }
    }
    Ok(report)
}
