//! Stationary shock profiles: exact Burgers profiles, shooting for general systems,
//! rescaling to Burgers coordinates and the text cache format.

use std::fmt::Write as _;
use std::sync::Arc;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{eigenvalues, null_vector, to_complex, RMat, RVec};
use crate::model::{characteristic_decomposition, genuine_nonlinearity_and_diffusion, Model, MultidModel, RelaxationSystem, State, ViscousSystem};
use crate::ode::Dopri5;

pub const DEFAULT_POINTS: usize = 4001;

/// Discretized traveling wave on a uniform grid over `[-L, L]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ShockProfile {
    pub system: String,
    /// Half-jump in the principal coordinate.
    pub eps: f64,
    pub half_length: f64,
    pub x: Vec<f64>,
    pub u: Vec<State>,
    pub du: Vec<State>,
    pub v: Option<Vec<State>>,
    pub dv: Option<Vec<State>>,
    pub u_minus: State,
    pub u_plus: State,
    pub v_minus: Option<State>,
    pub v_plus: Option<State>,
    /// Fitted exponential rate of approach to the endpoints (per unit x).
    pub theta_hat: f64,
    /// Worst R² of the two tail fits.
    pub tail_r2: f64,
    /// Sup-norm Hermite–Simpson defect of the profile ODE.
    pub residual: f64,
}

fn uniform_grid(l: f64, points: usize) -> Vec<f64> {
    let m = (points - 1) as f64;
    (0..points).map(|i| if 2 * i == points - 1 { 0.0 } else { -l + 2.0 * l * i as f64 / m }).collect()
}

fn hermite(y0: &RVec, d0: &RVec, y1: &RVec, d1: &RVec, h: f64, t: f64) -> (RVec, RVec) {
    let t2 = t * t;
    let t3 = t2 * t;
    let h00 = 2.0 * t3 - 3.0 * t2 + 1.0;
    let h10 = t3 - 2.0 * t2 + t;
    let h01 = -2.0 * t3 + 3.0 * t2;
    let h11 = t3 - t2;
    let y = y0 * h00 + d0 * (h10 * h) + y1 * h01 + d1 * (h11 * h);
    let g00 = (6.0 * t2 - 6.0 * t) / h;
    let g10 = 3.0 * t2 - 4.0 * t + 1.0;
    let g01 = (-6.0 * t2 + 6.0 * t) / h;
    let g11 = 3.0 * t2 - 2.0 * t;
    let dy = y0 * g00 + d0 * g10 + y1 * g01 + d1 * g11;
    (y, dy)
}

impl ShockProfile {
    pub fn n(&self) -> usize {
        self.u_minus.len()
    }

    pub fn points(&self) -> usize {
        self.x.len()
    }

    pub fn spacing(&self) -> f64 {
        2.0 * self.half_length / (self.x.len() - 1) as f64
    }

    pub fn amplitude(&self) -> f64 {
        (&self.u_plus - &self.u_minus).norm()
    }

    fn locate(&self, x: f64) -> (usize, f64) {
        let h = self.spacing();
        let s = ((x + self.half_length) / h).clamp(0.0, (self.x.len() - 1) as f64);
        let i = (s.floor() as usize).min(self.x.len() - 2);
        (i, s - i as f64)
    }

    /// `(ū(x), ū'(x))` by cubic Hermite interpolation; endpoint values outside the grid.
    pub fn eval(&self, x: f64) -> (State, State) {
        if x <= -self.half_length {
            return (self.u[0].clone(), self.du[0].clone());
        }
        if x >= self.half_length {
            let k = self.x.len() - 1;
            return (self.u[k].clone(), self.du[k].clone());
        }
        let (i, t) = self.locate(x);
        hermite(&self.u[i], &self.du[i], &self.u[i + 1], &self.du[i + 1], self.spacing(), t)
    }

    /// `(v̄(x), v̄'(x))` for relaxation profiles.
    pub fn eval_v(&self, x: f64) -> Option<(State, State)> {
        let (v, dv) = (self.v.as_ref()?, self.dv.as_ref()?);
        let k = self.x.len() - 1;
        if x <= -self.half_length {
            return Some((v[0].clone(), dv[0].clone()));
        }
        if x >= self.half_length {
            return Some((v[k].clone(), dv[k].clone()));
        }
        let (i, t) = self.locate(x);
        Some(hermite(&v[i], &dv[i], &v[i + 1], &dv[i + 1], self.spacing(), t))
    }

    /// Portable text form: one header line then `x u.. [v..] du..` rows.
    pub fn to_cache_string(&self) -> String {
        let r = self.v.as_ref().map(|v| v[0].len()).unwrap_or(0);
        let mut s = format!(
            "# evanskit-profile system={} eps={:e} L={:e} points={} n={} r={}\n",
            self.system,
            self.eps,
            self.half_length,
            self.x.len(),
            self.n(),
            r
        );
        for i in 0..self.x.len() {
            let mut row = vec![format!("{:e}", self.x[i])];
            row.extend(self.u[i].iter().map(|z| format!("{z:e}")));
            if let Some(v) = &self.v {
                row.extend(v[i].iter().map(|z| format!("{z:e}")));
            }
            row.extend(self.du[i].iter().map(|z| format!("{z:e}")));
            let _ = writeln!(s, "{}", row.join(" "));
        }
        s
    }

    /// Rebuilds a profile from its cache text; endpoints and derived data are recomputed from `model`.
    pub fn from_cache_str(text: &str, model: &Model) -> Result<ShockProfile> {
        let bad = |m: &str| Error::InvalidConfig(format!("profile cache: {m}"));
        let mut lines = text.lines();
        let header = lines.next().ok_or_else(|| bad("empty file"))?;
        let field = |key: &str| -> Result<String> {
            header
                .split_whitespace()
                .find_map(|w| w.strip_prefix(&format!("{key}=")).map(str::to_string))
                .ok_or_else(|| bad(&format!("missing {key}")))
        };
        let system = field("system")?;
        if system != model.name() {
            return Err(bad(&format!("cached system {system} differs from {}", model.name())));
        }
        let parse = |s: String| s.parse::<f64>().map_err(|_| bad("bad number"));
        let eps = parse(field("eps")?)?;
        let l = parse(field("L")?)?;
        let points: usize = field("points")?.parse().map_err(|_| bad("bad points"))?;
        let n: usize = field("n")?.parse().map_err(|_| bad("bad n"))?;
        let r: usize = field("r")?.parse().map_err(|_| bad("bad r"))?;
        let mut x = Vec::with_capacity(points);
        let mut u = Vec::with_capacity(points);
        let mut v = Vec::with_capacity(points);
        let mut du = Vec::with_capacity(points);
        for line in lines.filter(|l| !l.trim().is_empty()) {
            let vals: Vec<f64> = line
                .split_whitespace()
                .map(|w| w.parse::<f64>().map_err(|_| bad("bad number")))
                .collect::<Result<_>>()?;
            if vals.len() != 1 + 2 * n + r {
                return Err(bad("row width"));
            }
            x.push(vals[0]);
            u.push(State::from_column_slice(&vals[1..1 + n]));
            if r > 0 {
                v.push(State::from_column_slice(&vals[1 + n..1 + n + r]));
            }
            du.push(State::from_column_slice(&vals[1 + n + r..]));
        }
        if x.len() != points {
            return Err(bad("row count"));
        }
        let u_minus = model.left_state(eps);
        let u_plus = hugoniot_endpoint(model, &u_minus, eps)?;
        let (v_, dv, v_minus, v_plus) = match model {
            Model::Relaxation(sys) => {
                let dv = v
                    .iter()
                    .zip(&u)
                    .map(|(vi, ui)| relaxation_derivative(sys.as_ref(), ui, vi).map(|d| d.1))
                    .collect::<Result<Vec<_>>>()?;
                (Some(v), Some(dv), Some(sys.equilibrium(&u_minus)), Some(sys.equilibrium(&u_plus)))
            }
            Model::Viscous(_) => (None, None, None, None),
        };
        let mut p = ShockProfile {
            system,
            eps,
            half_length: l,
            x,
            u,
            du,
            v: v_,
            dv,
            u_minus,
            u_plus,
            v_minus,
            v_plus,
            theta_hat: 0.0,
            tail_r2: 0.0,
            residual: 0.0,
        };
        finish_metadata(&mut p, model)?;
        Ok(p)
    }
}

/// Exact Burgers profile `ū = −ε tanh(εx/2)`.
pub fn burgers_profile(eps: f64, l: f64) -> ShockProfile {
    burgers_profile_with(eps, l, DEFAULT_POINTS)
}

pub fn burgers_profile_with(eps: f64, l: f64, points: usize) -> ShockProfile {
    let x = uniform_grid(l, points);
    let u: Vec<State> = x.iter().map(|&x| State::from_element(1, -eps * (0.5 * eps * x).tanh())).collect();
    let du: Vec<State> = x
        .iter()
        .map(|&x| {
            let c = (0.5 * eps * x).cosh();
            State::from_element(1, -0.5 * eps * eps / (c * c))
        })
        .collect();
    let mut p = ShockProfile {
        system: "burgers".into(),
        eps,
        half_length: l,
        x,
        u,
        du,
        v: None,
        dv: None,
        u_minus: State::from_element(1, eps),
        u_plus: State::from_element(1, -eps),
        v_minus: None,
        v_plus: None,
        theta_hat: 0.0,
        tail_r2: 0.0,
        residual: 0.0,
    };
    let (th, r2) = tail_fit(&p);
    p.theta_hat = th;
    p.tail_r2 = r2;
    p.residual = hermite_defect(&p.x, &p.u, &p.du, |y| State::from_element(1, 0.5 * (y[0] * y[0] - eps * eps)));
    p
}

/// Profile of the two-dimensional model: a Burgers front in the first component, zero in the second.
pub fn multid_profile(m: &MultidModel, eps: f64, l: f64) -> ShockProfile {
    let b = m.b11[0];
    let mut p = burgers_profile_with(eps, l / b, DEFAULT_POINTS);
    let embed = |v: &State| State::from_column_slice(&[v[0], 0.0]);
    p.system = m.name();
    p.half_length = l;
    p.x = uniform_grid(l, DEFAULT_POINTS);
    p.du = p.du.iter().map(|d| embed(&(d / b))).collect();
    p.u = p.u.iter().map(embed).collect();
    p.u_minus = embed(&p.u_minus);
    p.u_plus = embed(&p.u_plus);
    let (th, r2) = tail_fit(&p);
    p.theta_hat = th;
    p.tail_r2 = r2;
    let fm = m.flux(&p.u_minus);
    p.residual = hermite_defect(&p.x, &p.u, &p.du, |y| m.viscosity(y).lu().solve(&(m.flux(y) - &fm)).unwrap());
    p
}

/// Solves `f(u₊) = f(u₋)` by Newton from `u₋ − 2ε r_p`.
pub fn hugoniot_endpoint(model: &Model, u_minus: &State, eps: f64) -> Result<State> {
    let u0 = model.base_state();
    let radius = model.radius();
    if !(eps > 0.0) || eps > radius {
        return Err(Error::NoEndpoint(format!("amplitude {eps} outside neighborhood radius {radius}")));
    }
    let d = characteristic_decomposition(&model.jacobian(&u0)?)?;
    let rp = d.r_col(d.p);
    let target = model.flux(u_minus);
    let fscale = 1.0 + target.norm();
    for sign in [-1.0, 1.0] {
        let mut w = u_minus + &rp * (2.0 * eps * sign);
        let mut ok = false;
        for _ in 0..60 {
            let g = model.flux(&w) - &target;
            if g.norm() < 1e-14 * fscale {
                ok = true;
                break;
            }
            let j = model.jacobian(&w)?;
            let Some(step) = j.lu().solve(&g) else { break };
            w -= step;
            if (&w - &u0).norm() > 2.0 * radius || !w.iter().all(|z| z.is_finite()) {
                break;
            }
        }
        if ok && (&w - u_minus).norm() > 1e-3 * eps {
            return Ok(w);
        }
    }
    Err(Error::NoEndpoint(format!("Newton iteration failed from u₋ = {u_minus:?}")))
}

/// `24 β / (|Λ| ε)` evaluated at the left state.
pub fn default_half_length(model: &Model, eps: f64) -> Result<f64> {
    let um = model.left_state(eps);
    let (lam, beta) = genuine_nonlinearity_and_diffusion(model, &um)?;
    Ok(24.0 * beta / (lam.abs() * eps))
}

/// Builds the profile for `model` at half-jump `eps` with default domain and tolerance.
pub fn solve_profile(model: &Model, eps: f64, l: Option<f64>) -> Result<ShockProfile> {
    let l = match l {
        Some(l) => l,
        None => default_half_length(model, eps)?,
    };
    let um = model.left_state(eps);
    match model {
        Model::Viscous(s) => solve_viscous_profile(s.clone(), &um, eps, l, 1e-8),
        Model::Relaxation(s) => solve_relaxation_profile(s.clone(), &um, eps, l, 1e-8),
    }
}

struct Shooter<'a> {
    rhs: &'a dyn Fn(&RVec) -> RVec,
    phase: &'a dyn Fn(&RVec) -> f64,
    y_minus: RVec,
    y_plus: RVec,
    jac_minus: RMat,
    jac_plus: RMat,
    scale: f64,
}

impl Shooter<'_> {
    // carries the deviation `z = y − anchor` so tolerances track the departure from the rest point
    fn flow(&self, anchor: &RVec, z: &RVec, dist: f64, dir: f64) -> Result<RVec> {
        if dist <= 0.0 {
            return Ok(z.clone());
        }
        let ode = Dopri5 { rtol: 1e-14, atol: 1e-24 * self.scale, ..Default::default() };
        let z0 = RMat::from_column_slice(z.len(), 1, z.as_slice());
        let (out, _) = ode
            .integrate(|_, m: &RMat| {
                let v = (self.rhs)(&(anchor + m.column(0))) * dir;
                RMat::from_column_slice(v.len(), 1, v.as_slice())
            }, 0.0, dist, z0, |_, _| {})
            .map_err(|e| Error::NoConnection(e.to_string()))?;
        Ok(out.column(0).into_owned())
    }

    fn run(&self, l: f64, points: usize) -> Result<Vec<RVec>> {
        let dim = self.y_plus.len();
        let real_eigs = |j: &RMat| -> Result<Vec<(f64, f64)>> {
            Ok(eigenvalues(&to_complex(j))?.iter().map(|z| (z.re, z.im)).collect())
        };
        let ep = real_eigs(&self.jac_plus)?;
        let em = real_eigs(&self.jac_minus)?;
        let stable_p: Vec<_> = ep.iter().filter(|z| z.0 < 0.0).collect();
        let unstable_m: Vec<_> = em.iter().filter(|z| z.0 > 0.0).collect();
        let (start, mu, jac, dir, other) = if stable_p.len() == 1 && stable_p[0].1 == 0.0 {
            (&self.y_plus, stable_p[0].0, &self.jac_plus, -1.0, &self.y_minus)
        } else if unstable_m.len() == 1 && unstable_m[0].1 == 0.0 {
            (&self.y_minus, unstable_m[0].0, &self.jac_minus, 1.0, &self.y_plus)
        } else {
            return Err(Error::NoConnection(format!(
                "connecting manifold is not one-dimensional ({} stable at +, {} unstable at −)",
                stable_p.len(),
                unstable_m.len()
            )));
        };
        let rate = mu.abs();
        let mut s = null_vector(&(jac - RMat::identity(dim, dim) * mu));
        let jump = (other - start).norm();
        let probe = start + &s * (1e-6 * jump);
        let target_sign = ((self.phase)(other) - (self.phase)(start)).signum();
        if ((self.phase)(&probe) - (self.phase)(start)).signum() != target_sign {
            s = -s;
        }
        // quadratic term of the manifold: (2μ − J) w = ½ F''(s, s)
        let hs = 1e-3 * jump;
        let f2 = ((self.rhs)(&(start + &s * hs)) + (self.rhs)(&(start - &s * hs)) - (self.rhs)(start) * 2.0) / (hs * hs);
        let w = (RMat::identity(dim, dim) * (2.0 * mu) - jac)
            .lu()
            .solve(&(f2 * 0.5))
            .filter(|w| w.iter().all(|x| x.is_finite()))
            .unwrap_or_else(|| RVec::zeros(dim));
        let on_manifold = |a: f64| &s * a + &w * (a * a);
        let delta0 = 1e-5 * jump;
        let z0 = on_manifold(delta0);
        let ph = |z: &RVec| (self.phase)(&(start + z));
        let sign0 = ph(&z0).signum();
        if sign0 == 0.0 || sign0 == (self.phase)(other).signum() {
            return Err(Error::NoConnection("phase condition does not separate the endpoints".into()));
        }

        // first pass: distance from z0 to the phase crossing
        let chunk = 0.25 / rate;
        let mut t_a = 0.0;
        let mut z_a = z0.clone();
        let t_cross;
        loop {
            let z_b = self.flow(start, &z_a, chunk, dir)?;
            if ph(&z_b).signum() != sign0 {
                let (mut lo, mut hi) = (0.0, chunk);
                let (mut flo, mut fhi) = (ph(&z_a), ph(&z_b));
                for _ in 0..200 {
                    let mid = if (fhi - flo).abs() > 0.0 { lo - flo * (hi - lo) / (fhi - flo) } else { 0.5 * (lo + hi) };
                    let mid = if mid <= lo || mid >= hi { 0.5 * (lo + hi) } else { mid };
                    let fm = ph(&self.flow(start, &z_a, mid, dir)?);
                    if fm.signum() == sign0 {
                        lo = mid;
                        flo = fm;
                    } else {
                        hi = mid;
                        fhi = fm;
                    }
                    if hi - lo < 1e-13 * (t_a + hi).max(1.0) || fm == 0.0 {
                        break;
                    }
                    // keep the bracket shrinking from both sides
                    if flo.abs() < fhi.abs() {
                        fhi *= 0.5;
                    } else {
                        flo *= 0.5;
                    }
                }
                t_cross = t_a + 0.5 * (lo + hi);
                break;
            }
            t_a += chunk;
            z_a = z_b;
            if t_a > 400.0 / rate {
                return Err(Error::NoConnection("orbit does not reach the phase section".into()));
            }
        }

        let grid = uniform_grid(l, points);
        let mid = (points - 1) / 2;
        // z0 sits at x = −dir·t; points beyond it toward the rest point come from the manifold expansion
        let sweep = |t: f64| -> Result<Vec<RVec>> {
            let x0 = -dir * t;
            let mut ys = vec![RVec::zeros(dim); points];
            let mut xs = vec![x0];
            let mut idx = vec![];
            let order: Vec<usize> = if dir < 0.0 { (0..points).rev().collect() } else { (0..points).collect() };
            for i in order {
                if dir * (grid[i] - x0) <= 0.0 {
                    ys[i] = start + on_manifold(delta0 * (-rate * (grid[i] - x0).abs()).exp());
                } else {
                    xs.push(grid[i]);
                    idx.push(i);
                }
            }
            if idx.is_empty() {
                return Ok(ys);
            }
            let ode = Dopri5 { rtol: 1e-14, atol: 1e-24 * self.scale, ..Default::default() };
            let (zs, _) = ode
                .integrate_grid(
                    |_, m: &RMat| {
                        let v = (self.rhs)(&(start + m.column(0)));
                        RMat::from_column_slice(v.len(), 1, v.as_slice())
                    },
                    &xs,
                    RMat::from_column_slice(dim, 1, z0.as_slice()),
                    |_, _| {},
                )
                .map_err(|e| Error::NoConnection(e.to_string()))?;
            for (k, i) in idx.into_iter().enumerate() {
                ys[i] = start + zs[k + 1].column(0);
            }
            Ok(ys)
        };
        let mut t = t_cross;
        let mut ys = sweep(t)?;
        for _ in 0..8 {
            let y0c = &ys[mid];
            let ph = (self.phase)(y0c);
            let f = (self.rhs)(y0c);
            let hh = 1e-6 / f.norm().max(1e-300) * y0c.norm().max(self.scale);
            let dph = ((self.phase)(&(y0c + &f * hh)) - (self.phase)(&(y0c - &f * hh))) / (2.0 * hh);
            if dph == 0.0 {
                break;
            }
            let xc = -ph / dph;
            if xc.abs() < 1e-12 / rate {
                break;
            }
            t += dir * xc;
            ys = sweep(t)?;
        }
        Ok(ys)
    }
}

fn lax_check(model: &Model, u_minus: &State, u_plus: &State) -> Result<()> {
    let am = characteristic_decomposition(&model.jacobian(u_minus)?)?;
    let ap = characteristic_decomposition(&model.jacobian(u_plus)?)?;
    let (sm, sp) = (am.a[am.p], ap.a[ap.p]);
    if !(sm > 0.0 && sp < 0.0) {
        return Err(Error::NoConnection(format!("Lax condition fails: a_p(u₋) = {sm}, a_p(u₊) = {sp}")));
    }
    Ok(())
}

/// Shooting solve of `B(ū)ū' = f(ū) − f(u₋)` on `[-L, L]`.
pub fn solve_viscous_profile(sys: Arc<dyn ViscousSystem>, u_minus: &State, eps: f64, l: f64, tol: f64) -> Result<ShockProfile> {
    solve_viscous_profile_with(sys, u_minus, eps, l, tol, DEFAULT_POINTS)
}

pub fn solve_viscous_profile_with(
    sys: Arc<dyn ViscousSystem>,
    u_minus: &State,
    eps: f64,
    l: f64,
    tol: f64,
    points: usize,
) -> Result<ShockProfile> {
    let model = Model::Viscous(sys.clone());
    let sys = sys.as_ref();
    let u_plus = hugoniot_endpoint(&model, u_minus, eps)?;
    lax_check(&model, u_minus, &u_plus)?;
    let fm = sys.flux(u_minus);
    let rhs = |y: &RVec| -> RVec {
        let b = sys.viscosity(y);
        b.lu().solve(&(sys.flux(y) - &fm)).unwrap_or_else(|| RVec::from_element(y.len(), f64::NAN))
    };
    let dm = characteristic_decomposition(&sys.jacobian(u_minus))?;
    let lp = dm.l_row(dm.p);
    let mid = (u_minus + &u_plus) * 0.5;
    let phase = |y: &RVec| lp.dot(&(y - &mid));
    let binv = |u: &State| sys.viscosity(u).try_inverse().ok_or(Error::SingularViscosity(0.0));
    let sh = Shooter {
        rhs: &rhs,
        phase: &phase,
        y_minus: u_minus.clone(),
        y_plus: u_plus.clone(),
        jac_minus: binv(u_minus)? * sys.jacobian(u_minus),
        jac_plus: binv(&u_plus)? * sys.jacobian(&u_plus),
        scale: eps,
    };
    let ys = sh.run(l, points)?;
    let du: Vec<State> = ys.iter().map(|y| rhs(y)).collect();
    let mut p = ShockProfile {
        system: sys.name(),
        eps,
        half_length: l,
        x: uniform_grid(l, points),
        u: ys,
        du,
        v: None,
        dv: None,
        u_minus: u_minus.clone(),
        u_plus,
        v_minus: None,
        v_plus: None,
        theta_hat: 0.0,
        tail_r2: 0.0,
        residual: 0.0,
    };
    finish_metadata(&mut p, &model)?;
    if p.residual > tol {
        return Err(Error::NoConnection(format!("profile residual {} exceeds {tol}", p.residual)));
    }
    Ok(p)
}

// `Model` wants shared ownership; a thin forwarding wrapper lets borrowed systems use it.

/// `(u', v')` along a relaxation profile: `𝒜 (u', v') = (0, q)`.
pub fn relaxation_derivative(sys: &dyn RelaxationSystem, u: &State, v: &State) -> Result<(State, State)> {
    let (n, r) = (sys.n(), sys.r());
    let a = sys.jacobians(u, v).flux_matrix();
    let mut rhs = RVec::zeros(n + r);
    rhs.rows_mut(n, r).copy_from(&sys.source(u, v));
    let d = a.lu().solve(&rhs).ok_or(Error::SingularA(f64::NAN))?;
    Ok((d.rows(0, n).into_owned(), d.rows(n, r).into_owned()))
}

// Newton solve of (f̃, g̃)(u, v) = (φ, ψ)
fn invert_balanced(
    sys: &dyn RelaxationSystem,
    phi: &State,
    psi: &State,
    guess: (&State, &State),
) -> Option<(State, State)> {
    let (n, r) = (sys.n(), sys.r());
    let mut u = guess.0.clone();
    let mut v = guess.1.clone();
    let scale = 1.0 + phi.norm() + psi.norm();
    for _ in 0..40 {
        let mut g = RVec::zeros(n + r);
        g.rows_mut(0, n).copy_from(&(sys.f_tilde(&u, &v) - phi));
        g.rows_mut(n, r).copy_from(&(sys.g_tilde(&u, &v) - psi));
        let a = sys.jacobians(&u, &v).flux_matrix();
        let step = a.lu().solve(&g)?;
        u -= step.rows(0, n);
        v -= step.rows(n, r);
        if step.norm() <= 1e-16 * scale || g.norm() == 0.0 {
            return Some((u, v));
        }
    }
    let mut g = RVec::zeros(n + r);
    g.rows_mut(0, n).copy_from(&(sys.f_tilde(&u, &v) - phi));
    g.rows_mut(n, r).copy_from(&(sys.g_tilde(&u, &v) - psi));
    (g.norm() < 1e-13 * scale).then_some((u, v))
}

/// Profile of a relaxation system: `f̃(ū, v̄) ≡ f̃(u₋, v₋)`, `g̃(ū, v̄)' = q(ū, v̄)`.
pub fn solve_relaxation_profile(
    sys: Arc<dyn RelaxationSystem>,
    u_minus: &State,
    eps: f64,
    l: f64,
    tol: f64,
) -> Result<ShockProfile> {
    solve_relaxation_profile_with(sys, u_minus, eps, l, tol, DEFAULT_POINTS)
}

pub fn solve_relaxation_profile_with(
    sys: Arc<dyn RelaxationSystem>,
    u_minus: &State,
    eps: f64,
    l: f64,
    tol: f64,
    points: usize,
) -> Result<ShockProfile> {
    let model = Model::Relaxation(sys.clone());
    let sys = sys.as_ref();
    let u_plus = hugoniot_endpoint(&model, u_minus, eps)?;
    lax_check(&model, u_minus, &u_plus)?;
    let (n, r) = (sys.n(), sys.r());
    let v_minus = sys.equilibrium(u_minus);
    let v_plus = sys.equilibrium(&u_plus);
    let phi = sys.f_tilde(u_minus, &v_minus);
    let last = std::cell::RefCell::new((u_minus.clone(), v_minus.clone()));
    let invert = |psi: &RVec| -> Option<(State, State)> {
        let g = last.borrow().clone();
        let out = invert_balanced(sys, &phi, psi, (&g.0, &g.1))?;
        *last.borrow_mut() = out.clone();
        Some(out)
    };
    let rhs = |psi: &RVec| -> RVec {
        match invert(psi) {
            Some((u, v)) => sys.source(&u, &v),
            None => RVec::from_element(r, f64::NAN),
        }
    };
    let dm = characteristic_decomposition(&sys.reduced_jacobian(u_minus)?)?;
    let lp = dm.l_row(dm.p);
    let mid = (u_minus + &u_plus) * 0.5;
    let phase = |psi: &RVec| match invert(psi) {
        Some((u, _)) => lp.dot(&(u - &mid)),
        None => f64::NAN,
    };
    let hmat = |u: &State, v: &State| -> Result<RMat> {
        let j = sys.jacobians(u, v);
        let ainv = j.flux_matrix().try_inverse().ok_or(Error::SingularA(f64::NAN))?;
        let mut qrow = RMat::zeros(r, n + r);
        qrow.view_mut((0, 0), (r, n)).copy_from(&j.qu);
        qrow.view_mut((0, n), (r, r)).copy_from(&j.qv);
        Ok((qrow * ainv).columns(n, r).into_owned())
    };
    let sh = Shooter {
        rhs: &rhs,
        phase: &phase,
        y_minus: sys.g_tilde(u_minus, &v_minus),
        y_plus: sys.g_tilde(&u_plus, &v_plus),
        jac_minus: hmat(u_minus, &v_minus)?,
        jac_plus: hmat(&u_plus, &v_plus)?,
        scale: eps,
    };
    let ys = sh.run(l, points)?;
    let mut u = Vec::with_capacity(points);
    let mut v = Vec::with_capacity(points);
    let mut du = Vec::with_capacity(points);
    let mut dv = Vec::with_capacity(points);
    for psi in &ys {
        let (ui, vi) = invert(psi).ok_or_else(|| Error::NoConnection("state inversion failed".into()))?;
        let (dui, dvi) = relaxation_derivative(sys, &ui, &vi)?;
        u.push(ui);
        v.push(vi);
        du.push(dui);
        dv.push(dvi);
    }
    let mut p = ShockProfile {
        system: sys.name(),
        eps,
        half_length: l,
        x: uniform_grid(l, points),
        u,
        du,
        v: Some(v),
        dv: Some(dv),
        u_minus: u_minus.clone(),
        u_plus,
        v_minus: Some(v_minus),
        v_plus: Some(v_plus),
        theta_hat: 0.0,
        tail_r2: 0.0,
        residual: 0.0,
    };
    finish_metadata(&mut p, &model)?;
    if p.residual > tol {
        return Err(Error::NoConnection(format!("profile residual {} exceeds {tol}", p.residual)));
    }
    Ok(p)
}


fn finish_metadata(p: &mut ShockProfile, model: &Model) -> Result<()> {
    let (th, r2) = tail_fit(p);
    p.theta_hat = th;
    p.tail_r2 = r2;
    p.residual = match model {
        Model::Viscous(sys) => {
            let fm = sys.flux(&p.u_minus);
            hermite_defect(&p.x, &p.u, &p.du, |y| {
                sys.viscosity(y).lu().solve(&(sys.flux(y) - &fm)).unwrap_or_else(|| RVec::from_element(y.len(), f64::NAN))
            })
        }
        Model::Relaxation(sys) => {
            let n = sys.n();
            let (v, dv) = (p.v.as_ref().unwrap(), p.dv.as_ref().unwrap());
            let cat = |a: &State, b: &State| State::from_iterator(a.len() + b.len(), a.iter().chain(b.iter()).cloned());
            let ys: Vec<State> = p.u.iter().zip(v).map(|(a, b)| cat(a, b)).collect();
            let ds: Vec<State> = p.du.iter().zip(dv).map(|(a, b)| cat(a, b)).collect();
            hermite_defect(&p.x, &ys, &ds, |y| {
                let (u, v) = (y.rows(0, n).into_owned(), y.rows(n, y.len() - n).into_owned());
                match relaxation_derivative(sys.as_ref(), &u, &v) {
                    Ok((a, b)) => cat(&a, &b),
                    Err(_) => RVec::from_element(y.len(), f64::NAN),
                }
            })
        }
    };
    if !p.residual.is_finite() {
        return Err(Error::NoConnection("non-finite profile residual".into()));
    }
    Ok(())
}

// sup over cells of |p'(mid) − F(p(mid))| for the cubic Hermite interpolant
fn hermite_defect(x: &[f64], y: &[State], dy: &[State], field: impl Fn(&State) -> State) -> f64 {
    let mut worst: f64 = 0.0;
    for i in 0..x.len() - 1 {
        let h = x[i + 1] - x[i];
        let (ym, dm) = hermite(&y[i], &dy[i], &y[i + 1], &dy[i + 1], h, 0.5);
        let d = (dm - field(&ym)).amax();
        worst = if d.is_nan() { f64::NAN } else { worst.max(d) };
    }
    worst
}

fn linear_fit(pts: &[(f64, f64)]) -> (f64, f64) {
    let m = pts.len() as f64;
    let (sx, sy) = pts.iter().fold((0.0, 0.0), |a, p| (a.0 + p.0, a.1 + p.1));
    let (mx, my) = (sx / m, sy / m);
    let (mut sxx, mut sxy, mut syy) = (0.0, 0.0, 0.0);
    for (x, y) in pts {
        sxx += (x - mx) * (x - mx);
        sxy += (x - mx) * (y - my);
        syy += (y - my) * (y - my);
    }
    let slope = sxy / sxx;
    let r2 = if syy > 0.0 { sxy * sxy / (sxx * syy) } else { 1.0 };
    (slope, r2)
}

/// Fitted tail decay rate and worst R² over both sides.
pub fn tail_fit(p: &ShockProfile) -> (f64, f64) {
    let floor = 1e-12 * p.amplitude().max(1e-300);
    let mut theta = f64::INFINITY;
    let mut r2min: f64 = 1.0;
    for side in [-1.0, 1.0] {
        let end = if side < 0.0 { &p.u_minus } else { &p.u_plus };
        let collect = |frac: f64| -> Vec<(f64, f64)> {
            p.x.iter()
                .zip(&p.u)
                .filter(|(x, _)| side * **x >= frac * p.half_length)
                .filter_map(|(x, u)| {
                    let d = (u - end).norm();
                    (d > floor).then(|| (x.abs(), d.ln()))
                })
                .collect()
        };
        let mut pts = collect(0.5);
        if pts.len() < 8 {
            pts = collect(0.25);
        }
        if pts.len() < 3 {
            continue;
        }
        let (slope, r2) = linear_fit(&pts);
        theta = theta.min(-slope);
        r2min = r2min.min(r2);
    }
    (theta, r2min)
}

/// Profile in Burgers coordinates: `x̂ = |Λ|εx/β`, `η = l_p·(ū − ū_mid)/ε`, oriented decreasing.
#[derive(Debug, Clone, Serialize)]
pub struct RescaledProfile {
    pub x_hat: Vec<f64>,
    pub eta: Vec<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct RescaleReport {
    /// sup |η − η̄| over the grid.
    pub sup_eta_error: f64,
    /// Tail rate in rescaled units.
    pub theta_hat: f64,
    /// sup |a_p(ū)/(|Λ|ε) − η̄|.
    pub sup_char_error: f64,
    pub eta_minus: f64,
    pub eta_plus: f64,
}

pub fn burgers_eta(x_hat: f64) -> f64 {
    -(0.5 * x_hat).tanh()
}

pub fn rescale_and_compare(p: &ShockProfile, model: &Model, lam: f64, beta: f64) -> Result<(RescaledProfile, RescaleReport)> {
    let dm = characteristic_decomposition(&model.jacobian(&p.u_minus)?)?;
    let lp = dm.l_row(dm.p);
    let mid = (&p.u_minus + &p.u_plus) * 0.5;
    let k = lam.abs() * p.eps / beta;
    let x_hat: Vec<f64> = p.x.iter().map(|x| k * x).collect();
    let mut eta: Vec<f64> = p.u.iter().map(|u| lp.dot(&(u - &mid)) / p.eps).collect();
    if eta[0] < eta[eta.len() - 1] {
        eta.iter_mut().for_each(|e| *e = -*e);
    }
    let mut chr = Vec::with_capacity(p.u.len());
    for u in &p.u {
        let d = characteristic_decomposition(&model.jacobian(u)?)?;
        chr.push(d.a[d.p] / (lam.abs() * p.eps));
    }
    if chr[0] < chr[chr.len() - 1] {
        chr.iter_mut().for_each(|e| *e = -*e);
    }
    let mut sup_eta: f64 = 0.0;
    let mut sup_chr: f64 = 0.0;
    for i in 0..x_hat.len() {
        let b = burgers_eta(x_hat[i]);
        sup_eta = sup_eta.max((eta[i] - b).abs());
        sup_chr = sup_chr.max((chr[i] - b).abs());
    }
    let report = RescaleReport {
        sup_eta_error: sup_eta,
        theta_hat: p.theta_hat / k,
        sup_char_error: sup_chr,
        eta_minus: lp.dot(&(&p.u_minus - &mid)).abs() / p.eps,
        eta_plus: -lp.dot(&(&p.u_plus - &mid)).abs() / p.eps,
    };
    Ok((RescaledProfile { x_hat, eta }, report))
}
