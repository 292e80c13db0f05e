use super::{RelaxJacobians, RelaxationSystem, State, ViscousSystem};
use crate::linalg::RMat;

fn st(v: &[f64]) -> State {
    State::from_column_slice(v)
}

/// Scalar Burgers equation `u_t + (u²/2)_x = u_xx`.
#[derive(Debug, Clone, Copy, Default)]
pub struct Burgers;

impl ViscousSystem for Burgers {
    fn name(&self) -> String {
        "burgers".into()
    }
    fn n(&self) -> usize {
        1
    }
    fn flux(&self, u: &State) -> State {
        st(&[0.5 * u[0] * u[0]])
    }
    fn jacobian(&self, u: &State) -> RMat {
        RMat::from_element(1, 1, u[0])
    }
    fn hessian(&self, _u: &State, a: &State, b: &State) -> State {
        st(&[a[0] * b[0]])
    }
    fn viscosity(&self, _u: &State) -> RMat {
        RMat::identity(1, 1)
    }
    fn base_state(&self) -> State {
        st(&[0.0])
    }
    fn radius(&self) -> f64 {
        2.0
    }
    fn left_state(&self, eps: f64) -> State {
        st(&[eps])
    }
}

/// Genuinely nonlinear 2×2 model `f(u) = (u₁²/2, u₁ + u₂)` with diagonal viscosity.
#[derive(Debug, Clone, Copy)]
pub struct Gnl2x2 {
    pub b: [f64; 2],
}

impl Default for Gnl2x2 {
    fn default() -> Self {
        Gnl2x2 { b: [1.0, 1.0] }
    }
}

impl ViscousSystem for Gnl2x2 {
    fn name(&self) -> String {
        "gnl2x2".into()
    }
    fn n(&self) -> usize {
        2
    }
    fn flux(&self, u: &State) -> State {
        st(&[0.5 * u[0] * u[0], u[0] + u[1]])
    }
    fn jacobian(&self, u: &State) -> RMat {
        RMat::from_row_slice(2, 2, &[u[0], 0.0, 1.0, 1.0])
    }
    fn hessian(&self, _u: &State, a: &State, b: &State) -> State {
        st(&[a[0] * b[0], 0.0])
    }
    fn viscosity(&self, _u: &State) -> RMat {
        RMat::from_diagonal(&st(&self.b))
    }
    fn base_state(&self) -> State {
        st(&[0.0, 0.0])
    }
    fn radius(&self) -> f64 {
        0.5
    }
    fn left_state(&self, eps: f64) -> State {
        st(&[eps, 0.0])
    }
}

/// Jin–Xin relaxation of Burgers: `f̃ = v`, `g̃ = a²u`, `q = (u²/2 − v)/τ`.
#[derive(Debug, Clone, Copy)]
pub struct JinXin {
    pub a2: f64,
    pub tau: f64,
    pub u0: f64,
}

impl Default for JinXin {
    fn default() -> Self {
        JinXin { a2: 1.0, tau: 1.0, u0: 0.0 }
    }
}

impl RelaxationSystem for JinXin {
    fn name(&self) -> String {
        "jinxin".into()
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
        u * self.a2
    }
    fn source(&self, u: &State, v: &State) -> State {
        st(&[(0.5 * u[0] * u[0] - v[0]) / self.tau])
    }
    fn jacobians(&self, u: &State, _v: &State) -> RelaxJacobians {
        let m = |x: f64| RMat::from_element(1, 1, x);
        RelaxJacobians {
            fu: m(0.0),
            fv: m(1.0),
            gu: m(self.a2),
            gv: m(0.0),
            qu: m(u[0] / self.tau),
            qv: m(-1.0 / self.tau),
        }
    }
    fn equilibrium(&self, u: &State) -> State {
        st(&[0.5 * u[0] * u[0]])
    }
    fn base_state(&self) -> State {
        st(&[self.u0])
    }
    fn radius(&self) -> f64 {
        0.5
    }
    fn left_state(&self, eps: f64) -> State {
        st(&[self.u0 + eps])
    }
    fn reduced_hessian(&self, _u: &State, a: &State, b: &State) -> State {
        st(&[a[0] * b[0]])
    }
}

/// Coupled Burgers / linearly degenerate model in two space dimensions.
/// As a one-dimensional system it is `f(u) = (u₁²/2, a u₂)` with viscosity `B¹¹`.
#[derive(Debug, Clone, Copy)]
pub struct MultidModel {
    pub a: f64,
    /// Diagonals of the blocks B¹¹, B¹², B²¹, B²².
    pub b11: [f64; 2],
    pub b12: [f64; 2],
    pub b21: [f64; 2],
    pub b22: [f64; 2],
}

impl Default for MultidModel {
    fn default() -> Self {
        MultidModel { a: 1.0, b11: [1.0, 1.0], b12: [0.0, 0.0], b21: [0.0, 0.0], b22: [1.0, 1.0] }
    }
}

impl ViscousSystem for MultidModel {
    fn name(&self) -> String {
        "multid-model".into()
    }
    fn n(&self) -> usize {
        2
    }
    fn flux(&self, u: &State) -> State {
        st(&[0.5 * u[0] * u[0], self.a * u[1]])
    }
    fn jacobian(&self, u: &State) -> RMat {
        RMat::from_row_slice(2, 2, &[u[0], 0.0, 0.0, self.a])
    }
    fn hessian(&self, _u: &State, a: &State, b: &State) -> State {
        st(&[a[0] * b[0], 0.0])
    }
    fn viscosity(&self, _u: &State) -> RMat {
        RMat::from_diagonal(&st(&self.b11))
    }
    fn base_state(&self) -> State {
        st(&[0.0, 0.0])
    }
    fn radius(&self) -> f64 {
        0.5
    }
    fn left_state(&self, eps: f64) -> State {
        st(&[eps, 0.0])
    }
}
