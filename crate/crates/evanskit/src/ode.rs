//! Adaptive Dormand–Prince 5(4) integration of matrix-valued ODEs.

use nalgebra::{ComplexField, DMatrix};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy)]
pub struct Dopri5 {
    pub rtol: f64,
    pub atol: f64,
    pub h_max: f64,
    pub max_steps: usize,
}

impl Default for Dopri5 {
    fn default() -> Self {
        Dopri5 { rtol: 1e-9, atol: 1e-12, h_max: f64::INFINITY, max_steps: 200_000 }
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct OdeStats {
    pub accepted: usize,
    pub rejected: usize,
    /// Sum of accepted local error estimates (absolute, max-entry norm).
    pub err_sum: f64,
}

impl OdeStats {
    pub fn merge(&mut self, o: &OdeStats) {
        self.accepted += o.accepted;
        self.rejected += o.rejected;
        self.err_sum += o.err_sum;
    }
}

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

fn lin<T>(y: &DMatrix<T>, h: f64, terms: &[(f64, &DMatrix<T>)]) -> DMatrix<T>
where
    T: ComplexField<RealField = f64> + Copy,
{
    let mut out = y.clone();
    for (c, k) in terms {
        if *c != 0.0 {
            out.zip_apply(*k, |o, kv| *o += kv * T::from_real(h * c));
        }
    }
    out
}

impl Dopri5 {
    pub fn new(rtol: f64, atol: f64) -> Self {
        Dopri5 { rtol, atol, ..Default::default() }
    }

    /// Integrates `y' = f(x, y)` from `x0` to `x1` (either direction).
    /// `on_step` runs after every accepted step and may rescale the state in place.
    pub fn integrate<T, F, G>(&self, f: F, x0: f64, x1: f64, y0: DMatrix<T>, on_step: G) -> Result<(DMatrix<T>, OdeStats)>
    where
        T: ComplexField<RealField = f64> + Copy,
        F: FnMut(f64, &DMatrix<T>) -> DMatrix<T>,
        G: FnMut(f64, &mut DMatrix<T>),
    {
        let (mut ys, st) = self.integrate_grid(f, &[x0, x1], y0, on_step)?;
        Ok((ys.pop().unwrap(), st))
    }

    /// Integrates through the monotone grid `xs`, returning the state at every grid point.
    /// Steps are clipped to land on grid points without resetting the step-size controller.
    pub fn integrate_grid<T, F, G>(
        &self,
        mut f: F,
        xs: &[f64],
        y0: DMatrix<T>,
        mut on_step: G,
    ) -> Result<(Vec<DMatrix<T>>, OdeStats)>
    where
        T: ComplexField<RealField = f64> + Copy,
        F: FnMut(f64, &DMatrix<T>) -> DMatrix<T>,
        G: FnMut(f64, &mut DMatrix<T>),
    {
        let mut stats = OdeStats::default();
        let mut out = Vec::with_capacity(xs.len());
        out.push(y0.clone());
        if xs.len() < 2 {
            return Ok((out, stats));
        }
        let span = xs[xs.len() - 1] - xs[0];
        if span == 0.0 {
            for _ in 1..xs.len() {
                out.push(y0.clone());
            }
            return Ok((out, stats));
        }
        let dir = span.signum();
        let mut x = xs[0];
        let mut y = y0;
        let scale = |y: &DMatrix<T>, i: usize| self.atol + self.rtol * y[i].modulus();

        let k1 = f(x, &y);
        let d0 = (0..y.len()).map(|i| y[i].modulus() / scale(&y, i)).fold(0.0, f64::max);
        let d1 = (0..y.len()).map(|i| k1[i].modulus() / scale(&y, i)).fold(0.0, f64::max);
        let mut h = if d1 > 1e-12 && d0 > 1e-12 { 0.01 * d0 / d1 } else { 1e-4 * span.abs() };
        h = h.min(span.abs()).min(self.h_max).max(1e-12 * span.abs());

        let mut k1 = k1;
        let mut next = 1;
        while next < xs.len() {
            let target = xs[next];
            if stats.accepted + stats.rejected > self.max_steps {
                return Err(Error::IntegrationFailure(format!("step budget exhausted at x = {x}")));
            }
            let remaining = (target - x) * dir;
            if remaining <= 1e-14 * span.abs() {
                x = target;
                out.push(y.clone());
                next += 1;
                continue;
            }
            let last = h >= remaining;
            let hs = if last { remaining } else { h } * dir;

            let k2 = f(x + C2 * hs, &lin(&y, hs, &[(A21, &k1)]));
            let k3 = f(x + C3 * hs, &lin(&y, hs, &[(A31, &k1), (A32, &k2)]));
            let k4 = f(x + C4 * hs, &lin(&y, hs, &[(A41, &k1), (A42, &k2), (A43, &k3)]));
            let k5 = f(x + C5 * hs, &lin(&y, hs, &[(A51, &k1), (A52, &k2), (A53, &k3), (A54, &k4)]));
            let k6 = f(x + hs, &lin(&y, hs, &[(A61, &k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)]));
            let ynew = lin(&y, hs, &[(B1, &k1), (B3, &k3), (B4, &k4), (B5, &k5), (B6, &k6)]);
            let k7 = f(x + hs, &ynew);
            let zero = DMatrix::<T>::zeros(y.nrows(), y.ncols());
            let errv = lin(&zero, hs, &[(E1, &k1), (E3, &k3), (E4, &k4), (E5, &k5), (E6, &k6), (E7, &k7)]);

            let mut err: f64 = 0.0;
            let mut abs_err: f64 = 0.0;
            for i in 0..y.len() {
                let sc = self.atol + self.rtol * y[i].modulus().max(ynew[i].modulus());
                let e = errv[i].modulus();
                abs_err = abs_err.max(e);
                err = err.max(e / sc);
            }
            if !err.is_finite() {
                stats.rejected += 1;
                h *= 0.1;
                if h < 1e-14 * span.abs() {
                    return Err(Error::IntegrationFailure(format!("non-finite state near x = {x}")));
                }
                continue;
            }
            if err <= 1.0 {
                x = if last { target } else { x + hs };
                y = ynew;
                stats.accepted += 1;
                stats.err_sum += abs_err;
                on_step(x, &mut y);
                k1 = f(x, &y);
                let fac = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
                // a clipped step says nothing about the admissible size
                if !last || hs.abs() >= h {
                    h = (h * fac).min(self.h_max);
                }
                if last {
                    out.push(y.clone());
                    next += 1;
                }
            } else {
                stats.rejected += 1;
                h = h.min(hs.abs()) * (0.9 * err.powf(-0.2)).clamp(0.1, 1.0);
                if h < 1e-13 * span.abs().max(1.0) {
                    return Err(Error::IntegrationFailure(format!("step size underflow near x = {x}")));
                }
            }
        }
        Ok((out, stats))
    }
}
