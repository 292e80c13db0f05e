//! Evans function evaluation, winding numbers over closed contours and stability verdicts.

use std::f64::consts::{FRAC_PI_2, PI, TAU};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::evalsys::{EigenvalueSystem, Side};
use crate::linalg::{c64, left_inverse, min_singular_value, spectral_norm, thin_qr, CMat, C64};
use crate::ode::Dopri5;
use crate::subspace::{continue_side_frame, side_frame, AnalyticFrame};

/// Evans function value at one frequency: `D = d · e^{logscale}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EvansSample {
    pub lambda: C64,
    pub d: C64,
    pub logscale: f64,
    /// Sum of accepted local error estimates over both integrations.
    pub ode_error: f64,
    /// Smallest singular value of the juxtaposed orthonormal frames at x = 0.
    pub frame_cond: f64,
}

impl EvansSample {
    pub fn log_abs(&self) -> f64 {
        self.d.norm().ln() + self.logscale
    }

    pub fn value(&self) -> C64 {
        self.d * self.logscale.exp()
    }
}

// integrates W' = (𝔸 − σ/k) W from x0 to 0 with QR after each step; returns (Q, Σ log R_ii, error)
fn integrate_frame(es: &EigenvalueSystem, lambda: C64, v0: &CMat, sigma: C64, x0: f64, tol: f64) -> Result<(CMat, C64, f64)> {
    let k = v0.ncols();
    let shift = sigma / k as f64;
    let n = es.dim;
    let (q0, r0) = thin_qr(v0);
    let mut tau: C64 = (0..k).map(|i| r0[(i, i)].ln()).sum();
    let ode = Dopri5 { rtol: tol, atol: tol * 1e-3, ..Default::default() };
    let (q, st) = ode.integrate(
        |x, w: &CMat| {
            let mut a = es.coefficient(x, lambda);
            for i in 0..n {
                a[(i, i)] -= shift;
            }
            a * w
        },
        x0,
        0.0,
        q0,
        |_, w: &mut CMat| {
            let (q, r) = thin_qr(w);
            for i in 0..k {
                tau += r[(i, i)].ln();
            }
            *w = q;
        },
    )?;
    Ok((q, tau, st.err_sum))
}

fn trace_on(frame: &CMat, m: &CMat) -> C64 {
    match left_inverse(frame) {
        Some(li) => (li * m * frame).trace(),
        None => c64(f64::NAN, f64::NAN),
    }
}

/// Evans function at `lambda` from the given `+` (stable) and `−` (unstable) starting frames.
pub fn evans_evaluate(es: &EigenvalueSystem, lambda: C64, plus: &CMat, minus: &CMat, tol: f64) -> Result<EvansSample> {
    if plus.ncols() + minus.ncols() != es.dim {
        return Err(Error::SplittingFailure(lambda));
    }
    let l = es.half_length;
    let sp = trace_on(plus, &es.asymptotic_matrix(Side::Plus, lambda));
    let sm = trace_on(minus, &es.asymptotic_matrix(Side::Minus, lambda));
    let (qp, tp, ep) = integrate_frame(es, lambda, plus, sp, l, tol)?;
    let (qm, tm, em) = integrate_frame(es, lambda, minus, sm, -l, tol)?;
    let mut m = CMat::zeros(es.dim, es.dim);
    m.columns_mut(0, qp.ncols()).copy_from(&qp);
    m.columns_mut(qp.ncols(), qm.ncols()).copy_from(&qm);
    let det = m.determinant();
    let tau = tp + tm;
    let d = det * C64::from_polar(1.0, tau.im);
    if !(d.re.is_finite() && d.im.is_finite() && tau.re.is_finite()) {
        return Err(Error::IntegrationFailure(format!("non-finite Evans value at λ = {lambda}")));
    }
    Ok(EvansSample { lambda, d, logscale: tau.re, ode_error: ep + em, frame_cond: min_singular_value(&m) })
}

/// Source of Evans samples along a contour: anchor frames, transport, evaluation.
pub trait Sampler: Sync {
    type Frame: Clone + Send + Sync;
    fn anchor(&self, lambda: C64) -> Result<Self::Frame>;
    /// Transports `frame` along `path` (starting at the frame's λ).
    fn transport(&self, frame: &Self::Frame, path: &[C64]) -> Result<Self::Frame>;
    fn sample(&self, frame: &Self::Frame, lambda: C64) -> Result<EvansSample>;
}

/// Gauge applied to the first `+` frame column: `D ↦ g(λ) D`.
pub type Gauge = dyn Fn(C64) -> C64 + Send + Sync;

pub struct EvansSampler<'a> {
    pub es: &'a EigenvalueSystem,
    pub tol: f64,
    pub gauge: Option<&'a Gauge>,
}

impl<'a> EvansSampler<'a> {
    pub fn new(es: &'a EigenvalueSystem, tol: f64) -> Self {
        EvansSampler { es, tol, gauge: None }
    }
}

impl Sampler for EvansSampler<'_> {
    type Frame = (AnalyticFrame, AnalyticFrame);

    fn anchor(&self, lambda: C64) -> Result<Self::Frame> {
        Ok((side_frame(self.es, Side::Plus, lambda)?, side_frame(self.es, Side::Minus, lambda)?))
    }

    fn transport(&self, frame: &Self::Frame, path: &[C64]) -> Result<Self::Frame> {
        Ok((continue_side_frame(self.es, &frame.0, path)?, continue_side_frame(self.es, &frame.1, path)?))
    }

    fn sample(&self, frame: &Self::Frame, lambda: C64) -> Result<EvansSample> {
        let mut plus = frame.0.v.clone();
        if let Some(g) = self.gauge {
            let gl = g(lambda);
            let mut c = plus.column_mut(0);
            c *= gl;
        }
        evans_evaluate(self.es, lambda, &plus, &frame.1.v, self.tol)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum Geometry {
    /// Boundary of `{Re λ ≥ 0, r ≤ |λ| ≤ R}`.
    HalfAnnulus { r_min: f64, r_max: f64 },
    Circle { center: C64, radius: f64 },
    Rectangle { lo: C64, hi: C64 },
}

/// Closed, positively oriented contour; the last point repeats the first.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Contour {
    pub points: Vec<C64>,
    pub closed: bool,
    pub geometry: Geometry,
}

impl Contour {
    pub fn half_annulus(r_min: f64, r_max: f64, n: usize) -> Contour {
        let n = n.max(16);
        let n_outer = (0.4 * n as f64).round() as usize;
        let n_side = ((n - n_outer) / 3).max(2);
        let mut pts = Vec::with_capacity(n + 1);
        // outer arc, counterclockwise from −iR to iR
        for k in 0..n_outer {
            pts.push(C64::from_polar(r_max, -FRAC_PI_2 + PI * k as f64 / n_outer as f64));
        }
        let (lr, lo) = (r_max.ln(), r_min.ln());
        for k in 0..n_side {
            pts.push(c64(0.0, (lr + (lo - lr) * k as f64 / n_side as f64).exp()));
        }
        // inner arc, clockwise from ir to −ir
        for k in 0..n_side {
            pts.push(C64::from_polar(r_min, FRAC_PI_2 - PI * k as f64 / n_side as f64));
        }
        for k in 0..n_side {
            pts.push(c64(0.0, -(lo + (lr - lo) * k as f64 / n_side as f64).exp()));
        }
        pts.push(pts[0]);
        Contour { points: pts, closed: true, geometry: Geometry::HalfAnnulus { r_min, r_max } }
    }

    pub fn circle(center: C64, radius: f64, n: usize) -> Contour {
        let n = n.max(8);
        let mut pts: Vec<C64> = (0..n).map(|k| center + C64::from_polar(radius, TAU * k as f64 / n as f64)).collect();
        pts.push(pts[0]);
        Contour { points: pts, closed: true, geometry: Geometry::Circle { center, radius } }
    }

    pub fn rectangle(lo: C64, hi: C64, n: usize) -> Contour {
        let n = n.max(8);
        let corners = [lo, c64(hi.re, lo.im), hi, c64(lo.re, hi.im)];
        let w = hi.re - lo.re;
        let h = hi.im - lo.im;
        let per = 2.0 * (w + h);
        let mut pts = Vec::with_capacity(n + 1);
        for e in 0..4 {
            let (a, b) = (corners[e], corners[(e + 1) % 4]);
            let len = if e % 2 == 0 { w } else { h };
            let m = ((n as f64 * len / per).round() as usize).max(2);
            for k in 0..m {
                pts.push(a + (b - a) * (k as f64 / m as f64));
            }
        }
        pts.push(pts[0]);
        Contour { points: pts, closed: true, geometry: Geometry::Rectangle { lo, hi } }
    }

    /// Maps every point through `f` (used to move between original and rescaled frequencies).
    pub fn mapped(&self, f: impl Fn(C64) -> C64) -> Contour {
        Contour { points: self.points.iter().map(|&z| f(z)).collect(), closed: self.closed, geometry: self.geometry }
    }

    /// The same contour with every segment split in two.
    pub fn doubled(&self) -> Contour {
        let mut pts = Vec::with_capacity(2 * self.points.len());
        for w in self.points.windows(2) {
            pts.push(w[0]);
            pts.push((w[0] + w[1]) * 0.5);
        }
        pts.push(*self.points.last().unwrap());
        Contour { points: pts, closed: self.closed, geometry: self.geometry }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WindingOptions {
    pub tol: f64,
    /// Relative floor for `min|D| / max|D|`.
    pub zero_floor: f64,
    pub max_depth: usize,
    /// Worker threads for sample evaluation (`None`: all cores).
    pub jobs: Option<usize>,
}

impl Default for WindingOptions {
    fn default() -> Self {
        WindingOptions { tol: 1e-9, zero_floor: 1e-8, max_depth: 12, jobs: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WindingResult {
    pub winding: i64,
    pub total_phase: f64,
    /// `min|D| / max|D|` over the samples.
    pub min_rel_abs: f64,
    pub min_lambda: C64,
    pub max_log_abs: f64,
    pub samples: Vec<EvansSample>,
    pub depth: usize,
    /// Distance of the transported end frame from the anchor frame.
    pub closure_defect: f64,
}

/// Applies `f` to every item, in parallel when enabled; order is preserved.
pub fn par_map<T: Sync, R: Send>(items: &[T], jobs: Option<usize>, f: impl Fn(&T) -> R + Sync + Send) -> Vec<R> {
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        if jobs != Some(1) {
            let run = || items.par_iter().map(&f).collect::<Vec<R>>();
            return match jobs {
                Some(j) => match rayon::ThreadPoolBuilder::new().num_threads(j).build() {
                    Ok(pool) => pool.install(run),
                    Err(_) => run(),
                },
                None => run(),
            };
        }
    }
    let _ = jobs;
    items.iter().map(f).collect()
}

/// Frames continued sequentially along `points`; the returned list matches `points`.
pub fn continue_frames<S: Sampler>(s: &S, points: &[C64]) -> Result<Vec<S::Frame>> {
    let mut frames = Vec::with_capacity(points.len());
    let mut f = s.anchor(points[0])?;
    frames.push(f.clone());
    for w in points.windows(2) {
        f = s.transport(&f, w)?;
        frames.push(f.clone());
    }
    Ok(frames)
}

/// Evans samples at the given points with continued frames (no refinement).
pub fn evans_along<S: Sampler>(s: &S, points: &[C64], jobs: Option<usize>) -> Result<Vec<EvansSample>> {
    let frames = continue_frames(s, points)?;
    let pairs: Vec<(S::Frame, C64)> = frames.into_iter().zip(points.iter().cloned()).collect();
    par_map(&pairs, jobs, |(f, l)| s.sample(f, *l)).into_iter().collect()
}

fn phase_step(a: &EvansSample, b: &EvansSample) -> f64 {
    (b.d / a.d).arg()
}

/// Winding number of the Evans function along a closed contour with adaptive refinement.
pub fn winding_number_with<S: Sampler>(s: &S, contour: &Contour, opts: &WindingOptions) -> Result<WindingResult>
where
    S::Frame: FrameDistance,
{
    let pts = &contour.points;
    if pts.len() < 3 || pts[0] != pts[pts.len() - 1] {
        return Err(Error::InvalidConfig("contour must be closed".into()));
    }
    let mut frames = continue_frames(s, pts)?;
    let closure_defect = frames[frames.len() - 1].distance(&frames[0]);
    // the closing point reuses the anchor so the Evans function closes exactly
    let last = frames.len() - 1;
    frames[last] = frames[0].clone();
    let pairs: Vec<(S::Frame, C64)> = frames.into_iter().zip(pts.iter().cloned()).collect();
    let evals: Vec<Result<EvansSample>> = par_map(&pairs, opts.jobs, |(f, l)| s.sample(f, *l));
    let mut nodes: Vec<(S::Frame, EvansSample)> = Vec::with_capacity(pairs.len());
    for ((f, _), e) in pairs.into_iter().zip(evals) {
        nodes.push((f, e?));
    }

    let mut depth = 0;
    loop {
        let max_log = nodes.iter().map(|n| n.1.log_abs()).fold(f64::NEG_INFINITY, f64::max);
        if let Some(n) = nodes.iter().find(|n| n.1.log_abs() - max_log < opts.zero_floor.ln()) {
            return Err(Error::ZeroOnContour(n.1.lambda));
        }
        let bad: Vec<usize> = (0..nodes.len() - 1)
            .filter(|&i| phase_step(&nodes[i].1, &nodes[i + 1].1).abs() >= FRAC_PI_2)
            .collect();
        if bad.is_empty() {
            break;
        }
        if depth >= opts.max_depth {
            return Err(Error::ContourTooCoarse(depth));
        }
        depth += 1;
        let mids: Vec<(S::Frame, C64)> = bad
            .iter()
            .map(|&i| {
                let a = nodes[i].1.lambda;
                let m = (a + nodes[i + 1].1.lambda) * 0.5;
                s.transport(&nodes[i].0, &[a, m]).map(|f| (f, m))
            })
            .collect::<Result<_>>()?;
        let evals: Vec<Result<EvansSample>> = par_map(&mids, opts.jobs, |(f, l)| s.sample(f, *l));
        let mut inserted: Vec<(S::Frame, EvansSample)> = Vec::with_capacity(mids.len());
        for ((f, _), e) in mids.into_iter().zip(evals) {
            inserted.push((f, e?));
        }
        let mut merged = Vec::with_capacity(nodes.len() + inserted.len());
        let mut ins = inserted.into_iter();
        let mut next_bad = bad.iter().peekable();
        for (i, node) in nodes.into_iter().enumerate() {
            merged.push(node);
            if next_bad.peek() == Some(&&i) {
                next_bad.next();
                merged.push(ins.next().unwrap());
            }
        }
        nodes = merged;
    }

    let samples: Vec<EvansSample> = nodes.into_iter().map(|n| n.1).collect();
    let total: f64 = samples.windows(2).map(|w| phase_step(&w[0], &w[1])).sum();
    let winding = (total / TAU).round() as i64;
    let max_log = samples.iter().map(|s| s.log_abs()).fold(f64::NEG_INFINITY, f64::max);
    let (imin, min_log) = samples
        .iter()
        .enumerate()
        .map(|(i, s)| (i, s.log_abs()))
        .fold((0, f64::INFINITY), |a, b| if b.1 < a.1 { b } else { a });
    let min_rel = (min_log - max_log).exp();
    if min_rel < opts.zero_floor {
        return Err(Error::ZeroOnContour(samples[imin].lambda));
    }
    Ok(WindingResult {
        winding,
        total_phase: total,
        min_rel_abs: min_rel,
        min_lambda: samples[imin].lambda,
        max_log_abs: max_log,
        samples,
        depth,
        closure_defect,
    })
}

/// Distance between two frame sets, for the closure diagnostic.
pub trait FrameDistance {
    fn distance(&self, other: &Self) -> f64;
}

impl FrameDistance for (AnalyticFrame, AnalyticFrame) {
    fn distance(&self, other: &Self) -> f64 {
        let d = |a: &CMat, b: &CMat| spectral_norm(&(a - b)) / spectral_norm(b).max(1e-300);
        d(&self.0.v, &other.0.v).max(d(&self.1.v, &other.1.v))
    }
}

pub fn winding_number(es: &EigenvalueSystem, contour: &Contour, opts: &WindingOptions) -> Result<WindingResult> {
    winding_number_with(&EvansSampler::new(es, opts.tol), contour, opts)
}

/// Winding with the `+` frame multiplied by `gauge(λ)`.
pub fn winding_number_gauged(es: &EigenvalueSystem, contour: &Contour, opts: &WindingOptions, gauge: &Gauge) -> Result<WindingResult> {
    winding_number_with(&EvansSampler { es, tol: opts.tol, gauge: Some(gauge) }, contour, opts)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum Verdict {
    Stable,
    Unstable { count: i64 },
    Inconclusive { reason: String, lambda: Option<C64> },
}

impl Verdict {
    pub fn is_stable(&self) -> bool {
        matches!(self, Verdict::Stable)
    }
}

/// `R_max = 10(1 + sup_x ‖𝔸(x, 1)‖²)` and `r_min = 10⁻³ min(1, ε²)`.
pub fn default_radii(es: &EigenvalueSystem, eps: f64) -> (f64, f64) {
    let grid: Vec<f64> = match &es.profile {
        Some(p) => p.x.iter().step_by(8).cloned().collect(),
        None => (0..=200).map(|i| -es.half_length + es.half_length * i as f64 / 100.0).collect(),
    };
    let sup = grid.iter().map(|&x| spectral_norm(&es.coefficient(x, c64(1.0, 0.0)))).fold(0.0, f64::max);
    (1e-3 * eps.min(1.0).powi(2), 10.0 * (1.0 + sup * sup))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerdictReport {
    pub verdict: Verdict,
    pub r_min: f64,
    pub r_max: f64,
    pub winding: Option<WindingResult>,
}

/// Stability verdict from the winding over the punctured half-disk boundary.
pub fn stability_verdict(es: &EigenvalueSystem, r_min: f64, r_max: f64, points: usize, opts: &WindingOptions) -> VerdictReport {
    let contour = Contour::half_annulus(r_min, r_max, points);
    match winding_number(es, &contour, opts) {
        Ok(w) => {
            let verdict = match w.winding {
                0 => Verdict::Stable,
                k if k > 0 => Verdict::Unstable { count: k },
                k => Verdict::Inconclusive { reason: format!("negative winding {k}"), lambda: None },
            };
            VerdictReport { verdict, r_min, r_max, winding: Some(w) }
        }
        Err(Error::ZeroOnContour(l)) => VerdictReport {
            verdict: Verdict::Inconclusive { reason: "near-zero of D on the contour".into(), lambda: Some(l) },
            r_min,
            r_max,
            winding: None,
        },
        Err(e) => VerdictReport { verdict: Verdict::Inconclusive { reason: e.to_string(), lambda: None }, r_min, r_max, winding: None },
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvergenceRow {
    pub eps: f64,
    pub sup_diff: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvergenceReport {
    pub rows: Vec<ConvergenceRow>,
    /// Least-squares slope of `log sup_diff` against `log ε`.
    pub order: f64,
}

fn normalized(samples: &[EvansSample]) -> Vec<C64> {
    let a = samples[0];
    samples.iter().map(|s| (s.d / a.d) * (s.logscale - a.logscale).exp()).collect()
}

pub fn fit_order(xs: &[f64], ys: &[f64]) -> f64 {
    let pts: Vec<(f64, f64)> = xs.iter().zip(ys).map(|(x, y)| (x.ln(), y.max(1e-300).ln())).collect();
    let m = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / m;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / m;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    sxy / sxx
}

/// Compares `D^ε(s_ε λ̂)` against `D⁰(λ̂)` along `contour_hat` after normalizing both to 1 at the anchor.
/// `family` holds `(ε, system, s_ε)`.
pub fn evans_convergence_study(
    family: &[(f64, &EigenvalueSystem, f64)],
    limit: &EigenvalueSystem,
    contour_hat: &Contour,
    opts: &WindingOptions,
) -> Result<ConvergenceReport> {
    let pts = &contour_hat.points[..contour_hat.points.len() - 1];
    let d0 = normalized(&evans_along(&EvansSampler::new(limit, opts.tol), pts, opts.jobs)?);
    let mut rows = Vec::with_capacity(family.len());
    for &(eps, es, scale) in family {
        let scaled: Vec<C64> = pts.iter().map(|z| z * scale).collect();
        let de = normalized(&evans_along(&EvansSampler::new(es, opts.tol), &scaled, opts.jobs)?);
        let sup = de.iter().zip(&d0).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
        rows.push(ConvergenceRow { eps, sup_diff: sup });
    }
    let order = if rows.len() >= 2 {
        fit_order(&rows.iter().map(|r| r.eps).collect::<Vec<_>>(), &rows.iter().map(|r| r.sup_diff).collect::<Vec<_>>())
    } else {
        f64::NAN
    };
    Ok(ConvergenceReport { rows, order })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::evalsys::assemble_identity_viscous;
    use crate::model::{Burgers, Model};
    use crate::profile::burgers_profile;
    use std::sync::Arc;

    fn burgers_es(eps: f64) -> EigenvalueSystem {
        let p = Arc::new(burgers_profile(eps, 24.0 / eps));
        assemble_identity_viscous(p, &Model::viscous(Burgers), true).unwrap()
    }

    struct Identity;
    impl Sampler for Identity {
        type Frame = ();
        fn anchor(&self, _: C64) -> Result<()> {
            Ok(())
        }
        fn transport(&self, _: &(), _: &[C64]) -> Result<()> {
            Ok(())
        }
        fn sample(&self, _: &(), l: C64) -> Result<EvansSample> {
            Ok(EvansSample { lambda: l, d: l, logscale: 0.0, ode_error: 0.0, frame_cond: 1.0 })
        }
    }
    impl FrameDistance for () {
        fn distance(&self, _: &()) -> f64 {
            0.0
        }
    }

    #[test]
    fn argument_principle_on_test_double() {
        let c = Contour::circle(c64(0.0, 0.0), 1.0, 8);
        let w = winding_number_with(&Identity, &c, &WindingOptions::default()).unwrap();
        assert_eq!(w.winding, 1);
        assert!((w.total_phase - TAU).abs() < 1e-12);
        let c = Contour::circle(c64(3.0, 0.0), 1.0, 4);
        assert_eq!(winding_number_with(&Identity, &c, &WindingOptions::default()).unwrap().winding, 0);
        // coarse contour forces refinement
        let c = Contour { points: vec![c64(1.0, 0.0), c64(-0.5, 0.8), c64(-0.5, -0.8), c64(1.0, 0.0)], closed: true, geometry: Geometry::Circle { center: c64(0.0, 0.0), radius: 1.0 } };
        let w = winding_number_with(&Identity, &c, &WindingOptions::default()).unwrap();
        assert_eq!(w.winding, 1);
        assert!(w.depth >= 1);
        assert!(w.samples.windows(2).all(|p| phase_step(&p[0], &p[1]).abs() < FRAC_PI_2));
    }

    #[test]
    fn zero_on_contour_reported() {
        let c = Contour::circle(c64(1.0, 0.0), 1.0, 16);
        assert!(matches!(winding_number_with(&Identity, &c, &WindingOptions::default()), Err(Error::ZeroOnContour(_))));
    }

    #[test]
    fn burgers_is_nonzero_and_multilinear() {
        let es = burgers_es(1.0);
        let lam = c64(1.0, 0.0);
        let f = EvansSampler::new(&es, 1e-10).anchor(lam).unwrap();
        let a = evans_evaluate(&es, lam, &f.0.v, &f.1.v, 1e-10).unwrap();
        assert!(a.value().norm() > 1e-3);
        let b = evans_evaluate(&es, lam, &(&f.0.v * c64(2.0, 0.0)), &f.1.v, 1e-10).unwrap();
        assert!((b.value() / a.value() - c64(2.0, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn burgers_conjugation_symmetry() {
        let es = burgers_es(1.0);
        let s = EvansSampler::new(&es, 1e-10);
        let l = c64(1.0, 0.3);
        let fa = s.anchor(l).unwrap();
        let fb = (
            AnalyticFrame { v: fa.0.v.map(|z| z.conj()), ..fa.0.clone() },
            AnalyticFrame { v: fa.1.v.map(|z| z.conj()), ..fa.1.clone() },
        );
        let a = s.sample(&fa, l).unwrap().value();
        let b = s.sample(&fb, l.conj()).unwrap().value();
        assert!((a.conj() - b).norm() < 1e-9 * a.norm());
    }

    #[test]
    fn burgers_small_circle_winding_zero() {
        let es = burgers_es(1.0);
        let w = winding_number(&es, &Contour::circle(c64(1.0, 0.0), 0.5, 32), &WindingOptions::default()).unwrap();
        assert_eq!(w.winding, 0);
        assert!(w.closure_defect < 1e-8);
    }

    #[test]
    fn planted_eigenvalue_is_detected() {
        let l0 = c64(0.5, 0.2);
        let coeff = move |x: f64, l: C64| {
            let s = 1.0 / x.cosh();
            CMat::from_row_slice(2, 2, &[c64(0.0, 0.0), c64(1.0, 0.0), l - l0 + 1.0 - 2.0 * s * s, c64(0.0, 0.0)])
        };
        let limit = move |_: Side, l: C64| CMat::from_row_slice(2, 2, &[c64(0.0, 0.0), c64(1.0, 0.0), l - l0 + 1.0, c64(0.0, 0.0)]);
        let es = EigenvalueSystem::custom(2, 20.0, (2.0, 1.0), coeff, limit);
        let w = winding_number(&es, &Contour::circle(l0, 0.3, 32), &WindingOptions::default()).unwrap();
        assert_eq!(w.winding, 1);
        let w = winding_number(&es, &Contour::circle(l0 + 2.0, 0.3, 32), &WindingOptions::default()).unwrap();
        assert_eq!(w.winding, 0);
    }

    #[test]
    fn burgers_verdict_is_stable() {
        let es = burgers_es(1.0);
        let (r, big) = default_radii(&es, 1.0);
        let rep = stability_verdict(&es, r, big, 120, &WindingOptions::default());
        assert_eq!(rep.verdict, Verdict::Stable, "{rep:?}");
    }

    #[test]
    fn half_annulus_shape() {
        let c = Contour::half_annulus(1e-3, 20.0, 100);
        assert_eq!(c.points[0], *c.points.last().unwrap());
        assert!(c.points.iter().all(|z| z.re >= -1e-12));
        assert!(c.points.windows(2).all(|w| w[0] != w[1]));
        let r = Contour::rectangle(c64(0.1, -1.0), c64(2.0, 1.0), 40);
        assert_eq!(r.points[0], *r.points.last().unwrap());
    }

    #[test]
    fn burgers_family_matches_under_rescaling() {
        let limit = burgers_es(1.0);
        let e1 = burgers_es(0.5);
        let e2 = burgers_es(0.25);
        let c = Contour::circle(c64(1.0, 0.0), 0.5, 12);
        let opts = WindingOptions { tol: 1e-12, ..Default::default() };
        let rep = evans_convergence_study(&[(0.5, &e1, 0.25), (0.25, &e2, 0.0625)], &limit, &c, &opts).unwrap();
        for r in &rep.rows {
            assert!(r.sup_diff < 1e-8, "{r:?}");
        }
    }
}
