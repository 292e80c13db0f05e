//! Stable/unstable frames of the limiting matrices and their analytic continuation in λ.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::evalsys::{EigenvalueSystem, Side};
use crate::linalg::{c64, eigenvalues, inv_sqrt, left_inverse, max_abs, ordered_schur, spectral_projector, subspace_sin_angle, CMat, C64};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum FrameKind {
    Stable,
    Unstable,
}

impl FrameKind {
    pub fn for_side(side: Side) -> Self {
        match side {
            Side::Plus => FrameKind::Stable,
            Side::Minus => FrameKind::Unstable,
        }
    }

    fn select(self, z: C64) -> bool {
        match self {
            FrameKind::Stable => z.re < 0.0,
            FrameKind::Unstable => z.re > 0.0,
        }
    }
}

/// Columns spanning a stable or unstable subspace, continued from `lambda0` to `lambda`.
#[derive(Debug, Clone)]
pub struct AnalyticFrame {
    pub lambda0: C64,
    pub lambda: C64,
    pub v: CMat,
    pub side: Option<Side>,
    pub kind: FrameKind,
    /// Number of accepted transport substeps since `lambda0`.
    pub steps: usize,
}

impl AnalyticFrame {
    pub fn dim(&self) -> usize {
        self.v.ncols()
    }
}

/// Real parts within this of zero count as on the imaginary axis (eigenvalue accuracy scale).
pub fn splitting_tol(m: &CMat) -> f64 {
    64.0 * f64::EPSILON * (1.0 + m.norm())
}

/// Frame for the invariant subspace of `m` with `Re μ < 0` (stable) or `Re μ > 0` (unstable).
pub fn stable_unstable_frames(m: &CMat, kind: FrameKind) -> Result<AnalyticFrame> {
    let tol = splitting_tol(m);
    let (q, t, k) = ordered_schur(m, |z| kind.select(z))?;
    for i in 0..t.nrows() {
        if t[(i, i)].re.abs() <= tol || !t[(i, i)].re.is_finite() {
            return Err(Error::SplittingFailure(t[(i, i)]));
        }
    }
    Ok(AnalyticFrame {
        lambda0: c64(f64::NAN, f64::NAN),
        lambda: c64(f64::NAN, f64::NAN),
        v: q.columns(0, k).into_owned(),
        side: None,
        kind,
        steps: 0,
    })
}

/// Frame at `lambda` for one side of an eigenvalue system (stable at +, unstable at −).
pub fn side_frame(es: &EigenvalueSystem, side: Side, lambda: C64) -> Result<AnalyticFrame> {
    let mut f = stable_unstable_frames(&es.asymptotic_matrix(side, lambda), FrameKind::for_side(side))?;
    f.lambda0 = lambda;
    f.lambda = lambda;
    f.side = Some(side);
    Ok(f)
}

// smallest distance between a selected and an unselected eigenvalue
fn group_gap(m: &CMat, kind: FrameKind) -> Result<(f64, usize, C64)> {
    let ev = eigenvalues(m)?;
    let (sel, rest): (Vec<C64>, Vec<C64>) = ev.iter().partition(|z| kind.select(**z));
    let mut gap = f64::INFINITY;
    let mut witness = c64(f64::NAN, f64::NAN);
    for a in &sel {
        for b in &rest {
            if (a - b).norm() < gap {
                gap = (a - b).norm();
                witness = *a;
            }
        }
    }
    for z in &ev {
        if z.re.abs() <= splitting_tol(m) {
            return Err(Error::SplittingFailure(*z));
        }
    }
    Ok((gap, sel.len(), witness))
}

fn projector(m: &CMat, kind: FrameKind) -> Result<CMat> {
    spectral_projector(m, |z| kind.select(z))
}

// Kato step V_b = P_b V_a M^{-1/2}, M = V_a⁺ P_a P_b V_a
fn kato_step(v: &CMat, pa: &CMat, pb: &CMat) -> Option<CMat> {
    let vi = left_inverse(v)?;
    let m = &vi * pa * pb * v;
    let r = inv_sqrt(&m)?;
    Some(pb * v * r)
}

const MAX_ROTATION: f64 = 0.1;
const TRANSPORT_TOL: f64 = 1e-10;
const MAX_DEPTH: usize = 40;

/// Continues `frame` along `path` (first entry should be the frame's current λ) by projector transport.
pub fn continue_frame_along_path(
    frame: &AnalyticFrame,
    path: &[C64],
    matrix: impl Fn(C64) -> CMat,
) -> Result<AnalyticFrame> {
    let mut out = frame.clone();
    if path.is_empty() {
        return Ok(out);
    }
    let kind = frame.kind;
    let k = frame.dim();
    let m0 = matrix(path[0]);
    let mut pa = projector(&m0, kind)?;
    let mut a = path[0];
    for &b in &path[1..] {
        let (v, pb, steps) = transport_segment(&out.v, a, &pa, b, &matrix, kind, k, 0)?;
        out.v = v;
        out.steps += steps;
        pa = pb;
        a = b;
    }
    out.lambda = a;
    Ok(out)
}

#[allow(clippy::too_many_arguments)]
fn transport_segment(
    v: &CMat,
    a: C64,
    pa: &CMat,
    b: C64,
    matrix: &impl Fn(C64) -> CMat,
    kind: FrameKind,
    k: usize,
    depth: usize,
) -> Result<(CMat, CMat, usize)> {
    if a == b {
        return Ok((v.clone(), pa.clone(), 0));
    }
    let mb = matrix(b);
    let (gap, kb, witness) = group_gap(&mb, kind)?;
    if kb != k || gap < 1e-8 * (1.0 + mb.norm()) {
        return Err(Error::BranchCrossing(witness));
    }
    let pb = projector(&mb, kind)?;
    let mid = (a + b) * 0.5;
    let pm = projector(&matrix(mid), kind)?;
    let one = kato_step(v, pa, &pb);
    let two = kato_step(v, pa, &pm).and_then(|w| kato_step(&w, &pm, &pb));
    if let (Some(one), Some(two)) = (one, two) {
        let rot = subspace_sin_angle(v, &two).asin();
        let diff = max_abs(&(&one - &two)) / max_abs(v).max(1e-300);
        if rot < MAX_ROTATION && diff <= TRANSPORT_TOL {
            return Ok((two, pb, 2));
        }
    }
    if depth >= MAX_DEPTH {
        return Err(Error::BranchCrossing(mid));
    }
    let (vm, pm, s1) = transport_segment(v, a, pa, mid, matrix, kind, k, depth + 1)?;
    let (vb, pb, s2) = transport_segment(&vm, mid, &pm, b, matrix, kind, k, depth + 1)?;
    Ok((vb, pb, s1 + s2))
}

/// Continues a side frame of `es` along `path`.
pub fn continue_side_frame(es: &EigenvalueSystem, frame: &AnalyticFrame, path: &[C64]) -> Result<AnalyticFrame> {
    let side = frame.side.expect("side frame");
    continue_frame_along_path(frame, path, |l| es.asymptotic_matrix(side, l))
}

/// `√z` continued from a previous value: picks the root nearest `prev`.
pub fn tracked_sqrt(z: C64, prev: Option<C64>) -> C64 {
    let s = z.sqrt();
    match prev {
        Some(p) if (s - p).norm() > (-s - p).norm() => -s,
        _ => s,
    }
}

/// Square roots along a path, continued from the root with positive real part at the first point.
pub fn sqrt_along_path(zs: &[C64]) -> Vec<C64> {
    let mut prev: Option<C64> = None;
    zs.iter()
        .map(|&z| {
            let s = tracked_sqrt(z, prev);
            prev = Some(s);
            s
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum ModeContext {
    /// `μ² − aμ − λ = 0` exactly.
    IdentityViscous,
    /// Slow root expanded with the mode diffusion `β_j`; fast root near `γ_j`.
    GeneralViscous { beta: f64, gamma: f64 },
    Relaxation { beta: f64, gamma: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum ModeSpeed {
    Slow,
    Fast,
}

/// One root of a transverse mode with its left/right eigenvectors in mode coordinates `(w, w')`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ModeRoot {
    pub speed: ModeSpeed,
    pub mu: C64,
    pub l: [C64; 2],
    pub r: [C64; 2],
}

/// Transverse roots for characteristic speed `a`; `sqrt_prev` continues `√(a² + 4λ)` along a path.
pub fn transverse_mode_expansions(a: f64, lambda: C64, ctx: ModeContext, sqrt_prev: Option<C64>) -> Result<Vec<ModeRoot>> {
    if a.abs() < 1e-8 {
        return Err(Error::DegenerateMode(a));
    }
    let one = c64(1.0, 0.0);
    let vectors = |mu: C64| -> ([C64; 2], [C64; 2]) {
        // [[0, 1], [λ, a]]: r = (1, μ), l = (λ/μ, 1)/(2μ − a)
        let d = mu * 2.0 - a;
        let l1 = if mu.norm() > 0.0 { lambda / mu } else { c64(-a, 0.0) };
        ([l1 / d, one / d], [one, mu])
    };
    let (slow, fast) = match ctx {
        ModeContext::IdentityViscous => {
            let s = match sqrt_prev {
                Some(p) => tracked_sqrt(lambda * 4.0 + a * a, Some(p)),
                None => tracked_sqrt(lambda * 4.0 + a * a, Some(c64(a.abs(), 0.0))),
            };
            let r1 = (s + a) * 0.5;
            let r2 = (-s + a) * 0.5;
            let guess = -lambda / a;
            if (r1 - guess).norm() <= (r2 - guess).norm() { (r1, r2) } else { (r2, r1) }
        }
        ModeContext::GeneralViscous { beta, gamma } | ModeContext::Relaxation { beta, gamma } => {
            (-lambda / a + lambda * lambda * beta / (a * a * a), c64(gamma, 0.0))
        }
    };
    let (ls, rs) = vectors(slow);
    let (lf, rf) = vectors(fast);
    Ok(vec![
        ModeRoot { speed: ModeSpeed::Slow, mu: slow, l: ls, r: rs },
        ModeRoot { speed: ModeSpeed::Fast, mu: fast, l: lf, r: rf },
    ])
}
