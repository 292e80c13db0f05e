//! Small dense linear-algebra helpers on top of nalgebra.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type C64 = Complex64;
pub type CMat = DMatrix<Complex64>;
pub type RMat = DMatrix<f64>;
pub type RVec = DVector<f64>;

#[inline]
pub fn c64(re: f64, im: f64) -> C64 {
    Complex64::new(re, im)
}

pub fn to_complex(m: &RMat) -> CMat {
    m.map(|x| c64(x, 0.0))
}

/// Complex Schur form `m = q t qᴴ` with `t` upper triangular.
pub fn schur(m: &CMat) -> Result<(CMat, CMat)> {
    let n = m.nrows();
    if n == 0 {
        return Ok((CMat::zeros(0, 0), CMat::zeros(0, 0)));
    }
    if m.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::IntegrationFailure("non-finite matrix entry".into()));
    }
    let (q, mut t) = match nalgebra::linalg::Schur::try_new(m.clone(), f64::EPSILON, 10_000) {
        Some(s) => s.unpack(),
        None => rotated_schur(m)?,
    };
    for j in 0..n {
        for i in (j + 1)..n {
            t[(i, j)] = C64::new(0.0, 0.0);
        }
    }
    Ok((q, t))
}

// retries on a fixed unitary similarity `g m gᴴ`; exact symmetries can stall the shifted QR sweep
fn rotated_schur(m: &CMat) -> Result<(CMat, CMat)> {
    let n = m.nrows();
    let mut g = CMat::identity(n, n);
    for i in 0..n - 1 {
        let (c, s) = (0.8, C64::from_polar(0.6, 0.7 + i as f64));
        let mut rot = CMat::identity(n, n);
        rot[(i, i)] = c64(c, 0.0);
        rot[(i, i + 1)] = -s.conj();
        rot[(i + 1, i)] = s;
        rot[(i + 1, i + 1)] = c64(c, 0.0);
        g = rot * g;
    }
    let rotated = &g * m * g.adjoint();
    for eps in [f64::EPSILON, 8.0 * f64::EPSILON] {
        if let Some(s) = nalgebra::linalg::Schur::try_new(rotated.clone(), eps, 20_000) {
            let (q, t) = s.unpack();
            return Ok((g.adjoint() * q, t));
        }
    }
    Err(Error::IntegrationFailure("Schur iteration did not converge".into()))
}

pub fn eigenvalues(m: &CMat) -> Result<Vec<C64>> {
    let (_, t) = schur(m)?;
    Ok((0..t.nrows()).map(|i| t[(i, i)]).collect())
}

/// Reorders a Schur form so that eigenvalues accepted by `select` lead the diagonal.
/// Returns `(q, t, k)` with `k` the number of selected eigenvalues.
pub fn ordered_schur(m: &CMat, select: impl Fn(C64) -> bool) -> Result<(CMat, CMat, usize)> {
    let (mut q, mut t) = schur(m)?;
    let n = t.nrows();
    let mut k = 0;
    for i in 0..n {
        if select(t[(i, i)]) {
            let mut j = i;
            while j > k {
                swap_adjacent(&mut q, &mut t, j - 1);
                j -= 1;
            }
            k += 1;
        }
    }
    Ok((q, t, k))
}

// exchange diagonal entries j and j+1 of an upper-triangular t by a unitary rotation
fn swap_adjacent(q: &mut CMat, t: &mut CMat, j: usize) {
    let n = t.nrows();
    let t11 = t[(j, j)];
    let t22 = t[(j + 1, j + 1)];
    let x1 = t[(j, j + 1)];
    let x2 = t22 - t11;
    let nrm = (x1.norm_sqr() + x2.norm_sqr()).sqrt();
    if nrm == 0.0 {
        return;
    }
    let (u11, u21) = (x1 / nrm, x2 / nrm);
    let (u12, u22) = (-u21.conj(), u11.conj());
    for c in 0..n {
        let a = t[(j, c)];
        let b = t[(j + 1, c)];
        t[(j, c)] = u11.conj() * a + u21.conj() * b;
        t[(j + 1, c)] = u12.conj() * a + u22.conj() * b;
    }
    for r in 0..n {
        let a = t[(r, j)];
        let b = t[(r, j + 1)];
        t[(r, j)] = a * u11 + b * u21;
        t[(r, j + 1)] = a * u12 + b * u22;
        let a = q[(r, j)];
        let b = q[(r, j + 1)];
        q[(r, j)] = a * u11 + b * u21;
        q[(r, j + 1)] = a * u12 + b * u22;
    }
    t[(j + 1, j)] = C64::new(0.0, 0.0);
    t[(j, j)] = t22;
    t[(j + 1, j + 1)] = t11;
}

/// Orthonormal basis of the invariant subspace belonging to the selected eigenvalues.
pub fn invariant_subspace(m: &CMat, select: impl Fn(C64) -> bool) -> Result<CMat> {
    let (q, _, k) = ordered_schur(m, select)?;
    Ok(q.columns(0, k).into_owned())
}

/// Spectral projector onto the selected invariant subspace along its complement.
pub fn spectral_projector(m: &CMat, select: impl Fn(C64) -> bool) -> Result<CMat> {
    let n = m.nrows();
    let v = invariant_subspace(m, &select)?;
    let w = invariant_subspace(&m.adjoint(), |z: C64| select(z.conj()))?;
    if v.ncols() != w.ncols() {
        return Err(Error::BranchCrossing(C64::new(f64::NAN, f64::NAN)));
    }
    if v.ncols() == 0 {
        return Ok(CMat::zeros(n, n));
    }
    let g = w.adjoint() * &v;
    let gi = g
        .try_inverse()
        .ok_or_else(|| Error::BranchCrossing(C64::new(f64::NAN, f64::NAN)))?;
    Ok(&v * gi * w.adjoint())
}

/// Inverse principal square root by the Denman–Beavers iteration.
pub fn inv_sqrt(m: &CMat) -> Option<CMat> {
    let n = m.nrows();
    if n == 0 {
        return Some(CMat::zeros(0, 0));
    }
    let mut y = m.clone();
    let mut z = CMat::identity(n, n);
    for _ in 0..100 {
        let yi = y.clone().try_inverse()?;
        let zi = z.clone().try_inverse()?;
        let yn = (&y + zi) * c64(0.5, 0.0);
        let zn = (&z + yi) * c64(0.5, 0.0);
        let diff = (&yn - &y).norm() / yn.norm().max(1e-300);
        y = yn;
        z = zn;
        if diff < 1e-15 {
            return Some(z);
        }
    }
    if y.iter().all(|v| v.re.is_finite() && v.im.is_finite()) {
        Some(z)
    } else {
        None
    }
}

/// Thin QR factorization of a tall matrix.
pub fn thin_qr(v: &CMat) -> (CMat, CMat) {
    if v.ncols() == 0 {
        return (v.clone(), CMat::zeros(0, 0));
    }
    let qr = v.clone().qr();
    (qr.q(), qr.r())
}

pub fn orthonormalize(v: &CMat) -> CMat {
    thin_qr(v).0
}

pub fn spectral_norm(m: &CMat) -> f64 {
    if m.nrows() == 0 || m.ncols() == 0 {
        return 0.0;
    }
    m.clone()
        .svd(false, false)
        .singular_values
        .iter()
        .cloned()
        .fold(0.0, f64::max)
}

pub fn min_singular_value(m: &CMat) -> f64 {
    if m.nrows() == 0 || m.ncols() == 0 {
        return f64::INFINITY;
    }
    m.clone()
        .svd(false, false)
        .singular_values
        .iter()
        .cloned()
        .fold(f64::INFINITY, f64::min)
}

/// Sine of the largest principal angle between two column spans.
pub fn subspace_sin_angle(a: &CMat, b: &CMat) -> f64 {
    if a.ncols() == 0 && b.ncols() == 0 {
        return 0.0;
    }
    let qa = orthonormalize(a);
    let qb = orthonormalize(b);
    let n = qa.nrows();
    let proj = CMat::identity(n, n) - &qa * qa.adjoint();
    spectral_norm(&(proj * qb)).min(1.0)
}

/// Left pseudo-inverse `(VᴴV)⁻¹Vᴴ` of a full-column-rank matrix.
pub fn left_inverse(v: &CMat) -> Option<CMat> {
    let g = v.adjoint() * v;
    Some(g.try_inverse()? * v.adjoint())
}

/// Unit right null vector of a real square matrix (smallest singular direction).
pub fn null_vector(m: &RMat) -> RVec {
    let svd = m.clone().svd(false, true);
    let vt = svd.v_t.expect("requested v_t");
    let (imin, _) = svd
        .singular_values
        .iter()
        .enumerate()
        .fold((0, f64::INFINITY), |acc, (i, &s)| if s < acc.1 { (i, s) } else { acc });
    vt.row(imin).transpose()
}

pub fn complex_null_vector(m: &CMat) -> DVector<C64> {
    let svd = m.clone().svd(false, true);
    let vt = svd.v_t.expect("requested v_t");
    let (imin, _) = svd
        .singular_values
        .iter()
        .enumerate()
        .fold((0, f64::INFINITY), |acc, (i, &s)| if s < acc.1 { (i, s) } else { acc });
    vt.row(imin).adjoint()
}

pub fn block_diag(blocks: &[CMat]) -> CMat {
    let n: usize = blocks.iter().map(|b| b.nrows()).sum();
    let mut out = CMat::zeros(n, n);
    let mut o = 0;
    for b in blocks {
        out.view_mut((o, o), (b.nrows(), b.ncols())).copy_from(b);
        o += b.nrows();
    }
    out
}

/// Maximum absolute entry.
pub fn max_abs(m: &CMat) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cm(n: usize, vals: &[f64]) -> CMat {
        to_complex(&RMat::from_row_slice(n, n, vals))
    }

    #[test]
    fn schur_reconstructs() {
        let m = cm(3, &[1.0, 2.0, 0.5, -3.0, 0.2, 1.0, 0.0, 4.0, -1.0]);
        let (q, t) = schur(&m).unwrap();
        assert!((&q * &t * q.adjoint() - &m).norm() < 1e-12);
        assert!((q.adjoint() * &q - CMat::identity(3, 3)).norm() < 1e-12);
    }

    #[test]
    fn ordered_schur_moves_selected_first() {
        let m = cm(4, &[3.0, 1.0, 0.0, 2.0, 0.0, -1.0, 1.0, 0.0, 1.0, 0.0, 2.0, 1.0, 0.0, 0.5, 0.0, -4.0]);
        let (q, t, k) = ordered_schur(&m, |z| z.re < 0.0).unwrap();
        assert_eq!(k, 2);
        for i in 0..k {
            assert!(t[(i, i)].re < 0.0);
        }
        for i in k..4 {
            assert!(t[(i, i)].re >= 0.0);
        }
        assert!((&q * &t * q.adjoint() - &m).norm() < 1e-11);
        let v = q.columns(0, k).into_owned();
        // span is invariant
        let resid = &m * &v - &v * (v.adjoint() * &m * &v);
        assert!(resid.norm() < 1e-11);
    }

    #[test]
    fn projector_is_idempotent_and_commutes() {
        let m = cm(3, &[1.0, 4.0, 0.0, 0.0, -2.0, 1.0, 1.0, 0.0, 0.5]);
        let p = spectral_projector(&m, |z| z.re < 0.0).unwrap();
        assert!((&p * &p - &p).norm() < 1e-10);
        assert!((&m * &p - &p * &m).norm() < 1e-10);
        let tr: C64 = (0..3).map(|i| p[(i, i)]).sum();
        assert!((tr.re - 2.0).abs() < 1e-10);
    }

    #[test]
    fn denman_beavers_inverse_root() {
        let m = CMat::from_row_slice(2, 2, &[c64(2.0, 0.3), c64(0.1, 0.0), c64(0.0, -0.2), c64(1.5, 0.0)]);
        let z = inv_sqrt(&m).unwrap();
        let back = &z * &z * &m;
        assert!((back - CMat::identity(2, 2)).norm() < 1e-12);
    }

    #[test]
    fn angle_of_equal_spans_vanishes() {
        let a = cm(3, &[1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0]).columns(0, 2).into_owned();
        let b = &a * CMat::from_row_slice(2, 2, &[c64(1.0, 1.0), c64(2.0, 0.0), c64(0.0, 0.0), c64(-1.0, 0.5)]);
        assert!(subspace_sin_angle(&a, &b) < 1e-12);
    }

    #[test]
    fn null_vector_of_rank_deficient() {
        let m = RMat::from_row_slice(2, 2, &[1.0, 1.0, 2.0, 2.0]);
        let v = null_vector(&m);
        assert!((&m * &v).norm() < 1e-14);
        assert!((v.norm() - 1.0).abs() < 1e-14);
    }
}
