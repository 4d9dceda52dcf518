//! Small dense linear-algebra helpers shared by the geometry kernels.

use nalgebra::{Complex, DMatrix, DVector, Matrix3x4, Matrix4, Vector4};

pub type C64 = Complex<f64>;
pub type CVector3 = nalgebra::Vector3<C64>;
pub type CVector4 = nalgebra::Vector4<C64>;
pub type CMatrix3 = nalgebra::Matrix3<C64>;
pub type CMatrix4 = nalgebra::Matrix4<C64>;
pub type CMatrix3x4 = nalgebra::Matrix3x4<C64>;

pub const I: C64 = Complex { re: 0.0, im: 1.0 };

#[inline]
pub fn c(re: f64) -> C64 {
    Complex::new(re, 0.0)
}

pub fn complexify4(v: &Vector4<f64>) -> CVector4 {
    v.map(c)
}

pub fn complexify34(p: &Matrix3x4<f64>) -> CMatrix3x4 {
    p.map(c)
}

pub fn complexify44(m: &Matrix4<f64>) -> CMatrix4 {
    m.map(c)
}

/// Right singular vector of `a` for the smallest singular value, together
/// with all singular values in descending order.
///
/// Matrices with fewer rows than columns are padded with zero rows so the
/// full right singular basis is available.
pub fn smallest_right_singular(a: &DMatrix<C64>) -> (DVector<C64>, DVector<f64>) {
    let (nr, nc) = a.shape();
    let m = if nr < nc {
        let mut p = DMatrix::<C64>::zeros(nc, nc);
        p.view_mut((0, 0), (nr, nc)).copy_from(a);
        p
    } else {
        a.clone()
    };
    let svd = m.svd(false, true);
    let v_t = svd.v_t.expect("v_t requested");
    let last = v_t.nrows() - 1;
    // rows of v_t are conjugated right singular vectors
    let v = v_t.row(last).transpose().map(|z| z.conj());
    (v, svd.singular_values)
}

/// Real counterpart of [`smallest_right_singular`].
pub fn smallest_right_singular_real(a: &DMatrix<f64>) -> (DVector<f64>, DVector<f64>) {
    let (nr, nc) = a.shape();
    let m = if nr < nc {
        let mut p = DMatrix::<f64>::zeros(nc, nc);
        p.view_mut((0, 0), (nr, nc)).copy_from(a);
        p
    } else {
        a.clone()
    };
    let svd = m.svd(false, true);
    let v_t = svd.v_t.expect("v_t requested");
    let last = v_t.nrows() - 1;
    (v_t.row(last).transpose(), svd.singular_values)
}

pub fn cnorm(v: &[C64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Ratio of the smallest to largest singular value of the 2×n matrix whose
/// rows are `a` and `b`. Zero exactly when the vectors are proportional.
pub fn proportionality_ratio(a: &[C64], b: &[C64]) -> f64 {
    let na = cnorm(a);
    let nb = cnorm(b);
    if na == 0.0 || nb == 0.0 {
        return 0.0;
    }
    // c = <b, a> for unit vectors; ‖a − u b‖² = 2 − 2|c| with u the phase of c
    let inner: C64 = a.iter().zip(b).map(|(x, y)| y.conj() * x).sum::<C64>() / (na * nb);
    let abs = inner.norm();
    let u = if abs > 0.0 { inner / abs } else { c(1.0) };
    let d2: f64 = a
        .iter()
        .zip(b)
        .map(|(x, y)| (x / na - u * y / nb).norm_sqr())
        .sum();
    let one_minus = 0.5 * d2;
    let one_plus = 2.0 - one_minus;
    (one_minus / one_plus).max(0.0).sqrt()
}

/// Unit phase `s` maximising ‖Re(s·v)‖ over all entries of `v`.
///
/// With v = u + i·w the objective is the quadratic form of
/// [[a, −b], [−b, c]] (a = u·u, b = u·w, c = w·w) evaluated at
/// (cos φ, sin φ); its leading eigenvector angle is ½·atan2(−2b, a − c).
pub fn best_real_phase(entries: &[C64]) -> C64 {
    let (mut a, mut b, mut cc) = (0.0, 0.0, 0.0);
    for z in entries {
        a += z.re * z.re;
        b += z.re * z.im;
        cc += z.im * z.im;
    }
    let phi = 0.5 * (-2.0 * b).atan2(a - cc);
    Complex::from_polar(1.0, phi)
}

/// Rotate a complex vector to its most-real phase, scale to unit norm, and
/// report the ratio ‖Im‖/‖Re‖ of the result.
pub fn realify(entries: &[C64]) -> (Vec<C64>, f64) {
    let s = best_real_phase(entries);
    let n = cnorm(entries);
    let out: Vec<C64> = entries.iter().map(|z| s * z / n).collect();
    let re: f64 = out.iter().map(|z| z.re * z.re).sum::<f64>().sqrt();
    let im: f64 = out.iter().map(|z| z.im * z.im).sum::<f64>().sqrt();
    let ratio = if re > 0.0 { im / re } else { f64::INFINITY };
    (out, ratio)
}

/// Angle between two real homogeneous vectors, insensitive to sign and scale.
pub fn homogeneous_angle(a: &[f64], b: &[f64]) -> f64 {
    let na = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let sign = if dot < 0.0 { -1.0 } else { 1.0 };
    let d: f64 = a
        .iter()
        .zip(b)
        .map(|(x, y)| (x / na - sign * y / nb).powi(2))
        .sum::<f64>()
        .sqrt();
    2.0 * (0.5 * d).min(1.0).asin()
}

/// Angle between two complex homogeneous vectors (Fubini–Study distance).
pub fn complex_homogeneous_angle(a: &[C64], b: &[C64]) -> f64 {
    let na = cnorm(a);
    let nb = cnorm(b);
    let inner: C64 = a.iter().zip(b).map(|(x, y)| y.conj() * x).sum::<C64>();
    let abs = inner.norm();
    let u = if abs > 0.0 { inner / abs } else { c(1.0) };
    let d: f64 = a
        .iter()
        .zip(b)
        .map(|(x, y)| (x / na - u * y / nb).norm_sqr())
        .sum::<f64>()
        .sqrt();
    2.0 * (0.5 * d).min(1.0).asin()
}

/// Ratio of extreme singular values of a complex square matrix (∞ when singular).
pub fn condition_number(m: &DMatrix<C64>) -> f64 {
    let s = m.clone().singular_values();
    let max = s.max();
    let min = s.min();
    if min <= 0.0 {
        f64::INFINITY
    } else {
        max / min
    }
}

/// Eigenvalues of a complex square matrix from its Schur form.
///
/// 2×2 diagonal blocks left by the iteration are split with the quadratic
/// formula.
pub fn complex_eigenvalues(m: DMatrix<C64>) -> Vec<C64> {
    let n = m.nrows();
    let (_, t) = m.schur().unpack();
    let mut out = Vec::with_capacity(n);
    let mut i = 0;
    while i < n {
        let sub = if i + 1 < n { t[(i + 1, i)].norm() } else { 0.0 };
        let scale = t[(i, i)].norm() + if i + 1 < n { t[(i + 1, i + 1)].norm() } else { 0.0 };
        if i + 1 < n && sub > 1e-14 * scale.max(1e-300) {
            let (a, b, cc, d) = (t[(i, i)], t[(i, i + 1)], t[(i + 1, i)], t[(i + 1, i + 1)]);
            let tr = a + d;
            let det = a * d - b * cc;
            let disc = (tr * tr - 4.0 * det).sqrt();
            out.push((tr + disc) / 2.0);
            out.push((tr - disc) / 2.0);
            i += 2;
        } else {
            out.push(t[(i, i)]);
            i += 1;
        }
    }
    out
}

/// Roots of a homogeneous binary quadratic a·λ² + b·λμ + c·μ² as (λ, μ)
/// pairs, using the cancellation-free form (q, a), (c, q).
pub fn homogeneous_quadratic_roots(a: C64, b: C64, cc: C64) -> [(C64, C64); 2] {
    let disc = (b * b - 4.0 * a * cc).sqrt();
    let sign = if (b.conj() * disc).re >= 0.0 { 1.0 } else { -1.0 };
    let q = -(b + sign * disc) / 2.0;
    if q.norm() == 0.0 {
        // b = 0 and ac = 0
        if a.norm() == 0.0 && cc.norm() == 0.0 {
            return [(c(1.0), c(0.0)), (c(0.0), c(1.0))];
        }
        if a.norm() == 0.0 {
            return [(c(1.0), c(0.0)), (c(1.0), c(0.0))];
        }
        return [(c(0.0), c(1.0)), (c(0.0), c(1.0))];
    }
    [(q, a), (cc, q)]
}
