//! Complex projective-geometry kernel.
//!
//! Homogeneous points and planes of 3-space, Plücker matrices of (possibly
//! complex) lines, Veronese maps, conic fitting, and the per-camera objects
//! the autocalibration needs: optical centers, principal planes and the
//! isotropic lines (back-projections of the cyclic points (1, ±i, 0)ᵀ).
//!
//! All homogeneous quantities are compared up to a nonzero complex scale.

use nalgebra::{DMatrix, Matrix3, Matrix3x4, Vector3, Vector4};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::{
    c, cnorm, complexify34, complexify4, proportionality_ratio, smallest_right_singular, CMatrix3,
    CMatrix4, CVector3, CVector4, C64, I,
};

/// Default relative tolerance for up-to-scale comparisons.
pub const DEFAULT_REL_TOL: f64 = 1e-9;

/// Singular-value ratio below which two vectors count as proportional.
pub const PROPORTIONAL_TOL: f64 = 1e-12;

macro_rules! homogeneous_vector {
    ($name:ident, $what:literal) => {
        #[doc = concat!("Homogeneous complex 4-vector representing a ", $what, ".")]
        #[derive(Debug, Clone, Copy, PartialEq)]
        pub struct $name(CVector4);

        impl $name {
            /// Fails with `DegenerateInput` on the zero vector.
            pub fn new(coords: CVector4) -> Result<Self> {
                if coords.iter().all(|z| z.norm() == 0.0) || coords.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
                    return Err(Error::DegenerateInput(concat!("zero or non-finite ", $what).into()));
                }
                Ok(Self(coords))
            }

            pub fn from_real(coords: Vector4<f64>) -> Result<Self> {
                Self::new(complexify4(&coords))
            }

            pub fn coords(&self) -> &CVector4 {
                &self.0
            }

            /// Unit Euclidean norm representative.
            pub fn normalized(&self) -> Self {
                Self(self.0 / c(cnorm(self.0.as_slice())))
            }

            pub fn conj(&self) -> Self {
                Self(self.0.map(|z| z.conj()))
            }

            /// Equality up to a nonzero complex scale.
            pub fn same_as(&self, other: &Self, tol: f64) -> bool {
                proportionality_ratio(self.0.as_slice(), other.0.as_slice()) < tol
            }

            /// Real part after rotating to the most-real phase, and the
            /// remaining ‖Im‖/‖Re‖ ratio.
            pub fn to_real(&self) -> (Vector4<f64>, f64) {
                let (v, ratio) = crate::numeric::realify(self.0.as_slice());
                (Vector4::new(v[0].re, v[1].re, v[2].re, v[3].re), ratio)
            }
        }
    };
}

homogeneous_vector!(HPoint, "point of 3-space");
homogeneous_vector!(Plane, "plane of 3-space");

impl Plane {
    /// πᵀX (bilinear, no conjugation).
    pub fn apply(&self, x: &CVector4) -> C64 {
        self.0.dot(x)
    }
}

/// Plücker matrix of a line of 3-space: a non-null rank-2 antisymmetric
/// 4×4 complex matrix, in point form (L = pqᵀ − qpᵀ).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PluckerLine {
    m: CMatrix4,
}

/// Result of intersecting a line with a plane.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Meet {
    Point(HPoint),
    Contained,
}

impl Meet {
    pub fn point(self) -> Option<HPoint> {
        match self {
            Meet::Point(p) => Some(p),
            Meet::Contained => None,
        }
    }
}

impl PluckerLine {
    /// Validates antisymmetry and the Plücker quadratic relation.
    pub fn from_matrix(m: CMatrix4, tol: f64) -> Result<Self> {
        let n = m.norm();
        if n == 0.0 {
            return Err(Error::DegenerateInput("zero Plücker matrix".into()));
        }
        if (m + m.transpose()).norm() > tol * n {
            return Err(Error::DegenerateInput("Plücker matrix not antisymmetric".into()));
        }
        let rel = plucker_relation(&m).norm() / (n * n);
        if rel > tol {
            return Err(Error::DegenerateInput(format!(
                "Plücker relation violated ({rel:.3e})"
            )));
        }
        Ok(Self { m })
    }

    pub fn matrix(&self) -> &CMatrix4 {
        &self.m
    }

    pub fn conj(&self) -> Self {
        Self { m: self.m.map(|z| z.conj()) }
    }

    pub fn normalized(&self) -> Self {
        Self { m: self.m / c(self.m.norm()) }
    }

    pub fn same_as(&self, other: &Self, tol: f64) -> bool {
        proportionality_ratio(self.m.as_slice(), other.m.as_slice()) < tol
    }

    /// Raw product L·π (no normalization, polynomial in π).
    pub fn meet_raw(&self, pi: &CVector4) -> CVector4 {
        self.m * pi
    }
}

/// m12·m34 + m13·m42 + m14·m23 (1-based indices), zero for every line.
pub fn plucker_relation(m: &CMatrix4) -> C64 {
    m[(0, 1)] * m[(2, 3)] + m[(0, 2)] * m[(3, 1)] + m[(0, 3)] * m[(1, 2)]
}

fn outer_antisym(p: &CVector4, q: &CVector4) -> CMatrix4 {
    p * q.transpose() - q * p.transpose()
}

/// Plücker matrix pqᵀ − qpᵀ of the line through two points, normalized to
/// unit Frobenius norm.
pub fn plucker_from_points(p: &HPoint, q: &HPoint) -> Result<PluckerLine> {
    if proportionality_ratio(p.coords().as_slice(), q.coords().as_slice()) < PROPORTIONAL_TOL {
        return Err(Error::DegenerateInput("points are proportional".into()));
    }
    let pn = p.normalized();
    let qn = q.normalized();
    Ok(PluckerLine { m: outer_antisym(pn.coords(), qn.coords()) }.normalized())
}

/// Line of intersection of two planes, returned in point form.
pub fn plucker_from_planes(a: &Plane, b: &Plane) -> Result<PluckerLine> {
    if proportionality_ratio(a.coords().as_slice(), b.coords().as_slice()) < PROPORTIONAL_TOL {
        return Err(Error::DegenerateInput("planes are proportional".into()));
    }
    let an = a.normalized();
    let bn = b.normalized();
    let dual = PluckerLine { m: outer_antisym(an.coords(), bn.coords()) };
    Ok(plucker_dual(&dual).normalized())
}

/// The coordinate permutation exchanging the point and plane Plücker forms.
pub fn plucker_dual(l: &PluckerLine) -> PluckerLine {
    let m = &l.m;
    let (m12, m13, m14) = (m[(0, 1)], m[(0, 2)], m[(0, 3)]);
    let (m23, m24, m34) = (m[(1, 2)], m[(1, 3)], m[(2, 3)]);
    let m42 = -m24;
    let m31 = -m13;
    let z = c(0.0);
    #[rustfmt::skip]
    let d = CMatrix4::new(
        z,    m34,  m42,  m23,
        -m34, z,    m14,  m31,
        -m42, -m14, z,    m12,
        -m23, -m31, -m12, z,
    );
    PluckerLine { m: d }
}

/// Intersection point L·π, or `Contained` when the product vanishes
/// relative to ‖L‖·‖π‖.
pub fn line_plane_meet(l: &PluckerLine, pi: &Plane) -> Meet {
    line_plane_meet_tol(l, pi, DEFAULT_REL_TOL)
}

pub fn line_plane_meet_tol(l: &PluckerLine, pi: &Plane, tol: f64) -> Meet {
    let x = l.m * pi.coords();
    let scale = l.m.norm() * cnorm(pi.coords().as_slice());
    if cnorm(x.as_slice()) <= tol * scale {
        Meet::Contained
    } else {
        Meet::Point(HPoint(x).normalized())
    }
}

/// Coordinate change X' = H·X applied to a line: L' = H L Hᵀ.
pub fn plucker_transform(l: &PluckerLine, h: &CMatrix4) -> Result<PluckerLine> {
    let det = h.determinant();
    let hn = h.norm();
    if hn == 0.0 || det.norm() <= 1e-14 * hn.powi(4) {
        return Err(Error::SingularTransform);
    }
    Ok(PluckerLine { m: h * l.m * h.transpose() })
}

/// Degree-two Veronese map of a plane point:
/// (x1², x1x2, x1x3, x2², x2x3, x3²).
pub fn veronese2(x: &CVector3) -> [C64; 6] {
    [x[0] * x[0], x[0] * x[1], x[0] * x[2], x[1] * x[1], x[1] * x[2], x[2] * x[2]]
}

/// Degree-two Veronese map of a space point:
/// (x1², x1x2, x1x3, x1x4, x2², x2x3, x2x4, x3², x3x4, x4²).
pub fn veronese3(x: &CVector4) -> [C64; 10] {
    [
        x[0] * x[0],
        x[0] * x[1],
        x[0] * x[2],
        x[0] * x[3],
        x[1] * x[1],
        x[1] * x[2],
        x[1] * x[3],
        x[2] * x[2],
        x[2] * x[3],
        x[3] * x[3],
    ]
}

/// Symmetric 3×3 complex matrix of a plane conic.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Conic {
    c: CMatrix3,
}

impl Conic {
    pub fn new(m: CMatrix3) -> Result<Self> {
        let n = m.norm();
        if n == 0.0 {
            return Err(Error::ZeroMatrix);
        }
        if (m - m.transpose()).norm() > DEFAULT_REL_TOL * n {
            return Err(Error::DegenerateInput("conic matrix not symmetric".into()));
        }
        Ok(Self { c: m })
    }

    pub fn from_real(m: Matrix3<f64>) -> Result<Self> {
        Self::new(m.map(c))
    }

    pub fn matrix(&self) -> &CMatrix3 {
        &self.c
    }

    /// Coefficient vector C̄ with ν2(x)·C̄ = xᵀCx, in Veronese order.
    pub fn coefficients(&self) -> [C64; 6] {
        let m = &self.c;
        [m[(0, 0)], m[(0, 1)] * 2.0, m[(0, 2)] * 2.0, m[(1, 1)], m[(1, 2)] * 2.0, m[(2, 2)]]
    }

    pub fn from_coefficients(v: &[C64; 6]) -> Result<Self> {
        let h = |z: C64| z / 2.0;
        #[rustfmt::skip]
        let m = CMatrix3::new(
            v[0],    h(v[1]), h(v[2]),
            h(v[1]), v[3],    h(v[4]),
            h(v[2]), h(v[4]), v[5],
        );
        Self::new(m)
    }

    /// xᵀCx.
    pub fn eval(&self, x: &CVector3) -> C64 {
        (x.transpose() * self.c * x)[(0, 0)]
    }

    pub fn same_as(&self, other: &Self, tol: f64) -> bool {
        proportionality_ratio(self.c.as_slice(), other.c.as_slice()) < tol
    }
}

/// Least-squares conic through at least five plane points: the right
/// singular vector of the stacked Veronese rows for the smallest singular
/// value. Rows are built from unit-norm points.
pub fn conic_fit(points: &[CVector3]) -> Result<Conic> {
    conic_fit_with_tol(points, 1e-10)
}

pub fn conic_fit_with_tol(points: &[CVector3], rank_tol: f64) -> Result<Conic> {
    if points.len() < 5 {
        return Err(Error::DegenerateInput(format!(
            "need at least 5 points, got {}",
            points.len()
        )));
    }
    let mut a = DMatrix::<C64>::zeros(points.len(), 6);
    for (i, p) in points.iter().enumerate() {
        let n = cnorm(p.as_slice());
        if n == 0.0 || !n.is_finite() {
            return Err(Error::DegenerateInput(format!("point {i} is zero")));
        }
        let row = veronese2(&(p / c(n)));
        for (j, v) in row.iter().enumerate() {
            a[(i, j)] = *v;
        }
    }
    let (v, s) = smallest_right_singular(&a);
    if s[4] <= rank_tol * s[0] {
        return Err(Error::RankDeficient(format!(
            "conic not unique (σ5/σ1 = {:.3e})",
            s[4] / s[0]
        )));
    }
    let coeffs = [v[0], v[1], v[2], v[3], v[4], v[5]];
    Conic::from_coefficients(&coeffs)
}

/// Smallest singular value of the 6×6 Veronese matrix of six plane points
/// with unit-norm columns; zero exactly when the points share a conic.
pub fn points_on_conic_residual(points: &[CVector3; 6]) -> f64 {
    let mut a = DMatrix::<C64>::zeros(6, 6);
    for (j, p) in points.iter().enumerate() {
        let col = veronese2(p);
        let n = cnorm(&col);
        for (i, v) in col.iter().enumerate() {
            a[(i, j)] = if n > 0.0 { v / n } else { c(0.0) };
        }
    }
    a.singular_values().min()
}

/// Pixel shape of a camera: aspect ratio τ = m_y/m_x and skew angle θ.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PixelShape {
    tau: f64,
    theta: f64,
}

impl PixelShape {
    pub fn new(tau: f64, theta: f64) -> Result<Self> {
        if !(tau > 0.0) || !(theta > 0.0 && theta < std::f64::consts::PI) {
            return Err(Error::InvalidInput(format!(
                "pixel shape needs tau > 0 and 0 < theta < pi (got {tau}, {theta})"
            )));
        }
        Ok(Self { tau, theta })
    }

    pub fn square() -> Self {
        Self { tau: 1.0, theta: std::f64::consts::FRAC_PI_2 }
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    /// Affine image transform that turns a camera with this pixel shape
    /// into a square-pixel one.
    pub fn matrix(&self) -> Matrix3<f64> {
        let (s, co) = self.theta.sin_cos();
        Matrix3::new(self.tau, co, 0.0, 0.0, s, 0.0, 0.0, 0.0, 1.0)
    }
}

/// A 3×4 real projection matrix together with its image size in pixels.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProjectionMatrix {
    pub p: Matrix3x4<f64>,
    pub width: f64,
    pub height: f64,
}

impl ProjectionMatrix {
    pub fn new(p: Matrix3x4<f64>, width: f64, height: f64) -> Self {
        Self { p, width, height }
    }

    /// Singular values of P in descending order.
    fn singular_values(&self) -> Vector3<f64> {
        let mut s: Vec<f64> = self.p.transpose().singular_values().iter().copied().collect();
        s.sort_by(|a, b| b.partial_cmp(a).unwrap());
        Vector3::new(s[0], s[1], s[2])
    }

    pub fn has_full_rank(&self) -> bool {
        let s = self.singular_values();
        s[0] > 0.0 && s[2] > PROPORTIONAL_TOL * s[0]
    }

    /// True when the left 3×3 block is nonsingular (finite optical center).
    pub fn is_finite(&self) -> bool {
        let m = self.p.fixed_view::<3, 3>(0, 0);
        let n = m.norm();
        n > 0.0 && m.determinant().abs() > 1e-12 * n.powi(3)
    }

    pub fn row_plane(&self, i: usize) -> CVector4 {
        complexify4(&self.p.row(i).transpose())
    }

    pub fn project(&self, x: &CVector4) -> CVector3 {
        complexify34(&self.p) * x
    }

    pub fn project_real(&self, x: &Vector4<f64>) -> Vector3<f64> {
        self.p * x
    }

    /// Same camera with P scaled to unit Frobenius norm.
    pub fn normalized(&self) -> Self {
        Self { p: self.p / self.p.norm(), ..*self }
    }
}

/// Null vector of P via the signed 3×3 minors; last coordinate made
/// nonnegative and the result scaled to unit norm.
pub fn optical_center(p: &ProjectionMatrix) -> Result<HPoint> {
    if !p.has_full_rank() {
        return Err(Error::DegenerateCamera("projection matrix has rank < 3".into()));
    }
    let minor = |skip: usize| -> f64 {
        let cols: Vec<usize> = (0..4).filter(|&j| j != skip).collect();
        Matrix3::from_fn(|r, k| p.p[(r, cols[k])]).determinant()
    };
    let mut x = Vector4::new(minor(0), -minor(1), minor(2), -minor(3));
    if x[3] < 0.0 || (x[3] == 0.0 && x.iter().find(|v| **v != 0.0).is_some_and(|v| *v < 0.0)) {
        x = -x;
    }
    let n = x.norm();
    HPoint::from_real(x / n)
}

/// Third row of P: the plane through the optical center parallel to the
/// image plane.
pub fn principal_plane(p: &ProjectionMatrix) -> Result<Plane> {
    Plane::new(p.row_plane(2))
}

/// The isotropic lines of a camera, M(p3, p2 + i·p1)* and its conjugate
/// M(p3, p2 − i·p1)*. Both pass through the optical center and lie in the
/// principal plane; the first back-projects (1, −i, 0)ᵀ.
pub fn isotropic_lines(p: &ProjectionMatrix) -> Result<(PluckerLine, PluckerLine)> {
    if !p.has_full_rank() {
        return Err(Error::DegenerateCamera("dependent rows".into()));
    }
    let p1 = p.row_plane(0);
    let p2 = p.row_plane(1);
    let p3 = p.row_plane(2);
    let n1 = cnorm(p1.as_slice());
    let n2 = cnorm(p2.as_slice());
    let n3 = cnorm(p3.as_slice());
    // rescale rows before mixing so the i·p1 term has comparable weight
    let s = 1.0 / (n1 * n2).sqrt();
    let a = p2 * c(s) + p1 * (I * s);
    let p3u = p3 / c(n3);
    let l = plucker_dual(&PluckerLine { m: outer_antisym(&p3u, &a) }).normalized();
    Ok((l, l.conj()))
}

/// Left-multiply P by the pixel-shape matrix so the result behaves as a
/// square-pixel camera.
pub fn pixel_shape_normalize(p: &ProjectionMatrix, shape: &PixelShape) -> ProjectionMatrix {
    ProjectionMatrix { p: shape.matrix() * p.p, ..*p }
}

/// Similarity moving the image center to the origin and scaling by
/// 2/max(W, H). It fixes the cyclic points, so isotropic lines and the
/// square-pixel property are unchanged.
pub fn image_normalization(width: f64, height: f64) -> Matrix3<f64> {
    let s = 0.5 * width.max(height);
    let s = if s > 0.0 { s } else { 1.0 };
    Matrix3::new(1.0 / s, 0.0, -0.5 * width / s, 0.0, 1.0 / s, -0.5 * height / s, 0.0, 0.0, 1.0)
}

impl ProjectionMatrix {
    /// N·P with N from [`image_normalization`], rescaled to unit norm. The
    /// declared image size is kept.
    pub fn preconditioned(&self) -> Self {
        let p = image_normalization(self.width, self.height) * self.p;
        Self { p: p / p.norm(), ..*self }
    }
}

/// Complex point with real coordinates.
pub fn real_point(x: f64, y: f64, z: f64, w: f64) -> CVector4 {
    CVector4::new(c(x), c(y), c(z), c(w))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numeric::complexify44;
    use nalgebra::{Matrix4, Rotation3};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn rand_c4(rng: &mut ChaCha8Rng) -> CVector4 {
        CVector4::from_fn(|_, _| C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
    }

    fn synthetic_camera(rng: &mut ChaCha8Rng) -> (Matrix3<f64>, ProjectionMatrix, Vector3<f64>) {
        let alpha = rng.random_range(500.0..2000.0);
        let k = Matrix3::new(alpha, 0.0, rng.random_range(300.0..900.0), 0.0, alpha, rng.random_range(200.0..700.0), 0.0, 0.0, 1.0);
        let r = Rotation3::from_euler_angles(rng.random_range(-3.0..3.0), rng.random_range(-1.5..1.5), rng.random_range(-3.0..3.0));
        let center = Vector3::new(rng.random_range(-5.0..5.0), rng.random_range(-5.0..5.0), rng.random_range(-5.0..5.0));
        let mut rt = Matrix3x4::zeros();
        rt.fixed_view_mut::<3, 3>(0, 0).copy_from(r.matrix());
        rt.set_column(3, &(-(r.matrix() * center)));
        (k, ProjectionMatrix::new(k * rt, 1280.0, 960.0), center)
    }

    #[test]
    fn plucker_from_basis_points() {
        let p = HPoint::new(real_point(1.0, 0.0, 0.0, 0.0)).unwrap();
        let q = HPoint::new(real_point(0.0, 1.0, 0.0, 0.0)).unwrap();
        let l = plucker_from_points(&p, &q).unwrap();
        let mut want = CMatrix4::zeros();
        want[(0, 1)] = c(1.0);
        want[(1, 0)] = c(-1.0);
        assert!(l.same_as(&PluckerLine::from_matrix(want, 1e-12).unwrap(), 1e-15));
    }

    #[test]
    fn plucker_rejects_proportional_points() {
        let p = HPoint::new(real_point(1.0, 0.0, 0.0, 0.0)).unwrap();
        let q = HPoint::new(real_point(2.0, 0.0, 0.0, 0.0)).unwrap();
        assert!(matches!(plucker_from_points(&p, &q), Err(Error::DegenerateInput(_))));
    }

    #[test]
    fn planes_through_both_points_contain_line() {
        // oracle: the pencil of planes through p and q is the null space of [p q]ᵀ
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..20 {
            let p = HPoint::new(rand_c4(&mut rng)).unwrap();
            let q = HPoint::new(rand_c4(&mut rng)).unwrap();
            let l = plucker_from_points(&p, &q).unwrap();
            let mut a = DMatrix::<C64>::zeros(2, 4);
            a.set_row(0, &p.coords().transpose());
            a.set_row(1, &q.coords().transpose());
            let svd = {
                let mut pad = DMatrix::<C64>::zeros(4, 4);
                pad.view_mut((0, 0), (2, 4)).copy_from(&a);
                pad.svd(false, true)
            };
            let vt = svd.v_t.unwrap();
            for row in 2..4 {
                let pi = Plane::new(CVector4::from_iterator(vt.row(row).iter().map(|z| z.conj()))).unwrap();
                assert!((pi.apply(p.coords())).norm() < 1e-12);
                assert_eq!(line_plane_meet(&l, &pi), Meet::Contained);
            }
            assert!(plucker_relation(l.matrix()).norm() < 1e-14);
        }
    }

    #[test]
    fn dual_of_e1_e2_line() {
        let p = HPoint::new(real_point(1.0, 0.0, 0.0, 0.0)).unwrap();
        let q = HPoint::new(real_point(0.0, 1.0, 0.0, 0.0)).unwrap();
        let d = plucker_dual(&plucker_from_points(&p, &q).unwrap());
        let m = d.matrix();
        for i in 0..4 {
            for j in 0..4 {
                let nonzero = (i, j) == (2, 3) || (i, j) == (3, 2);
                assert_eq!(m[(i, j)].norm() > 0.0, nonzero, "entry ({i},{j})");
            }
        }
    }

    #[test]
    fn dual_is_involution() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..20 {
            let l = plucker_from_points(&HPoint::new(rand_c4(&mut rng)).unwrap(), &HPoint::new(rand_c4(&mut rng)).unwrap()).unwrap();
            assert!(plucker_dual(&plucker_dual(&l)).same_as(&l, 1e-12));
        }
    }

    #[test]
    fn dual_of_plane_pair_contains_intersection_points() {
        // the line of two planes, converted to point form, meets a third plane
        // in a point lying on both original planes
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..20 {
            let a = Plane::new(rand_c4(&mut rng)).unwrap();
            let b = Plane::new(rand_c4(&mut rng)).unwrap();
            let l = plucker_from_planes(&a, &b).unwrap();
            let probe = Plane::new(rand_c4(&mut rng)).unwrap();
            let x = line_plane_meet(&l, &probe).point().unwrap();
            assert!(a.apply(x.coords()).norm() < 1e-12);
            assert!(b.apply(x.coords()).norm() < 1e-12);
            assert!(probe.apply(x.coords()).norm() < 1e-12);
        }
    }

    #[test]
    fn meet_examples() {
        let p = HPoint::new(real_point(1.0, 0.0, 0.0, 0.0)).unwrap();
        let q = HPoint::new(real_point(0.0, 1.0, 0.0, 0.0)).unwrap();
        let l = plucker_from_points(&p, &q).unwrap();
        let contained = Plane::new(real_point(0.0, 0.0, 1.0, 1.0)).unwrap();
        assert_eq!(line_plane_meet(&l, &contained), Meet::Contained);
        let y0 = Plane::new(real_point(0.0, 1.0, 0.0, 0.0)).unwrap();
        let x = line_plane_meet(&l, &y0).point().unwrap();
        assert!(x.same_as(&p, 1e-12));
    }

    #[test]
    fn meet_lies_on_plane_and_line() {
        // oracle: least-squares membership of the meet in span(p, q)
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..20 {
            let p = rand_c4(&mut rng);
            let q = rand_c4(&mut rng);
            let l = plucker_from_points(&HPoint::new(p).unwrap(), &HPoint::new(q).unwrap()).unwrap();
            let pi = Plane::new(rand_c4(&mut rng)).unwrap();
            let x = *line_plane_meet(&l, &pi).point().unwrap().coords();
            assert!(pi.apply(&x).norm() < 1e-12);
            let mut a = DMatrix::<C64>::zeros(4, 2);
            a.set_column(0, &p);
            a.set_column(1, &q);
            let coef = a.clone().svd(true, true).solve(&DMatrix::from_column_slice(4, 1, x.as_slice()), 1e-14).unwrap();
            let resid = (&a * coef - DMatrix::from_column_slice(4, 1, x.as_slice())).norm();
            assert!(resid < 1e-12);
        }
    }

    #[test]
    fn transform_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let p = rand_c4(&mut rng);
        let q = rand_c4(&mut rng);
        let l = plucker_from_points(&HPoint::new(p).unwrap(), &HPoint::new(q).unwrap()).unwrap();
        let id = CMatrix4::identity();
        assert!((plucker_transform(&l, &id).unwrap().matrix() - l.matrix()).norm() < 1e-15);
        let two = id * c(2.0);
        assert!((plucker_transform(&l, &two).unwrap().matrix() - l.matrix() * c(4.0)).norm() < 1e-14);
        for _ in 0..10 {
            let h = CMatrix4::from_fn(|_, _| C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)));
            let moved = plucker_transform(&l, &h).unwrap();
            let direct = plucker_from_points(&HPoint::new(h * p).unwrap(), &HPoint::new(h * q).unwrap()).unwrap();
            assert!(moved.same_as(&direct, 1e-10));
        }
        let singular = complexify44(&Matrix4::from_diagonal(&Vector4::new(1.0, 1.0, 1.0, 0.0)));
        assert!(matches!(plucker_transform(&l, &singular), Err(Error::SingularTransform)));
    }

    #[test]
    fn veronese_examples() {
        let v = veronese2(&CVector3::new(c(1.0), c(0.0), c(0.0)));
        assert_eq!(v.map(|z| z.re), [1.0, 0.0, 0.0, 0.0, 0.0, 0.0]);
        let v = veronese2(&CVector3::new(c(1.0), c(1.0), c(1.0)));
        assert_eq!(v.map(|z| z.re), [1.0; 6]);
        let v = veronese3(&real_point(1.0, 2.0, 3.0, 4.0));
        assert_eq!(v.map(|z| z.re), [1.0, 2.0, 3.0, 4.0, 4.0, 6.0, 8.0, 9.0, 12.0, 16.0]);
    }

    #[test]
    fn veronese_consistency_with_coefficients() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..50 {
            let a = CMatrix3::from_fn(|_, _| C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)));
            let conic = Conic::new(a + a.transpose()).unwrap();
            let x = CVector3::from_fn(|_, _| C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)));
            let lhs = conic.eval(&x);
            let rhs: C64 = veronese2(&x).iter().zip(conic.coefficients()).map(|(a, b)| a * b).sum();
            assert!((lhs - rhs).norm() < 1e-13);
            let back = Conic::from_coefficients(&conic.coefficients()).unwrap();
            assert!((back.matrix() - conic.matrix()).norm() < 1e-14);
        }
    }

    fn circle_point(t: f64) -> CVector3 {
        CVector3::new(c(t.cos()), c(t.sin()), c(1.0))
    }

    #[test]
    fn fit_unit_circle() {
        let pts: Vec<CVector3> = [0.1, 1.0, 2.2, 3.5, 5.0].iter().map(|t| circle_point(*t)).collect();
        let conic = conic_fit(&pts).unwrap();
        let want = Conic::from_real(Matrix3::from_diagonal(&Vector3::new(1.0, 1.0, -1.0))).unwrap();
        assert!(conic.same_as(&want, 1e-12));
    }

    #[test]
    fn fit_circle_through_cyclic_points() {
        let mut pts = vec![CVector3::new(c(1.0), I, c(0.0)), CVector3::new(c(1.0), -I, c(0.0))];
        pts.extend([0.3, 2.0, 4.0].iter().map(|t| circle_point(*t)));
        let conic = conic_fit(&pts).unwrap();
        let want = Conic::from_real(Matrix3::from_diagonal(&Vector3::new(1.0, 1.0, -1.0))).unwrap();
        assert!(conic.same_as(&want, 1e-12));
    }

    #[test]
    fn fit_random_conic_from_line_intersections() {
        // oracle: points generated as intersections of random lines with a
        // random symmetric conic (roots of the restricted quadratic)
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        for _ in 0..20 {
            let a = CMatrix3::from_fn(|_, _| C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)));
            let truth = Conic::new(a + a.transpose()).unwrap();
            let mut pts = Vec::new();
            while pts.len() < 6 {
                let x = CVector3::from_fn(|_, _| C64::new(rng.random_range(-1.0..1.0), 0.0));
                let y = CVector3::from_fn(|_, _| C64::new(rng.random_range(-1.0..1.0), 0.0));
                // (x + t y)ᵀC(x + t y) = 0
                let qa = truth.eval(&y);
                let qb = (x.transpose() * truth.matrix() * y)[(0, 0)] * 2.0;
                let qc = truth.eval(&x);
                for (l, m) in crate::numeric::homogeneous_quadratic_roots(qa, qb, qc) {
                    if pts.len() < 6 {
                        pts.push(x * m + y * l);
                    }
                }
            }
            let fit = conic_fit(&pts).unwrap();
            assert!(fit.same_as(&truth, 1e-9));
            for p in &pts {
                let n = cnorm(p.as_slice());
                assert!(fit.eval(p).norm() <= 1e-10 * fit.matrix().norm() * n * n);
            }
            let six: [CVector3; 6] = pts.clone().try_into().unwrap();
            assert!(points_on_conic_residual(&six) <= 1e-10);
        }
    }

    #[test]
    fn five_generic_points_are_fitted_exactly() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..30 {
            let pts: Vec<CVector3> = (0..5)
                .map(|_| CVector3::from_fn(|_, _| C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))))
                .collect();
            let fit = conic_fit(&pts).unwrap();
            for p in &pts {
                let n = cnorm(p.as_slice());
                assert!(fit.eval(p).norm() <= 1e-10 * fit.matrix().norm() * n * n);
            }
        }
    }

    #[test]
    fn conic_fit_rejects_collinear_points() {
        let pts: Vec<CVector3> = (0..6).map(|i| CVector3::new(c(i as f64), c(2.0 * i as f64 + 1.0), c(1.0))).collect();
        assert!(matches!(conic_fit(&pts), Err(Error::RankDeficient(_))));
    }

    #[test]
    fn conic_residual_off_conic() {
        let mut pts: [CVector3; 6] = [0.1, 0.9, 2.0, 3.1, 4.2, 5.3].map(circle_point);
        assert!(points_on_conic_residual(&pts) <= 1e-10);
        pts[5] += CVector3::new(c(1e-2), c(0.0), c(0.0));
        let off = points_on_conic_residual(&pts);
        assert!(off > 1e-5, "perturbed residual {off}");
        let mut dup: [CVector3; 6] = [0.1, 0.9, 2.0, 3.1, 4.2, 4.2].map(circle_point);
        dup[0] = CVector3::new(c(0.3), c(-2.0), c(1.0));
        assert!(points_on_conic_residual(&dup) <= 1e-10);
    }

    #[test]
    fn isotropic_lines_of_canonical_camera() {
        let p = ProjectionMatrix::new(Matrix3x4::identity(), 2.0, 2.0);
        let (l, lb) = isotropic_lines(&p).unwrap();
        let center = HPoint::new(real_point(0.0, 0.0, 0.0, 1.0)).unwrap();
        let inf = Plane::new(real_point(0.0, 0.0, 0.0, 1.0)).unwrap();
        for line in [l, lb] {
            // every plane through the center meets the line at the center or contains it
            let probe = Plane::new(real_point(0.3, -0.2, 0.7, 0.0)).unwrap();
            if let Meet::Point(x) = line_plane_meet(&line, &probe) {
                assert!(x.same_as(&center, 1e-12));
            }
            let x = line_plane_meet(&line, &inf).point().unwrap();
            let v = x.coords();
            assert!((v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).norm() < 1e-14);
        }
        // first line's point at infinity projects to (1, −i, 0)
        let x = line_plane_meet(&l, &inf).point().unwrap();
        let img = p.project(x.coords());
        let want = CVector3::new(c(1.0), -I, c(0.0));
        assert!(proportionality_ratio(img.as_slice(), want.as_slice()) < 1e-12);
        assert_eq!(lb, l.conj());
    }

    #[test]
    fn isotropic_lines_meet_absolute_conic() {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let inf = Plane::new(real_point(0.0, 0.0, 0.0, 1.0)).unwrap();
        for _ in 0..20 {
            let (_, p, center) = synthetic_camera(&mut rng);
            let (l, lb) = isotropic_lines(&p).unwrap();
            let pp = principal_plane(&p).unwrap();
            let oc = optical_center(&p).unwrap();
            assert!(oc.same_as(&HPoint::from_real(center.push(1.0)).unwrap(), 1e-10));
            assert!(pp.apply(oc.coords()).norm() < 1e-10 * cnorm(pp.coords().as_slice()));
            for line in [l, lb] {
                let x = line_plane_meet(&line, &inf).point().unwrap();
                let v = x.coords();
                assert!((v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).norm() <= 1e-10);
                assert_eq!(line_plane_meet(&line, &pp), Meet::Contained);
            }
        }
    }

    #[test]
    fn optical_center_examples() {
        let p = ProjectionMatrix::new(Matrix3x4::identity(), 1.0, 1.0);
        let oc = optical_center(&p).unwrap();
        assert!((oc.coords() - real_point(0.0, 0.0, 0.0, 1.0)).norm() < 1e-15);
        let mut bad = Matrix3x4::identity();
        bad.set_row(2, &bad.row(1).clone_owned());
        assert!(matches!(optical_center(&ProjectionMatrix::new(bad, 1.0, 1.0)), Err(Error::DegenerateCamera(_))));
        let pp = principal_plane(&p).unwrap();
        assert!((pp.coords() - real_point(0.0, 0.0, 1.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn pixel_shape_normalization_restores_square_pixels() {
        let id = PixelShape::square();
        let p = ProjectionMatrix::new(Matrix3x4::new(1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0, 8.0, 9.0, 1.0, 2.0, 4.0), 10.0, 10.0);
        let once = pixel_shape_normalize(&p, &id);
        assert!((once.p - p.p).norm() < 1e-12);
        assert!((pixel_shape_normalize(&once, &id).p - once.p).norm() < 1e-12);

        let (tau, theta) = (1.1_f64, 85f64.to_radians());
        let (f, mx) = (2.0, 500.0);
        let my = tau * mx;
        let k = Matrix3::new(f * mx, -f * mx / theta.tan(), 600.0, 0.0, f * my / theta.sin(), 450.0, 0.0, 0.0, 1.0);
        let r = Rotation3::from_euler_angles(0.2, -0.4, 1.0);
        let center = Vector3::new(1.0, -2.0, 3.0);
        let mut rt = Matrix3x4::zeros();
        rt.fixed_view_mut::<3, 3>(0, 0).copy_from(r.matrix());
        rt.set_column(3, &(-(r.matrix() * center)));
        let cam = ProjectionMatrix::new(k * rt, 1280.0, 960.0);
        let inf = Plane::new(real_point(0.0, 0.0, 0.0, 1.0)).unwrap();
        let residual = |cam: &ProjectionMatrix| {
            let (l, _) = isotropic_lines(cam).unwrap();
            let x = line_plane_meet(&l, &inf).point().unwrap();
            let v = x.coords();
            (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).norm()
        };
        assert!(residual(&cam) > 1e-3);
        let fixed = pixel_shape_normalize(&cam, &PixelShape::new(tau, theta).unwrap());
        assert!(residual(&fixed) < 1e-10);
    }
}
