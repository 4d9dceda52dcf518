//! Candidate IACs and the compatibility cost of a candidate plane.
//!
//! A candidate plane χ meets the six isotropic lines of the triple in six
//! points of a conic. Projecting those points into camera k gives a conic
//! ω_k(χ); when χ is the true plane at infinity, ω_k is the image of the
//! absolute conic. The four terms below measure how far each ω_k is from
//! a real, definite, square-pixel IAC with its principal point in the image.

use nalgebra::{Matrix3, Vector6};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{conic_fit, image_normalization, Conic, Plane, ProjectionMatrix};
use crate::numeric::{best_real_phase, c, CMatrix3, CVector3, C64};
use crate::variety::{candidate_planes, CameraTriple, CandidatePlanePair};

/// A candidate image of the absolute conic.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Iac {
    omega: Conic,
    normalized: bool,
}

impl Iac {
    pub fn new(omega: Conic) -> Self {
        Self { omega, normalized: false }
    }

    pub fn omega(&self) -> &Conic {
        &self.omega
    }

    pub fn matrix(&self) -> &CMatrix3 {
        self.omega.matrix()
    }

    pub fn is_normalized(&self) -> bool {
        self.normalized
    }

    pub fn re(&self) -> Matrix3<f64> {
        self.matrix().map(|z| z.re)
    }

    pub fn im(&self) -> Matrix3<f64> {
        self.matrix().map(|z| z.im)
    }
}

/// Nonnegative weights γ1..γ4 of the four cost terms.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CostWeights(pub [f64; 4]);

impl CostWeights {
    pub fn new(g: [f64; 4]) -> Result<Self> {
        if g.iter().any(|v| !(*v >= 0.0) || !v.is_finite()) {
            return Err(Error::InvalidInput(format!("weights must be finite and nonnegative: {g:?}")));
        }
        Ok(Self(g))
    }
}

impl Default for CostWeights {
    fn default() -> Self {
        Self([1.0; 4])
    }
}

/// Terms for one camera. `weighted` is +∞ when the IAC could not be built.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CameraCost {
    pub terms: [f64; 4],
    pub weighted: f64,
}

impl CameraCost {
    fn infeasible() -> Self {
        Self { terms: [f64::INFINITY; 4], weighted: f64::INFINITY }
    }
}

/// C0 of a plane with its per-camera decomposition.
#[derive(Debug, Clone, PartialEq)]
pub struct CostBreakdown {
    pub per_camera: Vec<CameraCost>,
    pub c0: f64,
    pub plane: Plane,
}

/// Image of the conic through the six line meets of `chi`, seen by `camera`.
pub fn iac_for_camera(chi: &Plane, triple: &CameraTriple, camera: &ProjectionMatrix) -> Result<Iac> {
    let lines = triple.lines();
    let mut pts = Vec::with_capacity(6);
    for (i, l) in lines.iter().enumerate() {
        let x = crate::geometry::line_plane_meet(l, chi).point().ok_or(Error::ContainedLine(i))?;
        pts.push(camera.project(x.coords()));
    }
    Ok(Iac::new(conic_fit(&pts)?))
}

/// ω_k(χ) for camera `camera_index` of `cameras`.
pub fn iac_from_plane(chi: &Plane, camera_index: usize, triple: &CameraTriple, cameras: &[ProjectionMatrix]) -> Result<Iac> {
    let cam = cameras
        .get(camera_index)
        .ok_or_else(|| Error::InvalidInput(format!("camera index {camera_index} out of range")))?;
    iac_for_camera(chi, triple, cam)
}

/// s·ω/‖s·ω‖_F with |s| = 1 maximizing ‖Re(s·ω)‖_F, sign chosen so that
/// trace(Re) ≥ 0.
pub fn normalize_iac(omega: &Conic) -> Result<Iac> {
    let m = omega.matrix();
    let n = m.norm();
    if n == 0.0 || !n.is_finite() {
        return Err(Error::ZeroMatrix);
    }
    let s = best_real_phase(m.as_slice());
    let mut out = m * s / c(n);
    if out.trace().re < 0.0 {
        out = -out;
    }
    Ok(Iac { omega: Conic::new(out)?, normalized: true })
}

fn upper(m: &Matrix3<f64>) -> Vector6<f64> {
    Vector6::new(m[(0, 0)], m[(0, 1)], m[(0, 2)], m[(1, 1)], m[(1, 2)], m[(2, 2)])
}

/// ‖uvᵀ − vuᵀ‖_F / (‖u‖² + ‖v‖²) with u, v the upper triangles of Re ω, Im ω.
pub fn c1(omega: &Iac) -> f64 {
    let u = upper(&omega.re());
    let v = upper(&omega.im());
    let (uu, vv, uv) = (u.norm_squared(), v.norm_squared(), u.dot(&v));
    let den = uu + vv;
    if den == 0.0 {
        return 0.0;
    }
    (2.0 * (uu * vv - uv * uv)).max(0.0).sqrt() / den
}

fn sylvester_penalty(a: &Matrix3<f64>) -> f64 {
    let d1 = a[(0, 0)];
    let d2 = a[(0, 0)] * a[(1, 1)] - a[(0, 1)] * a[(1, 0)];
    let d3 = a.determinant();
    -(d1.min(0.0) + d2.min(0.0) + d3.min(0.0)) + 0.0
}

/// min{g(Re ω), g(−Re ω)} with g(A) = −Σ min{0, D_i(A)} over the leading
/// principal minors.
pub fn c2(omega: &Iac) -> f64 {
    let re = omega.re();
    sylvester_penalty(&re).min(sylvester_penalty(&-re))
}

/// |ω11/ω22 − 1| + |ω12²/(ω11·ω22)| on Re ω.
pub fn c3(omega: &Iac) -> Result<f64> {
    let re = omega.re();
    let (w11, w22, w12) = (re[(0, 0)], re[(1, 1)], re[(0, 1)]);
    if w11.abs() < 1e-12 || w22.abs() < 1e-12 {
        return Err(Error::IllConditioned(format!("ω11 = {w11:.3e}, ω22 = {w22:.3e}")));
    }
    Ok((w11 / w22 - 1.0).abs() + (w12 * w12 / (w11 * w22)).abs())
}

/// Principal point (ω*13/ω*33, ω*23/ω*33) from the adjugate of Re ω.
pub fn principal_point(omega: &Iac) -> Result<(f64, f64)> {
    let re = omega.re();
    let adj = Matrix3::from_fn(|i, j| {
        let (r, k) = ([(j + 1) % 3, (j + 2) % 3], [(i + 1) % 3, (i + 2) % 3]);
        re[(r[0], k[0])] * re[(r[1], k[1])] - re[(r[0], k[1])] * re[(r[1], k[0])]
    });
    let (a13, a23, a33) = (adj[(0, 2)], adj[(1, 2)], adj[(2, 2)]);
    if !(a33.abs() > 1e-13 * adj.norm()) {
        return Err(Error::DegenerateAdjoint);
    }
    Ok((a13 / a33, a23 / a33))
}

/// Taxicab distance from the principal point to the box
/// [xmin, xmax] × [ymin, ymax]; zero inside.
pub fn c4_box(omega: &Iac, bx: [f64; 4]) -> Result<f64> {
    let (u, v) = principal_point(omega)?;
    let du = if u < bx[0] { bx[0] - u } else if u > bx[1] { u - bx[1] } else { 0.0 };
    let dv = if v < bx[2] { bx[2] - v } else if v > bx[3] { v - bx[3] } else { 0.0 };
    Ok(du + dv)
}

/// Taxicab distance from the principal point to [0, W] × [0, H].
pub fn c4(omega: &Iac, width: f64, height: f64) -> Result<f64> {
    c4_box(omega, [0.0, width, 0.0, height])
}

/// Cameras, triple and weights shared by all cost evaluations.
#[derive(Debug, Clone)]
pub struct CostContext {
    cameras: Vec<ProjectionMatrix>,
    boxes: Vec<[f64; 4]>,
    evaluated: Vec<usize>,
    triple: CameraTriple,
    triple_index: [usize; 3],
    weights: CostWeights,
}

impl CostContext {
    /// All cameras enter C0. Cameras are preconditioned by the image
    /// normalization, so C4 is measured in normalized image units.
    pub fn new(cameras: &[ProjectionMatrix], triple_index: [usize; 3], weights: CostWeights) -> Result<Self> {
        let evaluated = (0..cameras.len()).collect();
        Self::with_evaluated(cameras, triple_index, weights, evaluated)
    }

    /// Only the cameras listed in `evaluated` enter the max of C0; an empty
    /// list gives C0 = 0 on every feasible plane.
    pub fn with_evaluated(
        cameras: &[ProjectionMatrix],
        triple_index: [usize; 3],
        weights: CostWeights,
        evaluated: Vec<usize>,
    ) -> Result<Self> {
        for &i in triple_index.iter().chain(evaluated.iter()) {
            if i >= cameras.len() {
                return Err(Error::InvalidInput(format!("camera index {i} out of range")));
            }
        }
        if triple_index[0] == triple_index[1] || triple_index[0] == triple_index[2] || triple_index[1] == triple_index[2] {
            return Err(Error::InvalidInput("triple indices must be distinct".into()));
        }
        let pre: Vec<ProjectionMatrix> = cameras.iter().map(|p| p.preconditioned()).collect();
        let boxes = cameras
            .iter()
            .map(|p| {
                let n = image_normalization(p.width, p.height);
                let lo = n * nalgebra::Vector3::new(0.0, 0.0, 1.0);
                let hi = n * nalgebra::Vector3::new(p.width, p.height, 1.0);
                [lo.x, hi.x, lo.y, hi.y]
            })
            .collect();
        let triple = CameraTriple::new(triple_index.map(|i| cameras[i]))?;
        Ok(Self { cameras: pre, boxes, evaluated, triple, triple_index, weights })
    }

    pub fn triple(&self) -> &CameraTriple {
        &self.triple
    }

    pub fn triple_index(&self) -> [usize; 3] {
        self.triple_index
    }

    pub fn weights(&self) -> CostWeights {
        self.weights
    }

    pub fn n_cameras(&self) -> usize {
        self.cameras.len()
    }

    pub fn evaluated(&self) -> &[usize] {
        &self.evaluated
    }

    /// Preconditioned cameras.
    pub fn cameras(&self) -> &[ProjectionMatrix] {
        &self.cameras
    }

    /// Normalized IAC of camera k at χ, in preconditioned image coordinates.
    pub fn iac(&self, chi: &Plane, k: usize) -> Result<Iac> {
        normalize_iac(iac_for_camera(chi, &self.triple, &self.cameras[k])?.omega())
    }

    fn camera_cost(&self, chi: &Plane, k: usize) -> CameraCost {
        let terms = (|| -> Result<[f64; 4]> {
            let w = self.iac(chi, k)?;
            Ok([c1(&w), c2(&w), c3(&w)?, c4_box(&w, self.boxes[k])?])
        })();
        match terms {
            Ok(t) if t.iter().all(|v| v.is_finite()) => {
                let weighted = t.iter().zip(self.weights.0).map(|(ck, g)| if g == 0.0 { 0.0 } else { g * ck }).sum();
                CameraCost { terms: t, weighted }
            }
            _ => CameraCost::infeasible(),
        }
    }
}

/// C0(χ) = max over the evaluated cameras of Σ γ_k C_k(ω_i(χ)).
pub fn c0(chi: &Plane, ctx: &CostContext) -> CostBreakdown {
    let mut per_camera = Vec::with_capacity(ctx.cameras.len());
    let mut worst: f64 = 0.0;
    for k in 0..ctx.cameras.len() {
        if ctx.evaluated.contains(&k) {
            let cc = ctx.camera_cost(chi, k);
            worst = worst.max(cc.weighted);
            per_camera.push(cc);
        } else {
            per_camera.push(CameraCost { terms: [0.0; 4], weighted: 0.0 });
        }
    }
    CostBreakdown { per_camera, c0: worst, plane: *chi }
}

/// Costs of both candidate planes at a parameter z.
#[derive(Debug, Clone)]
pub struct ZEvaluation {
    pub z: C64,
    pub cost: f64,
    pub plane_costs: [f64; 2],
    pub pair: Option<CandidatePlanePair>,
}

impl ZEvaluation {
    /// Index (0 or 1) of the cheaper plane; the first on ties.
    pub fn best(&self) -> usize {
        if self.plane_costs[1] < self.plane_costs[0] { 1 } else { 0 }
    }
}

pub fn evaluate_z(z: C64, ctx: &CostContext) -> ZEvaluation {
    match candidate_planes(&ctx.triple, z) {
        Ok(pair) => {
            let c0a = c0(&pair.chi[0], ctx).c0;
            let c0b = if pair.double_root { c0a } else { c0(&pair.chi[1], ctx).c0 };
            ZEvaluation { z, cost: c0a.min(c0b), plane_costs: [c0a, c0b], pair: Some(pair) }
        }
        Err(_) => ZEvaluation { z, cost: f64::INFINITY, plane_costs: [f64::INFINITY; 2], pair: None },
    }
}

/// C(z) = min{C0(χ1(z)), C0(χ2(z))}; +∞ when no candidate pair exists at z.
pub fn cost_z(z: C64, ctx: &CostContext) -> f64 {
    evaluate_z(z, ctx).cost
}

/// Image of the absolute conic (KKᵀ)⁻¹ of an intrinsic matrix, as an IAC.
pub fn iac_of_intrinsics(k: &Matrix3<f64>) -> Result<Iac> {
    let kinv = k.try_inverse().ok_or(Error::SingularTransform)?;
    let w = kinv.transpose() * kinv;
    Ok(Iac::new(Conic::from_real(w)?))
}

/// Square-pixel residuals |Iᵀω I| with I = (1, ±i, 0).
pub fn cyclic_residuals(omega: &CMatrix3) -> (C64, C64) {
    let i = CVector3::new(c(1.0), crate::numeric::I, c(0.0));
    let ib = i.map(|z| z.conj());
    ((i.transpose() * omega * i)[(0, 0)], (ib.transpose() * omega * ib)[(0, 0)])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numeric::proportionality_ratio;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn iac_real(m: Matrix3<f64>) -> Iac {
        normalize_iac(&Conic::from_real(m).unwrap()).unwrap()
    }

    fn raw(m: CMatrix3) -> Iac {
        Iac { omega: Conic::new(m).unwrap(), normalized: true }
    }

    fn sym(rng: &mut ChaCha8Rng) -> CMatrix3 {
        let a = CMatrix3::from_fn(|_, _| C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)));
        a + a.transpose()
    }

    fn re_norm(m: &CMatrix3) -> f64 {
        m.map(|z| z.re).norm()
    }

    #[test]
    fn normalize_real_matrix() {
        let m = Matrix3::new(2.0, 0.5, 0.1, 0.5, 3.0, -0.2, 0.1, -0.2, 1.0);
        let w = iac_real(m);
        let want = m / m.norm();
        assert!((w.re() - want).norm() < 1e-14 || (w.re() + want).norm() < 1e-14);
        assert!(w.im().norm() < 1e-14);
        assert!(w.is_normalized());
    }

    #[test]
    fn normalize_imaginary_matrix() {
        let m = Matrix3::new(2.0, 0.5, 0.1, 0.5, 3.0, -0.2, 0.1, -0.2, 1.0);
        let w = normalize_iac(&Conic::new(m.map(|x| C64::new(0.0, x))).unwrap()).unwrap();
        assert!(w.im().norm() < 1e-14);
        assert!((w.re().norm() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn normalize_is_phase_optimal_against_sweep() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..20 {
            let w = normalize_iac(&Conic::new(sym(&mut rng)).unwrap()).unwrap();
            let best = re_norm(w.matrix());
            assert!((w.matrix().norm() - 1.0).abs() < 1e-14);
            for k in 0..10_000 {
                let u = C64::from_polar(1.0, 2.0 * std::f64::consts::PI * k as f64 / 10_000.0);
                assert!(re_norm(&(w.matrix() * u)) <= best + 1e-12);
            }
        }
    }

    #[test]
    fn c1_examples() {
        assert_eq!(c1(&iac_real(Matrix3::identity())), 0.0);
        let mut m = CMatrix3::zeros();
        m[(0, 0)] = c(1.0);
        m[(0, 1)] = C64::new(0.0, 1.0);
        m[(1, 0)] = C64::new(0.0, 1.0);
        assert!((c1(&raw(m)) - 2f64.sqrt() / 2.0).abs() < 1e-15);
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let s = sym(&mut rng);
        let a = c1(&raw(s));
        assert!((c1(&raw(s * c(3.7))) - a).abs() < 1e-14);
        assert!((c1(&raw(s * c(-0.2))) - a).abs() < 1e-14);
    }

    #[test]
    fn c1_vanishes_for_phased_real_matrices() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..20 {
            let m = Matrix3::from_fn(|_, _| rng.random_range(-1.0..1.0));
            let s = C64::from_polar(1.0, rng.random_range(0.0..std::f64::consts::TAU));
            let w = normalize_iac(&Conic::new((m + m.transpose()).map(c) * s).unwrap()).unwrap();
            assert!(c1(&w) < 1e-14);
        }
    }

    #[test]
    fn c2_examples() {
        assert_eq!(c2(&iac_real(Matrix3::identity())), 0.0);
        assert_eq!(c2(&raw(-Matrix3::<f64>::identity().map(c))), 0.0);
        let d = raw(Matrix3::from_diagonal(&nalgebra::Vector3::new(1.0, -1.0, 1.0)).map(c));
        assert_eq!(c2(&d), 2.0);
    }

    #[test]
    fn c3_examples() {
        assert_eq!(c3(&raw(Matrix3::<f64>::identity().map(c))).unwrap(), 0.0);
        let m = Matrix3::from_diagonal(&nalgebra::Vector3::new(2.0, 1.0, 1.0)).map(c);
        assert_eq!(c3(&raw(m)).unwrap(), 1.0);
        let bad = Matrix3::from_diagonal(&nalgebra::Vector3::new(0.0, 1.0, 1.0)).map(c);
        assert!(matches!(c3(&raw(bad)), Err(Error::IllConditioned(_))));
    }

    fn with_pp(u0: f64, v0: f64) -> Iac {
        let k = Matrix3::new(1000.0, 0.0, u0, 0.0, 1000.0, v0, 0.0, 0.0, 1.0);
        normalize_iac(iac_of_intrinsics(&k).unwrap().omega()).unwrap()
    }

    #[test]
    fn c4_examples() {
        assert_eq!(c4(&with_pp(640.0, 480.0), 1280.0, 960.0).unwrap(), 0.0);
        assert!((c4(&with_pp(-10.0, 480.0), 1280.0, 960.0).unwrap() - 10.0).abs() < 1e-9);
        assert!((c4(&with_pp(1300.0, -5.0), 1280.0, 960.0).unwrap() - 25.0).abs() < 1e-9);
        let degenerate = raw(Matrix3::from_diagonal(&nalgebra::Vector3::new(1.0, 0.0, 1.0)).map(c));
        assert!(matches!(c4(&degenerate, 10.0, 10.0), Err(Error::DegenerateAdjoint)));
    }

    #[test]
    fn square_pixel_iac_has_zero_c3() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..20 {
            let f = rng.random_range(300.0..3000.0);
            let k = Matrix3::new(f, 0.0, rng.random_range(0.0..1280.0), 0.0, f, rng.random_range(0.0..960.0), 0.0, 0.0, 1.0);
            let w = normalize_iac(iac_of_intrinsics(&k).unwrap().omega()).unwrap();
            assert!(c3(&w).unwrap() <= 1e-9);
            assert!(c1(&w) <= 1e-12);
            assert_eq!(c2(&w), 0.0);
            let (u, v) = principal_point(&w).unwrap();
            assert!((u - k[(0, 2)]).abs() < 1e-6 && (v - k[(1, 2)]).abs() < 1e-6);
            let (r1, r2) = cyclic_residuals(w.matrix());
            assert!(r1.norm() < 1e-12 && r2.norm() < 1e-12);
        }
    }

    #[test]
    fn weights_are_validated() {
        assert!(CostWeights::new([1.0, 0.0, 2.0, 0.5]).is_ok());
        assert!(CostWeights::new([1.0, -1.0, 2.0, 0.5]).is_err());
        assert!(CostWeights::new([f64::NAN, 1.0, 2.0, 0.5]).is_err());
    }

    #[test]
    fn normalization_keeps_projective_class() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let s = sym(&mut rng);
        let w = normalize_iac(&Conic::new(s).unwrap()).unwrap();
        assert!(proportionality_ratio(w.matrix().as_slice(), s.as_slice()) < 1e-14);
        assert!(w.re().trace() >= 0.0);
    }
}
