//! Euclidean upgrading from a plane at infinity and one IAC, camera
//! decomposition and evaluation metrics.

use nalgebra::{Matrix3, Matrix3x4, Matrix4, RowVector4, Vector3, Vector4};
use serde::{Deserialize, Serialize};

use crate::cost::{CameraCost, Iac};
use crate::error::{Error, Result};
use crate::geometry::{Plane, ProjectionMatrix};
use crate::numeric::{best_real_phase, C64};
use crate::reconstruction::ProjectiveReconstruction;

/// Planes whose imaginary part exceeds this fraction of the real part are
/// rejected.
pub const COMPLEX_PLANE_TOL: f64 = 1e-6;

/// Intrinsics, rotation and center of a Euclidean camera, P ∝ K(R | −R·C).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricCamera {
    pub k: Matrix3<f64>,
    pub r: Matrix3<f64>,
    pub c: Vector3<f64>,
}

impl MetricCamera {
    pub fn projection(&self) -> Matrix3x4<f64> {
        let mut rt = Matrix3x4::zeros();
        rt.fixed_view_mut::<3, 3>(0, 0).copy_from(&self.r);
        rt.set_column(3, &(-(self.r * self.c)));
        self.k * rt
    }

    /// Mean of the two focal lengths in pixels.
    pub fn focal(&self) -> f64 {
        0.5 * (self.k[(0, 0)] + self.k[(1, 1)])
    }

    pub fn aspect(&self) -> f64 {
        self.k[(1, 1)] / self.k[(0, 0)]
    }

    /// Skew relative to the focal length.
    pub fn relative_skew(&self) -> f64 {
        self.k[(0, 1)] / self.k[(0, 0)]
    }

    pub fn principal_point(&self) -> (f64, f64) {
        (self.k[(0, 2)], self.k[(1, 2)])
    }

    /// Same camera with skew 0 and both focal lengths set to their mean.
    pub fn square_pixel(&self) -> Self {
        let f = self.focal();
        let mut k = self.k;
        k[(0, 0)] = f;
        k[(1, 1)] = f;
        k[(0, 1)] = 0.0;
        Self { k, ..*self }
    }
}

/// Search summary stored with a calibration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchSummary {
    pub z0: [f64; 2],
    pub z1: [f64; 2],
    pub grid: [usize; 2],
    pub grid_cost: f64,
    pub cost: f64,
    pub iterations: usize,
    pub converged: bool,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Diagnostics {
    pub method: String,
    pub triple: Option<[usize; 3]>,
    pub search: Option<SearchSummary>,
    pub per_camera_cost: Vec<CameraCost>,
    pub c0: Option<f64>,
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone)]
pub struct UpgradeResult {
    pub h: Matrix4<f64>,
    pub cameras: Vec<MetricCamera>,
    pub plane: Plane,
    pub iac1: Option<Iac>,
    pub reprojection_rms: Option<f64>,
    /// (σ, μ, σ/μ) of the upgraded triplet lengths, when triplets exist.
    pub segment_stats: Option<(f64, f64, f64)>,
    pub diagnostics: Diagnostics,
}

/// Real plane coordinates after phase normalization.
pub fn real_plane(pi: &Plane) -> Result<Vector4<f64>> {
    let s = best_real_phase(pi.coords().as_slice());
    let v = pi.coords() * s;
    let re = v.map(|z| z.re);
    let im = v.map(|z| z.im);
    let ratio = im.norm() / re.norm();
    if !(ratio <= COMPLEX_PLANE_TOL) {
        return Err(Error::ComplexPlane(ratio));
    }
    Ok(re / re.norm())
}

/// Upper-triangular K with K·Kᵀ = a, K33 > 0.
fn upper_cholesky(a: &Matrix3<f64>) -> Option<Matrix3<f64>> {
    let j = Matrix3::new(0.0, 0.0, 1.0, 0.0, 1.0, 0.0, 1.0, 0.0, 0.0);
    let l = (j * a * j).cholesky()?.l();
    Some(j * l * j)
}

/// Intrinsics K with (K·Kᵀ)⁻¹ ∝ Re ω, K33 = 1.
pub fn intrinsics_from_iac(omega: &Iac) -> Result<Matrix3<f64>> {
    let mut re = omega.re();
    re = 0.5 * (re + re.transpose());
    let eig = re.symmetric_eigenvalues();
    if eig.iter().all(|&e| e < 0.0) {
        re = -re;
    } else if !eig.iter().all(|&e| e > 0.0) {
        return Err(Error::NonDefiniteIac);
    }
    let inv = re.try_inverse().ok_or(Error::NonDefiniteIac)?;
    let k = upper_cholesky(&inv).ok_or(Error::NonDefiniteIac)?;
    Ok(k / k[(2, 2)])
}

/// Stratified upgrade H: the plane π goes to (0,0,0,1)ᵀ under H⁻ᵀ and the
/// first camera becomes K1·(I | 0) with K1 from ω1. `omega1` must be
/// expressed in the image coordinates of `p1`.
pub fn homography_from_plane_iac(pi: &Plane, omega1: &Iac, p1: &ProjectionMatrix) -> Result<Matrix4<f64>> {
    let n = real_plane(pi)?;
    let k1 = intrinsics_from_iac(omega1)?;
    let mut ha = Matrix4::zeros();
    ha.fixed_view_mut::<3, 4>(0, 0).copy_from(&p1.p);
    ha.set_row(3, &RowVector4::new(n[0], n[1], n[2], n[3]));
    let s = ha.singular_values();
    if !(s.min() > 1e-12 * s.max()) {
        return Err(Error::DegenerateConfiguration("plane passes through the first camera center".into()));
    }
    let k_inv = k1.try_inverse().ok_or(Error::NonDefiniteIac)?;
    let mut d = Matrix4::identity();
    d.fixed_view_mut::<3, 3>(0, 0).copy_from(&k_inv);
    let h = d * ha;
    Ok(h / h.norm())
}

/// RQ decomposition m = K·R of a nonsingular 3×3 matrix with K upper
/// triangular and positive diagonal, R orthogonal.
pub fn rq3(m: &Matrix3<f64>) -> (Matrix3<f64>, Matrix3<f64>) {
    let rot = |x: f64, y: f64| {
        let r = x.hypot(y);
        if r == 0.0 { (1.0, 0.0) } else { (x / r, y / r) }
    };
    let mut k = *m;
    let (c, s) = rot(-k[(2, 2)], k[(2, 1)]);
    let qx = Matrix3::new(1.0, 0.0, 0.0, 0.0, c, -s, 0.0, s, c);
    k *= qx;
    let (c, s) = rot(k[(2, 2)], k[(2, 0)]);
    let qy = Matrix3::new(c, 0.0, s, 0.0, 1.0, 0.0, -s, 0.0, c);
    k *= qy;
    let (c, s) = rot(-k[(1, 1)], k[(1, 0)]);
    let qz = Matrix3::new(c, -s, 0.0, s, c, 0.0, 0.0, 0.0, 1.0);
    k *= qz;
    let q = (qx * qy * qz).transpose();
    let d = Matrix3::from_diagonal(&k.diagonal().map(|v| if v < 0.0 { -1.0 } else { 1.0 }));
    (k * d, d * q)
}

/// P ∝ K(R | −R·C) with det R = 1 and K33 = 1.
pub fn decompose_camera(p: &ProjectionMatrix) -> Result<MetricCamera> {
    if !p.is_finite() || !p.p.iter().all(|v| v.is_finite()) {
        return Err(Error::DegenerateCamera("left 3×3 block is singular".into()));
    }
    let mut pm = p.p;
    if pm.fixed_view::<3, 3>(0, 0).determinant() < 0.0 {
        pm = -pm;
    }
    let m: Matrix3<f64> = pm.fixed_view::<3, 3>(0, 0).into();
    let (k, r) = rq3(&m);
    let m_inv = m.try_inverse().ok_or_else(|| Error::DegenerateCamera("singular block".into()))?;
    let c = -(m_inv * pm.column(3));
    Ok(MetricCamera { k: k / k[(2, 2)], r, c })
}

/// RMS pixel distance between observations and the projections of the
/// reconstruction's points by `cameras`.
pub fn reprojection_rms(recon: &ProjectiveReconstruction, cameras: &[Matrix3x4<f64>]) -> Result<f64> {
    if recon.observations.is_empty() {
        return Err(Error::NoObservations);
    }
    if cameras.len() != recon.cameras.len() {
        return Err(Error::Mismatch(format!("{} cameras for {} views", cameras.len(), recon.cameras.len())));
    }
    let mut sum = 0.0;
    for o in &recon.observations {
        let x = recon.points.get(o.point).ok_or(Error::NoObservations)?;
        let y = cameras[o.camera] * x;
        sum += (y.x / y.z - o.u).powi(2) + (y.y / y.z - o.v).powi(2);
    }
    Ok((sum / recon.observations.len() as f64).sqrt())
}

/// Reprojection RMS of the upgraded square-pixel cameras K'(R | −RC)·H
/// pulled back to the reconstruction frame.
pub fn upgraded_reprojection_rms(recon: &ProjectiveReconstruction, h: &Matrix4<f64>, cameras: &[MetricCamera]) -> Result<f64> {
    let pulled: Vec<Matrix3x4<f64>> = cameras.iter().map(|m| m.square_pixel().projection() * h).collect();
    reprojection_rms(recon, &pulled)
}

/// (σ, μ, σ/μ) of the end-to-end lengths ‖H·X_a − H·X_c‖ of triplets
/// (a, b, c), σ the population standard deviation.
pub fn segment_length_stats(points: &[Vector4<f64>], triplets: &[[usize; 3]], h: &Matrix4<f64>) -> Result<(f64, f64, f64)> {
    if triplets.len() < 2 {
        return Err(Error::TooFewSegments(triplets.len()));
    }
    let euclid = |i: usize| -> Result<Vector3<f64>> {
        let x = h * points.get(i).ok_or_else(|| Error::InvalidInput(format!("point {i} missing")))?;
        Ok(x.xyz() / x.w)
    };
    let mut lengths = Vec::with_capacity(triplets.len());
    for t in triplets {
        lengths.push((euclid(t[0])? - euclid(t[2])?).norm());
    }
    let n = lengths.len() as f64;
    let mu = lengths.iter().sum::<f64>() / n;
    let sigma = (lengths.iter().map(|l| (l - mu).powi(2)).sum::<f64>() / n).sqrt();
    Ok((sigma, mu, sigma / mu))
}

/// Decomposes every camera of `recon` after the upgrade H.
pub fn upgrade_cameras(cameras: &[ProjectionMatrix], h: &Matrix4<f64>) -> Result<Vec<MetricCamera>> {
    let h_inv = h.try_inverse().ok_or(Error::SingularTransform)?;
    cameras.iter().map(|p| decompose_camera(&ProjectionMatrix { p: p.p * h_inv, ..*p })).collect()
}

/// Assembles an [`UpgradeResult`] with metrics for a given H and plane.
pub fn finish_upgrade(
    recon: &ProjectiveReconstruction,
    h: Matrix4<f64>,
    plane: Plane,
    iac1: Option<Iac>,
    diagnostics: Diagnostics,
) -> Result<UpgradeResult> {
    let cameras = upgrade_cameras(&recon.cameras, &h)?;
    let reprojection_rms = if recon.observations.is_empty() { None } else { upgraded_reprojection_rms(recon, &h, &cameras).ok() };
    let segment_stats = segment_length_stats(&recon.points, &recon.triplets, &h).ok();
    Ok(UpgradeResult { h, cameras, plane, iac1, reprojection_rms, segment_stats, diagnostics })
}

/// Residual of H⁻ᵀπ against (0,0,0,1)ᵀ after normalization.
pub fn plane_to_infinity_residual(h: &Matrix4<f64>, pi: &Plane) -> Result<f64> {
    let n = real_plane(pi)?;
    let h_inv_t = h.try_inverse().ok_or(Error::SingularTransform)?.transpose();
    let v = h_inv_t * n;
    let v = v / v.norm();
    Ok(v.xyz().norm())
}

/// Complex version of a real plane.
pub fn plane_from_real(v: &Vector4<f64>) -> Result<Plane> {
    Plane::new(v.map(|x| C64::new(x, 0.0)))
}
