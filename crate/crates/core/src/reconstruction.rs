//! Projective reconstructions: cameras, points, image observations and
//! labelled collinear triplets.

use nalgebra::{DMatrix, Matrix3, Matrix3x4, Matrix4, Vector2, Vector3, Vector4};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::ProjectionMatrix;

/// Pixel measurement of point `point` in camera `camera`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Observation {
    pub camera: usize,
    pub point: usize,
    pub u: f64,
    pub v: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ProjectiveReconstruction {
    pub cameras: Vec<ProjectionMatrix>,
    pub points: Vec<Vector4<f64>>,
    pub observations: Vec<Observation>,
    /// Point indices (end, middle, end) of collinear equidistant triplets.
    pub triplets: Vec<[usize; 3]>,
}

impl ProjectiveReconstruction {
    pub fn from_cameras(cameras: Vec<ProjectionMatrix>) -> Self {
        Self { cameras, ..Default::default() }
    }

    /// Checks indices and camera ranks.
    pub fn validate(&self) -> Result<()> {
        if self.cameras.is_empty() {
            return Err(Error::InvalidInput("no cameras".into()));
        }
        for (i, p) in self.cameras.iter().enumerate() {
            if !p.p.iter().all(|v| v.is_finite()) || !p.has_full_rank() {
                return Err(Error::InvalidInput(format!("camera {i} does not have rank 3")));
            }
            if !(p.width > 0.0 && p.height > 0.0) {
                return Err(Error::InvalidInput(format!("camera {i} has an empty image")));
            }
        }
        for o in &self.observations {
            if o.camera >= self.cameras.len() || o.point >= self.points.len() {
                return Err(Error::InvalidInput(format!(
                    "observation ({}, {}) references a missing camera or point",
                    o.camera, o.point
                )));
            }
        }
        for t in &self.triplets {
            if t.iter().any(|&i| i >= self.points.len()) {
                return Err(Error::InvalidInput(format!("triplet {t:?} references a missing point")));
            }
        }
        Ok(())
    }

    /// Same reconstruction in the frame X' = H·X, cameras P' = P·H⁻¹.
    pub fn transformed(&self, h: &Matrix4<f64>) -> Result<Self> {
        let h_inv = h.try_inverse().ok_or(Error::SingularTransform)?;
        Ok(Self {
            cameras: self.cameras.iter().map(|p| ProjectionMatrix { p: p.p * h_inv, ..*p }).collect(),
            points: self.points.iter().map(|x| h * x).collect(),
            observations: self.observations.clone(),
            triplets: self.triplets.clone(),
        })
    }

    pub fn camera_matrices(&self) -> Vec<Matrix3x4<f64>> {
        self.cameras.iter().map(|p| p.p).collect()
    }
}

/// Translation and scale taking the points to centroid 0 and mean distance √2.
fn hartley_2d(pts: &[Vector2<f64>]) -> Matrix3<f64> {
    let n = pts.len() as f64;
    let m = pts.iter().fold(Vector2::zeros(), |a, p| a + p) / n;
    let d = pts.iter().map(|p| (p - m).norm()).sum::<f64>() / n;
    let s = if d > 0.0 { std::f64::consts::SQRT_2 / d } else { 1.0 };
    Matrix3::new(s, 0.0, -s * m.x, 0.0, s, -s * m.y, 0.0, 0.0, 1.0)
}

/// Camera matrix from ≥6 point correspondences by the normalized DLT.
pub fn resect_dlt(points: &[Vector4<f64>], pixels: &[Vector2<f64>]) -> Result<Matrix3x4<f64>> {
    if points.len() != pixels.len() || points.len() < 6 {
        return Err(Error::InvalidInput("resection needs ≥6 correspondences".into()));
    }
    let t = hartley_2d(pixels);
    let mut a = DMatrix::<f64>::zeros(2 * points.len(), 12);
    for (k, (x, uv)) in points.iter().zip(pixels).enumerate() {
        let x = x / x.norm();
        let y = t * Vector3::new(uv.x, uv.y, 1.0);
        for j in 0..4 {
            a[(2 * k, 4 + j)] = -y.z * x[j];
            a[(2 * k, 8 + j)] = y.y * x[j];
            a[(2 * k + 1, j)] = y.z * x[j];
            a[(2 * k + 1, 8 + j)] = -y.x * x[j];
        }
    }
    let v = smallest_right_vector(a)?;
    let p = Matrix3x4::from_row_slice(v.as_slice());
    let t_inv = t.try_inverse().ok_or(Error::SingularTransform)?;
    let p = t_inv * p;
    Ok(p / p.norm())
}

/// Linear triangulation of one point from ≥2 views.
pub fn triangulate(cameras: &[Matrix3x4<f64>], pixels: &[Vector2<f64>]) -> Result<Vector4<f64>> {
    if cameras.len() != pixels.len() || cameras.len() < 2 {
        return Err(Error::InvalidInput("triangulation needs ≥2 views".into()));
    }
    let mut a = DMatrix::<f64>::zeros(2 * cameras.len(), 4);
    for (k, (p, uv)) in cameras.iter().zip(pixels).enumerate() {
        let r1 = p.row(0) - p.row(2) * uv.x;
        let r2 = p.row(1) - p.row(2) * uv.y;
        let (n1, n2) = (r1.norm(), r2.norm());
        for j in 0..4 {
            a[(2 * k, j)] = r1[j] / n1;
            a[(2 * k + 1, j)] = r2[j] / n2;
        }
    }
    let v = smallest_right_vector(a)?;
    Ok(Vector4::new(v[0], v[1], v[2], v[3]))
}

fn smallest_right_vector(mut a: DMatrix<f64>) -> Result<nalgebra::DVector<f64>> {
    let n = a.ncols();
    if a.nrows() < n {
        a = a.resize_vertically(n, 0.0);
    }
    let svd = a.svd(false, true);
    let vt = svd.v_t.ok_or_else(|| Error::RankDeficient("svd failed".into()))?;
    let (imin, _) = svd
        .singular_values
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))
        .ok_or_else(|| Error::RankDeficient("empty system".into()))?;
    Ok(vt.row(imin).transpose())
}
