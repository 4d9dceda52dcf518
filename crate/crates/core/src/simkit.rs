//! Synthetic metric scenes seen through a random projective frame.
//!
//! Each entity kind draws from its own ChaCha8 stream of the scene seed, so
//! changing the number of points does not move the cameras and so on.

use nalgebra::{Matrix3, Matrix4, Vector2, Vector3, Vector4};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::ProjectionMatrix;
use crate::numeric::homogeneous_angle;
use crate::reconstruction::{resect_dlt, triangulate, Observation, ProjectiveReconstruction};
use crate::upgrade::{real_plane, MetricCamera, UpgradeResult};

const STREAM_SCRAMBLE: u64 = 1;
const STREAM_CAMERAS: u64 = 2;
const STREAM_POINTS: u64 = 3;
const STREAM_BARS: u64 = 4;
const STREAM_NOISE: u64 = 5;
const MAX_RETRIES: usize = 200;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SceneSpec {
    pub n_cameras: usize,
    /// Focal length range in pixels.
    pub focal_range: [f64; 2],
    /// Range of the principal point's distance from the image center.
    pub pp_offset_range: [f64; 2],
    pub image_size: [f64; 2],
    pub n_points: usize,
    pub n_bar_triplets: usize,
    pub bar_length: f64,
    pub noise_sigma: f64,
    pub seed: u64,
}

impl Default for SceneSpec {
    fn default() -> Self {
        Self {
            n_cameras: 5,
            focal_range: [800.0, 1600.0],
            pp_offset_range: [0.0, 60.0],
            image_size: [1280.0, 960.0],
            n_points: 60,
            n_bar_triplets: 20,
            bar_length: 0.5,
            noise_sigma: 0.0,
            seed: 0,
        }
    }
}

impl SceneSpec {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidSpec(m.into()));
        if self.n_cameras < 2 {
            return bad("n_cameras must be at least 2");
        }
        if !(self.focal_range[0] > 0.0 && self.focal_range[1] >= self.focal_range[0]) {
            return bad("focal range must be positive and ordered");
        }
        if !(self.pp_offset_range[0] >= 0.0 && self.pp_offset_range[1] >= self.pp_offset_range[0]) {
            return bad("principal point offset range must be nonnegative and ordered");
        }
        if !(self.image_size[0] > 0.0 && self.image_size[1] > 0.0) {
            return bad("image size must be positive");
        }
        if !(self.noise_sigma >= 0.0) || !self.noise_sigma.is_finite() {
            return bad("noise sigma must be nonnegative");
        }
        if !(self.bar_length > 0.0) {
            return bad("bar length must be positive");
        }
        if self.noise_sigma > 0.0 && self.n_points + 3 * self.n_bar_triplets < 6 {
            return bad("noisy scenes need at least 6 points for resection");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub cameras: Vec<MetricCamera>,
    /// Euclidean points; bar points follow the cloud points.
    pub points: Vec<Vector3<f64>>,
    pub triplets: Vec<[usize; 3]>,
    /// H⁻ᵀ·(0,0,0,1)ᵀ, the plane at infinity in the reconstruction frame.
    pub plane_at_infinity: Vector4<f64>,
    /// Projective frame: X_reconstruction = H·X_metric.
    pub scramble: Matrix4<f64>,
}

fn stream(seed: u64, s: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(s);
    rng
}

fn unit_vector(rng: &mut ChaCha8Rng) -> Vector3<f64> {
    loop {
        let v = Vector3::<f64>::from_fn(|_, _| StandardNormal.sample(rng));
        let n = v.norm();
        if n > 1e-6 {
            return v / n;
        }
    }
}

/// Identity plus uniform [−0.3, 0.3] entries with condition number < 100.
pub fn random_scramble(rng: &mut ChaCha8Rng) -> Matrix4<f64> {
    loop {
        let h = Matrix4::<f64>::identity() + Matrix4::from_fn(|_, _| rng.random_range(-0.3..0.3));
        let s = h.singular_values();
        if s.max() < 100.0 * s.min() {
            return h;
        }
    }
}

fn look_at(center: Vector3<f64>, target: Vector3<f64>, roll: f64) -> Matrix3<f64> {
    let fwd = (target - center).normalize();
    let up0 = if fwd.z.abs() < 0.9 { Vector3::z() } else { Vector3::x() };
    let right = fwd.cross(&up0).normalize();
    let down = fwd.cross(&right);
    let (s, c) = roll.sin_cos();
    let r1 = right * c + down * s;
    let r2 = -right * s + down * c;
    Matrix3::from_rows(&[r1.transpose(), r2.transpose(), fwd.transpose()])
}

fn project(cam: &MetricCamera, x: &Vector3<f64>) -> Option<Vector2<f64>> {
    let y = cam.projection() * x.push(1.0);
    (y.z > 0.0).then(|| Vector2::new(y.x / y.z, y.y / y.z))
}

fn fits(cam: &MetricCamera, pts: &[Vector3<f64>], w: f64, h: f64) -> bool {
    pts.iter().all(|x| project(cam, x).is_some_and(|p| p.x >= 0.0 && p.x <= w && p.y >= 0.0 && p.y <= h))
}

/// Generates a scene and its projective reconstruction.
pub fn make_scene(spec: &SceneSpec) -> Result<(GroundTruth, ProjectiveReconstruction)> {
    spec.validate()?;
    let [w, h] = spec.image_size;

    let mut rng = stream(spec.seed, STREAM_POINTS);
    let mut points: Vec<Vector3<f64>> =
        (0..spec.n_points).map(|_| Vector3::from_fn(|_, _| rng.random_range(-1.0..1.0))).collect();
    let mut rng = stream(spec.seed, STREAM_BARS);
    let mut triplets = Vec::with_capacity(spec.n_bar_triplets);
    for _ in 0..spec.n_bar_triplets {
        let mid = Vector3::from_fn(|_, _| rng.random_range(-0.8..0.8));
        let d = unit_vector(&mut rng) * (0.5 * spec.bar_length);
        let i = points.len();
        points.extend([mid - d, mid, mid + d]);
        triplets.push([i, i + 1, i + 2]);
    }
    let radius = points.iter().map(|p| p.norm()).fold(1e-3, f64::max);

    let mut rng = stream(spec.seed, STREAM_CAMERAS);
    let half = 0.5 * w.min(h);
    let mut cameras: Vec<MetricCamera> = Vec::with_capacity(spec.n_cameras);
    for i in 0..spec.n_cameras {
        let mut placed = None;
        for _ in 0..MAX_RETRIES {
            let f = rng.random_range(spec.focal_range[0]..=spec.focal_range[1]);
            let off = rng.random_range(spec.pp_offset_range[0]..=spec.pp_offset_range[1]);
            let phi = rng.random_range(0.0..std::f64::consts::TAU);
            let pp = Vector2::new(0.5 * w + off * phi.cos(), 0.5 * h + off * phi.sin());
            let margin = 0.9 * half - off;
            if margin <= 0.0 {
                continue;
            }
            let dist = radius * (1.0 + f / margin) * rng.random_range(1.0..1.3);
            let center = unit_vector(&mut rng) * dist;
            let aim = Vector3::from_fn(|_, _| rng.random_range(-0.1..0.1));
            let r = look_at(center, aim, rng.random_range(-0.3..0.3));
            let k = Matrix3::new(f, 0.0, pp.x, 0.0, f, pp.y, 0.0, 0.0, 1.0);
            let cam = MetricCamera { k, r, c: center };
            let separated = cameras.iter().all(|o| (o.c - center).norm() > 0.2 * dist);
            if separated && fits(&cam, &points, w, h) && generic_with(&cameras, &cam) {
                placed = Some(cam);
                break;
            }
        }
        cameras.push(placed.ok_or_else(|| Error::SpecInfeasible(format!("could not place camera {i} around the point cloud")))?);
    }

    let mut rng = stream(spec.seed, STREAM_SCRAMBLE);
    let scramble = random_scramble(&mut rng);
    let h_inv = scramble.try_inverse().ok_or(Error::SingularTransform)?;
    let plane = h_inv.transpose() * Vector4::new(0.0, 0.0, 0.0, 1.0);

    let mut rng = stream(spec.seed, STREAM_NOISE);
    let noise = Normal::new(0.0, spec.noise_sigma.max(f64::MIN_POSITIVE)).map_err(|e| Error::InvalidSpec(e.to_string()))?;
    let mut observations = Vec::with_capacity(cameras.len() * points.len());
    for (ci, cam) in cameras.iter().enumerate() {
        for (pi, x) in points.iter().enumerate() {
            let p = project(cam, x).ok_or_else(|| Error::SpecInfeasible("point behind camera".into()))?;
            let (du, dv) = if spec.noise_sigma > 0.0 { (noise.sample(&mut rng), noise.sample(&mut rng)) } else { (0.0, 0.0) };
            observations.push(Observation { camera: ci, point: pi, u: p.x + du, v: p.y + dv });
        }
    }

    let scrambled_points: Vec<Vector4<f64>> = points.iter().map(|x| scramble * x.push(1.0)).collect();
    let recon_cameras: Vec<ProjectionMatrix> =
        cameras.iter().map(|c| ProjectionMatrix::new(c.projection() * h_inv, w, h)).collect();
    let recon = if spec.noise_sigma == 0.0 {
        ProjectiveReconstruction { cameras: recon_cameras, points: scrambled_points, observations, triplets: triplets.clone() }
    } else {
        reestimate(&scrambled_points, &observations, cameras.len(), w, h, &triplets)?
    };
    let truth = GroundTruth { cameras, points, triplets, plane_at_infinity: plane / plane.norm(), scramble };
    Ok((truth, recon))
}

fn generic_with(others: &[MetricCamera], cam: &MetricCamera) -> bool {
    let pp = |m: &MetricCamera| {
        let p = m.projection();
        let v = p.row(2).transpose();
        v / v.norm()
    };
    let c4 = |m: &MetricCamera| {
        let v = m.c.push(1.0);
        v / v.norm()
    };
    others.iter().all(|o| pp(o).dot(&c4(cam)).abs() > 1e-3 && pp(cam).dot(&c4(o)).abs() > 1e-3)
}

/// Cameras by DLT from the noisy pixels, then points by triangulation.
fn reestimate(
    points: &[Vector4<f64>],
    obs: &[Observation],
    n_cameras: usize,
    w: f64,
    h: f64,
    triplets: &[[usize; 3]],
) -> Result<ProjectiveReconstruction> {
    let mut cameras = Vec::with_capacity(n_cameras);
    for ci in 0..n_cameras {
        let mine: Vec<&Observation> = obs.iter().filter(|o| o.camera == ci).collect();
        let xs: Vec<Vector4<f64>> = mine.iter().map(|o| points[o.point]).collect();
        let px: Vec<Vector2<f64>> = mine.iter().map(|o| Vector2::new(o.u, o.v)).collect();
        cameras.push(ProjectionMatrix::new(resect_dlt(&xs, &px)?, w, h));
    }
    let mats: Vec<_> = cameras.iter().map(|p| p.p).collect();
    let mut out_points = Vec::with_capacity(points.len());
    for (pi, original) in points.iter().enumerate() {
        let mine: Vec<&Observation> = obs.iter().filter(|o| o.point == pi).collect();
        let ps: Vec<_> = mine.iter().map(|o| mats[o.camera]).collect();
        let px: Vec<Vector2<f64>> = mine.iter().map(|o| Vector2::new(o.u, o.v)).collect();
        let mut x = triangulate(&ps, &px)?;
        if x.dot(original) < 0.0 {
            x = -x;
        }
        out_points.push(x);
    }
    Ok(ProjectiveReconstruction { cameras, points: out_points, observations: obs.to_vec(), triplets: triplets.to_vec() })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreReport {
    pub focal_rel_error: Vec<f64>,
    pub pp_error: Vec<f64>,
    pub relative_skew: Vec<f64>,
    pub aspect_error: Vec<f64>,
    pub plane_angle: f64,
    pub sigma_mu: Option<f64>,
    pub reprojection_rms: Option<f64>,
}

impl ScoreReport {
    pub fn max_focal_error(&self) -> f64 {
        self.focal_rel_error.iter().copied().fold(0.0, f64::max)
    }

    pub fn max_pp_error(&self) -> f64 {
        self.pp_error.iter().copied().fold(0.0, f64::max)
    }

    pub fn max_skew(&self) -> f64 {
        self.relative_skew.iter().map(|v| v.abs()).fold(0.0, f64::max)
    }

    pub fn max_aspect_error(&self) -> f64 {
        self.aspect_error.iter().copied().fold(0.0, f64::max)
    }
}

/// Compares a calibration with the ground truth.
pub fn score(result: &UpgradeResult, truth: &GroundTruth) -> Result<ScoreReport> {
    if result.cameras.len() != truth.cameras.len() {
        return Err(Error::Mismatch(format!("{} recovered cameras, {} true cameras", result.cameras.len(), truth.cameras.len())));
    }
    let mut rep = ScoreReport {
        focal_rel_error: vec![],
        pp_error: vec![],
        relative_skew: vec![],
        aspect_error: vec![],
        plane_angle: f64::NAN,
        sigma_mu: result.segment_stats.map(|s| s.2),
        reprojection_rms: result.reprojection_rms,
    };
    for (got, want) in result.cameras.iter().zip(&truth.cameras) {
        rep.focal_rel_error.push((got.focal() - want.focal()).abs() / want.focal());
        let (u, v) = got.principal_point();
        let (u0, v0) = want.principal_point();
        rep.pp_error.push((u - u0).hypot(v - v0));
        rep.relative_skew.push(got.relative_skew());
        rep.aspect_error.push((got.aspect() - 1.0).abs());
    }
    rep.plane_angle = match real_plane(&result.plane) {
        Ok(p) => homogeneous_angle(p.as_slice(), truth.plane_at_infinity.as_slice()),
        Err(_) => std::f64::consts::PI,
    };
    Ok(rep)
}
