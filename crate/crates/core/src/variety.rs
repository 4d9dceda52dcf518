//! The six-line conic variety of three square-pixel cameras.
//!
//! A plane π belongs to the variety when the six isotropic lines of the
//! triple meet π in six points of a common conic. The raw condition is the
//! vanishing of the 10×10 determinant `D(π, a)`; dividing out the spurious
//! factors gives the octic `F` and the quintic `G`, and restricting `G` to
//! pencils through the principal plane of the first camera yields the
//! quadratic `H0` used to parameterize the candidate planes.

use nalgebra::{DMatrix, DVector, Matrix4};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::geometry::{
    isotropic_lines, line_plane_meet, optical_center, points_on_conic_residual, principal_plane,
    veronese2, veronese3, HPoint, Meet, Plane, PluckerLine, ProjectionMatrix,
};
use crate::numeric::{
    best_real_phase, c, cnorm, complex_eigenvalues, condition_number, homogeneous_quadratic_roots,
    proportionality_ratio, smallest_right_singular, CMatrix4, CVector3, CVector4, C64, I,
};

/// Relative threshold below which a factor πᵀa or det(a) counts as zero.
pub const FACTOR_TOL: f64 = 1e-10;
/// Relative threshold for πᵀC counting as "plane through a center".
pub const CENTER_TOL: f64 = 1e-10;
/// Relative tolerance for a principal plane containing another center.
pub const GENERIC_TOL: f64 = 1e-8;
/// Condition number above which the canonical frame is rejected.
pub const FRAME_COND_MAX: f64 = 1e12;
/// Maximum number of redraws of the auxiliary points.
pub const MAX_REDRAWS: usize = 5;
/// Imaginary/real ratio below which a root plane is reported as real.
pub const REAL_ROOT_TOL: f64 = 1e-6;

const DEFAULT_SEED: u64 = 0x51c7_2024;

/// Seeded auxiliary points a1..a4 used to evaluate `F`, with redraws.
#[derive(Debug, Clone)]
pub struct FactorDraw {
    draws: Vec<[CVector4; 4]>,
}

impl FactorDraw {
    pub fn new(seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let draws = (0..=MAX_REDRAWS)
            .map(|_| {
                std::array::from_fn(|_| {
                    let v = CVector4::from_fn(|_, _| c(StandardNormal.sample(&mut rng)));
                    v / c(cnorm(v.as_slice()))
                })
            })
            .collect();
        Self { draws }
    }

    pub fn primary(&self) -> &[CVector4; 4] {
        &self.draws[0]
    }

    pub fn draws(&self) -> &[[CVector4; 4]] {
        &self.draws
    }
}

impl Default for FactorDraw {
    fn default() -> Self {
        Self::new(DEFAULT_SEED)
    }
}

/// Three cameras with their centers, principal planes and isotropic lines.
#[derive(Debug, Clone)]
pub struct CameraTriple {
    cameras: [ProjectionMatrix; 3],
    centers: [HPoint; 3],
    principal_planes: [Plane; 3],
    lines: [PluckerLine; 6],
    generic: [bool; 3],
    r: CVector4,
    draw: FactorDraw,
    g_scale: f64,
}

impl CameraTriple {
    pub fn new(cameras: [ProjectionMatrix; 3]) -> Result<Self> {
        Self::with_seed(cameras, DEFAULT_SEED)
    }

    pub fn with_seed(cameras: [ProjectionMatrix; 3], seed: u64) -> Result<Self> {
        let mut centers = Vec::with_capacity(3);
        let mut planes = Vec::with_capacity(3);
        let mut lines = Vec::with_capacity(6);
        for (i, cam) in cameras.iter().enumerate() {
            let cam = &cam.preconditioned();
            if !cam.is_finite() {
                return Err(Error::DegenerateCamera(format!("camera {i} is not finite")));
            }
            centers.push(optical_center(cam)?);
            planes.push(principal_plane(cam)?.normalized());
            let (l, lb) = isotropic_lines(cam)?;
            lines.push(l);
            lines.push(lb);
        }
        let centers: [HPoint; 3] = centers.try_into().unwrap();
        let principal_planes: [Plane; 3] = planes.try_into().unwrap();
        let lines: [PluckerLine; 6] = lines.try_into().unwrap();
        let generic = std::array::from_fn(|i| {
            (0..3).filter(|&j| j != i).all(|j| {
                principal_planes[i].apply(centers[j].coords()).norm() > GENERIC_TOL
            })
        });
        let r = fixed_point(&lines[0], &centers[0], seed)?;
        let mut triple = Self {
            cameras,
            centers,
            principal_planes,
            lines,
            generic,
            r,
            draw: FactorDraw::new(seed),
            g_scale: 0.0,
        };
        triple.g_scale = triple.reference_scale(seed);
        Ok(triple)
    }

    pub fn cameras(&self) -> &[ProjectionMatrix; 3] {
        &self.cameras
    }

    pub fn centers(&self) -> &[HPoint; 3] {
        &self.centers
    }

    pub fn principal_planes(&self) -> &[Plane; 3] {
        &self.principal_planes
    }

    /// (l1, l̄1, l2, l̄2, l3, l̄3).
    pub fn lines(&self) -> &[PluckerLine; 6] {
        &self.lines
    }

    /// Whether principal plane i contains none of the other two centers.
    pub fn generic(&self) -> [bool; 3] {
        self.generic
    }

    /// The fixed point r on l1 (unit norm, most-real phase).
    pub fn r(&self) -> &CVector4 {
        &self.r
    }

    pub fn draw(&self) -> &FactorDraw {
        &self.draw
    }

    /// Typical |G| on unit-norm planes, used as the reference for
    /// "identically zero" decisions.
    pub fn g_scale(&self) -> f64 {
        self.g_scale
    }

    /// q = r + z·C1.
    pub fn q(&self, z: C64) -> CVector4 {
        self.r + self.centers[0].coords() * z
    }

    fn reference_scale(&self, seed: u64) -> f64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x9e37_79b9_7f4a_7c15);
        let mut vals: Vec<f64> = (0..9)
            .filter_map(|_| {
                let v = CVector4::from_fn(|_, _| c(StandardNormal.sample(&mut rng)));
                let p = Plane::new(v / c(cnorm(v.as_slice()))).ok()?;
                eval_g(&p, self).ok().map(|g| g.norm())
            })
            .collect();
        vals.sort_by(|a, b| a.partial_cmp(b).unwrap());
        vals.get(vals.len() / 2).copied().unwrap_or(1.0).max(f64::MIN_POSITIVE)
    }
}

/// r = L1·C1 with C1's coordinates read as a plane; a seeded random plane
/// is used when that meet degenerates.
fn fixed_point(l1: &PluckerLine, c1: &HPoint, seed: u64) -> Result<CVector4> {
    let accept = |x: CVector4| -> Option<CVector4> {
        let n = cnorm(x.as_slice());
        if n <= FACTOR_TOL * l1.matrix().norm() {
            return None;
        }
        if proportionality_ratio(x.as_slice(), c1.coords().as_slice()) < 1e-6 {
            return None;
        }
        let s = best_real_phase(x.as_slice());
        Some(x * s / c(n))
    };
    if let Some(r) = accept(l1.meet_raw(c1.coords())) {
        return Ok(r);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(17));
    for _ in 0..16 {
        let pi = CVector4::from_fn(|_, _| c(StandardNormal.sample(&mut rng)));
        if pi.dot(c1.coords()).norm() < 1e-3 * cnorm(pi.as_slice()) {
            continue;
        }
        if let Some(r) = accept(l1.meet_raw(&pi)) {
            return Ok(r);
        }
    }
    Err(Error::DegenerateConfiguration("no fixed point on the first isotropic line".into()))
}

/// det(ν2(L1π), …, ν2(L6π), ν2(a1), …, ν2(a4)).
pub fn det_d(pi: &Plane, lines: &[PluckerLine; 6], a: &[CVector4; 4]) -> C64 {
    let mut m = DMatrix::<C64>::zeros(10, 10);
    for (j, l) in lines.iter().enumerate() {
        let x = l.meet_raw(pi.coords());
        for (i, v) in veronese3(&x).iter().enumerate() {
            m[(i, j)] = *v;
        }
    }
    for (j, aj) in a.iter().enumerate() {
        for (i, v) in veronese3(aj).iter().enumerate() {
            m[(i, 6 + j)] = *v;
        }
    }
    m.determinant()
}

fn det4(a: &[CVector4; 4]) -> C64 {
    CMatrix4::from_columns(a).determinant()
}

/// F(π) = D(π, a) / (det(a)·∏πᵀa_j), trying the redraws of `draw` when a
/// factor is too small.
pub fn eval_f_with(pi: &Plane, lines: &[PluckerLine; 6], draw: &FactorDraw) -> Result<C64> {
    let np = cnorm(pi.coords().as_slice());
    for a in draw.draws() {
        let da = det4(a);
        if da.norm() < FACTOR_TOL {
            continue;
        }
        let dots: Vec<C64> = a.iter().map(|aj| pi.apply(aj)).collect();
        if dots.iter().any(|d| d.norm() < FACTOR_TOL * np) {
            continue;
        }
        let denom = dots.iter().fold(da, |acc, d| acc * d);
        return Ok(det_d(pi, lines, a) / denom);
    }
    Err(Error::UnluckyFactorDraw(MAX_REDRAWS))
}

/// F(π) with the default seeded auxiliary points.
pub fn eval_f(pi: &Plane, lines: &[PluckerLine; 6]) -> Result<C64> {
    eval_f_with(pi, lines, &FactorDraw::default())
}

/// G(π) = F(π) / ∏πᵀC_i.
pub fn eval_g(pi: &Plane, triple: &CameraTriple) -> Result<C64> {
    let np = cnorm(pi.coords().as_slice());
    let mut denom = c(1.0);
    for (i, ci) in triple.centers.iter().enumerate() {
        let d = pi.apply(ci.coords());
        if d.norm() < CENTER_TOL * np {
            return Err(Error::NearCenterPlane(i));
        }
        denom *= d;
    }
    Ok(eval_f_with(pi, &triple.lines, &triple.draw)? / denom)
}

/// Coordinate change sending C1, C2, C3, q, q̄ to the canonical points.
#[derive(Debug, Clone, Copy)]
pub struct CanonicalFrame {
    pub h: CMatrix4,
    pub q: CVector4,
    pub q_bar: CVector4,
}

impl CanonicalFrame {
    /// Plane with canonical coordinates `pc`, in the original frame (Hᵀ·pc).
    pub fn plane_back(&self, pc: &CVector4) -> CVector4 {
        self.h.transpose() * pc
    }
}

pub fn canonical_points() -> [CVector4; 5] {
    let z = c(0.0);
    let o = c(1.0);
    [
        CVector4::new(z, z, z, o),
        CVector4::new(z, z, o, o),
        CVector4::new(z, o, -o, o),
        CVector4::new(o, I, z, z),
        CVector4::new(o, -I, z, z),
    ]
}

/// H = (β1v1 β2v2 β3v3 β4v4)(α1C1 α2C2 α3C3 α4q)⁻¹ for q = r + z·C1.
pub fn canonical_frame(triple: &CameraTriple, z: C64) -> Result<CanonicalFrame> {
    let q = triple.q(z);
    let q_bar = q.map(|v| v.conj());
    let [c1, c2, c3] = triple.centers.map(|h| *h.coords());
    let m = CMatrix4::from_columns(&[c1, c2, c3, q]);
    let cond = condition_number(&DMatrix::from_column_slice(4, 4, m.as_slice()));
    if !(cond < FRAME_COND_MAX) {
        return Err(Error::DegenerateConfiguration(format!(
            "centers and q nearly coplanar (cond {cond:.3e})"
        )));
    }
    let m_inv = m.try_inverse().ok_or(Error::SingularTransform)?;
    let alpha = m_inv * q_bar;
    let amax = alpha.iter().map(|a| a.norm()).fold(0.0, f64::max);
    if alpha.iter().any(|a| a.norm() < FACTOR_TOL * amax) {
        return Err(Error::DegenerateConfiguration("vanishing frame coefficient".into()));
    }
    let v = canonical_points();
    let vm = CMatrix4::from_columns(&v[..4]);
    let beta = vm.try_inverse().ok_or(Error::SingularTransform)? * v[4];
    let b = CMatrix4::from_columns(&[v[0] * beta[0], v[1] * beta[1], v[2] * beta[2], v[3] * beta[3]]);
    let a = CMatrix4::from_columns(&[c1 * alpha[0], c2 * alpha[1], c3 * alpha[2], q * alpha[3]]);
    let a_inv = a.try_inverse().ok_or(Error::SingularTransform)?;
    let h = b * a_inv;
    Ok(CanonicalFrame { h: h / c(h.norm()), q, q_bar })
}

/// Canonical principal plane π1 and pencil generator ξ.
pub fn canonical_pencil() -> (CVector4, CVector4) {
    let z = c(0.0);
    (CVector4::new(z, z, c(1.0), z), CVector4::new(z, z, c(1.0), c(-1.0)))
}

/// Sample parameters (λ, μ) = (cos t, sin t), t = π(2k+1)/12.
fn pencil_samples() -> [(f64, f64); 6] {
    std::array::from_fn(|k| {
        let t = std::f64::consts::PI * (2 * k + 1) as f64 / 12.0;
        (t.cos(), t.sin())
    })
}

/// Coefficients c_m of λ^(5−m)μ^m interpolating `f` on the sample set,
/// together with the sampled values normalized by ‖plane‖⁵.
fn interpolate_quintic<F>(mut f: F) -> Result<([C64; 6], f64)>
where
    F: FnMut(f64, f64) -> Result<(C64, f64)>,
{
    let samples = pencil_samples();
    let mut v = DMatrix::<C64>::zeros(6, 6);
    let mut rhs = DVector::<C64>::zeros(6);
    let mut peak: f64 = 0.0;
    for (k, (l, m)) in samples.iter().enumerate() {
        for j in 0..6 {
            v[(k, j)] = c(l.powi(5 - j as i32) * m.powi(j as i32));
        }
        let (val, plane_norm) = f(*l, *m)?;
        rhs[k] = val;
        peak = peak.max(val.norm() / plane_norm.powi(5));
    }
    let coef = v.lu().solve(&rhs).ok_or(Error::SingularTransform)?;
    Ok((std::array::from_fn(|j| coef[j]), peak))
}

/// Coefficients of G restricted to the pencil λα + μβ, in the order
/// λ⁵, λ⁴μ, …, μ⁵, with the sampled peak |G|/‖plane‖⁵.
pub fn restricted_quintic(alpha: &CVector4, beta: &CVector4, triple: &CameraTriple) -> Result<([C64; 6], f64)> {
    interpolate_quintic(|l, m| {
        let p = alpha * c(l) + beta * c(m);
        let n = cnorm(p.as_slice());
        Ok((eval_g(&Plane::new(p)?, triple)?, n))
    })
}

/// H0(λ, μ) = A0λ² + B0λμ + C0μ² along λπ1 + μξ in canonical coordinates.
#[derive(Debug, Clone, Copy)]
pub struct PencilQuadratic {
    pub a0: C64,
    pub b0: C64,
    pub c0: C64,
    /// max(|c_λ⁵|, |c_λ⁴μ|, |c_λ³μ²|) / max |c| for the restricted quintic.
    pub divisibility_residual: f64,
    /// Relative least-squares residual of the quadratic fit.
    pub fit_residual: f64,
    pub frame: CanonicalFrame,
}

/// Affine coordinates (u, v) of the meets of l2, l̄2, l3, l̄3 with the
/// canonical pencil plane (0, 0, λ+μ, −μ), as linear forms in (λ, μ).
///
/// For a canonical line L' the meet is L'·χ, whose third coordinate is
/// −L'₃₄·μ. Dropping the fourth coordinate identifies the plane with P²
/// (q, q̄ ↦ (1, ±i, 0)); rescaling the third coordinate by μ gives the
/// point (x1, x2, −L'₃₄) with x1, x2 linear in (λ, μ).
fn pencil_meet_forms(lines: &[CMatrix4; 4]) -> Result<[[(C64, C64); 2]; 4]> {
    let mut out = [[(c(0.0), c(0.0)); 2]; 4];
    for (r, lt) in lines.iter().enumerate() {
        let w = -lt[(2, 3)];
        if w.norm() <= 1e-12 * lt.norm() {
            return Err(Error::DegenerateConfiguration("line meets the pencil axis".into()));
        }
        for k in 0..2 {
            // x_k = L'(k,3)(λ + μ) − L'(k,4)μ
            out[r][k] = (lt[(k, 2)] / w, (lt[(k, 2)] - lt[(k, 3)]) / w);
        }
    }
    Ok(out)
}

/// Concyclicity determinant det[(u²+v², u, v, 1)] of the four meets; a
/// quartic form equal to κ·λ(λ + 2μ)·H0(λ, μ).
fn circle_det(forms: &[[(C64, C64); 2]; 4], l: f64, m: f64) -> C64 {
    let mut a = CMatrix4::zeros();
    for (r, f) in forms.iter().enumerate() {
        let u = f[0].0 * l + f[0].1 * m;
        let v = f[1].0 * l + f[1].1 * m;
        a[(r, 0)] = u * u + v * v;
        a[(r, 1)] = u;
        a[(r, 2)] = v;
        a[(r, 3)] = c(1.0);
    }
    a.determinant()
}

pub fn pencil_quadratic(triple: &CameraTriple, z: C64) -> Result<PencilQuadratic> {
    if !triple.generic[0] {
        return Err(Error::NonGenericConfiguration);
    }
    let frame = canonical_frame(triple, z)?;
    let (pi1, xi) = canonical_pencil();
    let alpha = frame.plane_back(&pi1);
    let beta = frame.plane_back(&xi);
    let (coef, peak) = restricted_quintic(&alpha, &beta, triple)?;
    if peak < 1e-9 * triple.g_scale {
        return Err(Error::DegeneratePencil);
    }
    let cmax = coef.iter().map(|v| v.norm()).fold(0.0, f64::max);
    let top = coef[..3].iter().map(|v| v.norm()).fold(0.0, f64::max);

    let lines: [CMatrix4; 4] = std::array::from_fn(|k| transform_line(&frame.h, &triple.lines[k + 2]));
    let forms = pencil_meet_forms(&lines)?;
    let samples = pencil_samples();
    let mut v = DMatrix::<C64>::zeros(6, 3);
    let mut rhs = DVector::<C64>::zeros(6);
    for (k, (l, m)) in samples.iter().enumerate() {
        v[(k, 0)] = c(l * l);
        v[(k, 1)] = c(l * m);
        v[(k, 2)] = c(m * m);
        rhs[k] = circle_det(&forms, *l, *m) / (l * (l + 2.0 * m));
    }
    let fit = v.clone().svd(true, true).solve(&rhs, 1e-14).map_err(|e| Error::DegenerateConfiguration(e.into()))?;
    let rnorm = rhs.norm();
    if rnorm == 0.0 || !rnorm.is_finite() {
        return Err(Error::DegeneratePencil);
    }
    let fit_residual = (&v * &fit - &rhs).norm() / rnorm;
    Ok(PencilQuadratic {
        a0: fit[0],
        b0: fit[1],
        c0: fit[2],
        divisibility_residual: top / cmax,
        fit_residual,
        frame,
    })
}

/// The two candidate planes of a parameter z.
#[derive(Debug, Clone, Copy)]
pub struct CandidatePlanePair {
    pub z: C64,
    pub chi: [Plane; 2],
    pub xi: Plane,
    pub frame: CMatrix4,
    /// True when the two planes are complex conjugates of each other.
    pub conjugate_pair: bool,
    pub double_root: bool,
    pub divisibility_residual: f64,
}

pub fn candidate_planes(triple: &CameraTriple, z: C64) -> Result<CandidatePlanePair> {
    let pq = pencil_quadratic(triple, z)?;
    let (pi1, xi) = canonical_pencil();
    let (a, b, cc) = (pq.a0, pq.b0, pq.c0);
    let disc = b * b - a * cc * 4.0;
    // a discriminant within the first-order perturbation bound of the
    // coefficient error is a double root; the mean root is well conditioned
    // while the split is not
    let cmax = a.norm().max(b.norm()).max(cc.norm());
    let eps = 16.0 * pq.fit_residual.max(1e-13) * cmax;
    let double_root = disc.norm() <= eps * (2.0 * b.norm() + 4.0 * a.norm() + 4.0 * cc.norm());
    let roots = if double_root {
        let r = if a.norm() >= cc.norm() { (-b, a * 2.0) } else { (cc * 2.0, -b) };
        [r, r]
    } else {
        homogeneous_quadratic_roots(a, b, cc)
    };
    let xi_back = pq.frame.plane_back(&xi);
    let mut chi = Vec::with_capacity(2);
    for (l, m) in roots {
        let pc = pi1 * l + xi * m;
        let p = *Plane::new(pq.frame.plane_back(&pc))?.normalized().coords();
        let p = if double_root { p } else { polish_root(&p, &xi_back, triple).unwrap_or(p) };
        chi.push(Plane::new(p)?.normalized());
    }
    let chi: [Plane; 2] = chi.try_into().unwrap();
    let conjugate_pair = !double_root
        && chi[0].to_real().1 > REAL_ROOT_TOL
        && chi[0].same_as(&chi[1].conj(), 1e-6);
    Ok(CandidatePlanePair {
        z,
        chi,
        xi: Plane::new(pq.frame.plane_back(&xi))?.normalized(),
        frame: pq.frame.h,
        conjugate_pair,
        double_root,
        divisibility_residual: pq.divisibility_residual,
    })
}

/// Secant iterations on G along the pencil through a simple root `p`
/// (unit norm). The result is kept only when it lowers |G|.
fn polish_root(p: &CVector4, dir: &CVector4, triple: &CameraTriple) -> Option<CVector4> {
    let b = dir - p * p.dotc(dir);
    let nb = cnorm(b.as_slice());
    if !(nb > 0.0) {
        return None;
    }
    let b = b / c(nb);
    let g = |t: C64| Plane::new(p + b * t).ok().and_then(|pl| eval_g(&pl, triple).ok());
    let (mut t0, mut t1) = (c(0.0), c(1e-8));
    let (mut g0, mut g1) = (g(t0)?, g(t1)?);
    let start = g0.norm();
    for _ in 0..8 {
        let dg = g1 - g0;
        if dg.norm() == 0.0 {
            break;
        }
        let t2 = t1 - g1 * (t1 - t0) / dg;
        if !(t2.norm() < 1e-2) {
            return None;
        }
        t0 = t1;
        g0 = g1;
        t1 = t2;
        g1 = g(t1)?;
        if (t1 - t0).norm() <= 1e-15 {
            break;
        }
    }
    (g1.norm() < start).then(|| p + b * t1)
}

/// Parameter z whose point q = r + z·C1 is the meet of l1 with `plane`.
pub fn z_for_plane(triple: &CameraTriple, plane: &Plane) -> Option<C64> {
    let x = line_plane_meet(&triple.lines[0], plane).point()?;
    z_for_point(triple, x.coords())
}

/// Solve x ∝ r + z·C1 for z in the least-squares sense.
pub fn z_for_point(triple: &CameraTriple, x: &CVector4) -> Option<C64> {
    let mut a = DMatrix::<C64>::zeros(4, 3);
    a.set_column(0, &triple.r);
    a.set_column(1, triple.centers[0].coords());
    a.set_column(2, x);
    let (v, _) = smallest_right_singular(&a);
    // a·v = 0: v0·r + v1·C1 + v2·x = 0, so x ∝ r + (v1/v0)·C1
    if v[0].norm() < 1e-12 * cnorm(v.as_slice()) {
        return None;
    }
    Some(v[1] / v[0])
}

/// Orthonormal basis (4×3) of the points of a plane.
pub fn plane_basis(pi: &Plane) -> DMatrix<C64> {
    let mut a = DMatrix::<C64>::zeros(4, 4);
    for j in 0..4 {
        a[(0, j)] = pi.coords()[j];
    }
    let svd = a.svd(false, true);
    let vt = svd.v_t.unwrap();
    let mut b = DMatrix::<C64>::zeros(4, 3);
    for k in 0..3 {
        for i in 0..4 {
            b[(i, k)] = vt[(k + 1, i)].conj();
        }
    }
    b
}

/// Meets of the six isotropic lines with `pi`, in 2D coordinates of the plane.
pub fn meets_in_plane(pi: &Plane, lines: &[PluckerLine; 6]) -> Result<[CVector3; 6]> {
    let b = plane_basis(pi);
    let bh = b.adjoint();
    let mut out = [CVector3::zeros(); 6];
    for (i, l) in lines.iter().enumerate() {
        match line_plane_meet(l, pi) {
            Meet::Contained => return Err(Error::ContainedLine(i)),
            Meet::Point(x) => {
                let y = &bh * DVector::from_column_slice(x.coords().as_slice());
                out[i] = CVector3::new(y[0], y[1], y[2]);
            }
        }
    }
    Ok(out)
}

/// Six-points-on-a-conic residual of the line meets with `pi`.
pub fn conic_condition_residual(pi: &Plane, lines: &[PluckerLine; 6]) -> Result<f64> {
    Ok(points_on_conic_residual(&meets_in_plane(pi, lines)?))
}

/// Real planes λα + μβ on which G vanishes (at most five).
pub fn quintic_on_line(alpha: &Plane, beta: &Plane, triple: &CameraTriple) -> Result<Vec<Plane>> {
    if proportionality_ratio(alpha.coords().as_slice(), beta.coords().as_slice()) < 1e-12 {
        return Err(Error::DegenerateInput("pencil generators are proportional".into()));
    }
    let a = *alpha.normalized().coords();
    let b = beta.coords() - a * a.dotc(beta.coords());
    let b = b / c(cnorm(b.as_slice()));
    let (mut coef, peak) = restricted_quintic(&a, &b, triple)?;
    if peak < 1e-9 * triple.g_scale {
        return Err(Error::DegeneratePencil);
    }
    let (mut a, mut b) = (a, b);
    for _ in 0..ZOOM_STEPS {
        let Some((centre, width)) = root_cluster(&coef) else { break };
        a += b * c(centre);
        b *= c(width);
        coef = restricted_quintic(&a, &b, triple)?.0;
    }
    let roots = merge_close_roots(binary_form_roots(&coef), 1e-4);
    let t: Vec<Option<C64>> = roots.iter().map(|(l, m)| (l.norm() > 1e-12 * m.norm()).then(|| m / l)).collect();
    let mut out: Vec<Plane> = Vec::new();
    for (i, (l, m)) in roots.iter().enumerate() {
        let p = match t[i] {
            Some(ti) => {
                let gap = t.iter().enumerate().filter(|&(j, _)| j != i).filter_map(|(_, x)| x.map(|x| (x - ti).norm())).fold(1.0, f64::min);
                a + b * zoom_root(&a, &b, ti, 0.5 * gap, triple)
            }
            None => a * *l + b * *m,
        };
        let (re, ratio) = Plane::new_checked_unit(p).to_real();
        if ratio < REAL_ROOT_TOL {
            let plane = Plane::from_real(re)?;
            if !out.iter().any(|o| o.same_as(&plane, 1e-9)) {
                out.push(plane);
            }
        }
    }
    Ok(out)
}

const ZOOM_STEPS: usize = 4;

/// Real centre and radius of the roots t = μ/λ when all five are finite
/// and lie within a radius of 0.25.
fn root_cluster(coef: &[C64; 6]) -> Option<(f64, f64)> {
    let roots = binary_form_roots(coef);
    if roots.len() < 5 || roots.iter().any(|(l, m)| l.norm() <= 1e-12 * m.norm()) {
        return None;
    }
    let t: Vec<C64> = roots.iter().map(|(l, m)| m / l).collect();
    let centre = t.iter().map(|x| x.re).sum::<f64>() / t.len() as f64;
    let width = t.iter().map(|x| (x - centre).norm()).fold(0.0, f64::max);
    (width > 0.0 && width < 0.25).then_some((centre, width))
}

/// Re-solves for the root of the pencil a + t·b nearest `t0` on pencils
/// centred at the current estimate with radius `radius`.
fn zoom_root(a: &CVector4, b: &CVector4, t0: C64, radius: f64, triple: &CameraTriple) -> C64 {
    let mut t = t0;
    let mut r = radius;
    for _ in 0..3 {
        if !(r > 0.0) {
            break;
        }
        let Ok((coef, _)) = restricted_quintic(&(a + b * t), &(b * c(r)), triple) else { break };
        let Some(s) = binary_form_roots(&coef)
            .into_iter()
            .filter(|(l, m)| l.norm() > 1e-12 * m.norm())
            .map(|(l, m)| m / l)
            .min_by(|x, y| x.norm().total_cmp(&y.norm()))
        else {
            break;
        };
        if s.norm() > 1.0 {
            break;
        }
        t += s * r;
        r *= (4.0 * s.norm()).clamp(1e-6, 0.5);
    }
    t
}

impl Plane {
    fn new_checked_unit(p: CVector4) -> Plane {
        Plane::new(p).map(|p| p.normalized()).unwrap_or_else(|_| Plane::new(CVector4::new(c(1.0), c(0.0), c(0.0), c(0.0))).unwrap())
    }
}

/// Replace clusters of nearly equal roots by their mean. A multiple root
/// splits by O(√ε) under rounding while the mean of the cluster stays
/// accurate to O(ε).
pub fn merge_close_roots(roots: Vec<(C64, C64)>, tol: f64) -> Vec<(C64, C64)> {
    let unit = |(l, m): (C64, C64)| {
        let n = (l.norm_sqr() + m.norm_sqr()).sqrt();
        let s = if m.norm() > l.norm() { m.conj() / m.norm() } else { l.conj() / l.norm() };
        (l * s / n, m * s / n)
    };
    let mut used = vec![false; roots.len()];
    let mut out = Vec::new();
    for i in 0..roots.len() {
        if used[i] {
            continue;
        }
        let ri = unit(roots[i]);
        let mut sum = ri;
        let mut count = 1.0;
        for j in (i + 1)..roots.len() {
            if used[j] {
                continue;
            }
            let rj = unit(roots[j]);
            if ((ri.0 - rj.0).norm_sqr() + (ri.1 - rj.1).norm_sqr()).sqrt() < tol {
                used[j] = true;
                sum = (sum.0 + rj.0, sum.1 + rj.1);
                count += 1.0;
            }
        }
        out.push((sum.0 / count, sum.1 / count));
    }
    out
}

/// Roots (λ, μ) of Σ c_m λ^(n−m) μ^m, via companion-matrix eigenvalues.
/// Vanishing leading coefficients give roots at μ = 0.
pub fn binary_form_roots(coef: &[C64]) -> Vec<(C64, C64)> {
    let n = coef.len() - 1;
    let cmax = coef.iter().map(|v| v.norm()).fold(0.0, f64::max);
    if cmax == 0.0 {
        return Vec::new();
    }
    let lead = coef.iter().position(|v| v.norm() > 1e-13 * cmax).unwrap();
    let mut out: Vec<(C64, C64)> = (0..lead).map(|_| (c(1.0), c(0.0))).collect();
    let p = &coef[lead..];
    let deg = p.len() - 1;
    if deg == 0 {
        return out;
    }
    // s = λ/μ solves p0 s^deg + p1 s^(deg−1) + … + p_deg = 0
    let mut comp = DMatrix::<C64>::zeros(deg, deg);
    for j in 0..deg {
        comp[(0, j)] = -p[j + 1] / p[0];
    }
    for i in 1..deg {
        comp[(i, i - 1)] = c(1.0);
    }
    for s in complex_eigenvalues(comp) {
        out.push((s, c(1.0)));
    }
    debug_assert!(out.len() <= n);
    out
}

/// Plücker matrix of a line in canonical form under the frame.
pub fn transform_line(h: &CMatrix4, l: &PluckerLine) -> Matrix4<C64> {
    h * l.matrix() * h.transpose()
}

/// Veronese image of a point in the plane, re-exported for callers that
/// assemble their own conic conditions.
pub fn plane_veronese(x: &CVector3) -> [C64; 6] {
    veronese2(x)
}
