//! Two-stage search over the candidate-plane parameter z, calibration
//! drivers, and the two baselines: a 3D search over the plane with the
//! cyclic-point transfer cost, and the linear dual absolute quadric with
//! known principal points.

use log::{debug, warn};
use nalgebra::{DMatrix, DVector, Matrix3, Matrix4, SymmetricEigen, Vector4};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cost::{c0, cyclic_residuals, evaluate_z, normalize_iac, CostBreakdown, CostContext, CostWeights, Iac, ZEvaluation};
use crate::error::{Error, Result};
use crate::geometry::{conic_fit, isotropic_lines, line_plane_meet, image_normalization, Conic, Plane, PluckerLine, ProjectionMatrix};
use crate::numeric::{c, cnorm, C64};
use crate::optim::NelderMead;
use crate::reconstruction::ProjectiveReconstruction;
use crate::upgrade::{finish_upgrade, homography_from_plane_iac, plane_from_real, real_plane, Diagnostics, SearchSummary, UpgradeResult};
use crate::variety::CameraTriple;

/// Environment variable capping the number of worker threads.
pub const THREADS_ENV: &str = "SLCV_THREADS";

/// Grid of N radial and M angular samples on the unit disk and its
/// complement.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GridSpec {
    pub n: usize,
    pub m: usize,
}

impl GridSpec {
    pub fn new(n: usize, m: usize) -> Result<Self> {
        if n == 0 || m == 0 {
            return Err(Error::InvalidInput(format!("grid needs n, m ≥ 1, got {n}×{m}")));
        }
        Ok(Self { n, m })
    }

    /// 1 + N·M + (N−1)·M.
    pub fn len(&self) -> usize {
        1 + self.n * self.m + (self.n - 1) * self.m
    }

    pub fn is_empty(&self) -> bool {
        false
    }
}

impl Default for GridSpec {
    fn default() -> Self {
        Self { n: 50, m: 50 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSample {
    pub j: usize,
    pub k: usize,
    pub z: C64,
    pub disk: bool,
}

/// {0}, then (j/N)·e^{i2πk/M} for j = 1..N, then (N/j)·e^{−i2πk/M} for
/// j = 1..N−1, with k = 1..M inner.
pub fn sample_grid(spec: GridSpec) -> Vec<GridSample> {
    let (n, m) = (spec.n as f64, spec.m as f64);
    let mut out = Vec::with_capacity(spec.len());
    out.push(GridSample { j: 0, k: 0, z: c(0.0), disk: true });
    for j in 1..=spec.n {
        for k in 1..=spec.m {
            let z = C64::from_polar(j as f64 / n, std::f64::consts::TAU * k as f64 / m);
            out.push(GridSample { j, k, z, disk: true });
        }
    }
    for j in 1..spec.n {
        for k in 1..=spec.m {
            let z = C64::from_polar(n / j as f64, -std::f64::consts::TAU * k as f64 / m);
            out.push(GridSample { j, k, z, disk: false });
        }
    }
    out
}

/// Runs `f` on a pool of `threads` workers, or of `SLCV_THREADS` workers
/// when unset; falls back to the global pool.
pub fn with_threads<R: Send>(threads: Option<usize>, f: impl FnOnce() -> R + Send) -> R {
    let n = threads.or_else(|| std::env::var(THREADS_ENV).ok().and_then(|v| v.trim().parse().ok())).filter(|&n| n > 0);
    match n.and_then(|n| rayon::ThreadPoolBuilder::new().num_threads(n).build().ok()) {
        Some(pool) => pool.install(f),
        None => f(),
    }
}

/// C(z) at every grid sample, in grid order.
pub fn evaluate_grid(ctx: &CostContext, spec: GridSpec) -> Vec<(GridSample, ZEvaluation)> {
    sample_grid(spec).into_par_iter().map(|s| (s, evaluate_z(s.z, ctx))).collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridMinimum {
    pub index: usize,
    pub z0: C64,
    pub cost: f64,
}

/// First sample with the least cost.
pub fn grid_argmin(evals: &[(GridSample, ZEvaluation)]) -> Result<GridMinimum> {
    let mut best: Option<GridMinimum> = None;
    for (i, (s, e)) in evals.iter().enumerate() {
        if e.cost.is_finite() && best.is_none_or(|b| e.cost < b.cost) {
            best = Some(GridMinimum { index: i, z0: s.z, cost: e.cost });
        }
    }
    best.ok_or(Error::AllInfeasible)
}

pub fn grid_search(ctx: &CostContext, spec: GridSpec) -> Result<GridMinimum> {
    if ctx.n_cameras() < 5 {
        warn!("{} cameras: five are needed for a unique plane at infinity", ctx.n_cameras());
    }
    grid_argmin(&evaluate_grid(ctx, spec))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RefineOptions {
    pub simplex: NelderMead,
    /// Final Nelder–Mead pass on C0 over the coordinates of the chosen
    /// plane.
    pub polish: bool,
    /// Number of separated grid minima refined by [`search_z`].
    pub starts: usize,
    /// Fresh simplices started from the current best while they improve.
    pub restarts: usize,
}

impl Default for RefineOptions {
    fn default() -> Self {
        Self { simplex: NelderMead::default(), polish: true, starts: 8, restarts: 10 }
    }
}

#[derive(Debug, Clone)]
pub struct SearchResult {
    pub z0: C64,
    pub z1: C64,
    pub grid_cost: f64,
    pub cost: f64,
    pub chosen_plane: Plane,
    /// IAC of the first triple camera, in its preconditioned image frame.
    pub chosen_iac: Option<Iac>,
    pub cost_history: Vec<f64>,
    pub breakdown: CostBreakdown,
    pub iterations: usize,
    pub converged: bool,
}

/// Nelder–Mead over (Re z, Im z) from `z0`, then the cheaper plane of z1.
pub fn refine(z0: C64, ctx: &CostContext, opts: &RefineOptions) -> Result<SearchResult> {
    let start = evaluate_z(z0, ctx);
    let nm = NelderMead { edge: opts.simplex.edge * z0.norm().max(1.0), ..opts.simplex };
    let f = |x: &[f64]| evaluate_z(C64::new(x[0], x[1]), ctx).cost;
    let mut m = nm.minimize(&[z0.re, z0.im], f);
    for _ in 0..opts.restarts {
        if m.iterations >= opts.simplex.max_iters || !m.f.is_finite() {
            break;
        }
        let again = nm.minimize(&m.x, f);
        let improved = again.f < m.f * (1.0 - 1e-3);
        m.iterations += again.iterations;
        m.history.extend_from_slice(&again.history[1..]);
        if again.f <= m.f {
            m.x = again.x;
            m.f = again.f;
            m.converged = again.converged;
        }
        if !improved {
            break;
        }
    }
    let z1 = C64::new(m.x[0], m.x[1]);
    let end = if m.x == [z0.re, z0.im] { start.clone() } else { evaluate_z(z1, ctx) };
    let pair = end.pair.as_ref().ok_or(Error::AllInfeasible)?;
    let mut plane = pair.chi[end.best()];
    let mut breakdown = c0(&plane, ctx);
    let mut history = m.history.clone();
    if opts.polish {
        let seeds: Vec<Plane> = [start.pair.as_ref(), Some(pair)].into_iter().flatten().flat_map(|p| p.chi).collect();
        let polished = seeds.iter().filter_map(|chi| polish_plane(chi, ctx));
        if let Some((p, b)) = polished.min_by(|a, b| a.1.c0.total_cmp(&b.1.c0)) {
            if b.c0 < breakdown.c0 {
                history.push(b.c0);
                plane = p;
                breakdown = b;
            }
        }
    }
    let chosen_iac = ctx.iac(&plane, ctx.triple_index()[0]).ok();
    debug!("refined z {z0} → {z1}, cost {} → {}", start.cost, breakdown.c0);
    Ok(SearchResult {
        z0,
        z1,
        grid_cost: start.cost,
        cost: breakdown.c0.min(end.cost),
        chosen_plane: plane,
        chosen_iac,
        cost_history: history,
        breakdown,
        iterations: m.iterations,
        converged: m.converged,
    })
}

/// Distance on the Riemann sphere, so samples near infinity are compared
/// like samples near zero.
pub fn chordal_distance(a: C64, b: C64) -> f64 {
    2.0 * (a - b).norm() / ((1.0 + a.norm_sqr()) * (1.0 + b.norm_sqr())).sqrt()
}

/// Up to `k` feasible samples in (cost, index) order, each at chordal
/// distance ≥ `sep` from those already taken.
pub fn separated_minima(evals: &[(GridSample, ZEvaluation)], k: usize, sep: f64) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..evals.len()).filter(|&i| evals[i].1.cost.is_finite()).collect();
    idx.sort_by(|&a, &b| evals[a].1.cost.total_cmp(&evals[b].1.cost).then(a.cmp(&b)));
    let mut out: Vec<usize> = Vec::with_capacity(k);
    for i in idx {
        if out.len() >= k {
            break;
        }
        if out.iter().all(|&j| chordal_distance(evals[i].0.z, evals[j].0.z) >= sep) {
            out.push(i);
        }
    }
    out
}

/// Grid search followed by refinement from several separated grid minima;
/// the refined result of least cost wins, earlier starts on ties.
pub fn search_z(ctx: &CostContext, spec: GridSpec, opts: &RefineOptions) -> Result<(GridMinimum, SearchResult)> {
    if ctx.n_cameras() < 5 {
        warn!("{} cameras: five are needed for a unique plane at infinity", ctx.n_cameras());
    }
    let evals = evaluate_grid(ctx, spec);
    let grid = grid_argmin(&evals)?;
    let starts = separated_minima(&evals, opts.starts.max(1), 3.0 / spec.n as f64);
    let runs: Vec<Result<SearchResult>> = starts.par_iter().map(|&i| refine(evals[i].0.z, ctx, opts)).collect();
    let mut best: Option<SearchResult> = None;
    for r in runs {
        let r = r?;
        if best.as_ref().is_none_or(|b| r.cost < b.cost) {
            best = Some(r);
        }
    }
    Ok((grid, best.ok_or(Error::AllInfeasible)?))
}

/// Orthonormal basis of the real 4-vectors orthogonal to `n`.
fn complement_basis(n: &Vector4<f64>) -> [Vector4<f64>; 3] {
    let m = nalgebra::Matrix4x1::from_column_slice(n.as_slice());
    let q = (m * m.transpose()).symmetric_eigen();
    let mut idx: Vec<usize> = (0..4).collect();
    idx.sort_by(|&a, &b| q.eigenvalues[a].total_cmp(&q.eigenvalues[b]));
    [q.eigenvectors.column(idx[0]).into(), q.eigenvectors.column(idx[1]).into(), q.eigenvectors.column(idx[2]).into()]
}

/// Square-pixel residuals (ω11 − ω22, ω12) of every evaluated camera,
/// scaled by |ω11| + |ω22|.
fn square_pixel_residuals(n: &Vector4<f64>, ctx: &CostContext) -> Option<DVector<f64>> {
    let plane = plane_from_real(n).ok()?;
    let mut r = Vec::with_capacity(2 * ctx.evaluated().len());
    for &k in ctx.evaluated() {
        let w = ctx.iac(&plane, k).ok()?.re();
        let s = w[(0, 0)].abs() + w[(1, 1)].abs();
        if !(s > 0.0) {
            return None;
        }
        r.push((w[(0, 0)] - w[(1, 1)]) / s);
        r.push(w[(0, 1)] / s);
    }
    r.iter().all(|v| v.is_finite()).then(|| DVector::from_vec(r))
}

/// Levenberg–Marquardt on the square-pixel residuals over the real plane.
pub fn polish_plane(plane: &Plane, ctx: &CostContext) -> Option<(Plane, CostBreakdown)> {
    if ctx.weights().0[2] == 0.0 || ctx.evaluated().len() < 2 {
        return None;
    }
    let mut n = real_plane(plane).ok()?;
    n /= n.norm();
    let mut r = square_pixel_residuals(&n, ctx)?;
    let mut lambda = 1e-3;
    for _ in 0..100 {
        let basis = complement_basis(&n);
        let h = 1e-7;
        let mut j = DMatrix::<f64>::zeros(r.len(), 3);
        for (c, b) in basis.iter().enumerate() {
            let rp = square_pixel_residuals(&(n + b * h), ctx)?;
            let rm = square_pixel_residuals(&(n - b * h), ctx)?;
            j.set_column(c, &((rp - rm) / (2.0 * h)));
        }
        let jtj = j.transpose() * &j;
        let g = j.transpose() * &r;
        let mut stepped = false;
        while lambda < 1e12 {
            let mut a = jtj.clone();
            for i in 0..3 {
                a[(i, i)] += lambda * jtj[(i, i)].max(1e-12);
            }
            let Some(d) = a.lu().solve(&(-&g)) else { break };
            let cand = n + basis[0] * d[0] + basis[1] * d[1] + basis[2] * d[2];
            let cand = cand / cand.norm();
            match square_pixel_residuals(&cand, ctx) {
                Some(rc) if rc.norm() < r.norm() => {
                    let small = d.norm() < 1e-15;
                    n = cand;
                    r = rc;
                    lambda = (lambda * 0.1).max(1e-12);
                    stepped = !small;
                    break;
                }
                _ => lambda *= 10.0,
            }
        }
        if !stepped || r.norm() < 1e-15 {
            break;
        }
    }
    let p = plane_from_real(&n).ok()?.normalized();
    let b = c0(&p, ctx);
    Some((p, b))
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct SlcvConfig {
    pub grid: GridSpec,
    pub weights: CostWeights,
    pub triple: Option<[usize; 3]>,
    pub refine: RefineOptions,
    pub threads: Option<usize>,
}

/// First ordering of `t` whose leading camera has a generic principal
/// plane.
pub fn select_triple(cameras: &[ProjectionMatrix], t: [usize; 3]) -> Result<[usize; 3]> {
    let orders = [[0, 1, 2], [1, 0, 2], [2, 0, 1]];
    let mut last = Error::NonGenericConfiguration;
    for o in orders {
        let idx = o.map(|i| t[i]);
        match CameraTriple::new(idx.map(|i| cameras[i])) {
            Ok(tr) if tr.generic()[0] => return Ok(idx),
            Ok(_) => {}
            Err(e) => last = e,
        }
    }
    Err(last)
}

/// Grid search, refinement and stratified upgrade.
pub fn calibrate_slcv(recon: &ProjectiveReconstruction, config: &SlcvConfig) -> Result<UpgradeResult> {
    recon.validate()?;
    let nc = recon.cameras.len();
    if nc < 4 {
        return Err(Error::UnderConstrained(format!(
            "{nc} cameras: the cost vanishes on the whole variety with fewer than four cameras"
        )));
    }
    let mut warnings = vec![];
    if nc == 4 {
        warnings.push("four cameras: the plane at infinity may not be unique".to_string());
    }
    let requested = config.triple.unwrap_or([0, 1, 2]);
    if requested.iter().any(|&i| i >= nc) {
        return Err(Error::InvalidInput(format!("triple {requested:?} out of range")));
    }
    let triple = select_triple(&recon.cameras, requested)?;
    let ctx = CostContext::new(&recon.cameras, triple, config.weights)?;
    let (grid, search) = with_threads(config.threads, || search_z(&ctx, config.grid, &config.refine))?;
    let iac = search.chosen_iac.ok_or(Error::NonDefiniteIac)?;
    let h = homography_from_plane_iac(&search.chosen_plane, &iac, &ctx.cameras()[triple[0]])?;
    let diagnostics = Diagnostics {
        method: "slcv".into(),
        triple: Some(triple),
        search: Some(SearchSummary {
            z0: [grid.z0.re, grid.z0.im],
            z1: [search.z1.re, search.z1.im],
            grid: [config.grid.n, config.grid.m],
            grid_cost: grid.cost,
            cost: search.cost,
            iterations: search.iterations,
            converged: search.converged,
        }),
        per_camera_cost: search.breakdown.per_camera.clone(),
        c0: Some(search.breakdown.c0),
        warnings,
    };
    finish_upgrade(recon, h, search.chosen_plane, Some(iac), diagnostics)
}

/// First isotropic line of each of the given cameras.
pub fn default_selected_lines(cameras: &[ProjectionMatrix], which: [usize; 5]) -> Result<[PluckerLine; 5]> {
    let mut out = Vec::with_capacity(5);
    for i in which {
        let cam = cameras.get(i).ok_or_else(|| Error::InvalidInput(format!("camera {i} out of range")))?;
        out.push(isotropic_lines(&cam.preconditioned())?.0);
    }
    Ok(out.try_into().unwrap())
}

/// Conic through the five transferred points x_j = L_j·π seen by `cam`.
fn transferred_conic(pi: &Plane, cam: &ProjectionMatrix, lines: &[PluckerLine; 5]) -> Result<Conic> {
    let mut pts = Vec::with_capacity(5);
    for (i, l) in lines.iter().enumerate() {
        let x = line_plane_meet(l, pi).point().ok_or(Error::ContainedLine(i))?;
        let y = cam.project(x.coords());
        if cnorm(y.as_slice()) <= 1e-12 * cnorm(x.coords().as_slice()) {
            return Err(Error::RankDeficient(format!("transferred point {i} projects to zero")));
        }
        pts.push(y);
    }
    conic_fit(&pts).map_err(|e| match e {
        Error::DegenerateInput(m) => Error::RankDeficient(m),
        e => e,
    })
}

/// Σ_k |Iᵀω_k I| + |Īᵀω_k Ī| over all cameras, each ω_k of unit norm and
/// expressed in preconditioned image coordinates.
pub fn cyclic_transfer_cost(pi: &Plane, cameras: &[ProjectionMatrix], lines: &[PluckerLine; 5]) -> Result<f64> {
    let mut total = 0.0;
    for cam in cameras {
        let w = transferred_conic(pi, &cam.preconditioned(), lines)?;
        let m = w.matrix() / c(w.matrix().norm());
        let (a, b) = cyclic_residuals(&m);
        total += a.norm() + b.norm();
    }
    Ok(total)
}

/// Planes (nᵀ, 1)ᵀ with n in a box, `[xmin, xmax, ymin, ymax, zmin, zmax]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlaneBox(pub [f64; 6]);

impl PlaneBox {
    pub fn new(b: [f64; 6]) -> Result<Self> {
        if b.iter().any(|v| !v.is_finite()) || b[0] > b[1] || b[2] > b[3] || b[4] > b[5] {
            return Err(Error::InvalidInput(format!("invalid box {b:?}")));
        }
        Ok(Self(b))
    }

    /// Center of cell (i, j, k) of an Ns³ subdivision.
    pub fn cell(&self, steps: usize, i: usize, j: usize, k: usize) -> [f64; 3] {
        let at = |lo: f64, hi: f64, t: usize| lo + (hi - lo) * (t as f64 + 0.5) / steps as f64;
        [at(self.0[0], self.0[1], i), at(self.0[2], self.0[3], j), at(self.0[4], self.0[5], k)]
    }

    pub fn cell_size(&self, steps: usize) -> [f64; 3] {
        [0, 2, 4].map(|i| (self.0[i + 1] - self.0[i]) / steps as f64)
    }
}

fn plane_of(n: &[f64]) -> Result<Plane> {
    plane_from_real(&Vector4::new(n[0], n[1], n[2], 1.0))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid3dResult {
    pub plane: Plane,
    pub n: [f64; 3],
    pub grid_cost: f64,
    pub cost: f64,
}

/// Argmin of the cyclic-transfer cost over the cell centers of the box,
/// optionally refined by Nelder–Mead.
pub fn plane_grid_search_3d(
    cameras: &[ProjectionMatrix],
    lines: &[PluckerLine; 5],
    bx: &PlaneBox,
    steps: usize,
    refine: bool,
) -> Result<Grid3dResult> {
    if steps == 0 {
        return Err(Error::InvalidInput("steps must be ≥ 1".into()));
    }
    let cost = |n: &[f64]| -> f64 {
        plane_of(n).and_then(|p| cyclic_transfer_cost(&p, cameras, lines)).unwrap_or(f64::INFINITY)
    };
    let cells: Vec<[f64; 3]> = (0..steps.pow(3)).map(|t| bx.cell(steps, t / (steps * steps), (t / steps) % steps, t % steps)).collect();
    let vals: Vec<f64> = cells.par_iter().map(|n| cost(n)).collect();
    let (mut best_i, mut best) = (usize::MAX, f64::INFINITY);
    for (i, v) in vals.iter().enumerate() {
        if *v < best {
            best = *v;
            best_i = i;
        }
    }
    if best_i == usize::MAX {
        return Err(Error::AllInfeasible);
    }
    let mut n = cells[best_i];
    let mut fcost = best;
    if refine {
        let edge = bx.cell_size(steps).iter().copied().fold(0.0, f64::max).max(1e-6) * 0.5;
        let m = NelderMead { edge, max_iters: 2000, tol: 1e-16, ..Default::default() }.minimize(&n, |x| cost(x));
        n = [m.x[0], m.x[1], m.x[2]];
        fcost = m.f;
    }
    Ok(Grid3dResult { plane: plane_of(&n)?.normalized(), n, grid_cost: best, cost: fcost })
}

/// 3D-search baseline: plane from the box search, IAC of camera 1 from the
/// five transferred points, stratified upgrade.
pub fn calibrate_grid3d(recon: &ProjectiveReconstruction, bx: &PlaneBox, steps: usize, threads: Option<usize>) -> Result<UpgradeResult> {
    recon.validate()?;
    if recon.cameras.len() < 5 {
        return Err(Error::UnderConstrained("the cyclic-transfer baseline selects lines from five cameras".into()));
    }
    let lines = default_selected_lines(&recon.cameras, [0, 1, 2, 3, 4])?;
    let found = with_threads(threads, || plane_grid_search_3d(&recon.cameras, &lines, bx, steps, true))?;
    let p1 = recon.cameras[0].preconditioned();
    let w = normalize_iac(&transferred_conic(&found.plane, &p1, &lines)?)?;
    let h = homography_from_plane_iac(&found.plane, &w, &p1)?;
    let diagnostics = Diagnostics { method: "grid3d".into(), c0: Some(found.cost), ..Default::default() };
    finish_upgrade(recon, h, found.plane, Some(w), diagnostics)
}

/// Symmetric 4×4 dual quadric of planes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DualQuadric {
    pub q: Matrix4<f64>,
}

fn sym_index(i: usize, j: usize) -> usize {
    let (i, j) = if i <= j { (i, j) } else { (j, i) };
    [[0, 1, 2, 3], [1, 4, 5, 6], [2, 5, 7, 8], [3, 6, 8, 9]][i][j]
}

fn quadric_from_params(v: &[f64]) -> Matrix4<f64> {
    Matrix4::from_fn(|i, j| v[sym_index(i, j)])
}

/// Coefficients of (P Q Pᵀ)_{ab} in the ten parameters of Q.
fn diac_row(p: &nalgebra::Matrix3x4<f64>, a: usize, b: usize) -> [f64; 10] {
    let mut row = [0.0; 10];
    for i in 0..4 {
        for j in 0..4 {
            row[sym_index(i, j)] += p[(a, i)] * p[(b, j)];
        }
    }
    row
}

impl DualQuadric {
    /// Linear estimate from square pixels and known principal points.
    pub fn estimate(cameras: &[ProjectionMatrix], principal_points: &[(f64, f64)]) -> Result<Self> {
        if cameras.len() != principal_points.len() {
            return Err(Error::Mismatch("one principal point per camera".into()));
        }
        let mut a = DMatrix::<f64>::zeros((4 * cameras.len()).max(10), 10);
        for (k, (cam, &(u, v))) in cameras.iter().zip(principal_points).enumerate() {
            let n = image_normalization(cam.width, cam.height);
            let s = n[(0, 0)];
            let t = Matrix3::new(s, 0.0, -s * u, 0.0, s, -s * v, 0.0, 0.0, 1.0);
            let p = t * cam.p;
            let p = p / p.norm();
            let rows = [
                diac_row(&p, 0, 1),
                diac_row(&p, 0, 2),
                diac_row(&p, 1, 2),
                {
                    let (r11, r22) = (diac_row(&p, 0, 0), diac_row(&p, 1, 1));
                    std::array::from_fn(|i| r11[i] - r22[i])
                },
            ];
            for (r, row) in rows.iter().enumerate() {
                for (j, val) in row.iter().enumerate() {
                    a[(4 * k + r, j)] = *val;
                }
            }
        }
        let svd = a.svd(false, true);
        let vt = svd.v_t.ok_or_else(|| Error::DegenerateSolution("svd failed".into()))?;
        let mut idx: Vec<usize> = (0..svd.singular_values.len()).collect();
        idx.sort_by(|&x, &y| svd.singular_values[x].total_cmp(&svd.singular_values[y]));
        let (s_min2, s_max) = (svd.singular_values[idx[1]], svd.singular_values[idx[idx.len() - 1]]);
        if !(s_min2 > 1e-9 * s_max) {
            return Err(Error::DegenerateSolution(format!("null space of dimension > 1 (σ9/σ1 = {:.2e})", s_min2 / s_max)));
        }
        let v: Vec<f64> = vt.row(idx[0]).iter().copied().collect();
        Ok(Self { q: quadric_from_params(&v) })
    }

    /// Eigen-decomposition with the eigenvalue of least modulus last and the
    /// sign chosen so that most eigenvalues are positive.
    fn eigen(&self) -> (Vector4<f64>, Matrix4<f64>) {
        let SymmetricEigen { eigenvalues, eigenvectors } = self.q.symmetric_eigen();
        let mut idx: Vec<usize> = (0..4).collect();
        idx.sort_by(|&a, &b| eigenvalues[b].abs().total_cmp(&eigenvalues[a].abs()));
        let sign = if idx[..3].iter().map(|&i| eigenvalues[i].signum()).sum::<f64>() < 0.0 { -1.0 } else { 1.0 };
        let e = Vector4::from_fn(|k, _| sign * eigenvalues[idx[k]]);
        let v = Matrix4::from_fn(|r, k| eigenvectors[(r, idx[k])]);
        (e, v)
    }

    /// Zeroes the eigenvalue of least modulus.
    pub fn enforce_rank3(&self) -> Self {
        let (mut e, v) = self.eigen();
        e[3] = 0.0;
        Self { q: v * Matrix4::from_diagonal(&e) * v.transpose() }
    }

    /// Null vector: the plane at infinity.
    pub fn plane_at_infinity(&self) -> Vector4<f64> {
        self.eigen().1.column(3).into()
    }

    /// H with H·Q·Hᵀ ∝ diag(1,1,1,0); eigenvalues of the wrong sign are
    /// replaced by their moduli and reported.
    pub fn upgrade(&self) -> (Matrix4<f64>, bool) {
        let (e, v) = self.eigen();
        let definite = e[0] > 0.0 && e[1] > 0.0 && e[2] > 0.0;
        let d = Matrix4::from_diagonal(&Vector4::new(1.0 / e[0].abs().sqrt(), 1.0 / e[1].abs().sqrt(), 1.0 / e[2].abs().sqrt(), 1.0));
        (d * v.transpose(), definite)
    }
}

/// Linear DAQ baseline. Principal points default to the image centers.
pub fn calibrate_daq(recon: &ProjectiveReconstruction, principal_points: Option<&[(f64, f64)]>) -> Result<UpgradeResult> {
    recon.validate()?;
    let centers: Vec<(f64, f64)> = recon.cameras.iter().map(|p| (0.5 * p.width, 0.5 * p.height)).collect();
    let pps = principal_points.unwrap_or(&centers);
    let q = DualQuadric::estimate(&recon.cameras, pps)?.enforce_rank3();
    let (h, definite) = q.upgrade();
    let mut warnings = vec![];
    if !definite {
        warnings.push("estimated DAQ is not semidefinite".into());
    }
    let plane = plane_from_real(&q.plane_at_infinity())?;
    let diagnostics = Diagnostics { method: "daq".into(), warnings, ..Default::default() };
    finish_upgrade(recon, h, plane, None, diagnostics)
}

/// The two square-pixel identities of a DIAC, ω*12ω*33 − ω*13ω*23 and
/// ω*33ω*11 − ω*13² − ω*33ω*22 + ω*23², divided by ‖ω*‖²_F.
pub fn diac_square_pixel_residual(omega_star: &Conic) -> (f64, f64) {
    let w = omega_star.matrix();
    let n2 = w.norm_squared();
    if n2 == 0.0 {
        return (0.0, 0.0);
    }
    let r1 = w[(0, 1)] * w[(2, 2)] - w[(0, 2)] * w[(1, 2)];
    let r2 = w[(2, 2)] * w[(0, 0)] - w[(0, 2)] * w[(0, 2)] - w[(2, 2)] * w[(1, 1)] + w[(1, 2)] * w[(1, 2)];
    (r1.norm() / n2, r2.norm() / n2)
}
