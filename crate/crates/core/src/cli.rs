//! Command-line front end: file formats and the `calibrate`, `simulate`,
//! `cost-surface` and `evaluate` commands.
//!
//! Exit codes: 0 on success, 1 for input or usage errors, 2 when the input
//! is valid but no calibration can be produced.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use nalgebra::{Matrix3, Matrix3x4, Matrix4, Vector3, Vector4};
use serde::{Deserialize, Serialize};

use crate::cost::{CameraCost, CostContext, CostWeights};
use crate::error::{Error, Result};
use crate::geometry::ProjectionMatrix;
use crate::reconstruction::{Observation, ProjectiveReconstruction};
use crate::search::{
    calibrate_daq, calibrate_grid3d, calibrate_slcv, evaluate_grid, select_triple, with_threads, GridSpec, PlaneBox,
    SlcvConfig, THREADS_ENV,
};
use crate::simkit::{make_scene, score, GroundTruth, SceneSpec, ScoreReport};
use crate::upgrade::{plane_from_real, real_plane, Diagnostics, MetricCamera, SearchSummary, UpgradeResult};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INPUT: i32 = 1;
pub const EXIT_INFEASIBLE: i32 = 2;

fn rows<const R: usize, const C: usize>(m: impl Fn(usize, usize) -> f64) -> [[f64; C]; R] {
    std::array::from_fn(|i| std::array::from_fn(|j| m(i, j)))
}

/// Inverse of [`finite`]: null reads back as +∞.
fn infinite(x: Option<f64>) -> f64 {
    x.unwrap_or(f64::INFINITY)
}

fn finite(x: f64) -> Option<f64> {
    x.is_finite().then_some(x)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CameraEntry {
    #[serde(rename = "P")]
    pub p: [[f64; 4]; 3],
    pub width: f64,
    pub height: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricCameraEntry {
    #[serde(rename = "K")]
    pub k: [[f64; 3]; 3],
    #[serde(rename = "R")]
    pub r: [[f64; 3]; 3],
    #[serde(rename = "C")]
    pub c: [f64; 3],
}

impl From<&MetricCamera> for MetricCameraEntry {
    fn from(m: &MetricCamera) -> Self {
        Self { k: rows(|i, j| m.k[(i, j)]), r: rows(|i, j| m.r[(i, j)]), c: [m.c.x, m.c.y, m.c.z] }
    }
}

impl From<&MetricCameraEntry> for MetricCamera {
    fn from(e: &MetricCameraEntry) -> Self {
        Self {
            k: Matrix3::from_fn(|i, j| e.k[i][j]),
            r: Matrix3::from_fn(|i, j| e.r[i][j]),
            c: Vector3::from(e.c),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruthBlock {
    pub cameras: Vec<MetricCameraEntry>,
    pub points: Vec<[f64; 3]>,
    pub triplets: Vec<[usize; 3]>,
    pub plane_at_infinity: [f64; 4],
    pub scramble: [[f64; 4]; 4],
}

impl From<&GroundTruth> for GroundTruthBlock {
    fn from(t: &GroundTruth) -> Self {
        Self {
            cameras: t.cameras.iter().map(Into::into).collect(),
            points: t.points.iter().map(|x| [x.x, x.y, x.z]).collect(),
            triplets: t.triplets.clone(),
            plane_at_infinity: t.plane_at_infinity.into(),
            scramble: rows(|i, j| t.scramble[(i, j)]),
        }
    }
}

impl From<&GroundTruthBlock> for GroundTruth {
    fn from(b: &GroundTruthBlock) -> Self {
        Self {
            cameras: b.cameras.iter().map(Into::into).collect(),
            points: b.points.iter().map(|&x| Vector3::from(x)).collect(),
            triplets: b.triplets.clone(),
            plane_at_infinity: Vector4::from(b.plane_at_infinity),
            scramble: Matrix4::from_fn(|i, j| b.scramble[i][j]),
        }
    }
}

/// Projective reconstruction on disk. Matrices are row-major and
/// homogeneous vectors are stored as given.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReconstructionFile {
    pub cameras: Vec<CameraEntry>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub points: Vec<[f64; 4]>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub observations: Vec<Observation>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub triplets: Vec<[usize; 3]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ground_truth: Option<GroundTruthBlock>,
}

impl ReconstructionFile {
    pub fn from_reconstruction(r: &ProjectiveReconstruction, truth: Option<&GroundTruth>) -> Self {
        Self {
            cameras: r
                .cameras
                .iter()
                .map(|c| CameraEntry { p: rows(|i, j| c.p[(i, j)]), width: c.width, height: c.height })
                .collect(),
            points: r.points.iter().map(|&x| x.into()).collect(),
            observations: r.observations.clone(),
            triplets: r.triplets.clone(),
            ground_truth: truth.map(Into::into),
        }
    }

    /// Validated reconstruction.
    pub fn reconstruction(&self) -> Result<ProjectiveReconstruction> {
        let r = ProjectiveReconstruction {
            cameras: self
                .cameras
                .iter()
                .map(|c| ProjectionMatrix::new(Matrix3x4::from_fn(|i, j| c.p[i][j]), c.width, c.height))
                .collect(),
            points: self.points.iter().map(|&x| Vector4::from(x)).collect(),
            observations: self.observations.clone(),
            triplets: self.triplets.clone(),
        };
        r.validate()?;
        Ok(r)
    }

    pub fn ground_truth(&self) -> Option<GroundTruth> {
        self.ground_truth.as_ref().map(Into::into)
    }

    pub fn read(path: &Path) -> Result<Self> {
        read_json(path)
    }
}

/// Cost terms of one camera; non-finite values are stored as null.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CostEntry {
    pub terms: [Option<f64>; 4],
    pub weighted: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CameraResult {
    #[serde(flatten)]
    pub camera: MetricCameraEntry,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cost: Option<CostEntry>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Metrics {
    pub rms: Option<f64>,
    pub sigma: Option<f64>,
    pub mu: Option<f64>,
    pub sigma_mu: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchEntry {
    pub z0: [f64; 2],
    pub z1: [f64; 2],
    pub grid: [usize; 2],
    pub grid_cost: Option<f64>,
    pub cost: Option<f64>,
    pub iterations: usize,
    pub converged: bool,
}

impl From<&SearchEntry> for SearchSummary {
    fn from(s: &SearchEntry) -> Self {
        Self {
            z0: s.z0,
            z1: s.z1,
            grid: s.grid,
            grid_cost: infinite(s.grid_cost),
            cost: infinite(s.cost),
            iterations: s.iterations,
            converged: s.converged,
        }
    }
}

impl From<&SearchSummary> for SearchEntry {
    fn from(s: &SearchSummary) -> Self {
        Self {
            z0: s.z0,
            z1: s.z1,
            grid: s.grid,
            grid_cost: finite(s.grid_cost),
            cost: finite(s.cost),
            iterations: s.iterations,
            converged: s.converged,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultFile {
    pub method: String,
    #[serde(rename = "H")]
    pub h: [[f64; 4]; 4],
    pub plane: [f64; 4],
    pub cameras: Vec<CameraResult>,
    pub metrics: Metrics,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub search: Option<SearchEntry>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub triple: Option<[usize; 3]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c0: Option<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
}

impl ResultFile {
    pub fn from_result(r: &UpgradeResult) -> Result<Self> {
        let d = &r.diagnostics;
        let cameras = r
            .cameras
            .iter()
            .enumerate()
            .map(|(i, c)| CameraResult {
                camera: c.into(),
                cost: d.per_camera_cost.get(i).map(|cc| CostEntry {
                    terms: cc.terms.map(finite),
                    weighted: finite(cc.weighted),
                }),
            })
            .collect();
        let (sigma, mu, sigma_mu) = match r.segment_stats {
            Some((s, m, q)) => (Some(s), Some(m), Some(q)),
            None => (None, None, None),
        };
        Ok(Self {
            method: d.method.clone(),
            h: rows(|i, j| r.h[(i, j)]),
            plane: real_plane(&r.plane)?.into(),
            cameras,
            metrics: Metrics { rms: r.reprojection_rms, sigma, mu, sigma_mu },
            search: d.search.as_ref().map(Into::into),
            triple: d.triple,
            c0: d.c0.and_then(finite),
            warnings: d.warnings.clone(),
        })
    }

    /// Upgrade result carrying the stored cameras, plane and metrics.
    pub fn to_result(&self) -> Result<UpgradeResult> {
        Ok(UpgradeResult {
            h: Matrix4::from_fn(|i, j| self.h[i][j]),
            cameras: self.cameras.iter().map(|c| (&c.camera).into()).collect(),
            plane: plane_from_real(&Vector4::from(self.plane))?,
            iac1: None,
            reprojection_rms: self.metrics.rms,
            segment_stats: match (self.metrics.sigma, self.metrics.mu, self.metrics.sigma_mu) {
                (Some(s), Some(m), Some(q)) => Some((s, m, q)),
                _ => None,
            },
            diagnostics: Diagnostics {
                method: self.method.clone(),
                triple: self.triple,
                search: self.search.as_ref().map(Into::into),
                per_camera_cost: self
                    .cameras
                    .iter()
                    .map_while(|c| c.cost.as_ref())
                    .map(|e| CameraCost { terms: e.terms.map(infinite), weighted: infinite(e.weighted) })
                    .collect(),
                c0: self.c0,
                warnings: self.warnings.clone(),
            },
        })
    }

    pub fn read(path: &Path) -> Result<Self> {
        read_json(path)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Slcv,
    Daq,
    Grid3d,
}

/// Settings read from a TOML file with `--config`. Flags override them.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    pub grid: Option<[usize; 2]>,
    pub weights: Option<[f64; 4]>,
    pub method: Option<Method>,
    #[serde(rename = "box")]
    pub bbox: Option<[f64; 6]>,
    pub steps: Option<usize>,
    pub triple: Option<[usize; 3]>,
    pub threads: Option<usize>,
    pub scene: Option<SceneSpec>,
}

impl Config {
    pub fn read(path: &Path) -> Result<Self> {
        toml::from_str(&std::fs::read_to_string(path)?).map_err(|e| Error::InvalidInput(format!("{}: {e}", path.display())))
    }
}

fn list<const N: usize, T: std::str::FromStr>(s: &str) -> std::result::Result<[T; N], String> {
    let v: Vec<T> = s.split(',').map(|x| x.trim().parse::<T>().map_err(|_| format!("cannot parse {x:?}"))).collect::<std::result::Result<_, _>>()?;
    v.try_into().map_err(|_| format!("expected {N} comma-separated values"))
}

#[derive(Debug, Parser)]
#[command(name = "slcv", version, about = "Euclidean upgrading of projective reconstructions of square-pixel cameras")]
struct Cli {
    /// TOML file with default settings.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct SearchArgs {
    /// Grid size N,M.
    #[arg(long, value_parser = list::<2, usize>)]
    grid: Option<[usize; 2]>,
    /// Cost weights g1,g2,g3,g4.
    #[arg(long, value_parser = list::<4, f64>)]
    weights: Option<[f64; 4]>,
    /// Camera indices i,j,k of the triple.
    #[arg(long, value_parser = list::<3, usize>)]
    triple: Option<[usize; 3]>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Compute a Euclidean upgrade and write a result file.
    Calibrate {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        output: Option<PathBuf>,
        #[command(flatten)]
        search: SearchArgs,
        #[arg(long, value_enum)]
        method: Option<Method>,
        /// Plane search box xmin,xmax,ymin,ymax,zmin,zmax for grid3d.
        #[arg(long = "box", value_parser = list::<6, f64>)]
        bbox: Option<[f64; 6]>,
        /// Cells per axis for grid3d.
        #[arg(long)]
        steps: Option<usize>,
    },
    /// Write a synthetic scene with ground truth.
    Simulate {
        #[arg(long)]
        output: Option<PathBuf>,
        #[arg(long)]
        cameras: Option<usize>,
        #[arg(long)]
        noise: Option<f64>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        bars: Option<usize>,
        #[arg(long)]
        points: Option<usize>,
    },
    /// Write the sampled cost surface as CSV.
    CostSurface {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        output: Option<PathBuf>,
        #[command(flatten)]
        search: SearchArgs,
    },
    /// Compare result files against the ground truth of a scene.
    Evaluate {
        /// Scene file with a ground_truth block.
        #[arg(long)]
        input: PathBuf,
        /// Result files to score.
        #[arg(long, required = true, num_args = 1..)]
        result: Vec<PathBuf>,
        /// JSON report.
        #[arg(long)]
        output: Option<PathBuf>,
    },
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::InvalidInput(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| Error::InvalidInput(format!("{}: {e}", path.display())))
}

fn write_out(path: Option<&Path>, text: &str) -> Result<()> {
    match path {
        Some(p) => std::fs::write(p, text)?,
        None => print!("{text}"),
    }
    Ok(())
}

fn threads(cfg: &Config) -> Option<usize> {
    cfg.threads.or_else(|| std::env::var(THREADS_ENV).ok().and_then(|v| v.parse().ok()))
}

fn slcv_config(search: &SearchArgs, cfg: &Config) -> Result<SlcvConfig> {
    let [n, m] = search.grid.or(cfg.grid).unwrap_or([50, 50]);
    Ok(SlcvConfig {
        grid: GridSpec::new(n, m)?,
        weights: CostWeights::new(search.weights.or(cfg.weights).unwrap_or([1.0; 4]))?,
        triple: search.triple.or(cfg.triple),
        threads: threads(cfg),
        ..Default::default()
    })
}

/// Cost-surface CSV: one row per grid sample in generation order.
pub fn cost_surface_csv(recon: &ProjectiveReconstruction, config: &SlcvConfig) -> Result<String> {
    let nc = recon.cameras.len();
    let requested = config.triple.unwrap_or([0, 1, 2]);
    if nc < 3 || requested.iter().any(|&i| i >= nc) {
        return Err(Error::InvalidInput(format!("triple {requested:?} needs cameras that exist ({nc} given)")));
    }
    let triple = select_triple(&recon.cameras, requested)?;
    let ctx = CostContext::new(&recon.cameras, triple, config.weights)?;
    let evals = with_threads(config.threads, || evaluate_grid(&ctx, config.grid));
    let mut s = String::from("j,k,re_z,im_z,disk_flag,cost,cost_chi1,cost_chi2\n");
    for (g, e) in &evals {
        writeln!(
            s,
            "{},{},{},{},{},{},{},{}",
            g.j, g.k, g.z.re, g.z.im, g.disk as u8, e.cost, e.plane_costs[0], e.plane_costs[1]
        )
        .expect("writing to a String");
    }
    Ok(s)
}

fn mean_std(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let m = v.iter().sum::<f64>() / n;
    (m, (v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / n).sqrt())
}

#[derive(Debug, Clone, Serialize)]
struct EvaluationRow {
    file: String,
    method: String,
    focal_rel_error_mean: f64,
    focal_rel_error_std: f64,
    pp_error_mean: f64,
    pp_error_std: f64,
    max_relative_skew: f64,
    max_aspect_error: f64,
    plane_angle: f64,
    reprojection_rms: Option<f64>,
    sigma_mu: Option<f64>,
}

fn evaluation_row(file: &Path, method: &str, s: &ScoreReport) -> EvaluationRow {
    let (fm, fs) = mean_std(&s.focal_rel_error);
    let (pm, ps) = mean_std(&s.pp_error);
    EvaluationRow {
        file: file.display().to_string(),
        method: method.to_string(),
        focal_rel_error_mean: fm,
        focal_rel_error_std: fs,
        pp_error_mean: pm,
        pp_error_std: ps,
        max_relative_skew: s.max_skew(),
        max_aspect_error: s.max_aspect_error(),
        plane_angle: s.plane_angle,
        reprojection_rms: s.reprojection_rms,
        sigma_mu: s.sigma_mu,
    }
}

fn opt(x: Option<f64>) -> String {
    x.map_or("-".into(), |v| format!("{v:.3e}"))
}

fn execute(cli: Cli) -> Result<()> {
    let cfg = match &cli.config {
        Some(p) => Config::read(p)?,
        None => Config::default(),
    };
    match cli.command {
        Command::Calibrate { input, output, search, method, bbox, steps } => {
            let recon = ReconstructionFile::read(&input)?.reconstruction()?;
            let result = match method.or(cfg.method).unwrap_or(Method::Slcv) {
                Method::Slcv => calibrate_slcv(&recon, &slcv_config(&search, &cfg)?)?,
                Method::Daq => calibrate_daq(&recon, None)?,
                Method::Grid3d => {
                    let b = bbox.or(cfg.bbox).ok_or_else(|| Error::InvalidInput("grid3d needs --box".into()))?;
                    calibrate_grid3d(&recon, &PlaneBox::new(b)?, steps.or(cfg.steps).unwrap_or(20), threads(&cfg))?
                }
            };
            let file = ResultFile::from_result(&result)?;
            write_out(output.as_deref(), &(serde_json::to_string_pretty(&file)? + "\n"))
        }
        Command::Simulate { output, cameras, noise, seed, bars, points } => {
            let mut spec = cfg.scene.clone().unwrap_or_default();
            spec.n_cameras = cameras.unwrap_or(spec.n_cameras);
            spec.noise_sigma = noise.unwrap_or(spec.noise_sigma);
            spec.seed = seed.unwrap_or(spec.seed);
            spec.n_bar_triplets = bars.unwrap_or(spec.n_bar_triplets);
            spec.n_points = points.unwrap_or(spec.n_points);
            let (truth, recon) = make_scene(&spec)?;
            let file = ReconstructionFile::from_reconstruction(&recon, Some(&truth));
            write_out(output.as_deref(), &(serde_json::to_string_pretty(&file)? + "\n"))
        }
        Command::CostSurface { input, output, search } => {
            let recon = ReconstructionFile::read(&input)?.reconstruction()?;
            write_out(output.as_deref(), &cost_surface_csv(&recon, &slcv_config(&search, &cfg)?)?)
        }
        Command::Evaluate { input, result, output } => {
            let truth = ReconstructionFile::read(&input)?
                .ground_truth()
                .ok_or_else(|| Error::InvalidInput(format!("{} has no ground_truth block", input.display())))?;
            let mut table = String::from("method   file  focal err mean/std  pp err mean/std (px)  skew  aspect  plane  rms (px)  sigma/mu\n");
            let mut report = vec![];
            for path in &result {
                let r = ResultFile::read(path)?;
                let s = score(&r.to_result()?, &truth)?;
                let row = evaluation_row(path, &r.method, &s);
                writeln!(
                    table,
                    "{:<8} {}  {:.3e}/{:.3e}  {:.3e}/{:.3e}  {:.1e}  {:.1e}  {:.1e}  {}  {}",
                    row.method,
                    row.file,
                    row.focal_rel_error_mean,
                    row.focal_rel_error_std,
                    row.pp_error_mean,
                    row.pp_error_std,
                    row.max_relative_skew,
                    row.max_aspect_error,
                    row.plane_angle,
                    opt(row.reprojection_rms),
                    opt(row.sigma_mu)
                )
                .expect("writing to a String");
                report.push(row);
            }
            print!("{table}");
            if let Some(p) = output {
                std::fs::write(p, serde_json::to_string_pretty(&report)? + "\n")?;
            }
            Ok(())
        }
    }
}

/// Parses `args` (including the program name) and runs the command.
/// Returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_INPUT } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    match execute(cli) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_infeasible() {
                EXIT_INFEASIBLE
            } else {
                EXIT_INPUT
            }
        }
    }
}
