//! The exhaustive 3D plane search baseline over a box of plane
//! coordinates (n, 1).
//!
//! cargo run --release --example grid3d_baseline

use std::time::Instant;

use slcv::search::{calibrate_grid3d, calibrate_slcv, PlaneBox, SlcvConfig};
use slcv::simkit::{make_scene, score, SceneSpec};

fn main() -> slcv::error::Result<()> {
    let (truth, recon) = make_scene(&SceneSpec { seed: 8, ..Default::default() })?;
    let p = truth.plane_at_infinity / truth.plane_at_infinity[3];
    let bx = PlaneBox::new([p.x - 0.3, p.x + 0.3, p.y - 0.3, p.y + 0.3, p.z - 0.3, p.z + 0.3])?;

    let t = Instant::now();
    let grid = calibrate_grid3d(&recon, &bx, 20, None)?;
    let grid_time = t.elapsed();
    let t = Instant::now();
    let slcv = calibrate_slcv(&recon, &SlcvConfig::default())?;
    let slcv_time = t.elapsed();

    let (g, s) = (score(&grid, &truth)?, score(&slcv, &truth)?);
    println!("grid3d: focal err {:.2e}, plane angle {:.2e}, {:.2?}", g.max_focal_error(), g.plane_angle, grid_time);
    println!("slcv:   focal err {:.2e}, plane angle {:.2e}, {:.2?}", s.max_focal_error(), s.plane_angle, slcv_time);
    Ok(())
}
