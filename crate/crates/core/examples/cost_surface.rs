//! Samples C(z) on the search grid and prints a coarse map of log10 C
//! over the unit disk.
//!
//! cargo run --release --example cost_surface

use slcv::cost::{CostContext, CostWeights};
use slcv::search::{evaluate_grid, grid_argmin, select_triple, GridSpec};
use slcv::simkit::{make_scene, SceneSpec};
use slcv::upgrade::plane_from_real;
use slcv::variety::z_for_plane;

fn main() -> slcv::error::Result<()> {
    let (truth, recon) = make_scene(&SceneSpec { seed: 14, ..Default::default() })?;
    let triple = select_triple(&recon.cameras, [0, 1, 2])?;
    let ctx = CostContext::new(&recon.cameras, triple, CostWeights::default())?;
    let spec = GridSpec::new(24, 48)?;
    let evals = evaluate_grid(&ctx, spec);
    let best = grid_argmin(&evals)?;
    let zt = z_for_plane(ctx.triple(), &plane_from_real(&truth.plane_at_infinity)?);
    println!("{} samples, grid minimum C = {:.2e} at z = {:.3}", evals.len(), best.cost, best.z0);
    if let Some(zt) = zt {
        println!("true parameter z* = {zt:.3}");
    }

    // one character per disk sample, rows by radius, columns by angle
    let shade = |c: f64| match c.log10() {
        l if !l.is_finite() => ' ',
        l if l < -2.5 => '#',
        l if l < -2.0 => '%',
        l if l < -1.5 => '+',
        l if l < -1.0 => '-',
        _ => '.',
    };
    for j in 1..=spec.n {
        let row: String = evals.iter().filter(|(s, _)| s.disk && s.j == j).map(|(_, e)| shade(e.cost)).collect();
        println!("{:>5.2} {row}", j as f64 / spec.n as f64);
    }
    Ok(())
}
