//! Euclidean upgrade of a projective reconstruction with the six-line
//! conic variety search, scored against the ground truth.
//!
//! cargo run --release --example calibrate_slcv [seed] [cameras] [noise]

use slcv::search::{calibrate_slcv, SlcvConfig};
use slcv::simkit::{make_scene, score, SceneSpec};

fn main() -> slcv::error::Result<()> {
    let mut args = std::env::args().skip(1);
    let seed = args.next().and_then(|s| s.parse().ok()).unwrap_or(3);
    let n_cameras = args.next().and_then(|s| s.parse().ok()).unwrap_or(5);
    let noise_sigma = args.next().and_then(|s| s.parse().ok()).unwrap_or(0.0);
    let (truth, recon) = make_scene(&SceneSpec { seed, n_cameras, noise_sigma, ..Default::default() })?;

    let result = calibrate_slcv(&recon, &SlcvConfig::default())?;
    let search = result.diagnostics.search.as_ref().expect("slcv records its search");
    println!("grid start z0 = {:.4}{:+.4}i  C = {:.2e}", search.z0[0], search.z0[1], search.grid_cost);
    println!("refined   z1 = {:.4}{:+.4}i  C = {:.2e}  ({} iterations)", search.z1[0], search.z1[1], search.cost, search.iterations);

    let s = score(&result, &truth)?;
    for (i, (cam, t)) in result.cameras.iter().zip(&truth.cameras).enumerate() {
        println!("camera {i}: focal {:8.2} (true {:8.2})  skew {:+.1e}  aspect {:.6}", cam.focal(), t.focal(), cam.relative_skew(), cam.aspect());
    }
    println!("max focal error {:.2e}, plane angle {:.2e} rad", s.max_focal_error(), s.plane_angle);
    if let Some(q) = s.sigma_mu {
        println!("bar length sigma/mu {q:.2e}");
    }
    Ok(())
}
