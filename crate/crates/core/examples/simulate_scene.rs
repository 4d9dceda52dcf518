//! Generates a synthetic scene and checks the ground truth against it.
//!
//! cargo run --release --example simulate_scene

use slcv::simkit::{make_scene, SceneSpec};
use slcv::upgrade::{plane_from_real, reprojection_rms};
use slcv::variety::{eval_g, CameraTriple};

fn main() -> slcv::error::Result<()> {
    let spec = SceneSpec { n_cameras: 6, noise_sigma: 0.0, seed: 21, ..Default::default() };
    let (truth, recon) = make_scene(&spec)?;
    println!("{} cameras, {} points, {} observations, {} bar triplets", recon.cameras.len(), recon.points.len(), recon.observations.len(), recon.triplets.len());
    for (i, cam) in truth.cameras.iter().enumerate() {
        let (u, v) = cam.principal_point();
        println!("camera {i}: focal {:.1} px, principal point ({u:.1}, {v:.1})", cam.focal());
    }
    println!("reprojection RMS of the projective cameras: {:.2e} px", reprojection_rms(&recon, &recon.camera_matrices())?);

    let triple = CameraTriple::new([recon.cameras[0], recon.cameras[1], recon.cameras[2]])?;
    let pi = plane_from_real(&truth.plane_at_infinity)?;
    let off = plane_from_real(&(truth.plane_at_infinity + nalgebra::Vector4::new(0.0, 0.05, 0.0, 0.0)))?;
    println!("|G| at the true plane at infinity: {:.2e}", eval_g(&pi, &triple)?.norm());
    println!("|G| at a nearby plane:             {:.2e}", eval_g(&off, &triple)?.norm());
    Ok(())
}
