//! The four cost terms on hand-made conics and on the IACs induced by
//! the true and a perturbed plane at infinity.
//!
//! cargo run --release --example cost_terms

use nalgebra::{Matrix3, Vector4};
use slcv::cost::{c0, c1, c2, c3, c4, iac_of_intrinsics, normalize_iac, CostContext, CostWeights};
use slcv::geometry::Conic;
use slcv::search::select_triple;
use slcv::simkit::{make_scene, SceneSpec};
use slcv::upgrade::plane_from_real;

fn main() -> slcv::error::Result<()> {
    let k = Matrix3::new(1000.0, 0.0, 600.0, 0.0, 1000.0, 500.0, 0.0, 0.0, 1.0);
    let square = iac_of_intrinsics(&k)?;
    let mut skewed = k;
    skewed[(0, 1)] = 30.0;
    skewed[(1, 1)] = 1100.0;
    let skewed = iac_of_intrinsics(&skewed)?;
    let indefinite = normalize_iac(&Conic::from_real(Matrix3::from_diagonal(&nalgebra::Vector3::new(1.0, -1.0, 1.0)))?)?;
    println!("              C1        C2        C3        C4");
    for (name, w) in [("square", &square), ("skewed", &skewed), ("indefinite", &indefinite)] {
        let c4 = c4(w, 1280.0, 960.0).map(|v| format!("{v:.2e}")).unwrap_or("-".into());
        let c3 = c3(w).map(|v| format!("{v:.2e}")).unwrap_or("-".into());
        println!("{name:<11} {:.2e}  {:.2e}  {c3:>8}  {c4:>8}", c1(w), c2(w));
    }

    let (truth, recon) = make_scene(&SceneSpec { seed: 4, ..Default::default() })?;
    let ctx = CostContext::new(&recon.cameras, select_triple(&recon.cameras, [0, 1, 2])?, CostWeights::default())?;
    for (name, p) in [("true π∞", truth.plane_at_infinity), ("perturbed", truth.plane_at_infinity + Vector4::new(0.02, 0.0, -0.01, 0.0))] {
        let b = c0(&plane_from_real(&p)?, &ctx);
        println!("{name}: C0 = {:.2e}", b.c0);
        for (i, cc) in b.per_camera.iter().enumerate() {
            println!("  camera {i}: terms {:.1e} {:.1e} {:.1e} {:.1e}", cc.terms[0], cc.terms[1], cc.terms[2], cc.terms[3]);
        }
    }
    Ok(())
}
