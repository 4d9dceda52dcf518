//! The variety of candidate planes: the quintic G, its triple point at a
//! principal plane, and the two candidate planes for a given z.
//!
//! cargo run --release --example candidate_planes

use nalgebra::Vector4;
use slcv::geometry::Plane;
use slcv::numeric::{complex_homogeneous_angle, C64};
use slcv::simkit::{make_scene, SceneSpec};
use slcv::upgrade::plane_from_real;
use slcv::variety::{candidate_planes, eval_g, quintic_on_line, restricted_quintic, z_for_plane, CameraTriple};

fn main() -> slcv::error::Result<()> {
    let (truth, recon) = make_scene(&SceneSpec { n_cameras: 3, seed: 2, ..Default::default() })?;
    let tr = CameraTriple::new([recon.cameras[0], recon.cameras[1], recon.cameras[2]])?;
    println!("principal planes generic: {:?}", tr.generic());

    let alpha = tr.principal_planes()[0].normalized();
    let beta = Plane::from_real(Vector4::new(0.2, -0.5, 0.7, 0.4))?.normalized();
    let (coef, _) = restricted_quintic(alpha.coords(), beta.coords(), &tr)?;
    println!("G on a pencil through the first principal plane, λ⁵ … μ⁵:");
    for (i, a) in coef.iter().enumerate() {
        println!("  λ^{} μ^{}: {:.3e}", 5 - i, i, a.norm());
    }

    let pi = plane_from_real(&truth.plane_at_infinity)?;
    let through = plane_from_real(&Vector4::new(0.3, 0.1, -0.6, 1.0))?;
    let roots = quintic_on_line(&pi, &through, &tr)?;
    println!("the pencil through π∞ and another plane meets G in {} distinct planes", roots.len());
    for r in &roots {
        println!("  |G| = {:.1e}, angle to π∞ {:.2e}", eval_g(&r.normalized(), &tr).map(|g| g.norm()).unwrap_or(f64::NAN), complex_homogeneous_angle(r.coords().as_slice(), pi.coords().as_slice()));
    }

    let zt = z_for_plane(&tr, &pi).expect("π∞ has a parameter");
    for z in [zt, C64::new(0.5, -0.3)] {
        let pair = candidate_planes(&tr, z)?;
        let d = pair.chi.map(|c| complex_homogeneous_angle(c.coords().as_slice(), pi.coords().as_slice()));
        println!("z = {z:.3}: conjugate pair {}, angles to π∞ {:.2e} / {:.2e}", pair.conjugate_pair, d[0], d[1]);
    }
    Ok(())
}
