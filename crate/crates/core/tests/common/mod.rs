#![allow(dead_code)]

use nalgebra::Vector4;
use slcv::geometry::Plane;
use slcv::reconstruction::ProjectiveReconstruction;
use slcv::simkit::{make_scene, GroundTruth, SceneSpec};
use slcv::variety::CameraTriple;

pub fn scene(seed: u64, n_cameras: usize) -> (GroundTruth, ProjectiveReconstruction) {
    make_scene(&SceneSpec { seed, n_cameras, ..Default::default() }).expect("scene")
}

pub fn triple(recon: &ProjectiveReconstruction) -> CameraTriple {
    CameraTriple::new([recon.cameras[0], recon.cameras[1], recon.cameras[2]]).expect("triple")
}

pub fn true_plane(truth: &GroundTruth) -> Plane {
    Plane::from_real(truth.plane_at_infinity).expect("plane")
}

/// Plane through three real points.
pub fn plane_through(a: &Vector4<f64>, b: &Vector4<f64>, c: &Vector4<f64>) -> Vector4<f64> {
    let m = nalgebra::Matrix4::from_rows(&[a.transpose(), b.transpose(), c.transpose(), nalgebra::RowVector4::zeros()]);
    let svd = m.svd(false, true);
    let vt = svd.v_t.expect("svd");
    let (i, _) = svd.singular_values.iter().enumerate().min_by(|x, y| x.1.total_cmp(y.1)).expect("values");
    vt.row(i).transpose()
}

/// Prints one result line and returns `pass`.
pub fn report(id: u32, name: &str, pass: bool, detail: &str) -> bool {
    println!("criterion {id:>2} {:<34} {}  {detail}", name, if pass { "PASS" } else { "FAIL" });
    pass
}
