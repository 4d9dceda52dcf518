//! SLCV against the dual absolute quadric baseline when principal points
//! drift away from the image center.
//!
//! cargo run --release --example compare_methods

use slcv::search::{calibrate_daq, calibrate_slcv, SlcvConfig};
use slcv::simkit::{make_scene, score, SceneSpec};

fn main() -> slcv::error::Result<()> {
    println!("pp offset (px)   SLCV focal err   DAQ focal err");
    for offset in [0.0, 40.0, 80.0, 160.0] {
        let spec = SceneSpec { n_cameras: 8, pp_offset_range: [offset, offset], seed: 5, ..Default::default() };
        let (truth, recon) = make_scene(&spec)?;
        let slcv = score(&calibrate_slcv(&recon, &SlcvConfig::default())?, &truth)?;
        let daq = match calibrate_daq(&recon, None) {
            Ok(r) => format!("{:.2e}", score(&r, &truth)?.max_focal_error()),
            Err(e) => format!("failed: {e}"),
        };
        println!("{offset:>14.0}   {:>14.2e}   {daq:>13}", slcv.max_focal_error());
    }
    Ok(())
}
