//! Writes a scene and a calibration to JSON in the CLI's file formats and
//! reads them back.
//!
//! cargo run --release --example file_io [directory]

use std::path::PathBuf;

use slcv::cli::{ReconstructionFile, ResultFile};
use slcv::search::{calibrate_slcv, SlcvConfig};
use slcv::simkit::{make_scene, score, SceneSpec};

fn main() -> slcv::error::Result<()> {
    let dir = std::env::args().nth(1).map(PathBuf::from).unwrap_or_else(std::env::temp_dir);
    let (truth, recon) = make_scene(&SceneSpec { seed: 9, ..Default::default() })?;

    let scene_path = dir.join("slcv_scene.json");
    std::fs::write(&scene_path, serde_json::to_string_pretty(&ReconstructionFile::from_reconstruction(&recon, Some(&truth)))?)?;
    let scene = ReconstructionFile::read(&scene_path)?;
    let loaded = scene.reconstruction()?;
    println!("wrote and reread {} ({} cameras, identical: {})", scene_path.display(), loaded.cameras.len(), loaded == recon);

    let result_path = dir.join("slcv_result.json");
    let result = calibrate_slcv(&loaded, &SlcvConfig::default())?;
    std::fs::write(&result_path, serde_json::to_string_pretty(&ResultFile::from_result(&result)?)?)?;
    let back = ResultFile::read(&result_path)?.to_result()?;
    let truth = scene.ground_truth().expect("simulated scenes carry ground truth");
    println!("wrote {}, max focal error after reload {:.2e}", result_path.display(), score(&back, &truth)?.max_focal_error());
    Ok(())
}
