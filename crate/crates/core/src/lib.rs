//! Euclidean upgrading of projective reconstructions from square-pixel
//! cameras with arbitrarily varying focal lengths and principal points.
//!
//! The plane at infinity is searched on the variety of planes that meet
//! the isotropic lines of three cameras in six points on a conic. Each
//! point of that variety is reached from a complex parameter z, so the
//! search is two-dimensional: [`search::calibrate_slcv`] samples z on a
//! grid, refines the best samples and upgrades the cameras.
//! [`simkit`] builds synthetic scenes with ground truth, and [`cli`] holds
//! the file formats and the `slcv` command line.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod cost;
pub mod error;
pub mod geometry;
pub mod numeric;
pub mod optim;
pub mod reconstruction;
pub mod search;
pub mod simkit;
pub mod upgrade;
pub mod variety;

pub use error::{Error, Result};
