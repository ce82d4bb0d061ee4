//! Ground-truth dense correspondence and covisibility generation, geometric
//! pair sampling, flow evaluation, and the loss / refinement kernels used to
//! train unified flow-and-matching models.
//!
//! Modules:
//! - [`geometry`]: pinhole cameras, camera-to-world poses, bilinear sampling.
//! - [`covis`]: flow + covisibility + supervision masks for static scenes,
//!   scene-flow pairs and rigid posed objects.
//! - [`sampler`]: voxel visibility, wide-baseline pair sampling and pair
//!   quality filters.
//! - [`objective`]: robust flow loss, covisibility BCE, refinement targets.
//! - [`refine`]: local refinement by classification over feature maps.
//! - [`metrics`]: end-point error, outlier rates, KITTI F1, pose AUC.
//! - [`io`]: file formats, manifests, configs, warping and epoch plans.

pub mod covis;
pub mod error;
pub mod flow;
pub mod geometry;
pub mod grid;
pub mod io;
pub mod metrics;
pub mod objective;
pub mod refine;
pub mod sampler;
mod sum;

pub use error::{Error, Result};
pub use flow::FlowField;
pub use grid::Grid;
