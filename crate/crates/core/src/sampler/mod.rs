//! Geometric pair sampling and pair-quality filtering.
//!
//! [`voxel`] builds an occupancy grid and per-camera visibility, [`pair`]
//! draws angle-controlled pairs from it, [`kubric`] handles fixed-rig
//! dynamic scenes, and [`filters`] rejects pairs that are badly exposed,
//! barely overlapping or not matchable.

pub mod filters;
pub mod kubric;
pub mod matcher;
pub mod pair;
pub mod voxel;

pub use filters::{covis_fraction_filter, exposure_filter, solvability_check, FilterReport};
pub use kubric::{kubric_view_weight, FrameDiffSampler, ViewPairSampler};
pub use matcher::{Match, Matcher, ZnccMatcher};
pub use pair::{sample_pair, scannetpp_pairing, ta_wb_bin_plan, PairCandidate, SamplerConfig, Scene};
pub use voxel::{compute_visibility, voxelize, Camera, VisibilityOptions, VisibilityTable, VoxelGrid};
