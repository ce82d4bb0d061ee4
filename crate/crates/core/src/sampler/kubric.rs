//! View and frame pair selection for multi-camera dynamic scenes.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_3};

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::Rng;

use crate::error::{Error, Result};
use crate::geometry::{relative_rotation_angle, Pose};

pub const MAX_FRAME_DIFF: usize = 40;
pub const FRAMES_PER_SCENE: usize = 60;

/// Sampling weight for a camera pair whose relative rotation is `alpha`.
pub fn kubric_view_weight(alpha: f64) -> f64 {
    if alpha < FRAC_PI_3 {
        1.0 + alpha.max(0.0)
    } else if alpha < FRAC_PI_2 {
        1.0 + FRAC_PI_3
    } else {
        0.0
    }
}

/// Frame differences `0..=40` with `P(d) ∝ 1 + d/40`.
#[derive(Debug, Clone)]
pub struct FrameDiffSampler {
    dist: WeightedIndex<f64>,
}

impl Default for FrameDiffSampler {
    fn default() -> Self {
        FrameDiffSampler {
            dist: WeightedIndex::new(frame_diff_weights()).expect("positive weights"),
        }
    }
}

pub fn frame_diff_weights() -> Vec<f64> {
    (0..=MAX_FRAME_DIFF).map(|d| 1.0 + d as f64 / MAX_FRAME_DIFF as f64).collect()
}

impl FrameDiffSampler {
    pub fn sample_diff<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        self.dist.sample(rng)
    }

    /// `(start, start + d)` with the start uniform over valid positions.
    pub fn sample_frames<R: Rng + ?Sized>(&self, num_frames: usize, rng: &mut R) -> Result<(usize, usize)> {
        if num_frames <= MAX_FRAME_DIFF {
            return Err(Error::InvalidInput(format!(
                "need more than {MAX_FRAME_DIFF} frames, got {num_frames}"
            )));
        }
        let d = self.sample_diff(rng);
        let start = rng.random_range(0..num_frames - d);
        Ok((start, start + d))
    }
}

/// Ordered camera pairs `(i, j)`, `i != j`, drawn in proportion to
/// [`kubric_view_weight`] of their relative rotation.
#[derive(Debug, Clone)]
pub struct ViewPairSampler {
    pairs: Vec<(usize, usize)>,
    weights: Vec<f64>,
    dist: WeightedIndex<f64>,
}

impl ViewPairSampler {
    pub fn new(poses: &[Pose]) -> Result<Self> {
        let mut pairs = Vec::new();
        let mut weights = Vec::new();
        for (i, a) in poses.iter().enumerate() {
            for (j, b) in poses.iter().enumerate() {
                if i != j {
                    pairs.push((i, j));
                    weights.push(kubric_view_weight(relative_rotation_angle(a, b)));
                }
            }
        }
        let dist = WeightedIndex::new(&weights)
            .map_err(|_| Error::InvalidInput("no camera pair has a positive view weight".into()))?;
        Ok(ViewPairSampler { pairs, weights, dist })
    }

    pub fn pairs(&self) -> &[(usize, usize)] {
        &self.pairs
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> (usize, usize) {
        self.pairs[self.dist.sample(rng)]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct KubricPair {
    pub src_camera: usize,
    pub tgt_camera: usize,
    pub src_frame: usize,
    pub tgt_frame: usize,
}

/// Views and frames are drawn independently.
pub fn sample_kubric_pair<R: Rng + ?Sized>(
    views: &ViewPairSampler,
    frames: &FrameDiffSampler,
    num_frames: usize,
    rng: &mut R,
) -> Result<KubricPair> {
    let (src_camera, tgt_camera) = views.sample(rng);
    let (src_frame, tgt_frame) = frames.sample_frames(num_frames, rng)?;
    Ok(KubricPair {
        src_camera,
        tgt_camera,
        src_frame,
        tgt_frame,
    })
}
