mod common;

use std::collections::BTreeMap;
use std::f64::consts::FRAC_PI_2;

use common::*;
use nalgebra::Vector3;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use unicorr::geometry::{Intrinsics, Pose};
use unicorr::io::epoch::{epoch_plan, format_plan, EpochPlan, DEFAULT_COUNTS};
use unicorr::sampler::filters::{
    covis_fraction_filter, exposure_filter, solvability_check, ExposureParams, Solvability, MAX_SOLVABILITY_ERROR,
    MIN_COVIS_FRAC,
};
use unicorr::sampler::kubric::{kubric_view_weight, FrameDiffSampler, MAX_FRAME_DIFF};
use unicorr::sampler::matcher::ZnccMatcher;
use unicorr::sampler::pair::{sample_scenes, SamplerConfig, Scene};
use unicorr::sampler::voxel::{compute_visibility, Camera, VisibilityOptions, VoxelGrid};
use unicorr::covis::covis_fov_only;
use unicorr::FlowField;

#[test]
fn ta_wb_histogram_matches_bin_weights() {
    let (centers, grid, vis) = ring_scene(3, 24);
    let scenes: Vec<Scene> = (0..10).map(|i| Scene::new(format!("s{i}"), &centers, &grid, &vis).unwrap()).collect();
    let cfg = SamplerConfig { seed: 42, ..SamplerConfig::default() };
    let out = sample_scenes(&cfg, &scenes, 1000, 4).unwrap();
    let h = histogram(&out);
    let total: usize = h.iter().sum();
    assert!(total >= 10_000 * 99 / 100, "only {total} accepted");
    for (i, want) in [2.0, 2.0, 2.0, 1.0].iter().enumerate() {
        let got = h[i] as f64 / total as f64;
        let expected = want / 7.0;
        assert!((got - expected).abs() / expected < 0.05, "bin {i}: {got} vs {expected}");
    }
}

#[test]
fn sampling_is_independent_of_thread_count() {
    let (centers, grid, vis) = ring_scene(2, 16);
    let scenes: Vec<Scene> = (0..6).map(|i| Scene::new(format!("s{i}"), &centers, &grid, &vis).unwrap()).collect();
    let cfg = SamplerConfig { seed: 5, ..SamplerConfig::default() };
    let a = sample_scenes(&cfg, &scenes, 35, 1).unwrap();
    let b = sample_scenes(&cfg, &scenes, 35, 8).unwrap();
    assert_eq!(a, b);
    let c = sample_scenes(&SamplerConfig { seed: 6, ..cfg }, &scenes, 35, 8).unwrap();
    assert_ne!(a, c);
}

#[test]
fn sampled_poses_look_at_the_shared_voxel() {
    let (centers, grid, vis) = ring_scene(2, 16);
    let scene = Scene::new("s", &centers, &grid, &vis).unwrap();
    let cfg = SamplerConfig { perturb_sigma: 0.0, roll_sigma: 0.0, ..SamplerConfig::default() };
    let out = sample_scenes(&cfg, std::slice::from_ref(&scene), 70, 1).unwrap();
    for p in &out[0].pairs {
        assert!((p.src_pose.forward() - p.src_dir).norm() < 1e-9);
        assert!((p.tgt_pose.forward() - p.tgt_dir).norm() < 1e-9);
        assert!((p.perturbed_axis_angle - p.axis_angle).abs() < 1e-6);
    }
}

#[test]
fn kubric_weights_and_frame_differences() {
    assert_eq!(kubric_view_weight(0.0), 1.0);
    assert_eq!(kubric_view_weight(1.0), 2.0);
    assert_eq!(kubric_view_weight(FRAC_PI_2), 0.0);
    let s = FrameDiffSampler::default();
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let mut counts = vec![0usize; MAX_FRAME_DIFF + 1];
    for _ in 0..1_000_000 {
        counts[s.sample_diff(&mut rng)] += 1;
    }
    let ratio = counts[40] as f64 / counts[0] as f64;
    assert!((1.9..=2.1).contains(&ratio), "{ratio}");
}

#[test]
fn epoch_plan_counts_and_symmetrization() {
    let cfg = EpochPlan::default();
    assert_eq!(cfg.unique_pairs(), 595_000);
    assert_eq!(DEFAULT_COUNTS.iter().map(|c| c.1).sum::<usize>(), 595_000);
    let sizes: BTreeMap<String, usize> = DEFAULT_COUNTS.iter().map(|(d, n)| (d.to_string(), n * 2)).collect();
    let plan = epoch_plan(&cfg, &sizes).unwrap();
    assert_eq!(plan.len(), 2 * 595_000);
    for pair in plan.chunks_exact(2) {
        assert_eq!((pair[0].dataset, pair[0].index), (pair[1].dataset, pair[1].index));
        assert!(!pair[0].reversed && pair[1].reversed);
    }
    let flat = epoch_plan(&EpochPlan { symmetrize: false, ..cfg.clone() }, &sizes).unwrap();
    assert_eq!(flat.len(), 595_000);
    let mut per: BTreeMap<&str, usize> = BTreeMap::new();
    for e in &flat {
        *per.entry(e.dataset).or_default() += 1;
    }
    for (d, n) in DEFAULT_COUNTS {
        assert_eq!(per[d], *n);
    }
    assert_eq!(epoch_plan(&cfg, &sizes).unwrap(), plan);
}

/// FNV-1a, so the frozen digest below does not depend on std's hasher.
fn fnv1a(bytes: &[u8]) -> u64 {
    bytes.iter().fold(0xcbf2_9ce4_8422_2325, |h, b| (h ^ *b as u64).wrapping_mul(0x0100_0000_01b3))
}

#[test]
fn epoch_plan_is_reproducible_across_platforms() {
    let mut cfg = EpochPlan { seed: 2024, ..EpochPlan::default() };
    for (d, _) in DEFAULT_COUNTS {
        cfg.set_count(d, 5).unwrap();
    }
    let sizes: BTreeMap<String, usize> = DEFAULT_COUNTS.iter().map(|(d, _)| (d.to_string(), 100)).collect();
    let text = format_plan(&epoch_plan(&cfg, &sizes).unwrap());
    assert!(text.starts_with("HD1K\t31\tfwd\nHD1K\t31\trev\n"), "{text}");
    assert_eq!(fnv1a(text.as_bytes()), FROZEN_PLAN_DIGEST, "{text}");
}

const FROZEN_PLAN_DIGEST: u64 = 4070705571267715901;

#[test]
fn exposure_fixture_boundary() {
    let p = ExposureParams::default();
    // exactly 10 of 100 pixels saturated passes, 11 fails
    let ten = gray(10, 10, |x, y| if y * 10 + x < 10 { 255.0 } else { 128.0 });
    let eleven = gray(10, 10, |x, y| if y * 10 + x < 11 { 0.0 } else { 128.0 });
    assert!(exposure_filter(&ten, &ten, &p).pass);
    let r = exposure_filter(&ten, &eleven, &p);
    assert!(!r.pass);
    assert_eq!((r.frac_src, r.frac_tgt), (0.1, 0.11));
    let edge = gray(10, 10, |x, _| if x == 0 { 250.0 } else if x == 1 { 5.0 } else { 249.0 });
    assert_eq!(exposure_filter(&edge, &edge, &p).frac_src, 0.2);
}

#[test]
fn covis_fraction_fixture_boundary() {
    let (pass, fail) = (fov_result(10, 10, 20), fov_result(10, 10, 19));
    assert_eq!(pass.covis_fraction(), 0.2);
    assert!(covis_fraction_filter(&pass, &pass, MIN_COVIS_FRAC).pass);
    assert!(!covis_fraction_filter(&pass, &fail, MIN_COVIS_FRAC).pass);
    assert!(!covis_fraction_filter(&fail, &pass, MIN_COVIS_FRAC).pass);
}

#[test]
fn solvability_fixtures() {
    assert_eq!(solvability_case(5, 3, 5.0, 3.0), Solvability::Pass);
    // label off by 5 px still passes, off by ~7.2 px does not
    assert_eq!(solvability_case(5, 3, 10.0, 3.0), Solvability::Pass);
    assert_eq!(solvability_case(6, 4, 0.0, 0.0), Solvability::TooInaccurate);
    let flat = gray(64, 64, |_, _| 128.0);
    let gt = covis_fov_only(&FlowField::zeros(64, 64), 64, 64);
    let r = solvability_check(&flat, &flat, &gt, &ZnccMatcher::default(), MAX_SOLVABILITY_ERROR).unwrap();
    assert_eq!(r.outcome, Solvability::Untextured);
}

#[test]
fn visibility_shrinks_when_occluders_are_added() {
    let mut r = rng(21);
    use rand::Rng;
    let mut g = VoxelGrid::new(Vector3::zeros(), 1.0, [8, 8, 8]).unwrap();
    for i in 0..g.len() {
        g.set_occupied(i, r.random_bool(0.05));
    }
    let cams: Vec<Camera> = (0..5)
        .map(|_| Camera {
            pose: Pose::from_translation(Vector3::new(r.random_range(-2.0..10.0), r.random_range(-2.0..10.0), -3.0)),
            intrinsics: Intrinsics::new(10.0, 10.0, 5.0, 5.0, 10, 10).unwrap(),
        })
        .collect();
    let opts = VisibilityOptions { in_front: false, in_image: false };
    let before = compute_visibility(&cams, &g, opts);
    let mut more = g.clone();
    for i in 0..more.len() {
        if r.random_bool(0.05) {
            more.set_occupied(i, true);
        }
    }
    let after = compute_visibility(&cams, &more, opts);
    assert!(after.is_subset_of(&before));
}
