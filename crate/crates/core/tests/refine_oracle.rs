mod common;

use common::*;
use rand::Rng;
use unicorr::refine::{refine_flow, FeatureMap, RefineConfig};
use unicorr::FlowField;

fn features(r: &mut impl Rng, c: usize, w: usize, h: usize) -> FeatureMap {
    FeatureMap::from_fn(c, w, h, |_, _, _| r.random_range(-1.0..1.0))
}

#[test]
fn matches_scalar_oracle_on_random_cases() {
    for seed in 0..100 {
        let mut r = rng(seed);
        let c = r.random_range(1..=16);
        let fs = features(&mut r, c, 8, 8);
        let ft = features(&mut r, c, 8, 8);
        let flow = random_flow(&mut r, 8, 8, 4.0, 0.1);
        let bias = r.random_range(-2.0..2.0);
        let cfg = RefineConfig { bias, ..RefineConfig::default() };
        let out = refine_flow(&flow, &fs, &ft, &cfg).unwrap();
        for y in 0..8 {
            for x in 0..8 {
                match oracle_refine_pixel(&flow, &fs, &ft, x, y, 7, bias) {
                    Some(want) => {
                        let got = out.flow.at(x, y).unwrap();
                        assert!((got.0 - want.0).abs() <= 1e-10 && (got.1 - want.1).abs() <= 1e-10, "{got:?} vs {want:?}");
                        assert!(*out.refined.get(x, y));
                    }
                    None => {
                        assert_eq!(out.flow.at(x, y), flow.at(x, y));
                        assert!(!*out.refined.get(x, y));
                    }
                }
            }
        }
    }
}

#[test]
fn residual_is_bounded_by_window_radius() {
    for seed in 0..50 {
        let mut r = rng(100 + seed);
        let fs = FeatureMap::from_fn(8, 12, 12, |_, _, _| r.random_range(-50.0..50.0));
        let ft = FeatureMap::from_fn(8, 12, 12, |_, _, _| r.random_range(-50.0..50.0));
        let flow = random_flow(&mut r, 12, 12, 3.0, 0.0);
        let out = refine_flow(&flow, &fs, &ft, &RefineConfig::default()).unwrap();
        for y in 0..12 {
            for x in 0..12 {
                let (a, b) = (flow.at(x, y).unwrap(), out.flow.at(x, y).unwrap());
                // b = a + Δ is rounded once, so allow the ulp of that sum
                let tol = |v: f64| 3.0 + (v.abs() + 3.0) * f64::EPSILON;
                assert!((b.0 - a.0).abs() <= tol(a.0) && (b.1 - a.1).abs() <= tol(a.1), "{a:?} -> {b:?}");
            }
        }
    }
}

#[test]
fn uniform_logits_give_zero_residual() {
    let mut r = rng(7);
    let fs = features(&mut r, 4, 16, 16);
    let ft = FeatureMap::from_fn(4, 16, 16, |_, _, _| 0.0);
    let out = refine_flow(&FlowField::zeros(16, 16), &fs, &ft, &RefineConfig::default()).unwrap();
    for y in 3..13 {
        for x in 3..13 {
            let d = out.flow.at(x, y).unwrap();
            assert!(d.0.abs() <= 1e-12 && d.1.abs() <= 1e-12);
        }
    }
}

#[test]
fn scaled_peaked_features_snap_to_the_argmax() {
    let mut r = rng(8);
    let (w, h, c) = (16, 16, 6);
    let ft = features(&mut r, c, w, h);
    // each source descriptor copies a target descriptor at a known offset
    let offsets: Vec<(i64, i64)> = (0..w * h).map(|_| (r.random_range(-3..=3), r.random_range(-3..=3))).collect();
    let fs = FeatureMap::from_fn(c, w, h, |ch, x, y| {
        let (dx, dy) = offsets[y * w + x];
        let (tx, ty) = ((x as i64 + dx).clamp(0, w as i64 - 1), (y as i64 + dy).clamp(0, h as i64 - 1));
        1e6 * ft.get(ch, tx as usize, ty as usize)
    });
    let out = refine_flow(&FlowField::zeros(w, h), &fs, &ft, &RefineConfig::default()).unwrap();
    for y in 3..h - 3 {
        for x in 3..w - 3 {
            let mut best = (f64::NEG_INFINITY, 0i64, 0i64);
            for dy in -3i64..=3 {
                for dx in -3i64..=3 {
                    let s: f64 = (0..c)
                        .map(|ch| fs.get(ch, x, y) * ft.get(ch, (x as i64 + dx) as usize, (y as i64 + dy) as usize))
                        .sum();
                    if s > best.0 {
                        best = (s, dx, dy);
                    }
                }
            }
            let d = out.flow.at(x, y).unwrap();
            assert!((d.0 - best.1 as f64).abs() < 1e-9 && (d.1 - best.2 as f64).abs() < 1e-9);
        }
    }
}

#[test]
fn shifting_the_target_shifts_the_result() {
    let mut r = rng(9);
    let (w, h, c) = (20, 20, 4);
    let fs = features(&mut r, c, w, h);
    let ft = features(&mut r, c, w, h);
    let flow = random_flow(&mut r, w, h, 1.0, 0.0);
    let (sx, sy) = (2usize, 1usize);
    let shifted = FeatureMap::from_fn(c, w, h, |ch, x, y| if x >= sx && y >= sy { ft.get(ch, x - sx, y - sy) } else { 0.0 });
    let flow_s = FlowField::from_fn(w, h, |x, y| flow.at(x, y).map(|f| (f.0 + sx as f64, f.1 + sy as f64)));
    let a = refine_flow(&flow, &fs, &ft, &RefineConfig::default()).unwrap();
    let b = refine_flow(&flow_s, &fs, &shifted, &RefineConfig::default()).unwrap();
    // keep every window inside both maps
    for y in 5..12 {
        for x in 5..12 {
            let (p, q) = (a.flow.at(x, y).unwrap(), b.flow.at(x, y).unwrap());
            assert!((p.0 + sx as f64 - q.0).abs() < 1e-9 && (p.1 + sy as f64 - q.1).abs() < 1e-9);
        }
    }
}

#[test]
fn adding_a_constant_to_all_logits_changes_nothing() {
    let mut r = rng(10);
    let (w, h, c) = (12, 12, 3);
    let fs = features(&mut r, c, w, h);
    let ft = features(&mut r, c, w, h);
    // an extra channel holding 1 in both maps adds the same 1/sqrt(C) to every logit
    let fs2 = FeatureMap::from_fn(c + 1, w, h, |ch, x, y| if ch < c { fs.get(ch, x, y) } else { 1.0 });
    let ft2 = FeatureMap::from_fn(c + 1, w, h, |ch, x, y| if ch < c { ft.get(ch, x, y) } else { 1.0 });
    let flow = random_flow(&mut r, w, h, 1.0, 0.0);
    let cfg = RefineConfig { temperature: false, ..RefineConfig::default() };
    let a = refine_flow(&flow, &fs, &ft, &cfg).unwrap();
    let b = refine_flow(&flow, &fs2, &ft2, &cfg).unwrap();
    for y in 0..h {
        for x in 0..w {
            let (p, q) = (a.flow.at(x, y).unwrap(), b.flow.at(x, y).unwrap());
            assert!((p.0 - q.0).abs() < 1e-12 && (p.1 - q.1).abs() < 1e-12);
        }
    }
}
