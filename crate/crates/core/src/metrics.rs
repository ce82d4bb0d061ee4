//! Flow and pose evaluation metrics.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::flow::FlowField;
use crate::grid::Grid;
use crate::sum::pairwise_sum;

/// Outlier thresholds of the wide-baseline protocol, in pixels.
pub const WIDE_BASELINE_THRESHOLDS: [f64; 3] = [1.0, 2.0, 5.0];
/// Outlier thresholds of the optical-flow protocol, in pixels.
pub const FLOW_THRESHOLDS: [f64; 3] = [1.0, 3.0, 5.0];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MaskKind {
    Covisible,
    All,
    External,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalMask {
    pub mask: Grid<bool>,
    pub kind: MaskKind,
}

impl EvalMask {
    pub fn all(width: usize, height: usize) -> Self {
        Self {
            mask: Grid::filled(width, height, true),
            kind: MaskKind::All,
        }
    }

    pub fn covisible(mask: Grid<bool>) -> Self {
        Self {
            mask,
            kind: MaskKind::Covisible,
        }
    }

    pub fn external(mask: Grid<bool>) -> Self {
        Self {
            mask,
            kind: MaskKind::External,
        }
    }
}

/// `(end-point error, ground-truth magnitude)` for every evaluated pixel:
/// masked pixels with valid ground truth, in row-major order.
fn evaluated(pred: &FlowField, gt: &FlowField, mask: &EvalMask) -> Result<Vec<(f64, f64)>> {
    gt.valid().ensure_same_dims(pred.valid(), "predicted flow")?;
    gt.valid().ensure_same_dims(&mask.mask, "evaluation mask")?;
    let (w, h) = gt.dims();
    let mut out = Vec::new();
    let mut missing = 0usize;
    for y in 0..h {
        for x in 0..w {
            if !*mask.mask.get(x, y) {
                continue;
            }
            let Some(g) = gt.at(x, y) else { continue };
            match pred.at(x, y) {
                Some(p) => out.push(((p.0 - g.0).hypot(p.1 - g.1), g.0.hypot(g.1))),
                None => missing += 1,
            }
        }
    }
    if missing > 0 {
        return Err(Error::InvalidInput(format!(
            "prediction is invalid at {missing} evaluated pixels"
        )));
    }
    if out.is_empty() {
        return Err(Error::EmptyMask);
    }
    Ok(out)
}

fn check_thresholds(thresholds: &[f64]) -> Result<()> {
    if thresholds.windows(2).any(|t| !(t[0] <= t[1])) || thresholds.iter().any(|t| t.is_nan()) {
        return Err(Error::InvalidInput(format!("thresholds must be ascending, got {thresholds:?}")));
    }
    Ok(())
}

/// Mean end-point error over the evaluated pixels.
pub fn aepe(pred: &FlowField, gt: &FlowField, mask: &EvalMask) -> Result<f64> {
    let errs: Vec<f64> = evaluated(pred, gt, mask)?.into_iter().map(|e| e.0).collect();
    Ok(pairwise_sum(&errs) / errs.len() as f64)
}

fn fractions_above(errs: &[(f64, f64)], thresholds: &[f64]) -> Vec<f64> {
    let n = errs.len() as f64;
    thresholds
        .iter()
        .map(|&t| errs.iter().filter(|e| e.0 > t).count() as f64 / n)
        .collect()
}

/// Fraction of evaluated pixels whose end-point error exceeds each threshold.
pub fn outlier_rates(pred: &FlowField, gt: &FlowField, mask: &EvalMask, thresholds: &[f64]) -> Result<Vec<f64>> {
    check_thresholds(thresholds)?;
    Ok(fractions_above(&evaluated(pred, gt, mask)?, thresholds))
}

fn f1_of(errs: &[(f64, f64)]) -> f64 {
    errs.iter().filter(|(e, m)| *e > 3.0 && *e > 0.05 * m).count() as f64 / errs.len() as f64
}

/// KITTI outlier fraction: error above 3 px and above 5 % of the ground-truth magnitude.
pub fn kitti_f1(pred: &FlowField, gt: &FlowField, mask: &EvalMask) -> Result<f64> {
    Ok(f1_of(&evaluated(pred, gt, mask)?))
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetricRow {
    pub dataset: String,
    pub aepe: f64,
    pub thresholds: Vec<f64>,
    pub outlier_frac: Vec<f64>,
    pub f1: Option<f64>,
    pub pixel_count: usize,
}

impl MetricRow {
    /// All metrics of one prediction in a single pass over the evaluated pixels.
    pub fn evaluate(
        dataset: &str,
        pred: &FlowField,
        gt: &FlowField,
        mask: &EvalMask,
        thresholds: &[f64],
        with_f1: bool,
    ) -> Result<Self> {
        check_thresholds(thresholds)?;
        let errs = evaluated(pred, gt, mask)?;
        let epe: Vec<f64> = errs.iter().map(|e| e.0).collect();
        Ok(Self {
            dataset: dataset.to_string(),
            aepe: pairwise_sum(&epe) / epe.len() as f64,
            thresholds: thresholds.to_vec(),
            outlier_frac: fractions_above(&errs, thresholds),
            f1: with_f1.then(|| f1_of(&errs)),
            pixel_count: errs.len(),
        })
    }

    /// `key=value` lines.
    pub fn to_kv(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "dataset={}", self.dataset);
        let _ = writeln!(s, "aepe={}", self.aepe);
        for (t, f) in self.thresholds.iter().zip(&self.outlier_frac) {
            let _ = writeln!(s, "outlier@{t}={f}");
        }
        if let Some(f1) = self.f1 {
            let _ = writeln!(s, "f1={f1}");
        }
        let _ = writeln!(s, "pixel_count={}", self.pixel_count);
        s
    }
}

/// Externally estimated pose errors of one pair, in degrees.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PoseErrorSample {
    pub rotation_error: f64,
    pub translation_angle_error: f64,
}

impl PoseErrorSample {
    /// The error the AUC is computed over: the larger of the two angles.
    /// NaN (a failed estimate) counts as infinite.
    pub fn combined(&self) -> f64 {
        let e = self.rotation_error.max(self.translation_angle_error);
        if self.rotation_error.is_nan() || self.translation_angle_error.is_nan() {
            f64::INFINITY
        } else {
            e
        }
    }
}

/// Normalized area under the cumulative error curve up to each threshold.
///
/// The recall curve is the piecewise-linear interpolation through
/// `(0, 0)` and `(e_k, k / n)` for the sorted errors below the threshold,
/// held flat up to the threshold, integrated with the trapezoid rule.
pub fn pose_auc(errors: &[PoseErrorSample], thresholds: &[f64]) -> Result<Vec<f64>> {
    if errors.is_empty() {
        return Err(Error::InvalidInput("pose AUC needs at least one sample".into()));
    }
    if thresholds.iter().any(|t| !(*t > 0.0)) {
        return Err(Error::InvalidInput("AUC thresholds must be positive".into()));
    }
    if errors
        .iter()
        .any(|e| e.rotation_error < 0.0 || e.translation_angle_error < 0.0)
    {
        return Err(Error::InvalidInput("pose errors must be non-negative".into()));
    }
    let mut errs: Vec<f64> = errors.iter().map(PoseErrorSample::combined).collect();
    errs.sort_by(f64::total_cmp);
    let n = errs.len() as f64;
    Ok(thresholds
        .iter()
        .map(|&t| {
            let mut area = 0.0;
            let (mut px, mut py) = (0.0, 0.0);
            for (i, &e) in errs.iter().enumerate() {
                if e >= t {
                    break;
                }
                let r = (i + 1) as f64 / n;
                area += (e - px) * (py + r) / 2.0;
                (px, py) = (e, r);
            }
            area += (t - px) * py;
            area / t
        })
        .collect())
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub enum Aggregation {
    /// Every pair counts once.
    #[default]
    PairWeighted,
    /// Every evaluated pixel counts once.
    PixelWeighted,
}

impl std::str::FromStr for Aggregation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "pair" | "pair-weighted" => Ok(Aggregation::PairWeighted),
            "pixel" | "pixel-weighted" => Ok(Aggregation::PixelWeighted),
            other => Err(Error::InvalidInput(format!("unknown aggregation `{other}` (pair|pixel)"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DatasetSummary {
    pub dataset: String,
    pub pairs: usize,
    pub pixel_count: usize,
    pub aepe: f64,
    pub thresholds: Vec<f64>,
    pub outlier_frac: Vec<f64>,
    pub f1: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    pub aggregation: Aggregation,
    /// One summary per dataset, sorted by name.
    pub datasets: Vec<DatasetSummary>,
}

fn weighted_mean(values: &[(f64, f64)]) -> f64 {
    let num: Vec<f64> = values.iter().map(|(v, w)| v * w).collect();
    let den: Vec<f64> = values.iter().map(|(_, w)| *w).collect();
    pairwise_sum(&num) / pairwise_sum(&den)
}

/// Aggregates per-pair rows into per-dataset means.
pub fn eval_report(rows: &[MetricRow], aggregation: Aggregation) -> Result<EvalReport> {
    if rows.is_empty() {
        return Err(Error::NoPairs);
    }
    let mut groups: BTreeMap<&str, Vec<&MetricRow>> = BTreeMap::new();
    for row in rows {
        groups.entry(row.dataset.as_str()).or_default().push(row);
    }
    let mut datasets = Vec::with_capacity(groups.len());
    for (name, group) in groups {
        let thresholds = group[0].thresholds.clone();
        if group.iter().any(|r| r.thresholds != thresholds) {
            return Err(Error::InvalidInput(format!("rows of `{name}` use different thresholds")));
        }
        let weight = |r: &MetricRow| match aggregation {
            Aggregation::PairWeighted => 1.0,
            Aggregation::PixelWeighted => r.pixel_count as f64,
        };
        let mean = |f: &dyn Fn(&MetricRow) -> f64| {
            weighted_mean(&group.iter().map(|r| (f(r), weight(r))).collect::<Vec<_>>())
        };
        let f1 = if group.iter().all(|r| r.f1.is_some()) {
            Some(mean(&|r| r.f1.unwrap()))
        } else {
            None
        };
        datasets.push(DatasetSummary {
            dataset: name.to_string(),
            pairs: group.len(),
            pixel_count: group.iter().map(|r| r.pixel_count).sum(),
            aepe: mean(&|r| r.aepe),
            outlier_frac: (0..thresholds.len()).map(|i| mean(&|r| r.outlier_frac[i])).collect(),
            thresholds,
            f1,
        });
    }
    Ok(EvalReport {
        aggregation,
        datasets,
    })
}

impl EvalReport {
    /// `key=value` records, one block per dataset.
    pub fn to_kv(&self) -> String {
        let mut s = String::new();
        let agg = match self.aggregation {
            Aggregation::PairWeighted => "pair",
            Aggregation::PixelWeighted => "pixel",
        };
        let _ = writeln!(s, "aggregation={agg}");
        for d in &self.datasets {
            let p = &d.dataset;
            let _ = writeln!(s, "{p}.pairs={}", d.pairs);
            let _ = writeln!(s, "{p}.pixel_count={}", d.pixel_count);
            let _ = writeln!(s, "{p}.aepe={}", d.aepe);
            for (t, f) in d.thresholds.iter().zip(&d.outlier_frac) {
                let _ = writeln!(s, "{p}.outlier@{t}={f}");
            }
            if let Some(f1) = d.f1 {
                let _ = writeln!(s, "{p}.f1={f1}");
            }
        }
        s
    }

    /// Human-readable table, outlier rates in percent.
    pub fn to_table(&self) -> String {
        let mut s = String::new();
        let thresholds = self.datasets.first().map(|d| d.thresholds.clone()).unwrap_or_default();
        let _ = write!(s, "{:<16} {:>6} {:>9}", "dataset", "pairs", "AEPE");
        for t in &thresholds {
            let _ = write!(s, " {:>8}", format!(">{t}px%"));
        }
        let has_f1 = self.datasets.iter().any(|d| d.f1.is_some());
        if has_f1 {
            let _ = write!(s, " {:>7}", "F1%");
        }
        s.push('\n');
        for d in &self.datasets {
            let _ = write!(s, "{:<16} {:>6} {:>9.4}", d.dataset, d.pairs, d.aepe);
            for f in &d.outlier_frac {
                let _ = write!(s, " {:>8.2}", f * 100.0);
            }
            if has_f1 {
                match d.f1 {
                    Some(f1) => {
                        let _ = write!(s, " {:>7.2}", f1 * 100.0);
                    }
                    None => {
                        let _ = write!(s, " {:>7}", "-");
                    }
                }
            }
            s.push('\n');
        }
        s
    }
}
