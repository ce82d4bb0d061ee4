//! Per-epoch pair plans over a mix of datasets.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::covis::normalize_name;
use crate::error::{Error, Result};

/// Default unique pairs drawn per dataset per epoch.
pub const DEFAULT_COUNTS: &[(&str, usize)] = &[
    ("BlendedMVS", 100_000),
    ("MegaDepth", 100_000),
    ("TartanAirV2", 100_000),
    ("ScanNet++V2", 100_000),
    ("HabitatCAD", 25_000),
    ("StaticThings", 10_000),
    ("Kubric4D", 50_000),
    ("FlyingThings", 50_000),
    ("FlyingChairs", 25_000),
    ("Spring", 25_000),
    ("Monkaa", 5_000),
    ("HD1K", 5_000),
];

/// Canonical spelling of a dataset name, matched case- and
/// punctuation-insensitively against [`DEFAULT_COUNTS`].
pub fn canonical_dataset(name: &str) -> Result<&'static str> {
    let key = normalize_name(name);
    DEFAULT_COUNTS
        .iter()
        .map(|(n, _)| *n)
        .find(|n| normalize_name(n) == key)
        .ok_or_else(|| Error::UnknownDataset {
            name: name.to_string(),
            known: DEFAULT_COUNTS.iter().map(|(n, _)| *n).collect(),
        })
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpochPlan {
    /// Keyed by canonical dataset name.
    pub counts: BTreeMap<&'static str, usize>,
    pub symmetrize: bool,
    pub seed: u64,
}

impl Default for EpochPlan {
    fn default() -> Self {
        EpochPlan {
            counts: DEFAULT_COUNTS.iter().copied().collect(),
            symmetrize: true,
            seed: 0,
        }
    }
}

impl EpochPlan {
    pub fn unique_pairs(&self) -> usize {
        self.counts.values().sum()
    }

    /// Overrides one dataset's count.
    pub fn set_count(&mut self, dataset: &str, count: usize) -> Result<()> {
        self.counts.insert(canonical_dataset(dataset)?, count);
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct PlanEntry {
    pub dataset: &'static str,
    /// Row in that dataset's manifest.
    pub index: usize,
    /// Use the pair as `(tgt, src)`.
    pub reversed: bool,
}

/// Draws `counts[d]` rows from each manifest, shuffles them together and,
/// when symmetrizing, follows every entry by its reversal.
///
/// `manifest_sizes` maps dataset names to the number of rows available.
/// Rows are drawn without replacement when enough exist; otherwise with
/// replacement, and a warning is logged. Datasets with a zero count may be
/// missing from `manifest_sizes`.
pub fn epoch_plan(cfg: &EpochPlan, manifest_sizes: &BTreeMap<String, usize>) -> Result<Vec<PlanEntry>> {
    let mut sizes: BTreeMap<&'static str, usize> = BTreeMap::new();
    for (name, n) in manifest_sizes {
        *sizes.entry(canonical_dataset(name)?).or_default() += n;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut drawn = Vec::with_capacity(cfg.unique_pairs());
    for (&dataset, &count) in &cfg.counts {
        if count == 0 {
            continue;
        }
        let available = sizes.get(dataset).copied().unwrap_or(0);
        if available == 0 {
            return Err(Error::InvalidInput(format!(
                "{dataset}: {count} pairs requested but the manifest is empty"
            )));
        }
        if available >= count {
            let mut idx: Vec<usize> = (0..available).collect();
            // partial Fisher-Yates: the first `count` slots are a uniform sample
            for i in 0..count {
                let j = rng.random_range(i..available);
                idx.swap(i, j);
            }
            drawn.extend(idx[..count].iter().map(|&index| PlanEntry { dataset, index, reversed: false }));
        } else {
            log::warn!("{dataset}: manifest has {available} pairs, sampling {count} with replacement");
            drawn.extend((0..count).map(|_| PlanEntry {
                dataset,
                index: rng.random_range(0..available),
                reversed: false,
            }));
        }
    }
    drawn.shuffle(&mut rng);
    if !cfg.symmetrize {
        return Ok(drawn);
    }
    Ok(drawn
        .into_iter()
        .flat_map(|e| [e, PlanEntry { reversed: true, ..e }])
        .collect())
}

/// One line per entry: `dataset<TAB>index<TAB>fwd|rev`.
pub fn format_plan(plan: &[PlanEntry]) -> String {
    let mut s = String::with_capacity(plan.len() * 24);
    for e in plan {
        s.push_str(e.dataset);
        s.push('\t');
        s.push_str(&e.index.to_string());
        s.push_str(if e.reversed { "\trev\n" } else { "\tfwd\n" });
    }
    s
}
