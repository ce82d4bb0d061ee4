//! `epoch-plan`
//!
//! Config keys:
//!
//! | key | meaning |
//! |-----|---------|
//! | `manifest.<Dataset>` | pair manifest of a dataset |
//! | `size.<Dataset>` | row count to plan against without a manifest |
//! | `count.<Dataset>` | pairs per epoch, overriding the defaults |
//! | `only_listed` | `true` to drop datasets without a manifest or size |
//! | `symmetrize` | default `true` |
//!
//! Writes `plan.tsv` with `dataset index direction src_image tgt_image`
//! rows (image columns only when manifests are given).

use std::collections::BTreeMap;

use anyhow::{bail, Result};

use unicorr::io::epoch::{canonical_dataset, epoch_plan as plan, EpochPlan};
use unicorr::io::manifest::{read_manifest, PairRecord};

use crate::Ctx;

pub fn epoch_plan(ctx: &Ctx) -> Result<()> {
    let cfg = &ctx.config;
    let mut ep = EpochPlan {
        seed: ctx.seed,
        symmetrize: cfg.get_or("symmetrize", true)?,
        ..Default::default()
    };
    let mut sizes: BTreeMap<String, usize> = BTreeMap::new();
    let mut manifests: BTreeMap<&'static str, Vec<PairRecord>> = BTreeMap::new();
    let keys: Vec<String> = cfg.keys().map(str::to_string).collect();
    for key in &keys {
        if let Some(d) = key.strip_prefix("manifest.") {
            let name = canonical_dataset(d)?;
            let rows = read_manifest(&cfg.path_value(key).unwrap_or_default())?;
            sizes.insert(name.to_string(), rows.len());
            manifests.insert(name, rows);
        } else if let Some(d) = key.strip_prefix("size.") {
            sizes.insert(canonical_dataset(d)?.to_string(), cfg.require(key)?);
        } else if let Some(d) = key.strip_prefix("count.") {
            ep.set_count(d, cfg.require(key)?)?;
        } else if !["symmetrize", "only_listed", "seed", "jobs"].contains(&key.as_str()) {
            bail!("{}: unknown key `{key}`", cfg.path().display());
        }
    }
    if cfg.get_or("only_listed", false)? {
        ep.counts.retain(|d, _| sizes.contains_key(*d));
    }
    let entries = plan(&ep, &sizes)?;
    let mut out = String::with_capacity(entries.len() * 48);
    for e in &entries {
        out.push_str(&format!("{}\t{}\t{}", e.dataset, e.index, if e.reversed { "rev" } else { "fwd" }));
        if let Some(r) = manifests.get(e.dataset).map(|m| &m[e.index]) {
            let (a, b) = if e.reversed { (&r.tgt_image, &r.src_image) } else { (&r.src_image, &r.tgt_image) };
            out.push_str(&format!("\t{a}\t{b}"));
        }
        out.push('\n');
    }
    unicorr::io::write_atomic(&ctx.output("plan.tsv"), out.as_bytes())?;
    print!("unique_pairs={}\nentries={}\nsymmetrize={}\n", ep.unique_pairs(), entries.len(), ep.symmetrize);
    Ok(())
}
