pub mod covis;
pub mod epoch;
pub mod eval;
pub mod loss;
pub mod refine;
pub mod sample;
pub mod viz;

use std::path::{Path, PathBuf};

use unicorr::io::config::Config;

pub(crate) fn base_dir(cfg: &Config) -> PathBuf {
    cfg.path().parent().map(Path::to_path_buf).unwrap_or_default()
}
