//! File formats, manifests, configuration and dataset-level planning.
//!
//! | data | format |
//! |------|--------|
//! | flow | Middlebury `.flo` |
//! | depth, error maps | PFM or 16-bit PNG |
//! | masks | 8-bit grayscale PNG, 0 / 255 |
//! | feature maps | `TNSR` tensor container ([`tensor`]) |
//! | pair manifests | tab-separated, versioned header ([`manifest`]) |
//! | configs | flat `key = value` text ([`config`]) |

pub mod config;
pub mod epoch;
pub mod flo;
pub mod image;
pub mod manifest;
pub mod pfm;
pub mod points;
pub mod png;
pub mod tensor;
pub mod trajectory;
pub mod warp;

use std::fs;
use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};

pub use self::image::ImageBuffer;

/// Writes `bytes` to a sibling temp file and renames it over `path`.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    let name = path
        .file_name()
        .ok_or_else(|| Error::InvalidInput(format!("{} has no file name", path.display())))?;
    let tmp = dir.join(format!(".{}.tmp{}", name.to_string_lossy(), std::process::id()));
    let result = (|| {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
        fs::rename(&tmp, path)
    })();
    if let Err(e) = result {
        let _ = fs::remove_file(&tmp);
        return Err(Error::io(path, e));
    }
    Ok(())
}

pub(crate) fn read_file(path: &Path) -> Result<Vec<u8>> {
    fs::read(path).map_err(|e| Error::io(path, e))
}
