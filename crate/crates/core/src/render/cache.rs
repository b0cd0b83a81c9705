//! On-disk raster cache: `<root>/<first two hex chars>/<hash>.png` plus a
//! `<hash>.json` sidecar mapping colors to tokens.

use std::io;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::colorize::{ColorAssignment, ColoredSource};
use super::raster::RasterImage;

pub const CACHE_ENV: &str = "CDM_CACHE_DIR";

#[derive(Clone, Debug)]
pub struct RenderCache {
    root: PathBuf,
}

#[derive(Serialize, Deserialize)]
struct Sidecar {
    latex: String,
    assignment: Vec<ColorAssignment>,
}

impl RenderCache {
    pub fn new(root: impl Into<PathBuf>) -> RenderCache {
        RenderCache { root: root.into() }
    }

    /// Explicit directory wins over `CDM_CACHE_DIR`; neither means no cache.
    pub fn resolve(explicit: Option<&Path>) -> Option<RenderCache> {
        explicit
            .map(Path::to_path_buf)
            .or_else(|| std::env::var_os(CACHE_ENV).map(PathBuf::from))
            .map(RenderCache::new)
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn key(salt: &str, src: &ColoredSource) -> String {
        let mut h = Sha256::new();
        h.update(salt.as_bytes());
        h.update([0u8]);
        h.update(src.latex.as_bytes());
        hex::encode(h.finalize())
    }

    fn paths(&self, key: &str) -> (PathBuf, PathBuf) {
        let dir = self.root.join(&key[..2]);
        (
            dir.join(format!("{key}.png")),
            dir.join(format!("{key}.json")),
        )
    }

    pub fn get(&self, key: &str, dpi: u32) -> Option<RasterImage> {
        let (png, _) = self.paths(key);
        if !png.is_file() {
            return None;
        }
        match RasterImage::load(&png, dpi) {
            Ok(img) => Some(img),
            Err(e) => {
                log::warn!("ignoring unreadable cache entry {}: {e}", png.display());
                None
            }
        }
    }

    /// Writes through a temporary file and renames, so readers never observe
    /// a partial entry.
    pub fn put(&self, key: &str, src: &ColoredSource, img: &RasterImage) -> io::Result<()> {
        let (png, meta) = self.paths(key);
        let dir = png.parent().expect("cache path has a parent");
        std::fs::create_dir_all(dir)?;
        let tmp = tempfile::Builder::new().suffix(".png").tempfile_in(dir)?;
        img.save_png(tmp.path()).map_err(io::Error::other)?;
        let sidecar = Sidecar {
            latex: src.latex.clone(),
            assignment: src.assignment.clone(),
        };
        let tmp_meta = tempfile::NamedTempFile::new_in(dir)?;
        serde_json::to_writer_pretty(tmp_meta.as_file(), &sidecar)?;
        tmp_meta.persist(&meta).map_err(|e| e.error)?;
        tmp.persist(&png).map_err(|e| e.error)?;
        Ok(())
    }
}
