//! Color assignment and rasterization.

mod cache;
mod colorize;
mod palette;
mod raster;
mod stub;
mod tex;

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use cache::{RenderCache, CACHE_ENV};
pub use colorize::{assign_colors, ColorAssignment, ColoredSource};
pub use palette::{quantize, Palette, Rgb, LATTICE_STEP};
pub use raster::RasterImage;
pub use stub::{BLOCK_HEIGHT, BLOCK_WIDTH, GAP, SCRIPT_SCALE, SCRIPT_SHIFT};
pub use tex::tex_document;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum FailureKind {
    CompileError,
    Timeout,
    RasterError,
}

impl fmt::Display for FailureKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            FailureKind::CompileError => "compile error",
            FailureKind::Timeout => "timeout",
            FailureKind::RasterError => "raster error",
        };
        f.write_str(s)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum RenderError {
    #[error("{needed} colorable tokens exceed palette capacity {capacity}")]
    PaletteExhausted { needed: usize, capacity: usize },
    #[error("{kind}: {detail}")]
    Failed { kind: FailureKind, detail: String },
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Engine {
    Tex,
    #[default]
    Stub,
}

impl std::str::FromStr for Engine {
    type Err = String;

    fn from_str(s: &str) -> Result<Engine, String> {
        match s {
            "tex" => Ok(Engine::Tex),
            "stub" => Ok(Engine::Stub),
            _ => Err(format!("unknown renderer `{s}` (expected tex or stub)")),
        }
    }
}

/// Command templates accept `{tex}`, `{pdf}`, `{stem}`, `{out}`, `{dir}`,
/// `{dpi}` and `{aa}` placeholders.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RenderConfig {
    pub engine: Engine,
    pub engine_command: Vec<String>,
    pub raster_command: Vec<String>,
    pub dpi: u32,
    pub timeout_secs: f64,
    pub page_width_in: f64,
    pub antialias: bool,
}

impl Default for RenderConfig {
    fn default() -> RenderConfig {
        let words = |s: &str| s.split_whitespace().map(String::from).collect();
        RenderConfig {
            engine: Engine::Stub,
            engine_command: words("pdflatex -interaction=nonstopmode -halt-on-error {tex}"),
            raster_command: words(
                "pdftoppm -png -singlefile -r {dpi} -aa {aa} -aaVector {aa} {pdf} {out}",
            ),
            dpi: 300,
            timeout_secs: 30.0,
            page_width_in: 100.0,
            antialias: false,
        }
    }
}

impl RenderConfig {
    pub fn validate(&self) -> Result<(), String> {
        if self.dpi < 72 {
            return Err(format!("dpi must be at least 72, got {}", self.dpi));
        }
        if !self.timeout_secs.is_finite() || self.timeout_secs <= 0.0 {
            return Err(format!(
                "timeout must be positive, got {}",
                self.timeout_secs
            ));
        }
        if self.engine == Engine::Tex
            && (self.engine_command.is_empty() || self.raster_command.is_empty())
        {
            return Err("tex renderer needs engine and raster commands".into());
        }
        Ok(())
    }

    /// Identifies everything besides the source that affects the raster.
    pub fn cache_salt(&self) -> String {
        match self.engine {
            Engine::Stub => format!("stub;dpi={}", self.dpi),
            Engine::Tex => format!(
                "tex;{};{};dpi={};w={};aa={}",
                self.engine_command.join(" "),
                self.raster_command.join(" "),
                self.dpi,
                self.page_width_in,
                self.antialias
            ),
        }
    }
}

/// Renders with the engine selected in `cfg`.
pub fn render(src: &ColoredSource, cfg: &RenderConfig) -> Result<RasterImage, RenderError> {
    match cfg.engine {
        Engine::Stub => Ok(stub_render(src, cfg)),
        Engine::Tex => tex::tex_render(src, cfg),
    }
}

/// Deterministic block layout; never fails.
pub fn stub_render(src: &ColoredSource, cfg: &RenderConfig) -> RasterImage {
    stub::layout_raster(src, cfg.dpi)
}

/// `render` behind an optional on-disk cache.
pub fn render_cached(
    src: &ColoredSource,
    cfg: &RenderConfig,
    cache: Option<&RenderCache>,
) -> Result<RasterImage, RenderError> {
    let Some(cache) = cache else {
        return render(src, cfg);
    };
    let key = RenderCache::key(&cfg.cache_salt(), src);
    if let Some(img) = cache.get(&key, cfg.dpi) {
        return Ok(img);
    }
    let img = render(src, cfg)?;
    if let Err(e) = cache.put(&key, src, &img) {
        log::warn!("cache write failed under {}: {e}", cache.root().display());
    }
    Ok(img)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::latex::tokenize;
    use std::collections::HashSet;

    fn colored(s: &str) -> ColoredSource {
        assign_colors(&tokenize(s).unwrap(), &Palette::standard()).unwrap()
    }

    fn sh(script: &str) -> Vec<String> {
        vec!["sh".into(), "-c".into(), script.into()]
    }

    #[test]
    fn stub_superscript_has_two_clusters() {
        let img = render(&colored("x ^ { 2 }"), &RenderConfig::default()).unwrap();
        let colors: HashSet<[u8; 3]> = img
            .pixels
            .iter()
            .copied()
            .filter(|&p| p != Rgb::WHITE.0)
            .collect();
        assert_eq!(colors.len(), 2);
    }

    #[test]
    fn config_validation() {
        assert!(RenderConfig::default().validate().is_ok());
        let cfg = RenderConfig {
            dpi: 50,
            ..RenderConfig::default()
        };
        assert!(cfg.validate().is_err());
        let cfg = RenderConfig {
            timeout_secs: 0.0,
            ..RenderConfig::default()
        };
        assert!(cfg.validate().is_err());
        assert_eq!("tex".parse::<Engine>(), Ok(Engine::Tex));
        assert!("dvi".parse::<Engine>().is_err());
    }

    #[test]
    fn document_wraps_multiline_bodies() {
        let cfg = RenderConfig::default();
        let doc = tex_document(&colored("a \\\\ b"), &cfg);
        assert!(doc.contains("\\begin{aligned}"));
        assert!(doc.contains("paperwidth=100in"));
        assert!(!tex_document(&colored("a"), &cfg).contains("aligned"));
    }

    #[test]
    fn tex_engine_failure_is_compile_error() {
        let cfg = RenderConfig {
            engine: Engine::Tex,
            engine_command: sh("echo '! Missing \\end{array}'; exit 1"),
            ..RenderConfig::default()
        };
        match render(&colored("x"), &cfg) {
            Err(RenderError::Failed { kind, detail }) => {
                assert_eq!(kind, FailureKind::CompileError);
                assert!(detail.contains("Missing"), "{detail}");
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn tex_engine_timeout() {
        let cfg = RenderConfig {
            engine: Engine::Tex,
            engine_command: sh("sleep 5"),
            timeout_secs: 0.2,
            ..RenderConfig::default()
        };
        let err = render(&colored("x"), &cfg).unwrap_err();
        assert!(matches!(
            err,
            RenderError::Failed {
                kind: FailureKind::Timeout,
                ..
            }
        ));
    }

    #[test]
    fn tex_pipeline_with_fake_tools() {
        // engine checks its input exists; rasterizer emits a 4x3 PPM with one
        // colored pixel surrounded by white
        let cfg = RenderConfig {
            engine: Engine::Tex,
            engine_command: sh("test -s formula.tex && touch formula.pdf"),
            raster_command: sh(
                "printf 'P3\\n4 3\\n255\\n255 255 255 255 255 255 255 255 255 255 255 255\\n\
                 255 255 255 0 0 15 0 0 15 255 255 255\\n\
                 255 255 255 255 255 255 255 255 255 255 255 255\\n' > page.ppm",
            ),
            ..RenderConfig::default()
        };
        let img = render(&colored("x"), &cfg).unwrap();
        assert_eq!((img.width, img.height), (2, 1));
        assert!(img.pixels.iter().all(|&p| p == [0, 0, 15]));

        let missing = RenderConfig {
            raster_command: sh("true"),
            ..cfg
        };
        assert!(matches!(
            render(&colored("x"), &missing),
            Err(RenderError::Failed {
                kind: FailureKind::RasterError,
                ..
            })
        ));
    }

    #[test]
    fn cache_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let cache = RenderCache::new(dir.path());
        let cfg = RenderConfig::default();
        let src = colored("a + b");
        let first = render_cached(&src, &cfg, Some(&cache)).unwrap();
        let key = RenderCache::key(&cfg.cache_salt(), &src);
        let png = dir.path().join(&key[..2]).join(format!("{key}.png"));
        assert!(png.is_file());
        assert!(png.with_extension("json").is_file());
        assert_eq!(cache.get(&key, cfg.dpi).unwrap(), first);
        assert_eq!(render_cached(&src, &cfg, Some(&cache)).unwrap(), first);
    }
}
