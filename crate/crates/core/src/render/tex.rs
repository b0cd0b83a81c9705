//! External TeX toolchain driver.

use std::fs::File;
use std::path::{Path, PathBuf};
use std::process::{Command, Stdio};
use std::time::Duration;

use wait_timeout::ChildExt;

use super::colorize::ColoredSource;
use super::raster::RasterImage;
use super::{FailureKind, RenderConfig, RenderError};
use crate::latex::tree::Node;

/// Standalone document around a colored formula.
pub fn tex_document(src: &ColoredSource, cfg: &RenderConfig) -> String {
    let multiline = src
        .sequence()
        .tree()
        .iter()
        .any(|n| matches!(n, Node::Sym(s) if s.text == "\\\\" || s.text == "&"));
    let body = if multiline {
        format!("\\begin{{aligned}}{}\\end{{aligned}}", src.latex)
    } else {
        src.latex.clone()
    };
    format!(
        "\\documentclass[12pt]{{article}}\n\
         \\usepackage[paperwidth={w}in,paperheight=11in,margin=1in]{{geometry}}\n\
         \\usepackage{{amsmath,amssymb,amsfonts,bm,xcolor}}\n\
         \\pagestyle{{empty}}\n\
         \\providecommand{{\\mathcolor}}{{}}\n\
         \\renewcommand{{\\mathcolor}}[3][RGB]{{\\textcolor[#1]{{#2}}{{#3}}}}\n\
         \\begin{{document}}\n\
         \\[\n{body}\n\\]\n\
         \\end{{document}}\n",
        w = cfg.page_width_in
    )
}

struct Placeholders<'a> {
    dir: &'a Path,
    dpi: u32,
    antialias: bool,
}

impl Placeholders<'_> {
    fn expand(&self, arg: &str) -> String {
        let p = |name: &str| self.dir.join(name).display().to_string();
        arg.replace("{tex}", &p("formula.tex"))
            .replace("{pdf}", &p("formula.pdf"))
            .replace("{stem}", &p("formula"))
            .replace("{out}", &p("page"))
            .replace("{dir}", &self.dir.display().to_string())
            .replace("{dpi}", &self.dpi.to_string())
            .replace("{aa}", if self.antialias { "yes" } else { "no" })
    }
}

fn run(
    template: &[String],
    vars: &Placeholders<'_>,
    timeout: Duration,
    log_name: &str,
    on_error: FailureKind,
) -> Result<(), RenderError> {
    let (program, args) = template.split_first().ok_or_else(|| RenderError::Failed {
        kind: on_error,
        detail: "empty command template".into(),
    })?;
    let log_path = vars.dir.join(log_name);
    let log = File::create(&log_path).map_err(|e| RenderError::Failed {
        kind: on_error,
        detail: e.to_string(),
    })?;
    let log_err = log.try_clone().map_err(|e| RenderError::Failed {
        kind: on_error,
        detail: e.to_string(),
    })?;
    let mut child = Command::new(vars.expand(program))
        .args(args.iter().map(|a| vars.expand(a)))
        .current_dir(vars.dir)
        .stdin(Stdio::null())
        .stdout(Stdio::from(log))
        .stderr(Stdio::from(log_err))
        .spawn()
        .map_err(|e| RenderError::Failed {
            kind: on_error,
            detail: format!("cannot start `{}`: {e}", vars.expand(program)),
        })?;
    let status = match child.wait_timeout(timeout) {
        Ok(Some(status)) => status,
        Ok(None) => {
            let _ = child.kill();
            let _ = child.wait();
            return Err(RenderError::Failed {
                kind: FailureKind::Timeout,
                detail: format!("`{}` exceeded {:.1}s", program, timeout.as_secs_f64()),
            });
        }
        Err(e) => {
            return Err(RenderError::Failed {
                kind: on_error,
                detail: e.to_string(),
            })
        }
    };
    if !status.success() {
        let log = std::fs::read_to_string(&log_path).unwrap_or_default();
        let tail: Vec<&str> = log.lines().rev().take(8).collect();
        let tail: Vec<&str> = tail.into_iter().rev().collect();
        return Err(RenderError::Failed {
            kind: on_error,
            detail: format!("`{program}` exited with {status}: {}", tail.join(" | ")),
        });
    }
    Ok(())
}

fn find_raster(dir: &Path) -> Option<PathBuf> {
    for name in [
        "page.png",
        "page.ppm",
        "page.pnm",
        "page-1.png",
        "page-01.png",
    ] {
        let p = dir.join(name);
        if p.is_file() {
            return Some(p);
        }
    }
    let mut candidates: Vec<PathBuf> = std::fs::read_dir(dir)
        .ok()?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| {
            matches!(
                p.extension().and_then(|e| e.to_str()),
                Some("png" | "ppm" | "pnm")
            )
        })
        .collect();
    candidates.sort();
    candidates.into_iter().next()
}

/// Compiles and rasterizes in a private temporary directory.
pub fn tex_render(src: &ColoredSource, cfg: &RenderConfig) -> Result<RasterImage, RenderError> {
    let dir = tempfile::tempdir().map_err(|e| RenderError::Failed {
        kind: FailureKind::CompileError,
        detail: e.to_string(),
    })?;
    std::fs::write(dir.path().join("formula.tex"), tex_document(src, cfg)).map_err(|e| {
        RenderError::Failed {
            kind: FailureKind::CompileError,
            detail: e.to_string(),
        }
    })?;
    let vars = Placeholders {
        dir: dir.path(),
        dpi: cfg.dpi,
        antialias: cfg.antialias,
    };
    let timeout = Duration::from_secs_f64(cfg.timeout_secs);
    run(
        &cfg.engine_command,
        &vars,
        timeout,
        "engine.out",
        FailureKind::CompileError,
    )?;
    run(
        &cfg.raster_command,
        &vars,
        timeout,
        "raster.out",
        FailureKind::RasterError,
    )?;
    let path = find_raster(dir.path()).ok_or_else(|| RenderError::Failed {
        kind: FailureKind::RasterError,
        detail: "raster command produced no PNG/PPM".into(),
    })?;
    let img = RasterImage::load(&path, cfg.dpi).map_err(|e| RenderError::Failed {
        kind: FailureKind::RasterError,
        detail: e.to_string(),
    })?;
    Ok(img.crop_to_content(0))
}
