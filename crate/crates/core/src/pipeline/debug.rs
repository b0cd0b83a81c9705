use std::collections::HashSet;
use std::io;
use std::path::{Path, PathBuf};

use serde::Serialize;

use super::{ensure_dir, sanitize_id, PairAnalysis};
use crate::localize::{BBox, ElementSet};
use crate::render::{RasterImage, Rgb};

const KEPT: [u8; 3] = [0, 170, 0];
const ELIMINATED: [u8; 3] = [220, 0, 0];
const UNPAIRED: [u8; 3] = [240, 150, 0];

/// Lightens the image and outlines each box in its color.
pub fn draw_overlay(img: &RasterImage, boxes: &[(BBox, [u8; 3])]) -> RasterImage {
    let mut out = img.clone();
    for px in &mut out.pixels {
        *px = px.map(|c| 255 - (255 - c) / 3);
    }
    for (b, color) in boxes {
        for x in b.x1..=b.x2.min(out.width - 1) {
            out.set(x, b.y1, *color);
            out.set(x, b.y2.min(out.height - 1), *color);
        }
        for y in b.y1..=b.y2.min(out.height - 1) {
            out.set(b.x1, y, *color);
            out.set(b.x2.min(out.width - 1), y, *color);
        }
    }
    out
}

#[derive(Serialize)]
struct DumpElement<'a> {
    token: &'a str,
    order_index: usize,
    color: Rgb,
    bbox: BBox,
}

#[derive(Serialize)]
struct Dump<'a> {
    gt: Vec<DumpElement<'a>>,
    pred: Vec<DumpElement<'a>>,
    /// (gt order index, pred order index, kept after validation)
    pairs: Vec<(usize, usize, bool)>,
}

fn elements(set: &ElementSet) -> Vec<DumpElement<'_>> {
    set.elements
        .iter()
        .map(|e| DumpElement {
            token: &e.token.text,
            order_index: e.token.order_index,
            color: e.color,
            bbox: e.bbox,
        })
        .collect()
}

fn save(img: &RasterImage, path: PathBuf, out: &mut Vec<PathBuf>) -> io::Result<()> {
    img.save_png(&path).map_err(io::Error::other)?;
    out.push(path);
    Ok(())
}

/// Writes renders, overlays and `elements.json` under `<dir>/<id>/`.
pub fn dump_debug(dir: &Path, id: &str, a: &PairAnalysis) -> io::Result<Vec<PathBuf>> {
    let dir = dir.join(sanitize_id(id));
    ensure_dir(&dir)?;
    let kept: HashSet<(usize, usize)> = a
        .validated
        .pairs
        .iter()
        .map(|p| (p.gt.token.order_index, p.pred.token.order_index))
        .collect();
    let pairs: Vec<(usize, usize, bool)> = a
        .matched
        .pairs
        .iter()
        .map(|p| {
            let k = (p.gt.token.order_index, p.pred.token.order_index);
            (k.0, k.1, kept.contains(&k))
        })
        .collect();
    let status = |idx: usize, gt_side: bool| {
        pairs
            .iter()
            .find(|(g, p, _)| if gt_side { *g == idx } else { *p == idx })
            .map_or(UNPAIRED, |&(_, _, k)| if k { KEPT } else { ELIMINATED })
    };
    let boxes = |set: &ElementSet, gt_side: bool| -> Vec<(BBox, [u8; 3])> {
        set.elements
            .iter()
            .map(|e| (e.bbox, status(e.token.order_index, gt_side)))
            .collect()
    };

    let mut written = Vec::new();
    save(&a.gt.image, dir.join("gt.png"), &mut written)?;
    save(&a.pred.image, dir.join("pred.png"), &mut written)?;
    save(
        &draw_overlay(&a.gt.image, &boxes(&a.gt.elements, true)),
        dir.join("gt_overlay.png"),
        &mut written,
    )?;
    save(
        &draw_overlay(&a.pred.image, &boxes(&a.pred.elements, false)),
        dir.join("pred_overlay.png"),
        &mut written,
    )?;
    let dump = Dump {
        gt: elements(&a.gt.elements),
        pred: elements(&a.pred.elements),
        pairs,
    };
    let json = dir.join("elements.json");
    std::fs::write(&json, serde_json::to_string_pretty(&dump)?)?;
    written.push(json);
    Ok(written)
}
