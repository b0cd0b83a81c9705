//! Per-color bounding boxes in a rendered formula.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::latex::Token;
use crate::render::{quantize, ColoredSource, RasterImage, Rgb};

pub const DEFAULT_TOLERANCE: u8 = 7;
pub const DEFAULT_MIN_PIXELS: usize = 2;

/// Inclusive pixel box, origin top-left.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BBox {
    pub x1: u32,
    pub y1: u32,
    pub x2: u32,
    pub y2: u32,
}

impl BBox {
    pub fn width(&self) -> u32 {
        self.x2 - self.x1 + 1
    }

    pub fn height(&self) -> u32 {
        self.y2 - self.y1 + 1
    }

    fn include(&mut self, x: u32, y: u32) {
        self.x1 = self.x1.min(x);
        self.y1 = self.y1.min(y);
        self.x2 = self.x2.max(x);
        self.y2 = self.y2.max(y);
    }

    /// Pixel edges over image size, so a box covering the full image maps to
    /// `[0, 0, 1, 1]`.
    pub fn normalized(&self, width: u32, height: u32) -> [f64; 4] {
        let (w, h) = (width as f64, height as f64);
        [
            self.x1 as f64 / w,
            self.y1 as f64 / h,
            (self.x2 + 1) as f64 / w,
            (self.y2 + 1) as f64 / h,
        ]
    }

    pub fn overlaps(&self, other: &BBox) -> bool {
        self.x1 <= other.x2 && other.x1 <= self.x2 && self.y1 <= other.y2 && other.y1 <= self.y2
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Element {
    pub token: Token,
    pub color: Rgb,
    pub bbox: BBox,
    pub norm_bbox: [f64; 4],
    pub norm_order: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ElementSet {
    pub elements: Vec<Element>,
    pub width: u32,
    pub height: u32,
    /// Assigned colors dropped for having fewer than `min_pixels` pixels.
    pub omitted: Vec<Token>,
}

impl ElementSet {
    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum LocalizeError {
    #[error("rendered image is blank although {expected} tokens were colored")]
    LocalizationAnomaly { expected: usize },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct LocalizeOptions {
    pub tolerance: u8,
    pub min_pixels: usize,
}

impl Default for LocalizeOptions {
    fn default() -> Self {
        LocalizeOptions {
            tolerance: DEFAULT_TOLERANCE,
            min_pixels: DEFAULT_MIN_PIXELS,
        }
    }
}

pub fn localize(
    img: &RasterImage,
    src: &ColoredSource,
    tolerance: u8,
) -> Result<ElementSet, LocalizeError> {
    localize_with(
        img,
        src,
        LocalizeOptions {
            tolerance,
            ..LocalizeOptions::default()
        },
    )
}

pub fn localize_with(
    img: &RasterImage,
    src: &ColoredSource,
    opts: LocalizeOptions,
) -> Result<ElementSet, LocalizeError> {
    let mut found: HashMap<Rgb, (BBox, usize)> = HashMap::new();
    for y in 0..img.height {
        for x in 0..img.width {
            let px = img.get(x, y);
            if px == Rgb::WHITE.0 {
                continue;
            }
            let Some(c) = quantize(px, opts.tolerance) else {
                continue;
            };
            found
                .entry(c)
                .and_modify(|(b, n)| {
                    b.include(x, y);
                    *n += 1;
                })
                .or_insert((
                    BBox {
                        x1: x,
                        y1: y,
                        x2: x,
                        y2: y,
                    },
                    1,
                ));
        }
    }
    if found.is_empty() && !src.assignment.is_empty() {
        return Err(LocalizeError::LocalizationAnomaly {
            expected: src.assignment.len(),
        });
    }

    let tokens = src.sequence().tokens();
    let denom = tokens.len().saturating_sub(1).max(1) as f64;
    let mut out = ElementSet {
        width: img.width,
        height: img.height,
        ..ElementSet::default()
    };
    for a in &src.assignment {
        let token = tokens[a.order_index].clone();
        match found.get(&a.color) {
            Some(&(bbox, n)) if n >= opts.min_pixels => out.elements.push(Element {
                norm_bbox: bbox.normalized(img.width, img.height),
                norm_order: a.order_index as f64 / denom,
                token,
                color: a.color,
                bbox,
            }),
            _ => {
                log::debug!("token `{}` left no usable pixels", token.text);
                out.omitted.push(token);
            }
        }
    }
    Ok(out)
}
