//! Hermetic layout engine used in place of a TeX toolchain.
//!
//! Every colorable token becomes a solid block (8x12 at full scale) on a
//! shared baseline, advancing 12 px per token. Scripts are drawn at 60% scale
//! and shifted 6 px (scaled by the parent) up or down. Fractions stack their
//! numerator and denominator around a bar drawn in the `\frac` token's color.
//! Environment rows and top-level `\\` breaks stack vertically.

use super::colorize::ColoredSource;
use super::palette::Rgb;
use super::raster::RasterImage;
use crate::latex::tree::{CmdLayout, Node, Sym};

pub const BLOCK_WIDTH: f64 = 8.0;
pub const BLOCK_HEIGHT: f64 = 12.0;
pub const GAP: f64 = 4.0;
pub const SCRIPT_SCALE: f64 = 0.6;
pub const SCRIPT_SHIFT: f64 = 6.0;

#[derive(Clone, Copy, Debug)]
struct Rect {
    x: i64,
    y: i64,
    w: i64,
    h: i64,
    color: Rgb,
}

/// A laid-out box; rect coordinates are relative to its left baseline point.
#[derive(Clone, Debug, Default)]
struct Layout {
    width: i64,
    ascent: i64,
    descent: i64,
    rects: Vec<Rect>,
}

impl Layout {
    fn place(&mut self, other: &Layout, dx: i64, dy: i64) {
        for r in &other.rects {
            self.rects.push(Rect {
                x: r.x + dx,
                y: r.y + dy,
                ..*r
            });
        }
        self.width = self.width.max(dx + other.width);
        if other.width > 0 || !other.rects.is_empty() {
            self.ascent = self.ascent.max(other.ascent - dy);
            self.descent = self.descent.max(other.descent + dy);
        }
    }
}

fn px(v: f64, scale: f64) -> i64 {
    (v * scale).round() as i64
}

struct Engine<'a> {
    src: &'a ColoredSource,
}

impl Engine<'_> {
    fn block(&self, color: Rgb, scale: f64) -> Layout {
        let w = px(BLOCK_WIDTH, scale).max(2);
        let h = px(BLOCK_HEIGHT, scale).max(2);
        Layout {
            width: w,
            ascent: h,
            descent: 0,
            rects: vec![Rect {
                x: 0,
                y: -h,
                w,
                h,
                color,
            }],
        }
    }

    fn sym(&self, s: &Sym, scale: f64) -> Layout {
        match self.src.color_of(s.index) {
            Some(c) if s.kind.is_colorable() => self.block(c, scale),
            _ => Layout::default(),
        }
    }

    fn row(&self, items: Vec<Layout>, scale: f64) -> Layout {
        let mut out = Layout::default();
        let mut cursor = 0;
        for item in items.into_iter().filter(|l| l.width > 0) {
            if cursor > 0 {
                cursor += px(GAP, scale);
            }
            out.place(&item, cursor, 0);
            cursor += item.width;
        }
        out
    }

    fn stack(&self, lines: Vec<Layout>, scale: f64) -> Layout {
        let mut out = Layout::default();
        let mut baseline = 0;
        let mut prev_descent = None;
        for line in lines {
            if let Some(d) = prev_descent {
                baseline += d + px(GAP, scale) + line.ascent;
            }
            out.place(&line, 0, baseline);
            prev_descent = Some(line.descent);
        }
        out
    }

    /// Horizontal list; top-level `\\` starts a new line.
    fn list(&self, nodes: &[Node], scale: f64) -> Layout {
        let mut lines = vec![Vec::new()];
        for n in nodes {
            if matches!(n, Node::Sym(s) if s.text == "\\\\") {
                lines.push(Vec::new());
            } else {
                lines.last_mut().unwrap().push(self.node(n, scale));
            }
        }
        let lines: Vec<Layout> = lines.into_iter().map(|l| self.row(l, scale)).collect();
        if lines.len() == 1 {
            lines.into_iter().next().unwrap()
        } else {
            self.stack(lines, scale)
        }
    }

    fn node(&self, node: &Node, scale: f64) -> Layout {
        match node {
            Node::Sym(s) => self.sym(s, scale),
            Node::Group(body) => self.list(body, scale),
            Node::Scripts { base, sup, sub, .. } => {
                let mut out = match base {
                    Some(b) => self.node(b, scale),
                    None => Layout::default(),
                };
                let x = if out.width > 0 {
                    out.width + px(GAP, scale)
                } else {
                    0
                };
                let small = scale * SCRIPT_SCALE;
                let shift = px(SCRIPT_SHIFT, scale);
                if let Some(s) = sup {
                    out.place(&self.list(s, small), x, -shift);
                }
                if let Some(s) = sub {
                    out.place(&self.list(s, small), x, shift);
                }
                out
            }
            Node::Cmd {
                head,
                layout: CmdLayout::Stacked,
                args,
                ..
            } => self.fraction(head, args, scale),
            Node::Cmd {
                head, opt, args, ..
            } => {
                let mut items = vec![self.sym(head, scale)];
                if let Some(o) = opt {
                    items.push(self.list(o, scale * SCRIPT_SCALE));
                }
                items.extend(args.iter().map(|a| self.list(a, scale)));
                self.row(items, scale)
            }
            Node::Env { rows, .. } => self.table(rows, scale),
        }
    }

    fn fraction(&self, head: &Sym, args: &[Vec<Node>], scale: f64) -> Layout {
        let num = args
            .first()
            .map(|a| self.list(a, scale))
            .unwrap_or_default();
        let den = args.get(1).map(|a| self.list(a, scale)).unwrap_or_default();
        let width = num.width.max(den.width).max(2);
        let bar_h = px(2.0, scale).max(2);
        let bar_top = -px(SCRIPT_SHIFT, scale);
        let gap = px(2.0, scale).max(1);
        let mut out = Layout::default();
        if let Some(c) = self.src.color_of(head.index) {
            out.place(
                &Layout {
                    width,
                    ascent: -bar_top,
                    descent: bar_top + bar_h,
                    rects: vec![Rect {
                        x: 0,
                        y: bar_top,
                        w: width,
                        h: bar_h,
                        color: c,
                    }],
                },
                0,
                0,
            );
        }
        out.place(&num, (width - num.width) / 2, bar_top - gap - num.descent);
        out.place(
            &den,
            (width - den.width) / 2,
            bar_top + bar_h + gap + den.ascent,
        );
        out.width = width;
        out
    }

    fn table(&self, rows: &[Vec<Vec<Node>>], scale: f64) -> Layout {
        let cells: Vec<Vec<Layout>> = rows
            .iter()
            .map(|r| r.iter().map(|c| self.list(c, scale)).collect())
            .collect();
        let ncols = cells.iter().map(Vec::len).max().unwrap_or(0);
        let mut col_w = vec![0; ncols];
        for row in &cells {
            for (i, c) in row.iter().enumerate() {
                col_w[i] = col_w[i].max(c.width);
            }
        }
        let col_gap = px(2.0 * GAP, scale);
        let lines = cells
            .into_iter()
            .map(|row| {
                let mut line = Layout::default();
                let mut x = 0;
                for (i, c) in row.iter().enumerate() {
                    line.place(c, x, 0);
                    x += col_w[i] + col_gap;
                }
                line
            })
            .collect();
        let mut grid = self.stack(lines, scale);
        // centre the grid on the math axis
        let axis = px(SCRIPT_SHIFT, scale);
        let shift = (grid.descent - grid.ascent) / 2 + axis;
        let mut out = Layout::default();
        let w = grid.width;
        out.place(&std::mem::take(&mut grid), 0, -shift);
        out.width = w;
        out
    }
}

/// Deterministic block rendering of a colored source.
pub(crate) fn layout_raster(src: &ColoredSource, dpi: u32) -> RasterImage {
    let engine = Engine { src };
    let layout = engine.list(src.sequence().tree(), 1.0);
    if layout.rects.is_empty() {
        return RasterImage::blank(1, 1, dpi);
    }
    let min_x = layout.rects.iter().map(|r| r.x).min().unwrap();
    let min_y = layout.rects.iter().map(|r| r.y).min().unwrap();
    let max_x = layout.rects.iter().map(|r| r.x + r.w).max().unwrap();
    let max_y = layout.rects.iter().map(|r| r.y + r.h).max().unwrap();
    let mut img = RasterImage::blank((max_x - min_x) as u32, (max_y - min_y) as u32, dpi);
    for r in &layout.rects {
        img.fill_rect(
            (r.x - min_x) as u32,
            (r.y - min_y) as u32,
            r.w as u32,
            r.h as u32,
            r.color.0,
        );
    }
    img
}
