use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::palette::{Palette, Rgb};
use super::RenderError;
use crate::latex::tree::{Node, Sym};
use crate::latex::TokenSequence;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ColorAssignment {
    pub color: Rgb,
    pub token: String,
    pub order_index: usize,
}

/// LaTeX with every glyph-producing token wrapped in its own color.
#[derive(Clone, Debug)]
pub struct ColoredSource {
    pub latex: String,
    pub assignment: Vec<ColorAssignment>,
    sequence: TokenSequence,
    by_index: HashMap<usize, Rgb>,
}

impl ColoredSource {
    pub fn sequence(&self) -> &TokenSequence {
        &self.sequence
    }

    pub fn color_of(&self, order_index: usize) -> Option<Rgb> {
        self.by_index.get(&order_index).copied()
    }

    pub fn lookup(&self) -> HashMap<Rgb, &ColorAssignment> {
        self.assignment.iter().map(|a| (a.color, a)).collect()
    }
}

/// Gives each colorable token the next palette color, in order.
pub fn assign_colors(seq: &TokenSequence, palette: &Palette) -> Result<ColoredSource, RenderError> {
    if seq.colorable_count() > palette.capacity() {
        return Err(RenderError::PaletteExhausted {
            needed: seq.colorable_count(),
            capacity: palette.capacity(),
        });
    }
    let assignment: Vec<ColorAssignment> = seq
        .colorable()
        .zip(palette.colors())
        .map(|(t, &color)| ColorAssignment {
            color,
            token: t.text.clone(),
            order_index: t.order_index,
        })
        .collect();
    let by_index: HashMap<usize, Rgb> = assignment
        .iter()
        .map(|a| (a.order_index, a.color))
        .collect();
    let mut latex = String::new();
    write_nodes(seq.tree(), &by_index, &mut latex);
    Ok(ColoredSource {
        latex: latex.trim_end().to_string(),
        assignment,
        sequence: seq.clone(),
        by_index,
    })
}

fn write_sym(sym: &Sym, colors: &HashMap<usize, Rgb>, out: &mut String) {
    match colors.get(&sym.index) {
        Some(c) => {
            let sized = ["\\left", "\\right", "\\middle"]
                .iter()
                .any(|p| sym.text.starts_with(p));
            if sized {
                // a sized delimiter cannot sit inside a group
                out.push_str(&format!("\\color[RGB]{{{c}}}{} ", sym.text));
            } else {
                out.push_str(&format!("\\mathcolor[RGB]{{{c}}}{{{}}}", sym.text));
            }
        }
        None => {
            out.push_str(&sym.text);
            out.push(' ');
        }
    }
}

fn write_nodes(nodes: &[Node], colors: &HashMap<usize, Rgb>, out: &mut String) {
    for n in nodes {
        write_node(n, colors, out);
    }
}

fn write_group(nodes: &[Node], colors: &HashMap<usize, Rgb>, out: &mut String) {
    out.push('{');
    write_nodes(nodes, colors, out);
    out.push('}');
}

fn write_node(node: &Node, colors: &HashMap<usize, Rgb>, out: &mut String) {
    match node {
        Node::Sym(s) => write_sym(s, colors, out),
        Node::Group(body) => write_group(body, colors, out),
        Node::Scripts {
            base,
            modifiers,
            sup,
            sub,
        } => {
            match base {
                Some(b) => write_node(b, colors, out),
                None => out.push_str("{}"),
            }
            for m in modifiers {
                write_sym(m, colors, out);
            }
            if let Some(s) = sup {
                out.push('^');
                write_group(s, colors, out);
            }
            if let Some(s) = sub {
                out.push('_');
                write_group(s, colors, out);
            }
        }
        Node::Cmd {
            head, opt, args, ..
        } => {
            let mut inner = head.text.clone();
            if let Some(o) = opt {
                inner.push('[');
                write_nodes(o, colors, &mut inner);
                inner.push(']');
            }
            for a in args {
                write_group(a, colors, &mut inner);
            }
            match colors.get(&head.index) {
                Some(c) => out.push_str(&format!("\\mathcolor[RGB]{{{c}}}{{{inner}}}")),
                None => out.push_str(&inner),
            }
        }
        Node::Env { name, spec, rows } => {
            out.push_str(&format!("\\begin{{{name}}}"));
            if let Some(s) = spec {
                out.push_str(&format!("{{{s}}}"));
            }
            for (r, row) in rows.iter().enumerate() {
                if r > 0 {
                    out.push_str(" \\\\ ");
                }
                for (c, cell) in row.iter().enumerate() {
                    if c > 0 {
                        out.push_str(" & ");
                    }
                    write_nodes(cell, colors, out);
                }
            }
            out.push_str(&format!("\\end{{{name}}}"));
        }
    }
}
