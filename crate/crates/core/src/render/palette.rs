use std::fmt;

use serde::{Deserialize, Serialize};

/// Channel step of the color lattice.
pub const LATTICE_STEP: u8 = 15;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Rgb(pub [u8; 3]);

impl Rgb {
    pub const WHITE: Rgb = Rgb([255, 255, 255]);
    pub const BLACK: Rgb = Rgb([0, 0, 0]);

    pub fn is_lattice(self) -> bool {
        self.0.iter().all(|c| c % LATTICE_STEP == 0)
    }
}

impl fmt::Display for Rgb {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{},{},{}", self.0[0], self.0[1], self.0[2])
    }
}

/// Snaps a pixel to its nearest lattice color when every channel lies within
/// `tolerance` of a lattice value.
pub fn quantize(px: [u8; 3], tolerance: u8) -> Option<Rgb> {
    let mut out = [0u8; 3];
    for (o, &c) in out.iter_mut().zip(&px) {
        let q = ((c as u32 + LATTICE_STEP as u32 / 2) / LATTICE_STEP as u32) * LATTICE_STEP as u32;
        let q = q.min(255) as u8;
        if c.abs_diff(q) > tolerance {
            return None;
        }
        *o = q;
    }
    Some(Rgb(out))
}

/// The ordered list of token colors.
///
/// Lattice points on `{0, 15, ..., 255}^3` in lexicographic channel order,
/// starting at `(0,0,15)`. White is the background and never used. Black is
/// the default ink of uncolored glyphs, so it is handed out last.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Palette {
    colors: Vec<Rgb>,
}

impl Palette {
    pub const CAPACITY: usize = 5831;

    pub fn standard() -> Palette {
        let steps: Vec<u8> = (0..=255u8).step_by(LATTICE_STEP as usize).collect();
        let mut colors = Vec::with_capacity(Self::CAPACITY);
        for &r in &steps {
            for &g in &steps {
                for &b in &steps {
                    let c = Rgb([r, g, b]);
                    if c != Rgb::WHITE && c != Rgb::BLACK {
                        colors.push(c);
                    }
                }
            }
        }
        colors.push(Rgb::BLACK);
        Palette { colors }
    }

    pub fn capacity(&self) -> usize {
        self.colors.len()
    }

    pub fn colors(&self) -> &[Rgb] {
        &self.colors
    }

    pub fn get(&self, i: usize) -> Option<Rgb> {
        self.colors.get(i).copied()
    }
}

impl Default for Palette {
    fn default() -> Self {
        Palette::standard()
    }
}
