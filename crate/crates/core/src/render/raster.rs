use std::path::Path;

use image::{ImageBuffer, Rgb as ImgRgb, RgbImage};

use super::palette::Rgb;

/// Row-major RGB raster.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RasterImage {
    pub width: u32,
    pub height: u32,
    pub dpi: u32,
    pub pixels: Vec<[u8; 3]>,
}

impl RasterImage {
    pub fn blank(width: u32, height: u32, dpi: u32) -> RasterImage {
        RasterImage {
            width,
            height,
            dpi,
            pixels: vec![Rgb::WHITE.0; width as usize * height as usize],
        }
    }

    pub fn get(&self, x: u32, y: u32) -> [u8; 3] {
        self.pixels[y as usize * self.width as usize + x as usize]
    }

    pub fn set(&mut self, x: u32, y: u32, px: [u8; 3]) {
        let w = self.width as usize;
        self.pixels[y as usize * w + x as usize] = px;
    }

    pub fn fill_rect(&mut self, x: u32, y: u32, w: u32, h: u32, px: [u8; 3]) {
        for yy in y..(y + h).min(self.height) {
            for xx in x..(x + w).min(self.width) {
                self.set(xx, yy, px);
            }
        }
    }

    pub fn is_blank(&self) -> bool {
        self.pixels.iter().all(|&p| p == Rgb::WHITE.0)
    }

    /// Crops to the extent of non-white pixels plus `margin`; a blank image
    /// becomes 1x1.
    pub fn crop_to_content(&self, margin: u32) -> RasterImage {
        let mut x1 = u32::MAX;
        let mut y1 = u32::MAX;
        let mut x2 = 0;
        let mut y2 = 0;
        for y in 0..self.height {
            for x in 0..self.width {
                if self.get(x, y) != Rgb::WHITE.0 {
                    x1 = x1.min(x);
                    y1 = y1.min(y);
                    x2 = x2.max(x);
                    y2 = y2.max(y);
                }
            }
        }
        if x1 == u32::MAX {
            return RasterImage::blank(1, 1, self.dpi);
        }
        let x1 = x1.saturating_sub(margin);
        let y1 = y1.saturating_sub(margin);
        let x2 = (x2 + margin).min(self.width - 1);
        let y2 = (y2 + margin).min(self.height - 1);
        let mut out = RasterImage::blank(x2 - x1 + 1, y2 - y1 + 1, self.dpi);
        for y in y1..=y2 {
            for x in x1..=x2 {
                out.set(x - x1, y - y1, self.get(x, y));
            }
        }
        out
    }

    pub fn to_image(&self) -> RgbImage {
        ImageBuffer::from_fn(self.width, self.height, |x, y| ImgRgb(self.get(x, y)))
    }

    pub fn from_image(img: &RgbImage, dpi: u32) -> RasterImage {
        RasterImage {
            width: img.width(),
            height: img.height(),
            dpi,
            pixels: img.pixels().map(|p| p.0).collect(),
        }
    }

    pub fn save_png(&self, path: &Path) -> image::ImageResult<()> {
        self.to_image()
            .save_with_format(path, image::ImageFormat::Png)
    }

    /// Loads PNG or PNM, detected from content.
    pub fn load(path: &Path, dpi: u32) -> image::ImageResult<RasterImage> {
        let img = image::ImageReader::open(path)?
            .with_guessed_format()?
            .decode()?
            .to_rgb8();
        Ok(RasterImage::from_image(&img, dpi))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn crop_and_png_round_trip() {
        let mut img = RasterImage::blank(20, 10, 300);
        img.fill_rect(5, 2, 3, 4, [0, 0, 15]);
        let c = img.crop_to_content(1);
        assert_eq!((c.width, c.height), (5, 6));
        assert_eq!(c.get(1, 1), [0, 0, 15]);
        assert_eq!(c.get(0, 0), Rgb::WHITE.0);

        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("x.png");
        img.save_png(&p).unwrap();
        assert_eq!(RasterImage::load(&p, 300).unwrap(), img);
        assert_eq!(RasterImage::blank(4, 4, 72).crop_to_content(2).width, 1);
    }
}
