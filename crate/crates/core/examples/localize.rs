//! Bounding boxes recovered from a color-coded render.
use cdm::latex::tokenize;
use cdm::localize::{localize, DEFAULT_TOLERANCE};
use cdm::render::{assign_colors, stub_render, Palette, RenderConfig};

fn main() {
    let src = std::env::args()
        .nth(1)
        .unwrap_or_else(|| r"a + b^{2}".into());
    let colored = assign_colors(&tokenize(&src).unwrap(), &Palette::standard()).unwrap();
    let img = stub_render(&colored, &RenderConfig::default());
    let set = localize(&img, &colored, DEFAULT_TOLERANCE).expect("non-blank render");
    println!("image {}x{}", set.width, set.height);
    for e in &set.elements {
        let b = e.bbox;
        println!(
            "{:6} ({:3},{:3})-({:3},{:3})  norm {:.3?}  order {:.2}",
            e.token.text, b.x1, b.y1, b.x2, b.y2, e.norm_bbox, e.norm_order
        );
    }
    for t in &set.omitted {
        println!("omitted {}", t.text);
    }
}
