//! Colors each glyph token and renders with the built-in block layout.
//!
//! `cargo run --example render_stub -- 'x^2 + y' out.png`
use cdm::latex::tokenize;
use cdm::render::{assign_colors, stub_render, Palette, RenderConfig};

fn main() {
    let mut args = std::env::args().skip(1);
    let src = args
        .next()
        .unwrap_or_else(|| r"\frac{a}{b} + x_1^2".to_string());
    let out = args.next();

    let colored =
        assign_colors(&tokenize(&src).expect("valid LaTeX"), &Palette::standard()).unwrap();
    println!("{}", colored.latex);
    for a in &colored.assignment {
        println!("  #{:<2} {:8} rgb{:?}", a.order_index, a.token, a.color.0);
    }
    let img = stub_render(&colored, &RenderConfig::default());
    println!("{}x{} px", img.width, img.height);
    if let Some(path) = out {
        img.save_png(path.as_ref()).expect("write png");
        println!("wrote {path}");
    }
}
