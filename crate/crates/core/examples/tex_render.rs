//! Renders through pdflatex and pdftoppm, caching under `CDM_CACHE_DIR`
//! when it is set. Needs a TeX installation.
use cdm::latex::tokenize;
use cdm::render::{
    assign_colors, render_cached, tex_document, Engine, Palette, RenderCache, RenderConfig,
};

fn main() {
    let src = std::env::args()
        .nth(1)
        .unwrap_or_else(|| r"\sum_{i=1}^{n} i = \frac{n(n+1)}{2}".into());
    let cfg = RenderConfig {
        engine: Engine::Tex,
        ..RenderConfig::default()
    };
    let colored =
        assign_colors(&tokenize(&src).expect("valid LaTeX"), &Palette::standard()).unwrap();
    println!("{}", tex_document(&colored, &cfg));

    let cache = RenderCache::resolve(None);
    match render_cached(&colored, &cfg, cache.as_ref()) {
        Ok(img) => println!("rendered {}x{} at {} dpi", img.width, img.height, img.dpi),
        Err(e) => println!("render failed: {e}"),
    }
    if let Some(c) = cache {
        println!("cache root {}", c.root().display());
    }
}
