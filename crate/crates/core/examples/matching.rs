//! Minimum-cost pairing of GT and predicted elements.
use cdm::latex::{tokenize, EquivTable};
use cdm::localize::{localize, Element};
use cdm::matcher::{assign, CostWeights};
use cdm::render::{assign_colors, stub_render, Palette, RenderConfig};

fn elements(src: &str) -> Vec<Element> {
    let colored = assign_colors(&tokenize(src).unwrap(), &Palette::standard()).unwrap();
    let img = stub_render(&colored, &RenderConfig::default());
    localize(&img, &colored, 7).unwrap().elements
}

fn main() {
    let gt = elements(r"\left(x+y\right)+z");
    let pred = elements("(x+y)+2");
    let m = assign(&gt, &pred, &CostWeights::default(), EquivTable::builtin());
    for p in &m.pairs {
        let (t, pos, ord) = p.cost_parts;
        println!(
            "{:8} <-> {:8} cost {:.3} (token {t:.2}, position {pos:.3}, order {ord:.3})",
            p.gt.token.text, p.pred.token.text, p.cost
        );
    }
    println!("total {:.3}", m.total_cost());
}
