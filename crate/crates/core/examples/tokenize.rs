//! Normalized token streams for syntax variants of one formula.
use cdm::latex::{detokenize, tokenize, EquivTable};

fn main() {
    let variants = [
        r"x^b_a",
        r"x_a^b",
        r"x_{a}^{b}",
        r"\frac12 + \left( y \right)",
    ];
    for src in variants {
        let seq = tokenize(src).expect("valid LaTeX");
        println!("{src:28} -> {}", detokenize(&seq));
        println!(
            "{:28}    {} tokens, {} colorable",
            "",
            seq.len(),
            seq.colorable_count()
        );
    }

    let table = EquivTable::builtin();
    for (a, b) in [(r"\le", r"\leq"), ("(", r"\left("), ("z", "2")] {
        println!("{a} vs {b}: {:?}", table.compare(a, b));
    }

    match tokenize(r"z = \left( \begin{array}{cc} x \\ y") {
        Ok(_) => println!("unexpected success"),
        Err(e) => println!("truncated array: {e}"),
    }
}
