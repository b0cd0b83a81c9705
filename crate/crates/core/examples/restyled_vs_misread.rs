//! CDM against BLEU and edit distance on a correct restyled prediction and
//! on a prediction with one wrong character.
use cdm::pipeline::{EvalConfig, Evaluator};

fn main() {
    let ev = Evaluator::new(EvalConfig::default()).unwrap();
    let gt = r"\left(x+y\right)+z=x+\left(y+z\right)";
    let cases = [
        ("restyled", "(x+y)+z=x+(y+z)"),
        ("z read as 2", r"\left(x+y\right)+2=x+\left(y+z\right)"),
    ];
    println!(
        "{:12} {:>6} {:>6} {:>6} {:>6}",
        "", "CDM", "BLEU", "edit", "exact"
    );
    for (name, pred) in cases {
        let r = ev.evaluate_pair(name, gt, pred);
        let cdm = r.cdm.unwrap();
        let b = r.baselines.unwrap();
        println!(
            "{name:12} {:6.3} {:6.3} {:6.3} {:>6}   tp {} fp {} fn {}",
            cdm.f1, b.bleu, b.edit_distance, b.exact_match, cdm.tp, cdm.fp, cdm.fn_
        );
    }
}
