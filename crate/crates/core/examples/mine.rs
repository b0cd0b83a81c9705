//! Picks the samples a model gets wrong from a report.
use cdm::cli::{mine_report, Report};
use cdm::pipeline::{EvalConfig, Evaluator, Sample};

fn main() {
    let samples: Vec<Sample> = [
        ("1", "a+b", "a+b"),
        ("2", r"\alpha", r"\alpha"),
        ("3", "x^2", "x^3"),
        ("4", "a_1 b", "a_1"),
    ]
    .into_iter()
    .map(|(i, g, p)| Sample::new(i, g, p))
    .collect();
    let ev = Evaluator::new(EvalConfig::default()).unwrap();
    let (records, summary) = ev.evaluate_batch(&samples).unwrap();
    let report = Report {
        summary,
        records,
        unmatched_review: Vec::new(),
    };
    let json = serde_json::to_value(&report).unwrap();
    for threshold in [1.0, 0.7] {
        let hard = mine_report(&json, threshold).unwrap();
        let ids: Vec<&str> = hard.iter().map(|s| s.id.as_str()).collect();
        println!("CDM < {threshold}: {ids:?}");
    }
}
