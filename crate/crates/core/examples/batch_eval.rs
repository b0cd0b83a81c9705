//! Scores a small batch in parallel and prints the JSON report.
use cdm::cli::Report;
use cdm::pipeline::{EvalConfig, Evaluator, Sample};

fn main() {
    let samples = vec![
        Sample::new("frac", r"\frac{1}{2}", r"\frac12"),
        Sample::new("order", r"x_i^2", r"x^2_i"),
        Sample::new("typo", r"a^2+b^2=c^2", r"a^2+b^2=e^2"),
        Sample::new("broken", r"\sqrt{x}", r"\sqrt{x"),
    ];
    let cfg = EvalConfig {
        jobs: 2,
        ..EvalConfig::default()
    };
    let ev = Evaluator::new(cfg).unwrap();
    let (records, summary) = ev.evaluate_batch(&samples).unwrap();
    for r in &records {
        let reason = r
            .cdm
            .as_ref()
            .and_then(|c| c.failure.as_ref())
            .map(|f| format!("{:?}", f.reason));
        println!(
            "{:8} CDM {:.3} {}",
            r.id,
            r.f1().unwrap(),
            reason.unwrap_or_default()
        );
    }
    let report = Report {
        summary,
        records,
        unmatched_review: Vec::new(),
    };
    println!("{}", serde_json::to_string_pretty(&report.summary).unwrap());
}
