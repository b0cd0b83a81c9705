//! Extracts displayed formulas from a LaTeX source and a Markdown
//! transcription, pairs them in two rounds and scores each pair.
use cdm::doc::{evaluate_document, Dialect, MatchThresholds};
use cdm::pipeline::{EvalConfig, Evaluator};

const SOURCE: &str = r"\documentclass{article}
\newcommand{\R}{\mathbb{R}}
\begin{document}
Let $f$ be smooth. % inline math is ignored
\begin{equation} f : \R \to \R \label{eq:f} \end{equation}
\[ \int_0^1 f(x) dx = F(1) - F(0) \]
\begin{align*} a &= b + c \\ d &= e \end{align*}
\end{document}";

const OUTPUT: &str = r"Let $f$ be smooth.

$$ f : \mathbb{R} \rightarrow \mathbb{R} $$

$$ \int_0^1 f(x) dx = F(1) - F(O) $$

$$ \sum_k k $$
";

fn main() {
    let ev = Evaluator::new(EvalConfig::default()).unwrap();
    let res = evaluate_document(
        &ev,
        "demo",
        SOURCE,
        OUTPUT,
        Dialect::MarkdownOutput,
        &MatchThresholds::default(),
    );
    for p in &res.pairs {
        let gt = p.gt.map(|i| res.gt[i].body.as_str()).unwrap_or("-");
        let pred = p.pred.map(|j| res.pred[j].body.as_str()).unwrap_or("-");
        println!(
            "round {:?} d={:.3?}\n  gt   {gt}\n  pred {pred}",
            p.round, p.distance
        );
    }
    for r in &res.records {
        println!("{:12} CDM {:.3}", r.id, r.f1().unwrap());
    }
}
