//! Document-level evaluation: extract displayed formulas from a GT source and
//! a model's output, pair them by edit distance, then score each pair.

mod extract;
mod preprocess;

use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use extract::{
    clean_body, extract_displayed, formulas_from_lines, Dialect, DocFormula, DISPLAY_ENVIRONMENTS,
};
pub use preprocess::{
    document_body, expand_macros, extract_macros, preprocess_source, strip_comments,
    strip_disabled_blocks, Macro, MAX_EXPANSION_PASSES,
};

use crate::latex::tokenize;
use crate::metrics::{
    baseline_scores, normalized_levenshtein, CdmScore, Failure, FailureReason, Side,
};
use crate::pipeline::{summarize, EvalError, EvalRecord, Evaluator, Summary, Timings};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MatchThresholds {
    pub round1: f64,
    pub round2: f64,
}

impl Default for MatchThresholds {
    fn default() -> Self {
        MatchThresholds {
            round1: 0.4,
            round2: 0.8,
        }
    }
}

impl MatchThresholds {
    pub fn validate(&self) -> Result<(), String> {
        if !(0.0 < self.round1 && self.round1 <= self.round2 && self.round2 <= 1.0) {
            return Err(format!(
                "thresholds must satisfy 0 < round1 <= round2 <= 1, got {} and {}",
                self.round1, self.round2
            ));
        }
        Ok(())
    }
}

/// One row of the pairing: indices into the GT and prediction lists.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DocPair {
    pub gt: Option<usize>,
    pub pred: Option<usize>,
    pub distance: Option<f64>,
    /// 1 or 2 for matched rows.
    pub round: Option<u8>,
}

/// Edit distance between formula bodies, normalized by the longer one.
pub fn formula_distance(a: &DocFormula, b: &DocFormula) -> f64 {
    normalized_levenshtein(&a.body, &b.body)
}

/// Greedy two-round pairing.
///
/// Each round walks the still-unmatched GT formulas in order and takes the
/// closest unmatched prediction (earliest on ties) when its distance is
/// strictly below the round's threshold. The result lists GT formulas in
/// order, then leftover predictions.
pub fn match_two_round(
    gt: &[DocFormula],
    pred: &[DocFormula],
    th: &MatchThresholds,
) -> Vec<DocPair> {
    let dist: Vec<Vec<f64>> = gt
        .iter()
        .map(|g| pred.iter().map(|p| formula_distance(g, p)).collect())
        .collect();
    let mut gt_match: Vec<Option<(usize, f64, u8)>> = vec![None; gt.len()];
    let mut pred_used = vec![false; pred.len()];
    for (round, limit) in [(1u8, th.round1), (2u8, th.round2)] {
        for (i, row) in dist.iter().enumerate() {
            if gt_match[i].is_some() {
                continue;
            }
            let best = row.iter().enumerate().filter(|(j, _)| !pred_used[*j]).fold(
                None,
                |acc: Option<(usize, f64)>, (j, &d)| match acc {
                    Some((_, bd)) if bd <= d => acc,
                    _ => Some((j, d)),
                },
            );
            if let Some((j, d)) = best.filter(|&(_, d)| d < limit) {
                gt_match[i] = Some((j, d, round));
                pred_used[j] = true;
            }
        }
    }
    let mut out: Vec<DocPair> = gt_match
        .iter()
        .enumerate()
        .map(|(i, m)| DocPair {
            gt: Some(i),
            pred: m.map(|x| x.0),
            distance: m.map(|x| x.1),
            round: m.map(|x| x.2),
        })
        .collect();
    out.extend(
        pred_used
            .iter()
            .enumerate()
            .filter(|(_, &u)| !u)
            .map(|(j, _)| DocPair {
                gt: None,
                pred: Some(j),
                distance: None,
                round: None,
            }),
    );
    out
}

/// An unmatched GT formula and a leftover prediction that render alike.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReviewItem {
    pub doc_id: String,
    pub gt: String,
    pub pred: String,
    pub distance: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DocResult {
    pub doc_id: String,
    pub gt: Vec<DocFormula>,
    pub pred: Vec<DocFormula>,
    pub pairs: Vec<DocPair>,
    pub records: Vec<EvalRecord>,
    pub unmatched_review: Vec<ReviewItem>,
}

fn missing_record(ev: &Evaluator, id: String, gt: &DocFormula) -> EvalRecord {
    let m = &ev.config().metrics;
    EvalRecord {
        id,
        gt: gt.body.clone(),
        pred: String::new(),
        cdm: m.cdm.then(|| {
            CdmScore::failed(Failure {
                side: Side::Pred,
                reason: FailureReason::Missing,
                detail: format!("no extracted formula matches GT line {}", gt.line_no),
            })
        }),
        baselines: m
            .baselines
            .then(|| baseline_scores(&gt.body, "", m.bleu_smoothing)),
        timings: Timings::default(),
        artifacts: Vec::new(),
    }
}

fn redundant_record(ev: &Evaluator, id: String, pred: &DocFormula) -> EvalRecord {
    let m = &ev.config().metrics;
    let fp = match tokenize(&pred.body) {
        Ok(seq) => seq.colorable_count(),
        Err(_) => crate::latex::raw_tokens(&pred.body).len(),
    };
    EvalRecord {
        id,
        gt: String::new(),
        pred: pred.body.clone(),
        cdm: m.cdm.then(|| CdmScore {
            fp,
            ..CdmScore::failed(Failure {
                side: Side::Pred,
                reason: FailureReason::Redundant,
                detail: format!(
                    "extracted formula at line {} has no GT counterpart",
                    pred.line_no
                ),
            })
        }),
        baselines: m
            .baselines
            .then(|| baseline_scores("", &pred.body, m.bleu_smoothing)),
        timings: Timings::default(),
        artifacts: Vec::new(),
    }
}

/// Scores formula lists that were already extracted.
pub fn evaluate_formulas(
    ev: &Evaluator,
    doc_id: &str,
    gt: Vec<DocFormula>,
    pred: Vec<DocFormula>,
    th: &MatchThresholds,
) -> DocResult {
    let pairs = match_two_round(&gt, &pred, th);
    let mut records = Vec::with_capacity(pairs.len());
    for p in &pairs {
        let rec = match (p.gt, p.pred) {
            (Some(i), Some(j)) => {
                ev.evaluate_pair(&format!("{doc_id}/{}", i + 1), &gt[i].body, &pred[j].body)
            }
            (Some(i), None) => missing_record(ev, format!("{doc_id}/{}", i + 1), &gt[i]),
            (None, Some(j)) => redundant_record(ev, format!("{doc_id}/extra{}", j + 1), &pred[j]),
            (None, None) => unreachable!("pairs always carry one side"),
        };
        records.push(rec);
    }

    let lonely_gt: Vec<usize> = pairs
        .iter()
        .filter(|p| p.pred.is_none())
        .filter_map(|p| p.gt)
        .collect();
    let lonely_pred: Vec<usize> = pairs
        .iter()
        .filter(|p| p.gt.is_none())
        .filter_map(|p| p.pred)
        .collect();
    let mut unmatched_review = Vec::new();
    for &i in &lonely_gt {
        for &j in &lonely_pred {
            if ev
                .analyze(&gt[i].body, &pred[j].body)
                .is_ok_and(|a| a.cdm.is_perfect())
            {
                unmatched_review.push(ReviewItem {
                    doc_id: doc_id.to_string(),
                    gt: gt[i].body.clone(),
                    pred: pred[j].body.clone(),
                    distance: formula_distance(&gt[i], &pred[j]),
                });
            }
        }
    }
    DocResult {
        doc_id: doc_id.to_string(),
        gt,
        pred,
        pairs,
        records,
        unmatched_review,
    }
}

/// Preprocesses and extracts the GT source, extracts the model output in
/// `dialect`, then pairs and scores.
pub fn evaluate_document(
    ev: &Evaluator,
    doc_id: &str,
    gt_source: &str,
    pred_output: &str,
    dialect: Dialect,
    th: &MatchThresholds,
) -> DocResult {
    let gt = extract_displayed(doc_id, &preprocess_source(gt_source), Dialect::LatexSource);
    let pred_text = if dialect == Dialect::LatexSource {
        preprocess_source(pred_output)
    } else {
        pred_output.to_string()
    };
    let pred = extract_displayed(doc_id, &pred_text, dialect);
    evaluate_formulas(ev, doc_id, gt, pred, th)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CorpusResult {
    pub documents: Vec<DocResult>,
    pub summary: Summary,
}

impl CorpusResult {
    pub fn records(&self) -> impl Iterator<Item = &EvalRecord> {
        self.documents.iter().flat_map(|d| d.records.iter())
    }
}

#[derive(Debug, thiserror::Error)]
pub enum CorpusError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error(transparent)]
    Eval(#[from] EvalError),
}

const PRED_EXTENSIONS: [&str; 5] = ["md", "mmd", "txt", "tex", "out"];

fn read(path: &Path) -> Result<String, CorpusError> {
    std::fs::read_to_string(path).map_err(|source| CorpusError::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// GT documents are `*.tex` sources or `*.txt` files with one formula per
/// line. Predictions are matched by file stem; a document without a
/// prediction file has every GT formula scored as missing.
pub fn evaluate_corpus(
    ev: &Evaluator,
    gt_dir: &Path,
    pred_dir: &Path,
    dialect: Dialect,
    th: &MatchThresholds,
) -> Result<CorpusResult, CorpusError> {
    let io = |path: &Path| {
        let path = path.to_path_buf();
        move |source| CorpusError::Io { path, source }
    };
    let mut gt_files: Vec<PathBuf> = std::fs::read_dir(gt_dir)
        .map_err(io(gt_dir))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| matches!(p.extension().and_then(|e| e.to_str()), Some("tex" | "txt")))
        .collect();
    gt_files.sort();
    if gt_files.is_empty() {
        return Err(EvalError::EmptyInput.into());
    }
    if !pred_dir.is_dir() {
        return Err(CorpusError::Io {
            path: pred_dir.to_path_buf(),
            source: std::io::Error::new(std::io::ErrorKind::NotFound, "not a directory"),
        });
    }

    let jobs: Vec<(String, PathBuf, Option<PathBuf>)> = gt_files
        .into_iter()
        .map(|g| {
            let stem = g
                .file_stem()
                .unwrap_or_default()
                .to_string_lossy()
                .into_owned();
            let pred = PRED_EXTENSIONS
                .iter()
                .map(|ext| pred_dir.join(format!("{stem}.{ext}")))
                .find(|p| p.is_file());
            (stem, g, pred)
        })
        .collect();
    let documents: Vec<DocResult> = ev.install(|| {
        jobs.par_iter()
            .map(|(stem, g, p)| -> Result<DocResult, CorpusError> {
                let gt_text = read(g)?;
                let gt = if g.extension().is_some_and(|e| e == "txt") {
                    formulas_from_lines(stem, &gt_text)
                } else {
                    extract_displayed(stem, &preprocess_source(&gt_text), Dialect::LatexSource)
                };
                let pred = match p {
                    Some(p) => {
                        let text = read(p)?;
                        let text = if dialect == Dialect::LatexSource {
                            preprocess_source(&text)
                        } else {
                            text
                        };
                        extract_displayed(stem, &text, dialect)
                    }
                    None => {
                        log::warn!("no prediction file for document {stem}");
                        Vec::new()
                    }
                };
                Ok(evaluate_formulas(ev, stem, gt, pred, th))
            })
            .collect::<Result<_, _>>()
    })?;
    let records: Vec<EvalRecord> = documents
        .iter()
        .flat_map(|d| d.records.iter().cloned())
        .collect();
    let summary = summarize(&records)?;
    Ok(CorpusResult { documents, summary })
}
