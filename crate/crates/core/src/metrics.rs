//! CDM F1, ExpRate@CDM and the text baselines.

use std::collections::HashMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::latex::{raw_tokens, tokenize, TokenSequence};
use crate::matcher::MatchSet;

pub const BLEU_MAX_ORDER: usize = 4;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Gt,
    Pred,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum FailureReason {
    CompileError,
    Timeout,
    RasterError,
    PaletteExhausted,
    LocalizationAnomaly,
    /// Document-level: a GT formula with no extracted counterpart.
    Missing,
    /// Document-level: an extracted formula with no GT counterpart.
    Redundant,
}

impl FailureReason {
    /// Whether this reason comes from rendering a formula that was present.
    pub fn is_render_failure(self) -> bool {
        !matches!(self, FailureReason::Missing | FailureReason::Redundant)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Failure {
    pub side: Side,
    pub reason: FailureReason,
    pub detail: String,
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let side = match self.side {
            Side::Gt => "gt",
            Side::Pred => "pred",
        };
        write!(f, "{side} {:?}: {}", self.reason, self.detail)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CdmScore {
    pub tp: usize,
    pub fp: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
    pub f1: f64,
    pub render_ok: bool,
    pub failure: Option<Failure>,
}

impl CdmScore {
    pub fn failed(failure: Failure) -> CdmScore {
        CdmScore {
            tp: 0,
            fp: 0,
            fn_: 0,
            f1: 0.0,
            render_ok: false,
            failure: Some(failure),
        }
    }

    pub fn is_perfect(&self) -> bool {
        self.f1 == 1.0
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Error)]
pub enum MetricsError {
    #[error("no scores to aggregate")]
    EmptyInput,
}

/// `2tp / (2tp + fp + fn)`, with 0/0 read as a perfect score.
pub fn f1(tp: usize, fp: usize, fn_: usize) -> f64 {
    let denom = 2 * tp + fp + fn_;
    if denom == 0 {
        1.0
    } else {
        (2 * tp) as f64 / denom as f64
    }
}

pub fn cdm_score(validated: &MatchSet, render_ok: bool) -> CdmScore {
    if !render_ok {
        return CdmScore {
            tp: 0,
            fp: validated.unmatched_pred.len() + validated.pairs.len(),
            fn_: validated.unmatched_gt.len() + validated.pairs.len(),
            f1: 0.0,
            render_ok: false,
            failure: None,
        };
    }
    let (tp, fp, fn_) = (
        validated.pairs.len(),
        validated.unmatched_pred.len(),
        validated.unmatched_gt.len(),
    );
    CdmScore {
        tp,
        fp,
        fn_,
        f1: f1(tp, fp, fn_),
        render_ok: true,
        failure: None,
    }
}

/// Share of scores that are exactly 1.
pub fn exprate_at_cdm(scores: &[CdmScore]) -> Result<f64, MetricsError> {
    if scores.is_empty() {
        return Err(MetricsError::EmptyInput);
    }
    let perfect = scores.iter().filter(|s| s.is_perfect()).count();
    Ok(perfect as f64 / scores.len() as f64)
}

fn ngram_counts<S: AsRef<str>>(tokens: &[S], n: usize) -> HashMap<Vec<&str>, usize> {
    let mut counts = HashMap::new();
    for w in tokens.windows(n) {
        *counts
            .entry(w.iter().map(AsRef::as_ref).collect())
            .or_insert(0) += 1;
    }
    counts
}

/// Sentence BLEU with uniform weights up to 4-grams and a brevity penalty.
///
/// Hypotheses shorter than four tokens use only the orders they contain.
/// Without smoothing any zero precision gives 0; with smoothing, orders above
/// one get add-one counts. Two empty sequences score 1, an empty hypothesis
/// against a non-empty reference scores 0.
pub fn bleu_tokens<S: AsRef<str>>(reference: &[S], hypothesis: &[S], smoothing: bool) -> f64 {
    if hypothesis.is_empty() {
        return if reference.is_empty() { 1.0 } else { 0.0 };
    }
    let max_order = BLEU_MAX_ORDER.min(hypothesis.len());
    let mut log_sum = 0.0;
    for n in 1..=max_order {
        let refs = ngram_counts(reference, n);
        let hyps = ngram_counts(hypothesis, n);
        let total: usize = hyps.values().sum();
        let clipped: usize = hyps
            .iter()
            .map(|(g, &c)| c.min(refs.get(g).copied().unwrap_or(0)))
            .sum();
        let (num, den) = if smoothing && n > 1 {
            (clipped as f64 + 1.0, total as f64 + 1.0)
        } else {
            (clipped as f64, total as f64)
        };
        if num == 0.0 {
            return 0.0;
        }
        log_sum += (num / den).ln();
    }
    let (r, c) = (reference.len() as f64, hypothesis.len() as f64);
    let bp = if c > r { 1.0 } else { (1.0 - r / c).exp() };
    (bp * (log_sum / max_order as f64).exp()).clamp(0.0, 1.0)
}

pub fn bleu(gt: &TokenSequence, pred: &TokenSequence) -> f64 {
    bleu_tokens(&gt.texts(), &pred.texts(), false)
}

/// Character Levenshtein distance between the concatenated token texts,
/// divided by the longer length.
pub fn edit_distance_tokens<S: AsRef<str>>(gt: &[S], pred: &[S]) -> f64 {
    let a: String = gt.iter().map(AsRef::as_ref).collect();
    let b: String = pred.iter().map(AsRef::as_ref).collect();
    normalized_levenshtein(&a, &b)
}

pub fn edit_distance(gt: &TokenSequence, pred: &TokenSequence) -> f64 {
    edit_distance_tokens(&gt.texts(), &pred.texts())
}

/// Levenshtein distance over chars divided by the longer char count; 0 when
/// both are empty.
pub fn normalized_levenshtein(a: &str, b: &str) -> f64 {
    let longest = a.chars().count().max(b.chars().count());
    if longest == 0 {
        return 0.0;
    }
    strsim::levenshtein(a, b) as f64 / longest as f64
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BaselineScores {
    pub bleu: f64,
    pub edit_distance: f64,
    pub exact_match: bool,
}

/// Normalized token texts, or the raw lexical split if the source does not
/// parse.
pub fn metric_tokens(source: &str) -> Vec<String> {
    match tokenize(source) {
        Ok(seq) => seq.texts().into_iter().map(String::from).collect(),
        Err(_) => raw_tokens(source),
    }
}

pub fn baseline_scores(gt: &str, pred: &str, smoothing: bool) -> BaselineScores {
    let (g, p) = (metric_tokens(gt), metric_tokens(pred));
    BaselineScores {
        bleu: bleu_tokens(&g, &p, smoothing),
        edit_distance: edit_distance_tokens(&g, &p),
        exact_match: g == p,
    }
}
