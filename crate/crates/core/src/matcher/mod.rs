//! Optimal pairing of predicted and ground-truth elements.

mod hungarian;

use serde::{Deserialize, Serialize};

pub use hungarian::hungarian;

use crate::latex::{equiv, EquivTable, Equivalence};
use crate::localize::Element;

/// Token cost between render-equivalent but textually different tokens.
pub const EQUIVALENT_TOKEN_COST: f64 = 0.05;

/// Weight of the squared-distance term used only to break ties.
const TIE_BREAK: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CostWeights {
    pub w_t: f64,
    pub w_p: f64,
    pub w_o: f64,
}

impl Default for CostWeights {
    fn default() -> Self {
        CostWeights {
            w_t: 1.0,
            w_p: 0.25,
            w_o: 0.25,
        }
    }
}

impl CostWeights {
    pub fn validate(&self) -> Result<(), String> {
        let ws = [self.w_t, self.w_p, self.w_o];
        if ws.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(format!("weights must be finite and non-negative: {ws:?}"));
        }
        if self.sum() <= 0.0 {
            return Err("at least one weight must be positive".into());
        }
        Ok(())
    }

    pub fn sum(&self) -> f64 {
        self.w_t + self.w_p + self.w_o
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MatchPair {
    pub gt: Element,
    pub pred: Element,
    pub cost: f64,
    /// Token, position and order terms before weighting.
    pub cost_parts: (f64, f64, f64),
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct MatchSet {
    pub pairs: Vec<MatchPair>,
    pub unmatched_gt: Vec<Element>,
    pub unmatched_pred: Vec<Element>,
}

impl MatchSet {
    pub fn total_cost(&self) -> f64 {
        self.pairs.iter().map(|p| p.cost).sum()
    }
}

pub fn token_cost(gt: &Element, pred: &Element, table: &EquivTable) -> f64 {
    match equiv(&gt.token, &pred.token, table) {
        Equivalence::Identical => 0.0,
        Equivalence::RenderEquivalent => EQUIVALENT_TOKEN_COST,
        Equivalence::Different => 1.0,
    }
}

/// Mean absolute difference of the normalized box coordinates.
pub fn position_cost(gt: &Element, pred: &Element) -> f64 {
    gt.norm_bbox
        .iter()
        .zip(&pred.norm_bbox)
        .map(|(a, b)| (a - b).abs())
        .sum::<f64>()
        / 4.0
}

pub fn order_cost(gt: &Element, pred: &Element) -> f64 {
    (gt.norm_order - pred.norm_order).abs()
}

pub fn match_cost(
    gt: &Element,
    pred: &Element,
    w: &CostWeights,
    table: &EquivTable,
) -> (f64, (f64, f64, f64)) {
    let parts = (
        token_cost(gt, pred, table),
        position_cost(gt, pred),
        order_cost(gt, pred),
    );
    (w.w_t * parts.0 + w.w_p * parts.1 + w.w_o * parts.2, parts)
}

/// Sum of squared coordinate and order differences.
///
/// The linear costs tie between crossed and uncrossed pairings of repeated
/// glyphs, and the solver would settle such ties differently once GT and
/// prediction trade places. A small multiple of this term picks the
/// uncrossed pairing on both sides.
fn spread(gt: &Element, pred: &Element) -> f64 {
    let d = gt.norm_order - pred.norm_order;
    gt.norm_bbox
        .iter()
        .zip(&pred.norm_bbox)
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        + d * d
}

/// Forms exactly `min(|gt|, |pred|)` pairs with minimum total cost.
///
/// The cost matrix is padded to square with a constant above any real cost;
/// rows or columns landing on padding become unmatched. Inputs are ordered
/// by `order_index` first so the result does not depend on list order.
pub fn assign(gt: &[Element], pred: &[Element], w: &CostWeights, table: &EquivTable) -> MatchSet {
    let mut gt: Vec<&Element> = gt.iter().collect();
    let mut pred: Vec<&Element> = pred.iter().collect();
    gt.sort_by_key(|e| e.token.order_index);
    pred.sort_by_key(|e| e.token.order_index);

    let n = gt.len().max(pred.len());
    let pad = w.sum() + 1.0;
    let mut parts = vec![vec![(0.0, (0.0, 0.0, 0.0)); pred.len()]; gt.len()];
    let mut cost = vec![vec![pad; n]; n];
    for (i, g) in gt.iter().enumerate() {
        for (j, p) in pred.iter().enumerate() {
            parts[i][j] = match_cost(g, p, w, table);
            cost[i][j] = parts[i][j].0 + TIE_BREAK * spread(g, p);
        }
    }
    let col = hungarian(&cost);

    let mut out = MatchSet::default();
    let mut pred_used = vec![false; pred.len()];
    for (i, g) in gt.iter().enumerate() {
        let j = col[i];
        if j < pred.len() {
            pred_used[j] = true;
            let (c, p) = parts[i][j];
            out.pairs.push(MatchPair {
                gt: (*g).clone(),
                pred: pred[j].clone(),
                cost: c,
                cost_parts: p,
            });
        } else {
            out.unmatched_gt.push((*g).clone());
        }
    }
    out.unmatched_pred = pred
        .iter()
        .zip(&pred_used)
        .filter(|(_, &u)| !u)
        .map(|(p, _)| (*p).clone())
        .collect();
    out
}
