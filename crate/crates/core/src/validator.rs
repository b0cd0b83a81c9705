//! Elimination of implausible pairs: token consistency, then agreement with
//! a translation+scale map fitted by repeated RANSAC rounds.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::latex::{equiv, EquivTable, Equivalence};
use crate::matcher::{MatchPair, MatchSet};

/// Samples are enumerated exhaustively up to this many pairs.
pub const EXHAUSTIVE_LIMIT: usize = 12;

/// `x' = sx * x + tx`, `y' = sy * y + ty` in normalized image units.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AffineTS {
    pub sx: f64,
    pub sy: f64,
    pub tx: f64,
    pub ty: f64,
}

impl AffineTS {
    pub const IDENTITY: AffineTS = AffineTS {
        sx: 1.0,
        sy: 1.0,
        tx: 0.0,
        ty: 0.0,
    };

    pub fn apply(&self, b: &[f64; 4]) -> [f64; 4] {
        [
            self.sx * b[0] + self.tx,
            self.sy * b[1] + self.ty,
            self.sx * b[2] + self.tx,
            self.sy * b[3] + self.ty,
        ]
    }

    pub fn inverse(&self) -> AffineTS {
        AffineTS {
            sx: 1.0 / self.sx,
            sy: 1.0 / self.sy,
            tx: -self.tx / self.sx,
            ty: -self.ty / self.sy,
        }
    }

    /// Mean absolute error of the mapped GT box against the predicted box.
    /// Each axis is divided by the square root of its scale, which makes the
    /// value identical for a model and its inverse with the sides swapped.
    pub fn residual(&self, pair: &MatchPair) -> f64 {
        let g = &pair.gt.norm_bbox;
        let p = &pair.pred.norm_bbox;
        let m = self.apply(g);
        let (kx, ky) = (self.sx.sqrt(), self.sy.sqrt());
        ((m[0] - p[0]).abs() / kx
            + (m[1] - p[1]).abs() / ky
            + (m[2] - p[2]).abs() / kx
            + (m[3] - p[3]).abs() / ky)
            / 4.0
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RansacParams {
    #[serde(rename = "tol")]
    pub inlier_tol: f64,
    pub min_inliers: usize,
    #[serde(rename = "iters")]
    pub iterations: usize,
    #[serde(rename = "rounds")]
    pub max_rounds: usize,
    pub seed: u64,
}

impl Default for RansacParams {
    fn default() -> Self {
        RansacParams {
            inlier_tol: 0.05,
            min_inliers: 2,
            iterations: 200,
            max_rounds: 4,
            seed: 0,
        }
    }
}

impl RansacParams {
    pub fn validate(&self) -> Result<(), String> {
        if !self.inlier_tol.is_finite() || self.inlier_tol <= 0.0 {
            return Err(format!(
                "ransac tolerance must be positive, got {}",
                self.inlier_tol
            ));
        }
        if self.iterations == 0 || self.max_rounds == 0 {
            return Err("ransac iterations and rounds must be at least 1".into());
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Error)]
pub enum FitError {
    #[error("sample has no spread on either axis")]
    DegenerateSample,
}

/// Moves pairs of render-different tokens to the unmatched lists.
pub fn token_filter(m: MatchSet, table: &EquivTable) -> MatchSet {
    let mut out = MatchSet {
        pairs: Vec::with_capacity(m.pairs.len()),
        unmatched_gt: m.unmatched_gt,
        unmatched_pred: m.unmatched_pred,
    };
    for p in m.pairs {
        if equiv(&p.gt.token, &p.pred.token, table) == Equivalence::Different {
            out.unmatched_gt.push(p.gt);
            out.unmatched_pred.push(p.pred);
        } else {
            out.pairs.push(p);
        }
    }
    out
}

struct Axis {
    scale: f64,
    shift: f64,
}

/// One axis from (source, target) coordinate pairs. The scale is the ratio of
/// standard deviations signed by the covariance, so fitting the swapped data
/// gives exactly the inverse map; on noiseless data it equals the ordinary
/// least-squares solution.
fn fit_axis(points: &[(f64, f64)]) -> Option<Axis> {
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let (mut sxx, mut syy, mut sxy) = (0.0, 0.0, 0.0);
    for &(x, y) in points {
        sxx += (x - mx) * (x - mx);
        syy += (y - my) * (y - my);
        sxy += (x - mx) * (y - my);
    }
    if sxx <= f64::EPSILON * f64::EPSILON || syy <= f64::EPSILON * f64::EPSILON {
        return None;
    }
    let scale = (syy / sxx).sqrt().copysign(sxy);
    Some(Axis {
        scale,
        shift: my - scale * mx,
    })
}

/// Translation+scale fit over the box corners of `pairs`.
///
/// An axis without spread falls back to scale 1 and the mean offset.
pub fn fit_ts(pairs: &[&MatchPair]) -> Result<AffineTS, FitError> {
    let mut xs = Vec::with_capacity(pairs.len() * 2);
    let mut ys = Vec::with_capacity(pairs.len() * 2);
    for p in pairs {
        let (g, q) = (&p.gt.norm_bbox, &p.pred.norm_bbox);
        xs.extend([(g[0], q[0]), (g[2], q[2])]);
        ys.extend([(g[1], q[1]), (g[3], q[3])]);
    }
    if xs.is_empty() {
        return Err(FitError::DegenerateSample);
    }
    let fallback = |pts: &[(f64, f64)]| Axis {
        scale: 1.0,
        shift: pts.iter().map(|(a, b)| b - a).sum::<f64>() / pts.len() as f64,
    };
    let (ax, ay) = match (fit_axis(&xs), fit_axis(&ys)) {
        (None, None) => return Err(FitError::DegenerateSample),
        (x, y) => (
            x.unwrap_or_else(|| fallback(&xs)),
            y.unwrap_or_else(|| fallback(&ys)),
        ),
    };
    Ok(AffineTS {
        sx: ax.scale,
        sy: ay.scale,
        tx: ax.shift,
        ty: ay.shift,
    })
}

struct Model {
    inliers: Vec<usize>,
    residual_sum: f64,
}

fn evaluate(model: &AffineTS, pairs: &[MatchPair], tol: f64) -> Option<Model> {
    if !(model.sx > 0.0 && model.sy > 0.0) {
        return None;
    }
    let mut inliers = Vec::new();
    let mut residual_sum = 0.0;
    for (i, p) in pairs.iter().enumerate() {
        let r = model.residual(p);
        if r <= tol {
            inliers.push(i);
            residual_sum += r;
        }
    }
    Some(Model {
        inliers,
        residual_sum,
    })
}

fn better(a: &Model, b: &Option<Model>) -> bool {
    match b {
        None => true,
        Some(b) => {
            a.inliers.len() > b.inliers.len()
                || (a.inliers.len() == b.inliers.len() && a.residual_sum < b.residual_sum)
        }
    }
}

fn best_model(pairs: &[MatchPair], p: &RansacParams, round: usize) -> Option<Model> {
    let n = pairs.len();
    let samples: Vec<(usize, usize)> = if n <= EXHAUSTIVE_LIMIT {
        (0..n)
            .flat_map(|i| (i + 1..n).map(move |j| (i, j)))
            .collect()
    } else {
        let mut rng = ChaCha8Rng::seed_from_u64(p.seed.wrapping_add(round as u64));
        (0..p.iterations)
            .map(|_| {
                let i = rng.random_range(0..n);
                let j = (i + rng.random_range(1..n)) % n;
                (i.min(j), i.max(j))
            })
            .collect()
    };
    let mut best: Option<Model> = None;
    for (i, j) in samples {
        let Ok(model) = fit_ts(&[&pairs[i], &pairs[j]]) else {
            continue;
        };
        if let Some(m) = evaluate(&model, pairs, p.inlier_tol) {
            if better(&m, &best) {
                best = Some(m);
            }
        }
    }
    let best = best?;
    // one refit on the consensus set; kept only if it does not lose support
    let chosen: Vec<&MatchPair> = best.inliers.iter().map(|&i| &pairs[i]).collect();
    if let Some(refit) = fit_ts(&chosen)
        .ok()
        .and_then(|m| evaluate(&m, pairs, p.inlier_tol))
    {
        if refit.inliers.len() >= best.inliers.len() {
            return Some(refit);
        }
    }
    Some(best)
}

/// Symmetric in the two sides, so swapping GT and prediction visits pairs in
/// the same order.
fn canonical_key(p: &MatchPair) -> (usize, usize, usize) {
    let (a, b) = (p.gt.token.order_index, p.pred.token.order_index);
    (a + b, a.min(b), a.max(b))
}

/// Keeps pairs explained by some accepted translation+scale model.
///
/// Each round takes the model with most inliers (ties broken by smaller
/// residual sum), accepts its inliers and continues on the rest. Pairs never
/// accepted are moved to the unmatched lists. A lone pair is kept when it
/// already lines up without any transform.
pub fn ransac_filter(m: MatchSet, p: &RansacParams) -> MatchSet {
    let MatchSet {
        pairs: mut working,
        mut unmatched_gt,
        mut unmatched_pred,
    } = m;
    if working.is_empty() {
        return MatchSet {
            pairs: working,
            unmatched_gt,
            unmatched_pred,
        };
    }
    if working.len() == 1 {
        if AffineTS::IDENTITY.residual(&working[0]) > p.inlier_tol {
            let lone = working.pop().expect("one pair");
            unmatched_gt.push(lone.gt);
            unmatched_pred.push(lone.pred);
        }
        return MatchSet {
            pairs: working,
            unmatched_gt,
            unmatched_pred,
        };
    }
    if working.len() < p.min_inliers {
        return MatchSet {
            pairs: working,
            unmatched_gt,
            unmatched_pred,
        };
    }

    working.sort_by_key(canonical_key);
    let mut accepted = Vec::with_capacity(working.len());
    for round in 0..p.max_rounds {
        if working.len() < p.min_inliers.max(2) {
            break;
        }
        let Some(model) = best_model(&working, p, round) else {
            break;
        };
        if model.inliers.len() < p.min_inliers {
            break;
        }
        let mut keep = vec![false; working.len()];
        for &i in &model.inliers {
            keep[i] = true;
        }
        let mut rest = Vec::with_capacity(working.len() - model.inliers.len());
        for (pair, k) in working.into_iter().zip(keep) {
            if k {
                accepted.push(pair);
            } else {
                rest.push(pair);
            }
        }
        working = rest;
    }
    for pair in working {
        unmatched_gt.push(pair.gt);
        unmatched_pred.push(pair.pred);
    }
    accepted.sort_by_key(|q| q.gt.token.order_index);
    MatchSet {
        pairs: accepted,
        unmatched_gt,
        unmatched_pred,
    }
}

/// Token filter followed by RANSAC.
pub fn validate(m: MatchSet, table: &EquivTable, p: &RansacParams) -> MatchSet {
    ransac_filter(token_filter(m, table), p)
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use crate::latex::{Token, TokenKind};
    use crate::localize::{BBox, Element};
    use crate::render::Rgb;
    use proptest::prelude::*;

    fn element(text: &str, idx: usize, nb: [f64; 4]) -> Element {
        Element {
            token: Token {
                text: text.into(),
                kind: TokenKind::Char,
                order_index: idx,
                equiv_class: text.into(),
            },
            color: Rgb([0, 0, 15]),
            bbox: BBox {
                x1: 0,
                y1: 0,
                x2: 0,
                y2: 0,
            },
            norm_bbox: nb,
            norm_order: 0.0,
        }
    }

    pub(crate) fn pair(idx: usize, g: [f64; 4], q: [f64; 4]) -> MatchPair {
        MatchPair {
            gt: element("a", idx, g),
            pred: element("a", idx, q),
            cost: 0.0,
            cost_parts: (0.0, 0.0, 0.0),
        }
    }

    /// Glyph-like boxes laid out left to right.
    pub(crate) fn row(n: usize, t: &AffineTS) -> Vec<MatchPair> {
        (0..n)
            .map(|i| {
                let x = i as f64 / (n as f64 + 1.0);
                let g = [
                    x,
                    0.2 + 0.01 * (i % 3) as f64,
                    x + 0.5 / (n as f64 + 1.0),
                    0.6,
                ];
                pair(i, g, t.apply(&g))
            })
            .collect()
    }

    fn set(pairs: Vec<MatchPair>) -> MatchSet {
        MatchSet {
            pairs,
            ..MatchSet::default()
        }
    }

    fn close(a: f64, b: f64) -> bool {
        (a - b).abs() < 1e-9
    }

    #[test]
    fn token_filter_moves_different_tokens() {
        let t = EquivTable::builtin();
        let mut z2 = pair(0, [0.0; 4], [0.0; 4]);
        z2.pred.token.text = "2".into();
        z2.pred.token.equiv_class = "2".into();
        let mut paren = pair(1, [0.0; 4], [0.0; 4]);
        paren.gt.token.text = "(".into();
        paren.gt.token.equiv_class = t.class_of("(").into();
        paren.pred.token.text = r"\left(".into();
        paren.pred.token.equiv_class = t.class_of(r"\left(").into();
        let out = token_filter(set(vec![z2, paren]), t);
        assert_eq!(out.pairs.len(), 1);
        assert_eq!(out.pairs[0].gt.token.text, "(");
        assert_eq!((out.unmatched_gt.len(), out.unmatched_pred.len()), (1, 1));
        assert_eq!(token_filter(MatchSet::default(), t), MatchSet::default());
    }

    #[test]
    fn fit_recovers_simple_maps() {
        let ident = row(4, &AffineTS::IDENTITY);
        let refs: Vec<&MatchPair> = ident.iter().collect();
        assert_eq!(fit_ts(&refs).unwrap(), AffineTS::IDENTITY);

        let shift = AffineTS {
            tx: 0.1,
            ..AffineTS::IDENTITY
        };
        let pairs = row(4, &shift);
        let refs: Vec<&MatchPair> = pairs.iter().collect();
        let m = fit_ts(&refs).unwrap();
        assert!(close(m.sx, 1.0) && close(m.sy, 1.0) && close(m.tx, 0.1) && close(m.ty, 0.0));

        let double = AffineTS {
            sx: 2.0,
            sy: 2.0,
            tx: 0.0,
            ty: 0.0,
        };
        let pairs = row(3, &double);
        let refs: Vec<&MatchPair> = pairs.iter().collect();
        let m = fit_ts(&refs).unwrap();
        assert!(close(m.sx, 2.0) && close(m.sy, 2.0) && close(m.tx, 0.0) && close(m.ty, 0.0));
    }

    #[test]
    fn fit_degenerate_axes() {
        let p = pair(0, [0.3, 0.3, 0.3, 0.3], [0.4, 0.5, 0.4, 0.5]);
        assert_eq!(fit_ts(&[&p, &p]), Err(FitError::DegenerateSample));
        let a = pair(0, [0.1, 0.3, 0.2, 0.3], [0.1, 0.5, 0.2, 0.5]);
        let b = pair(1, [0.4, 0.3, 0.5, 0.3], [0.4, 0.5, 0.5, 0.5]);
        let m = fit_ts(&[&a, &b]).unwrap();
        assert!(close(m.sx, 1.0) && close(m.sy, 1.0) && close(m.ty, 0.2));
    }

    #[test]
    fn residual_is_swap_symmetric() {
        let t = AffineTS {
            sx: 1.7,
            sy: 0.8,
            tx: 0.05,
            ty: -0.1,
        };
        let p = pair(0, [0.1, 0.2, 0.3, 0.4], [0.25, 0.1, 0.6, 0.3]);
        let swapped = pair(0, p.pred.norm_bbox, p.gt.norm_bbox);
        assert!(close(t.residual(&p), t.inverse().residual(&swapped)));
    }

    #[test]
    fn uniform_shift_keeps_everything() {
        let t = AffineTS {
            sx: 1.1,
            sy: 0.9,
            tx: 0.05,
            ty: 0.02,
        };
        let out = ransac_filter(set(row(20, &t)), &RansacParams::default());
        assert_eq!(out.pairs.len(), 20);
        assert!(out.unmatched_gt.is_empty());
    }

    #[test]
    fn two_line_groups_survive() {
        let mut pairs = row(10, &AffineTS::IDENTITY);
        for p in &mut pairs[5..] {
            p.pred.norm_bbox[1] += 0.5;
            p.pred.norm_bbox[3] += 0.5;
        }
        let out = ransac_filter(set(pairs), &RansacParams::default());
        assert_eq!(out.pairs.len(), 10);
    }

    #[test]
    fn single_outlier_is_dropped() {
        let mut pairs = row(10, &AffineTS::IDENTITY);
        pairs[4].pred.norm_bbox[0] += 0.4;
        pairs[4].pred.norm_bbox[2] += 0.4;
        let out = ransac_filter(set(pairs), &RansacParams::default());
        assert_eq!(out.pairs.len(), 9);
        assert_eq!(out.unmatched_gt.len(), 1);
        assert_eq!(out.unmatched_gt[0].token.order_index, 4);
    }

    #[test]
    fn small_sets() {
        let p = RansacParams::default();
        assert_eq!(ransac_filter(MatchSet::default(), &p), MatchSet::default());
        let aligned = pair(0, [0.1, 0.1, 0.2, 0.2], [0.1, 0.1, 0.2, 0.21]);
        assert_eq!(ransac_filter(set(vec![aligned]), &p).pairs.len(), 1);
        let off = pair(0, [0.1, 0.1, 0.2, 0.2], [0.6, 0.1, 0.7, 0.2]);
        let out = ransac_filter(set(vec![off]), &p);
        assert_eq!((out.pairs.len(), out.unmatched_pred.len()), (0, 1));
    }

    #[test]
    fn crossed_pair_is_rejected() {
        // mirrored positions need a negative scale
        let a = pair(0, [0.0, 0.0, 0.4, 1.0], [0.6, 0.0, 1.0, 1.0]);
        let b = pair(1, [0.6, 0.0, 1.0, 1.0], [0.0, 0.0, 0.4, 1.0]);
        let out = ransac_filter(set(vec![a, b]), &RansacParams::default());
        assert!(out.pairs.is_empty());
        assert_eq!(out.unmatched_gt.len(), 2);
    }

    #[test]
    fn params_validation() {
        assert!(RansacParams::default().validate().is_ok());
        let bad = RansacParams {
            inlier_tol: 0.0,
            ..RansacParams::default()
        };
        assert!(bad.validate().is_err());
    }

    proptest! {
        #[test]
        fn fit_recovers_transform(
            sx in 0.2f64..5.0, sy in 0.2f64..5.0,
            tx in -1.0f64..1.0, ty in -1.0f64..1.0,
            n in 2usize..15,
        ) {
            let t = AffineTS { sx, sy, tx, ty };
            let pairs = row(n, &t);
            let refs: Vec<&MatchPair> = pairs.iter().collect();
            let m = fit_ts(&refs).unwrap();
            prop_assert!(close(m.sx, sx) && close(m.sy, sy) && close(m.tx, tx) && close(m.ty, ty));
        }

        #[test]
        fn elimination_is_conservative(
            n in 0usize..30,
            noise in proptest::collection::vec((0.0f64..0.3, 0.0f64..0.3), 30),
            seed in 0u64..4,
        ) {
            let mut pairs = row(n, &AffineTS { sx: 1.2, sy: 1.0, tx: 0.01, ty: 0.0 });
            for (p, (dx, dy)) in pairs.iter_mut().zip(&noise) {
                p.pred.norm_bbox[0] += dx;
                p.pred.norm_bbox[1] += dy;
            }
            let params = RansacParams { seed, ..RansacParams::default() };
            let before = set(pairs);
            let out = ransac_filter(before.clone(), &params);
            let dropped = n - out.pairs.len();
            prop_assert!(out.pairs.len() <= n);
            prop_assert_eq!(out.unmatched_gt.len(), dropped);
            prop_assert_eq!(out.unmatched_pred.len(), dropped);
            prop_assert_eq!(ransac_filter(before, &params), out);
        }
    }
}
