//! Multi-round consistency check on a prediction that wrapped onto a
//! second line, plus one stray match.
use cdm::latex::{EquivTable, Token, TokenKind};
use cdm::localize::{BBox, Element};
use cdm::matcher::{MatchPair, MatchSet};
use cdm::render::Rgb;
use cdm::validator::{fit_ts, ransac_filter, AffineTS, RansacParams};

fn element(i: usize, b: [f64; 4]) -> Element {
    Element {
        token: Token {
            text: "x".into(),
            kind: TokenKind::Char,
            order_index: i,
            equiv_class: EquivTable::builtin().class_of("x").into(),
        },
        color: Rgb([0, 0, 15]),
        bbox: BBox {
            x1: 0,
            y1: 0,
            x2: 0,
            y2: 0,
        },
        norm_bbox: b,
        norm_order: 0.0,
    }
}

fn main() {
    let first = AffineTS {
        sx: 1.6,
        sy: 0.5,
        tx: 0.0,
        ty: 0.0,
    };
    let second = AffineTS {
        sx: 1.6,
        sy: 0.5,
        tx: -0.8,
        ty: 0.5,
    };
    let mut pairs = Vec::new();
    for i in 0..10 {
        let x = i as f64 * 0.1;
        let g = [x, 0.2, x + 0.08, 0.9];
        let t = if i < 5 { &first } else { &second };
        pairs.push(MatchPair {
            gt: element(i, g),
            pred: element(i, t.apply(&g)),
            cost: 0.0,
            cost_parts: (0.0, 0.0, 0.0),
        });
    }
    pairs[7].pred.norm_bbox = [0.9, 0.0, 0.95, 0.2];

    let refs: Vec<&MatchPair> = pairs[..5].iter().collect();
    println!("fit on first line: {:?}", fit_ts(&refs).unwrap());

    let out = ransac_filter(
        MatchSet {
            pairs,
            ..MatchSet::default()
        },
        &RansacParams::default(),
    );
    let kept: Vec<usize> = out.pairs.iter().map(|p| p.gt.token.order_index).collect();
    let dropped: Vec<usize> = out
        .unmatched_gt
        .iter()
        .map(|e| e.token.order_index)
        .collect();
    println!("kept {kept:?}");
    println!("dropped {dropped:?}");
}
