//! Brute-force reference implementations used to cross-check the fast paths.

use crate::io::{BinaryMask, Class, ClassMask};

use super::Confusion;

fn points(mask: &BinaryMask) -> Vec<(i64, i64)> {
    let w = mask.width();
    mask.indices()
        .map(|i| ((i / w) as i64, (i % w) as i64))
        .collect()
}

fn p95(mut d: Vec<f64>) -> f64 {
    d.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let pos = 0.95 * (d.len() as f64 - 1.0);
    let i = pos as usize;
    if i + 1 >= d.len() {
        return d[d.len() - 1];
    }
    d[i] * (1.0 - (pos - i as f64)) + d[i + 1] * (pos - i as f64)
}

/// All-pairs O(|A||B|) symmetric 95th-percentile Hausdorff distance.
/// `+inf` when either mask is blank.
pub fn brute_force_hd95(pred: &BinaryMask, gt: &BinaryMask) -> f64 {
    let a = points(pred);
    let b = points(gt);
    if a.is_empty() || b.is_empty() {
        return f64::INFINITY;
    }
    let nearest = |from: &[(i64, i64)], to: &[(i64, i64)]| -> Vec<f64> {
        from.iter()
            .map(|&(y, x)| {
                let best = to
                    .iter()
                    .map(|&(v, u)| (y - v) * (y - v) + (x - u) * (x - u))
                    .min()
                    .unwrap();
                (best as f64).sqrt()
            })
            .collect()
    };
    p95(nearest(&a, &b)).max(p95(nearest(&b, &a)))
}

/// Per-pixel tally of one-vs-rest counts for `class`.
pub fn brute_force_confusion(pred: &ClassMask, gt: &ClassMask, class: Class) -> Confusion {
    let mut c = Confusion::default();
    for y in 0..gt.height() {
        for x in 0..gt.width() {
            match (pred.get(y, x) == class, gt.get(y, x) == class) {
                (true, true) => c.tp += 1,
                (true, false) => c.fp += 1,
                (false, true) => c.fn_ += 1,
                (false, false) => c.tn += 1,
            }
        }
    }
    c
}
