//! Ranking metrics over `(score, label)` pairs.

use crate::error::{Error, Result};

fn check(scores: &[f64], labels: &[bool]) -> Result<(usize, usize)> {
    if scores.len() != labels.len() {
        return Err(Error::InvalidParameter("scores and labels differ in length".into()));
    }
    if scores.iter().any(|s| s.is_nan()) {
        return Err(Error::InvalidParameter("NaN score".into()));
    }
    let p = labels.iter().filter(|&&l| l).count();
    Ok((p, labels.len() - p))
}

/// Indices sorted by descending score.
fn descending(scores: &[f64]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..scores.len()).collect();
    idx.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]));
    idx
}

/// Visit blocks of tied scores in descending order as `(positives, negatives)`.
fn tie_blocks(scores: &[f64], labels: &[bool], mut visit: impl FnMut(usize, usize)) {
    let idx = descending(scores);
    let mut start = 0;
    while start < idx.len() {
        let s = scores[idx[start]];
        let mut end = start;
        let (mut tp, mut fp) = (0, 0);
        while end < idx.len() && scores[idx[end]] == s {
            if labels[idx[end]] {
                tp += 1;
            } else {
                fp += 1;
            }
            end += 1;
        }
        visit(tp, fp);
        start = end;
    }
}

/// Area under the ROC curve: the fraction of (positive, negative) pairs with
/// the positive ranked higher, ties counting one half.
pub fn auc(scores: &[f64], labels: &[bool]) -> Result<f64> {
    let (p, n) = check(scores, labels)?;
    if p == 0 || n == 0 {
        return Err(Error::UndefinedMetric("AUC needs both classes"));
    }
    // negatives already passed (strictly higher scores) count against positives
    let mut neg_above = 0.0;
    let mut wins = 0.0;
    tie_blocks(scores, labels, |tp, fp| {
        let (tp, fp) = (tp as f64, fp as f64);
        wins += tp * ((n as f64 - neg_above - fp) + 0.5 * fp);
        neg_above += fp;
    });
    Ok(wins / (p as f64 * n as f64))
}

/// Area under the precision-recall curve, non-interpolated:
/// `Σ (R_i - R_{i-1}) P_i` over tie blocks in descending score order.
pub fn aupr(scores: &[f64], labels: &[bool]) -> Result<f64> {
    let (p, _) = check(scores, labels)?;
    if p == 0 {
        return Err(Error::UndefinedMetric("AUPR needs a positive"));
    }
    let (mut tp_acc, mut fp_acc) = (0usize, 0usize);
    let mut area = 0.0;
    tie_blocks(scores, labels, |tp, fp| {
        tp_acc += tp;
        fp_acc += fp;
        if tp > 0 {
            area += (tp as f64 / p as f64) * (tp_acc as f64 / (tp_acc + fp_acc) as f64);
        }
    });
    Ok(area)
}

/// Crisp F-measure of predicted labels; 0 when there are no positives at all.
pub fn f_measure(predicted: &[bool], labels: &[bool]) -> Result<f64> {
    if predicted.len() != labels.len() {
        return Err(Error::InvalidParameter("predictions and labels differ in length".into()));
    }
    let (mut tp, mut fp, mut fneg) = (0usize, 0usize, 0usize);
    for (&p, &l) in predicted.iter().zip(labels) {
        match (p, l) {
            (true, true) => tp += 1,
            (true, false) => fp += 1,
            (false, true) => fneg += 1,
            _ => {}
        }
    }
    let den = 2 * tp + fp + fneg;
    Ok(if den == 0 { 0.0 } else { 2.0 * tp as f64 / den as f64 })
}

/// Mean of the defined values, `None` if none are defined.
pub fn mean_defined(values: impl IntoIterator<Item = Option<f64>>) -> Option<f64> {
    let (mut sum, mut count) = (0.0, 0usize);
    for v in values.into_iter().flatten() {
        sum += v;
        count += 1;
    }
    (count > 0).then(|| sum / count as f64)
}
