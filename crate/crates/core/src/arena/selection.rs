//! Index-space selection metrics: F1, IoU, F1@K, SoftF1@K, Chamfer.

use std::collections::BTreeSet;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SetMetrics {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub iou: f64,
}

fn f1(precision: f64, recall: f64) -> f64 {
    if precision + recall == 0.0 {
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    }
}

fn require_gt(gt: &[usize]) -> Result<()> {
    if gt.is_empty() {
        Err(Error::invalid("ground-truth shot set is empty"))
    } else {
        Ok(())
    }
}

/// Precision/recall F1 and IoU on shot index sets (duplicates ignored).
pub fn set_metrics(pred: &[usize], gt: &[usize]) -> Result<SetMetrics> {
    require_gt(gt)?;
    let p: BTreeSet<usize> = pred.iter().copied().collect();
    let g: BTreeSet<usize> = gt.iter().copied().collect();
    let inter = p.intersection(&g).count() as f64;
    let union = p.union(&g).count() as f64;
    let precision = if p.is_empty() { 0.0 } else { inter / p.len() as f64 };
    let recall = inter / g.len() as f64;
    Ok(SetMetrics {
        precision,
        recall,
        f1: f1(precision, recall),
        iou: inter / union,
    })
}

/// F1 of the first `k` predicted shots against the full ground truth.
pub fn f1_at_k(pred: &[usize], gt: &[usize], k: usize) -> Result<f64> {
    Ok(set_metrics(&pred[..k.min(pred.len())], gt)?.f1)
}

/// F1 under a one-to-one matching where a predicted and a ground-truth
/// index may pair up when they differ by at most `k`.
///
/// Each prediction is an interval `[p − k, p + k]` and every interval has
/// the same width, so matching predictions in increasing order to the
/// smallest free ground-truth index inside their interval is maximum.
pub fn soft_f1_at_k(pred: &[usize], gt: &[usize], k: usize) -> Result<f64> {
    require_gt(gt)?;
    if pred.is_empty() {
        return Ok(0.0);
    }
    let mut p = pred.to_vec();
    let mut g = gt.to_vec();
    p.sort_unstable();
    g.sort_unstable();
    let mut matches = 0usize;
    let mut next = 0usize;
    for &x in &p {
        while next < g.len() && g[next] + k < x {
            next += 1;
        }
        if next < g.len() && g[next] <= x + k {
            matches += 1;
            next += 1;
        }
    }
    let precision = matches as f64 / p.len() as f64;
    let recall = matches as f64 / g.len() as f64;
    Ok(f1(precision, recall))
}

/// Symmetric mean nearest-neighbour distance between index sets.
pub fn chamfer(pred: &[usize], gt: &[usize]) -> Result<f64> {
    if pred.is_empty() || gt.is_empty() {
        return Err(Error::invalid("chamfer distance needs two non-empty sets"));
    }
    let p: Vec<usize> = pred.iter().copied().collect::<BTreeSet<_>>().into_iter().collect();
    let g: Vec<usize> = gt.iter().copied().collect::<BTreeSet<_>>().into_iter().collect();
    Ok(0.5 * (mean_nearest(&p, &g) + mean_nearest(&g, &p)))
}

/// Mean over `from` of the distance to the nearest element of sorted `to`.
fn mean_nearest(from: &[usize], to: &[usize]) -> f64 {
    let total: usize = from
        .iter()
        .map(|&x| {
            let pos = to.partition_point(|&y| y < x);
            let after = to.get(pos).map(|&y| y - x);
            let before = pos.checked_sub(1).map(|b| x - to[b]);
            after.into_iter().chain(before).min().unwrap()
        })
        .sum();
    total as f64 / from.len() as f64
}
