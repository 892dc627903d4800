//! Trajectory-level composition metrics.

use ndarray::Array2;

use crate::error::{Error, Result};
use crate::vecmath::normalize_rows;

/// DTW between two feature trajectories with step cost `1 − cosine`,
/// unweighted match/insert/delete steps, normalized by `n + m`.
pub fn sdtw(pred: &Array2<f64>, gt: &Array2<f64>) -> Result<f64> {
    let (n, m) = (pred.nrows(), gt.nrows());
    if n == 0 || m == 0 {
        return Err(Error::invalid("SDTW needs non-empty trajectories"));
    }
    if pred.ncols() != gt.ncols() {
        return Err(Error::invalid(format!(
            "SDTW feature widths differ: {} vs {}",
            pred.ncols(),
            gt.ncols()
        )));
    }
    let a = normalize_rows(pred, "predicted trajectory")?;
    let b = normalize_rows(gt, "ground-truth trajectory")?;
    // Rounding leaves ~1e-16 on identical rows; snap it so self-distance is 0.
    let cost = a
        .dot(&b.t())
        .mapv(|c| 1.0 - c.clamp(-1.0, 1.0))
        .mapv(|d| if d < 1e-12 { 0.0 } else { d });

    let mut prev = vec![f64::INFINITY; m + 1];
    let mut curr = vec![f64::INFINITY; m + 1];
    prev[0] = 0.0;
    for i in 1..=n {
        curr[0] = f64::INFINITY;
        for j in 1..=m {
            let best = prev[j - 1].min(prev[j]).min(curr[j - 1]);
            curr[j] = cost[[i - 1, j - 1]] + best;
        }
        std::mem::swap(&mut prev, &mut curr);
    }
    Ok(prev[m] / (n + m) as f64)
}

/// Fraction of cut instants lying within `tolerance` seconds of a bar
/// boundary. Not part of the core report; 1.0 when there are no cuts.
pub fn beat_align(cut_times: &[f64], bar_boundaries: &[f64], tolerance: f64) -> f64 {
    if cut_times.is_empty() {
        return 1.0;
    }
    let hits = cut_times
        .iter()
        .filter(|&&t| bar_boundaries.iter().any(|&b| (b - t).abs() <= tolerance))
        .count();
    hits as f64 / cut_times.len() as f64
}
