//! Sinkhorn projection of score matrices, IoU-based soft targets, and
//! evaluators for the KL, Sinkhorn and InfoNCE loss terms.
//!
//! Nothing here computes gradients. The evaluators exist so the loss
//! arithmetic can be checked against hand-derived values and so tests can
//! obtain structured Sinkhorn targets.

use ndarray::{Array2, ArrayView1, Axis};

use crate::error::{Error, Result};
use crate::types::{is_excluded, EngineParams, ScoreMatrix};
use crate::vecmath::normalize_rows;

/// Per-row KL contribution reported when the target has zero mass where the
/// prediction does not (the true divergence is infinite).
pub const KL_SATURATION: f64 = 1e9;

const ROW_SUM_TOLERANCE: f64 = 1e-6;

/// Result of [`sinkhorn_project`].
#[derive(Debug, Clone, PartialEq)]
pub struct SinkhornTarget {
    pub values: Array2<f64>,
    pub iterations_run: usize,
    /// Max |row sum − 1| after the final step.
    pub row_residual: f64,
    /// Max |column sum − J/I| after the final step.
    pub col_residual: f64,
}

fn check_scores(scores: &ScoreMatrix) -> Result<()> {
    if scores.values().iter().any(|&v| is_excluded(v) || !v.is_finite()) {
        return Err(Error::invalid("score matrix must be finite and unmasked"));
    }
    if scores.bars() == 0 || scores.shots() == 0 {
        return Err(Error::invalid("score matrix must be non-empty"));
    }
    Ok(())
}

fn check_temperature(name: &str, t: f64) -> Result<()> {
    if t > 0.0 && t.is_finite() {
        Ok(())
    } else {
        Err(Error::invalid(format!("{name} must be positive, got {t}")))
    }
}

/// Alternating row/column normalization of `exp(S / tau_s)`.
///
/// Rows are scaled to sum to 1 and columns to `J / I`, so total mass stays
/// `J` for rectangular inputs. With `iters = 0` the raw exponentiated matrix
/// is returned. Otherwise each row's maximum is subtracted before
/// exponentiation; the first row normalization cancels that shift exactly.
pub fn sinkhorn_project(scores: &ScoreMatrix, tau_s: f64, iters: usize) -> Result<SinkhornTarget> {
    check_scores(scores)?;
    check_temperature("sinkhorn temperature", tau_s)?;
    let s = scores.values();
    let (bars, shots) = s.dim();
    let col_target = bars as f64 / shots as f64;

    let mut m = if iters == 0 {
        s.mapv(|v| (v / tau_s).exp())
    } else {
        let mut m = s.mapv(|v| v / tau_s);
        for mut row in m.axis_iter_mut(Axis(0)) {
            let max = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            row.mapv_inplace(|v| (v - max).exp());
        }
        m
    };
    if m.iter().any(|v| !v.is_finite()) {
        return Err(Error::invalid(
            "exp(S / tau_s) overflows; use at least one Sinkhorn iteration",
        ));
    }

    for _ in 0..iters {
        for mut row in m.axis_iter_mut(Axis(0)) {
            let sum = row.sum();
            row.mapv_inplace(|v| v / sum);
        }
        for mut col in m.axis_iter_mut(Axis(1)) {
            let sum = col.sum();
            col.mapv_inplace(|v| v * col_target / sum);
        }
    }

    let row_residual = m.axis_iter(Axis(0)).map(|r| (r.sum() - 1.0).abs()).fold(0.0, f64::max);
    let col_residual = m
        .axis_iter(Axis(1))
        .map(|c| (c.sum() - col_target).abs())
        .fold(0.0, f64::max);
    Ok(SinkhornTarget {
        values: m,
        iterations_run: iters,
        row_residual,
        col_residual,
    })
}

/// Time intervals `(start, end)` in seconds with `start < end`.
#[derive(Debug, Clone, PartialEq)]
pub struct IntervalSet(Vec<(f64, f64)>);

impl IntervalSet {
    pub fn new(intervals: Vec<(f64, f64)>) -> Result<Self> {
        for (n, &(a, b)) in intervals.iter().enumerate() {
            if !a.is_finite() || !b.is_finite() || a >= b {
                return Err(Error::invalid(format!(
                    "interval {}: start {a} must be before end {b}",
                    n + 1
                )));
            }
        }
        Ok(Self(intervals))
    }

    /// Consecutive intervals from a boundary list `[t0, t1, ..., tn]`.
    pub fn from_boundaries(bounds: &[f64]) -> Result<Self> {
        Self::new(bounds.windows(2).map(|w| (w[0], w[1])).collect())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[(f64, f64)] {
        &self.0
    }
}

fn temporal_iou(a: (f64, f64), b: (f64, f64)) -> f64 {
    let inter = (a.1.min(b.1) - a.0.max(b.0)).max(0.0);
    if inter == 0.0 {
        return 0.0;
    }
    let union = (a.1 - a.0) + (b.1 - b.0) - inter;
    inter / union
}

/// Bar-by-shot temporal IoU, each row renormalized to sum to 1 when it has
/// any overlap and left all-zero otherwise.
pub fn soft_target_from_iou(shots: &IntervalSet, bars: &IntervalSet) -> Result<ScoreMatrix> {
    let mut m = Array2::zeros((bars.len(), shots.len()));
    for (j, &bar) in bars.as_slice().iter().enumerate() {
        for (i, &shot) in shots.as_slice().iter().enumerate() {
            m[[j, i]] = temporal_iou(bar, shot);
        }
    }
    for mut row in m.axis_iter_mut(Axis(0)) {
        let sum = row.sum();
        if sum > 0.0 {
            row.mapv_inplace(|v| v / sum);
        }
    }
    ScoreMatrix::new(m)
}

/// Row-wise softmax of `m / tau`.
pub fn softmax_rows(m: &Array2<f64>, tau: f64) -> Array2<f64> {
    let mut out = m.mapv(|v| v / tau);
    for mut row in out.axis_iter_mut(Axis(0)) {
        let max = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        row.mapv_inplace(|v| (v - max).exp());
        let sum = row.sum();
        row.mapv_inplace(|v| v / sum);
    }
    out
}

/// A loss value that may have been saturated at [`KL_SATURATION`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossValue {
    pub value: f64,
    pub saturated: bool,
}

fn row_kl(p: ArrayView1<'_, f64>, q: ArrayView1<'_, f64>) -> (f64, bool) {
    let mut kl = 0.0;
    for (&pi, &qi) in p.iter().zip(q.iter()) {
        if pi == 0.0 {
            continue;
        }
        if qi == 0.0 {
            return (KL_SATURATION, true);
        }
        kl += pi * (pi.ln() - qi.ln());
    }
    // Rounding can push a zero divergence a hair below zero.
    (kl.max(0.0), false)
}

fn mean_row_kl(pred: &Array2<f64>, target: &Array2<f64>) -> LossValue {
    let mut total = 0.0;
    let mut saturated = false;
    for (p, q) in pred.axis_iter(Axis(0)).zip(target.axis_iter(Axis(0))) {
        let (kl, sat) = row_kl(p, q);
        total += kl;
        saturated |= sat;
    }
    LossValue {
        value: total / pred.nrows() as f64,
        saturated,
    }
}

/// Mean over bars of `KL(softmax(S_row / tau_t) || target_row)`.
pub fn loss_kl(scores: &ScoreMatrix, target: &Array2<f64>, tau_t: f64) -> Result<LossValue> {
    check_scores(scores)?;
    check_temperature("target temperature", tau_t)?;
    if target.dim() != scores.values().dim() {
        return Err(Error::invalid(format!(
            "target is {:?} but scores are {:?}",
            target.dim(),
            scores.values().dim()
        )));
    }
    for (j, row) in target.axis_iter(Axis(0)).enumerate() {
        if row.iter().any(|&v| !v.is_finite() || v < 0.0) {
            return Err(Error::invalid(format!(
                "target row {} has negative or non-finite entries",
                j + 1
            )));
        }
        let sum = row.sum();
        if (sum - 1.0).abs() > ROW_SUM_TOLERANCE {
            return Err(Error::invalid(format!(
                "target row {} sums to {sum}, expected 1",
                j + 1
            )));
        }
    }
    let pred = softmax_rows(scores.values(), tau_t);
    Ok(mean_row_kl(&pred, target))
}

/// Symmetric InfoNCE over B paired pooled embeddings (row b of `audio`
/// matches row b of `visual`).
pub fn loss_infonce(audio: &Array2<f64>, visual: &Array2<f64>, temperature: f64) -> Result<f64> {
    check_temperature("temperature", temperature)?;
    if audio.nrows() == 0 || audio.dim() != visual.dim() {
        return Err(Error::invalid(format!(
            "pooled embeddings must be non-empty with equal shapes, got {:?} and {:?}",
            audio.dim(),
            visual.dim()
        )));
    }
    let a = normalize_rows(audio, "pooled audio")?;
    let v = normalize_rows(visual, "pooled visual")?;
    let logits = a.dot(&v.t()) / temperature;
    let b = logits.nrows();

    let cross_entropy = |m: &Array2<f64>| -> f64 {
        m.axis_iter(Axis(0))
            .enumerate()
            .map(|(r, row)| {
                let max = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                let lse = max + row.iter().map(|x| (x - max).exp()).sum::<f64>().ln();
                lse - row[r]
            })
            .sum::<f64>()
            / b as f64
    };
    let rows = cross_entropy(&logits);
    let cols = cross_entropy(&logits.t().to_owned());
    Ok(0.5 * (rows + cols))
}

/// Mean over bars of `KL(softmax(S_row) || P_row)`, where `P` is the
/// row-renormalized Sinkhorn projection of `S`.
pub fn loss_sinkhorn(scores: &ScoreMatrix, tau_s: f64, iters: usize) -> Result<LossValue> {
    let mut target = sinkhorn_project(scores, tau_s, iters)?.values;
    for mut row in target.axis_iter_mut(Axis(0)) {
        let sum = row.sum();
        row.mapv_inplace(|v| v / sum);
    }
    let pred = softmax_rows(scores.values(), 1.0);
    Ok(mean_row_kl(&pred, &target))
}

/// The three fine-tuning terms and their weighted sum.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FinetuneLoss {
    pub total: f64,
    pub kl: f64,
    pub sink: f64,
    pub infonce: f64,
    /// Set when the KL term hit [`KL_SATURATION`].
    pub saturated: bool,
}

/// `kl + lambda_sink * sink + lambda_con * infonce`, with temperatures and
/// weights taken from `params`. InfoNCE uses `params.temperature`.
pub fn loss_finetune(
    scores: &ScoreMatrix,
    gt_target: &Array2<f64>,
    params: &EngineParams,
    pooled_audio: &Array2<f64>,
    pooled_visual: &Array2<f64>,
) -> Result<FinetuneLoss> {
    let kl = loss_kl(scores, gt_target, params.target_temperature)?;
    let sink = loss_sinkhorn(scores, params.sinkhorn_temperature, params.sinkhorn_iters)?;
    let infonce = loss_infonce(pooled_audio, pooled_visual, params.temperature)?;
    Ok(FinetuneLoss {
        total: kl.value + params.lambda_sink * sink.value + params.lambda_con * infonce,
        kl: kl.value,
        sink: sink.value,
        infonce,
        saturated: kl.saturated || sink.saturated,
    })
}
