//! Energy-adaptive elastic selection of shots for bars.
//!
//! Each segment assigns one shot to a run of `k` consecutive bars and earns
//!
//! ```text
//! mean(S[j..j+k, i]) + λ_sm·cos(v_last, v_i) + λ_cut·(2·ē − 0.3)
//! ```
//!
//! where `ē` is the mean energy of the run. Multi-bar runs must fit the
//! shot: `Σ ℓ ≤ δ_i / η`. Picking a shot bans it and every shot whose
//! cosine similarity to it exceeds `θ_sim`.
//!
//! [`select`] runs a beam search whose states are bucketed by the first
//! unassigned bar. Buckets are processed in bar order and pruned to the
//! beam width just before expansion, so states that consumed different
//! spans never compete for the same slot. [`exhaustive_select`] enumerates
//! every valid alignment of a small instance and serves as the oracle.

mod beam;
mod exhaustive;
mod scorer;

pub use beam::select_with_similarity;
pub use exhaustive::{exhaustive_select, EXHAUSTIVE_MAX_BARS, EXHAUSTIVE_MAX_K, EXHAUSTIVE_MAX_SHOTS};
pub use scorer::ShotSimilarity;

use std::cmp::Ordering;

use ndarray::ArrayView1;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::scoring::FusedScores;
use crate::types::{is_excluded, BarTrack, ElasticAlignment, EngineParams, ShotTable};
use crate::vecmath::cosine;

/// Energy-adaptive cut bonus for one segment: `λ_cut·(2·ē − 0.3)`.
pub fn cut_bonus(mean_energy: f64, lambda_cut: f64) -> f64 {
    lambda_cut * (2.0 * mean_energy - 0.3)
}

/// Whether a shot of `shot_duration` seconds may cover `bar_durations`.
///
/// Single-bar spans are always allowed.
pub fn duration_feasible(shot_duration: f64, bar_durations: &[f64], eta: f64) -> bool {
    bar_durations.len() <= 1 || bar_durations.iter().sum::<f64>() <= shot_duration / eta
}

/// Score breakdown of one segment.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SegmentTerms {
    pub total: f64,
    pub avg_alignment: f64,
    pub smoothness: f64,
    pub bonus: f64,
}

impl SegmentTerms {
    pub(crate) fn new(avg_alignment: f64, smoothness: f64, bonus: f64) -> Self {
        Self {
            total: avg_alignment + smoothness + bonus,
            avg_alignment,
            smoothness,
            bonus,
        }
    }
}

/// Scores assigning `shot` to bars `bar..bar + span`.
///
/// Returns `None` if the span leaves the track or crosses an excluded entry.
/// Duration feasibility is not checked here; see [`duration_feasible`].
#[allow(clippy::too_many_arguments)]
pub fn transition_score(
    scores: &FusedScores,
    shot: usize,
    bar: usize,
    span: usize,
    last_feature: Option<ArrayView1<'_, f64>>,
    shot_feature: ArrayView1<'_, f64>,
    energy: &[f64],
    lambda_smooth: f64,
    lambda_cut: f64,
) -> Option<SegmentTerms> {
    if span == 0 || bar + span > scores.bars() || shot >= scores.shots() {
        return None;
    }
    let mut sum = 0.0;
    let mut energy_sum = 0.0;
    for (j, &e) in energy.iter().enumerate().skip(bar).take(span) {
        let s = scores.get(j, shot);
        if is_excluded(s) {
            return None;
        }
        sum += s;
        energy_sum += e;
    }
    let k = span as f64;
    let smoothness = last_feature.map_or(0.0, |v| lambda_smooth * cosine(v, shot_feature));
    Some(SegmentTerms::new(
        sum / k,
        smoothness,
        cut_bonus(energy_sum / k, lambda_cut),
    ))
}

/// Work counters from a beam search.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct BeamStats {
    pub states_expanded: usize,
    pub candidates_generated: usize,
    pub pruned: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SelectionResult {
    pub alignment: ElasticAlignment,
    pub total_score: f64,
    pub per_segment: Vec<SegmentTerms>,
    pub beam_stats: BeamStats,
}

/// Runs the beam search, building the shot-similarity structure first.
pub fn select(
    scores: &FusedScores,
    bars: &BarTrack,
    shots: &ShotTable,
    params: &EngineParams,
) -> Result<SelectionResult> {
    params.validate()?;
    let similarity = ShotSimilarity::new(shots.features(), params.theta_sim);
    select_with_similarity(scores, bars, shots, &similarity, params)
}

pub(crate) fn check_inputs(
    scores: &FusedScores,
    bars: &BarTrack,
    shots: &ShotTable,
    similarity: &ShotSimilarity,
    params: &EngineParams,
) -> Result<()> {
    params.validate()?;
    if scores.bars() != bars.count() || scores.shots() != shots.count() {
        return Err(Error::invalid(format!(
            "scores are {}x{} but there are {} bars and {} shots",
            scores.bars(),
            scores.shots(),
            bars.count(),
            shots.count()
        )));
    }
    if similarity.len() != shots.count() {
        return Err(Error::invalid("shot similarity was built for a different shot table"));
    }
    for j in 0..scores.bars() {
        if (0..scores.shots()).all(|i| is_excluded(scores.get(j, i))) {
            return Err(Error::Infeasible {
                bar: j + 1,
                reason: "no admissible shot".into(),
            });
        }
    }
    Ok(())
}

/// Deterministic preference between two complete or same-frontier paths:
/// higher score, then fewer segments, then the lexicographically smaller
/// `(shot, start_bar)` sequence. `Less` means `a` is preferred.
pub(crate) fn prefer(
    a_score: f64,
    a_segments: usize,
    a_path: impl FnOnce() -> Vec<(u32, u32)>,
    b_score: f64,
    b_segments: usize,
    b_path: impl FnOnce() -> Vec<(u32, u32)>,
) -> Ordering {
    b_score
        .total_cmp(&a_score)
        .then(a_segments.cmp(&b_segments))
        .then_with(|| a_path().cmp(&b_path()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::types::{ScoreMatrix, EXCLUDED};
    use approx::assert_abs_diff_eq;
    use ndarray::{array, Array2};

    fn fused(m: Array2<f64>) -> FusedScores {
        FusedScores::from_matrix(ScoreMatrix::with_exclusions(m).unwrap())
    }

    #[test]
    fn cut_bonus_anchors() {
        for lambda in [0.0, 0.5, 1.0, 3.7] {
            assert_abs_diff_eq!(cut_bonus(0.15, lambda), 0.0, epsilon = 1e-15);
        }
        assert_abs_diff_eq!(cut_bonus(1.0, 0.5), 0.85, epsilon = 1e-15);
        assert_abs_diff_eq!(cut_bonus(0.0, 0.5), -0.15, epsilon = 1e-15);
    }

    #[test]
    fn duration_examples() {
        assert!(duration_feasible(0.1, &[5.0], 0.9));
        assert!(duration_feasible(2.0, &[1.0, 1.0], 0.9));
        assert!(!duration_feasible(2.0, &[1.0, 1.0, 0.5], 0.9));
    }

    #[test]
    fn transition_examples() {
        let f = array![1.0, 0.0];
        let s = fused(array![[0.7]]);
        let t = transition_score(&s, 0, 0, 1, None, f.view(), &[0.4], 0.3, 0.0).unwrap();
        assert_abs_diff_eq!(t.total, 0.7, epsilon = 1e-15);

        let s = fused(array![[0.0]]);
        let t = transition_score(&s, 0, 0, 1, Some(f.view()), f.view(), &[0.15], 0.3, 0.5).unwrap();
        assert_abs_diff_eq!(t.total, 0.3, epsilon = 1e-15);

        let s = fused(array![[1.0], [0.0]]);
        let t = transition_score(&s, 0, 0, 2, None, f.view(), &[1.0, 1.0], 0.3, 0.5).unwrap();
        assert_abs_diff_eq!(t.avg_alignment, 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(t.total, 1.35, epsilon = 1e-12);
    }

    #[test]
    fn transition_rejects_excluded_span() {
        let f = array![1.0];
        let s = fused(array![[1.0], [EXCLUDED]]);
        assert!(transition_score(&s, 0, 0, 2, None, f.view(), &[1.0, 1.0], 0.3, 0.5).is_none());
        assert!(transition_score(&s, 0, 0, 3, None, f.view(), &[1.0, 1.0], 0.3, 0.5).is_none());
    }
}
