//! Bar-shot alignment scores from embeddings, and fusion with the candidate
//! mask and the energy/dynamics/importance priors.

use ndarray::Array2;

use crate::error::{Error, Result};
use crate::types::{CandidateMask, FusionMode, ScoreMatrix, EXCLUDED};
use crate::vecmath::normalize_rows;

/// Temperature-scaled cosine similarity between every bar and every shot.
pub fn alignment_scores(
    audio_embeddings: &Array2<f64>,
    visual_embeddings: &Array2<f64>,
    temperature: f64,
) -> Result<ScoreMatrix> {
    if !(temperature > 0.0 && temperature.is_finite()) {
        return Err(Error::invalid(format!(
            "temperature must be positive, got {temperature}"
        )));
    }
    if audio_embeddings.ncols() != visual_embeddings.ncols() {
        return Err(Error::invalid(format!(
            "embedding widths differ: audio {} vs visual {}",
            audio_embeddings.ncols(),
            visual_embeddings.ncols()
        )));
    }
    let a = normalize_rows(audio_embeddings, "audio embeddings")?;
    let v = normalize_rows(visual_embeddings, "visual embeddings")?;
    let mut s = a.dot(&v.t());
    s.mapv_inplace(|c| c.clamp(-1.0, 1.0) / temperature);
    ScoreMatrix::new(s)
}

/// Fused scores plus, optionally, each additive prior on its own.
#[derive(Debug, Clone, PartialEq)]
pub struct FusedScores {
    scores: ScoreMatrix,
    pub energy_term: Option<Array2<f64>>,
    pub importance_term: Option<Array2<f64>>,
}

impl FusedScores {
    /// Wraps a score matrix that already carries any exclusions.
    pub fn from_matrix(scores: ScoreMatrix) -> Self {
        Self {
            scores,
            energy_term: None,
            importance_term: None,
        }
    }

    pub fn matrix(&self) -> &ScoreMatrix {
        &self.scores
    }

    pub fn values(&self) -> &Array2<f64> {
        self.scores.values()
    }

    pub fn get(&self, bar: usize, shot: usize) -> f64 {
        self.scores.get(bar, shot)
    }

    pub fn bars(&self) -> usize {
        self.scores.bars()
    }

    pub fn shots(&self) -> usize {
        self.scores.shots()
    }
}

/// Weights for [`fuse_scores`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FusionWeights {
    pub lambda_energy: f64,
    pub lambda_importance: f64,
    pub mode: FusionMode,
    pub keep_terms: bool,
}

/// `S + λ_e·(e ⊗ d) + λ_imp·p` on admissible entries.
///
/// In [`FusionMode::HardExclusion`] masked entries become [`EXCLUDED`]; in
/// [`FusionMode::Literal`] they contribute `0` from `S` but still receive
/// both priors.
pub fn fuse_scores(
    scores: &ScoreMatrix,
    mask: &CandidateMask,
    energy: &[f64],
    dynamics: &[f64],
    importance: &[f64],
    weights: FusionWeights,
) -> Result<FusedScores> {
    let (bars, shots) = scores.values().dim();
    if mask.bars() != bars || mask.shots() != shots {
        return Err(Error::invalid(format!(
            "mask is {}x{} but scores are {bars}x{shots}",
            mask.bars(),
            mask.shots()
        )));
    }
    if energy.len() != bars || dynamics.len() != shots || importance.len() != shots {
        return Err(Error::invalid(format!(
            "prior lengths (energy {}, dynamics {}, importance {}) do not match {bars}x{shots} scores",
            energy.len(),
            dynamics.len(),
            importance.len()
        )));
    }
    let energy_term = Array2::from_shape_fn((bars, shots), |(j, i)| weights.lambda_energy * energy[j] * dynamics[i]);
    let importance_term = Array2::from_shape_fn((bars, shots), |(_, i)| weights.lambda_importance * importance[i]);

    let values = Array2::from_shape_fn((bars, shots), |(j, i)| {
        let admitted = mask.admits(j, i);
        match (weights.mode, admitted) {
            (FusionMode::HardExclusion, false) => EXCLUDED,
            (FusionMode::Literal, false) => energy_term[[j, i]] + importance_term[[j, i]],
            (_, true) => scores.get(j, i) + energy_term[[j, i]] + importance_term[[j, i]],
        }
    });
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::invalid("fused scores are not finite"));
    }
    Ok(FusedScores {
        scores: ScoreMatrix::with_exclusions(values)?,
        energy_term: weights.keep_terms.then_some(energy_term),
        importance_term: weights.keep_terms.then_some(importance_term),
    })
}
