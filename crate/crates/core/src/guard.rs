//! Shot-pool filtering before selection: spoiler-region exclusion, shot
//! importance, candidate-mask construction and keyword refinement.

use ndarray::{Array1, Array2, Axis};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::types::{CandidateMask, ShotTable};
use crate::vecmath::{max_normalize, normalize_rows, normalize_rows_lenient};

/// Relative position in the movie where the importance weight peaks.
const POSITION_PEAK: f64 = 0.4;
const POSITION_FALLOFF: f64 = 0.6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GuardParams {
    /// Shots starting in this final fraction of the movie are excluded.
    pub tail_fraction: f64,
    /// Shots ending inside this opening fraction are excluded.
    pub head_fraction: f64,
    pub knn_k: usize,
    pub keyword_threshold: f64,
}

impl Default for GuardParams {
    fn default() -> Self {
        Self {
            tail_fraction: 0.15,
            head_fraction: 0.02,
            knn_k: 5,
            keyword_threshold: 0.25,
        }
    }
}

impl GuardParams {
    pub fn validate(&self) -> Result<()> {
        let in_range = |f: f64| (0.0..1.0).contains(&f);
        if !in_range(self.tail_fraction) || !in_range(self.head_fraction) {
            return Err(Error::invalid("guard fractions must lie in [0, 1)"));
        }
        if self.head_fraction + self.tail_fraction >= 1.0 {
            return Err(Error::invalid("head_fraction + tail_fraction must be below 1"));
        }
        if self.knn_k == 0 {
            return Err(Error::invalid("knn_k must be at least 1"));
        }
        Ok(())
    }
}

/// 1 for shots outside the head and tail regions, 0 otherwise.
pub fn safe_mask(shots: &ShotTable, params: &GuardParams) -> Vec<f64> {
    let duration = shots.movie_duration();
    let tail_start = (1.0 - params.tail_fraction) * duration;
    let head_end = params.head_fraction * duration;
    (0..shots.count())
        .map(|i| {
            let spoiler = shots.start_times()[i] >= tail_start;
            let opening = shots.end_time(i) <= head_end;
            if spoiler || opening {
                0.0
            } else {
                1.0
            }
        })
        .collect()
}

/// Rounding leaves identical unit vectors a few ulps short of cosine 1;
/// such residues would survive max-normalization, so they are snapped to 0.
fn cosine_distance(cos: f64) -> f64 {
    let d = 1.0 - cos;
    if d < 1e-12 {
        0.0
    } else {
        d
    }
}

/// Visual distinctiveness times a position weight, max-normalized.
///
/// Distinctiveness is the mean cosine distance to the `knn_k` nearest other
/// shots. The position weight falls off linearly from 1 at 40% of the
/// runtime to 0 at the far end.
pub fn shot_importance(shots: &ShotTable, params: &GuardParams) -> Vec<f64> {
    let n = shots.count();
    if n == 1 {
        return vec![1.0];
    }
    let unit = normalize_rows_lenient(shots.features());
    let sims = unit.dot(&unit.t());
    let k = params.knn_k.min(n - 1);
    let mut dists = Vec::with_capacity(n - 1);
    let mut importance: Vec<f64> = (0..n)
        .map(|i| {
            dists.clear();
            dists.extend((0..n).filter(|&o| o != i).map(|o| cosine_distance(sims[[i, o]])));
            dists.sort_by(f64::total_cmp);
            let distinct = dists[..k].iter().sum::<f64>() / k as f64;
            let mid = (shots.start_times()[i] + 0.5 * shots.durations()[i]) / shots.movie_duration();
            let position = (1.0 - (mid - POSITION_PEAK).abs() / POSITION_FALLOFF).clamp(0.0, 1.0);
            distinct.max(0.0) * position
        })
        .collect();
    max_normalize(&mut importance);
    importance
}

/// Broadcasts the safe mask across `bars` rows (admissible iff `m_i > 0.5`).
pub fn build_candidate_mask(safe: &[f64], bars: usize) -> Result<CandidateMask> {
    if let Some(bad) = safe.iter().find(|v| !(0.0..=1.0).contains(*v)) {
        return Err(Error::invalid(format!("safe mask value {bad} outside [0, 1]")));
    }
    if bars == 0 {
        return Err(Error::invalid("candidate mask needs at least one bar"));
    }
    let row = Array1::from_iter(safe.iter().map(|&m| u8::from(m > 0.5)));
    if row.iter().all(|&v| v == 0) {
        return Err(Error::Infeasible {
            bar: 1,
            reason: "empty candidate pool".into(),
        });
    }
    let values = row
        .broadcast((bars, safe.len()))
        .expect("row broadcasts to bars x shots")
        .to_owned();
    CandidateMask::new(values, safe.to_vec())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KeywordMode {
    /// Keep only shots close enough to some keyword.
    Require,
    /// Leave the mask alone and return a per-shot similarity bonus.
    Boost,
}

#[derive(Debug, Clone, PartialEq)]
pub struct KeywordRefinement {
    pub mask: CandidateMask,
    /// Per-shot max keyword similarity clipped to [0, 1]; boost mode only.
    pub bonus: Option<Vec<f64>>,
}

/// Refines the candidate mask with keyword embeddings in visual space.
pub fn refine_mask_with_keywords(
    mask: &CandidateMask,
    shot_features: &Array2<f64>,
    keywords: &Array2<f64>,
    threshold: f64,
    mode: KeywordMode,
) -> Result<KeywordRefinement> {
    if keywords.nrows() == 0 {
        return Err(Error::invalid("at least one keyword embedding is required"));
    }
    if keywords.ncols() != shot_features.ncols() {
        return Err(Error::invalid(format!(
            "keyword width {} differs from shot feature width {}",
            keywords.ncols(),
            shot_features.ncols()
        )));
    }
    if shot_features.nrows() != mask.shots() {
        return Err(Error::invalid("shot features and mask disagree on shot count"));
    }
    let kw = normalize_rows(keywords, "keyword embeddings")?;
    let shots = normalize_rows_lenient(shot_features);
    let sims = shots.dot(&kw.t());
    let best: Vec<f64> = sims
        .axis_iter(Axis(0))
        .map(|row| row.iter().cloned().fold(f64::NEG_INFINITY, f64::max))
        .collect();

    match mode {
        KeywordMode::Boost => Ok(KeywordRefinement {
            mask: mask.clone(),
            bonus: Some(best.iter().map(|s| s.clamp(0.0, 1.0)).collect()),
        }),
        KeywordMode::Require => {
            let mut values = mask.values().clone();
            for ((_, i), v) in values.indexed_iter_mut() {
                if best[i] < threshold {
                    *v = 0;
                }
            }
            for (j, row) in values.axis_iter(Axis(0)).enumerate() {
                if row.iter().all(|&v| v == 0) {
                    return Err(Error::Infeasible {
                        bar: j + 1,
                        reason: "keyword refinement removed every candidate".into(),
                    });
                }
            }
            Ok(KeywordRefinement {
                mask: CandidateMask::new(values, mask.safe_mask().to_vec())?,
                bonus: None,
            })
        }
    }
}
