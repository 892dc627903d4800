//! End-to-end alignment of a loaded bundle: energy, candidate mask,
//! keyword refinement, scores, fusion, selection, cut list.

use serde::{Deserialize, Serialize};

use crate::bardp::{exhaustive_select, select, SelectionResult};
use crate::error::{Error, Result};
use crate::features::compute_shot_dynamics;
use crate::guard::{build_candidate_mask, refine_mask_with_keywords, safe_mask, shot_importance, KeywordMode};
use crate::io::{build_cutlist, Config, CutList, FeatureBundle};
use crate::scoring::{alignment_scores, fuse_scores, FusedScores, FusionWeights};
use crate::types::{BarTrack, CandidateMask, ShotTable};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KeywordSetting {
    #[default]
    Off,
    Require,
    Boost,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AlignOptions {
    pub config: Config,
    /// Exclude opening and spoiler-region shots.
    pub guard: bool,
    pub keywords: KeywordSetting,
}

impl Default for AlignOptions {
    fn default() -> Self {
        Self {
            config: Config::default(),
            guard: true,
            keywords: KeywordSetting::Off,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AlignOutput {
    pub selection: SelectionResult,
    pub cutlist: CutList,
}

/// Everything selection needs, after masking and fusion.
#[derive(Debug, Clone, PartialEq)]
pub struct Prepared {
    pub shots: ShotTable,
    pub bars: BarTrack,
    pub fused: FusedScores,
}

/// Runs every stage before selection.
///
/// A raw score matrix in the bundle takes precedence over scores computed
/// from bar and shot embeddings. Without frame features the dynamics prior
/// is zero, which disables the energy term of the fusion.
pub fn prepare(bundle: &FeatureBundle, options: &AlignOptions) -> Result<Prepared> {
    options.config.validate()?;
    let params = &options.config.engine;
    let guard = &options.config.guard;

    let shots = bundle.shot_table()?;
    let bars = bundle.bar_track()?;
    let (n_bars, n_shots) = (bars.count(), shots.count());

    let dynamics = match bundle.frame_features() {
        Some(frames) => {
            let dynamics = compute_shot_dynamics(&frames?)?;
            if dynamics.len() != n_shots {
                return Err(Error::invalid("frame features do not cover every shot"));
            }
            dynamics
        }
        None => vec![0.0; n_shots],
    };

    let mut mask = if options.guard {
        build_candidate_mask(&safe_mask(&shots, guard), n_bars)?
    } else {
        CandidateMask::all(n_bars, n_shots)
    };
    let mut importance = shot_importance(&shots, guard);

    if options.keywords != KeywordSetting::Off {
        let keywords = bundle
            .keyword_embeddings_f64()
            .ok_or_else(|| Error::invalid("keyword refinement requested but the bundle has no keyword embeddings"))?;
        let mode = match options.keywords {
            KeywordSetting::Require => KeywordMode::Require,
            _ => KeywordMode::Boost,
        };
        let refined = refine_mask_with_keywords(&mask, shots.features(), &keywords, guard.keyword_threshold, mode)?;
        mask = refined.mask;
        if let Some(bonus) = refined.bonus {
            for (p, b) in importance.iter_mut().zip(bonus) {
                *p += b;
            }
        }
    }

    let scores = match bundle.score_matrix() {
        Some(s) => s?,
        None => {
            let audio = bundle
                .bar_features_f64()
                .ok_or_else(|| Error::invalid("bundle has neither a score matrix nor bar features to compute one"))?;
            alignment_scores(&audio, shots.features(), params.temperature)?
        }
    };

    let fused = fuse_scores(
        &scores,
        &mask,
        bars.energy(),
        &dynamics,
        &importance,
        FusionWeights {
            lambda_energy: params.lambda_energy,
            lambda_importance: params.lambda_importance,
            mode: params.fusion_mode,
            keep_terms: false,
        },
    )?;
    Ok(Prepared { shots, bars, fused })
}

fn finish(prepared: &Prepared, selection: SelectionResult, options: &AlignOptions) -> Result<AlignOutput> {
    let mut cutlist = build_cutlist(&selection.alignment, &prepared.bars, &prepared.shots)?;
    cutlist.total_score = Some(selection.total_score);
    cutlist.params = Some(options.config.engine.clone());
    Ok(AlignOutput { selection, cutlist })
}

/// Runs the full pipeline on `bundle` with beam-search selection.
pub fn align_bundle(bundle: &FeatureBundle, options: &AlignOptions) -> Result<AlignOutput> {
    let p = prepare(bundle, options)?;
    let selection = select(&p.fused, &p.bars, &p.shots, &options.config.engine)?;
    finish(&p, selection, options)
}

/// Same as [`align_bundle`] but with exhaustive selection (small instances only).
pub fn oracle_bundle(bundle: &FeatureBundle, options: &AlignOptions) -> Result<AlignOutput> {
    let p = prepare(bundle, options)?;
    let selection = exhaustive_select(&p.fused, &p.bars, &p.shots, &options.config.engine)?;
    finish(&p, selection, options)
}
