use super::beam::finish;
use super::scorer::{Scorer, ShotSet, ShotSimilarity};
use super::{check_inputs, prefer, BeamStats, SegmentTerms, SelectionResult};
use crate::error::{Error, Result};
use crate::scoring::FusedScores;
use crate::types::{is_excluded, BarTrack, EngineParams, ShotTable};

pub const EXHAUSTIVE_MAX_BARS: usize = 8;
pub const EXHAUSTIVE_MAX_SHOTS: usize = 10;
/// Cap on the effective span limit `min(k_max, J)`.
pub const EXHAUSTIVE_MAX_K: usize = 4;

struct Best {
    score: f64,
    path: Vec<(u32, u32)>,
}

struct Enumerator<'a> {
    scorer: Scorer<'a>,
    best: Option<Best>,
    furthest: usize,
    stats: BeamStats,
}

impl Enumerator<'_> {
    fn visit(&mut self, bar: usize, used: &ShotSet, last: Option<usize>, path: &mut Vec<(u32, u32)>, score: f64) {
        let bar_count = self.scorer.bars.count();
        self.furthest = self.furthest.max(bar);
        if bar == bar_count {
            let better = match &self.best {
                None => true,
                Some(b) => prefer(
                    score,
                    path.len(),
                    || path.clone(),
                    b.score,
                    b.path.len(),
                    || b.path.clone(),
                )
                .is_lt(),
            };
            if better {
                self.best = Some(Best {
                    score,
                    path: path.clone(),
                });
            }
            return;
        }
        self.stats.states_expanded += 1;
        for shot in 0..self.scorer.shots.count() {
            if used.contains(shot) || is_excluded(self.scorer.scores.get(bar, shot)) {
                continue;
            }
            let mut spans: Vec<(usize, SegmentTerms)> = Vec::new();
            self.scorer
                .expand(shot, bar, last, |span, terms| spans.push((span, terms)));
            if spans.is_empty() {
                continue;
            }
            let mut next_used = used.clone();
            next_used.ban(shot, self.scorer.similarity);
            for (span, terms) in spans {
                self.stats.candidates_generated += 1;
                path.push((shot as u32, bar as u32));
                self.visit(bar + span, &next_used, Some(shot), path, score + terms.total);
                path.pop();
            }
        }
    }
}

/// Enumerates every valid elastic alignment of a small instance and
/// returns the best one under the same scoring and tie-breaking as
/// [`super::select`].
///
/// All admissible shots are considered at every bar (no top-M cut), so the
/// result coincides with `select` when `top_m ≥ I` and the beam never prunes.
pub fn exhaustive_select(
    scores: &FusedScores,
    bars: &BarTrack,
    shots: &ShotTable,
    params: &EngineParams,
) -> Result<SelectionResult> {
    let k_eff = params.k_max.min(bars.count());
    if bars.count() > EXHAUSTIVE_MAX_BARS || shots.count() > EXHAUSTIVE_MAX_SHOTS || k_eff > EXHAUSTIVE_MAX_K {
        return Err(Error::invalid(format!(
            "exhaustive search is capped at J <= {EXHAUSTIVE_MAX_BARS}, I <= {EXHAUSTIVE_MAX_SHOTS}, \
             min(k_max, J) <= {EXHAUSTIVE_MAX_K}; got J = {}, I = {}, k_max = {}",
            bars.count(),
            shots.count(),
            params.k_max
        )));
    }
    let similarity = ShotSimilarity::new(shots.features(), params.theta_sim);
    check_inputs(scores, bars, shots, &similarity, params)?;
    let mut e = Enumerator {
        scorer: Scorer {
            scores,
            bars,
            shots,
            similarity: &similarity,
            params,
        },
        best: None,
        furthest: 0,
        stats: BeamStats::default(),
    };
    let mut path = Vec::new();
    e.visit(0, &ShotSet::new(shots.count()), None, &mut path, 0.0);
    let Some(best) = e.best.take() else {
        return Err(Error::Infeasible {
            bar: e.furthest + 1,
            reason: "no complete alignment reachable".into(),
        });
    };
    finish(&e.scorer, &best.path, best.score, e.stats)
}
