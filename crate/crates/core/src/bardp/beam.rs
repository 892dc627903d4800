use std::cmp::Ordering;

use super::scorer::{Scorer, ShotSet, ShotSimilarity};
use super::{check_inputs, prefer, BeamStats, SelectionResult};
use crate::error::{Error, Result};
use crate::scoring::FusedScores;
use crate::types::{is_excluded, BarTrack, CandidateOrder, ElasticAlignment, EngineParams, Segment, ShotTable};

const ROOT: u32 = u32::MAX;

/// Persistent segment list: each node points at the segment before it.
struct Node {
    parent: u32,
    shot: u32,
    start_bar: u32,
}

struct State {
    score: f64,
    node: u32,
    segments: u32,
    used: ShotSet,
    last: Option<u32>,
}

/// A child waiting in its frontier bucket; only survivors of pruning are
/// turned into full states.
#[derive(Clone, Copy)]
struct Candidate {
    score: f64,
    parent: u32,
    shot: u32,
    start_bar: u32,
    segments: u32,
}

struct Search<'a> {
    scorer: Scorer<'a>,
    nodes: Vec<Node>,
    states: Vec<State>,
}

impl Search<'_> {
    fn path(&self, mut node: u32) -> Vec<(u32, u32)> {
        let mut out = Vec::new();
        while node != ROOT {
            let n = &self.nodes[node as usize];
            out.push((n.shot, n.start_bar));
            node = n.parent;
        }
        out.reverse();
        out
    }

    fn candidate_path(&self, c: &Candidate) -> Vec<(u32, u32)> {
        let mut p = self.path(self.states[c.parent as usize].node);
        p.push((c.shot, c.start_bar));
        p
    }

    fn order(&self, a: &Candidate, b: &Candidate) -> Ordering {
        prefer(
            a.score,
            a.segments as usize,
            || self.candidate_path(a),
            b.score,
            b.segments as usize,
            || self.candidate_path(b),
        )
    }

    /// Keeps the best `width` candidates, sorted best first.
    fn prune(&self, mut bucket: Vec<Candidate>, width: usize) -> Vec<Candidate> {
        if bucket.len() > width {
            bucket.select_nth_unstable_by(width - 1, |a, b| self.order(a, b));
            bucket.truncate(width);
        }
        bucket.sort_by(|a, b| self.order(a, b));
        bucket
    }

    fn materialize(&mut self, c: Candidate) -> u32 {
        let parent = &self.states[c.parent as usize];
        let mut used = parent.used.clone();
        used.ban(c.shot as usize, self.scorer.similarity);
        let node = self.nodes.len() as u32;
        self.nodes.push(Node {
            parent: parent.node,
            shot: c.shot,
            start_bar: c.start_bar,
        });
        let state = State {
            score: c.score,
            node,
            segments: c.segments,
            used,
            last: Some(c.shot),
        };
        self.states.push(state);
        (self.states.len() - 1) as u32
    }
}

/// Beam search with a prebuilt [`ShotSimilarity`], so callers can time the
/// search separately from the O(I²·d) similarity precompute.
pub fn select_with_similarity(
    scores: &FusedScores,
    bars: &BarTrack,
    shots: &ShotTable,
    similarity: &ShotSimilarity,
    params: &EngineParams,
) -> Result<SelectionResult> {
    check_inputs(scores, bars, shots, similarity, params)?;
    let bar_count = bars.count();
    let shot_count = shots.count();

    let row_order: Vec<Vec<u32>> = (0..bar_count)
        .map(|j| {
            let mut row: Vec<u32> = (0..shot_count as u32)
                .filter(|&i| !is_excluded(scores.get(j, i as usize)))
                .collect();
            row.sort_by(|&a, &b| {
                scores
                    .get(j, b as usize)
                    .total_cmp(&scores.get(j, a as usize))
                    .then(a.cmp(&b))
            });
            row
        })
        .collect();

    let mut search = Search {
        scorer: Scorer {
            scores,
            bars,
            shots,
            similarity,
            params,
        },
        nodes: Vec::new(),
        states: vec![State {
            score: 0.0,
            node: ROOT,
            segments: 0,
            used: ShotSet::new(shot_count),
            last: None,
        }],
    };
    let mut buckets: Vec<Vec<Candidate>> = vec![Vec::new(); bar_count + 1];
    let mut stats = BeamStats::default();
    let mut furthest = 0;

    for bar in 0..bar_count {
        let frontier: Vec<u32> = if bar == 0 {
            vec![0]
        } else {
            let bucket = std::mem::take(&mut buckets[bar]);
            let before = bucket.len();
            let kept = search.prune(bucket, params.beam_width);
            stats.pruned += before - kept.len();
            kept.into_iter().map(|c| search.materialize(c)).collect()
        };
        if frontier.is_empty() {
            continue;
        }
        furthest = bar;
        stats.states_expanded += frontier.len();

        for &si in &frontier {
            let state = &search.states[si as usize];
            let last = state.last.map(|l| l as usize);
            let mut taken = 0;
            for &shot in &row_order[bar] {
                let banned = state.used.contains(shot as usize);
                match params.candidate_order {
                    CandidateOrder::RankAfterExclusion => {
                        if banned {
                            continue;
                        }
                        if taken == params.top_m {
                            break;
                        }
                        taken += 1;
                    }
                    CandidateOrder::TopMThenExclude => {
                        if taken == params.top_m {
                            break;
                        }
                        taken += 1;
                        if banned {
                            continue;
                        }
                    }
                }
                search.scorer.expand(shot as usize, bar, last, |span, terms| {
                    stats.candidates_generated += 1;
                    buckets[bar + span].push(Candidate {
                        score: state.score + terms.total,
                        parent: si,
                        shot,
                        start_bar: bar as u32,
                        segments: state.segments + 1,
                    });
                });
            }
        }
    }

    let complete = std::mem::take(&mut buckets[bar_count]);
    let Some(best) = complete.into_iter().min_by(|a, b| search.order(a, b)) else {
        return Err(Error::Infeasible {
            bar: furthest + 1,
            reason: "no complete alignment reachable".into(),
        });
    };
    let path = search.candidate_path(&best);
    finish(&search.scorer, &path, best.score, stats)
}

/// Rebuilds the alignment and its per-segment terms from a scored path.
pub(super) fn finish(
    scorer: &Scorer<'_>,
    path: &[(u32, u32)],
    total_score: f64,
    beam_stats: BeamStats,
) -> Result<SelectionResult> {
    let bar_count = scorer.bars.count();
    let segments: Vec<Segment> = path
        .iter()
        .map(|&(shot, start)| Segment {
            shot: shot as usize,
            start_bar: start as usize,
        })
        .collect();
    let alignment = ElasticAlignment::new(segments);
    let mut per_segment = Vec::with_capacity(path.len());
    let mut last = None;
    for (seg, (start, end)) in alignment.segments.iter().zip(alignment.spans(bar_count)) {
        let terms = scorer
            .segment(seg.shot, start, end - start, last)
            .ok_or_else(|| Error::Internal("selected segment cannot be rescored".into()))?;
        per_segment.push(terms);
        last = Some(seg.shot);
    }
    Ok(SelectionResult {
        alignment,
        total_score,
        per_segment,
        beam_stats,
    })
}
