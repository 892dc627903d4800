use ndarray::{s, Array2, Axis};

use super::{cut_bonus, SegmentTerms};
use crate::scoring::FusedScores;
use crate::types::{is_excluded, BarTrack, EngineParams, ShotTable};
use crate::vecmath::normalize_rows_lenient;

const SIMILARITY_BLOCK: usize = 256;

/// Unit-normalized shot features plus, for each shot, the other shots whose
/// cosine similarity to it exceeds `θ_sim`.
#[derive(Debug, Clone)]
pub struct ShotSimilarity {
    unit: Array2<f64>,
    neighbors: Vec<Vec<u32>>,
    theta_sim: f64,
}

impl ShotSimilarity {
    pub fn new(features: &Array2<f64>, theta_sim: f64) -> Self {
        let unit = normalize_rows_lenient(features);
        let n = unit.nrows();
        let mut neighbors = vec![Vec::new(); n];
        // Row blocks keep the temporary similarity slab at O(block · I).
        for start in (0..n).step_by(SIMILARITY_BLOCK) {
            let end = (start + SIMILARITY_BLOCK).min(n);
            let block = unit.slice(s![start..end, ..]).dot(&unit.t());
            for (r, row) in block.axis_iter(Axis(0)).enumerate() {
                let i = start + r;
                neighbors[i] = row
                    .iter()
                    .enumerate()
                    .filter(|&(o, &c)| o != i && c > theta_sim)
                    .map(|(o, _)| o as u32)
                    .collect();
            }
        }
        Self {
            unit,
            neighbors,
            theta_sim,
        }
    }

    pub fn len(&self) -> usize {
        self.unit.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.unit.nrows() == 0
    }

    pub fn theta_sim(&self) -> f64 {
        self.theta_sim
    }

    pub fn cosine(&self, a: usize, b: usize) -> f64 {
        self.unit.row(a).dot(&self.unit.row(b)).clamp(-1.0, 1.0)
    }

    pub fn neighbors(&self, shot: usize) -> &[u32] {
        &self.neighbors[shot]
    }
}

/// Shared transition arithmetic for the beam search and the oracle, so both
/// accumulate bit-identical scores.
pub(crate) struct Scorer<'a> {
    pub scores: &'a FusedScores,
    pub bars: &'a BarTrack,
    pub shots: &'a ShotTable,
    pub similarity: &'a ShotSimilarity,
    pub params: &'a EngineParams,
}

impl Scorer<'_> {
    /// Calls `emit(span, terms)` for every feasible span of `shot` starting at
    /// `bar`, in increasing span order.
    pub fn expand(&self, shot: usize, bar: usize, last: Option<usize>, mut emit: impl FnMut(usize, SegmentTerms)) {
        let p = self.params;
        let bar_count = self.bars.count();
        let smoothness = last.map_or(0.0, |l| p.lambda_smooth * self.similarity.cosine(l, shot));
        let capacity = self.shots.durations()[shot] / p.eta;
        let mut score_sum = 0.0;
        let mut energy_sum = 0.0;
        let mut length = 0.0;
        for span in 1..=p.k_max {
            let j = bar + span - 1;
            if j >= bar_count {
                break;
            }
            let s = self.scores.get(j, shot);
            if is_excluded(s) {
                break;
            }
            length += self.bars.durations()[j];
            if span > 1 && length > capacity {
                break;
            }
            score_sum += s;
            energy_sum += self.bars.energy()[j];
            let k = span as f64;
            let terms = SegmentTerms::new(score_sum / k, smoothness, cut_bonus(energy_sum / k, p.lambda_cut));
            emit(span, terms);
        }
    }

    /// Terms of one specific segment, as the search would have scored it.
    pub fn segment(&self, shot: usize, bar: usize, span: usize, last: Option<usize>) -> Option<SegmentTerms> {
        let mut found = None;
        self.expand(shot, bar, last, |k, t| {
            if k == span {
                found = Some(t);
            }
        });
        found
    }
}

/// Fixed-capacity bitset over shot indices.
#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) struct ShotSet {
    words: Vec<u64>,
}

impl ShotSet {
    pub fn new(shots: usize) -> Self {
        Self {
            words: vec![0; shots.div_ceil(64)],
        }
    }

    pub fn contains(&self, shot: usize) -> bool {
        self.words[shot / 64] >> (shot % 64) & 1 == 1
    }

    pub fn insert(&mut self, shot: usize) {
        self.words[shot / 64] |= 1 << (shot % 64);
    }

    /// Bans `shot` and all of its similar neighbours.
    pub fn ban(&mut self, shot: usize, similarity: &ShotSimilarity) {
        self.insert(shot);
        for &n in similarity.neighbors(shot) {
            self.insert(n as usize);
        }
    }
}
