//! Random instances and independent brute-force oracles shared by the
//! integration tests.
#![allow(dead_code)]

use barcut::scoring::FusedScores;
use barcut::{BarTrack, ElasticAlignment, EngineParams, ScoreMatrix, Segment, ShotTable, EXCLUDED};
use ndarray::Array2;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub struct Instance {
    pub fused: FusedScores,
    pub bars: BarTrack,
    pub shots: ShotTable,
    pub params: EngineParams,
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    rand::SeedableRng::seed_from_u64(seed)
}

pub fn gaussian_matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> Array2<f64> {
    Array2::from_shape_fn((rows, cols), |_| rng.sample(StandardNormal))
}

pub fn shot_table(rng: &mut ChaCha8Rng, features: Array2<f64>, min_dur: f64, max_dur: f64) -> ShotTable {
    let n = features.nrows();
    let durations: Vec<f64> = (0..n).map(|_| rng.gen_range(min_dur..max_dur)).collect();
    let mut starts = Vec::with_capacity(n);
    let mut t = 0.0;
    for d in &durations {
        starts.push(t);
        t += d;
    }
    ShotTable::new(features, durations, starts, t).unwrap()
}

/// A random instance with `J ≤ max_bars`, `I ≤ max_shots` and
/// `k_max ≤ max_k`, about 15% excluded entries (never a whole row), and a
/// beam wide enough to never prune.
pub fn random_instance(rng: &mut ChaCha8Rng, max_bars: usize, max_shots: usize, max_k: usize) -> Instance {
    let j = rng.gen_range(1..=max_bars);
    let i = rng.gen_range(1..=max_shots);
    let features = gaussian_matrix(rng, i, 4);
    let shots = shot_table(rng, features, 0.5, 5.0);
    let durations: Vec<f64> = (0..j).map(|_| rng.gen_range(0.8..2.0)).collect();
    let energy: Vec<f64> = (0..j).map(|_| rng.gen_range(0.0..1.0)).collect();
    let bars = BarTrack::new(Array2::zeros((j, 0)), durations, energy).unwrap();

    let mut values = Array2::from_shape_fn((j, i), |_| rng.gen_range(-1.0..1.0));
    for r in 0..j {
        let keep = rng.gen_range(0..i);
        for c in 0..i {
            if c != keep && rng.gen_bool(0.15) {
                values[[r, c]] = EXCLUDED;
            }
        }
    }
    let fused = FusedScores::from_matrix(ScoreMatrix::with_exclusions(values).unwrap());
    let params = EngineParams {
        beam_width: 10_000_000,
        top_m: i,
        k_max: rng.gen_range(1..=max_k),
        lambda_smooth: rng.gen_range(0.0..0.5),
        lambda_cut: rng.gen_range(0.0..1.0),
        eta: rng.gen_range(0.7..1.0),
        theta_sim: [0.3, 0.6, 0.8][rng.gen_range(0..3)],
        ..EngineParams::default()
    };
    Instance {
        fused,
        bars,
        shots,
        params,
    }
}

pub fn cosine(a: &[f64], b: &[f64]) -> f64 {
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    if na == 0.0 || nb == 0.0 {
        0.0
    } else {
        (dot / (na * nb)).clamp(-1.0, 1.0)
    }
}

pub fn shot_cosine(shots: &ShotTable, a: usize, b: usize) -> f64 {
    cosine(&shots.feature(a).to_vec(), &shots.feature(b).to_vec())
}

/// The objective written out directly from its definition; `None` when a
/// segment is infeasible (excluded entry, duration, repeat, neighbor).
pub fn naive_objective(inst: &Instance, alignment: &ElasticAlignment) -> Option<f64> {
    let p = &inst.params;
    let spans = alignment.spans(inst.bars.count());
    let mut total = 0.0;
    let mut chosen: Vec<usize> = Vec::new();
    for (seg, &(a, b)) in alignment.segments.iter().zip(&spans) {
        let shot = seg.shot;
        let k = b - a;
        if k == 0 || k > p.k_max {
            return None;
        }
        if chosen
            .iter()
            .any(|&c| c == shot || shot_cosine(&inst.shots, c, shot) > p.theta_sim)
        {
            return None;
        }
        let column: Vec<f64> = (a..b).map(|r| inst.fused.get(r, shot)).collect();
        if column.contains(&EXCLUDED) {
            return None;
        }
        let bar_sum: f64 = inst.bars.durations()[a..b].iter().sum();
        if k > 1 && bar_sum > inst.shots.durations()[shot] / p.eta {
            return None;
        }
        let avg = column.iter().sum::<f64>() / k as f64;
        let smooth = chosen
            .last()
            .map_or(0.0, |&l| p.lambda_smooth * shot_cosine(&inst.shots, l, shot));
        let e = inst.bars.energy()[a..b].iter().sum::<f64>() / k as f64;
        total += avg + smooth + p.lambda_cut * (2.0 * e - 0.3);
        chosen.push(shot);
    }
    Some(total)
}

/// Every valid elastic alignment with its naive objective.
pub fn enumerate_all(inst: &Instance) -> Vec<(ElasticAlignment, f64)> {
    fn rec(inst: &Instance, bar: usize, segs: &mut Vec<Segment>, out: &mut Vec<(ElasticAlignment, f64)>) {
        let j = inst.bars.count();
        if bar == j {
            let a = ElasticAlignment::new(segs.clone());
            if let Some(score) = naive_objective(inst, &a) {
                out.push((a, score));
            }
            return;
        }
        for shot in 0..inst.shots.count() {
            for k in 1..=inst.params.k_max.min(j - bar) {
                segs.push(Segment { shot, start_bar: bar });
                if prefix_feasible(inst, segs, bar + k) {
                    rec(inst, bar + k, segs, out);
                }
                segs.pop();
            }
        }
    }
    let mut out = Vec::new();
    rec(inst, 0, &mut Vec::new(), &mut out);
    out
}

/// Whether the last segment of `segs`, ending at bar `end`, is admissible
/// given the segments before it.
fn prefix_feasible(inst: &Instance, segs: &[Segment], end: usize) -> bool {
    let p = &inst.params;
    let (last, earlier) = segs.split_last().unwrap();
    let (a, b) = (last.start_bar, end);
    if earlier
        .iter()
        .any(|c| c.shot == last.shot || shot_cosine(&inst.shots, c.shot, last.shot) > p.theta_sim)
    {
        return false;
    }
    if (a..b).any(|r| inst.fused.get(r, last.shot) == EXCLUDED) {
        return false;
    }
    let bar_sum: f64 = inst.bars.durations()[a..b].iter().sum();
    b - a == 1 || bar_sum <= inst.shots.durations()[last.shot] / p.eta
}

/// Best alignment by naive enumeration: higher score, then fewer segments,
/// then the lexicographically smaller `(shot, start_bar)` sequence. Also
/// returns the gap to the best alignment that differs from it.
pub fn brute_force_best(inst: &Instance) -> Option<(ElasticAlignment, f64, f64)> {
    let mut all = enumerate_all(inst);
    all.sort_by(|(a, sa), (b, sb)| {
        sb.partial_cmp(sa).unwrap().then(a.len().cmp(&b.len())).then_with(|| {
            let pa: Vec<(usize, usize)> = a.segments.iter().map(|s| (s.shot, s.start_bar)).collect();
            let pb: Vec<(usize, usize)> = b.segments.iter().map(|s| (s.shot, s.start_bar)).collect();
            pa.cmp(&pb)
        })
    });
    let mut it = all.into_iter();
    let (best, score) = it.next()?;
    let gap = it.next().map_or(f64::INFINITY, |(_, s)| score - s);
    Some((best, score, gap))
}
