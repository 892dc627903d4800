//! Seeded synthetic bundles for tests and benchmarks.
//!
//! Unplanted instances carry Gaussian shot and bar features, per-shot frame
//! features, and a low-rate tone whose amplitude varies per bar.
//!
//! Planted instances hide a random elastic alignment. With `e_0..e_K` the
//! standard basis, segment `k` uses direction `(e_k + e_K)/√2` for both its
//! bars and its shot, so a planted pair scores about 1 and a planted shot
//! scores about ½ on other segments' bars. Every other shot points near
//! `-e_K` and scores negative everywhere. Planted shot durations equal their
//! span durations, planted shots avoid the default guard regions, and bar
//! energy is an explicit override in `[0, 0.3]`.

use std::collections::BTreeMap;

use ndarray::Array2;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use super::bundle::{AudioPayload, FeatureBundle};
use crate::error::{Error, Result};
use crate::guard::{safe_mask, GuardParams};
use crate::types::{ElasticAlignment, Segment};

const PLANTED_NOISE: f64 = 0.02;
const UNPLANTED_SPREAD: f64 = 0.5;
const MAX_PLANTED_SPAN: usize = 3;
const PLANT_ATTEMPTS: usize = 200;
const SAMPLE_RATE: u32 = 200;
const FRAMES_PER_SHOT: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SynthSpec {
    pub seed: u64,
    pub bars: usize,
    pub shots: usize,
    pub visual_dim: usize,
    pub audio_dim: usize,
    pub planted: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthInstance {
    pub bundle: FeatureBundle,
    /// Also stored as the bundle's ground truth.
    pub planted: Option<ElasticAlignment>,
}

fn gaussian(rng: &mut ChaCha8Rng) -> f64 {
    rng.sample::<f64, _>(StandardNormal)
}

fn f32_matrix(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Array2<f32> {
    Array2::from_shape_fn((rows, cols), |(r, c)| f(r, c) as f32)
}

fn cumulative(durations: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(durations.len() + 1);
    out.push(0.0);
    for d in durations {
        out.push(out.last().unwrap() + d);
    }
    out
}

/// Generates a bundle deterministically from `spec.seed`.
pub fn synth_instance(spec: &SynthSpec) -> Result<SynthInstance> {
    if spec.bars == 0 || spec.shots == 0 || spec.visual_dim == 0 || spec.audio_dim == 0 {
        return Err(Error::invalid("synth dimensions must all be at least 1"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut instance = if spec.planted {
        planted(spec, &mut rng)?
    } else {
        unplanted(spec, &mut rng)
    };
    let meta: BTreeMap<String, String> = [
        ("generator".to_string(), "synth".to_string()),
        ("seed".to_string(), spec.seed.to_string()),
        ("planted".to_string(), spec.planted.to_string()),
    ]
    .into();
    instance.bundle.metadata = meta;
    instance.bundle.validate()?;
    Ok(instance)
}

fn unplanted(spec: &SynthSpec, rng: &mut ChaCha8Rng) -> SynthInstance {
    let (j, i) = (spec.bars, spec.shots);
    let bar_durations: Vec<f64> = (0..j).map(|_| rng.gen_range(1.5..2.5)).collect();
    let shot_durations: Vec<f64> = (0..i).map(|_| rng.gen_range(0.5..6.0)).collect();
    let starts = cumulative(&shot_durations);
    let movie_duration = starts[i];

    let shot_features = f32_matrix(i, spec.visual_dim, |_, _| gaussian(rng));
    let bar_features = f32_matrix(j, spec.audio_dim, |_, _| gaussian(rng));
    let frames = (0..i)
        .map(|s| {
            let jitter = rng.gen_range(0.0..1.0);
            f32_matrix(FRAMES_PER_SHOT, spec.visual_dim, |_, c| {
                f64::from(shot_features[[s, c]]) + jitter * gaussian(rng)
            })
        })
        .collect();

    let boundaries = cumulative(&bar_durations);
    let rate = f64::from(SAMPLE_RATE);
    let amplitudes: Vec<f64> = (0..j).map(|_| rng.gen_range(0.05..1.0)).collect();
    let n_samples = (boundaries[j] * rate).round() as usize;
    let samples = (0..n_samples)
        .map(|n| {
            let t = n as f64 / rate;
            let bar = boundaries[1..].partition_point(|&b| b <= t).min(j - 1);
            (amplitudes[bar] * (2.0 * std::f64::consts::PI * 7.0 * t).sin()) as f32
        })
        .collect();

    let mut bundle = FeatureBundle::new(
        shot_features,
        shot_durations,
        starts[..i].to_vec(),
        movie_duration,
        boundaries,
    );
    bundle.bar_features = Some(bar_features);
    bundle.frame_features = Some(frames);
    bundle.audio = Some(AudioPayload {
        samples,
        sample_rate: SAMPLE_RATE,
    });
    if spec.visual_dim != spec.audio_dim {
        bundle.scores = Some(f32_matrix(j, i, |_, _| rng.gen_range(-1.0..1.0)));
    }
    SynthInstance { bundle, planted: None }
}

fn planted(spec: &SynthSpec, rng: &mut ChaCha8Rng) -> Result<SynthInstance> {
    let (j, i, d) = (spec.bars, spec.shots, spec.visual_dim);
    if spec.audio_dim != d {
        return Err(Error::invalid(
            "planted instances need equal visual and audio dimensions",
        ));
    }
    if d <= j {
        return Err(Error::invalid(format!(
            "planted instances need feature dimension > bars ({d} <= {j})"
        )));
    }
    let guard = GuardParams::default();
    let bar_durations: Vec<f64> = (0..j).map(|_| rng.gen_range(1.5..2.5)).collect();

    let mut spans = Vec::new();
    let mut covered = 0;
    while covered < j {
        let len = rng.gen_range(1..=MAX_PLANTED_SPAN).min(j - covered);
        spans.push((covered, covered + len));
        covered += len;
    }
    let k = spans.len();
    if k > i {
        return Err(Error::invalid(format!("{k} planted segments need at least {k} shots")));
    }

    for _ in 0..PLANT_ATTEMPTS {
        let mut durations: Vec<f64> = (0..i).map(|_| rng.gen_range(0.5..6.0)).collect();
        let mut order: Vec<usize> = (0..i).collect();
        order.shuffle(rng);
        let chosen = &order[..k];
        for (seg, &shot) in chosen.iter().enumerate() {
            let (a, b) = spans[seg];
            durations[shot] = bar_durations[a..b].iter().sum();
        }
        let starts = cumulative(&durations);
        let movie_duration = starts[i];
        let mut bundle = FeatureBundle::new(
            Array2::zeros((i, d)),
            durations,
            starts[..i].to_vec(),
            movie_duration,
            cumulative(&bar_durations),
        );
        let safe = safe_mask(&bundle.shot_table()?, &guard);
        if chosen.iter().any(|&s| safe[s] == 0.0) {
            continue;
        }

        let planted_dir = |seg: usize, c: usize| {
            let hit = (c == seg) as u8 as f64 + (c == k) as u8 as f64;
            hit / std::f64::consts::SQRT_2
        };
        let mut segment_of_shot = vec![None; i];
        for (seg, &shot) in chosen.iter().enumerate() {
            segment_of_shot[shot] = Some(seg);
        }
        let spread = UNPLANTED_SPREAD / (d as f64).sqrt();
        bundle.shot_features = f32_matrix(i, d, |s, c| match segment_of_shot[s] {
            Some(seg) => planted_dir(seg, c) + PLANTED_NOISE * gaussian(rng),
            None => -((c == k) as u8 as f64) + spread * gaussian(rng),
        });
        let mut bar_segment = vec![0; j];
        for (seg, &(a, b)) in spans.iter().enumerate() {
            bar_segment[a..b].fill(seg);
        }
        bundle.bar_features = Some(f32_matrix(j, d, |bar, c| {
            planted_dir(bar_segment[bar], c) + PLANTED_NOISE * gaussian(rng)
        }));
        bundle.energy = Some((0..j).map(|_| rng.gen_range(0.0..0.3)).collect());

        let alignment = ElasticAlignment::new(
            spans
                .iter()
                .zip(chosen)
                .map(|(&(a, _), &shot)| Segment { shot, start_bar: a })
                .collect(),
        );
        bundle.ground_truth = Some(alignment.clone());
        return Ok(SynthInstance {
            bundle,
            planted: Some(alignment),
        });
    }
    Err(Error::invalid(
        "could not place planted shots outside the guard regions; use more shots",
    ))
}
