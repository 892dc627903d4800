//! Per-bar energy, per-shot visual dynamics, and a uniform bar grid for
//! when no change-point segmentation is available.

use ndarray::Array2;

use crate::error::{Error, Result};
use crate::vecmath::max_normalize;

/// Mono audio plus bar boundaries expressed as sample offsets (J + 1 entries).
#[derive(Debug, Clone, PartialEq)]
pub struct AudioSamples {
    pub samples: Vec<f64>,
    pub sample_rate: u32,
    pub bar_boundaries: Vec<usize>,
}

impl AudioSamples {
    pub fn new(samples: Vec<f64>, sample_rate: u32, bar_boundaries: Vec<usize>) -> Result<Self> {
        if sample_rate == 0 {
            return Err(Error::invalid("sample_rate must be positive"));
        }
        let audio = Self {
            samples,
            sample_rate,
            bar_boundaries,
        };
        audio.check_boundaries()?;
        Ok(audio)
    }

    /// Converts bar boundaries in seconds to sample offsets, rounding to the
    /// nearest sample and clamping the last boundary to the signal length.
    pub fn from_seconds(samples: Vec<f64>, sample_rate: u32, boundaries: &[f64]) -> Result<Self> {
        let len = samples.len();
        let offsets = boundaries
            .iter()
            .map(|&t| ((t * f64::from(sample_rate)).round().max(0.0) as usize).min(len))
            .collect();
        Self::new(samples, sample_rate, offsets)
    }

    pub fn bar_count(&self) -> usize {
        self.bar_boundaries.len().saturating_sub(1)
    }

    fn check_boundaries(&self) -> Result<()> {
        if self.bar_boundaries.len() < 2 {
            return Err(Error::invalid("degenerate bar boundaries: need at least one bar"));
        }
        if *self.bar_boundaries.last().unwrap() > self.samples.len() {
            return Err(Error::invalid(
                "degenerate bar boundaries: boundary beyond end of audio",
            ));
        }
        for (j, w) in self.bar_boundaries.windows(2).enumerate() {
            if w[1] <= w[0] {
                return Err(Error::invalid(format!(
                    "degenerate bar boundaries: bar {} is empty",
                    j + 1
                )));
            }
        }
        Ok(())
    }
}

/// Per-bar RMS amplitude, max-normalized across the track. Silence stays 0.
pub fn compute_bar_energy(audio: &AudioSamples) -> Result<Vec<f64>> {
    audio.check_boundaries()?;
    let mut energy: Vec<f64> = audio
        .bar_boundaries
        .windows(2)
        .map(|w| {
            let bar = &audio.samples[w[0]..w[1]];
            let mean_sq = bar.iter().map(|x| x * x).sum::<f64>() / bar.len() as f64;
            mean_sq.sqrt()
        })
        .collect();
    max_normalize(&mut energy);
    Ok(energy)
}

/// Ordered frame embeddings for each shot.
#[derive(Debug, Clone, PartialEq)]
pub struct ShotFrameFeatures {
    shots: Vec<Array2<f64>>,
}

impl ShotFrameFeatures {
    pub fn new(shots: Vec<Array2<f64>>) -> Result<Self> {
        if let Some((i, _)) = shots.iter().enumerate().find(|(_, f)| f.nrows() == 0) {
            return Err(Error::invalid(format!("shot {} has no frame features", i + 1)));
        }
        if let Some(first) = shots.first() {
            let d = first.ncols();
            if shots.iter().any(|f| f.ncols() != d) {
                return Err(Error::invalid("frame features differ in width across shots"));
            }
        }
        Ok(Self { shots })
    }

    pub fn shot_count(&self) -> usize {
        self.shots.len()
    }

    pub fn shot(&self, i: usize) -> &Array2<f64> {
        &self.shots[i]
    }
}

/// Mean L2 norm of consecutive frame differences per shot, max-normalized
/// across shots. A single-frame shot has zero dynamics.
pub fn compute_shot_dynamics(frames: &ShotFrameFeatures) -> Result<Vec<f64>> {
    let mut dynamics = Vec::with_capacity(frames.shots.len());
    for (i, shot) in frames.shots.iter().enumerate() {
        if shot.nrows() == 0 {
            return Err(Error::invalid(format!("shot {} has no frame features", i + 1)));
        }
        let pairs = shot.nrows() - 1;
        if pairs == 0 {
            dynamics.push(0.0);
            continue;
        }
        let total: f64 = (0..pairs)
            .map(|f| {
                let diff = &shot.row(f + 1) - &shot.row(f);
                diff.dot(&diff).sqrt()
            })
            .sum();
        dynamics.push(total / pairs as f64);
    }
    max_normalize(&mut dynamics);
    Ok(dynamics)
}

/// Bar boundaries in seconds on a fixed tempo grid.
///
/// A trailing partial bar no longer than half a bar is merged into the
/// previous bar; a longer one becomes its own bar.
pub fn uniform_bar_grid(total_duration: f64, bpm: f64, beats_per_bar: u32) -> Result<Vec<f64>> {
    if !(total_duration > 0.0 && total_duration.is_finite()) {
        return Err(Error::invalid("total_duration must be positive"));
    }
    if !(bpm > 0.0 && bpm.is_finite()) {
        return Err(Error::invalid("bpm must be positive"));
    }
    if beats_per_bar == 0 {
        return Err(Error::invalid("beats_per_bar must be positive"));
    }
    let bar_len = f64::from(beats_per_bar) * 60.0 / bpm;
    // Snap near-integral ratios so 8 s / 2 s yields 4 full bars, not 3 and a sliver.
    let ratio = total_duration / bar_len;
    let full = if (ratio - ratio.round()).abs() < 1e-9 {
        ratio.round() as usize
    } else {
        ratio.floor() as usize
    };
    let mut bounds: Vec<f64> = (0..=full).map(|b| b as f64 * bar_len).collect();
    let remainder = total_duration - full as f64 * bar_len;
    let merge = remainder <= 0.5 * bar_len + 1e-9;
    if merge && full == 0 {
        return Err(Error::invalid(format!(
            "duration {total_duration} s yields no bars at {bar_len} s per bar"
        )));
    }
    if merge {
        *bounds.last_mut().unwrap() = total_duration;
    } else {
        bounds.push(total_duration);
    }
    Ok(bounds)
}
