//! Domain types shared across the engine, and structural validation of
//! elastic alignments.
//!
//! Shot and bar indices are 0-based inside the crate. Every external format
//! (bundle manifests, cut lists, reports) uses 1-based indices; conversion
//! happens in [`crate::io`].

use std::fmt;

use ndarray::{Array2, ArrayView1, Axis};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Sentinel for bar-shot pairs removed by the candidate mask.
///
/// The most negative finite `f64` rather than NaN, so comparisons and
/// argmax stay total.
pub const EXCLUDED: f64 = f64::MIN;

pub fn is_excluded(v: f64) -> bool {
    v == EXCLUDED
}

const TIME_SLACK: f64 = 1e-6;

fn check_finite_rows(m: &Array2<f64>, what: &str) -> Result<()> {
    for (r, row) in m.axis_iter(Axis(0)).enumerate() {
        if row.iter().any(|x| !x.is_finite()) {
            return Err(Error::invalid(format!("{what}: row {} contains NaN or Inf", r + 1)));
        }
    }
    Ok(())
}

/// Movie side: one row per shot.
#[derive(Debug, Clone, PartialEq)]
pub struct ShotTable {
    features: Array2<f64>,
    durations: Vec<f64>,
    start_times: Vec<f64>,
    movie_duration: f64,
}

impl ShotTable {
    pub fn new(features: Array2<f64>, durations: Vec<f64>, start_times: Vec<f64>, movie_duration: f64) -> Result<Self> {
        let count = features.nrows();
        if count == 0 {
            return Err(Error::invalid("shot table must contain at least one shot"));
        }
        if durations.len() != count || start_times.len() != count {
            return Err(Error::invalid(format!(
                "shot table: {count} feature rows but {} durations and {} start times",
                durations.len(),
                start_times.len()
            )));
        }
        if !(movie_duration > 0.0 && movie_duration.is_finite()) {
            return Err(Error::invalid("movie_duration must be positive"));
        }
        for (i, &d) in durations.iter().enumerate() {
            if !(d > 0.0 && d.is_finite()) {
                return Err(Error::invalid(format!(
                    "shot {}: duration must be positive, got {d}",
                    i + 1
                )));
            }
        }
        for (i, (&s, &d)) in start_times.iter().zip(&durations).enumerate() {
            if !(s >= 0.0 && s.is_finite()) {
                return Err(Error::invalid(format!(
                    "shot {}: start time must be non-negative, got {s}",
                    i + 1
                )));
            }
            if i > 0 && s < start_times[i - 1] {
                return Err(Error::invalid(format!(
                    "shot {}: start times must be non-decreasing",
                    i + 1
                )));
            }
            if s + d > movie_duration + TIME_SLACK {
                return Err(Error::invalid(format!(
                    "shot {}: ends at {} past movie duration {movie_duration}",
                    i + 1,
                    s + d
                )));
            }
        }
        check_finite_rows(&features, "shot features")?;
        Ok(Self {
            features,
            durations,
            start_times,
            movie_duration,
        })
    }

    pub fn count(&self) -> usize {
        self.durations.len()
    }

    pub fn feature_dim(&self) -> usize {
        self.features.ncols()
    }

    pub fn features(&self) -> &Array2<f64> {
        &self.features
    }

    pub fn feature(&self, shot: usize) -> ArrayView1<'_, f64> {
        self.features.row(shot)
    }

    pub fn durations(&self) -> &[f64] {
        &self.durations
    }

    pub fn start_times(&self) -> &[f64] {
        &self.start_times
    }

    pub fn end_time(&self, shot: usize) -> f64 {
        self.start_times[shot] + self.durations[shot]
    }

    pub fn movie_duration(&self) -> f64 {
        self.movie_duration
    }
}

/// Music side: one row per bar.
///
/// `features` may have zero columns when the caller supplies a score matrix
/// directly instead of audio embeddings.
#[derive(Debug, Clone, PartialEq)]
pub struct BarTrack {
    features: Array2<f64>,
    durations: Vec<f64>,
    energy: Vec<f64>,
}

impl BarTrack {
    pub fn new(features: Array2<f64>, durations: Vec<f64>, energy: Vec<f64>) -> Result<Self> {
        let count = durations.len();
        if count == 0 {
            return Err(Error::invalid("bar track must contain at least one bar"));
        }
        if features.nrows() != count || energy.len() != count {
            return Err(Error::invalid(format!(
                "bar track: {count} durations but {} feature rows and {} energy values",
                features.nrows(),
                energy.len()
            )));
        }
        for (j, &l) in durations.iter().enumerate() {
            if !(l > 0.0 && l.is_finite()) {
                return Err(Error::invalid(format!(
                    "bar {}: duration must be positive, got {l}",
                    j + 1
                )));
            }
        }
        for (j, &e) in energy.iter().enumerate() {
            if !(0.0..=1.0).contains(&e) {
                return Err(Error::invalid(format!("bar {}: energy {e} outside [0, 1]", j + 1)));
            }
        }
        check_finite_rows(&features, "bar features")?;
        Ok(Self {
            features,
            durations,
            energy,
        })
    }

    pub fn count(&self) -> usize {
        self.durations.len()
    }

    pub fn features(&self) -> &Array2<f64> {
        &self.features
    }

    pub fn durations(&self) -> &[f64] {
        &self.durations
    }

    pub fn energy(&self) -> &[f64] {
        &self.energy
    }

    pub fn total_duration(&self) -> f64 {
        self.durations.iter().sum()
    }
}

/// Dense J×I bar-shot compatibility scores (rows = bars, columns = shots).
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreMatrix(Array2<f64>);

impl ScoreMatrix {
    /// Builds an unmasked score matrix; every entry must be finite.
    pub fn new(values: Array2<f64>) -> Result<Self> {
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("score matrix contains NaN or Inf"));
        }
        Ok(Self(values))
    }

    /// Builds a matrix that may already contain [`EXCLUDED`] entries.
    pub fn with_exclusions(values: Array2<f64>) -> Result<Self> {
        if values.iter().any(|v| v.is_nan() || v.is_infinite()) {
            return Err(Error::invalid("score matrix contains NaN or Inf"));
        }
        Ok(Self(values))
    }

    pub fn bars(&self) -> usize {
        self.0.nrows()
    }

    pub fn shots(&self) -> usize {
        self.0.ncols()
    }

    pub fn values(&self) -> &Array2<f64> {
        &self.0
    }

    pub fn get(&self, bar: usize, shot: usize) -> f64 {
        self.0[[bar, shot]]
    }

    pub fn into_inner(self) -> Array2<f64> {
        self.0
    }
}

/// J×I admissibility matrix plus the per-shot safe mask it was built from.
#[derive(Debug, Clone, PartialEq)]
pub struct CandidateMask {
    values: Array2<u8>,
    safe_mask: Vec<f64>,
}

impl CandidateMask {
    /// Fails with [`Error::Infeasible`] if some bar has no admissible shot.
    pub fn new(values: Array2<u8>, safe_mask: Vec<f64>) -> Result<Self> {
        if values.ncols() != safe_mask.len() {
            return Err(Error::invalid(format!(
                "candidate mask has {} columns but safe mask has {} entries",
                values.ncols(),
                safe_mask.len()
            )));
        }
        if values.iter().any(|&v| v > 1) {
            return Err(Error::invalid("candidate mask entries must be 0 or 1"));
        }
        for (j, row) in values.axis_iter(Axis(0)).enumerate() {
            if row.iter().all(|&v| v == 0) {
                return Err(Error::Infeasible {
                    bar: j + 1,
                    reason: "empty candidate pool".into(),
                });
            }
        }
        Ok(Self { values, safe_mask })
    }

    /// A mask admitting every shot for every bar.
    pub fn all(bars: usize, shots: usize) -> Self {
        Self {
            values: Array2::ones((bars, shots)),
            safe_mask: vec![1.0; shots],
        }
    }

    pub fn bars(&self) -> usize {
        self.values.nrows()
    }

    pub fn shots(&self) -> usize {
        self.values.ncols()
    }

    pub fn values(&self) -> &Array2<u8> {
        &self.values
    }

    pub fn safe_mask(&self) -> &[f64] {
        &self.safe_mask
    }

    pub fn admits(&self, bar: usize, shot: usize) -> bool {
        self.values[[bar, shot]] == 1
    }
}

/// One segment of an elastic alignment: `shot` covers bars from `start_bar`
/// up to the next segment's start (both 0-based).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Segment {
    pub shot: usize,
    pub start_bar: usize,
}

/// Many-to-one mapping from the bar sequence onto shots.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ElasticAlignment {
    pub segments: Vec<Segment>,
}

impl ElasticAlignment {
    pub fn new(segments: Vec<Segment>) -> Self {
        Self { segments }
    }

    /// Builds from 1-based `(shot, start_bar)` pairs as used in external formats.
    pub fn from_one_based(pairs: &[(usize, usize)]) -> Result<Self> {
        let segments = pairs
            .iter()
            .map(|&(c, r)| {
                if c == 0 || r == 0 {
                    Err(Error::invalid("alignment indices are 1-based; found 0"))
                } else {
                    Ok(Segment {
                        shot: c - 1,
                        start_bar: r - 1,
                    })
                }
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { segments })
    }

    pub fn to_one_based(&self) -> Vec<(usize, usize)> {
        self.segments.iter().map(|s| (s.shot + 1, s.start_bar + 1)).collect()
    }

    pub fn len(&self) -> usize {
        self.segments.len()
    }

    pub fn is_empty(&self) -> bool {
        self.segments.is_empty()
    }

    /// Shot indices in cut order.
    pub fn shot_sequence(&self) -> Vec<usize> {
        self.segments.iter().map(|s| s.shot).collect()
    }

    /// Bar ranges `[start, end)` per segment for a track of `bars` bars.
    pub fn spans(&self, bars: usize) -> Vec<(usize, usize)> {
        self.segments
            .iter()
            .enumerate()
            .map(|(k, s)| {
                let end = self.segments.get(k + 1).map_or(bars, |next| next.start_bar);
                (s.start_bar, end)
            })
            .collect()
    }

    pub fn validate(&self, bars: usize, shots: usize) -> Vec<Violation> {
        validate_alignment(self, bars, shots)
    }
}

/// A broken alignment invariant. `segment` is the 1-based offending segment.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub enum Violation {
    Empty,
    FirstSegmentNotAtBarOne { start_bar: usize },
    StartNotIncreasing { segment: usize },
    StartBeyondLastBar { segment: usize },
    ShotOutOfRange { segment: usize, shot: usize },
    RepeatedShot { segment: usize, shot: usize },
    TooManySegments { segments: usize, bars: usize },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::Empty => write!(f, "alignment has no segments"),
            Violation::FirstSegmentNotAtBarOne { start_bar } => {
                write!(f, "first segment starts at bar {start_bar}, not bar 1")
            }
            Violation::StartNotIncreasing { segment } => {
                write!(f, "segment {segment}: start bar not strictly increasing")
            }
            Violation::StartBeyondLastBar { segment } => {
                write!(f, "segment {segment}: starts past the last bar")
            }
            Violation::ShotOutOfRange { segment, shot } => {
                write!(f, "segment {segment}: shot {shot} out of range")
            }
            Violation::RepeatedShot { segment, shot } => {
                write!(f, "segment {segment}: repeated shot {shot}")
            }
            Violation::TooManySegments { segments, bars } => {
                write!(f, "{segments} segments exceed {bars} bars")
            }
        }
    }
}

/// Checks every elastic-alignment invariant and returns all violations;
/// an empty vector means the alignment is valid for `bars` × `shots`.
pub fn validate_alignment(align: &ElasticAlignment, bars: usize, shots: usize) -> Vec<Violation> {
    let mut out = Vec::new();
    let Some(first) = align.segments.first() else {
        out.push(Violation::Empty);
        return out;
    };
    if first.start_bar != 0 {
        out.push(Violation::FirstSegmentNotAtBarOne {
            start_bar: first.start_bar + 1,
        });
    }
    let mut seen = vec![false; shots];
    for (k, seg) in align.segments.iter().enumerate() {
        let segment = k + 1;
        if k > 0 && seg.start_bar <= align.segments[k - 1].start_bar {
            out.push(Violation::StartNotIncreasing { segment });
        }
        if seg.start_bar >= bars {
            out.push(Violation::StartBeyondLastBar { segment });
        }
        if seg.shot >= shots {
            out.push(Violation::ShotOutOfRange {
                segment,
                shot: seg.shot + 1,
            });
        } else if std::mem::replace(&mut seen[seg.shot], true) {
            out.push(Violation::RepeatedShot {
                segment,
                shot: seg.shot + 1,
            });
        }
    }
    if align.segments.len() > bars {
        out.push(Violation::TooManySegments {
            segments: align.segments.len(),
            bars,
        });
    }
    out
}

/// Which shots a beam state may consider at a bar.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CandidateOrder {
    /// Drop banned shots first, then take the best `top_m` of the rest.
    #[default]
    RankAfterExclusion,
    /// Take the best `top_m` of the row, then drop banned shots.
    TopMThenExclude,
}

/// How masked-out entries are treated when fusing scores.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FusionMode {
    /// Masked entries become [`EXCLUDED`].
    #[default]
    HardExclusion,
    /// Masked entries only zero the alignment term; priors still apply.
    Literal,
}

/// Tunables for scoring, fusion, selection and the loss evaluators.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EngineParams {
    pub beam_width: usize,
    pub top_m: usize,
    pub k_max: usize,
    pub lambda_smooth: f64,
    pub lambda_cut: f64,
    pub eta: f64,
    pub theta_sim: f64,
    pub lambda_energy: f64,
    pub lambda_importance: f64,
    pub temperature: f64,
    pub target_temperature: f64,
    pub sinkhorn_temperature: f64,
    pub sinkhorn_iters: usize,
    pub lambda_sink: f64,
    pub lambda_con: f64,
    pub candidate_order: CandidateOrder,
    pub fusion_mode: FusionMode,
}

impl Default for EngineParams {
    fn default() -> Self {
        Self {
            beam_width: 50,
            top_m: 20,
            k_max: 5,
            lambda_smooth: 0.3,
            lambda_cut: 0.5,
            eta: 0.9,
            theta_sim: 0.80,
            lambda_energy: 0.1,
            lambda_importance: 0.1,
            temperature: 1.0,
            target_temperature: 1.0,
            sinkhorn_temperature: 0.5,
            sinkhorn_iters: 3,
            lambda_sink: 0.1,
            lambda_con: 0.5,
            candidate_order: CandidateOrder::default(),
            fusion_mode: FusionMode::default(),
        }
    }
}

impl EngineParams {
    pub fn validate(&self) -> Result<()> {
        if self.beam_width == 0 || self.top_m == 0 || self.k_max == 0 {
            return Err(Error::invalid("beam_width, top_m and k_max must be >= 1"));
        }
        if !(self.eta > 0.0 && self.eta <= 1.0) {
            return Err(Error::invalid(format!("eta must lie in (0, 1], got {}", self.eta)));
        }
        if !(-1.0..=1.0).contains(&self.theta_sim) {
            return Err(Error::invalid(format!(
                "theta_sim must lie in [-1, 1], got {}",
                self.theta_sim
            )));
        }
        for (name, t) in [
            ("temperature", self.temperature),
            ("target_temperature", self.target_temperature),
            ("sinkhorn_temperature", self.sinkhorn_temperature),
        ] {
            if !(t > 0.0 && t.is_finite()) {
                return Err(Error::invalid(format!("{name} must be positive, got {t}")));
            }
        }
        let weights = [
            self.lambda_smooth,
            self.lambda_cut,
            self.lambda_energy,
            self.lambda_importance,
            self.lambda_sink,
            self.lambda_con,
        ];
        if weights.iter().any(|w| !w.is_finite()) {
            return Err(Error::invalid("loss and prior weights must be finite"));
        }
        Ok(())
    }
}
