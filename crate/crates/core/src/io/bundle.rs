//! Feature bundles: a directory holding `manifest.json` plus one raw
//! little-endian f32 file per array (row-major, no header).
//!
//! ```text
//! {
//!   "schema_version": 1,
//!   "movie": {
//!     "shot_count": I, "feature_dim": d_v,
//!     "durations": [...], "start_times": [...], "movie_duration": s,
//!     "files": { "features": "shot_features.f32",            // I x d_v
//!                "frame_features": "frame_features.f32" },   // optional, sum(frame_counts) x d_v
//!     "frame_counts": [...]                                  // with frame_features
//!   },
//!   "music": {
//!     "bar_count": J, "feature_dim": d_a (0 without bar features),
//!     "bar_boundaries": [J + 1 seconds],
//!     "sample_rate": hz, "sample_count": n,                  // with audio
//!     "files": { "features": "bar_features.f32",             // optional, J x d_a
//!                "audio": "audio.f32",                       // optional, n mono samples
//!                "energy": "energy.f32" }                    // optional override, J values in [0, 1]
//!   },
//!   "keywords": { "count": n, "file": "keyword_embeddings.f32" },   // optional, n x d_v
//!   "scores": { "file": "scores.f32" },                             // optional raw J x I score matrix
//!   "ground_truth": [[shot, start_bar], ...],                       // optional, 1-based
//!   "metadata": { "key": "value" }                                  // optional
//! }
//! ```

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use super::{decode_f32, encode_f32, read_to_string, to_json, write_atomic};
use crate::error::{Error, Result};
use crate::features::{compute_bar_energy, AudioSamples, ShotFrameFeatures};
use crate::types::{validate_alignment, BarTrack, ElasticAlignment, ScoreMatrix, ShotTable};

pub const BUNDLE_SCHEMA_VERSION: u32 = 1;
pub const MANIFEST_FILE: &str = "manifest.json";

const SHOT_FEATURES_FILE: &str = "shot_features.f32";
const FRAME_FEATURES_FILE: &str = "frame_features.f32";
const BAR_FEATURES_FILE: &str = "bar_features.f32";
const AUDIO_FILE: &str = "audio.f32";
const ENERGY_FILE: &str = "energy.f32";
const KEYWORDS_FILE: &str = "keyword_embeddings.f32";
const SCORES_FILE: &str = "scores.f32";

#[derive(Debug, Clone, PartialEq)]
pub struct AudioPayload {
    pub samples: Vec<f32>,
    pub sample_rate: u32,
}

/// Where per-bar energy came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EnergySource {
    Override,
    Audio,
    /// No energy information: every bar gets 1.0.
    Default,
}

/// In-memory bundle. Arrays keep their on-disk f32 precision so that a
/// write followed by a load reproduces them bit for bit.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureBundle {
    pub shot_features: Array2<f32>,
    pub shot_durations: Vec<f64>,
    pub shot_start_times: Vec<f64>,
    pub movie_duration: f64,
    pub bar_boundaries: Vec<f64>,
    pub bar_features: Option<Array2<f32>>,
    pub frame_features: Option<Vec<Array2<f32>>>,
    pub audio: Option<AudioPayload>,
    pub energy: Option<Vec<f32>>,
    pub keyword_embeddings: Option<Array2<f32>>,
    pub scores: Option<Array2<f32>>,
    pub ground_truth: Option<ElasticAlignment>,
    pub metadata: BTreeMap<String, String>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Manifest {
    schema_version: u32,
    movie: MovieManifest,
    music: MusicManifest,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    keywords: Option<KeywordRef>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    scores: Option<FileRef>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    ground_truth: Option<Vec<[usize; 2]>>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    metadata: BTreeMap<String, String>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct MovieManifest {
    shot_count: usize,
    feature_dim: usize,
    durations: Vec<f64>,
    start_times: Vec<f64>,
    movie_duration: f64,
    files: MovieFiles,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    frame_counts: Option<Vec<usize>>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct MovieFiles {
    features: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    frame_features: Option<String>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct MusicManifest {
    bar_count: usize,
    #[serde(default)]
    feature_dim: usize,
    bar_boundaries: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    sample_rate: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    sample_count: Option<usize>,
    #[serde(default)]
    files: MusicFiles,
}

#[derive(Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct MusicFiles {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    features: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    audio: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    energy: Option<String>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct KeywordRef {
    count: usize,
    file: String,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileRef {
    file: String,
}

fn to_f64(a: &Array2<f32>) -> Array2<f64> {
    a.mapv(f64::from)
}

impl FeatureBundle {
    /// A bundle with only the required movie and music fields.
    pub fn new(
        shot_features: Array2<f32>,
        shot_durations: Vec<f64>,
        shot_start_times: Vec<f64>,
        movie_duration: f64,
        bar_boundaries: Vec<f64>,
    ) -> Self {
        Self {
            shot_features,
            shot_durations,
            shot_start_times,
            movie_duration,
            bar_boundaries,
            bar_features: None,
            frame_features: None,
            audio: None,
            energy: None,
            keyword_embeddings: None,
            scores: None,
            ground_truth: None,
            metadata: BTreeMap::new(),
        }
    }

    pub fn shot_count(&self) -> usize {
        self.shot_features.nrows()
    }

    pub fn bar_count(&self) -> usize {
        self.bar_boundaries.len().saturating_sub(1)
    }

    pub fn bar_durations(&self) -> Vec<f64> {
        self.bar_boundaries.windows(2).map(|w| w[1] - w[0]).collect()
    }

    pub fn music_duration(&self) -> f64 {
        match (self.bar_boundaries.first(), self.bar_boundaries.last()) {
            (Some(a), Some(b)) => b - a,
            _ => 0.0,
        }
    }

    pub fn shot_table(&self) -> Result<ShotTable> {
        ShotTable::new(
            to_f64(&self.shot_features),
            self.shot_durations.clone(),
            self.shot_start_times.clone(),
            self.movie_duration,
        )
    }

    pub fn audio_samples(&self) -> Option<Result<AudioSamples>> {
        self.audio.as_ref().map(|a| {
            AudioSamples::from_seconds(
                a.samples.iter().map(|&x| f64::from(x)).collect(),
                a.sample_rate,
                &self.bar_boundaries,
            )
        })
    }

    /// Per-bar energy from the override, else from the audio, else all ones
    /// (with a warning).
    pub fn energy(&self) -> Result<(Vec<f64>, EnergySource)> {
        if let Some(e) = &self.energy {
            return Ok((e.iter().map(|&x| f64::from(x)).collect(), EnergySource::Override));
        }
        if let Some(audio) = self.audio_samples() {
            return Ok((compute_bar_energy(&audio?)?, EnergySource::Audio));
        }
        log::warn!("bundle has neither audio nor an energy override; using energy 1.0 for every bar");
        Ok((vec![1.0; self.bar_count()], EnergySource::Default))
    }

    /// Bar track with energy resolved as in [`FeatureBundle::energy`]. Without
    /// bar features the feature matrix has zero columns.
    pub fn bar_track(&self) -> Result<BarTrack> {
        let (energy, _) = self.energy()?;
        let features = match &self.bar_features {
            Some(f) => to_f64(f),
            None => Array2::zeros((self.bar_count(), 0)),
        };
        BarTrack::new(features, self.bar_durations(), energy)
    }

    pub fn frame_features(&self) -> Option<Result<ShotFrameFeatures>> {
        self.frame_features
            .as_ref()
            .map(|frames| ShotFrameFeatures::new(frames.iter().map(to_f64).collect()))
    }

    pub fn bar_features_f64(&self) -> Option<Array2<f64>> {
        self.bar_features.as_ref().map(to_f64)
    }

    pub fn keyword_embeddings_f64(&self) -> Option<Array2<f64>> {
        self.keyword_embeddings.as_ref().map(to_f64)
    }

    pub fn score_matrix(&self) -> Option<Result<ScoreMatrix>> {
        self.scores.as_ref().map(|s| ScoreMatrix::new(to_f64(s)))
    }

    /// Checks every cross-array invariant.
    pub fn validate(&self) -> Result<()> {
        let shots = self.shot_count();
        let dv = self.shot_features.ncols();
        if dv == 0 {
            return Err(Error::invalid("movie feature_dim must be at least 1"));
        }
        self.shot_table()?;

        let bars = self.bar_count();
        if bars == 0 {
            return Err(Error::invalid("music needs at least two bar boundaries"));
        }
        for (j, w) in self.bar_boundaries.windows(2).enumerate() {
            if !(w[0].is_finite() && w[1].is_finite() && w[1] > w[0]) {
                return Err(Error::invalid(format!(
                    "bar boundaries must increase strictly (bar {})",
                    j + 1
                )));
            }
        }
        if self.bar_boundaries[0] < 0.0 {
            return Err(Error::invalid("bar boundaries must be non-negative"));
        }
        if let Some(f) = &self.bar_features {
            if f.nrows() != bars || f.ncols() == 0 {
                return Err(Error::invalid(format!(
                    "array `bar_features` is {}x{}, expected {bars} rows and at least one column",
                    f.nrows(),
                    f.ncols()
                )));
            }
        }
        if let Some(frames) = &self.frame_features {
            if frames.len() != shots {
                return Err(Error::invalid(format!(
                    "array `frame_features` covers {} shots, expected {shots}",
                    frames.len()
                )));
            }
            if frames.iter().any(|f| f.ncols() != dv || f.nrows() == 0) {
                return Err(Error::invalid(format!(
                    "array `frame_features`: every shot needs at least one frame of width {dv}"
                )));
            }
        }
        if let Some(audio) = &self.audio {
            if audio.sample_rate == 0 {
                return Err(Error::invalid("audio sample_rate must be positive"));
            }
            if audio.samples.iter().any(|x| !x.is_finite()) {
                return Err(Error::invalid("array `audio` contains non-finite samples"));
            }
        }
        if let Some(e) = &self.energy {
            if e.len() != bars {
                return Err(Error::invalid(format!(
                    "array `energy` has {} values, expected {bars}",
                    e.len()
                )));
            }
            if let Some(j) = e.iter().position(|x| !(0.0..=1.0).contains(x)) {
                return Err(Error::invalid(format!(
                    "array `energy`: bar {} value {} outside [0, 1]",
                    j + 1,
                    e[j]
                )));
            }
        }
        if let Some(k) = &self.keyword_embeddings {
            if k.ncols() != dv || k.nrows() == 0 {
                return Err(Error::invalid(format!(
                    "array `keyword_embeddings` is {}x{}, expected width {dv}",
                    k.nrows(),
                    k.ncols()
                )));
            }
        }
        if let Some(s) = &self.scores {
            if s.dim() != (bars, shots) {
                return Err(Error::invalid(format!(
                    "array `scores` is {}x{}, expected {bars}x{shots}",
                    s.nrows(),
                    s.ncols()
                )));
            }
            if s.iter().any(|x| !x.is_finite()) {
                return Err(Error::invalid("array `scores` contains non-finite values"));
            }
        }
        if let Some(gt) = &self.ground_truth {
            let violations = validate_alignment(gt, bars, shots);
            if let Some(v) = violations.first() {
                return Err(Error::invalid(format!("ground_truth: {v}")));
            }
        }
        Ok(())
    }
}

fn check_file_name(name: &str) -> Result<()> {
    let ok = !name.is_empty() && name != "." && name != ".." && !name.contains(['/', '\\']) && name != MANIFEST_FILE;
    if ok {
        Ok(())
    } else {
        Err(Error::invalid(format!(
            "bundle file name `{name}` must be a plain file name inside the bundle"
        )))
    }
}

fn read_array(dir: &Path, file: &str, name: &str, expected: usize) -> Result<Vec<f32>> {
    check_file_name(file)?;
    let path = dir.join(file);
    let bytes = fs::read(&path).map_err(|e| Error::io(&path, e))?;
    decode_f32(&bytes, expected, name)
}

fn read_matrix(dir: &Path, file: &str, name: &str, rows: usize, cols: usize) -> Result<Array2<f32>> {
    let count = rows
        .checked_mul(cols)
        .ok_or_else(|| Error::invalid(format!("array `{name}`: declared shape overflows")))?;
    let data = read_array(dir, file, name, count)?;
    Array2::from_shape_vec((rows, cols), data).map_err(|e| Error::Internal(e.to_string()))
}

fn parse_manifest(text: &str) -> Result<Manifest> {
    let value: serde_json::Value =
        serde_json::from_str(text).map_err(|e| Error::invalid(format!("manifest is not valid JSON: {e}")))?;
    match value.get("schema_version").and_then(serde_json::Value::as_u64) {
        Some(v) if v == u64::from(BUNDLE_SCHEMA_VERSION) => {}
        Some(v) => return Err(Error::invalid(format!("unknown bundle schema_version {v}"))),
        None => return Err(Error::invalid("manifest lacks a numeric schema_version")),
    }
    if value.get("movie").is_none() {
        return Err(Error::invalid("bundle has no movie section"));
    }
    if value.get("music").is_none() {
        return Err(Error::invalid("bundle has no music section"));
    }
    serde_json::from_value(value).map_err(|e| Error::invalid(format!("manifest: {e}")))
}

/// Reads and validates a bundle directory.
pub fn load_bundle(dir: &Path) -> Result<FeatureBundle> {
    let manifest = parse_manifest(&read_to_string(&dir.join(MANIFEST_FILE))?)?;
    let movie = &manifest.movie;
    let music = &manifest.music;
    let (shots, dv) = (movie.shot_count, movie.feature_dim);
    let bars = music.bar_count;
    if music.bar_boundaries.len() != bars + 1 {
        return Err(Error::invalid(format!(
            "music: bar_count {bars} needs {} boundaries, found {}",
            bars + 1,
            music.bar_boundaries.len()
        )));
    }
    if movie.durations.len() != shots || movie.start_times.len() != shots {
        return Err(Error::invalid(format!(
            "movie: shot_count {shots} but {} durations and {} start times",
            movie.durations.len(),
            movie.start_times.len()
        )));
    }

    let mut bundle = FeatureBundle::new(
        read_matrix(dir, &movie.files.features, "shot_features", shots, dv)?,
        movie.durations.clone(),
        movie.start_times.clone(),
        movie.movie_duration,
        music.bar_boundaries.clone(),
    );

    match (&movie.files.frame_features, &movie.frame_counts) {
        (Some(file), Some(counts)) => {
            let total: usize = counts.iter().sum();
            let all = read_matrix(dir, file, "frame_features", total, dv)?;
            let mut frames = Vec::with_capacity(counts.len());
            let mut row = 0;
            for &n in counts {
                frames.push(all.slice(ndarray::s![row..row + n, ..]).to_owned());
                row += n;
            }
            bundle.frame_features = Some(frames);
        }
        (None, None) => {}
        _ => {
            return Err(Error::invalid(
                "movie: frame_features file and frame_counts must be given together",
            ))
        }
    }

    match (&music.files.features, music.feature_dim) {
        (Some(file), da) => {
            bundle.bar_features = Some(read_matrix(dir, file, "bar_features", bars, da)?);
        }
        (None, 0) => {}
        (None, da) => {
            return Err(Error::invalid(format!(
                "music: feature_dim {da} declared but no features file"
            )))
        }
    }

    match (&music.files.audio, music.sample_rate, music.sample_count) {
        (Some(file), Some(rate), Some(n)) => {
            bundle.audio = Some(AudioPayload {
                samples: read_array(dir, file, "audio", n)?,
                sample_rate: rate,
            });
        }
        (None, _, _) => {}
        _ => return Err(Error::invalid("music: audio needs both sample_rate and sample_count")),
    }

    if let Some(file) = &music.files.energy {
        bundle.energy = Some(read_array(dir, file, "energy", bars)?);
    }
    if let Some(k) = &manifest.keywords {
        bundle.keyword_embeddings = Some(read_matrix(dir, &k.file, "keyword_embeddings", k.count, dv)?);
    }
    if let Some(s) = &manifest.scores {
        bundle.scores = Some(read_matrix(dir, &s.file, "scores", bars, shots)?);
    }
    if let Some(gt) = &manifest.ground_truth {
        let pairs: Vec<(usize, usize)> = gt.iter().map(|p| (p[0], p[1])).collect();
        bundle.ground_truth =
            Some(ElasticAlignment::from_one_based(&pairs).map_err(|e| Error::invalid(format!("ground_truth: {e}")))?);
    }
    bundle.metadata = manifest.metadata;

    bundle.validate()?;
    if bundle.energy.is_none() && bundle.audio.is_none() {
        log::warn!(
            "bundle {} has neither audio nor an energy override; energy defaults to 1.0 per bar",
            dir.display()
        );
    }
    Ok(bundle)
}

/// Writes `bundle` into `dir` (created if needed). Arrays are written
/// first and the manifest last, each atomically.
pub fn write_bundle(bundle: &FeatureBundle, dir: &Path) -> Result<()> {
    bundle.validate()?;
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let write = |file: &str, values: Vec<u8>| write_atomic(&dir.join(file), &values);
    let matrix_bytes = |m: &Array2<f32>| encode_f32(m.iter().copied());

    write(SHOT_FEATURES_FILE, matrix_bytes(&bundle.shot_features))?;
    let mut movie_files = MovieFiles {
        features: SHOT_FEATURES_FILE.into(),
        frame_features: None,
    };
    let mut frame_counts = None;
    if let Some(frames) = &bundle.frame_features {
        let bytes: Vec<u8> = frames.iter().flat_map(matrix_bytes).collect();
        write(FRAME_FEATURES_FILE, bytes)?;
        movie_files.frame_features = Some(FRAME_FEATURES_FILE.into());
        frame_counts = Some(frames.iter().map(Array2::nrows).collect());
    }

    let mut music_files = MusicFiles::default();
    if let Some(f) = &bundle.bar_features {
        write(BAR_FEATURES_FILE, matrix_bytes(f))?;
        music_files.features = Some(BAR_FEATURES_FILE.into());
    }
    if let Some(a) = &bundle.audio {
        write(AUDIO_FILE, encode_f32(a.samples.iter().copied()))?;
        music_files.audio = Some(AUDIO_FILE.into());
    }
    if let Some(e) = &bundle.energy {
        write(ENERGY_FILE, encode_f32(e.iter().copied()))?;
        music_files.energy = Some(ENERGY_FILE.into());
    }
    let keywords = match &bundle.keyword_embeddings {
        Some(k) => {
            write(KEYWORDS_FILE, matrix_bytes(k))?;
            Some(KeywordRef {
                count: k.nrows(),
                file: KEYWORDS_FILE.into(),
            })
        }
        None => None,
    };
    let scores = match &bundle.scores {
        Some(s) => {
            write(SCORES_FILE, matrix_bytes(s))?;
            Some(FileRef {
                file: SCORES_FILE.into(),
            })
        }
        None => None,
    };

    let manifest = Manifest {
        schema_version: BUNDLE_SCHEMA_VERSION,
        movie: MovieManifest {
            shot_count: bundle.shot_count(),
            feature_dim: bundle.shot_features.ncols(),
            durations: bundle.shot_durations.clone(),
            start_times: bundle.shot_start_times.clone(),
            movie_duration: bundle.movie_duration,
            files: movie_files,
            frame_counts,
        },
        music: MusicManifest {
            bar_count: bundle.bar_count(),
            feature_dim: bundle.bar_features.as_ref().map_or(0, Array2::ncols),
            bar_boundaries: bundle.bar_boundaries.clone(),
            sample_rate: bundle.audio.as_ref().map(|a| a.sample_rate),
            sample_count: bundle.audio.as_ref().map(|a| a.samples.len()),
            files: music_files,
        },
        keywords,
        scores,
        ground_truth: bundle
            .ground_truth
            .as_ref()
            .map(|gt| gt.to_one_based().into_iter().map(|(c, r)| [c, r]).collect()),
        metadata: bundle.metadata.clone(),
    };
    write_atomic(&dir.join(MANIFEST_FILE), to_json(&manifest)?.as_bytes())
}
