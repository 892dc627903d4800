//! Elastic music-to-movie alignment.
//!
//! Given per-bar audio features and per-shot visual features, the engine
//! scores every bar-shot pair, filters the shot pool, and selects an
//! *elastic alignment*: a sequence of shots where each shot covers one or
//! more consecutive bars, with short segments on high-energy music and
//! sustained shots on quiet passages. The [`arena`] module evaluates any
//! shot selection against a ground-truth trailer.
//!
//! Module map:
//!
//! - [`types`]: shared domain types and alignment validation
//! - [`features`]: bar energy, shot dynamics, uniform bar grid
//! - [`transport`]: Sinkhorn projection and loss evaluators
//! - [`scoring`]: cosine alignment scores and prior fusion
//! - [`guard`]: spoiler masking, shot importance, keyword refinement
//! - [`bardp`]: beam-search selection and its exhaustive oracle
//! - [`arena`]: selection, ordering and composition metrics
//! - [`io`]: feature bundles, cut lists, config, synthetic instances
//! - [`pipeline`]: end-to-end alignment of a loaded bundle

pub mod arena;
pub mod bardp;
pub mod error;
pub mod features;
pub mod guard;
pub mod io;
pub mod pipeline;
pub mod scoring;
pub mod transport;
pub mod types;
mod vecmath;

pub use error::{Error, Result};
pub use types::{
    validate_alignment, BarTrack, CandidateMask, ElasticAlignment, EngineParams, ScoreMatrix, Segment, ShotTable,
    Violation, EXCLUDED,
};
