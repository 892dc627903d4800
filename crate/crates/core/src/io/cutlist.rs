//! Cut lists: per-segment source and timeline in/out points.
//!
//! Each shot is trimmed from its start to the duration of the bars it
//! covers. Indices in the document are 1-based and `bar_end` is inclusive.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{read_to_string, write_json};
use crate::error::{Error, Result};
use crate::types::{validate_alignment, BarTrack, ElasticAlignment, EngineParams, Segment, ShotTable};

pub const CUTLIST_SCHEMA_VERSION: u32 = 1;

/// Span durations may exceed the shot by this much before clamping counts
/// as a retime.
const RETIME_SLACK: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CutSegment {
    pub shot_index: usize,
    pub source_in: f64,
    pub source_out: f64,
    pub timeline_in: f64,
    pub timeline_out: f64,
    pub bar_start: usize,
    pub bar_end: usize,
    /// The span outlasts the shot, so `source_out` was clamped to the shot end.
    pub retime: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CutList {
    pub schema_version: u32,
    pub segments: Vec<CutSegment>,
    /// End of the last timeline segment.
    pub total_duration: f64,
    /// Sum of all bar durations.
    pub music_duration: f64,
    pub retimed_segments: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub total_score: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub params: Option<EngineParams>,
}

impl CutList {
    /// The alignment this cut list was built from (0-based).
    pub fn alignment(&self) -> Result<ElasticAlignment> {
        let pairs: Vec<(usize, usize)> = self.segments.iter().map(|s| (s.shot_index, s.bar_start)).collect();
        ElasticAlignment::from_one_based(&pairs)
    }

    pub fn shot_sequence(&self) -> Vec<usize> {
        self.segments.iter().map(|s| s.shot_index.saturating_sub(1)).collect()
    }
}

/// Builds the cut list for a valid alignment.
pub fn build_cutlist(alignment: &ElasticAlignment, bars: &BarTrack, shots: &ShotTable) -> Result<CutList> {
    if alignment.is_empty() {
        return Err(Error::invalid("cannot build a cut list from an empty alignment"));
    }
    if let Some(v) = validate_alignment(alignment, bars.count(), shots.count()).first() {
        return Err(Error::invalid(format!("alignment is invalid: {v}")));
    }
    let mut prefix = Vec::with_capacity(bars.count() + 1);
    prefix.push(0.0);
    for &l in bars.durations() {
        prefix.push(prefix.last().unwrap() + l);
    }

    let segments: Vec<CutSegment> = alignment
        .spans(bars.count())
        .into_iter()
        .zip(&alignment.segments)
        .map(|((start, end), &Segment { shot, .. })| {
            let timeline_in = prefix[start];
            let timeline_out = prefix[end];
            let span = timeline_out - timeline_in;
            let source_in = shots.start_times()[shot];
            let retime = span > shots.durations()[shot] + RETIME_SLACK;
            let source_out = (source_in + span).min(shots.end_time(shot));
            CutSegment {
                shot_index: shot + 1,
                source_in,
                source_out,
                timeline_in,
                timeline_out,
                bar_start: start + 1,
                bar_end: end,
                retime,
            }
        })
        .collect();
    Ok(CutList {
        schema_version: CUTLIST_SCHEMA_VERSION,
        total_duration: segments.last().map_or(0.0, |s| s.timeline_out),
        music_duration: bars.total_duration(),
        retimed_segments: segments.iter().filter(|s| s.retime).count(),
        segments,
        total_score: None,
        params: None,
    })
}

/// Builds the cut list and writes it to `path` as JSON.
pub fn emit_cutlist(alignment: &ElasticAlignment, bars: &BarTrack, shots: &ShotTable, path: &Path) -> Result<CutList> {
    let cutlist = build_cutlist(alignment, bars, shots)?;
    write_json(path, &cutlist)?;
    Ok(cutlist)
}

pub fn load_cutlist(path: &Path) -> Result<CutList> {
    let text = read_to_string(path)?;
    let cutlist: CutList =
        serde_json::from_str(&text).map_err(|e| Error::invalid(format!("{}: not a cut list: {e}", path.display())))?;
    if cutlist.schema_version != CUTLIST_SCHEMA_VERSION {
        return Err(Error::invalid(format!(
            "unknown cut list schema_version {}",
            cutlist.schema_version
        )));
    }
    if cutlist.segments.is_empty() {
        return Err(Error::invalid("cut list has no segments"));
    }
    Ok(cutlist)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use ndarray::Array2;

    fn shots(start: f64, dur: f64) -> ShotTable {
        ShotTable::new(Array2::ones((1, 2)), vec![dur], vec![start], 100.0).unwrap()
    }

    fn bars(durs: Vec<f64>) -> BarTrack {
        let n = durs.len();
        BarTrack::new(Array2::zeros((n, 0)), durs, vec![1.0; n]).unwrap()
    }

    #[test]
    fn start_anchored_trim() {
        let a = ElasticAlignment::from_one_based(&[(1, 1)]).unwrap();
        let c = build_cutlist(&a, &bars(vec![1.0, 1.0]), &shots(10.0, 3.0)).unwrap();
        let s = &c.segments[0];
        assert_eq!((s.source_in, s.source_out), (10.0, 12.0));
        assert_eq!((s.timeline_in, s.timeline_out), (0.0, 2.0));
        assert_eq!((s.bar_start, s.bar_end), (1, 2));
        assert!(!s.retime);
    }

    #[test]
    fn slack_span_is_clamped_and_flagged() {
        let a = ElasticAlignment::from_one_based(&[(1, 1)]).unwrap();
        let c = build_cutlist(&a, &bars(vec![1.1, 1.1]), &shots(10.0, 2.0)).unwrap();
        let s = &c.segments[0];
        assert_eq!((s.source_in, s.source_out), (10.0, 12.0));
        assert_abs_diff_eq!(s.timeline_out, 2.2, epsilon = 1e-12);
        assert!(s.retime);
        assert_eq!(c.retimed_segments, 1);
    }

    #[test]
    fn empty_alignment_is_an_error() {
        assert!(build_cutlist(&ElasticAlignment::default(), &bars(vec![1.0]), &shots(0.0, 1.0)).is_err());
    }

    #[test]
    fn timeline_is_contiguous() {
        let table = ShotTable::new(Array2::ones((3, 2)), vec![5.0; 3], vec![0.0, 5.0, 10.0], 20.0).unwrap();
        let b = bars(vec![0.7, 1.3, 0.9, 1.1]);
        let a = ElasticAlignment::from_one_based(&[(2, 1), (1, 2), (3, 4)]).unwrap();
        let c = build_cutlist(&a, &b, &table).unwrap();
        assert_eq!(c.segments[0].timeline_in, 0.0);
        for w in c.segments.windows(2) {
            assert_eq!(w[0].timeline_out, w[1].timeline_in);
        }
        assert_abs_diff_eq!(c.total_duration, 4.0, epsilon = 1e-12);
        assert_eq!(c.alignment().unwrap(), a);
    }
}
