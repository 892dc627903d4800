//! Trailer evaluation against a ground-truth shot sequence.
//!
//! Metrics are grouped the way the report is laid out:
//!
//! | Dimension   | Metrics                                          |
//! |-------------|--------------------------------------------------|
//! | Selection   | F1, F1@K, IoU, SoftF1@K, Chamfer, FSD            |
//! | Ordering    | Levenshtein, alignment accuracy, Kendall τ       |
//! | Composition | SDTW (BeatAlign is available separately)         |
//! | Perceptual  | not computed: needs external models              |

mod composition;
mod fsd;
mod ordering;
mod selection;

pub use composition::{beat_align, sdtw};
pub use fsd::{fsd, FsdTerms, DEFAULT_SHRINKAGE};
pub use ordering::{alignment_accuracy, kendall_tau, levenshtein, overlap_subsequences, Graded};
pub use selection::{chamfer, f1_at_k, set_metrics, soft_f1_at_k, SetMetrics};

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::types::ElasticAlignment;

/// Metrics named by the evaluation taxonomy that this crate does not compute.
pub const NOT_COMPUTED: [&str; 4] = ["AQ", "VL-Overall", "mAP@t", "R@K"];

/// A shot sequence as cut in a trailer, with one feature row per entry.
#[derive(Debug, Clone, PartialEq)]
pub struct TrailerPrediction {
    shot_sequence: Vec<usize>,
    features: Array2<f64>,
    alignment: Option<ElasticAlignment>,
}

impl TrailerPrediction {
    pub fn new(shot_sequence: Vec<usize>, features: Array2<f64>, shot_count: usize) -> Result<Self> {
        if features.nrows() != shot_sequence.len() {
            return Err(Error::invalid(format!(
                "{} shots in sequence but {} feature rows",
                shot_sequence.len(),
                features.nrows()
            )));
        }
        if let Some(&bad) = shot_sequence.iter().find(|&&s| s >= shot_count) {
            return Err(Error::invalid(format!(
                "shot index {} outside 1..={shot_count}",
                bad + 1
            )));
        }
        Ok(Self {
            shot_sequence,
            features,
            alignment: None,
        })
    }

    /// Takes the sequence from an alignment and each row from `shot_features`.
    pub fn from_alignment(alignment: ElasticAlignment, shot_features: &Array2<f64>) -> Result<Self> {
        let seq = alignment.shot_sequence();
        let features = gather_rows(shot_features, &seq)?;
        let mut p = Self::new(seq, features, shot_features.nrows())?;
        p.alignment = Some(alignment);
        Ok(p)
    }

    pub fn shot_sequence(&self) -> &[usize] {
        &self.shot_sequence
    }

    pub fn features(&self) -> &Array2<f64> {
        &self.features
    }

    pub fn alignment(&self) -> Option<&ElasticAlignment> {
        self.alignment.as_ref()
    }
}

pub(crate) fn gather_rows(m: &Array2<f64>, rows: &[usize]) -> Result<Array2<f64>> {
    if let Some(&bad) = rows.iter().find(|&&r| r >= m.nrows()) {
        return Err(Error::invalid(format!("shot index {} out of range", bad + 1)));
    }
    Ok(m.select(ndarray::Axis(0), rows))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ArenaParams {
    /// Prefix length for F1@K; `None` uses the ground-truth length.
    pub f1_k: Option<usize>,
    /// Index tolerance for SoftF1@K.
    pub soft_k: usize,
    pub fsd_epsilon: f64,
    /// Also report Levenshtein distance on the overlap subsequence.
    pub overlap_levenshtein: bool,
}

impl Default for ArenaParams {
    fn default() -> Self {
        Self {
            f1_k: None,
            soft_k: 5,
            fsd_epsilon: DEFAULT_SHRINKAGE,
            overlap_levenshtein: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SelectionMetrics {
    pub f1: f64,
    pub f1_at_k: f64,
    pub k: usize,
    pub iou: f64,
    pub soft_f1_at_k: f64,
    pub soft_k: usize,
    pub chamfer: f64,
    pub fsd: f64,
    pub fsd_mean_term: f64,
    pub fsd_cov_term: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OrderingMetrics {
    pub levenshtein: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub levenshtein_overlap: Option<usize>,
    pub alignment_accuracy: f64,
    pub kendall_tau: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CompositionMetrics {
    pub sdtw: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricReport {
    pub selection: SelectionMetrics,
    pub ordering: OrderingMetrics,
    pub composition: CompositionMetrics,
    /// Perceptual metrics and the undefined ranking metrics are absent.
    pub not_computed: Vec<String>,
    pub flags: Vec<String>,
}

/// Computes every selection, ordering and composition metric of `pred`
/// against `gt`.
pub fn full_report(pred: &TrailerPrediction, gt: &TrailerPrediction, params: &ArenaParams) -> Result<MetricReport> {
    let p = pred.shot_sequence();
    let g = gt.shot_sequence();
    if p.is_empty() || g.is_empty() {
        return Err(Error::invalid("prediction and ground truth must both select shots"));
    }
    let mut flags = Vec::new();

    let sets = set_metrics(p, g)?;
    let k = params.f1_k.unwrap_or(g.len());
    let fsd_terms = fsd(pred.features(), gt.features(), params.fsd_epsilon)?;
    let selection = SelectionMetrics {
        f1: sets.f1,
        f1_at_k: f1_at_k(p, g, k)?,
        k,
        iou: sets.iou,
        soft_f1_at_k: soft_f1_at_k(p, g, params.soft_k)?,
        soft_k: params.soft_k,
        chamfer: chamfer(p, g)?,
        fsd: fsd_terms.fsd,
        fsd_mean_term: fsd_terms.mean_term,
        fsd_cov_term: fsd_terms.cov_term,
    };

    let aa = alignment_accuracy(p, g);
    if aa.degenerate {
        flags.push("alignment_accuracy: fewer than two shared shots".to_string());
    }
    let tau = kendall_tau(p)?;
    if tau.degenerate {
        flags.push("kendall_tau: prediction has fewer than two shots".to_string());
    }
    let levenshtein_overlap = params.overlap_levenshtein.then(|| {
        let (po, go) = overlap_subsequences(p, g);
        levenshtein(&po, &go)
    });
    let ordering = OrderingMetrics {
        levenshtein: levenshtein(p, g),
        levenshtein_overlap,
        alignment_accuracy: aa.value,
        kendall_tau: tau.value,
    };

    let composition = CompositionMetrics {
        sdtw: sdtw(pred.features(), gt.features())?,
    };
    let report = MetricReport {
        selection,
        ordering,
        composition,
        not_computed: NOT_COMPUTED.iter().map(|s| s.to_string()).collect(),
        flags,
    };
    let finite = [
        report.selection.f1,
        report.selection.f1_at_k,
        report.selection.iou,
        report.selection.soft_f1_at_k,
        report.selection.chamfer,
        report.selection.fsd,
        report.ordering.alignment_accuracy,
        report.ordering.kendall_tau,
        report.composition.sdtw,
    ];
    if finite.iter().any(|v| !v.is_finite()) {
        return Err(Error::Internal("metric report contains a non-finite value".into()));
    }
    Ok(report)
}
