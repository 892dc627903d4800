mod common;

use barcut::bardp::{exhaustive_select, select, transition_score};
use barcut::scoring::FusedScores;
use barcut::{BarTrack, ElasticAlignment, EngineParams, ScoreMatrix, ShotTable, EXCLUDED};
use ndarray::{array, Array2};

fn ample_shots(features: Array2<f64>) -> ShotTable {
    let n = features.nrows();
    let starts = (0..n).map(|i| 100.0 * i as f64).collect();
    ShotTable::new(features, vec![100.0; n], starts, 100.0 * n as f64).unwrap()
}

fn unit_bars(energy: Vec<f64>) -> BarTrack {
    let n = energy.len();
    BarTrack::new(Array2::zeros((n, 0)), vec![1.0; n], energy).unwrap()
}

fn fused(values: Array2<f64>) -> FusedScores {
    FusedScores::from_matrix(ScoreMatrix::with_exclusions(values).unwrap())
}

fn params(lambda_smooth: f64, lambda_cut: f64) -> EngineParams {
    EngineParams {
        lambda_smooth,
        lambda_cut,
        ..EngineParams::default()
    }
}

#[test]
fn diagonal_scores_give_one_shot_per_bar() {
    let shots = ample_shots(array![[1.0, 0.0], [0.0, 1.0]]);
    let r = select(
        &fused(array![[1.0, 0.0], [0.0, 1.0]]),
        &unit_bars(vec![0.5, 0.5]),
        &shots,
        &params(0.0, 0.0),
    )
    .unwrap();
    assert_eq!(r.alignment.to_one_based(), vec![(1, 1), (2, 2)]);
    assert_eq!(r.total_score, 2.0);
}

#[test]
fn quiet_bars_prefer_one_long_segment() {
    let shots = ample_shots(array![[1.0, 0.0], [0.0, 1.0]]);
    let s = fused(array![[1.0, 0.0], [1.0, 0.0]]);
    let r = select(&s, &unit_bars(vec![0.0, 0.0]), &shots, &params(0.0, 0.5)).unwrap();
    assert_eq!(r.alignment.to_one_based(), vec![(1, 1)]);
    assert!((r.total_score - 0.85).abs() < 1e-12);
    let two = ElasticAlignment::from_one_based(&[(1, 1), (2, 2)]).unwrap();
    let inst = common::Instance {
        fused: s,
        bars: unit_bars(vec![0.0, 0.0]),
        shots,
        params: params(0.0, 0.5),
    };
    assert!((common::naive_objective(&inst, &two).unwrap() - 0.70).abs() < 1e-12);
}

#[test]
fn similar_neighbor_is_excluded_after_pick() {
    // Shots 1 and 2 have cosine 0.95; shot 3 is orthogonal to both.
    let c = 0.95f64;
    let shots = ample_shots(array![[1.0, 0.0, 0.0], [c, (1.0 - c * c).sqrt(), 0.0], [0.0, 0.0, 1.0]]);
    let s = fused(array![[1.0, 0.2, 0.1], [0.0, 1.0, 0.3]]);
    let p = EngineParams {
        k_max: 1,
        ..params(0.0, 0.0)
    };
    let r = select(&s, &unit_bars(vec![0.5, 0.5]), &shots, &p).unwrap();
    assert_eq!(r.alignment.to_one_based(), vec![(1, 1), (3, 2)]);
    let o = exhaustive_select(&s, &unit_bars(vec![0.5, 0.5]), &shots, &p).unwrap();
    assert_eq!(o.alignment, r.alignment);
}

#[test]
fn single_bar_is_argmax_of_transition_score() {
    let shots = ample_shots(array![[1.0, 0.0], [0.0, 1.0], [1.0, 1.0]]);
    let s = fused(array![[0.3, EXCLUDED, 0.7]]);
    let bars = unit_bars(vec![0.4]);
    let p = params(0.3, 0.5);
    let r = exhaustive_select(&s, &bars, &shots, &p).unwrap();
    assert_eq!(r.alignment.to_one_based(), vec![(3, 1)]);
    let t = transition_score(&s, 2, 0, 1, None, shots.feature(2), bars.energy(), 0.3, 0.5).unwrap();
    assert_eq!(r.total_score, t.total);
    assert_eq!(select(&s, &bars, &shots, &p).unwrap().alignment, r.alignment);
}

#[test]
fn fully_masked_instance_fails_identically() {
    let shots = ample_shots(array![[1.0, 0.0], [0.0, 1.0]]);
    let s = fused(array![[1.0, 0.5], [EXCLUDED, EXCLUDED]]);
    let bars = unit_bars(vec![0.5, 0.5]);
    let a = select(&s, &bars, &shots, &EngineParams::default()).unwrap_err();
    let b = exhaustive_select(&s, &bars, &shots, &EngineParams::default()).unwrap_err();
    assert_eq!(a.kind(), "infeasible");
    assert_eq!(a.to_string(), b.to_string());
    assert!(a.to_string().contains("bar 2"));
}

#[test]
fn exhausted_pool_reports_the_stuck_bar() {
    // One shot, two bars, and the shot is too short to span both.
    let shots = ShotTable::new(array![[1.0]], vec![0.5], vec![0.0], 1.0).unwrap();
    let bars = unit_bars(vec![0.5, 0.5]);
    let err = select(&fused(array![[1.0], [1.0]]), &bars, &shots, &EngineParams::default()).unwrap_err();
    assert_eq!(err.exit_code(), 3);
    assert!(err.to_string().contains("bar 2"), "{err}");
}

#[test]
fn per_segment_terms_sum_to_total() {
    let mut r = common::rng(77);
    for _ in 0..50 {
        let inst = common::random_instance(&mut r, 6, 8, 3);
        if let Ok(res) = select(&inst.fused, &inst.bars, &inst.shots, &inst.params) {
            let sum: f64 = res.per_segment.iter().map(|t| t.total).sum();
            assert!((sum - res.total_score).abs() <= 1e-9);
            for t in &res.per_segment {
                assert!((t.avg_alignment + t.smoothness + t.bonus - t.total).abs() <= 1e-12);
            }
        }
    }
}

#[test]
fn exhaustive_cap_is_enforced() {
    let n = 11;
    let shots = ample_shots(Array2::eye(n));
    let s = fused(Array2::zeros((2, n)));
    let err = exhaustive_select(&s, &unit_bars(vec![0.5, 0.5]), &shots, &EngineParams::default()).unwrap_err();
    assert_eq!(err.kind(), "invalid_input");
}
