mod common;

use barcut::arena::{fsd, kendall_tau, levenshtein, sdtw, set_metrics, soft_f1_at_k};
use barcut::bardp::{duration_feasible, select};
use barcut::io::build_cutlist;
use barcut::transport::sinkhorn_project;
use barcut::types::CandidateOrder;
use barcut::{validate_alignment, ElasticAlignment, ScoreMatrix, Segment};
use ndarray::Array2;
use proptest::prelude::*;

fn matrix(rows: usize, cols: usize) -> impl Strategy<Value = Array2<f64>> {
    prop::collection::vec(-3.0f64..3.0, rows * cols).prop_map(move |v| Array2::from_shape_vec((rows, cols), v).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn selections_satisfy_every_constraint(
        seed in any::<u64>(),
        width in 1usize..20,
        literal_order in any::<bool>(),
    ) {
        let mut r = common::rng(seed);
        let mut inst = common::random_instance(&mut r, 10, 12, 4);
        inst.params.beam_width = width;
        inst.params.top_m = 1 + (seed as usize % inst.shots.count());
        if literal_order {
            inst.params.candidate_order = CandidateOrder::TopMThenExclude;
        }
        if let Ok(res) = select(&inst.fused, &inst.bars, &inst.shots, &inst.params) {
            let a = &res.alignment;
            prop_assert!(validate_alignment(a, inst.bars.count(), inst.shots.count()).is_empty());
            for ((s, e), seg) in a.spans(inst.bars.count()).into_iter().zip(&a.segments) {
                prop_assert!(e - s <= inst.params.k_max);
                prop_assert!(duration_feasible(
                    inst.shots.durations()[seg.shot],
                    &inst.bars.durations()[s..e],
                    inst.params.eta
                ));
            }
            for (x, sx) in a.segments.iter().enumerate() {
                for sy in &a.segments[x + 1..] {
                    prop_assert!(common::shot_cosine(&inst.shots, sx.shot, sy.shot) <= inst.params.theta_sim);
                }
            }
            let naive = common::naive_objective(&inst, a).unwrap();
            prop_assert!((naive - res.total_score).abs() <= 1e-9);

            let cut = build_cutlist(a, &inst.bars, &inst.shots).unwrap();
            prop_assert_eq!(cut.segments[0].timeline_in, 0.0);
            for w in cut.segments.windows(2) {
                prop_assert_eq!(w[0].timeline_out, w[1].timeline_in);
            }
            prop_assert!((cut.total_duration - inst.bars.total_duration()).abs() <= 1e-6);
        }
    }

    #[test]
    fn selection_is_deterministic(seed in any::<u64>()) {
        let mut r = common::rng(seed);
        let mut inst = common::random_instance(&mut r, 8, 10, 3);
        inst.params.beam_width = 5;
        let a = select(&inst.fused, &inst.bars, &inst.shots, &inst.params);
        let b = select(&inst.fused, &inst.bars, &inst.shots, &inst.params);
        prop_assert_eq!(format!("{a:?}"), format!("{b:?}"));
    }

    #[test]
    fn compositions_validate(lengths in prop::collection::vec(1usize..4, 1..8), shift in 0usize..20) {
        let mut start = 0;
        let segments: Vec<Segment> = lengths
            .iter()
            .enumerate()
            .map(|(k, len)| {
                let s = Segment { shot: k + shift, start_bar: start };
                start += len;
                s
            })
            .collect();
        let a = ElasticAlignment::new(segments);
        prop_assert!(validate_alignment(&a, start, lengths.len() + shift).is_empty());
        prop_assert!(!validate_alignment(&a, start, lengths.len() + shift - 1).is_empty());
    }

    #[test]
    fn fsd_is_symmetric_and_nonnegative(a in matrix(5, 3), b in matrix(4, 3)) {
        let ab = fsd(&a, &b, 1e-6).unwrap().fsd;
        let ba = fsd(&b, &a, 1e-6).unwrap().fsd;
        prop_assert!(ab >= 0.0);
        prop_assert!((ab - ba).abs() <= 1e-6);
        prop_assert!(fsd(&a, &a, 1e-6).unwrap().fsd <= 1e-6);
    }

    #[test]
    fn levenshtein_is_a_metric(
        a in prop::collection::vec(0u8..4, 0..20),
        b in prop::collection::vec(0u8..4, 0..20),
        c in prop::collection::vec(0u8..4, 0..20),
    ) {
        prop_assert_eq!(levenshtein(&a, &b), levenshtein(&b, &a));
        prop_assert!(levenshtein(&a, &b) <= a.len().max(b.len()));
        prop_assert!(levenshtein(&a, &c) <= levenshtein(&a, &b) + levenshtein(&b, &c));
        prop_assert_eq!(levenshtein(&a, &a), 0);
    }

    #[test]
    fn kendall_is_bounded_and_antisymmetric(p in Just((0..30usize).collect::<Vec<_>>()).prop_shuffle()) {
        let t = kendall_tau(&p).unwrap().value;
        prop_assert!((-1.0..=1.0).contains(&t));
        let rev: Vec<usize> = p.iter().rev().copied().collect();
        prop_assert!((kendall_tau(&rev).unwrap().value + t).abs() < 1e-12);
    }

    #[test]
    fn sdtw_is_zero_on_self_and_nonnegative(a in matrix(6, 4), b in matrix(3, 4)) {
        prop_assume!(a.rows().into_iter().all(|r| r.iter().any(|v| *v != 0.0)));
        prop_assume!(b.rows().into_iter().all(|r| r.iter().any(|v| *v != 0.0)));
        prop_assert_eq!(sdtw(&a, &a).unwrap(), 0.0);
        prop_assert!(sdtw(&a, &b).unwrap() >= 0.0);
    }

    #[test]
    fn soft_f1_grows_with_tolerance(
        pred in prop::collection::btree_set(0usize..40, 1..10),
        gt in prop::collection::btree_set(0usize..40, 1..10),
    ) {
        let pred: Vec<usize> = pred.into_iter().collect();
        let gt: Vec<usize> = gt.into_iter().collect();
        prop_assert!((soft_f1_at_k(&pred, &gt, 0).unwrap() - set_metrics(&pred, &gt).unwrap().f1).abs() < 1e-12);
        let mut prev = 0.0;
        for k in 0..6 {
            let v = soft_f1_at_k(&pred, &gt, k).unwrap();
            prop_assert!(v + 1e-12 >= prev);
            prev = v;
        }
    }

    #[test]
    fn sinkhorn_columns_hit_their_target(s in matrix(4, 7), iters in 1usize..6) {
        let t = sinkhorn_project(&ScoreMatrix::new(s).unwrap(), 0.5, iters).unwrap();
        for col in t.values.columns() {
            prop_assert!((col.sum() - 4.0 / 7.0).abs() < 1e-12);
        }
        prop_assert!(t.values.iter().all(|v| *v > 0.0));
    }
}
