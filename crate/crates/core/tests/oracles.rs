//! Library results checked against independent, deliberately naive
//! reimplementations.

mod common;

use std::collections::HashMap;

use barcut::arena::{alignment_accuracy, chamfer, fsd, kendall_tau, levenshtein, sdtw, set_metrics, soft_f1_at_k};
use barcut::bardp::{exhaustive_select, select};
use barcut::transport::sinkhorn_project;
use barcut::ScoreMatrix;
use common::{brute_force_best, naive_objective, random_instance, rng};
use ndarray::Array2;
use rand::seq::SliceRandom;
use rand::Rng;

#[test]
fn select_matches_brute_force_enumeration() {
    let mut r = rng(101);
    let mut compared = 0;
    for _ in 0..120 {
        let inst = random_instance(&mut r, 5, 6, 3);
        let got = select(&inst.fused, &inst.bars, &inst.shots, &inst.params);
        match (got, brute_force_best(&inst)) {
            (Ok(res), Some((best, score, gap))) => {
                assert!(
                    (res.total_score - score).abs() <= 1e-9,
                    "{} vs {score}",
                    res.total_score
                );
                if gap > 1e-9 {
                    assert_eq!(res.alignment, best);
                }
                let naive = naive_objective(&inst, &res.alignment).unwrap();
                assert!((naive - res.total_score).abs() <= 1e-9);
                compared += 1;
            }
            (Err(e), None) => assert_eq!(e.kind(), "infeasible"),
            (got, want) => panic!("select {got:?} but brute force {want:?}"),
        }
    }
    assert!(compared > 60, "only {compared} feasible instances");
}

#[test]
fn exhaustive_agrees_with_unpruned_beam_bit_for_bit() {
    let mut r = rng(7);
    for _ in 0..60 {
        let inst = random_instance(&mut r, 6, 8, 3);
        let beam = select(&inst.fused, &inst.bars, &inst.shots, &inst.params);
        let oracle = exhaustive_select(&inst.fused, &inst.bars, &inst.shots, &inst.params);
        match (beam, oracle) {
            (Ok(a), Ok(b)) => {
                assert_eq!(a.total_score.to_bits(), b.total_score.to_bits());
                assert_eq!(a.alignment, b.alignment);
            }
            (Err(a), Err(b)) => assert_eq!(a.to_string(), b.to_string()),
            (a, b) => panic!("beam {a:?} vs oracle {b:?}"),
        }
    }
}

fn naive_levenshtein(a: &[u8], b: &[u8]) -> usize {
    let mut d = vec![vec![0usize; b.len() + 1]; a.len() + 1];
    for (i, row) in d.iter_mut().enumerate() {
        row[0] = i;
    }
    for (j, cell) in d[0].iter_mut().enumerate() {
        *cell = j;
    }
    for i in 1..=a.len() {
        for j in 1..=b.len() {
            let sub = d[i - 1][j - 1] + usize::from(a[i - 1] != b[j - 1]);
            d[i][j] = sub.min(d[i - 1][j] + 1).min(d[i][j - 1] + 1);
        }
    }
    d[a.len()][b.len()]
}

#[test]
fn levenshtein_matches_full_table() {
    let mut r = rng(3);
    for _ in 0..100 {
        let a: Vec<u8> = (0..r.gen_range(0..40)).map(|_| r.gen_range(0..4)).collect();
        let b: Vec<u8> = (0..r.gen_range(0..40)).map(|_| r.gen_range(0..4)).collect();
        assert_eq!(levenshtein(&a, &b), naive_levenshtein(&a, &b));
    }
}

#[test]
fn kendall_matches_pair_counting() {
    let mut r = rng(4);
    for _ in 0..100 {
        let n = r.gen_range(2..40);
        let mut p: Vec<usize> = (0..n).map(|x| x * 3).collect();
        p.shuffle(&mut r);
        let mut s = 0i64;
        for i in 0..n {
            for j in i + 1..n {
                s += if p[i] < p[j] { 1 } else { -1 };
            }
        }
        let expected = s as f64 / (n * (n - 1) / 2) as f64;
        assert!((kendall_tau(&p).unwrap().value - expected).abs() < 1e-12);
    }
}

#[test]
fn alignment_accuracy_matches_pair_counting() {
    let mut r = rng(5);
    for _ in 0..100 {
        let mut pool: Vec<usize> = (0..15).collect();
        pool.shuffle(&mut r);
        let pred = pool[..r.gen_range(2..12)].to_vec();
        pool.shuffle(&mut r);
        let gt = pool[..r.gen_range(2..12)].to_vec();
        let gt_pos: HashMap<usize, usize> = gt.iter().enumerate().map(|(i, &s)| (s, i)).collect();
        let shared: Vec<usize> = pred.iter().copied().filter(|s| gt_pos.contains_key(s)).collect();
        let aa = alignment_accuracy(&pred, &gt);
        if shared.len() < 2 {
            assert!(aa.degenerate);
            continue;
        }
        let (mut agree, mut total) = (0, 0);
        for i in 0..shared.len() {
            for j in i + 1..shared.len() {
                total += 1;
                agree += usize::from(gt_pos[&shared[i]] < gt_pos[&shared[j]]);
            }
        }
        assert!((aa.value - agree as f64 / total as f64).abs() < 1e-12);
    }
}

/// Maximum one-to-one matching by trying every subset of ground truth.
fn naive_soft_matches(pred: &[usize], gt: &[usize], k: usize) -> usize {
    fn rec(pred: &[usize], gt: &[usize], k: usize, used: u32) -> usize {
        let Some((&p, rest)) = pred.split_first() else {
            return 0;
        };
        let mut best = rec(rest, gt, k, used);
        for (g, &x) in gt.iter().enumerate() {
            if used & (1 << g) == 0 && p.abs_diff(x) <= k {
                best = best.max(1 + rec(rest, gt, k, used | (1 << g)));
            }
        }
        best
    }
    rec(pred, gt, k, 0)
}

#[test]
fn soft_f1_matches_exhaustive_matching() {
    let mut r = rng(6);
    for _ in 0..300 {
        let pred: Vec<usize> = (0..r.gen_range(1..7)).map(|_| r.gen_range(0..25)).collect();
        let gt: Vec<usize> = (0..r.gen_range(1..7)).map(|_| r.gen_range(0..25)).collect();
        let k = r.gen_range(0..4);
        let m = naive_soft_matches(&pred, &gt, k) as f64;
        let (p, rc) = (m / pred.len() as f64, m / gt.len() as f64);
        let expected = if m == 0.0 { 0.0 } else { 2.0 * p * rc / (p + rc) };
        assert!((soft_f1_at_k(&pred, &gt, k).unwrap() - expected).abs() < 1e-12);
    }
}

#[test]
fn chamfer_and_set_metrics_match_naive() {
    let mut r = rng(8);
    for _ in 0..200 {
        let pred: Vec<usize> = (0..r.gen_range(1..10)).map(|_| r.gen_range(0..30)).collect();
        let gt: Vec<usize> = (0..r.gen_range(1..10)).map(|_| r.gen_range(0..30)).collect();
        let mut ps = pred.clone();
        ps.sort();
        ps.dedup();
        let mut gs = gt.clone();
        gs.sort();
        gs.dedup();
        let nearest = |x: usize, to: &[usize]| to.iter().map(|&y| x.abs_diff(y)).min().unwrap() as f64;
        let d1 = ps.iter().map(|&x| nearest(x, &gs)).sum::<f64>() / ps.len() as f64;
        let d2 = gs.iter().map(|&x| nearest(x, &ps)).sum::<f64>() / gs.len() as f64;
        assert!((chamfer(&pred, &gt).unwrap() - 0.5 * (d1 + d2)).abs() < 1e-12);

        let inter = ps.iter().filter(|x| gs.contains(x)).count() as f64;
        let union = (ps.len() + gs.len()) as f64 - inter;
        let m = set_metrics(&pred, &gt).unwrap();
        assert!((m.iou - inter / union).abs() < 1e-12);
        let f1 = if inter == 0.0 {
            0.0
        } else {
            2.0 * inter / (ps.len() + gs.len()) as f64
        };
        assert!((m.f1 - f1).abs() < 1e-12);
    }
}

#[test]
fn sinkhorn_matches_plain_loop() {
    let mut r = rng(9);
    for _ in 0..50 {
        let (j, i) = (r.gen_range(1..6), r.gen_range(1..6));
        let s = Array2::from_shape_fn((j, i), |_| r.gen_range(-2.0..2.0));
        let tau = r.gen_range(0.2..2.0);
        let iters = r.gen_range(0..10);
        let mut p = s.mapv(|v: f64| (v / tau).exp());
        for _ in 0..iters {
            for mut row in p.rows_mut() {
                let sum = row.sum();
                row.mapv_inplace(|v| v / sum);
            }
            for mut col in p.columns_mut() {
                let sum = col.sum();
                col.mapv_inplace(|v| v * (j as f64 / i as f64) / sum);
            }
        }
        let got = sinkhorn_project(&ScoreMatrix::new(s).unwrap(), tau, iters).unwrap();
        for (a, b) in got.values.iter().zip(p.iter()) {
            assert!((a - b).abs() < 1e-9, "{a} vs {b}");
        }
    }
}

#[test]
fn fsd_matches_one_dimensional_closed_form() {
    let mut r = rng(10);
    for _ in 0..100 {
        let a = Array2::from_shape_fn((r.gen_range(2..12), 1), |_| r.gen_range(-3.0..3.0));
        let b = Array2::from_shape_fn((r.gen_range(2..12), 1), |_| r.gen_range(-3.0..3.0));
        let stats = |x: &Array2<f64>| {
            let n = x.nrows() as f64;
            let m = x.sum() / n;
            let v = x.iter().map(|y| (y - m).powi(2)).sum::<f64>() / (n - 1.0);
            (m, v)
        };
        let ((m1, v1), (m2, v2)) = (stats(&a), stats(&b));
        let expected = (m1 - m2).powi(2) + v1 + v2 - 2.0 * (v1 * v2).sqrt();
        assert!((fsd(&a, &b, 0.0).unwrap().fsd - expected.max(0.0)).abs() < 1e-9);
    }
}

#[test]
fn sdtw_matches_full_table() {
    let mut r = rng(12);
    for _ in 0..50 {
        let (n, m) = (r.gen_range(1..8), r.gen_range(1..8));
        let a = common::gaussian_matrix(&mut r, n, 3);
        let b = common::gaussian_matrix(&mut r, m, 3);
        let cost = |i: usize, j: usize| 1.0 - common::cosine(&a.row(i).to_vec(), &b.row(j).to_vec());
        let mut d = vec![vec![f64::INFINITY; m + 1]; n + 1];
        d[0][0] = 0.0;
        for i in 1..=n {
            for j in 1..=m {
                d[i][j] = cost(i - 1, j - 1) + d[i - 1][j - 1].min(d[i - 1][j]).min(d[i][j - 1]);
            }
        }
        let expected = d[n][m] / (n + m) as f64;
        assert!((sdtw(&a, &b).unwrap() - expected).abs() < 1e-9);
    }
}
