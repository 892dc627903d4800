//! Ordering metrics: Levenshtein distance, alignment accuracy, Kendall τ.

use std::collections::{HashMap, HashSet};

use serde::Serialize;

use crate::error::{Error, Result};

/// A metric value that may come from a degenerate input.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Graded {
    pub value: f64,
    pub degenerate: bool,
}

/// Unit-cost edit distance, two-row dynamic program.
pub fn levenshtein<T: PartialEq>(a: &[T], b: &[T]) -> usize {
    let (short, long) = if a.len() <= b.len() { (a, b) } else { (b, a) };
    let mut prev: Vec<usize> = (0..=short.len()).collect();
    let mut curr = vec![0; short.len() + 1];
    for (i, x) in long.iter().enumerate() {
        curr[0] = i + 1;
        for (j, y) in short.iter().enumerate() {
            let substitute = prev[j] + usize::from(x != y);
            curr[j + 1] = substitute.min(prev[j + 1] + 1).min(curr[j] + 1);
        }
        std::mem::swap(&mut prev, &mut curr);
    }
    prev[short.len()]
}

/// Restricts both sequences to the shots they share (first occurrence).
pub fn overlap_subsequences(pred: &[usize], gt: &[usize]) -> (Vec<usize>, Vec<usize>) {
    let in_pred: HashSet<usize> = pred.iter().copied().collect();
    let in_gt: HashSet<usize> = gt.iter().copied().collect();
    let restrict = |seq: &[usize], other: &HashSet<usize>| {
        let mut seen = HashSet::new();
        seq.iter()
            .copied()
            .filter(|s| other.contains(s) && seen.insert(*s))
            .collect::<Vec<_>>()
    };
    (restrict(pred, &in_gt), restrict(gt, &in_pred))
}

/// Fraction of pairs of shared shots whose relative order agrees.
/// Fewer than two shared shots gives 1.0, flagged degenerate.
pub fn alignment_accuracy(pred: &[usize], gt: &[usize]) -> Graded {
    let (p, g) = overlap_subsequences(pred, gt);
    let n = p.len();
    if n < 2 {
        return Graded {
            value: 1.0,
            degenerate: true,
        };
    }
    let gt_pos: HashMap<usize, usize> = g.iter().enumerate().map(|(i, &s)| (s, i)).collect();
    let ranks: Vec<usize> = p.iter().map(|s| gt_pos[s]).collect();
    let mut agree = 0usize;
    for a in 0..n {
        for b in a + 1..n {
            if ranks[a] < ranks[b] {
                agree += 1;
            }
        }
    }
    Graded {
        value: agree as f64 / (n * (n - 1) / 2) as f64,
        degenerate: false,
    }
}

/// Counts inversions by merge sort.
fn inversions(values: &mut [usize], scratch: &mut Vec<usize>) -> u64 {
    let n = values.len();
    if n < 2 {
        return 0;
    }
    let mid = n / 2;
    let mut count = inversions(&mut values[..mid], scratch) + inversions(&mut values[mid..], scratch);
    scratch.clear();
    let (mut i, mut j) = (0, mid);
    while i < mid && j < n {
        if values[i] <= values[j] {
            scratch.push(values[i]);
            i += 1;
        } else {
            count += (mid - i) as u64;
            scratch.push(values[j]);
            j += 1;
        }
    }
    scratch.extend_from_slice(&values[i..mid]);
    scratch.extend_from_slice(&values[j..n]);
    values.copy_from_slice(scratch);
    count
}

/// Kendall τ between the cut order and chronological (index) order.
pub fn kendall_tau(pred: &[usize]) -> Result<Graded> {
    let n = pred.len();
    if n < 2 {
        return Ok(Graded {
            value: 0.0,
            degenerate: true,
        });
    }
    if pred.iter().collect::<HashSet<_>>().len() != n {
        return Err(Error::invalid("Kendall tau needs distinct shot indices"));
    }
    let mut values = pred.to_vec();
    let discordant = inversions(&mut values, &mut Vec::with_capacity(n)) as f64;
    let pairs = (n as f64) * (n as f64 - 1.0) / 2.0;
    Ok(Graded {
        value: (pairs - 2.0 * discordant) / pairs,
        degenerate: false,
    })
}
