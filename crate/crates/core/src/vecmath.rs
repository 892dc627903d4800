//! Small dense-vector helpers shared by the scoring, guard and metric code.

use ndarray::{Array2, ArrayView1, Axis};

use crate::error::{Error, Result};

pub fn dot(a: ArrayView1<'_, f64>, b: ArrayView1<'_, f64>) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| x * y).sum()
}

pub fn norm(a: ArrayView1<'_, f64>) -> f64 {
    dot(a, a).sqrt()
}

/// Cosine similarity; zero when either vector has zero norm.
pub fn cosine(a: ArrayView1<'_, f64>, b: ArrayView1<'_, f64>) -> f64 {
    let na = norm(a);
    let nb = norm(b);
    if na == 0.0 || nb == 0.0 {
        return 0.0;
    }
    (dot(a, b) / (na * nb)).clamp(-1.0, 1.0)
}

/// L2-normalizes every row. `what` names the matrix in the error message.
pub fn normalize_rows(m: &Array2<f64>, what: &str) -> Result<Array2<f64>> {
    let mut out = m.clone();
    for (r, mut row) in out.axis_iter_mut(Axis(0)).enumerate() {
        let n = norm(row.view());
        if n == 0.0 || !n.is_finite() {
            return Err(Error::invalid(format!(
                "{what}: row {} has zero or non-finite norm",
                r + 1
            )));
        }
        row.mapv_inplace(|x| x / n);
    }
    Ok(out)
}

/// Like [`normalize_rows`] but leaves zero rows at zero.
pub fn normalize_rows_lenient(m: &Array2<f64>) -> Array2<f64> {
    let mut out = m.clone();
    for mut row in out.axis_iter_mut(Axis(0)) {
        let n = norm(row.view());
        if n > 0.0 {
            row.mapv_inplace(|x| x / n);
        }
    }
    out
}

/// Divides by the maximum; an all-zero (or empty) input stays zero.
pub fn max_normalize(values: &mut [f64]) {
    let max = values.iter().cloned().fold(0.0_f64, f64::max);
    if max > 0.0 {
        for v in values.iter_mut() {
            *v /= max;
        }
    }
}
