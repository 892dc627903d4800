//! Fréchet distance between Gaussians fitted to two shot-feature sets.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use ndarray::Array2;
use serde::Serialize;

use crate::error::{Error, Result};

pub const DEFAULT_SHRINKAGE: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FsdTerms {
    pub fsd: f64,
    /// Squared distance between the means.
    pub mean_term: f64,
    /// `Tr(Σ₁ + Σ₂ − 2(Σ₁Σ₂)^½)`.
    pub cov_term: f64,
}

fn to_matrix(x: &Array2<f64>) -> DMatrix<f64> {
    DMatrix::from_fn(x.nrows(), x.ncols(), |r, c| x[[r, c]])
}

/// Sample mean and covariance (denominator `max(n − 1, 1)`).
fn gaussian(x: &DMatrix<f64>) -> (DVector<f64>, DMatrix<f64>) {
    let n = x.nrows();
    let mean = x.row_mean().transpose();
    let mut centered = x.clone();
    for mut row in centered.row_iter_mut() {
        row -= mean.transpose();
    }
    let cov = centered.transpose() * &centered / (n.saturating_sub(1).max(1) as f64);
    (mean, cov)
}

fn symmetric_eigenvalues(m: DMatrix<f64>) -> (DVector<f64>, DMatrix<f64>) {
    let sym = (&m + m.transpose()) * 0.5;
    let eig = SymmetricEigen::new(sym);
    (eig.eigenvalues, eig.eigenvectors)
}

/// Principal square root of a symmetric PSD matrix, negative eigenvalues
/// clipped to zero.
fn psd_sqrt(m: DMatrix<f64>) -> DMatrix<f64> {
    let (vals, vecs) = symmetric_eigenvalues(m);
    let root = DMatrix::from_diagonal(&vals.map(|v| v.max(0.0).sqrt()));
    &vecs * root * vecs.transpose()
}

/// Fréchet shot distance with `epsilon`·I added to both covariances.
///
/// The trace of `(Σ₁Σ₂)^½` is taken from the symmetric product
/// `Σ₁^½ Σ₂ Σ₁^½`, which has the same eigenvalues.
pub fn fsd(pred: &Array2<f64>, gt: &Array2<f64>, epsilon: f64) -> Result<FsdTerms> {
    if pred.nrows() == 0 || gt.nrows() == 0 {
        return Err(Error::invalid("FSD needs at least one feature row on each side"));
    }
    let d = pred.ncols();
    if d == 0 {
        return Err(Error::invalid("FSD needs a positive feature dimension"));
    }
    if gt.ncols() != d {
        return Err(Error::invalid(format!(
            "FSD feature widths differ: {d} vs {}",
            gt.ncols()
        )));
    }
    if pred.iter().chain(gt.iter()).any(|v| !v.is_finite()) {
        return Err(Error::invalid("FSD features must be finite"));
    }
    let (mu1, mut s1) = gaussian(&to_matrix(pred));
    let (mu2, mut s2) = gaussian(&to_matrix(gt));
    let shrink = DMatrix::<f64>::identity(d, d) * epsilon;
    s1 += &shrink;
    s2 += &shrink;

    let mean_term = (&mu1 - &mu2).norm_squared();
    let root1 = psd_sqrt(s1.clone());
    let (cross, _) = symmetric_eigenvalues(&root1 * &s2 * &root1);
    let trace_sqrt: f64 = cross.iter().map(|v| v.max(0.0).sqrt()).sum();
    let cov_term = s1.trace() + s2.trace() - 2.0 * trace_sqrt;
    Ok(FsdTerms {
        fsd: (mean_term + cov_term).max(0.0),
        mean_term,
        cov_term,
    })
}
