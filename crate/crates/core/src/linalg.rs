//! Small dense linear-algebra helpers shared by the estimators, losses and
//! samplers. Everything here works on `nalgebra` dynamic matrices.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{Error, Result};

/// Reciprocal condition threshold below which a matrix is treated as singular.
pub const RCOND_FLOOR: f64 = 1e-12;

/// Eigenvalue floor for positive-definiteness checks.
pub const EIGEN_FLOOR: f64 = 1e-12;

/// Returns `(M + M') / 2`.
pub fn symmetrize(m: &DMatrix<f64>) -> DMatrix<f64> {
    (m + m.transpose()) * 0.5
}

/// Largest absolute entry.
pub fn max_abs(m: &DMatrix<f64>) -> f64 {
    m.iter().fold(0.0_f64, |acc, v| acc.max(v.abs()))
}

/// Largest `|m_ij - m_ji|`.
pub fn asymmetry(m: &DMatrix<f64>) -> f64 {
    let n = m.nrows();
    let mut worst = 0.0_f64;
    for j in 0..n {
        for i in (j + 1)..n {
            worst = worst.max((m[(i, j)] - m[(j, i)]).abs());
        }
    }
    worst
}

/// Checks squareness and symmetry relative to the largest entry.
pub fn ensure_symmetric(m: &DMatrix<f64>, rel_tol: f64) -> Result<()> {
    if !m.is_square() {
        return Err(Error::DimensionMismatch(format!(
            "expected a square matrix, got {}x{}",
            m.nrows(),
            m.ncols()
        )));
    }
    let asym = asymmetry(m);
    if asym > rel_tol * max_abs(m).max(1.0) {
        return Err(Error::NotSymmetric { asymmetry: asym });
    }
    Ok(())
}

pub fn ensure_finite(m: &DMatrix<f64>, what: &str) -> Result<()> {
    if m.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFinite(what.to_string()))
    }
}

/// Symmetric eigen-decomposition with eigenvalues sorted descending and the
/// eigenvector columns permuted to match.
pub struct SortedEigen {
    pub values: DVector<f64>,
    pub vectors: DMatrix<f64>,
}

pub fn sym_eigen_desc(m: &DMatrix<f64>) -> SortedEigen {
    let n = m.nrows();
    if n == 0 {
        return SortedEigen {
            values: DVector::zeros(0),
            vectors: DMatrix::zeros(0, 0),
        };
    }
    let eig = SymmetricEigen::new(symmetrize(m));
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let values = DVector::from_iterator(n, order.iter().map(|&i| eig.eigenvalues[i]));
    let mut vectors = DMatrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        vectors.set_column(dst, &eig.eigenvectors.column(src));
    }
    SortedEigen { values, vectors }
}

/// Eigenvalues only, descending.
pub fn eigenvalues_desc(m: &DMatrix<f64>) -> DVector<f64> {
    let n = m.nrows();
    if n == 0 {
        return DVector::zeros(0);
    }
    let mut v: Vec<f64> = symmetrize(m).symmetric_eigenvalues().iter().copied().collect();
    v.sort_by(|a, b| b.total_cmp(a));
    DVector::from_vec(v)
}

/// `min |λ| / max |λ|` for a symmetric matrix; 0 for the zero matrix.
pub fn reciprocal_condition(values: &DVector<f64>) -> f64 {
    let (lo, hi) = values
        .iter()
        .fold((f64::INFINITY, 0.0_f64), |(lo, hi), v| (lo.min(v.abs()), hi.max(v.abs())));
    if hi == 0.0 || !hi.is_finite() {
        0.0
    } else {
        lo / hi
    }
}

/// `V f(Λ) V'` for a spectral decomposition.
pub fn spectral_apply(eig: &SortedEigen, f: impl Fn(f64) -> f64) -> DMatrix<f64> {
    let scaled = DVector::from_iterator(eig.values.len(), eig.values.iter().map(|&l| f(l)));
    let mut left = eig.vectors.clone();
    for (j, s) in scaled.iter().enumerate() {
        left.column_mut(j).scale_mut(*s);
    }
    symmetrize(&(left * eig.vectors.transpose()))
}

/// Inverse of a symmetric matrix through its eigen-decomposition, returning
/// `Err(rcond)` when the reciprocal condition number falls below `RCOND_FLOOR`.
pub(crate) fn sym_inverse(m: &DMatrix<f64>) -> std::result::Result<DMatrix<f64>, f64> {
    let eig = sym_eigen_desc(m);
    let rcond = reciprocal_condition(&eig.values);
    if !(rcond > RCOND_FLOOR) {
        return Err(rcond);
    }
    Ok(spectral_apply(&eig, |l| 1.0 / l))
}

/// Symmetric positive-definite inverse square root `Σ^{-1/2}`.
pub fn inv_sqrt_pd(m: &DMatrix<f64>, what: &str) -> Result<DMatrix<f64>> {
    let eig = sym_eigen_desc(m);
    let min = eig.values.iter().copied().fold(f64::INFINITY, f64::min);
    if !(min > EIGEN_FLOOR) {
        return Err(Error::NotPositiveDefinite {
            what: what.to_string(),
            min_eigenvalue: min,
        });
    }
    Ok(spectral_apply(&eig, |l| 1.0 / l.sqrt()))
}

/// `diag(v)` as a dense matrix.
pub fn diag(v: &DVector<f64>) -> DMatrix<f64> {
    DMatrix::from_diagonal(v)
}
