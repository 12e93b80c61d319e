//! Small dense linear-algebra helpers shared by the topology and analysis
//! modules.

use nalgebra::DMatrix;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum EigenError {
    #[error("symmetric eigensolver did not converge for a {n}x{n} matrix")]
    NonConvergence { n: usize },
}

/// Eigenvalues of a symmetric matrix, ascending. The input is symmetrized as
/// `(M + M^T)/2` first so that quadratic-form matrices assembled from
/// non-commuting products can be passed directly.
pub fn symmetric_eigenvalues(m: &DMatrix<f64>) -> Result<Vec<f64>, EigenError> {
    let n = m.nrows();
    let sym = (m + m.transpose()) * 0.5;
    let eigen = nalgebra::SymmetricEigen::try_new(sym, f64::EPSILON, 100_000)
        .ok_or(EigenError::NonConvergence { n })?;
    let mut vals: Vec<f64> = eigen.eigenvalues.iter().copied().collect();
    vals.sort_by(|a, b| a.partial_cmp(b).expect("eigenvalues are finite"));
    Ok(vals)
}

/// Largest eigenvalue of a symmetric matrix.
pub fn lambda_max(m: &DMatrix<f64>) -> Result<f64, EigenError> {
    let vals = symmetric_eigenvalues(m)?;
    Ok(*vals.last().expect("matrix is non-empty"))
}

/// Smallest eigenvalue of a symmetric matrix.
pub fn lambda_min(m: &DMatrix<f64>) -> Result<f64, EigenError> {
    let vals = symmetric_eigenvalues(m)?;
    Ok(vals[0])
}

/// Euclidean norm of a slice.
pub fn norm(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

/// Squared Euclidean norm of a slice.
pub fn norm_squared(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>()
}

/// Dot product of two slices of equal length.
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::dmatrix;

    #[test]
    fn eigenvalues_of_2x2_laplacian() {
        let l = dmatrix![1.0, -1.0; -1.0, 1.0];
        let vals = symmetric_eigenvalues(&l).unwrap();
        assert!((vals[0] - 0.0).abs() < 1e-12);
        assert!((vals[1] - 2.0).abs() < 1e-12);
    }

    #[test]
    fn norms_and_dot() {
        assert_eq!(norm(&[3.0, 4.0]), 5.0);
        assert_eq!(norm_squared(&[3.0, 4.0]), 25.0);
        assert_eq!(dot(&[1.0, 2.0], &[3.0, -1.0]), 1.0);
    }
}
