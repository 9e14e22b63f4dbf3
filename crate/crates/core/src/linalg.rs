//! Small dense helpers shared across modules.

use nalgebra::{DMatrix, SymmetricEigen};

/// `(X + X') / 2`.
pub fn symmetrize(x: &DMatrix<f64>) -> DMatrix<f64> {
    (x + x.transpose()) * 0.5
}

/// `P = I - 11'`, the matrix for which `trace(P B)` sums the off-diagonal
/// magnitudes of a matrix with nonpositive off-diagonals.
pub fn off_diagonal_selector(n: usize) -> DMatrix<f64> {
    DMatrix::from_fn(n, n, |i, j| if i == j { 0.0 } else { -1.0 })
}

/// Eigen-decomposition of the symmetric part of `x`.
pub fn sym_eigen(x: &DMatrix<f64>) -> SymmetricEigen<f64, nalgebra::Dyn> {
    SymmetricEigen::new(symmetrize(x))
}

pub fn min_eigenvalue(x: &DMatrix<f64>) -> f64 {
    if x.is_empty() {
        return f64::INFINITY;
    }
    sym_eigen(x).eigenvalues.min()
}

pub fn max_diagonal(x: &DMatrix<f64>) -> f64 {
    x.diagonal()
        .iter()
        .copied()
        .fold(f64::NEG_INFINITY, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn selector_trace_sums_off_diagonals() {
        let b = DMatrix::from_row_slice(3, 3, &[2.0, -1.0, -0.5, -1.0, 3.0, 0.0, -0.5, 0.0, 1.0]);
        let p = off_diagonal_selector(3);
        assert!(((&p * &b).trace() - 3.0).abs() < 1e-14);
    }
}
