//! Closed-form proximal operators shared by the batch and online solvers.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::linalg;

/// `sign(x) max(|x| - β, 0)`, with `sign(0) = 0`.
pub fn soft_threshold(x: f64, beta: f64) -> f64 {
    debug_assert!(beta >= 0.0);
    if x > beta {
        x - beta
    } else if x < -beta {
        x + beta
    } else {
        0.0
    }
}

/// Entrywise [`soft_threshold`].
pub fn soft_threshold_matrix(x: &DMatrix<f64>, beta: f64) -> DMatrix<f64> {
    x.map(|v| soft_threshold(v, beta))
}

/// Minimizer of `½‖X - B‖²_F - α log det B` over positive definite `B`.
///
/// Eigendecomposes the symmetric part of `X` and maps each eigenvalue `ξ`
/// to `(ξ + sqrt(ξ² + 4α)) / 2`.
pub fn psd_logdet_prox(x: &DMatrix<f64>, alpha: f64) -> DMatrix<f64> {
    debug_assert!(alpha > 0.0);
    let eig = linalg::sym_eigen(x);
    let lifted = eig
        .eigenvalues
        .map(|xi| 0.5 * (xi + (xi * xi + 4.0 * alpha).sqrt()));
    let v = &eig.eigenvectors;
    let mut scaled = v.clone();
    for (mut col, &s) in scaled.column_iter_mut().zip(lifted.iter()) {
        col *= s;
    }
    linalg::symmetrize(&(scaled * v.transpose()))
}

/// Minimizer of `‖X z‖₁ + ½‖X - Y‖²_F`.
///
/// Every row moves along `z` only: `X = Y - s z'` with
/// `s_m = sign((Yz)_m) min(|(Yz)_m| / ‖z‖², 1)`.
pub fn l1_row_prox(y: &DMatrix<f64>, z: &DVector<f64>) -> DMatrix<f64> {
    let zz = z.norm_squared();
    if zz == 0.0 {
        return y.clone();
    }
    let s = (y * z).map(|v| {
        if v == 0.0 {
            0.0
        } else {
            v.signum() * (v.abs() / zz).min(1.0)
        }
    });
    y - s * z.transpose()
}

/// Weight and knee of the Huber row prox.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HuberParams {
    pub kappa: f64,
    pub alpha: f64,
}

impl HuberParams {
    pub fn new(kappa: f64, alpha: f64) -> Result<Self> {
        if !(kappa > 0.0 && alpha > 0.0) {
            return Err(Error::InvalidParams(format!(
                "Huber kappa {kappa} and alpha {alpha} must be positive"
            )));
        }
        Ok(HuberParams { kappa, alpha })
    }
}

/// Minimizer of `α Σ_m h_κ((Xz)_m) + ½‖X - Y‖²_F`.
///
/// With `x = (Yz)_m`, row `m` moves by `H(x) z'` where `H(x) = x / (1/α + ‖z‖²)`
/// when `|x| <= κ(1 + α‖z‖²)` and `H(x) = sign(x) ακ` beyond.
pub fn huber_row_prox(y: &DMatrix<f64>, z: &DVector<f64>, params: HuberParams) -> DMatrix<f64> {
    let zz = z.norm_squared();
    let HuberParams { kappa, alpha } = params;
    let knee = kappa * (1.0 + alpha * zz);
    let h = (y * z).map(|x| {
        if x.abs() <= knee {
            x / (1.0 / alpha + zz)
        } else {
            x.signum() * alpha * kappa
        }
    });
    y - h * z.transpose()
}

/// Huber loss: `½x²` for `|x| <= κ`, `κ|x| - κ²/2` beyond.
pub fn huber_value(x: f64, kappa: f64) -> f64 {
    if x.abs() <= kappa {
        0.5 * x * x
    } else {
        kappa * x.abs() - 0.5 * kappa * kappa
    }
}

/// Entrywise sum of [`huber_value`].
pub fn huber_total(x: &DMatrix<f64>, kappa: f64) -> f64 {
    x.iter().map(|&v| huber_value(v, kappa)).sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn soft_threshold_examples() {
        assert_abs_diff_eq!(soft_threshold(1.2, 0.5), 0.7, epsilon = 1e-15);
        assert_eq!(soft_threshold(-0.3, 0.5), 0.0);
        assert_eq!(soft_threshold(-2.0, 0.5), -1.5);
        assert_eq!(soft_threshold(0.0, 0.0), 0.0);
    }

    #[test]
    fn logdet_prox_diagonal() {
        let x = DMatrix::from_diagonal(&DVector::from_vec(vec![2.0, -1.0]));
        let b = psd_logdet_prox(&x, 1.0);
        assert_abs_diff_eq!(b[(0, 0)], 1.0 + 2f64.sqrt(), epsilon = 1e-12);
        assert_abs_diff_eq!(b[(1, 1)], (5f64.sqrt() - 1.0) / 2.0, epsilon = 1e-12);
        assert_abs_diff_eq!(b[(0, 1)], 0.0, epsilon = 1e-12);
    }

    #[test]
    fn logdet_prox_of_zero_is_identity() {
        let b = psd_logdet_prox(&DMatrix::zeros(4, 4), 1.0);
        assert_abs_diff_eq!(b, DMatrix::identity(4, 4), epsilon = 1e-12);
    }

    #[test]
    fn l1_row_prox_examples() {
        let y = DMatrix::identity(2, 2);
        let out = l1_row_prox(&y, &DVector::from_vec(vec![2.0, 0.0]));
        assert_abs_diff_eq!(
            out,
            DMatrix::from_row_slice(2, 2, &[0.0, 0.0, 0.0, 1.0]),
            epsilon = 1e-15
        );
        let z = DVector::zeros(2);
        assert_eq!(l1_row_prox(&y, &z), y);
    }

    #[test]
    fn huber_row_prox_scalar_branches() {
        let p = HuberParams::new(1.0, 1.0).unwrap();
        let one = DVector::from_element(1, 1.0);
        let linear = huber_row_prox(&DMatrix::from_element(1, 1, 5.0), &one, p);
        assert_abs_diff_eq!(linear[(0, 0)], 4.0, epsilon = 1e-15);
        let quadratic = huber_row_prox(&DMatrix::from_element(1, 1, 1.5), &one, p);
        assert_abs_diff_eq!(quadratic[(0, 0)], 0.75, epsilon = 1e-15);
        let negative = huber_row_prox(&DMatrix::from_element(1, 1, -5.0), &one, p);
        assert_abs_diff_eq!(negative[(0, 0)], -4.0, epsilon = 1e-15);
    }

    #[test]
    fn huber_values() {
        assert_eq!(huber_value(0.0, 1.0), 0.0);
        assert_eq!(huber_value(1.0, 1.0), 0.5);
        assert_eq!(huber_value(5.0, 2.0), 8.0);
        assert_eq!(huber_value(-5.0, 2.0), 8.0);
        assert_eq!(
            huber_total(&DMatrix::from_row_slice(1, 2, &[1.0, -5.0]), 2.0),
            8.5
        );
    }

    #[test]
    fn huber_params_validated() {
        assert!(HuberParams::new(0.0, 1.0).is_err());
        assert!(HuberParams::new(1.0, -1.0).is_err());
    }
}
