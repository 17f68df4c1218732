//! Ridge estimation and held-out error.

use nalgebra::{DMatrix, DVector};
use rand::Rng;

use crate::error::{Error, Result};
use crate::sampling::normal_vector_with;
use crate::{is_nonnegative, lit, Real};

#[derive(Debug, Clone, PartialEq)]
pub struct RidgeFit<T: Real> {
    /// The estimate `b̂ = (XᵗX + αI)⁻¹Xᵗy`.
    pub coefficients: DVector<T>,
    pub alpha: T,
    pub train_rows: usize,
}

impl<T: Real> RidgeFit<T> {
    pub fn predict(&self, x: &DMatrix<T>) -> DVector<T> {
        x * &self.coefficients
    }
}

/// Solves `(XᵗX + αI)·b̂ = Xᵗy` through a Cholesky factorization of the n×n
/// Gram matrix. At `alpha = 0` the Gram matrix must be numerically
/// nonsingular.
pub fn ridge_fit<T: Real>(x_train: &DMatrix<T>, y_train: &DVector<T>, alpha: T) -> Result<RidgeFit<T>> {
    let (rows, n) = x_train.shape();
    if rows == 0 || n == 0 {
        return Err(Error::InvalidDimension("training design must be non-empty".into()));
    }
    if y_train.len() != rows {
        return Err(Error::InvalidDimension(format!("design has {rows} rows but response has {}", y_train.len())));
    }
    if !is_nonnegative(alpha) {
        return Err(Error::InvalidInput("alpha must be nonnegative".into()));
    }
    let mut system = x_train.tr_mul(x_train);
    for i in 0..n {
        system[(i, i)] += alpha;
    }
    let chol =
        system.cholesky().ok_or(if alpha == T::zero() { Error::SingularDesign } else { Error::NotPositiveDefinite })?;
    if alpha == T::zero() {
        // diag(L)² spans the pivots; a tiny ratio means XᵗX is singular to
        // working precision.
        let diag = chol.l_dirty().diagonal();
        let (lo, hi) = (diag.min(), diag.max());
        let threshold = T::default_epsilon() * lit(n as f64);
        if hi <= T::zero() || (lo * lo) / (hi * hi) < threshold {
            return Err(Error::SingularDesign);
        }
    }
    let coefficients = chol.solve(&x_train.tr_mul(y_train));
    Ok(RidgeFit { coefficients, alpha, train_rows: rows })
}

/// `‖X_test·b̂ − y_test‖² / rows(X_test)`.
pub fn test_mean_squared_error<T: Real>(x_test: &DMatrix<T>, y_test: &DVector<T>, fit: &RidgeFit<T>) -> Result<T> {
    let rows = x_test.nrows();
    if rows == 0 {
        return Err(Error::InvalidSplit("test block is empty".into()));
    }
    if y_test.len() != rows || x_test.ncols() != fit.coefficients.len() {
        return Err(Error::InvalidDimension(format!(
            "test design {}x{} incompatible with response length {} and {} coefficients",
            rows,
            x_test.ncols(),
            y_test.len(),
            fit.coefficients.len()
        )));
    }
    let resid = fit.predict(x_test) - y_test;
    Ok(resid.norm_squared() / lit(rows as f64))
}

/// True coefficients `b ~ N(0, c²I)` and unit noise `ε ~ N(0, I)` for one
/// simulated data set; the response is `y = Xb + σε`.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams<T: Real> {
    pub b: DVector<T>,
    pub c: T,
    pub sigma: T,
    pub epsilon: DVector<T>,
}

impl<T: Real> ModelParams<T> {
    /// Draws `b` (length `n`) then `ε` (length `m`) from `rng`.
    pub fn sample_with<R: Rng + ?Sized>(rng: &mut R, n: usize, m: usize, c: T, sigma: T) -> Self {
        let b = normal_vector_with(rng, n, c);
        let epsilon = normal_vector_with(rng, m, T::one());
        Self { b, c, sigma, epsilon }
    }

    pub fn response(&self, x: &DMatrix<T>) -> DVector<T> {
        x * &self.b + &self.epsilon * self.sigma
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::RngSeed;
    use crate::sampling::standard_normal_matrix;
    use approx::assert_relative_eq;

    /// Normal equations solved by the explicit 3×3 adjugate inverse.
    fn explicit_inverse_oracle(x: &DMatrix<f64>, y: &DVector<f64>, alpha: f64) -> [f64; 3] {
        let mut a = [[0.0; 3]; 3];
        let mut r = [0.0; 3];
        for row in 0..x.nrows() {
            for i in 0..3 {
                r[i] += x[(row, i)] * y[row];
                for j in 0..3 {
                    a[i][j] += x[(row, i)] * x[(row, j)];
                }
            }
        }
        for (i, ai) in a.iter_mut().enumerate() {
            ai[i] += alpha;
        }
        let det = a[0][0] * (a[1][1] * a[2][2] - a[1][2] * a[2][1]) - a[0][1] * (a[1][0] * a[2][2] - a[1][2] * a[2][0])
            + a[0][2] * (a[1][0] * a[2][1] - a[1][1] * a[2][0]);
        // Adjugate with cyclic indices; signs come out of the index rotation.
        let mut inv = [[0.0; 3]; 3];
        for (i, row) in inv.iter_mut().enumerate() {
            for (j, v) in row.iter_mut().enumerate() {
                let (j1, j2, i1, i2) = ((j + 1) % 3, (j + 2) % 3, (i + 1) % 3, (i + 2) % 3);
                *v = (a[j1][i1] * a[j2][i2] - a[j1][i2] * a[j2][i1]) / det;
            }
        }
        let mut out = [0.0; 3];
        for i in 0..3 {
            for j in 0..3 {
                out[i] += inv[i][j] * r[j];
            }
        }
        out
    }

    #[test]
    fn identity_design_halves_response() {
        let x = DMatrix::<f64>::identity(2, 2);
        let y = DVector::from_vec(vec![2.0, 4.0]);
        let fit = ridge_fit(&x, &y, 1.0).unwrap();
        assert_relative_eq!(fit.coefficients[0], 1.0, epsilon = 1e-15);
        assert_relative_eq!(fit.coefficients[1], 2.0, epsilon = 1e-15);
        assert_eq!(fit.train_rows, 2);
    }

    #[test]
    fn unregularized_square_design_interpolates() {
        let x = DMatrix::from_row_slice(3, 3, &[2.0, 1.0, 0.0, 1.0, 3.0, 1.0, 0.0, 1.0, 4.0]);
        let y = DVector::from_vec(vec![1.0, -2.0, 0.5]);
        let fit = ridge_fit(&x, &y, 0.0).unwrap();
        let direct = x.clone().lu().solve(&y).unwrap();
        assert!((&fit.coefficients - &direct).norm() / direct.norm() < 1e-10);
    }

    #[test]
    fn matches_explicit_inverse_oracle() {
        let mut rng = RngSeed::new(5).rng();
        let x: DMatrix<f64> = standard_normal_matrix(&mut rng, 50, 3);
        let y = normal_vector_with(&mut rng, 50, 1.0);
        let fit = ridge_fit(&x, &y, 2.0).unwrap();
        let oracle = DVector::from_row_slice(&explicit_inverse_oracle(&x, &y, 2.0));
        assert!((&fit.coefficients - &oracle).norm() / oracle.norm() < 1e-10);
    }

    #[test]
    fn normal_equation_residual_is_small() {
        let mut rng = RngSeed::new(6).rng();
        let x: DMatrix<f64> = standard_normal_matrix(&mut rng, 40, 4);
        let y = normal_vector_with(&mut rng, 40, 1.0);
        let alpha = 0.7;
        let fit = ridge_fit(&x, &y, alpha).unwrap();
        let lhs = (x.tr_mul(&x) + DMatrix::identity(4, 4) * alpha) * &fit.coefficients;
        let rhs = x.tr_mul(&y);
        assert!((lhs - &rhs).norm() / rhs.norm() <= 1e-10);
    }

    #[test]
    fn singular_design_without_ridge_is_rejected() {
        let x = DMatrix::from_row_slice(3, 2, &[1.0, 2.0, 2.0, 4.0, 3.0, 6.0]);
        let y = DVector::from_vec(vec![1.0, 2.0, 3.0]);
        assert_eq!(ridge_fit(&x, &y, 0.0), Err(Error::SingularDesign));
        assert!(ridge_fit(&x, &y, 0.1).is_ok());
    }

    #[test]
    fn negative_alpha_rejected() {
        let x = DMatrix::<f64>::identity(2, 2);
        let y = DVector::from_vec(vec![1.0, 1.0]);
        assert!(matches!(ridge_fit(&x, &y, -1.0), Err(Error::InvalidInput(_))));
    }

    #[test]
    fn f32_fit() {
        let x = DMatrix::<f32>::identity(2, 2);
        let y = DVector::from_vec(vec![2.0f32, 4.0]);
        let fit = ridge_fit(&x, &y, 1.0).unwrap();
        assert!((fit.coefficients[1] - 2.0).abs() < 1e-6);
    }

    #[test]
    fn mse_zero_on_perfect_fit() {
        let fit = RidgeFit { coefficients: DVector::from_vec(vec![1.0, -1.0]), alpha: 1.0, train_rows: 3 };
        let x = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 3.0, 4.0]);
        let y = fit.predict(&x);
        assert_eq!(test_mean_squared_error(&x, &y, &fit).unwrap(), 0.0);
    }

    #[test]
    fn mse_of_zero_model() {
        let fit = RidgeFit { coefficients: DVector::zeros(2), alpha: 1.0, train_rows: 3 };
        let x = DMatrix::from_row_slice(3, 2, &[1.0, 2.0, 3.0, 4.0, 5.0, 6.0]);
        let y = DVector::from_vec(vec![1.0, 2.0, 2.0]);
        assert_relative_eq!(test_mean_squared_error(&x, &y, &fit).unwrap(), 9.0 / 3.0);
    }

    #[test]
    fn mse_matches_elementwise_loop() {
        let mut rng = RngSeed::new(10).rng();
        let x: DMatrix<f64> = standard_normal_matrix(&mut rng, 17, 4);
        let y = normal_vector_with(&mut rng, 17, 2.0);
        let fit = RidgeFit { coefficients: normal_vector_with(&mut rng, 4, 1.0), alpha: 1.0, train_rows: 5 };
        let mut acc = 0.0;
        for i in 0..17 {
            let mut pred = 0.0;
            for j in 0..4 {
                pred += x[(i, j)] * fit.coefficients[j];
            }
            acc += (pred - y[i]) * (pred - y[i]);
        }
        let oracle = acc / 17.0;
        assert_relative_eq!(test_mean_squared_error(&x, &y, &fit).unwrap(), oracle, max_relative = 1e-12);
    }

    #[test]
    fn empty_test_block_rejected() {
        let fit = RidgeFit { coefficients: DVector::zeros(2), alpha: 1.0, train_rows: 3 };
        let x = DMatrix::<f64>::zeros(0, 2);
        let y = DVector::<f64>::zeros(0);
        assert!(matches!(test_mean_squared_error(&x, &y, &fit), Err(Error::InvalidSplit(_))));
    }

    #[test]
    fn response_reproduces_model() {
        let mut rng = RngSeed::new(1).rng();
        let x: DMatrix<f64> = standard_normal_matrix(&mut rng, 6, 2);
        let params = ModelParams::sample_with(&mut rng, 2, 6, 0.5, 0.1);
        let y = params.response(&x);
        for i in 0..6 {
            let manual = x[(i, 0)] * params.b[0] + x[(i, 1)] * params.b[1] + 0.1 * params.epsilon[i];
            assert_eq!(y[i], manual);
        }
    }
}
