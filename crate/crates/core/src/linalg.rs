//! Small dense helpers shared by the estimators. Matrices here are n×n with
//! n the feature count, so clarity wins over blocking.

use nalgebra::{DMatrix, DVector};

use crate::Real;

/// `tr(a·b)` without forming the product.
pub fn trace_of_product<T: Real>(a: &DMatrix<T>, b: &DMatrix<T>) -> T {
    debug_assert_eq!(a.ncols(), b.nrows());
    debug_assert_eq!(a.nrows(), b.ncols());
    let mut acc = T::zero();
    for i in 0..a.nrows() {
        for j in 0..a.ncols() {
            acc += a[(i, j)] * b[(j, i)];
        }
    }
    acc
}

/// `XᵗX`.
pub fn gram<T: Real>(x: &DMatrix<T>) -> DMatrix<T> {
    x.tr_mul(x)
}

/// `M + shift·I`.
pub fn shifted<T: Real>(m: &DMatrix<T>, shift: T) -> DMatrix<T> {
    let mut out = m.clone();
    for i in 0..out.nrows() {
        out[(i, i)] += shift;
    }
    out
}

/// Inverse of a symmetric positive definite matrix via Cholesky.
pub fn spd_inverse<T: Real>(m: &DMatrix<T>) -> Option<DMatrix<T>> {
    let inv = m.clone().cholesky()?.inverse();
    Some(symmetrize(inv))
}

/// `(M + Mᵗ)/2`; removes rounding asymmetry from products that are symmetric
/// in exact arithmetic.
pub fn symmetrize<T: Real>(m: DMatrix<T>) -> DMatrix<T> {
    let half = T::one() / (T::one() + T::one());
    (&m + m.transpose()) * half
}

pub fn squared_norm<T: Real>(v: &DVector<T>) -> T {
    v.iter().fold(T::zero(), |acc, &x| acc + x * x)
}
