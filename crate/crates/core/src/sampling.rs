//! Gaussian designs, SPD covariances and Wishart Gram matrices.
//!
//! Every random draw in the crate goes through this module. Public samplers
//! take an [`RngSeed`]; the `*_with` variants take a generator that the caller
//! already derived from one, so a single trial can draw several objects from
//! one stream in a fixed order.

use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::{ChiSquared, Distribution, StandardNormal, Uniform};

use crate::error::{Error, Result};
use crate::rng::RngSeed;
use crate::{lit, Real};

/// Symmetry tolerance applied entrywise by [`SpdMatrix::new`].
pub const SYMMETRY_TOLERANCE: f64 = 1e-12;

/// Eigenvalue range of the `random` covariance scheme.
pub const RANDOM_EIGEN_RANGE: (f64, f64) = (0.5, 2.0);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum CovarianceScheme {
    Identity,
    #[default]
    Random,
}

impl CovarianceScheme {
    pub fn as_str(&self) -> &'static str {
        match self {
            CovarianceScheme::Identity => "identity",
            CovarianceScheme::Random => "random",
        }
    }
}

impl FromStr for CovarianceScheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "identity" => Ok(CovarianceScheme::Identity),
            "random" => Ok(CovarianceScheme::Random),
            other => {
                Err(Error::InvalidInput(format!("unknown covariance scheme `{other}` (expected identity or random)")))
            }
        }
    }
}

/// A symmetric positive definite matrix together with its lower Cholesky
/// factor.
#[derive(Debug, Clone, PartialEq)]
pub struct SpdMatrix<T: Real> {
    entries: DMatrix<T>,
    lower: DMatrix<T>,
}

impl<T: Real> SpdMatrix<T> {
    pub fn new(entries: DMatrix<T>) -> Result<Self> {
        let n = entries.nrows();
        if n == 0 || entries.ncols() != n {
            return Err(Error::InvalidDimension(format!(
                "covariance must be square and non-empty, got {}x{}",
                entries.nrows(),
                entries.ncols()
            )));
        }
        let tol: T = lit(SYMMETRY_TOLERANCE);
        for i in 0..n {
            for j in 0..i {
                if (entries[(i, j)] - entries[(j, i)]).abs() > tol {
                    return Err(Error::NotPositiveDefinite);
                }
            }
        }
        let lower = entries.clone().cholesky().ok_or(Error::NotPositiveDefinite)?.unpack();
        Ok(Self { entries, lower })
    }

    pub fn identity(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidDimension("n must be at least 1".into()));
        }
        Self::new(DMatrix::identity(n, n))
    }

    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<T> {
        &self.entries
    }

    /// Lower triangular `L` with `LLᵗ = Σ`.
    pub fn cholesky_lower(&self) -> &DMatrix<T> {
        &self.lower
    }

    pub fn trace(&self) -> T {
        self.entries.trace()
    }

    pub fn into_matrix(self) -> DMatrix<T> {
        self.entries
    }
}

/// Rows are independent mean-zero Gaussian vectors sharing one covariance.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianSample<T: Real> {
    entries: DMatrix<T>,
}

impl<T: Real> GaussianSample<T> {
    pub fn from_matrix(entries: DMatrix<T>) -> Result<Self> {
        if entries.nrows() == 0 || entries.ncols() == 0 {
            return Err(Error::InvalidDimension("sample must have at least one row and column".into()));
        }
        Ok(Self { entries })
    }

    pub fn rows(&self) -> usize {
        self.entries.nrows()
    }

    pub fn cols(&self) -> usize {
        self.entries.ncols()
    }

    pub fn matrix(&self) -> &DMatrix<T> {
        &self.entries
    }

    pub fn into_matrix(self) -> DMatrix<T> {
        self.entries
    }

    /// Splits into the first `p` rows (train) and the rest (test).
    pub fn split_rows(&self, p: usize) -> (DMatrix<T>, DMatrix<T>) {
        let rows = self.rows();
        assert!(p <= rows, "split point {p} beyond {rows} rows");
        (self.entries.rows(0, p).into_owned(), self.entries.rows(p, rows - p).into_owned())
    }
}

pub fn standard_normal<T: Real, R: Rng + ?Sized>(rng: &mut R) -> T {
    let z: f64 = rng.sample(StandardNormal);
    lit(z)
}

pub fn standard_normal_matrix<T: Real, R: Rng + ?Sized>(rng: &mut R, rows: usize, cols: usize) -> DMatrix<T> {
    // Row-major fill.
    let mut m = DMatrix::zeros(rows, cols);
    for i in 0..rows {
        for j in 0..cols {
            m[(i, j)] = standard_normal(rng);
        }
    }
    m
}

/// A length-`len` vector of independent `N(0, scale²)` draws.
pub fn normal_vector_with<T: Real, R: Rng + ?Sized>(rng: &mut R, len: usize, scale: T) -> DVector<T> {
    DVector::from_iterator(len, (0..len).map(|_| standard_normal::<T, _>(rng) * scale))
}

/// `Z·Lᵗ` with `Z` standard normal, i.e. rows drawn from `N(0, Σ)`.
pub fn gaussian_rows_with<T: Real, R: Rng + ?Sized>(rng: &mut R, rows: usize, sigma: &SpdMatrix<T>) -> DMatrix<T> {
    let z: DMatrix<T> = standard_normal_matrix(rng, rows, sigma.dim());
    z * sigma.cholesky_lower().transpose()
}

/// Draws `W ~ Wishart(dof, Σ)`, equal in distribution to `XᵗX` for a `dof×n`
/// Gaussian `X` with row covariance `Σ`.
///
/// For `dof ≥ n` this uses the Bartlett decomposition `W = (LA)(LA)ᵗ`, with `A`
/// lower triangular, `A_ii² ~ χ²(dof − i)` and standard normal entries below
/// the diagonal, at `O(n³)` cost independent of `dof`. Singular Wisharts
/// (`dof < n`) are formed from explicit rows.
pub fn wishart_with<T: Real, R: Rng + ?Sized>(rng: &mut R, dof: usize, sigma: &SpdMatrix<T>) -> Result<DMatrix<T>> {
    let n = sigma.dim();
    if dof == 0 {
        return Err(Error::InvalidDimension("Wishart degrees of freedom must be at least 1".into()));
    }
    if dof < n {
        let x = gaussian_rows_with(rng, dof, sigma);
        return Ok(x.tr_mul(&x));
    }
    let mut a = DMatrix::<T>::zeros(n, n);
    for i in 0..n {
        let chi = ChiSquared::new((dof - i) as f64).map_err(|e| Error::Internal(e.to_string()))?;
        let d: f64 = chi.sample(rng);
        a[(i, i)] = lit(d.sqrt());
        for j in 0..i {
            a[(i, j)] = standard_normal(rng);
        }
    }
    let la = sigma.cholesky_lower() * a;
    Ok(&la * la.transpose())
}

/// Samples the row covariance Σ.
///
/// `Identity` returns `I`. `Random` returns `QΛQᵗ`, with `Q` the sign-fixed
/// orthogonal factor of a QR decomposition of a standard Gaussian matrix and
/// `Λ` log-uniform on [0.5, 2], so the condition number is at most 4.
pub fn sample_spd_covariance<T: Real>(n: usize, scheme: CovarianceScheme, seed: RngSeed) -> Result<SpdMatrix<T>> {
    if n == 0 {
        return Err(Error::InvalidDimension("n must be at least 1".into()));
    }
    match scheme {
        CovarianceScheme::Identity => SpdMatrix::identity(n),
        CovarianceScheme::Random => {
            let mut rng = seed.rng();
            let g: DMatrix<T> = standard_normal_matrix(&mut rng, n, n);
            let qr = g.qr();
            let r = qr.r();
            let mut q = qr.q();
            for j in 0..n {
                if r[(j, j)] < T::zero() {
                    q.column_mut(j).neg_mut();
                }
            }
            let (lo, hi) = RANDOM_EIGEN_RANGE;
            let log_range = Uniform::new_inclusive(lo.ln(), hi.ln()).map_err(|e| Error::Internal(e.to_string()))?;
            let eig = DVector::from_iterator(n, (0..n).map(|_| lit::<T>(log_range.sample(&mut rng).exp())));
            let sigma = &q * DMatrix::from_diagonal(&eig) * q.transpose();
            SpdMatrix::new(crate::linalg::symmetrize(sigma))
        }
    }
}

/// `rows` independent draws from `N(0, Σ)`, deterministic in `seed`.
pub fn sample_gaussian_rows<T: Real>(rows: usize, sigma: &SpdMatrix<T>, seed: RngSeed) -> Result<GaussianSample<T>> {
    if rows == 0 {
        return Err(Error::InvalidDimension("rows must be at least 1".into()));
    }
    GaussianSample::from_matrix(gaussian_rows_with(&mut seed.rng(), rows, sigma))
}

/// A Wishart(`dof`, Σ) Gram matrix, deterministic in `seed`.
pub fn sample_wishart<T: Real>(dof: usize, sigma: &SpdMatrix<T>, seed: RngSeed) -> Result<DMatrix<T>> {
    wishart_with(&mut seed.rng(), dof, sigma)
}
