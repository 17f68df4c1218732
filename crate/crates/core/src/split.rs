//! Optimal training-set size: the two-term asymptotic and the root of the
//! dominant polynomial it is extracted from.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::{lit, to_f64, Real};

/// Absolute tolerance of the bisection in [`leading_poly_root`].
pub const ROOT_TOLERANCE: f64 = 1e-6;

const MAX_BISECTIONS: usize = 400;

/// Two-term asymptotic optimal training size
/// `(n(2+n))^{1/3}·m^{2/3} − 2n^{2/3}(1+n)/(3(2+n)^{1/3})·m^{1/3}`.
///
/// Unclamped: small `m` can give values below `n + 2` or even negative.
pub fn asymptotic_split<T: Real>(m: usize, n: usize) -> T {
    let (m, n): (T, T) = (lit(m as f64), lit(n as f64));
    let two: T = lit(2.0);
    let three: T = lit(3.0);
    let m13 = m.cbrt();
    let leading = (n * (two + n)).cbrt() * m13 * m13;
    let n13 = n.cbrt();
    let second = two * n13 * n13 * (T::one() + n) / (three * (two + n).cbrt()) * m13;
    leading - second
}

/// The dominant terms of the derivative of the integrity metric in `p`, with
/// the common `σ⁴` factor removed:
///
/// `P(p) = 4m²np² + 2m²n²p² − 4mnp³ − 4mn²p³ − 4np⁴ + 2n²p⁴ − 2p⁵`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LeadingPolynomial<T> {
    pub m: T,
    pub n: T,
}

impl<T: Real> LeadingPolynomial<T> {
    pub fn new(m: usize, n: usize) -> Self {
        Self { m: lit(m as f64), n: lit(n as f64) }
    }

    pub fn eval(&self, p: T) -> T {
        p * p * self.reduced(p)
    }

    /// `P(p)/p²`, a cubic with the same sign as `P` for `p > 0`.
    pub fn reduced(&self, p: T) -> T {
        let (m, n) = (self.m, self.n);
        let two: T = lit(2.0);
        let four: T = lit(4.0);
        two * m * m * n * (two + n) - four * m * n * (T::one() + n) * p + (two * n * n - four * n) * p * p
            - two * p * p * p
    }
}

/// Root of [`LeadingPolynomial`] in `[1, m]` by bisection to
/// [`ROOT_TOLERANCE`] (or until the bracket stops shrinking in `T`).
pub fn leading_poly_root<T: Real>(m: usize, n: usize) -> Result<T> {
    if n == 0 || m <= n {
        return Err(Error::InvalidInput(format!("need m > n >= 1, got m = {m}, n = {n}")));
    }
    let poly = LeadingPolynomial::<T>::new(m, n);
    let (mut lo, mut hi): (T, T) = (T::one(), lit(m as f64));
    let (f_lo, f_hi) = (poly.reduced(lo), poly.reduced(hi));
    if !(f_lo > T::zero() && f_hi < T::zero()) {
        return Err(Error::Internal(format!(
            "leading polynomial has no sign change on [1, {m}] (n = {n}): P(1)/1 = {}, P(m)/m² = {}",
            to_f64(f_lo),
            to_f64(f_hi)
        )));
    }
    let tol: T = lit(ROOT_TOLERANCE);
    let half: T = lit(0.5);
    for _ in 0..MAX_BISECTIONS {
        if hi - lo <= tol {
            break;
        }
        let mid = lo + (hi - lo) * half;
        if mid <= lo || mid >= hi {
            break;
        }
        if poly.reduced(mid) > T::zero() {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(lo + (hi - lo) * half)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SplitSource {
    #[default]
    Formula,
    Root,
}

impl fmt::Display for SplitSource {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SplitSource::Formula => "formula",
            SplitSource::Root => "root",
        })
    }
}

impl FromStr for SplitSource {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "formula" => Ok(SplitSource::Formula),
            "root" => Ok(SplitSource::Root),
            other => Err(Error::InvalidInput(format!("unknown split source `{other}` (expected formula or root)"))),
        }
    }
}

/// Rounds half-up to the nearest integer and clamps into `[n + 2, m − 1]`.
pub fn clamp_split(value: f64, m: usize, n: usize) -> Result<usize> {
    if m < n + 3 {
        return Err(Error::NoValidSplit { m, n });
    }
    let (lo, hi) = ((n + 2) as f64, (m - 1) as f64);
    let rounded = (value + 0.5).floor();
    let clamped = if rounded.is_nan() { lo } else { rounded.clamp(lo, hi) };
    Ok(clamped as usize)
}

pub fn recommend_integer_split(m: usize, n: usize, source: SplitSource) -> Result<usize> {
    if m < n + 3 {
        return Err(Error::NoValidSplit { m, n });
    }
    let value = match source {
        SplitSource::Formula => asymptotic_split::<f64>(m, n),
        SplitSource::Root => leading_poly_root::<f64>(m, n)?,
    };
    clamp_split(value, m, n)
}

/// Formula, root and (optionally) empirical optimal splits side by side.
#[derive(Debug, Clone, PartialEq)]
pub struct SplitRecommendation<T> {
    pub m: usize,
    pub n: usize,
    pub p_formula: T,
    pub p_root: Option<T>,
    /// `(raw, smoothed)` argmin of a simulated integrity curve.
    pub p_empirical: Option<(usize, usize)>,
    /// Rounded, clamped value from the chosen source; always in `[n+2, m−1]`.
    pub p_final: usize,
}

impl<T: Real> SplitRecommendation<T> {
    pub fn new(m: usize, n: usize, source: SplitSource) -> Result<Self> {
        if m < n + 3 {
            return Err(Error::NoValidSplit { m, n });
        }
        let p_formula = asymptotic_split::<T>(m, n);
        let p_root = leading_poly_root::<T>(m, n).ok();
        let chosen = match source {
            SplitSource::Formula => p_formula,
            SplitSource::Root => p_root.ok_or_else(|| Error::Internal("root unavailable".into()))?,
        };
        Ok(Self { m, n, p_formula, p_root, p_empirical: None, p_final: clamp_split(to_f64(chosen), m, n)? })
    }

    pub fn with_empirical(mut self, raw: usize, smoothed: usize) -> Self {
        self.p_empirical = Some((raw, smoothed));
        self
    }
}
