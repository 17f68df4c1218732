//! Integrity metric estimation.
//!
//! The integrity metric of a split at `p` training rows out of `m` is
//!
//! ```text
//! IM(m, p) = E[ ( ‖X_test·b̂ − y_test‖² / (m − p) − σ² )² ]
//! ```
//!
//! over the design `X`, true coefficients `b ~ N(0, c²I)` and noise. Three
//! estimators are provided, each integrating out one more source of noise
//! analytically:
//!
//! * [`Tier::Tier0`] simulates everything and averages the squared gap.
//! * [`Tier::Tier1`] conditions on `X` and evaluates the exact conditional
//!   expectation over `(b, ε)` from seven traces of the realized blocks.
//! * [`Tier::Tier2`] conditions on the training block only and replaces each
//!   test-block trace by its Wishart expectation.
//!
//! With `G = (W + αI)⁻¹`, `W = X_trainᵗX_train` and `V = X_testᵗX_test`, the
//! conditional-expectation matrices are `A = −α·X_test·G` and
//! `B = X_test·G·X_trainᵗ`; every trace needed reduces to n×n products of
//! `G`, `W` and `V`.

use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, Matrix3, Vector3};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::linalg::{gram, shifted, spd_inverse, trace_of_product};
use crate::ridge::{ridge_fit, test_mean_squared_error, ModelParams};
use crate::rng::{streams, RngSeed};
use crate::sampling::{gaussian_rows_with, wishart_with, GaussianSample, SpdMatrix};
use crate::stats::SampleStats;
use crate::{is_nonnegative, is_positive, lit, to_f64, Real};

pub const MIN_IM_TRIALS: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, PartialOrd, Ord)]
pub enum Tier {
    Tier0,
    Tier1,
    #[default]
    Tier2,
}

impl Tier {
    pub const ALL: [Tier; 3] = [Tier::Tier0, Tier::Tier1, Tier::Tier2];

    fn stream(&self) -> u64 {
        match self {
            Tier::Tier0 => streams::TIER0,
            Tier::Tier1 => streams::TIER1,
            Tier::Tier2 => streams::TIER2,
        }
    }
}

impl fmt::Display for Tier {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Tier::Tier0 => "Tier0",
            Tier::Tier1 => "Tier1",
            Tier::Tier2 => "Tier2",
        })
    }
}

impl FromStr for Tier {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "tier0" | "0" => Ok(Tier::Tier0),
            "tier1" | "1" => Ok(Tier::Tier1),
            "tier2" | "2" => Ok(Tier::Tier2),
            other => Err(Error::InvalidInput(format!("unknown tier `{other}` (expected Tier0, Tier1 or Tier2)"))),
        }
    }
}

/// The simulated regression problem: `m` rows of `n` Gaussian features with
/// row covariance `covariance`, coefficient scale `c`, noise scale `sigma` and
/// ridge parameter `alpha`.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelSpec<T: Real> {
    pub m: usize,
    pub n: usize,
    pub c: T,
    pub sigma: T,
    pub alpha: T,
    pub covariance: SpdMatrix<T>,
}

impl<T: Real> ModelSpec<T> {
    pub fn new(m: usize, n: usize, c: T, sigma: T, alpha: T, covariance: SpdMatrix<T>) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidDimension("n must be at least 1".into()));
        }
        if covariance.dim() != n {
            return Err(Error::InvalidDimension(format!("covariance is {0}x{0} but n = {n}", covariance.dim())));
        }
        if m < n + 3 {
            return Err(Error::NoValidSplit { m, n });
        }
        if !is_nonnegative(c) {
            return Err(Error::InvalidInput("c must be nonnegative".into()));
        }
        if !is_positive(sigma) {
            return Err(Error::InvalidInput("sigma must be positive".into()));
        }
        if !is_positive(alpha) {
            return Err(Error::InvalidInput("alpha must be positive".into()));
        }
        Ok(Self { m, n, c, sigma, alpha, covariance })
    }

    /// Smallest and largest admissible training sizes, `n + 2` and `m − 1`.
    pub fn split_range(&self) -> (usize, usize) {
        (self.n + 2, self.m - 1)
    }

    pub fn check_split(&self, p: usize) -> Result<()> {
        let (lo, hi) = self.split_range();
        if p < lo || p > hi {
            return Err(Error::InvalidSplit(format!(
                "p = {p} outside [{lo}, {hi}] for m = {}, n = {}",
                self.m, self.n
            )));
        }
        Ok(())
    }

    /// `2σ⁴/(m − p)`: the metric when the fitted model is exact, and a lower
    /// bound for tiers 1 and 2.
    pub fn noise_floor(&self, p: usize) -> T {
        let s2 = self.sigma * self.sigma;
        lit::<T>(2.0) * s2 * s2 / lit((self.m - p) as f64)
    }
}

/// Monte Carlo estimate of the integrity metric at one split.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ImPointEstimate<T> {
    pub p: usize,
    pub m: usize,
    pub mean: T,
    pub stderr: T,
    /// Sample variance of the per-trial values.
    pub variance: T,
    pub trials: usize,
    pub tier: Tier,
}

/// Traces of the realized `A` and `B` for one `(X_train, X_test)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceSummary<T> {
    /// `tr(AᵗA)`
    pub tr_ata: T,
    /// `tr((AᵗA)²)`
    pub tr_ata_sq_of: T,
    /// `tr(AᵗA)²`
    pub tr_ata_sq: T,
    /// `tr(BᵗB)`
    pub tr_btb: T,
    /// `tr((BᵗB)²)`
    pub tr_btb_sq_of: T,
    /// `tr(BᵗB)²`
    pub tr_btb_sq: T,
    /// `tr(BᵗAAᵗB)`
    pub tr_btaatb: T,
}

impl<T: Real> TraceSummary<T> {
    /// Computes the summary from the two Gram matrices. Uses
    /// `AᵗA = α²GVG`, `tr(BᵗB) = tr(V·GWG)`, `tr((BᵗB)²) = tr((V·GWG)²)` and
    /// `tr(BᵗAAᵗB) = α²·tr(V·G² · V·GWG)`.
    pub fn from_grams(train_gram: &DMatrix<T>, test_gram: &DMatrix<T>, alpha: T) -> Self {
        let g = spd_inverse(&shifted(train_gram, alpha)).expect("XᵗX + αI is SPD for alpha > 0");
        let g2 = &g * &g;
        let gwg = &g * train_gram * &g;
        let vm = test_gram * &g2;
        let vn = test_gram * &gwg;
        let a2 = alpha * alpha;
        let tr_ata = a2 * vm.trace();
        let tr_btb = vn.trace();
        Self {
            tr_ata,
            tr_ata_sq_of: a2 * a2 * trace_of_product(&vm, &vm),
            tr_ata_sq: tr_ata * tr_ata,
            tr_btb,
            tr_btb_sq_of: trace_of_product(&vn, &vn),
            tr_btb_sq: tr_btb * tr_btb,
            tr_btaatb: a2 * trace_of_product(&vm, &vn),
        }
    }

    pub fn from_blocks(x_train: &DMatrix<T>, x_test: &DMatrix<T>, alpha: T) -> Self {
        Self::from_grams(&gram(x_train), &gram(x_test), alpha)
    }

    /// Nonnegativity and `tr(M)² ≥ tr(M²)` for `M = AᵗA` and `M = BᵗB`, up to
    /// rounding.
    pub fn is_consistent(&self) -> bool {
        let slack = |v: T| v.abs() * T::default_epsilon() * lit(64.0);
        let nonneg = [self.tr_ata, self.tr_ata_sq_of, self.tr_btb, self.tr_btb_sq_of, self.tr_btaatb]
            .iter()
            .all(|&v| v >= -slack(v));
        nonneg
            && self.tr_ata_sq + slack(self.tr_ata_sq) >= self.tr_ata_sq_of
            && self.tr_btb_sq + slack(self.tr_btb_sq) >= self.tr_btb_sq_of
    }

    pub fn moments(&self) -> TraceMoments<T> {
        TraceMoments {
            ata: self.tr_ata,
            ata_sq: self.tr_ata_sq,
            ata_sq_of: self.tr_ata_sq_of,
            btb: self.tr_btb,
            btb_sq: self.tr_btb_sq,
            btb_sq_of: self.tr_btb_sq_of,
            btaatb: self.tr_btaatb,
            ata_btb: self.tr_ata * self.tr_btb,
        }
    }
}

/// Training-block traces, with `G = (W + αI)⁻¹` and `H = √p·G·X_trainᵗ`
/// (so `HHᵗ = p·GWG`).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainTraceSummary<T> {
    /// `tr(ΣGGᵗ)`
    pub t1: T,
    /// `tr((ΣGGᵗ)²)`
    pub t2: T,
    /// `tr(ΣHHᵗ)`
    pub t3: T,
    /// `tr((ΣHHᵗ)²)`
    pub t4: T,
    /// `tr(ΣGGᵗΣHHᵗ)`
    pub t5: T,
}

impl<T: Real> TrainTraceSummary<T> {
    pub fn from_gram(train_gram: &DMatrix<T>, sigma: &DMatrix<T>, alpha: T, p: usize) -> Self {
        let g = spd_inverse(&shifted(train_gram, alpha)).expect("XᵗX + αI is SPD for alpha > 0");
        let s_gg = sigma * (&g * &g);
        let s_hh = sigma * (&g * train_gram * &g) * lit::<T>(p as f64);
        Self {
            t1: s_gg.trace(),
            t2: trace_of_product(&s_gg, &s_gg),
            t3: s_hh.trace(),
            t4: trace_of_product(&s_hh, &s_hh),
            t5: trace_of_product(&s_gg, &s_hh),
        }
    }

    pub fn is_consistent(&self) -> bool {
        let slack = |v: T| v.abs() * T::default_epsilon() * lit(64.0);
        [self.t1, self.t2, self.t3, self.t4, self.t5].iter().all(|&v| v >= -slack(v))
            && self.t1 * self.t1 + slack(self.t1 * self.t1) >= self.t2
            && self.t3 * self.t3 + slack(self.t3 * self.t3) >= self.t4
    }

    /// Expectations of the test-block traces over `X_test` (`k = m − p` rows
    /// from `N(0, Σ)`), from the first two moments of the Wishart `V`.
    pub fn expected_moments(&self, alpha: T, p: usize, m: usize) -> TraceMoments<T> {
        let k: T = lit((m - p) as f64);
        let pf: T = lit(p as f64);
        let two: T = lit(2.0);
        let kk1 = k * (k + T::one());
        let a2 = alpha * alpha;
        let a4 = a2 * a2;
        let Self { t1, t2, t3, t4, t5 } = *self;
        TraceMoments {
            ata: a2 * k * t1,
            ata_sq: a4 * (k * k * t1 * t1 + two * k * t2),
            ata_sq_of: a4 * (k * t1 * t1 + kk1 * t2),
            btb: k * t3 / pf,
            btb_sq: (k * k * t3 * t3 + two * k * t4) / (pf * pf),
            btb_sq_of: (k * t3 * t3 + kk1 * t4) / (pf * pf),
            btaatb: a2 * (k * t1 * t3 + kk1 * t5) / pf,
            ata_btb: a2 * (k * k * t1 * t3 + two * k * t5) / pf,
        }
    }
}

/// The eight trace quantities the conditional metric is linear in. Either
/// realized values (tier 1) or their expectations over the test block
/// (tier 2); `ata_btb` is `tr(AᵗA)·tr(BᵗB)`, which is not the product of the
/// other two fields once expectations are taken.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceMoments<T> {
    pub ata: T,
    pub ata_sq: T,
    pub ata_sq_of: T,
    pub btb: T,
    pub btb_sq: T,
    pub btb_sq_of: T,
    pub btaatb: T,
    pub ata_btb: T,
}

impl<T: Real> TraceMoments<T> {
    /// `E[(‖u‖²/k − σ²)²]` for `u = Ab + σBε_train − σε_test` given the traces,
    /// with `k` test rows.
    pub fn integrity(&self, k: usize, c: T, sigma: T) -> T {
        let kf: T = lit(k as f64);
        let (two, four): (T, T) = (lit(2.0), lit(4.0));
        let c2 = c * c;
        let c4 = c2 * c2;
        let s2 = sigma * sigma;
        let s4 = s2 * s2;
        let bracket = c4 * self.ata_sq
            + two * c4 * self.ata_sq_of
            + s4 * self.btb_sq
            + two * s4 * self.btb_sq_of
            + two * s4 * kf
            + two * c2 * s2 * self.ata_btb
            + four * c2 * s2 * self.btaatb
            + four * c2 * s2 * self.ata
            + four * s4 * self.btb;
        bracket / (kf * kf)
    }
}

/// One draw of the tier-0 statistic `(MSE_test − σ²)²`.
fn tier0_trial<T: Real>(model: &ModelSpec<T>, p: usize, seed: RngSeed) -> Result<T> {
    let mut rng = seed.rng();
    let x = gaussian_rows_with(&mut rng, model.m, &model.covariance);
    let params = ModelParams::sample_with(&mut rng, model.n, model.m, model.c, model.sigma);
    let y = params.response(&x);
    let k = model.m - p;
    let fit = ridge_fit(&x.rows(0, p).into_owned(), &y.rows(0, p).into_owned(), model.alpha)?;
    let mse = test_mean_squared_error(&x.rows(p, k).into_owned(), &y.rows(p, k).into_owned(), &fit)?;
    let gap = mse - model.sigma * model.sigma;
    Ok(gap * gap)
}

fn check_trials(trials: usize) -> Result<()> {
    if trials < MIN_IM_TRIALS {
        return Err(Error::InvalidInput(format!("need at least {MIN_IM_TRIALS} trials, got {trials}")));
    }
    Ok(())
}

fn estimate<T: Real>(p: usize, m: usize, tier: Tier, values: &[T]) -> ImPointEstimate<T> {
    let s = SampleStats::from_values(values);
    ImPointEstimate { p, m, mean: s.mean, stderr: s.stderr, variance: s.variance, trials: s.count, tier }
}

/// Tier-0 estimate: each trial draws a fresh `X`, `b` and `ε`, fits ridge on
/// the first `p` rows and squares the gap between test MSE and `σ²`.
pub fn im_tier0<T: Real>(model: &ModelSpec<T>, p: usize, trials: usize, seed: RngSeed) -> Result<ImPointEstimate<T>> {
    model.check_split(p)?;
    check_trials(trials)?;
    let base = seed.stream(Tier::Tier0.stream());
    let values =
        (0..trials as u64).into_par_iter().map(|t| tier0_trial(model, p, base.trial(t))).collect::<Result<Vec<T>>>()?;
    Ok(estimate(p, model.m, Tier::Tier0, &values))
}

/// Exact expectation of the tier-0 statistic over `(b, ε)` given the full
/// design `x` (train rows first).
pub fn im_tier1_given_x<T: Real>(x: &GaussianSample<T>, model: &ModelSpec<T>, p: usize) -> Result<T> {
    model.check_split(p)?;
    if x.rows() != model.m || x.cols() != model.n {
        return Err(Error::InvalidDimension(format!(
            "design is {}x{} but the model is {}x{}",
            x.rows(),
            x.cols(),
            model.m,
            model.n
        )));
    }
    let (train, test) = x.split_rows(p);
    Ok(im_tier1_given_grams(&gram(&train), &gram(&test), model, p))
}

/// Tier-1 value from the train and test Gram matrices.
pub fn im_tier1_given_grams<T: Real>(
    train_gram: &DMatrix<T>,
    test_gram: &DMatrix<T>,
    model: &ModelSpec<T>,
    p: usize,
) -> T {
    TraceSummary::from_grams(train_gram, test_gram, model.alpha).moments().integrity(model.m - p, model.c, model.sigma)
}

/// Expectation of the tier-0 statistic over `(b, ε, X_test)` given the
/// training block; `p` is the row count of `x_train`.
pub fn im_tier2_given_train<T: Real>(x_train: &GaussianSample<T>, model: &ModelSpec<T>) -> Result<T> {
    let p = x_train.rows();
    model.check_split(p)?;
    if x_train.cols() != model.n {
        return Err(Error::InvalidDimension(format!(
            "training block has {} columns, model has n = {}",
            x_train.cols(),
            model.n
        )));
    }
    Ok(im_tier2_given_gram(&gram(x_train.matrix()), model, p))
}

/// Tier-2 value from the training Gram matrix.
pub fn im_tier2_given_gram<T: Real>(train_gram: &DMatrix<T>, model: &ModelSpec<T>, p: usize) -> T {
    TrainTraceSummary::from_gram(train_gram, model.covariance.matrix(), model.alpha, p)
        .expected_moments(model.alpha, p, model.m)
        .integrity(model.m - p, model.c, model.sigma)
}

/// Tier-1 estimate over `trials` designs. The Gram matrices of the train and
/// test blocks are independent Wisharts, so they are drawn directly.
pub fn im_tier1<T: Real>(model: &ModelSpec<T>, p: usize, trials: usize, seed: RngSeed) -> Result<ImPointEstimate<T>> {
    model.check_split(p)?;
    check_trials(trials)?;
    let base = seed.stream(Tier::Tier1.stream());
    let values = (0..trials as u64)
        .into_par_iter()
        .map(|t| {
            let mut rng = base.trial(t).rng();
            let w = wishart_with(&mut rng, p, &model.covariance)?;
            let v = wishart_with(&mut rng, model.m - p, &model.covariance)?;
            Ok(im_tier1_given_grams(&w, &v, model, p))
        })
        .collect::<Result<Vec<T>>>()?;
    Ok(estimate(p, model.m, Tier::Tier1, &values))
}

/// Tier-2 estimate over `trials` training Gram matrices.
pub fn im_tier2<T: Real>(model: &ModelSpec<T>, p: usize, trials: usize, seed: RngSeed) -> Result<ImPointEstimate<T>> {
    model.check_split(p)?;
    check_trials(trials)?;
    let base = seed.stream(Tier::Tier2.stream());
    let values = (0..trials as u64)
        .into_par_iter()
        .map(|t| {
            let w = wishart_with(&mut base.trial(t).rng(), p, &model.covariance)?;
            Ok(im_tier2_given_gram(&w, model, p))
        })
        .collect::<Result<Vec<T>>>()?;
    Ok(estimate(p, model.m, Tier::Tier2, &values))
}

pub fn im_point<T: Real>(
    model: &ModelSpec<T>,
    p: usize,
    tier: Tier,
    trials: usize,
    seed: RngSeed,
) -> Result<ImPointEstimate<T>> {
    match tier {
        Tier::Tier0 => im_tier0(model, p, trials, seed),
        Tier::Tier1 => im_tier1(model, p, trials, seed),
        Tier::Tier2 => im_tier2(model, p, trials, seed),
    }
}

/// Metric estimates over a grid of training sizes.
#[derive(Debug, Clone, PartialEq)]
pub struct SplitCurve<T> {
    pub m: usize,
    pub n: usize,
    pub c: T,
    pub sigma: T,
    pub alpha: T,
    pub tier: Tier,
    pub trials: usize,
    pub points: Vec<ImPointEstimate<T>>,
}

/// Grid `p_min, p_min + step, …` up to `p_max`.
pub fn p_grid(p_min: usize, p_max: usize, step: usize) -> Vec<usize> {
    if step == 0 || p_min > p_max {
        return Vec::new();
    }
    (p_min..=p_max).step_by(step).collect()
}

/// Estimates the metric at every grid point. Each point draws from its own
/// stream derived from `seed` and `p`, so the curve is a pure function of its
/// arguments and points are mutually independent.
pub fn im_curve<T: Real>(
    model: &ModelSpec<T>,
    p_min: usize,
    p_max: usize,
    step: usize,
    tier: Tier,
    trials: usize,
    seed: RngSeed,
) -> Result<SplitCurve<T>> {
    let (lo, hi) = model.split_range();
    if step == 0 || p_min >= p_max || p_min < lo || p_max > hi {
        return Err(Error::InvalidRange(format!(
            "grid [{p_min}, {p_max}] step {step} must satisfy {lo} <= p_min < p_max <= {hi} and step >= 1"
        )));
    }
    check_trials(trials)?;
    let base = seed.stream(streams::CURVE);
    let points = p_grid(p_min, p_max, step)
        .into_par_iter()
        .map(|p| im_point(model, p, tier, trials, base.stream(p as u64)))
        .collect::<Result<Vec<_>>>()?;
    Ok(SplitCurve { m: model.m, n: model.n, c: model.c, sigma: model.sigma, alpha: model.alpha, tier, trials, points })
}

/// Default smoothing half-width for a curve of `points` grid points.
pub fn default_smoothing_window(points: usize) -> usize {
    (points / 20).max(2)
}

/// Raw and smoothed minimizers of a curve.
#[derive(Debug, Clone, PartialEq)]
pub struct EmpiricalArgmin {
    pub raw: usize,
    pub smoothed: usize,
    /// Smoothed curve values at each grid point.
    pub smoothed_means: Vec<f64>,
}

/// Index of the smallest value, ties to the lower index.
fn argmin_index(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate() {
        if v < values[best] {
            best = i;
        }
    }
    best
}

/// Local quadratic smoothing: each value is replaced by the intercept of a
/// least-squares parabola through the `2·window + 1` nearest grid points
/// (the window slides inward at the ends of the grid).
pub fn smooth_local_quadratic(ps: &[usize], values: &[f64], window: usize) -> Vec<f64> {
    let len = values.len();
    if window == 0 || len < 3 {
        return values.to_vec();
    }
    let width = (2 * window + 1).min(len);
    (0..len)
        .map(|i| {
            let lo = i.saturating_sub(window).min(len - width);
            let idx = lo..lo + width;
            let scale = ((ps[len - 1] - ps[0]) as f64 / (len - 1) as f64).max(1.0);
            let mut normal = Matrix3::<f64>::zeros();
            let mut rhs = Vector3::<f64>::zeros();
            for j in idx {
                let x = (ps[j] as f64 - ps[i] as f64) / scale;
                let basis = Vector3::new(1.0, x, x * x);
                normal += basis * basis.transpose();
                rhs += basis * values[j];
            }
            match normal.cholesky() {
                Some(ch) => ch.solve(&rhs)[0],
                None => values[i],
            }
        })
        .collect()
}

/// Minimizer of the curve, both raw (`window = 0` semantics) and after
/// local quadratic smoothing with half-width `window`.
///
/// A strictly positive curve is smoothed in log space: metric curves span
/// several decades between the walls at small `p` and at `p → m`, and a
/// parabola fitted to the raw values there overshoots below the true minimum.
/// The logarithm is monotone, so the argmin is unaffected.
pub fn empirical_argmin<T: Real>(curve: &SplitCurve<T>, window: usize) -> Result<EmpiricalArgmin> {
    if curve.points.is_empty() {
        return Err(Error::InvalidRange("curve has no points".into()));
    }
    let ps: Vec<usize> = curve.points.iter().map(|pt| pt.p).collect();
    let means: Vec<f64> = curve.points.iter().map(|pt| to_f64(pt.mean)).collect();
    let smoothed_means = if means.iter().all(|&v| v > 0.0) {
        let logs: Vec<f64> = means.iter().map(|v| v.ln()).collect();
        smooth_local_quadratic(&ps, &logs, window).into_iter().map(f64::exp).collect()
    } else {
        smooth_local_quadratic(&ps, &means, window)
    };
    Ok(EmpiricalArgmin { raw: ps[argmin_index(&means)], smoothed: ps[argmin_index(&smoothed_means)], smoothed_means })
}
