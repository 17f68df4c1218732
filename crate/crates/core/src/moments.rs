//! Monte Carlo checks of Wishart trace moments and the deterministic trace
//! inequalities the split asymptotic depends on.
//!
//! Each [`MomentKind`] is one trace functional of `W = XᵗX`, `Σ` and `α`, with
//! `X` a `p×n` Gaussian design whose rows have covariance `Σ`. The analytic
//! side either gives an exact value, a leading-order value with a known
//! neglected order, or only a decay rate in `p`.

use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use rand::Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::linalg::{gram, shifted, spd_inverse, trace_of_product};
use crate::rng::{streams, RngSeed};
use crate::sampling::{gaussian_rows_with, sample_spd_covariance, CovarianceScheme, GaussianSample, SpdMatrix};
use crate::stats::{loglog_slope, SampleStats};
use crate::{is_positive, lit, to_f64, Real};

pub const MIN_MOMENT_TRIALS: usize = 100;

/// Below, `W = XᵗX` and `R = (W + αI)⁻¹`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum MomentKind {
    /// `tr(ΣW⁻¹)`
    InverseTrace,
    /// `tr(ΣW⁻¹)²`
    InverseTraceSquared,
    /// `tr((ΣW⁻¹)²)`
    InverseSquareTrace,
    /// `tr(ΣR²)`
    RidgeTrace,
    /// `tr((ΣR²)²)`
    RidgeSquareTrace,
    /// `tr(ΣR²)²`
    RidgeTraceSquared,
    /// `p·tr(ΣWR²)`
    ShrinkTrace,
    /// `p²·tr((ΣWR²)²)`
    ShrinkSquareTrace,
    /// `p²·tr(ΣWR²)²`
    ShrinkTraceSquared,
    /// `p·tr(ΣR²·ΣWR²)`
    CrossTrace,
    /// `p·tr(ΣR²)·tr(ΣWR²)`
    CrossTraceProduct,
}

impl MomentKind {
    pub const ALL: [MomentKind; 11] = [
        MomentKind::InverseTrace,
        MomentKind::InverseTraceSquared,
        MomentKind::InverseSquareTrace,
        MomentKind::RidgeTrace,
        MomentKind::RidgeSquareTrace,
        MomentKind::RidgeTraceSquared,
        MomentKind::ShrinkTrace,
        MomentKind::ShrinkSquareTrace,
        MomentKind::ShrinkTraceSquared,
        MomentKind::CrossTrace,
        MomentKind::CrossTraceProduct,
    ];

    /// Report tag used in CSV output and on the command line.
    pub fn tag(&self) -> &'static str {
        match self {
            MomentKind::InverseTrace => "P1_1",
            MomentKind::InverseTraceSquared => "P1_2",
            MomentKind::InverseSquareTrace => "P1_3",
            MomentKind::RidgeTrace => "L5_5",
            MomentKind::RidgeSquareTrace => "L5_6",
            MomentKind::RidgeTraceSquared => "L5_7",
            MomentKind::ShrinkTrace => "L5_8",
            MomentKind::ShrinkSquareTrace => "L5_9",
            MomentKind::ShrinkTraceSquared => "L5_10",
            MomentKind::CrossTrace => "L5_11",
            MomentKind::CrossTraceProduct => "L5_12",
        }
    }

    /// Power of `p` multiplying the raw trace functional.
    pub fn scale_power(&self) -> i32 {
        match self {
            MomentKind::ShrinkTrace | MomentKind::CrossTrace | MomentKind::CrossTraceProduct => 1,
            MomentKind::ShrinkSquareTrace | MomentKind::ShrinkTraceSquared => 2,
            _ => 0,
        }
    }

    fn needs_inverse(&self) -> bool {
        matches!(self, MomentKind::InverseTrace | MomentKind::InverseTraceSquared | MomentKind::InverseSquareTrace)
    }
}

impl fmt::Display for MomentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

impl FromStr for MomentKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        MomentKind::ALL
            .into_iter()
            .find(|k| k.tag().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| Error::InvalidInput(format!("unknown moment kind `{s}`")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MomentEstimate<T> {
    pub kind: MomentKind,
    pub mean: T,
    pub stderr: T,
    pub trials: usize,
    pub scale_power: i32,
}

/// Analytic counterpart of a moment.
///
/// `error_order = None` means `value` is exact. `Some(k)` means the neglected
/// term is `O(p^-k)` in the kind's own units; when `value` is zero only the
/// decay rate `p^-k` is claimed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReferenceValue {
    pub value: f64,
    pub error_order: Option<u32>,
}

impl ReferenceValue {
    pub fn is_exact(&self) -> bool {
        self.error_order.is_none()
    }

    pub fn is_scaling_only(&self) -> bool {
        self.value == 0.0 && self.error_order.is_some()
    }
}

fn check_moment_pre(n: usize, p: usize) -> Result<()> {
    if n == 0 {
        return Err(Error::InvalidDimension("n must be at least 1".into()));
    }
    if p < n + 2 {
        return Err(Error::DegenerateMoment { n, p });
    }
    Ok(())
}

pub fn analytic_reference(kind: MomentKind, n: usize, p: usize) -> Result<ReferenceValue> {
    check_moment_pre(n, p)?;
    let (nf, pf) = (n as f64, p as f64);
    let r = |value, order| ReferenceValue { value, error_order: order };
    Ok(match kind {
        MomentKind::InverseTrace => r(nf / (pf - nf - 1.0), None),
        MomentKind::InverseTraceSquared => r(nf * nf / (pf * pf), Some(3)),
        MomentKind::InverseSquareTrace => r(nf / (pf * pf), Some(3)),
        MomentKind::RidgeTrace => r(0.0, Some(2)),
        MomentKind::RidgeSquareTrace => r(0.0, Some(4)),
        MomentKind::RidgeTraceSquared => r(0.0, Some(4)),
        MomentKind::ShrinkTrace => r(nf * pf / (pf - nf - 1.0), Some(1)),
        MomentKind::ShrinkSquareTrace => r(nf, Some(1)),
        MomentKind::ShrinkTraceSquared => r(nf * nf, Some(1)),
        MomentKind::CrossTrace => r(0.0, Some(2)),
        MomentKind::CrossTraceProduct => r(0.0, Some(2)),
    })
}

/// Evaluates the requested functionals on one Gram matrix.
fn moment_values<T: Real>(kinds: &[MomentKind], w: &DMatrix<T>, sigma: &DMatrix<T>, alpha: T, p: usize) -> Vec<T> {
    let pf: T = lit(p as f64);
    let inv_part = if kinds.iter().any(MomentKind::needs_inverse) {
        let sw_inv = sigma * spd_inverse(w).expect("Gram matrix with p >= n + 2 rows is invertible");
        Some((sw_inv.trace(), trace_of_product(&sw_inv, &sw_inv)))
    } else {
        None
    };
    let ridge_part = if kinds.iter().any(|k| !k.needs_inverse()) {
        let r = spd_inverse(&shifted(w, alpha)).expect("shifted Gram matrix is SPD");
        let r2 = &r * &r;
        let s_r2 = sigma * &r2;
        let s_w_r2 = sigma * w * &r2;
        Some((s_r2, s_w_r2))
    } else {
        None
    };
    kinds
        .iter()
        .map(|kind| match kind {
            MomentKind::InverseTrace => inv_part.unwrap().0,
            MomentKind::InverseTraceSquared => inv_part.unwrap().0 * inv_part.unwrap().0,
            MomentKind::InverseSquareTrace => inv_part.unwrap().1,
            _ => {
                let (s_r2, s_w_r2) = ridge_part.as_ref().unwrap();
                match kind {
                    MomentKind::RidgeTrace => s_r2.trace(),
                    MomentKind::RidgeSquareTrace => trace_of_product(s_r2, s_r2),
                    MomentKind::RidgeTraceSquared => s_r2.trace() * s_r2.trace(),
                    MomentKind::ShrinkTrace => pf * s_w_r2.trace(),
                    MomentKind::ShrinkSquareTrace => pf * pf * trace_of_product(s_w_r2, s_w_r2),
                    MomentKind::ShrinkTraceSquared => pf * pf * s_w_r2.trace() * s_w_r2.trace(),
                    MomentKind::CrossTrace => pf * trace_of_product(s_r2, s_w_r2),
                    MomentKind::CrossTraceProduct => pf * s_r2.trace() * s_w_r2.trace(),
                    _ => unreachable!(),
                }
            }
        })
        .collect()
}

/// Estimates several moments from shared draws: trial `t` uses the design
/// drawn from `seed.trial(t)`, so estimates for different kinds are
/// correlated but each is individually unbiased.
pub fn mc_trace_moments<T: Real>(
    kinds: &[MomentKind],
    n: usize,
    p: usize,
    alpha: T,
    sigma: &SpdMatrix<T>,
    trials: usize,
    seed: RngSeed,
) -> Result<Vec<MomentEstimate<T>>> {
    check_moment_pre(n, p)?;
    if sigma.dim() != n {
        return Err(Error::InvalidDimension(format!("covariance is {}x{} but n = {n}", sigma.dim(), sigma.dim())));
    }
    if trials < MIN_MOMENT_TRIALS {
        return Err(Error::InvalidInput(format!("need at least {MIN_MOMENT_TRIALS} trials, got {trials}")));
    }
    if alpha < T::zero() {
        return Err(Error::InvalidInput("alpha must be nonnegative".into()));
    }
    let per_trial: Vec<Vec<T>> = (0..trials as u64)
        .into_par_iter()
        .map(|t| {
            let mut rng = seed.trial(t).rng();
            let x = gaussian_rows_with(&mut rng, p, sigma);
            moment_values(kinds, &gram(&x), sigma.matrix(), alpha, p)
        })
        .collect();
    Ok(kinds
        .iter()
        .enumerate()
        .map(|(k, &kind)| {
            let column: Vec<T> = per_trial.iter().map(|v| v[k]).collect();
            let s = SampleStats::from_values(&column);
            MomentEstimate { kind, mean: s.mean, stderr: s.stderr, trials, scale_power: kind.scale_power() }
        })
        .collect())
}

pub fn mc_trace_moment<T: Real>(
    kind: MomentKind,
    n: usize,
    p: usize,
    alpha: T,
    sigma: &SpdMatrix<T>,
    trials: usize,
    seed: RngSeed,
) -> Result<MomentEstimate<T>> {
    Ok(mc_trace_moments(&[kind], n, p, alpha, sigma, trials, seed)?.remove(0))
}

/// Verdict for one rung of a value check across a `p` ladder.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ValueVerdict {
    pub p: usize,
    pub deviation: f64,
    pub tolerance: f64,
    /// `p^k·|estimate − reference|`, the implied constant of the neglected term.
    pub implied_constant: f64,
    pub pass: bool,
}

/// Outcome of [`value_ladder_check`] for one kind.
#[derive(Debug, Clone, PartialEq)]
pub struct LadderVerdict {
    pub rungs: Vec<ValueVerdict>,
    /// Fitted `C`; zero for exact references.
    pub constant: f64,
    /// Log-log slope of the implied constants against `p`, over the rungs
    /// whose deviation exceeds `3·stderr`. `None` when fewer than two do.
    pub growth: Option<f64>,
    pub pass: bool,
}

/// Largest tolerated growth exponent of the implied constant: half a power
/// of `p`, the same resolution as [`decay_check`].
pub const MAX_CONSTANT_GROWTH: f64 = 0.5;

/// Checks estimates of a value-bearing kind against their references over an
/// increasing `p` ladder.
///
/// Exact references must lie within `3·stderr` at every rung. Leading-order
/// references with neglected order `k` get an extra `C/p^k` allowance. `C` is
/// the smallest constant that covers every rung once `3·stderr` is granted,
/// and it must not grow: the implied constants `p^k·|deviation|` may rise
/// with `p` no faster than `p^0.5`. A bias that does not vanish makes them
/// grow like `p^k` and fails.
pub fn value_ladder_check<T: Real>(
    ladder: &[usize],
    estimates: &[MomentEstimate<T>],
    references: &[ReferenceValue],
) -> LadderVerdict {
    assert_eq!(ladder.len(), estimates.len());
    assert_eq!(ladder.len(), references.len());
    let rows: Vec<(usize, f64, f64, f64)> = ladder
        .iter()
        .zip(estimates.iter().zip(references))
        .map(|(&p, (est, reference))| {
            let order = reference.error_order.unwrap_or(0) as i32;
            (p, (to_f64(est.mean) - reference.value).abs(), to_f64(est.stderr), (p as f64).powi(order))
        })
        .collect();
    let leading = references.iter().any(|r| !r.is_exact());
    let constant = if leading {
        rows.iter().map(|&(_, dev, se, scale)| (dev - 3.0 * se).max(0.0) * scale).fold(0.0, f64::max)
    } else {
        0.0
    };
    let significant: Vec<&(usize, f64, f64, f64)> = rows.iter().filter(|r| r.1 > 3.0 * r.2).collect();
    let growth = if leading && significant.len() >= 2 {
        let ps: Vec<f64> = significant.iter().map(|r| r.0 as f64).collect();
        let cs: Vec<f64> = significant.iter().map(|r| r.1 * r.3).collect();
        Some(loglog_slope(&ps, &cs))
    } else {
        None
    };
    let growth_ok = growth.is_none_or(|g| g <= MAX_CONSTANT_GROWTH);
    let rungs: Vec<ValueVerdict> = rows
        .iter()
        .map(|&(p, deviation, se, scale)| {
            let tolerance = 3.0 * se + constant / scale;
            ValueVerdict {
                p,
                deviation,
                tolerance,
                implied_constant: deviation * scale,
                pass: (deviation - 3.0 * se).max(0.0) * scale <= constant && growth_ok,
            }
        })
        .collect();
    let pass = rungs.iter().all(|r| r.pass);
    LadderVerdict { rungs, constant, growth, pass }
}

/// Fitted decay exponent of a scaling-only kind and the band it must fall in.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecayVerdict {
    pub slope: f64,
    pub band: (f64, f64),
    pub pass: bool,
}

/// Log-log slope of the estimates across the ladder; passes when it lies
/// within half a power of `−order`.
pub fn decay_check<T: Real>(ladder: &[usize], estimates: &[MomentEstimate<T>], order: u32) -> DecayVerdict {
    let ps: Vec<f64> = ladder.iter().map(|&p| p as f64).collect();
    let means: Vec<f64> = estimates.iter().map(|e| to_f64(e.mean)).collect();
    let slope = loglog_slope(&ps, &means);
    let band = (-(order as f64) - 0.5, -(order as f64) + 0.5);
    DecayVerdict { slope, band, pass: slope >= band.0 && slope <= band.1 }
}

/// Both sides of the three trace inequalities for one instance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundsReport<T> {
    /// `tr((I + αXᵗX)⁻¹)`, bounded by `n`.
    pub identity_shift_trace: T,
    /// `tr((XᵗX + αI)⁻¹)`, bounded by `n/α`.
    pub ridge_inverse_trace: T,
    pub ridge_inverse_bound: T,
    /// `tr(ST)`, bounded by `tr(S)·tr(T)`.
    pub product_trace: T,
    pub product_bound: T,
    pub n: usize,
}

impl<T: Real> BoundsReport<T> {
    pub fn all_hold(&self) -> bool {
        // Rounding slack.
        let slack = |bound: T| bound.abs() * T::default_epsilon() * lit(64.0);
        let n: T = lit(self.n as f64);
        self.identity_shift_trace <= n + slack(n)
            && self.ridge_inverse_trace <= self.ridge_inverse_bound + slack(self.ridge_inverse_bound)
            && self.product_trace <= self.product_bound + slack(self.product_bound)
    }
}

pub fn bounds_report<T: Real>(
    x: &GaussianSample<T>,
    alpha: T,
    s: &DMatrix<T>,
    t: &DMatrix<T>,
) -> Result<BoundsReport<T>> {
    if !is_positive(alpha) {
        return Err(Error::InvalidInput("alpha must be positive".into()));
    }
    let s =
        SpdMatrix::new(s.clone()).map_err(|_| Error::InvalidInput("S is not symmetric positive definite".into()))?;
    let t =
        SpdMatrix::new(t.clone()).map_err(|_| Error::InvalidInput("T is not symmetric positive definite".into()))?;
    if s.dim() != t.dim() {
        return Err(Error::InvalidInput(format!("S is {0}x{0} but T is {1}x{1}", s.dim(), t.dim())));
    }
    let n = x.cols();
    let w = gram(x.matrix());
    let scaled = w.clone() * alpha;
    let identity_shift =
        spd_inverse(&shifted(&scaled, T::one())).ok_or_else(|| Error::Internal("I + αXᵗX failed to factor".into()))?;
    let ridge_inverse =
        spd_inverse(&shifted(&w, alpha)).ok_or_else(|| Error::Internal("XᵗX + αI failed to factor".into()))?;
    Ok(BoundsReport {
        identity_shift_trace: identity_shift.trace(),
        ridge_inverse_trace: ridge_inverse.trace(),
        ridge_inverse_bound: lit::<T>(n as f64) / alpha,
        product_trace: trace_of_product(s.matrix(), t.matrix()),
        product_bound: s.trace() * t.trace(),
        n,
    })
}

/// True iff `tr((I + αXᵗX)⁻¹) ≤ n`, `tr((XᵗX + αI)⁻¹) ≤ n/α` and
/// `tr(ST) ≤ tr(S)·tr(T)` all hold on this instance. A `false` here is a
/// numerical bug, not a statistical event.
pub fn deterministic_bounds_check<T: Real>(
    x: &GaussianSample<T>,
    alpha: T,
    s: &DMatrix<T>,
    t: &DMatrix<T>,
) -> Result<bool> {
    Ok(bounds_report(x, alpha, s, t)?.all_hold())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BoundsSweep {
    pub instances: usize,
    pub violations: usize,
}

/// Runs the bounds check on `instances` random problems cycling through
/// `alphas`. Dimensions vary in `1..=6`, row counts in `1..=3n` (so rank
/// deficient Gram matrices are included), and `S`, `T` are random SPD
/// matrices with random scale.
pub fn bounds_sweep<T: Real>(instances: usize, alphas: &[T], seed: RngSeed) -> Result<BoundsSweep> {
    if alphas.is_empty() {
        return Err(Error::InvalidInput("need at least one alpha".into()));
    }
    let seed = seed.stream(streams::BOUNDS);
    let outcomes: Vec<Result<bool>> = (0..instances as u64)
        .into_par_iter()
        .map(|i| {
            let mut rng = seed.trial(i).rng();
            let n = rng.random_range(1..=6usize);
            let p = rng.random_range(1..=3 * n);
            let alpha = alphas[i as usize % alphas.len()];
            let sub = |label: u64| seed.trial(i).stream(label);
            let sigma = sample_spd_covariance::<T>(n, CovarianceScheme::Random, sub(1))?;
            let x = GaussianSample::from_matrix(gaussian_rows_with(&mut rng, p, &sigma))?;
            let s_scale: T = lit(10f64.powf(rng.random_range(-2.0..2.0)));
            let t_scale: T = lit(10f64.powf(rng.random_range(-2.0..2.0)));
            let s = sample_spd_covariance::<T>(n, CovarianceScheme::Random, sub(2))?.into_matrix() * s_scale;
            let t = sample_spd_covariance::<T>(n, CovarianceScheme::Random, sub(3))?.into_matrix() * t_scale;
            deterministic_bounds_check(&x, alpha, &s, &t)
        })
        .collect();
    let mut violations = 0;
    for outcome in outcomes {
        if !outcome? {
            violations += 1;
        }
    }
    Ok(BoundsSweep { instances, violations })
}
