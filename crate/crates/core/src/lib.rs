//! Optimal train/test split sizing for ridge regression.
//!
//! The crate estimates the integrity metric (the expected squared gap between
//! measured held-out MSE and the true noise variance) by Monte Carlo at three
//! variance-reduction tiers, computes the closed-form asymptotic optimal
//! training size, and checks the Wishart trace moments the asymptotic rests on.
//!
//! All numerical code is generic over the scalar type through [`Real`]; the
//! `*64` aliases below fix it to `f64`, which is what the CLI uses.

pub mod error;
pub mod integrity;
pub mod linalg;
pub mod moments;
pub mod ridge;
pub mod rng;
pub mod sampling;
pub mod split;
pub mod stats;

use nalgebra::RealField;
use num_traits::{FromPrimitive, ToPrimitive};

pub use error::{Error, Result};
pub use integrity::{
    default_smoothing_window, empirical_argmin, im_curve, im_point, im_tier0, im_tier1_given_x, im_tier2_given_train,
    EmpiricalArgmin, ImPointEstimate, ModelSpec, SplitCurve, Tier, TraceMoments, TraceSummary, TrainTraceSummary,
};
pub use moments::{
    analytic_reference, bounds_sweep, deterministic_bounds_check, mc_trace_moment, mc_trace_moments, MomentEstimate,
    MomentKind, ReferenceValue,
};
pub use ridge::{ridge_fit, test_mean_squared_error, ModelParams, RidgeFit};
pub use rng::RngSeed;
pub use sampling::{
    sample_gaussian_rows, sample_spd_covariance, sample_wishart, CovarianceScheme, GaussianSample, SpdMatrix,
};
pub use split::{
    asymptotic_split, leading_poly_root, recommend_integer_split, LeadingPolynomial, SplitRecommendation, SplitSource,
};

/// Scalar type the numerical code is generic over (`f32` or `f64`).
pub trait Real: RealField + Copy + FromPrimitive + ToPrimitive + Send + Sync + 'static {}

impl<T> Real for T where T: RealField + Copy + FromPrimitive + ToPrimitive + Send + Sync + 'static {}

/// Converts an `f64` literal into `T`.
#[inline]
pub(crate) fn lit<T: Real>(v: f64) -> T {
    T::from_f64(v).expect("f64 literal representable in scalar type")
}

#[inline]
pub(crate) fn is_positive<T: Real>(v: T) -> bool {
    v > T::zero()
}

/// False for NaN as well as for negative values.
#[inline]
pub(crate) fn is_nonnegative<T: Real>(v: T) -> bool {
    v >= T::zero()
}

#[inline]
pub(crate) fn to_f64<T: Real>(v: T) -> f64 {
    v.to_f64().expect("scalar converts to f64")
}

pub type SpdMatrix64 = SpdMatrix<f64>;
pub type SpdMatrix32 = SpdMatrix<f32>;
pub type GaussianSample64 = GaussianSample<f64>;
pub type RidgeFit64 = RidgeFit<f64>;
pub type ModelParams64 = ModelParams<f64>;
pub type ModelSpec64 = ModelSpec<f64>;
pub type ImPointEstimate64 = ImPointEstimate<f64>;
pub type SplitCurve64 = SplitCurve<f64>;
pub type MomentEstimate64 = MomentEstimate<f64>;
pub type TraceSummary64 = TraceSummary<f64>;
pub type TrainTraceSummary64 = TrainTraceSummary<f64>;
pub type SplitRecommendation64 = SplitRecommendation<f64>;
