//! Pointwise regularity: Hölder exponent estimates, one-sided derivatives of
//! convex functions, directional probes and derivative stability.

mod cone;
mod derivative;
mod holder;
mod stability;

use thiserror::Error;

pub use cone::{
    build_cone_system, cone_probe, ConeProbe, ConeProbeStatus, ConeSystem, DirectionEstimate,
};
pub use derivative::{
    convex_one_sided_derivative, default_steps, directional_restriction, exponent_shift_check,
    OneSidedDerivative, Restriction, ShiftOutcome, Side,
};
pub use holder::{
    holder_estimate_1d, holder_estimate_nd, CapReason, ExponentEstimate, HolderConfig,
};
pub use stability::{
    check_derivative_stability, derivative_stability_radius, derivative_stability_radius_nd,
    StabilityCheck, StabilityPartition, DEFAULT_GRID_EXP,
};

/// A real function on an interval.
pub trait Function1d: Sync {
    fn eval(&self, t: f64) -> f64;

    /// Closed interval of definition.
    fn domain(&self) -> (f64, f64) {
        (0.0, 1.0)
    }
}

impl<F: Fn(f64) -> f64 + Sync> Function1d for F {
    fn eval(&self, t: f64) -> f64 {
        self(t)
    }
}

/// A closure with an explicit domain.
pub struct OnInterval<F> {
    f: F,
    lo: f64,
    hi: f64,
}

impl<F: Fn(f64) -> f64 + Sync> OnInterval<F> {
    pub fn new(lo: f64, hi: f64, f: F) -> Self {
        Self { f, lo, hi }
    }
}

impl<F: Fn(f64) -> f64 + Sync> Function1d for OnInterval<F> {
    fn eval(&self, t: f64) -> f64 {
        (self.f)(t)
    }
    fn domain(&self) -> (f64, f64) {
        (self.lo, self.hi)
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RegularityError {
    #[error("at least {min} scales are required, got {got}")]
    TooFewScales { min: usize, got: usize },
    #[error("point {0:?} outside the domain")]
    OutOfDomain(Vec<f64>),
    #[error("point {0:?} lies on the boundary; the probe needs an interior point")]
    Boundary(Vec<f64>),
    #[error("function returned a non-finite value at {0:?}")]
    NonFinite(Vec<f64>),
    #[error("difference quotients are not monotone at step {step}: the function is not convex along the probe")]
    NotConvex { step: f64 },
    #[error("direction must be a unit vector of dimension {0}")]
    BadDirection(usize),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error(
        "convex hull of the cone centers does not contain B(0, {required}): inradius {radius}"
    )]
    HullTooSmall { required: f64, radius: f64 },
    #[error("unsupported cone system: {0}")]
    UnsupportedCone(String),
    #[error(
        "derivative oscillation cannot be certified on a 2^-{grid_exp} grid; use a finer grid"
    )]
    GridTooCoarse { grid_exp: u32 },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}
