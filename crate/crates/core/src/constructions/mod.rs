//! Explicit convex functions on `[0,1]^d`: staircase antiderivatives, boundary
//! spikes, mollified smoothings and generic composites.

mod convexity;
mod expr;
mod mollify;
pub mod sequence;
pub mod staircase;

use thiserror::Error;

use crate::dyadic::DyadicError;

pub use convexity::{convexity_check, ConvexityOutcome, ConvexityWitness};
pub use expr::{compose_generic, ConvexFunctionExpr, EvalMode, QuadraticBase, Term};
pub use mollify::{mollify_eval, MollifierKernel, DEFAULT_NODES_EXP};
pub use sequence::{validate_sequence, Condition, ScaleSequence, Violation};
pub use staircase::{phi_derivative_f64, phi_f64, StaircaseParams, MAX_L};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConstructionError {
    #[error("staircase level l={0} rejected: l must be at least 2")]
    LevelTooSmall(u32),
    #[error("staircase level l={0} exceeds the supported maximum {max}", max = staircase::MAX_L)]
    LevelTooLarge(u32),
    #[error("point coordinate {0} outside [0,1]")]
    OutOfDomain(f64),
    #[error("inadmissible scale sequence: {0}")]
    Inadmissible(Violation),
    #[error("no admissible entry for k={k} with l <= {max_l}")]
    NoAdmissibleSequence { k: usize, max_l: u32 },
    #[error("expected a point of dimension {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("axis {axis} out of range for dimension {dimension}")]
    AxisOutOfRange { axis: usize, dimension: usize },
    #[error("dimension must be between 1 and {max}, got {0}", max = expr::MAX_DIMENSION)]
    BadDimension(usize),
    #[error("quadratic base is not convex: {0}")]
    NotConvex(String),
    #[error("exact evaluation unavailable: {0}")]
    ExactUnavailable(String),
    #[error("mollification parameter {0} outside (0, 1/2)")]
    InvalidLambda(f64),
    #[error("quadrature failed: {0}")]
    Quadrature(String),
    #[error("grid exponent {0} unsupported")]
    InvalidGrid(u32),
    #[error(transparent)]
    Dyadic(#[from] DyadicError),
}
