//! Convex functions with prescribed singularities, their pointwise Hölder
//! exponents and multifractal spectra.
//!
//! * [`dyadic`]: exact arithmetic on `m·2^e`.
//! * [`constructions`]: staircases, boundary spikes, mollifiers and generic
//!   composites as serializable expressions.
//! * [`regularity`]: pointwise exponent estimators, one-sided derivatives,
//!   cone probes and derivative stability.
//! * [`cantor`]: Cantor-type interval schemes, covering counts and measures.
//! * [`spectrum`]: theoretical spectra and coarse-grained empirical spectra.

pub mod cantor;
pub mod constructions;
pub mod dyadic;
pub mod fit;
pub mod regularity;
pub mod spectrum;

/// A real function on a subset of `R^d`. Failure to evaluate is signalled by
/// a non-finite value; callers check.
pub trait FunctionNd: Sync {
    fn dimension(&self) -> usize;
    fn value(&self, x: &[f64]) -> f64;
}

/// Closure adaptor for [`FunctionNd`].
pub struct FnNd<F> {
    dimension: usize,
    f: F,
}

impl<F: Fn(&[f64]) -> f64 + Sync> FnNd<F> {
    pub fn new(dimension: usize, f: F) -> Self {
        Self { dimension, f }
    }
}

impl<F: Fn(&[f64]) -> f64 + Sync> FunctionNd for FnNd<F> {
    fn dimension(&self) -> usize {
        self.dimension
    }
    fn value(&self, x: &[f64]) -> f64 {
        (self.f)(x)
    }
}

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/dyadic.md")]
    mod dyadic {}
    #[doc = include_str!("../../../book/src/constructions.md")]
    mod constructions {}
    #[doc = include_str!("../../../book/src/regularity.md")]
    mod regularity {}
    #[doc = include_str!("../../../book/src/cantor.md")]
    mod cantor {}
    #[doc = include_str!("../../../book/src/spectrum.md")]
    mod spectrum {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
