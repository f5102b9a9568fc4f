//! Smoothing by convolution with the bump `exp(-1/(1-|y|²))`.
//!
//! For `λ ∈ (0, 1/2)` the smoothed function is
//! `f_λ(x) = ∫ f(T(x) + (λ/2)y) ψ(y) dy` with `T(x) = 1/2 + (1-λ)(x - 1/2)`.
//! `T` pulls the cube into `[λ/2, 1-λ/2]^d`, so every sample stays inside the
//! domain of `f`, and `f_λ` is convex because it is an average of convex
//! functions composed with an affine map. The integral is a midpoint rule with
//! `2^m` nodes per axis over `[-1,1]^d`, weights normalized to sum to one.

use std::collections::HashMap;
use std::sync::{Arc, OnceLock, RwLock};

use super::ConstructionError;
use crate::FunctionNd;

pub const DEFAULT_NODES_EXP: u32 = 7;

/// Upper bound on the total lattice size `2^{m·d}`.
const MAX_LATTICE_BITS: u32 = 24;

#[derive(Debug)]
pub struct MollifierKernel {
    dimension: usize,
    /// Flattened node coordinates in the open unit ball, `dimension` per node.
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl MollifierKernel {
    pub(crate) fn check_size(dimension: usize, nodes_exp: u32) -> Result<(), ConstructionError> {
        if nodes_exp == 0 || nodes_exp as usize * dimension > MAX_LATTICE_BITS as usize {
            return Err(ConstructionError::Quadrature(format!(
                "2^{nodes_exp} nodes per axis in dimension {dimension} is outside the supported lattice sizes"
            )));
        }
        Ok(())
    }

    fn build(dimension: usize, nodes_exp: u32) -> Self {
        let per_axis = 1usize << nodes_exp;
        let h = 2.0 / per_axis as f64;
        let total = per_axis.pow(dimension as u32);
        let mut nodes = Vec::new();
        let mut weights = Vec::new();
        let mut y = vec![0.0; dimension];
        for idx in 0..total {
            let mut rest = idx;
            for yi in y.iter_mut() {
                *yi = -1.0 + (rest % per_axis) as f64 * h + h / 2.0;
                rest /= per_axis;
            }
            let r2: f64 = y.iter().map(|v| v * v).sum();
            if r2 < 1.0 {
                let w = (-1.0 / (1.0 - r2)).exp();
                if w > 0.0 {
                    nodes.extend_from_slice(&y);
                    weights.push(w);
                }
            }
        }
        let sum: f64 = weights.iter().sum();
        for w in &mut weights {
            *w /= sum;
        }
        Self {
            dimension,
            nodes,
            weights,
        }
    }

    /// Shared kernel for a dimension and lattice size.
    pub fn get(dimension: usize, nodes_exp: u32) -> Result<Arc<Self>, ConstructionError> {
        Self::check_size(dimension, nodes_exp)?;
        static CACHE: OnceLock<RwLock<HashMap<(usize, u32), Arc<MollifierKernel>>>> =
            OnceLock::new();
        let cache = CACHE.get_or_init(Default::default);
        if let Some(k) = cache.read().unwrap().get(&(dimension, nodes_exp)) {
            return Ok(k.clone());
        }
        let k = Arc::new(Self::build(dimension, nodes_exp));
        cache
            .write()
            .unwrap()
            .insert((dimension, nodes_exp), k.clone());
        Ok(k)
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }
}

/// Value of the smoothed function at `x`.
pub fn mollify_eval(
    f: &dyn FunctionNd,
    lambda: f64,
    nodes_exp: u32,
    x: &[f64],
) -> Result<f64, ConstructionError> {
    if !(lambda > 0.0 && lambda < 0.5) {
        return Err(ConstructionError::InvalidLambda(lambda));
    }
    let d = f.dimension();
    if x.len() != d {
        return Err(ConstructionError::DimensionMismatch {
            expected: d,
            got: x.len(),
        });
    }
    if let Some(&v) = x.iter().find(|v| !(0.0..=1.0).contains(*v)) {
        return Err(ConstructionError::OutOfDomain(v));
    }
    let kernel = MollifierKernel::get(d, nodes_exp)?;
    let center: Vec<f64> = x
        .iter()
        .map(|&xi| 0.5 + (1.0 - lambda) * (xi - 0.5))
        .collect();
    let radius = lambda / 2.0;
    let mut p = vec![0.0; d];
    let mut acc = 0.0;
    for (node, &w) in kernel
        .nodes
        .chunks_exact(kernel.dimension)
        .zip(&kernel.weights)
    {
        for ((pi, ci), yi) in p.iter_mut().zip(&center).zip(node) {
            *pi = (ci + radius * yi).clamp(0.0, 1.0);
        }
        let v = f.value(&p);
        if !v.is_finite() {
            return Err(ConstructionError::Quadrature(format!(
                "non-finite sample {v} at {p:?}"
            )));
        }
        acc += w * v;
    }
    Ok(acc)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::FnNd;

    #[test]
    fn kernel_is_normalized_and_symmetric() {
        let k = MollifierKernel::get(2, 5).unwrap();
        let s: f64 = k.weights().iter().sum();
        assert!((s - 1.0).abs() < 1e-12);
        let mean: f64 = k
            .nodes
            .chunks(2)
            .zip(k.weights())
            .map(|(y, w)| y[0] * w)
            .sum();
        assert!(mean.abs() < 1e-15);
        assert!(Arc::ptr_eq(&k, &MollifierKernel::get(2, 5).unwrap()));
        assert!(MollifierKernel::get(3, 9).is_err());
    }

    #[test]
    fn constants_and_affine_functions() {
        let c = FnNd::new(2, |_: &[f64]| 2.5);
        assert!((mollify_eval(&c, 0.1, 7, &[0.3, 0.9]).unwrap() - 2.5).abs() < 1e-12);
        let lin = FnNd::new(1, |x: &[f64]| x[0]);
        let lambda = 0.1;
        let x = 0.7;
        let expected = 0.5 + (1.0 - lambda) * (x - 0.5);
        assert!((mollify_eval(&lin, lambda, 7, &[x]).unwrap() - expected).abs() < 1e-12);
    }

    #[test]
    fn errors() {
        let c = FnNd::new(1, |_: &[f64]| 1.0);
        assert!(mollify_eval(&c, 0.5, 7, &[0.5]).is_err());
        assert!(mollify_eval(&c, 0.0, 7, &[0.5]).is_err());
        assert!(mollify_eval(&c, 0.1, 7, &[1.5]).is_err());
        let bad = FnNd::new(1, |x: &[f64]| if x[0] > 0.5 { f64::NAN } else { 0.0 });
        assert!(matches!(
            mollify_eval(&bad, 0.1, 7, &[0.5]),
            Err(ConstructionError::Quadrature(_))
        ));
    }
}
