use rayon::prelude::*;
use serde::Serialize;

use super::{ConstructionError, ConvexFunctionExpr, EvalMode};
use crate::dyadic::DyadicRational;

/// Relative tolerance for second differences in float mode.
const FLOAT_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvexityWitness {
    pub point: Vec<DyadicRational>,
    /// `f(x-δe) - 2f(x) + f(x+δe)`, negative.
    pub second_difference: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvexityOutcome {
    pub exact: bool,
    pub points_checked: u64,
    /// Second differences that were not exactly zero.
    pub nonzero: u64,
    pub witness: Option<ConvexityWitness>,
}

impl ConvexityOutcome {
    pub fn is_convex(&self) -> bool {
        self.witness.is_none()
    }
}

/// Checks `f(x-δe_j) - 2f(x) + f(x+δe_j) >= 0` at every interior point of the
/// grid `2^{-n}ℤ^d ∩ [0,1]^d` along axis `j` (0-based), exactly when the
/// expression allows it. The first violation in grid order is reported.
pub fn convexity_check(
    f: &ConvexFunctionExpr,
    axis: usize,
    n: u32,
) -> Result<ConvexityOutcome, ConstructionError> {
    let d = f.dimension();
    if axis >= d {
        return Err(ConstructionError::AxisOutOfRange { axis, dimension: d });
    }
    if n == 0 || n as usize * d > 30 {
        return Err(ConstructionError::InvalidGrid(n));
    }
    let side = (1u64 << n) + 1;
    let lines = side.pow(d as u32 - 1);
    let exact = f.mode() == EvalMode::Exact;
    let results: Vec<Result<LineResult, ConstructionError>> = (0..lines)
        .into_par_iter()
        .map(|line| {
            let mut idx = vec![0u64; d];
            let mut rest = line;
            for (k, slot) in idx.iter_mut().enumerate() {
                if k != axis {
                    *slot = rest % side;
                    rest /= side;
                }
            }
            if exact {
                check_line_exact(f, axis, n, &mut idx)
            } else {
                check_line_float(f, axis, n, &mut idx)
            }
        })
        .collect();
    let mut outcome = ConvexityOutcome {
        exact,
        points_checked: 0,
        nonzero: 0,
        witness: None,
    };
    for r in results {
        let r = r?;
        outcome.points_checked += r.checked;
        outcome.nonzero += r.nonzero;
        if outcome.witness.is_none() {
            outcome.witness = r.witness;
        }
    }
    Ok(outcome)
}

struct LineResult {
    checked: u64,
    nonzero: u64,
    witness: Option<ConvexityWitness>,
}

fn grid_point(idx: &[u64], n: u32) -> Vec<DyadicRational> {
    idx.iter()
        .map(|&i| DyadicRational::new(i, -(n as i64)))
        .collect()
}

fn check_line_exact(
    f: &ConvexFunctionExpr,
    axis: usize,
    n: u32,
    idx: &mut [u64],
) -> Result<LineResult, ConstructionError> {
    let side = (1u64 << n) + 1;
    let mut values = Vec::with_capacity(side as usize);
    for i in 0..side {
        idx[axis] = i;
        values.push(f.eval_exact(&grid_point(idx, n))?);
    }
    let mut res = LineResult {
        checked: 0,
        nonzero: 0,
        witness: None,
    };
    for i in 1..side - 1 {
        let i = i as usize;
        let second = &(&values[i - 1] + &values[i + 1]) - &values[i].mul_pow2(1);
        res.checked += 1;
        if !second.is_zero() {
            res.nonzero += 1;
        }
        if second.is_negative() && res.witness.is_none() {
            idx[axis] = i as u64;
            res.witness = Some(ConvexityWitness {
                point: grid_point(idx, n),
                second_difference: second.to_f64_lossy(),
            });
        }
    }
    Ok(res)
}

fn check_line_float(
    f: &ConvexFunctionExpr,
    axis: usize,
    n: u32,
    idx: &mut [u64],
) -> Result<LineResult, ConstructionError> {
    let side = (1u64 << n) + 1;
    let scale = (1u64 << n) as f64;
    let mut x: Vec<f64> = idx.iter().map(|&i| i as f64 / scale).collect();
    let mut values = Vec::with_capacity(side as usize);
    for i in 0..side {
        x[axis] = i as f64 / scale;
        values.push(f.eval(&x)?);
    }
    let mut res = LineResult {
        checked: 0,
        nonzero: 0,
        witness: None,
    };
    for i in 1..(side - 1) as usize {
        let (a, b, c) = (values[i - 1], values[i], values[i + 1]);
        let second = a - 2.0 * b + c;
        let tol = FLOAT_TOLERANCE * (a.abs() + 2.0 * b.abs() + c.abs());
        res.checked += 1;
        if second != 0.0 {
            res.nonzero += 1;
        }
        if second < -tol && res.witness.is_none() {
            idx[axis] = i as u64;
            res.witness = Some(ConvexityWitness {
                point: grid_point(idx, n),
                second_difference: second,
            });
        }
    }
    Ok(res)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constructions::{QuadraticBase, Term};

    fn d(m: i64, e: i64) -> DyadicRational {
        DyadicRational::new(m, e)
    }

    #[test]
    fn staircase_in_second_axis_is_flat() {
        let f = ConvexFunctionExpr::new(2, QuadraticBase::zero(), vec![Term::fbar(2)]).unwrap();
        let out = convexity_check(&f, 1, 6).unwrap();
        assert!(out.is_convex() && out.exact);
        assert_eq!(out.points_checked, 65 * 63);
        assert_eq!(out.nonzero, 0);
    }

    #[test]
    fn concave_function_has_witness() {
        let affine =
            ConvexFunctionExpr::new(1, QuadraticBase::affine(d(0, 0), vec![d(1, 0)]), vec![])
                .unwrap();
        assert!(convexity_check(&affine, 0, 4).unwrap().is_convex());
        // -x^2 fails the base certificate, so build it unchecked.
        let base = QuadraticBase {
            quadratic: vec![vec![d(-1, 0)]],
            ..QuadraticBase::zero()
        };
        let concave = ConvexFunctionExpr::new_unchecked(1, base, vec![]);
        let out = convexity_check(&concave, 0, 4).unwrap();
        let w = out.witness.expect("violation");
        assert_eq!(w.point, vec![d(1, -4)]);
        assert_eq!(w.second_difference, -2.0 / 256.0);
    }

    #[test]
    fn float_mode_check() {
        let f = ConvexFunctionExpr::new(
            2,
            QuadraticBase::sum_of_squares(2, d(1, 0)),
            vec![Term::phi(3)],
        )
        .unwrap();
        let out = convexity_check(&f, 0, 5).unwrap();
        assert!(out.is_convex() && !out.exact);
    }
}
