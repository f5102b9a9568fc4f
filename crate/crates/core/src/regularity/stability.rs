//! Partitions on which a derivative oscillates by less than `ε/4`, the
//! resulting stability radius, and a checker for perturbed one-sided
//! derivatives.

use std::collections::VecDeque;

use serde::Serialize;

use super::derivative::{convex_one_sided_derivative, Side};
use super::{Function1d, RegularityError};
use crate::FunctionNd;

/// Partition grid spacing `2^-14`.
pub const DEFAULT_GRID_EXP: u32 = 14;

const MAX_GRID_EXP: u32 = 24;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StabilityPartition {
    pub eps: f64,
    pub grid_exp: u32,
    /// `0 = x_0 < x_1 < … < x_K = 1`.
    pub nodes: Vec<f64>,
    /// Smallest gap `x_l − x_{l−1}` over `l ≥ 2`.
    pub min_gap: f64,
    /// `(ε/4) · min_gap`.
    pub rho: f64,
}

/// For each grid index `p`, the largest `q ≥ p` such that every row
/// oscillates by less than `bound` on `[p, q]`.
fn max_reach(rows: &[Vec<f64>], bound: f64) -> Vec<usize> {
    let n = rows[0].len();
    let mut reach = vec![usize::MAX; n];
    for row in rows {
        let mut hi: VecDeque<usize> = VecDeque::new();
        let mut lo: VecDeque<usize> = VecDeque::new();
        let mut q = 0;
        for p in 0..n {
            while hi.front().is_some_and(|&i| i < p) {
                hi.pop_front();
            }
            while lo.front().is_some_and(|&i| i < p) {
                lo.pop_front();
            }
            while q < n {
                let v = row[q];
                let max = hi.front().map_or(v, |&i| row[i].max(v));
                let min = lo.front().map_or(v, |&i| row[i].min(v));
                if max - min >= bound {
                    break;
                }
                while hi.back().is_some_and(|&i| row[i] <= v) {
                    hi.pop_back();
                }
                hi.push_back(q);
                while lo.back().is_some_and(|&i| row[i] >= v) {
                    lo.pop_back();
                }
                lo.push_back(q);
                q += 1;
            }
            reach[p] = reach[p].min(q - 1);
        }
    }
    reach
}

/// Largest minimum gap (in grid steps) over partitions compatible with
/// `reach`, with first node `q1 ≤ first_max`, and the partition itself.
fn best_partition(reach: &[usize], first_max: usize) -> (usize, Vec<usize>) {
    let n = reach.len() - 1;
    let first_max = first_max.min(reach[0]);
    if first_max >= n {
        return (n, vec![0, n]);
    }
    let reachable = |g: usize| -> Vec<bool> {
        let mut ok = vec![false; n + 1];
        let mut diff = vec![0i64; n + 2];
        let mut cover = 0i64;
        for p in 1..=n {
            cover += diff[p];
            ok[p] = p <= first_max || cover > 0;
            if ok[p] && p + g <= reach[p] {
                diff[p + g] += 1;
                diff[reach[p] + 1] -= 1;
            }
        }
        ok
    };
    let (mut lo, mut hi) = (1, n);
    while lo < hi {
        let mid = (lo + hi).div_ceil(2);
        if reachable(mid)[n] {
            lo = mid;
        } else {
            hi = mid - 1;
        }
    }
    let g = lo;
    let ok = reachable(g);
    let mut nodes = vec![n];
    let mut cur = n;
    while cur > first_max {
        let p = (1..=cur - g)
            .rev()
            .find(|&p| ok[p] && reach[p] >= cur)
            .expect("a reachable predecessor exists");
        nodes.push(p);
        cur = p;
    }
    nodes.push(0);
    nodes.reverse();
    (g, nodes)
}

fn partition_from_rows(
    rows: &[Vec<f64>],
    eps: f64,
    grid_exp: u32,
) -> Result<StabilityPartition, RegularityError> {
    if !(eps > 0.0 && eps.is_finite()) {
        return Err(RegularityError::InvalidParameter(format!(
            "eps must be positive, got {eps}"
        )));
    }
    if grid_exp == 0 || grid_exp > MAX_GRID_EXP {
        return Err(RegularityError::InvalidParameter(format!(
            "grid exponent {grid_exp} outside 1..={MAX_GRID_EXP}"
        )));
    }
    for row in rows {
        if let Some(i) = row.iter().position(|v| !v.is_finite()) {
            return Err(RegularityError::NonFinite(vec![
                i as f64 / (row.len() - 1) as f64,
            ]));
        }
    }
    let n = 1usize << grid_exp;
    let h = 1.0 / n as f64;
    // First node strictly below eps.
    let first_max = ((eps / h).ceil() as usize).saturating_sub(1).min(n);
    let reach = max_reach(rows, eps / 4.0);
    if first_max == 0 || (0..n).any(|p| reach[p] == p) {
        return Err(RegularityError::GridTooCoarse { grid_exp });
    }
    let (g, idx) = best_partition(&reach, first_max);
    let nodes: Vec<f64> = idx.iter().map(|&i| i as f64 * h).collect();
    let min_gap = if idx.len() > 2 { g as f64 * h } else { 1.0 };
    Ok(StabilityPartition {
        eps,
        grid_exp,
        nodes,
        min_gap,
        rho: eps / 4.0 * min_gap,
    })
}

fn sample_1d(derivative: &dyn Function1d, grid_exp: u32) -> Vec<f64> {
    let n = 1usize << grid_exp.min(MAX_GRID_EXP);
    (0..=n)
        .map(|i| derivative.eval(i as f64 / n as f64))
        .collect()
}

/// Stability radius `ρ = (ε/4) min_{l≥2}(x_l − x_{l−1})` for a partition of
/// `[0, 1]` on which `derivative` oscillates by less than `ε/4` per cell and
/// `x_1 < ε`. The partition maximizes the smallest gap among partitions with
/// nodes on the `2^-grid_exp` grid.
pub fn derivative_stability_radius(
    derivative: &dyn Function1d,
    eps: f64,
    grid_exp: u32,
) -> Result<StabilityPartition, RegularityError> {
    if derivative.domain() != (0.0, 1.0) {
        return Err(RegularityError::InvalidParameter(
            "derivative must be defined on [0, 1]".into(),
        ));
    }
    if grid_exp == 0 || grid_exp > MAX_GRID_EXP {
        return Err(RegularityError::InvalidParameter(format!(
            "grid exponent {grid_exp} outside 1..={MAX_GRID_EXP}"
        )));
    }
    partition_from_rows(&[sample_1d(derivative, grid_exp)], eps, grid_exp)
}

/// As [`derivative_stability_radius`] for the partial derivative `∂_axis f`,
/// with the oscillation bound holding along every line of a transverse
/// lattice of spacing `2^-transverse_exp`.
pub fn derivative_stability_radius_nd(
    partial: &dyn FunctionNd,
    axis: usize,
    eps: f64,
    grid_exp: u32,
    transverse_exp: u32,
) -> Result<StabilityPartition, RegularityError> {
    let d = partial.dimension();
    if axis >= d {
        return Err(RegularityError::InvalidParameter(format!(
            "axis {axis} out of range for dimension {d}"
        )));
    }
    if grid_exp == 0 || grid_exp > MAX_GRID_EXP {
        return Err(RegularityError::InvalidParameter(format!(
            "grid exponent {grid_exp} outside 1..={MAX_GRID_EXP}"
        )));
    }
    let m = 1usize << transverse_exp.min(10);
    let lines = (m + 1).pow((d - 1) as u32);
    if lines.saturating_mul((1usize << grid_exp) + 1) > 1 << 26 {
        return Err(RegularityError::InvalidParameter(
            "transverse lattice too large".into(),
        ));
    }
    let n = 1usize << grid_exp;
    let rows: Vec<Vec<f64>> = (0..lines)
        .map(|mut code| {
            let mut x = vec![0.0; d];
            for (k, xk) in x.iter_mut().enumerate() {
                if k != axis {
                    *xk = (code % (m + 1)) as f64 / m as f64;
                    code /= m + 1;
                }
            }
            (0..=n)
                .map(|i| {
                    x[axis] = i as f64 / n as f64;
                    partial.value(&x)
                })
                .collect()
        })
        .collect();
    partition_from_rows(&rows, eps, grid_exp)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "outcome", rename_all = "lowercase")]
pub enum StabilityCheck {
    Pass {
        probes: usize,
        /// Largest `|∂_± g − ∂f|` seen.
        max_deviation: f64,
    },
    Violation {
        point: f64,
        side: Side,
        estimate: f64,
        expected: f64,
    },
}

impl StabilityCheck {
    pub fn passed(&self) -> bool {
        matches!(self, StabilityCheck::Pass { .. })
    }
}

/// Checks `|∂_± g(x) − f'(x)| < ε` at each probe from one-sided difference
/// quotients of the convex function `g`; reports the first violation.
pub fn check_derivative_stability(
    derivative: &dyn Function1d,
    g: &dyn Function1d,
    eps: f64,
    probes: &[f64],
    steps: &[f64],
) -> Result<StabilityCheck, RegularityError> {
    let mut max_deviation: f64 = 0.0;
    for &x in probes {
        if !(eps..=1.0 - eps).contains(&x) {
            return Err(RegularityError::InvalidParameter(format!(
                "probe {x} outside [{eps}, {}]",
                1.0 - eps
            )));
        }
        let expected = derivative.eval(x);
        for side in [Side::Left, Side::Right] {
            let estimate = convex_one_sided_derivative(g, x, side, steps)?.value;
            let dev = (estimate - expected).abs();
            if !(dev < eps) {
                return Ok(StabilityCheck::Violation {
                    point: x,
                    side,
                    estimate,
                    expected,
                });
            }
            max_deviation = max_deviation.max(dev);
        }
    }
    Ok(StabilityCheck::Pass {
        probes: probes.len(),
        max_deviation,
    })
}
