//! Small least-squares helpers shared by the estimators.

use nalgebra::{DMatrix, DVector};

/// Ordinary least-squares line `y = a + b x`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LineFit {
    pub intercept: f64,
    pub slope: f64,
    /// Root mean square of the residuals.
    pub rms_residual: f64,
}

/// `None` with fewer than two points or constant `x`.
pub fn fit_line(x: &[f64], y: &[f64]) -> Option<LineFit> {
    let n = x.len();
    if n < 2 || y.len() != n {
        return None;
    }
    let mx = x.iter().sum::<f64>() / n as f64;
    let my = y.iter().sum::<f64>() / n as f64;
    let sxx: f64 = x.iter().map(|v| (v - mx).powi(2)).sum();
    if sxx <= 0.0 {
        return None;
    }
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss: f64 = x
        .iter()
        .zip(y)
        .map(|(a, b)| (b - intercept - slope * a).powi(2))
        .sum();
    Some(LineFit {
        intercept,
        slope,
        rms_residual: (ss / n as f64).sqrt(),
    })
}

/// Least-squares slope of a line through the origin.
pub fn fit_through_origin(x: &[f64], y: &[f64]) -> Option<f64> {
    let sxx: f64 = x.iter().map(|v| v * v).sum();
    if x.is_empty() || x.len() != y.len() || sxx <= 0.0 {
        return None;
    }
    Some(x.iter().zip(y).map(|(a, b)| a * b).sum::<f64>() / sxx)
}

/// Maximum absolute residual of the least-squares fit of `y` by the columns
/// of `design` (one row per sample). `None` when the fit is rank deficient.
pub fn max_ls_residual(design: &DMatrix<f64>, y: &DVector<f64>) -> Option<f64> {
    let svd = design.clone().svd(true, true);
    let max_sv = svd.singular_values.max();
    if max_sv == 0.0 {
        return Some(y.amax());
    }
    let coef = svd.solve(y, max_sv * 1e-12).ok()?;
    let r = y - design * coef;
    Some(r.amax())
}

/// Smallest `max_i |y_i - a - b x_i|` over all lines, i.e. half the minimal
/// vertical width of a strip containing the points. Exact up to rounding:
/// the optimal slope is the slope of a convex-hull edge.
pub fn minimax_affine_residual(points: &[(f64, f64)]) -> f64 {
    if points.len() < 3 {
        return 0.0;
    }
    let mut pts = points.to_vec();
    pts.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
    let lower = half_hull(pts.iter().copied(), |c| c <= 0.0);
    let upper = half_hull(pts.iter().copied(), |c| c >= 0.0);
    let mut best = f64::INFINITY;
    let mut try_slope = |b: f64| {
        let (mut hi, mut lo) = (f64::NEG_INFINITY, f64::INFINITY);
        for p in upper.iter().chain(&lower) {
            let v = p.1 - b * p.0;
            hi = hi.max(v);
            lo = lo.min(v);
        }
        best = best.min(hi - lo);
    };
    for hull in [&lower, &upper] {
        for w in hull.windows(2) {
            let dx = w[1].0 - w[0].0;
            if dx > 0.0 {
                try_slope((w[1].1 - w[0].1) / dx);
            }
        }
    }
    if !best.is_finite() {
        // All x equal.
        let (mut hi, mut lo) = (f64::NEG_INFINITY, f64::INFINITY);
        for p in &pts {
            hi = hi.max(p.1);
            lo = lo.min(p.1);
        }
        best = hi - lo;
    }
    best / 2.0
}

/// Monotone-chain half hull; `drop` decides when the middle of three points
/// is removed given the cross product.
fn half_hull(pts: impl Iterator<Item = (f64, f64)>, drop: impl Fn(f64) -> bool) -> Vec<(f64, f64)> {
    let mut h: Vec<(f64, f64)> = Vec::new();
    for p in pts {
        while h.len() >= 2 {
            let (a, b) = (h[h.len() - 2], h[h.len() - 1]);
            let cross = (b.0 - a.0) * (p.1 - a.1) - (b.1 - a.1) * (p.0 - a.0);
            if drop(cross) {
                h.pop();
            } else {
                break;
            }
        }
        h.push(p);
    }
    h
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn line_fit() {
        let x = [0.0, 1.0, 2.0, 3.0];
        let y = [1.0, 3.0, 5.0, 7.0];
        let f = fit_line(&x, &y).unwrap();
        assert!((f.slope - 2.0).abs() < 1e-12 && (f.intercept - 1.0).abs() < 1e-12);
        assert!(f.rms_residual < 1e-12);
        assert!(fit_line(&[1.0, 1.0], &[0.0, 1.0]).is_none());
        assert_eq!(fit_through_origin(&[1.0, 2.0], &[2.0, 4.0]), Some(2.0));
    }

    #[test]
    fn minimax_of_abs() {
        let pts: Vec<(f64, f64)> = (-10..=10)
            .map(|i| (i as f64 / 10.0, (i as f64 / 10.0).abs()))
            .collect();
        assert!((minimax_affine_residual(&pts) - 0.5).abs() < 1e-12);
        let line: Vec<(f64, f64)> = (0..10).map(|i| (i as f64, 3.0 * i as f64 - 1.0)).collect();
        assert!(minimax_affine_residual(&line) < 1e-12);
    }

    #[test]
    fn ls_residual() {
        let xs: Vec<f64> = (0..5).map(|i| i as f64).collect();
        let design = DMatrix::from_fn(5, 2, |i, j| if j == 0 { 1.0 } else { xs[i] });
        let y = DVector::from_fn(5, |i, _| 2.0 * xs[i] + 1.0);
        assert!(max_ls_residual(&design, &y).unwrap() < 1e-12);
    }

    proptest! {
        #[test]
        fn minimax_beats_sampled_lines(ys in proptest::collection::vec(-1.0f64..1.0, 3..20), b in -3.0f64..3.0) {
            let pts: Vec<(f64, f64)> = ys.iter().enumerate().map(|(i, &y)| (i as f64 / 10.0, y)).collect();
            let e = minimax_affine_residual(&pts);
            let (hi, lo) = pts.iter().fold((f64::NEG_INFINITY, f64::INFINITY), |(h, l), p| {
                let v = p.1 - b * p.0;
                (h.max(v), l.min(v))
            });
            prop_assert!(e <= (hi - lo) / 2.0 + 1e-12);
        }
    }
}
