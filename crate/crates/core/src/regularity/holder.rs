//! Pointwise Hölder exponents from local polynomial residuals.
//!
//! For each radius `r` the residual `E(r)` is the best uniform error of an
//! affine approximation of `f` on the ball of radius `r` around the point. The
//! exponent is the least-squares slope of `log E(r)` against `log r`.
//!
//! Two situations produce a capped estimate instead of a slope:
//! residuals at rounding level (the function is affine near the point), and
//! smooth points, where the quadratic residual decays at least half an order
//! faster than the affine one. When the quadratic residual decays faster but
//! the affine slope is below the cap, the quadratic slope is reported: the
//! affine fit alone cannot see past 2.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::{Function1d, RegularityError};
use crate::fit::{fit_line, max_ls_residual, minimax_affine_residual};
use crate::FunctionNd;

pub const MIN_SCALES: usize = 4;

/// Affine slopes at or above this are checked for smoothness.
const SMOOTH_CANDIDATE: f64 = 1.75;
/// Gain of the quadratic slope over the affine one that marks a smooth point.
const SMOOTH_GAIN: f64 = 0.5;
/// Residuals below `NOISE_ULPS · ε · max|f|` are rounding noise.
const NOISE_ULPS: f64 = 64.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct HolderConfig {
    /// Radii are `2^{-n}` for each `n` listed.
    pub scales: Vec<u32>,
    /// Samples on each side of the point per radius, in one dimension.
    pub samples_per_side: usize,
    /// Samples on each side per axis in `d ≥ 2`.
    pub samples_per_side_nd: usize,
    pub cap: f64,
}

impl Default for HolderConfig {
    fn default() -> Self {
        Self {
            scales: (4..=12).collect(),
            samples_per_side: 64,
            samples_per_side_nd: 8,
            cap: 3.0,
        }
    }
}

impl HolderConfig {
    pub fn with_scales(scales: impl IntoIterator<Item = u32>) -> Self {
        Self {
            scales: scales.into_iter().collect(),
            ..Self::default()
        }
    }

    fn radii(&self) -> Result<Vec<f64>, RegularityError> {
        if self.scales.len() < MIN_SCALES {
            return Err(RegularityError::TooFewScales {
                min: MIN_SCALES,
                got: self.scales.len(),
            });
        }
        if !(self.cap > 0.0) {
            return Err(RegularityError::InvalidParameter(format!(
                "cap {}",
                self.cap
            )));
        }
        let mut s = self.scales.clone();
        s.sort_unstable();
        s.dedup();
        if s.len() < MIN_SCALES || s.iter().any(|&n| n > 1000) {
            return Err(RegularityError::TooFewScales {
                min: MIN_SCALES,
                got: s.len(),
            });
        }
        Ok(s.into_iter().map(|n| 2f64.powi(-(n as i32))).collect())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CapReason {
    /// Residuals vanish at the probed scales.
    Polynomial,
    /// Smooth beyond the detectable range.
    Smooth,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExponentEstimate {
    pub point: Vec<f64>,
    pub value: f64,
    pub radii: Vec<f64>,
    /// Affine residual per radius.
    pub residuals: Vec<f64>,
    /// RMS residual of the log-log regression.
    pub fit_residual: f64,
    pub cap: Option<CapReason>,
}

impl ExponentEstimate {
    pub fn is_capped(&self) -> bool {
        self.cap.is_some()
    }
}

struct ScaleData {
    radius: f64,
    e1: f64,
    e2: f64,
    noise: f64,
}

fn decide(point: Vec<f64>, data: &[ScaleData], cap: f64) -> ExponentEstimate {
    let finest = data.last().expect("at least one scale");
    let radii: Vec<f64> = data.iter().map(|s| s.radius).collect();
    let residuals: Vec<f64> = data.iter().map(|s| s.e1).collect();
    let capped = |reason, fit_residual| ExponentEstimate {
        point: point.clone(),
        value: cap,
        radii: radii.clone(),
        residuals: residuals.clone(),
        fit_residual,
        cap: Some(reason),
    };
    let usable: Vec<&ScaleData> = data.iter().filter(|s| s.e1 > s.noise).collect();
    if finest.e1 <= finest.noise || usable.len() < MIN_SCALES {
        return capped(CapReason::Polynomial, 0.0);
    }
    let lx: Vec<f64> = usable.iter().map(|s| s.radius.ln()).collect();
    let ly: Vec<f64> = usable.iter().map(|s| s.e1.ln()).collect();
    let fit = fit_line(&lx, &ly).expect("distinct radii");
    let mut value = fit.slope;
    let mut fit_residual = fit.rms_residual;
    if value >= SMOOTH_CANDIDATE {
        let quad: Vec<&ScaleData> = usable.iter().copied().filter(|s| s.e2 > s.noise).collect();
        if finest.e2 <= finest.noise || quad.len() < MIN_SCALES {
            return capped(CapReason::Smooth, fit_residual);
        }
        let qx: Vec<f64> = quad.iter().map(|s| s.radius.ln()).collect();
        let qy: Vec<f64> = quad.iter().map(|s| s.e2.ln()).collect();
        let qfit = fit_line(&qx, &qy).expect("distinct radii");
        if qfit.slope >= value + SMOOTH_GAIN {
            value = qfit.slope;
            fit_residual = qfit.rms_residual;
        }
    }
    if value >= cap {
        return capped(CapReason::Smooth, fit_residual);
    }
    ExponentEstimate {
        point,
        value: value.max(0.0),
        radii,
        residuals,
        fit_residual,
        cap: None,
    }
}

fn noise_floor(max_abs: f64) -> f64 {
    NOISE_ULPS * f64::EPSILON * max_abs + f64::MIN_POSITIVE
}

/// Exponent of a function of one variable at `t`.
pub fn holder_estimate_1d(
    f: &dyn Function1d,
    t: f64,
    cfg: &HolderConfig,
) -> Result<ExponentEstimate, RegularityError> {
    let radii = cfg.radii()?;
    let (lo, hi) = f.domain();
    if !(t >= lo && t <= hi) {
        return Err(RegularityError::OutOfDomain(vec![t]));
    }
    let ft = f.eval(t);
    if !ft.is_finite() {
        return Err(RegularityError::NonFinite(vec![t]));
    }
    let m = cfg.samples_per_side.max(2) as i64;
    let mut data = Vec::with_capacity(radii.len());
    for &r in &radii {
        let mut pts = Vec::with_capacity(2 * m as usize + 1);
        let mut max_abs = ft.abs();
        for k in -m..=m {
            let dx = r * k as f64 / m as f64;
            let s = t + dx;
            if s < lo || s > hi {
                continue;
            }
            let v = f.eval(s);
            if !v.is_finite() {
                return Err(RegularityError::NonFinite(vec![s]));
            }
            max_abs = max_abs.max(v.abs());
            pts.push((dx / r, v - ft));
        }
        let e1 = minimax_affine_residual(&pts);
        let design = DMatrix::from_fn(pts.len(), 3, |i, j| pts[i].0.powi(j as i32));
        let y = DVector::from_iterator(pts.len(), pts.iter().map(|p| p.1));
        let e2 = max_ls_residual(&design, &y).unwrap_or(e1);
        data.push(ScaleData {
            radius: r,
            e1,
            e2,
            noise: noise_floor(max_abs),
        });
    }
    Ok(decide(vec![t], &data, cfg.cap))
}

/// Exponent of a function of `d` variables at `x`, from least-squares
/// residuals on a lattice filling the sup-norm ball `B(x, r) ∩ [0,1]^d`.
pub fn holder_estimate_nd(
    f: &dyn FunctionNd,
    x: &[f64],
    cfg: &HolderConfig,
) -> Result<ExponentEstimate, RegularityError> {
    let d = f.dimension();
    if x.len() != d {
        return Err(RegularityError::DimensionMismatch {
            expected: d,
            got: x.len(),
        });
    }
    if d == 0 || x.iter().any(|v| !(0.0..=1.0).contains(v)) {
        return Err(RegularityError::OutOfDomain(x.to_vec()));
    }
    let radii = cfg.radii()?;
    let fx = f.value(x);
    if !fx.is_finite() {
        return Err(RegularityError::NonFinite(x.to_vec()));
    }
    let m = cfg.samples_per_side_nd.max(1) as i64;
    let side = (2 * m + 1) as usize;
    let total = side.pow(d as u32);
    let n_quad = 1 + d + d * (d + 1) / 2;
    let mut data = Vec::with_capacity(radii.len());
    let mut p = vec![0.0; d];
    let mut u = vec![0.0; d];
    for &r in &radii {
        let mut rows: Vec<f64> = Vec::new();
        let mut ys: Vec<f64> = Vec::new();
        let mut max_abs = fx.abs();
        'lattice: for idx in 0..total {
            let mut rest = idx;
            for k in 0..d {
                let step = (rest % side) as i64 - m;
                rest /= side;
                u[k] = step as f64 / m as f64;
                p[k] = x[k] + r * u[k];
                if !(0.0..=1.0).contains(&p[k]) {
                    continue 'lattice;
                }
            }
            let v = f.value(&p);
            if !v.is_finite() {
                return Err(RegularityError::NonFinite(p.clone()));
            }
            max_abs = max_abs.max(v.abs());
            ys.push(v - fx);
            rows.push(1.0);
            rows.extend_from_slice(&u);
            for i in 0..d {
                for j in i..d {
                    rows.push(u[i] * u[j]);
                }
            }
        }
        let n = ys.len();
        let quad = DMatrix::from_row_slice(n, n_quad, &rows);
        let affine = quad.columns(0, 1 + d).into_owned();
        let y = DVector::from_vec(ys);
        let e1 = max_ls_residual(&affine, &y).unwrap_or(0.0);
        let e2 = max_ls_residual(&quad, &y).unwrap_or(e1);
        data.push(ScaleData {
            radius: r,
            e1,
            e2,
            noise: noise_floor(max_abs),
        });
    }
    Ok(decide(x.to_vec(), &data, cfg.cap))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::FnNd;

    fn cusp(h: f64) -> impl Fn(f64) -> f64 + Sync {
        move |t: f64| (t - 0.5).abs().powf(h)
    }

    #[test]
    fn cusps() {
        let cfg = HolderConfig::default();
        for h in [0.3, 1.5, 1.9] {
            let e = holder_estimate_1d(&cusp(h), 0.5, &cfg).unwrap();
            assert!((e.value - h).abs() < 0.1, "h={h} got {}", e.value);
            assert!(e.cap.is_none());
        }
    }

    #[test]
    fn smooth_and_polynomial_points() {
        let cfg = HolderConfig::default();
        let sq = holder_estimate_1d(&|t: f64| t * t, 0.5, &cfg).unwrap();
        assert_eq!(sq.cap, Some(CapReason::Smooth));
        assert_eq!(sq.value, 3.0);
        let quartic = holder_estimate_1d(&|t: f64| t.powi(4), 0.5, &cfg).unwrap();
        assert_eq!(quartic.cap, Some(CapReason::Smooth));
        let lin = holder_estimate_1d(&|t: f64| 2.0 * t - 1.0, 0.3, &cfg).unwrap();
        assert_eq!(lin.cap, Some(CapReason::Polynomial));
    }

    #[test]
    fn one_sided_at_boundary() {
        let cfg = HolderConfig::default();
        let e = holder_estimate_1d(&|t: f64| t.sqrt(), 0.0, &cfg).unwrap();
        assert!((e.value - 0.5).abs() < 0.1);
    }

    #[test]
    fn config_errors() {
        let cfg = HolderConfig::with_scales([4, 5, 6]);
        assert!(matches!(
            holder_estimate_1d(&|t: f64| t, 0.5, &cfg),
            Err(RegularityError::TooFewScales { .. })
        ));
        assert!(holder_estimate_1d(&|t: f64| t, 1.5, &HolderConfig::default()).is_err());
    }

    #[test]
    fn nd_kink() {
        let f = FnNd::new(2, |x: &[f64]| (x[0] - 0.5).abs() + 0.1 * x[1] * x[1]);
        let e = holder_estimate_nd(&f, &[0.5, 0.4], &HolderConfig::default()).unwrap();
        assert!((e.value - 1.0).abs() < 0.1, "{}", e.value);
        let g = FnNd::new(2, |x: &[f64]| x[0] * x[0] + x[1] * x[1]);
        let e = holder_estimate_nd(&g, &[0.5, 0.4], &HolderConfig::default()).unwrap();
        assert_eq!(e.cap, Some(CapReason::Smooth));
    }
}
