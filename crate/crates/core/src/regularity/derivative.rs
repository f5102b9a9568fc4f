use serde::{Deserialize, Serialize};

use super::holder::{holder_estimate_1d, ExponentEstimate, HolderConfig};
use super::{Function1d, RegularityError};
use crate::FunctionNd;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Left,
    Right,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OneSidedDerivative {
    pub value: f64,
    /// Gap between the quotients at the two smallest steps. By convexity the
    /// derivative lies on the far side of the smallest-step quotient.
    pub bracket: f64,
    /// `(step, quotient)` from the largest step down.
    pub quotients: Vec<(f64, f64)>,
}

/// Steps `2^{-10}, …, 2^{-26}`.
pub fn default_steps() -> Vec<f64> {
    (10..=26).map(|n| 2f64.powi(-n)).collect()
}

/// One-sided derivative of a convex function at an interior point from
/// difference quotients, which are monotone in the step for convex input.
pub fn convex_one_sided_derivative(
    f: &dyn Function1d,
    t: f64,
    side: Side,
    steps: &[f64],
) -> Result<OneSidedDerivative, RegularityError> {
    let (lo, hi) = f.domain();
    if !(t > lo && t < hi) {
        return Err(RegularityError::Boundary(vec![t]));
    }
    let sign = match side {
        Side::Left => -1.0,
        Side::Right => 1.0,
    };
    let mut steps: Vec<f64> = steps
        .iter()
        .copied()
        .filter(|&h| h > 0.0 && (lo..=hi).contains(&(t + sign * h)))
        .collect();
    steps.sort_by(|a, b| b.total_cmp(a));
    steps.dedup();
    if steps.len() < 2 {
        return Err(RegularityError::InvalidParameter(
            "need at least two steps that stay inside the domain".into(),
        ));
    }
    let ft = f.eval(t);
    if !ft.is_finite() {
        return Err(RegularityError::NonFinite(vec![t]));
    }
    let mut quotients = Vec::with_capacity(steps.len());
    for &h in &steps {
        let s = t + sign * h;
        let v = f.eval(s);
        if !v.is_finite() {
            return Err(RegularityError::NonFinite(vec![s]));
        }
        let q = (v - ft) / (sign * h);
        if let Some(&(_, prev)) = quotients.last() {
            let slack = 16.0 * f64::EPSILON * (ft.abs() + v.abs()) / h;
            // Right quotients shrink and left quotients grow as the step shrinks.
            let violated = match side {
                Side::Right => q > prev + slack,
                Side::Left => q < prev - slack,
            };
            if violated {
                return Err(RegularityError::NotConvex { step: h });
            }
        }
        quotients.push((h, q));
    }
    let n = quotients.len();
    Ok(OneSidedDerivative {
        value: quotients[n - 1].1,
        bracket: (quotients[n - 1].1 - quotients[n - 2].1).abs(),
        quotients,
    })
}

/// `t ↦ f(x + t z)` on the largest interval `[-T, T]` keeping the line in
/// the cube.
pub struct Restriction<'a, F: FunctionNd + ?Sized> {
    f: &'a F,
    x: Vec<f64>,
    z: Vec<f64>,
    half_width: f64,
}

impl<F: FunctionNd + ?Sized> Restriction<'_, F> {
    pub fn half_width(&self) -> f64 {
        self.half_width
    }

    pub fn direction(&self) -> &[f64] {
        &self.z
    }
}

impl<F: FunctionNd + ?Sized> Function1d for Restriction<'_, F> {
    fn eval(&self, t: f64) -> f64 {
        let p: Vec<f64> = self
            .x
            .iter()
            .zip(&self.z)
            .map(|(a, b)| (a + t * b).clamp(0.0, 1.0))
            .collect();
        self.f.value(&p)
    }

    fn domain(&self) -> (f64, f64) {
        (-self.half_width, self.half_width)
    }
}

pub fn directional_restriction<'a, F: FunctionNd + ?Sized>(
    f: &'a F,
    x: &[f64],
    z: &[f64],
) -> Result<Restriction<'a, F>, RegularityError> {
    let d = f.dimension();
    if x.len() != d {
        return Err(RegularityError::DimensionMismatch {
            expected: d,
            got: x.len(),
        });
    }
    let norm = z.iter().map(|v| v * v).sum::<f64>().sqrt();
    if z.len() != d || (norm - 1.0).abs() > 1e-9 {
        return Err(RegularityError::BadDirection(d));
    }
    if x.iter().any(|v| !(0.0..=1.0).contains(v)) {
        return Err(RegularityError::OutOfDomain(x.to_vec()));
    }
    let mut half_width = f64::INFINITY;
    for (xi, zi) in x.iter().zip(z) {
        if *zi != 0.0 {
            half_width = half_width.min(xi.min(1.0 - xi) / zi.abs());
        }
    }
    if !(half_width > 0.0) {
        return Err(RegularityError::Boundary(x.to_vec()));
    }
    Ok(Restriction {
        f,
        x: x.to_vec(),
        z: z.to_vec(),
        half_width,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "outcome", rename_all = "lowercase")]
pub enum ShiftOutcome {
    Pass {
        h_f: f64,
        h_derivative: f64,
    },
    Deviation {
        h_f: f64,
        h_derivative: f64,
        deviation: f64,
    },
    Inconclusive {
        reason: String,
    },
}

/// Compares the exponent of `f` at `t` with one plus the exponent of its
/// derivative.
pub fn exponent_shift_check(
    f: &dyn Function1d,
    derivative: &dyn Function1d,
    t: f64,
    cfg: &HolderConfig,
    tolerance: f64,
) -> Result<ShiftOutcome, RegularityError> {
    let hf: ExponentEstimate = holder_estimate_1d(f, t, cfg)?;
    let hd = holder_estimate_1d(derivative, t, cfg)?;
    if hf.is_capped() || hd.is_capped() {
        return Ok(ShiftOutcome::Inconclusive {
            reason: "estimate at the exponent cap".into(),
        });
    }
    if !(1.0..2.0).contains(&hf.value) {
        return Ok(ShiftOutcome::Inconclusive {
            reason: format!("exponent {:.3} of f outside [1, 2)", hf.value),
        });
    }
    let deviation = (hf.value - hd.value - 1.0).abs();
    Ok(if deviation <= tolerance {
        ShiftOutcome::Pass {
            h_f: hf.value,
            h_derivative: hd.value,
        }
    } else {
        ShiftOutcome::Deviation {
            h_f: hf.value,
            h_derivative: hd.value,
            deviation,
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constructions::StaircaseParams;
    use crate::FnNd;

    #[test]
    fn kink_derivative_is_exact() {
        let f = |t: f64| (t - 0.5).abs();
        let d = convex_one_sided_derivative(&f, 0.5, Side::Right, &default_steps()).unwrap();
        assert_eq!(d.value, 1.0);
        assert_eq!(d.bracket, 0.0);
        let l = convex_one_sided_derivative(&f, 0.5, Side::Left, &default_steps()).unwrap();
        assert_eq!(l.value, -1.0);
    }

    #[test]
    fn square() {
        let f = |t: f64| t * t;
        for side in [Side::Left, Side::Right] {
            let d = convex_one_sided_derivative(&f, 0.25, side, &default_steps()).unwrap();
            assert!((d.value - 0.5).abs() <= d.bracket);
        }
    }

    #[test]
    fn staircase_plateau_value() {
        let p = StaircaseParams::new(2).unwrap();
        let f = move |t: f64| p.fbar_f64(t);
        let d = convex_one_sided_derivative(&f, 0.5, Side::Right, &default_steps()).unwrap();
        assert!((d.value - 0.125).abs() <= d.bracket.max(1e-12));
    }

    #[test]
    fn concave_input_is_rejected() {
        let f = |t: f64| -(t * t);
        assert!(matches!(
            convex_one_sided_derivative(&f, 0.5, Side::Right, &default_steps()),
            Err(RegularityError::NotConvex { .. })
        ));
        assert!(convex_one_sided_derivative(&f, 0.0, Side::Right, &default_steps()).is_err());
    }

    #[test]
    fn restriction() {
        let f = FnNd::new(2, |x: &[f64]| x[0] * x[0] + x[1] * x[1]);
        let r = directional_restriction(&f, &[0.5, 0.5], &[1.0, 0.0]).unwrap();
        assert_eq!(r.domain(), (-0.5, 0.5));
        for t in [0.0, 0.25, -0.25] {
            assert!((r.eval(t) - ((0.5 + t).powi(2) + 0.25)).abs() < 1e-15);
        }
        assert!(directional_restriction(&f, &[0.0, 0.5], &[1.0, 0.0]).is_err());
        assert!(directional_restriction(&f, &[0.5, 0.5], &[1.0, 1.0]).is_err());
        // Tangent to the boundary face is fine.
        assert!(directional_restriction(&f, &[0.0, 0.5], &[0.0, 1.0]).is_ok());
    }

    #[test]
    fn shift_check() {
        let cfg = HolderConfig::default();
        let f = |t: f64| (t - 0.5).abs().powf(1.5);
        let fp = |t: f64| 1.5 * (t - 0.5).signum() * (t - 0.5).abs().sqrt();
        assert!(matches!(
            exponent_shift_check(&f, &fp, 0.5, &cfg, 0.15).unwrap(),
            ShiftOutcome::Pass { .. }
        ));
        let sq = |t: f64| t * t;
        let lin = |t: f64| 2.0 * t;
        assert!(matches!(
            exponent_shift_check(&sq, &lin, 0.5, &cfg, 0.15).unwrap(),
            ShiftOutcome::Inconclusive { .. }
        ));
    }
}
