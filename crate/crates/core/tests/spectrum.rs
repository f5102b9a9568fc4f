use convex_multifractal::constructions::{ConvexFunctionExpr, QuadraticBase, StaircaseParams};
use convex_multifractal::dyadic::DyadicRational as Dy;
use convex_multifractal::spectrum::{
    check_upper_bound, empirical_spectrum, theoretical_spectrum, SpectrumConfig, SpectrumCurve,
    SpectrumKind, SpectrumValue,
};
use convex_multifractal::FnNd;
use proptest::prelude::*;

proptest! {
    #[test]
    fn typical_never_exceeds_upper(d in 1usize..=4, h in 0.0f64..4.0) {
        let t = theoretical_spectrum(SpectrumKind::ConvexTypical, d, h).unwrap();
        let u = theoretical_spectrum(SpectrumKind::ConvexUpper, d, h).unwrap();
        prop_assert!(t.le(u));
    }

    #[test]
    fn typical_is_continuous_on_the_band(d in 1usize..=4, h in 1.0f64..2.0, dh in 0.0f64..1e-6) {
        let a = theoretical_spectrum(SpectrumKind::ConvexTypical, d, h).unwrap().finite().unwrap();
        let b = theoretical_spectrum(SpectrumKind::ConvexTypical, d, (h + dh).min(2.0)).unwrap().finite().unwrap();
        prop_assert!((a - b).abs() <= 2e-6);
    }

    #[test]
    fn values_stay_within_the_dimension(d in 1usize..=3, h in 0.0f64..5.0) {
        for kind in [SpectrumKind::ConvexUpper, SpectrumKind::ConvexTypical, SpectrumKind::Misv, SpectrumKind::MeasureTypical] {
            if let SpectrumValue::Finite(v) = theoretical_spectrum(kind, d, h).unwrap() {
                prop_assert!((0.0..=d as f64).contains(&v));
            }
        }
    }
}

#[test]
fn band_endpoints() {
    for d in 1..=3 {
        let at = |h| theoretical_spectrum(SpectrumKind::ConvexTypical, d, h).unwrap();
        assert_eq!(at(1.0), SpectrumValue::Finite(d as f64 - 1.0));
        assert_eq!(at(2.0), SpectrumValue::Finite(d as f64));
    }
}

#[test]
fn smooth_functions_land_in_the_cap_band() {
    let f =
        ConvexFunctionExpr::new(2, QuadraticBase::sum_of_squares(2, Dy::one()), vec![]).unwrap();
    let cfg = SpectrumConfig {
        grid_exp: 10,
        min_scale: Some(4),
        ..SpectrumConfig::default()
    };
    let c = empirical_spectrum(&f, &cfg).unwrap();
    assert!(c.populated().is_empty(), "{:?}", c.populated());
    let interior = c.interior.as_ref().unwrap();
    assert!(interior.cap_band.iter().all(|&n| n > 0));
}

#[test]
fn estimates_are_deterministic() {
    let p = StaircaseParams::new(2).unwrap();
    let f = FnNd::new(1, move |x: &[f64]| p.fbar_f64(x[0]) + x[0] * x[0]);
    let cfg = SpectrumConfig::with_grid(14);
    let a = empirical_spectrum(&f, &cfg).unwrap();
    let b = empirical_spectrum(&f, &cfg).unwrap();
    assert_eq!(a, b);
    assert!(check_upper_bound(&a, 1, 0.15).unwrap().passed());
}

// The derivative of a two-level staircase sum jumps on a finite set at the
// resolved scales: only bins near h = 0 fill, with dimension near 0.
#[test]
fn staircase_derivatives_sit_at_zero() {
    let (p, q) = (
        StaircaseParams::new(3).unwrap(),
        StaircaseParams::new(6).unwrap(),
    );
    let g = FnNd::new(1, move |x: &[f64]| p.gamma_f64(x[0]) + q.gamma_f64(x[0]));
    let c = empirical_spectrum(&g, &SpectrumConfig::with_grid(18)).unwrap();
    let populated = c.populated();
    assert!(!populated.is_empty());
    for (h, v) in populated {
        assert!(h <= 1.0 && (v - h).abs() <= 0.3, "bin {h}: {v}");
    }
}

#[test]
fn theoretical_curves_serialize() {
    let c = SpectrumCurve::theoretical(SpectrumKind::Misv, 2, &[0.0, 0.5, 1.5]).unwrap();
    let json = serde_json::to_value(&c).unwrap();
    assert_eq!(json["values"], serde_json::json!([1.0, 1.5, "-inf"]));
    let csv = c.to_csv();
    assert_eq!(csv.lines().count(), 4);
}
