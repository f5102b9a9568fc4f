use convex_multifractal::cantor::{auto_sequence, level_intervals, width_exponent};
use convex_multifractal::constructions::{
    ConvexFunctionExpr, QuadraticBase, StaircaseParams, Term,
};
use convex_multifractal::dyadic::DyadicRational as Dy;
use convex_multifractal::regularity::{
    build_cone_system, cone_probe, derivative_stability_radius, holder_estimate_1d,
    holder_estimate_nd, ConeProbeStatus, HolderConfig,
};
use convex_multifractal::FnNd;
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn cusp_exponents_are_recovered(h in 1.05f64..1.95, c in 0.2f64..0.8) {
        let f = move |t: f64| (t - c).abs().powf(h);
        let e = holder_estimate_1d(&f, c, &HolderConfig::default()).unwrap();
        prop_assert!((e.value - h).abs() <= 0.1, "{} vs {h}", e.value);
    }

    // Adding an affine function does not change the exponent.
    #[test]
    fn affine_terms_are_invisible(h in 1.1f64..1.9, a in -5.0f64..5.0, b in -5.0f64..5.0) {
        let f = move |t: f64| (t - 0.5).abs().powf(h);
        let g = move |t: f64| f(t) + a * t + b;
        let cfg = HolderConfig::default();
        let ef = holder_estimate_1d(&f, 0.5, &cfg).unwrap().value;
        let eg = holder_estimate_1d(&g, 0.5, &cfg).unwrap().value;
        prop_assert!((ef - eg).abs() <= 0.05, "{ef} vs {eg}");
    }

    #[test]
    fn stability_radius_shrinks_with_steeper_derivatives(k in 1.0f64..8.0) {
        let p = derivative_stability_radius(&move |x: f64| k * x, 0.1, 14).unwrap();
        let q = derivative_stability_radius(&move |x: f64| 2.0 * k * x, 0.1, 14).unwrap();
        prop_assert!(q.rho <= p.rho);
    }
}

// Every point of a single-generation level set lies within w of a jump of
// γ_l of size w^{h-1}. Over radii above w the oscillation is that jump, so
// the estimated exponent of the derivative is at most about h - 1.
#[test]
fn derivative_exponent_is_small_on_the_level_set() {
    for h in [1.5, 1.75] {
        let seq = auto_sequence(h, 1, 64).unwrap();
        let l = seq.entries()[0];
        let p = StaircaseParams::new(l).unwrap();
        let set = level_intervals(h, &seq, 1).unwrap();
        let e = width_exponent(h, l, 1) as u32;
        let cfg = HolderConfig::with_scales(12.max(e - 12)..e);
        for i in [0, set.len() / 3, set.len() - 2] {
            let (a, b) = set.interval(i);
            let mid = ((a + b) * Dy::new(1, -1)).to_f64_lossy();
            let g = move |t: f64| p.gamma_f64(t);
            let e = holder_estimate_1d(&g, mid, &cfg).unwrap();
            assert!(e.value <= h - 1.0 + 0.25, "h={h} i={i}: {}", e.value);
        }
    }
}

#[test]
fn spike_exponent_drops_to_zero_only_on_the_face() {
    let f = ConvexFunctionExpr::new(
        2,
        QuadraticBase::sum_of_squares(2, Dy::one()),
        vec![Term::phi(6)],
    )
    .unwrap();
    let cfg = HolderConfig::with_scales(4..=14);
    assert!(holder_estimate_nd(&f, &[0.0, 0.3], &cfg).unwrap().value <= 0.3);
    assert!(holder_estimate_nd(&f, &[0.5, 0.3], &cfg).unwrap().value >= 1.0);
}

// Singularities in one coordinate are invisible along the other axis, so
// the caps around that axis are never selected.
#[test]
fn cone_probe_avoids_the_smooth_axis() {
    let p = StaircaseParams::new(2).unwrap();
    let cs = build_cone_system(2, 8).unwrap();
    for axis in 0..2 {
        let f = FnNd::new(2, move |x: &[f64]| {
            p.fbar_f64(x[axis]) + 0.01 * (x[0] * x[0] + x[1] * x[1])
        });
        let mut smooth = [0.0; 2];
        smooth[1 - axis] = 1.0;
        let avoid = cs.caps_near_axis(&smooth);
        for j in 1..6 {
            let mut x = [0.5, 0.5];
            x[axis] = j as f64 / 16.0;
            let probe = cone_probe(&f, &x, &cs, 3, &HolderConfig::default(), 0.2).unwrap();
            match probe.status {
                ConeProbeStatus::Selected { index } => {
                    assert!(!avoid.contains(&index), "axis {axis}: {index}")
                }
                other => panic!("{other:?}"),
            }
        }
    }
}
