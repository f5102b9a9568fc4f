use convex_multifractal::constructions::{
    compose_generic, convexity_check, ConvexFunctionExpr, QuadraticBase, StaircaseParams, Term,
};
use convex_multifractal::dyadic::DyadicRational as Dy;
use proptest::prelude::*;

fn unit_dyadic(bits: i64) -> impl Strategy<Value = Dy> {
    (0i64..=(1 << bits)).prop_map(move |m| Dy::new(m, -bits))
}

proptest! {
    #[test]
    fn gamma_is_monotone(l in 2u32..=3, a in unit_dyadic(20), b in unit_dyadic(20)) {
        let p = StaircaseParams::new(l).unwrap();
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        prop_assert!(p.gamma(&lo).unwrap() <= p.gamma(&hi).unwrap());
    }

    // f̄ is the antiderivative of a non-decreasing γ, so every chord slope
    // is squeezed between γ at the two ends.
    #[test]
    fn chord_slopes_bracket_gamma(l in 2u32..=3, a in unit_dyadic(24), b in unit_dyadic(24)) {
        prop_assume!(a != b);
        let p = StaircaseParams::new(l).unwrap();
        let (lo, hi) = if a < b { (a, b) } else { (b, a) };
        let rise = p.fbar(&hi).unwrap() - p.fbar(&lo).unwrap();
        let run = &hi - &lo;
        prop_assert!(p.gamma(&lo).unwrap() * &run <= rise);
        prop_assert!(rise <= p.gamma(&hi).unwrap() * &run);
    }

    #[test]
    fn float_paths_track_exact_values(l in 2u32..=4, x in 0.0f64..=1.0) {
        let p = StaircaseParams::new(l).unwrap();
        let d = Dy::from_f64(x).unwrap();
        let g = p.gamma(&d).unwrap().to_f64_lossy();
        let f = p.fbar(&d).unwrap().to_f64_lossy();
        prop_assert!((p.gamma_f64(x) - g).abs() <= 1e-12);
        prop_assert!((p.fbar_f64(x) - f).abs() <= 1e-12);
    }

    #[test]
    fn generic_composites_evaluate_exactly(x in 0.0f64..=1.0, y in 0.0f64..=1.0) {
        let f = compose_generic(2, QuadraticBase::sum_of_squares(2, Dy::one()), &[3, 6]).unwrap();
        let exact = f.eval_exact(&[Dy::from_f64(x).unwrap(), Dy::from_f64(y).unwrap()]).unwrap();
        prop_assert!((f.eval(&[x, y]).unwrap() - exact.to_f64_lossy()).abs() <= 1e-12);
    }
}

#[test]
fn json_round_trip_preserves_values() {
    let child = ConvexFunctionExpr::new(1, QuadraticBase::zero(), vec![Term::fbar(2)]).unwrap();
    let f = ConvexFunctionExpr::new(
        1,
        QuadraticBase::sum_of_squares(1, Dy::new(1, -2)),
        vec![
            Term::fbar(3),
            Term::Mollified {
                lambda: Dy::new(1, -3),
                nodes_exp: 5,
                child: Box::new(child),
            },
        ],
    )
    .unwrap();
    let back = ConvexFunctionExpr::from_json(&f.to_json()).unwrap();
    assert_eq!(back, f);
    for x in [0.0, 0.3, 0.77, 1.0] {
        assert_eq!(back.eval(&[x]).unwrap(), f.eval(&[x]).unwrap());
    }
}

#[test]
fn composites_pass_the_exact_convexity_check() {
    let f = compose_generic(2, QuadraticBase::zero(), &[3, 6]).unwrap();
    for axis in 0..2 {
        let c = convexity_check(&f, axis, 6).unwrap();
        assert!(c.exact && c.is_convex(), "{:?}", c.witness);
    }
}

#[test]
fn concave_base_is_caught() {
    let f = ConvexFunctionExpr::new_unchecked(
        1,
        QuadraticBase::sum_of_squares(1, Dy::from(-1)),
        vec![Term::phi(5)],
    );
    let c = convexity_check(&f, 0, 8).unwrap();
    assert!(!c.is_convex());
}
