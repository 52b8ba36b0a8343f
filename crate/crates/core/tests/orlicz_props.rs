use ftaplab::orlicz::{complementary, luxemburg_norm, polar_gauge, YoungFunction};
use ftaplab::FiniteProbSpace;
use proptest::prelude::*;

fn young() -> impl Strategy<Value = YoungFunction> {
    prop_oneof![
        (1.2f64..5.0).prop_map(|p| YoungFunction::power(p).unwrap()),
        Just(YoungFunction::ExpMinusLinear),
        Just(YoungFunction::Entropy),
        (1.5f64..4.0, 0.2f64..3.0, 0.5f64..2.0)
            .prop_map(|(p, a, b)| YoungFunction::scaled(YoungFunction::power(p).unwrap(), a, b).unwrap()),
    ]
}

fn space_and_vec(max: usize) -> impl Strategy<Value = (FiniteProbSpace, Vec<f64>)> {
    (1..=max).prop_flat_map(|n| {
        (prop::collection::vec(0.05f64..1.0, n), prop::collection::vec(-3.0f64..3.0, n)).prop_map(|(w, g)| {
            let t: f64 = w.iter().sum();
            let p: Vec<f64> = w.iter().map(|x| x / t).collect();
            (FiniteProbSpace::from_probs(&p).unwrap(), g)
        })
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn fenchel_young(f in young(), x in 0.0f64..4.0, y in 0.0f64..4.0) {
        let g = complementary(&f).unwrap();
        prop_assert!(f.value(x) + g.value(y) >= x * y - 1e-9 * (1.0 + x * y));
        let s = f.derivative(x);
        let gap = f.value(x) + g.value(s) - x * s;
        prop_assert!(gap.abs() <= 1e-7 * (1.0 + x * s), "equality case gap {gap}");
    }

    #[test]
    fn conjugation_is_an_involution(f in young(), x in 0.0f64..3.0) {
        let back = complementary(&complementary(&f).unwrap()).unwrap();
        prop_assert!((back.value(x) - f.value(x)).abs() <= 1e-6 * (1.0 + f.value(x)));
    }

    #[test]
    fn midpoint_convexity(f in young(), a in 0.0f64..5.0, b in 0.0f64..5.0) {
        prop_assert!(f.value(0.5 * (a + b)) <= 0.5 * (f.value(a) + f.value(b)) + 1e-9);
    }

    #[test]
    fn holder_with_factor_two(f in young(), (space, u) in space_and_vec(10), seed in 0u64..1000) {
        let g = complementary(&f).unwrap();
        let v: Vec<f64> = u.iter().enumerate().map(|(i, x)| ((i as f64 + 1.0) * (seed as f64 + 0.5)).sin() * 2.0 + 0.1 * x).collect();
        let lhs = space.expect(&u.iter().zip(&v).map(|(a, b)| (a * b).abs()).collect::<Vec<_>>());
        let rhs = 2.0 * luxemburg_norm(&u, &space, &f).unwrap() * luxemburg_norm(&v, &space, &g).unwrap();
        prop_assert!(lhs <= rhs * (1.0 + 1e-9) + 1e-12);
    }

    #[test]
    fn luxemburg_norm_is_homogeneous(f in young(), (space, u) in space_and_vec(8), c in -4.0f64..4.0) {
        let base = luxemburg_norm(&u, &space, &f).unwrap();
        let scaled: Vec<f64> = u.iter().map(|x| c * x).collect();
        let got = luxemburg_norm(&scaled, &space, &f).unwrap();
        prop_assert!((got - c.abs() * base).abs() <= 1e-9 * (1.0 + base));
    }

    #[test]
    fn gauge_sandwich(f in young(), (space, g) in space_and_vec(10)) {
        let conj = complementary(&f).unwrap();
        let norm = luxemburg_norm(&g, &space, &conj).unwrap();
        let gauge = polar_gauge(&g, &space, &f).unwrap();
        prop_assert!(norm <= gauge * (1.0 + 1e-7) + 1e-12, "{norm} > {gauge}");
        prop_assert!(gauge <= 2.0 * norm * (1.0 + 1e-7) + 1e-12, "{gauge} > 2*{norm}");
    }
}

#[test]
fn gauge_of_constant_hits_upper_bound() {
    let space = FiniteProbSpace::uniform(4).unwrap();
    let f = YoungFunction::power(2.0).unwrap();
    let gauge = polar_gauge(&[1.0; 4], &space, &f).unwrap();
    assert!((gauge - 2f64.sqrt()).abs() < 1e-9);
    let norm = luxemburg_norm(&[1.0; 4], &space, &complementary(&f).unwrap()).unwrap();
    assert!((gauge - 2.0 * norm).abs() < 1e-9);
}
