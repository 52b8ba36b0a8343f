mod common;

use common::{random_market_upto, random_probs};
use ftaplab::duality::{dual_objective, lambda_bracket, sup_utility_dual, sup_utility_primal, UtilityProblem};
use ftaplab::market::SeparatingSet;
use ftaplab::orlicz::{complementary, utility_from_young, YoungFunction};
use ftaplab::DensityVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn families() -> Vec<YoungFunction> {
    vec![YoungFunction::power(2.0).unwrap(), YoungFunction::power(3.0).unwrap(), YoungFunction::ExpMinusLinear]
}

/// Random instances with an indicator endowment and primal value below 0.
fn instances(seed: u64, count: usize) -> Vec<(UtilityProblem, YoungFunction)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::new();
    while out.len() < count {
        let m = random_market_upto(&mut rng, 6);
        let n = m.num_leaves();
        let r = random_probs(&mut rng, n);
        let r = DensityVector::from_measure(&r, m.space()).unwrap();
        let w: Vec<f64> = (0..n).map(|_| if rng.gen_bool(0.5) { 1.0 } else { 0.0 }).collect();
        let f = families()[rng.gen_range(0..3)].clone();
        let p = UtilityProblem::new(m, utility_from_young(&f).unwrap(), r, w).unwrap();
        if SeparatingSet::of(&p.market).vertices().unwrap().is_empty() {
            continue;
        }
        if sup_utility_primal(&p).unwrap().value < -1e-6 {
            out.push((p, f));
        }
    }
    out
}

#[test]
fn strong_duality_on_random_markets() {
    for (p, _) in instances(3, 100) {
        let primal = sup_utility_primal(&p).unwrap().value;
        let dual = sup_utility_dual(&p).unwrap();
        assert!(dual.attained);
        assert!((primal - dual.value).abs() <= 1e-6, "primal {primal} dual {}", dual.value);
        let q = dual.q.unwrap().measure(p.market.space());
        assert!(SeparatingSet::of(&p.market).contains(&q, 1e-8));
    }
}

#[test]
fn weak_duality_and_jensen_bound_at_random_points() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for (p, f) in instances(4, 30) {
        let primal = sup_utility_primal(&p).unwrap().value;
        let v = complementary(&f).unwrap();
        let verts = SeparatingSet::of(&p.market).vertices().unwrap();
        let indicator = p.w.iter().all(|x| *x == 0.0 || *x == 1.0);
        for _ in 0..20 {
            let mix = random_probs(&mut rng, verts.len());
            let q: Vec<f64> = (0..p.market.num_leaves())
                .map(|i| verts.iter().zip(&mix).map(|(v, t)| v[i] * t).sum())
                .collect();
            let lambda = rng.gen_range(0.01..5.0);
            let d = dual_objective(&p, &q, lambda).unwrap();
            assert!(primal <= d + 1e-10);
            if indicator {
                assert!(v.value(lambda) - lambda <= d + 1e-10);
            }
        }
    }
}

#[test]
fn dual_multiplier_stays_in_bracket() {
    for (p, f) in instances(9, 100) {
        let primal = sup_utility_primal(&p).unwrap().value;
        let delta = -0.5 * primal;
        let (l0, l1) = lambda_bracket(&f, delta).unwrap();
        let d = sup_utility_dual(&p).unwrap();
        assert!(d.lambda >= l0 - 1e-9 && d.lambda <= l1 + 1e-9, "{} not in [{l0}, {l1}]", d.lambda);
        let v = complementary(&f).unwrap();
        let q = d.q.unwrap().values;
        let r = &p.r.values;
        let probs = p.market.space().probs();
        let ball: f64 = (0..q.len()).map(|i| probs[i] * r[i] * v.value(delta * q[i] / r[i])).sum::<f64>() / (l1 - delta);
        assert!(ball <= 1.0 + 1e-9, "{ball}");
    }
}

#[test]
fn conjugate_is_nonnegative() {
    for f in families() {
        let v = complementary(&f).unwrap();
        for i in 0..200 {
            assert!(v.value(i as f64 * 0.05) >= 0.0);
        }
    }
}
