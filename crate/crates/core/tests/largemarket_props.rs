mod common;

use common::{random_market_upto, random_probs};
use ftaplab::convexsolve::{barrier_minimize, BarrierOptions, SmoothConvex};
use ftaplab::largemarket::*;
use ftaplab::market::{check_na, FiniteMarket, SeparatingSet};
use ftaplab::orlicz::YoungFunction;
use ftaplab::{DensityVector, FiniteProbSpace};
use nalgebra::DMatrix;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn probs(n: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(0.01f64..1.0, n).prop_map(|w| {
        let t: f64 = w.iter().sum();
        w.into_iter().map(|x| x / t).collect()
    })
}

fn mass(v: &[f64], set: &[usize]) -> f64 {
    set.iter().map(|i| v[*i]).sum()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(500))]

    #[test]
    fn extremal_set_matches_enumeration(
        (a, b) in (1usize..=12).prop_flat_map(|n| (probs(n), probs(n))),
        level in 0.0f64..1.0,
    ) {
        let got = min_mass_subject_to(&a, &b, level);
        let (_, best) = exhaustive_min_mass(&a, &b, level).unwrap();
        prop_assert!(got.exact);
        prop_assert!((got.value - best).abs() < 1e-12);
        prop_assert!(mass(&a, &got.set) >= level - 1e-12);
        prop_assert!(got.lower <= got.value + 1e-12);
    }

    #[test]
    fn threshold_sets_are_optimal_at_their_level((a, b) in (1usize..=12).prop_flat_map(|n| (probs(n), probs(n)))) {
        for t in threshold_sets(&a, &b) {
            let (_, best) = exhaustive_min_mass(&a, &b, mass(&a, &t)).unwrap();
            prop_assert!((mass(&b, &t) - best).abs() < 1e-12);
        }
    }
}

/// `E_R[F(s)]` over `(xi, w, s)` with `s >= w - B xi`, `s >= 0`,
/// `0 <= w <= 1`, `E_P[w] >= eps`.
struct JointShortfall<'a> {
    f: &'a YoungFunction,
    r: &'a [f64],
    k: usize,
}

impl SmoothConvex for JointShortfall<'_> {
    fn dim(&self) -> usize {
        self.k + 2 * self.r.len()
    }
    fn value(&self, x: &[f64]) -> f64 {
        let s = &x[self.k + self.r.len()..];
        s.iter().zip(self.r).map(|(si, ri)| ri * self.f.value(si.max(0.0))).sum()
    }
    fn gradient(&self, x: &[f64]) -> Vec<f64> {
        let mut g = vec![0.0; self.dim()];
        let off = self.k + self.r.len();
        for (i, ri) in self.r.iter().enumerate() {
            g[off + i] = ri * self.f.derivative(x[off + i].max(0.0));
        }
        g
    }
    fn hessian(&self, x: &[f64]) -> DMatrix<f64> {
        let mut h = DMatrix::zeros(self.dim(), self.dim());
        let off = self.k + self.r.len();
        for (i, ri) in self.r.iter().enumerate() {
            h[(off + i, off + i)] = (ri * self.f.second_derivative(x[off + i].max(1e-300))).min(1e14);
        }
        h
    }
}

fn joint_oracle(m: &FiniteMarket, r: &[f64], eps: f64, f: &YoungFunction) -> f64 {
    let b = m.gains_basis();
    let (k, n) = (b.ncols(), m.num_leaves());
    let p = m.space().probs();
    let dim = k + 2 * n;
    let mut a = Vec::new();
    let mut rhs = Vec::new();
    for i in 0..n {
        // w_i - B_i xi - s_i <= 0
        let mut row = vec![0.0; dim];
        for (j, bij) in b.row(i).iter().enumerate() {
            row[j] = -bij;
        }
        row[k + i] = 1.0;
        row[k + n + i] = -1.0;
        a.push(row);
        rhs.push(0.0);
        for (col, sign, bound) in [(k + n + i, -1.0, 0.0), (k + i, -1.0, 0.0), (k + i, 1.0, 1.0)] {
            let mut row = vec![0.0; dim];
            row[col] = sign;
            a.push(row);
            rhs.push(bound);
        }
    }
    let mut row = vec![0.0; dim];
    for i in 0..n {
        row[k + i] = -p[i];
    }
    a.push(row);
    rhs.push(-eps);
    let w0 = 0.5 * (1.0 + eps);
    let mut x0 = vec![0.0; k];
    x0.extend(vec![w0; n]);
    x0.extend(vec![w0 + 1.0; n]);
    let obj = JointShortfall { f, r, k };
    -barrier_minimize(&obj, &a, &rhs, x0, &BarrierOptions::default()).unwrap().value
}

#[test]
fn worst_case_matches_joint_primal() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let youngs = [YoungFunction::power(2.0).unwrap(), YoungFunction::power(3.0).unwrap(), YoungFunction::ExpMinusLinear];
    let mut checked = 0;
    while checked < 40 {
        let m = random_market_upto(&mut rng, 8);
        if !check_na(&m).unwrap().holds {
            continue;
        }
        let n = m.num_leaves();
        let rw = random_probs(&mut rng, n);
        let r = DensityVector::from_measure(&rw, m.space()).unwrap();
        let eps = rng.gen_range(0.05..0.95);
        let f = &youngs[checked % youngs.len()];
        let wc = namfl_worstcase(&m, &r, eps, f).unwrap();
        let oracle = joint_oracle(&m, &rw, eps, f);
        assert!(
            (wc.value - oracle).abs() <= 1e-5 * (1.0 + oracle.abs()),
            "minimax {} vs joint primal {oracle} ({f}, eps {eps})",
            wc.value
        );
        checked += 1;
    }
}

#[test]
fn free_lunch_survives_measure_change() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let f = YoungFunction::power(2.0).unwrap();
    let mut checked = 0;
    while checked < 40 {
        let m = random_market_upto(&mut rng, 10);
        if check_na(&m).unwrap().holds {
            continue;
        }
        let ones = DensityVector::ones(m.num_leaves());
        let Some(fl) = namfl_worstcase(&m, &ones, 1e-3, &f).unwrap().free_lunch else { continue };
        let level = m.space().expect(&fl.w);
        let new = random_probs(&mut rng, m.num_leaves());
        let c = new.iter().zip(m.space().probs()).map(|(q, p)| q / p).fold(f64::INFINITY, f64::min);
        let changed = m.with_leaf_measure(&new).unwrap();
        assert!(changed.space().expect(&fl.w) >= c * level - 1e-12);
        let wc = namfl_worstcase(&changed, &ones, c * level * 0.999, &f).unwrap();
        assert!(wc.free_lunch.is_some() && wc.value == 0.0);
        checked += 1;
    }
}

#[test]
fn separation_witness_transfers_under_equivalent_measures() {
    let mut rng = ChaCha8Rng::seed_from_u64(23);
    let base = YoungFunction::power(2.0).unwrap();
    let mut checked = 0;
    while checked < 20 {
        let m = random_market_upto(&mut rng, 6);
        if !check_na(&m).unwrap().holds {
            continue;
        }
        let eps = rng.gen_range(0.1..0.6);
        if nafl_check(&m, eps, &base).unwrap().status != NaflStatus::Witness {
            continue;
        }
        let new = random_probs(&mut rng, m.num_leaves());
        let c = new.iter().zip(m.space().probs()).map(|(q, p)| q / p).fold(f64::INFINITY, f64::min);
        let changed = m.with_leaf_measure(&new).unwrap();
        let found = (0..30).any(|j| {
            let f = YoungFunction::scaled(base.clone(), 2f64.powi(j), 1.0).unwrap();
            nafl_check(&changed, c * eps, &f).unwrap().status == NaflStatus::Witness
        });
        assert!(found, "no witness for any scaled Young function after the change of measure");
        checked += 1;
    }
}

fn random_density<R: Rng>(rng: &mut R, space: &FiniteProbSpace) -> DensityVector {
    let q = random_probs(rng, space.len());
    DensityVector::from_measure(&q, space).unwrap()
}

#[test]
fn selection_bound_holds_exhaustively() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..30 {
        let n = rng.gen_range(2..=9);
        let space = FiniteProbSpace::from_probs(&random_probs(&mut rng, n)).unwrap();
        let mset: Vec<DensityVector> = (0..rng.gen_range(1..=4)).map(|_| random_density(&mut rng, &space)).collect();
        let eps = rng.gen_range(0.02..0.2);
        let measures: Vec<Vec<f64>> = mset.iter().map(|d| d.measure(&space)).collect();
        let mut hyp = f64::INFINITY;
        for mask in 1usize..1 << n {
            let set: Vec<usize> = (0..n).filter(|i| mask >> i & 1 == 1).collect();
            if space.mass(&set) > eps {
                hyp = hyp.min(measures.iter().map(|q| mass(q, &set)).fold(0.0, f64::max));
            }
        }
        let delta = 0.9 * hyp;
        let sel = hs_select(&space, &mset, eps, delta).unwrap();
        let q = sel.q.measure(&space);
        for mask in 1usize..1 << n {
            let set: Vec<usize> = (0..n).filter(|i| mask >> i & 1 == 1).collect();
            if space.mass(&set) > 4.0 * eps {
                assert!(mass(&q, &set) > eps * eps * delta / 2.0);
            }
        }
    }
}

#[test]
fn build_on_random_explicit_families() {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let mut built = 0;
    while built < 5 {
        let markets: Vec<FiniteMarket> = (0..3).map(|_| random_market_upto(&mut rng, 6)).collect();
        if !markets.iter().all(|m| check_na(m).unwrap().holds) {
            continue;
        }
        let family = MarketFamily::explicit(markets.clone()).unwrap();
        let config = BuildConfig { levels: 3, ..BuildConfig::default() };
        let out = match build_bicontiguous(&family, &config) {
            Ok(o) => o,
            Err(ftaplab::Error::MarketFreeLunch { .. }) => continue,
            Err(e) => panic!("{e}"),
        };
        assert!(out.mixture.remainder <= 0.125 + 1e-15);
        for (m, d) in markets.iter().zip(&out.seq.densities) {
            d.validate_probability(m.space()).unwrap();
            assert!(d.is_strictly_positive());
            assert!(SeparatingSet::of(m).contains(&d.measure(m.space()), 1e-8));
        }
        assert!(out.forward_witness.is_some() && out.backward_witness.is_some());
        built += 1;
    }
}
