use super::family::{MarketFamily, MeasureSeq};
use super::sets::min_mass_subject_to;
use crate::error::Result;
use crate::orlicz::YoungFunction;
use rayon::prelude::*;

/// `{2^-1, ..., 2^-j}`.
pub fn default_eps_grid(j: usize) -> Vec<f64> {
    (1..=j as i32).map(|k| 2f64.powi(-k)).collect()
}

/// `{1, 2, 4, ..., 1024}`.
pub fn default_kappa_grid() -> Vec<f64> {
    (0..=10).map(|k| 2f64.powi(k)).collect()
}

/// Exponents `8, 7.95, ..., 1.05` searched by the Young-domination test.
pub fn power_grid() -> Vec<f64> {
    (0..=139).map(|i| (800 - 5 * i) as f64 / 100.0).collect()
}

/// `F(x) = x^p / p` with `sup_n E[F(density)] <= 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct YoungWitness {
    pub exponent: f64,
    pub young: YoungFunction,
    /// `sup_n E[F(density)]`.
    pub moment: f64,
    /// The bound holds for every index, not only on the prefix.
    pub all_n: bool,
}

/// One direction of a contiguity analysis. For `(Q^n) ◁ (P^n)` the
/// "dominated" measure is `Q` and the reference measure is `P`.
#[derive(Debug, Clone, PartialEq)]
pub struct DirectionProfile {
    /// `inf` over the prefix of the smallest reference mass of an event whose
    /// dominated mass is at least `eps`, one entry per grid point.
    pub delta: Vec<f64>,
    /// Fractional relaxation of `delta`.
    pub delta_lower: Vec<f64>,
    /// `[n-1][eps]` table behind `delta`.
    pub per_n: Vec<Vec<f64>>,
    /// Index attaining `delta` and the event there.
    pub worst: Vec<(usize, Vec<usize>)>,
    /// `sup_n E_ref[density 1{density > kappa}]` per grid point.
    pub ui: Vec<f64>,
    pub exact: bool,
    pub witness: Option<YoungWitness>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ContiguityProfile {
    pub eps_grid: Vec<f64>,
    pub kappa_grid: Vec<f64>,
    /// `(Q^n) ◁ (P^n)`.
    pub forward: DirectionProfile,
    /// `(P^n) ◁ (Q^n)`.
    pub backward: DirectionProfile,
    /// Statements hold for every `n` (constant sequence on a stationary family).
    pub all_n: bool,
}

/// Leaf weights `(dominated, reference)` per index.
type Pairs = Vec<(Vec<f64>, Vec<f64>)>;

fn pairs(family: &MarketFamily, q: &MeasureSeq, n: usize) -> Result<Pairs> {
    let markets = q.validate(family, n)?;
    Ok(markets
        .iter()
        .zip(&q.densities)
        .map(|(m, d)| (d.measure(m.space()), m.space().probs().to_vec()))
        .collect())
}

fn flip(p: &Pairs) -> Pairs {
    p.iter().map(|(a, b)| (b.clone(), a.clone())).collect()
}

/// `E_b[F(a/b)]` for `F(x) = x^p / p`, infinite when `a` charges a `b`-null atom.
fn power_moment(a: &[f64], b: &[f64], p: f64) -> f64 {
    a.iter()
        .zip(b)
        .map(|(ai, bi)| {
            if *bi > 0.0 {
                bi * (ai / bi).powf(p) / p
            } else if *ai > 0.0 {
                f64::INFINITY
            } else {
                0.0
            }
        })
        .sum()
}

fn power_witness(p: &Pairs, all_n: bool) -> Option<YoungWitness> {
    power_grid().into_iter().find_map(|e| {
        let moment = p.iter().map(|(a, b)| power_moment(a, b, e)).fold(0.0, f64::max);
        (moment <= 1.0).then(|| YoungWitness {
            exponent: e,
            young: YoungFunction::power(e).expect("grid exponents exceed one"),
            moment,
            all_n,
        })
    })
}

fn direction(p: &Pairs, eps_grid: &[f64], kappa_grid: &[f64], all_n: bool) -> DirectionProfile {
    let rows: Vec<Vec<(f64, f64, Vec<usize>, bool)>> = p
        .par_iter()
        .map(|(a, b)| {
            eps_grid
                .iter()
                .map(|&e| {
                    let s = min_mass_subject_to(a, b, e);
                    (s.value, s.lower, s.set, s.exact)
                })
                .collect()
        })
        .collect();
    let mut delta = Vec::new();
    let mut delta_lower = Vec::new();
    let mut worst = Vec::new();
    for j in 0..eps_grid.len() {
        let (mut best, mut low, mut arg) = (f64::INFINITY, f64::INFINITY, (0, Vec::new()));
        for (n, row) in rows.iter().enumerate() {
            if row[j].0 < best {
                best = row[j].0;
                arg = (n + 1, row[j].2.clone());
            }
            low = low.min(row[j].1);
        }
        delta.push(best);
        delta_lower.push(low);
        worst.push(arg);
    }
    let ui = kappa_grid
        .iter()
        .map(|&k| {
            p.iter()
                .map(|(a, b)| a.iter().zip(b).filter(|(ai, bi)| **ai > k * **bi).map(|(ai, _)| ai).sum::<f64>())
                .fold(0.0, f64::max)
        })
        .collect();
    DirectionProfile {
        delta,
        delta_lower,
        per_n: rows.iter().map(|r| r.iter().map(|c| c.0).collect()).collect(),
        worst,
        ui,
        exact: rows.iter().flatten().all(|c| c.3),
        witness: power_witness(p, all_n),
    }
}

/// Contiguity diagnostics of `(Q^n)` against `(P^n)` in both directions on
/// the prefix `1..=n`.
pub fn contiguity_profile(family: &MarketFamily, q: &MeasureSeq, n: usize) -> Result<ContiguityProfile> {
    contiguity_profile_with(family, q, n, &default_eps_grid(6), &default_kappa_grid())
}

pub fn contiguity_profile_with(
    family: &MarketFamily,
    q: &MeasureSeq,
    n: usize,
    eps_grid: &[f64],
    kappa_grid: &[f64],
) -> Result<ContiguityProfile> {
    let p = pairs(family, q, n)?;
    let all_n = family.is_stationary() && q.constant;
    Ok(ContiguityProfile {
        eps_grid: eps_grid.to_vec(),
        kappa_grid: kappa_grid.to_vec(),
        forward: direction(&p, eps_grid, kappa_grid, all_n),
        backward: direction(&flip(&p), eps_grid, kappa_grid, all_n),
        all_n,
    })
}

/// Largest grid exponent `p` with `sup_{n <= N} E_P[(dQ/dP)^p / p] <= 1`.
/// For a constant sequence on a stationary family the bound holds for all `n`.
pub fn young_domination(family: &MarketFamily, q: &MeasureSeq, n: usize) -> Result<Option<YoungWitness>> {
    let p = pairs(family, q, n)?;
    Ok(power_witness(&p, family.is_stationary() && q.constant))
}

/// The same test for `dP/dQ` under `Q`.
pub fn young_domination_reverse(family: &MarketFamily, q: &MeasureSeq, n: usize) -> Result<Option<YoungWitness>> {
    let p = pairs(family, q, n)?;
    Ok(power_witness(&flip(&p), family.is_stationary() && q.constant))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::market::FiniteMarket;
    use crate::space::DensityVector;

    fn uniform_family(sizes: &[usize]) -> MarketFamily {
        let ms = sizes
            .iter()
            .map(|&k| {
                let probs = vec![1.0 / k as f64; k];
                let s1 = (0..k).map(|i| vec![i as f64 - (k - 1) as f64 / 2.0]).collect();
                FiniteMarket::one_period(&probs, vec![0.0], s1).unwrap()
            })
            .collect();
        MarketFamily::explicit(ms).unwrap()
    }

    #[test]
    fn identical_measures() {
        let fam = MarketFamily::binomial(0.5, 1.0, -1.0, 2, 4).unwrap();
        let q = MeasureSeq::reference(&fam).unwrap();
        let prof = contiguity_profile(&fam, &q, 4).unwrap();
        assert!(prof.all_n);
        for (e, (d, l)) in prof.eps_grid.iter().zip(prof.forward.delta.iter().zip(&prof.forward.delta_lower)) {
            assert_eq!(l, e);
            assert!(d >= e);
        }
        assert_eq!(prof.forward.delta, prof.backward.delta);
        assert!(prof.forward.ui.iter().all(|u| *u == 0.0));
        let w = young_domination(&fam, &q, 4).unwrap().unwrap();
        assert_eq!(w.exponent, 8.0);
        assert!((w.moment - 1.0 / 8.0).abs() < 1e-15);
        assert!(w.all_n);
    }

    #[test]
    fn concentrating_densities_break_contiguity() {
        // Q^n puts half its mass on one atom of P-mass 1/n
        let sizes: Vec<usize> = (2..=9).collect();
        let fam = uniform_family(&sizes);
        let seq = MeasureSeq::new(
            sizes
                .iter()
                .map(|&k| {
                    let mut d = vec![0.5 * k as f64 / (k - 1) as f64; k];
                    d[0] = 0.5 * k as f64;
                    DensityVector::new(d)
                })
                .collect(),
        );
        let prof = contiguity_profile(&fam, &seq, sizes.len()).unwrap();
        // delta(1/2) is 1/9 at the last index and keeps shrinking
        assert!((prof.forward.delta[0] - 1.0 / 9.0).abs() < 1e-12);
        assert_eq!(prof.forward.worst[0], (8, vec![0]));
        // density 4.5 at the last index keeps the tail functional at 1/2 up to kappa = 4
        assert!(prof.forward.ui[..3].iter().all(|u| *u >= 0.5 - 1e-12));
        assert!(young_domination(&fam, &seq, sizes.len()).unwrap().is_none_or(|w| w.exponent < 2.0));
    }

    #[test]
    fn moment_blowup_has_no_witness() {
        // density n on one atom of mass 1/n
        let sizes: Vec<usize> = vec![2, 4, 8, 16, 32];
        let ms: Vec<FiniteMarket> = sizes
            .iter()
            .map(|&k| {
                let mut probs = vec![(1.0 - 1.0 / k as f64) / (k - 1) as f64; k];
                probs[0] = 1.0 / k as f64;
                FiniteMarket::one_period(&probs, vec![0.0], (0..k).map(|i| vec![i as f64]).collect()).unwrap()
            })
            .collect();
        let fam = MarketFamily::explicit(ms).unwrap();
        let seq = MeasureSeq::new(
            sizes
                .iter()
                .map(|&k| {
                    let mut d = vec![0.0; k];
                    d[0] = k as f64;
                    DensityVector::new(d)
                })
                .collect(),
        );
        assert!(young_domination(&fam, &seq, 5).unwrap().is_none());
        let prof = contiguity_profile(&fam, &seq, 5).unwrap();
        assert_eq!(prof.forward.ui[..5], [1.0; 5]);
        assert!((prof.forward.delta[0] - 1.0 / 32.0).abs() < 1e-12);
        // Q misses atoms of P-mass near one
        assert!(prof.backward.delta[0] == 0.0);
        assert!(young_domination_reverse(&fam, &seq, 5).unwrap().is_none());
    }

    #[test]
    fn bounded_densities_have_a_witness() {
        let fam = uniform_family(&[4, 4, 4]);
        let seq = MeasureSeq::new(vec![DensityVector::new(vec![1.5, 0.5, 1.5, 0.5]); 3]);
        let w = young_domination(&fam, &seq, 3).unwrap().unwrap();
        let f = |x: f64| x.powf(w.exponent) / w.exponent;
        assert!(0.5 * f(1.5) + 0.5 * f(0.5) <= 1.0);
        assert!(!w.all_n);
        assert!(w.exponent > 2.0);
    }

    #[test]
    fn isolated_conditional_measure_signals_non_contiguity() {
        let fam = MarketFamily::isolated_arbitrage(0.3, 3).unwrap();
        let seq = MeasureSeq::constant(DensityVector::new(vec![0.0, 1.0 / 0.7]), 3);
        let prof = contiguity_profile(&fam, &seq, 3).unwrap();
        // P(A) = 0.3 while Q(A) = 0: P is not dominated by Q
        assert_eq!(prof.backward.delta[1], 0.0);
        assert_eq!(prof.backward.worst[1].1, vec![0]);
        assert!(prof.backward.ui.iter().all(|u| (u - 0.3).abs() < 1e-15));
        assert!(prof.backward.witness.is_none());
        assert!(prof.forward.witness.is_some());
    }
}
