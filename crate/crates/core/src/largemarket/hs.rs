use super::sets::{mask_to_set, subset_sums, ENUMERATION_LIMIT};
use crate::convexsolve::{lp_solve, LinearProgram, Sense};
use crate::error::{Error, Result};
use crate::market::{FiniteMarket, SeparatingSet};
use crate::space::{DensityVector, FiniteProbSpace};

const MASS_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct HsSelection {
    /// `dQ0/dP`.
    pub q: DensityVector,
    /// Convex weights of `Q0` on the input measures.
    pub weights: Vec<f64>,
    /// `min Q0(A)` over events with `P(A) > 4 eps` (infinite when there is none).
    pub min_mass: f64,
    /// `eps² delta / 2`.
    pub bound: f64,
    pub cuts: usize,
}

/// Vertices of the separating polytope as densities `dQ/dP`.
pub fn separating_densities(market: &FiniteMarket) -> Result<Vec<DensityVector>> {
    SeparatingSet::of(market)
        .vertices()?
        .iter()
        .map(|q| DensityVector::from_measure(q, market.space()))
        .collect()
}

/// Selects `Q0` in the convex hull of `mset` maximising the smallest mass it
/// gives to events of `P`-probability above `4 eps`.
///
/// Requires that every event with `P(A) > eps` gets mass above `delta` from
/// some member of `mset`; this is checked over all events and a failure
/// names the smallest offending event. The result is certified to exceed
/// `eps² delta / 2` on every event with `P(A) > 4 eps`.
pub fn hs_select(space: &FiniteProbSpace, mset: &[DensityVector], eps: f64, delta: f64) -> Result<HsSelection> {
    if !(eps > 0.0 && delta > 0.0) {
        return Err(Error::Domain("eps and delta must be positive".into()));
    }
    if mset.is_empty() {
        return Err(Error::InvalidInput("the measure family is empty".into()));
    }
    let n = space.len();
    if n > ENUMERATION_LIMIT {
        return Err(Error::Unsupported(format!("selection is exhaustive up to {ENUMERATION_LIMIT} atoms, space has {n}")));
    }
    for d in mset {
        d.validate_probability(space)?;
    }
    let p = space.probs();
    let sp = subset_sums(p);
    let sq: Vec<Vec<f64>> = mset.iter().map(|d| subset_sums(&d.measure(space))).collect();
    let masks = sp.len();

    let mut violation: Option<(usize, f64)> = None;
    for mask in 0..masks {
        if sp[mask] <= eps + MASS_TOL {
            continue;
        }
        let best = sq.iter().map(|s| s[mask]).fold(f64::NEG_INFINITY, f64::max);
        if best <= delta {
            let smaller = violation.is_none_or(|(m, _)| mask.count_ones() < m.count_ones());
            if smaller {
                violation = Some((mask, best));
            }
        }
    }
    if let Some((mask, best)) = violation {
        return Err(Error::SelectionHypothesis { set: mask_to_set(mask, n), best });
    }

    let big: Vec<usize> = (0..masks).filter(|&m| sp[m] > 4.0 * eps + MASS_TOL).collect();
    let k = mset.len();
    let mix = |theta: &[f64], mask: usize| -> f64 { theta.iter().zip(&sq).map(|(t, s)| t * s[mask]).sum() };
    let worst = |theta: &[f64]| -> (usize, f64) {
        big.iter()
            .map(|&m| (m, mix(theta, m)))
            .fold((0, f64::INFINITY), |acc, c| if c.1 < acc.1 { c } else { acc })
    };
    let mut theta = vec![1.0 / k as f64; k];
    let mut cuts: Vec<usize> = Vec::new();
    if !big.is_empty() {
        loop {
            let (m, _) = worst(&theta);
            if cuts.contains(&m) {
                break;
            }
            cuts.push(m);
            // max t s.t. Σθ = 1, t <= Σ θ_k Q_k(A) on the cuts
            let mut obj = vec![0.0; k + 1];
            obj[k] = 1.0;
            let mut lp = LinearProgram::new(Sense::Maximize, obj);
            lp.free(k);
            let mut ones = vec![1.0; k];
            ones.push(0.0);
            lp.add_eq(ones, 1.0);
            for &c in &cuts {
                let mut row: Vec<f64> = sq.iter().map(|s| -s[c]).collect();
                row.push(1.0);
                lp.add_le(row, 0.0);
            }
            let (x, t) = lp_solve(&lp)?
                .optimal()
                .ok_or_else(|| Error::Numerical("selection LP has no optimum".into()))?;
            let next: Vec<f64> = x[..k].iter().map(|v| v.max(0.0)).collect();
            let total: f64 = next.iter().sum();
            theta = next.iter().map(|v| v / total).collect();
            if worst(&theta).1 >= t - 1e-12 || cuts.len() > masks {
                break;
            }
        }
    }
    let min_mass = worst(&theta).1;
    let bound = eps * eps * delta / 2.0;
    if !(min_mass > bound) {
        return Err(Error::Numerical(format!("selected measure gives mass {min_mass}, not above {bound}")));
    }
    let mut q = vec![0.0; n];
    for (t, d) in theta.iter().zip(mset) {
        for (qi, di) in q.iter_mut().zip(&d.values) {
            *qi += t * di;
        }
    }
    Ok(HsSelection { q: DensityVector::new(q), weights: theta, min_mass, bound, cuts: cuts.len() })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_reference_measure() {
        let sp = FiniteProbSpace::from_probs(&[0.1, 0.2, 0.3, 0.4]).unwrap();
        let s = hs_select(&sp, &[DensityVector::ones(4)], 0.1, 0.15).unwrap();
        assert_eq!(s.q, DensityVector::ones(4));
        assert!((s.min_mass - 0.5).abs() < 1e-12);
        assert!((s.bound - 0.00075).abs() < 1e-15);
        assert!(hs_select(&sp, &[DensityVector::ones(4)], 0.1, 0.5).is_err());
    }

    #[test]
    fn segment_of_half_supported_measures() {
        let sp = FiniteProbSpace::uniform(4).unwrap();
        let a = DensityVector::new(vec![2.0, 2.0, 0.0, 0.0]);
        let b = DensityVector::new(vec![0.0, 0.0, 2.0, 2.0]);
        // single atoms get exactly 0.5 from one endpoint, so delta must stay below it
        assert!(hs_select(&sp, &[a.clone(), b.clone()], 0.1, 0.5).is_err());
        let s = hs_select(&sp, &[a, b], 0.1, 0.45).unwrap();
        assert!((s.weights[0] - 0.5).abs() < 1e-9);
        // every event with P > 0.4 contains two atoms
        assert!((s.min_mass - 0.5).abs() < 1e-9);
        let sq = subset_sums(&s.q.measure(&sp));
        let ps = subset_sums(sp.probs());
        for m in 0..16 {
            if ps[m] > 0.4 {
                assert!(sq[m] > 0.0025);
            }
        }
    }

    #[test]
    fn violating_family_names_the_atom() {
        let sp = FiniteProbSpace::from_probs(&[0.3, 0.3, 0.4]).unwrap();
        let a = DensityVector::new(vec![1.0 / 0.6, 1.0 / 0.6, 0.0]);
        let e = hs_select(&sp, &[a], 0.2, 0.1).unwrap_err();
        assert_eq!(e, Error::SelectionHypothesis { set: vec![2], best: 0.0 });
    }

    #[test]
    fn large_eps_is_vacuous() {
        let sp = FiniteProbSpace::uniform(2).unwrap();
        let s = hs_select(&sp, &[DensityVector::new(vec![2.0, 0.0]), DensityVector::ones(2)], 0.3, 0.2).unwrap();
        assert_eq!(s.min_mass, f64::INFINITY);
        assert_eq!(s.cuts, 0);
    }
}
