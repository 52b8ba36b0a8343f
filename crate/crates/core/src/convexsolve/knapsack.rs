//! Linear minimisation over D^eps = {w : 0 <= w <= 1, E_P[w] >= eps}.

use crate::error::{Error, Result};
use crate::space::FiniteProbSpace;

#[derive(Debug, Clone)]
pub struct ConstrainedClaimSet {
    pub eps: f64,
    pub space: FiniteProbSpace,
}

impl ConstrainedClaimSet {
    pub fn new(eps: f64, space: FiniteProbSpace) -> Result<Self> {
        if !(eps > 0.0) || !eps.is_finite() {
            return Err(Error::Domain(format!("eps must be positive, got {eps}")));
        }
        Ok(Self { eps, space })
    }

    pub fn is_empty(&self) -> bool {
        self.eps > 1.0 + 1e-12
    }

    pub fn contains(&self, w: &[f64], tol: f64) -> bool {
        w.len() == self.space.len()
            && w.iter().all(|&x| x >= -tol && x <= 1.0 + tol)
            && self.space.expect(w) >= self.eps - tol
    }
}

/// Minimises `sum_i z_i w_i` over the claim set by filling atoms in order of
/// increasing `z_i / p_i` (stable by index), the last one fractionally.
pub fn knap_min(z: &[f64], claims: &ConstrainedClaimSet) -> Result<(Vec<f64>, f64)> {
    let sp = &claims.space;
    sp.check_len(z)?;
    if z.iter().any(|&x| x < 0.0) {
        return Err(Error::InvalidInput("knapsack costs must be nonnegative".into()));
    }
    if claims.is_empty() {
        return Err(Error::Infeasible(format!(
            "D^eps is empty for eps = {}",
            claims.eps
        )));
    }
    let p = sp.probs();
    let mut order: Vec<usize> = (0..z.len()).collect();
    order.sort_by(|&a, &b| (z[a] / p[a]).partial_cmp(&(z[b] / p[b])).unwrap());
    let mut w = vec![0.0; z.len()];
    let mut need = claims.eps.min(1.0);
    for &i in &order {
        if need <= 0.0 {
            break;
        }
        let take = (need / p[i]).min(1.0);
        w[i] = take;
        need -= take * p[i];
        if take < 1.0 {
            break;
        }
    }
    if claims.eps >= 1.0 {
        // full mass forced: avoid round-off leaving an atom at 1 - 1e-16
        w.iter_mut().for_each(|x| *x = 1.0);
    }
    let value = z.iter().zip(&w).map(|(a, b)| a * b).sum();
    Ok((w, value))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn third() -> FiniteProbSpace {
        FiniteProbSpace::uniform(3).unwrap()
    }

    #[test]
    fn greedy_picks_cheapest_atom() {
        let c = ConstrainedClaimSet::new(1.0 / 3.0, third()).unwrap();
        let (w, v) = knap_min(&[3.0, 1.0, 2.0], &c).unwrap();
        assert!((w[1] - 1.0).abs() < 1e-12 && w[0] == 0.0 && w[2].abs() < 1e-12);
        assert!((v - 1.0).abs() < 1e-12);
    }

    #[test]
    fn full_mass() {
        let c = ConstrainedClaimSet::new(1.0, third()).unwrap();
        let (w, v) = knap_min(&[3.0, 1.0, 2.0], &c).unwrap();
        assert_eq!(w, vec![1.0; 3]);
        assert_eq!(v, 6.0);
    }

    #[test]
    fn constant_costs() {
        // single atom: value c * eps
        let c = ConstrainedClaimSet::new(0.5, FiniteProbSpace::uniform(1).unwrap()).unwrap();
        let (_, v) = knap_min(&[3.0], &c).unwrap();
        assert!((v - 1.5).abs() < 1e-15);
        // n uniform atoms: value c * eps * n
        let c = ConstrainedClaimSet::new(0.5, FiniteProbSpace::uniform(4).unwrap()).unwrap();
        let (_, v) = knap_min(&[3.0; 4], &c).unwrap();
        assert!((v - 6.0).abs() < 1e-12);
    }

    #[test]
    fn empty_set_is_infeasible() {
        let c = ConstrainedClaimSet::new(1.5, third()).unwrap();
        assert!(matches!(knap_min(&[1.0; 3], &c), Err(Error::Infeasible(_))));
    }

    #[test]
    fn ties_are_broken_by_index() {
        let c = ConstrainedClaimSet::new(1.0 / 3.0, third()).unwrap();
        let (w, _) = knap_min(&[1.0, 1.0, 1.0], &c).unwrap();
        assert!((w[0] - 1.0).abs() < 1e-12);
        assert_eq!(&w[1..], &[0.0, 0.0]);
    }
}
