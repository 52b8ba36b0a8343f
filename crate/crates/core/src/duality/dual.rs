use super::primal::UtilityProblem;
use crate::convexsolve::{min_over_cone, BarrierOptions, ConeObjective};
use crate::error::{Error, Result};
use crate::market::{FiniteMarket, SeparatingSet};
use crate::orlicz::{conjugate_utility, YoungFunction};
use crate::space::DensityVector;
use nalgebra::DMatrix;

#[derive(Debug, Clone, PartialEq)]
pub struct DualSolution {
    /// Optimal separating measure as density dQ/dP; `None` when the infimum
    /// is only approached as `lambda -> 0`.
    pub q: Option<DensityVector>,
    pub lambda: f64,
    pub value: f64,
    pub attained: bool,
    /// Certified bound on the distance of `value` to the infimum.
    pub gap: f64,
}

/// `E_R[v(z) - w z]` as a function of `z = lambda dQ/dR`.
pub(crate) struct DualFunctional<'a> {
    pub v: &'a YoungFunction,
    pub r: &'a [f64],
    pub w: &'a [f64],
}

impl ConeObjective for DualFunctional<'_> {
    fn value(&self, z: &[f64]) -> f64 {
        z.iter()
            .zip(self.r.iter().zip(self.w))
            .map(|(zi, (ri, wi))| ri * (self.v.value(zi.max(0.0)) - wi * zi))
            .sum()
    }

    fn gradient(&self, z: &[f64]) -> Vec<f64> {
        z.iter()
            .zip(self.r.iter().zip(self.w))
            .map(|(zi, (ri, wi))| ri * (self.v.derivative(zi.max(0.0)) - wi))
            .collect()
    }

    fn hessian(&self, z: &[f64]) -> DMatrix<f64> {
        let d: Vec<f64> = z
            .iter()
            .zip(self.r)
            .map(|(zi, ri)| if *zi > 0.0 { (ri * self.v.second_derivative(*zi)).min(1e14) } else { 0.0 })
            .collect();
        DMatrix::from_diagonal(&nalgebra::DVector::from_vec(d))
    }
}

/// Dual objective `E_R[-lambda (dQ/dR) w + v(lambda dQ/dR)]` at the
/// separating measure with leaf weights `q`.
pub fn dual_objective(prob: &UtilityProblem, q: &[f64], lambda: f64) -> Result<f64> {
    let v = conjugate_utility(&prob.u)?;
    let r = prob.belief_weights();
    prob.market.space().check_len(q)?;
    let z: Vec<f64> = q.iter().zip(&r).map(|(qi, ri)| lambda * qi / ri).collect();
    Ok(DualFunctional { v: &v, r: &r, w: &prob.w }.value(&z))
}

/// Cone generators `q_k / r` for the vertices `q_k` of the separating polytope.
pub(crate) fn dual_generators(market: &FiniteMarket, r: &[f64]) -> Result<Vec<DensityVector>> {
    let vertices = SeparatingSet::of(market).vertices()?;
    if vertices.is_empty() {
        return Err(Error::Infeasible("the market has no separating measure".into()));
    }
    Ok(vertices
        .into_iter()
        .map(|q| DensityVector::new(q.iter().zip(r).map(|(qi, ri)| qi / ri).collect()))
        .collect())
}

/// Minimises the dual objective jointly over separating measures and
/// `lambda > 0`, parametrised by `z = lambda dQ/dR` in the cone spanned by
/// the separating polytope's vertices. Only utilities built from a Young
/// function are supported.
pub fn sup_utility_dual(prob: &UtilityProblem) -> Result<DualSolution> {
    let v = conjugate_utility(&prob.u)?;
    let r = prob.belief_weights();
    let gens = dual_generators(&prob.market, &r)?;
    let obj = DualFunctional { v: &v, r: &r, w: &prob.w };
    let sol = min_over_cone(&obj, &gens, &BarrierOptions::default())?;
    let Some(z) = sol.point.filter(|_| sol.attained) else {
        return Ok(DualSolution { q: None, lambda: 0.0, value: sol.value, attained: false, gap: sol.gap });
    };
    let lambda: f64 = z.iter().zip(&r).map(|(zi, ri)| zi * ri).sum();
    let weights: Vec<f64> = z.iter().zip(&r).map(|(zi, ri)| zi * ri / lambda).collect();
    let q = DensityVector::from_measure(&weights, prob.market.space())?;
    Ok(DualSolution { q: Some(q), lambda, value: sol.value, attained: true, gap: sol.gap })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::duality::sup_utility_primal;
    use crate::orlicz::{utility_from_young, UtilityFunction};

    fn problem(w: Vec<f64>) -> UtilityProblem {
        let m = FiniteMarket::one_period(&[0.5, 0.5], vec![0.0], vec![vec![1.0], vec![-1.0]]).unwrap();
        let u = utility_from_young(&YoungFunction::power(2.0).unwrap()).unwrap();
        UtilityProblem::new(m, u, DensityVector::ones(2), w).unwrap()
    }

    #[test]
    fn symmetric_indicator_dual() {
        let p = problem(vec![1.0, 0.0]);
        let d = sup_utility_dual(&p).unwrap();
        assert!(d.attained);
        assert!((d.value + 0.125).abs() < 1e-9);
        assert!((d.lambda - 0.5).abs() < 1e-7);
        let q = d.q.unwrap().measure(p.market.space());
        assert!((q[0] - 0.5).abs() < 1e-9);
        let primal = sup_utility_primal(&p).unwrap().value;
        assert!((primal - d.value).abs() < 1e-9);
    }

    #[test]
    fn zero_endowment_is_not_attained() {
        let d = sup_utility_dual(&problem(vec![0.0, 0.0])).unwrap();
        assert!(!d.attained && d.q.is_none());
        assert!(d.value.abs() < 1e-9);
    }

    #[test]
    fn weak_duality_on_a_grid() {
        let p = problem(vec![1.0, 0.0]);
        let primal = sup_utility_primal(&p).unwrap().value;
        for i in 1..100 {
            let lambda = i as f64 * 0.05;
            assert!(primal <= dual_objective(&p, &[0.5, 0.5], lambda).unwrap() + 1e-12);
        }
    }

    #[test]
    fn piecewise_utilities_are_unsupported() {
        let mut p = problem(vec![1.0, 0.0]);
        p.u = UtilityFunction::piecewise(vec![], vec![1.0]).unwrap();
        assert!(matches!(sup_utility_dual(&p), Err(Error::Unsupported(_))));
    }
}
