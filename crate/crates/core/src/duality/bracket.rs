use super::dual::sup_utility_dual;
use super::primal::{sup_utility_primal, UtilityProblem};
use crate::convexsolve::bisect_root;
use crate::error::{Error, Result};
use crate::market::FiniteMarket;
use crate::orlicz::{complementary, utility_from_young, YoungFunction};
use crate::space::DensityVector;

/// Interval `[lambda0, lambda1]` that contains the dual multiplier of every
/// problem `w = 1_A` whose value is below `-delta`: `lambda0 = delta` and
/// `lambda1` is the larger root of `v(lambda) - lambda = -delta`.
///
/// `v(lambda) - lambda` is minimised at `lambda = F'(1)` with minimum `-F(1)`,
/// so the bracket exists iff `F(1) > delta`.
pub fn lambda_bracket(young: &YoungFunction, delta: f64) -> Result<(f64, f64)> {
    if !(delta > 0.0) || !delta.is_finite() {
        return Err(Error::Domain(format!("delta must be positive, got {delta}")));
    }
    let v = complementary(young)?;
    let floor = young.value(1.0);
    if floor <= delta {
        return Err(Error::Domain(format!(
            "v(l) - l >= -{floor} never reaches -{delta}: no problem has value below -delta"
        )));
    }
    let phi = |l: f64| v.value(l) - l + delta;
    let lo = young.derivative(1.0);
    let mut hi = 2.0 * lo.max(1.0);
    while phi(hi) <= 0.0 {
        hi *= 2.0;
    }
    Ok((delta, bisect_root(phi, lo, hi)?))
}

/// Output of [`separating_from_set`].
#[derive(Debug, Clone, PartialEq)]
pub struct SetSeparation {
    /// dQ^A/dP.
    pub q: DensityVector,
    /// Q^A(A).
    pub mass: f64,
    /// `delta / lambda1`, a certified lower bound for `mass`.
    pub gamma: f64,
    pub lambda: f64,
    pub bracket: (f64, f64),
    pub primal: f64,
    pub dual: f64,
    /// `E_R[v(delta dQ/dR)] / (lambda1 - delta)`, certified to be at most 1.
    pub ball: f64,
}

/// Dual optimiser of the problem with endowment `1_A`, together with the
/// certified lower bound on the mass it puts on `A`.
///
/// Fails with [`Error::DualHypothesis`] when the primal value is not below
/// `-delta`; that is the market-free-lunch signal at `A`.
pub fn separating_from_set(
    market: &FiniteMarket,
    r: &DensityVector,
    set: &[usize],
    young: &YoungFunction,
    delta: f64,
) -> Result<SetSeparation> {
    let n = market.num_leaves();
    if set.iter().any(|&i| i >= n) {
        return Err(Error::InvalidInput("set index out of range".into()));
    }
    let mut w = vec![0.0; n];
    for &i in set {
        w[i] = 1.0;
    }
    let prob = UtilityProblem::new(market.clone(), utility_from_young(young)?, r.clone(), w)?;
    let primal = sup_utility_primal(&prob)?.value;
    if !(primal < -delta) {
        return Err(Error::DualHypothesis { primal, threshold: -delta });
    }
    let bracket = lambda_bracket(young, delta)?;
    let dual = sup_utility_dual(&prob)?;
    let q = dual
        .q
        .ok_or_else(|| Error::Numerical("dual minimiser not attained although primal < -delta".into()))?;
    let weights = q.measure(market.space());
    let mass: f64 = set.iter().map(|&i| weights[i]).sum();
    let gamma = delta / bracket.1;
    if !(mass > gamma) {
        return Err(Error::Numerical(format!("Q(A) = {mass} does not exceed gamma = {gamma}")));
    }
    let v = complementary(young)?;
    let rw = prob.belief_weights();
    let ball = weights
        .iter()
        .zip(&rw)
        .map(|(qi, ri)| ri * v.value(delta * qi / ri))
        .sum::<f64>()
        / (bracket.1 - delta);
    if ball > 1.0 + 1e-9 {
        return Err(Error::Numerical(format!("ball bound violated: {ball}")));
    }
    Ok(SetSeparation { q, mass, gamma, lambda: dual.lambda, bracket, primal, dual: dual.value, ball })
}
