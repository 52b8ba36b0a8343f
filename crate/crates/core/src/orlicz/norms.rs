use super::young::YoungFunction;
use crate::convexsolve::bisect_root;
use crate::error::{Error, Result};
use crate::space::FiniteProbSpace;

fn modular(f: &[f64], space: &FiniteProbSpace, young: &YoungFunction, a: f64) -> f64 {
    f.iter()
        .zip(space.probs())
        .map(|(x, p)| p * young.value(x.abs() / a))
        .sum()
}

fn check_finite(f: &[f64]) -> Result<()> {
    if f.iter().any(|x| !x.is_finite()) {
        return Err(Error::InvalidInput("claim has non-finite entries".into()));
    }
    Ok(())
}

/// Luxemburg norm `inf{a > 0 : E[F(|f|/a)] <= 1}`.
pub fn luxemburg_norm(f: &[f64], space: &FiniteProbSpace, young: &YoungFunction) -> Result<f64> {
    space.check_len(f)?;
    check_finite(f)?;
    let top = f.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    if top == 0.0 {
        return Ok(0.0);
    }
    let excess = |a: f64| modular(f, space, young, a) - 1.0;
    let mut hi = top;
    while excess(hi) > 0.0 {
        hi *= 2.0;
    }
    let mut lo = hi;
    while excess(lo) <= 0.0 {
        lo *= 0.5;
        if lo < f64::MIN_POSITIVE {
            return Err(Error::Numerical("Luxemburg norm underflow".into()));
        }
    }
    bisect_root(excess, lo, hi)
}

/// Gauge of the polar of the Orlicz unit ball: `sup { |E[g h]| : E[F(|h|)] <= 1 }`.
///
/// The maximiser has `|h| = (F')^{-1}(|g| / lambda)`; `lambda` is located by
/// bisection in log scale so that the constraint binds.
pub fn polar_gauge(g: &[f64], space: &FiniteProbSpace, young: &YoungFunction) -> Result<f64> {
    space.check_len(g)?;
    check_finite(g)?;
    if g.iter().all(|x| *x == 0.0) {
        return Ok(0.0);
    }
    let h = |lambda: f64| -> Vec<f64> { g.iter().map(|x| young.inv_derivative(x.abs() / lambda)).collect() };
    let excess = |ln_lambda: f64| {
        let hv = h(ln_lambda.exp());
        hv.iter().zip(space.probs()).map(|(x, p)| p * young.value(*x)).sum::<f64>() - 1.0
    };
    let mut hi = 0.0;
    while excess(hi) > 0.0 {
        hi += 4.0;
        if hi > 700.0 {
            return Err(Error::Numerical("polar gauge multiplier overflow".into()));
        }
    }
    let mut lo = hi;
    while excess(lo) <= 0.0 {
        lo -= 4.0;
        if lo < -700.0 {
            return Err(Error::Numerical("polar gauge multiplier underflow".into()));
        }
    }
    let ln_lambda = bisect_root(|t| -excess(t), lo, hi)?;
    let hv = h(ln_lambda.exp());
    Ok(g.iter()
        .zip(&hv)
        .zip(space.probs())
        .map(|((x, y), p)| p * x.abs() * y)
        .sum())
}

/// Bound `kappa / F(kappa)` on `E[|h| 1{|h| >= kappa}]` over the Orlicz unit ball.
pub fn ui_tail_bound(young: &YoungFunction, kappa: f64) -> Result<f64> {
    if !(kappa > 0.0) || !kappa.is_finite() {
        return Err(Error::Domain(format!("kappa must be positive, got {kappa}")));
    }
    let fk = young.value(kappa);
    if !(fk > 0.0) {
        return Err(Error::Domain(format!("F({kappa}) = 0")));
    }
    Ok(kappa / fk)
}
