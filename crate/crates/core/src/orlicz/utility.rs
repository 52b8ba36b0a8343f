use super::young::{complementary, YoungFunction};
use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

/// Concave nondecreasing utility with `u(0) = 0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum UtilityFunction {
    /// `u(x) = -F(-x)` for `x <= 0` and `0` for `x > 0`.
    FromYoung(YoungFunction),
    /// Continuous piecewise-linear utility anchored at `u(0) = 0`.
    /// `slopes[i]` applies between `breakpoints[i-1]` and `breakpoints[i]`,
    /// so there is one more slope than breakpoints.
    PiecewiseLinear { breakpoints: Vec<f64>, slopes: Vec<f64> },
}

impl UtilityFunction {
    pub fn piecewise(breakpoints: Vec<f64>, slopes: Vec<f64>) -> Result<Self> {
        if slopes.len() != breakpoints.len() + 1 {
            return Err(Error::InvalidInput("need exactly one more slope than breakpoints".into()));
        }
        if breakpoints.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidInput("breakpoints must be strictly increasing".into()));
        }
        if slopes.iter().chain(&breakpoints).any(|x| !x.is_finite()) {
            return Err(Error::InvalidInput("non-finite utility parameter".into()));
        }
        if slopes.iter().any(|s| *s < 0.0) {
            return Err(Error::InvalidInput("utility must be nondecreasing".into()));
        }
        if slopes.windows(2).any(|w| w[1] > w[0]) {
            return Err(Error::InvalidInput("utility must be concave (slopes nonincreasing)".into()));
        }
        Ok(Self::PiecewiseLinear { breakpoints, slopes })
    }

    pub fn value(&self, x: f64) -> f64 {
        match self {
            Self::FromYoung(f) => {
                if x < 0.0 {
                    -f.value(-x)
                } else {
                    0.0
                }
            }
            Self::PiecewiseLinear { breakpoints, slopes } => {
                // integrate the slope from 0 to x
                let (a, b, sign) = if x >= 0.0 { (0.0, x, 1.0) } else { (x, 0.0, -1.0) };
                let mut acc = 0.0;
                let mut left = f64::NEG_INFINITY;
                for (i, s) in slopes.iter().enumerate() {
                    let right = breakpoints.get(i).copied().unwrap_or(f64::INFINITY);
                    let lo = left.max(a);
                    let hi = right.min(b);
                    if hi > lo {
                        acc += s * (hi - lo);
                    }
                    left = right;
                }
                sign * acc
            }
        }
    }

    /// Left derivative.
    pub fn derivative(&self, x: f64) -> f64 {
        match self {
            Self::FromYoung(f) => {
                if x < 0.0 {
                    f.derivative(-x)
                } else {
                    0.0
                }
            }
            Self::PiecewiseLinear { breakpoints, slopes } => {
                let i = breakpoints.partition_point(|b| *b < x);
                slopes[i]
            }
        }
    }

    pub fn second_derivative(&self, x: f64) -> f64 {
        match self {
            Self::FromYoung(f) => {
                if x < 0.0 {
                    -f.second_derivative(-x)
                } else {
                    0.0
                }
            }
            Self::PiecewiseLinear { .. } => 0.0,
        }
    }

    /// `u(+inf)`, possibly infinite.
    pub fn sup_value(&self) -> f64 {
        match self {
            Self::FromYoung(_) => 0.0,
            Self::PiecewiseLinear { breakpoints, slopes } => {
                if *slopes.last().unwrap() > 0.0 {
                    f64::INFINITY
                } else {
                    breakpoints.last().map_or(0.0, |b| self.value(b.max(0.0)))
                }
            }
        }
    }

    pub fn young(&self) -> Option<&YoungFunction> {
        match self {
            Self::FromYoung(f) => Some(f),
            _ => None,
        }
    }
}

pub fn utility_from_young(f: &YoungFunction) -> Result<UtilityFunction> {
    f.validate()?;
    Ok(UtilityFunction::FromYoung(f.clone()))
}

/// Convex conjugate `v(y) = sup_x (u(x) - x y)`, only for utilities built
/// from a Young function, where it is the complementary function.
pub fn conjugate_utility(u: &UtilityFunction) -> Result<YoungFunction> {
    match u {
        UtilityFunction::FromYoung(f) => complementary(f),
        UtilityFunction::PiecewiseLinear { .. } => Err(Error::Unsupported(
            "conjugate of a piecewise-linear utility; take a Young minorant first".into(),
        )),
    }
}

/// A Young function `F` with `u_F(x) - eps <= u(x)` for every `x`.
///
/// For piecewise-linear `u` the result is `c y^2` with `c = s^2 / (4 eps)`,
/// where `s` is the steepest slope; the inequality is then re-checked on a grid.
pub fn young_minorant(u: &UtilityFunction, eps: f64) -> Result<YoungFunction> {
    if !(eps > 0.0) || !eps.is_finite() {
        return Err(Error::Domain(format!("eps must be positive, got {eps}")));
    }
    let slopes = match u {
        UtilityFunction::FromYoung(f) => return Ok(f.clone()),
        UtilityFunction::PiecewiseLinear { slopes, .. } => slopes,
    };
    let steep = slopes[0];
    let c = if steep > 0.0 { steep * steep / (4.0 * eps) } else { 1.0 };
    let f = YoungFunction::scaled(YoungFunction::power(2.0)?, 2.0 * c, 1.0)?;
    let uf = UtilityFunction::FromYoung(f.clone());
    let reach = match u {
        UtilityFunction::PiecewiseLinear { breakpoints, .. } => {
            breakpoints.iter().fold(1.0f64, |m, b| m.max(b.abs())) * 4.0 + 4.0 * steep / c
        }
        UtilityFunction::FromYoung(_) => unreachable!(),
    };
    let mut grid: Vec<f64> = (0..=4000).map(|i| -reach * i as f64 / 4000.0).collect();
    if let UtilityFunction::PiecewiseLinear { breakpoints, .. } = u {
        grid.extend(breakpoints.iter().filter(|b| **b < 0.0));
    }
    for x in grid {
        if uf.value(x) - eps > u.value(x) + 1e-12 * (1.0 + x.abs()) {
            return Err(Error::Numerical(format!("minorant check failed at x = {x}")));
        }
    }
    Ok(f)
}
