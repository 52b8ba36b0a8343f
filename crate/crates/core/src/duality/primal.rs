use crate::convexsolve::{lp_solve, LinearProgram, LpOutcome, Sense};
use crate::error::{Error, Result};
use crate::market::{max_support_separating, FiniteMarket};
use crate::orlicz::{UtilityFunction, YoungFunction};
use crate::space::DensityVector;
use nalgebra::{DMatrix, DVector};

/// Maximise `E_R[u(f - w)]` over `f` in the superreplication cone.
#[derive(Debug, Clone)]
pub struct UtilityProblem {
    pub market: FiniteMarket,
    pub u: UtilityFunction,
    /// Belief density dR/dP.
    pub r: DensityVector,
    pub w: Vec<f64>,
}

impl UtilityProblem {
    pub fn new(market: FiniteMarket, u: UtilityFunction, r: DensityVector, w: Vec<f64>) -> Result<Self> {
        r.validate_probability(market.space())?;
        if !r.is_strictly_positive() {
            return Err(Error::InvalidInput("belief density must be strictly positive".into()));
        }
        market.space().check_len(&w)?;
        if w.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidInput("endowment has non-finite entries".into()));
        }
        Ok(Self { market, u, r, w })
    }

    /// `E_R` weights per leaf.
    pub fn belief_weights(&self) -> Vec<f64> {
        self.r.measure(self.market.space())
    }

    /// `E_R[u(f - w)]`.
    pub fn expected_utility(&self, f: &[f64]) -> f64 {
        self.belief_weights()
            .iter()
            .zip(f.iter().zip(&self.w))
            .map(|(r, (fi, wi))| r * self.u.value(fi - wi))
            .sum()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PrimalSolution {
    /// The supremum; `+inf` when unbounded.
    pub value: f64,
    /// Strategy achieving the value on the support of the separating measures.
    pub strategy: Vec<f64>,
    pub payoff: Vec<f64>,
    /// False when the supremum needs an unbounded multiple of
    /// `arbitrage_direction`.
    pub attained: bool,
    /// A strategy whose gain is nonnegative and positive exactly where no
    /// separating measure charges the leaf.
    pub arbitrage_direction: Option<Vec<f64>>,
}

/// Sum of per-leaf arbitrages covering `leaves`.
fn covering_arbitrage(market: &FiniteMarket, leaves: &[usize]) -> Result<Vec<f64>> {
    let b = market.gains_basis();
    let k = b.ncols();
    let n = b.nrows();
    let mut total = vec![0.0; k];
    let mut covered = vec![false; n];
    for &i in leaves {
        if covered[i] {
            continue;
        }
        let mut obj = vec![0.0; k];
        obj.extend((0..n).map(|j| if j == i { 1.0 } else { 0.0 }));
        let mut lp = LinearProgram::new(Sense::Maximize, obj);
        for j in 0..k {
            lp.free(j);
        }
        for l in 0..n {
            lp.set_bounds(k + l, Some(0.0), Some(1.0));
            let mut row: Vec<f64> = b.row(l).iter().map(|x| -x).collect();
            row.resize(k + n, 0.0);
            row[k + l] = 1.0;
            lp.add_eq(row, 0.0);
        }
        if let LpOutcome::Optimal { x, .. } = lp_solve(&lp)? {
            for (c, f) in covered.iter_mut().zip(&x[k..]) {
                *c |= *f > 1e-12;
            }
            for (t, xi) in total.iter_mut().zip(&x[..k]) {
                *t += xi;
            }
        }
    }
    Ok(total)
}

/// Newton iteration with Levenberg-Marquardt damping for
/// `min_xi sum_{i in S} r_i F((w_i - (B xi)_i)^+)`.
pub(crate) fn minimise_shortfall(
    young: &YoungFunction,
    rows: &[Vec<f64>],
    r: &[f64],
    w: &[f64],
    k: usize,
) -> Result<(Vec<f64>, f64)> {
    let eval = |xi: &DVector<f64>| -> f64 {
        rows.iter()
            .zip(r.iter().zip(w))
            .map(|(b, (ri, wi))| {
                let x = wi - b.iter().zip(xi.iter()).map(|(a, c)| a * c).sum::<f64>();
                ri * young.value(x.max(0.0))
            })
            .sum()
    };
    let mut xi: DVector<f64> = DVector::zeros(k);
    let mut val = eval(&xi);
    if k == 0 {
        return Ok((Vec::new(), val));
    }
    for _ in 0..500 {
        let mut g: DVector<f64> = DVector::zeros(k);
        let mut h: DMatrix<f64> = DMatrix::zeros(k, k);
        for (b, (ri, wi)) in rows.iter().zip(r.iter().zip(w)) {
            let x = wi - b.iter().zip(xi.iter()).map(|(a, c)| a * c).sum::<f64>();
            if x <= 0.0 {
                continue;
            }
            let d1 = ri * young.derivative(x);
            let d2 = (ri * young.second_derivative(x)).min(1e12);
            for i in 0..k {
                g[i] -= d1 * b[i];
                for j in 0..k {
                    h[(i, j)] += d2 * b[i] * b[j];
                }
            }
        }
        let gnorm = g.amax();
        if gnorm <= 1e-14 {
            break;
        }
        let scale = (0..k).map(|i| h[(i, i)]).fold(0.0f64, f64::max).max(1e-12);
        let mut mu = 1e-12 * scale + gnorm.min(1.0) * 1e-10;
        let mut improved = false;
        for _ in 0..20 {
            let mut m = h.clone();
            for i in 0..k {
                m[(i, i)] += mu;
            }
            let Some(ch) = m.cholesky() else {
                mu *= 10.0;
                continue;
            };
            let d = -ch.solve(&g);
            let slope = g.dot(&d);
            let mut step = 1.0;
            while step > 1e-10 {
                let cand = &xi + &d * step;
                let cv = eval(&cand);
                if cv.is_finite() && cv <= val + 1e-4 * step * slope {
                    if cv < val {
                        improved = true;
                        xi = cand;
                        val = cv;
                    }
                    break;
                }
                step *= 0.5;
            }
            if improved {
                break;
            }
            mu = mu.max(1e-8 * scale) * 100.0;
        }
        if !improved {
            break;
        }
    }
    Ok((xi.iter().copied().collect(), val))
}

fn piecewise_primal(prob: &UtilityProblem, breakpoints: &[f64], slopes: &[f64]) -> Result<PrimalSolution> {
    let b = prob.market.gains_basis();
    let k = b.ncols();
    let n = b.nrows();
    let r = prob.belief_weights();
    // affine pieces a_j + s_j x whose minimum is u
    let mut pieces = Vec::with_capacity(slopes.len());
    for (j, s) in slopes.iter().enumerate() {
        let anchor = if j == 0 {
            breakpoints.first().copied().unwrap_or(0.0)
        } else {
            breakpoints[j - 1]
        };
        pieces.push((prob.u.value(anchor) - s * anchor, *s));
    }
    // variables (xi, t): max r·t s.t. t_i <= a_j + s_j ((B xi)_i - w_i)
    let mut obj = vec![0.0; k];
    obj.extend_from_slice(&r);
    let mut lp = LinearProgram::new(Sense::Maximize, obj);
    for j in 0..k + n {
        lp.free(j);
    }
    for i in 0..n {
        let bi = b.row(i);
        for &(a, s) in &pieces {
            let mut row: Vec<f64> = bi.iter().map(|x| -s * x).collect();
            row.resize(k + n, 0.0);
            row[k + i] = 1.0;
            lp.add_le(row, a - s * prob.w[i]);
        }
    }
    match lp_solve(&lp)? {
        LpOutcome::Optimal { x, value } => {
            let strategy = x[..k].to_vec();
            let payoff = if k == 0 { vec![0.0; n] } else { b.payoff(&strategy) };
            Ok(PrimalSolution { value, strategy, payoff, attained: true, arbitrage_direction: None })
        }
        LpOutcome::Unbounded => Ok(PrimalSolution {
            value: f64::INFINITY,
            strategy: vec![0.0; k],
            payoff: vec![0.0; n],
            attained: false,
            arbitrage_direction: Some(covering_arbitrage(&prob.market, &(0..n).collect::<Vec<_>>())?),
        }),
        LpOutcome::Infeasible => Err(Error::Numerical("utility LP infeasible".into())),
    }
}

/// `sup_{f ∈ C} E_R[u(f - w)]`.
///
/// For `u = u_F` the supremum only involves leaves charged by some separating
/// measure: the remaining leaves are lifted above `w` by an arbitrage, which
/// is reported in `arbitrage_direction`. On the charged leaves the problem is
/// coercive and solved by damped Newton. Piecewise-linear utilities are
/// solved as a linear program.
pub fn sup_utility_primal(prob: &UtilityProblem) -> Result<PrimalSolution> {
    let young = match &prob.u {
        UtilityFunction::FromYoung(f) => f,
        UtilityFunction::PiecewiseLinear { breakpoints, slopes } => return piecewise_primal(prob, breakpoints, slopes),
    };
    let market = &prob.market;
    let b = market.gains_basis();
    let k = b.ncols();
    let n = market.num_leaves();
    let Some(q) = max_support_separating(market)? else {
        let dir = covering_arbitrage(market, &(0..n).collect::<Vec<_>>())?;
        return Ok(PrimalSolution {
            value: 0.0,
            strategy: vec![0.0; k],
            payoff: vec![0.0; n],
            attained: false,
            arbitrage_direction: Some(dir),
        });
    };
    let support: Vec<usize> = (0..n).filter(|&i| q[i] > 0.0).collect();
    let outside: Vec<usize> = (0..n).filter(|&i| q[i] == 0.0).collect();
    let r = prob.belief_weights();
    let rows: Vec<Vec<f64>> = support.iter().map(|&i| b.row(i)).collect();
    let rs: Vec<f64> = support.iter().map(|&i| r[i]).collect();
    let ws: Vec<f64> = support.iter().map(|&i| prob.w[i]).collect();
    let (strategy, shortfall) = minimise_shortfall(young, &rows, &rs, &ws, k)?;
    let payoff = if k == 0 { vec![0.0; n] } else { b.payoff(&strategy) };
    let (attained, arbitrage_direction) = if outside.is_empty() {
        (true, None)
    } else {
        let dir = covering_arbitrage(market, &outside)?;
        let covered = outside.iter().all(|&i| payoff[i] >= prob.w[i]);
        (covered, Some(dir))
    };
    Ok(PrimalSolution { value: -shortfall, strategy, payoff, attained, arbitrage_direction })
}
