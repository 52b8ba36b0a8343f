//! Log-barrier interior-point method for smooth convex objectives under
//! linear inequality constraints `A x <= b`.

use crate::error::{Error, Result};
use nalgebra::{DMatrix, DVector};

pub trait SmoothConvex {
    fn dim(&self) -> usize;
    /// Objective value; `+inf` outside the domain.
    fn value(&self, x: &[f64]) -> f64;
    fn gradient(&self, x: &[f64]) -> Vec<f64>;
    fn hessian(&self, x: &[f64]) -> DMatrix<f64>;
}

#[derive(Debug, Clone)]
pub struct BarrierOptions {
    /// Stop once the certified suboptimality bound m/t falls below this.
    pub gap_tol: f64,
    pub t0: f64,
    pub growth: f64,
    pub max_newton: usize,
    /// Magnitude beyond which the problem is declared unbounded.
    pub blowup: f64,
}

impl Default for BarrierOptions {
    fn default() -> Self {
        Self {
            gap_tol: 1e-10,
            t0: 1.0,
            growth: 16.0,
            max_newton: 400,
            blowup: 1e13,
        }
    }
}

#[derive(Debug, Clone)]
pub struct BarrierSolution {
    pub x: Vec<f64>,
    pub value: f64,
    /// Certified bound on value minus the true infimum.
    pub gap: f64,
    pub newton_steps: usize,
}

fn slacks(a: &[Vec<f64>], b: &[f64], x: &[f64]) -> Vec<f64> {
    a.iter()
        .zip(b)
        .map(|(row, bi)| bi - row.iter().zip(x).map(|(r, v)| r * v).sum::<f64>())
        .collect()
}

fn solve_spd(h: &DMatrix<f64>, g: &DVector<f64>) -> Option<DVector<f64>> {
    let n = h.nrows();
    let scale = (0..n).map(|i| h[(i, i)].abs()).fold(0.0, f64::max).max(1e-300);
    let mut reg = 0.0;
    for _ in 0..12 {
        let mut m = h.clone();
        for i in 0..n {
            m[(i, i)] += reg;
        }
        if let Some(ch) = m.cholesky() {
            let d = ch.solve(g);
            if d.iter().all(|v| v.is_finite()) {
                return Some(d);
            }
        }
        reg = if reg == 0.0 { 1e-14 * scale } else { reg * 100.0 };
    }
    None
}

/// Minimises `f` over `{x : A x <= b}` starting from a strictly feasible `x0`.
pub fn barrier_minimize(
    f: &dyn SmoothConvex,
    a: &[Vec<f64>],
    b: &[f64],
    x0: Vec<f64>,
    opts: &BarrierOptions,
) -> Result<BarrierSolution> {
    let n = f.dim();
    if x0.len() != n || a.len() != b.len() || a.iter().any(|r| r.len() != n) {
        return Err(Error::InvalidInput("barrier problem dimension mismatch".into()));
    }
    let m = a.len();
    if slacks(a, b, &x0).iter().any(|&s| !(s > 0.0)) {
        return Err(Error::InvalidInput("barrier start is not strictly feasible".into()));
    }
    if !f.value(&x0).is_finite() {
        return Err(Error::InvalidInput("objective not finite at barrier start".into()));
    }
    let mut x = x0;
    let mut t = opts.t0;
    let mut steps = 0usize;
    loop {
        // centering
        for _ in 0..opts.max_newton {
            let s = slacks(a, b, &x);
            let fg = f.gradient(&x);
            let mut g = DVector::from_iterator(n, fg.iter().map(|v| t * v));
            let mut h = f.hessian(&x) * t;
            for (row, si) in a.iter().zip(&s) {
                for i in 0..n {
                    if row[i] == 0.0 {
                        continue;
                    }
                    g[i] += row[i] / si;
                    for j in 0..n {
                        h[(i, j)] += row[i] * row[j] / (si * si);
                    }
                }
            }
            let Some(d) = solve_spd(&h, &g) else {
                return Err(Error::Numerical("barrier Newton system singular".into()));
            };
            let d = -d;
            let dec2 = -g.dot(&d);
            if !(dec2 > 2e-14) {
                break;
            }
            steps += 1;
            // largest feasible step
            let mut alpha: f64 = 1.0;
            for (row, si) in a.iter().zip(&s) {
                let ad: f64 = row.iter().zip(d.iter()).map(|(r, v)| r * v).sum();
                if ad > 0.0 {
                    alpha = alpha.min(0.99 * si / ad);
                }
            }
            let fx = f.value(&x);
            let phi_diff = |xn: &[f64]| -> f64 {
                let sn = slacks(a, b, xn);
                if sn.iter().any(|&v| !(v > 0.0)) {
                    return f64::INFINITY;
                }
                let fv = f.value(xn);
                if !fv.is_finite() {
                    return f64::INFINITY;
                }
                t * (fv - fx) - sn.iter().zip(&s).map(|(a, b)| (a / b).ln()).sum::<f64>()
            };
            let mut accepted = false;
            let mut xn = x.clone();
            for _ in 0..60 {
                for i in 0..n {
                    xn[i] = x[i] + alpha * d[i];
                }
                let df = phi_diff(&xn);
                if df <= -0.25 * alpha * dec2 || (dec2 < 1e-6 && df <= 1e-9 * (1.0 + t * fx.abs())) {
                    accepted = true;
                    break;
                }
                alpha *= 0.5;
            }
            if !accepted {
                break;
            }
            x = xn;
            let fv = f.value(&x);
            if fv < -opts.blowup || x.iter().any(|v| v.abs() > opts.blowup) {
                return Err(Error::Unbounded(format!(
                    "objective {fv:.3e} diverging along the feasible set"
                )));
            }
        }
        let gap = m as f64 / t;
        if gap < opts.gap_tol || m == 0 {
            return Ok(BarrierSolution {
                value: f.value(&x),
                x,
                gap,
                newton_steps: steps,
            });
        }
        t *= opts.growth;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    struct Quad {
        center: Vec<f64>,
    }

    impl SmoothConvex for Quad {
        fn dim(&self) -> usize {
            self.center.len()
        }
        fn value(&self, x: &[f64]) -> f64 {
            x.iter().zip(&self.center).map(|(a, c)| (a - c).powi(2)).sum()
        }
        fn gradient(&self, x: &[f64]) -> Vec<f64> {
            x.iter().zip(&self.center).map(|(a, c)| 2.0 * (a - c)).collect()
        }
        fn hessian(&self, x: &[f64]) -> DMatrix<f64> {
            DMatrix::identity(x.len(), x.len()) * 2.0
        }
    }

    #[test]
    fn projects_onto_halfspace() {
        // min (x-2)^2 + (y-2)^2 s.t. x + y <= 2 -> (1,1), value 2
        let q = Quad { center: vec![2.0, 2.0] };
        let sol = barrier_minimize(&q, &[vec![1.0, 1.0]], &[2.0], vec![0.0, 0.0], &Default::default())
            .unwrap();
        assert!((sol.x[0] - 1.0).abs() < 1e-8 && (sol.x[1] - 1.0).abs() < 1e-8);
        assert!((sol.value - 2.0).abs() < 1e-9);
        assert!(sol.gap <= 1e-10);
    }

    #[test]
    fn interior_optimum() {
        let q = Quad { center: vec![0.3] };
        let sol = barrier_minimize(&q, &[vec![-1.0], vec![1.0]], &[0.0, 1.0], vec![0.5], &Default::default())
            .unwrap();
        assert!((sol.x[0] - 0.3).abs() < 1e-9);
    }

    #[test]
    fn infeasible_start_rejected() {
        let q = Quad { center: vec![0.3] };
        assert!(barrier_minimize(&q, &[vec![1.0]], &[0.0], vec![0.5], &Default::default()).is_err());
    }
}
