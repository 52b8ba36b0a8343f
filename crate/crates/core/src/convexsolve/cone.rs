//! Minimisation of a smooth convex functional over the cone generated by a
//! finite list of nonnegative density vectors.

use super::barrier::{barrier_minimize, BarrierOptions, SmoothConvex};
use crate::error::{Error, Result};
use crate::space::DensityVector;
use nalgebra::DMatrix;

/// A convex functional of a point `z` in R^L.
pub trait ConeObjective {
    fn value(&self, z: &[f64]) -> f64;
    fn gradient(&self, z: &[f64]) -> Vec<f64>;
    fn hessian(&self, z: &[f64]) -> DMatrix<f64>;
}

#[derive(Debug, Clone)]
pub struct ConeSolution {
    /// Weights on the generators; `None` when the infimum is only approached
    /// as the point shrinks to the apex.
    pub theta: Option<Vec<f64>>,
    pub point: Option<Vec<f64>>,
    pub value: f64,
    pub gap: f64,
    pub attained: bool,
}

struct Lifted<'a, O: ConeObjective> {
    obj: &'a O,
    gens: &'a [DensityVector],
    len: usize,
}

impl<O: ConeObjective> Lifted<'_, O> {
    fn point(&self, theta: &[f64]) -> Vec<f64> {
        let mut z = vec![0.0; self.len];
        for (t, g) in theta.iter().zip(self.gens) {
            for (zi, gi) in z.iter_mut().zip(&g.values) {
                *zi += t * gi;
            }
        }
        z
    }
}

impl<O: ConeObjective> SmoothConvex for Lifted<'_, O> {
    fn dim(&self) -> usize {
        self.gens.len()
    }
    fn value(&self, theta: &[f64]) -> f64 {
        self.obj.value(&self.point(theta))
    }
    fn gradient(&self, theta: &[f64]) -> Vec<f64> {
        let gz = self.obj.gradient(&self.point(theta));
        self.gens
            .iter()
            .map(|g| g.values.iter().zip(&gz).map(|(a, b)| a * b).sum())
            .collect()
    }
    fn hessian(&self, theta: &[f64]) -> DMatrix<f64> {
        let hz = self.obj.hessian(&self.point(theta));
        let d = DMatrix::from_fn(self.len, self.gens.len(), |i, k| self.gens[k].values[i]);
        d.transpose() * hz * d
    }
}

/// Minimises `obj(sum_k theta_k b_k)` over `theta >= 0`.
///
/// Uses a log-barrier Newton method; the reported `gap` is the certified
/// suboptimality bound. When the best value is not strictly below the value
/// at the apex `z = 0`, the infimum is reported as not attained.
pub fn min_over_cone<O: ConeObjective>(
    obj: &O,
    basis: &[DensityVector],
    opts: &BarrierOptions,
) -> Result<ConeSolution> {
    let at_apex = |len: usize| obj.value(&vec![0.0; len]);
    let Some(first) = basis.first() else {
        return Err(Error::InvalidInput("empty cone basis".into()));
    };
    let len = first.len();
    if basis.iter().any(|b| b.len() != len || b.values.iter().any(|&v| v < 0.0)) {
        return Err(Error::InvalidInput("cone generators must be nonnegative and of equal length".into()));
    }
    let lifted = Lifted { obj, gens: basis, len };
    let k = basis.len();
    let a: Vec<Vec<f64>> = (0..k)
        .map(|i| {
            let mut r = vec![0.0; k];
            r[i] = -1.0;
            r
        })
        .collect();
    let b = vec![0.0; k];
    let x0 = vec![1.0 / k as f64; k];
    let sol = barrier_minimize(&lifted, &a, &b, x0, opts)?;
    let apex = at_apex(len);
    let tol = (2.0 * sol.gap).max(1e-10);
    if sol.value < apex - tol {
        let point = lifted.point(&sol.x);
        Ok(ConeSolution {
            theta: Some(sol.x),
            point: Some(point),
            value: sol.value,
            gap: sol.gap,
            attained: true,
        })
    } else {
        Ok(ConeSolution {
            theta: None,
            point: None,
            value: apex.min(sol.value),
            gap: sol.gap,
            attained: false,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// E_P[z^2] - c E_P[z] on a uniform two-atom space.
    struct Shifted {
        c: f64,
    }

    impl ConeObjective for Shifted {
        fn value(&self, z: &[f64]) -> f64 {
            z.iter().map(|v| 0.5 * (v * v / 2.0 - self.c * v)).sum()
        }
        fn gradient(&self, z: &[f64]) -> Vec<f64> {
            z.iter().map(|v| 0.5 * (v - self.c)).collect()
        }
        fn hessian(&self, z: &[f64]) -> DMatrix<f64> {
            DMatrix::identity(z.len(), z.len()) * 0.5
        }
    }

    #[test]
    fn square_has_non_attained_infimum() {
        let sol = min_over_cone(&Shifted { c: 0.0 }, &[DensityVector::ones(2)], &Default::default()).unwrap();
        assert!(!sol.attained);
        assert!(sol.value.abs() < 1e-12);
        assert!(sol.point.is_none());
    }

    #[test]
    fn single_ray_matches_scalar_problem() {
        // lambda -> lambda^2/2 - lambda/2 on the ray through 1
        let sol = min_over_cone(&Shifted { c: 0.5 }, &[DensityVector::ones(2)], &Default::default()).unwrap();
        assert!(sol.attained);
        assert!((sol.value + 0.125).abs() < 1e-10);
        assert!((sol.theta.unwrap()[0] - 0.5).abs() < 1e-8);
    }

    #[test]
    fn value_bounds_every_feasible_point() {
        let gens = vec![
            DensityVector::new(vec![2.0, 0.0]),
            DensityVector::new(vec![0.0, 2.0]),
            DensityVector::new(vec![1.0, 1.0]),
        ];
        let obj = Shifted { c: 1.0 };
        let sol = min_over_cone(&obj, &gens, &Default::default()).unwrap();
        for i in 0..20 {
            for j in 0..20 {
                let z = [0.1 * i as f64, 0.1 * j as f64];
                assert!(sol.value <= obj.value(&z) + 1e-12);
            }
        }
    }
}
