//! Finite probability spaces and densities on them.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

const SUM_TOL: f64 = 1e-12;

/// A finite probability space with strictly positive atoms.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FiniteProbSpace {
    labels: Vec<String>,
    probs: Vec<f64>,
}

impl FiniteProbSpace {
    pub fn new(labels: Vec<String>, probs: Vec<f64>) -> Result<Self> {
        if labels.len() != probs.len() {
            return Err(Error::InvalidInput(format!(
                "{} labels for {} probabilities",
                labels.len(),
                probs.len()
            )));
        }
        if probs.is_empty() {
            return Err(Error::InvalidInput("empty probability space".into()));
        }
        for (l, &p) in labels.iter().zip(&probs) {
            if !(p > 0.0 && p <= 1.0) {
                return Err(Error::InvalidInput(format!(
                    "atom `{l}` has probability {p}, expected (0,1]"
                )));
            }
        }
        let s: f64 = probs.iter().sum();
        if (s - 1.0).abs() > SUM_TOL * probs.len().max(1) as f64 {
            return Err(Error::InvalidInput(format!("probabilities sum to {s}")));
        }
        Ok(Self { labels, probs })
    }

    /// Space with generated labels `w0, w1, ...`; probabilities are renormalised.
    pub fn from_probs(probs: &[f64]) -> Result<Self> {
        let s: f64 = probs.iter().sum();
        if !(s > 0.0) || probs.iter().any(|p| !(p.is_finite())) {
            return Err(Error::InvalidInput("probabilities must be finite with positive sum".into()));
        }
        let probs: Vec<f64> = probs.iter().map(|p| p / s).collect();
        let labels = (0..probs.len()).map(|i| format!("w{i}")).collect();
        Self::new(labels, probs)
    }

    pub fn uniform(n: usize) -> Result<Self> {
        Self::from_probs(&vec![1.0; n])
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn index_of(&self, label: &str) -> Option<usize> {
        self.labels.iter().position(|l| l == label)
    }

    pub fn expect(&self, f: &[f64]) -> f64 {
        debug_assert_eq!(f.len(), self.len());
        self.probs.iter().zip(f).map(|(p, x)| p * x).sum()
    }

    /// P(A) for a set given as atom indices.
    pub fn mass(&self, set: &[usize]) -> f64 {
        set.iter().map(|&i| self.probs[i]).sum()
    }

    pub fn check_len(&self, f: &[f64]) -> Result<()> {
        if f.len() != self.len() {
            return Err(Error::InvalidInput(format!(
                "vector of length {} on a space with {} atoms",
                f.len(),
                self.len()
            )));
        }
        if f.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidInput("non-finite value".into()));
        }
        Ok(())
    }
}

/// Values per atom, typically a Radon-Nikodym density dQ/dP.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DensityVector {
    pub values: Vec<f64>,
}

impl DensityVector {
    pub fn new(values: Vec<f64>) -> Self {
        Self { values }
    }

    pub fn ones(n: usize) -> Self {
        Self { values: vec![1.0; n] }
    }

    /// Density q/p of the measure `q` with respect to the space.
    pub fn from_measure(q: &[f64], space: &FiniteProbSpace) -> Result<Self> {
        space.check_len(q)?;
        Ok(Self {
            values: q.iter().zip(space.probs()).map(|(q, p)| q / p).collect(),
        })
    }

    /// The measure with this density: values times atom probabilities.
    pub fn measure(&self, space: &FiniteProbSpace) -> Vec<f64> {
        self.values.iter().zip(space.probs()).map(|(d, p)| d * p).collect()
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Checks nonnegativity and E_P[density] = 1 within 1e-10.
    pub fn validate_probability(&self, space: &FiniteProbSpace) -> Result<()> {
        space.check_len(&self.values)?;
        if let Some(i) = self.values.iter().position(|&v| v < 0.0) {
            return Err(Error::InvalidInput(format!(
                "density negative at atom {}",
                space.labels()[i]
            )));
        }
        let m = space.expect(&self.values);
        if (m - 1.0).abs() > 1e-10 {
            return Err(Error::InvalidInput(format!("density has mean {m}")));
        }
        Ok(())
    }

    pub fn is_strictly_positive(&self) -> bool {
        self.values.iter().all(|&v| v > 0.0)
    }
}
