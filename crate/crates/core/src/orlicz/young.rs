use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

/// Tabulated Young function: piecewise-linear derivative through the knots
/// `(x, F'(x))`, continued beyond the last knot by `F'(x) = s (x/x_L)^(tail-1)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tabulated {
    knots: Vec<(f64, f64)>,
    tail: f64,
    /// F at each knot.
    cumulative: Vec<f64>,
}

impl Tabulated {
    pub fn new(knots: Vec<(f64, f64)>, tail: f64) -> Result<Self> {
        if knots.len() < 2 {
            return Err(Error::InvalidInput("tabulated Young function needs at least two knots".into()));
        }
        if knots[0] != (0.0, 0.0) {
            return Err(Error::InvalidInput("first knot must be (0, 0)".into()));
        }
        for w in knots.windows(2) {
            if !(w[1].0 > w[0].0) {
                return Err(Error::InvalidInput(format!("knots not strictly increasing at x = {}", w[1].0)));
            }
            if !(w[1].1 > w[0].1) {
                return Err(Error::InvalidInput(format!(
                    "derivative samples not strictly increasing at x = {}",
                    w[1].0
                )));
            }
        }
        if knots.iter().any(|(x, s)| !x.is_finite() || !s.is_finite()) {
            return Err(Error::InvalidInput("non-finite knot".into()));
        }
        if !(tail > 1.0) || !tail.is_finite() {
            return Err(Error::InvalidInput(format!("tail exponent must exceed 1, got {tail}")));
        }
        let mut cumulative = vec![0.0];
        for w in knots.windows(2) {
            let h = w[1].0 - w[0].0;
            let last = *cumulative.last().unwrap();
            cumulative.push(last + 0.5 * h * (w[0].1 + w[1].1));
        }
        Ok(Self { knots, tail, cumulative })
    }

    pub fn knots(&self) -> &[(f64, f64)] {
        &self.knots
    }

    pub fn tail(&self) -> f64 {
        self.tail
    }

    fn last(&self) -> (f64, f64) {
        *self.knots.last().unwrap()
    }

    fn segment(&self, x: f64) -> usize {
        // index k with knots[k].0 <= x < knots[k+1].0
        match self.knots.binary_search_by(|k| k.0.partial_cmp(&x).unwrap()) {
            Ok(i) => i.min(self.knots.len() - 2),
            Err(i) => i.saturating_sub(1).min(self.knots.len() - 2),
        }
    }

    fn value(&self, x: f64) -> f64 {
        let (xl, sl) = self.last();
        if x >= xl {
            let fl = *self.cumulative.last().unwrap();
            return fl + sl * xl / self.tail * ((x / xl).powf(self.tail) - 1.0);
        }
        let k = self.segment(x);
        let (x0, s0) = self.knots[k];
        let (x1, s1) = self.knots[k + 1];
        let d = x - x0;
        self.cumulative[k] + s0 * d + (s1 - s0) * d * d / (2.0 * (x1 - x0))
    }

    fn derivative(&self, x: f64) -> f64 {
        let (xl, sl) = self.last();
        if x >= xl {
            return sl * (x / xl).powf(self.tail - 1.0);
        }
        let k = self.segment(x);
        let (x0, s0) = self.knots[k];
        let (x1, s1) = self.knots[k + 1];
        s0 + (s1 - s0) * (x - x0) / (x1 - x0)
    }

    fn second_derivative(&self, x: f64) -> f64 {
        let (xl, sl) = self.last();
        if x >= xl {
            return sl * (self.tail - 1.0) / xl * (x / xl).powf(self.tail - 2.0);
        }
        let k = self.segment(x);
        let (x0, s0) = self.knots[k];
        let (x1, s1) = self.knots[k + 1];
        (s1 - s0) / (x1 - x0)
    }

    fn inv_derivative(&self, t: f64) -> f64 {
        let (xl, sl) = self.last();
        if t >= sl {
            return xl * (t / sl).powf(1.0 / (self.tail - 1.0));
        }
        let k = match self.knots.binary_search_by(|k| k.1.partial_cmp(&t).unwrap()) {
            Ok(i) => return self.knots[i].0,
            Err(i) => i - 1,
        };
        let (x0, s0) = self.knots[k];
        let (x1, s1) = self.knots[k + 1];
        x0 + (t - s0) * (x1 - x0) / (s1 - s0)
    }
}

/// A Young function F: F(0) = F'(0) = 0, F' continuous, strictly increasing
/// and unbounded.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum YoungFunction {
    /// x^p / p, p > 1.
    Power { p: f64 },
    /// e^x - x - 1.
    ExpMinusLinear,
    /// (1+x) ln(1+x) - x.
    Entropy,
    Tabulated(Tabulated),
    /// outer * F(inner * x).
    Scaled {
        base: Box<YoungFunction>,
        outer: f64,
        inner: f64,
    },
    /// Complementary function of the boxed one, evaluated by quadrature of
    /// the inverse derivative.
    Conjugate(Box<YoungFunction>),
}

impl YoungFunction {
    pub fn power(p: f64) -> Result<Self> {
        if !(p > 1.0) || !p.is_finite() {
            return Err(Error::InvalidInput(format!("power exponent must exceed 1, got {p}")));
        }
        Ok(Self::Power { p })
    }

    /// `outer * base(inner * x)`.
    pub fn scaled(base: YoungFunction, outer: f64, inner: f64) -> Result<Self> {
        if !(outer > 0.0 && inner > 0.0) || !outer.is_finite() || !inner.is_finite() {
            return Err(Error::InvalidInput("scale factors must be positive and finite".into()));
        }
        if outer == 1.0 && inner == 1.0 {
            return Ok(base);
        }
        Ok(match base {
            Self::Scaled { base, outer: o, inner: i } => Self::Scaled {
                base,
                outer: outer * o,
                inner: inner * i,
            },
            other => Self::Scaled {
                base: Box::new(other),
                outer,
                inner,
            },
        })
    }

    pub fn tabulated(knots: Vec<(f64, f64)>, tail: f64) -> Result<Self> {
        Ok(Self::Tabulated(Tabulated::new(knots, tail)?))
    }

    /// True when values come from a closed-form expression (no quadrature).
    pub fn is_closed_form(&self) -> bool {
        match self {
            Self::Power { .. } | Self::ExpMinusLinear | Self::Entropy => true,
            Self::Tabulated(_) | Self::Conjugate(_) => false,
            Self::Scaled { base, .. } => base.is_closed_form(),
        }
    }

    /// Re-checks the parameter invariants (useful after deserialisation).
    pub fn validate(&self) -> Result<()> {
        match self {
            Self::Power { p } => Self::power(*p).map(|_| ()),
            Self::ExpMinusLinear | Self::Entropy => Ok(()),
            Self::Tabulated(t) => Tabulated::new(t.knots.clone(), t.tail).map(|_| ()),
            Self::Scaled { base, outer, inner } => {
                if !(*outer > 0.0 && *inner > 0.0) {
                    return Err(Error::InvalidInput("scale factors must be positive".into()));
                }
                base.validate()
            }
            Self::Conjugate(b) => b.validate(),
        }
    }

    pub fn value(&self, x: f64) -> f64 {
        debug_assert!(x >= 0.0 || x.is_nan());
        if x <= 0.0 {
            return 0.0;
        }
        match self {
            Self::Power { p } => x.powf(*p) / p,
            Self::ExpMinusLinear => x.exp_m1() - x,
            Self::Entropy => (1.0 + x) * x.ln_1p() - x,
            Self::Tabulated(t) => t.value(x),
            Self::Scaled { base, outer, inner } => outer * base.value(inner * x),
            Self::Conjugate(b) => conjugate_by_quadrature(b, x),
        }
    }

    pub fn derivative(&self, x: f64) -> f64 {
        if x <= 0.0 {
            return 0.0;
        }
        match self {
            Self::Power { p } => x.powf(p - 1.0),
            Self::ExpMinusLinear => x.exp_m1(),
            Self::Entropy => x.ln_1p(),
            Self::Tabulated(t) => t.derivative(x),
            Self::Scaled { base, outer, inner } => outer * inner * base.derivative(inner * x),
            Self::Conjugate(b) => b.inv_derivative(x),
        }
    }

    pub fn second_derivative(&self, x: f64) -> f64 {
        let x = x.max(0.0);
        match self {
            Self::Power { p } => {
                if x == 0.0 {
                    if *p < 2.0 {
                        f64::INFINITY
                    } else if *p == 2.0 {
                        1.0
                    } else {
                        0.0
                    }
                } else {
                    (p - 1.0) * x.powf(p - 2.0)
                }
            }
            Self::ExpMinusLinear => x.exp(),
            Self::Entropy => 1.0 / (1.0 + x),
            Self::Tabulated(t) => {
                if x == 0.0 {
                    t.second_derivative(0.0)
                } else {
                    t.second_derivative(x)
                }
            }
            Self::Scaled { base, outer, inner } => outer * inner * inner * base.second_derivative(inner * x),
            Self::Conjugate(b) => {
                let h = b.second_derivative(b.inv_derivative(x));
                if h == 0.0 {
                    f64::INFINITY
                } else {
                    1.0 / h
                }
            }
        }
    }

    /// (F')^{-1}(t) for t >= 0.
    pub fn inv_derivative(&self, t: f64) -> f64 {
        if t <= 0.0 {
            return 0.0;
        }
        match self {
            Self::Power { p } => t.powf(1.0 / (p - 1.0)),
            Self::ExpMinusLinear => t.ln_1p(),
            Self::Entropy => t.exp_m1(),
            Self::Tabulated(tab) => tab.inv_derivative(t),
            Self::Scaled { base, outer, inner } => base.inv_derivative(t / (outer * inner)) / inner,
            Self::Conjugate(b) => b.derivative(t),
        }
    }

    /// Points where the inverse derivative has kinks (used to split quadrature).
    fn inverse_kinks(&self) -> Vec<f64> {
        match self {
            Self::Tabulated(t) => t.knots.iter().map(|k| k.1).collect(),
            Self::Scaled { base, outer, inner } => {
                base.inverse_kinks().into_iter().map(|s| s * outer * inner).collect()
            }
            Self::Conjugate(b) => b.kinks(),
            _ => Vec::new(),
        }
    }

    /// Points where the derivative has kinks.
    fn kinks(&self) -> Vec<f64> {
        match self {
            Self::Tabulated(t) => t.knots.iter().map(|k| k.0).collect(),
            Self::Scaled { base, inner, .. } => base.kinks().into_iter().map(|x| x / inner).collect(),
            Self::Conjugate(b) => b.inverse_kinks(),
            _ => Vec::new(),
        }
    }
}

fn simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, fa: f64, fm: f64, fb: f64, whole: f64, tol: f64, depth: u32) -> f64 {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * tol {
        return left + right + delta / 15.0;
    }
    simpson(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) + simpson(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
}

/// Adaptive composite Simpson quadrature to an absolute tolerance.
pub(crate) fn adaptive_simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    if b <= a {
        return 0.0;
    }
    let fa = f(a);
    let fb = f(b);
    let m = 0.5 * (a + b);
    let fm = f(m);
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    simpson(f, a, b, fa, fm, fb, whole, tol, 48)
}

/// G(y) = integral_0^y (F')^{-1}(t) dt, split at the kinks of (F')^{-1}.
fn conjugate_by_quadrature(base: &YoungFunction, y: f64) -> f64 {
    let mut cuts: Vec<f64> = base.inverse_kinks().into_iter().filter(|&s| s > 0.0 && s < y).collect();
    cuts.sort_by(|a, b| a.partial_cmp(b).unwrap());
    cuts.dedup();
    let mut pts = vec![0.0];
    pts.extend(cuts);
    pts.push(y);
    let f = |t: f64| base.inv_derivative(t);
    let tol = 1e-11 * (1.0 + y);
    pts.windows(2).map(|w| adaptive_simpson(&f, w[0], w[1], tol)).sum()
}

/// Complementary Young function G(y) = max_{x>=0} (xy - F(x)).
///
/// Known families map to their closed-form partner; tabulated functions
/// are conjugated numerically.
pub fn complementary(f: &YoungFunction) -> Result<YoungFunction> {
    f.validate()?;
    Ok(match f {
        YoungFunction::Power { p } => YoungFunction::Power { p: p / (p - 1.0) },
        YoungFunction::ExpMinusLinear => YoungFunction::Entropy,
        YoungFunction::Entropy => YoungFunction::ExpMinusLinear,
        YoungFunction::Tabulated(_) => YoungFunction::Conjugate(Box::new(f.clone())),
        YoungFunction::Conjugate(b) => (**b).clone(),
        YoungFunction::Scaled { base, outer, inner } => {
            YoungFunction::scaled(complementary(base)?, *outer, 1.0 / (outer * inner))?
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tab() -> YoungFunction {
        YoungFunction::tabulated(vec![(0.0, 0.0), (1.0, 0.5), (2.0, 2.0), (3.0, 4.0)], 3.0).unwrap()
    }

    #[test]
    fn closed_form_pairs() {
        let g = complementary(&YoungFunction::power(2.0).unwrap()).unwrap();
        assert_eq!(g, YoungFunction::Power { p: 2.0 });
        let g = complementary(&YoungFunction::power(3.0).unwrap()).unwrap();
        for y in [0.1, 1.0, 2.5, 7.0] {
            assert!((g.value(y) - 2.0 / 3.0 * y.powf(1.5)).abs() < 1e-12);
        }
        let g = complementary(&YoungFunction::ExpMinusLinear).unwrap();
        for y in [0.1, 1.0, 2.5, 7.0] {
            assert!((g.value(y) - ((1.0 + y) * (1.0 + y).ln() - y)).abs() < 1e-12);
        }
    }

    #[test]
    fn tabulated_is_continuous_at_knots() {
        let f = tab();
        for &(x, s) in &[(1.0, 0.5), (2.0, 2.0), (3.0, 4.0)] {
            assert!((f.derivative(x - 1e-12) - s).abs() < 1e-9);
            assert!((f.derivative(x + 1e-12) - s).abs() < 1e-9);
            assert!((f.value(x - 1e-12) - f.value(x + 1e-12)).abs() < 1e-9);
            assert!((f.inv_derivative(s) - x).abs() < 1e-12);
        }
        assert_eq!(f.derivative(0.0), 0.0);
    }

    #[test]
    fn tabulated_rejects_non_increasing_slopes() {
        let e = YoungFunction::tabulated(vec![(0.0, 0.0), (1.0, 1.0), (2.0, 1.0)], 2.0);
        assert!(matches!(e, Err(Error::InvalidInput(_))));
        let e = YoungFunction::tabulated(vec![(0.0, 0.0), (1.0, 1.0)], 1.0);
        assert!(e.is_err());
    }

    #[test]
    fn tabulated_conjugate_satisfies_legendre_identity() {
        let f = tab();
        let g = complementary(&f).unwrap();
        for x in [0.3, 1.0, 1.7, 2.5, 4.0, 6.0] {
            let y = f.derivative(x);
            assert!((x * y - f.value(x) - g.value(y)).abs() < 1e-8, "x = {x}");
        }
    }

    #[test]
    fn scaled_conjugate() {
        let f = YoungFunction::scaled(YoungFunction::power(2.0).unwrap(), 0.01, 1.0).unwrap();
        let g = complementary(&f).unwrap();
        // 0.01 x^2/2 <-> 100 y^2/2
        assert!((g.value(0.5) - 12.5).abs() < 1e-12);
    }
}
