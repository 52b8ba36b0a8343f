use super::cones::GainsBasis;
use super::tree::FiniteMarket;
use crate::convexsolve::{lp_solve, lp_solve_exact, LinearProgram, LpOutcome, Sense};
use crate::error::{Error, Result};
use crate::space::DensityVector;
use nalgebra::{DMatrix, DVector};
use num::{BigRational, Signed, Zero};

/// Leaf counts up to which certificates are re-solved in exact arithmetic.
const EXACT_LEAF_LIMIT: usize = 12;
/// Leaf counts up to which the vertex list of the separating polytope is enumerated.
const VERTEX_LEAF_LIMIT: usize = 16;

/// The polytope `{q >= 0, Σq = 1, B^T q = 0}` of separating measures
/// (given as leaf weights, not densities).
#[derive(Debug, Clone)]
pub struct SeparatingSet {
    basis: GainsBasis,
}

impl SeparatingSet {
    pub fn of(market: &FiniteMarket) -> Self {
        Self { basis: market.gains_basis().clone() }
    }

    pub fn dim(&self) -> usize {
        self.basis.nrows()
    }

    pub fn contains(&self, q: &[f64], tol: f64) -> bool {
        q.len() == self.dim()
            && q.iter().all(|x| *x >= -tol)
            && (q.iter().sum::<f64>() - 1.0).abs() <= tol
            && self.basis.transpose_apply(q).iter().all(|g| g.abs() <= tol)
    }

    /// Rows `[1; B^T]` and right-hand side `(1, 0, ...)`.
    fn system(&self) -> (DMatrix<f64>, DVector<f64>) {
        let n = self.dim();
        let k = self.basis.ncols();
        let a = DMatrix::from_fn(k + 1, n, |r, c| if r == 0 { 1.0 } else { self.basis.matrix()[(c, r - 1)] });
        let mut b = DVector::zeros(k + 1);
        b[0] = 1.0;
        (a, b)
    }

    /// An LP over the leaf weights constrained to the polytope.
    fn lp(&self, sense: Sense, objective: Vec<f64>, extra: usize) -> LinearProgram {
        let n = self.dim();
        let mut obj = objective;
        obj.resize(n + extra, 0.0);
        let mut lp = LinearProgram::new(sense, obj);
        let mut ones = vec![1.0; n];
        ones.resize(n + extra, 0.0);
        lp.add_eq(ones, 1.0);
        for j in 0..self.basis.ncols() {
            let mut row = self.basis.column(j);
            row.resize(n + extra, 0.0);
            lp.add_eq(row, 0.0);
        }
        lp
    }

    /// All vertices, in increasing order of their support bitmask.
    pub fn vertices(&self) -> Result<Vec<Vec<f64>>> {
        let n = self.dim();
        if n > VERTEX_LEAF_LIMIT {
            return Err(Error::Unsupported(format!("vertex enumeration limited to {VERTEX_LEAF_LIMIT} leaves, market has {n}")));
        }
        let (a, b) = self.system();
        let scale = 1.0 + a.amax();
        let rank = a.clone().svd(false, false).rank(1e-10 * scale);
        let mut out = Vec::new();
        for mask in 1u32..(1u32 << n) {
            let size = mask.count_ones() as usize;
            if size > rank {
                continue;
            }
            let cols: Vec<usize> = (0..n).filter(|i| mask >> i & 1 == 1).collect();
            let sub = DMatrix::from_fn(a.nrows(), size, |r, c| a[(r, cols[c])]);
            let svd = sub.clone().svd(true, true);
            if svd.rank(1e-10 * scale) < size {
                continue;
            }
            let Ok(x) = svd.solve(&b, 1e-14) else { continue };
            if (&sub * &x - &b).amax() > 1e-9 * scale || x.iter().any(|v| *v <= 1e-12) {
                continue;
            }
            let mut q = vec![0.0; n];
            for (c, &i) in cols.iter().enumerate() {
                q[i] = x[c];
            }
            let total: f64 = q.iter().sum();
            q.iter_mut().for_each(|v| *v /= total);
            out.push(q);
        }
        Ok(out)
    }

    /// Maximum of `q_i` over the polytope, with a maximiser; `None` when empty.
    pub fn max_weight(&self, i: usize) -> Result<Option<(f64, Vec<f64>)>> {
        let mut obj = vec![0.0; self.dim()];
        obj[i] = 1.0;
        match lp_solve(&self.lp(Sense::Maximize, obj, 0))? {
            LpOutcome::Optimal { x, value } => Ok(Some((value, x))),
            LpOutcome::Infeasible => Ok(None),
            LpOutcome::Unbounded => Err(Error::Numerical("bounded LP reported unbounded".into())),
        }
    }
}

/// Equivalent martingale measure density `dQ/dP`, if one exists: maximises
/// the smallest leaf weight over the separating polytope and accepts when it
/// exceeds 1e-10.
pub fn find_emm(market: &FiniteMarket) -> Result<Option<DensityVector>> {
    let sep = SeparatingSet::of(market);
    let n = sep.dim();
    let mut obj = vec![0.0; n + 1];
    obj[n] = 1.0;
    let mut lp = sep.lp(Sense::Maximize, obj, 1);
    lp.free(n);
    for i in 0..n {
        let mut row = vec![0.0; n + 1];
        row[i] = -1.0;
        row[n] = 1.0;
        lp.add_le(row, 0.0);
    }
    match lp_solve(&lp)? {
        LpOutcome::Optimal { x, value } if value > 1e-10 => {
            let q: Vec<f64> = x[..n].iter().map(|v| v.max(0.0)).collect();
            let total: f64 = q.iter().sum();
            let q: Vec<f64> = q.iter().map(|v| v / total).collect();
            Ok(Some(DensityVector::from_measure(&q, market.space())?))
        }
        LpOutcome::Unbounded => Err(Error::Numerical("martingale measure LP unbounded".into())),
        _ => Ok(None),
    }
}

/// A separating measure (leaf weights) with the largest possible support:
/// the average of per-leaf maximisers. `None` when the polytope is empty.
pub fn max_support_separating(market: &FiniteMarket) -> Result<Option<Vec<f64>>> {
    let sep = SeparatingSet::of(market);
    let n = sep.dim();
    let mut covered = vec![false; n];
    let mut picks: Vec<Vec<f64>> = Vec::new();
    for i in 0..n {
        if covered[i] {
            continue;
        }
        let Some((value, q)) = sep.max_weight(i)? else { return Ok(None) };
        if value > 1e-12 {
            for (c, v) in covered.iter_mut().zip(&q) {
                *c |= *v > 1e-12;
            }
            picks.push(q);
        }
    }
    if picks.is_empty() {
        return Ok(None);
    }
    let mut q = vec![0.0; n];
    for p in &picks {
        for (a, b) in q.iter_mut().zip(p) {
            *a += b.max(0.0) / picks.len() as f64;
        }
    }
    for v in q.iter_mut() {
        if *v <= 1e-12 {
            *v = 0.0;
        }
    }
    let total: f64 = q.iter().sum();
    Ok(Some(q.into_iter().map(|v| v / total).collect()))
}

/// An arbitrage: a gain `f = B xi` with `f >= 0` and positive expectation.
#[derive(Debug, Clone, PartialEq)]
pub struct ArbitrageCertificate {
    pub strategy: Vec<f64>,
    pub payoff: Vec<f64>,
    /// `E_P[f]`.
    pub gain: f64,
    /// Rational strategy from the exact re-solve (small markets only).
    pub exact_strategy: Option<Vec<BigRational>>,
    /// Outcome of [`verify_arbitrage_exact`] on the rational strategy.
    pub exact_verified: Option<bool>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NaVerdict {
    /// No arbitrage: C ∩ L∞₊ = {0}.
    pub holds: bool,
    pub emm: Option<DensityVector>,
    pub certificate: Option<ArbitrageCertificate>,
}

fn arbitrage_lp(market: &FiniteMarket) -> LinearProgram {
    // variables (xi, f): max p·f s.t. f = B xi, 0 <= f <= 1
    let b = market.gains_basis();
    let k = b.ncols();
    let n = b.nrows();
    let mut obj = vec![0.0; k];
    obj.extend_from_slice(market.space().probs());
    let mut lp = LinearProgram::new(Sense::Maximize, obj);
    for j in 0..k {
        lp.free(j);
    }
    for i in 0..n {
        lp.set_bounds(k + i, Some(0.0), Some(1.0));
        let mut row: Vec<f64> = b.row(i).iter().map(|x| -x).collect();
        row.resize(k + n, 0.0);
        row[k + i] = 1.0;
        lp.add_eq(row, 0.0);
    }
    lp
}

/// Exact check that `B xi >= 0` with `E_P[B xi] > 0`, using the rational
/// values of the stored `f64` prices and probabilities.
pub fn verify_arbitrage_exact(market: &FiniteMarket, xi: &[BigRational]) -> bool {
    let b = market.gains_basis();
    if xi.len() != b.ncols() {
        return false;
    }
    let exact = |x: f64| BigRational::from_float(x).expect("finite");
    let mut gain = BigRational::zero();
    for (i, p) in market.space().probs().iter().enumerate() {
        let mut f = BigRational::zero();
        for (j, x) in xi.iter().enumerate() {
            let bij = b.matrix()[(i, j)];
            if bij != 0.0 {
                f += exact(bij) * x;
            }
        }
        if f.is_negative() {
            return false;
        }
        gain += f * exact(*p);
    }
    gain.is_positive()
}

/// No-arbitrage check. The verdict comes from the arbitrage LP
/// `max E_P[f]` over `f ∈ K, 0 <= f <= 1`; the martingale measure search is
/// run alongside and reported.
pub fn check_na(market: &FiniteMarket) -> Result<NaVerdict> {
    let emm = find_emm(market)?;
    let b = market.gains_basis();
    if b.ncols() == 0 {
        return Ok(NaVerdict { holds: true, emm, certificate: None });
    }
    let lp = arbitrage_lp(market);
    let (xi, value) = match lp_solve(&lp)? {
        LpOutcome::Optimal { x, value } => (x, value),
        other => return Err(Error::Numerical(format!("arbitrage LP returned {other:?}"))),
    };
    if value <= 1e-10 {
        return Ok(NaVerdict { holds: true, emm, certificate: None });
    }
    let xi = xi[..b.ncols()].to_vec();
    let payoff = b.payoff(&xi);
    let (exact_strategy, exact_verified) = if market.num_leaves() <= EXACT_LEAF_LIMIT {
        match lp_solve_exact(&lp)? {
            LpOutcome::Optimal { mut x, .. } => {
                x.truncate(b.ncols());
                let ok = verify_arbitrage_exact(market, &x);
                (Some(x), Some(ok))
            }
            _ => (None, Some(false)),
        }
    } else {
        (None, None)
    };
    Ok(NaVerdict {
        holds: false,
        emm,
        certificate: Some(ArbitrageCertificate { strategy: xi, payoff, gain: value, exact_strategy, exact_verified }),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn one(s1: &[f64], p: &[f64]) -> FiniteMarket {
        FiniteMarket::one_period(p, vec![0.0], s1.iter().map(|x| vec![*x]).collect()).unwrap()
    }

    #[test]
    fn emm_examples() {
        let q = find_emm(&one(&[1.0, -1.0], &[0.5, 0.5])).unwrap().unwrap();
        let m = q.measure(one(&[1.0, -1.0], &[0.5, 0.5]).space());
        assert!((m[0] - 0.5).abs() < 1e-12 && (m[1] - 0.5).abs() < 1e-12);
        let mk = one(&[2.0, -1.0], &[0.5, 0.5]);
        let m = find_emm(&mk).unwrap().unwrap().measure(mk.space());
        assert!((m[0] - 1.0 / 3.0).abs() < 1e-12 && (m[1] - 2.0 / 3.0).abs() < 1e-12);
        assert!(find_emm(&one(&[1.0, 0.0], &[0.3, 0.7])).unwrap().is_none());
    }

    #[test]
    fn na_examples() {
        assert!(check_na(&one(&[1.0, -1.0], &[0.5, 0.5])).unwrap().holds);
        let flat = one(&[0.0, 0.0], &[0.5, 0.5]);
        assert!(check_na(&flat).unwrap().holds);
        let isolated = one(&[1.0, 0.0], &[0.3, 0.7]);
        let v = check_na(&isolated).unwrap();
        assert!(!v.holds && v.emm.is_none());
        let c = v.certificate.unwrap();
        assert!((c.payoff[0] - 1.0).abs() < 1e-12 && c.payoff[1].abs() < 1e-12);
        assert!((c.gain - 0.3).abs() < 1e-12);
        assert_eq!(c.exact_verified, Some(true));
    }

    #[test]
    fn exact_verifier_rejects_negative_payoffs() {
        let m = one(&[1.0, -1.0], &[0.5, 0.5]);
        assert!(!verify_arbitrage_exact(&m, &[BigRational::from_integer(1.into())]));
        let k = one(&[1.0, 0.0], &[0.3, 0.7]);
        assert!(verify_arbitrage_exact(&k, &[BigRational::from_integer(2.into())]));
        assert!(!verify_arbitrage_exact(&k, &[BigRational::zero()]));
    }

    #[test]
    fn vertices_of_two_asset_market() {
        // three leaves, one asset: the separating set is a single point
        let m = one(&[1.0, -1.0, 0.0], &[0.2, 0.3, 0.5]);
        let v = SeparatingSet::of(&m).vertices().unwrap();
        assert_eq!(v.len(), 2);
        assert!(v.contains(&vec![0.0, 0.0, 1.0]));
        assert!(v.iter().any(|q| (q[0] - 0.5).abs() < 1e-12 && (q[1] - 0.5).abs() < 1e-12));
        for q in &v {
            assert!(SeparatingSet::of(&m).contains(q, 1e-12));
        }
    }

    #[test]
    fn max_support_of_isolated_is_conditional_on_b() {
        let k = one(&[1.0, 0.0], &[0.3, 0.7]);
        let q = max_support_separating(&k).unwrap().unwrap();
        assert_eq!(q, vec![0.0, 1.0]);
        assert!(max_support_separating(&one(&[1.0, 2.0], &[0.5, 0.5])).unwrap().is_none());
    }
}
