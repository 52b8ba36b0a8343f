use super::tree::FiniteMarket;
use crate::convexsolve::{lp_solve, LinearProgram, LpOutcome, Sense};
use crate::error::{Error, Result};
use nalgebra::{DMatrix, DVector};

/// Terminal payoffs of one-unit positions, one column per (non-terminal
/// node, asset), one row per leaf. The gains cone K is the column span.
#[derive(Debug, Clone, PartialEq)]
pub struct GainsBasis {
    matrix: DMatrix<f64>,
    labels: Vec<(String, usize)>,
}

impl GainsBasis {
    pub(crate) fn empty(rows: usize) -> Self {
        Self { matrix: DMatrix::zeros(rows, 0), labels: Vec::new() }
    }

    pub(crate) fn build(m: &FiniteMarket) -> Self {
        let paths: Vec<Vec<usize>> = (0..m.num_leaves()).map(|l| m.path(l)).collect();
        let mut cols: Vec<Vec<f64>> = Vec::new();
        let mut labels = Vec::new();
        for v in 0..m.node_count() {
            if m.is_leaf_node(v) {
                continue;
            }
            let d = m.node_depth(v);
            for j in 0..m.assets() {
                let col = paths
                    .iter()
                    .map(|p| {
                        if p[d] == v {
                            m.node_prices(p[d + 1])[j] - m.node_prices(v)[j]
                        } else {
                            0.0
                        }
                    })
                    .collect();
                cols.push(col);
                labels.push((m.node_id(v).to_string(), j));
            }
        }
        let rows = m.num_leaves();
        let matrix = DMatrix::from_fn(rows, cols.len(), |i, j| cols[j][i]);
        Self { matrix, labels }
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn ncols(&self) -> usize {
        self.matrix.ncols()
    }

    pub fn nrows(&self) -> usize {
        self.matrix.nrows()
    }

    /// `(node id, asset)` of each column.
    pub fn labels(&self) -> &[(String, usize)] {
        &self.labels
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        self.matrix.column(j).iter().copied().collect()
    }

    pub fn row(&self, i: usize) -> Vec<f64> {
        self.matrix.row(i).iter().copied().collect()
    }

    /// Payoff `B xi` of the strategy `xi`.
    pub fn payoff(&self, xi: &[f64]) -> Vec<f64> {
        assert_eq!(xi.len(), self.ncols());
        (&self.matrix * DVector::from_column_slice(xi)).iter().copied().collect()
    }

    /// `B^T q`: expected gains of each unit position under the leaf weights `q`.
    pub fn transpose_apply(&self, q: &[f64]) -> Vec<f64> {
        (self.matrix.transpose() * DVector::from_column_slice(q)).iter().copied().collect()
    }

    pub fn is_trivial(&self) -> bool {
        self.matrix.iter().all(|x| *x == 0.0)
    }

    pub fn rank(&self) -> usize {
        if self.ncols() == 0 {
            return 0;
        }
        self.matrix.clone().svd(false, false).rank(1e-10 * (1.0 + self.matrix.amax()))
    }
}

/// Result of a superreplication query: `f <= k` for some `k` in K.
#[derive(Debug, Clone, PartialEq)]
pub struct SuperReplication {
    pub member: bool,
    pub strategy: Vec<f64>,
    /// The dominating gain `k = B xi`.
    pub dominating: Vec<f64>,
    /// `k - f`, nonnegative up to the tolerance when `member`.
    pub slack: Vec<f64>,
    /// Smallest uniform shortfall `t` with `f <= k + t`.
    pub shortfall: f64,
}

/// Membership of `f` in the superreplication cone C = (K - L0+) ∩ L∞.
pub fn in_c(market: &FiniteMarket, f: &[f64]) -> Result<SuperReplication> {
    market.space().check_len(f)?;
    if f.iter().any(|x| !x.is_finite()) {
        return Err(Error::InvalidInput("claim has non-finite entries".into()));
    }
    let b = market.gains_basis();
    let k = b.ncols();
    // variables (xi, t): min t s.t. B xi + t >= f, t >= 0
    let mut obj = vec![0.0; k + 1];
    obj[k] = 1.0;
    let mut lp = LinearProgram::new(Sense::Minimize, obj);
    for j in 0..k {
        lp.free(j);
    }
    for (i, fi) in f.iter().enumerate() {
        let mut row = b.row(i);
        row.push(1.0);
        lp.add_ge(row, *fi);
    }
    let (x, t) = match lp_solve(&lp)? {
        LpOutcome::Optimal { x, value } => (x, value),
        other => return Err(Error::Numerical(format!("superreplication LP returned {other:?}"))),
    };
    let strategy = x[..k].to_vec();
    let dominating = if k == 0 { vec![0.0; f.len()] } else { b.payoff(&strategy) };
    let slack = dominating.iter().zip(f).map(|(a, b)| a - b).collect();
    Ok(SuperReplication { member: t <= 1e-9, strategy, dominating, slack, shortfall: t.max(0.0) })
}

/// `f ∈ K₁ = {f ∈ K : f >= -1}`.
pub fn k1_membership(market: &FiniteMarket, f: &[f64]) -> Result<bool> {
    market.space().check_len(f)?;
    if f.iter().any(|x| *x < -1.0 - 1e-12) {
        return Ok(false);
    }
    let b = market.gains_basis();
    let target = DVector::from_column_slice(f);
    if b.ncols() == 0 {
        return Ok(target.amax() <= 1e-9);
    }
    let svd = b.matrix().clone().svd(true, true);
    let xi = svd
        .solve(&target, 1e-12 * (1.0 + b.matrix().amax()))
        .map_err(|e| Error::Numerical(e.to_string()))?;
    let resid = b.matrix() * xi - target;
    Ok(resid.amax() <= 1e-9)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sym() -> FiniteMarket {
        FiniteMarket::one_period(&[0.5, 0.5], vec![0.0], vec![vec![1.0], vec![-1.0]]).unwrap()
    }

    #[test]
    fn one_period_column() {
        let m = sym();
        assert_eq!(m.gains_basis().ncols(), 1);
        assert_eq!(m.gains_basis().column(0), vec![1.0, -1.0]);
        let flat = FiniteMarket::one_period(&[0.5, 0.5], vec![3.0], vec![vec![3.0], vec![3.0]]).unwrap();
        assert!(flat.gains_basis().is_trivial());
        assert_eq!(flat.gains_basis().rank(), 0);
    }

    #[test]
    fn two_period_binomial_basis_matches_expansion() {
        let m = FiniteMarket::binomial(0.5, 2.0, -1.0, 2, 10.0).unwrap();
        let b = m.gains_basis();
        assert_eq!(b.ncols(), 3);
        // leaves uu, ud, du, dd; (H·S)_2 = H0 ΔS1 + H1(node) ΔS2
        for (h0, hu, hd) in [(1.0, 0.0, 0.0), (0.3, -2.0, 0.7), (-1.0, 4.0, 2.5)] {
            let expected = [
                h0 * 2.0 + hu * 2.0,
                h0 * 2.0 + hu * -1.0,
                h0 * -1.0 + hd * 2.0,
                h0 * -1.0 + hd * -1.0,
            ];
            let mut xi = [0.0; 3];
            for (j, (id, _)) in b.labels().iter().enumerate() {
                xi[j] = match id.as_str() {
                    "r" => h0,
                    "ru" => hu,
                    "rd" => hd,
                    other => panic!("{other}"),
                };
            }
            let got = b.payoff(&xi);
            for (g, e) in got.iter().zip(expected) {
                assert!((g - e).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn superreplication_examples() {
        let m = sym();
        let r = in_c(&m, &[-1.0, -0.5]).unwrap();
        assert!(r.member);
        assert!(in_c(&m, &[1.0, -1.0]).unwrap().member);
        let r = in_c(&m, &[0.1, 0.1]).unwrap();
        assert!(!r.member);
        assert!((r.shortfall - 0.1).abs() < 1e-12);
    }

    #[test]
    fn k1_examples() {
        let m = sym();
        assert!(k1_membership(&m, &[0.0, 0.0]).unwrap());
        assert!(k1_membership(&m, &[1.0, -1.0]).unwrap());
        assert!(!k1_membership(&m, &[2.0, -2.0]).unwrap());
        assert!(!k1_membership(&m, &[1.0, 0.0]).unwrap());
    }
}
