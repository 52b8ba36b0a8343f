use super::family::{MarketFamily, MeasureSeq};
use crate::convexsolve::{
    barrier_minimize, knap_min, lp_solve, lp_solve_exact, BarrierOptions, ConstrainedClaimSet, LinearProgram,
    LpOutcome, Sense, SmoothConvex,
};
use crate::duality::{dual_generators, minimise_shortfall};
use crate::error::{Error, Result};
use crate::market::FiniteMarket;
use crate::orlicz::{complementary, luxemburg_norm, polar_gauge, YoungFunction};
use crate::space::DensityVector;
use nalgebra::DMatrix;
use num::BigRational;
use rayon::prelude::*;

const EXACT_LEAF_LIMIT: usize = 12;

/// Young functions tried by default: `x^{3/2}/(3/2)`, `x²/2`, `x³/3`, `e^x - x - 1`.
pub fn default_young_grid() -> Vec<YoungFunction> {
    vec![
        YoungFunction::Power { p: 1.5 },
        YoungFunction::Power { p: 2.0 },
        YoungFunction::Power { p: 3.0 },
        YoungFunction::ExpMinusLinear,
    ]
}

/// A claim of `D^eps` that is superreplicable at zero cost: `w <= B xi`.
#[derive(Debug, Clone, PartialEq)]
pub struct FreeLunchWitness {
    pub w: Vec<f64>,
    pub strategy: Vec<f64>,
    /// Confirmed in exact arithmetic (small trees only).
    pub exact: Option<bool>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct WorstCase {
    /// `max_{w in D^eps} sup_{f in C} E_R[u_F(f - w)]`.
    pub value: f64,
    /// Certified bound on the distance of `value` to the optimum.
    pub gap: f64,
    /// A maximising claim.
    pub worst_w: Vec<f64>,
    /// Dual measure `dQ/dP` and multiplier at the optimiser.
    pub q: Option<DensityVector>,
    pub lambda: f64,
    /// Present when the value is exactly `u(0) = 0` because `D^eps` meets C.
    pub free_lunch: Option<FreeLunchWitness>,
}

/// Largest `E_P[w]` over `0 <= w <= 1` with `w <= B xi`.
fn free_lunch_lp(market: &FiniteMarket, eps: f64) -> Result<Option<FreeLunchWitness>> {
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
        let mut row = b.row(i);
        row.resize(k + n, 0.0);
        row[k + i] = -1.0;
        lp.add_ge(row, 0.0);
    }
    let (x, value) = lp_solve(&lp)?
        .optimal()
        .ok_or_else(|| Error::Numerical("free lunch LP has no optimum".into()))?;
    if value < eps - 1e-12 {
        return Ok(None);
    }
    let exact = if n <= EXACT_LEAF_LIMIT {
        match lp_solve_exact(&lp)? {
            LpOutcome::Optimal { value, .. } => Some(value >= BigRational::from_float(eps).expect("finite")),
            _ => Some(false),
        }
    } else {
        None
    };
    if exact == Some(false) {
        return Ok(None);
    }
    Ok(Some(FreeLunchWitness { w: x[k..].iter().map(|v| v.clamp(0.0, 1.0)).collect(), strategy: x[..k].to_vec(), exact }))
}

/// `E_R[v(D theta)] - eps mu + Σ s` over `(theta, mu, s)`.
struct MinimaxObjective<'a> {
    v: &'a YoungFunction,
    gens: &'a [DensityVector],
    r: &'a [f64],
    eps: f64,
}

impl MinimaxObjective<'_> {
    fn point(&self, x: &[f64]) -> Vec<f64> {
        let mut z = vec![0.0; self.r.len()];
        for (t, g) in x.iter().zip(self.gens) {
            for (zi, gi) in z.iter_mut().zip(&g.values) {
                *zi += t * gi;
            }
        }
        z
    }
}

impl SmoothConvex for MinimaxObjective<'_> {
    fn dim(&self) -> usize {
        self.gens.len() + 1 + self.r.len()
    }

    fn value(&self, x: &[f64]) -> f64 {
        let k = self.gens.len();
        let z = self.point(&x[..k]);
        let ev: f64 = z.iter().zip(self.r).map(|(zi, ri)| ri * self.v.value(zi.max(0.0))).sum();
        ev - self.eps * x[k] + x[k + 1..].iter().sum::<f64>()
    }

    fn gradient(&self, x: &[f64]) -> Vec<f64> {
        let k = self.gens.len();
        let z = self.point(&x[..k]);
        let dz: Vec<f64> = z.iter().zip(self.r).map(|(zi, ri)| ri * self.v.derivative(zi.max(0.0))).collect();
        let mut g: Vec<f64> = self.gens.iter().map(|gen| gen.values.iter().zip(&dz).map(|(a, b)| a * b).sum()).collect();
        g.push(-self.eps);
        g.extend(std::iter::repeat_n(1.0, self.r.len()));
        g
    }

    fn hessian(&self, x: &[f64]) -> DMatrix<f64> {
        let k = self.gens.len();
        let z = self.point(&x[..k]);
        let d: Vec<f64> = z
            .iter()
            .zip(self.r)
            .map(|(zi, ri)| if *zi > 0.0 { (ri * self.v.second_derivative(*zi)).min(1e14) } else { 0.0 })
            .collect();
        let mut h = DMatrix::zeros(self.dim(), self.dim());
        for a in 0..k {
            for b in a..k {
                let s: f64 = (0..d.len()).map(|i| self.gens[a].values[i] * d[i] * self.gens[b].values[i]).sum();
                h[(a, b)] = s;
                h[(b, a)] = s;
            }
        }
        h
    }
}

/// Worst case over `w in D^eps` of the optimal expected utility
/// `sup_{f in C} E_R[u_F(f - w)]`, with `u_F(x) = -F(x^-)`.
///
/// Evaluated in the exchanged form
/// `min_z E_R[v(z)] - min_{w in D^eps} E_R[z w]` over the cone of
/// `lambda dQ/dR`, with the inner knapsack replaced by its LP dual. A
/// superreplicable claim of `D^eps` is detected first; it makes the value
/// exactly zero.
pub fn namfl_worstcase(market: &FiniteMarket, r: &DensityVector, eps: f64, young: &YoungFunction) -> Result<WorstCase> {
    let space = market.space();
    space.check_len(&r.values)?;
    if !r.is_strictly_positive() {
        return Err(Error::InvalidInput("belief density must be strictly positive".into()));
    }
    if !(eps > 0.0 && eps <= 1.0) {
        return Err(Error::Domain(format!("eps must lie in (0,1], got {eps}")));
    }
    if let Some(fl) = free_lunch_lp(market, eps)? {
        return Ok(WorstCase { value: 0.0, gap: 0.0, worst_w: fl.w.clone(), q: None, lambda: 0.0, free_lunch: Some(fl) });
    }
    let rw = r.measure(space);
    let total: f64 = rw.iter().sum();
    let rw: Vec<f64> = rw.iter().map(|x| x / total).collect();
    let p = space.probs();
    let n = p.len();
    let v = complementary(young)?;
    let gens = dual_generators(market, &rw)?;
    let k = gens.len();
    let obj = MinimaxObjective { v: &v, gens: &gens, r: &rw, eps };
    let dim = obj.dim();
    let mut a = Vec::new();
    let mut b = Vec::new();
    let unit = |j: usize, s: f64| {
        let mut row = vec![0.0; dim];
        row[j] = s;
        row
    };
    for j in 0..dim {
        a.push(unit(j, -1.0));
        b.push(0.0);
    }
    // mu p_i - r_i z_i - s_i <= 0
    for i in 0..n {
        let mut row: Vec<f64> = gens.iter().map(|g| -rw[i] * g.values[i]).collect();
        row.push(p[i]);
        row.extend((0..n).map(|j| if j == i { -1.0 } else { 0.0 }));
        a.push(row);
        b.push(0.0);
    }
    // mu <= 1 + Σ r_i z_i / p_i bounds the knapsack multiplier
    let mut row: Vec<f64> = gens.iter().map(|g| -(0..n).map(|i| rw[i] * g.values[i] / p[i]).sum::<f64>()).collect();
    row.push(1.0);
    row.extend(vec![0.0; n]);
    a.push(row);
    b.push(1.0);
    let mu0 = 0.5;
    let mut x0 = vec![1.0 / k as f64; k];
    x0.push(mu0);
    x0.extend(p.iter().map(|pi| mu0 * pi + 1.0));
    let sol = barrier_minimize(&obj, &a, &b, x0, &BarrierOptions::default())?;
    let z = obj.point(&sol.x[..k]);
    let cost: Vec<f64> = z.iter().zip(&rw).map(|(zi, ri)| (zi * ri).max(0.0)).collect();
    let claims = ConstrainedClaimSet::new(eps, space.clone())?;
    let (worst_w, _) = knap_min(&cost, &claims)?;
    let lambda: f64 = cost.iter().sum();
    let q = if lambda > 1e-12 {
        Some(DensityVector::new(cost.iter().zip(p).map(|(c, pi)| c / (lambda * pi)).collect()))
    } else {
        None
    };
    Ok(WorstCase { value: sol.value.min(0.0), gap: sol.gap, worst_w, q, lambda, free_lunch: None })
}

/// [`namfl_worstcase`] for every market of the prefix, with beliefs `R^n`
/// (default `P^n`).
pub fn namfl_table(
    family: &MarketFamily,
    beliefs: Option<&MeasureSeq>,
    eps: f64,
    young: &YoungFunction,
) -> Result<Vec<WorstCase>> {
    let n = family.prefix();
    if let Some(seq) = beliefs {
        seq.validate(family, n)?;
    }
    if family.is_stationary() && beliefs.is_none_or(|s| s.constant) {
        let m = family.market(1)?;
        let r = beliefs.map_or_else(|| DensityVector::ones(m.num_leaves()), |s| s.densities[0].clone());
        let wc = namfl_worstcase(&m, &r, eps, young)?;
        return Ok(vec![wc; n]);
    }
    (1..=n)
        .into_par_iter()
        .map(|i| {
            let m = family.market(i)?;
            let r = beliefs.map_or_else(|| DensityVector::ones(m.num_leaves()), |s| s.densities[i - 1].clone());
            namfl_worstcase(&m, &r, eps, young)
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NaflStatus {
    /// `C` is separated from `D^eps` by the polar of the unit ball.
    NoWitness,
    /// Some `f in C` lies within the polar of a claim of `D^eps`.
    Witness,
    Inconclusive,
}

impl NaflStatus {
    pub fn name(self) -> &'static str {
        match self {
            NaflStatus::NoWitness => "no-witness",
            NaflStatus::Witness => "witness",
            NaflStatus::Inconclusive => "inconclusive",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NaflWitness {
    pub f: Vec<f64>,
    pub w: Vec<f64>,
    /// `f - w`.
    pub g: Vec<f64>,
    pub strategy: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NaflOutcome {
    pub status: NaflStatus,
    /// Bracket `[lower, upper]` for `m = min ||f - w||_G`.
    pub lower: f64,
    pub upper: f64,
    /// Polar gauge of the best `g` found.
    pub gauge: Option<f64>,
    pub witness: Option<NaflWitness>,
}

/// `E_P[G((w - B xi)^+)]` in the variables `(xi, w)`.
struct Shortfall<'a> {
    g: &'a YoungFunction,
    rows: &'a [Vec<f64>],
    p: &'a [f64],
}

impl Shortfall<'_> {
    fn gaps(&self, x: &[f64]) -> Vec<f64> {
        let k = x.len() - self.p.len();
        self.rows
            .iter()
            .enumerate()
            .map(|(i, row)| x[k + i] - row.iter().zip(&x[..k]).map(|(a, b)| a * b).sum::<f64>())
            .collect()
    }
}

impl SmoothConvex for Shortfall<'_> {
    fn dim(&self) -> usize {
        self.rows.first().map_or(0, |r| r.len()) + self.p.len()
    }

    fn value(&self, x: &[f64]) -> f64 {
        self.gaps(x).iter().zip(self.p).map(|(d, p)| p * self.g.value(d.max(0.0))).sum()
    }

    fn gradient(&self, x: &[f64]) -> Vec<f64> {
        let k = x.len() - self.p.len();
        let mut out = vec![0.0; x.len()];
        for (i, d) in self.gaps(x).iter().enumerate() {
            if *d > 0.0 {
                let s = self.p[i] * self.g.derivative(*d);
                for j in 0..k {
                    out[j] -= s * self.rows[i][j];
                }
                out[k + i] += s;
            }
        }
        out
    }

    fn hessian(&self, x: &[f64]) -> DMatrix<f64> {
        let k = x.len() - self.p.len();
        let dim = x.len();
        let mut h = DMatrix::zeros(dim, dim);
        for (i, d) in self.gaps(x).iter().enumerate() {
            if *d > 0.0 {
                let s = (self.p[i] * self.g.second_derivative(*d)).min(1e14);
                // gradient of the gap: (-row, e_i)
                let mut e = vec![0.0; dim];
                for j in 0..k {
                    e[j] = -self.rows[i][j];
                }
                e[k + i] = 1.0;
                for a in 0..dim {
                    if e[a] == 0.0 {
                        continue;
                    }
                    for b in 0..dim {
                        h[(a, b)] += s * e[a] * e[b];
                    }
                }
            }
        }
        h
    }
}

/// `min E_P[G_a((w - B xi)^+)]` over strategies and `w in D^eps`, with the
/// minimiser `(xi, w)`.
fn scaled_shortfall(market: &FiniteMarket, g: &YoungFunction, a: f64, eps: f64) -> Result<(f64, Vec<f64>, Vec<f64>)> {
    let ga = YoungFunction::scaled(g.clone(), 1.0, 1.0 / a)?;
    let b = market.gains_basis();
    let k = b.ncols();
    let n = b.nrows();
    let rows: Vec<Vec<f64>> = (0..n).map(|i| b.row(i)).collect();
    let p = market.space().probs();
    if eps >= 1.0 - 1e-12 {
        let ones = vec![1.0; n];
        let (xi, val) = minimise_shortfall(&ga, &rows, p, &ones, k)?;
        return Ok((val, xi, ones));
    }
    let obj = Shortfall { g: &ga, rows: &rows, p };
    let dim = k + n;
    let mut am = Vec::new();
    let mut bv = Vec::new();
    for i in 0..n {
        let mut lo = vec![0.0; dim];
        lo[k + i] = -1.0;
        am.push(lo);
        bv.push(0.0);
        let mut hi = vec![0.0; dim];
        hi[k + i] = 1.0;
        am.push(hi);
        bv.push(1.0);
    }
    let mut mean = vec![0.0; k];
    mean.extend(p.iter().map(|x| -x));
    am.push(mean);
    bv.push(-eps);
    let mut x0 = vec![0.0; k];
    x0.extend(vec![(1.0 + eps) / 2.0; n]);
    let sol = barrier_minimize(&obj, &am, &bv, x0, &BarrierOptions::default())?;
    Ok((sol.value, sol.x[..k].to_vec(), sol.x[k..].to_vec()))
}

/// Separation of the superreplicable claims from `D^eps` by the polar of
/// the Orlicz unit ball of `F`.
///
/// Computes `m = min ||(w - B xi)^+||_G` over strategies and `w in D^eps`
/// (`G` the complementary function), the distance from C to `D^eps` in the
/// Luxemburg norm. Since the Luxemburg norm and the polar gauge agree up to
/// a factor two, `m > 1` rules out a witness and `2m <= 1` produces one; in
/// between the polar gauge of the best claim is tried directly.
pub fn nafl_check(market: &FiniteMarket, eps: f64, young: &YoungFunction) -> Result<NaflOutcome> {
    if !(eps > 0.0) {
        return Err(Error::Domain(format!("eps must be positive, got {eps}")));
    }
    if eps > 1.0 + 1e-12 {
        return Ok(NaflOutcome { status: NaflStatus::NoWitness, lower: f64::INFINITY, upper: f64::INFINITY, gauge: None, witness: None });
    }
    let space = market.space();
    let n = space.len();
    if let Some(fl) = free_lunch_lp(market, eps)? {
        let witness = NaflWitness { f: fl.w.clone(), w: fl.w, g: vec![0.0; n], strategy: fl.strategy };
        return Ok(NaflOutcome { status: NaflStatus::Witness, lower: 0.0, upper: 0.0, gauge: Some(0.0), witness: Some(witness) });
    }
    let g = complementary(young)?;
    let mut hi = luxemburg_norm(&vec![eps.min(1.0); n], space, &g)? * (1.0 + 1e-12);
    let mut best = scaled_shortfall(market, &g, hi, eps)?;
    let mut lo = hi / 2.0;
    let mut halvings = 0;
    loop {
        let cand = scaled_shortfall(market, &g, lo, eps)?;
        if cand.0 > 1.0 {
            break;
        }
        hi = lo;
        best = cand;
        lo /= 2.0;
        halvings += 1;
        if halvings > 60 {
            lo = 0.0;
            break;
        }
    }
    while hi - lo > 1e-10 * hi {
        let mid = 0.5 * (lo + hi);
        let cand = scaled_shortfall(market, &g, mid, eps)?;
        if cand.0 <= 1.0 {
            hi = mid;
            best = cand;
        } else {
            lo = mid;
        }
    }
    let (_, xi, w) = best;
    let b = market.gains_basis();
    let gain = if b.ncols() == 0 { vec![0.0; n] } else { b.payoff(&xi) };
    let f: Vec<f64> = w.iter().zip(&gain).map(|(wi, gi)| wi.min(*gi)).collect();
    let gvec: Vec<f64> = f.iter().zip(&w).map(|(a, b)| a - b).collect();
    let gauge = polar_gauge(&gvec, space, young)?;
    let witness = NaflWitness { f, w, g: gvec, strategy: xi };
    let status = if lo > 1.0 {
        NaflStatus::NoWitness
    } else if 2.0 * hi <= 1.0 || gauge <= 1.0 {
        NaflStatus::Witness
    } else {
        NaflStatus::Inconclusive
    };
    let witness = (status == NaflStatus::Witness).then_some(witness);
    Ok(NaflOutcome { status, lower: lo, upper: 2.0 * hi, gauge: Some(gauge), witness })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::duality::{sup_utility_primal, UtilityProblem};
    use crate::orlicz::utility_from_young;

    fn sym() -> FiniteMarket {
        FiniteMarket::one_period(&[0.5, 0.5], vec![0.0], vec![vec![1.0], vec![-1.0]]).unwrap()
    }

    fn quad() -> YoungFunction {
        YoungFunction::power(2.0).unwrap()
    }

    #[test]
    fn isolated_member_is_a_free_lunch() {
        let m = MarketFamily::isolated_arbitrage(0.3, 1).unwrap().market(1).unwrap();
        for f in default_young_grid() {
            for eps in [0.1, 0.3] {
                let wc = namfl_worstcase(&m, &DensityVector::ones(2), eps, &f).unwrap();
                assert_eq!(wc.value, 0.0);
                let fl = wc.free_lunch.unwrap();
                assert_eq!(fl.exact, Some(true));
                assert_eq!(fl.w, vec![1.0, 0.0]);
            }
        }
        assert!(namfl_worstcase(&m, &DensityVector::ones(2), 0.5, &quad()).unwrap().value < 0.0);
    }

    #[test]
    fn full_level_is_the_constant_claim() {
        // D^1 = {1}: sup_xi -E[((1 - xi s)^+)^2 / 2] is attained at xi = 0
        let wc = namfl_worstcase(&sym(), &DensityVector::ones(2), 1.0, &quad()).unwrap();
        assert!((wc.value + 0.5).abs() < 1e-8, "{}", wc.value);
        assert_eq!(wc.worst_w, vec![1.0, 1.0]);
        let prob = UtilityProblem::new(sym(), utility_from_young(&quad()).unwrap(), DensityVector::ones(2), vec![1.0, 1.0]).unwrap();
        assert!((sup_utility_primal(&prob).unwrap().value - wc.value).abs() < 1e-8);
        assert!((wc.lambda - 1.0).abs() < 1e-6);
    }

    #[test]
    fn small_levels_approach_zero() {
        let mut last = f64::NEG_INFINITY;
        for j in 1..8 {
            let wc = namfl_worstcase(&sym(), &DensityVector::ones(2), 2f64.powi(-j), &quad()).unwrap();
            assert!(wc.value < 0.0 && wc.value > last - 1e-10);
            last = wc.value;
        }
        assert!(last > -1e-3);
    }

    #[test]
    fn worst_claim_attains_the_value() {
        let m = FiniteMarket::one_period(&[0.2, 0.5, 0.3], vec![0.0], vec![vec![2.0], vec![0.5], vec![-3.0]]).unwrap();
        let wc = namfl_worstcase(&m, &DensityVector::ones(3), 0.4, &quad()).unwrap();
        let prob = UtilityProblem::new(m, utility_from_young(&quad()).unwrap(), DensityVector::ones(3), wc.worst_w.clone()).unwrap();
        let at_w = sup_utility_primal(&prob).unwrap().value;
        assert!(at_w <= wc.value + 1e-8);
    }

    #[test]
    fn nafl_examples() {
        let flat = FiniteMarket::one_period(&[0.5, 0.5], vec![1.0], vec![vec![1.0], vec![1.0]]).unwrap();
        let small = YoungFunction::scaled(quad(), 0.1, 1.0).unwrap();
        let out = nafl_check(&flat, 1.0, &small).unwrap();
        assert_eq!(out.status, NaflStatus::NoWitness);
        assert!((out.lower - 5f64.sqrt()).abs() < 1e-8);

        let isolated = MarketFamily::isolated_arbitrage(0.3, 1).unwrap().market(1).unwrap();
        let out = nafl_check(&isolated, 0.3, &quad()).unwrap();
        assert_eq!(out.status, NaflStatus::Witness);
        assert_eq!(out.upper, 0.0);
        assert_eq!(out.witness.unwrap().g, vec![0.0, 0.0]);

        assert_eq!(nafl_check(&isolated, 1.5, &quad()).unwrap().status, NaflStatus::NoWitness);
    }

    #[test]
    fn nafl_distance_in_a_fair_market() {
        // constant prices, eps = 1/2: the best claim is w = 1/2, ||1/2||_G = 1/(2 sqrt 2)
        let flat = FiniteMarket::one_period(&[0.5, 0.5], vec![1.0], vec![vec![1.0], vec![1.0]]).unwrap();
        let out = nafl_check(&flat, 0.5, &quad()).unwrap();
        let m = 0.5 / 2f64.sqrt();
        assert!((out.lower - m).abs() < 1e-7, "{}", out.lower);
        assert_eq!(out.status, NaflStatus::Witness);
        let w = out.witness.unwrap();
        assert!(polar_gauge(&w.g, flat.space(), &quad()).unwrap() <= 1.0);
    }
}
