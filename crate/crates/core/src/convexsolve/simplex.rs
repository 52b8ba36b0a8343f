//! Dense two-phase simplex with Bland's rule.
//!
//! The pivoting core is generic over [`LpScalar`] so the same code runs in
//! `f64` and in exact rational arithmetic (used to re-verify certificates).

use crate::error::{Error, Result};
use num::{BigInt, BigRational, Signed, ToPrimitive, Zero};
use std::fmt::Debug;
use std::ops::{Add, Div, Mul, Neg, Sub};

const MAX_PIVOTS: usize = 100_000;

pub trait LpScalar:
    Clone
    + Debug
    + PartialOrd
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
{
    fn zero() -> Self;
    fn one() -> Self;
    /// Strictly positive beyond the scalar's tolerance.
    fn is_pos(&self) -> bool;
    /// Strictly negative beyond the scalar's tolerance.
    fn is_neg(&self) -> bool;
    fn is_negligible(&self) -> bool {
        !self.is_pos() && !self.is_neg()
    }
    fn from_f64(x: f64) -> Self;
    fn to_f64(&self) -> f64;
}

const F64_EPS: f64 = 1e-10;

impl LpScalar for f64 {
    fn zero() -> Self {
        0.0
    }
    fn one() -> Self {
        1.0
    }
    fn is_pos(&self) -> bool {
        *self > F64_EPS
    }
    fn is_neg(&self) -> bool {
        *self < -F64_EPS
    }
    fn from_f64(x: f64) -> Self {
        x
    }
    fn to_f64(&self) -> f64 {
        *self
    }
}

impl LpScalar for BigRational {
    fn zero() -> Self {
        Zero::zero()
    }
    fn one() -> Self {
        num::One::one()
    }
    fn is_pos(&self) -> bool {
        self.is_positive()
    }
    fn is_neg(&self) -> bool {
        self.is_negative()
    }
    fn from_f64(x: f64) -> Self {
        BigRational::from_float(x).unwrap_or_else(|| BigRational::from_integer(BigInt::from(0)))
    }
    fn to_f64(&self) -> f64 {
        ToPrimitive::to_f64(self).unwrap_or(f64::NAN)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sense {
    Minimize,
    Maximize,
}

/// `objective · x` subject to equality rows, `row · x <= rhs` rows and
/// per-variable bounds (`None` means unbounded on that side).
#[derive(Debug, Clone)]
pub struct LinearProgram {
    pub sense: Sense,
    pub objective: Vec<f64>,
    pub eq: Vec<(Vec<f64>, f64)>,
    pub le: Vec<(Vec<f64>, f64)>,
    pub bounds: Vec<(Option<f64>, Option<f64>)>,
}

impl LinearProgram {
    /// A program over `n` variables, all nonnegative by default.
    pub fn new(sense: Sense, objective: Vec<f64>) -> Self {
        let n = objective.len();
        Self {
            sense,
            objective,
            eq: Vec::new(),
            le: Vec::new(),
            bounds: vec![(Some(0.0), None); n],
        }
    }

    pub fn num_vars(&self) -> usize {
        self.objective.len()
    }

    pub fn add_eq(&mut self, row: Vec<f64>, rhs: f64) -> &mut Self {
        self.eq.push((row, rhs));
        self
    }

    pub fn add_le(&mut self, row: Vec<f64>, rhs: f64) -> &mut Self {
        self.le.push((row, rhs));
        self
    }

    pub fn add_ge(&mut self, row: Vec<f64>, rhs: f64) -> &mut Self {
        self.le.push((row.into_iter().map(|a| -a).collect(), -rhs));
        self
    }

    pub fn set_bounds(&mut self, j: usize, lo: Option<f64>, hi: Option<f64>) -> &mut Self {
        self.bounds[j] = (lo, hi);
        self
    }

    pub fn free(&mut self, j: usize) -> &mut Self {
        self.set_bounds(j, None, None)
    }

    fn validate(&self) -> Result<()> {
        let n = self.num_vars();
        if self.bounds.len() != n {
            return Err(Error::InvalidInput("bounds length mismatch".into()));
        }
        for (row, rhs) in self.eq.iter().chain(&self.le) {
            if row.len() != n {
                return Err(Error::InvalidInput(format!(
                    "constraint row of length {} for {} variables",
                    row.len(),
                    n
                )));
            }
            if !rhs.is_finite() || row.iter().any(|a| !a.is_finite()) {
                return Err(Error::InvalidInput("non-finite constraint data".into()));
            }
        }
        if self.objective.iter().any(|c| !c.is_finite()) {
            return Err(Error::InvalidInput("non-finite objective".into()));
        }
        for &(lo, hi) in &self.bounds {
            if let (Some(l), Some(h)) = (lo, hi) {
                if l > h {
                    return Err(Error::InvalidInput(format!("bounds [{l}, {h}] empty")));
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum LpOutcome<T> {
    Optimal { x: Vec<T>, value: T },
    Infeasible,
    Unbounded,
}

impl<T> LpOutcome<T> {
    pub fn is_optimal(&self) -> bool {
        matches!(self, LpOutcome::Optimal { .. })
    }

    pub fn optimal(self) -> Option<(Vec<T>, T)> {
        match self {
            LpOutcome::Optimal { x, value } => Some((x, value)),
            _ => None,
        }
    }
}

/// How an original variable is recovered from standard-form columns.
#[derive(Debug, Clone)]
enum VarMap {
    /// x = lo + y
    Shift { col: usize, lo: f64 },
    /// x = hi - y
    Reflect { col: usize, hi: f64 },
    /// x = y+ - y-
    Split { pos: usize, neg: usize },
}

struct StandardForm<T> {
    a: Vec<Vec<T>>,
    b: Vec<T>,
    c: Vec<T>,
    maps: Vec<VarMap>,
    offset: T,
}

fn to_standard<T: LpScalar>(lp: &LinearProgram) -> StandardForm<T> {
    let n = lp.num_vars();
    let sign = if lp.sense == Sense::Maximize { -1.0 } else { 1.0 };
    let mut maps = Vec::with_capacity(n);
    let mut ncols = 0usize;
    let mut upper_rows: Vec<(usize, f64)> = Vec::new();
    for &(lo, hi) in &lp.bounds {
        match (lo, hi) {
            (Some(l), h) => {
                maps.push(VarMap::Shift { col: ncols, lo: l });
                if let Some(h) = h {
                    upper_rows.push((ncols, h - l));
                }
                ncols += 1;
            }
            (None, Some(h)) => {
                maps.push(VarMap::Reflect { col: ncols, hi: h });
                ncols += 1;
            }
            (None, None) => {
                maps.push(VarMap::Split { pos: ncols, neg: ncols + 1 });
                ncols += 2;
            }
        }
    }
    let n_le = lp.le.len() + upper_rows.len();
    let total = ncols + n_le;

    // Express a row over original variables in terms of columns; the constant
    // part is handled by `shift_in`.
    let expand = |row: &[f64]| -> Vec<T> {
        let mut out = vec![T::zero(); total];
        for (j, &a) in row.iter().enumerate() {
            if a == 0.0 {
                continue;
            }
            match maps[j] {
                VarMap::Shift { col, .. } => {
                    out[col] = out[col].clone() + T::from_f64(a);
                }
                VarMap::Reflect { col, .. } => {
                    out[col] = out[col].clone() - T::from_f64(a);
                }
                VarMap::Split { pos, neg } => {
                    out[pos] = out[pos].clone() + T::from_f64(a);
                    out[neg] = out[neg].clone() - T::from_f64(a);
                }
            }
        }
        out
    };

    let mut a = Vec::new();
    let mut b = Vec::new();
    for (row, rhs) in &lp.eq {
        a.push(expand(row));
        b.push(T::from_f64(*rhs) - shift_in::<T>(row, &maps));
    }
    let mut slack = ncols;
    for (row, rhs) in &lp.le {
        let mut r = expand(row);
        r[slack] = T::one();
        slack += 1;
        a.push(r);
        b.push(T::from_f64(*rhs) - shift_in::<T>(row, &maps));
    }
    for &(col, width) in &upper_rows {
        let mut r = vec![T::zero(); total];
        r[col] = T::one();
        r[slack] = T::one();
        slack += 1;
        a.push(r);
        b.push(T::from_f64(width));
    }

    let cexp = expand(&lp.objective);
    let c: Vec<T> = cexp
        .into_iter()
        .map(|v| if sign < 0.0 { -v } else { v })
        .collect();
    let offset = shift_in::<T>(&lp.objective, &maps);
    StandardForm { a, b, c, maps, offset }
}

/// Exact constant contributed by shifted/reflected variables to `row · x`.
fn shift_in<T: LpScalar>(row: &[f64], maps: &[VarMap]) -> T {
    let mut s = T::zero();
    for (j, &a) in row.iter().enumerate() {
        if a == 0.0 {
            continue;
        }
        match maps[j] {
            VarMap::Shift { lo, .. } => s = s + T::from_f64(a) * T::from_f64(lo),
            VarMap::Reflect { hi, .. } => s = s + T::from_f64(a) * T::from_f64(hi),
            VarMap::Split { .. } => {}
        }
    }
    s
}

struct Tableau<T> {
    /// m rows, each of width ncols + 1 (last entry is the rhs).
    rows: Vec<Vec<T>>,
    basis: Vec<usize>,
    ncols: usize,
}

impl<T: LpScalar> Tableau<T> {
    fn pivot(&mut self, r: usize, col: usize) {
        let piv = self.rows[r][col].clone();
        for v in self.rows[r].iter_mut() {
            *v = v.clone() / piv.clone();
        }
        let prow = self.rows[r].clone();
        for (i, row) in self.rows.iter_mut().enumerate() {
            if i == r {
                continue;
            }
            let f = row[col].clone();
            if is_exactly_zero(&f) {
                continue;
            }
            for (v, p) in row.iter_mut().zip(&prow) {
                *v = v.clone() - f.clone() * p.clone();
            }
        }
        self.basis[r] = col;
    }

    /// Reduced costs for cost vector `c` restricted to allowed columns.
    fn reduced_costs(&self, c: &[T]) -> Vec<T> {
        let mut d: Vec<T> = c.to_vec();
        for (i, row) in self.rows.iter().enumerate() {
            let cb = c[self.basis[i]].clone();
            if is_exactly_zero(&cb) {
                continue;
            }
            for (dj, a) in d.iter_mut().zip(row.iter()) {
                *dj = dj.clone() - cb.clone() * a.clone();
            }
        }
        d
    }

    /// Runs Bland-rule simplex on cost `c`. Returns false if unbounded.
    fn optimize(&mut self, c: &[T], allowed: &[bool]) -> Result<bool> {
        for _ in 0..MAX_PIVOTS {
            let d = self.reduced_costs(c);
            let entering = (0..self.ncols).find(|&j| allowed[j] && d[j].is_neg());
            let Some(col) = entering else {
                return Ok(true);
            };
            let mut best: Option<(usize, T)> = None;
            for (i, row) in self.rows.iter().enumerate() {
                let a = &row[col];
                if !a.is_pos() {
                    continue;
                }
                let ratio = row[self.ncols].clone() / a.clone();
                best = match best {
                    None => Some((i, ratio)),
                    Some((bi, br)) => {
                        if ratio < br || (!(br < ratio) && self.basis[i] < self.basis[bi]) {
                            Some((i, ratio))
                        } else {
                            Some((bi, br))
                        }
                    }
                };
            }
            let Some((r, _)) = best else {
                return Ok(false);
            };
            self.pivot(r, col);
        }
        Err(Error::Numerical(format!(
            "simplex exceeded {MAX_PIVOTS} pivots"
        )))
    }
}

fn is_exactly_zero<T: LpScalar>(x: &T) -> bool {
    !(x.clone() < T::zero()) && !(T::zero() < x.clone())
}

/// Solves `min c·y, A y = b, y >= 0`.
fn solve_standard<T: LpScalar>(a: Vec<Vec<T>>, b: Vec<T>, c: &[T]) -> Result<LpOutcome<T>> {
    let m = a.len();
    let n = c.len();
    // Phase 1 with one artificial per row.
    let ncols = n + m;
    let mut rows = Vec::with_capacity(m);
    for (i, (mut row, rhs)) in a.into_iter().zip(b).enumerate() {
        let neg = rhs.clone() < T::zero();
        if neg {
            row = row.into_iter().map(|v| -v).collect();
        }
        row.resize(ncols + 1, T::zero());
        row[n + i] = T::one();
        row[ncols] = if neg { -rhs } else { rhs };
        rows.push(row);
    }
    let mut t = Tableau {
        rows,
        basis: (n..n + m).collect(),
        ncols,
    };
    let mut c1 = vec![T::zero(); ncols];
    for v in c1.iter_mut().skip(n) {
        *v = T::one();
    }
    let allowed_all = vec![true; ncols];
    t.optimize(&c1, &allowed_all)?;
    let infeas = t
        .rows
        .iter()
        .enumerate()
        .filter(|(i, _)| t.basis[*i] >= n)
        .fold(T::zero(), |acc, (_, r)| acc + r[ncols].clone());
    if infeas.is_pos() {
        return Ok(LpOutcome::Infeasible);
    }
    // Drive artificials out of the basis; drop redundant rows.
    let mut i = 0;
    while i < t.rows.len() {
        if t.basis[i] >= n {
            let col = (0..n).find(|&j| !t.rows[i][j].is_negligible());
            match col {
                Some(j) => t.pivot(i, j),
                None => {
                    t.rows.remove(i);
                    t.basis.remove(i);
                    continue;
                }
            }
        }
        i += 1;
    }
    let mut c2 = c.to_vec();
    c2.resize(ncols, T::zero());
    let mut allowed = vec![true; ncols];
    for v in allowed.iter_mut().skip(n) {
        *v = false;
    }
    if !t.optimize(&c2, &allowed)? {
        return Ok(LpOutcome::Unbounded);
    }
    let mut y = vec![T::zero(); n];
    for (i, &bv) in t.basis.iter().enumerate() {
        if bv < n {
            y[bv] = t.rows[i][ncols].clone();
        }
    }
    let value = c
        .iter()
        .zip(&y)
        .fold(T::zero(), |acc, (ci, yi)| acc + ci.clone() * yi.clone());
    Ok(LpOutcome::Optimal { x: y, value })
}

fn solve_generic<T: LpScalar>(lp: &LinearProgram) -> Result<LpOutcome<T>> {
    lp.validate()?;
    let sf = to_standard::<T>(lp);
    let out = solve_standard(sf.a, sf.b, &sf.c)?;
    Ok(match out {
        LpOutcome::Optimal { x: y, value } => {
            let x: Vec<T> = sf
                .maps
                .iter()
                .map(|m| match *m {
                    VarMap::Shift { col, lo } => T::from_f64(lo) + y[col].clone(),
                    VarMap::Reflect { col, hi } => T::from_f64(hi) - y[col].clone(),
                    VarMap::Split { pos, neg } => y[pos].clone() - y[neg].clone(),
                })
                .collect();
            let v = if lp.sense == Sense::Maximize { -value } else { value };
            LpOutcome::Optimal {
                x,
                value: v + sf.offset,
            }
        }
        other => other,
    })
}

/// Solves the program in `f64`. The returned point is checked against the
/// original constraints; a residual above 1e-7 is reported as a numerical
/// failure carrying the residual as conditioning diagnostic.
pub fn lp_solve(lp: &LinearProgram) -> Result<LpOutcome<f64>> {
    let out = solve_generic::<f64>(lp)?;
    if let LpOutcome::Optimal { x, .. } = &out {
        let res = residual(lp, x);
        let scale = 1.0
            + lp
                .eq
                .iter()
                .chain(&lp.le)
                .map(|(r, b)| r.iter().fold(b.abs(), |m, a| m.max(a.abs())))
                .fold(0.0, f64::max);
        if res > 1e-7 * scale {
            return Err(Error::Numerical(format!(
                "degenerate basis: constraint residual {res:.3e}"
            )));
        }
    }
    Ok(out)
}

/// Solves the program in exact rational arithmetic. All `f64` inputs are
/// converted exactly.
pub fn lp_solve_exact(lp: &LinearProgram) -> Result<LpOutcome<BigRational>> {
    solve_generic::<BigRational>(lp)
}

/// Largest constraint violation of `x`.
pub fn residual(lp: &LinearProgram, x: &[f64]) -> f64 {
    let dot = |r: &[f64]| r.iter().zip(x).map(|(a, b)| a * b).sum::<f64>();
    let mut worst: f64 = 0.0;
    for (r, b) in &lp.eq {
        worst = worst.max((dot(r) - b).abs());
    }
    for (r, b) in &lp.le {
        worst = worst.max(dot(r) - b);
    }
    for (xj, &(lo, hi)) in x.iter().zip(&lp.bounds) {
        if let Some(l) = lo {
            worst = worst.max(l - xj);
        }
        if let Some(h) = hi {
            worst = worst.max(xj - h);
        }
    }
    worst
}
