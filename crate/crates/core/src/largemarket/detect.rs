use super::family::MarketFamily;
use super::sets::ENUMERATION_LIMIT;
use crate::convexsolve::{lp_solve, lp_solve_exact, LinearProgram, LpOutcome, Sense};
use crate::error::{Error, Result};
use crate::market::{check_na, in_c, FiniteMarket, GainsBasis};
use num::Signed;
use rayon::prelude::*;
use std::fmt;

const EXACT_LEAF_LIMIT: usize = 12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Condition {
    Aa1,
    Aa2,
    Saa,
    Aflbr,
    NamflWc,
    NaflSep,
}

impl Condition {
    pub fn name(self) -> &'static str {
        match self {
            Condition::Aa1 => "AA1",
            Condition::Aa2 => "AA2",
            Condition::Saa => "SAA",
            Condition::Aflbr => "AFLBR",
            Condition::NamflWc => "NAMFL-wc",
            Condition::NaflSep => "NAFL-sep",
        }
    }
}

impl fmt::Display for Condition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Found,
    NotFoundOnPrefix,
    /// Absent for the whole sequence, by a closed-form argument.
    CertifiedAbsent,
}

impl Status {
    pub fn name(self) -> &'static str {
        match self {
            Status::Found => "found",
            Status::NotFoundOnPrefix => "not-found-on-prefix",
            Status::CertifiedAbsent => "certified-absent",
        }
    }
}

impl fmt::Display for Status {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// One term `xi^k` of a certificate sequence, living in market `n`.
#[derive(Debug, Clone, PartialEq)]
pub struct CertStep {
    pub k: usize,
    pub n: usize,
    /// The gain is at least `-floor` everywhere.
    pub floor: f64,
    /// The gain is at least `level` on `set`.
    pub level: f64,
    pub strategy: Vec<f64>,
    pub payoff: Vec<f64>,
    pub set: Vec<usize>,
    /// `P^n(set)`.
    pub mass: f64,
    /// `min(payoff, level)`, a superreplicable claim.
    pub claim: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Verdict {
    pub condition: Condition,
    pub status: Status,
    pub steps: Vec<CertStep>,
    /// Per index of the prefix: the largest mass of an event on which some
    /// admissible gain reaches the level of that index.
    pub profile: Vec<f64>,
    pub alpha: Option<f64>,
    pub note: String,
}

/// Schedules `c_k = c_scale / k`, `L_k = l_scale * k`, the level `alpha`
/// used for AA2/SAA/AFLBR searches, and the enumeration limit.
#[derive(Debug, Clone, PartialEq)]
pub struct DetectParams {
    pub c_scale: f64,
    pub l_scale: f64,
    pub alpha: f64,
    pub enumeration_limit: usize,
}

impl Default for DetectParams {
    fn default() -> Self {
        Self { c_scale: 1.0, l_scale: 1.0, alpha: 0.1, enumeration_limit: ENUMERATION_LIMIT }
    }
}

impl DetectParams {
    pub fn c(&self, k: usize) -> f64 {
        self.c_scale / k as f64
    }

    pub fn l(&self, k: usize) -> f64 {
        self.l_scale * k as f64
    }

    fn validate(&self) -> Result<()> {
        if !(self.c_scale > 0.0 && self.l_scale > 0.0 && self.alpha > 0.0 && self.alpha <= 1.0) {
            return Err(Error::InvalidInput("schedules must be positive and alpha in (0,1]".into()));
        }
        Ok(())
    }
}

fn step(market: &FiniteMarket, k: usize, floor: f64, level: f64, strategy: Vec<f64>, set: Vec<usize>) -> CertStep {
    let b = market.gains_basis();
    let payoff = if b.ncols() == 0 { vec![0.0; b.nrows()] } else { b.payoff(&strategy) };
    let claim = payoff.iter().map(|x| x.min(level)).collect();
    CertStep { k, n: k, floor, level, mass: market.space().mass(&set), strategy, payoff, set, claim }
}

/// A strategy with `B xi >= -floor` and `B xi >= level` on `set`.
fn event_strategy(b: &GainsBasis, floor: f64, level: f64, set: &[usize]) -> Result<Option<Vec<f64>>> {
    let k = b.ncols();
    if k == 0 {
        return Ok((set.is_empty() || level <= 0.0).then(Vec::new));
    }
    let mut lp = LinearProgram::new(Sense::Minimize, vec![0.0; k]);
    for j in 0..k {
        lp.free(j);
    }
    let mut inset = vec![false; b.nrows()];
    for &i in set {
        inset[i] = true;
    }
    for (i, on) in inset.iter().enumerate() {
        lp.add_ge(b.row(i), if *on { level } else { -floor });
    }
    Ok(lp_solve(&lp)?.optimal().map(|(x, _)| x))
}

struct Event {
    mass: f64,
    set: Vec<usize>,
    strategy: Vec<f64>,
}

/// Largest-mass event on which a gain bounded below by `-floor` reaches
/// `level`: branch and bound over atoms when small, greedy otherwise.
fn max_mass_event(market: &FiniteMarket, floor: f64, level: f64, limit: usize) -> Result<(Event, bool)> {
    let b = market.gains_basis();
    let p = market.space().probs();
    let n = p.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| p[j].partial_cmp(&p[i]).unwrap().then(i.cmp(&j)));
    let tol = 1e-9 * level.abs().max(1.0);
    let covers = |xi: &[f64], i: usize| -> bool {
        !xi.is_empty() && b.row(i).iter().zip(xi).map(|(a, c)| a * c).sum::<f64>() >= level - tol
    };
    let mut best = Event { mass: 0.0, set: Vec::new(), strategy: vec![0.0; b.ncols()] };
    if n > limit {
        let mut cur = Vec::new();
        for &i in &order {
            cur.push(i);
            match event_strategy(b, floor, level, &cur)? {
                Some(xi) => {
                    best = Event { mass: market.space().mass(&cur), set: cur.clone(), strategy: xi };
                }
                None => {
                    cur.pop();
                }
            }
        }
        best.set.sort_unstable();
        return Ok((best, false));
    }
    let mut suffix = vec![0.0; n + 1];
    for pos in (0..n).rev() {
        suffix[pos] = suffix[pos + 1] + p[order[pos]];
    }
    struct Ctx<'a> {
        order: &'a [usize],
        suffix: &'a [f64],
        p: &'a [f64],
    }
    fn dfs(
        ctx: &Ctx,
        pos: usize,
        cur: &mut Vec<usize>,
        mass: f64,
        xi: &[f64],
        best: &mut Event,
        feasible: &mut dyn FnMut(&[usize], &[f64], usize) -> Result<Option<Vec<f64>>>,
    ) -> Result<()> {
        if mass > best.mass + 1e-15 {
            *best = Event { mass, set: cur.clone(), strategy: xi.to_vec() };
        }
        if pos == ctx.order.len() || mass + ctx.suffix[pos] <= best.mass + 1e-15 {
            return Ok(());
        }
        let i = ctx.order[pos];
        cur.push(i);
        if let Some(next) = feasible(cur, xi, i)? {
            dfs(ctx, pos + 1, cur, mass + ctx.p[i], &next, best, feasible)?;
        }
        cur.pop();
        dfs(ctx, pos + 1, cur, mass, xi, best, feasible)
    }
    let mut feasible = |set: &[usize], xi: &[f64], i: usize| -> Result<Option<Vec<f64>>> {
        if covers(xi, i) {
            return Ok(Some(xi.to_vec()));
        }
        event_strategy(b, floor, level, set)
    };
    let ctx = Ctx { order: &order, suffix: &suffix, p };
    let start = best.strategy.clone();
    dfs(&ctx, 0, &mut Vec::new(), 0.0, &start, &mut best, &mut feasible)?;
    best.set.sort_unstable();
    Ok((best, true))
}

/// `max t` subject to `B xi >= t`, `t <= 1`: positive iff some gain is
/// strictly positive on every leaf. Decided in exact arithmetic on small trees.
fn positive_everywhere(market: &FiniteMarket) -> Result<Option<Vec<f64>>> {
    let b = market.gains_basis();
    let k = b.ncols();
    if k == 0 {
        return Ok(None);
    }
    let mut obj = vec![0.0; k + 1];
    obj[k] = 1.0;
    let mut lp = LinearProgram::new(Sense::Maximize, obj);
    for j in 0..k {
        lp.free(j);
    }
    lp.set_bounds(k, None, Some(1.0));
    for i in 0..b.nrows() {
        let mut row = b.row(i);
        row.push(-1.0);
        lp.add_ge(row, 0.0);
    }
    let (x, t) = lp_solve(&lp)?
        .optimal()
        .ok_or_else(|| Error::Numerical("positivity LP has no optimum".into()))?;
    let positive = if market.num_leaves() <= EXACT_LEAF_LIMIT {
        match lp_solve_exact(&lp)? {
            LpOutcome::Optimal { value, .. } => value.is_positive(),
            _ => return Err(Error::Numerical("exact positivity LP has no optimum".into())),
        }
    } else {
        t > 1e-9
    };
    if !positive || t <= 0.0 {
        return Ok(None);
    }
    Ok(Some(x[..k].iter().map(|v| v / t).collect()))
}

fn verdict(condition: Condition, status: Status, steps: Vec<CertStep>, profile: Vec<f64>, alpha: Option<f64>, note: &str) -> Verdict {
    Verdict { condition, status, steps, profile, alpha, note: note.to_string() }
}

/// Closed-form verdicts for a family whose market does not depend on `n`:
/// AA1 and AFLBR occur iff the market admits an arbitrage, AA2 and SAA iff
/// some gain is strictly positive on every leaf.
fn stationary_verdicts(family: &MarketFamily, params: &DetectParams) -> Result<[Verdict; 4]> {
    let market = family.market(1)?;
    let big = market.num_leaves() > params.enumeration_limit;
    let absent = if big { Status::NotFoundOnPrefix } else { Status::CertifiedAbsent };
    let prefix = family.prefix();
    let na = check_na(&market)?;
    let (aa1, aflbr) = match na.certificate.filter(|_| !na.holds) {
        Some(cert) => {
            let support: Vec<usize> = (0..cert.payoff.len()).filter(|&i| cert.payoff[i] > 1e-12).collect();
            let low = support.iter().map(|&i| cert.payoff[i]).fold(f64::INFINITY, f64::min);
            let mass = market.space().mass(&support);
            let scaled = |s: f64| cert.strategy.iter().map(|x| x * s).collect::<Vec<_>>();
            let aa1: Vec<CertStep> = (1..=prefix)
                .map(|k| step(&market, k, params.c(k), params.l(k), scaled(params.l(k) / low), support.clone()))
                .collect();
            let aflbr: Vec<CertStep> = (1..=prefix)
                .map(|k| step(&market, k, params.c(k), mass, scaled(mass / low), support.clone()))
                .collect();
            let note = "stationary family with a one-period arbitrage; scaled copies give the sequence";
            (
                verdict(Condition::Aa1, Status::Found, aa1, vec![mass; prefix], None, note),
                verdict(Condition::Aflbr, Status::Found, aflbr, vec![mass; prefix], Some(mass), note),
            )
        }
        None => {
            let note = "stationary family with an equivalent martingale measure: gains bounded below are bounded above";
            (
                verdict(Condition::Aa1, absent, Vec::new(), vec![0.0; prefix], None, note),
                verdict(Condition::Aflbr, absent, Vec::new(), vec![0.0; prefix], None, note),
            )
        }
    };
    let (aa2, saa) = match positive_everywhere(&market)? {
        Some(xi) => {
            let all: Vec<usize> = (0..market.num_leaves()).collect();
            let note = "stationary family with a gain of at least one on every leaf";
            let aa2 = (1..=prefix).map(|k| step(&market, k, 1.0, 1.0, xi.clone(), all.clone())).collect();
            let saa = (1..=prefix).map(|k| step(&market, k, params.c(k), 1.0, xi.clone(), all.clone())).collect();
            (
                verdict(Condition::Aa2, Status::Found, aa2, vec![1.0; prefix], Some(1.0), note),
                verdict(Condition::Saa, Status::Found, saa, vec![1.0; prefix], Some(1.0), note),
            )
        }
        None => {
            let note = "stationary family: every gain vanishes or is negative somewhere, so P(xi >= a) stays below one";
            (
                verdict(Condition::Aa2, absent, Vec::new(), vec![0.0; prefix], None, note),
                verdict(Condition::Saa, absent, Vec::new(), vec![0.0; prefix], None, note),
            )
        }
    };
    Ok([aa1, aa2, saa, aflbr])
}

/// Per-index search for families without a closed form.
fn prefix_verdict(family: &MarketFamily, params: &DetectParams, cond: Condition) -> Result<Verdict> {
    let prefix = family.prefix();
    let tail_start = prefix.div_ceil(2).max(1);
    let results: Vec<(FiniteMarket, Event, bool)> = (1..=prefix)
        .into_par_iter()
        .map(|n| {
            let m = family.market(n)?;
            let (floor, level) = match cond {
                Condition::Aa1 => (params.c(n), params.l(n)),
                Condition::Aa2 => (1.0, params.alpha),
                Condition::Saa | Condition::Aflbr => (params.c(n), params.alpha),
                _ => unreachable!(),
            };
            let (ev, exact) = max_mass_event(&m, floor, level, params.enumeration_limit)?;
            Ok((m, ev, exact))
        })
        .collect::<Result<_>>()?;
    let meets = |n: usize, mass: f64| match cond {
        Condition::Aa1 => mass > 0.0,
        Condition::Aa2 | Condition::Saa => mass >= 1.0 - 1.0 / (n as f64 + 1.0) - 1e-12,
        _ => mass >= params.alpha - 1e-12,
    };
    let profile: Vec<f64> = results.iter().map(|r| r.1.mass).collect();
    let found = (tail_start..=prefix).all(|n| meets(n, profile[n - 1]));
    let exact = results.iter().all(|r| r.2);
    let note = if exact {
        "per-index maximal events by exhaustive search"
    } else {
        "per-index events by greedy search above the enumeration limit"
    };
    if !found {
        return Ok(verdict(cond, Status::NotFoundOnPrefix, Vec::new(), profile, None, note));
    }
    let steps = results
        .into_iter()
        .enumerate()
        .skip(tail_start - 1)
        .map(|(i, (m, ev, _))| {
            let n = i + 1;
            let (floor, level) = match cond {
                Condition::Aa1 => (params.c(n), params.l(n)),
                Condition::Aa2 => (1.0, params.alpha),
                _ => (params.c(n), params.alpha),
            };
            step(&m, n, floor, level, ev.strategy, ev.set)
        })
        .collect();
    let alpha = (cond != Condition::Aa1).then_some(params.alpha);
    Ok(verdict(cond, Status::Found, steps, profile, alpha, note))
}

fn detect(family: &MarketFamily, params: &DetectParams, cond: Condition) -> Result<Verdict> {
    params.validate()?;
    if family.is_stationary() {
        let [aa1, aa2, saa, aflbr] = stationary_verdicts(family, params)?;
        return Ok(match cond {
            Condition::Aa1 => aa1,
            Condition::Aa2 => aa2,
            Condition::Saa => saa,
            _ => aflbr,
        });
    }
    prefix_verdict(family, params, cond)
}

/// Asymptotic arbitrage of the first kind: gains in `c_k K_1` reaching
/// `L_k` with probability bounded away from zero.
pub fn detect_aa1(family: &MarketFamily, params: &DetectParams) -> Result<Verdict> {
    detect(family, params, Condition::Aa1)
}

/// Asymptotic arbitrage of the second kind: gains in `K_1` reaching
/// `alpha` with probability tending to one.
pub fn detect_aa2(family: &MarketFamily, params: &DetectParams) -> Result<Verdict> {
    detect(family, params, Condition::Aa2)
}

/// Strong asymptotic arbitrage: gains in `c_k K_1` reaching `alpha` with
/// probability tending to one.
pub fn detect_saa(family: &MarketFamily, params: &DetectParams) -> Result<Verdict> {
    detect(family, params, Condition::Saa)
}

/// Asymptotic free lunch with bounded risk: gains in `K_1` reaching `alpha`
/// with probability at least `alpha` whose losses beyond `c_k` vanish.
pub fn detect_aflbr(family: &MarketFamily, params: &DetectParams) -> Result<Verdict> {
    detect(family, params, Condition::Aflbr)
}

/// All four detectors in the order AA1, AA2, SAA, AFLBR.
pub fn detect_all(family: &MarketFamily, params: &DetectParams) -> Result<Vec<Verdict>> {
    params.validate()?;
    if family.is_stationary() {
        return Ok(stationary_verdicts(family, params)?.into());
    }
    [Condition::Aa1, Condition::Aa2, Condition::Saa, Condition::Aflbr]
        .into_iter()
        .map(|c| prefix_verdict(family, params, c))
        .collect()
}

/// Re-checks every step of a `found` certificate against the defining
/// inequalities, including superreplicability of the truncated claims.
pub fn verify_verdict(family: &MarketFamily, v: &Verdict) -> Result<bool> {
    if v.status != Status::Found {
        return Ok(true);
    }
    if v.steps.is_empty() {
        return Ok(false);
    }
    for s in &v.steps {
        let m = family.market(s.n)?;
        let b = m.gains_basis();
        let payoff = if b.ncols() == 0 { vec![0.0; b.nrows()] } else { b.payoff(&s.strategy) };
        let tol = 1e-9 * s.level.abs().max(1.0);
        let consistent = payoff.iter().zip(&s.payoff).all(|(a, c)| (a - c).abs() <= tol)
            && payoff.iter().all(|x| *x >= -s.floor - tol)
            && s.set.iter().all(|&i| payoff[i] >= s.level - tol)
            && (m.space().mass(&s.set) - s.mass).abs() <= 1e-12
            && in_c(&m, &s.claim)?.member;
        let target = match v.condition {
            Condition::Aa1 => s.mass > 0.0,
            Condition::Aa2 => s.floor <= 1.0 && s.mass >= 1.0 - 1.0 / (s.k as f64 + 1.0) - 1e-12,
            Condition::Saa => s.mass >= 1.0 - 1.0 / (s.k as f64 + 1.0) - 1e-12,
            Condition::Aflbr => v.alpha.is_some_and(|a| s.mass >= a - 1e-12 && s.level >= a - 1e-12),
            _ => false,
        };
        if !(consistent && target) {
            return Ok(false);
        }
    }
    let monotone = v.steps.windows(2).all(|w| w[0].k < w[1].k && w[1].floor <= w[0].floor && w[1].level >= w[0].level);
    Ok(monotone)
}
