use super::contiguity::{contiguity_profile_with, default_eps_grid, default_kappa_grid, young_domination, young_domination_reverse, ContiguityProfile, YoungWitness};
use super::family::{MarketFamily, MeasureSeq};
use super::hs::hs_select;
use super::namfl::{default_young_grid, namfl_table};
use super::sets::{mask_to_set, min_mass_subject_to, subset_sums, ENUMERATION_LIMIT};
use crate::duality::{lambda_bracket, separating_from_set};
use crate::error::{Error, Result};
use crate::market::{find_emm, FiniteMarket, SeparatingSet};
use crate::orlicz::YoungFunction;
use crate::space::DensityVector;
use rayon::prelude::*;
use std::collections::BTreeMap;

/// Check of `P(A) <= 2^-j + 2^j Q(A) / mu_j` for every event, where `mu_j`
/// is the smallest mass the level-`j` input gives to events of probability
/// at least `2^-j`.
#[derive(Debug, Clone, PartialEq)]
pub struct BackwardStep {
    pub level: usize,
    pub mu: f64,
    pub holds: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Mixture {
    pub seq: MeasureSeq,
    pub levels: usize,
    /// `1 - 2^-J`.
    pub normalization: f64,
    /// `2^-J`, the weight of the omitted terms.
    pub remainder: f64,
    pub strictly_positive: bool,
    pub backward: Vec<BackwardStep>,
}

/// `Q^n = Σ_{j <= J} 2^-j Q^{n,j} / (1 - 2^-J)` for inputs keyed by `j`
/// (level `eps = 2^-j`), each a sequence of separating measures.
pub fn mix_sequences(family: &MarketFamily, per_level: &BTreeMap<usize, MeasureSeq>, levels: usize) -> Result<Mixture> {
    if levels == 0 {
        return Err(Error::InvalidInput("at least one level is required".into()));
    }
    let n = family.prefix();
    let markets = family.markets()?;
    let mut inputs = Vec::new();
    for j in 1..=levels {
        let seq = per_level
            .get(&j)
            .ok_or_else(|| Error::InvalidInput(format!("no sequence for level {j}")))?;
        seq.validate(family, n)?;
        for (i, (m, d)) in markets.iter().zip(&seq.densities).enumerate() {
            if !SeparatingSet::of(m).contains(&d.measure(m.space()), 1e-9) {
                return Err(Error::InvalidInput(format!(
                    "level {j} measure at n={} is not a separating measure",
                    i + 1
                )));
            }
        }
        inputs.push(seq);
    }
    let remainder = 2f64.powi(-(levels as i32));
    let normalization = 1.0 - remainder;
    let densities: Vec<DensityVector> = (0..n)
        .map(|i| {
            let mut d = vec![0.0; markets[i].num_leaves()];
            for (j, seq) in inputs.iter().enumerate() {
                let w = 2f64.powi(-(j as i32 + 1)) / normalization;
                for (a, b) in d.iter_mut().zip(&seq.densities[i].values) {
                    *a += w * b;
                }
            }
            DensityVector::new(d)
        })
        .collect();
    let constant = family.is_stationary() && inputs.iter().all(|s| s.constant);
    let strictly_positive = densities.iter().all(|d| d.is_strictly_positive());
    let backward = inputs
        .iter()
        .enumerate()
        .map(|(j, seq)| {
            let level = j + 1;
            let eps = 2f64.powi(-(level as i32));
            let mu = markets
                .iter()
                .zip(&seq.densities)
                .map(|(m, d)| min_mass_subject_to(m.space().probs(), &d.measure(m.space()), eps).value)
                .fold(f64::INFINITY, f64::min);
            // max_A P(A) - c Q(A) is attained on {p > c q}
            let holds = mu > 0.0
                && markets.iter().zip(&densities).all(|(m, d)| {
                    let c = 2f64.powi(level as i32) / mu;
                    let excess: f64 = m
                        .space()
                        .probs()
                        .iter()
                        .zip(d.measure(m.space()))
                        .map(|(p, q)| (p - c * q).max(0.0))
                        .sum();
                    excess <= eps + 1e-12
                });
            BackwardStep { level, mu, holds }
        })
        .collect();
    let seq = MeasureSeq { densities, constant };
    Ok(Mixture { seq, levels, normalization, remainder, strictly_positive, backward })
}

#[derive(Debug, Clone)]
pub struct BuildConfig {
    pub young_grid: Vec<YoungFunction>,
    /// `J`: levels `eps = 2^-1, ..., 2^-J`.
    pub levels: usize,
    /// Beliefs `R^n` as densities; `P^n` when absent.
    pub beliefs: Option<MeasureSeq>,
}

impl Default for BuildConfig {
    fn default() -> Self {
        Self { young_grid: default_young_grid(), levels: 6, beliefs: None }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LevelReport {
    pub level: usize,
    pub eps: f64,
    pub young: YoungFunction,
    /// Worst-case value per index.
    pub worst: Vec<f64>,
    pub delta: f64,
    pub bracket: (f64, f64),
    /// `delta / lambda1`.
    pub gamma: f64,
    /// Number of events separated per index.
    pub events: Vec<usize>,
    /// Smallest mass of the selected measure on events with `P > 4 eps`, per index.
    pub selection_mass: Vec<f64>,
    /// `eps² gamma / 2`.
    pub selection_bound: f64,
    /// Young functions rejected at this level with their largest worst-case value.
    pub rejected: Vec<(YoungFunction, f64)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BuildOutcome {
    pub seq: MeasureSeq,
    pub mixture: Mixture,
    pub profile: ContiguityProfile,
    pub forward_witness: Option<YoungWitness>,
    pub backward_witness: Option<YoungWitness>,
    pub levels: Vec<LevelReport>,
}

/// Events with `P(A) >= eps` none of whose proper subsets qualify.
fn minimal_events(probs: &[f64], eps: f64) -> Result<Vec<Vec<usize>>> {
    let n = probs.len();
    if n > ENUMERATION_LIMIT {
        return Err(Error::Unsupported(format!("event enumeration is limited to {ENUMERATION_LIMIT} atoms, market has {n}")));
    }
    let s = subset_sums(probs);
    let ok = |m: usize| s[m] >= eps - 1e-12;
    Ok((1..s.len())
        .filter(|&m| ok(m) && (0..n).all(|b| m >> b & 1 == 0 || !ok(m & !(1 << b))))
        .map(|m| mask_to_set(m, n))
        .collect())
}

/// Level-`eps` measure for one market: separate every minimal event of
/// probability at least `eps` and select from the resulting family.
fn level_measure(
    market: &FiniteMarket,
    r: &DensityVector,
    n: usize,
    eps: f64,
    young: &YoungFunction,
    delta: f64,
    gamma: f64,
) -> Result<(DensityVector, usize, f64)> {
    let events = minimal_events(market.space().probs(), eps)?;
    let mut family = Vec::with_capacity(events.len());
    for set in &events {
        let sep = separating_from_set(market, r, set, young, delta).map_err(|e| Error::Construction {
            eps,
            n,
            set: set.clone(),
            msg: e.to_string(),
        })?;
        family.push(sep.q);
    }
    let sel = hs_select(market.space(), &family, eps, gamma).map_err(|e| match e {
        Error::SelectionHypothesis { set, best } => Error::Construction {
            eps,
            n,
            set,
            msg: format!("selection hypothesis fails (best mass {best})"),
        },
        other => other,
    })?;
    Ok((sel.q, events.len(), sel.min_mass))
}

/// Constructs a sequence of equivalent martingale measures that is
/// bicontiguous to `(P^n)` from the uniform market-free-lunch bound.
///
/// For each level `eps = 2^-j` a Young function of the grid is chosen whose
/// worst-case value stays below `-2 delta` on the prefix; every minimal
/// event of probability `eps` is then separated by a dual optimiser with
/// mass above `gamma = delta / lambda1`, a single measure is selected from
/// these, and the levels are mixed. Failing preconditions are reported with
/// the level, index and event involved.
pub fn build_bicontiguous(family: &MarketFamily, config: &BuildConfig) -> Result<BuildOutcome> {
    let n = family.prefix();
    let markets = family.markets()?;
    for (i, m) in markets.iter().enumerate() {
        if find_emm(m)?.is_none() {
            return Err(Error::NoEquivalentMartingaleMeasure { n: i + 1 });
        }
    }
    if config.young_grid.is_empty() || config.levels == 0 {
        return Err(Error::InvalidInput("the Young grid and the level count must be nonempty".into()));
    }
    let beliefs = match &config.beliefs {
        Some(seq) => {
            seq.validate(family, n)?;
            if seq.densities.iter().any(|d| !d.is_strictly_positive()) {
                return Err(Error::InvalidInput("beliefs must be equivalent to the reference measures".into()));
            }
            seq.clone()
        }
        None => MeasureSeq::reference(family)?,
    };
    let stationary = family.is_stationary() && beliefs.constant;
    let mut per_level = BTreeMap::new();
    let mut reports = Vec::new();
    for (j, eps) in default_eps_grid(config.levels).into_iter().enumerate() {
        let level = j + 1;
        let mut rejected = Vec::new();
        let mut chosen = None;
        for young in &config.young_grid {
            let table = namfl_table(family, Some(&beliefs), eps, young)?;
            let worst: Vec<f64> = table.iter().map(|w| w.value).collect();
            let top = worst.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            if top >= 0.0 || table.iter().any(|w| w.free_lunch.is_some()) {
                rejected.push((young.clone(), top));
                continue;
            }
            chosen = Some((young.clone(), worst, -top / 2.0));
            break;
        }
        let Some((young, worst, delta)) = chosen else {
            let (young, top) = rejected.last().cloned().expect("grid is nonempty");
            let table = namfl_table(family, Some(&beliefs), eps, &young)?;
            let at = table.iter().position(|w| w.value >= top).unwrap_or(0);
            return Err(Error::MarketFreeLunch { eps, n: at + 1, value: top });
        };
        let bracket = lambda_bracket(&young, delta)?;
        let gamma = delta / bracket.1;
        let compute = |i: usize| level_measure(&markets[i], &beliefs.densities[i], i + 1, eps, &young, delta, gamma);
        let rows: Vec<(DensityVector, usize, f64)> = if stationary {
            vec![compute(0)?; n]
        } else {
            (0..n).into_par_iter().map(compute).collect::<Result<_>>()?
        };
        let seq = MeasureSeq { densities: rows.iter().map(|r| r.0.clone()).collect(), constant: stationary };
        per_level.insert(level, seq);
        reports.push(LevelReport {
            level,
            eps,
            young,
            worst,
            delta,
            bracket,
            gamma,
            events: rows.iter().map(|r| r.1).collect(),
            selection_mass: rows.iter().map(|r| r.2).collect(),
            selection_bound: eps * eps * gamma / 2.0,
            rejected,
        });
    }
    let mixture = mix_sequences(family, &per_level, config.levels)?;
    if !mixture.strictly_positive {
        return Err(Error::Numerical("mixture is not equivalent to the reference measures".into()));
    }
    let seq = mixture.seq.clone();
    let profile = contiguity_profile_with(family, &seq, n, &default_eps_grid(config.levels), &default_kappa_grid())?;
    Ok(BuildOutcome {
        forward_witness: young_domination(family, &seq, n)?,
        backward_witness: young_domination_reverse(family, &seq, n)?,
        seq,
        mixture,
        profile,
        levels: reports,
    })
}
