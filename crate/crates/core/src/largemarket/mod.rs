//! Sequences of finite markets: families, contiguity diagnostics,
//! asymptotic arbitrage detectors, worst-case market free lunch values,
//! separation checks and the construction of a bicontiguous sequence of
//! equivalent martingale measures.

mod build;
mod contiguity;
mod detect;
mod family;
mod hs;
mod namfl;
mod sets;

pub use build::{build_bicontiguous, mix_sequences, BackwardStep, BuildConfig, BuildOutcome, LevelReport, Mixture};
pub use contiguity::{
    contiguity_profile, contiguity_profile_with, default_eps_grid, default_kappa_grid, power_grid, young_domination,
    young_domination_reverse, ContiguityProfile, DirectionProfile, YoungWitness,
};
pub use detect::{
    detect_aa1, detect_aa2, detect_aflbr, detect_all, detect_saa, verify_verdict, CertStep, Condition, DetectParams,
    Status, Verdict,
};
pub use family::{CustomRule, FamilyKind, MarketFamily, MeasureSeq};
pub use hs::{hs_select, separating_densities, HsSelection};
pub use namfl::{
    default_young_grid, nafl_check, namfl_table, namfl_worstcase, FreeLunchWitness, NaflOutcome, NaflStatus,
    NaflWitness, WorstCase,
};
pub use sets::{exhaustive_min_mass, min_mass_subject_to, ratio_order, threshold_sets, ExtremalSet, ENUMERATION_LIMIT};
