//! Computable asymptotic-arbitrage theory for sequences of finite-state markets.
//!
//! The crate is organised bottom-up:
//!
//! - [`convexsolve`]: small dense solvers (simplex, golden section, fractional
//!   knapsack, log-barrier Newton, minimisation over density cones).
//! - [`orlicz`]: Young functions, conjugation, Luxemburg norm, polar gauge and
//!   the bridge between Young functions and concave utilities.
//! - [`market`]: finite event-tree markets, gains/superreplication cones and
//!   the separating (martingale) measure polytope.
//! - [`duality`]: expected-utility maximisation over the superreplication
//!   cone and its convex dual.
//! - [`largemarket`]: market families, contiguity diagnostics, asymptotic
//!   arbitrage detectors, worst-case market free lunch evaluation and the
//!   bicontiguous martingale measure construction.
//! - [`report`]: text and CSV reports.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod convexsolve;
pub mod duality;
pub mod error;
pub mod largemarket;
pub mod market;
pub mod orlicz;
pub mod report;
pub mod space;

pub use error::{Error, Result};
pub use space::{DensityVector, FiniteProbSpace};
