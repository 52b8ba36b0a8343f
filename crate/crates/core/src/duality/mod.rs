//! Expected-utility maximisation over the superreplication cone and its
//! convex dual over separating measures.

mod bracket;
mod dual;
mod primal;

pub use bracket::{lambda_bracket, separating_from_set, SetSeparation};
pub use dual::{dual_objective, sup_utility_dual, DualSolution};
pub use primal::{sup_utility_primal, PrimalSolution, UtilityProblem};
pub(crate) use dual::dual_generators;
pub(crate) use primal::minimise_shortfall;
