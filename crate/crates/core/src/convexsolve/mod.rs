//! Small dense solver kernel shared by the other modules.

mod barrier;
mod cone;
mod knapsack;
mod scalar;
mod simplex;

pub use barrier::{barrier_minimize, BarrierOptions, BarrierSolution, SmoothConvex};
pub use cone::{min_over_cone, ConeObjective, ConeSolution};
pub use knapsack::{knap_min, ConstrainedClaimSet};
pub use scalar::{bisect_root, min_convex_1d};
pub use simplex::{lp_solve, lp_solve_exact, residual, LinearProgram, LpOutcome, LpScalar, Sense};
