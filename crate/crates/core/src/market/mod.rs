//! Finite event-tree markets: gains cone, superreplication cone and the
//! polytope of separating (martingale) measures.

mod cones;
mod measures;
mod tree;

pub use cones::{in_c, k1_membership, GainsBasis, SuperReplication};
pub use measures::{
    check_na, find_emm, max_support_separating, verify_arbitrage_exact, ArbitrageCertificate, NaVerdict,
    SeparatingSet,
};
pub use tree::{FiniteMarket, MarketSpec, NodeSpec};
