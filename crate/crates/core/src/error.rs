use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("infeasible: {0}")]
    Infeasible(String),

    #[error("unbounded: {0}")]
    Unbounded(String),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("market file error at node `{node}`: {msg}")]
    MarketFile { node: String, msg: String },

    /// Hypothesis of the dual representation fails: the primal value is not
    /// strictly below the threshold. Carries the primal value.
    #[error("dual hypothesis violated: primal value {primal} is not below {threshold}")]
    DualHypothesis { primal: f64, threshold: f64 },

    /// The measure selection hypothesis fails on the listed atoms.
    #[error("selection hypothesis fails on set {set:?} (best mass {best})")]
    SelectionHypothesis { set: Vec<usize>, best: f64 },

    /// A market in the prefix has no equivalent martingale measure.
    #[error("market {n} admits no equivalent martingale measure")]
    NoEquivalentMartingaleMeasure { n: usize },

    /// Worst-case market free lunch value is not below the required level.
    #[error("market free lunch at eps={eps}, n={n}: worst-case value {value}")]
    MarketFreeLunch { eps: f64, n: usize, value: f64 },

    /// A step of the measure construction failed at a specific level, index and event.
    #[error("construction failed at eps={eps}, n={n}, set {set:?}: {msg}")]
    Construction { eps: f64, n: usize, set: Vec<usize>, msg: String },
}
