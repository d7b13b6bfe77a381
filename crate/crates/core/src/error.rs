use thiserror::Error;

/// Crate-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    /// A moment generating function value diverged or was not finite.
    #[error("log moment generating function is not finite at alpha = {alpha}")]
    NonFinite { alpha: f64 },

    /// A model assumption failed, e.g. the MGF window check.
    #[error("assumption violated: {0}")]
    AssumptionViolated(String),

    /// The disorder law is a point mass.
    #[error("disorder law is degenerate (a point mass)")]
    NonDegenerate,

    /// Invalid parameters for a disorder law or a functional.
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// The per-step normalizer underflowed to zero after rescaling.
    #[error("normalizer underflow at step {step}; beta/disorder combination is pathological")]
    Overflow { step: usize },

    /// The requested lattice does not fit the configured memory budget.
    #[error("field of dimension {d} at {n_steps} steps exceeds the site budget; largest admissible n for this dimension is {max_steps}")]
    BudgetExceeded {
        d: usize,
        n_steps: usize,
        max_steps: usize,
    },

    /// Exact metric oracle refused an input; callers should use the upper bound.
    #[error("support too large for the exact metric oracle ({atoms} atoms > {limit}); use distance_upper")]
    TooLarge { atoms: usize, limit: usize },

    /// A trajectory holds no snapshots to build an empirical measure from.
    #[error("trajectory has no stored snapshots")]
    NoSnapshots,

    /// A quantity is undefined for the given input (e.g. msd at step 0).
    #[error("undefined: {0}")]
    Undefined(String),

    #[error("serialization: {0}")]
    Serde(#[from] serde_json::Error),

    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
