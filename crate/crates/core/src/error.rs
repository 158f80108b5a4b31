use alloc::string::String;

pub type Result<T> = core::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    /// An argument lies outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// `p + r kappa <= 0`: the last homogeneity weight is not positive.
    #[error("infeasible weights: p_{{r+1}} = {last_weight} <= 0")]
    InfeasibleWeights { last_weight: f64 },

    /// A caller-side contract (sample counts, growth factors, ...) was violated.
    #[error("precondition violated: {0}")]
    Precondition(String),

    /// The feedback pair does not decrease `V` along the pure chain.
    #[error("rejected feedback pair: {0}")]
    RejectedPair(String),

    /// A sampled decrease rate was not positive.
    #[error("invalid feedback pair: rho = {rho} at a sampled point")]
    InvalidPair { rho: f64 },

    /// Gain tuning hit its retry cap.
    #[error("gain tuning failed after {attempts} growth steps")]
    TuningFailed { attempts: usize },

    #[error("numeric error: {0}")]
    Numeric(String),

    /// `V` reached the barrier level; the barrier gain is undefined there.
    #[error("barrier blow-up: V = {v} against bound {bound}")]
    BarrierBlowup { v: f64, bound: f64 },

    #[error("configuration error: {0}")]
    Config(String),
}
