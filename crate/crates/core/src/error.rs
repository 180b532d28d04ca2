use alloc::string::String;

/// Errors produced by the numerical core.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("alphabet mismatch: {0}")]
    AlphabetMismatch(String),

    /// A divergence or supremum is +inf because the first law puts mass
    /// where the second has none.
    #[error("support violation: {0}")]
    SupportViolation(String),

    #[error("chi-squared undefined: reference law is zero at symbol `{0}` where the laws differ")]
    DivisionBySupportZero(String),

    #[error("invalid pmf: {0}")]
    InvalidPmf(String),

    #[error("invalid alphabet: {0}")]
    InvalidAlphabet(String),

    #[error("sequence length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("empty sequence")]
    EmptySequence,

    #[error("symbol index {index} out of range for alphabet of size {size}")]
    SymbolOutOfRange { index: usize, size: usize },

    #[error("no coupling with the requested marginals is supported by the reference law")]
    Infeasible,

    #[error("iterative proportional fitting did not converge after {iterations} iterations (residual {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },

    #[error("constraint set is empty")]
    EmptyFeasibleSet,

    #[error("conditional law undefined: Q_V({0}) = 0 while P_V({0}) > 0")]
    ConditionalUndefined(String),

    #[error("invalid channel: {0}")]
    InvalidChannel(String),

    #[error("scheme configuration does not match the channel: {0}")]
    ConfigMismatch(String),

    #[error("alphabets too large for exact enumeration: {0}")]
    AlphabetTooLarge(String),

    #[error("degenerate input: {0}")]
    DegenerateInput(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

pub type Result<T, E = Error> = core::result::Result<T, E>;
