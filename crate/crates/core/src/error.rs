use thiserror::Error;

/// Errors shared across the crate.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("frequency set must not be empty")]
    EmptyFrequencySet,

    #[error("frequency {index} is not positive (got {value})")]
    NonPositiveFrequency { index: usize, value: f64 },

    #[error("symmetric-polynomial degree {degree} out of range for {count} variables")]
    DegreeOutOfRange { degree: usize, count: usize },

    #[error("mode index {index} out of range for {count} frequencies")]
    IndexOutOfRange { index: usize, count: usize },

    #[error(
        "frequencies {i} and {j} coincide within the degeneracy tolerance \
         (relative gap {gap:.3e}); this construction needs a simple spectrum"
    )]
    DegenerateFrequencies { i: usize, j: usize, gap: f64 },

    #[error("operation supports exactly {expected} frequencies, got {got}")]
    UnsupportedOrder { expected: usize, got: usize },

    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },

    #[error("degenerate Hamiltonian pairing: {reason}")]
    DegeneratePairing { reason: String },

    #[error("weight system is rank-deficient (null space dimension {nullity})")]
    RankDeficientWeights { nullity: usize },

    #[error("trajectory diverged (non-finite state) at step {step}")]
    Divergence { step: usize },

    #[error("modal initial-condition solve is singular")]
    SingularModalBasis,

    #[error(
        "no mode-commutator realization: reconstruction residual {residual:.3e} \
         exceeds tolerance {tolerance:.3e}"
    )]
    InconsistentQuantization { residual: f64, tolerance: f64 },

    #[error("repeated frequencies have no simple spectrum; run the degenerate analysis instead")]
    DegenerateSpectrum,

    #[error("invalid input: {0}")]
    InvalidInput(String),
}
