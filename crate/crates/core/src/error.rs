use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("modulus mismatch: {0} vs {1}")]
    ModulusMismatch(u32, u32),

    #[error("dimension N = {n} outside the supported range [{min}, {max}]")]
    DimensionOutOfRange { n: u32, min: u32, max: u32 },

    #[error("N = {0} is not a power of 2")]
    NotPowerOfTwo(u32),

    #[error("N = {0} is even; the closed form (-1)^(qp) needs odd N")]
    EvenDimension(u32),

    #[error("matrix dimension mismatch: {0} vs {1}")]
    DimensionMismatch(usize, usize),

    #[error("matrix is not Hermitian (max |M - M^dagger| = {0:.3e})")]
    NotHermitian(f64),

    #[error("invalid density matrix: {0}")]
    InvalidState(String),

    #[error("sign assignment violates the reflection symmetry at ({q},{p})")]
    SymmetryViolated { q: u32, p: u32 },

    #[error("line {line}: P_lambda is not a rank-one projector (residual {residual:.3e})")]
    NotProjector { line: usize, residual: f64 },

    #[error("line {0} has no single-shift bundle")]
    NoBundle(usize),

    #[error("tomographic frame has rank {rank}, need {needed}")]
    RankDeficient { rank: usize, needed: usize },

    #[error("malformed probabilities: {0}")]
    BadProbabilities(String),

    #[error("sign choice has {got} bits, the family has {expected} free signs")]
    SignChoiceLength { got: usize, expected: usize },

    #[error("sign system is inconsistent")]
    Inconsistent,
}

pub type Result<T> = std::result::Result<T, Error>;
