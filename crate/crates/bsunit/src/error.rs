use thiserror::Error;

/// Errors raised anywhere in the pipeline.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("{0} is not a fundamental discriminant")]
    NotFundamental(i64),
    #[error("discriminant {0} is not positive")]
    NotReal(i64),
    #[error("{0} is not an odd prime")]
    NotOddPrime(u64),
    #[error("{p} is ramified in Q(sqrt({d}))")]
    Ramified { d: i64, p: u64 },
    #[error("{p} is not inert in Q(sqrt({d}))")]
    NotInert { d: i64, p: u64 },
    #[error("no degree-one prime above {ell} in Q(sqrt({d}))")]
    UnsupportedSmoothing { d: i64, ell: u64 },
    #[error("congruence level {level} exceeds the bound {bound}")]
    LevelTooDeep { level: u32, bound: u32 },
    #[error("ideal is not coprime to {0}")]
    NotCoprime(u64),
    #[error("unsupported cone closure")]
    UnsupportedClosure,
    #[error("element is not a p-adic unit")]
    NotUnit,
    #[error("p-adic domain error: {0}")]
    DomainError(&'static str),
    #[error("precision exhausted: {0}")]
    PrecisionExhausted(String),
    #[error("insufficient precision to recognize coefficient: {0}")]
    InsufficientPrecision(String),
    #[error("denominator is not a pure power of p")]
    NoPurePDenominator,
    #[error("minimal polynomial is not palindromic: {0}")]
    PalindromyFailure(String),
    #[error("modulus too small for Smith normal form")]
    ModulusTooSmall,
    #[error("matrix is not square ({0}x{1})")]
    NonSquare(usize, usize),
    #[error("integrality check failed: {0}")]
    Integrality(String),
    #[error("cache i/o: {0}")]
    Io(String),
    #[error("invalid argument: {0}")]
    Invalid(String),
}

pub type Result<T> = std::result::Result<T, Error>;
