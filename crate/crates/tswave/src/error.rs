use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TsError {
    #[error("derivative order {0} exceeds supported order 3")]
    OrderTooHigh(usize),
    #[error("negative coordinate Y = {0}")]
    NegativeY(f64),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("A(Y) vanishes or nearly vanishes at Y = {y} (|A| = {modulus:e})")]
    ADegenerate { y: f64, modulus: f64 },
    #[error("quadrature did not converge (achieved {achieved:e}, wanted {wanted:e})")]
    Quadrature { achieved: f64, wanted: f64 },
    #[error("tail truncation bound {bound:e} exceeds tolerance {tol:e}")]
    TailTruncation { bound: f64, tol: f64 },
    #[error("Airy evaluation out of range: {0}")]
    AiryRange(String),
    #[error("Airy value underflow (log-magnitude {0})")]
    AiryUnderflow(f64),
    #[error("grid mismatch: {0}")]
    GridMismatch(String),
    #[error("grid too coarse: {0}")]
    GridTooCoarse(String),
    #[error("singular linear system at pivot {0}")]
    Singular(usize),
    #[error("ill-conditioned system (estimate {0:e})")]
    IllConditioned(f64),
    #[error("function vanishes on the contour (min |F| = {0:e})")]
    ZeroOnContour(f64),
    #[error("winding count did not stabilise with {0} samples")]
    WindingNotConverged(usize),
    #[error("root search failed: {0}")]
    RootNotFound(String),
    #[error("iteration does not contract: ratios {0:?}")]
    NonContraction(Vec<f64>),
    #[error("weighted-norm tail fraction {0:e} too large")]
    NormTail(f64),
}

pub type Result<T> = std::result::Result<T, TsError>;
