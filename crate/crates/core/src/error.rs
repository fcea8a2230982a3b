use thiserror::Error;

/// Errors raised across the toolkit.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// A structural identity that must hold by construction failed.
    #[error("structural defect: {0}")]
    Defect(String),

    #[error("Laurent degree {degree} exceeds cap {cap}")]
    DegreeCap { degree: i32, cap: i32 },

    #[error("adjoint series did not terminate within {cap} terms")]
    NonNilpotent { cap: usize },

    #[error("degenerate Heisenberg pairing at level {level}")]
    DegeneratePairing { level: i32 },

    #[error("linear system is rank deficient at t1 = {t1}, t2 = {t2}")]
    SingularTimes { t1: f64, t2: f64 },

    #[error("normalization constraint unsatisfiable (residual {residual:e}); point is off the reduced manifold")]
    Inconsistent { residual: f64 },

    #[error("phi vanishes; lambda is undefined")]
    PhiZero,

    #[error("no real parameter preimage for the given kappa (discriminant {discriminant:e})")]
    NoRealPreimage { discriminant: f64 },

    #[error("time {t} is on or too close to the singular set")]
    SingularTime { t: f64 },

    #[error("symmetric form inconsistent: node {node} gives dlambda/dt = {value}, node 0 gives {reference}")]
    ConsistencyFailure {
        node: usize,
        value: f64,
        reference: f64,
    },

    #[error("canonical transformation has a vanishing denominator at t = {t}")]
    SingularMap { t: f64 },

    #[error("parameters violate the normalization: sum {sum} != {expected}")]
    Normalization { sum: f64, expected: f64 },

    #[error("reflection r{index} hits a mirror (F{index} = 0) at word position {position}")]
    OnMirror { index: usize, position: usize },

    #[error("invalid Weyl word: {0}")]
    InvalidWord(String),

    #[error("node index {0} out of range 0..=4")]
    NodeIndex(usize),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
