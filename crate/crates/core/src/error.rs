use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("insufficient moments: need {needed}, got {available}")]
    InsufficientMoments { needed: usize, available: usize },

    #[error("moment sequence is not normalized (m_0 = {m0})")]
    NotNormalized { m0: f64 },

    #[error("index out of range: {0}")]
    IndexOutOfRange(String),

    #[error("pole: shape parameter {alpha} coincides with a moment index")]
    Pole { alpha: f64 },

    #[error(
        "insufficient or inconsistent moments: rank M_(s-1,s-1) = {lower}, rank M_(s,s) = {upper}"
    )]
    RankCondition { lower: usize, upper: usize },

    #[error("duplicate support points after clustering: {0}")]
    DuplicateSupport(String),

    #[error("no convergent solutions of the moment system")]
    NoConvergence,

    #[error("ambiguous candidate selection: best residual {best:e}, second best {second:e}")]
    Ambiguous { best: f64, second: f64 },

    #[error("degenerate s: the linear coefficient of p vanishes")]
    DegenerateS,

    #[error("degenerate component weight: {0}")]
    DegenerateWeight(String),

    #[error("not a circular mixture: |xi| = {modulus} is far from 1")]
    NotCircular { modulus: f64 },

    #[error("density is negative at x = {x} (value {value:e})")]
    NegativeDensity { x: f64, value: f64 },

    #[error("rejection envelope violated at x = {x}: ratio {ratio}")]
    EnvelopeViolation { x: f64, ratio: f64 },

    #[error("linear algebra failure: {0}")]
    LinearAlgebra(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("parse error: {0}")]
    Parse(String),
}

impl Error {
    /// Numerical failures (as opposed to malformed input).
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::NoConvergence
                | Error::Ambiguous { .. }
                | Error::DegenerateS
                | Error::DegenerateWeight(_)
                | Error::RankCondition { .. }
                | Error::DuplicateSupport(_)
                | Error::NotCircular { .. }
                | Error::NegativeDensity { .. }
                | Error::EnvelopeViolation { .. }
                | Error::LinearAlgebra(_)
        )
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Parse(e.to_string())
    }
}
