use thiserror::Error;

/// Errors produced by the waveform-design library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension error: {0}")]
    Dimension(String),

    #[error("constraint error: {0}")]
    Constraint(String),

    #[error("scenario error: {0}")]
    Scenario(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("degenerate denominator: desired-direction power {power:e} is not positive")]
    DegenerateDenominator { power: f64 },

    #[error("waveform has zero energy")]
    ZeroEnergy,

    #[error("lag {lag} out of range for length {len}")]
    LagOutOfRange { lag: i64, len: usize },

    #[error("entry ({t}, {d}) out of range for {mt}x{n} waveform")]
    IndexOutOfRange { t: usize, d: usize, mt: usize, n: usize },

    #[error("polynomial is identically zero")]
    ZeroPolynomial,

    #[error("root finding did not converge")]
    RootFinding,

    #[error("empty feasible amplitude interval [{lo}, {hi}]")]
    EmptyInterval { lo: f64, hi: f64 },

    #[error("initial waveform is infeasible: {0}")]
    InfeasibleInitial(String),
}

pub type Result<T> = std::result::Result<T, Error>;
