use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("non-finite value for {0}")]
    NonFinite(&'static str),

    #[error("zero total linewidth on the {0} mode")]
    ZeroLinewidth(&'static str),

    #[error("steady-state system is numerically singular (condition estimate {cond:.3e})")]
    SingularSystem { cond: f64 },

    #[error("Stokes denominator within the instability threshold (|D|/|D0| = {ratio:.3e})")]
    StokesUnstable { ratio: f64 },

    #[error("target frequency {target_rad_s:.6e} rad/s outside the reachable band [{band_lo:.6e}, {band_hi:.6e}] rad/s")]
    OutOfBand {
        target_rad_s: f64,
        band_lo: f64,
        band_hi: f64,
    },

    #[error("fit did not converge within {evaluations} evaluations")]
    FitDidNotConverge { evaluations: usize },

    #[error("degenerate data: {0}")]
    DegenerateData(String),

    #[error("infeasible bounds: {0}")]
    InfeasibleBounds(String),

    #[error("branch extraction failed: {0}")]
    BranchExtraction(String),
}
