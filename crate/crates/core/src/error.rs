use thiserror::Error;

/// Errors shared across the estimation, privacy and simulation modules.
#[derive(Debug, Error)]
pub enum Error {
    #[error("sample must be nonempty")]
    EmptySample,

    #[error("bandwidth must lie in (0,1), got {0}")]
    InvalidBandwidth(f64),

    #[error("privacy parameter alpha must lie in (0,1), got {0}")]
    InvalidAlpha(f64),

    #[error("noise scale {b} is below the required sensitivity/alpha = {required}; refusing to release")]
    PrivacyViolation { b: f64, required: f64 },

    #[error("quadrature failed to reach tolerance {tol} on [{a}, {b}] (error estimate {err})")]
    QuadratureFailure { a: f64, b: f64, tol: f64, err: f64 },

    #[error("rejection sampler exceeded {0} attempts; density is malformed")]
    RejectionSamplingFailed(usize),

    #[error("n too small for valid hypothesis pair: f1 drops to {min} at x = {at}")]
    HypothesisPairInfeasible { min: f64, at: f64 },

    #[error("density support [{lo}, {hi}] is not contained in [0,1]")]
    SupportNotUnitInterval { lo: f64, hi: f64 },

    #[error("evaluation point {0} lies outside [0,1]")]
    PointOutsideUnitInterval(f64),

    #[error("basis certification failed: sup_x sum_j phi_j^2(x) = {observed} exceeds d*phi0 = {allowed} for d = {d}")]
    BasisCertification { d: usize, observed: f64, allowed: f64 },

    #[error("releases are not homogeneous: noise scales {0} and {1} differ")]
    HeterogeneousReleases(f64, f64),

    #[error("invalid tuning collection: {0}")]
    InvalidCollection(String),

    #[error("invalid experiment configuration: {0}")]
    Config(String),

    #[error("rate fit requires at least 4 strictly positive MSE values")]
    RateFitInput,
}

pub type Result<T> = std::result::Result<T, Error>;
