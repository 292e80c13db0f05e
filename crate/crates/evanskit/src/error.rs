use num_complex::Complex64;
use thiserror::Error;

/// Failure modes shared by every stage of the pipeline.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("spectrum is not strictly hyperbolic: {0}")]
    NotStrictlyHyperbolic(String),
    #[error("principal field is degenerate: |Λ| = {0:e}")]
    DegenerateField(f64),
    #[error("principal mode is not dissipative: β = {0}")]
    NonDissipative(f64),
    #[error("relaxation Jacobian q_v is singular")]
    SingularRelaxation,
    #[error("no Rankine-Hugoniot endpoint: {0}")]
    NoEndpoint(String),
    #[error("no connecting profile: {0}")]
    NoConnection(String),
    #[error("wrong formulation: {0}")]
    WrongFormulation(String),
    #[error("viscosity matrix singular near x = {0}")]
    SingularViscosity(f64),
    #[error("flux matrix singular near x = {0}")]
    SingularA(f64),
    #[error("viscosity blocks are not uniformly parabolic: {0}")]
    NotParabolic(String),
    #[error("consistent splitting fails: eigenvalue {0} too close to the imaginary axis")]
    SplittingFailure(Complex64),
    #[error("eigenvalue branches collide near λ = {0}")]
    BranchCrossing(Complex64),
    #[error("degenerate transverse mode: a = {0:e}")]
    DegenerateMode(f64),
    #[error("ODE integration failed: {0}")]
    IntegrationFailure(String),
    #[error("contour refinement exceeded depth {0}")]
    ContourTooCoarse(usize),
    #[error("Evans function vanishes on the contour near λ = {0}")]
    ZeroOnContour(Complex64),
    #[error("|λ| = {0} lies outside the expansion disk")]
    ExpansionDomainExceeded(f64),
    #[error("certificate failure: {0}")]
    CertificateFailure(String),
    #[error("spectral gap too small: δ/η = {0}")]
    GapTooSmall(f64),
    #[error("graph iteration did not contract after {0} sweeps")]
    NoContraction(usize),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
}

pub type Result<T> = std::result::Result<T, Error>;
