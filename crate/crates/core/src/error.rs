use thiserror::Error;

/// Errors raised by the calibration pipeline.
///
/// Variants are grouped loosely by the stage that produces them; the CLI
/// maps input problems to exit code 1 and infeasible or degenerate
/// configurations to exit code 2 (see [`Error::is_infeasible`]).
#[derive(Debug, Error)]
pub enum Error {
    #[error("degenerate input: {0}")]
    DegenerateInput(String),
    #[error("singular transform")]
    SingularTransform,
    #[error("rank deficient system: {0}")]
    RankDeficient(String),
    #[error("degenerate camera: {0}")]
    DegenerateCamera(String),
    #[error("unlucky factor draw after {0} redraws")]
    UnluckyFactorDraw(usize),
    #[error("plane passes through optical center {0}")]
    NearCenterPlane(usize),
    #[error("degenerate configuration: {0}")]
    DegenerateConfiguration(String),
    #[error("pencil contained in the variety")]
    DegeneratePencil,
    #[error("line {0} is contained in the plane")]
    ContainedLine(usize),
    #[error("zero matrix")]
    ZeroMatrix,
    #[error("ill-conditioned: {0}")]
    IllConditioned(String),
    #[error("degenerate adjoint (principal point at infinity)")]
    DegenerateAdjoint,
    #[error("every grid sample is infeasible")]
    AllInfeasible,
    #[error("no generic principal plane in the camera triple")]
    NonGenericConfiguration,
    #[error("under-constrained: {0}")]
    UnderConstrained(String),
    #[error("degenerate solution: {0}")]
    DegenerateSolution(String),
    #[error("image of the absolute conic is not definite")]
    NonDefiniteIac,
    #[error("plane is complex (imaginary/real ratio {0:.3e})")]
    ComplexPlane(f64),
    #[error("reconstruction carries no observations")]
    NoObservations,
    #[error("need at least two segments, got {0}")]
    TooFewSegments(usize),
    #[error("scene spec infeasible: {0}")]
    SpecInfeasible(String),
    #[error("invalid scene spec: {0}")]
    InvalidSpec(String),
    #[error("mismatch: {0}")]
    Mismatch(String),
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// True for errors that describe a valid input on which the method
    /// cannot produce a calibration.
    pub fn is_infeasible(&self) -> bool {
        matches!(
            self,
            Error::AllInfeasible
                | Error::NonGenericConfiguration
                | Error::UnderConstrained(_)
                | Error::DegenerateSolution(_)
                | Error::NonDefiniteIac
                | Error::ComplexPlane(_)
                | Error::SpecInfeasible(_)
                | Error::DegeneratePencil
                | Error::DegenerateConfiguration(_)
                | Error::RankDeficient(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
