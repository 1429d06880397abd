use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("direction vector is zero")]
    ZeroDirection,
    #[error("matrix is singular (|det| below threshold)")]
    SingularMatrix,
    #[error("tangent vector is not on the quadric (|Q| = {0:e})")]
    NotOnQuadric(f64),
    #[error("vector is zero")]
    ZeroVector,
    #[error("line does not meet the quadric in real points")]
    NoRealIntersection,
    #[error("line is tangent to (or contained in) the quadric")]
    TangentLine,
    #[error("parameter ({u}, {v}) is outside the congruence domain")]
    OutOfDomain { u: f64, v: f64 },
    #[error("point is elliptic; a non-elliptic point is required")]
    NotNonElliptic,
    #[error("point is not hyperbolic")]
    NotHyperbolic,
    #[error("focal data is degenerate (repeated roots)")]
    DegenerateFocalData,
    #[error("stall point: the direction map is singular")]
    StallPoint,
    #[error("focal quadratic vanishes identically")]
    DegenerateQuadratic,
    #[error("discriminant field is degenerate on a grid cell")]
    DegenerateField,
    #[error("seed point is elliptic")]
    EllipticSeed,
    #[error("integration step failed at ({u}, {v})")]
    StepFailure { u: f64, v: f64 },
    #[error("point is not parabolic")]
    NotParabolic,
    #[error("surface is singular at the requested point")]
    SurfaceSingular,
    #[error("model object is not incident with the line")]
    NotIncident,
    #[error("line is not contained in the plane")]
    NotContained,
    #[error("lines are equal; use the self-contact classifier")]
    EqualLines,
    #[error("could not invert the direction map near the requested point")]
    InversionFailed,
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

pub type Result<T> = std::result::Result<T, Error>;
