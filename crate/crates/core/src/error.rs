use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("plane fit needs at least 3 points, got {0}")]
    TooFewPoints(usize),
    #[error("degenerate neighborhood (collinear or coincident points)")]
    DegenerateNeighborhood,
    #[error("feature set is empty")]
    EmptyFeatureSet,
    #[error("direction is not unit length (norm {0})")]
    NotUnitLength(f64),
    #[error("hessian is singular (smallest eigenvalue {0:e})")]
    SingularHessian(f64),
    #[error("no valid correspondences")]
    NoCorrespondences,
    #[error("invalid scene dimensions: {0}")]
    InvalidDimensions(&'static str),
    #[error("scene has no degenerate direction")]
    RequiresDegenerateScene,
    #[error("invalid parameter: {0}")]
    InvalidParameter(&'static str),
}
