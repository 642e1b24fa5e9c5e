use thiserror::Error;

use crate::maze::{Point, Violation};

#[derive(Debug, Error)]
pub enum MazeError {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("feature {feature} out of range for dimension {dimension}")]
    FeatureOutOfRange { feature: usize, dimension: usize },
    #[error("invalid maze: {}", join(.0))]
    Invalid(Vec<Violation>),
    #[error("point {0} lies inside an obstacle")]
    InsideObstacle(Point),
}

fn join(v: &[Violation]) -> String {
    v.iter()
        .map(ToString::to_string)
        .collect::<Vec<_>>()
        .join("; ")
}
