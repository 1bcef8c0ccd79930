use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("room has {count} edges but capacity allows {capacity}")]
    TooManyEdges { count: usize, capacity: usize },
    #[error("floorplan has {count} rooms but capacity allows {capacity}")]
    TooManyRooms { count: usize, capacity: usize },
    #[error("edge {index} is degenerate (start equals end)")]
    DegenerateEdge { index: usize },
    #[error("need at least 3 vertices, got {count}")]
    TooFewVertices { count: usize },
    #[error("vertices {index} and its successor coincide")]
    RepeatedVertex { index: usize },
    #[error("need at least 2 valid edges, got {count}")]
    TooFewEdges { count: usize },
    #[error("polygon collapsed to {count} distinct vertices")]
    EmptyResult { count: usize },
    #[error("invalid capacity: {0}")]
    InvalidCapacity(String),
    #[error("point cloud is empty")]
    EmptyCloud,
    #[error("projection bounds have zero or negative extent on the {axis} axis")]
    DegenerateBounds { axis: char },
    #[error("pixel ({x}, {y}) lies outside a {width}x{height} map")]
    OutOfExtent { x: usize, y: usize, width: usize, height: usize },
    #[error("length mismatch: expected {expected}, got {actual}")]
    LengthMismatch { expected: usize, actual: usize },
    #[error("capacity mismatch: {left:?} vs {right:?}")]
    CapacityMismatch { left: (usize, usize), right: (usize, usize) },
    #[error("dimension mismatch: {left:?} vs {right:?}")]
    DimensionMismatch { left: (usize, usize), right: (usize, usize) },
    #[error("cost matrix is not square or contains non-finite or negative entries")]
    InvalidCostMatrix,
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
