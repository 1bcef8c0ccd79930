//! Floorplans as padded sequences of directed edges.
//!
//! Each room is a fixed-length sequence of edge tokens; a floorplan is a
//! fixed-length set of rooms. The crate converts between edges and polygons,
//! matches predicted rooms to ground truth, computes training losses, builds
//! perturbed query groups with their attention mask, and scores predictions
//! at room, corner and angle level.
//!
//! Geometry is generic over [`Scalar`] (`f32` or `f64`); the aliases below fix
//! the usual `f64` choice.

pub mod denoising;
pub mod error;
pub mod floorplan;
pub mod io;
pub mod losses;
pub mod matching;
pub mod metrics;
pub mod polygonize;
pub mod projection;
pub mod raster;
pub mod scalar;

pub use denoising::{build_attention_mask, perturb, AttentionMask, NoiseConfig, PerturbedQuerySet, PerturbedToken};
pub use error::{Error, Result};
pub use floorplan::{
    edges_from_vertex_loop, make_room, validate_floorplan, DirectedEdge, EdgeToken, Floorplan, ModelCapacity,
    Point2, RoomEdgeSequence, Violation,
};
pub use losses::{total_loss, LossBreakdown, LossConfig, LossWeights};
pub use matching::{
    hungarian, match_floorplans, pair_cost, Alignment, CostMatrix, MatchResult, MatchingOptions, PredictedRoom,
    PredictedToken, PredictionSet,
};
pub use metrics::{evaluate_scene, DatasetReport, MatchStrategy, MetricThresholds, Prf, SceneCounts, ScenePrediction};
pub use polygonize::{edges_to_polygon, floorplan_to_polygons, polygon_from_edges, IntersectionKind, PolygonVertices};
pub use projection::{project, Bounds, DensityMap, PointCloud};
pub use raster::{dice_loss, rasterize, RasterMask};
pub use scalar::Scalar;

pub type Point = Point2<f64>;
pub type Edge = DirectedEdge<f64>;
pub type Token = EdgeToken<f64>;
pub type Room = RoomEdgeSequence<f64>;
pub type Plan = Floorplan<f64>;
pub type Polygon = PolygonVertices<f64>;
pub type Predictions = PredictionSet<f64>;
pub type Cloud = PointCloud<f64>;
pub type Density = DensityMap<f64>;
