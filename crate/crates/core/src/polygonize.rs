//! Edge-to-polygon conversion.
//!
//! Consecutive valid edges `(e_n, e_{n+1})` are resolved pairwise, cyclically.
//! When the supporting lines meet at parameters within `[-eps, 1 + eps]` on
//! both edges the intersection becomes the shared vertex (types I to III);
//! otherwise the end of `e_n` and the start of `e_{n+1}` are both kept,
//! bridging the gap (type IV). Parameters are fractions of each edge's own
//! length, so `eps` is scale free.

use log::warn;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::floorplan::{DirectedEdge, Floorplan, Point2, RoomEdgeSequence};
use crate::scalar::Scalar;

pub const DEFAULT_EPS: f64 = 0.1;

/// Closed vertex loop; the last vertex connects back to the first.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PolygonVertices<T> {
    vertices: Vec<Point2<T>>,
}

impl<T: Scalar> PolygonVertices<T> {
    pub fn new(vertices: Vec<Point2<T>>) -> Result<Self> {
        let k = vertices.len();
        if k < 3 {
            return Err(Error::TooFewVertices { count: k });
        }
        let tol = T::merge_tol();
        if let Some(index) = (0..k).find(|&i| vertices[i].distance(vertices[(i + 1) % k]) < tol) {
            return Err(Error::RepeatedVertex { index });
        }
        Ok(PolygonVertices { vertices })
    }

    pub fn vertices(&self) -> &[Point2<T>] {
        &self.vertices
    }

    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    pub fn into_vertices(self) -> Vec<Point2<T>> {
        self.vertices
    }

    /// Shoelace area, positive for counter-clockwise loops (y up).
    pub fn signed_area(&self) -> T {
        let k = self.vertices.len();
        let twice: T = (0..k).map(|i| self.vertices[i].cross(self.vertices[(i + 1) % k])).sum();
        twice * T::lit(0.5)
    }

    /// Smallest cyclic shift error against `other`: max vertex distance
    /// under the best rotation, or `None` when vertex counts differ.
    pub fn cyclic_distance(&self, other: &Self) -> Option<T> {
        let k = self.len();
        if other.len() != k {
            return None;
        }
        (0..k)
            .map(|shift| {
                (0..k)
                    .map(|i| self.vertices[i].distance(other.vertices[(i + shift) % k]))
                    .fold(T::zero(), T::max)
            })
            .reduce(T::min)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum IntersectionKind {
    /// Both parameters on their segments.
    TypeI,
    /// One parameter slightly outside its segment.
    TypeII,
    /// Both parameters slightly outside their segments.
    TypeIII,
    /// Intersection too far away; endpoints are bridged.
    TypeIV,
    /// Supporting lines parallel; endpoints are bridged.
    Parallel,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum VertexContribution<T> {
    Single(Point2<T>),
    Bridge(Point2<T>, Point2<T>),
}

impl<T: Copy> VertexContribution<T> {
    pub fn points(&self) -> impl Iterator<Item = Point2<T>> {
        let (a, b) = match *self {
            VertexContribution::Single(p) => (p, None),
            VertexContribution::Bridge(p, q) => (p, Some(q)),
        };
        std::iter::once(a).chain(b)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntersectionOutcome<T> {
    pub kind: IntersectionKind,
    pub contribution: VertexContribution<T>,
}

/// Line parameters `(t1, t2)` at which the supporting lines meet.
pub fn line_parameters<T: Scalar>(e1: &DirectedEdge<T>, e2: &DirectedEdge<T>) -> Option<(T, T)> {
    let d1 = e1.direction();
    let d2 = e2.direction();
    let denom = d1.cross(d2);
    if denom.abs() < T::parallel_tol() {
        return None;
    }
    let w = e2.p1 - e1.p1;
    Some((w.cross(d2) / denom, w.cross(d1) / denom))
}

/// Intersection of the infinite supporting lines, `None` when parallel.
pub fn line_intersection<T: Scalar>(e1: &DirectedEdge<T>, e2: &DirectedEdge<T>) -> Option<Point2<T>> {
    line_parameters(e1, e2).map(|(t1, _)| e1.point_at(t1))
}

/// Classifies the junction between `e1` and its successor `e2`.
pub fn classify_intersection<T: Scalar>(e1: &DirectedEdge<T>, e2: &DirectedEdge<T>, eps: T) -> IntersectionOutcome<T> {
    let bridge = |kind| IntersectionOutcome { kind, contribution: VertexContribution::Bridge(e1.p2, e2.p1) };
    let Some((t1, t2)) = line_parameters(e1, e2) else {
        return bridge(IntersectionKind::Parallel);
    };
    let (lo, hi) = (-eps, T::one() + eps);
    let within_slack = |t: T| t >= lo && t <= hi;
    let on_segment = |t: T| t >= T::zero() && t <= T::one();
    if !(within_slack(t1) && within_slack(t2)) {
        return bridge(IntersectionKind::TypeIV);
    }
    let kind = match (on_segment(t1), on_segment(t2)) {
        (true, true) => IntersectionKind::TypeI,
        (false, false) => IntersectionKind::TypeIII,
        _ => IntersectionKind::TypeII,
    };
    // A shared endpoint is the exact intersection; avoid re-deriving it.
    let vertex = if e1.p2 == e2.p1 { e1.p2 } else { e1.point_at(t1) };
    IntersectionOutcome { kind, contribution: VertexContribution::Single(vertex) }
}

/// Per-junction outcomes for a room's valid edges, in traversal order.
pub fn classify_room<T: Scalar>(room: &RoomEdgeSequence<T>, eps: T) -> Vec<IntersectionOutcome<T>> {
    let edges: Vec<_> = room.valid_edges().copied().collect();
    classify_edges(&edges, eps)
}

fn classify_edges<T: Scalar>(edges: &[DirectedEdge<T>], eps: T) -> Vec<IntersectionOutcome<T>> {
    let k = edges.len();
    (0..k).map(|i| classify_intersection(&edges[i], &edges[(i + 1) % k], eps)).collect()
}

/// Resolves an ordered edge list into a closed loop.
pub fn polygon_from_edges<T: Scalar>(edges: &[DirectedEdge<T>], eps: T) -> Result<PolygonVertices<T>> {
    if edges.len() < 2 {
        return Err(Error::TooFewEdges { count: edges.len() });
    }
    let tol = T::merge_tol();
    let mut out: Vec<Point2<T>> = Vec::with_capacity(2 * edges.len());
    for outcome in classify_edges(edges, eps) {
        for p in outcome.contribution.points() {
            if out.last().is_none_or(|q| q.distance(p) >= tol) {
                out.push(p);
            }
        }
    }
    while out.len() > 1 && out[0].distance(out[out.len() - 1]) < tol {
        out.pop();
    }
    if out.len() < 3 {
        return Err(Error::EmptyResult { count: out.len() });
    }
    PolygonVertices::new(out)
}

/// Converts a room's valid edges into a polygon.
pub fn edges_to_polygon<T: Scalar>(room: &RoomEdgeSequence<T>, eps: T) -> Result<PolygonVertices<T>> {
    let edges: Vec<_> = room.valid_edges().copied().collect();
    polygon_from_edges(&edges, eps)
}

/// Polygonizes every room with at least two valid edges, in room order.
/// Rooms that fail to close are skipped with a warning.
pub fn floorplan_to_polygons<T: Scalar>(fp: &Floorplan<T>, eps: T) -> Vec<PolygonVertices<T>> {
    floorplan_to_indexed_polygons(fp, eps).into_iter().map(|(_, p)| p).collect()
}

/// Like [`floorplan_to_polygons`] but keeps the source room index.
pub fn floorplan_to_indexed_polygons<T: Scalar>(fp: &Floorplan<T>, eps: T) -> Vec<(usize, PolygonVertices<T>)> {
    fp.rooms()
        .iter()
        .enumerate()
        .filter(|(_, r)| r.valid_count() >= 2)
        .filter_map(|(i, r)| match edges_to_polygon(r, eps) {
            Ok(p) => Some((i, p)),
            Err(e) => {
                warn!("room {i} skipped: {e}");
                None
            }
        })
        .collect()
}
