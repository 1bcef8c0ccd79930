//! Edge-based floorplan model.
//!
//! A room is a fixed-capacity sequence of edge tokens; each token is a
//! directed edge plus a validity flag. A floorplan is a fixed-capacity list
//! of rooms. Rooms with no valid token are mock rooms and only exist to pad
//! the set up to capacity.

use std::fmt;
use std::ops::{Add, Mul, Sub};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// 2-D point in normalized `[0,1]^2` coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Point2<T> {
    pub x: T,
    pub y: T,
}

impl<T: Scalar> Point2<T> {
    pub fn new(x: T, y: T) -> Self {
        Point2 { x, y }
    }

    pub fn origin() -> Self {
        Point2 { x: T::zero(), y: T::zero() }
    }

    /// Clamps both coordinates into `[0,1]`.
    pub fn clamped(self) -> Self {
        Point2 {
            x: self.x.max(T::zero()).min(T::one()),
            y: self.y.max(T::zero()).min(T::one()),
        }
    }

    pub fn in_unit_square(&self) -> bool {
        let unit = |v: T| v >= T::zero() && v <= T::one();
        unit(self.x) && unit(self.y)
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }

    pub fn cross(self, other: Self) -> T {
        self.x * other.y - self.y * other.x
    }

    pub fn dot(self, other: Self) -> T {
        self.x * other.x + self.y * other.y
    }

    pub fn norm(self) -> T {
        self.x.hypot(self.y)
    }

    pub fn distance(self, other: Self) -> T {
        (self - other).norm()
    }

    pub fn l1_distance(self, other: Self) -> T {
        (self.x - other.x).abs() + (self.y - other.y).abs()
    }
}

impl<T: Scalar> Add for Point2<T> {
    type Output = Self;
    fn add(self, rhs: Self) -> Self {
        Point2 { x: self.x + rhs.x, y: self.y + rhs.y }
    }
}

impl<T: Scalar> Sub for Point2<T> {
    type Output = Self;
    fn sub(self, rhs: Self) -> Self {
        Point2 { x: self.x - rhs.x, y: self.y - rhs.y }
    }
}

impl<T: Scalar> Mul<T> for Point2<T> {
    type Output = Self;
    fn mul(self, rhs: T) -> Self {
        Point2 { x: self.x * rhs, y: self.y * rhs }
    }
}

impl<T: Scalar> fmt::Display for Point2<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.x, self.y)
    }
}

/// Wall segment traversed from `p1` to `p2`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct DirectedEdge<T> {
    pub p1: Point2<T>,
    pub p2: Point2<T>,
}

impl<T: Scalar> DirectedEdge<T> {
    pub fn new(p1: Point2<T>, p2: Point2<T>) -> Self {
        DirectedEdge { p1, p2 }
    }

    /// Geometry used for padding tokens: `(0,0)-(0,0)`.
    pub fn padding() -> Self {
        DirectedEdge { p1: Point2::origin(), p2: Point2::origin() }
    }

    pub fn is_degenerate(&self) -> bool {
        self.p1 == self.p2
    }

    pub fn direction(&self) -> Point2<T> {
        self.p2 - self.p1
    }

    pub fn length(&self) -> T {
        self.direction().norm()
    }

    /// Point at line parameter `t` (0 at `p1`, 1 at `p2`).
    pub fn point_at(&self, t: T) -> Point2<T> {
        self.p1 + self.direction() * t
    }

    pub fn reversed(&self) -> Self {
        DirectedEdge { p1: self.p2, p2: self.p1 }
    }

    /// Sum of endpoint L1 distances, endpoint-wise in order.
    pub fn l1_distance(&self, other: &Self) -> T {
        self.p1.l1_distance(other.p1) + self.p2.l1_distance(other.p2)
    }
}

/// Directed edge plus a validity flag. Invalid tokens are padding.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct EdgeToken<T> {
    pub edge: DirectedEdge<T>,
    pub valid: bool,
}

impl<T: Scalar> EdgeToken<T> {
    pub fn valid(edge: DirectedEdge<T>) -> Self {
        EdgeToken { edge, valid: true }
    }

    pub fn padding() -> Self {
        EdgeToken { edge: DirectedEdge::padding(), valid: false }
    }

    pub fn label(&self) -> T {
        if self.valid {
            T::one()
        } else {
            T::zero()
        }
    }
}

/// Maximum room count `M` and per-room edge count `N`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ModelCapacity {
    pub rooms: usize,
    pub edges: usize,
}

impl ModelCapacity {
    pub const DEFAULT_ROOMS: usize = 20;
    pub const DEFAULT_EDGES: usize = 40;

    pub fn new(rooms: usize, edges: usize) -> Result<Self> {
        if rooms < 1 {
            return Err(Error::InvalidCapacity(format!("room capacity must be >= 1, got {rooms}")));
        }
        if edges < 3 {
            return Err(Error::InvalidCapacity(format!("edge capacity must be >= 3, got {edges}")));
        }
        Ok(ModelCapacity { rooms, edges })
    }

    pub fn as_pair(&self) -> (usize, usize) {
        (self.rooms, self.edges)
    }
}

impl Default for ModelCapacity {
    fn default() -> Self {
        ModelCapacity { rooms: Self::DEFAULT_ROOMS, edges: Self::DEFAULT_EDGES }
    }
}

/// Fixed-length token sequence for one room.
#[derive(Debug, Clone, PartialEq)]
pub struct RoomEdgeSequence<T> {
    tokens: Vec<EdgeToken<T>>,
    valid_count: usize,
}

impl<T: Scalar> RoomEdgeSequence<T> {
    /// All-padding room of length `n`.
    pub fn mock(n: usize) -> Self {
        RoomEdgeSequence { tokens: vec![EdgeToken::padding(); n], valid_count: 0 }
    }

    /// Wraps an arbitrary token list of exactly `capacity.edges` tokens.
    ///
    /// Non-canonical layouts (valid tokens after padding) are accepted so that
    /// loaded documents can be diagnosed with [`validate_floorplan`].
    pub fn from_tokens(tokens: Vec<EdgeToken<T>>, capacity: ModelCapacity) -> Result<Self> {
        if tokens.len() != capacity.edges {
            return Err(Error::LengthMismatch { expected: capacity.edges, actual: tokens.len() });
        }
        let valid_count = tokens.iter().filter(|t| t.valid).count();
        Ok(RoomEdgeSequence { tokens, valid_count })
    }

    pub fn tokens(&self) -> &[EdgeToken<T>] {
        &self.tokens
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn valid_count(&self) -> usize {
        self.valid_count
    }

    pub fn is_mock(&self) -> bool {
        self.valid_count == 0
    }

    /// Valid edges in sequence order.
    pub fn valid_edges(&self) -> impl Iterator<Item = &DirectedEdge<T>> + '_ {
        self.tokens.iter().filter(|t| t.valid).map(|t| &t.edge)
    }

    /// Positions of the valid tokens.
    pub fn valid_positions(&self) -> Vec<usize> {
        self.tokens.iter().enumerate().filter(|(_, t)| t.valid).map(|(i, _)| i).collect()
    }

    pub fn labels(&self) -> impl Iterator<Item = T> + '_ {
        self.tokens.iter().map(EdgeToken::label)
    }

    /// Cyclically rotates the valid edges among the valid positions; padding
    /// stays in place. After rotation by `r`, valid slot `i` holds the edge
    /// that was in valid slot `(i + r) mod valid_count`.
    pub fn rotated(&self, r: usize) -> Self {
        let positions = self.valid_positions();
        let k = positions.len();
        if k == 0 {
            return self.clone();
        }
        let mut tokens = self.tokens.clone();
        for (i, &pos) in positions.iter().enumerate() {
            tokens[pos].edge = self.tokens[positions[(i + r) % k]].edge;
        }
        RoomEdgeSequence { tokens, valid_count: self.valid_count }
    }

    /// Reverses traversal: valid edges in reverse order, each edge flipped.
    pub fn reversed(&self) -> Self {
        let positions = self.valid_positions();
        let k = positions.len();
        let mut tokens = self.tokens.clone();
        for (i, &pos) in positions.iter().enumerate() {
            tokens[pos].edge = self.tokens[positions[k - 1 - i]].edge.reversed();
        }
        RoomEdgeSequence { tokens, valid_count: self.valid_count }
    }
}

/// Builds a canonical room: `edges` as valid tokens in order, then padding up
/// to `capacity.edges`.
pub fn make_room<T: Scalar>(edges: &[DirectedEdge<T>], capacity: ModelCapacity) -> Result<RoomEdgeSequence<T>> {
    if edges.len() > capacity.edges {
        return Err(Error::TooManyEdges { count: edges.len(), capacity: capacity.edges });
    }
    if let Some(index) = edges.iter().position(DirectedEdge::is_degenerate) {
        return Err(Error::DegenerateEdge { index });
    }
    let mut tokens: Vec<EdgeToken<T>> = edges.iter().copied().map(EdgeToken::valid).collect();
    tokens.resize(capacity.edges, EdgeToken::padding());
    Ok(RoomEdgeSequence { tokens, valid_count: edges.len() })
}

/// Converts a closed vertex loop into its directed edges:
/// edge `i` runs from vertex `i` to vertex `(i + 1) mod k`.
pub fn edges_from_vertex_loop<T: Scalar>(vertices: &[Point2<T>]) -> Result<Vec<DirectedEdge<T>>> {
    let k = vertices.len();
    if k < 3 {
        return Err(Error::TooFewVertices { count: k });
    }
    (0..k)
        .map(|i| {
            let edge = DirectedEdge::new(vertices[i], vertices[(i + 1) % k]);
            if edge.is_degenerate() {
                Err(Error::RepeatedVertex { index: i })
            } else {
                Ok(edge)
            }
        })
        .collect()
}

/// Fixed-capacity room set.
#[derive(Debug, Clone, PartialEq)]
pub struct Floorplan<T> {
    rooms: Vec<RoomEdgeSequence<T>>,
    capacity: ModelCapacity,
    pub scene_id: Option<String>,
}

impl<T: Scalar> Floorplan<T> {
    /// Pads `rooms` with mock rooms up to `capacity.rooms`.
    pub fn new(rooms: Vec<RoomEdgeSequence<T>>, capacity: ModelCapacity) -> Result<Self> {
        if rooms.len() > capacity.rooms {
            return Err(Error::TooManyRooms { count: rooms.len(), capacity: capacity.rooms });
        }
        if let Some(room) = rooms.iter().find(|r| r.len() != capacity.edges) {
            return Err(Error::LengthMismatch { expected: capacity.edges, actual: room.len() });
        }
        let mut rooms = rooms;
        rooms.resize_with(capacity.rooms, || RoomEdgeSequence::mock(capacity.edges));
        Ok(Floorplan { rooms, capacity, scene_id: None })
    }

    pub fn empty(capacity: ModelCapacity) -> Self {
        Floorplan {
            rooms: (0..capacity.rooms).map(|_| RoomEdgeSequence::mock(capacity.edges)).collect(),
            capacity,
            scene_id: None,
        }
    }

    /// Builds a floorplan from vertex loops, one room per loop.
    pub fn from_vertex_loops(loops: &[Vec<Point2<T>>], capacity: ModelCapacity) -> Result<Self> {
        let rooms = loops
            .iter()
            .map(|l| make_room(&edges_from_vertex_loop(l)?, capacity))
            .collect::<Result<Vec<_>>>()?;
        Floorplan::new(rooms, capacity)
    }

    pub fn with_scene_id(mut self, id: impl Into<String>) -> Self {
        self.scene_id = Some(id.into());
        self
    }

    pub fn rooms(&self) -> &[RoomEdgeSequence<T>] {
        &self.rooms
    }

    pub fn capacity(&self) -> ModelCapacity {
        self.capacity
    }

    /// Number of non-mock rooms.
    pub fn real_room_count(&self) -> usize {
        self.rooms.iter().filter(|r| !r.is_mock()).count()
    }

    /// Returns a copy with rooms reordered so that new room `i` is old room `order[i]`.
    pub fn permuted(&self, order: &[usize]) -> Result<Self> {
        if order.len() != self.capacity.rooms {
            return Err(Error::LengthMismatch { expected: self.capacity.rooms, actual: order.len() });
        }
        let rooms = order.iter().map(|&i| self.rooms[i].clone()).collect();
        Ok(Floorplan { rooms, capacity: self.capacity, scene_id: self.scene_id.clone() })
    }

    /// Replaces room `index`.
    pub fn with_room(mut self, index: usize, room: RoomEdgeSequence<T>) -> Result<Self> {
        if room.len() != self.capacity.edges {
            return Err(Error::LengthMismatch { expected: self.capacity.edges, actual: room.len() });
        }
        self.rooms[index] = room;
        Ok(self)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(tag = "kind")]
pub enum Violation {
    OutOfRange { room: usize, index: usize },
    NonFinite { room: usize, index: usize },
    DegenerateEdge { room: usize, index: usize },
    ValidAfterPadding { room: usize, index: usize },
}

/// Lists every invariant violation; empty iff the plan is well formed.
pub fn validate_floorplan<T: Scalar>(fp: &Floorplan<T>) -> Vec<Violation> {
    let mut out = Vec::new();
    for (room, seq) in fp.rooms().iter().enumerate() {
        let mut seen_padding = false;
        for (index, token) in seq.tokens().iter().enumerate() {
            let e = &token.edge;
            if !(e.p1.is_finite() && e.p2.is_finite()) {
                out.push(Violation::NonFinite { room, index });
            } else if !(e.p1.in_unit_square() && e.p2.in_unit_square()) {
                out.push(Violation::OutOfRange { room, index });
            }
            if token.valid {
                if e.is_degenerate() {
                    out.push(Violation::DegenerateEdge { room, index });
                }
                if seen_padding {
                    out.push(Violation::ValidAfterPadding { room, index });
                }
            } else {
                seen_padding = true;
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(x: f64, y: f64) -> Point2<f64> {
        Point2::new(x, y)
    }

    fn unit_square() -> Vec<Point2<f64>> {
        vec![p(0.0, 0.0), p(1.0, 0.0), p(1.0, 1.0), p(0.0, 1.0)]
    }

    #[test]
    fn make_room_pads_to_capacity() {
        let edges = edges_from_vertex_loop(&unit_square()).unwrap();
        let room = make_room(&edges, ModelCapacity::default()).unwrap();
        assert_eq!(room.len(), 40);
        assert_eq!(room.valid_count(), 4);
        assert_eq!(room.tokens().iter().filter(|t| !t.valid).count(), 36);
        for (i, t) in room.tokens().iter().enumerate() {
            assert_eq!(t.valid, i < 4);
            if !t.valid {
                assert_eq!(t.edge, DirectedEdge::padding());
            }
        }
    }

    #[test]
    fn empty_edge_list_is_mock_room() {
        let room = make_room::<f64>(&[], ModelCapacity::default()).unwrap();
        assert!(room.is_mock());
        assert_eq!(room.len(), 40);
    }

    #[test]
    fn make_room_rejects_overflow_and_degenerate() {
        let e = DirectedEdge::new(p(0.0, 0.0), p(1.0, 0.0));
        let edges = vec![e; 41];
        assert_eq!(
            make_room(&edges, ModelCapacity::default()),
            Err(Error::TooManyEdges { count: 41, capacity: 40 })
        );
        let bad = [e, DirectedEdge::new(p(0.3, 0.3), p(0.3, 0.3))];
        assert_eq!(make_room(&bad, ModelCapacity::default()), Err(Error::DegenerateEdge { index: 1 }));
    }

    #[test]
    fn vertex_loop_closes() {
        let edges = edges_from_vertex_loop(&unit_square()).unwrap();
        assert_eq!(edges.len(), 4);
        assert_eq!(edges[3], DirectedEdge::new(p(0.0, 1.0), p(0.0, 0.0)));

        let tri = [p(0.1, 0.1), p(0.9, 0.1), p(0.5, 0.8)];
        assert_eq!(edges_from_vertex_loop(&tri).unwrap().len(), 3);

        assert_eq!(
            edges_from_vertex_loop(&[p(0.0, 0.0), p(1.0, 0.0)]),
            Err(Error::TooFewVertices { count: 2 })
        );
    }

    #[test]
    fn capacity_bounds() {
        assert!(ModelCapacity::new(0, 40).is_err());
        assert!(ModelCapacity::new(20, 2).is_err());
        assert_eq!(ModelCapacity::new(20, 40).unwrap(), ModelCapacity::default());
    }

    #[test]
    fn floorplan_is_padded_to_capacity() {
        let cap = ModelCapacity::default();
        let fp = Floorplan::from_vertex_loops(&[unit_square()], cap).unwrap();
        assert_eq!(fp.rooms().len(), 20);
        assert_eq!(fp.real_room_count(), 1);
        assert!(fp.rooms().iter().all(|r| r.len() == 40));
    }

    #[test]
    fn validate_reports_violations() {
        let cap = ModelCapacity::new(2, 4).unwrap();
        let fp = Floorplan::from_vertex_loops(&[unit_square()], cap).unwrap();
        assert!(validate_floorplan(&fp).is_empty());

        let mut tokens = fp.rooms()[0].tokens().to_vec();
        tokens[1].edge.p2 = tokens[1].edge.p1;
        let fp2 = fp.clone().with_room(0, RoomEdgeSequence::from_tokens(tokens, cap).unwrap()).unwrap();
        assert_eq!(validate_floorplan(&fp2), vec![Violation::DegenerateEdge { room: 0, index: 1 }]);

        let mut tokens = fp.rooms()[0].tokens().to_vec();
        tokens[2].edge.p1.x = 1.5;
        let fp3 = fp.clone().with_room(0, RoomEdgeSequence::from_tokens(tokens, cap).unwrap()).unwrap();
        assert_eq!(validate_floorplan(&fp3), vec![Violation::OutOfRange { room: 0, index: 2 }]);

        let mut tokens = fp.rooms()[0].tokens().to_vec();
        tokens[0].valid = false;
        let fp4 = fp.with_room(0, RoomEdgeSequence::from_tokens(tokens, cap).unwrap()).unwrap();
        let v = validate_floorplan(&fp4);
        assert_eq!(v.len(), 3);
        assert!(v.iter().all(|x| matches!(x, Violation::ValidAfterPadding { room: 0, .. })));
    }

    #[test]
    fn rotation_keeps_padding_fixed() {
        let cap = ModelCapacity::new(1, 6).unwrap();
        let edges = edges_from_vertex_loop(&unit_square()).unwrap();
        let room = make_room(&edges, cap).unwrap();
        let r1 = room.rotated(1);
        assert_eq!(r1.tokens()[0].edge, edges[1]);
        assert_eq!(r1.tokens()[3].edge, edges[0]);
        assert!(!r1.tokens()[4].valid && !r1.tokens()[5].valid);
        assert_eq!(room.rotated(4), room);
        assert_eq!(room.reversed().reversed(), room);
        assert_eq!(room.reversed().tokens()[0].edge, edges[3].reversed());
    }

    #[test]
    fn clamping() {
        assert_eq!(p(1.2, -0.1).clamped(), p(1.0, 0.0));
        assert!(p(0.0, 1.0).in_unit_square());
        assert!(!p(1.0 + 1e-12, 0.5).in_unit_square());
    }
}
