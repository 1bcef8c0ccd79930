//! Rotation-aware polygon matching between ground-truth rooms and
//! predicted rooms.
//!
//! The pair cost is `lambda_cls * sum_n |c_n - c^_n|` over all `N` token
//! positions plus the endpoint L1 distance summed over ground-truth-valid
//! positions, minimized over cyclic rotations of the ground-truth valid edges.
//! Mock ground-truth rooms cost zero against every prediction.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::floorplan::{DirectedEdge, EdgeToken, Floorplan, ModelCapacity, RoomEdgeSequence};
use crate::scalar::Scalar;

pub const DEFAULT_LAMBDA_CLS: f64 = 0.6;
/// Confidence at or above which a predicted token counts as a valid edge.
pub const DEFAULT_CONFIDENCE_THRESHOLD: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct PredictedToken<T> {
    pub confidence: T,
    pub edge: DirectedEdge<T>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PredictedRoom<T> {
    pub tokens: Vec<PredictedToken<T>>,
}

impl<T: Scalar> PredictedRoom<T> {
    /// Room of valid-edge predictions: tokens with confidence at least `threshold`.
    pub fn to_room(&self, threshold: T, capacity: ModelCapacity) -> Result<RoomEdgeSequence<T>> {
        let tokens = self
            .tokens
            .iter()
            .map(|t| EdgeToken { edge: t.edge, valid: t.confidence >= threshold && !t.edge.is_degenerate() })
            .collect();
        RoomEdgeSequence::from_tokens(tokens, capacity)
    }

    pub fn confidences(&self) -> impl Iterator<Item = T> + '_ {
        self.tokens.iter().map(|t| t.confidence)
    }
}

impl<T: Scalar> From<&RoomEdgeSequence<T>> for PredictedRoom<T> {
    fn from(room: &RoomEdgeSequence<T>) -> Self {
        PredictedRoom {
            tokens: room.tokens().iter().map(|t| PredictedToken { confidence: t.label(), edge: t.edge }).collect(),
        }
    }
}

/// `M` predicted rooms of `N` tokens each.
#[derive(Debug, Clone, PartialEq)]
pub struct PredictionSet<T> {
    rooms: Vec<PredictedRoom<T>>,
    capacity: ModelCapacity,
}

impl<T: Scalar> PredictionSet<T> {
    pub fn new(rooms: Vec<PredictedRoom<T>>, capacity: ModelCapacity) -> Result<Self> {
        if rooms.len() != capacity.rooms {
            return Err(Error::LengthMismatch { expected: capacity.rooms, actual: rooms.len() });
        }
        for room in &rooms {
            if room.tokens.len() != capacity.edges {
                return Err(Error::LengthMismatch { expected: capacity.edges, actual: room.tokens.len() });
            }
            if room.tokens.iter().any(|t| !(t.confidence >= T::zero() && t.confidence <= T::one())) {
                return Err(Error::InvalidConfig("confidence outside [0,1]".into()));
            }
        }
        Ok(PredictionSet { rooms, capacity })
    }

    /// Saturated predictions (confidence 1 on valid tokens, 0 on padding).
    pub fn from_floorplan(fp: &Floorplan<T>) -> Self {
        PredictionSet { rooms: fp.rooms().iter().map(PredictedRoom::from).collect(), capacity: fp.capacity() }
    }

    pub fn rooms(&self) -> &[PredictedRoom<T>] {
        &self.rooms
    }

    pub fn capacity(&self) -> ModelCapacity {
        self.capacity
    }

    pub fn permuted(&self, order: &[usize]) -> Result<Self> {
        if order.len() != self.rooms.len() {
            return Err(Error::LengthMismatch { expected: self.rooms.len(), actual: order.len() });
        }
        Ok(PredictionSet { rooms: order.iter().map(|&i| self.rooms[i].clone()).collect(), capacity: self.capacity })
    }

    /// Thresholds confidences into a floorplan of predicted rooms.
    pub fn to_floorplan(&self, threshold: T) -> Result<Floorplan<T>> {
        let rooms = self.rooms.iter().map(|r| r.to_room(threshold, self.capacity)).collect::<Result<Vec<_>>>()?;
        Floorplan::new(rooms, self.capacity)
    }
}

/// How the ground-truth sequence was aligned to its matched prediction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
pub struct Alignment {
    pub rotation: usize,
    pub reversed: bool,
}

impl Alignment {
    pub fn apply<T: Scalar>(&self, room: &RoomEdgeSequence<T>) -> RoomEdgeSequence<T> {
        let base = if self.reversed { room.reversed() } else { room.clone() };
        base.rotated(self.rotation)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MatchingOptions<T> {
    pub lambda_cls: T,
    /// Also scan rotations of the reversed traversal.
    pub allow_reversal: bool,
}

impl<T: Scalar> Default for MatchingOptions<T> {
    fn default() -> Self {
        MatchingOptions { lambda_cls: T::lit(DEFAULT_LAMBDA_CLS), allow_reversal: false }
    }
}

impl<T: Scalar> MatchingOptions<T> {
    pub fn with_lambda(lambda_cls: T) -> Self {
        MatchingOptions { lambda_cls, ..Default::default() }
    }
}

fn geometry_cost<T: Scalar>(gt: &RoomEdgeSequence<T>, pred: &PredictedRoom<T>, positions: &[usize], rotation: usize) -> T {
    let k = positions.len();
    let tokens = gt.tokens();
    positions
        .iter()
        .enumerate()
        .map(|(i, &pos)| tokens[positions[(i + rotation) % k]].edge.l1_distance(&pred.tokens[pos].edge))
        .sum()
}

/// Minimum cost over rotations of `gt`'s valid edges, with the minimizing
/// alignment. Ties keep the lowest rotation.
pub fn pair_cost<T: Scalar>(
    gt: &RoomEdgeSequence<T>,
    pred: &PredictedRoom<T>,
    opts: &MatchingOptions<T>,
) -> Result<(T, Alignment)> {
    if gt.len() != pred.tokens.len() {
        return Err(Error::LengthMismatch { expected: gt.len(), actual: pred.tokens.len() });
    }
    if gt.is_mock() {
        return Ok((T::zero(), Alignment::default()));
    }
    let cls: T = gt.labels().zip(pred.confidences()).map(|(c, p)| (c - p).abs()).sum();
    let positions = gt.valid_positions();
    let k = positions.len();

    let mut best = (T::infinity(), Alignment::default());
    let mut scan = |seq: &RoomEdgeSequence<T>, reversed: bool| {
        for rotation in 0..k {
            let cost = geometry_cost(seq, pred, &positions, rotation);
            if cost < best.0 {
                best = (cost, Alignment { rotation, reversed });
            }
        }
    };
    scan(gt, false);
    if opts.allow_reversal {
        scan(&gt.reversed(), true);
    }
    Ok((opts.lambda_cls * cls + best.0, best.1))
}

/// Square cost matrix; row = ground-truth room, column = predicted room.
#[derive(Debug, Clone, PartialEq)]
pub struct CostMatrix<T> {
    size: usize,
    values: Vec<T>,
}

impl<T: Scalar> CostMatrix<T> {
    pub fn from_rows(rows: Vec<Vec<T>>) -> Result<Self> {
        let size = rows.len();
        if rows.iter().any(|r| r.len() != size) {
            return Err(Error::InvalidCostMatrix);
        }
        let values: Vec<T> = rows.into_iter().flatten().collect();
        if values.iter().any(|v| !v.is_finite() || *v < T::zero()) {
            return Err(Error::InvalidCostMatrix);
        }
        Ok(CostMatrix { size, values })
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn get(&self, row: usize, col: usize) -> T {
        self.values[row * self.size + col]
    }

    pub fn row(&self, row: usize) -> &[T] {
        &self.values[row * self.size..(row + 1) * self.size]
    }
}

/// Cost matrix and the per-entry alignments that produced it.
#[derive(Debug, Clone, PartialEq)]
pub struct AlignedCosts<T> {
    pub costs: CostMatrix<T>,
    pub alignments: Vec<Alignment>,
}

impl<T> AlignedCosts<T> {
    pub fn alignment(&self, row: usize, col: usize) -> Alignment {
        self.alignments[row * self.costs.size + col]
    }
}

pub fn build_cost_matrix<T: Scalar>(
    gt: &Floorplan<T>,
    pred: &PredictionSet<T>,
    opts: &MatchingOptions<T>,
) -> Result<AlignedCosts<T>> {
    if gt.capacity() != pred.capacity() {
        return Err(Error::CapacityMismatch { left: gt.capacity().as_pair(), right: pred.capacity().as_pair() });
    }
    let m = gt.capacity().rooms;
    let mut values = Vec::with_capacity(m * m);
    let mut alignments = Vec::with_capacity(m * m);
    for g in gt.rooms() {
        for p in pred.rooms() {
            let (cost, align) = pair_cost(g, p, opts)?;
            values.push(cost);
            alignments.push(align);
        }
    }
    Ok(AlignedCosts { costs: CostMatrix { size: m, values }, alignments })
}

/// Optimal assignment of rows to columns.
#[derive(Debug, Clone, PartialEq)]
pub struct Assignment<T> {
    /// `columns[row]` is the column assigned to `row`.
    pub columns: Vec<usize>,
    pub costs: Vec<T>,
}

impl<T: Scalar> Assignment<T> {
    pub fn total(&self) -> T {
        self.costs.iter().copied().sum()
    }
}

/// Minimum-cost perfect assignment (shortest augmenting path with
/// potentials, O(n^3)).
///
/// Rows are inserted in increasing order and ties pick the lowest column,
/// so the result is deterministic.
pub fn hungarian<T: Scalar>(costs: &CostMatrix<T>) -> Assignment<T> {
    let n = costs.size;
    if n == 0 {
        return Assignment { columns: Vec::new(), costs: Vec::new() };
    }
    let inf = T::infinity();
    // 1-based with a virtual column 0, as in the classical formulation.
    let mut u = vec![T::zero(); n + 1];
    let mut v = vec![T::zero(); n + 1];
    let mut row_of = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];

    for i in 1..=n {
        row_of[0] = i;
        let mut j0 = 0usize;
        let mut minv = vec![inf; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = row_of[j0];
            let mut delta = inf;
            let mut j1 = 0usize;
            for j in 1..=n {
                if used[j] {
                    continue;
                }
                let cur = costs.get(i0 - 1, j - 1) - u[i0] - v[j];
                if cur < minv[j] {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if minv[j] < delta {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[row_of[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if row_of[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            row_of[j0] = row_of[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }

    let mut columns = vec![0usize; n];
    for j in 1..=n {
        columns[row_of[j] - 1] = j - 1;
    }
    let costs_out = columns.iter().enumerate().map(|(r, &c)| costs.get(r, c)).collect();
    Assignment { columns, costs: costs_out }
}

/// Supervision alignment between a ground-truth floorplan and predictions.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MatchResult<T> {
    /// `assignment[gt_room]` is the matched prediction index.
    pub assignment: Vec<usize>,
    pub per_pair_cost: Vec<T>,
    pub alignments: Vec<Alignment>,
}

impl<T: Scalar> MatchResult<T> {
    pub fn total_cost(&self) -> T {
        self.per_pair_cost.iter().copied().sum()
    }

    pub fn best_rotations(&self) -> Vec<usize> {
        self.alignments.iter().map(|a| a.rotation).collect()
    }

    /// Match result for a fixed room permutation (alignments still optimized per pair).
    pub fn from_permutation(
        gt: &Floorplan<T>,
        pred: &PredictionSet<T>,
        permutation: &[usize],
        opts: &MatchingOptions<T>,
    ) -> Result<Self> {
        let m = gt.capacity().rooms;
        if permutation.len() != m || pred.rooms().len() != m {
            return Err(Error::LengthMismatch { expected: m, actual: permutation.len() });
        }
        let mut seen = vec![false; m];
        for &c in permutation {
            if c >= m || std::mem::replace(&mut seen[c], true) {
                return Err(Error::InvalidConfig("assignment is not a permutation".into()));
            }
        }
        let mut per_pair_cost = Vec::with_capacity(m);
        let mut alignments = Vec::with_capacity(m);
        for (g, &c) in gt.rooms().iter().zip(permutation) {
            let (cost, align) = pair_cost(g, &pred.rooms()[c], opts)?;
            per_pair_cost.push(cost);
            alignments.push(align);
        }
        Ok(MatchResult { assignment: permutation.to_vec(), per_pair_cost, alignments })
    }
}

/// Builds the cost matrix and solves the assignment.
pub fn match_floorplans<T: Scalar>(
    gt: &Floorplan<T>,
    pred: &PredictionSet<T>,
    opts: &MatchingOptions<T>,
) -> Result<MatchResult<T>> {
    let aligned = build_cost_matrix(gt, pred, opts)?;
    let solved = hungarian(&aligned.costs);
    let alignments = solved.columns.iter().enumerate().map(|(r, &c)| aligned.alignment(r, c)).collect();
    Ok(MatchResult { assignment: solved.columns, per_pair_cost: solved.costs, alignments })
}
