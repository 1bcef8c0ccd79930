//! Forward values of the supervision terms: classification BCE, endpoint L1,
//! rasterized Dice, and their denoising counterparts.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::floorplan::{Floorplan, RoomEdgeSequence};
use crate::matching::{MatchResult, PredictedRoom, PredictionSet, DEFAULT_CONFIDENCE_THRESHOLD};
use crate::polygonize::{edges_to_polygon, DEFAULT_EPS};
use crate::projection::DEFAULT_RESOLUTION;
use crate::raster::{dice_loss, rasterize, RasterMask};
use crate::scalar::Scalar;

/// Floor applied to every log argument.
pub const LOG_FLOOR: f64 = 1e-7;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LossWeights<T> {
    pub lambda_cls: T,
    pub lambda_edge: T,
    pub lambda_ras: T,
    pub lambda_cls_dn: T,
    pub lambda_edge_dn: T,
}

impl<T: Scalar> Default for LossWeights<T> {
    fn default() -> Self {
        LossWeights {
            lambda_cls: T::lit(0.6),
            lambda_edge: T::lit(6.0),
            lambda_ras: T::lit(1.0),
            lambda_cls_dn: T::lit(0.6),
            lambda_edge_dn: T::lit(6.0),
        }
    }
}

impl<T: Scalar> LossWeights<T> {
    pub fn zero() -> Self {
        LossWeights {
            lambda_cls: T::zero(),
            lambda_edge: T::zero(),
            lambda_ras: T::zero(),
            lambda_cls_dn: T::zero(),
            lambda_edge_dn: T::zero(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let all = [self.lambda_cls, self.lambda_edge, self.lambda_ras, self.lambda_cls_dn, self.lambda_edge_dn];
        if all.iter().any(|w| !(*w >= T::zero()) || !w.is_finite()) {
            return Err(Error::InvalidConfig("loss weights must be finite and non-negative".into()));
        }
        Ok(())
    }
}

/// Unweighted per-term sums over rooms, plus the weighted total.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LossBreakdown<T> {
    pub cls: T,
    pub edge: T,
    pub ras: T,
    pub cls_dn: T,
    pub edge_dn: T,
    pub total: T,
}

impl<T: Scalar> LossBreakdown<T> {
    fn weigh(cls: T, edge: T, ras: T, cls_dn: T, edge_dn: T, w: &LossWeights<T>) -> Self {
        let total =
            w.lambda_cls * cls + w.lambda_edge * edge + w.lambda_ras * ras + w.lambda_cls_dn * cls_dn + w.lambda_edge_dn * edge_dn;
        LossBreakdown { cls, edge, ras, cls_dn, edge_dn, total }
    }
}

/// Mean binary cross-entropy of confidences against binary labels.
pub fn bce_cls_loss<T: Scalar>(labels: &[T], confidences: &[T]) -> Result<T> {
    if labels.len() != confidences.len() {
        return Err(Error::LengthMismatch { expected: labels.len(), actual: confidences.len() });
    }
    if labels.is_empty() {
        return Ok(T::zero());
    }
    let floor = T::lit(LOG_FLOOR);
    let sum: T = labels
        .iter()
        .zip(confidences)
        .map(|(&c, &p)| {
            let pos = if c > T::zero() { c * p.max(floor).ln() } else { T::zero() };
            let neg = if c < T::one() { (T::one() - c) * (T::one() - p).max(floor).ln() } else { T::zero() };
            pos + neg
        })
        .sum();
    Ok(-sum / T::from_usize(labels.len()).unwrap())
}

/// Endpoint L1 averaged over the ground-truth valid edges. `gt` must already
/// be aligned to `pred`; mock rooms give 0.
pub fn edge_l1_loss<T: Scalar>(gt: &RoomEdgeSequence<T>, pred: &PredictedRoom<T>) -> Result<T> {
    if gt.len() != pred.tokens.len() {
        return Err(Error::LengthMismatch { expected: gt.len(), actual: pred.tokens.len() });
    }
    if gt.is_mock() {
        return Ok(T::zero());
    }
    let sum: T = gt
        .tokens()
        .iter()
        .zip(&pred.tokens)
        .filter(|(g, _)| g.valid)
        .map(|(g, p)| g.edge.l1_distance(&p.edge))
        .sum();
    Ok(sum / T::from_usize(gt.valid_count()).unwrap())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossConfig<T> {
    pub weights: LossWeights<T>,
    /// Polygonization threshold used before rasterizing.
    pub eps: T,
    pub resolution: usize,
    /// Predicted tokens at or above this confidence form the predicted polygon.
    pub confidence_threshold: T,
}

impl<T: Scalar> Default for LossConfig<T> {
    fn default() -> Self {
        LossConfig {
            weights: LossWeights::default(),
            eps: T::lit(DEFAULT_EPS),
            resolution: DEFAULT_RESOLUTION,
            confidence_threshold: T::lit(DEFAULT_CONFIDENCE_THRESHOLD),
        }
    }
}

fn room_mask<T: Scalar>(room: &RoomEdgeSequence<T>, cfg: &LossConfig<T>) -> RasterMask {
    // A room that does not close contributes an empty mask.
    match edges_to_polygon(room, cfg.eps) {
        Ok(poly) => rasterize(&poly, cfg.resolution, cfg.resolution)
            .unwrap_or_else(|_| RasterMask::empty(cfg.resolution, cfg.resolution)),
        Err(_) => RasterMask::empty(cfg.resolution, cfg.resolution),
    }
}

/// Dice loss between the rasterized ground-truth room and the polygonized prediction.
pub fn ras_loss<T: Scalar>(gt: &RoomEdgeSequence<T>, pred: &PredictedRoom<T>, cfg: &LossConfig<T>) -> Result<T> {
    if gt.is_mock() {
        return Ok(T::zero());
    }
    let capacity = crate::floorplan::ModelCapacity { rooms: 1, edges: pred.tokens.len() };
    let pred_room = pred.to_room(cfg.confidence_threshold, capacity)?;
    let d = dice_loss(&room_mask(gt, cfg), &room_mask(&pred_room, cfg))?;
    Ok(T::from_f64(d).unwrap())
}

fn labels<T: Scalar>(room: &RoomEdgeSequence<T>) -> Vec<T> {
    room.labels().collect()
}

/// Full forward loss.
///
/// Matched terms use `matching` (assignment plus per-pair alignment).
/// Denoising terms, when given, pair `dn_pred` room `m` with `dn_gt` room `m`
/// directly.
pub fn total_loss<T: Scalar>(
    gt: &Floorplan<T>,
    pred: &PredictionSet<T>,
    matching: &MatchResult<T>,
    denoising: Option<(&Floorplan<T>, &PredictionSet<T>)>,
    cfg: &LossConfig<T>,
) -> Result<LossBreakdown<T>> {
    cfg.weights.validate()?;
    if gt.capacity() != pred.capacity() {
        return Err(Error::CapacityMismatch { left: gt.capacity().as_pair(), right: pred.capacity().as_pair() });
    }
    let m = gt.capacity().rooms;
    if matching.assignment.len() != m || matching.alignments.len() != m {
        return Err(Error::LengthMismatch { expected: m, actual: matching.assignment.len() });
    }

    let (mut cls, mut edge, mut ras) = (T::zero(), T::zero(), T::zero());
    for (g, (&col, align)) in gt.rooms().iter().zip(matching.assignment.iter().zip(&matching.alignments)) {
        let p = pred.rooms().get(col).ok_or(Error::LengthMismatch { expected: m, actual: col })?;
        cls += bce_cls_loss(&labels(g), &p.confidences().collect::<Vec<_>>())?;
        if !g.is_mock() {
            edge += edge_l1_loss(&align.apply(g), p)?;
            ras += ras_loss(g, p, cfg)?;
        }
    }

    let (mut cls_dn, mut edge_dn) = (T::zero(), T::zero());
    if let Some((dn_gt, dn_pred)) = denoising {
        if dn_gt.capacity() != dn_pred.capacity() {
            return Err(Error::CapacityMismatch {
                left: dn_gt.capacity().as_pair(),
                right: dn_pred.capacity().as_pair(),
            });
        }
        for (g, p) in dn_gt.rooms().iter().zip(dn_pred.rooms()) {
            cls_dn += bce_cls_loss(&labels(g), &p.confidences().collect::<Vec<_>>())?;
            edge_dn += edge_l1_loss(g, p)?;
        }
    }

    Ok(LossBreakdown::weigh(cls, edge, ras, cls_dn, edge_dn, &cfg.weights))
}
