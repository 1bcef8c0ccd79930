//! Room, corner and angle precision/recall/F1 plus room IoU.
//!
//! Rooms match one-to-one by descending IoU when IoU is at least
//! `room_iou_min`. Corners are polygon vertices in pixel space and match
//! one-to-one by ascending distance when within `corner_dist_max`
//! (inclusive). An angle is correct when its corner matched and the interior
//! angles differ by at most `angle_tol_deg`. Scene reports keep raw counts so
//! datasets aggregate by summing counts (micro-average).

use std::ops::{Add, AddAssign};

use serde::Serialize;

use crate::error::Result;
use crate::floorplan::{Floorplan, Point2};
use crate::matching::{hungarian, CostMatrix, PredictionSet, DEFAULT_CONFIDENCE_THRESHOLD};
use crate::polygonize::{floorplan_to_polygons, PolygonVertices};
use crate::projection::DEFAULT_RESOLUTION;
use crate::raster::{mask_iou, rasterize, RasterMask};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
pub enum MatchStrategy {
    #[default]
    Greedy,
    Hungarian,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MetricThresholds {
    pub room_iou_min: f64,
    /// Pixels at `resolution`.
    pub corner_dist_max: f64,
    pub angle_tol_deg: f64,
    pub resolution: usize,
    pub strategy: MatchStrategy,
}

impl Default for MetricThresholds {
    fn default() -> Self {
        MetricThresholds {
            room_iou_min: 0.7,
            corner_dist_max: 10.0,
            angle_tol_deg: 5.0,
            resolution: DEFAULT_RESOLUTION,
            strategy: MatchStrategy::Greedy,
        }
    }
}

impl MetricThresholds {
    pub fn validate(&self) -> Result<()> {
        use crate::error::Error;
        if !(self.room_iou_min > 0.0 && self.room_iou_min <= 1.0) {
            return Err(Error::InvalidConfig(format!("room IoU threshold {} not in (0,1]", self.room_iou_min)));
        }
        if !(self.corner_dist_max > 0.0) || !(self.angle_tol_deg > 0.0) || self.resolution == 0 {
            return Err(Error::InvalidConfig("corner and angle thresholds and resolution must be positive".into()));
        }
        Ok(())
    }
}

/// Matched/total tallies for one level.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
pub struct LevelCounts {
    pub matched: usize,
    pub gt: usize,
    pub pred: usize,
}

impl LevelCounts {
    pub fn scores(&self) -> Prf {
        if self.gt == 0 && self.pred == 0 {
            return Prf { precision: 1.0, recall: 1.0, f1: 1.0 };
        }
        let ratio = |n: usize, d: usize| if d == 0 { 0.0 } else { n as f64 / d as f64 };
        Prf::new(ratio(self.matched, self.pred), ratio(self.matched, self.gt))
    }
}

impl Add for LevelCounts {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        LevelCounts { matched: self.matched + o.matched, gt: self.gt + o.gt, pred: self.pred + o.pred }
    }
}

impl AddAssign for LevelCounts {
    fn add_assign(&mut self, o: Self) {
        *self = *self + o;
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Prf {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

impl Prf {
    pub fn new(precision: f64, recall: f64) -> Self {
        let f1 = if precision + recall > 0.0 { 2.0 * precision * recall / (precision + recall) } else { 0.0 };
        Prf { precision, recall, f1 }
    }

    pub fn percent(&self) -> Prf {
        Prf { precision: self.precision * 100.0, recall: self.recall * 100.0, f1: self.f1 * 100.0 }
    }
}

/// Raw counts for a scene or a whole dataset.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct SceneCounts {
    pub room: LevelCounts,
    pub corner: LevelCounts,
    pub angle: LevelCounts,
    /// Sum over ground-truth rooms of their best IoU with any prediction.
    pub iou_sum: f64,
    pub iou_rooms: usize,
}

impl Add for SceneCounts {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        SceneCounts {
            room: self.room + o.room,
            corner: self.corner + o.corner,
            angle: self.angle + o.angle,
            iou_sum: self.iou_sum + o.iou_sum,
            iou_rooms: self.iou_rooms + o.iou_rooms,
        }
    }
}

impl AddAssign for SceneCounts {
    fn add_assign(&mut self, o: Self) {
        *self = *self + o;
    }
}

impl std::iter::Sum for SceneCounts {
    fn sum<I: Iterator<Item = Self>>(iter: I) -> Self {
        iter.fold(SceneCounts::default(), Add::add)
    }
}

impl SceneCounts {
    pub fn report(&self) -> MetricsReport {
        MetricsReport {
            room: self.room.scores(),
            corner: self.corner.scores(),
            angle: self.angle.scores(),
            room_iou: if self.iou_rooms == 0 { 0.0 } else { self.iou_sum / self.iou_rooms as f64 },
            counts: *self,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MetricsReport {
    pub room: Prf,
    pub corner: Prf,
    pub angle: Prf,
    pub room_iou: f64,
    pub counts: SceneCounts,
}

/// Raster IoU of two polygons at `resolution x resolution`.
pub fn polygon_iou<T: Scalar>(a: &PolygonVertices<T>, b: &PolygonVertices<T>, resolution: usize) -> Result<f64> {
    mask_iou(&rasterize(a, resolution, resolution)?, &rasterize(b, resolution, resolution)?)
}

/// One-to-one selection over a dense `rows x cols` score table.
/// `descending` selects higher-is-better scores; `accept` gates a pair.
fn one_to_one(
    rows: usize,
    cols: usize,
    score: &[f64],
    strategy: MatchStrategy,
    descending: bool,
    accept: impl Fn(f64) -> bool,
) -> Vec<(usize, usize)> {
    match strategy {
        MatchStrategy::Greedy => {
            let mut order: Vec<(usize, usize)> =
                (0..rows).flat_map(|r| (0..cols).map(move |c| (r, c))).filter(|&(r, c)| accept(score[r * cols + c])).collect();
            order.sort_by(|&(r1, c1), &(r2, c2)| {
                let (a, b) = (score[r1 * cols + c1], score[r2 * cols + c2]);
                let ord = if descending { b.total_cmp(&a) } else { a.total_cmp(&b) };
                ord.then(r1.cmp(&r2)).then(c1.cmp(&c2))
            });
            let (mut used_r, mut used_c) = (vec![false; rows], vec![false; cols]);
            let mut out = Vec::new();
            for (r, c) in order {
                if !used_r[r] && !used_c[c] {
                    used_r[r] = true;
                    used_c[c] = true;
                    out.push((r, c));
                }
            }
            out
        }
        MatchStrategy::Hungarian => {
            let n = rows.max(cols);
            if n == 0 {
                return Vec::new();
            }
            // Rejected and dummy pairs share one large cost so they never
            // displace an acceptable pair.
            let finite: Vec<f64> = score.iter().copied().filter(|v| v.is_finite()).collect();
            let span = finite.iter().fold(0.0f64, |m, v| m.max(v.abs())) + 1.0;
            let big = 2.0 * span * (n as f64 + 1.0);
            let cost = |r: usize, c: usize| -> f64 {
                if r >= rows || c >= cols {
                    return big;
                }
                let s = score[r * cols + c];
                if !accept(s) {
                    return big;
                }
                if descending {
                    span - s
                } else {
                    s
                }
            };
            let table = (0..n).map(|r| (0..n).map(|c| cost(r, c)).collect()).collect();
            let assignment = hungarian(&CostMatrix::from_rows(table).expect("finite non-negative costs"));
            assignment
                .columns
                .iter()
                .enumerate()
                .filter(|&(r, &c)| r < rows && c < cols && accept(score[r * cols + c]))
                .map(|(r, &c)| (r, c))
                .collect()
        }
    }
}

fn bbox<T: Scalar>(p: &PolygonVertices<T>) -> [f64; 4] {
    p.vertices().iter().fold([f64::INFINITY, f64::INFINITY, f64::NEG_INFINITY, f64::NEG_INFINITY], |b, v| {
        let (x, y) = (v.x.as_f64(), v.y.as_f64());
        [b[0].min(x), b[1].min(y), b[2].max(x), b[3].max(y)]
    })
}

fn iou_table<T: Scalar>(gt: &[PolygonVertices<T>], pred: &[PolygonVertices<T>], resolution: usize) -> Result<Vec<f64>> {
    let masks = |ps: &[PolygonVertices<T>]| -> Result<Vec<(RasterMask, [f64; 4])>> {
        ps.iter().map(|p| Ok((rasterize(p, resolution, resolution)?, bbox(p)))).collect()
    };
    let (gm, pm) = (masks(gt)?, masks(pred)?);
    let mut out = Vec::with_capacity(gm.len() * pm.len());
    for (g, gb) in &gm {
        for (p, pb) in &pm {
            // Filled pixel centers lie inside the bounding box.
            let apart = gb[2] < pb[0] || pb[2] < gb[0] || gb[3] < pb[1] || pb[3] < gb[1];
            out.push(if apart { 0.0 } else { mask_iou(g, p)? });
        }
    }
    Ok(out)
}

pub fn room_counts<T: Scalar>(
    gt: &[PolygonVertices<T>],
    pred: &[PolygonVertices<T>],
    th: &MetricThresholds,
) -> Result<LevelCounts> {
    let ious = iou_table(gt, pred, th.resolution)?;
    let pairs = one_to_one(gt.len(), pred.len(), &ious, th.strategy, true, |v| v >= th.room_iou_min);
    Ok(LevelCounts { matched: pairs.len(), gt: gt.len(), pred: pred.len() })
}

pub fn room_metrics<T: Scalar>(gt: &[PolygonVertices<T>], pred: &[PolygonVertices<T>], th: &MetricThresholds) -> Result<Prf> {
    Ok(room_counts(gt, pred, th)?.scores())
}

/// A polygon vertex in pixel space with its interior angle in degrees.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Corner {
    pub position: (f64, f64),
    pub interior_angle_deg: f64,
}

/// Interior angles of a loop in degrees, in `(0, 360)`; orientation aware.
pub fn interior_angles<T: Scalar>(poly: &PolygonVertices<T>) -> Vec<f64> {
    let v: Vec<Point2<f64>> = poly.vertices().iter().map(|p| Point2::new(p.x.as_f64(), p.y.as_f64())).collect();
    let k = v.len();
    let ccw = poly.signed_area() >= T::zero();
    (0..k)
        .map(|i| {
            let prev = v[(i + k - 1) % k] - v[i];
            let next = v[(i + 1) % k] - v[i];
            let cross = if ccw { next.cross(prev) } else { prev.cross(next) };
            let deg = cross.atan2(next.dot(prev)).to_degrees();
            if deg < 0.0 {
                deg + 360.0
            } else {
                deg
            }
        })
        .collect()
}

fn corners<T: Scalar>(polys: &[PolygonVertices<T>], resolution: usize) -> Vec<Corner> {
    let s = resolution as f64;
    polys
        .iter()
        .flat_map(|poly| {
            let angles = interior_angles(poly);
            poly.vertices()
                .iter()
                .zip(angles)
                .map(|(p, a)| Corner { position: (p.x.as_f64() * s, p.y.as_f64() * s), interior_angle_deg: a })
                .collect::<Vec<_>>()
        })
        .collect()
}

/// Corner and angle counts from the shared corner matching.
pub fn corner_angle_counts<T: Scalar>(
    gt: &[PolygonVertices<T>],
    pred: &[PolygonVertices<T>],
    th: &MetricThresholds,
) -> (LevelCounts, LevelCounts) {
    let (gc, pc) = (corners(gt, th.resolution), corners(pred, th.resolution));
    let mut dist = Vec::with_capacity(gc.len() * pc.len());
    for g in &gc {
        for p in &pc {
            dist.push((g.position.0 - p.position.0).hypot(g.position.1 - p.position.1));
        }
    }
    let pairs = one_to_one(gc.len(), pc.len(), &dist, th.strategy, false, |d| d <= th.corner_dist_max);
    let angles_ok = pairs
        .iter()
        .filter(|&&(g, p)| (gc[g].interior_angle_deg - pc[p].interior_angle_deg).abs() <= th.angle_tol_deg)
        .count();
    let corner = LevelCounts { matched: pairs.len(), gt: gc.len(), pred: pc.len() };
    (corner, LevelCounts { matched: angles_ok, ..corner })
}

pub fn corner_metrics<T: Scalar>(gt: &[PolygonVertices<T>], pred: &[PolygonVertices<T>], th: &MetricThresholds) -> Prf {
    corner_angle_counts(gt, pred, th).0.scores()
}

pub fn angle_metrics<T: Scalar>(gt: &[PolygonVertices<T>], pred: &[PolygonVertices<T>], th: &MetricThresholds) -> Prf {
    corner_angle_counts(gt, pred, th).1.scores()
}

/// What a scene's prediction is supplied as.
#[derive(Debug, Clone, PartialEq)]
pub enum ScenePrediction<T> {
    Edges(PredictionSet<T>),
    Polygons(Vec<PolygonVertices<T>>),
}

/// Counts for one polygon-vs-polygon scene.
pub fn evaluate_polygons<T: Scalar>(
    gt: &[PolygonVertices<T>],
    pred: &[PolygonVertices<T>],
    th: &MetricThresholds,
) -> Result<SceneCounts> {
    th.validate()?;
    let ious = iou_table(gt, pred, th.resolution)?;
    let pairs = one_to_one(gt.len(), pred.len(), &ious, th.strategy, true, |v| v >= th.room_iou_min);
    let room = LevelCounts { matched: pairs.len(), gt: gt.len(), pred: pred.len() };
    let iou_sum = (0..gt.len())
        .map(|g| (0..pred.len()).map(|p| ious[g * pred.len() + p]).fold(0.0, f64::max))
        .sum();
    let (corner, angle) = corner_angle_counts(gt, pred, th);
    Ok(SceneCounts { room, corner, angle, iou_sum, iou_rooms: gt.len() })
}

/// Polygonizes ground truth (and edge predictions) then scores the scene.
pub fn evaluate_scene<T: Scalar>(
    gt: &Floorplan<T>,
    pred: &ScenePrediction<T>,
    eps: T,
    th: &MetricThresholds,
) -> Result<SceneCounts> {
    let gt_polys = floorplan_to_polygons(gt, eps);
    let pred_polys = match pred {
        ScenePrediction::Polygons(p) => p.clone(),
        ScenePrediction::Edges(set) => floorplan_to_polygons(&set.to_floorplan(T::lit(DEFAULT_CONFIDENCE_THRESHOLD))?, eps),
    };
    evaluate_polygons(&gt_polys, &pred_polys, th)
}

/// Micro-averaged dataset report plus the per-scene reports.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DatasetReport {
    pub micro: MetricsReport,
    /// Mean of per-scene F1 values (diagnostic only).
    pub macro_f1: (f64, f64, f64),
    pub scenes: Vec<(String, MetricsReport)>,
}

pub fn aggregate(scenes: Vec<(String, SceneCounts)>) -> DatasetReport {
    let total: SceneCounts = scenes.iter().map(|(_, c)| *c).sum();
    let reports: Vec<(String, MetricsReport)> = scenes.into_iter().map(|(n, c)| (n, c.report())).collect();
    let n = reports.len().max(1) as f64;
    let mean = |f: fn(&MetricsReport) -> f64| reports.iter().map(|(_, r)| f(r)).sum::<f64>() / n;
    DatasetReport {
        micro: total.report(),
        macro_f1: (mean(|r| r.room.f1), mean(|r| r.corner.f1), mean(|r| r.angle.f1)),
        scenes: reports,
    }
}
