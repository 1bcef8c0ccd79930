//! Binary polygon rasterization with even-odd scanline fill.
//!
//! Pixel `(col, row)` is filled iff its center `(col + 0.5, row + 0.5)`, in
//! pixel units, is inside the polygon. Crossings use half-open `[y_min, y_max)`
//! edge spans so shared vertices are counted once.

use crate::error::{Error, Result};
use crate::polygonize::PolygonVertices;
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RasterMask {
    width: usize,
    height: usize,
    occupancy: Vec<bool>,
}

impl RasterMask {
    pub fn empty(width: usize, height: usize) -> Self {
        RasterMask { width, height, occupancy: vec![false; width * height] }
    }

    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> bool) -> Self {
        let occupancy = (0..height).flat_map(|r| (0..width).map(move |c| (c, r))).map(|(c, r)| f(c, r)).collect();
        RasterMask { width, height, occupancy }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    pub fn get(&self, col: usize, row: usize) -> bool {
        self.occupancy[row * self.width + col]
    }

    pub fn set(&mut self, col: usize, row: usize, value: bool) {
        self.occupancy[row * self.width + col] = value;
    }

    pub fn count(&self) -> usize {
        self.occupancy.iter().filter(|&&b| b).count()
    }

    fn check_dims(&self, other: &Self) -> Result<()> {
        if self.dims() != other.dims() {
            return Err(Error::DimensionMismatch { left: self.dims(), right: other.dims() });
        }
        Ok(())
    }

    pub fn intersection_count(&self, other: &Self) -> Result<usize> {
        self.check_dims(other)?;
        Ok(self.occupancy.iter().zip(&other.occupancy).filter(|(a, b)| **a && **b).count())
    }

    pub fn union_count(&self, other: &Self) -> Result<usize> {
        self.check_dims(other)?;
        Ok(self.occupancy.iter().zip(&other.occupancy).filter(|(a, b)| **a || **b).count())
    }
}

/// Fills `poly` (normalized coordinates) into a `width x height` mask.
pub fn rasterize<T: Scalar>(poly: &PolygonVertices<T>, width: usize, height: usize) -> Result<RasterMask> {
    rasterize_vertices(poly.vertices().iter().map(|p| (p.x.as_f64(), p.y.as_f64())).collect(), width, height)
}

/// Same as [`rasterize`] for a raw `(x, y)` loop.
pub fn rasterize_vertices(vertices: Vec<(f64, f64)>, width: usize, height: usize) -> Result<RasterMask> {
    let k = vertices.len();
    if k < 3 {
        return Err(Error::TooFewVertices { count: k });
    }
    let (w, h) = (width as f64, height as f64);
    let pts: Vec<(f64, f64)> = vertices.into_iter().map(|(x, y)| (x * w, y * h)).collect();
    let mut mask = RasterMask::empty(width, height);
    let mut xs: Vec<f64> = Vec::with_capacity(k);
    for row in 0..height {
        let y = row as f64 + 0.5;
        xs.clear();
        for i in 0..k {
            let (x0, y0) = pts[i];
            let (x1, y1) = pts[(i + 1) % k];
            if y0 == y1 {
                continue;
            }
            let (lo, hi) = if y0 < y1 { (y0, y1) } else { (y1, y0) };
            if lo <= y && y < hi {
                xs.push(x0 + (y - y0) / (y1 - y0) * (x1 - x0));
            }
        }
        xs.sort_by(f64::total_cmp);
        for span in xs.chunks_exact(2) {
            // Columns whose center c + 0.5 lies in [span[0], span[1]).
            let first = (span[0] - 0.5).ceil().max(0.0);
            let last = (span[1] - 0.5).ceil().min(w);
            let (first, last) = (first as usize, last as usize);
            for col in first..last.max(first) {
                mask.set(col, row, true);
            }
        }
    }
    Ok(mask)
}

/// `1 - 2|A n B| / (|A| + |B|)`; two empty masks give 0.
pub fn dice_loss(a: &RasterMask, b: &RasterMask) -> Result<f64> {
    let inter = a.intersection_count(b)?;
    let total = a.count() + b.count();
    if total == 0 {
        return Ok(0.0);
    }
    Ok(1.0 - 2.0 * inter as f64 / total as f64)
}

/// `|A n B| / |A u B|`; two empty masks give 0.
pub fn mask_iou(a: &RasterMask, b: &RasterMask) -> Result<f64> {
    let union = a.union_count(b)?;
    if union == 0 {
        return Ok(0.0);
    }
    Ok(a.intersection_count(b)? as f64 / union as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::floorplan::Point2;

    fn rect(x0: f64, y0: f64, x1: f64, y1: f64) -> PolygonVertices<f64> {
        PolygonVertices::new(vec![
            Point2::new(x0, y0),
            Point2::new(x1, y0),
            Point2::new(x1, y1),
            Point2::new(x0, y1),
        ])
        .unwrap()
    }

    #[test]
    fn centered_square_pixel_count() {
        let m = rasterize(&rect(0.25, 0.25, 0.75, 0.75), 256, 256).unwrap();
        assert_eq!(m.count(), 128 * 128);
        assert!(m.get(64, 64) && m.get(191, 191));
        assert!(!m.get(63, 64) && !m.get(192, 100));
    }

    #[test]
    fn full_extent_fills_everything() {
        let m = rasterize(&rect(0.0, 0.0, 1.0, 1.0), 256, 256).unwrap();
        assert_eq!(m.count(), 256 * 256);
    }

    #[test]
    fn too_few_vertices() {
        assert_eq!(rasterize_vertices(vec![(0.0, 0.0), (1.0, 1.0)], 8, 8), Err(Error::TooFewVertices { count: 2 }));
    }

    #[test]
    fn orientation_independent() {
        let ccw = rasterize(&rect(0.1, 0.2, 0.7, 0.9), 64, 64).unwrap();
        let mut v = rect(0.1, 0.2, 0.7, 0.9).into_vertices();
        v.reverse();
        let cw = rasterize(&PolygonVertices::new(v).unwrap(), 64, 64).unwrap();
        assert_eq!(ccw, cw);
    }

    #[test]
    fn even_odd_bowtie() {
        // Self-intersecting loop: both lobes filled, crossing handled by parity.
        let v = vec![(0.0, 0.0), (1.0, 1.0), (1.0, 0.0), (0.0, 1.0)];
        let m = rasterize_vertices(v, 16, 16).unwrap();
        assert!(m.get(1, 8) && m.get(14, 8));
        assert!(!m.get(8, 1) && !m.get(8, 14));
    }

    #[test]
    fn triangle_area_close_to_analytic() {
        let tri = PolygonVertices::new(vec![Point2::new(0.1, 0.1), Point2::new(0.9, 0.1), Point2::new(0.1, 0.9)]).unwrap();
        let m = rasterize(&tri, 256, 256).unwrap();
        let analytic = 0.5 * 0.8 * 0.8 * 256.0 * 256.0;
        let perimeter_px = (0.8 + 0.8 + 0.8 * 2f64.sqrt()) * 256.0;
        assert!((m.count() as f64 - analytic).abs() <= perimeter_px);
    }

    #[test]
    fn dice_cases() {
        let a = rasterize(&rect(0.0, 0.0, 0.5, 1.0), 256, 256).unwrap();
        let b = rasterize(&rect(0.0, 0.0, 1.0, 1.0), 256, 256).unwrap();
        let c = rasterize(&rect(0.6, 0.6, 0.9, 0.9), 256, 256).unwrap();
        assert_eq!(dice_loss(&a, &a).unwrap(), 0.0);
        assert_eq!(dice_loss(&a, &c).unwrap(), 1.0);
        assert!((dice_loss(&a, &b).unwrap() - 1.0 / 3.0).abs() < 0.02 / 3.0);
        let e = RasterMask::empty(256, 256);
        assert_eq!(dice_loss(&e, &e).unwrap(), 0.0);
        assert!(dice_loss(&e, &RasterMask::empty(8, 8)).is_err());
    }
}
