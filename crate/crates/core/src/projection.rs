//! Vertical projection of 3-D point clouds into normalized density maps.
//!
//! Bins are half-open: a point with scaled coordinate `u` lands in column
//! `floor(u)`, and points outside `[min, max)` are discarded. Rows follow
//! the `y` axis, row 0 holding the smallest `y`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::floorplan::Point2;
use crate::scalar::Scalar;

pub const DEFAULT_RESOLUTION: usize = 256;
pub const DEFAULT_MARGIN: f64 = 0.05;

#[derive(Debug, Clone, PartialEq, Default)]
pub struct PointCloud<T> {
    pub points: Vec<[T; 3]>,
}

impl<T: Scalar> PointCloud<T> {
    pub fn new(points: Vec<[T; 3]>) -> Self {
        PointCloud { points }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Keeps points with `lo <= z <= hi`.
    pub fn clip_z(&self, lo: T, hi: T) -> Self {
        PointCloud { points: self.points.iter().copied().filter(|p| p[2] >= lo && p[2] <= hi).collect() }
    }

    /// Tight axis-aligned box of the `(x, y)` coordinates.
    pub fn xy_extent(&self) -> Option<Bounds<T>> {
        let first = self.points.first()?;
        let init = Bounds { min_x: first[0], min_y: first[1], max_x: first[0], max_y: first[1] };
        Some(self.points.iter().fold(init, |b, p| Bounds {
            min_x: b.min_x.min(p[0]),
            min_y: b.min_y.min(p[1]),
            max_x: b.max_x.max(p[0]),
            max_y: b.max_y.max(p[1]),
        }))
    }
}

/// Axis-aligned projection window in scene units.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bounds<T> {
    pub min_x: T,
    pub min_y: T,
    pub max_x: T,
    pub max_y: T,
}

impl<T: Scalar> Bounds<T> {
    pub fn new(min_x: T, min_y: T, max_x: T, max_y: T) -> Result<Self> {
        let b = Bounds { min_x, min_y, max_x, max_y };
        b.check()?;
        Ok(b)
    }

    pub fn unit() -> Self {
        Bounds { min_x: T::zero(), min_y: T::zero(), max_x: T::one(), max_y: T::one() }
    }

    fn check(&self) -> Result<()> {
        // `!(a < b)` also rejects NaN.
        if !(self.min_x < self.max_x) {
            return Err(Error::DegenerateBounds { axis: 'x' });
        }
        if !(self.min_y < self.max_y) {
            return Err(Error::DegenerateBounds { axis: 'y' });
        }
        Ok(())
    }

    /// Grows each side by `fraction` of the extent on that axis.
    pub fn expanded(&self, fraction: T) -> Self {
        let dx = (self.max_x - self.min_x) * fraction;
        let dy = (self.max_y - self.min_y) * fraction;
        Bounds {
            min_x: self.min_x - dx,
            min_y: self.min_y - dy,
            max_x: self.max_x + dx,
            max_y: self.max_y + dy,
        }
    }

    pub fn translated(&self, dx: T, dy: T) -> Self {
        Bounds {
            min_x: self.min_x + dx,
            min_y: self.min_y + dy,
            max_x: self.max_x + dx,
            max_y: self.max_y + dy,
        }
    }
}

/// Row-major grid of normalized point densities.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMap<T> {
    pub width: usize,
    pub height: usize,
    pub values: Vec<T>,
    pub bounds: Bounds<T>,
    /// Largest per-pixel count before normalization (0 for an empty map).
    pub max_count: u64,
}

impl<T: Scalar> DensityMap<T> {
    pub fn get(&self, col: usize, row: usize) -> T {
        self.values[row * self.width + col]
    }

    /// Center of pixel `(col, row)` in normalized `[0,1]^2` coordinates.
    pub fn pixel_to_normalized(&self, col: usize, row: usize) -> Result<Point2<T>> {
        pixel_to_normalized(col, row, self.width, self.height)
    }

    /// Pixel holding a normalized point.
    pub fn normalized_to_pixel(&self, p: Point2<T>) -> Result<(usize, usize)> {
        normalized_to_pixel(p, self.width, self.height)
    }
}

pub fn pixel_to_normalized<T: Scalar>(col: usize, row: usize, width: usize, height: usize) -> Result<Point2<T>> {
    if col >= width || row >= height {
        return Err(Error::OutOfExtent { x: col, y: row, width, height });
    }
    let half = T::lit(0.5);
    let c = T::from_usize(col).unwrap() + half;
    let r = T::from_usize(row).unwrap() + half;
    Ok(Point2::new(c / T::from_usize(width).unwrap(), r / T::from_usize(height).unwrap()))
}

/// Inverse of [`pixel_to_normalized`]; `1.0` maps into the last bin.
pub fn normalized_to_pixel<T: Scalar>(p: Point2<T>, width: usize, height: usize) -> Result<(usize, usize)> {
    if !p.is_finite() || !p.in_unit_square() {
        return Err(Error::OutOfExtent { x: usize::MAX, y: usize::MAX, width, height });
    }
    let bin = |v: T, n: usize| ((v * T::from_usize(n).unwrap()).floor().to_usize().unwrap_or(0)).min(n - 1);
    Ok((bin(p.x, width), bin(p.y, height)))
}

/// Projects `cloud` onto a `width x height` density map.
///
/// With `bounds = None` the tight `(x, y)` box grown by [`DEFAULT_MARGIN`]
/// per side is used.
pub fn project<T: Scalar>(
    cloud: &PointCloud<T>,
    width: usize,
    height: usize,
    bounds: Option<Bounds<T>>,
) -> Result<DensityMap<T>> {
    project_with_margin(cloud, width, height, bounds, T::lit(DEFAULT_MARGIN))
}

pub fn project_with_margin<T: Scalar>(
    cloud: &PointCloud<T>,
    width: usize,
    height: usize,
    bounds: Option<Bounds<T>>,
    margin: T,
) -> Result<DensityMap<T>> {
    if cloud.is_empty() {
        return Err(Error::EmptyCloud);
    }
    if width == 0 || height == 0 {
        return Err(Error::InvalidConfig(format!("map size {width}x{height}")));
    }
    let bounds = match bounds {
        Some(b) => b,
        None => {
            let tight = cloud.xy_extent().ok_or(Error::EmptyCloud)?;
            tight.check()?;
            tight.expanded(margin)
        }
    };
    bounds.check()?;

    let (w, h) = (T::from_usize(width).unwrap(), T::from_usize(height).unwrap());
    let (ext_x, ext_y) = (bounds.max_x - bounds.min_x, bounds.max_y - bounds.min_y);
    let mut counts = vec![0u64; width * height];
    for p in &cloud.points {
        let u = (p[0] - bounds.min_x) / ext_x * w;
        let v = (p[1] - bounds.min_y) / ext_y * h;
        if !(u >= T::zero() && v >= T::zero() && u < w && v < h) {
            continue;
        }
        let col = u.floor().to_usize().unwrap().min(width - 1);
        let row = v.floor().to_usize().unwrap().min(height - 1);
        counts[row * width + col] += 1;
    }

    let max_count = counts.iter().copied().max().unwrap_or(0);
    let values = if max_count == 0 {
        vec![T::zero(); counts.len()]
    } else {
        let denom = T::from_u64(max_count).unwrap();
        counts.iter().map(|&c| T::from_u64(c).unwrap() / denom).collect()
    };
    Ok(DensityMap { width, height, values, bounds, max_count })
}
