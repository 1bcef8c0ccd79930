#![allow(dead_code)]

use std::f64::consts::TAU;

use edgeplan::{Floorplan, ModelCapacity, Point};
use rand::Rng;

/// Star-shaped (hence simple) loop with `k` vertices around `center`.
pub fn star_polygon(rng: &mut impl Rng, k: usize, center: Point, r_min: f64, r_max: f64) -> Vec<Point> {
    let mut angles: Vec<f64>;
    loop {
        angles = (0..k).map(|_| rng.gen_range(0.0..TAU)).collect();
        angles.sort_by(f64::total_cmp);
        let min_gap = (0..k).map(|i| {
            let next = if i + 1 == k { angles[0] + TAU } else { angles[i + 1] };
            next - angles[i]
        });
        if min_gap.fold(f64::INFINITY, f64::min) > 1e-3 {
            break;
        }
    }
    angles
        .into_iter()
        .map(|a| {
            let r = rng.gen_range(r_min..r_max);
            Point::new(center.x + r * a.cos(), center.y + r * a.sin())
        })
        .collect()
}

/// Axis-aligned rectangle loop, counter-clockwise.
pub fn rect(x0: f64, y0: f64, x1: f64, y1: f64) -> Vec<Point> {
    vec![Point::new(x0, y0), Point::new(x1, y0), Point::new(x1, y1), Point::new(x0, y1)]
}

/// Up to 9 rooms, one per cell of a 3x3 grid, so rooms never overlap.
pub fn grid_plan(rng: &mut impl Rng, rooms: usize, max_vertices: usize, cap: ModelCapacity) -> Floorplan<f64> {
    assert!(rooms <= 9);
    let loops: Vec<Vec<Point>> = (0..rooms)
        .map(|i| {
            let c = Point::new((i % 3) as f64 / 3.0 + 1.0 / 6.0, (i / 3) as f64 / 3.0 + 1.0 / 6.0);
            let k = rng.gen_range(3..=max_vertices);
            star_polygon(rng, k, c, 0.08, 0.15)
        })
        .collect();
    Floorplan::from_vertex_loops(&loops, cap).unwrap()
}

/// Rectangular rooms on a 3x3 grid; robust under small noise.
pub fn rect_plan(rng: &mut impl Rng, rooms: usize, cap: ModelCapacity) -> Floorplan<f64> {
    let loops: Vec<Vec<Point>> = (0..rooms)
        .map(|i| {
            let (cx, cy) = ((i % 3) as f64 / 3.0, (i / 3) as f64 / 3.0);
            let (w, h) = (rng.gen_range(0.2..0.3), rng.gen_range(0.2..0.3));
            rect(cx + 0.02, cy + 0.02, cx + 0.02 + w, cy + 0.02 + h)
        })
        .collect();
    Floorplan::from_vertex_loops(&loops, cap).unwrap()
}

pub fn permutations(n: usize) -> Vec<Vec<usize>> {
    if n == 0 {
        return vec![vec![]];
    }
    let mut out = Vec::new();
    for p in permutations(n - 1) {
        for i in 0..=p.len() {
            let mut q = p.clone();
            q.insert(i, n - 1);
            out.push(q);
        }
    }
    out
}
