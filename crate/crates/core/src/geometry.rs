// Copyright 2026 The cmerw Authors
// SPDX-License-Identifier: Apache-2.0

//! Planar convex hulls of lattice paths.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type Point = [i64; 2];

/// Strict convex hull: counter-clockwise from the lexicographically smallest
/// vertex, no three consecutive vertices collinear.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Hull2D {
    pub vertices: Vec<Point>,
    pub perimeter: f64,
    pub diameter: f64,
}

/// Twice the signed area of the triangle `(o, a, b)`; positive for a left turn.
#[inline]
pub fn cross(o: Point, a: Point, b: Point) -> i128 {
    let (ax, ay) = ((a[0] - o[0]) as i128, (a[1] - o[1]) as i128);
    let (bx, by) = ((b[0] - o[0]) as i128, (b[1] - o[1]) as i128);
    ax * by - ay * bx
}

pub fn squared_distance(a: Point, b: Point) -> i128 {
    let dx = (a[0] - b[0]) as i128;
    let dy = (a[1] - b[1]) as i128;
    dx * dx + dy * dy
}

/// Andrew's monotone chain with exact integer orientation tests.
pub fn convex_hull_2d(points: &[Point]) -> Result<Hull2D> {
    if points.is_empty() {
        return Err(Error::EmptyPointSet);
    }
    let mut pts = points.to_vec();
    pts.sort_unstable();
    pts.dedup();
    let vertices = if pts.len() < 3 {
        pts
    } else {
        let mut hull: Vec<Point> = Vec::with_capacity(2 * pts.len());
        for &p in &pts {
            while hull.len() >= 2 && cross(hull[hull.len() - 2], hull[hull.len() - 1], p) <= 0 {
                hull.pop();
            }
            hull.push(p);
        }
        let lower_len = hull.len() + 1;
        for &p in pts.iter().rev().skip(1) {
            while hull.len() >= lower_len && cross(hull[hull.len() - 2], hull[hull.len() - 1], p) <= 0 {
                hull.pop();
            }
            hull.push(p);
        }
        hull.pop();
        hull
    };
    Ok(Hull2D {
        perimeter: perimeter(&vertices),
        diameter: diameter_squared(&vertices) as f64,
        vertices,
    }
    .with_sqrt_diameter())
}

impl Hull2D {
    fn with_sqrt_diameter(mut self) -> Self {
        self.diameter = self.diameter.sqrt();
        self
    }

    /// Exact squared diameter.
    pub fn diameter_squared(&self) -> i128 {
        diameter_squared(&self.vertices)
    }

    /// True if `p` lies inside or on the hull.
    pub fn contains(&self, p: Point) -> bool {
        match self.vertices.len() {
            1 => self.vertices[0] == p,
            2 => {
                let (a, b) = (self.vertices[0], self.vertices[1]);
                cross(a, b, p) == 0
                    && p[0] >= a[0].min(b[0])
                    && p[0] <= a[0].max(b[0])
                    && p[1] >= a[1].min(b[1])
                    && p[1] <= a[1].max(b[1])
            }
            k => (0..k).all(|i| cross(self.vertices[i], self.vertices[(i + 1) % k], p) >= 0),
        }
    }
}

fn perimeter(vertices: &[Point]) -> f64 {
    match vertices.len() {
        0 | 1 => 0.0,
        2 => 2.0 * (squared_distance(vertices[0], vertices[1]) as f64).sqrt(),
        k => (0..k)
            .map(|i| (squared_distance(vertices[i], vertices[(i + 1) % k]) as f64).sqrt())
            .sum(),
    }
}

// Pairwise over hull vertices; path hulls have few vertices.
fn diameter_squared(vertices: &[Point]) -> i128 {
    let mut best = 0;
    for (i, &a) in vertices.iter().enumerate() {
        for &b in &vertices[i + 1..] {
            best = best.max(squared_distance(a, b));
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn triangle() {
        let h = convex_hull_2d(&[[0, 0], [1, 0], [0, 1]]).unwrap();
        assert_eq!(h.vertices, vec![[0, 0], [1, 0], [0, 1]]);
        assert!((h.perimeter - (2.0 + 2f64.sqrt())).abs() < 1e-15);
        assert!((h.diameter - 2f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn collinear_interior_point_dropped() {
        let h = convex_hull_2d(&[[0, 0], [2, 0], [1, 0], [1, 1]]).unwrap();
        assert_eq!(h.vertices, vec![[0, 0], [2, 0], [1, 1]]);
    }

    #[test]
    fn degenerate_inputs() {
        let h = convex_hull_2d(&[[3, 3], [3, 3]]).unwrap();
        assert_eq!(h.vertices, vec![[3, 3]]);
        assert_eq!(h.perimeter, 0.0);
        let h = convex_hull_2d(&[[0, 0], [1, 1], [2, 2], [5, 5], [3, 3]]).unwrap();
        assert_eq!(h.vertices, vec![[0, 0], [5, 5]]);
        assert!(h.contains([4, 4]) && !h.contains([1, 2]) && !h.contains([6, 6]));
        assert!((h.diameter - 50f64.sqrt()).abs() < 1e-12);
        assert!(matches!(convex_hull_2d(&[]), Err(Error::EmptyPointSet)));
    }

    #[test]
    fn square_with_edge_points() {
        let mut pts = Vec::new();
        for x in 0..5 {
            for y in 0..5 {
                pts.push([x, y]);
            }
        }
        let h = convex_hull_2d(&pts).unwrap();
        assert_eq!(h.vertices, vec![[0, 0], [4, 0], [4, 4], [0, 4]]);
        assert_eq!(h.perimeter, 16.0);
        assert_eq!(h.diameter_squared(), 32);
    }
}
