//! Planar geometry: points, segments, clipped Voronoi/Delaunay subdivisions
//! and segment walks through Voronoi cells.

mod predicates;
mod segment;
mod subdivision;
pub(crate) mod traverse;

pub use predicates::{incircle, orient2d, Orientation};
pub use segment::{gabriel_violations, segments_cross, GabrielViolation};
pub(crate) use subdivision::ADJ_REL;
pub use subdivision::{build_subdivision, clip_cell, Cell, PlanarSubdivision};
pub use traverse::{cells_traversed, Crossing};

use serde::{Deserialize, Serialize};
use std::ops::{Add, Mul, Sub};

/// Identifier of a node (and of the Voronoi cell it owns).
pub type NodeId = usize;

#[derive(Debug, thiserror::Error, Clone, PartialEq)]
pub enum GeometryError {
    #[error("duplicate site positions for ids {0:?}")]
    DuplicateSites(Vec<NodeId>),
    #[error("site {0} lies outside the bounding box")]
    SiteOutsideBox(NodeId),
    #[error("point lies outside the bounding box")]
    OutsideBox,
    #[error("no sites given")]
    NoSites,
    #[error("non-finite coordinate")]
    NonFinite,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Point2 {
    pub x: f64,
    pub y: f64,
}

impl Point2 {
    pub const fn new(x: f64, y: f64) -> Self {
        Point2 { x, y }
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }

    pub fn dot(self, o: Point2) -> f64 {
        self.x * o.x + self.y * o.y
    }

    /// z-component of the cross product.
    pub fn cross(self, o: Point2) -> f64 {
        self.x * o.y - self.y * o.x
    }

    pub fn norm2(self) -> f64 {
        self.dot(self)
    }

    pub fn norm(self) -> f64 {
        self.norm2().sqrt()
    }

    pub fn dist2(self, o: Point2) -> f64 {
        (self - o).norm2()
    }

    pub fn dist(self, o: Point2) -> f64 {
        self.dist2(o).sqrt()
    }

    pub fn normalized(self) -> Point2 {
        let n = self.norm();
        if n == 0.0 {
            self
        } else {
            Point2::new(self.x / n, self.y / n)
        }
    }

    /// Counterclockwise quarter turn.
    pub fn perp(self) -> Point2 {
        Point2::new(-self.y, self.x)
    }

    pub fn lerp(self, o: Point2, t: f64) -> Point2 {
        Point2::new(self.x + (o.x - self.x) * t, self.y + (o.y - self.y) * t)
    }
}

impl Add for Point2 {
    type Output = Point2;
    fn add(self, o: Point2) -> Point2 {
        Point2::new(self.x + o.x, self.y + o.y)
    }
}

impl Sub for Point2 {
    type Output = Point2;
    fn sub(self, o: Point2) -> Point2 {
        Point2::new(self.x - o.x, self.y - o.y)
    }
}

impl Mul<f64> for Point2 {
    type Output = Point2;
    fn mul(self, s: f64) -> Point2 {
        Point2::new(self.x * s, self.y * s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Segment {
    pub a: Point2,
    pub b: Point2,
}

impl Segment {
    pub const fn new(a: Point2, b: Point2) -> Self {
        Segment { a, b }
    }

    pub fn reversed(&self) -> Segment {
        Segment::new(self.b, self.a)
    }

    pub fn length(&self) -> f64 {
        self.a.dist(self.b)
    }

    pub fn at(&self, t: f64) -> Point2 {
        self.a.lerp(self.b, t)
    }

    /// Closest point of the segment to `p`.
    pub fn closest_point(&self, p: Point2) -> Point2 {
        let d = self.b - self.a;
        let l2 = d.norm2();
        if l2 == 0.0 {
            return self.a;
        }
        let t = ((p - self.a).dot(d) / l2).clamp(0.0, 1.0);
        self.at(t)
    }
}

/// Axis-aligned clip window standing in for the englobing space.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundingBox {
    pub min: Point2,
    pub max: Point2,
}

impl BoundingBox {
    pub fn new(min: Point2, max: Point2) -> Self {
        assert!(
            min.x < max.x && min.y < max.y,
            "degenerate bounding box {min:?} {max:?}"
        );
        BoundingBox { min, max }
    }

    /// Smallest box containing all points, inflated by `margin` on every side.
    /// A zero margin on a degenerate point set falls back to a unit margin.
    pub fn around<'a>(points: impl IntoIterator<Item = &'a Point2>, margin: f64) -> Self {
        let mut min = Point2::new(f64::INFINITY, f64::INFINITY);
        let mut max = Point2::new(f64::NEG_INFINITY, f64::NEG_INFINITY);
        for p in points {
            min.x = min.x.min(p.x);
            min.y = min.y.min(p.y);
            max.x = max.x.max(p.x);
            max.y = max.y.max(p.y);
        }
        if !min.x.is_finite() {
            min = Point2::new(0.0, 0.0);
            max = Point2::new(0.0, 0.0);
        }
        let m = if margin > 0.0 { margin } else { 1.0 };
        BoundingBox::new(
            Point2::new(min.x - m, min.y - m),
            Point2::new(max.x + m, max.y + m),
        )
    }

    pub fn contains(&self, p: Point2) -> bool {
        p.x >= self.min.x && p.x <= self.max.x && p.y >= self.min.y && p.y <= self.max.y
    }

    pub fn diagonal(&self) -> f64 {
        self.min.dist(self.max)
    }

    /// Corners in counterclockwise order starting at `min`.
    pub fn corners(&self) -> [Point2; 4] {
        [
            self.min,
            Point2::new(self.max.x, self.min.y),
            self.max,
            Point2::new(self.min.x, self.max.y),
        ]
    }

    pub fn area(&self) -> f64 {
        (self.max.x - self.min.x) * (self.max.y - self.min.y)
    }
}

/// Mean distance from each point to its nearest other point (brute force).
pub fn mean_nearest_neighbor_spacing(points: &[Point2]) -> f64 {
    if points.len() < 2 {
        return 0.0;
    }
    let total: f64 = points
        .iter()
        .enumerate()
        .map(|(i, p)| {
            points
                .iter()
                .enumerate()
                .filter(|(j, _)| *j != i)
                .map(|(_, q)| p.dist2(*q))
                .fold(f64::INFINITY, f64::min)
                .sqrt()
        })
        .sum();
    total / points.len() as f64
}
