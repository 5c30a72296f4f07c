//! Exact orientation and in-circle tests backed by adaptive-precision
//! floating-point expansions.

use super::Point2;
use robust::Coord;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Orientation {
    CounterClockwise,
    Clockwise,
    Collinear,
}

fn c(p: Point2) -> Coord<f64> {
    Coord { x: p.x, y: p.y }
}

/// Orientation of the triple `(a, b, c)`.
pub fn orient2d(a: Point2, b: Point2, p: Point2) -> Orientation {
    let det = robust::orient2d(c(a), c(b), c(p));
    if det > 0.0 {
        Orientation::CounterClockwise
    } else if det < 0.0 {
        Orientation::Clockwise
    } else {
        Orientation::Collinear
    }
}

/// Sign of the in-circle determinant: positive when `d` lies strictly inside
/// the circle through `a`, `b`, `c` (taken in counterclockwise order), zero
/// when cocircular. The orientation of the input triple is normalized here.
pub fn incircle(a: Point2, b: Point2, p: Point2, d: Point2) -> i8 {
    let o = orient2d(a, b, p);
    let det = match o {
        Orientation::CounterClockwise => robust::incircle(c(a), c(b), c(p), c(d)),
        Orientation::Clockwise => robust::incircle(c(a), c(p), c(b), c(d)),
        Orientation::Collinear => return 0,
    };
    if det > 0.0 {
        1
    } else if det < 0.0 {
        -1
    } else {
        0
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn orientation_signs() {
        let a = Point2::new(0.0, 0.0);
        let b = Point2::new(1.0, 0.0);
        assert_eq!(
            orient2d(a, b, Point2::new(0.5, 1.0)),
            Orientation::CounterClockwise
        );
        assert_eq!(
            orient2d(a, b, Point2::new(0.5, -1.0)),
            Orientation::Clockwise
        );
        assert_eq!(
            orient2d(a, b, Point2::new(2.0, 0.0)),
            Orientation::Collinear
        );
    }

    #[test]
    fn orientation_is_exact_near_degeneracy() {
        // classic near-collinear triple that naive evaluation gets wrong
        let a = Point2::new(0.5, 0.5);
        let b = Point2::new(12.0, 12.0);
        let p = Point2::new(24.0, 24.0);
        assert_eq!(orient2d(a, b, p), Orientation::Collinear);
        let q = Point2::new(0.5 + f64::EPSILON, 0.5);
        assert_eq!(orient2d(q, b, p), Orientation::Clockwise);
    }

    #[test]
    fn incircle_cases() {
        let a = Point2::new(0.0, 0.0);
        let b = Point2::new(1.0, 0.0);
        let p = Point2::new(0.0, 1.0);
        assert_eq!(incircle(a, b, p, Point2::new(0.5, 0.5)), 1);
        assert_eq!(incircle(a, p, b, Point2::new(0.5, 0.5)), 1);
        assert_eq!(incircle(a, b, p, Point2::new(1.0, 1.0)), 0);
        assert_eq!(incircle(a, b, p, Point2::new(2.0, 2.0)), -1);
    }
}
