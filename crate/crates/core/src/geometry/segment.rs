use super::predicates::{orient2d, Orientation};
use super::{NodeId, Point2, Segment};
use std::collections::HashMap;

/// True when the two segments cross at a single point interior to both, or
/// overlap along a collinear stretch of positive length. Touching at a shared
/// endpoint (or an endpoint resting on the other segment) is not a crossing.
pub fn segments_cross(s1: &Segment, s2: &Segment) -> bool {
    if s1.a == s1.b || s2.a == s2.b {
        return false;
    }
    let o1 = orient2d(s1.a, s1.b, s2.a);
    let o2 = orient2d(s1.a, s1.b, s2.b);
    if o1 == Orientation::Collinear && o2 == Orientation::Collinear {
        return collinear_overlap(s1, s2);
    }
    let o3 = orient2d(s2.a, s2.b, s1.a);
    let o4 = orient2d(s2.a, s2.b, s1.b);
    let opposite = |x: Orientation, y: Orientation| {
        matches!(
            (x, y),
            (Orientation::Clockwise, Orientation::CounterClockwise)
                | (Orientation::CounterClockwise, Orientation::Clockwise)
        )
    };
    opposite(o1, o2) && opposite(o3, o4)
}

fn collinear_overlap(s1: &Segment, s2: &Segment) -> bool {
    let d = s1.b - s1.a;
    let key = |p: Point2| if d.x.abs() >= d.y.abs() { p.x } else { p.y };
    let (a0, a1) = minmax(key(s1.a), key(s1.b));
    let (b0, b1) = minmax(key(s2.a), key(s2.b));
    a0.max(b0) < a1.min(b1)
}

fn minmax(a: f64, b: f64) -> (f64, f64) {
    if a <= b {
        (a, b)
    } else {
        (b, a)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GabrielViolation {
    pub edge: (NodeId, NodeId),
    pub witness: NodeId,
}

/// Every `(edge, w)` where `p_w` lies strictly inside the disc whose diameter
/// is the edge. An empty result means the edge set is a Gabriel graph.
pub fn gabriel_violations(
    sites: &[(NodeId, Point2)],
    edges: &[(NodeId, NodeId)],
) -> Vec<GabrielViolation> {
    let pos: HashMap<NodeId, Point2> = sites.iter().copied().collect();
    let mut out = Vec::new();
    for &(u, v) in edges {
        let (pu, pv) = (pos[&u], pos[&v]);
        for &(w, pw) in sites {
            if w == u || w == v {
                continue;
            }
            // angle u-w-v obtuse <=> w inside the diametral disc
            if (pu - pw).dot(pv - pw) < 0.0 {
                out.push(GabrielViolation {
                    edge: (u, v),
                    witness: w,
                });
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn seg(ax: f64, ay: f64, bx: f64, by: f64) -> Segment {
        Segment::new(Point2::new(ax, ay), Point2::new(bx, by))
    }

    #[test]
    fn x_crossing() {
        assert!(segments_cross(&seg(0., 0., 2., 2.), &seg(0., 2., 2., 0.)));
    }

    #[test]
    fn shared_endpoint_is_not_a_crossing() {
        assert!(!segments_cross(&seg(0., 0., 1., 0.), &seg(1., 0., 2., 1.)));
        assert!(!segments_cross(&seg(0., 0., 1., 0.), &seg(1., 0., 2., 0.)));
    }

    #[test]
    fn collinear_overlap_counts() {
        assert!(segments_cross(&seg(0., 0., 2., 0.), &seg(1., 0., 3., 0.)));
        assert!(segments_cross(&seg(0., 0., 0., 2.), &seg(0., 3., 0., 1.)));
        assert!(!segments_cross(&seg(0., 0., 1., 0.), &seg(2., 0., 3., 0.)));
    }

    #[test]
    fn t_junction_is_not_a_crossing() {
        assert!(!segments_cross(&seg(0., 0., 2., 0.), &seg(1., 0., 1., 1.)));
    }

    #[test]
    fn gabriel_boundary_excluded() {
        let sites = [
            (0, Point2::new(0., 0.)),
            (1, Point2::new(1., 0.)),
            (2, Point2::new(0., 1.)),
            (3, Point2::new(1., 1.)),
        ];
        assert!(gabriel_violations(&sites, &[(0, 3)]).is_empty());
    }

    #[test]
    fn gabriel_interior_witness() {
        let sites = [
            (0, Point2::new(0., 0.)),
            (1, Point2::new(2., 0.)),
            (2, Point2::new(1., 0.1)),
        ];
        let v = gabriel_violations(&sites, &[(0, 1)]);
        assert_eq!(
            v,
            vec![GabrielViolation {
                edge: (0, 1),
                witness: 2
            }]
        );
        assert!(gabriel_violations(&sites, &[]).is_empty());
    }
}
