use super::subdivision::PlanarSubdivision;
use super::{GeometryError, NodeId, Point2, Segment};

/// Entry of a segment walk: the cell owner and the segment parameter at which
/// the walk enters it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Crossing {
    pub owner: NodeId,
    pub t: f64,
    /// Inserted because the segment passes through a Voronoi vertex.
    pub at_vertex: bool,
}

const T_EPS: f64 = 1e-12;

/// Ordered owners of the cells met by `seg`, from `seg.a` to `seg.b`.
///
/// When the segment passes exactly through a Voronoi vertex, every cell
/// incident to that vertex is listed at that point (by id, the cell the walk
/// continues in last).
pub fn cells_traversed(
    sub: &PlanarSubdivision,
    seg: &Segment,
) -> Result<Vec<NodeId>, GeometryError> {
    Ok(walk(sub, seg, None)?.into_iter().map(|c| c.owner).collect())
}

/// Picks, among tied site indices at `p`, the cell entered when moving along
/// `dir`; ties resolved by smallest id.
pub(crate) fn entered_along(
    sub: &PlanarSubdivision,
    tied: &[usize],
    p: Point2,
    dir: Point2,
) -> usize {
    let mut best = tied[0];
    let mut best_key = f64::INFINITY;
    let scale = dir.norm() * sub.bbox().diagonal();
    for &i in tied {
        let g = (p - sub.pos_at(i)).dot(dir);
        if g < best_key - 1e-12 * scale {
            best_key = g;
            best = i;
        }
    }
    best
}

/// Walks `seg` through the subdivision. `start` optionally fixes the cell
/// owning `seg.a` (by index) instead of the nearest site.
pub(crate) fn walk(
    sub: &PlanarSubdivision,
    seg: &Segment,
    start: Option<usize>,
) -> Result<Vec<Crossing>, GeometryError> {
    let bbox = sub.bbox();
    if !bbox.contains(seg.a) || !bbox.contains(seg.b) {
        return Err(GeometryError::OutsideBox);
    }
    let a = seg.a;
    let d = seg.b - seg.a;
    let mut out: Vec<Crossing> = Vec::new();
    let push = |out: &mut Vec<Crossing>, owner: NodeId, t: f64, at_vertex: bool| {
        if out.last().map(|c| c.owner) != Some(owner) {
            out.push(Crossing {
                owner,
                t,
                at_vertex,
            });
        }
    };

    let mut cur = match start {
        Some(i) => i,
        None => {
            let near = sub.nearest_index(a, None);
            let tied = sub.tied_indices(a, near);
            if tied.len() == 1 || d.norm2() == 0.0 {
                tied[0]
            } else {
                let next = entered_along(sub, &tied, a, d);
                for &i in tied.iter().filter(|&&i| i != next) {
                    push(&mut out, sub.id_at(i), 0.0, true);
                }
                next
            }
        }
    };
    push(&mut out, sub.id_at(cur), 0.0, false);
    if d.norm2() == 0.0 {
        return Ok(out);
    }

    let mut t = 0.0;
    let guard = 4 * sub.len() + 16;
    for _ in 0..guard {
        let sc = sub.pos_at(cur);
        let ac2 = (a - sc).norm2();
        let mut t_exit = f64::INFINITY;
        for &j in sub.neighbors_at(cur) {
            let sj = sub.pos_at(j);
            let b = 2.0 * (sc - sj).dot(d);
            if b >= 0.0 {
                continue;
            }
            let aj = (a - sj).norm2() - ac2;
            let tj = -aj / b;
            if tj > t + T_EPS && tj < t_exit {
                t_exit = tj;
            }
        }
        if t_exit >= 1.0 - T_EPS {
            return Ok(out);
        }
        let p = seg.at(t_exit);
        let tied = sub.tied_indices(p, cur);
        let mut next = entered_along(sub, &tied, p, d);
        if next == cur {
            // grazing contact; continue in the best other cell if it truly wins
            let others: Vec<usize> = tied.iter().copied().filter(|&i| i != cur).collect();
            if !others.is_empty() {
                let alt = entered_along(sub, &others, p, d);
                let ga = (p - sub.pos_at(alt)).dot(d);
                let gc = (p - sc).dot(d);
                if ga < gc {
                    next = alt;
                }
            }
        }
        let vertex = tied.len() > 2;
        for &i in tied.iter().filter(|&&i| i != cur && i != next) {
            push(&mut out, sub.id_at(i), t_exit, true);
        }
        push(&mut out, sub.id_at(next), t_exit, vertex);
        cur = next;
        t = t_exit;
    }
    Ok(out)
}
