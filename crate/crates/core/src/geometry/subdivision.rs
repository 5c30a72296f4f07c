use super::predicates::incircle;
use super::{BoundingBox, GeometryError, NodeId, Point2, Segment};
use spade::handles::FixedVertexHandle;
use spade::{DelaunayTriangulation, Triangulation};
use std::collections::{BTreeMap, BTreeSet, HashMap};

/// Relative tolerance used when deciding that two squared distances tie.
pub(crate) const TIE_REL: f64 = 1e-10;
/// Relative (to the box diagonal) length under which a shared cell boundary
/// is considered a single point.
pub(crate) const ADJ_REL: f64 = 1e-9;

/// A convex Voronoi cell clipped to the bounding box.
///
/// `vertices` are counterclockwise; `edge_neighbors[i]` names the site across
/// the edge `vertices[i] -> vertices[i + 1]`, or `None` on the box boundary.
#[derive(Debug, Clone, PartialEq)]
pub struct Cell {
    pub vertices: Vec<Point2>,
    pub edge_neighbors: Vec<Option<NodeId>>,
}

impl Cell {
    pub fn edges(&self) -> impl Iterator<Item = (Segment, Option<NodeId>)> + '_ {
        let n = self.vertices.len();
        (0..n).map(move |i| {
            (
                Segment::new(self.vertices[i], self.vertices[(i + 1) % n]),
                self.edge_neighbors[i],
            )
        })
    }

    pub fn area(&self) -> f64 {
        let n = self.vertices.len();
        (0..n)
            .map(|i| self.vertices[i].cross(self.vertices[(i + 1) % n]))
            .sum::<f64>()
            / 2.0
    }

    /// Closed containment with an absolute slack.
    pub fn contains(&self, p: Point2, slack: f64) -> bool {
        let n = self.vertices.len();
        (0..n).all(|i| {
            let a = self.vertices[i];
            let b = self.vertices[(i + 1) % n];
            let d = b - a;
            let len = d.norm();
            len == 0.0 || d.cross(p - a) / len >= -slack
        })
    }

    /// The boundary piece shared with `other`, if this cell has one.
    pub fn shared_edge(&self, other: NodeId) -> Option<Segment> {
        self.edges()
            .filter(|(_, nb)| *nb == Some(other))
            .map(|(s, _)| s)
            .max_by(|a, b| a.length().total_cmp(&b.length()))
    }
}

/// Delaunay graph plus box-clipped Voronoi cells of a site set.
#[derive(Debug, Clone)]
pub struct PlanarSubdivision {
    bbox: BoundingBox,
    ids: Vec<NodeId>,
    positions: Vec<Point2>,
    index: HashMap<NodeId, usize>,
    /// Delaunay neighbors by index, sorted by node id.
    neighbors: Vec<Vec<usize>>,
    cells: Vec<Cell>,
    delaunay_edges: BTreeSet<(NodeId, NodeId)>,
    shared: BTreeMap<(NodeId, NodeId), Segment>,
}

fn ordered(a: NodeId, b: NodeId) -> (NodeId, NodeId) {
    if a <= b {
        (a, b)
    } else {
        (b, a)
    }
}

/// Builds the Delaunay graph and the clipped Voronoi cells of `sites`.
///
/// Four or more exactly cocircular sites do not produce the diagonals of
/// their polygon: two sites are Delaunay neighbors iff some circle through
/// both has every other site strictly outside it.
pub fn build_subdivision(
    sites: &[(NodeId, Point2)],
    bbox: BoundingBox,
) -> Result<PlanarSubdivision, GeometryError> {
    if sites.is_empty() {
        return Err(GeometryError::NoSites);
    }
    let mut seen: HashMap<(u64, u64), Vec<NodeId>> = HashMap::new();
    for &(id, p) in sites {
        if !p.is_finite() {
            return Err(GeometryError::NonFinite);
        }
        if !bbox.contains(p) {
            return Err(GeometryError::SiteOutsideBox(id));
        }
        seen.entry(((p.x + 0.0).to_bits(), (p.y + 0.0).to_bits()))
            .or_default()
            .push(id);
    }
    let mut dups: Vec<NodeId> = seen
        .into_values()
        .filter(|v| v.len() > 1)
        .flatten()
        .collect();
    if !dups.is_empty() {
        dups.sort_unstable();
        return Err(GeometryError::DuplicateSites(dups));
    }

    let ids: Vec<NodeId> = sites.iter().map(|s| s.0).collect();
    let positions: Vec<Point2> = sites.iter().map(|s| s.1).collect();
    let index: HashMap<NodeId, usize> = ids.iter().enumerate().map(|(i, &id)| (id, i)).collect();
    let n = sites.len();

    let mut tri: DelaunayTriangulation<spade::Point2<f64>> = DelaunayTriangulation::new();
    let mut handle_to_site: HashMap<FixedVertexHandle, usize> = HashMap::with_capacity(n);
    for (i, p) in positions.iter().enumerate() {
        let h = tri
            .insert(spade::Point2::new(p.x, p.y))
            .map_err(|_| GeometryError::NonFinite)?;
        handle_to_site.insert(h, i);
    }

    let mut neighbors: Vec<Vec<usize>> = vec![Vec::new(); n];
    for edge in tri.undirected_edges() {
        let [v0, v1] = edge.vertices();
        let (i, j) = (handle_to_site[&v0.fix()], handle_to_site[&v1.fix()]);
        let d = edge.as_directed();
        if let (Some(o1), Some(o2)) = (d.opposite_vertex(), d.rev().opposite_vertex()) {
            let (k, l) = (handle_to_site[&o1.fix()], handle_to_site[&o2.fix()]);
            if incircle(positions[i], positions[j], positions[k], positions[l]) == 0 {
                continue;
            }
        }
        neighbors[i].push(j);
        neighbors[j].push(i);
    }
    for nb in neighbors.iter_mut() {
        nb.sort_unstable_by_key(|&k| ids[k]);
        nb.dedup();
    }

    let mut delaunay_edges = BTreeSet::new();
    for (i, nb) in neighbors.iter().enumerate() {
        for &j in nb {
            delaunay_edges.insert(ordered(ids[i], ids[j]));
        }
    }

    let cells: Vec<Cell> = (0..n)
        .map(|i| {
            clip_cell(
                positions[i],
                neighbors[i].iter().map(|&j| (ids[j], positions[j])),
                &bbox,
            )
        })
        .collect();

    let adj_tol = ADJ_REL * bbox.diagonal();
    let mut shared = BTreeMap::new();
    for (i, cell) in cells.iter().enumerate() {
        for (s, nb) in cell.edges() {
            if let Some(j) = nb {
                if s.length() > adj_tol {
                    let key = ordered(ids[i], j);
                    let keep = match shared.get(&key) {
                        Some(prev) => s.length() > Segment::length(prev),
                        None => true,
                    };
                    if keep {
                        shared.insert(key, s);
                    }
                }
            }
        }
    }

    Ok(PlanarSubdivision {
        bbox,
        ids,
        positions,
        index,
        neighbors,
        cells,
        delaunay_edges,
        shared,
    })
}

/// Intersection of the box with the half-planes closer to `site` than to each
/// of `others`; labels record which site bounds each edge.
pub fn clip_cell(
    site: Point2,
    others: impl IntoIterator<Item = (NodeId, Point2)>,
    bbox: &BoundingBox,
) -> Cell {
    let mut poly: Vec<(Point2, Option<NodeId>)> =
        bbox.corners().iter().map(|&c| (c, None)).collect();
    for (qid, q) in others {
        if poly.is_empty() {
            break;
        }
        let normal = q - site;
        let mid = site.lerp(q, 0.5);
        let f = |p: Point2| (p - mid).dot(normal);
        let mut out = Vec::with_capacity(poly.len() + 1);
        for i in 0..poly.len() {
            let (cur, label) = poly[i];
            let (nxt, _) = poly[(i + 1) % poly.len()];
            let (fc, fnx) = (f(cur), f(nxt));
            if fc <= 0.0 {
                out.push((cur, label));
                if fnx > 0.0 {
                    let t = fc / (fc - fnx);
                    out.push((cur.lerp(nxt, t), Some(qid)));
                }
            } else if fnx <= 0.0 {
                let t = fc / (fc - fnx);
                out.push((cur.lerp(nxt, t), label));
            }
        }
        poly = out;
    }
    // drop zero-length edges
    let tol = 1e-13 * bbox.diagonal();
    let mut i = 0;
    while poly.len() > 1 && i < poly.len() {
        let j = (i + 1) % poly.len();
        if poly[i].0.dist(poly[j].0) <= tol {
            poly.remove(i);
        } else {
            i += 1;
        }
    }
    Cell {
        vertices: poly.iter().map(|v| v.0).collect(),
        edge_neighbors: poly.iter().map(|v| v.1).collect(),
    }
}

impl PlanarSubdivision {
    pub fn bbox(&self) -> &BoundingBox {
        &self.bbox
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    /// Sites in input order.
    pub fn sites(&self) -> impl Iterator<Item = (NodeId, Point2)> + '_ {
        self.ids.iter().copied().zip(self.positions.iter().copied())
    }

    pub fn contains_site(&self, id: NodeId) -> bool {
        self.index.contains_key(&id)
    }

    pub fn position(&self, id: NodeId) -> Option<Point2> {
        self.index.get(&id).map(|&i| self.positions[i])
    }

    pub fn delaunay_edges(&self) -> &BTreeSet<(NodeId, NodeId)> {
        &self.delaunay_edges
    }

    pub fn is_delaunay_edge(&self, a: NodeId, b: NodeId) -> bool {
        self.delaunay_edges.contains(&ordered(a, b))
    }

    pub fn delaunay_neighbors(&self, id: NodeId) -> impl Iterator<Item = NodeId> + '_ {
        self.index
            .get(&id)
            .into_iter()
            .flat_map(move |&i| self.neighbors[i].iter().map(move |&j| self.ids[j]))
    }

    pub fn cell(&self, id: NodeId) -> Option<&Cell> {
        self.index.get(&id).map(|&i| &self.cells[i])
    }

    /// Cells keyed by owner id.
    pub fn cells(&self) -> BTreeMap<NodeId, &Cell> {
        self.ids.iter().copied().zip(self.cells.iter()).collect()
    }

    /// Pairs of cells sharing a boundary of positive length inside the box,
    /// with that boundary.
    pub fn shared_boundaries(&self) -> &BTreeMap<(NodeId, NodeId), Segment> {
        &self.shared
    }

    pub fn cells_adjacent(&self, a: NodeId, b: NodeId) -> bool {
        self.shared.contains_key(&ordered(a, b))
    }

    pub(crate) fn idx(&self, id: NodeId) -> usize {
        self.index[&id]
    }

    pub(crate) fn id_at(&self, i: usize) -> NodeId {
        self.ids[i]
    }

    pub(crate) fn pos_at(&self, i: usize) -> Point2 {
        self.positions[i]
    }

    pub(crate) fn neighbors_at(&self, i: usize) -> &[usize] {
        &self.neighbors[i]
    }

    pub(crate) fn tie_tol(&self, d2: f64) -> f64 {
        let diag = self.bbox.diagonal();
        TIE_REL * (d2 + 1e-12 * diag * diag)
    }

    /// Index of a site nearest to `p` (greedy descent over the Delaunay graph),
    /// ties to the smallest id.
    pub(crate) fn nearest_index(&self, p: Point2, hint: Option<usize>) -> usize {
        let mut cur = hint.unwrap_or(0);
        let mut best = self.positions[cur].dist2(p);
        loop {
            let mut moved = false;
            for &j in &self.neighbors[cur] {
                let d = self.positions[j].dist2(p);
                if d < best {
                    best = d;
                    cur = j;
                    moved = true;
                }
            }
            if !moved {
                break;
            }
        }
        self.tied_indices(p, cur)
            .into_iter()
            .min_by_key(|&i| self.ids[i])
            .unwrap_or(cur)
    }

    /// Indices of all sites at (tolerantly) minimal distance from `p`, given
    /// one nearest site `near`. Sorted by id.
    pub(crate) fn tied_indices(&self, p: Point2, near: usize) -> Vec<usize> {
        let mut cand: BTreeSet<usize> = BTreeSet::new();
        cand.insert(near);
        for &j in &self.neighbors[near] {
            cand.insert(j);
            cand.extend(self.neighbors[j].iter().copied());
        }
        let dmin = cand
            .iter()
            .map(|&i| self.positions[i].dist2(p))
            .fold(f64::INFINITY, f64::min);
        let tol = self.tie_tol(dmin);
        let mut out: Vec<usize> = cand
            .into_iter()
            .filter(|&i| self.positions[i].dist2(p) <= dmin + tol)
            .collect();
        out.sort_unstable_by_key(|&i| self.ids[i]);
        out
    }

    /// Owner id of a cell containing `p` (smallest id on ties).
    pub fn nearest_site(&self, p: Point2) -> NodeId {
        self.ids[self.nearest_index(p, None)]
    }

    /// Ids of every closed cell containing `p`, sorted.
    pub fn owners_at(&self, p: Point2) -> Vec<NodeId> {
        let near = self.nearest_index(p, None);
        self.tied_indices(p, near)
            .into_iter()
            .map(|i| self.ids[i])
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bx(x0: f64, y0: f64, x1: f64, y1: f64) -> BoundingBox {
        BoundingBox::new(Point2::new(x0, y0), Point2::new(x1, y1))
    }

    #[test]
    fn lone_site_owns_the_box() {
        let sub = build_subdivision(&[(0, Point2::new(1., 1.))], bx(0., 0., 4., 4.)).unwrap();
        assert!(sub.delaunay_edges().is_empty());
        let c = sub.cell(0).unwrap();
        assert_eq!(c.vertices.len(), 4);
        assert!((c.area() - 16.0).abs() < 1e-12);
    }

    #[test]
    fn collinear_sites_make_strips() {
        let sites = [
            (0, Point2::new(0., 0.)),
            (1, Point2::new(1., 0.)),
            (2, Point2::new(2., 0.)),
        ];
        let sub = build_subdivision(&sites, bx(-1., -1., 3., 1.)).unwrap();
        let edges: Vec<_> = sub.delaunay_edges().iter().copied().collect();
        assert_eq!(edges, vec![(0, 1), (1, 2)]);
        let xs = |id| {
            let c = sub.cell(id).unwrap();
            let lo = c.vertices.iter().map(|p| p.x).fold(f64::INFINITY, f64::min);
            let hi = c
                .vertices
                .iter()
                .map(|p| p.x)
                .fold(f64::NEG_INFINITY, f64::max);
            (lo, hi)
        };
        assert_eq!(xs(0), (-1.0, 0.5));
        assert_eq!(xs(1), (0.5, 1.5));
        assert_eq!(xs(2), (1.5, 3.0));
        assert!(sub.cells_adjacent(0, 1) && sub.cells_adjacent(1, 2));
        assert!(!sub.cells_adjacent(0, 2));
    }

    #[test]
    fn cocircular_square_has_no_diagonals() {
        let sites = [
            (0, Point2::new(0., 0.)),
            (1, Point2::new(1., 0.)),
            (2, Point2::new(0., 1.)),
            (3, Point2::new(1., 1.)),
        ];
        let sub = build_subdivision(&sites, bx(-1., -1., 2., 2.)).unwrap();
        let edges: Vec<_> = sub.delaunay_edges().iter().copied().collect();
        assert_eq!(edges, vec![(0, 1), (0, 2), (1, 3), (2, 3)]);
        assert_eq!(sub.owners_at(Point2::new(0.5, 0.5)), vec![0, 1, 2, 3]);
    }

    #[test]
    fn rejects_duplicates_and_outside_sites() {
        let b = bx(0., 0., 4., 4.);
        let dup = [
            (3, Point2::new(1., 1.)),
            (5, Point2::new(1., 1.)),
            (6, Point2::new(2., 1.)),
        ];
        assert_eq!(
            build_subdivision(&dup, b).unwrap_err(),
            GeometryError::DuplicateSites(vec![3, 5])
        );
        let out = [(0, Point2::new(1., 1.)), (9, Point2::new(5., 1.))];
        assert_eq!(
            build_subdivision(&out, b).unwrap_err(),
            GeometryError::SiteOutsideBox(9)
        );
    }

    #[test]
    fn cells_tile_the_box() {
        let sites: Vec<_> = (0..30)
            .map(|i| {
                let t = i as f64;
                (
                    i,
                    Point2::new((t * 7.31).sin() * 4.0 + 5.0, (t * 3.17).cos() * 4.0 + 5.0),
                )
            })
            .collect();
        let b = bx(0., 0., 10., 10.);
        let sub = build_subdivision(&sites, b).unwrap();
        let total: f64 = sub.cells().values().map(|c| c.area()).sum();
        assert!((total - b.area()).abs() < 1e-9);
        for (id, c) in sub.cells() {
            assert!(c.area() > 0.0);
            assert!(c.contains(sub.position(id).unwrap(), 1e-12));
        }
    }
}
