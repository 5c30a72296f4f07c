//! Fixtures, brute-force oracles and invariant checks shared by the
//! integration tests and the acceptance harness.
#![allow(dead_code)]

use geoecc::canonical::CanonicalSimulation;
use geoecc::netgen::{generate, GenParams, LinkModel, LocalizedNetwork};
use geoecc::netgraph::power_graph;
use geoecc::{BoundingBox, CommGraph, Point2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::collections::{BTreeSet, VecDeque};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

// ---------------------------------------------------------------- fixtures

/// Nodes at (0,0), (1,0), (2,0); links 0-2 and 1-2.
pub fn collinear() -> LocalizedNetwork {
    let pts = vec![
        Point2::new(0., 0.),
        Point2::new(1., 0.),
        Point2::new(2., 0.),
    ];
    let g = CommGraph::from_edges(3, [(0, 2), (1, 2)]).unwrap();
    LocalizedNetwork::from_positions(pts, g)
        .with_bbox(BoundingBox::new(Point2::new(-1., -1.), Point2::new(3., 1.)))
}

/// Complete graph on a regular pentagon.
pub fn k5() -> LocalizedNetwork {
    let pts = (0..5)
        .map(|i| {
            let a = i as f64 * std::f64::consts::TAU / 5.0 + 0.3;
            Point2::new(a.cos(), a.sin())
        })
        .collect();
    LocalizedNetwork::from_positions(pts, CommGraph::complete(5))
}

pub fn unit_square() -> LocalizedNetwork {
    let pts = vec![
        Point2::new(0., 0.),
        Point2::new(1., 0.),
        Point2::new(0., 1.),
        Point2::new(1., 1.),
    ];
    LocalizedNetwork::from_positions(pts, CommGraph::complete(4))
}

/// 7x5 grid with a 3x3 notch cut from the top middle, 4-neighbor links,
/// slightly jittered so no four sites are cocircular.
pub fn u_grid() -> LocalizedNetwork {
    let mut r = rng(99);
    let mut pts = Vec::new();
    let mut index = std::collections::HashMap::new();
    for y in 0..5 {
        for x in 0..7 {
            if (2..=4).contains(&x) && y >= 2 {
                continue;
            }
            index.insert((x, y), pts.len());
            pts.push(Point2::new(
                x as f64 + r.random_range(-0.05..0.05),
                y as f64 + r.random_range(-0.05..0.05),
            ));
        }
    }
    let mut edges = Vec::new();
    for (&(x, y), &i) in &index {
        for (dx, dy) in [(1, 0), (0, 1)] {
            if let Some(&j) = index.get(&(x + dx, y + dy)) {
                edges.push((i, j));
            }
        }
    }
    let g = CommGraph::from_edges(pts.len(), edges).unwrap();
    LocalizedNetwork::from_positions(pts, g)
        .with_bbox(BoundingBox::new(Point2::new(-1., -1.), Point2::new(7., 5.)))
}

/// Connected network with at most `max_n` nodes, cycling through models and
/// localization errors.
pub fn random_network(seed: u64, max_n: usize) -> LocalizedNetwork {
    let mut r = rng(seed ^ 0x5eed);
    let l_max = ((max_n as f64) / 4.0).sqrt();
    let l = r.random_range(1.5..=l_max);
    let model = match seed % 3 {
        0 => LinkModel::Sinr {
            r: 1.2,
            big_r: r.random_range(1.5..3.0),
        },
        1 => LinkModel::Exponential {
            r_avg: r.random_range(0.9..1.6),
        },
        _ => LinkModel::Random {
            p: r.random_range(0.12..0.35),
        },
    };
    let sigma = [0.0, 0.0, 0.2, 0.5][(seed / 3 % 4) as usize];
    let p = GenParams::new(l, model).with_sigma(sigma);
    (0..)
        .find_map(|shift: u64| generate(&p, seed + (shift << 32)).ok())
        .unwrap()
}

// ----------------------------------------------------------------- oracles

pub fn bfs(g: &CommGraph, s: usize) -> Vec<u32> {
    let mut d = vec![u32::MAX; g.n()];
    d[s] = 0;
    let mut q = VecDeque::from([s]);
    while let Some(u) = q.pop_front() {
        for &v in g.neighbors(u) {
            if d[v] == u32::MAX {
                d[v] = d[u] + 1;
                q.push_back(v);
            }
        }
    }
    d
}

/// Sign of the in-circle determinant, plain floating point.
fn in_circle(a: Point2, b: Point2, c: Point2, d: Point2) -> f64 {
    let (adx, ady) = (a.x - d.x, a.y - d.y);
    let (bdx, bdy) = (b.x - d.x, b.y - d.y);
    let (cdx, cdy) = (c.x - d.x, c.y - d.y);
    let det = (adx * adx + ady * ady) * (bdx * cdy - cdx * bdy)
        - (bdx * bdx + bdy * bdy) * (adx * cdy - cdx * ady)
        + (cdx * cdx + cdy * cdy) * (adx * bdy - bdx * ady);
    let orient = (b.x - a.x) * (c.y - a.y) - (b.y - a.y) * (c.x - a.x);
    det * orient.signum()
}

/// Edges of every triangle whose circumcircle has no site strictly inside.
/// Assumes general position.
pub fn brute_delaunay(pts: &[Point2]) -> BTreeSet<(usize, usize)> {
    let n = pts.len();
    let mut edges = BTreeSet::new();
    if n == 2 {
        edges.insert((0, 1));
    }
    for a in 0..n {
        for b in a + 1..n {
            for c in b + 1..n {
                let orient = (pts[b].x - pts[a].x) * (pts[c].y - pts[a].y)
                    - (pts[b].y - pts[a].y) * (pts[c].x - pts[a].x);
                if orient.abs() < 1e-12 {
                    continue;
                }
                let empty = (0..n)
                    .filter(|&d| d != a && d != b && d != c)
                    .all(|d| in_circle(pts[a], pts[b], pts[c], pts[d]) <= 0.0);
                if empty {
                    edges.extend([(a, b), (a, c), (b, c)]);
                }
            }
        }
    }
    edges
}

/// Sites whose Voronoi cell meets the segment `p_u p_v`, ordered along it.
/// Each cell is clipped to the segment as an interval of the parameter.
pub fn owners_by_clipping(pts: &[Point2], u: usize, v: usize) -> Vec<usize> {
    let (a, b) = (pts[u], pts[v]);
    let d = b - a;
    let tol = 1e-9;
    let mut hits: Vec<(f64, usize)> = Vec::new();
    for w in 0..pts.len() {
        let (mut lo, mut hi) = (0.0f64, 1.0f64);
        let pw = pts[w];
        for (s, &ps) in pts.iter().enumerate() {
            if s == w {
                continue;
            }
            // |x - pw|^2 <= |x - ps|^2 for x = a + t d
            let diff = ps - pw;
            let c = 2.0 * d.dot(diff);
            let rhs = ps.norm2() - pw.norm2() - 2.0 * a.dot(diff);
            if c.abs() < 1e-15 {
                if rhs < -tol {
                    lo = 2.0;
                }
            } else if c > 0.0 {
                hi = hi.min(rhs / c);
            } else {
                lo = lo.max(rhs / c);
            }
        }
        if lo <= hi + tol {
            hits.push(((lo + hi) / 2.0, w));
        }
    }
    hits.sort_by(|x, y| x.0.total_cmp(&y.0).then(x.1.cmp(&y.1)));
    hits.into_iter().map(|h| h.1).collect()
}

/// Per-k conditions checked directly: embedding (consecutive owners within k
/// hops) and eccentricity (additionally every owner within k hops of both
/// endpoints). Returns the smallest satisfying k for each, scanning 1..=D.
pub fn brute_localities(net: &LocalizedNetwork) -> (u32, u32) {
    let g = &net.graph;
    let dist: Vec<Vec<u32>> = (0..g.n()).map(|s| bfs(g, s)).collect();
    let diam = dist.iter().flatten().copied().max().unwrap_or(0).max(1);
    let walks: Vec<(usize, usize, Vec<usize>)> = g
        .edges()
        .map(|(u, v)| (u, v, owners_by_clipping(&net.apparent_positions, u, v)))
        .collect();
    let embeds = |k: u32| {
        walks
            .iter()
            .all(|(_, _, o)| o.windows(2).all(|w| dist[w[0]][w[1]] <= k))
    };
    let eccentric = |k: u32| {
        embeds(k)
            && walks
                .iter()
                .all(|(u, v, o)| o.iter().all(|&w| dist[*u][w] <= k && dist[*v][w] <= k))
    };
    let k_e = (1..=diam).find(|&k| embeds(k)).unwrap_or(diam);
    let k_g = (1..=diam).find(|&k| eccentric(k)).unwrap_or(diam);
    (k_e, k_g)
}

pub fn nearest(pts: &[Point2], p: Point2) -> usize {
    (0..pts.len())
        .min_by(|&a, &b| pts[a].dist2(p).total_cmp(&pts[b].dist2(p)))
        .unwrap()
}

// -------------------------------------------------------------- invariants

/// Every sampled point of a zone is owned by the zone's owner or one of its
/// H-neighbors.
pub fn zone_containment(
    sim: &CanonicalSimulation,
    samples: usize,
    seed: u64,
) -> Result<(), String> {
    let mut r = rng(seed);
    let bb = *sim.sub.bbox();
    let pts = &sim.net.apparent_positions;
    for _ in 0..samples {
        let p = Point2::new(
            r.random_range(bb.min.x..bb.max.x),
            r.random_range(bb.min.y..bb.max.y),
        );
        let u = r.random_range(0..sim.n());
        if sim.zone_contains(u, p) {
            let w = nearest(pts, p);
            if w != u && !sim.h.has_edge(u, w) {
                return Err(format!(
                    "({}, {}) in zone of {u} but owned by {w}",
                    p.x, p.y
                ));
            }
        }
    }
    if sim.zones_within_knowledge() {
        Ok(())
    } else {
        Err("zone lists a cell outside the owner's knowledge".into())
    }
}

/// Delaunay neighbors whose shared boundary is part of S are H-neighbors.
pub fn delaunay_neighbors_adjacent_in_h(sim: &CanonicalSimulation) -> Result<(), String> {
    for (&(a, b), _) in sim.sub.shared_boundaries() {
        if !sim.is_forbidden(a, b) && !sim.h.has_edge(a, b) {
            return Err(format!(
                "open boundary between {a} and {b}, which are not H-neighbors"
            ));
        }
    }
    Ok(())
}

/// Unit disc graph: nodes closer than `r` are linked.
pub fn unit_disc(seed: u64, n: usize, side: f64, r: f64) -> LocalizedNetwork {
    let mut g = rng(seed);
    let pts: Vec<Point2> = (0..n)
        .map(|_| Point2::new(g.random_range(0.0..side), g.random_range(0.0..side)))
        .collect();
    let mut edges = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            if pts[i].dist(pts[j]) <= r {
                edges.push((i, j));
            }
        }
    }
    LocalizedNetwork::from_positions(pts, CommGraph::from_edges(n, edges).unwrap())
}

/// Points in the disc of radius r/2 around a node are owned by that node or
/// one of its neighbors.
pub fn udg_geocasting(
    net: &LocalizedNetwork,
    r: f64,
    samples: usize,
    seed: u64,
) -> Result<(), String> {
    let mut g = rng(seed);
    let pts = &net.apparent_positions;
    for _ in 0..samples {
        let u = g.random_range(0..pts.len());
        let (rho, th) = (
            r / 2.0 * g.random::<f64>().sqrt(),
            g.random_range(0.0..std::f64::consts::TAU),
        );
        let p = pts[u] + Point2::new(rho * th.cos(), rho * th.sin());
        let w = nearest(pts, p);
        if w != u && !net.graph.has_edge(u, w) {
            return Err(format!("ball point near {u} owned by non-neighbor {w}"));
        }
    }
    Ok(())
}

/// On quasi unit disc graphs every point of a link is owned by a node within
/// two hops of the link's endpoints.
pub fn quasi_udg_geocasting(
    net: &LocalizedNetwork,
    per_edge: usize,
    seed: u64,
) -> Result<(), String> {
    let mut g = rng(seed);
    let h = power_graph(&net.graph, 2);
    let pts = &net.apparent_positions;
    for (u, v) in net.graph.edges() {
        for _ in 0..per_edge {
            let p = pts[u].lerp(pts[v], g.random::<f64>());
            let w = nearest(pts, p);
            if w != u && !h.has_edge(u, w) {
                return Err(format!(
                    "point on link {u}-{v} owned by {w}, beyond two hops of {u}"
                ));
            }
        }
    }
    Ok(())
}

pub fn power_graph_monotone(g: &CommGraph, max_k: u32) -> Result<(), String> {
    for k in 1..max_k {
        let (a, b) = (power_graph(g, k), power_graph(g, k + 1));
        if let Some(e) = a.edges().into_iter().find(|&(u, v)| !b.has_edge(u, v)) {
            return Err(format!("edge {e:?} of G^{k} missing from G^{}", k + 1));
        }
    }
    Ok(())
}
