//! Synchronous round-based simulation of the distributed zone construction:
//! k-hop Delaunay discovery, right-hand face probes over the discovered
//! triangulation, then Voronoi cell exchange. Either every node ends up with
//! its zone and the removed boundaries, or some node holds a witness that the
//! geographic eccentricity exceeds `k`.
//!
//! A broadcast at k hops costs one message per reached node; a probe forward
//! along a triangulation edge costs one message per G-hop. Messages are
//! applied in sender-id order, so runs are deterministic.

use crate::canonical::CanonicalSimulation;
use crate::geometry::{
    build_subdivision, segments_cross, traverse, BoundingBox, Cell, GeometryError,
    PlanarSubdivision, Segment, ADJ_REL,
};
use crate::netgen::LocalizedNetwork;
use crate::netgraph::{DistanceMatrix, Hops};
use crate::NodeId;
use serde::Serialize;
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

#[derive(Debug, thiserror::Error, Clone, PartialEq)]
pub enum ProtocolError {
    #[error("communication graph is disconnected")]
    Disconnected,
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error("global failure: {0}")]
    GlobalFailure(Failure),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum FailureCause {
    /// A received Delaunay edge joins two cells the receiver sees apart.
    NonLocalDelaunayEdge,
    /// A face probe met two crossing triangulation links.
    CrossingLinks,
    /// Triangulation neighbors whose computed cells are not adjacent.
    NonAdjacentCells,
    /// A probe did not return within twice the number of triangulation edges.
    ProbeLost,
    /// A link passes through a cell its endpoint does not know, or through
    /// consecutive cells more than k hops apart.
    LinkNotEmbedded,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum Witness {
    DelaunayEdge {
        observer: NodeId,
        sender: NodeId,
        edge: (NodeId, NodeId),
    },
    Crossing {
        initiator: NodeId,
        first: (NodeId, NodeId),
        second: (NodeId, NodeId),
    },
    Cells {
        observer: NodeId,
        pair: (NodeId, NodeId),
    },
    Probe {
        initiator: NodeId,
        start: (NodeId, NodeId),
    },
    /// `owner` lies on `link` beyond the knowledge of `observer` (or more than
    /// k hops from the preceding owner `prev`).
    Link {
        observer: NodeId,
        link: (NodeId, NodeId),
        owner: NodeId,
        prev: Option<NodeId>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Failure {
    pub cause: FailureCause,
    pub witness: Witness,
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}: {:?}", self.cause, self.witness)
    }
}

fn fail(cause: FailureCause, witness: Witness) -> ProtocolError {
    ProtocolError::GlobalFailure(Failure { cause, witness })
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct MessageCounts {
    pub position_broadcast: u64,
    pub edge_broadcast: u64,
    /// Every launched probe, redundant ones included.
    pub face_probes: u64,
    /// One probe per face (the one launched by the lowest id).
    pub face_probes_dedup: u64,
    pub zone_broadcast: u64,
}

impl MessageCounts {
    pub fn total(&self) -> u64 {
        self.position_broadcast + self.edge_broadcast + self.face_probes + self.zone_broadcast
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Round {
    pub phase: &'static str,
    pub messages: u64,
}

#[derive(Debug, Clone, Default)]
struct Tally {
    messages: MessageCounts,
    rounds: Vec<Round>,
}

impl Tally {
    fn push_rounds(&mut self, phase: &'static str, per_round: Vec<u64>) -> u64 {
        let total = per_round.iter().sum();
        self.rounds.extend(
            per_round
                .into_iter()
                .map(|messages| Round { phase, messages }),
        );
        total
    }
}

fn ordered(a: NodeId, b: NodeId) -> (NodeId, NodeId) {
    (a.min(b), a.max(b))
}

/// Discovered triangulation and the knowledge gathered on the way.
#[derive(Debug, Clone)]
pub struct DelaunayPhase {
    pub k: Hops,
    /// Nodes within k hops of each node, itself included, sorted.
    pub knowledge: Vec<Vec<NodeId>>,
    /// Delaunay edges each node derived along its own links.
    pub local_edges: Vec<BTreeSet<(NodeId, NodeId)>>,
    /// Union of all local edges.
    pub edges: BTreeSet<(NodeId, NodeId)>,
    /// Cell owners along each incident link, in the node's local diagram.
    walks: Vec<Vec<(NodeId, Vec<NodeId>)>>,
    dist: DistanceMatrix,
    bbox: BoundingBox,
}

impl DelaunayPhase {
    fn knows(&self, u: NodeId, v: NodeId) -> bool {
        self.knowledge[u].binary_search(&v).is_ok()
    }
}

fn local_diagram(
    net: &LocalizedNetwork,
    nodes: impl IntoIterator<Item = NodeId>,
    bbox: BoundingBox,
) -> Result<PlanarSubdivision, GeometryError> {
    let sites: Vec<_> = nodes
        .into_iter()
        .map(|v| (v, net.apparent_positions[v]))
        .collect();
    build_subdivision(&sites, bbox)
}

/// Messages per round of one k-hop broadcast from each node in `senders`.
fn broadcast(dist: &DistanceMatrix, k: Hops, senders: impl Iterator<Item = NodeId>) -> Vec<u64> {
    let mut per_round = vec![0u64; k as usize];
    for s in senders {
        for &d in dist.row(s) {
            if d >= 1 && d <= k {
                per_round[d as usize - 1] += 1;
            }
        }
    }
    per_round
}

pub fn run_distributed_delaunay(
    net: &LocalizedNetwork,
    k: Hops,
) -> Result<DelaunayPhase, ProtocolError> {
    delaunay(net, k, &mut Tally::default())
}

fn delaunay(
    net: &LocalizedNetwork,
    k: Hops,
    tally: &mut Tally,
) -> Result<DelaunayPhase, ProtocolError> {
    assert!(k >= 1, "the protocol needs k >= 1");
    let dist = DistanceMatrix::new(&net.graph);
    if !dist.is_connected() {
        return Err(ProtocolError::Disconnected);
    }
    let n = net.n();
    let bbox = net.bounding_box();
    let pos = &net.apparent_positions;

    // positions flood k hops; every node draws the diagram of what it heard
    tally.messages.position_broadcast = tally.push_rounds("positions", broadcast(&dist, k, 0..n));
    let knowledge: Vec<Vec<NodeId>> = (0..n)
        .map(|u| (0..n).filter(|&v| dist.get(u, v) <= k).collect())
        .collect();
    let locals = knowledge
        .iter()
        .map(|kn| local_diagram(net, kn.iter().copied(), bbox))
        .collect::<Result<Vec<_>, _>>()?;

    let mut local_edges = vec![BTreeSet::new(); n];
    let mut walks = vec![Vec::new(); n];
    for u in 0..n {
        let sub = &locals[u];
        for &v in net.graph.neighbors(u) {
            let seg = Segment::new(pos[u], pos[v]);
            let owners: Vec<NodeId> = traverse::walk(sub, &seg, Some(sub.idx(u)))?
                .into_iter()
                .map(|c| c.owner)
                .collect();
            for w in owners.windows(2) {
                if w[0] != w[1] && sub.cells_adjacent(w[0], w[1]) {
                    local_edges[u].insert(ordered(w[0], w[1]));
                }
            }
            walks[u].push((v, owners));
        }
    }
    let edges: BTreeSet<_> = local_edges.iter().flatten().copied().collect();

    // edges flood k hops; receivers check them against their own diagram
    tally.messages.edge_broadcast = tally.push_rounds("delaunay-edges", broadcast(&dist, k, 0..n));
    let phase = DelaunayPhase {
        k,
        knowledge,
        local_edges,
        edges,
        walks,
        dist,
        bbox,
    };
    for w in 0..n {
        for &sender in &phase.knowledge[w] {
            if sender == w {
                continue;
            }
            for &(a, b) in &phase.local_edges[sender] {
                if phase.knows(w, a) && phase.knows(w, b) && !locals[w].cells_adjacent(a, b) {
                    return Err(fail(
                        FailureCause::NonLocalDelaunayEdge,
                        Witness::DelaunayEdge {
                            observer: w,
                            sender,
                            edge: (a, b),
                        },
                    ));
                }
            }
        }
    }
    Ok(phase)
}

/// One face of the discovered triangulation, as seen by its probe.
#[derive(Debug, Clone, PartialEq)]
pub struct Face {
    pub initiator: NodeId,
    /// Nodes in visiting order, starting at the initiator.
    pub cycle: Vec<NodeId>,
    pub forwards: usize,
    pub messages: u64,
    /// Cell pairs adjacent in the face's diagram whose owners are more than
    /// k hops apart.
    pub holes: BTreeSet<(NodeId, NodeId)>,
}

#[derive(Debug, Clone)]
pub struct FacePhase {
    /// One entry per face, ordered by initiator and first link.
    pub faces: Vec<Face>,
    pub probes_launched: usize,
    pub raw_messages: u64,
    pub dedup_messages: u64,
}

/// Neighbors in the triangulation, sorted counterclockwise around each node.
fn rotation_system(net: &LocalizedNetwork, edges: &BTreeSet<(NodeId, NodeId)>) -> Vec<Vec<NodeId>> {
    let pos = &net.apparent_positions;
    let mut rot = vec![Vec::new(); net.n()];
    for &(a, b) in edges {
        rot[a].push(b);
        rot[b].push(a);
    }
    for (x, nbrs) in rot.iter_mut().enumerate() {
        let angle = |v: &NodeId| {
            let d = pos[*v] - pos[x];
            d.y.atan2(d.x)
        };
        nbrs.sort_by(|a, b| angle(a).total_cmp(&angle(b)).then(a.cmp(b)));
    }
    rot
}

pub fn run_face_probe(
    net: &LocalizedNetwork,
    dt: &DelaunayPhase,
) -> Result<FacePhase, ProtocolError> {
    face_probe(net, dt, &mut Tally::default())
}

fn face_probe(
    net: &LocalizedNetwork,
    dt: &DelaunayPhase,
    tally: &mut Tally,
) -> Result<FacePhase, ProtocolError> {
    let rot = rotation_system(net, &dt.edges);
    let limit = 2 * dt.edges.len();
    // right-hand rule: from x, reached via w, leave along the first link
    // clockwise from x->w
    let next = |w: NodeId, x: NodeId| {
        let r = &rot[x];
        let i = r
            .iter()
            .position(|&y| y == w)
            .expect("arrival link is incident");
        r[(i + r.len() - 1) % r.len()]
    };

    let mut faces: BTreeMap<(NodeId, NodeId), Face> = BTreeMap::new();
    let mut probe_messages = Vec::new();
    let mut raw_messages = 0;
    for u in 0..net.n() {
        for &v in &rot[u] {
            let start = (u, v);
            let (mut a, mut b) = start;
            let mut cycle = vec![u];
            let mut key = start;
            let mut messages = 0u64;
            let mut forwards = 0;
            loop {
                messages += dt.dist.get(a, b) as u64;
                forwards += 1;
                let c = next(a, b);
                if (b, c) == start {
                    break;
                }
                if forwards >= limit {
                    return Err(fail(
                        FailureCause::ProbeLost,
                        Witness::Probe {
                            initiator: u,
                            start,
                        },
                    ));
                }
                cycle.push(b);
                key = key.min((b, c));
                (a, b) = (b, c);
            }
            raw_messages += messages;
            probe_messages.push(messages);
            if key == start {
                faces.insert(
                    key,
                    Face {
                        initiator: u,
                        cycle,
                        forwards,
                        messages,
                        holes: BTreeSet::new(),
                    },
                );
            }
        }
    }
    let probes_launched = probe_messages.len();
    let longest = probe_messages.iter().copied().max().unwrap_or(0);
    let per_round = (1..=longest)
        .map(|r| probe_messages.iter().filter(|&&m| m >= r).count() as u64)
        .collect();
    tally.push_rounds("face-probe", per_round);
    tally.messages.face_probes = raw_messages;
    let dedup_messages = faces.values().map(|f| f.messages).sum();
    tally.messages.face_probes_dedup = dedup_messages;

    let pos = &net.apparent_positions;
    for face in faces.values_mut() {
        let m = face.cycle.len();
        let links: Vec<(NodeId, NodeId)> = (0..m)
            .map(|i| (face.cycle[i], face.cycle[(i + 1) % m]))
            .collect();
        for i in 0..m {
            for j in i + 1..m {
                let (l1, l2) = (links[i], links[j]);
                if ordered(l1.0, l1.1) == ordered(l2.0, l2.1) {
                    continue;
                }
                let s1 = Segment::new(pos[l1.0], pos[l1.1]);
                let s2 = Segment::new(pos[l2.0], pos[l2.1]);
                if segments_cross(&s1, &s2) {
                    return Err(fail(
                        FailureCause::CrossingLinks,
                        Witness::Crossing {
                            initiator: face.initiator,
                            first: l1,
                            second: l2,
                        },
                    ));
                }
            }
        }
        let nodes: BTreeSet<NodeId> = face.cycle.iter().copied().collect();
        let sub = local_diagram(net, nodes, dt.bbox)?;
        face.holes = sub
            .shared_boundaries()
            .keys()
            .copied()
            .filter(|&(a, b)| dt.dist.get(a, b) > dt.k)
            .collect();
    }
    Ok(FacePhase {
        faces: faces.into_values().collect(),
        probes_launched,
        raw_messages,
        dedup_messages,
    })
}

/// Per-node outcome of a successful run.
#[derive(Debug, Clone, PartialEq)]
pub struct ZoneAssignment {
    /// Each node's own cell and those of its k-hop neighbors, sorted.
    pub zones: Vec<Vec<NodeId>>,
    pub cells: Vec<Cell>,
    /// Adjacent cell pairs whose owners are more than k hops apart.
    pub holes: BTreeSet<(NodeId, NodeId)>,
}

pub fn run_zone_computation(
    net: &LocalizedNetwork,
    dt: &DelaunayPhase,
    faces: &FacePhase,
) -> Result<ZoneAssignment, ProtocolError> {
    zone_computation(net, dt, faces, &mut Tally::default())
}

fn sees(cell: &Cell, other: NodeId, tol: f64) -> bool {
    cell.edges()
        .any(|(s, nb)| nb == Some(other) && s.length() > tol)
}

fn segment_distance(s1: &Segment, s2: &Segment) -> f64 {
    if segments_cross(s1, s2) {
        return 0.0;
    }
    [
        s1.a.dist(s2.closest_point(s1.a)),
        s1.b.dist(s2.closest_point(s1.b)),
        s2.a.dist(s1.closest_point(s2.a)),
        s2.b.dist(s1.closest_point(s2.b)),
    ]
    .into_iter()
    .fold(f64::INFINITY, f64::min)
}

fn zone_computation(
    net: &LocalizedNetwork,
    dt: &DelaunayPhase,
    fp: &FacePhase,
    tally: &mut Tally,
) -> Result<ZoneAssignment, ProtocolError> {
    let n = net.n();
    let tol = ADJ_REL * dt.bbox.diagonal();

    // each node's cell is the intersection of its cells in the face diagrams
    let mut around: Vec<BTreeSet<NodeId>> = (0..n).map(|u| BTreeSet::from([u])).collect();
    for face in &fp.faces {
        for &u in &face.cycle {
            around[u].extend(face.cycle.iter().copied());
        }
    }
    let cells = around
        .into_iter()
        .enumerate()
        .map(|(u, nodes)| {
            Ok(local_diagram(net, nodes, dt.bbox)?
                .cell(u)
                .expect("own site")
                .clone())
        })
        .collect::<Result<Vec<Cell>, GeometryError>>()?;
    tally.messages.zone_broadcast = tally.push_rounds("zones", broadcast(&dt.dist, dt.k, 0..n));

    for &(a, b) in &dt.edges {
        if !dt.knows(a, b) || !(sees(&cells[a], b, tol) || sees(&cells[b], a, tol)) {
            return Err(fail(
                FailureCause::NonAdjacentCells,
                Witness::Cells {
                    observer: a,
                    pair: (a, b),
                },
            ));
        }
    }

    let pos = &net.apparent_positions;
    for u in 0..n {
        for (v, owners) in &dt.walks[u] {
            let link = (u, *v);
            let seg = Segment::new(pos[u], pos[*v]);
            // follow the exchanged cells along the link
            let mut seen = BTreeSet::from([u]);
            let mut queue = vec![u];
            while let Some(w) = queue.pop() {
                for (s, nb) in cells[w].edges() {
                    let Some(z) = nb else { continue };
                    if seen.contains(&z) || segment_distance(&s, &seg) > tol {
                        continue;
                    }
                    if !dt.knows(u, z) {
                        return Err(fail(
                            FailureCause::LinkNotEmbedded,
                            Witness::Link {
                                observer: u,
                                link,
                                owner: z,
                                prev: None,
                            },
                        ));
                    }
                    seen.insert(z);
                    queue.push(z);
                }
            }
            for w in owners.windows(2) {
                if !dt.knows(w[0], w[1]) {
                    return Err(fail(
                        FailureCause::LinkNotEmbedded,
                        Witness::Link {
                            observer: u,
                            link,
                            owner: w[1],
                            prev: Some(w[0]),
                        },
                    ));
                }
            }
        }
    }

    let mut holes = BTreeSet::new();
    for (a, cell) in cells.iter().enumerate() {
        for (s, nb) in cell.edges() {
            if let Some(b) = nb {
                if s.length() > tol && !dt.knows(a, b) {
                    holes.insert(ordered(a, b));
                }
            }
        }
    }
    Ok(ZoneAssignment {
        zones: dt.knowledge.clone(),
        cells,
        holes,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub enum Verdict {
    Success(ZoneAssignment),
    GlobalFailure(Failure),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProtocolRun {
    pub k: Hops,
    pub messages: MessageCounts,
    pub round_log: Vec<Round>,
    pub verdict: Verdict,
}

impl ProtocolRun {
    pub fn rounds(&self) -> usize {
        self.round_log.len()
    }

    pub fn succeeded(&self) -> bool {
        matches!(self.verdict, Verdict::Success(_))
    }

    pub fn failure(&self) -> Option<&Failure> {
        match &self.verdict {
            Verdict::GlobalFailure(f) => Some(f),
            Verdict::Success(_) => None,
        }
    }

    /// `round <i>: <msgs> messages, phase <name>` per executed round.
    pub fn log(&self) -> String {
        self.round_log
            .iter()
            .enumerate()
            .map(|(i, r)| {
                format!(
                    "round {}: {} messages, phase {}\n",
                    i + 1,
                    r.messages,
                    r.phase
                )
            })
            .collect()
    }

    /// Whether a successful run produced exactly the zones and removed
    /// boundaries of `sim`.
    pub fn agrees_with(&self, sim: &CanonicalSimulation) -> bool {
        match &self.verdict {
            Verdict::Success(z) => z.zones == sim.zones && z.holes == sim.forbidden,
            Verdict::GlobalFailure(_) => false,
        }
    }
}

pub fn run_full_protocol(net: &LocalizedNetwork, k: Hops) -> Result<ProtocolRun, ProtocolError> {
    let mut tally = Tally::default();
    let result = delaunay(net, k, &mut tally).and_then(|dt| {
        let fp = face_probe(net, &dt, &mut tally)?;
        zone_computation(net, &dt, &fp, &mut tally)
    });
    let verdict = match result {
        Ok(z) => Verdict::Success(z),
        Err(ProtocolError::GlobalFailure(f)) => Verdict::GlobalFailure(f),
        Err(e) => return Err(e),
    };
    Ok(ProtocolRun {
        k,
        messages: tally.messages,
        round_log: tally.rounds,
        verdict,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::canonical::build_canonical;
    use crate::geometry::Point2;
    use crate::netgraph::CommGraph;

    fn collinear() -> LocalizedNetwork {
        let pts = vec![
            Point2::new(0., 0.),
            Point2::new(1., 0.),
            Point2::new(2., 0.),
        ];
        let g = CommGraph::from_edges(3, [(0, 2), (1, 2)]).unwrap();
        LocalizedNetwork::from_positions(pts, g)
            .with_bbox(BoundingBox::new(Point2::new(-1., -1.), Point2::new(3., 1.)))
    }

    #[test]
    fn collinear_k2_matches_canonical() {
        let net = collinear();
        let dt = run_distributed_delaunay(&net, 2).unwrap();
        assert_eq!(
            dt.edges.iter().copied().collect::<Vec<_>>(),
            vec![(0, 1), (1, 2)]
        );
        let run = run_full_protocol(&net, 2).unwrap();
        assert!(run.agrees_with(&build_canonical(&net, 2).unwrap()));
        let Verdict::Success(z) = &run.verdict else {
            unreachable!()
        };
        assert!(z.holes.is_empty());
    }

    #[test]
    fn collinear_k1_fails() {
        let run = run_full_protocol(&collinear(), 1).unwrap();
        assert_eq!(
            run.failure().unwrap().cause,
            FailureCause::NonLocalDelaunayEdge
        );
    }

    #[test]
    fn k5_delaunay_phase_costs_forty() {
        let pts = (0..5)
            .map(|i| {
                let a = i as f64 * std::f64::consts::TAU / 5.0 + 0.1;
                Point2::new(a.cos(), a.sin())
            })
            .collect();
        let net = LocalizedNetwork::from_positions(pts, CommGraph::complete(5));
        let run = run_full_protocol(&net, 1).unwrap();
        assert!(run.succeeded());
        assert_eq!(
            run.messages.position_broadcast + run.messages.edge_broadcast,
            40
        );
        assert!(run
            .log()
            .starts_with("round 1: 20 messages, phase positions\n"));
    }

    #[test]
    fn triangle_faces() {
        let pts = vec![
            Point2::new(0., 0.),
            Point2::new(1., 0.),
            Point2::new(0.3, 1.),
        ];
        let net = LocalizedNetwork::from_positions(pts, CommGraph::complete(3));
        let dt = run_distributed_delaunay(&net, 1).unwrap();
        let fp = run_face_probe(&net, &dt).unwrap();
        assert_eq!(fp.faces.len(), 2);
        assert!(fp
            .faces
            .iter()
            .all(|f| f.forwards == 3 && f.cycle.len() == 3));
        assert_eq!(fp.probes_launched, 6);
        let z = run_zone_computation(&net, &dt, &fp).unwrap();
        assert!(z.zones.iter().all(|z| z == &vec![0, 1, 2]));
    }
}
