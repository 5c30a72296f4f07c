//! Canonical simulation over the knowledge graph `H = G^k`: node `u` simulates
//! its own Voronoi cell and those of its H-neighbors; the boundary between two
//! adjacent cells whose owners are not H-neighbors is cut out of the
//! simulated space (a hole of vanishing width).

use crate::eccentricity::{subdivision, EccError};
use crate::geometry::{traverse::entered_along, PlanarSubdivision, Point2, Segment};
use crate::netgen::LocalizedNetwork;
use crate::netgraph::{power_graph, Hops, KnowledgeGraph};
use crate::NodeId;
use std::collections::BTreeSet;

#[derive(Debug, thiserror::Error, Clone, PartialEq)]
pub enum SimError {
    #[error("node {nearest} is nearest to the target but not known to {u}")]
    GeocastViolation { u: NodeId, nearest: NodeId },
    #[error("handover from {u} blocked by the boundary between cells {from} and {to}")]
    HandoverStuck { u: NodeId, from: NodeId, to: NodeId },
    #[error("precondition violated: {0}")]
    PreconditionViolated(String),
}

#[derive(Debug, Clone)]
pub struct CanonicalSimulation {
    pub net: LocalizedNetwork,
    pub k: Hops,
    pub h: KnowledgeGraph,
    pub sub: PlanarSubdivision,
    /// `zones[u]`: `u` and its H-neighbors, sorted.
    pub zones: Vec<Vec<NodeId>>,
    /// Adjacent cell pairs `(a, b)`, `a < b`, whose owners are not H-neighbors.
    pub forbidden: BTreeSet<(NodeId, NodeId)>,
}

fn ordered(a: NodeId, b: NodeId) -> (NodeId, NodeId) {
    (a.min(b), a.max(b))
}

pub fn build_canonical(net: &LocalizedNetwork, k: Hops) -> Result<CanonicalSimulation, EccError> {
    assert!(k >= 1, "canonical simulation needs k >= 1");
    if !net.graph.is_connected() {
        return Err(EccError::Disconnected);
    }
    let sub = subdivision(net)?;
    Ok(with_subdivision(net, k, sub))
}

/// Builds the simulation on an already computed subdivision of `net`.
pub fn with_subdivision(
    net: &LocalizedNetwork,
    k: Hops,
    sub: PlanarSubdivision,
) -> CanonicalSimulation {
    let h = power_graph(&net.graph, k);
    let zones = (0..net.n())
        .map(|u| {
            let mut z = h.neighbors(u);
            z.push(u);
            z.sort_unstable();
            z
        })
        .collect();
    let forbidden = sub
        .shared_boundaries()
        .keys()
        .copied()
        .filter(|&(a, b)| !h.has_edge(a, b))
        .collect();
    CanonicalSimulation {
        net: net.clone(),
        k,
        h,
        sub,
        zones,
        forbidden,
    }
}

impl CanonicalSimulation {
    pub fn n(&self) -> usize {
        self.zones.len()
    }

    pub fn position(&self, u: NodeId) -> Point2 {
        self.net.apparent_positions[u]
    }

    pub fn zone(&self, u: NodeId) -> &[NodeId] {
        &self.zones[u]
    }

    /// Whether cell `c` belongs to the zone of `u`.
    pub fn in_zone(&self, u: NodeId, c: NodeId) -> bool {
        self.zones[u].binary_search(&c).is_ok()
    }

    pub fn is_forbidden(&self, a: NodeId, b: NodeId) -> bool {
        self.forbidden.contains(&ordered(a, b))
    }

    /// The removed boundary pieces with the two cells they separate.
    pub fn forbidden_segments(&self) -> Vec<(NodeId, NodeId, Segment)> {
        self.forbidden
            .iter()
            .map(|&(a, b)| (a, b, self.sub.shared_boundaries()[&(a, b)]))
            .collect()
    }

    /// Whether `p` lies on a removed boundary (owners include a forbidden pair).
    pub fn on_forbidden_boundary(&self, p: Point2) -> bool {
        let owners = self.sub.owners_at(p);
        owners
            .iter()
            .enumerate()
            .any(|(i, &a)| owners[i + 1..].iter().any(|&b| self.is_forbidden(a, b)))
    }

    pub fn zone_contains(&self, u: NodeId, p: Point2) -> bool {
        if !self.sub.bbox().contains(p) {
            return false;
        }
        let owners = self.sub.owners_at(p);
        owners.iter().any(|&c| self.in_zone(u, c)) && !self.on_forbidden_boundary(p)
    }

    /// Nearest node to `p` among `u` and its H-neighbors (smallest id on ties);
    /// fails if the globally nearest node is unknown to `u`.
    pub fn geocast_target(&self, u: NodeId, p: Point2) -> Result<NodeId, SimError> {
        let owners = self.sub.owners_at(p);
        owners
            .iter()
            .copied()
            .find(|&c| self.in_zone(u, c))
            .ok_or(SimError::GeocastViolation {
                u,
                nearest: owners[0],
            })
    }

    /// Cells `(from, to)` crossed when leaving `p` along `dir` from inside the
    /// zone of `u`.
    fn crossing(&self, u: NodeId, p: Point2, dir: Point2) -> Result<(NodeId, NodeId), SimError> {
        let near = self.sub.nearest_index(p, None);
        let tied = self.sub.tied_indices(p, near);
        let mine: Vec<usize> = tied
            .iter()
            .copied()
            .filter(|&i| self.in_zone(u, self.sub.id_at(i)))
            .collect();
        if mine.is_empty() {
            return Err(SimError::PreconditionViolated(format!(
                "point ({}, {}) is outside the zone of {u}",
                p.x, p.y
            )));
        }
        let from = self
            .sub
            .id_at(entered_along(&self.sub, &mine, p, dir * -1.0));
        let to = self.sub.id_at(entered_along(&self.sub, &tied, p, dir));
        Ok((from, to))
    }

    /// H-neighbor of `u` whose zone contains the cell entered from `p` along
    /// `dir` (smallest id). Fails with `HandoverStuck` when the crossed
    /// boundary is not part of the simulated space.
    pub fn handover_target(&self, u: NodeId, p: Point2, dir: Point2) -> Result<NodeId, SimError> {
        let (from, to) = self.crossing(u, p, dir)?;
        if from == to {
            return Err(SimError::PreconditionViolated(format!(
                "moving from ({}, {}) stays inside cell {from}",
                p.x, p.y
            )));
        }
        if !self.h.has_edge(from, to) {
            return Err(SimError::HandoverStuck { u, from, to });
        }
        self.h
            .neighbors(u)
            .into_iter()
            .filter(|&v| v != u && self.in_zone(v, to))
            .min()
            .ok_or(SimError::HandoverStuck { u, from, to })
    }

    /// Smallest H-neighbor of `u` whose zone contains cell `to`.
    pub fn handover_to_cell(&self, u: NodeId, to: NodeId) -> Result<NodeId, SimError> {
        let v = self
            .h
            .neighbors(u)
            .into_iter()
            .filter(|&v| self.in_zone(v, to))
            .min()
            .ok_or(SimError::HandoverStuck { u, from: u, to })?;
        assert_ne!(u, v, "node handed a message over to itself");
        Ok(v)
    }

    /// Every cell of a zone is the owner's own or an H-neighbor's.
    pub fn zones_within_knowledge(&self) -> bool {
        (0..self.n()).all(|u| {
            self.zones[u]
                .iter()
                .all(|&c| c == u || self.h.has_edge(u, c))
        })
    }

    /// Adjacent cells whose shared boundary belongs to the simulated space are
    /// owned by H-neighbors.
    pub fn open_boundaries_are_h_edges(&self) -> bool {
        self.sub
            .shared_boundaries()
            .keys()
            .all(|&(a, b)| self.is_forbidden(a, b) || self.h.has_edge(a, b))
    }
}
