//! Offline fitness metrics of a localized network: Delaunay locality `k_T`,
//! embedding locality `k_e` and geographic eccentricity `k_g`.
//!
//! Everything is computed on apparent positions. Segments passing exactly
//! through a Voronoi vertex list every incident cell, which can only raise
//! the metrics.

use crate::geometry::{build_subdivision, GeometryError, PlanarSubdivision, Segment};
use crate::netgen::LocalizedNetwork;
use crate::netgraph::{DistanceMatrix, GraphError, Hops};
use crate::NodeId;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

#[derive(Debug, thiserror::Error, Clone, PartialEq)]
pub enum EccError {
    #[error("communication graph is disconnected")]
    Disconnected,
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

impl From<GraphError> for EccError {
    fn from(_: GraphError) -> Self {
        EccError::Disconnected
    }
}

/// Cells met by the segment of one communication edge.
#[derive(Debug, Clone, PartialEq)]
pub struct EdgeWalk {
    pub u: NodeId,
    pub v: NodeId,
    /// Owners from `p_u` to `p_v`, vertex ties included.
    pub owners: Vec<NodeId>,
}

impl EdgeWalk {
    /// Smallest k for which consecutive owners are G^k-adjacent (at least 1).
    pub fn embedding_need(&self, dist: &DistanceMatrix) -> Hops {
        self.owners
            .windows(2)
            .map(|w| dist.get(w[0], w[1]))
            .max()
            .unwrap_or(1)
            .max(1)
    }

    /// Smallest k for which every owner is within k hops of both endpoints.
    pub fn zone_need(&self, dist: &DistanceMatrix) -> Hops {
        self.owners
            .iter()
            .map(|&w| dist.get(self.u, w).max(dist.get(self.v, w)))
            .max()
            .unwrap_or(1)
            .max(1)
    }
}

/// Cell walk along `p_u -> p_v`, starting in the cell of `u`.
pub fn edge_walk(sub: &PlanarSubdivision, u: NodeId, v: NodeId) -> Result<EdgeWalk, GeometryError> {
    let seg = Segment::new(
        sub.position(u).expect("u is a site"),
        sub.position(v).expect("v is a site"),
    );
    let owners = crate::geometry::traverse::walk(sub, &seg, Some(sub.idx(u)))?
        .into_iter()
        .map(|c| c.owner)
        .collect();
    Ok(EdgeWalk { u, v, owners })
}

/// Subdivision of the apparent positions inside the network's clip window.
pub fn subdivision(net: &LocalizedNetwork) -> Result<PlanarSubdivision, GeometryError> {
    build_subdivision(&net.sites(), net.bounding_box())
}

/// Shared intermediate results for all metrics of one network.
#[derive(Debug, Clone)]
pub struct Analysis {
    pub sub: PlanarSubdivision,
    pub dist: DistanceMatrix,
    pub walks: Vec<EdgeWalk>,
    pub diameter: Hops,
}

impl Analysis {
    pub fn new(net: &LocalizedNetwork) -> Result<Self, EccError> {
        let dist = DistanceMatrix::new(&net.graph);
        let diameter = dist.diameter()?;
        let sub = subdivision(net)?;
        let walks = net
            .graph
            .edges()
            .map(|(u, v)| edge_walk(&sub, u, v))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Analysis {
            sub,
            dist,
            walks,
            diameter,
        })
    }

    pub fn delaunay_locality(&self) -> Hops {
        self.sub
            .delaunay_edges()
            .iter()
            .map(|&(a, b)| self.dist.get(a, b))
            .max()
            .unwrap_or(0)
    }

    /// Link-embedding condition over G^k.
    pub fn embedding_holds(&self, k: Hops) -> bool {
        self.walks.iter().all(|w| w.embedding_need(&self.dist) <= k)
    }

    /// Link embedding plus every traversed cell inside both endpoint zones.
    pub fn eccentricity_holds(&self, k: Hops) -> bool {
        self.embedding_holds(k) && self.walks.iter().all(|w| w.zone_need(&self.dist) <= k)
    }

    /// Both conditions are monotone in k, so the smallest satisfying k is the
    /// largest per-edge requirement.
    pub fn embedding_locality(&self) -> Hops {
        self.walks
            .iter()
            .map(|w| w.embedding_need(&self.dist))
            .max()
            .unwrap_or(1)
    }

    pub fn geographic_eccentricity(&self) -> Hops {
        self.walks
            .iter()
            .map(|w| w.zone_need(&self.dist))
            .max()
            .unwrap_or(1)
            .max(self.embedding_locality())
    }

    pub fn report(&self) -> EccentricityReport {
        let k_t = self.delaunay_locality();
        let k_e = self.embedding_locality();
        let k_g = self.geographic_eccentricity();
        assert!(
            k_e <= k_g,
            "embedding locality {k_e} exceeds eccentricity {k_g}"
        );
        let mut n = BTreeMap::new();
        for i in [1, k_e, k_g] {
            n.insert(i, self.dist.avg_neighborhood_size(i));
        }
        let (n1, n_ke, n_kg) = (n[&1], n[&k_e], n[&k_g]);
        EccentricityReport {
            d: self.diameter,
            n,
            n1,
            n_ke,
            n_kg,
            k_t,
            k_e,
            k_g,
            dk: k_g - k_e,
            dn: n_kg - n_ke,
            vertex_ties: "inclusive".to_string(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EccentricityReport {
    #[serde(rename = "D")]
    pub d: Hops,
    /// Mean number of other nodes within i hops, for i in {1, k_e, k_g}.
    #[serde(rename = "N")]
    pub n: BTreeMap<Hops, f64>,
    #[serde(rename = "N1")]
    pub n1: f64,
    #[serde(rename = "N_ke")]
    pub n_ke: f64,
    #[serde(rename = "N_kg")]
    pub n_kg: f64,
    #[serde(rename = "k_T")]
    pub k_t: Hops,
    pub k_e: Hops,
    pub k_g: Hops,
    pub dk: Hops,
    #[serde(rename = "dN")]
    pub dn: f64,
    /// How segments through Voronoi vertices are counted.
    pub vertex_ties: String,
}

pub fn delaunay_locality(net: &LocalizedNetwork) -> Result<Hops, EccError> {
    Ok(Analysis::new(net)?.delaunay_locality())
}

pub fn embedding_locality(net: &LocalizedNetwork) -> Result<Hops, EccError> {
    Ok(Analysis::new(net)?.embedding_locality())
}

pub fn geographic_eccentricity(net: &LocalizedNetwork) -> Result<Hops, EccError> {
    Ok(Analysis::new(net)?.geographic_eccentricity())
}

pub fn full_report(net: &LocalizedNetwork) -> Result<EccentricityReport, EccError> {
    Ok(Analysis::new(net)?.report())
}
