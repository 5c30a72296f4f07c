//! Fitness of localized networks for geographic routing.
//!
//! The crate measures the geographic eccentricity of a network (the smallest
//! `k` for which the canonical simulation over the k-hop knowledge graph embeds
//! every link with constant spanning ratio), builds that canonical simulation,
//! routes over it with steepest-gradient and gradient/perimeter navigation, and
//! simulates the distributed protocols that compute the same zones locally.

pub mod campaign;
pub mod canonical;
pub mod distributed;
pub mod eccentricity;
pub mod geometry;
pub mod navigation;
pub mod netgen;
pub mod netgraph;

pub use geometry::{BoundingBox, NodeId, Point2, Segment};
pub use netgraph::{CommGraph, Hops, KnowledgeGraph};
