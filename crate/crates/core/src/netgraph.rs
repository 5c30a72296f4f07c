//! Undirected communication graphs, hop distances and k-hop power graphs.

use crate::geometry::NodeId;
use std::collections::VecDeque;

/// Hop distance; `UNREACHABLE` stands for infinity.
pub type Hops = u32;
pub const UNREACHABLE: Hops = Hops::MAX;

/// Entries of G^k materialized before falling back to on-demand BFS.
pub const DEFAULT_POWER_BUDGET: usize = 64 << 20;

#[derive(Debug, thiserror::Error, Clone, PartialEq, Eq)]
pub enum GraphError {
    #[error("graph is disconnected")]
    Disconnected,
    #[error("self-loop at node {0}")]
    SelfLoop(NodeId),
    #[error("edge ({0}, {1}) references a node outside [0, n)")]
    NodeOutOfRange(NodeId, NodeId),
}

/// Undirected simple graph over nodes `0..n`, with sorted adjacency lists.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct CommGraph {
    adj: Vec<Vec<NodeId>>,
}

impl CommGraph {
    pub fn new(n: usize) -> Self {
        CommGraph {
            adj: vec![Vec::new(); n],
        }
    }

    pub fn from_edges(
        n: usize,
        edges: impl IntoIterator<Item = (NodeId, NodeId)>,
    ) -> Result<Self, GraphError> {
        let mut g = CommGraph::new(n);
        for (u, v) in edges {
            if u >= n || v >= n {
                return Err(GraphError::NodeOutOfRange(u, v));
            }
            if u == v {
                return Err(GraphError::SelfLoop(u));
            }
            g.adj[u].push(v);
            g.adj[v].push(u);
        }
        for nb in g.adj.iter_mut() {
            nb.sort_unstable();
            nb.dedup();
        }
        Ok(g)
    }

    pub fn complete(n: usize) -> Self {
        let edges = (0..n).flat_map(|u| (u + 1..n).map(move |v| (u, v)));
        CommGraph::from_edges(n, edges).expect("valid complete graph")
    }

    pub fn path(n: usize) -> Self {
        CommGraph::from_edges(n, (1..n).map(|v| (v - 1, v))).expect("valid path graph")
    }

    pub fn n(&self) -> usize {
        self.adj.len()
    }

    pub fn neighbors(&self, u: NodeId) -> &[NodeId] {
        &self.adj[u]
    }

    pub fn degree(&self, u: NodeId) -> usize {
        self.adj[u].len()
    }

    pub fn has_edge(&self, u: NodeId, v: NodeId) -> bool {
        self.adj[u].binary_search(&v).is_ok()
    }

    /// Edges as `(u, v)` with `u < v`, in lexicographic order.
    pub fn edges(&self) -> impl Iterator<Item = (NodeId, NodeId)> + '_ {
        self.adj
            .iter()
            .enumerate()
            .flat_map(|(u, nb)| nb.iter().filter(move |&&v| v > u).map(move |&v| (u, v)))
    }

    pub fn edge_count(&self) -> usize {
        self.adj.iter().map(Vec::len).sum::<usize>() / 2
    }

    /// Keeps only the edges accepted by `keep`.
    pub fn filter_edges(&self, mut keep: impl FnMut(NodeId, NodeId) -> bool) -> CommGraph {
        let mut g = CommGraph::new(self.n());
        for (u, v) in self.edges() {
            if keep(u, v) {
                g.adj[u].push(v);
                g.adj[v].push(u);
            }
        }
        for nb in g.adj.iter_mut() {
            nb.sort_unstable();
        }
        g
    }

    pub fn is_connected(&self) -> bool {
        self.n() <= 1 || bfs_distances(self, 0).iter().all(|&d| d != UNREACHABLE)
    }
}

/// Exact unweighted shortest-path distances from `source`.
pub fn bfs_distances(g: &CommGraph, source: NodeId) -> Vec<Hops> {
    bfs_bounded(g, source, UNREACHABLE)
}

/// BFS distances, leaving nodes farther than `limit` at `UNREACHABLE`.
pub fn bfs_bounded(g: &CommGraph, source: NodeId, limit: Hops) -> Vec<Hops> {
    let mut dist = vec![UNREACHABLE; g.n()];
    let mut queue = VecDeque::new();
    dist[source] = 0;
    queue.push_back(source);
    while let Some(u) = queue.pop_front() {
        let du = dist[u];
        if du >= limit {
            continue;
        }
        for &v in g.neighbors(u) {
            if dist[v] == UNREACHABLE {
                dist[v] = du + 1;
                queue.push_back(v);
            }
        }
    }
    dist
}

/// Nodes within `k` hops of `source` (excluding it), in id order.
pub fn k_hop_neighbors(g: &CommGraph, source: NodeId, k: Hops) -> Vec<NodeId> {
    bfs_bounded(g, source, k)
        .iter()
        .enumerate()
        .filter(|&(v, &d)| v != source && d != UNREACHABLE && d <= k)
        .map(|(v, _)| v)
        .collect()
}

pub fn diameter(g: &CommGraph) -> Result<Hops, GraphError> {
    DistanceMatrix::new(g).diameter()
}

/// Mean over nodes of the number of other nodes within `i` hops.
pub fn avg_neighborhood_size(g: &CommGraph, i: Hops) -> f64 {
    if g.n() == 0 {
        return 0.0;
    }
    let total: usize = (0..g.n()).map(|u| k_hop_neighbors(g, u, i).len()).sum();
    total as f64 / g.n() as f64
}

/// All-pairs hop distances.
#[derive(Debug, Clone)]
pub struct DistanceMatrix {
    n: usize,
    data: Vec<Hops>,
}

impl DistanceMatrix {
    pub fn new(g: &CommGraph) -> Self {
        let n = g.n();
        let mut data = Vec::with_capacity(n * n);
        for u in 0..n {
            data.extend(bfs_distances(g, u));
        }
        DistanceMatrix { n, data }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn get(&self, u: NodeId, v: NodeId) -> Hops {
        self.data[u * self.n + v]
    }

    pub fn row(&self, u: NodeId) -> &[Hops] {
        &self.data[u * self.n..(u + 1) * self.n]
    }

    pub fn is_connected(&self) -> bool {
        !self.data.contains(&UNREACHABLE)
    }

    pub fn diameter(&self) -> Result<Hops, GraphError> {
        if !self.is_connected() {
            return Err(GraphError::Disconnected);
        }
        Ok(self.data.iter().copied().max().unwrap_or(0))
    }

    pub fn avg_neighborhood_size(&self, i: Hops) -> f64 {
        if self.n == 0 {
            return 0.0;
        }
        let count = self.data.iter().filter(|&&d| d != 0 && d <= i).count();
        count as f64 / self.n as f64
    }
}

#[derive(Debug, Clone)]
enum PowerRepr {
    Explicit(Vec<Vec<NodeId>>),
    OnDemand(CommGraph),
}

/// The k-hop power graph G^k: `uv` is an edge iff `1 <= dist_G(u, v) <= k`.
#[derive(Debug, Clone)]
pub struct KnowledgeGraph {
    k: Hops,
    n: usize,
    repr: PowerRepr,
}

pub fn power_graph(g: &CommGraph, k: Hops) -> KnowledgeGraph {
    power_graph_with_budget(g, k, DEFAULT_POWER_BUDGET)
}

/// Like [`power_graph`], materializing adjacency only while the total number
/// of adjacency entries stays within `budget`.
pub fn power_graph_with_budget(g: &CommGraph, k: Hops, budget: usize) -> KnowledgeGraph {
    assert!(k >= 1, "power graph needs k >= 1");
    let mut adj = Vec::with_capacity(g.n());
    let mut used = 0usize;
    for u in 0..g.n() {
        let nb = k_hop_neighbors(g, u, k);
        used += nb.len();
        if used > budget {
            return KnowledgeGraph {
                k,
                n: g.n(),
                repr: PowerRepr::OnDemand(g.clone()),
            };
        }
        adj.push(nb);
    }
    KnowledgeGraph {
        k,
        n: g.n(),
        repr: PowerRepr::Explicit(adj),
    }
}

impl KnowledgeGraph {
    pub fn k(&self) -> Hops {
        self.k
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn is_materialized(&self) -> bool {
        matches!(self.repr, PowerRepr::Explicit(_))
    }

    pub fn neighbors(&self, u: NodeId) -> Vec<NodeId> {
        match &self.repr {
            PowerRepr::Explicit(adj) => adj[u].clone(),
            PowerRepr::OnDemand(g) => k_hop_neighbors(g, u, self.k),
        }
    }

    pub fn has_edge(&self, u: NodeId, v: NodeId) -> bool {
        if u == v {
            return false;
        }
        match &self.repr {
            PowerRepr::Explicit(adj) => adj[u].binary_search(&v).is_ok(),
            PowerRepr::OnDemand(g) => {
                let d = bfs_bounded(g, u, self.k)[v];
                d != UNREACHABLE && d <= self.k
            }
        }
    }

    pub fn edges(&self) -> Vec<(NodeId, NodeId)> {
        (0..self.n)
            .flat_map(|u| {
                self.neighbors(u)
                    .into_iter()
                    .filter(move |&v| v > u)
                    .map(move |v| (u, v))
            })
            .collect()
    }

    pub fn edge_count(&self) -> usize {
        (0..self.n).map(|u| self.neighbors(u).len()).sum::<usize>() / 2
    }
}
