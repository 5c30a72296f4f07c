//! Seeded generation of localized networks: uniform scatter in an `L x 4L`
//! rectangle, probabilistic link models, Gaussian localization error,
//! apparent-length link pruning and rejection of disconnected samples.

pub mod format;

pub use format::{load, parse, save, write_network, ParseError};

use crate::geometry::{mean_nearest_neighbor_spacing, BoundingBox, Point2};
use crate::netgraph::CommGraph;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use std::collections::HashSet;
use std::f64::consts::PI;

#[derive(Debug, thiserror::Error, Clone, PartialEq)]
pub enum GenError {
    #[error("no connected network after {0} attempts")]
    ConnectivityExhausted(u32),
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
}

/// Link probability as a function of distance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "lowercase")]
pub enum LinkModel {
    /// Constant probability for every pair.
    Random { p: f64 },
    /// Certain below `r`, impossible beyond `big_r`, `1/d^2 - 1/R^2` in between.
    Sinr { r: f64, big_r: f64 },
    /// `exp(-d / r_avg)`.
    Exponential { r_avg: f64 },
}

impl LinkModel {
    pub fn name(&self) -> &'static str {
        match self {
            LinkModel::Random { .. } => "random",
            LinkModel::Sinr { .. } => "sinr",
            LinkModel::Exponential { .. } => "exponential",
        }
    }

    /// Model parameters in a fixed order (p | r, R | r_avg).
    pub fn parameters(&self) -> Vec<f64> {
        match *self {
            LinkModel::Random { p } => vec![p],
            LinkModel::Sinr { r, big_r } => vec![r, big_r],
            LinkModel::Exponential { r_avg } => vec![r_avg],
        }
    }

    pub fn validate(&self) -> Result<(), GenError> {
        let bad = |m: &str| Err(GenError::InvalidParams(m.to_string()));
        match *self {
            LinkModel::Random { p } if !(p > 0.0 && p <= 1.0) => {
                bad("random model needs 0 < p <= 1")
            }
            LinkModel::Sinr { r, big_r } if !(r > 0.0 && r < big_r && big_r.is_finite()) => {
                bad("sinr model needs 0 < r < R")
            }
            LinkModel::Exponential { r_avg } if !(r_avg > 0.0 && r_avg.is_finite()) => {
                bad("exponential model needs r_avg > 0")
            }
            _ => Ok(()),
        }
    }

    /// Same model with every range multiplied by `s`.
    pub fn scaled(&self, s: f64) -> LinkModel {
        match *self {
            LinkModel::Random { p } => LinkModel::Random { p },
            LinkModel::Sinr { r, big_r } => LinkModel::Sinr {
                r: r * s,
                big_r: big_r * s,
            },
            LinkModel::Exponential { r_avg } => LinkModel::Exponential { r_avg: r_avg * s },
        }
    }
}

pub fn link_probability(model: &LinkModel, d: f64) -> f64 {
    match *model {
        LinkModel::Random { p } => p,
        LinkModel::Sinr { r, big_r } => {
            if d <= r {
                1.0
            } else if d >= big_r {
                0.0
            } else {
                let v_min = 1.0 / (big_r * big_r);
                ((1.0 / (d * d) - v_min) / (1.0 / (r * r) - v_min)).clamp(0.0, 1.0)
            }
        }
        LinkModel::Exponential { r_avg } => (-d / r_avg).exp(),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenParams {
    /// Rectangle scale: nodes are scattered in `[0, 4L] x [0, L]`.
    pub l: f64,
    pub n: usize,
    pub model: LinkModel,
    pub sigma_err: f64,
    pub max_apparent_range: Option<f64>,
    pub max_attempts: u32,
}

pub const DEFAULT_MAX_ATTEMPTS: u32 = 1000;

impl GenParams {
    /// Defaults: `4L^2` nodes, no localization error, no pruning.
    pub fn new(l: f64, model: LinkModel) -> Self {
        GenParams {
            l,
            n: (4.0 * l * l).round() as usize,
            model,
            sigma_err: 0.0,
            max_apparent_range: None,
            max_attempts: DEFAULT_MAX_ATTEMPTS,
        }
    }

    pub fn with_n(mut self, n: usize) -> Self {
        self.n = n;
        self
    }

    pub fn with_sigma(mut self, sigma_err: f64) -> Self {
        self.sigma_err = sigma_err;
        self
    }

    pub fn with_max_range(mut self, range: Option<f64>) -> Self {
        self.max_apparent_range = range;
        self
    }

    pub fn with_max_attempts(mut self, attempts: u32) -> Self {
        self.max_attempts = attempts;
        self
    }

    pub fn validate(&self) -> Result<(), GenError> {
        let bad = |m: &str| Err(GenError::InvalidParams(m.to_string()));
        if !(self.l > 0.0 && self.l.is_finite()) {
            return bad("L must be positive");
        }
        if self.n == 0 {
            return bad("n must be positive");
        }
        if !(self.sigma_err >= 0.0 && self.sigma_err.is_finite()) {
            return bad("sigma_err must be nonnegative");
        }
        if let Some(r) = self.max_apparent_range {
            if !(r > 0.0) {
                return bad("max apparent range must be positive");
            }
        }
        if self.max_attempts == 0 {
            return bad("max_attempts must be positive");
        }
        self.model.validate()
    }

    /// Deployment rectangle.
    pub fn rect(&self) -> BoundingBox {
        BoundingBox::new(Point2::new(0.0, 0.0), Point2::new(4.0 * self.l, self.l))
    }
}

/// Node positions (true and as localized) plus the communication graph.
#[derive(Debug, Clone, PartialEq)]
pub struct LocalizedNetwork {
    pub true_positions: Vec<Point2>,
    pub apparent_positions: Vec<Point2>,
    pub graph: CommGraph,
    pub params: Option<GenParams>,
    pub seed: u64,
    /// Disconnected samples rejected before this one was accepted.
    pub discarded: u32,
    /// Explicit clip window; derived from the positions when absent.
    pub bbox: Option<BoundingBox>,
}

impl LocalizedNetwork {
    /// A hand-built network whose apparent positions equal the true ones.
    pub fn from_positions(positions: Vec<Point2>, graph: CommGraph) -> Self {
        assert_eq!(positions.len(), graph.n());
        LocalizedNetwork {
            apparent_positions: positions.clone(),
            true_positions: positions,
            graph,
            params: None,
            seed: 0,
            discarded: 0,
            bbox: None,
        }
    }

    pub fn with_bbox(mut self, bbox: BoundingBox) -> Self {
        self.bbox = Some(bbox);
        self
    }

    pub fn n(&self) -> usize {
        self.graph.n()
    }

    /// Clip window: the explicit box, or the deployment rectangle and every
    /// apparent position inflated by twice the mean nearest-neighbor spacing.
    pub fn bounding_box(&self) -> BoundingBox {
        if let Some(b) = self.bbox {
            return b;
        }
        let margin = 2.0 * mean_nearest_neighbor_spacing(&self.apparent_positions);
        let mut pts = self.apparent_positions.clone();
        if let Some(p) = &self.params {
            pts.extend(p.rect().corners());
        }
        BoundingBox::around(&pts, margin)
    }

    /// Apparent positions keyed by node id.
    pub fn sites(&self) -> Vec<(usize, Point2)> {
        self.apparent_positions
            .iter()
            .copied()
            .enumerate()
            .collect()
    }
}

#[derive(Clone, Copy)]
enum Purpose {
    Scatter = 1,
    Links = 2,
    Error = 3,
}

/// Independent generator for one `(seed, attempt, purpose)` triple.
fn substream(seed: u64, attempt: u64, purpose: Purpose) -> ChaCha8Rng {
    let mut key = [0u8; 32];
    key[..8].copy_from_slice(&seed.to_le_bytes());
    key[8..16].copy_from_slice(&attempt.to_le_bytes());
    key[16..22].copy_from_slice(b"geoecc");
    let mut rng = ChaCha8Rng::from_seed(key);
    rng.set_stream(purpose as u64);
    rng
}

fn scatter(n: usize, rect: &BoundingBox, rng: &mut impl Rng) -> Vec<Point2> {
    let mut seen = HashSet::with_capacity(n);
    let mut out = Vec::with_capacity(n);
    while out.len() < n {
        let p = Point2::new(
            rng.random_range(rect.min.x..rect.max.x),
            rng.random_range(rect.min.y..rect.max.y),
        );
        if seen.insert((p.x.to_bits(), p.y.to_bits())) {
            out.push(p);
        }
    }
    out
}

fn sample_links(positions: &[Point2], model: &LinkModel, rng: &mut impl Rng) -> CommGraph {
    let n = positions.len();
    let mut edges = Vec::new();
    for u in 0..n {
        for v in u + 1..n {
            let p = link_probability(model, positions[u].dist(positions[v]));
            let linked = if p >= 1.0 {
                true
            } else if p <= 0.0 {
                false
            } else {
                rng.random::<f64>() < p
            };
            if linked {
                edges.push((u, v));
            }
        }
    }
    CommGraph::from_edges(n, edges).expect("generated edges are valid")
}

fn displace(positions: &[Point2], sigma_err: f64, rng: &mut impl Rng) -> Vec<Point2> {
    if sigma_err == 0.0 {
        return positions.to_vec();
    }
    let normal = Normal::new(0.0, sigma_err).expect("sigma is finite and positive");
    let mut seen = HashSet::with_capacity(positions.len());
    positions
        .iter()
        .map(|&p| loop {
            let theta = rng.random_range(0.0..PI);
            let radius = normal.sample(rng);
            let q = Point2::new(p.x + radius * theta.cos(), p.y + radius * theta.sin());
            if seen.insert((q.x.to_bits(), q.y.to_bits())) {
                break q;
            }
        })
        .collect()
}

/// Moves each position by a signed Gaussian radius (deviation `sigma_err`)
/// along a direction drawn uniformly in `[0, pi)`.
pub fn inject_error(positions: &[Point2], sigma_err: f64, seed: u64) -> Vec<Point2> {
    displace(
        positions,
        sigma_err,
        &mut substream(seed, 0, Purpose::Error),
    )
}

/// Drops every edge whose apparent length exceeds `max_apparent_range`.
/// The result may be disconnected.
pub fn remove_long_links(net: &LocalizedNetwork, max_apparent_range: f64) -> LocalizedNetwork {
    let pos = &net.apparent_positions;
    let graph = net
        .graph
        .filter_edges(|u, v| pos[u].dist(pos[v]) <= max_apparent_range);
    LocalizedNetwork {
        graph,
        ..net.clone()
    }
}

/// One sample without the connectivity check.
pub fn sample(params: &GenParams, seed: u64, attempt: u32) -> LocalizedNetwork {
    let attempt = attempt as u64;
    let rect = params.rect();
    let true_positions = scatter(
        params.n,
        &rect,
        &mut substream(seed, attempt, Purpose::Scatter),
    );
    let graph = sample_links(
        &true_positions,
        &params.model,
        &mut substream(seed, attempt, Purpose::Links),
    );
    let apparent_positions = displace(
        &true_positions,
        params.sigma_err,
        &mut substream(seed, attempt, Purpose::Error),
    );
    let mut net = LocalizedNetwork {
        true_positions,
        apparent_positions,
        graph,
        params: Some(params.clone()),
        seed,
        discarded: attempt as u32,
        bbox: None,
    };
    if let Some(r) = params.max_apparent_range {
        net = remove_long_links(&net, r);
    }
    net
}

/// Draws samples until one is connected, up to `max_attempts`.
pub fn generate(params: &GenParams, seed: u64) -> Result<LocalizedNetwork, GenError> {
    params.validate()?;
    for attempt in 0..params.max_attempts {
        let net = sample(params, seed, attempt);
        if net.graph.is_connected() {
            return Ok(net);
        }
    }
    Err(GenError::ConnectivityExhausted(params.max_attempts))
}
