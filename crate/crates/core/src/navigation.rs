//! Navigation engines over a canonical simulation and the generic routing
//! loop built on top of them.
//!
//! A message position is a point plus the cell it currently lies in; the cell
//! disambiguates which side of a removed boundary (a "wall") the message is
//! on. Motion is piecewise linear: straight toward the target, sliding along
//! walls, or (perimeter mode) following walls with the hole on the right.
//! Wall ends are passable: a message may turn around the free tip of a wall,
//! including a tip lying on the clip window.

use crate::canonical::CanonicalSimulation;
use crate::geometry::{traverse, Point2, Segment};
use crate::netgraph::bfs_distances;
use crate::NodeId;
use std::collections::HashMap;
use std::f64::consts::PI;
use std::fmt::Write as _;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Engine {
    Gradient,
    GradientPerimeter,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Mode {
    Gradient,
    /// Following the wall between `(cell, other)`, `cell` on the left.
    Perimeter {
        wall: (NodeId, NodeId),
    },
}

/// Engine state carried with the message.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NavState {
    pub cell: NodeId,
    /// Distance to the target at the last dead end (perimeter engine).
    pub d_o: Option<f64>,
    pub mode: Mode,
}

impl NavState {
    pub fn at_node(u: NodeId) -> Self {
        NavState {
            cell: u,
            d_o: None,
            mode: Mode::Gradient,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Status {
    Arrived,
    ZoneBoundary,
    Dead,
}

impl Status {
    pub fn name(&self) -> &'static str {
        match self {
            Status::Arrived => "Arrived",
            Status::ZoneBoundary => "ZoneBoundary",
            Status::Dead => "Dead",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NavOutput {
    pub p_next: Point2,
    /// Direction of motion when leaving the zone.
    pub dir: Option<Point2>,
    /// State to hand over; `state.cell` is the cell entered on a zone exit.
    pub state: NavState,
    pub status: Status,
    /// Points visited during this step, ending at `p_next`.
    pub path: Vec<Point2>,
}

#[derive(Debug, thiserror::Error, Clone, PartialEq)]
pub enum NavError {
    #[error("precondition violated: {0}")]
    PreconditionViolated(String),
    #[error("perimeter walk looped without progress near ({}, {})", .0.x, .0.y)]
    PerimeterLoop(Point2),
    #[error("navigation made no progress near ({}, {})", .0.x, .0.y)]
    Stalled(Point2),
}

/// Cells around a point on cell boundaries, counterclockwise, with the
/// boundary rays separating consecutive cells.
struct Star {
    cells: Vec<NodeId>,
    /// `rays[i]` separates `cells[i]` and `cells[i + 1]`.
    rays: Vec<Point2>,
    closed: Vec<bool>,
}

struct Range {
    cells: Vec<NodeId>,
    /// Indices of the bounding gaps (clockwise end, counterclockwise end).
    bounds: Option<(usize, usize)>,
}

impl Star {
    fn m(&self) -> usize {
        self.cells.len()
    }

    fn accessible(&self, c: NodeId) -> Range {
        let m = self.m();
        let i = self
            .cells
            .iter()
            .position(|&x| x == c)
            .expect("cell in star");
        if m == 1 || !self.closed.iter().any(|&b| b) {
            return Range {
                cells: self.cells.clone(),
                bounds: None,
            };
        }
        let mut k = i;
        while !self.closed[k] {
            k = (k + 1) % m;
        }
        let mut j = i;
        while !self.closed[(j + m - 1) % m] {
            j = (j + m - 1) % m;
        }
        let mut cells = Vec::new();
        let mut idx = j;
        loop {
            cells.push(self.cells[idx]);
            if idx == k {
                break;
            }
            idx = (idx + 1) % m;
        }
        Range {
            cells,
            bounds: Some(((j + m - 1) % m, k)),
        }
    }

    /// Cells passed when rotating about the star point from `from` to `to`
    /// without crossing a closed gap (excluding `from`, including `to`).
    fn rotation(&self, from: NodeId, to: NodeId) -> Vec<NodeId> {
        if from == to {
            return Vec::new();
        }
        let range = self.accessible(from);
        let pos = |c: NodeId| {
            range
                .cells
                .iter()
                .position(|&x| x == c)
                .expect("cell in range")
        };
        let (pf, pt) = (pos(from), pos(to));
        let len = range.cells.len();
        let ccw = match range.bounds {
            Some(_) => pt > pf,
            None => (pt + len - pf) % len <= (pf + len - pt) % len,
        };
        let mut out = Vec::new();
        let mut i = pf;
        while i != pt {
            i = if ccw {
                (i + 1) % len
            } else {
                (i + len - 1) % len
            };
            out.push(range.cells[i]);
        }
        out
    }

    /// Wall followed with the accessible side on the left: the clockwise
    /// bound of the range around `c`, as (left cell, right cell, ray).
    fn right_hand_wall(&self, c: NodeId) -> Option<(NodeId, NodeId, Point2)> {
        let m = self.m();
        let (cw, _) = self.accessible(c).bounds?;
        Some((self.cells[(cw + 1) % m], self.cells[cw], self.rays[cw]))
    }
}

const MAX_STEPS_PER_CELL: usize = 64;

/// Pseudo-cell standing for the outside of the clip window.
const OUTSIDE: NodeId = NodeId::MAX;

/// Directions pointing into the window from a point on its boundary, as a
/// counterclockwise angle interval `(start, end)`; `None` inside.
fn window_interval(bbox: &crate::BoundingBox, x: Point2) -> Option<(f64, f64)> {
    let tol = 1e-9 * bbox.diagonal();
    let left = (x.x - bbox.min.x).abs() <= tol;
    let right = (x.x - bbox.max.x).abs() <= tol;
    let bottom = (x.y - bbox.min.y).abs() <= tol;
    let top = (x.y - bbox.max.y).abs() <= tol;
    let h = PI / 2.0;
    match (left, right, bottom, top) {
        (true, _, true, _) => Some((0.0, h)),
        (_, true, true, _) => Some((h, PI)),
        (_, true, _, true) => Some((PI, 3.0 * h)),
        (true, _, _, true) => Some((3.0 * h, 2.0 * PI)),
        (_, _, true, _) => Some((0.0, PI)),
        (_, true, _, _) => Some((h, 3.0 * h)),
        (_, _, _, true) => Some((PI, 2.0 * PI)),
        (true, _, _, _) => Some((-h, h)),
        _ => None,
    }
}

struct Navigator<'a> {
    sim: &'a CanonicalSimulation,
    u: NodeId,
    target: Point2,
    engine: Engine,
    eps: f64,
    path: Vec<Point2>,
}

enum Move {
    Arrived,
    Exit {
        at: Point2,
        dir: Point2,
        state: NavState,
    },
    To {
        p: Point2,
        state: NavState,
    },
    Dead,
}

impl<'a> Navigator<'a> {
    fn star(&self, x: Point2, c: NodeId) -> Star {
        let sub = &self.sim.sub;
        let ci = sub.idx(c);
        let mut idxs = sub.tied_indices(x, ci);
        if !idxs.contains(&ci) {
            idxs.push(ci);
        }
        let window = window_interval(sub.bbox(), x);
        let origin = window.map_or(-PI, |(start, _)| start);
        let mut around: Vec<(f64, NodeId, Point2)> = idxs
            .into_iter()
            .map(|i| {
                let s = sub.pos_at(i);
                let a = (s.y - x.y).atan2(s.x - x.x) - origin;
                (a.rem_euclid(2.0 * PI), sub.id_at(i), s)
            })
            .collect();
        around.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        let m = around.len();
        let mut cells: Vec<NodeId> = around.iter().map(|a| a.1).collect();
        let mut rays = Vec::new();
        let mut closed = Vec::new();
        let inner_gaps = if window.is_some() {
            m - 1
        } else if m > 1 {
            m
        } else {
            0
        };
        for i in 0..inner_gaps {
            let (_, a, pa) = around[i];
            let (_, b, pb) = around[(i + 1) % m];
            let q = pb - pa;
            rays.push(Point2::new(q.y, -q.x).normalized());
            closed.push(self.sim.is_forbidden(a, b));
        }
        if let Some((start, end)) = window {
            cells.push(OUTSIDE);
            rays.push(Point2::new(end.cos(), end.sin()));
            closed.push(true);
            rays.push(Point2::new(start.cos(), start.sin()));
            closed.push(true);
        }
        Star {
            cells,
            rays,
            closed,
        }
    }

    fn entered(&self, star: &Star, x: Point2, dir: Point2) -> NodeId {
        let sub = &self.sim.sub;
        let mut idxs: Vec<usize> = star
            .cells
            .iter()
            .filter(|&&c| c != OUTSIDE)
            .map(|&c| sub.idx(c))
            .collect();
        idxs.sort_unstable_by_key(|&i| sub.id_at(i));
        sub.id_at(traverse::entered_along(sub, &idxs, x, dir))
    }

    fn in_zone(&self, c: NodeId) -> bool {
        self.sim.in_zone(self.u, c)
    }

    /// First cell outside the zone met while rotating from `from` to `to`.
    fn first_out(&self, star: &Star, from: NodeId, to: NodeId) -> Option<NodeId> {
        star.rotation(from, to)
            .into_iter()
            .find(|&c| !self.in_zone(c))
    }

    /// Far end of the boundary piece between `c` and `f` (or the window when
    /// `f` is [`OUTSIDE`]) followed from `x` along `ray`, and its direction.
    fn boundary_run(&self, x: Point2, c: NodeId, f: NodeId, ray: Point2) -> (Point2, Point2) {
        let seg = if f == OUTSIDE {
            let cell = self.sim.sub.cell(c).expect("cell exists");
            let tol = 1e-9 * self.sim.sub.bbox().diagonal();
            cell.edges()
                .filter(|(e, nb)| nb.is_none() && e.closest_point(x).dist(x) <= tol)
                .map(|(e, _)| e)
                .max_by(|e1, e2| {
                    let d1 = (e1.b - e1.a).normalized().dot(ray).abs();
                    let d2 = (e2.b - e2.a).normalized().dot(ray).abs();
                    d1.total_cmp(&d2)
                })
                .unwrap_or(Segment::new(x, x))
        } else {
            self.sim.sub.shared_boundaries()[&(c.min(f), c.max(f))]
        };
        let (far, near) = if (seg.b - x).dot(ray) >= (seg.a - x).dot(ray) {
            (seg.b, seg.a)
        } else {
            (seg.a, seg.b)
        };
        (far, (far - near).normalized())
    }

    /// One gradient decision from `p` in cell `c`.
    fn gradient_move(&self, p: Point2, st: NavState) -> Move {
        let c = st.cell;
        let g = self.target - p;
        if g.norm() <= self.eps {
            return Move::Arrived;
        }
        let gh = g.normalized();
        let star = self.star(p, c);
        let mut e = c;
        if star.m() > 1 {
            e = self.entered(&star, p, gh);
            let range = star.accessible(c);
            if !range.cells.contains(&e) {
                let Some((cw, ccw)) = range.bounds else {
                    return Move::Dead;
                };
                let m = star.m();
                let (dot_cw, dot_ccw) = (star.rays[cw].dot(gh), star.rays[ccw].dot(gh));
                if dot_cw.max(dot_ccw) <= 1e-9 {
                    return Move::Dead;
                }
                let (s, f) = if dot_cw >= dot_ccw {
                    (star.cells[(cw + 1) % m], star.cells[cw])
                } else {
                    (star.cells[ccw], star.cells[(ccw + 1) % m])
                };
                let ray = if dot_cw >= dot_ccw {
                    star.rays[cw]
                } else {
                    star.rays[ccw]
                };
                if let Some(w) = self.first_out(&star, c, s) {
                    return Move::Exit {
                        at: p,
                        dir: ray,
                        state: NavState { cell: w, ..st },
                    };
                }
                return self.slide(p, st, s, f, ray);
            }
        }
        if let Some(w) = self.first_out(&star, c, e) {
            return Move::Exit {
                at: p,
                dir: gh,
                state: NavState { cell: w, ..st },
            };
        }
        self.straight(p, NavState { cell: e, ..st }, gh)
    }

    fn slide(&self, p: Point2, st: NavState, s: NodeId, f: NodeId, ray: Point2) -> Move {
        let next = NavState { cell: s, ..st };
        let (far, dir) = self.boundary_run(p, s, f, ray);
        let len = (far - p).dot(dir);
        let tf = (self.target - p).dot(dir);
        let q = if tf < len - self.eps {
            p + dir * tf
        } else {
            far
        };
        if q.dist(p) <= self.eps {
            return Move::Dead;
        }
        Move::To { p: q, state: next }
    }

    /// Straight motion toward the target starting in cell `st.cell`.
    fn straight(&self, p: Point2, st: NavState, gh: Point2) -> Move {
        let sub = &self.sim.sub;
        let seg = Segment::new(p, self.target);
        let crossings = match traverse::walk(sub, &seg, Some(sub.idx(st.cell))) {
            Ok(c) => c,
            Err(_) => return Move::Dead,
        };
        let mut cur = st.cell;
        let mut i = 1;
        while i < crossings.len() {
            let t = crossings[i].t;
            while i + 1 < crossings.len() && crossings[i + 1].t == t {
                i += 1;
            }
            let next = crossings[i].owner;
            i += 1;
            if next == cur {
                continue;
            }
            let y = seg.at(t);
            let star = self.star(y, cur);
            let enterable = star.m() == 1 || star.accessible(cur).cells.contains(&next);
            if !enterable {
                return Move::To {
                    p: y,
                    state: NavState { cell: cur, ..st },
                };
            }
            if let Some(w) = self.first_out(&star, cur, next) {
                return Move::Exit {
                    at: y,
                    dir: gh,
                    state: NavState { cell: w, ..st },
                };
            }
            cur = next;
        }
        Move::Arrived
    }

    /// Whether the gradient can leave `p` (in cell `c`) without dying.
    fn can_descend(&self, p: Point2, c: NodeId) -> bool {
        let g = self.target - p;
        if g.norm() <= self.eps {
            return true;
        }
        let gh = g.normalized();
        let star = self.star(p, c);
        if star.m() == 1 {
            return true;
        }
        let range = star.accessible(c);
        if range.cells.contains(&self.entered(&star, p, gh)) {
            return true;
        }
        match range.bounds {
            Some((cw, ccw)) => star.rays[cw].dot(gh).max(star.rays[ccw].dot(gh)) > 1e-9,
            None => true,
        }
    }

    /// One perimeter decision: walk the current wall to its end, unless a
    /// point no farther than `d_o` from which the gradient descends comes first.
    fn perimeter_move(
        &self,
        p: Point2,
        st: NavState,
        visits: &mut HashMap<(NodeId, NodeId, u8), u32>,
    ) -> Result<Move, NavError> {
        let Mode::Perimeter { wall: (c, f) } = st.mode else {
            unreachable!()
        };
        let d_o = st.d_o.expect("perimeter mode records d_o");
        let resume =
            |q: Point2| q.dist(self.target) <= d_o * (1.0 + 1e-12) && self.can_descend(q, c);
        if st.cell != c {
            // finish a rotation about `p` begun by the previous node
            let star = self.star(p, st.cell);
            if let Some(w) = self.first_out(&star, st.cell, c) {
                return Ok(Move::Exit {
                    at: p,
                    dir: self.target - p,
                    state: NavState { cell: w, ..st },
                });
            }
            return Ok(Move::To {
                p,
                state: NavState { cell: c, ..st },
            });
        }
        let gradient = NavState {
            mode: Mode::Gradient,
            ..st
        };
        if resume(p) {
            return Ok(Move::To { p, state: gradient });
        }
        let ray = if f == OUTSIDE {
            self.star(p, c)
                .right_hand_wall(c)
                .map_or(Point2::new(0., 0.), |w| w.2)
        } else {
            let seg = self.sim.sub.shared_boundaries()[&(c.min(f), c.max(f))];
            let site = self.sim.position(c);
            if (seg.b - seg.a).cross(site - seg.a) > 0.0 {
                seg.b - seg.a
            } else {
                seg.a - seg.b
            }
        };
        let (b, dir) = self.boundary_run(p, c, f, ray.normalized());
        let len = (b - p).dot(dir);
        let tf = (self.target - p).dot(dir);
        if tf > self.eps && tf < len - self.eps {
            let foot = p + dir * tf;
            if resume(foot) {
                return Ok(Move::To {
                    p: foot,
                    state: gradient,
                });
            }
        }
        if resume(b) {
            return Ok(Move::To {
                p: b,
                state: gradient,
            });
        }
        let star = self.star(b, c);
        let Some((c2, f2, ray)) = star.right_hand_wall(c) else {
            return Ok(Move::To {
                p: b,
                state: gradient,
            });
        };
        // a cell's window boundary may span several sides of the window
        let side = if f2 == OUTSIDE {
            (ray.y.atan2(ray.x).rem_euclid(2.0 * PI) / (PI / 2.0)).round() as u8 % 4
        } else {
            4
        };
        let count = visits.entry((c2, f2, side)).or_insert(0);
        *count += 1;
        if *count > 2 {
            return Err(NavError::PerimeterLoop(b));
        }
        let next = NavState {
            cell: c2,
            mode: Mode::Perimeter { wall: (c2, f2) },
            ..st
        };
        if let Some(w) = self.first_out(&star, c, c2) {
            return Ok(Move::Exit {
                at: b,
                dir: ray,
                state: NavState { cell: w, ..next },
            });
        }
        Ok(Move::To { p: b, state: next })
    }

    /// Enters perimeter mode at a dead end.
    fn start_perimeter(&self, p: Point2, st: NavState) -> Move {
        let star = self.star(p, st.cell);
        let Some((c2, f2, ray)) = star.right_hand_wall(st.cell) else {
            return Move::Dead;
        };
        let next = NavState {
            cell: c2,
            d_o: Some(p.dist(self.target)),
            mode: Mode::Perimeter { wall: (c2, f2) },
        };
        if let Some(w) = self.first_out(&star, st.cell, c2) {
            return Move::Exit {
                at: p,
                dir: ray,
                state: NavState { cell: w, ..next },
            };
        }
        Move::To { p, state: next }
    }

    fn run(&mut self, mut p: Point2, mut st: NavState) -> Result<NavOutput, NavError> {
        if !self.in_zone(st.cell) {
            return Err(NavError::PreconditionViolated(format!(
                "cell {} is outside the zone of {}",
                st.cell, self.u
            )));
        }
        let mut visits = HashMap::new();
        let limit = MAX_STEPS_PER_CELL * (self.sim.n() + 4);
        for _ in 0..limit {
            let mv = match st.mode {
                Mode::Gradient => match self.gradient_move(p, st) {
                    Move::Dead if self.engine == Engine::GradientPerimeter => {
                        visits.clear();
                        self.start_perimeter(p, st)
                    }
                    mv => mv,
                },
                Mode::Perimeter { .. } => self.perimeter_move(p, st, &mut visits)?,
            };
            match mv {
                Move::Arrived => return Ok(self.output(self.target, None, st, Status::Arrived)),
                Move::Dead => return Ok(self.output(p, None, st, Status::Dead)),
                Move::Exit { at, dir, state } => {
                    return Ok(self.output(at, Some(dir), state, Status::ZoneBoundary))
                }
                Move::To { p: q, state } => {
                    if q != p {
                        self.path.push(q);
                    }
                    p = q;
                    st = state;
                }
            }
        }
        Err(NavError::Stalled(p))
    }

    fn output(
        &mut self,
        p: Point2,
        dir: Option<Point2>,
        state: NavState,
        status: Status,
    ) -> NavOutput {
        if self.path.last() != Some(&p) {
            self.path.push(p);
        }
        NavOutput {
            p_next: p,
            dir,
            state,
            status,
            path: std::mem::take(&mut self.path),
        }
    }
}

/// Runs `engine` for node `u` from `p` (in cell `state.cell`) toward `target`.
pub fn step(
    sim: &CanonicalSimulation,
    engine: Engine,
    u: NodeId,
    p: Point2,
    target: Point2,
    state: NavState,
) -> Result<NavOutput, NavError> {
    let mut nav = Navigator {
        sim,
        u,
        target,
        engine,
        eps: 1e-12 * sim.sub.bbox().diagonal(),
        path: Vec::new(),
    };
    nav.run(p, state)
}

fn state_at(sim: &CanonicalSimulation, u: NodeId, p: Point2) -> Result<NavState, NavError> {
    let owners = sim.sub.owners_at(p);
    owners
        .into_iter()
        .find(|&c| sim.in_zone(u, c))
        .map(|c| NavState {
            cell: c,
            d_o: None,
            mode: Mode::Gradient,
        })
        .ok_or_else(|| {
            NavError::PreconditionViolated(format!("({}, {}) is outside the zone of {u}", p.x, p.y))
        })
}

/// Steepest-gradient engine: straight lines, deflected along walls, failing
/// at local minima of the distance on the boundary of the simulated space.
pub fn gradient_step(
    sim: &CanonicalSimulation,
    u: NodeId,
    p: Point2,
    target: Point2,
) -> Result<NavOutput, NavError> {
    step(sim, Engine::Gradient, u, p, target, state_at(sim, u, p)?)
}

/// Gradient/perimeter engine; `d_o` resumes an interrupted perimeter walk
/// only through the full [`step`] API, which carries the followed wall.
pub fn gradient_perimeter_step(
    sim: &CanonicalSimulation,
    u: NodeId,
    p: Point2,
    target: Point2,
) -> Result<NavOutput, NavError> {
    step(
        sim,
        Engine::GradientPerimeter,
        u,
        p,
        target,
        state_at(sim, u, p)?,
    )
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Outcome {
    Delivered,
    DeadEnd(Point2),
    HopCapExceeded,
}

#[derive(Debug, Clone, PartialEq)]
pub struct HopRecord {
    pub node: NodeId,
    pub at: Point2,
    pub via: Status,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RouteTrace {
    /// Message holders, consecutive ones being H-neighbors.
    pub hops: Vec<NodeId>,
    pub records: Vec<HopRecord>,
    pub trajectory: Vec<Point2>,
    pub handovers: usize,
    pub outcome: Outcome,
    pub hop_count: usize,
    /// `hop_count` over the hop distance in G (1 when source = destination).
    pub stretch: f64,
}

impl RouteTrace {
    pub fn delivered(&self) -> bool {
        self.outcome == Outcome::Delivered
    }

    /// One `hop <node> at (<x>,<y>) via <status>` line per record.
    pub fn dump(&self) -> String {
        let mut s = String::new();
        for r in &self.records {
            writeln!(
                s,
                "hop {} at ({},{}) via {}",
                r.node,
                r.at.x,
                r.at.y,
                r.via.name()
            )
            .unwrap();
        }
        s
    }
}

pub fn route(
    sim: &CanonicalSimulation,
    engine: Engine,
    source: NodeId,
    dest: NodeId,
) -> RouteTrace {
    route_with_cap(sim, engine, source, dest, 10 * sim.n())
}

/// Generic geographic routing: run the engine in the current holder's zone,
/// geocast on arrival, hand over on zone exit.
pub fn route_with_cap(
    sim: &CanonicalSimulation,
    engine: Engine,
    source: NodeId,
    dest: NodeId,
    hop_cap: usize,
) -> RouteTrace {
    let target = sim.position(dest);
    let mut u = source;
    let mut p = sim.position(source);
    let mut st = NavState::at_node(source);
    let mut hops = vec![source];
    let mut records = Vec::new();
    let mut trajectory = vec![p];
    let mut handovers = 0;
    let outcome = loop {
        let out = match step(sim, engine, u, p, target, st) {
            Ok(o) => o,
            Err(NavError::PerimeterLoop(at)) | Err(NavError::Stalled(at)) => {
                break Outcome::DeadEnd(at)
            }
            Err(NavError::PreconditionViolated(_)) => break Outcome::DeadEnd(p),
        };
        for &q in &out.path {
            if trajectory.last() != Some(&q) {
                trajectory.push(q);
            }
        }
        records.push(HopRecord {
            node: u,
            at: out.p_next,
            via: out.status,
        });
        match out.status {
            Status::Arrived => {
                match sim.geocast_target(u, target) {
                    Ok(v) if v != u => {
                        hops.push(v);
                        records.push(HopRecord {
                            node: v,
                            at: target,
                            via: Status::Arrived,
                        });
                    }
                    Ok(_) => {}
                    Err(_) => break Outcome::DeadEnd(target),
                }
                break Outcome::Delivered;
            }
            Status::Dead => break Outcome::DeadEnd(out.p_next),
            Status::ZoneBoundary => {
                let Ok(v) = sim.handover_to_cell(u, out.state.cell) else {
                    break Outcome::DeadEnd(out.p_next);
                };
                hops.push(v);
                handovers += 1;
                if hops.len() - 1 > hop_cap {
                    break Outcome::HopCapExceeded;
                }
                u = v;
                p = out.p_next;
                st = out.state;
            }
        }
    };
    let hop_count = hops.len() - 1;
    let d = bfs_distances(&sim.net.graph, source)[dest];
    let stretch = if d == 0 {
        1.0
    } else {
        hop_count as f64 / d as f64
    };
    RouteTrace {
        hops,
        records,
        trajectory,
        handovers,
        outcome,
        hop_count,
        stretch,
    }
}
