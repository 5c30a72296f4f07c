//! Line-oriented network file format:
//!
//! ```text
//! geoecc-net v1
//! params L=4 n=64 model=sinr r=1.2 R=1.8 sigma_err=0 max_range=none max_attempts=1000 seed=7 discarded=0
//! box <min_x> <min_y> <max_x> <max_y>        (optional)
//! node <id> <true_x> <true_y> <apparent_x> <apparent_y>
//! edge <u> <v>
//! ```
//!
//! `params none seed=.. discarded=..` marks a hand-built network. Floats are
//! written in shortest round-trip form; blank lines and `#` comments are ignored.

use super::{GenParams, LinkModel, LocalizedNetwork};
use crate::geometry::{BoundingBox, Point2};
use crate::netgraph::CommGraph;
use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::Path;

pub const HEADER: &str = "geoecc-net v1";

#[derive(Debug, thiserror::Error)]
pub enum ParseError {
    #[error("line {line}: {msg}")]
    Syntax { line: usize, msg: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

fn syntax(line: usize, msg: impl Into<String>) -> ParseError {
    ParseError::Syntax {
        line,
        msg: msg.into(),
    }
}

pub fn write_network(net: &LocalizedNetwork) -> String {
    let mut s = String::new();
    writeln!(s, "{HEADER}").unwrap();
    s.push_str("params");
    match &net.params {
        Some(p) => {
            write!(s, " L={} n={} model={}", p.l, p.n, p.model.name()).unwrap();
            match p.model {
                LinkModel::Random { p } => write!(s, " p={p}").unwrap(),
                LinkModel::Sinr { r, big_r } => write!(s, " r={r} R={big_r}").unwrap(),
                LinkModel::Exponential { r_avg } => write!(s, " r_avg={r_avg}").unwrap(),
            }
            write!(s, " sigma_err={}", p.sigma_err).unwrap();
            match p.max_apparent_range {
                Some(r) => write!(s, " max_range={r}").unwrap(),
                None => s.push_str(" max_range=none"),
            }
            write!(s, " max_attempts={}", p.max_attempts).unwrap();
        }
        None => s.push_str(" none"),
    }
    writeln!(s, " seed={} discarded={}", net.seed, net.discarded).unwrap();
    if let Some(b) = net.bbox {
        writeln!(s, "box {} {} {} {}", b.min.x, b.min.y, b.max.x, b.max.y).unwrap();
    }
    for (i, (t, a)) in net
        .true_positions
        .iter()
        .zip(&net.apparent_positions)
        .enumerate()
    {
        writeln!(s, "node {i} {} {} {} {}", t.x, t.y, a.x, a.y).unwrap();
    }
    for (u, v) in net.graph.edges() {
        writeln!(s, "edge {u} {v}").unwrap();
    }
    s
}

pub fn save(net: &LocalizedNetwork, path: impl AsRef<Path>) -> std::io::Result<()> {
    std::fs::write(path, write_network(net))
}

pub fn load(path: impl AsRef<Path>) -> Result<LocalizedNetwork, ParseError> {
    parse(&std::fs::read_to_string(path)?)
}

fn num<T: std::str::FromStr>(line: usize, what: &str, s: &str) -> Result<T, ParseError> {
    s.parse()
        .map_err(|_| syntax(line, format!("bad {what} `{s}`")))
}

fn parse_params(line: usize, fields: &[&str]) -> Result<(Option<GenParams>, u64, u32), ParseError> {
    let mut kv = HashMap::new();
    let mut hand_built = false;
    for f in fields {
        if *f == "none" {
            hand_built = true;
            continue;
        }
        let (k, v) = f
            .split_once('=')
            .ok_or_else(|| syntax(line, format!("expected key=value, got `{f}`")))?;
        kv.insert(k, v);
    }
    let get = |k: &str| {
        kv.get(k)
            .copied()
            .ok_or_else(|| syntax(line, format!("missing `{k}`")))
    };
    let seed = kv.get("seed").map_or(Ok(0), |v| num(line, "seed", v))?;
    let discarded = kv
        .get("discarded")
        .map_or(Ok(0), |v| num(line, "discarded", v))?;
    if hand_built {
        return Ok((None, seed, discarded));
    }
    let f = |k: &str| -> Result<f64, ParseError> { num(line, k, get(k)?) };
    let model = match get("model")? {
        "random" => LinkModel::Random { p: f("p")? },
        "sinr" => LinkModel::Sinr {
            r: f("r")?,
            big_r: f("R")?,
        },
        "exponential" => LinkModel::Exponential { r_avg: f("r_avg")? },
        m => return Err(syntax(line, format!("unknown model `{m}`"))),
    };
    let max_apparent_range = match get("max_range")? {
        "none" => None,
        v => Some(num(line, "max_range", v)?),
    };
    let params = GenParams {
        l: f("L")?,
        n: num(line, "n", get("n")?)?,
        model,
        sigma_err: f("sigma_err")?,
        max_apparent_range,
        max_attempts: num(line, "max_attempts", get("max_attempts")?)?,
    };
    Ok((Some(params), seed, discarded))
}

pub fn parse(text: &str) -> Result<LocalizedNetwork, ParseError> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));
    match lines.next() {
        Some((_, HEADER)) => {}
        Some((no, l)) => return Err(syntax(no, format!("expected `{HEADER}`, got `{l}`"))),
        None => return Err(syntax(1, "empty file")),
    }
    let (params, seed, discarded) = match lines.next() {
        Some((no, l)) if l.starts_with("params") => {
            let fields: Vec<&str> = l.split_whitespace().skip(1).collect();
            parse_params(no, &fields)?
        }
        Some((no, _)) => return Err(syntax(no, "expected params line")),
        None => return Err(syntax(2, "missing params line")),
    };

    let mut bbox = None;
    let mut true_positions = Vec::new();
    let mut apparent_positions = Vec::new();
    let mut edges = Vec::new();
    for (no, l) in lines {
        let fields: Vec<&str> = l.split_whitespace().collect();
        match fields[0] {
            "box" if fields.len() == 5 => {
                let v: Vec<f64> = fields[1..]
                    .iter()
                    .map(|s| num(no, "coordinate", s))
                    .collect::<Result<_, _>>()?;
                if !(v[0] < v[2] && v[1] < v[3]) {
                    return Err(syntax(no, "degenerate box"));
                }
                bbox = Some(BoundingBox::new(
                    Point2::new(v[0], v[1]),
                    Point2::new(v[2], v[3]),
                ));
            }
            "node" if fields.len() == 6 => {
                if !edges.is_empty() {
                    return Err(syntax(no, "node after edge lines"));
                }
                let id: usize = num(no, "node id", fields[1])?;
                if id != true_positions.len() {
                    return Err(syntax(
                        no,
                        format!("node ids must be consecutive from 0, got {id}"),
                    ));
                }
                let v: Vec<f64> = fields[2..]
                    .iter()
                    .map(|s| num(no, "coordinate", s))
                    .collect::<Result<_, _>>()?;
                if v.iter().any(|x| !x.is_finite()) {
                    return Err(syntax(no, "non-finite coordinate"));
                }
                true_positions.push(Point2::new(v[0], v[1]));
                apparent_positions.push(Point2::new(v[2], v[3]));
            }
            "edge" if fields.len() == 3 => {
                let u: usize = num(no, "node id", fields[1])?;
                let v: usize = num(no, "node id", fields[2])?;
                if u >= true_positions.len() || v >= true_positions.len() || u == v {
                    return Err(syntax(no, format!("invalid edge {u} {v}")));
                }
                edges.push((u, v));
            }
            _ => return Err(syntax(no, format!("unrecognized line `{l}`"))),
        }
    }
    let graph =
        CommGraph::from_edges(true_positions.len(), edges).map_err(|e| syntax(0, e.to_string()))?;
    Ok(LocalizedNetwork {
        true_positions,
        apparent_positions,
        graph,
        params,
        seed,
        discarded,
        bbox,
    })
}
