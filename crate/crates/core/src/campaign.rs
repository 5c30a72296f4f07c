//! Batch experiments: a sweep of generation parameters, a fixed number of
//! connected instances per cell, per-instance CSV rows and per-cell summaries.
//!
//! Configs are TOML:
//!
//! ```toml
//! name = "sigma-sweep"
//! model = "sinr"            # random | sinr | exponential
//! L = [10.0]
//! r = [1.6]                 # sinr; every (r, R) pair is a cell
//! R = [2.24]
//! sigma_err = [0.0, 0.5, 1.0]
//! max_range = []            # apparent-length pruning thresholds; empty = none
//! instances = 30
//! seed_base = 1
//! measurements = ["metrics", "routing", "protocol"]
//! protocol_k = [1, 2, 3]
//! ```
//!
//! Instance `i` of every cell uses seed `seed_base + i`; instances run in
//! parallel but rows are emitted in (cell, instance) order, so output is
//! byte-identical across runs.

use crate::distributed::run_full_protocol;
use crate::eccentricity::{Analysis, EccError, EccentricityReport};
use crate::navigation::{route, Engine};
use crate::netgen::{generate, GenError, GenParams, LinkModel, DEFAULT_MAX_ATTEMPTS};
use crate::netgraph::Hops;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Deserialize;
use std::io::Write;
use std::path::{Path, PathBuf};

#[derive(Debug, thiserror::Error)]
pub enum CampaignError {
    #[error("invalid config: {0}")]
    Config(String),
    #[error("cell {cell}, seed {seed}: {source}")]
    Generation {
        cell: usize,
        seed: u64,
        source: GenError,
    },
    #[error("cell {cell}, seed {seed}: {source}")]
    Measurement {
        cell: usize,
        seed: u64,
        source: EccError,
    },
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Measurement {
    Metrics,
    Routing,
    Protocol,
}

fn default_instances() -> usize {
    30
}

fn default_sigma() -> Vec<f64> {
    vec![0.0]
}

fn default_measurements() -> Vec<Measurement> {
    vec![Measurement::Metrics]
}

fn default_route_pairs() -> usize {
    100
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub name: String,
    pub model: String,
    #[serde(rename = "L")]
    pub l: Vec<f64>,
    #[serde(default)]
    pub p: Vec<f64>,
    #[serde(default)]
    pub r: Vec<f64>,
    #[serde(default, rename = "R")]
    pub big_r: Vec<f64>,
    #[serde(default)]
    pub r_avg: Vec<f64>,
    #[serde(default = "default_sigma")]
    pub sigma_err: Vec<f64>,
    #[serde(default)]
    pub max_range: Vec<f64>,
    #[serde(default = "default_instances")]
    pub instances: usize,
    #[serde(default)]
    pub seed_base: u64,
    #[serde(default = "default_measurements")]
    pub measurements: Vec<Measurement>,
    /// k values tested by the protocol measurement.
    #[serde(default)]
    pub protocol_k: Vec<Hops>,
    /// Ordered pairs sampled per instance by the routing measurement.
    #[serde(default = "default_route_pairs")]
    pub route_pairs: usize,
    #[serde(default)]
    pub max_attempts: Option<u32>,
    /// Output paths, relative to the working directory.
    #[serde(default)]
    pub rows: Option<PathBuf>,
    #[serde(default)]
    pub summary: Option<PathBuf>,
}

pub fn parse_config(text: &str) -> Result<ExperimentConfig, CampaignError> {
    let cfg: ExperimentConfig =
        toml::from_str(text).map_err(|e| CampaignError::Config(e.to_string()))?;
    cfg.validate()?;
    Ok(cfg)
}

pub fn load_config(path: impl AsRef<Path>) -> Result<ExperimentConfig, CampaignError> {
    parse_config(&std::fs::read_to_string(path)?)
}

impl ExperimentConfig {
    fn measures(&self, m: Measurement) -> bool {
        self.measurements.contains(&m)
    }

    /// The same sweep at the full experimental scale (L = 25, 100 instances).
    pub fn paper_scale(mut self) -> Self {
        self.l = vec![25.0];
        self.instances = 100;
        self
    }

    fn models(&self) -> Result<Vec<LinkModel>, CampaignError> {
        let need = |v: &Vec<f64>, what: &str| {
            if v.is_empty() {
                Err(CampaignError::Config(format!(
                    "model {} needs `{what}`",
                    self.model
                )))
            } else {
                Ok(())
            }
        };
        let models = match self.model.as_str() {
            "random" => {
                need(&self.p, "p")?;
                self.p.iter().map(|&p| LinkModel::Random { p }).collect()
            }
            "sinr" => {
                need(&self.r, "r")?;
                need(&self.big_r, "R")?;
                self.r
                    .iter()
                    .flat_map(|&r| {
                        self.big_r
                            .iter()
                            .map(move |&big_r| LinkModel::Sinr { r, big_r })
                    })
                    .collect()
            }
            "exponential" => {
                need(&self.r_avg, "r_avg")?;
                self.r_avg
                    .iter()
                    .map(|&r_avg| LinkModel::Exponential { r_avg })
                    .collect()
            }
            m => return Err(CampaignError::Config(format!("unknown model `{m}`"))),
        };
        Ok(models)
    }

    pub fn validate(&self) -> Result<(), CampaignError> {
        if self.instances == 0 {
            return Err(CampaignError::Config("instances must be at least 1".into()));
        }
        if self.l.is_empty() || self.sigma_err.is_empty() || self.measurements.is_empty() {
            return Err(CampaignError::Config("empty sweep".into()));
        }
        if self.measures(Measurement::Protocol)
            && (self.protocol_k.is_empty() || self.protocol_k.contains(&0))
        {
            return Err(CampaignError::Config(
                "protocol measurement needs protocol_k values >= 1".into(),
            ));
        }
        for cell in self.cells()? {
            cell.validate()
                .map_err(|e| CampaignError::Config(e.to_string()))?;
        }
        Ok(())
    }

    /// Every combination of L, model parameters, σ_err and pruning threshold.
    pub fn cells(&self) -> Result<Vec<GenParams>, CampaignError> {
        let ranges: Vec<Option<f64>> = if self.max_range.is_empty() {
            vec![None]
        } else {
            self.max_range.iter().map(|&r| Some(r)).collect()
        };
        let mut cells = Vec::new();
        for &l in &self.l {
            for model in self.models()? {
                for &sigma in &self.sigma_err {
                    for &range in &ranges {
                        cells.push(
                            GenParams::new(l, model)
                                .with_sigma(sigma)
                                .with_max_range(range)
                                .with_max_attempts(
                                    self.max_attempts.unwrap_or(DEFAULT_MAX_ATTEMPTS),
                                ),
                        );
                    }
                }
            }
        }
        if cells.is_empty() {
            return Err(CampaignError::Config("empty sweep".into()));
        }
        Ok(cells)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct InstanceRow {
    pub cell: usize,
    pub instance: usize,
    pub seed: u64,
    pub report: EccentricityReport,
    /// Discarded (disconnected) samples before this instance.
    pub discarded: u32,
    /// Delivered fraction of the sampled pairs at k = k_g.
    pub delivered: Option<f64>,
    /// Protocol verdict per tested k.
    pub protocol: Vec<(Hops, bool)>,
}

impl InstanceRow {
    pub fn net_id(&self) -> String {
        format!("c{}-i{}", self.cell, self.instance)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CellResult {
    pub cell: usize,
    pub params: GenParams,
    pub rows: Vec<InstanceRow>,
}

/// Mean and sample standard deviation.
pub fn mean_std(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    if xs.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

pub const METRICS: [&str; 9] = ["D", "N1", "kT", "ke", "kg", "dk", "dN", "Nke", "Nkg"];

fn metric_values(r: &EccentricityReport) -> [f64; 9] {
    [
        r.d as f64,
        r.n1,
        r.k_t as f64,
        r.k_e as f64,
        r.k_g as f64,
        r.dk as f64,
        r.dn,
        r.n_ke,
        r.n_kg,
    ]
}

impl CellResult {
    /// Total samples drawn: connected instances plus discarded ones.
    pub fn sigma_total(&self) -> u64 {
        self.rows.len() as u64 + self.delta_discarded()
    }

    pub fn delta_discarded(&self) -> u64 {
        self.rows.iter().map(|r| r.discarded as u64).sum()
    }

    /// Values of one named metric (see [`METRICS`]) across instances.
    pub fn metric(&self, name: &str) -> Vec<f64> {
        let i = METRICS
            .iter()
            .position(|&m| m == name)
            .expect("known metric");
        self.rows
            .iter()
            .map(|r| metric_values(&r.report)[i])
            .collect()
    }

    pub fn stats(&self, name: &str) -> (f64, f64) {
        mean_std(&self.metric(name))
    }
}

fn measure_instance(
    cfg: &ExperimentConfig,
    cell: usize,
    params: &GenParams,
    instance: usize,
) -> Result<InstanceRow, CampaignError> {
    let seed = cfg.seed_base + instance as u64;
    let net = generate(params, seed).map_err(|source| CampaignError::Generation {
        cell,
        seed,
        source,
    })?;
    let measured = |source| CampaignError::Measurement { cell, seed, source };
    let analysis = Analysis::new(&net).map_err(measured)?;
    let report = analysis.report();

    let delivered = if cfg.measures(Measurement::Routing) {
        let sim = crate::canonical::with_subdivision(&net, report.k_g, analysis.sub.clone());
        let n = net.n();
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x726f_7574_6573);
        let ok = (0..cfg.route_pairs)
            .filter(|_| {
                let (s, t) = (rng.random_range(0..n), rng.random_range(0..n));
                route(&sim, Engine::GradientPerimeter, s, t).delivered()
            })
            .count();
        Some(ok as f64 / cfg.route_pairs.max(1) as f64)
    } else {
        None
    };

    let mut protocol = Vec::new();
    if cfg.measures(Measurement::Protocol) {
        for &k in &cfg.protocol_k {
            let run = run_full_protocol(&net, k).map_err(|_| measured(EccError::Disconnected))?;
            protocol.push((k, run.succeeded()));
        }
    }
    Ok(InstanceRow {
        cell,
        instance,
        seed,
        report,
        discarded: net.discarded,
        delivered,
        protocol,
    })
}

pub fn run_cell(
    cfg: &ExperimentConfig,
    cell: usize,
    params: &GenParams,
) -> Result<CellResult, CampaignError> {
    let rows = (0..cfg.instances)
        .into_par_iter()
        .map(|i| measure_instance(cfg, cell, params, i))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(CellResult {
        cell,
        params: params.clone(),
        rows,
    })
}

/// Runs every cell in order, handing each finished cell to `on_cell`.
pub fn run_campaign(
    cfg: &ExperimentConfig,
    mut on_cell: impl FnMut(&CellResult) -> Result<(), CampaignError>,
) -> Result<Vec<CellResult>, CampaignError> {
    let mut out = Vec::new();
    for (i, params) in cfg.cells()?.iter().enumerate() {
        let res = run_cell(cfg, i, params)?;
        on_cell(&res)?;
        out.push(res);
    }
    Ok(out)
}

// keeps CSV output independent of any locale
fn num(x: f64) -> String {
    format!("{x}")
}

fn param_fields(p: &GenParams) -> Vec<String> {
    let (mut prob, mut r, mut big_r, mut r_avg) =
        (String::new(), String::new(), String::new(), String::new());
    match p.model {
        LinkModel::Random { p } => prob = num(p),
        LinkModel::Sinr { r: a, big_r: b } => {
            r = num(a);
            big_r = num(b);
        }
        LinkModel::Exponential { r_avg: a } => r_avg = num(a),
    }
    vec![
        p.model.name().to_string(),
        num(p.l),
        p.n.to_string(),
        prob,
        r,
        big_r,
        r_avg,
        num(p.sigma_err),
        p.max_apparent_range.map_or("none".to_string(), num),
    ]
}

const PARAM_COLUMNS: [&str; 9] = [
    "model",
    "L",
    "n",
    "p",
    "r",
    "R",
    "r_avg",
    "sigma_err",
    "max_range",
];

/// Writes instance rows and cell summaries as CSV, flushing after every cell.
pub struct CsvSink<W: Write> {
    rows: csv::Writer<W>,
    summary: csv::Writer<W>,
    routing: bool,
    protocol_k: Vec<Hops>,
}

impl<W: Write> CsvSink<W> {
    pub fn new(cfg: &ExperimentConfig, rows: W, summary: W) -> Result<Self, CampaignError> {
        let mut sink = CsvSink {
            rows: csv::Writer::from_writer(rows),
            summary: csv::Writer::from_writer(summary),
            routing: cfg.measures(Measurement::Routing),
            protocol_k: if cfg.measures(Measurement::Protocol) {
                cfg.protocol_k.clone()
            } else {
                Vec::new()
            },
        };
        let mut head: Vec<String> = vec!["net_id".into(), "seed".into()];
        head.extend(PARAM_COLUMNS.iter().map(|s| s.to_string()));
        head.extend(METRICS.iter().map(|s| s.to_string()));
        head.extend(["sigma_total".to_string(), "delta_discarded".to_string()]);
        let mut sum_head: Vec<String> = vec!["cell".into()];
        sum_head.extend(PARAM_COLUMNS.iter().map(|s| s.to_string()));
        sum_head.extend(["instances", "sigma_total", "delta_discarded"].map(String::from));
        for m in METRICS {
            sum_head.push(format!("mean_{m}"));
            sum_head.push(format!("std_{m}"));
        }
        if sink.routing {
            head.push("delivered".into());
            sum_head.extend(["mean_delivered".to_string(), "std_delivered".to_string()]);
        }
        for k in &sink.protocol_k {
            head.push(format!("protocol_k{k}"));
            sum_head.push(format!("success_k{k}"));
        }
        sink.rows.write_record(&head)?;
        sink.summary.write_record(&sum_head)?;
        Ok(sink)
    }

    pub fn write_cell(&mut self, cell: &CellResult) -> Result<(), CampaignError> {
        let params = param_fields(&cell.params);
        for row in &cell.rows {
            let mut rec = vec![row.net_id(), row.seed.to_string()];
            rec.extend(params.iter().cloned());
            rec.extend(metric_values(&row.report).map(num));
            rec.push((1 + row.discarded).to_string());
            rec.push(row.discarded.to_string());
            if self.routing {
                rec.push(row.delivered.map_or(String::new(), num));
            }
            for &(_, ok) in &row.protocol {
                rec.push(ok.to_string());
            }
            self.rows.write_record(&rec)?;
        }
        let mut rec = vec![cell.cell.to_string()];
        rec.extend(params);
        rec.push(cell.rows.len().to_string());
        rec.push(cell.sigma_total().to_string());
        rec.push(cell.delta_discarded().to_string());
        for m in METRICS {
            let (mean, std) = cell.stats(m);
            rec.push(num(mean));
            rec.push(num(std));
        }
        if self.routing {
            let d: Vec<f64> = cell.rows.iter().filter_map(|r| r.delivered).collect();
            let (mean, std) = mean_std(&d);
            rec.push(num(mean));
            rec.push(num(std));
        }
        for (i, _) in self.protocol_k.iter().enumerate() {
            let ok = cell.rows.iter().filter(|r| r.protocol[i].1).count();
            rec.push(num(ok as f64 / cell.rows.len() as f64));
        }
        self.summary.write_record(&rec)?;
        self.rows.flush()?;
        self.summary.flush()?;
        Ok(())
    }
}

/// Runs `cfg` writing both CSVs into memory; handy for tests and small sweeps.
pub fn campaign_csv(cfg: &ExperimentConfig) -> Result<(String, String), CampaignError> {
    let mut rows = Vec::new();
    let mut summary = Vec::new();
    {
        let mut sink = CsvSink::new(cfg, &mut rows, &mut summary)?;
        run_campaign(cfg, |c| sink.write_cell(c))?;
    }
    let text = |b: Vec<u8>| String::from_utf8(b).expect("csv output is utf-8");
    Ok((text(rows), text(summary)))
}

#[cfg(test)]
mod tests {
    use super::*;

    const SMALL: &str = r#"
        model = "sinr"
        L = [2.5]
        r = [1.0]
        R = [2.0]
        sigma_err = [0.0, 0.5]
        instances = 3
        seed_base = 5
        measurements = ["metrics", "protocol"]
        protocol_k = [2]
    "#;

    #[test]
    fn parses_and_expands() {
        let cfg = parse_config(SMALL).unwrap();
        assert_eq!(cfg.cells().unwrap().len(), 2);
        assert_eq!(cfg.rows, None);
    }

    #[test]
    fn rejects_bad_configs() {
        assert!(parse_config("model = \"sinr\"\nL = []\nr = [1.0]\nR = [2.0]\n").is_err());
        assert!(parse_config("model = \"random\"\nL = [2.0]\n").is_err());
        assert!(
            parse_config("model = \"sinr\"\nL = [2.0]\nr = [1.0]\nR = [2.0]\ninstances = 0\n")
                .is_err()
        );
        assert!(
            parse_config("model = \"sinr\"\nL = [2.0]\nr = [1.0]\nR = [2.0]\nbogus = 1\n").is_err()
        );
    }

    #[test]
    fn csv_shape() {
        let cfg = parse_config(SMALL).unwrap();
        let (rows, summary) = campaign_csv(&cfg).unwrap();
        let mut lines = rows.lines();
        assert_eq!(
            lines.next().unwrap(),
            "net_id,seed,model,L,n,p,r,R,r_avg,sigma_err,max_range,D,N1,kT,ke,kg,dk,dN,Nke,Nkg,sigma_total,delta_discarded,protocol_k2"
        );
        assert_eq!(lines.count(), 6);
        assert_eq!(summary.lines().count(), 3);
        assert!(rows.contains("\nc1-i2,7,sinr,2.5,25,,1,2,,0.5,none,"));
    }

    #[test]
    fn mean_std_sample() {
        let (m, s) = mean_std(&[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(m, 2.5);
        assert!((s - 1.2909944487358056).abs() < 1e-15);
    }
}
