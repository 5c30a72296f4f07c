use anyhow::{anyhow, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use geoecc::campaign::{self, CampaignError, CsvSink};
use geoecc::canonical::build_canonical;
use geoecc::distributed::{run_full_protocol, ProtocolError, Verdict};
use geoecc::eccentricity::{Analysis, EccError};
use geoecc::navigation::{route, Engine, Outcome};
use geoecc::netgen::{self, format, GenError, GenParams, LinkModel};
use serde_json::json;
use std::fs::File;
use std::io::BufWriter;
use std::path::PathBuf;
use std::process::ExitCode;

const EXIT_PARSE: u8 = 2;
const EXIT_DISCONNECTED: u8 = 3;
const EXIT_GLOBAL_FAILURE: u8 = 4;
const EXIT_DEAD_END: u8 = 5;

#[derive(Parser)]
#[command(
    name = "geoecc",
    version,
    about = "Geographic eccentricity of localized networks"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a random connected localized network.
    Generate(GenerateArgs),
    /// Print the locality metrics of a network.
    Measure {
        net: PathBuf,
        #[arg(long, value_enum, default_value_t = Format::Text)]
        format: Format,
    },
    /// Route messages over the canonical simulation.
    Route(RouteArgs),
    /// Run the distributed zone computation.
    Protocol {
        net: PathBuf,
        #[arg(long)]
        k: u32,
        /// Print one line per simulated round.
        #[arg(long)]
        trace: bool,
        #[arg(long, value_enum, default_value_t = Format::Text)]
        format: Format,
    },
    /// Run a batch experiment described by a TOML config.
    Campaign {
        config: PathBuf,
        /// Output directory (default: paths from the config, else the working directory).
        #[arg(long, short)]
        out: Option<PathBuf>,
        /// Full experimental scale: L = 25, 100 instances per cell.
        #[arg(long)]
        paper_scale: bool,
    },
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    Json,
    Csv,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModelArg {
    Random,
    Sinr,
    Exponential,
}

#[derive(Args)]
struct GenerateArgs {
    #[arg(long, value_enum)]
    model: ModelArg,
    #[arg(long = "L")]
    l: f64,
    /// Node count (default 4L²).
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    p: Option<f64>,
    #[arg(long)]
    r: Option<f64>,
    #[arg(long = "R")]
    big_r: Option<f64>,
    #[arg(long)]
    r_avg: Option<f64>,
    #[arg(long, default_value_t = 0.0)]
    sigma: f64,
    /// Drop links whose apparent length exceeds this.
    #[arg(long)]
    max_range: Option<f64>,
    #[arg(long)]
    max_attempts: Option<u32>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, short)]
    out: PathBuf,
}

#[derive(Clone, Copy, ValueEnum)]
enum EngineArg {
    Gradient,
    GradientPerimeter,
}

#[derive(Args)]
struct RouteArgs {
    net: PathBuf,
    source: Option<usize>,
    dest: Option<usize>,
    /// Knowledge radius (default: the network's geographic eccentricity).
    #[arg(long)]
    k: Option<u32>,
    #[arg(long, value_enum, default_value_t = EngineArg::GradientPerimeter)]
    engine: EngineArg,
    #[arg(long)]
    all_pairs: bool,
    /// Allow k below the geographic eccentricity.
    #[arg(long)]
    force: bool,
    #[arg(long, value_enum, default_value_t = Format::Text)]
    format: Format,
}

/// Error carrying the process exit code.
struct Exit(u8, anyhow::Error);

impl<E: Into<anyhow::Error>> From<E> for Exit {
    fn from(e: E) -> Self {
        let e = e.into();
        let code = if e.is::<format::ParseError>() {
            EXIT_PARSE
        } else if let Some(c) = e.downcast_ref::<CampaignError>() {
            match c {
                CampaignError::Config(_) => EXIT_PARSE,
                CampaignError::Generation { .. } => EXIT_DISCONNECTED,
                _ => 1,
            }
        } else if let Some(g) = e.downcast_ref::<GenError>() {
            match g {
                GenError::ConnectivityExhausted(_) => EXIT_DISCONNECTED,
                GenError::InvalidParams(_) => EXIT_PARSE,
            }
        } else if matches!(e.downcast_ref::<EccError>(), Some(EccError::Disconnected))
            || matches!(
                e.downcast_ref::<ProtocolError>(),
                Some(ProtocolError::Disconnected)
            )
        {
            EXIT_DISCONNECTED
        } else {
            1
        };
        Exit(code, e)
    }
}

type Res = Result<u8, Exit>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    let res = match cli.cmd {
        Command::Generate(a) => generate(a),
        Command::Measure { net, format } => measure(net, format),
        Command::Route(a) => route_cmd(a),
        Command::Protocol {
            net,
            k,
            trace,
            format,
        } => protocol(net, k, trace, format),
        Command::Campaign {
            config,
            out,
            paper_scale,
        } => campaign_cmd(config, out, paper_scale),
    };
    match res {
        Ok(code) => ExitCode::from(code),
        Err(Exit(code, e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(code)
        }
    }
}

fn need(v: Option<f64>, flag: &str) -> Result<f64, Exit> {
    v.ok_or_else(|| Exit(EXIT_PARSE, anyhow!("this model needs --{flag}")))
}

fn generate(a: GenerateArgs) -> Res {
    let model = match a.model {
        ModelArg::Random => LinkModel::Random { p: need(a.p, "p")? },
        ModelArg::Sinr => LinkModel::Sinr {
            r: need(a.r, "r")?,
            big_r: need(a.big_r, "R")?,
        },
        ModelArg::Exponential => LinkModel::Exponential {
            r_avg: need(a.r_avg, "r-avg")?,
        },
    };
    let mut params = GenParams::new(a.l, model)
        .with_sigma(a.sigma)
        .with_max_range(a.max_range);
    if let Some(n) = a.n {
        params = params.with_n(n);
    }
    if let Some(m) = a.max_attempts {
        params = params.with_max_attempts(m);
    }
    let net = netgen::generate(&params, a.seed)?;
    format::save(&net, &a.out).with_context(|| format!("writing {}", a.out.display()))?;
    println!(
        "n={} edges={} connected={} discarded={}",
        net.n(),
        net.graph.edge_count(),
        net.graph.is_connected(),
        net.discarded
    );
    Ok(0)
}

fn load(path: &PathBuf) -> Result<netgen::LocalizedNetwork, Exit> {
    format::load(path).map_err(|e| Exit(EXIT_PARSE, anyhow!("{}: {e}", path.display())))
}

fn measure(path: PathBuf, fmt: Format) -> Res {
    let net = load(&path)?;
    let r = Analysis::new(&net)?.report();
    match fmt {
        Format::Json => println!("{}", serde_json::to_string_pretty(&r)?),
        Format::Csv => {
            println!("D,N1,kT,ke,kg,dk,dN,Nke,Nkg");
            println!(
                "{},{},{},{},{},{},{},{},{}",
                r.d, r.n1, r.k_t, r.k_e, r.k_g, r.dk, r.dn, r.n_ke, r.n_kg
            );
        }
        Format::Text => {
            println!("D     {}", r.d);
            println!("N1    {}", r.n1);
            println!("N_ke  {}", r.n_ke);
            println!("N_kg  {}", r.n_kg);
            println!("k_T   {}", r.k_t);
            println!("k_e   {}", r.k_e);
            println!("k_g   {}", r.k_g);
            println!("dk    {}", r.dk);
            println!("dN    {}", r.dn);
        }
    }
    Ok(0)
}

fn route_cmd(a: RouteArgs) -> Res {
    let net = load(&a.net)?;
    let k_g = Analysis::new(&net)?.geographic_eccentricity();
    let k = a.k.unwrap_or(k_g);
    if k == 0 {
        return Err(Exit(EXIT_PARSE, anyhow!("--k must be at least 1")));
    }
    if k < k_g && !a.force {
        return Err(Exit(
            EXIT_PARSE,
            anyhow!(
                "k={k} is below the geographic eccentricity {k_g}; pass --force to route anyway"
            ),
        ));
    }
    let sim = build_canonical(&net, k)?;
    let engine = match a.engine {
        EngineArg::Gradient => Engine::Gradient,
        EngineArg::GradientPerimeter => Engine::GradientPerimeter,
    };
    let n = net.n();
    let check = |v: usize| -> Result<usize, Exit> {
        if v < n {
            Ok(v)
        } else {
            Err(Exit(EXIT_PARSE, anyhow!("node {v} out of range (n={n})")))
        }
    };

    if a.all_pairs {
        let (mut delivered, mut stretch) = (0usize, 0.0);
        for s in 0..n {
            for t in 0..n {
                let tr = route(&sim, engine, s, t);
                if tr.delivered() {
                    delivered += 1;
                    stretch += tr.stretch;
                }
            }
        }
        let total = n * n;
        let rate = delivered as f64 / total as f64;
        let mean_stretch = if delivered > 0 {
            stretch / delivered as f64
        } else {
            f64::NAN
        };
        match a.format {
            Format::Json => println!(
                "{}",
                json!({"k": k, "pairs": total, "delivered": delivered, "delivery_rate": rate, "mean_stretch": mean_stretch})
            ),
            Format::Csv => println!("k,pairs,delivered,delivery_rate,mean_stretch\n{k},{total},{delivered},{rate},{mean_stretch}"),
            Format::Text => println!("k={k} pairs={total} delivered={delivered} rate={rate} mean_stretch={mean_stretch}"),
        }
        return Ok(if delivered == total { 0 } else { EXIT_DEAD_END });
    }

    let (Some(s), Some(t)) = (a.source, a.dest) else {
        return Err(Exit(
            EXIT_PARSE,
            anyhow!("give SOURCE and DEST, or --all-pairs"),
        ));
    };
    let tr = route(&sim, engine, check(s)?, check(t)?);
    let outcome = match tr.outcome {
        Outcome::Delivered => "delivered".to_string(),
        Outcome::DeadEnd(p) => format!("dead end at ({},{})", p.x, p.y),
        Outcome::HopCapExceeded => "hop cap exceeded".to_string(),
    };
    match a.format {
        Format::Json => println!(
            "{}",
            json!({"k": k, "hops": tr.hops, "hop_count": tr.hop_count, "handovers": tr.handovers,
                   "stretch": tr.stretch, "outcome": outcome, "trace": tr.dump().lines().collect::<Vec<_>>()})
        ),
        _ => {
            print!("{}", tr.dump());
            println!("{outcome} after {} hops", tr.hop_count);
        }
    }
    Ok(if tr.delivered() { 0 } else { EXIT_DEAD_END })
}

fn protocol(path: PathBuf, k: u32, trace: bool, fmt: Format) -> Res {
    if k == 0 {
        return Err(Exit(EXIT_PARSE, anyhow!("--k must be at least 1")));
    }
    let net = load(&path)?;
    let run = run_full_protocol(&net, k)?;
    let m = run.messages;
    let verdict = match &run.verdict {
        Verdict::Success(_) => "success".to_string(),
        Verdict::GlobalFailure(f) => format!("global failure: {f}"),
    };
    match fmt {
        Format::Json => {
            let mut v = json!({"k": k, "rounds": run.rounds(), "messages": m, "total_messages": m.total(), "verdict": verdict});
            if let Verdict::Success(z) = &run.verdict {
                v["zones"] = json!(z.zones);
                v["holes"] = json!(z.holes);
            }
            if let Some(f) = run.failure() {
                v["failure"] = json!(f);
            }
            println!("{v}");
        }
        _ => {
            if trace {
                print!("{}", run.log());
            }
            println!("k={k} rounds={} verdict={verdict}", run.rounds());
            println!(
                "messages total={} positions={} edges={} probes={} probes_dedup={} zones={}",
                m.total(),
                m.position_broadcast,
                m.edge_broadcast,
                m.face_probes,
                m.face_probes_dedup,
                m.zone_broadcast
            );
        }
    }
    Ok(if run.succeeded() {
        0
    } else {
        EXIT_GLOBAL_FAILURE
    })
}

fn campaign_cmd(config: PathBuf, out: Option<PathBuf>, paper_scale: bool) -> Res {
    let mut cfg = campaign::load_config(&config)?;
    if paper_scale {
        cfg = cfg.paper_scale();
    }
    let stem = if cfg.name.is_empty() {
        "campaign".to_string()
    } else {
        cfg.name.clone()
    };
    let place = |configured: &Option<PathBuf>, default: String| match (&out, configured) {
        (Some(dir), Some(p)) => dir.join(p.file_name().unwrap_or(p.as_os_str())),
        (Some(dir), None) => dir.join(default),
        (None, Some(p)) => p.clone(),
        (None, None) => PathBuf::from(default),
    };
    let rows_path = place(&cfg.rows, format!("{stem}-rows.csv"));
    let summary_path = place(&cfg.summary, format!("{stem}-summary.csv"));
    if rows_path == summary_path {
        return Err(anyhow!("rows and summary paths coincide: {}", rows_path.display()).into());
    }
    if let Some(dir) = &out {
        std::fs::create_dir_all(dir)?;
    }
    let open = |p: &PathBuf| -> anyhow::Result<BufWriter<File>> {
        Ok(BufWriter::new(
            File::create(p).with_context(|| format!("creating {}", p.display()))?,
        ))
    };
    let mut sink = CsvSink::new(&cfg, open(&rows_path)?, open(&summary_path)?)?;
    let cells = campaign::run_campaign(&cfg, |cell| {
        eprintln!(
            "cell {}: {} instances, {} discarded",
            cell.cell,
            cell.rows.len(),
            cell.delta_discarded()
        );
        sink.write_cell(cell)
    })?;
    println!(
        "{} cells written to {} and {}",
        cells.len(),
        rows_path.display(),
        summary_path.display()
    );
    Ok(0)
}
