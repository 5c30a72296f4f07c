//! One line per acceptance criterion; exits nonzero if any fails.

mod common;

use std::process::ExitCode;
use std::time::Instant;

use common::*;
use geoecc::campaign::{parse_config, run_cell, CellResult};
use geoecc::canonical::build_canonical;
use geoecc::distributed::run_full_protocol;
use geoecc::eccentricity::Analysis;
use geoecc::geometry::build_subdivision;
use geoecc::navigation::{route, Engine, Outcome};
use geoecc::netgen::{generate, GenParams, LinkModel};
use geoecc::{BoundingBox, Point2};
use rand::Rng;

type Check = Result<String, String>;

fn cell(toml: &str) -> Result<Vec<CellResult>, String> {
    let cfg = parse_config(toml).map_err(|e| e.to_string())?;
    let cells = cfg.cells().map_err(|e| e.to_string())?;
    cells
        .iter()
        .enumerate()
        .map(|(i, p)| run_cell(&cfg, i, p).map_err(|e| e.to_string()))
        .collect()
}

fn delaunay_matches_brute_force() -> Check {
    let mut r = rng(1);
    let bbox = BoundingBox::new(Point2::new(-1.0, -1.0), Point2::new(11.0, 11.0));
    for set in 0..200 {
        let n = r.random_range(3..=50);
        let pts: Vec<Point2> = (0..n)
            .map(|_| Point2::new(r.random_range(0.0..10.0), r.random_range(0.0..10.0)))
            .collect();
        let sites: Vec<_> = pts.iter().copied().enumerate().collect();
        let sub = build_subdivision(&sites, bbox).map_err(|e| e.to_string())?;
        if sub.delaunay_edges() != &brute_delaunay(&pts) {
            return Err(format!("set {set} (n = {n}) differs"));
        }
    }
    Ok("200 point sets".into())
}

fn localities_match_brute_force() -> Check {
    for seed in 0..100 {
        let net = random_network(seed, 100);
        let r = Analysis::new(&net).map_err(|e| e.to_string())?.report();
        let (ke, kg) = brute_localities(&net);
        if (r.k_e, r.k_g) != (ke, kg) {
            return Err(format!(
                "seed {seed}: ({}, {}) vs oracle ({ke}, {kg})",
                r.k_e, r.k_g
            ));
        }
    }
    Ok("100 networks".into())
}

fn quasi_udg_bound() -> Check {
    let c = &cell(
        r#"
        model = "sinr"
        L = [10.0]
        r = [1.2]
        R = [1.68]
        instances = 30
        seed_base = 300
        max_attempts = 100000
        "#,
    )?[0];
    let kg = c.metric("kg");
    let max = kg.iter().cloned().fold(0.0, f64::max);
    let msg = format!(
        "max k_g {max} over {} instances, delta {}",
        kg.len(),
        c.delta_discarded()
    );
    if max <= 3.0 {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn median(xs: &mut [f64]) -> f64 {
    xs.sort_by(f64::total_cmp);
    let m = xs.len() / 2;
    if xs.len() % 2 == 1 {
        xs[m]
    } else {
        (xs[m - 1] + xs[m]) / 2.0
    }
}

fn wide_sinr_stays_local() -> Check {
    let c = &cell(
        r#"
        model = "sinr"
        L = [10.0]
        r = [1.2]
        R = [6.0]
        instances = 30
        seed_base = 400
        "#,
    )?[0];
    let mut kg = c.metric("kg");
    let max = kg.iter().cloned().fold(0.0, f64::max);
    let med = median(&mut kg);
    let msg = format!("median {med}, max {max}");
    if med <= 4.0 && max <= 5.0 {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn random_graphs_near_diameter() -> Check {
    let c = &cell(
        r#"
        model = "random"
        L = [10.0]
        p = [0.025]
        instances = 30
        seed_base = 500
        "#,
    )?[0];
    let near = c
        .rows
        .iter()
        .filter(|r| r.report.k_g + 1 >= r.report.d)
        .count();
    let frac = near as f64 / c.rows.len() as f64;
    let msg = format!("{near}/{} with k_g >= D - 1", c.rows.len());
    if frac >= 0.9 {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn linear_fit(xs: &[f64], ys: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    let slope = sxy / sxx;
    (slope, sxy * sxy / (sxx * syy))
}

fn error_grows_linearly() -> Check {
    let cells = cell(
        r#"
        model = "sinr"
        L = [10.0]
        r = [1.6]
        R = [2.24]
        sigma_err = [0.0, 0.5, 1.0, 1.5, 2.0]
        instances = 30
        seed_base = 600
        "#,
    )?;
    let xs: Vec<f64> = cells.iter().map(|c| c.params.sigma_err).collect();
    let ys: Vec<f64> = cells.iter().map(|c| c.stats("kg").0).collect();
    let (slope, r2) = linear_fit(&xs, &ys);
    let msg = format!("means {ys:.2?}, slope {slope:.2}, R^2 {r2:.3}");
    if r2 >= 0.9 && slope > 0.0 {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn size_independence() -> Check {
    let cells = cell(
        r#"
        model = "sinr"
        L = [5.0, 10.0, 20.0]
        r = [1.2]
        R = [6.0]
        sigma_err = [0.5]
        instances = 30
        seed_base = 700
        "#,
    )?;
    let means: Vec<f64> = cells.iter().map(|c| c.stats("kg").0).collect();
    let lo = means.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = means.iter().cloned().fold(0.0, f64::max);
    let msg = format!("means {means:.2?}, spread {:.2}", hi - lo);
    if hi - lo <= 1.5 {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn protocol_matches_eccentricity() -> Check {
    let mut runs = 0;
    for seed in 0..100 {
        let net = random_network(seed, 60);
        let a = Analysis::new(&net).map_err(|e| e.to_string())?;
        let kg = a.geographic_eccentricity();
        for k in 1..=a.diameter.min(6) {
            let run = run_full_protocol(&net, k).map_err(|e| e.to_string())?;
            runs += 1;
            if run.succeeded() != (k >= kg) {
                return Err(format!(
                    "seed {seed} k {k}: succeeded {} but k_g {kg}",
                    run.succeeded()
                ));
            }
            if run.succeeded() {
                let sim = build_canonical(&net, k).map_err(|e| e.to_string())?;
                if !run.agrees_with(&sim) {
                    return Err(format!("seed {seed} k {k}: zones differ from canonical"));
                }
            }
        }
    }
    Ok(format!("{runs} protocol runs"))
}

fn routing_delivers_at_kg() -> Check {
    let mut pairs = 0;
    for seed in 0..20 {
        let net = random_network(seed, 60);
        let kg = Analysis::new(&net)
            .map_err(|e| e.to_string())?
            .geographic_eccentricity();
        let sim = build_canonical(&net, kg).map_err(|e| e.to_string())?;
        for s in 0..net.n() {
            for t in 0..net.n() {
                pairs += 1;
                if !route(&sim, Engine::GradientPerimeter, s, t).delivered() {
                    return Err(format!("seed {seed}: {s} -> {t} not delivered at k {kg}"));
                }
            }
        }
    }
    let sim = build_canonical(&collinear(), 1).map_err(|e| e.to_string())?;
    match route(&sim, Engine::Gradient, 0, 1).outcome {
        Outcome::DeadEnd(p) if p == Point2::new(0.5, 0.0) => {
            Ok(format!("{pairs} pairs delivered; collinear dead end"))
        }
        o => Err(format!("collinear k = 1: {o:?}")),
    }
}

fn invariants_hold() -> Check {
    for seed in 0..10 {
        let net = random_network(seed, 80);
        for k in 1..=3 {
            let sim = build_canonical(&net, k).map_err(|e| e.to_string())?;
            zone_containment(&sim, 1000, seed)?;
            delaunay_neighbors_adjacent_in_h(&sim)?;
        }
        power_graph_monotone(&net.graph, 6)?;
    }
    for seed in 0..5 {
        udg_geocasting(&unit_disc(seed, 150, 8.0, 1.2), 1.2, 5000, seed)?;
        let p = GenParams::new(
            5.0,
            LinkModel::Sinr {
                r: 1.2,
                big_r: 1.68,
            },
        );
        let net = generate(&p, seed).map_err(|e| e.to_string())?;
        quasi_udg_geocasting(&net, 20, seed)?;
    }
    Ok("zones, Delaunay boundaries, geocasting, power graphs".into())
}

fn long_links_need_more_draws() -> Check {
    let cells = cell(
        r#"
        model = "sinr"
        L = [10.0]
        r = [1.6]
        R = [2.24]
        sigma_err = [0.0, 0.25, 0.5, 0.75, 1.0]
        max_range = [2.24]
        instances = 30
        seed_base = 800
        "#,
    )?;
    let deltas: Vec<u64> = cells.iter().map(|c| c.delta_discarded()).collect();
    let msg = format!("delta {deltas:?}");
    if deltas.windows(2).all(|w| w[0] <= w[1]) {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn main() -> ExitCode {
    let checks: [(&str, fn() -> Check); 11] = [
        ("1 delaunay", delaunay_matches_brute_force),
        ("2 localities", localities_match_brute_force),
        ("3 quasi-udg", quasi_udg_bound),
        ("4 wide-sinr", wide_sinr_stays_local),
        ("5 random-graph", random_graphs_near_diameter),
        ("6 error-sweep", error_grows_linearly),
        ("7 size", size_independence),
        ("8 protocol", protocol_matches_eccentricity),
        ("9 routing", routing_delivers_at_kg),
        ("10 invariants", invariants_hold),
        ("long-links", long_links_need_more_draws),
    ];
    let mut failed = 0;
    for (name, f) in checks {
        let t = Instant::now();
        let res = f();
        let secs = t.elapsed().as_secs_f64();
        match res {
            Ok(m) => println!("PASS {name}: {m} ({secs:.1}s)"),
            Err(m) => {
                failed += 1;
                println!("FAIL {name}: {m} ({secs:.1}s)");
            }
        }
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
