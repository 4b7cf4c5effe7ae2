//! Subcommand implementations. Timings never reach stdout: they go to the
//! diagnostics and results files, so standard output is reproducible.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use letc::harness::{
    generate_synthetic, load_dataset, run_sweep, write_edge_list, write_value_table, GraphData,
    MaskScenario, SpeedDataset, SweepReport, SyntheticSpec,
};
use letc::solver::{solve, Solution, SolverConfig, TemporalModel};
use letc::{Error, Result};

use crate::config::render_manifest;
use crate::{EvaluateArgs, GenerateArgs, KrigeArgs, SelftestArgs};

fn ensure_dir(path: &Path) -> Result<()> {
    fs::create_dir_all(path).map_err(|e| Error::io(path.display().to_string(), e))
}

/// Isolated sensors get no spatial information; say so on stderr.
fn warn_isolated(ds: &SpeedDataset, graph: &letc::graph::SpatialGraph) {
    let isolated = graph.isolated_nodes();
    if isolated.is_empty() {
        return;
    }
    let named: Vec<&str> = isolated
        .iter()
        .take(5)
        .map(|&i| ds.location_ids[i].as_str())
        .collect();
    let suffix = if isolated.len() > named.len() { ", ..." } else { "" };
    eprintln!(
        "letc: {} sensor(s) have no graph neighbors ({}{}); the spatial penalty is inert there",
        isolated.len(),
        named.join(", "),
        suffix
    );
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| Error::io(path.display().to_string(), e))
}

fn render_diagnostics(solution: &Solution) -> String {
    let mut out = String::from("iteration,rel_change,mu,rank,objective,x_seconds,z_seconds,cg_residuals\n");
    for r in &solution.diagnostics.records {
        let objective = r
            .objective
            .map(|o| o.to_string())
            .unwrap_or_default();
        let residuals = r
            .cg_residuals
            .iter()
            .map(|v| format!("{v:e}"))
            .collect::<Vec<_>>()
            .join(";");
        writeln!(
            out,
            "{},{},{},{},{},{},{},{}",
            r.iteration, r.rel_change, r.mu, r.rank_k, objective, r.x_seconds, r.z_seconds, residuals
        )
        .expect("writing to a string cannot fail");
    }
    writeln!(
        out,
        "# converged = {}, iterations = {}, total_seconds = {}",
        solution.converged, solution.iterations, solution.diagnostics.total_seconds
    )
    .expect("writing to a string cannot fail");
    out
}

pub fn krige(args: &KrigeArgs) -> Result<u8> {
    let (config, graph_options) = args.solver.resolve()?;
    config.validate()?;
    let ds = load_dataset(&args.values, &args.graph, args.intervals_per_day)?;
    let spatial = ds.spatial_graph(&graph_options)?;
    warn_isolated(&ds, &spatial);
    let temporal = TemporalModel::from_config(&config, ds.intervals_per_day, ds.days)?;
    let mask = ds.observation_mask();
    let mut observed = nalgebra::DMatrix::<f64>::zeros(ds.time_points(), ds.locations());
    for (r, c) in mask.positions() {
        observed[(r, c)] = ds.values[(r, c)];
    }
    let obs = letc::solver::ObservationSet::new(observed, mask, vec![])?;
    let solution = solve(&obs, &spatial, &temporal, &config, ds.intervals_per_day)?;

    ensure_dir(&args.out)?;
    write_value_table(args.out.join("estimate.csv"), &solution.z_hat, &ds.location_ids)?;
    write_text(&args.out.join("diagnostics.txt"), &render_diagnostics(&solution))?;
    let manifest = render_manifest(
        "krige",
        &[
            ("values", args.values.display().to_string()),
            ("graph", args.graph.display().to_string()),
            ("intervals_per_day", args.intervals_per_day.to_string()),
            ("out", args.out.display().to_string()),
        ],
        &config,
        &graph_options,
    );
    write_text(&args.out.join("manifest.txt"), &manifest)?;

    let iterations = match solution.iterations {
        1 => "1 iteration".to_string(),
        n => format!("{n} iterations"),
    };
    if solution.converged {
        println!(
            "krige: converged in {iterations}; estimate written to {}",
            args.out.join("estimate.csv").display()
        );
        Ok(0)
    } else {
        println!(
            "krige: NOT converged after {iterations}; partial estimate written to {}",
            args.out.join("estimate.csv").display()
        );
        Ok(2)
    }
}

fn parse_rate_list(name: &str, spec: &str) -> Result<Vec<f64>> {
    let rates: Vec<f64> = spec
        .split(',')
        .map(|s| {
            s.trim()
                .parse::<f64>()
                .map_err(|_| Error::parameter(format!("--{name} entry '{s}' is not a number")))
        })
        .collect::<Result<_>>()?;
    if rates.is_empty() {
        return Err(Error::parameter(format!("--{name} needs at least one rate")));
    }
    Ok(rates)
}

fn parse_grid<T: std::str::FromStr>(name: &str, spec: &str) -> Result<Vec<T>> {
    spec.split(',')
        .map(|s| {
            s.trim()
                .parse::<T>()
                .map_err(|_| Error::parameter(format!("--{name} entry '{s}' is invalid")))
        })
        .collect()
}

/// Table for stdout: the fixed column order minus the wall-clock column.
fn render_stdout_table(report: &SweepReport) -> String {
    let mut out = String::from("scenario,seed,lambda1,lambda2,tau,mae,rmse,wmape,iters\n");
    for row in &report.rows {
        let (mae, rmse, wmape) = match &row.metrics {
            Some(m) => (
                format!("{:.4}", m.mae),
                format!("{:.4}", m.rmse),
                m.wmape.map(|w| format!("{w:.5}")).unwrap_or_default(),
            ),
            None => (String::new(), String::new(), String::new()),
        };
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{}",
            row.scenario, row.seed, row.lambda1, row.lambda2, row.tau, mae, rmse, wmape, row.iterations
        )
        .expect("writing to a string cannot fail");
        if let Some(err) = &row.error {
            writeln!(out, "# {} seed {}: {err}", row.scenario, row.seed)
                .expect("writing to a string cannot fail");
        }
    }
    out
}

fn render_summaries(report: &SweepReport) -> String {
    let mut out = String::from("summary: scenario lambda1 lambda2 tau runs failures mae rmse\n");
    for s in report.summaries() {
        writeln!(
            out,
            "summary: {} {} {} {} {} {} {:.4} ± {:.4} {:.4} ± {:.4}",
            s.scenario, s.lambda1, s.lambda2, s.tau, s.runs, s.failures, s.mae_mean, s.mae_std,
            s.rmse_mean, s.rmse_std
        )
        .expect("writing to a string cannot fail");
    }
    out
}

pub fn evaluate(args: &EvaluateArgs) -> Result<u8> {
    let (base_config, graph_options) = args.solver.resolve()?;
    base_config.validate()?;
    if args.repeats == 0 {
        return Err(Error::parameter("--repeats must be at least 1"));
    }
    let ds = load_dataset(&args.values, &args.graph, args.intervals_per_day)?;

    let sm = parse_rate_list("sm", &args.sm)?;
    let tm = parse_rate_list("tm", &args.tm)?;
    let em = parse_rate_list("em", &args.em)?;
    let base_seed = base_config.seed;
    let mut scenarios = Vec::new();
    for &s in &sm {
        for &t in &tm {
            for &e in &em {
                for r in 0..args.repeats as u64 {
                    scenarios.push(MaskScenario::new(s, t, e, base_seed + r));
                }
            }
        }
    }
    for sc in &scenarios {
        for (name, rate) in [("sm", sc.sm_rate), ("tm", sc.tm_rate), ("em", sc.em_rate)] {
            if !(0.0..1.0).contains(&rate) {
                return Err(Error::parameter(format!(
                    "--{name} rate {rate} must lie in [0, 1)"
                )));
            }
        }
    }

    let lambda1s = match &args.lambda1_grid {
        Some(spec) => parse_grid::<f64>("lambda1-grid", spec)?,
        None => vec![base_config.lambda1],
    };
    let lambda2s = match &args.lambda2_grid {
        Some(spec) => parse_grid::<f64>("lambda2-grid", spec)?,
        None => vec![base_config.lambda2],
    };
    let taus = match &args.tau_grid {
        Some(spec) => parse_grid::<usize>("tau-grid", spec)?,
        None => vec![base_config.tau],
    };
    let mut configs = Vec::new();
    for &l1 in &lambda1s {
        for &l2 in &lambda2s {
            for &tau in &taus {
                configs.push(SolverConfig {
                    lambda1: l1,
                    lambda2: l2,
                    tau,
                    ..base_config.clone()
                });
            }
        }
    }

    warn_isolated(&ds, &ds.spatial_graph(&graph_options)?);
    let report = run_sweep(&ds, &scenarios, &configs, &graph_options)?;
    print!("{}", render_stdout_table(&report));
    print!("{}", render_summaries(&report));

    if let Some(out) = &args.out {
        ensure_dir(out)?;
        write_text(&out.join("results.csv"), &report.to_table())?;
        let manifest = render_manifest(
            "evaluate",
            &[
                ("values", args.values.display().to_string()),
                ("graph", args.graph.display().to_string()),
                ("intervals_per_day", args.intervals_per_day.to_string()),
                ("sm", args.sm.clone()),
                ("tm", args.tm.clone()),
                ("em", args.em.clone()),
                ("repeats", args.repeats.to_string()),
                ("out", out.display().to_string()),
            ],
            &base_config,
            &graph_options,
        );
        write_text(&out.join("manifest.txt"), &manifest)?;
    }
    Ok(0)
}

pub fn generate(args: &GenerateArgs) -> Result<u8> {
    let spec = SyntheticSpec {
        locations: args.locations,
        intervals_per_day: args.intervals_per_day,
        days: args.days,
        period_days: args.period,
        noise_sd: args.noise_sd,
        seed: args.seed,
    };
    let (ds, ground) = generate_synthetic(&spec)?;
    ensure_dir(&args.out)?;
    write_value_table(args.out.join("values.csv"), &ds.values, &ds.location_ids)?;
    write_value_table(args.out.join("truth.csv"), &ground, &ds.location_ids)?;
    match &ds.graph {
        GraphData::Edges(edges) => {
            write_edge_list(args.out.join("graph.csv"), edges, &ds.location_ids)?
        }
        GraphData::Coordinates(_) => unreachable!("generator emits edge lists"),
    }
    let manifest = render_manifest(
        "generate",
        &[
            ("locations", args.locations.to_string()),
            ("intervals_per_day", args.intervals_per_day.to_string()),
            ("days", args.days.to_string()),
            ("period", args.period.to_string()),
            ("noise_sd", args.noise_sd.to_string()),
            ("seed", args.seed.to_string()),
            ("out", args.out.display().to_string()),
        ],
        &SolverConfig {
            seed: args.seed,
            period_days: args.period,
            ..SolverConfig::default()
        },
        &letc::harness::GraphOptions::default(),
    );
    write_text(&args.out.join("manifest.txt"), &manifest)?;
    println!(
        "generate: {} locations x {} time points written to {}",
        ds.locations(),
        ds.time_points(),
        args.out.display()
    );
    Ok(0)
}

pub fn selftest(args: &SelftestArgs) -> Result<u8> {
    if args.list {
        for (name, description) in letc::selftest::check_inventory() {
            println!("{name}: {description}");
        }
        return Ok(0);
    }
    let reports = letc::selftest::run_all(args.fault.as_deref())?;
    let mut failed: Vec<&str> = Vec::new();
    for r in &reports {
        println!(
            "check {}: observed {:.3e}, tolerance {:.3e} — {}",
            r.name,
            r.observed,
            r.tolerance,
            if r.passed { "ok" } else { "FAILED" }
        );
        if !r.passed {
            failed.push(r.name);
        }
    }
    if failed.is_empty() {
        println!("selftest: all {} checks passed", reports.len());
        Ok(0)
    } else {
        eprintln!("selftest: FAILED checks: {}", failed.join(", "));
        Ok(3)
    }
}
