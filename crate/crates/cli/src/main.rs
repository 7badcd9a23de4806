//! `qfridge`: trajectories, steady states, sweeps, correlations, plots and
//! figure recipes from the command line.
//!
//! Exit codes: 0 success, 1 configuration error, 2 numerical failure.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand};

use qfridge::config::{OutputFormat, SweepConfig};
use qfridge::correlations::{Bipartition, CorrelationSeries, Measure, SeriesOptions};
use qfridge::dynamics::{cross_validate, evolve_with, steady_state, EvolveOptions, Liouvillian};
use qfridge::model::{initial_state, SystemParams};
use qfridge::observables::{cold_temperature, cop, heat_current, ColdQubit, ColdSeries, CoolingSummary, CopDenominator, MinSearch};
use qfridge::parallel::Execution;
use qfridge::plot::{self, PlotData};
use qfridge::quantum::Qubit;
use qfridge::sweep::{self, grid_points, point_liouvillian};
use qfridge::{recipes, Error};

#[derive(Parser, Debug)]
#[command(name = "qfridge", version, about = "Three-qubit absorption refrigerator simulator")]
struct Cli {
    /// More log output (repeatable).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Integrate one trajectory and report cold-qubit observables.
    Evolve {
        #[command(flatten)]
        cfg: ConfigArgs,
        /// Observables CSV (t, Tc, Q1, Q2, Q3, COP).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Full state CSV (t and all 64 entries as re/im pairs).
        #[arg(long)]
        states: Option<PathBuf>,
        /// Number of log-spaced samples in the observables CSV.
        #[arg(long, default_value_t = 400)]
        samples: usize,
    },
    /// Compute one steady state.
    Steady {
        #[command(flatten)]
        cfg: ConfigArgs,
        /// Also solve by long-time integration and compare.
        #[arg(long)]
        cross_validate: bool,
    },
    /// Run a grid sweep.
    Sweep {
        #[command(flatten)]
        cfg: ConfigArgs,
        /// Output file (overrides `run.output`).
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        format: Option<OutputFormat>,
        /// Reuse matching records already present in the output file.
        #[arg(long)]
        resume: bool,
        /// Worker threads (FRIDGE_WORKERS takes precedence).
        #[arg(long)]
        workers: Option<usize>,
    },
    /// Correlation measures along one trajectory.
    Correlations {
        #[command(flatten)]
        cfg: ConfigArgs,
        /// LN, QD, Itot or W (repeatable; default all).
        #[arg(long = "measure")]
        measures: Vec<Measure>,
        /// Solo party of the bipartition.
        #[arg(long, default_value_t = 1)]
        party: u8,
        /// Sample window end (defaults to the horizon).
        #[arg(long)]
        window: Option<f64>,
        #[arg(long, default_value_t = 300)]
        samples: usize,
        /// CSV with one column per measure.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Render emitted sweep records to SVG.
    Plot {
        /// Records file (CSV or JSONL, by extension).
        input: PathBuf,
        /// Column to plot.
        #[arg(long)]
        field: String,
        /// heatmap (over x, y) or line (field against --axis).
        #[arg(long, default_value = "heatmap")]
        kind: String,
        #[arg(long, default_value = "x")]
        axis: String,
        #[arg(long)]
        group_by: Option<String>,
        /// Keep only records with `name=value` (repeatable; g, T3, x, y).
        #[arg(long = "filter")]
        filters: Vec<String>,
        #[arg(long)]
        title: Option<String>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run a shipped figure recipe.
    Repro {
        /// Figure id; `list` shows the available ones.
        figure: String,
        #[arg(long, default_value = "figures")]
        out_dir: PathBuf,
        /// Short horizons and coarse grids.
        #[arg(long)]
        quick: bool,
    },
}

/// Config file plus the flags that override it.
#[derive(Args, Debug, Default)]
struct ConfigArgs {
    /// TOML config file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Named preset (reset-canonical, reset-swapped, reset-fast, ohmic-canonical, ohmic-fast).
    #[arg(long)]
    preset: Option<String>,
    #[arg(long)]
    x: Option<f64>,
    #[arg(long)]
    y: Option<f64>,
    #[arg(long)]
    g: Option<f64>,
    #[arg(long)]
    t3: Option<f64>,
    #[arg(long)]
    horizon: Option<f64>,
    #[arg(long)]
    rel_tol: Option<f64>,
    #[arg(long)]
    abs_tol: Option<f64>,
    /// Exchange the first two canonical rates.
    #[arg(long)]
    swap: bool,
    /// Literal rates `k1,k2,k3`.
    #[arg(long, value_delimiter = ',', num_args = 3)]
    raw: Option<Vec<f64>>,
    /// Perturbation prefactors `u1,u2,u3`.
    #[arg(long, value_delimiter = ',', num_args = 3, requires = "perturb_v")]
    perturb_u: Option<Vec<f64>>,
    /// Perturbation exponents `v1,v2,v3`.
    #[arg(long, value_delimiter = ',', num_args = 3, requires = "perturb_u")]
    perturb_v: Option<Vec<f64>>,
    #[arg(long)]
    cutoff: Option<f64>,
    /// Absolute classification threshold.
    #[arg(long)]
    threshold: Option<f64>,
    /// Compute correlation maxima in sweeps.
    #[arg(long)]
    correlations: bool,
}

fn floats(v: &[f64]) -> toml::Value {
    toml::Value::Array(v.iter().map(|x| toml::Value::Float(*x)).collect())
}

impl ConfigArgs {
    fn overrides(&self) -> toml::Table {
        let mut root = toml::Table::new();
        let mut section = |name: &str, key: &str, value: toml::Value| {
            let t = root.entry(name.to_string()).or_insert_with(|| toml::Value::Table(toml::Table::new()));
            if let toml::Value::Table(t) = t {
                t.insert(key.to_string(), value);
            }
        };
        for (key, v) in [("x", self.x), ("y", self.y), ("g", self.g), ("t3", self.t3)] {
            if let Some(v) = v {
                section("grid", key, toml::Value::Float(v));
            }
        }
        for (key, v) in [("horizon", self.horizon), ("rel_tol", self.rel_tol), ("abs_tol", self.abs_tol)] {
            if let Some(v) = v {
                section("integrator", key, toml::Value::Float(v));
            }
        }
        if self.swap {
            section("rates", "swap_first_two", toml::Value::Boolean(true));
        }
        if let Some(raw) = &self.raw {
            section("rates", "raw", floats(raw));
        }
        if let Some(c) = self.cutoff {
            section("rates", "cutoff", toml::Value::Float(c));
        }
        if let (Some(u), Some(v)) = (&self.perturb_u, &self.perturb_v) {
            let mut p = toml::Table::new();
            p.insert("u".into(), floats(u));
            p.insert("v".into(), floats(v));
            section("rates", "perturbation", toml::Value::Table(p));
        }
        if let Some(t) = self.threshold {
            section("analysis", "threshold", toml::Value::Float(t));
        }
        if self.correlations {
            section("analysis", "correlations", toml::Value::Boolean(true));
        }
        if let Some(p) = &self.preset {
            root.insert("preset".into(), toml::Value::String(p.clone()));
        }
        root
    }

    fn resolve(&self) -> Result<SweepConfig, Failure> {
        let text = match &self.config {
            Some(p) => Some(
                std::fs::read_to_string(p)
                    .with_context(|| format!("cannot read config {}", p.display()))
                    .map_err(Failure::Config)?,
            ),
            None => None,
        };
        SweepConfig::resolve(text.as_deref(), self.overrides()).map_err(|e| Failure::from(Error::from(e)))
    }
}

enum Failure {
    Config(anyhow::Error),
    Numerical(anyhow::Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        if e.is_config() {
            Failure::Config(e.into())
        } else {
            Failure::Numerical(e.into())
        }
    }
}

fn io(e: impl Into<anyhow::Error>) -> Failure {
    Failure::Numerical(e.into())
}

fn single_point(cfg: &SweepConfig) -> Result<(SystemParams, Liouvillian), Failure> {
    let points = grid_points(cfg);
    if points.len() != 1 {
        return Err(Failure::Config(anyhow::anyhow!(
            "this command needs a single grid point, the config has {}; pin it with --x/--y/--g/--t3",
            points.len()
        )));
    }
    point_liouvillian(cfg, &points[0]).map_err(|e| Failure::Config(anyhow::anyhow!(e)))
}

fn print_json(v: &serde_json::Value) {
    let _ = writeln!(std::io::stdout(), "{}", serde_json::to_string_pretty(v).expect("json value serialises"));
}

fn cmd_evolve(args: &ConfigArgs, out: Option<&PathBuf>, states: Option<&PathBuf>, samples: usize) -> Result<(), Failure> {
    let cfg = args.resolve()?;
    let (params, l) = single_point(&cfg)?;
    let e1 = params.energy(Qubit::Q1);
    let opts = EvolveOptions::new(cfg.integrator.horizon).with_tolerances(cfg.tolerances());
    let traj = evolve_with(&l, &initial_state(&params), &opts).map_err(|e| Failure::from(Error::from(e)))?;
    let ss = steady_state(&l).map_err(|e| Failure::from(Error::from(e)))?;
    let t1s = cold_temperature(&ss.state, e1).value();
    let series = ColdQubit::new(&traj, e1);
    let summary = CoolingSummary::from_series(
        &series,
        params.temperatures()[0],
        t1s,
        &MinSearch::for_coupling(params.coupling()),
        cfg.threshold(),
    );
    if let Some(path) = out {
        let denom = CopDenominator::default_for(cfg.model).qubit();
        let mut w = BufWriter::new(File::create(path).map_err(io)?);
        writeln!(w, "t,Tc,Q1,Q2,Q3,COP").map_err(io)?;
        let n = samples.max(2);
        let t_max = traj.t_max();
        let t0 = (t_max * 1e-6).min(1e-2);
        for k in 0..n {
            let t = if k == 0 { 0.0 } else { (t0.ln() + (t_max / t0).ln() * (k - 1) as f64 / (n - 2).max(1) as f64).exp().min(t_max) };
            let rho = traj.eval(t).map_err(|e| Failure::from(Error::from(e)))?;
            let q: Vec<f64> = Qubit::ALL.iter().map(|&q| heat_current(&l, &rho, q)).collect();
            let c = cop(q[0], heat_current(&l, &rho, denom)).value().map(|v| v.to_string()).unwrap_or_default();
            writeln!(w, "{t},{},{},{},{},{c}", series.temperature(t).value(), q[0], q[1], q[2]).map_err(io)?;
        }
        w.flush().map_err(io)?;
    }
    if let Some(path) = states {
        traj.write_csv_full(File::create(path).map_err(io)?, 1).map_err(io)?;
    }
    print_json(&serde_json::json!({
        "preset": cfg.preset,
        "model": cfg.model,
        "summary": summary,
        "steady": { "method": ss.method, "residual": ss.residual },
        "stats": traj.stats(),
        "knots": traj.len(),
    }));
    Ok(())
}

fn cmd_steady(args: &ConfigArgs, check: bool) -> Result<(), Failure> {
    let cfg = args.resolve()?;
    let (params, l) = single_point(&cfg)?;
    let ss = steady_state(&l).map_err(|e| Failure::from(Error::from(e)))?;
    let e1 = params.energy(Qubit::Q1);
    let q: Vec<f64> = Qubit::ALL.iter().map(|&q| heat_current(&l, &ss.state, q)).collect();
    let mut report = serde_json::json!({
        "preset": cfg.preset,
        "T1s": cold_temperature(&ss.state, e1).value(),
        "method": ss.method,
        "residual": ss.residual,
        "populations": ss.state.populations(),
        "heatCurrents": q,
    });
    if check {
        let cmp = cross_validate(&l).map_err(|e| Failure::from(Error::from(e)))?;
        report["crossValidation"] = serde_json::json!({ "maxEntryDifference": cmp.max_entry_difference });
    }
    print_json(&report);
    Ok(())
}

fn cmd_sweep(
    args: &ConfigArgs,
    out: Option<&PathBuf>,
    format: Option<OutputFormat>,
    resume: bool,
    workers: Option<usize>,
) -> Result<(), Failure> {
    let mut cfg = args.resolve()?;
    if let Some(w) = workers {
        cfg.run.workers = Some(w);
    }
    if let Some(f) = format {
        cfg.run.format = f;
    }
    if let Some(o) = out {
        cfg.run.output = Some(o.clone());
    }
    let records = match &cfg.run.output {
        Some(path) => sweep::run_sweep_to_file(&cfg, path, cfg.run.format, resume),
        None => {
            let recs = sweep::run_sweep(&cfg);
            if let Ok(r) = &recs {
                sweep::emit(r, std::io::stdout().lock(), cfg.run.format).map_err(|e| Failure::from(Error::from(e)))?;
            }
            recs
        }
    }
    .map_err(|e| Failure::from(Error::from(e)))?;
    let failed = records.iter().filter(|r| r.is_error()).count();
    eprintln!("{} records ({} error rows)", records.len(), failed);
    Ok(())
}

fn cmd_correlations(
    args: &ConfigArgs,
    measures: &[Measure],
    party: u8,
    window: Option<f64>,
    samples: usize,
    out: Option<&PathBuf>,
) -> Result<(), Failure> {
    let cfg = args.resolve()?;
    let (params, l) = single_point(&cfg)?;
    let solo = Qubit::new(party).ok_or_else(|| Failure::Config(anyhow::anyhow!("party must be 1, 2 or 3")))?;
    let measures = if measures.is_empty() { Measure::ALL.to_vec() } else { measures.to_vec() };
    let horizon = window.map_or(cfg.integrator.horizon, |w| w.min(cfg.integrator.horizon));
    let opts = EvolveOptions::new(horizon).with_tolerances(cfg.tolerances());
    let traj = evolve_with(&l, &initial_state(&params), &opts).map_err(|e| Failure::from(Error::from(e)))?;
    let sopts = SeriesOptions { max_samples: samples, execution: Execution::from_env_or(Execution::Parallel), ..Default::default() };
    let mut all = Vec::new();
    for m in &measures {
        all.push(CorrelationSeries::compute(&traj, *m, Bipartition::new(solo), &sopts).map_err(|e| Failure::from(Error::from(e)))?);
    }
    if let Some(path) = out {
        let mut w = BufWriter::new(File::create(path).map_err(io)?);
        let names: Vec<&str> = measures.iter().map(|m| m.as_str()).collect();
        writeln!(w, "t,{}", names.join(",")).map_err(io)?;
        for (k, t) in all[0].times.iter().enumerate() {
            let row: Vec<String> = all.iter().map(|s| s.values[k].to_string()).collect();
            writeln!(w, "{t},{}", row.join(",")).map_err(io)?;
        }
        w.flush().map_err(io)?;
    }
    let maxima: serde_json::Map<String, serde_json::Value> = all
        .iter()
        .map(|s| (s.measure.as_str().to_string(), serde_json::json!({ "max": s.max_value, "tAtMax": s.t_at_max })))
        .collect();
    print_json(&serde_json::json!({ "bipartition": Bipartition::new(solo).to_string(), "maxima": maxima }));
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn cmd_plot(
    input: &std::path::Path,
    field: &str,
    kind: &str,
    axis: &str,
    group_by: Option<&str>,
    filters: &[String],
    title: Option<&str>,
    out: &std::path::Path,
) -> Result<(), Failure> {
    let format = if input.extension().is_some_and(|e| e == "jsonl") { OutputFormat::Jsonl } else { OutputFormat::Csv };
    let mut records = sweep::read_records(input, format).map_err(|e| Failure::Config(e.into()))?;
    for f in filters {
        let (name, value) = f
            .split_once('=')
            .ok_or_else(|| Failure::Config(anyhow::anyhow!("filter '{f}' is not name=value")))?;
        let value: f64 = value.parse().map_err(|_| Failure::Config(anyhow::anyhow!("filter value '{value}' is not a number")))?;
        let mut kept = Vec::new();
        for r in records {
            let v = plot::record_field(&r, name).map_err(|e| Failure::from(Error::from(e)))?;
            if v.is_some_and(|v| (v - value).abs() <= 1e-12 * value.abs().max(1.0)) {
                kept.push(r);
            }
        }
        records = kept;
    }
    let title = title.unwrap_or(field);
    let data = match kind {
        "heatmap" => PlotData::Heatmap(plot::heatmap_from_records(&records, field, title).map_err(|e| Failure::from(Error::from(e)))?),
        "line" => PlotData::Line(
            plot::line_from_records(&records, axis, field, group_by, title).map_err(|e| Failure::from(Error::from(e)))?,
        ),
        other => return Err(Failure::Config(anyhow::anyhow!("unknown plot kind '{other}' (heatmap or line)"))),
    };
    plot::render_plot(&data, out).map_err(|e| Failure::from(Error::from(e)))?;
    Ok(())
}

fn cmd_repro(figure: &str, out_dir: &std::path::Path, quick: bool) -> Result<(), Failure> {
    if figure == "list" {
        for r in recipes::RECIPES {
            let _ = writeln!(std::io::stdout(), "{:<12} {}", r.id, r.description);
        }
        return Ok(());
    }
    let ids: Vec<&str> = if figure == "all" { recipes::RECIPES.iter().map(|r| r.id).collect() } else { vec![figure] };
    for id in ids {
        let files = recipes::run(id, out_dir, quick, Execution::from_env_or(Execution::Parallel))
            .map_err(|e| Failure::from(Error::from(e)))?;
        for f in files {
            let _ = writeln!(std::io::stdout(), "{}", f.display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    let result = match &cli.command {
        Command::Evolve { cfg, out, states, samples } => cmd_evolve(cfg, out.as_ref(), states.as_ref(), *samples),
        Command::Steady { cfg, cross_validate } => cmd_steady(cfg, *cross_validate),
        Command::Sweep { cfg, out, format, resume, workers } => cmd_sweep(cfg, out.as_ref(), *format, *resume, *workers),
        Command::Correlations { cfg, measures, party, window, samples, out } => {
            cmd_correlations(cfg, measures, *party, *window, *samples, out.as_ref())
        }
        Command::Plot { input, field, kind, axis, group_by, filters, title, out } => {
            cmd_plot(input, field, kind, axis, group_by.as_deref(), filters, title.as_deref(), out)
        }
        Command::Repro { figure, out_dir, quick } => cmd_repro(figure, out_dir, *quick),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Config(e)) => {
            eprintln!("config error: {e:#}");
            ExitCode::from(1)
        }
        Err(Failure::Numerical(e)) => {
            eprintln!("numerical failure: {e:#}");
            ExitCode::from(2)
        }
    }
}
