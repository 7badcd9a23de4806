//! Figure recipes: one command per published figure panel group.
//!
//! Each recipe writes its data (CSV) and an SVG next to it. `quick` shrinks
//! horizons and grids so the whole set runs in seconds; the shapes of the
//! outputs are the same.

use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::config::{Axis, ConfigError, Perturbation, SweepConfig};
use crate::correlations::{Bipartition, CorrelationError, CorrelationSeries, Measure, SeriesOptions};
use crate::dynamics::{evolve_with, DynamicsError, EvolveOptions, Liouvillian, Trajectory};
use crate::model::{initial_state, SystemParams};
use crate::observables::{cop, heat_current, ColdQubit, ColdSeries, CopDenominator};
use crate::parallel::Execution;
use crate::plot::{self, heatmap_from_records, LinePlot, LineSeries, PlotData, PlotError};
use crate::quantum::Qubit;
use crate::sweep::{self, emit, point_liouvillian, GridPoint, SweepError, SweepRecord};

#[derive(Debug, Error)]
pub enum RecipeError {
    #[error("unknown figure '{0}'")]
    Unknown(String),
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Sweep(#[from] SweepError),
    #[error(transparent)]
    Plot(#[from] PlotError),
    #[error(transparent)]
    Dynamics(#[from] DynamicsError),
    #[error(transparent)]
    Correlation(#[from] CorrelationError),
    #[error("{0}")]
    Point(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

pub struct Recipe {
    pub id: &'static str,
    pub description: &'static str,
    run: fn(&Ctx) -> Result<Vec<PathBuf>, RecipeError>,
}

pub const RECIPES: &[Recipe] = &[
    Recipe { id: "fig1a", description: "reset: T_c(t) at (3.5, 2.5) for several g", run: fig1a },
    Recipe { id: "fig1b", description: "reset: T_c(t) under small rate perturbations", run: fig1b },
    Recipe { id: "fig2", description: "reset: T1s, Tmin, tmin over the (x, y) plane", run: fig2 },
    Recipe { id: "fig3", description: "reset: Tmin and tmin against T3", run: fig3 },
    Recipe { id: "fig4a", description: "reset, fast cooling: T_c(t) with literal rates", run: fig4a },
    Recipe { id: "fig4bc", description: "reset, swapped rates: T1s and tHalf over (x, y)", run: fig4bc },
    Recipe { id: "fig4de", description: "reset: cooling power and COP, transient vs swapped", run: fig4de },
    Recipe { id: "fig5a", description: "ohmic: T_c(t) at (4, 1) for 0.5 <= g <= 1.5", run: fig5a },
    Recipe { id: "fig5b", description: "ohmic: T_c(t) under small coupling perturbations", run: fig5b },
    Recipe { id: "fig5c", description: "ohmic, swapped couplings: T_c(t)", run: fig5c },
    Recipe { id: "fig5d", description: "ohmic: COP at g = 0.8, transient vs swapped", run: fig5d },
    Recipe { id: "fig6", description: "ohmic: T1s over (x, y), both configurations", run: fig6 },
    Recipe { id: "fig7", description: "correlations along reset and ohmic trajectories", run: fig7 },
    Recipe { id: "fig7-insets", description: "reset: correlation maxima over (x, y)", run: fig7_insets },
];

const FIG2: &str = include_str!("../recipes/fig2.toml");
const FIG3: &str = include_str!("../recipes/fig3.toml");
const FIG4: &str = include_str!("../recipes/fig4.toml");
const FIG6A: &str = include_str!("../recipes/fig6a.toml");
const FIG6B: &str = include_str!("../recipes/fig6b.toml");
const FIG7_INSETS: &str = include_str!("../recipes/fig7-insets.toml");

/// Shipped sweep configs by name.
pub fn shipped_configs() -> [(&'static str, &'static str); 6] {
    [
        ("fig2", FIG2),
        ("fig3", FIG3),
        ("fig4", FIG4),
        ("fig6a", FIG6A),
        ("fig6b", FIG6B),
        ("fig7-insets", FIG7_INSETS),
    ]
}

pub fn find(id: &str) -> Result<&'static Recipe, RecipeError> {
    RECIPES.iter().find(|r| r.id == id).ok_or_else(|| RecipeError::Unknown(id.to_string()))
}

/// Runs a recipe into `out_dir`; returns the files written.
pub fn run(id: &str, out_dir: &Path, quick: bool, execution: Execution) -> Result<Vec<PathBuf>, RecipeError> {
    let recipe = find(id)?;
    std::fs::create_dir_all(out_dir)?;
    (recipe.run)(&Ctx { out: out_dir.to_path_buf(), quick, execution })
}

struct Ctx {
    out: PathBuf,
    quick: bool,
    execution: Execution,
}

impl Ctx {
    fn path(&self, name: &str) -> PathBuf {
        self.out.join(name)
    }

    /// Quick mode: short horizon and at most `n` values per axis.
    fn shrink(&self, mut cfg: SweepConfig, horizon: f64, n: usize) -> SweepConfig {
        if self.quick {
            cfg.integrator.horizon = cfg.integrator.horizon.min(horizon);
            let thin = |a: &Axis| {
                let v = a.values();
                if v.len() <= n {
                    a.clone()
                } else {
                    let step = (v.len() - 1) as f64 / (n - 1).max(1) as f64;
                    Axis::Values((0..n).map(|k| v[(k as f64 * step).round() as usize]).collect())
                }
            };
            cfg.grid.x = thin(&cfg.grid.x);
            cfg.grid.y = thin(&cfg.grid.y);
            cfg.grid.g = thin(&cfg.grid.g);
            cfg.grid.t3 = cfg.grid.t3.as_ref().map(thin);
            cfg.analysis.correlation_samples = cfg.analysis.correlation_samples.min(40);
        }
        cfg.run.workers = None;
        cfg
    }

    fn sweep(&self, mut cfg: SweepConfig, name: &str) -> Result<(Vec<SweepRecord>, PathBuf), RecipeError> {
        cfg.run.workers = None;
        let records = sweep::run_sweep_with(&cfg, self.execution)?;
        let path = self.path(&format!("{name}.csv"));
        emit(&records, std::fs::File::create(&path)?, cfg.run.format)?;
        Ok((records, path))
    }

    fn horizon(&self, full: f64, quick: f64) -> f64 {
        if self.quick { quick } else { full }
    }

    fn write_line(&self, plot: LinePlot, name: &str) -> Result<Vec<PathBuf>, RecipeError> {
        let csv_path = self.path(&format!("{name}.csv"));
        let mut w = csv::Writer::from_path(&csv_path).map_err(|e| RecipeError::Io(e.into()))?;
        let io = |e: csv::Error| RecipeError::Io(e.into());
        w.write_record(["series", plot.x_label.as_str(), plot.y_label.as_str()]).map_err(io)?;
        for s in &plot.series {
            for (x, y) in &s.points {
                w.write_record([s.label.clone(), x.to_string(), y.to_string()]).map_err(io)?;
            }
        }
        w.flush()?;
        let svg = self.path(&format!("{name}.svg"));
        plot::render_plot(&PlotData::Line(plot), &svg)?;
        Ok(vec![csv_path, svg])
    }

    fn heatmaps(&self, records: &[SweepRecord], fields: &[(&str, &str)], stem: &str) -> Result<Vec<PathBuf>, RecipeError> {
        let mut out = Vec::new();
        for (field, title) in fields {
            let h = heatmap_from_records(records, field, title)?;
            let svg = self.path(&format!("{stem}-{field}.svg"));
            plot::render_plot(&PlotData::Heatmap(h), &svg)?;
            out.push(svg);
        }
        Ok(out)
    }
}

/// Log-spaced sample times on `[t0, t1]`.
fn log_times(t0: f64, t1: f64, n: usize) -> Vec<f64> {
    let (a, b) = (t0.ln(), t1.ln());
    (0..n).map(|k| (a + (b - a) * k as f64 / (n - 1) as f64).exp().min(t1)).collect()
}

fn run_point(cfg: &SweepConfig, x: f64, y: f64, g: f64, horizon: f64) -> Result<(SystemParams, Liouvillian, Trajectory), RecipeError> {
    let p = GridPoint { index: [0; 4], x, y, g, t3: cfg.system.temperatures[2] };
    let (params, l) = point_liouvillian(cfg, &p).map_err(RecipeError::Point)?;
    let traj = evolve_with(&l, &initial_state(&params), &EvolveOptions::new(horizon).with_tolerances(cfg.tolerances()))?;
    Ok((params, l, traj))
}

fn cold_series(traj: &Trajectory, e1: f64, t0: f64, n: usize) -> Vec<(f64, f64)> {
    let c = ColdQubit::new(traj, e1);
    log_times(t0, traj.t_max(), n).into_iter().map(|t| (t, c.temperature(t).value())).collect()
}

fn tc_plot(
    ctx: &Ctx,
    configs: &[(String, SweepConfig, f64)],
    horizon: f64,
    title: &str,
    name: &str,
) -> Result<Vec<PathBuf>, RecipeError> {
    let n = if ctx.quick { 60 } else { 400 };
    let series = crate::parallel::map(configs, ctx.execution, |(label, cfg, g)| {
        let (params, _, traj) = run_point(cfg, cfg.grid.x.values()[0], cfg.grid.y.values()[0], *g, horizon)?;
        Ok::<_, RecipeError>(LineSeries { label: label.clone(), points: cold_series(&traj, params.energy(Qubit::Q1), 1e-2, n) })
    })
    .into_iter()
    .collect::<Result<Vec<_>, _>>()?;
    ctx.write_line(
        LinePlot { title: title.into(), x_label: "t".into(), y_label: "T_c".into(), log_x: true, series },
        name,
    )
}

fn g_configs(preset: &str, gs: &[f64]) -> Result<Vec<(String, SweepConfig, f64)>, RecipeError> {
    let cfg = SweepConfig::preset(preset)?;
    Ok(gs.iter().map(|&g| (format!("g={g}"), cfg.clone(), g)).collect())
}

fn fig1a(ctx: &Ctx) -> Result<Vec<PathBuf>, RecipeError> {
    let gs: &[f64] = if ctx.quick { &[1e-2] } else { &[1e-2, 5e-3, 1e-3] };
    tc_plot(ctx, &g_configs("reset-canonical", gs)?, ctx.horizon(1e5, 3e3), "Reset model, (x, y) = (3.5, 2.5)", "fig1a")
}

fn perturbed(preset: &str, g: f64, vs: &[[f64; 3]]) -> Result<Vec<(String, SweepConfig, f64)>, RecipeError> {
    let base = SweepConfig::preset(preset)?;
    let mut out = vec![("unperturbed".to_string(), base.clone(), g)];
    for v in vs {
        let mut c = base.clone();
        c.rates.perturbation = Some(Perturbation { u: [1.0; 3], v: *v });
        out.push((format!("v=({}, {}, {})", v[0], v[1], v[2]), c, g));
    }
    Ok(out)
}

fn fig1b(ctx: &Ctx) -> Result<Vec<PathBuf>, RecipeError> {
    let cfgs = perturbed("reset-canonical", 1e-2, &[[5.0, 7.0, 3.0], [4.0, 6.0, 2.0]])?;
    tc_plot(ctx, &cfgs, ctx.horizon(1e5, 3e3), "Reset model, perturbed rates, g = 0.01", "fig1b")
}

fn fig2(ctx: &Ctx) -> Result<Vec<PathBuf>, RecipeError> {
    let cfg = ctx.shrink(SweepConfig::from_toml(FIG2)?, 2e3, 3);
    let (records, csv) = ctx.sweep(cfg, "fig2")?;
    let mut out = vec![csv];
    out.extend(ctx.heatmaps(&records, &[("T1s", "T1s, g = 0.01"), ("Tmin", "Tmin, g = 0.01"), ("tmin", "tmin, g = 0.01")], "fig2")?);
    Ok(out)
}

fn fig3(ctx: &Ctx) -> Result<Vec<PathBuf>, RecipeError> {
    let cfg = ctx.shrink(SweepConfig::from_toml(FIG3)?, 3e3, 2);
    let (records, csv) = ctx.sweep(cfg, "fig3")?;
    let mut out = vec![csv];
    for (field, stem) in [("Tmin", "fig3a"), ("tmin", "fig3b")] {
        let mut series: Vec<LineSeries> = Vec::new();
        for r in records.iter().filter(|r| !r.is_error()) {
            let label = format!("(x, y) = ({}, {}), g = {}", r.x, r.y, r.g);
            let v = plot::record_field(r, field)?.unwrap_or(f64::NAN);
            match series.iter_mut().find(|s| s.label == label) {
                Some(s) => s.points.push((r.t3, v)),
                None => series.push(LineSeries { label, points: vec![(r.t3, v)] }),
            }
        }
        let p = LinePlot { title: format!("{field} against T3"), x_label: "T3".into(), y_label: field.into(), log_x: true, series };
        let svg = ctx.path(&format!("{stem}.svg"));
        plot::render_plot(&PlotData::Line(p), &svg)?;
        out.push(svg);
    }
    Ok(out)
}

fn fig4a(ctx: &Ctx) -> Result<Vec<PathBuf>, RecipeError> {
    let gs: &[f64] = if ctx.quick { &[1e-2] } else { &[1e-3, 5e-3, 1e-2] };
    tc_plot(ctx, &g_configs("reset-fast", gs)?, ctx.horizon(1e5, 3e3), "Reset model, fast cooling, literal rates", "fig4a")
}

fn fig4bc(ctx: &Ctx) -> Result<Vec<PathBuf>, RecipeError> {
    let cfg = ctx.shrink(SweepConfig::from_toml(FIG4)?, 3e3, 3);
    let (records, csv) = ctx.sweep(cfg, "fig4")?;
    let mut out = vec![csv];
    out.extend(ctx.heatmaps(&records, &[("T1s", "T1s, swapped rates"), ("tHalf", "half-time, swapped rates")], "fig4")?);
    Ok(out)
}

/// `(Q1(t), COP(t))` at log-spaced times.
fn currents(l: &Liouvillian, traj: &Trajectory, n: usize) -> Result<Vec<(f64, f64, Option<f64>)>, RecipeError> {
    let denom = CopDenominator::default_for(l.kind()).qubit();
    log_times(1e-2, traj.t_max(), n)
        .into_iter()
        .map(|t| {
            let rho = traj.eval(t)?;
            let q1 = heat_current(l, &rho, Qubit::Q1);
            Ok((t, q1, cop(q1, heat_current(l, &rho, denom)).value()))
        })
        .collect()
}

fn cop_figure(
    ctx: &Ctx,
    pair: [(&str, &str); 2],
    g: f64,
    horizon: f64,
    name_power: Option<&str>,
    name_cop: &str,
) -> Result<Vec<PathBuf>, RecipeError> {
    let n = if ctx.quick { 50 } else { 300 };
    let mut power = Vec::new();
    let mut eff = Vec::new();
    for (label, preset) in pair {
        let cfg = SweepConfig::preset(preset)?;
        let (_, l, traj) = run_point(&cfg, cfg.grid.x.values()[0], cfg.grid.y.values()[0], g, horizon)?;
        let rows = currents(&l, &traj, n)?;
        power.push(LineSeries { label: label.into(), points: rows.iter().map(|r| (r.0, r.1)).collect() });
        eff.push(LineSeries { label: label.into(), points: rows.iter().filter_map(|r| r.2.map(|c| (r.0, c))).collect() });
    }
    let mut out = Vec::new();
    if let Some(name) = name_power {
        out.extend(ctx.write_line(
            LinePlot { title: format!("Cooling power Q1, g = {g}"), x_label: "t".into(), y_label: "Q1".into(), log_x: true, series: power },
            name,
        )?);
    }
    out.extend(ctx.write_line(
        LinePlot { title: format!("COP, g = {g}"), x_label: "t".into(), y_label: "COP".into(), log_x: true, series: eff },
        name_cop,
    )?);
    Ok(out)
}

fn fig4de(ctx: &Ctx) -> Result<Vec<PathBuf>, RecipeError> {
    cop_figure(
        ctx,
        [("transient only", "reset-canonical"), ("swapped rates", "reset-swapped")],
        1e-2,
        ctx.horizon(1e5, 3e3),
        Some("fig4d"),
        "fig4e",
    )
}

fn fig5a(ctx: &Ctx) -> Result<Vec<PathBuf>, RecipeError> {
    let gs: &[f64] = if ctx.quick { &[1.5] } else { &[0.5, 0.8, 1.2, 1.5] };
    tc_plot(ctx, &g_configs("ohmic-canonical", gs)?, ctx.horizon(5e4, 50.0), "Ohmic baths, (x, y) = (4, 1)", "fig5a")
}

fn fig5b(ctx: &Ctx) -> Result<Vec<PathBuf>, RecipeError> {
    let cfgs = perturbed("ohmic-canonical", 1.5, &[[6.0, 7.0, 5.0], [5.0, 6.0, 4.0]])?;
    tc_plot(ctx, &cfgs, ctx.horizon(5e4, 50.0), "Ohmic baths, perturbed couplings, g = 1.5", "fig5b")
}

fn fig5c(ctx: &Ctx) -> Result<Vec<PathBuf>, RecipeError> {
    let gs: &[f64] = if ctx.quick { &[0.5] } else { &[0.5, 0.8, 1.2, 1.5] };
    tc_plot(ctx, &g_configs("ohmic-fast", gs)?, ctx.horizon(5e4, 50.0), "Ohmic baths, swapped couplings", "fig5c")
}

fn fig5d(ctx: &Ctx) -> Result<Vec<PathBuf>, RecipeError> {
    cop_figure(
        ctx,
        [("transient only", "ohmic-canonical"), ("swapped couplings", "ohmic-fast")],
        0.8,
        ctx.horizon(5e4, 50.0),
        None,
        "fig5d",
    )
}

fn fig6(ctx: &Ctx) -> Result<Vec<PathBuf>, RecipeError> {
    let mut out = Vec::new();
    for (text, stem) in [(FIG6A, "fig6a"), (FIG6B, "fig6b")] {
        let cfg = ctx.shrink(SweepConfig::from_toml(text)?, 50.0, 2);
        let (records, csv) = ctx.sweep(cfg, stem)?;
        out.push(csv);
        out.extend(ctx.heatmaps(&records, &[("T1s", "T1s")], stem)?);
    }
    Ok(out)
}

fn fig7(ctx: &Ctx) -> Result<Vec<PathBuf>, RecipeError> {
    let samples = if ctx.quick { 40 } else { 300 };
    let reset = SweepConfig::preset("reset-canonical")?;
    let ohmic = SweepConfig::preset("ohmic-canonical")?;
    let (_, _, rt) = run_point(&reset, 3.5, 2.5, 1e-2, ctx.horizon(500.0, 300.0))?;
    let (_, _, ot) = run_point(&ohmic, 4.0, 1.0, 0.5, ctx.horizon(500.0, 30.0))?;
    let opts = SeriesOptions { max_samples: samples, execution: ctx.execution, ..Default::default() };
    let series = |traj: &Trajectory, m: Measure, label: &str| -> Result<LineSeries, RecipeError> {
        let s = CorrelationSeries::compute(traj, m, Bipartition::ONE_REST, &opts)?;
        Ok(LineSeries { label: label.into(), points: s.times.iter().copied().zip(s.values.iter().copied()).collect() })
    };
    let panels: [(&str, &str, Vec<(&Trajectory, Measure, &str)>); 6] = [
        ("fig7a", "Log negativity 1:23, reset", vec![(&rt, Measure::LogNegativity, "reset")]),
        ("fig7b", "Discord 1:23, reset", vec![(&rt, Measure::Discord, "reset")]),
        ("fig7c", "Discord 1:23, ohmic", vec![(&ot, Measure::Discord, "ohmic")]),
        ("fig7d", "Total mutual information, reset", vec![(&rt, Measure::TotalMutualInfo, "reset")]),
        ("fig7e", "Total mutual information, ohmic", vec![(&ot, Measure::TotalMutualInfo, "ohmic")]),
        ("fig7f", "Witness W", vec![(&rt, Measure::Witness, "reset"), (&ot, Measure::Witness, "ohmic")]),
    ];
    let mut out = Vec::new();
    for (name, title, lines) in panels {
        let mut ss = Vec::new();
        for (traj, m, label) in lines {
            ss.push(series(traj, m, label)?);
        }
        let y = lines_measure(name);
        out.extend(ctx.write_line(LinePlot { title: title.into(), x_label: "t".into(), y_label: y.into(), log_x: false, series: ss }, name)?);
    }
    Ok(out)
}

fn lines_measure(panel: &str) -> &'static str {
    match panel {
        "fig7a" => "LN",
        "fig7b" | "fig7c" => "QD",
        "fig7d" | "fig7e" => "Itot",
        _ => "W",
    }
}

fn fig7_insets(ctx: &Ctx) -> Result<Vec<PathBuf>, RecipeError> {
    let cfg = ctx.shrink(SweepConfig::from_toml(FIG7_INSETS)?, 300.0, 2);
    let (records, csv) = ctx.sweep(cfg, "fig7-insets")?;
    let mut out = vec![csv];
    out.extend(ctx.heatmaps(
        &records,
        &[("LNmax", "max LN 1:23, t <= 500"), ("QDmax", "max QD 1:23, t <= 500"), ("ItotMax", "max Itot, t <= 500")],
        "fig7-insets",
    )?);
    Ok(out)
}
