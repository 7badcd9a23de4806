//! Minimal standalone SVG line plots and heatmaps.

use std::fmt::Write as _;
use std::path::Path;

use thiserror::Error;

use crate::sweep::SweepRecord;

const WIDTH: f64 = 720.0;
const HEIGHT: f64 = 480.0;
const MARGIN_L: f64 = 80.0;
const MARGIN_R: f64 = 150.0;
const MARGIN_T: f64 = 40.0;
const MARGIN_B: f64 = 60.0;

const PALETTE: [&str; 8] = ["#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#17becf"];

#[derive(Debug, Error)]
pub enum PlotError {
    #[error("nothing to plot")]
    Empty,
    #[error("grid shape mismatch: {0}")]
    Shape(String),
    #[error("log axis needs positive values, got {0}")]
    NonPositive(f64),
    #[error("unknown record field '{0}'")]
    UnknownField(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, PartialEq)]
pub struct LineSeries {
    pub label: String,
    pub points: Vec<(f64, f64)>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct LinePlot {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub log_x: bool,
    pub series: Vec<LineSeries>,
}

/// Values on an `xs × ys` grid; `values[j][i]` sits at `(xs[i], ys[j])`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Heatmap {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub value_label: String,
    pub xs: Vec<f64>,
    pub ys: Vec<f64>,
    pub values: Vec<Vec<Option<f64>>>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum PlotData {
    Line(LinePlot),
    Heatmap(Heatmap),
}

pub fn render(data: &PlotData) -> Result<String, PlotError> {
    match data {
        PlotData::Line(p) => render_line(p),
        PlotData::Heatmap(h) => render_heatmap(h),
    }
}

pub fn render_plot(data: &PlotData, out: &Path) -> Result<(), PlotError> {
    let svg = render(data)?;
    if let Some(parent) = out.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent)?;
    }
    std::fs::write(out, svg)?;
    Ok(())
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

/// Padded range; a degenerate span gets a unit (or relative) window.
fn range(values: impl Iterator<Item = f64>) -> Option<(f64, f64)> {
    let (lo, hi) = values.filter(|v| v.is_finite()).fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)));
    if lo > hi {
        return None;
    }
    if hi - lo <= 1e-12 * lo.abs().max(1.0) {
        let pad = if lo == 0.0 { 0.5 } else { 0.05 * lo.abs() };
        return Some((lo - pad, hi + pad));
    }
    Some((lo, hi))
}

/// About five round ticks covering `[lo, hi]`.
fn ticks(lo: f64, hi: f64) -> Vec<f64> {
    let raw = (hi - lo) / 5.0;
    let mag = 10f64.powf(raw.log10().floor());
    let step = [1.0, 2.0, 5.0, 10.0].iter().map(|m| m * mag).find(|s| *s >= raw).unwrap_or(10.0 * mag);
    let start = (lo / step).ceil() as i64;
    let end = (hi / step).floor() as i64;
    (start..=end).map(|k| k as f64 * step).collect()
}

fn fmt_tick(v: f64) -> String {
    if v == 0.0 {
        "0".into()
    } else if v.abs() >= 1e4 || v.abs() < 1e-3 {
        format!("{v:.0e}")
    } else {
        let s = format!("{v:.4}");
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    }
}

struct Frame {
    x: (f64, f64),
    y: (f64, f64),
    log_x: bool,
}

impl Frame {
    fn px(&self, x: f64) -> f64 {
        let x = if self.log_x { x.log10() } else { x };
        MARGIN_L + (x - self.x.0) / (self.x.1 - self.x.0) * (WIDTH - MARGIN_L - MARGIN_R)
    }

    fn py(&self, y: f64) -> f64 {
        HEIGHT - MARGIN_B - (y - self.y.0) / (self.y.1 - self.y.0) * (HEIGHT - MARGIN_T - MARGIN_B)
    }
}

fn header(svg: &mut String, title: &str) {
    let _ = write!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = write!(svg, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = write!(svg, r#"<text x="{}" y="24" text-anchor="middle" font-size="15">{}</text>"#, WIDTH / 2.0, escape(title));
}

fn axes(svg: &mut String, f: &Frame, x_label: &str, y_label: &str) {
    let (x0, x1) = (MARGIN_L, WIDTH - MARGIN_R);
    let (y0, y1) = (HEIGHT - MARGIN_B, MARGIN_T);
    let _ = write!(svg, r#"<rect x="{x0}" y="{y1}" width="{}" height="{}" fill="none" stroke="black"/>"#, x1 - x0, y0 - y1);
    for t in ticks(f.x.0, f.x.1) {
        let (px, label) = if f.log_x {
            (MARGIN_L + (t - f.x.0) / (f.x.1 - f.x.0) * (x1 - x0), fmt_tick(10f64.powf(t)))
        } else {
            (f.px(t), fmt_tick(t))
        };
        let _ = write!(svg, r#"<line x1="{px:.2}" y1="{y0}" x2="{px:.2}" y2="{}" stroke="black"/>"#, y0 + 5.0);
        let _ = write!(svg, r#"<text x="{px:.2}" y="{}" text-anchor="middle">{label}</text>"#, y0 + 18.0);
    }
    for t in ticks(f.y.0, f.y.1) {
        let py = f.py(t);
        let _ = write!(svg, r#"<line x1="{}" y1="{py:.2}" x2="{x0}" y2="{py:.2}" stroke="black"/>"#, x0 - 5.0);
        let _ = write!(svg, r#"<text x="{}" y="{:.2}" text-anchor="end">{}</text>"#, x0 - 8.0, py + 4.0, fmt_tick(t));
    }
    let _ = write!(svg, r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#, (x0 + x1) / 2.0, HEIGHT - 15.0, escape(x_label));
    let _ = write!(
        svg,
        r#"<text x="20" y="{0}" text-anchor="middle" transform="rotate(-90 20 {0})">{1}</text>"#,
        (y0 + y1) / 2.0,
        escape(y_label)
    );
}

pub fn render_line(p: &LinePlot) -> Result<String, PlotError> {
    let all = || p.series.iter().flat_map(|s| s.points.iter().copied());
    if all().next().is_none() {
        return Err(PlotError::Empty);
    }
    if p.log_x {
        if let Some((x, _)) = all().find(|(x, _)| *x <= 0.0) {
            return Err(PlotError::NonPositive(x));
        }
    }
    let xr = range(all().map(|(x, _)| if p.log_x { x.log10() } else { x })).ok_or(PlotError::Empty)?;
    let yr = range(all().map(|(_, y)| y)).ok_or(PlotError::Empty)?;
    let f = Frame { x: xr, y: yr, log_x: p.log_x };
    let mut svg = String::new();
    header(&mut svg, &p.title);
    axes(&mut svg, &f, &p.x_label, &p.y_label);
    for (k, s) in p.series.iter().enumerate() {
        let color = PALETTE[k % PALETTE.len()];
        let pts: Vec<String> = s
            .points
            .iter()
            .filter(|(x, y)| x.is_finite() && y.is_finite())
            .map(|&(x, y)| format!("{:.2},{:.2}", f.px(x), f.py(y)))
            .collect();
        match pts.len() {
            0 => {}
            // one point still draws: a zero-length segment with a marker
            1 => {
                let _ = write!(svg, r#"<polyline points="{0} {0}" fill="none" stroke="{color}" stroke-width="1.5"/>"#, pts[0]);
                let (cx, cy) = pts[0].split_once(',').unwrap();
                let _ = write!(svg, r#"<circle cx="{cx}" cy="{cy}" r="3" fill="{color}"/>"#);
            }
            _ => {
                let _ = write!(svg, r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="1.5"/>"#, pts.join(" "));
            }
        }
        let ly = MARGIN_T + 16.0 + 18.0 * k as f64;
        let lx = WIDTH - MARGIN_R + 12.0;
        let _ = write!(svg, r#"<line x1="{lx}" y1="{ly}" x2="{}" y2="{ly}" stroke="{color}" stroke-width="2"/>"#, lx + 20.0);
        let _ = write!(svg, r#"<text x="{}" y="{}">{}</text>"#, lx + 26.0, ly + 4.0, escape(&s.label));
    }
    svg.push_str("</svg>\n");
    Ok(svg)
}

/// Simple five-stop perceptual ramp.
fn color(t: f64) -> String {
    const STOPS: [(f64, f64, f64); 5] =
        [(68.0, 1.0, 84.0), (59.0, 82.0, 139.0), (33.0, 145.0, 140.0), (94.0, 201.0, 98.0), (253.0, 231.0, 37.0)];
    let t = t.clamp(0.0, 1.0) * 4.0;
    let k = (t.floor() as usize).min(3);
    let f = t - k as f64;
    let (a, b) = (STOPS[k], STOPS[k + 1]);
    let mix = |u: f64, v: f64| (u + (v - u) * f).round() as u8;
    format!("#{:02x}{:02x}{:02x}", mix(a.0, b.0), mix(a.1, b.1), mix(a.2, b.2))
}

fn cell_edges(c: &[f64]) -> Vec<f64> {
    if c.len() == 1 {
        return vec![c[0] - 0.5, c[0] + 0.5];
    }
    let mut e = vec![c[0] - (c[1] - c[0]) / 2.0];
    e.extend(c.windows(2).map(|w| (w[0] + w[1]) / 2.0));
    e.push(c[c.len() - 1] + (c[c.len() - 1] - c[c.len() - 2]) / 2.0);
    e
}

pub fn render_heatmap(h: &Heatmap) -> Result<String, PlotError> {
    if h.xs.is_empty() || h.ys.is_empty() {
        return Err(PlotError::Empty);
    }
    if h.values.len() != h.ys.len() || h.values.iter().any(|row| row.len() != h.xs.len()) {
        return Err(PlotError::Shape(format!(
            "{} x-values and {} y-values but {} rows of lengths {:?}",
            h.xs.len(),
            h.ys.len(),
            h.values.len(),
            h.values.iter().map(Vec::len).collect::<Vec<_>>()
        )));
    }
    let xe = cell_edges(&h.xs);
    let ye = cell_edges(&h.ys);
    let f = Frame {
        x: range(xe.iter().copied()).unwrap(),
        y: range(ye.iter().copied()).unwrap(),
        log_x: false,
    };
    let (vlo, vhi) = range(h.values.iter().flatten().flatten().copied()).unwrap_or((0.0, 1.0));
    let mut svg = String::new();
    header(&mut svg, &h.title);
    for (j, row) in h.values.iter().enumerate() {
        for (i, v) in row.iter().enumerate() {
            let (x0, x1) = (f.px(xe[i]), f.px(xe[i + 1]));
            let (y0, y1) = (f.py(ye[j + 1]), f.py(ye[j]));
            let fill = match v {
                Some(v) if v.is_finite() => color((v - vlo) / (vhi - vlo)),
                _ => "#dddddd".to_string(),
            };
            let _ = write!(
                svg,
                r#"<rect x="{:.2}" y="{:.2}" width="{:.2}" height="{:.2}" fill="{fill}"/>"#,
                x0.min(x1),
                y0.min(y1),
                (x1 - x0).abs(),
                (y1 - y0).abs()
            );
        }
    }
    axes(&mut svg, &f, &h.x_label, &h.y_label);
    // colour bar doubles as the legend
    let bx = WIDTH - MARGIN_R + 20.0;
    let steps = 40;
    let bar_h = HEIGHT - MARGIN_T - MARGIN_B;
    for k in 0..steps {
        let t = k as f64 / (steps - 1) as f64;
        let y = MARGIN_T + bar_h * (1.0 - (k + 1) as f64 / steps as f64);
        let _ = write!(svg, r#"<rect x="{bx}" y="{y:.2}" width="18" height="{:.2}" fill="{}"/>"#, bar_h / steps as f64 + 0.5, color(t));
    }
    let _ = write!(svg, r#"<text x="{}" y="{}">{}</text>"#, bx + 24.0, MARGIN_T + 10.0, fmt_tick(vhi));
    let _ = write!(svg, r#"<text x="{}" y="{}">{}</text>"#, bx + 24.0, HEIGHT - MARGIN_B, fmt_tick(vlo));
    let _ = write!(svg, r#"<text x="{}" y="{}">{}</text>"#, bx, MARGIN_T - 8.0, escape(&h.value_label));
    svg.push_str("</svg>\n");
    Ok(svg)
}

/// Extracts a named numeric column from a record.
pub fn record_field(r: &SweepRecord, field: &str) -> Result<Option<f64>, PlotError> {
    Ok(match field {
        "x" => Some(r.x),
        "y" => Some(r.y),
        "g" => Some(r.g),
        "T3" => Some(r.t3),
        "T1s" => r.t1s,
        "Tmin" => r.tmin,
        "tmin" => r.t_at_min,
        "tHalf" => r.t_half,
        "deltaC" => r.delta_c,
        "LNmax" => r.ln_max,
        "QDmax" => r.qd_max,
        "ItotMax" => r.itot_max,
        "Wmax" => r.w_max,
        other => return Err(PlotError::UnknownField(other.to_string())),
    })
}

fn distinct(mut v: Vec<f64>) -> Vec<f64> {
    v.sort_by(f64::total_cmp);
    v.dedup();
    v
}

/// Heatmap of `field` over the records' `(x, y)` grid. Every `(x, y)` must
/// occur exactly once; filter by `g`/`T3` first when the sweep has more axes.
pub fn heatmap_from_records(records: &[SweepRecord], field: &str, title: &str) -> Result<Heatmap, PlotError> {
    if records.is_empty() {
        return Err(PlotError::Empty);
    }
    let xs = distinct(records.iter().map(|r| r.x).collect());
    let ys = distinct(records.iter().map(|r| r.y).collect());
    if xs.len() * ys.len() != records.len() {
        return Err(PlotError::Shape(format!(
            "{} records do not form a {}x{} (x, y) grid",
            records.len(),
            xs.len(),
            ys.len()
        )));
    }
    let mut values = vec![vec![None; xs.len()]; ys.len()];
    let mut seen = vec![vec![false; xs.len()]; ys.len()];
    for r in records {
        let i = xs.iter().position(|&x| x == r.x).unwrap();
        let j = ys.iter().position(|&y| y == r.y).unwrap();
        if seen[j][i] {
            return Err(PlotError::Shape(format!("duplicate point ({}, {})", r.x, r.y)));
        }
        seen[j][i] = true;
        values[j][i] = record_field(r, field)?;
    }
    Ok(Heatmap {
        title: title.to_string(),
        x_label: "x".into(),
        y_label: "y".into(),
        value_label: field.to_string(),
        xs,
        ys,
        values,
    })
}

/// `field` against `axis` (one of `x, y, g, T3`), one line per distinct value of `group_by`.
pub fn line_from_records(
    records: &[SweepRecord],
    axis: &str,
    field: &str,
    group_by: Option<&str>,
    title: &str,
) -> Result<LinePlot, PlotError> {
    if records.is_empty() {
        return Err(PlotError::Empty);
    }
    let mut groups: Vec<(Option<f64>, Vec<(f64, f64)>)> = Vec::new();
    for r in records {
        let key = group_by.map(|g| record_field(r, g)).transpose()?.flatten();
        let (Some(x), Some(y)) = (record_field(r, axis)?, record_field(r, field)?) else { continue };
        match groups.iter_mut().find(|(k, _)| *k == key) {
            Some((_, pts)) => pts.push((x, y)),
            None => groups.push((key, vec![(x, y)])),
        }
    }
    let series = groups
        .into_iter()
        .map(|(k, mut points)| {
            points.sort_by(|a, b| a.0.total_cmp(&b.0));
            let label = match (group_by, k) {
                (Some(g), Some(v)) => format!("{g}={v}"),
                _ => field.to_string(),
            };
            LineSeries { label, points }
        })
        .collect();
    Ok(LinePlot { title: title.into(), x_label: axis.into(), y_label: field.into(), log_x: false, series })
}
