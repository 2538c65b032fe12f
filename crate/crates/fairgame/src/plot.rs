//! Plot-ready panels and SVG line charts from training logs.
//!
//! Each log is one run. A per-episode metric is smoothed with a trailing
//! window inside every run; the panel then reports the mean, min and max
//! of the smoothed curves across runs.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use fairgame_core::metrics::rolling_aggregate;

use crate::error::{Error, Result};
use crate::formats::write_text;
use crate::runner::LOG_HEADER;

pub const DEFAULT_WINDOW: usize = 50;

#[derive(Debug, Clone, PartialEq, Default)]
struct EpisodeRecord {
    step: u64,
    /// Apples where logged, undiscounted return otherwise; indexed by agent.
    consumption: BTreeMap<usize, f64>,
    gini: f64,
}

/// Per-episode records of one log, ordered by episode.
fn read_log(path: &Path) -> Result<Vec<EpisodeRecord>> {
    let mut reader = csv::Reader::from_path(path).map_err(|source| Error::Csv {
        path: path.to_path_buf(),
        source,
    })?;
    let headers = reader
        .headers()
        .map_err(|source| Error::Csv {
            path: path.to_path_buf(),
            source,
        })?
        .clone();
    let mut col = BTreeMap::new();
    let mut missing = Vec::new();
    for name in LOG_HEADER {
        match headers.iter().position(|h| h == name) {
            Some(k) => {
                col.insert(name, k);
            }
            None => missing.push(name),
        }
    }
    if !missing.is_empty() {
        return Err(Error::Schema(format!(
            "{}: missing columns: {}",
            path.display(),
            missing.join(", ")
        )));
    }

    let mut episodes: BTreeMap<u64, EpisodeRecord> = BTreeMap::new();
    for (row, record) in reader.records().enumerate() {
        let record = record.map_err(|source| Error::Csv {
            path: path.to_path_buf(),
            source,
        })?;
        let field = |name: &str| record.get(col[name]).unwrap_or("");
        let bad = |name: &str| {
            Error::Schema(format!(
                "{}: data row {}: bad {name} value {:?}",
                path.display(),
                row + 1,
                field(name)
            ))
        };
        let step: u64 = field("step").parse().map_err(|_| bad("step"))?;
        let episode: u64 = field("episode").parse().map_err(|_| bad("episode"))?;
        let agent: usize = field("agent").parse().map_err(|_| bad("agent"))?;
        let gini: f64 = field("gini").parse().map_err(|_| bad("gini"))?;
        let consumption: f64 = if field("apples").is_empty() {
            field("return").parse().map_err(|_| bad("return"))?
        } else {
            field("apples").parse().map_err(|_| bad("apples"))?
        };
        let entry = episodes.entry(episode).or_default();
        entry.step = step;
        entry.gini = gini;
        entry.consumption.insert(agent, consumption);
    }
    Ok(episodes.into_values().collect())
}

/// One chart line with its band.
#[derive(Debug, Clone, PartialEq)]
struct Band {
    agent: Option<usize>,
    steps: Vec<u64>,
    mean: Vec<f64>,
    min: Vec<f64>,
    max: Vec<f64>,
}

/// Smooths each run's series, then aggregates across runs index-wise over
/// the shortest run.
fn band(runs: &[Vec<(u64, f64)>], window: usize, agent: Option<usize>) -> Result<Band> {
    let len = runs.iter().map(Vec::len).min().unwrap_or(0);
    let mut out = Band {
        agent,
        steps: Vec::with_capacity(len),
        mean: Vec::with_capacity(len),
        min: Vec::with_capacity(len),
        max: Vec::with_capacity(len),
    };
    if len == 0 {
        return Ok(out);
    }
    let smoothed = runs
        .iter()
        .map(|r| {
            let values: Vec<f64> = r[..len].iter().map(|p| p.1).collect();
            rolling_aggregate(&values, window).map(|s| s.mean)
        })
        .collect::<fairgame_core::Result<Vec<_>>>()?;
    for k in 0..len {
        let column = smoothed.iter().map(|s| s[k]);
        out.steps.push(runs[0][k].0);
        out.mean.push(column.clone().sum::<f64>() / runs.len() as f64);
        out.min.push(column.clone().fold(f64::INFINITY, f64::min));
        out.max.push(column.fold(f64::NEG_INFINITY, f64::max));
    }
    Ok(out)
}

fn panel_csv(bands: &[Band]) -> String {
    let per_agent = bands.iter().any(|b| b.agent.is_some());
    let mut out = String::from(if per_agent {
        "step,mean,min,max,agent\n"
    } else {
        "step,mean,min,max\n"
    });
    for b in bands {
        for k in 0..b.steps.len() {
            let _ = write!(out, "{},{},{},{}", b.steps[k], b.mean[k], b.min[k], b.max[k]);
            if let Some(a) = b.agent {
                let _ = write!(out, ",{a}");
            }
            out.push('\n');
        }
    }
    out
}

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 360.0;
const LEFT: f64 = 60.0;
const RIGHT: f64 = 20.0;
const TOP: f64 = 30.0;
const BOTTOM: f64 = 40.0;
const PALETTE: [&str; 8] = [
    "#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f",
];

/// Line chart with min/max bands. Coordinates are printed with two
/// decimals so output is byte-stable.
fn render_svg(title: &str, bands: &[Band]) -> String {
    let points = bands.iter().flat_map(|b| b.steps.iter().copied());
    let (x_lo, x_hi) = points.fold((u64::MAX, 0), |(lo, hi), s| (lo.min(s), hi.max(s)));
    let values = bands.iter().flat_map(|b| b.min.iter().chain(&b.max).copied());
    let (mut y_lo, mut y_hi) =
        values.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)));
    let empty = x_lo > x_hi;
    if empty || !y_lo.is_finite() {
        y_lo = 0.0;
        y_hi = 1.0;
    }
    if y_hi - y_lo < 1e-12 {
        y_lo -= 0.5;
        y_hi += 0.5;
    }
    let x_span = if empty || x_hi == x_lo { 1.0 } else { (x_hi - x_lo) as f64 };
    let plot_w = WIDTH - LEFT - RIGHT;
    let plot_h = HEIGHT - TOP - BOTTOM;
    let px = |s: u64| LEFT + if empty { 0.0 } else { (s - x_lo) as f64 / x_span * plot_w };
    let py = |v: f64| TOP + (1.0 - (v - y_lo) / (y_hi - y_lo)) * plot_h;

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">"#
    );
    let _ = writeln!(svg, r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#);
    let _ = writeln!(
        svg,
        r#"<text x="{:.2}" y="20" font-family="sans-serif" font-size="14" text-anchor="middle">{title}</text>"#,
        WIDTH / 2.0
    );
    let _ = writeln!(
        svg,
        r#"<polyline points="{LEFT:.2},{TOP:.2} {LEFT:.2},{:.2} {:.2},{:.2}" fill="none" stroke="black"/>"#,
        TOP + plot_h,
        LEFT + plot_w,
        TOP + plot_h
    );
    let label = |svg: &mut String, x: f64, y: f64, anchor: &str, text: String| {
        let _ = writeln!(
            svg,
            r#"<text x="{x:.2}" y="{y:.2}" font-family="sans-serif" font-size="11" text-anchor="{anchor}">{text}</text>"#
        );
    };
    label(&mut svg, LEFT - 6.0, TOP + 4.0, "end", format!("{y_hi:.3}"));
    label(&mut svg, LEFT - 6.0, TOP + plot_h, "end", format!("{y_lo:.3}"));
    if empty {
        label(&mut svg, LEFT + plot_w / 2.0, TOP + plot_h / 2.0, "middle", "no data".into());
    } else {
        label(&mut svg, LEFT, HEIGHT - 12.0, "start", x_lo.to_string());
        label(&mut svg, LEFT + plot_w, HEIGHT - 12.0, "end", x_hi.to_string());
    }
    label(&mut svg, LEFT + plot_w / 2.0, HEIGHT - 12.0, "middle", "step".into());

    for (k, b) in bands.iter().enumerate() {
        if b.steps.is_empty() {
            continue;
        }
        let colour = PALETTE[k % PALETTE.len()];
        let mut outline = String::new();
        for (s, v) in b.steps.iter().zip(&b.max) {
            let _ = write!(outline, "{:.2},{:.2} ", px(*s), py(*v));
        }
        for (s, v) in b.steps.iter().zip(&b.min).rev() {
            let _ = write!(outline, "{:.2},{:.2} ", px(*s), py(*v));
        }
        let _ = writeln!(
            svg,
            r#"<polygon points="{}" fill="{colour}" fill-opacity="0.2" stroke="none"/>"#,
            outline.trim_end()
        );
        let mut line = String::new();
        for (s, v) in b.steps.iter().zip(&b.mean) {
            let _ = write!(line, "{:.2},{:.2} ", px(*s), py(*v));
        }
        let _ = writeln!(
            svg,
            r#"<polyline points="{}" fill="none" stroke="{colour}" stroke-width="1.5"/>"#,
            line.trim_end()
        );
    }
    svg.push_str("</svg>\n");
    svg
}

/// Writes `panel_total`, `panel_per_agent` and `panel_gini` as CSV and SVG
/// into `out_dir` and returns the file names written.
pub fn emit_plot_data(logs: &[&Path], out_dir: &Path, window: usize) -> Result<Vec<String>> {
    if window == 0 {
        return Err(Error::invalid("window must be at least 1"));
    }
    let runs = logs.iter().map(|p| read_log(p)).collect::<Result<Vec<_>>>()?;

    let total: Vec<Vec<(u64, f64)>> = runs
        .iter()
        .map(|r| r.iter().map(|e| (e.step, e.consumption.values().sum())).collect())
        .collect();
    let gini: Vec<Vec<(u64, f64)>> = runs
        .iter()
        .map(|r| r.iter().map(|e| (e.step, e.gini)).collect())
        .collect();
    let agents = runs
        .iter()
        .flatten()
        .flat_map(|e| e.consumption.keys().copied())
        .max()
        .map_or(0, |m| m + 1);
    let mut per_agent = Vec::with_capacity(agents);
    for i in 0..agents {
        let series: Vec<Vec<(u64, f64)>> = runs
            .iter()
            .map(|r| {
                r.iter()
                    .map(|e| (e.step, e.consumption.get(&i).copied().unwrap_or(0.0)))
                    .collect()
            })
            .collect();
        per_agent.push(band(&series, window, Some(i))?);
    }

    let panels = [
        ("panel_total", "Total consumption per episode", vec![band(&total, window, None)?]),
        ("panel_per_agent", "Consumption per agent", per_agent),
        ("panel_gini", "Gini index", vec![band(&gini, window, None)?]),
    ];
    fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    let mut written = Vec::new();
    for (name, title, bands) in &panels {
        let csv_name = format!("{name}.csv");
        let svg_name = format!("{name}.svg");
        let mut csv_text = panel_csv(bands);
        if *name == "panel_per_agent" && bands.is_empty() {
            csv_text = "step,mean,min,max,agent\n".to_string();
        }
        write_text(&out_dir.join(&csv_name), &csv_text)?;
        write_text(&out_dir.join(&svg_name), &render_svg(title, bands))?;
        written.push(csv_name);
        written.push(svg_name);
    }
    Ok(written)
}
