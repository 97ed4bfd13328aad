//! Static SVG line plots of recorded series against communication rounds.
//! Each image comes with the exact plotted numbers as CSV.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use super::csv::SummaryRow;
use crate::algorithms::Trajectory;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PlotKind {
    /// `‖∇Φ‖` where available, otherwise the Moreau stationarity. Log scale.
    StationarityVsRounds,
    /// Task metric where available, otherwise the objective.
    MetricVsRounds,
}

impl PlotKind {
    pub const ALL: [PlotKind; 2] = [PlotKind::StationarityVsRounds, PlotKind::MetricVsRounds];

    pub fn file_stem(self) -> &'static str {
        match self {
            PlotKind::StationarityVsRounds => "stationarity_vs_rounds",
            PlotKind::MetricVsRounds => "metric_vs_rounds",
        }
    }

    fn y_label(self) -> &'static str {
        match self {
            PlotKind::StationarityVsRounds => "stationarity",
            PlotKind::MetricVsRounds => "task metric",
        }
    }

    pub fn value(self, row: &SummaryRow) -> Option<f64> {
        match self {
            PlotKind::StationarityVsRounds => row.grad_phi.or(row.moreau),
            PlotKind::MetricVsRounds => row.task_metric.or(Some(row.objective)),
        }
    }
}

/// One curve: mean over seeds of an algorithm's value at each recorded round.
#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    pub label: String,
    pub points: Vec<(u64, f64)>,
}

/// Groups rows by algorithm (in order of first appearance) and averages the
/// plotted value over seeds at each communication round.
pub fn series_from_rows(rows: &[SummaryRow], kind: PlotKind) -> Vec<Series> {
    let mut order: Vec<String> = Vec::new();
    let mut grouped: BTreeMap<String, BTreeMap<u64, Vec<f64>>> = BTreeMap::new();
    for row in rows {
        let label = row.algo.to_string();
        if !order.contains(&label) {
            order.push(label.clone());
        }
        if let Some(v) = kind.value(row) {
            grouped
                .entry(label)
                .or_default()
                .entry(row.comm_rounds)
                .or_default()
                .push(v);
        }
    }
    order
        .into_iter()
        .map(|label| {
            let points = grouped
                .remove(&label)
                .unwrap_or_default()
                .into_iter()
                .map(|(round, vals)| (round, vals.iter().sum::<f64>() / vals.len() as f64))
                .collect();
            Series { label, points }
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlotFiles {
    pub svg: PathBuf,
    pub csv: PathBuf,
}

pub fn emit_plots(trajectories: &[Trajectory], kind: PlotKind, out_dir: &Path) -> Result<PlotFiles> {
    let rows: Vec<SummaryRow> = trajectories.iter().flat_map(SummaryRow::from_trajectory).collect();
    emit_plots_from_rows(&rows, kind, out_dir)
}

pub fn emit_plots_from_rows(rows: &[SummaryRow], kind: PlotKind, out_dir: &Path) -> Result<PlotFiles> {
    if rows.is_empty() {
        return Err(Error::InvalidArgument("nothing to plot".into()));
    }
    let series = series_from_rows(rows, kind);
    fs::create_dir_all(out_dir)?;
    let svg = out_dir.join(format!("{}.svg", kind.file_stem()));
    let csv = out_dir.join(format!("{}.csv", kind.file_stem()));
    fs::write(&svg, render_svg(&series, kind))?;
    fs::write(&csv, series_csv(&series)?)?;
    Ok(PlotFiles { svg, csv })
}

/// `series,comm_rounds,value` rows.
pub fn series_csv(series: &[Series]) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["series", "comm_rounds", "value"])?;
    for s in series {
        for (round, v) in &s.points {
            w.write_record([s.label.clone(), round.to_string(), v.to_string()])?;
        }
    }
    w.into_inner().map_err(|e| Error::Io(e.into_error()))
}

const PALETTE: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b"];
const W: f64 = 720.0;
const H: f64 = 450.0;
const LEFT: f64 = 80.0;
const RIGHT: f64 = 20.0;
const TOP: f64 = 20.0;
const BOTTOM: f64 = 60.0;

pub fn render_svg(series: &[Series], kind: PlotKind) -> String {
    let all: Vec<(u64, f64)> = series.iter().flat_map(|s| s.points.iter().copied()).collect();
    let log = kind == PlotKind::StationarityVsRounds && all.iter().all(|(_, v)| *v > 0.0);
    let ty = |v: f64| if log { v.log10() } else { v };
    let (mut x_max, mut y_lo, mut y_hi) = (1.0f64, f64::INFINITY, f64::NEG_INFINITY);
    for &(r, v) in &all {
        x_max = x_max.max(r as f64);
        if ty(v).is_finite() {
            y_lo = y_lo.min(ty(v));
            y_hi = y_hi.max(ty(v));
        }
    }
    if !y_lo.is_finite() {
        (y_lo, y_hi) = (0.0, 1.0);
    }
    if y_hi - y_lo < 1e-12 {
        y_lo -= 0.5;
        y_hi += 0.5;
    }
    let px = |r: f64| LEFT + (W - LEFT - RIGHT) * r / x_max;
    let py = |v: f64| TOP + (H - TOP - BOTTOM) * (1.0 - (ty(v) - y_lo) / (y_hi - y_lo));

    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(out, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
    let (x0, x1, y0, y1) = (LEFT, W - RIGHT, TOP, H - BOTTOM);
    let _ = writeln!(
        out,
        r#"<path d="M{x0},{y0} L{x0},{y1} L{x1},{y1}" stroke="black" fill="none"/>"#
    );
    for i in 0..=4 {
        let r = x_max * i as f64 / 4.0;
        let x = px(r);
        let _ = writeln!(
            out,
            r#"<line x1="{x}" y1="{y1}" x2="{x}" y2="{}" stroke="black"/>"#,
            y1 + 5.0
        );
        let _ = writeln!(
            out,
            r#"<text x="{x}" y="{}" text-anchor="middle">{}</text>"#,
            y1 + 20.0,
            r.round()
        );
        let t = y_lo + (y_hi - y_lo) * i as f64 / 4.0;
        let y = TOP + (H - TOP - BOTTOM) * (1.0 - i as f64 / 4.0);
        let label = if log { format!("1e{t:.1}") } else { format!("{t:.3}") };
        let _ = writeln!(
            out,
            r#"<line x1="{}" y1="{y}" x2="{x0}" y2="{y}" stroke="black"/>"#,
            x0 - 5.0
        );
        let _ = writeln!(
            out,
            r#"<text x="{}" y="{}" text-anchor="end">{label}</text>"#,
            x0 - 8.0,
            y + 4.0
        );
    }
    let _ = writeln!(
        out,
        r#"<text x="{}" y="{}" text-anchor="middle">communication rounds</text>"#,
        (x0 + x1) / 2.0,
        H - 15.0
    );
    let _ = writeln!(
        out,
        r#"<text x="18" y="{}" text-anchor="middle" transform="rotate(-90 18 {})">{}{}</text>"#,
        (y0 + y1) / 2.0,
        (y0 + y1) / 2.0,
        kind.y_label(),
        if log { " (log10)" } else { "" }
    );
    for (i, s) in series.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let pts: Vec<String> = s
            .points
            .iter()
            .filter(|(_, v)| ty(*v).is_finite())
            .map(|&(r, v)| format!("{:.2},{:.2}", px(r as f64), py(v)))
            .collect();
        let _ = writeln!(
            out,
            r#"<polyline points="{}" stroke="{color}" stroke-width="1.5" fill="none"/>"#,
            pts.join(" ")
        );
        let ly = TOP + 14.0 + 18.0 * i as f64;
        let _ = writeln!(
            out,
            r#"<line x1="{}" y1="{ly}" x2="{}" y2="{ly}" stroke="{color}" stroke-width="2"/>"#,
            x1 - 170.0,
            x1 - 145.0
        );
        let _ = writeln!(
            out,
            r#"<text class="legend" x="{}" y="{}">{}</text>"#,
            x1 - 140.0,
            ly + 4.0,
            s.label
        );
    }
    out.push_str("</svg>\n");
    out
}
