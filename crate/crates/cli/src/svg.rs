//! Minimal SVG 1.1 line charts.
//!
//! A chart is a row of panels sharing one legend. Each panel has its own
//! axes, ticks and one polyline per series. Coordinates are printed with two
//! decimals, so identical input gives byte-identical output.

use std::fmt::Write as _;

use designlab::experiments::{ExperimentTable, Metric};
use designlab::Setting;

use crate::error::CliError;

const PANEL_WIDTH: f64 = 360.0;
const PANEL_HEIGHT: f64 = 280.0;
const MARGIN_LEFT: f64 = 64.0;
const MARGIN_RIGHT: f64 = 16.0;
const MARGIN_TOP: f64 = 36.0;
const MARGIN_BOTTOM: f64 = 44.0;
const HEADER_HEIGHT: f64 = 56.0;

pub const IN_SAMPLE_COLOR: &str = "#e66101";
pub const OUT_OF_SAMPLE_COLOR: &str = "#1b9e77";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scale {
    Linear,
    Log,
}

#[derive(Debug, Clone)]
pub struct Series {
    pub label: String,
    pub color: String,
    pub points: Vec<(f64, f64)>,
}

#[derive(Debug, Clone)]
pub struct Panel {
    pub title: String,
    pub x_label: String,
    pub x_scale: Scale,
    pub y_scale: Scale,
    pub series: Vec<Series>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChartSpec {
    pub title: String,
    pub x_label: String,
    pub metrics: Vec<Metric>,
    pub x_scale: Scale,
    pub y_scale: Scale,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SvgDocument {
    pub text: String,
    /// Points left out because they were non-finite or not positive on a
    /// log axis.
    pub dropped_points: usize,
}

pub fn metric_title(m: Metric) -> &'static str {
    match m {
        Metric::Err => "Prediction error",
        Metric::BiasSq => "Squared bias",
        Metric::Variance => "Variance",
        Metric::NmBiasSq => "Squared neighbor-matching bias",
        Metric::AvgBiasSq => "Squared averaging bias",
        Metric::TrainErr => "Training error",
        Metric::ExcessErr => "Excess error",
    }
}

pub fn setting_color(s: Setting) -> &'static str {
    match s {
        Setting::InSample => IN_SAMPLE_COLOR,
        Setting::OutOfSample => OUT_OF_SAMPLE_COLOR,
    }
}

/// One panel per metric, with the in-sample and out-of-sample series of an
/// aggregated table overlaid.
pub fn render_svg(table: &ExperimentTable, spec: &ChartSpec) -> Result<SvgDocument, CliError> {
    if table.replications().len() > 1 {
        return Err(CliError::Render("render_svg expects an aggregated table".into()));
    }
    let mut panels = Vec::with_capacity(spec.metrics.len());
    for &metric in &spec.metrics {
        let mut series = Vec::with_capacity(2);
        for setting in Setting::ALL {
            let points = table.series(setting, metric);
            if points.is_empty() {
                return Err(CliError::Render(format!(
                    "empty series: {} / {}",
                    setting.as_str(),
                    metric.as_str()
                )));
            }
            series.push(Series {
                label: setting.label().to_string(),
                color: setting_color(setting).to_string(),
                points,
            });
        }
        panels.push(Panel {
            title: metric_title(metric).to_string(),
            x_label: spec.x_label.clone(),
            x_scale: spec.x_scale,
            y_scale: spec.y_scale,
            series,
        });
    }
    render_panels(&spec.title, &panels)
}

pub fn render_panels(title: &str, panels: &[Panel]) -> Result<SvgDocument, CliError> {
    if panels.is_empty() {
        return Err(CliError::Render("nothing to draw".into()));
    }
    let width = PANEL_WIDTH * panels.len() as f64;
    let height = HEADER_HEIGHT + PANEL_HEIGHT;
    let mut out = String::new();
    let _ = writeln!(out, r#"<?xml version="1.0" encoding="UTF-8" standalone="no"?>"#);
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{w}" height="{h}" viewBox="0 0 {w} {h}">"#,
        w = fmt(width),
        h = fmt(height)
    );
    let _ = writeln!(
        out,
        r#"<rect x="0" y="0" width="{}" height="{}" fill="white"/>"#,
        fmt(width),
        fmt(height)
    );
    let _ = writeln!(
        out,
        r#"<text x="{}" y="20" font-family="sans-serif" font-size="15" text-anchor="middle">{}</text>"#,
        fmt(width / 2.0),
        escape(title)
    );
    write_legend(&mut out, panels, width);

    let mut dropped = 0;
    for (i, panel) in panels.iter().enumerate() {
        dropped += write_panel(&mut out, panel, PANEL_WIDTH * i as f64, HEADER_HEIGHT)?;
    }
    out.push_str("</svg>\n");
    Ok(SvgDocument {
        text: out,
        dropped_points: dropped,
    })
}

fn write_legend(out: &mut String, panels: &[Panel], width: f64) {
    let mut entries: Vec<(&str, &str)> = Vec::new();
    for s in panels.iter().flat_map(|p| &p.series) {
        if !entries.iter().any(|(l, _)| *l == s.label) {
            entries.push((&s.label, &s.color));
        }
    }
    let step = 150.0;
    let start = width / 2.0 - step * entries.len() as f64 / 2.0;
    for (i, (label, color)) in entries.iter().enumerate() {
        let x = start + step * i as f64;
        let _ = writeln!(
            out,
            r#"<line x1="{}" y1="38" x2="{}" y2="38" stroke="{}" stroke-width="2.5"/>"#,
            fmt(x),
            fmt(x + 24.0),
            color
        );
        let _ = writeln!(
            out,
            r#"<text x="{}" y="42" font-family="sans-serif" font-size="12">{}</text>"#,
            fmt(x + 30.0),
            escape(label)
        );
    }
}

struct Axis {
    lo: f64,
    hi: f64,
    scale: Scale,
    pix_lo: f64,
    pix_hi: f64,
}

impl Axis {
    fn transform(&self, v: f64) -> f64 {
        match self.scale {
            Scale::Linear => v,
            Scale::Log => v.log10(),
        }
    }

    fn map(&self, v: f64) -> f64 {
        let (a, b) = (self.transform(self.lo), self.transform(self.hi));
        let t = if b > a { (self.transform(v) - a) / (b - a) } else { 0.5 };
        self.pix_lo + t * (self.pix_hi - self.pix_lo)
    }
}

fn usable(v: f64, scale: Scale) -> bool {
    v.is_finite() && (scale == Scale::Linear || v > 0.0)
}

fn write_panel(out: &mut String, panel: &Panel, x0: f64, y0: f64) -> Result<usize, CliError> {
    let mut dropped = 0;
    let series: Vec<(&Series, Vec<(f64, f64)>)> = panel
        .series
        .iter()
        .map(|s| {
            let kept: Vec<(f64, f64)> = s
                .points
                .iter()
                .copied()
                .filter(|&(x, y)| usable(x, panel.x_scale) && usable(y, panel.y_scale))
                .collect();
            dropped += s.points.len() - kept.len();
            (s, kept)
        })
        .collect();
    let all = series.iter().flat_map(|(_, p)| p.iter());
    let (mut xlo, mut xhi, mut ylo, mut yhi) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
    for &(x, y) in all {
        xlo = xlo.min(x);
        xhi = xhi.max(x);
        ylo = ylo.min(y);
        yhi = yhi.max(y);
    }
    if !xlo.is_finite() {
        return Err(CliError::Render(format!(
            "panel `{}` has no drawable points",
            panel.title
        )));
    }
    if panel.y_scale == Scale::Linear {
        // anchor non-negative quantities at zero
        if ylo > 0.0 {
            ylo = 0.0;
        }
        if yhi == ylo {
            yhi = ylo + 1.0;
        }
    } else if yhi == ylo {
        yhi = ylo * 10.0;
    }
    let plot_left = x0 + MARGIN_LEFT;
    let plot_right = x0 + PANEL_WIDTH - MARGIN_RIGHT;
    let plot_top = y0 + MARGIN_TOP;
    let plot_bottom = y0 + PANEL_HEIGHT - MARGIN_BOTTOM;
    let xaxis = Axis {
        lo: xlo,
        hi: xhi,
        scale: panel.x_scale,
        pix_lo: plot_left,
        pix_hi: plot_right,
    };
    let yaxis = Axis {
        lo: ylo,
        hi: yhi,
        scale: panel.y_scale,
        pix_lo: plot_bottom,
        pix_hi: plot_top,
    };

    let _ = writeln!(out, r#"<g class="panel">"#);
    let _ = writeln!(
        out,
        r#"<text x="{}" y="{}" font-family="sans-serif" font-size="13" text-anchor="middle">{}</text>"#,
        fmt((plot_left + plot_right) / 2.0),
        fmt(y0 + 18.0),
        escape(&panel.title)
    );
    let _ = writeln!(
        out,
        r#"<rect x="{}" y="{}" width="{}" height="{}" fill="none" stroke="black" stroke-width="1"/>"#,
        fmt(plot_left),
        fmt(plot_top),
        fmt(plot_right - plot_left),
        fmt(plot_bottom - plot_top)
    );
    for t in ticks(xlo, xhi, panel.x_scale) {
        let px = xaxis.map(t);
        let _ = writeln!(
            out,
            r#"<line x1="{x}" y1="{}" x2="{x}" y2="{}" stroke="black" stroke-width="1"/>"#,
            fmt(plot_bottom),
            fmt(plot_bottom + 5.0),
            x = fmt(px)
        );
        let _ = writeln!(
            out,
            r#"<text x="{}" y="{}" font-family="sans-serif" font-size="10" text-anchor="middle">{}</text>"#,
            fmt(px),
            fmt(plot_bottom + 17.0),
            tick_label(t, xlo, xhi, panel.x_scale)
        );
    }
    for t in ticks(ylo, yhi, panel.y_scale) {
        let py = yaxis.map(t);
        let _ = writeln!(
            out,
            r#"<line x1="{}" y1="{y}" x2="{}" y2="{y}" stroke="black" stroke-width="1"/>"#,
            fmt(plot_left - 5.0),
            fmt(plot_left),
            y = fmt(py)
        );
        let _ = writeln!(
            out,
            r#"<text x="{}" y="{}" font-family="sans-serif" font-size="10" text-anchor="end">{}</text>"#,
            fmt(plot_left - 8.0),
            fmt(py + 3.5),
            tick_label(t, ylo, yhi, panel.y_scale)
        );
    }
    let _ = writeln!(
        out,
        r#"<text x="{}" y="{}" font-family="sans-serif" font-size="11" text-anchor="middle">{}</text>"#,
        fmt((plot_left + plot_right) / 2.0),
        fmt(plot_bottom + 34.0),
        escape(&panel.x_label)
    );
    for (s, pts) in &series {
        if pts.is_empty() {
            continue;
        }
        let coords: Vec<String> = pts
            .iter()
            .map(|&(x, y)| format!("{},{}", fmt(xaxis.map(x)), fmt(yaxis.map(y))))
            .collect();
        let _ = writeln!(
            out,
            r#"<polyline fill="none" stroke="{}" stroke-width="2" points="{}"><title>{}</title></polyline>"#,
            s.color,
            coords.join(" "),
            escape(&s.label)
        );
    }
    let _ = writeln!(out, "</g>");
    Ok(dropped)
}

fn nice_step(span: f64, target: usize) -> f64 {
    let raw = span / target as f64;
    let mag = 10f64.powf(raw.log10().floor());
    let norm = raw / mag;
    let nice = if norm < 1.5 {
        1.0
    } else if norm < 3.0 {
        2.0
    } else if norm < 7.0 {
        5.0
    } else {
        10.0
    };
    nice * mag
}

#[allow(clippy::neg_cmp_op_on_partial_ord)] // NaN bounds take the degenerate branch
pub fn ticks(lo: f64, hi: f64, scale: Scale) -> Vec<f64> {
    match scale {
        Scale::Linear => {
            if !(hi > lo) {
                return vec![lo];
            }
            let step = nice_step(hi - lo, 5);
            let first = (lo / step).ceil() as i64;
            let last = (hi / step).floor() as i64;
            (first..=last).map(|i| i as f64 * step).collect()
        }
        Scale::Log => {
            let a = lo.log10().floor() as i32;
            let b = hi.log10().ceil() as i32;
            let mults: &[f64] = if b - a <= 2 { &[1.0, 2.0, 5.0] } else { &[1.0] };
            let mut out = Vec::new();
            for e in a..=b {
                for m in mults {
                    let v = m * 10f64.powi(e);
                    if v >= lo * (1.0 - 1e-12) && v <= hi * (1.0 + 1e-12) {
                        out.push(v);
                    }
                }
            }
            out
        }
    }
}

fn tick_label(v: f64, lo: f64, hi: f64, scale: Scale) -> String {
    match scale {
        Scale::Linear => {
            let step = nice_step(hi - lo, 5);
            let decimals = (-step.log10().floor()).max(0.0) as usize;
            let s = format!("{v:.decimals$}");
            if s.starts_with('-') && s.trim_start_matches(['-', '0', '.']).is_empty() {
                s[1..].to_string()
            } else {
                s
            }
        }
        Scale::Log => {
            if (1e-3..1e4).contains(&v) {
                let decimals = (-v.log10().floor()).max(0.0) as usize;
                format!("{v:.decimals$}")
            } else {
                format!("{v:e}")
            }
        }
    }
}

fn fmt(v: f64) -> String {
    let s = format!("{v:.2}");
    if s == "-0.00" {
        "0.00".into()
    } else {
        s
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}
