use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use super::ForecastResult;
use crate::error::Result;
use crate::training::LossHistory;

const W: f64 = 720.0;
const H: f64 = 360.0;
const LEFT: f64 = 60.0;
const RIGHT: f64 = 20.0;
const TOP: f64 = 30.0;
const BOTTOM: f64 = 45.0;

struct Frame {
    x0: f64,
    x1: f64,
    y0: f64,
    y1: f64,
}

impl Frame {
    fn new(x0: f64, x1: f64, ys: impl Iterator<Item = f64>) -> Self {
        let (mut y0, mut y1) = ys.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)));
        if !y0.is_finite() {
            (y0, y1) = (0.0, 1.0);
        }
        let pad = ((y1 - y0) * 0.08).max(1e-6);
        Frame {
            x0,
            x1: if x1 > x0 { x1 } else { x0 + 1.0 },
            y0: y0 - pad,
            y1: y1 + pad,
        }
    }

    fn px(&self, x: f64) -> f64 {
        LEFT + (x - self.x0) / (self.x1 - self.x0) * (W - LEFT - RIGHT)
    }

    fn py(&self, y: f64) -> f64 {
        H - BOTTOM - (y - self.y0) / (self.y1 - self.y0) * (H - TOP - BOTTOM)
    }

    fn axes(&self, svg: &mut String, title: &str, xlabel: &str, ylabel: &str) {
        let (l, r, t, b) = (LEFT, W - RIGHT, TOP, H - BOTTOM);
        let _ = write!(
            svg,
            r##"<rect x="0" y="0" width="{W}" height="{H}" fill="white"/>
<text x="{:.1}" y="18" font-size="14" text-anchor="middle">{}</text>
<line x1="{l}" y1="{b}" x2="{r}" y2="{b}" stroke="black"/>
<line x1="{l}" y1="{t}" x2="{l}" y2="{b}" stroke="black"/>
<text x="{:.1}" y="{:.1}" font-size="12" text-anchor="middle">{}</text>
<text x="14" y="{:.1}" font-size="12" text-anchor="middle" transform="rotate(-90 14 {:.1})">{}</text>
"##,
            W / 2.0,
            escape(title),
            (l + r) / 2.0,
            H - 8.0,
            escape(xlabel),
            (t + b) / 2.0,
            (t + b) / 2.0,
            escape(ylabel)
        );
        for i in 0..=5 {
            let fx = self.x0 + (self.x1 - self.x0) * i as f64 / 5.0;
            let fy = self.y0 + (self.y1 - self.y0) * i as f64 / 5.0;
            let _ = writeln!(
                svg,
                r##"<text x="{:.1}" y="{:.1}" font-size="10" text-anchor="middle">{}</text>"##,
                self.px(fx),
                b + 14.0,
                tick(fx)
            );
            let _ = writeln!(
                svg,
                r##"<text x="{:.1}" y="{:.1}" font-size="10" text-anchor="end">{}</text>"##,
                l - 4.0,
                self.py(fy) + 3.0,
                tick(fy)
            );
        }
    }

    fn polyline(&self, svg: &mut String, points: impl Iterator<Item = (f64, f64)>, colour: &str) {
        let pts: Vec<String> = points.map(|(x, y)| format!("{:.2},{:.2}", self.px(x), self.py(y))).collect();
        let _ = writeln!(svg, r##"<polyline fill="none" stroke="{colour}" stroke-width="1.5" points="{}"/>"##, pts.join(" "));
    }

    fn dots(&self, svg: &mut String, points: impl Iterator<Item = (f64, f64)>, colour: &str) {
        for (x, y) in points {
            let _ = writeln!(svg, r##"<circle cx="{:.2}" cy="{:.2}" r="2.5" fill="{colour}"/>"##, self.px(x), self.py(y));
        }
    }
}

fn legend(svg: &mut String, entries: &[(&str, &str)]) {
    for (i, (label, colour)) in entries.iter().enumerate() {
        let y = TOP + 12.0 + 16.0 * i as f64;
        let x = W - RIGHT - 130.0;
        let _ = writeln!(
            svg,
            r##"<rect x="{x}" y="{:.1}" width="10" height="10" fill="{colour}"/><text x="{:.1}" y="{y:.1}" font-size="11">{}</text>"##,
            y - 9.0,
            x + 15.0,
            escape(label)
        );
    }
}

fn tick(v: f64) -> String {
    if v.abs() >= 100.0 || v == v.round() {
        format!("{v:.0}")
    } else {
        format!("{v:.2}")
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn wrap(body: String) -> String {
    format!(
        "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{W}\" height=\"{H}\" viewBox=\"0 0 {W} {H}\">\n{body}</svg>\n"
    )
}

/// History line, predicted and actual points, hours relative to the origin.
pub fn forecast_svg(result: &ForecastResult) -> String {
    let h = result.history.len() as f64;
    let k = result.horizon() as f64;
    let f = Frame::new(-h, k - 1.0, result.history.iter().chain(&result.predicted).chain(&result.actual).copied());
    let mut svg = String::new();
    f.axes(&mut svg, &format!("{}-hour forecast from {}", result.horizon(), result.origin), "hours from forecast origin", "temperature (°C)");
    f.polyline(&mut svg, result.history.iter().enumerate().map(|(i, &v)| (i as f64 - h, v)), "#555555");
    f.dots(&mut svg, result.actual.iter().enumerate().map(|(i, &v)| (i as f64, v)), "#1f5fbf");
    f.dots(&mut svg, result.predicted.iter().enumerate().map(|(i, &v)| (i as f64, v)), "#d62728");
    legend(&mut svg, &[("history", "#555555"), ("true future", "#1f5fbf"), ("predicted", "#d62728")]);
    wrap(svg)
}

/// `offset,history,predicted,actual`, one row per hour (H + K rows).
pub fn forecast_csv(result: &ForecastResult) -> String {
    let mut out = String::from("offset,history,predicted,actual\n");
    let h = result.history.len() as i64;
    for (i, v) in result.history.iter().enumerate() {
        let _ = writeln!(out, "{},{v},,", i as i64 - h);
    }
    for (i, (p, a)) in result.predicted.iter().zip(&result.actual).enumerate() {
        let _ = writeln!(out, "{i},,{p},{a}");
    }
    out
}

/// Writes `path` (SVG) and a sibling `.csv`; returns the CSV path.
pub fn emit_forecast_plot(result: &ForecastResult, path: &Path) -> Result<PathBuf> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir)?;
    }
    fs::write(path, forecast_svg(result))?;
    let csv = path.with_extension("csv");
    fs::write(&csv, forecast_csv(result))?;
    Ok(csv)
}

/// Training and validation MSE per epoch.
pub fn loss_svg(history: &LossHistory, title: &str) -> String {
    let n = history.len();
    let f = Frame::new(1.0, n as f64, history.train_mse.iter().chain(&history.val_mse).copied().chain([0.0]));
    let mut svg = String::new();
    f.axes(&mut svg, title, "epoch", "MSE");
    let series = |v: &[f64]| v.iter().enumerate().map(|(i, &y)| (i as f64 + 1.0, y)).collect::<Vec<_>>();
    for (values, colour) in [(&history.train_mse, "#1f5fbf"), (&history.val_mse, "#ff7f0e")] {
        let pts = series(values);
        f.polyline(&mut svg, pts.iter().copied(), colour);
        f.dots(&mut svg, pts.into_iter(), colour);
    }
    legend(&mut svg, &[("training", "#1f5fbf"), ("validation", "#ff7f0e")]);
    wrap(svg)
}

pub fn emit_loss_plot(history: &LossHistory, title: &str, path: &Path) -> Result<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir)?;
    }
    fs::write(path, loss_svg(history, title))?;
    Ok(())
}
