//! Self-contained SVG figures for traces and escape maps.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::escape::{EscapeMapGrid, MapCell};
use crate::export::{ensure_dir, write_file};
use crate::nmpc::ControlBounds;
use crate::sim::SimulationTrace;
use crate::EngagementOutcome;

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 420.0;
const MARGIN: f64 = 56.0;
const COLORS: [&str; 4] = ["#1f77b4", "#2ca02c", "#d62728", "#ff7f0e"];

#[derive(Clone, Copy, Debug, PartialEq)]
struct Extent {
    x0: f64,
    x1: f64,
    y0: f64,
    y1: f64,
}

impl Extent {
    fn of(points: impl IntoIterator<Item = (f64, f64)>) -> Self {
        let mut e = Extent { x0: f64::INFINITY, x1: f64::NEG_INFINITY, y0: f64::INFINITY, y1: f64::NEG_INFINITY };
        for (x, y) in points {
            if x.is_finite() && y.is_finite() {
                e.x0 = e.x0.min(x);
                e.x1 = e.x1.max(x);
                e.y0 = e.y0.min(y);
                e.y1 = e.y1.max(y);
            }
        }
        e.padded()
    }

    fn include_y(mut self, y: f64) -> Self {
        self.y0 = self.y0.min(y);
        self.y1 = self.y1.max(y);
        self
    }

    fn padded(mut self) -> Self {
        if !self.x0.is_finite() {
            return Extent { x0: 0.0, x1: 1.0, y0: 0.0, y1: 1.0 };
        }
        let pad = |lo: &mut f64, hi: &mut f64| {
            let span = (*hi - *lo).max(1e-9);
            *lo -= 0.05 * span;
            *hi += 0.05 * span;
        };
        pad(&mut self.x0, &mut self.x1);
        pad(&mut self.y0, &mut self.y1);
        self
    }

    /// Grows the shorter side so one unit is the same length on both axes.
    fn equal_aspect(mut self, w: f64, h: f64) -> Self {
        let (sx, sy) = ((self.x1 - self.x0) / w, (self.y1 - self.y0) / h);
        if sx > sy {
            let extra = (sx * h - (self.y1 - self.y0)) / 2.0;
            self.y0 -= extra;
            self.y1 += extra;
        } else {
            let extra = (sy * w - (self.x1 - self.x0)) / 2.0;
            self.x0 -= extra;
            self.x1 += extra;
        }
        self
    }
}

/// Maps data coordinates into a pixel rectangle.
struct Frame {
    ext: Extent,
    left: f64,
    top: f64,
    w: f64,
    h: f64,
}

impl Frame {
    fn px(&self, x: f64, y: f64) -> (f64, f64) {
        (
            self.left + (x - self.ext.x0) / (self.ext.x1 - self.ext.x0) * self.w,
            self.top + (1.0 - (y - self.ext.y0) / (self.ext.y1 - self.ext.y0)) * self.h,
        )
    }

    fn polyline(&self, out: &mut String, pts: &[(f64, f64)], color: &str, dash: bool) {
        let mut d = String::new();
        for (x, y) in pts.iter().filter(|(x, y)| x.is_finite() && y.is_finite()) {
            let (px, py) = self.px(*x, *y);
            write!(d, "{px:.2},{py:.2} ").unwrap();
        }
        let dash = if dash { r#" stroke-dasharray="6 4""# } else { "" };
        writeln!(out, r#"<polyline fill="none" stroke="{color}" stroke-width="1.5"{dash} points="{}"/>"#, d.trim_end())
            .unwrap();
    }

    fn axes(&self, out: &mut String, xlabel: &str, ylabel: &str) {
        let (l, t, w, h) = (self.left, self.top, self.w, self.h);
        writeln!(out, r##"<rect x="{l}" y="{t}" width="{w}" height="{h}" fill="none" stroke="#444"/>"##).unwrap();
        for k in 0..=4 {
            let f = k as f64 / 4.0;
            let xv = self.ext.x0 + f * (self.ext.x1 - self.ext.x0);
            let yv = self.ext.y0 + f * (self.ext.y1 - self.ext.y0);
            let (px, _) = self.px(xv, self.ext.y0);
            let (_, py) = self.px(self.ext.x0, yv);
            writeln!(out, r#"<text x="{px:.1}" y="{:.1}" font-size="10" text-anchor="middle">{}</text>"#, t + h + 14.0, tick(xv))
                .unwrap();
            writeln!(out, r#"<text x="{:.1}" y="{py:.1}" font-size="10" text-anchor="end">{}</text>"#, l - 4.0, tick(yv))
                .unwrap();
        }
        writeln!(out, r#"<text x="{:.1}" y="{:.1}" font-size="12" text-anchor="middle">{xlabel}</text>"#, l + w / 2.0, t + h + 32.0)
            .unwrap();
        writeln!(
            out,
            r#"<text x="14" y="{:.1}" font-size="12" text-anchor="middle" transform="rotate(-90 14 {:.1})">{ylabel}</text>"#,
            t + h / 2.0,
            t + h / 2.0
        )
        .unwrap();
    }
}

fn tick(v: f64) -> String {
    if v.abs() >= 100.0 {
        format!("{v:.0}")
    } else {
        format!("{v:.2}")
    }
}

fn document(body: &str, title: &str, w: f64, h: f64) -> String {
    format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w}\" height=\"{h}\" viewBox=\"0 0 {w} {h}\">\n\
         <rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n\
         <text x=\"{:.1}\" y=\"18\" font-size=\"14\" text-anchor=\"middle\">{title}</text>\n{body}</svg>\n",
        w / 2.0
    )
}

fn legend(out: &mut String, entries: &[(&str, &str)], x: f64, y: f64) {
    for (k, (label, color)) in entries.iter().enumerate() {
        let yy = y + 14.0 * k as f64;
        writeln!(out, r#"<line x1="{x}" y1="{yy}" x2="{}" y2="{yy}" stroke="{color}" stroke-width="2"/>"#, x + 16.0).unwrap();
        writeln!(out, r#"<text x="{}" y="{}" font-size="10">{label}</text>"#, x + 20.0, yy + 3.0).unwrap();
    }
}

fn main_frame(ext: Extent) -> Frame {
    Frame { ext, left: MARGIN, top: 30.0, w: WIDTH - MARGIN - 20.0, h: HEIGHT - 30.0 - MARGIN }
}

/// Agent paths with start dots and the terminal event marked.
pub fn trajectory_svg(trace: &SimulationTrace) -> Result<String> {
    if trace.is_empty() {
        return Err(Error::EmptyTrace);
    }
    let paths: Vec<Vec<(f64, f64)>> = (0..4)
        .map(|k| {
            trace
                .states()
                .map(|s| {
                    let a = [&s.target1, &s.target2, &s.attacker1, &s.attacker2][k];
                    (a.x, a.y)
                })
                .collect()
        })
        .collect();
    let probe = main_frame(Extent::of(paths.iter().flatten().copied()));
    let frame = main_frame(probe.ext.equal_aspect(probe.w, probe.h));
    let mut body = String::new();
    frame.axes(&mut body, "x (m)", "y (m)");
    for (k, p) in paths.iter().enumerate() {
        frame.polyline(&mut body, p, COLORS[k], k >= 2);
        let (sx, sy) = frame.px(p[0].0, p[0].1);
        writeln!(body, r#"<circle cx="{sx:.2}" cy="{sy:.2}" r="3" fill="{}"/>"#, COLORS[k]).unwrap();
    }
    let end = &trace.final_state;
    let marker = match trace.outcome {
        EngagementOutcome::AttackersCollided { .. } => Some(((end.attacker1.x + end.attacker2.x) / 2.0, (end.attacker1.y + end.attacker2.y) / 2.0)),
        EngagementOutcome::TargetCaptured { target: 1, .. } => Some((end.target1.x, end.target1.y)),
        EngagementOutcome::TargetCaptured { .. } => Some((end.target2.x, end.target2.y)),
        EngagementOutcome::Ongoing => None,
    };
    if let Some((x, y)) = marker {
        let (px, py) = frame.px(x, y);
        writeln!(
            body,
            r#"<path class="event" d="M{:.2},{:.2} L{:.2},{:.2} M{:.2},{:.2} L{:.2},{:.2}" stroke="black" stroke-width="2.5"/>"#,
            px - 6.0, py - 6.0, px + 6.0, py + 6.0, px - 6.0, py + 6.0, px + 6.0, py - 6.0
        )
        .unwrap();
    }
    legend(&mut body, &[("T1", COLORS[0]), ("T2", COLORS[1]), ("A1", COLORS[2]), ("A2", COLORS[3])], MARGIN + 8.0, 42.0);
    Ok(document(&body, "Trajectories", WIDTH, HEIGHT))
}

pub fn distances_svg(trace: &SimulationTrace) -> Result<String> {
    if trace.is_empty() {
        return Err(Error::EmptyTrace);
    }
    let d = |a: [f64; 2], b: [f64; 2]| (a[0] - b[0]).hypot(a[1] - b[1]);
    let series: [Vec<(f64, f64)>; 3] = [
        trace.states().map(|s| (s.t, d(s.attacker1.position(), s.attacker2.position()))).collect(),
        trace.states().map(|s| (s.t, d(s.attacker1.position(), s.target1.position()))).collect(),
        trace.states().map(|s| (s.t, d(s.attacker2.position(), s.target2.position()))).collect(),
    ];
    let frame = main_frame(Extent::of(series.iter().flatten().copied()).include_y(0.0));
    let mut body = String::new();
    frame.axes(&mut body, "t (s)", "distance (m)");
    for (k, s) in series.iter().enumerate() {
        frame.polyline(&mut body, s, COLORS[k], false);
    }
    legend(&mut body, &[("R", COLORS[0]), ("r1", COLORS[1]), ("r2", COLORS[2])], WIDTH - 90.0, 42.0);
    Ok(document(&body, "Distances", WIDTH, HEIGHT))
}

/// Turn-rate commands with the bound lines always in view.
pub fn controls_svg(trace: &SimulationTrace, bounds: &ControlBounds) -> Result<String> {
    if trace.is_empty() {
        return Err(Error::EmptyTrace);
    }
    let u1: Vec<(f64, f64)> = trace.records.iter().map(|r| (r.t, r.control.u1)).collect();
    let u2: Vec<(f64, f64)> = trace.records.iter().map(|r| (r.t, r.control.u2)).collect();
    let span = bounds.upper - bounds.lower;
    let (t0, t1) = (trace.records[0].t, trace.final_state.t.max(trace.records[0].t + 1e-9));
    let ext = Extent { x0: t0, x1: t1, y0: bounds.lower - 0.1 * span, y1: bounds.upper + 0.1 * span };
    let frame = main_frame(ext);
    let mut body = String::new();
    frame.axes(&mut body, "t (s)", "turn rate (rad/s)");
    for b in [bounds.lower, bounds.upper] {
        let (xa, y) = frame.px(t0, b);
        let (xb, _) = frame.px(t1, b);
        writeln!(body, r##"<line class="bound" x1="{xa:.2}" y1="{y:.2}" x2="{xb:.2}" y2="{y:.2}" stroke="#888" stroke-dasharray="4 3"/>"##)
            .unwrap();
    }
    frame.polyline(&mut body, &u1, COLORS[0], false);
    frame.polyline(&mut body, &u2, COLORS[1], false);
    legend(&mut body, &[("u1", COLORS[0]), ("u2", COLORS[1])], WIDTH - 80.0, 42.0);
    Ok(document(&body, "Target controls", WIDTH, HEIGHT))
}

/// One panel per attacker state: error with its ±3σ envelope.
pub fn estimation_svg(trace: &SimulationTrace) -> Result<String> {
    if trace.is_empty() {
        return Err(Error::EmptyTrace);
    }
    const NAMES: [&str; 8] = ["x A1 (m)", "y A1 (m)", "x A2 (m)", "y A2 (m)", "heading A1 (rad)", "heading A2 (rad)", "accel A1 (m/s2)", "accel A2 (m/s2)"];
    let (pw, ph) = (300.0, 150.0);
    let (w, h) = (2.0 * (pw + 70.0), 4.0 * (ph + 50.0) + 30.0);
    let mut body = String::new();
    for (i, name) in NAMES.iter().enumerate() {
        let err: Vec<(f64, f64)> = trace.records.iter().map(|r| (r.t, r.estimation_error()[i])).collect();
        let hi: Vec<(f64, f64)> = trace.records.iter().map(|r| (r.t, 3.0 * r.sigma[i])).collect();
        let lo: Vec<(f64, f64)> = hi.iter().map(|(t, v)| (*t, -v)).collect();
        let ext = Extent::of(err.iter().chain(&hi).chain(&lo).copied());
        let frame = Frame { ext, left: 60.0 + (i % 2) as f64 * (pw + 70.0), top: 40.0 + (i / 2) as f64 * (ph + 50.0), w: pw, h: ph };
        frame.axes(&mut body, "t (s)", "");
        writeln!(body, r#"<text x="{:.1}" y="{:.1}" font-size="11" text-anchor="middle">{name}</text>"#, frame.left + pw / 2.0, frame.top - 4.0)
            .unwrap();
        frame.polyline(&mut body, &hi, "#888", true);
        frame.polyline(&mut body, &lo, "#888", true);
        frame.polyline(&mut body, &err, COLORS[0], false);
    }
    Ok(document(&body, "Estimation error and 3 sigma bounds", w, h))
}

fn cell_color(c: MapCell) -> &'static str {
    match c {
        MapCell::Escape => "#000000",
        MapCell::Boundary => "#7f7f7f",
        MapCell::Capture => "#ffffff",
        MapCell::Invalid => "#f4cccc",
    }
}

/// One rectangle per grid cell; escape cells are black.
pub fn escape_map_svg(grid: &EscapeMapGrid) -> String {
    let spec = &grid.spec;
    let (w, h) = (WIDTH - MARGIN - 20.0, HEIGHT - 30.0 - MARGIN);
    let (cw, ch) = (w / spec.nx as f64, h / spec.ny as f64);
    let ext = Extent { x0: spec.x_min, x1: spec.x_max, y0: spec.y_min, y1: spec.y_max };
    let frame = Frame { ext, left: MARGIN, top: 30.0, w, h };
    let mut body = String::new();
    for j in 0..spec.ny {
        for i in 0..spec.nx {
            let (x, y) = (MARGIN + i as f64 * cw, 30.0 + (spec.ny - 1 - j) as f64 * ch);
            writeln!(
                body,
                r#"<rect class="cell" x="{x:.3}" y="{y:.3}" width="{:.3}" height="{:.3}" fill="{}"/>"#,
                cw + 0.05,
                ch + 0.05,
                cell_color(grid.get(i, j))
            )
            .unwrap();
        }
    }
    frame.axes(&mut body, "x T2 (m)", "y T2 (m)");
    document(&body, "Escape region for T2", WIDTH, HEIGHT)
}

/// Writes `trajectory.svg`, `distances.svg`, `controls.svg` and
/// `estimation.svg`. Nothing is written for an empty trace.
pub fn render_plots(trace: &SimulationTrace, bounds: &ControlBounds, dir: impl AsRef<Path>) -> Result<()> {
    let files = [
        ("trajectory.svg", trajectory_svg(trace)?),
        ("distances.svg", distances_svg(trace)?),
        ("controls.svg", controls_svg(trace, bounds)?),
        ("estimation.svg", estimation_svg(trace)?),
    ];
    let dir = dir.as_ref();
    ensure_dir(dir)?;
    for (name, svg) in files {
        write_file(dir, name, &svg)?;
    }
    Ok(())
}

pub fn render_escape_map(grid: &EscapeMapGrid, dir: impl AsRef<Path>) -> Result<()> {
    let dir = dir.as_ref();
    ensure_dir(dir)?;
    write_file(dir, "escape_map.svg", &escape_map_svg(grid))
}
