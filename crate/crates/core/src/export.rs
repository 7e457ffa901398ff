//! Trace and escape-map files. Numbers are written in shortest round-trip
//! form so re-reading reproduces the exact values.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::Serialize;

use crate::engagement::{EngagementOutcome, JointState};
use crate::error::{Error, Result};
use crate::escape::EscapeMapGrid;
use crate::sim::SimulationTrace;

pub const TRAJECTORY_HEADER: &str =
    "t,x_t1,y_t1,x_t2,y_t2,x_a1,y_a1,x_a2,y_a2,heading_t1,heading_t2,heading_a1,heading_a2";
pub const DISTANCES_HEADER: &str = "t,attacker_range,r1,r2";
pub const CONTROLS_HEADER: &str = "t,u1,u2";
pub const ESTIMATION_HEADER: &str = "t,err_x_a1,err_y_a1,err_x_a2,err_y_a2,err_heading_a1,err_heading_a2,err_accel_a1,err_accel_a2,\
sigma_x_a1,sigma_y_a1,sigma_x_a2,sigma_y_a2,sigma_heading_a1,sigma_heading_a2,sigma_accel_a1,sigma_accel_a2";
pub const ESCAPE_MAP_HEADER: &str = "x,y,verdict";

fn row(out: &mut String, values: impl IntoIterator<Item = f64>) {
    let mut first = true;
    for v in values {
        if !first {
            out.push(',');
        }
        first = false;
        write!(out, "{v}").expect("string write");
    }
    out.push('\n');
}

fn state_row(s: &JointState) -> [f64; 13] {
    let a = [&s.target1, &s.target2, &s.attacker1, &s.attacker2];
    [
        s.t, a[0].x, a[0].y, a[1].x, a[1].y, a[2].x, a[2].y, a[3].x, a[3].y, a[0].heading, a[1].heading,
        a[2].heading, a[3].heading,
    ]
}

fn distance(a: [f64; 2], b: [f64; 2]) -> f64 {
    (a[0] - b[0]).hypot(a[1] - b[1])
}

pub fn trajectory_csv(trace: &SimulationTrace) -> String {
    let mut out = format!("{TRAJECTORY_HEADER}\n");
    for s in trace.states() {
        row(&mut out, state_row(s));
    }
    out
}

pub fn distances_csv(trace: &SimulationTrace) -> String {
    let mut out = format!("{DISTANCES_HEADER}\n");
    for s in trace.states() {
        let (a1, a2) = (s.attacker1.position(), s.attacker2.position());
        row(
            &mut out,
            [s.t, distance(a1, a2), distance(a1, s.target1.position()), distance(a2, s.target2.position())],
        );
    }
    out
}

pub fn controls_csv(trace: &SimulationTrace) -> String {
    let mut out = format!("{CONTROLS_HEADER}\n");
    for r in &trace.records {
        row(&mut out, [r.t, r.control.u1, r.control.u2]);
    }
    out
}

pub fn estimation_csv(trace: &SimulationTrace) -> String {
    let mut out = format!("{ESTIMATION_HEADER}\n");
    for r in &trace.records {
        row(&mut out, std::iter::once(r.t).chain(r.estimation_error()).chain(r.sigma));
    }
    out
}

#[derive(Serialize)]
struct OutcomeFile<'a> {
    #[serde(flatten)]
    outcome: &'a EngagementOutcome,
    timed_out: bool,
    end_time: f64,
    steps: usize,
    min_attacker_range: f64,
    solver_stalls: usize,
    skipped_updates: usize,
}

pub fn outcome_json(trace: &SimulationTrace) -> String {
    let file = OutcomeFile {
        outcome: &trace.outcome,
        timed_out: trace.timed_out,
        end_time: trace.final_state.t,
        steps: trace.len(),
        min_attacker_range: trace.min_attacker_range(),
        solver_stalls: trace.solver_stalls,
        skipped_updates: trace.skipped_updates,
    };
    let mut s = serde_json::to_string_pretty(&file).expect("outcome serializes");
    s.push('\n');
    s
}

pub fn escape_map_csv(grid: &EscapeMapGrid) -> String {
    let mut out = format!("{ESCAPE_MAP_HEADER}\n");
    for (x, y, c) in grid.rows() {
        writeln!(out, "{x},{y},{}", c.label()).expect("string write");
    }
    out
}

pub(crate) fn write_file(dir: &Path, name: &str, contents: &str) -> Result<()> {
    let path = dir.join(name);
    fs::write(&path, contents).map_err(|e| Error::io(path, e))
}

pub(crate) fn ensure_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

/// Writes the four CSV files and `outcome.json` into `dir` (created if
/// missing).
pub fn export_trace(trace: &SimulationTrace, dir: impl AsRef<Path>) -> Result<()> {
    let dir = dir.as_ref();
    ensure_dir(dir)?;
    write_file(dir, "trajectory.csv", &trajectory_csv(trace))?;
    write_file(dir, "distances.csv", &distances_csv(trace))?;
    write_file(dir, "controls.csv", &controls_csv(trace))?;
    write_file(dir, "estimation.csv", &estimation_csv(trace))?;
    write_file(dir, "outcome.json", &outcome_json(trace))
}

pub fn export_escape_map(grid: &EscapeMapGrid, dir: impl AsRef<Path>) -> Result<()> {
    let dir = dir.as_ref();
    ensure_dir(dir)?;
    write_file(dir, "escape_map.csv", &escape_map_csv(grid))
}
