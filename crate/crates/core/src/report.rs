//! Run artifacts: trajectory CSV, window-grant CSV, and the structured
//! metrics document, plus the parsers used to read them back for plotting.
//!
//! Floating-point columns use nine significant digits so two runs of the
//! same scenario serialize byte-identically.

use crate::coordinator::GrantRecord;
use crate::simulator::{Scenario, ScenarioResult};
use std::fmt::Write as _;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ParseError {
    #[error("line {line}: {message}")]
    Malformed { line: usize, message: String },
    #[error("missing header line")]
    MissingHeader,
    #[error("no data rows")]
    Empty,
}

fn fmt_f64(x: f64) -> String {
    format!("{x:.8e}")
}

/// Serializes all trajectory logs as one CSV, rows ordered by
/// `(t, vehicle_id)`.
pub fn trajectory_csv(result: &ScenarioResult, scenario: &Scenario) -> String {
    let dt = scenario.dt;
    let mut rows: Vec<(i64, usize, String)> = Vec::new();
    for log in &result.logs {
        for s in &log.samples {
            let step = (s.t / dt).round() as i64;
            let line = format!(
                "{},{},{},{},{},{},{},{},{}",
                fmt_f64(s.t),
                log.vehicle,
                log.lane,
                fmt_f64(s.p),
                fmt_f64(s.v),
                fmt_f64(s.u),
                s.mode.as_str(),
                fmt_f64(s.u_lower),
                fmt_f64(s.u_upper),
            );
            rows.push((step, log.vehicle, line));
        }
    }
    rows.sort_by(|a, b| a.0.cmp(&b.0).then(a.1.cmp(&b.1)));
    let mut out = String::from("t,vehicle_id,lane,p,v,u,mode,u_lower,u_upper\n");
    for (_, _, line) in rows {
        out.push_str(&line);
        out.push('\n');
    }
    out
}

/// Serializes the grant history, one row per grant.
pub fn windows_csv(window_log: &[GrantRecord]) -> String {
    let mut out = String::from("vehicle_id,node_id,t_lo,t_hi,granted_at,superseded\n");
    for g in window_log {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{}",
            g.vehicle,
            g.node_id,
            fmt_f64(g.t_lo),
            fmt_f64(g.t_hi),
            fmt_f64(g.granted_at),
            g.superseded,
        );
    }
    out
}

/// One row of the controller-comparison table.
#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonRow {
    pub algorithm: String,
    pub alpha: f64,
    pub j_u_mean: f64,
    pub j_alpha_mean: f64,
    /// Mean control-computation time: per step for the reactive controller,
    /// per plan for the baseline (s).
    pub time_mean_s: f64,
}

/// Structured metrics document for one run; compute-time fields live in
/// their own `[compute]` section so determinism checks can strip them.
pub fn metrics_doc(
    result: &ScenarioResult,
    scenario: &Scenario,
    comparison: Option<&[ComparisonRow]>,
) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "[run]");
    let _ = writeln!(out, "scenario = {:?}", scenario.name);
    let _ = writeln!(out, "controller = {:?}", scenario.controller.as_str());
    let _ = writeln!(out, "dt_s = {}", fmt_f64(scenario.dt));
    let _ = writeln!(out, "t_end_s = {}", fmt_f64(scenario.t_end));
    if let Some(seed) = scenario.seed {
        let _ = writeln!(out, "seed = {seed}");
    }
    let _ = writeln!(out, "vehicles = {}", result.logs.len());

    let _ = writeln!(out, "\n[energy]");
    let _ = writeln!(out, "j_u_mean = {}", fmt_f64(result.j_u_mean));
    let _ = writeln!(out, "j_alpha_mean = {}", fmt_f64(result.j_alpha_mean));
    for m in &result.per_vehicle {
        let _ = writeln!(out, "\n[[energy.per_vehicle]]");
        let _ = writeln!(out, "vehicle_id = {}", m.vehicle);
        let _ = writeln!(out, "j_u = {}", fmt_f64(m.j_u));
        let _ = writeln!(out, "j_alpha = {}", fmt_f64(m.j_alpha));
    }

    let _ = writeln!(out, "\n[audit]");
    match result.audit.min_rear_gap {
        Some(g) => {
            let _ = writeln!(out, "min_rear_end_gap_m = {}", fmt_f64(g));
        }
        None => {
            let _ = writeln!(out, "min_rear_end_gap_m = \"n/a\"");
        }
    }
    let _ = writeln!(
        out,
        "rear_end_violations = {}",
        result.audit.gap_violations.len()
    );
    let _ = writeln!(
        out,
        "co_occupancy_violations = {}",
        result.audit.co_occupancy.len()
    );
    let _ = writeln!(
        out,
        "barrier_excess_max = {}",
        fmt_f64(result.audit.barrier_excess_max)
    );
    let _ = writeln!(out, "violations_total = {}", result.audit.violation_count());
    for c in &result.audit.compliance {
        let _ = writeln!(out, "\n[[audit.compliance]]");
        let _ = writeln!(out, "vehicle_id = {}", c.vehicle);
        let _ = writeln!(out, "node_id = {:?}", c.node_id);
        let _ = writeln!(out, "t_lo = {}", fmt_f64(c.t_lo));
        let _ = writeln!(out, "t_hi = {}", fmt_f64(c.t_hi));
        match c.t_cross {
            Some(t) => {
                let _ = writeln!(out, "t_cross = {}", fmt_f64(t));
            }
            None => {
                let _ = writeln!(out, "t_cross = \"not crossed\"");
            }
        }
        match c.compliant {
            Some(ok) => {
                let _ = writeln!(out, "compliant = {ok}");
            }
            None => {
                let _ = writeln!(out, "compliant = \"n/a\"");
            }
        }
    }
    if !result.plan_failures.is_empty() {
        let _ = writeln!(out, "\n[plan_failures]");
        for (vehicle, err) in &result.plan_failures {
            let _ = writeln!(out, "vehicle_{vehicle} = {:?}", err.to_string());
        }
    }

    if let Some(rows) = comparison {
        for row in rows {
            let _ = writeln!(out, "\n[[comparison]]");
            let _ = writeln!(out, "algorithm = {:?}", row.algorithm);
            let _ = writeln!(out, "alpha = {}", fmt_f64(row.alpha));
            let _ = writeln!(out, "j_u = {}", fmt_f64(row.j_u_mean));
            let _ = writeln!(out, "j_alpha = {}", fmt_f64(row.j_alpha_mean));
            let _ = writeln!(out, "time_s = {}", fmt_f64(row.time_mean_s));
        }
    }

    let _ = writeln!(out, "\n[compute]");
    let _ = writeln!(out, "per_step_count = {}", result.per_step.count);
    let _ = writeln!(out, "per_step_min_s = {}", fmt_f64(result.per_step.min));
    let _ = writeln!(out, "per_step_mean_s = {}", fmt_f64(result.per_step.mean()));
    let _ = writeln!(out, "per_step_max_s = {}", fmt_f64(result.per_step.max));
    let _ = writeln!(out, "per_plan_count = {}", result.per_plan.count);
    let _ = writeln!(out, "per_plan_min_s = {}", fmt_f64(result.per_plan.min));
    let _ = writeln!(out, "per_plan_mean_s = {}", fmt_f64(result.per_plan.mean()));
    let _ = writeln!(out, "per_plan_max_s = {}", fmt_f64(result.per_plan.max));
    out
}

/// Everything the metrics document contains except the `[compute]` section;
/// used for determinism comparisons.
pub fn strip_compute_section(doc: &str) -> String {
    match doc.find("\n[compute]") {
        Some(idx) => doc[..idx].to_string(),
        None => doc.to_string(),
    }
}

/// Trajectory CSV row with the columns the plotter needs.
#[derive(Debug, Clone, PartialEq)]
pub struct TrajRow {
    pub t: f64,
    pub vehicle: usize,
    pub lane: String,
    pub p: f64,
    pub v: f64,
    pub u: f64,
}

pub fn parse_trajectory_csv(text: &str) -> Result<Vec<TrajRow>, ParseError> {
    let mut lines = text.lines().enumerate();
    let (_, header) = lines.next().ok_or(ParseError::MissingHeader)?;
    if !header.starts_with("t,vehicle_id,lane,p,v,u") {
        return Err(ParseError::Malformed {
            line: 1,
            message: format!("unexpected header: {header}"),
        });
    }
    let mut rows = Vec::new();
    for (i, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() < 6 {
            return Err(ParseError::Malformed {
                line: i + 1,
                message: format!("expected at least 6 fields, got {}", fields.len()),
            });
        }
        let num = |idx: usize| -> Result<f64, ParseError> {
            fields[idx].parse().map_err(|_| ParseError::Malformed {
                line: i + 1,
                message: format!("bad number in column {}: {}", idx + 1, fields[idx]),
            })
        };
        rows.push(TrajRow {
            t: num(0)?,
            vehicle: fields[1].parse().map_err(|_| ParseError::Malformed {
                line: i + 1,
                message: format!("bad vehicle id: {}", fields[1]),
            })?,
            lane: fields[2].to_string(),
            p: num(3)?,
            v: num(4)?,
            u: num(5)?,
        });
    }
    if rows.is_empty() {
        return Err(ParseError::Empty);
    }
    Ok(rows)
}

/// Window-log CSV row.
#[derive(Debug, Clone, PartialEq)]
pub struct WindowRow {
    pub vehicle: usize,
    pub node_id: String,
    pub t_lo: f64,
    pub t_hi: f64,
    pub granted_at: f64,
    pub superseded: bool,
}

pub fn parse_windows_csv(text: &str) -> Result<Vec<WindowRow>, ParseError> {
    let mut lines = text.lines().enumerate();
    let (_, header) = lines.next().ok_or(ParseError::MissingHeader)?;
    if !header.starts_with("vehicle_id,node_id,t_lo,t_hi") {
        return Err(ParseError::Malformed {
            line: 1,
            message: format!("unexpected header: {header}"),
        });
    }
    let mut rows = Vec::new();
    for (i, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() < 6 {
            return Err(ParseError::Malformed {
                line: i + 1,
                message: format!("expected 6 fields, got {}", fields.len()),
            });
        }
        let num = |idx: usize| -> Result<f64, ParseError> {
            fields[idx].parse().map_err(|_| ParseError::Malformed {
                line: i + 1,
                message: format!("bad number in column {}: {}", idx + 1, fields[idx]),
            })
        };
        rows.push(WindowRow {
            vehicle: fields[0].parse().map_err(|_| ParseError::Malformed {
                line: i + 1,
                message: format!("bad vehicle id: {}", fields[0]),
            })?,
            node_id: fields[1].to_string(),
            t_lo: num(2)?,
            t_hi: num(3)?,
            granted_at: num(4)?,
            superseded: fields[5].trim() == "true",
        });
    }
    Ok(rows)
}
