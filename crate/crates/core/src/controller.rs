//! Reactive safety-filtered control: assembles acceleration bounds from the
//! crossing-window barriers, the rear-end stopping-distance barrier, and the
//! actuation limits, then clamps the cruise feedback law into them.
//!
//! All position constraints are lifted to speed constraints through
//! time-optimal motion primitives, so every barrier here is first order and
//! the filter reduces to a closed-form clamp.

use crate::trajectories::feedback_law;
use crate::types::{
    ControlBounds, ControllerMode, CrossingWindow, PrecedingSignal, VehicleParams, VehicleState,
};
use thiserror::Error;

/// Speed below which a vehicle counts as stopped (m/s).
pub const V_STOP: f64 = 1e-3;

/// Braking gain of the safe-stop maneuver (1/s). Near standstill the brake
/// command tapers proportionally to speed so a zero-order-hold step cannot
/// push the vehicle backwards; away from standstill it saturates at the
/// actuation limit.
pub const SAFE_STOP_GAIN: f64 = 50.0;

/// Floor on the effective arrival horizon to keep the bound finite when the
/// vehicle sits exactly on the node.
const DT_EFF_FLOOR: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConstraintError {
    #[error("time-to-deadline must be > 0, got {dt}")]
    NonPositiveHorizon { dt: f64 },
    #[error("node already passed: distance {dp} < 0")]
    NodePassed { dp: f64 },
    #[error("rear-end gap already violated: gap {gap} < standstill {gamma}")]
    GapViolated { gap: f64, gamma: f64 },
}

/// Geometry of the active crossing constraint relative to the current state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConstraintContext {
    /// Distance to the conflict node (m).
    pub dp: f64,
    /// Time until the window opens (s); negative once open.
    pub dt1: f64,
    /// Time until the window closes (s).
    pub dt2: f64,
    /// Preceding-vehicle signal at the same instant.
    pub preceding: PrecedingSignal,
}

/// Speed thresholds that guarantee covering a distance `dp` before or
/// after an interval `dt` under a constant-acceleration primitive:
/// `(dp/dt - u_max dt/2, dp/dt + u_max dt/2)`.
///
/// The first is the latest-departure threshold (full throttle still makes
/// it), the second the earliest-arrival threshold (full braking still
/// holds back).
pub fn kinematic_deadline_speeds(
    dp: f64,
    dt: f64,
    u_max: f64,
) -> Result<(f64, f64), ConstraintError> {
    if dt <= 0.0 {
        return Err(ConstraintError::NonPositiveHorizon { dt });
    }
    let mean = dp / dt;
    let half = 0.5 * u_max * dt;
    Ok((mean - half, mean + half))
}

/// Horizon `sqrt(2 dp / u_max)` beyond which holding back from a node would
/// require reversing; used to cap the arrival constraint's lookahead.
pub fn overshoot_horizon(dp: f64, u_max: f64) -> Result<f64, ConstraintError> {
    if dp < 0.0 {
        return Err(ConstraintError::NodePassed { dp });
    }
    Ok((2.0 * dp / u_max).sqrt())
}

fn arrival_bound_at(v: f64, dp: f64, dt1: f64, params: &VehicleParams) -> f64 {
    let u_max = params.u_max();
    -params.kappa_t() * (v - dp / dt1 - 0.5 * u_max * dt1) + (dp - v * dt1) / (dt1 * dt1)
        - 0.5 * u_max
}

/// Upper acceleration bound enforcing "do not reach the node before the
/// window opens". Requires `dt1 > 0` and `dp >= 0`.
///
/// The horizon is capped at the overshoot horizon so the constraint never
/// asks the vehicle to reverse. A vehicle stopped short of an unopened
/// window gets a bound clamped toward zero (held to the stop-taper band),
/// so it neither pulls away early nor gets braked into reverse.
pub fn crossing_upper_bound(v: f64, ctx: &ConstraintContext, params: &VehicleParams) -> f64 {
    debug_assert!(ctx.dt1 > 0.0, "window already open");
    debug_assert!(ctx.dp >= 0.0, "node already passed");
    let dt_star = (2.0 * ctx.dp / params.u_max()).sqrt();
    let dt_eff = ctx.dt1.min(dt_star).max(DT_EFF_FLOOR);
    let bound = arrival_bound_at(v, ctx.dp, dt_eff, params);
    if v <= V_STOP {
        let taper = -SAFE_STOP_GAIN * v;
        bound.clamp(taper.min(0.0), taper.max(0.0))
    } else {
        bound
    }
}

/// Lower acceleration bound enforcing "cross the node before the window
/// closes". Requires `dt2 > 0` and `dp >= 0`.
pub fn crossing_lower_bound(v: f64, ctx: &ConstraintContext, params: &VehicleParams) -> f64 {
    debug_assert!(ctx.dt2 > 0.0, "departure deadline already passed");
    debug_assert!(ctx.dp >= 0.0, "node already passed");
    let u_max = params.u_max();
    let dt2 = ctx.dt2;
    params.kappa_t() * (ctx.dp / dt2 - 0.5 * u_max * dt2 - v)
        + (ctx.dp - v * dt2) / (dt2 * dt2)
        + 0.5 * u_max
}

/// Upper acceleration bound keeping the minimum stopping distance behind
/// the preceding vehicle; `None` when there is no preceding vehicle (the
/// constraint is trivially satisfied).
pub fn rear_end_upper_bound(
    state: &VehicleState,
    sig: &PrecedingSignal,
    params: &VehicleParams,
) -> Result<Option<f64>, ConstraintError> {
    let (delta, delta_dot) = match sig {
        PrecedingSignal::Absent => return Ok(None),
        PrecedingSignal::Present { position, speed } => (*position, *speed),
    };
    let u_max = params.u_max();
    let margin = -2.0 * u_max * (state.p() - delta + params.gamma());
    if margin < 0.0 {
        return Err(ConstraintError::GapViolated {
            gap: delta - state.p(),
            gamma: params.gamma(),
        });
    }
    let closing = state.v() - delta_dot;
    let root = margin.sqrt();
    if root == 0.0 && closing == 0.0 {
        // Matched speeds exactly on the barrier surface.
        return Ok(Some(0.0));
    }
    Ok(Some(
        -params.kappa_r() * (closing - root) - u_max * closing / root,
    ))
}

/// Assembles the admissible acceleration interval at time `t`.
///
/// Arrival bounds come from every window that has not opened yet, the
/// departure bound from the nearest unexpired window only, and the rear-end
/// bound from the preceding signal. Windows behind the vehicle must already
/// be retired by the caller; any remaining one with `p_node < p` is skipped.
/// Infeasibility is represented in the result, never thrown; a breached
/// rear-end gap maps to a hard-braking upper bound.
///
/// While a window is still closed, its own arrival bound can mandate a wait
/// that its departure bound contradicts (stopping short of the node drives
/// the departure pressure positive as the deadline nears). That
/// self-conflict is resolved by relaxing the departure side until the
/// window opens; only conflicts against other constraints (rear-end,
/// actuation) surface as infeasibility.
pub fn assemble_bounds(
    state: &VehicleState,
    schedule: &[CrossingWindow],
    sig: &PrecedingSignal,
    params: &VehicleParams,
    t: f64,
) -> ControlBounds {
    let u_max = params.u_max();
    let mut upper: Option<f64> = None;
    let mut push_upper = |b: f64| {
        upper = Some(match upper {
            Some(cur) => cur.min(b),
            None => b,
        });
    };

    let mut lower: Option<f64> = None;
    let mut lower_resolved = false;
    for window in schedule {
        let dp = window.p_node() - state.p();
        if dp < 0.0 {
            continue;
        }
        let ctx = ConstraintContext {
            dp,
            dt1: window.t_lo() - t,
            dt2: window.t_hi() - t,
            preceding: *sig,
        };
        let mut arrival = None;
        if ctx.dt1 > 0.0 {
            let b = crossing_upper_bound(state.v(), &ctx, params);
            push_upper(b);
            arrival = Some(b);
        }
        // Departure bound: nearest unexpired window only. The schedule is
        // sorted by p_node, so the first un-retired window is the nearest.
        if !lower_resolved && ctx.dt2 > 0.0 {
            lower_resolved = true;
            let lo = crossing_lower_bound(state.v(), &ctx, params);
            let self_conflict = matches!(arrival, Some(cap) if lo > cap);
            if !self_conflict {
                lower = Some(lo);
            }
        }
    }

    match rear_end_upper_bound(state, sig, params) {
        Ok(Some(b)) => push_upper(b),
        Ok(None) => {}
        Err(_) => push_upper(f64::NEG_INFINITY),
    }

    ControlBounds::new(
        lower.map_or(-u_max, |b| b.min(u_max)),
        upper.map_or(u_max, |b| b.max(-u_max)),
    )
}

/// Infeasible bound pair returned by [`clamp_control`]; carries the
/// conflicting values.
#[derive(Debug, Clone, Copy, PartialEq, Error)]
#[error("inconsistent bounds: lower {} > upper {}", bounds.lower, bounds.upper)]
pub struct InfeasibleBounds {
    pub bounds: ControlBounds,
}

/// Closed-form safety filter: projects `u_ref` onto `[lower, upper]` via
/// `min(max(u_ref, lower), upper)`, or signals infeasibility when the
/// interval is inverted.
pub fn clamp_control(u_ref: f64, bounds: ControlBounds) -> Result<f64, InfeasibleBounds> {
    if !bounds.is_feasible() {
        return Err(InfeasibleBounds { bounds });
    }
    Ok(u_ref.max(bounds.lower).min(bounds.upper))
}

/// One control decision: the commanded acceleration, the successor mode,
/// and the bounds as computed before the feasibility check.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ControlDecision {
    pub u: f64,
    pub mode: ControllerMode,
    pub bounds: ControlBounds,
}

/// Request for a fresh crossing window, emitted when the bounds invert.
#[derive(Debug, Clone, PartialEq)]
pub struct ScheduleRequest {
    pub node_id: String,
}

/// One step of the switching controller.
///
/// In nominal operation the saturated feedback reference is clamped into
/// the assembled bounds. When the bounds invert, the vehicle drops the
/// departure constraint, requests a new window for the offending node, and
/// brakes to a stop until a consistent schedule arrives; a consistent
/// schedule returns it to nominal. The function is pure: identical
/// arguments (mode included) produce identical decisions, and the schedule
/// request is returned as data rather than performed.
pub fn controller_step(
    state: &VehicleState,
    schedule: &[CrossingWindow],
    sig: &PrecedingSignal,
    params: &VehicleParams,
    mode: ControllerMode,
    t: f64,
) -> (ControlDecision, Option<ScheduleRequest>) {
    let bounds = assemble_bounds(state, schedule, sig, params, t);
    let u_max = params.u_max();
    let u_ref = feedback_law(state, params).clamp(-u_max, u_max);
    match clamp_control(u_ref, bounds) {
        Ok(u) => (
            ControlDecision {
                u,
                mode: ControllerMode::Nominal,
                bounds,
            },
            None,
        ),
        Err(_) => {
            let next_mode = match mode {
                ControllerMode::Nominal => ControllerMode::AwaitingSchedule,
                ControllerMode::AwaitingSchedule | ControllerMode::SafeStop => {
                    ControllerMode::SafeStop
                }
            };
            // Safe mode: brake to a stop and hold there, floored at the
            // actuation limit and never above the rear-end bound.
            let mut u = (-SAFE_STOP_GAIN * state.v()).clamp(-u_max, u_max);
            if let Ok(Some(rear)) = rear_end_upper_bound(state, sig, params) {
                u = u.min(rear);
            }
            let u = u.max(-u_max);
            let request = schedule
                .iter()
                .find(|w| w.p_node() >= state.p() && w.t_hi() > t)
                .or_else(|| schedule.iter().find(|w| w.p_node() >= state.p()))
                .map(|w| ScheduleRequest {
                    node_id: w.node_id().to_string(),
                });
            (
                ControlDecision {
                    u,
                    mode: next_mode,
                    bounds,
                },
                request,
            )
        }
    }
}
