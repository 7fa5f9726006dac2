//! Deterministic fixed-step closed-loop simulation of N vehicles on crossing
//! lanes: double-integrator dynamics under zero-order-hold control, explicit
//! coordinator interactions, trajectory logging, safety audits, and energy
//! metrics for both the reactive controller and the baseline planner.
//!
//! The world-step loop is single threaded and strictly ordered, so identical
//! scenarios produce bit-identical logs. Per-call compute timings are the
//! only nondeterministic outputs and are kept separate from the logs.

use crate::controller::{assemble_bounds, controller_step};
use crate::coordinator::{
    compute_earliest_feasible, next_green_window, GrantRecord, OccupancyLedger, SignalProgram,
};
use crate::trajectories::{
    baseline_earliest_arrival, baseline_solve, cost_jalpha, cost_ju, LinearProfile, PlanError,
    SampledTrajectory,
};
use crate::types::{
    ControllerMode, CrossingWindow, PrecedingSignal, VehicleParams, VehicleState,
};
use std::collections::BTreeMap;
use std::time::Instant;
use thiserror::Error;

/// Sampling step for the baseline planner's preceding-gap check (s).
const GAP_SAMPLE_DT_S: f64 = 1e-3;

/// Slack used by the rear-end audit (m).
pub const GAP_AUDIT_TOL_M: f64 = 1e-6;

/// Ceiling for barrier drift once a crossing barrier has been entered.
pub const BARRIER_AUDIT_TOL: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ScenarioError {
    #[error("dt must be > 0, got {0}")]
    BadDt(f64),
    #[error("t_end must exceed dt, got {0}")]
    BadHorizon(f64),
    #[error("vehicle {vehicle} references unknown lane {lane}")]
    UnknownLane { vehicle: usize, lane: String },
    #[error("lane {lane}: node positions must be strictly increasing")]
    UnorderedNodes { lane: String },
    #[error("lane {lane}: simultaneous spawns must have strictly increasing positions")]
    SpawnOrder { lane: String },
    #[error("vehicle {vehicle}: spawn time {spawn} outside [0, t_end)")]
    BadSpawn { vehicle: usize, spawn: f64 },
    #[error("vehicle {vehicle}: initial speed must be >= 0, got {v0}")]
    NegativeSpeed { vehicle: usize, v0: f64 },
    #[error("baseline controller requires an unsignalized scenario with at most one node per lane")]
    BaselineUnsupported,
    #[error("vehicle {vehicle}: window override references unknown node {node_id}")]
    UnknownOverrideNode { vehicle: usize, node_id: String },
}

/// One conflict node on a lane, at the lane's own arc length.
#[derive(Debug, Clone, PartialEq)]
pub struct LaneNode {
    pub node_id: String,
    pub position: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Lane {
    pub id: String,
    pub nodes: Vec<LaneNode>,
}

/// Fixed window handed to a vehicle directly, bypassing the coordinator.
/// Used to engineer audit scenarios.
#[derive(Debug, Clone, PartialEq)]
pub struct WindowOverride {
    pub node_id: String,
    pub t_lo: f64,
    pub t_hi: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct VehicleSpec {
    pub lane: String,
    pub spawn: f64,
    pub p0: f64,
    pub v0: f64,
    pub params: VehicleParams,
    pub window_overrides: Vec<WindowOverride>,
}

#[derive(Debug, Clone)]
pub enum IntersectionMode {
    Unsignalized { tau_sep: f64, dwell: f64 },
    Signalized(SignalProgram),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ControllerChoice {
    Proposed,
    Baseline,
}

impl ControllerChoice {
    pub fn as_str(&self) -> &'static str {
        match self {
            ControllerChoice::Proposed => "proposed",
            ControllerChoice::Baseline => "baseline",
        }
    }
}

#[derive(Debug, Clone)]
pub struct Scenario {
    pub name: String,
    pub lanes: Vec<Lane>,
    pub vehicles: Vec<VehicleSpec>,
    pub mode: IntersectionMode,
    pub dt: f64,
    pub t_end: f64,
    pub controller: ControllerChoice,
    /// Seed recorded when the scenario was generated randomly.
    pub seed: Option<u64>,
}

impl Scenario {
    pub fn validate(&self) -> Result<(), ScenarioError> {
        if !(self.dt > 0.0) {
            return Err(ScenarioError::BadDt(self.dt));
        }
        if !(self.t_end > self.dt) {
            return Err(ScenarioError::BadHorizon(self.t_end));
        }
        for lane in &self.lanes {
            for pair in lane.nodes.windows(2) {
                if pair[1].position <= pair[0].position {
                    return Err(ScenarioError::UnorderedNodes {
                        lane: lane.id.clone(),
                    });
                }
            }
        }
        for (i, v) in self.vehicles.iter().enumerate() {
            let lane = self
                .lanes
                .iter()
                .find(|l| l.id == v.lane)
                .ok_or_else(|| ScenarioError::UnknownLane {
                    vehicle: i,
                    lane: v.lane.clone(),
                })?;
            if !(0.0..self.t_end).contains(&v.spawn) {
                return Err(ScenarioError::BadSpawn {
                    vehicle: i,
                    spawn: v.spawn,
                });
            }
            if v.v0 < 0.0 {
                return Err(ScenarioError::NegativeSpeed { vehicle: i, v0: v.v0 });
            }
            for w in &v.window_overrides {
                if !lane.nodes.iter().any(|n| n.node_id == w.node_id) {
                    return Err(ScenarioError::UnknownOverrideNode {
                        vehicle: i,
                        node_id: w.node_id.clone(),
                    });
                }
            }
            // Simultaneous same-lane spawns must be ordered by position so
            // the preceding relation is well defined from the start.
            for (j, other) in self.vehicles.iter().enumerate().skip(i + 1) {
                if other.lane == v.lane && other.spawn == v.spawn && other.p0 <= v.p0 {
                    let _ = j;
                    return Err(ScenarioError::SpawnOrder {
                        lane: v.lane.clone(),
                    });
                }
            }
        }
        if self.controller == ControllerChoice::Baseline {
            let single_node = self.lanes.iter().all(|l| l.nodes.len() <= 1);
            let unsignalized = matches!(self.mode, IntersectionMode::Unsignalized { .. });
            if !(single_node && unsignalized) {
                return Err(ScenarioError::BaselineUnsupported);
            }
        }
        Ok(())
    }

    pub fn tau_sep(&self) -> f64 {
        match &self.mode {
            IntersectionMode::Unsignalized { tau_sep, .. } => *tau_sep,
            IntersectionMode::Signalized(_) => 0.0,
        }
    }

    fn lane_index(&self, id: &str) -> usize {
        self.lanes.iter().position(|l| l.id == id).unwrap()
    }
}

/// One logged control step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sample {
    pub t: f64,
    pub p: f64,
    pub v: f64,
    pub u: f64,
    pub mode: ModeLabel,
    pub u_lower: f64,
    pub u_upper: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModeLabel {
    Controller(ControllerMode),
    Baseline,
}

impl ModeLabel {
    pub fn as_str(&self) -> &'static str {
        match self {
            ModeLabel::Controller(m) => m.as_str(),
            ModeLabel::Baseline => "Baseline",
        }
    }
}

/// Uniformly sampled trajectory of one vehicle from its spawn step onward.
#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryLog {
    pub vehicle: usize,
    pub lane: String,
    pub samples: Vec<Sample>,
}

/// Running min/mean/max of a wall-clock measurement series (seconds).
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct TimingStats {
    pub count: usize,
    pub min: f64,
    pub max: f64,
    pub sum: f64,
}

impl TimingStats {
    fn record(&mut self, seconds: f64) {
        if self.count == 0 {
            self.min = seconds;
            self.max = seconds;
        } else {
            self.min = self.min.min(seconds);
            self.max = self.max.max(seconds);
        }
        self.sum += seconds;
        self.count += 1;
    }

    pub fn mean(&self) -> f64 {
        if self.count == 0 {
            0.0
        } else {
            self.sum / self.count as f64
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VehicleMetrics {
    pub vehicle: usize,
    pub j_u: f64,
    pub j_alpha: f64,
}

/// Rear-end gap violation detected by the audit.
#[derive(Debug, Clone, PartialEq)]
pub struct GapViolation {
    pub follower: usize,
    pub leader: usize,
    pub t: f64,
    pub gap: f64,
}

/// Two crossings of one node closer than the separation time.
#[derive(Debug, Clone, PartialEq)]
pub struct CoOccupancy {
    pub node_id: String,
    pub vehicle_a: usize,
    pub vehicle_b: usize,
    pub t_a: f64,
    pub t_b: f64,
}

/// Crossing-window compliance of one vehicle at one node. `compliant` is
/// `None` when the vehicle never crossed before the horizon.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplianceEntry {
    pub vehicle: usize,
    pub node_id: String,
    pub t_lo: f64,
    pub t_hi: f64,
    pub t_cross: Option<f64>,
    pub compliant: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct AuditReport {
    /// Minimum over time and same-lane pairs of leader minus follower
    /// position; `None` when no pair ever coexists.
    pub min_rear_gap: Option<f64>,
    pub gap_violations: Vec<GapViolation>,
    pub co_occupancy: Vec<CoOccupancy>,
    pub compliance: Vec<ComplianceEntry>,
    /// Largest crossing-barrier value observed after the barrier was first
    /// entered, while its window was active.
    pub barrier_excess_max: f64,
}

impl AuditReport {
    pub fn violation_count(&self) -> usize {
        self.gap_violations.len()
            + self.co_occupancy.len()
            + self
                .compliance
                .iter()
                .filter(|c| c.compliant == Some(false))
                .count()
    }
}

#[derive(Debug, Clone)]
pub struct ScenarioResult {
    pub logs: Vec<TrajectoryLog>,
    pub window_log: Vec<GrantRecord>,
    pub per_vehicle: Vec<VehicleMetrics>,
    pub j_u_mean: f64,
    pub j_alpha_mean: f64,
    pub per_step: TimingStats,
    pub per_plan: TimingStats,
    pub plan_failures: Vec<(usize, PlanError)>,
    pub audit: AuditReport,
}

#[derive(Debug, Clone)]
struct BaselinePlan {
    profile: LinearProfile,
    t_start: f64,
    /// Node this plan targets, if any.
    node_id: Option<String>,
}

impl BaselinePlan {
    fn cruise(t_start: f64, p0: f64, v0: f64) -> Self {
        Self {
            profile: LinearProfile {
                a: 0.0,
                b: 0.0,
                horizon: 0.0,
                p0,
                v0,
            },
            t_start,
            node_id: None,
        }
    }

    fn u(&self, t: f64) -> f64 {
        let rel = t - self.t_start;
        if rel < self.profile.horizon {
            self.profile.u(rel)
        } else {
            0.0
        }
    }

    fn position(&self, t: f64) -> f64 {
        self.profile.p_extended(t - self.t_start)
    }

    fn crossing_time(&self) -> Option<f64> {
        self.node_id.as_ref().map(|_| self.t_start + self.profile.horizon)
    }
}

struct ActiveVehicle {
    state: VehicleState,
    mode: ControllerMode,
    schedule: Vec<CrossingWindow>,
    preceding: PrecedingSignal,
    leader: Option<usize>,
    plan: Option<BaselinePlan>,
    samples: Vec<Sample>,
}

struct Engine<'a> {
    scenario: &'a Scenario,
    ledger: Option<OccupancyLedger>,
    dwell: f64,
    extra_grants: Vec<GrantRecord>,
    vehicles: Vec<Option<ActiveVehicle>>,
    per_step: TimingStats,
    per_plan: TimingStats,
    plan_failures: Vec<(usize, PlanError)>,
}

/// Arrival time at `p_target` along the unconstrained cruise profile
/// `v(t) = v_d + (v0 - v_d) e^{-alpha t}` from `(p0, v0)`, by bisection.
fn nominal_arrival_time(p0: f64, v0: f64, p_target: f64, params: &VehicleParams) -> f64 {
    let dp = p_target - p0;
    if dp <= 0.0 {
        return 0.0;
    }
    let a = params.alpha();
    let pos = |t: f64| params.v_d() * t + (v0 - params.v_d()) * (1.0 - (-a * t).exp()) / a;
    let mut hi = 1.0;
    let cap = 600.0;
    while pos(hi) < dp {
        hi *= 2.0;
        if hi > cap {
            return cap;
        }
    }
    let mut lo = 0.0;
    while hi - lo > 1e-6 {
        let mid = 0.5 * (lo + hi);
        if pos(mid) < dp {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    hi
}

impl<'a> Engine<'a> {
    fn new(scenario: &'a Scenario) -> Self {
        let (ledger, dwell) = match &scenario.mode {
            IntersectionMode::Unsignalized { tau_sep, dwell } => {
                (Some(OccupancyLedger::new(*tau_sep)), *dwell)
            }
            IntersectionMode::Signalized(_) => (None, 0.0),
        };
        Self {
            scenario,
            ledger,
            dwell,
            extra_grants: Vec::new(),
            vehicles: (0..scenario.vehicles.len()).map(|_| None).collect(),
            per_step: TimingStats::default(),
            per_plan: TimingStats::default(),
            plan_failures: Vec::new(),
        }
    }

    fn lane_of(&self, idx: usize) -> &Lane {
        let lane_id = &self.scenario.vehicles[idx].lane;
        &self.scenario.lanes[self.scenario.lane_index(lane_id)]
    }

    fn node_position(&self, idx: usize, node_id: &str) -> f64 {
        self.lane_of(idx)
            .nodes
            .iter()
            .find(|n| n.node_id == node_id)
            .map(|n| n.position)
            .unwrap_or(f64::INFINITY)
    }

    /// Nearest active same-lane vehicle strictly ahead of `p` on `lane`.
    fn find_leader(&self, lane: &str, p: f64, skip: usize) -> Option<usize> {
        let mut best: Option<(usize, f64)> = None;
        for (j, slot) in self.vehicles.iter().enumerate() {
            if j == skip {
                continue;
            }
            let Some(v) = slot else { continue };
            if self.scenario.vehicles[j].lane != lane {
                continue;
            }
            let pj = v.state.p();
            if pj > p && best.map_or(true, |(_, pb)| pj < pb) {
                best = Some((j, pj));
            }
        }
        best.map(|(j, _)| j)
    }

    fn signal_of(&self, idx: usize, t_from: f64) -> Vec<CrossingWindow> {
        let IntersectionMode::Signalized(program) = &self.scenario.mode else {
            return Vec::new();
        };
        let lane = self.lane_of(idx);
        lane.nodes
            .iter()
            .filter_map(|n| next_green_window(program, &lane.id, n.position, t_from))
            .collect()
    }

    fn spawn(&mut self, idx: usize, t: f64) {
        let spec = &self.scenario.vehicles[idx];
        let state = VehicleState::new(spec.p0, spec.v0).expect("validated spawn state");
        let leader = self.find_leader(&spec.lane, spec.p0, idx);
        let preceding = self.signal_from_leader(leader);

        let mut schedule = Vec::new();
        if !spec.window_overrides.is_empty() {
            for w in &spec.window_overrides {
                let p_node = self.node_position(idx, &w.node_id);
                schedule.push(
                    CrossingWindow::new(w.node_id.clone(), p_node, w.t_lo, w.t_hi)
                        .expect("validated override"),
                );
                self.extra_grants.push(GrantRecord {
                    vehicle: idx,
                    node_id: w.node_id.clone(),
                    t_lo: w.t_lo,
                    t_hi: w.t_hi,
                    granted_at: t,
                    superseded: false,
                });
            }
            schedule.sort_by(|a, b| a.p_node().total_cmp(&b.p_node()));
        } else if self.scenario.controller == ControllerChoice::Proposed {
            match &self.scenario.mode {
                IntersectionMode::Unsignalized { .. } => {
                    let nodes: Vec<LaneNode> = self.lane_of(idx).nodes.clone();
                    let mut prev_lo = t;
                    for node in nodes.iter().filter(|n| n.position > spec.p0) {
                        let nominal = t + nominal_arrival_time(
                            spec.p0,
                            spec.v0,
                            node.position,
                            &spec.params,
                        );
                        let t_nominal = nominal.max(prev_lo);
                        let ledger = self.ledger.as_mut().expect("unsignalized ledger");
                        let w = ledger
                            .request_window(idx, &node.node_id, node.position, t_nominal, self.dwell)
                            .expect("nominal request is never in the past");
                        prev_lo = w.t_lo();
                        schedule.push(w);
                    }
                }
                IntersectionMode::Signalized(_) => {
                    schedule = self.signal_of(idx, t);
                    for w in &schedule {
                        self.extra_grants.push(GrantRecord {
                            vehicle: idx,
                            node_id: w.node_id().to_string(),
                            t_lo: w.t_lo(),
                            t_hi: w.t_hi(),
                            granted_at: t,
                            superseded: false,
                        });
                    }
                }
            }
        }

        let plan = if self.scenario.controller == ControllerChoice::Baseline {
            Some(self.plan_baseline(idx, state, t, leader))
        } else {
            None
        };

        self.vehicles[idx] = Some(ActiveVehicle {
            state,
            mode: ControllerMode::Nominal,
            schedule,
            preceding,
            leader,
            plan,
            samples: Vec::new(),
        });
    }

    fn signal_from_leader(&self, leader: Option<usize>) -> PrecedingSignal {
        match leader.and_then(|j| self.vehicles[j].as_ref()) {
            Some(lv) => PrecedingSignal::Present {
                position: lv.state.p(),
                speed: lv.state.v(),
            },
            None => PrecedingSignal::Absent,
        }
    }

    /// Crossing instants already committed by other baseline plans at the
    /// given node, padded by the separation time, relative to `t_start`.
    fn blocked_intervals(&self, node_id: &str, skip: usize, t_start: f64) -> Vec<(f64, f64)> {
        let tau = self.scenario.tau_sep();
        let mut blocked = Vec::new();
        for (j, slot) in self.vehicles.iter().enumerate() {
            if j == skip {
                continue;
            }
            let Some(v) = slot else { continue };
            let Some(plan) = &v.plan else { continue };
            if plan.node_id.as_deref() != Some(node_id) {
                continue;
            }
            if let Some(t_cross) = plan.crossing_time() {
                blocked.push((t_cross - tau - t_start, t_cross + tau - t_start));
            }
        }
        blocked.sort_by(|a, b| a.0.total_cmp(&b.0));
        blocked
    }

    fn leader_samples(&self, leader: Option<usize>, t_start: f64) -> Option<SampledTrajectory> {
        let leader_plan = leader
            .and_then(|j| self.vehicles[j].as_ref())
            .and_then(|v| v.plan.as_ref())?;
        let horizon = self.scenario.t_end - t_start;
        let n = (horizon / GAP_SAMPLE_DT_S).ceil() as usize + 1;
        let positions = (0..n)
            .map(|i| leader_plan.position(t_start + i as f64 * GAP_SAMPLE_DT_S))
            .collect();
        Some(SampledTrajectory {
            t0: 0.0,
            dt: GAP_SAMPLE_DT_S,
            positions,
        })
    }

    fn plan_baseline(
        &mut self,
        idx: usize,
        state: VehicleState,
        t: f64,
        leader: Option<usize>,
    ) -> BaselinePlan {
        let spec = &self.scenario.vehicles[idx];
        let target = self
            .lane_of(idx)
            .nodes
            .iter()
            .find(|n| n.position > state.p())
            .cloned();
        let Some(node) = target else {
            return BaselinePlan::cruise(t, state.p(), state.v());
        };
        let blocked = self.blocked_intervals(&node.node_id, idx, t);
        let preceding = self.leader_samples(leader, t);

        let started = Instant::now();
        let solved = baseline_earliest_arrival(
            state.p(),
            state.v(),
            node.position,
            &spec.params,
            &blocked,
            preceding.as_ref(),
        );
        self.per_plan.record(started.elapsed().as_secs_f64());

        match solved {
            Ok(horizon) => BaselinePlan {
                profile: baseline_solve(state.p(), state.v(), node.position, horizon),
                t_start: t,
                node_id: Some(node.node_id),
            },
            Err(e) => {
                self.plan_failures.push((idx, e));
                BaselinePlan::cruise(t, state.p(), state.v())
            }
        }
    }

    /// Smallest crossing-time delay at or beyond the time-optimal arrival
    /// for which a fresh window makes the assembled bounds consistent at
    /// the current state. Grows geometrically: the reactive bounds demand
    /// more slack than the bare minimum-time arrival, especially from a
    /// standstill near the node.
    fn feasible_target(
        &self,
        idx: usize,
        pos: usize,
        p_node: f64,
        node_id: &str,
        t: f64,
    ) -> f64 {
        let vehicle = self.vehicles[idx].as_ref().expect("active");
        let spec = &self.scenario.vehicles[idx];
        let params = spec.params;
        let earliest = compute_earliest_feasible(&vehicle.state, p_node, params.u_max(), t);
        let dwell = if self.dwell > 0.0 { self.dwell } else { 1.0 };
        let mut delay = (earliest - t).max(0.0);
        for _ in 0..24 {
            let t_lo = (t + delay).max(t + 1e-6);
            let candidate = match &self.scenario.mode {
                IntersectionMode::Unsignalized { .. } => {
                    CrossingWindow::new(node_id, p_node, t_lo, t_lo + dwell).ok()
                }
                IntersectionMode::Signalized(program) => {
                    next_green_window(program, &spec.lane, p_node, t_lo)
                }
            };
            let Some(candidate) = candidate else { break };
            let mut probe = vehicle.schedule.clone();
            probe[pos] = candidate;
            let bounds = assemble_bounds(&vehicle.state, &probe, &vehicle.preceding, &params, t);
            if bounds.is_feasible() {
                return t + delay;
            }
            delay = delay.max(0.25) * 2.0;
            if delay > 240.0 {
                break;
            }
        }
        t + delay
    }

    /// Instantaneous renegotiation: release and regrant the offending
    /// window, then push any later window whose opening would precede it.
    fn renegotiate(&mut self, idx: usize, node_id: &str, t: f64) {
        let Some(vehicle) = self.vehicles[idx].as_ref() else { return };
        if !self.scenario.vehicles[idx].window_overrides.is_empty() {
            return;
        }
        let Some(pos) = vehicle.schedule.iter().position(|w| w.node_id() == node_id) else {
            return;
        };
        let params = self.scenario.vehicles[idx].params;
        let p_node = vehicle.schedule[pos].p_node();
        let earliest = self.feasible_target(idx, pos, p_node, node_id, t);

        let replacement = match &self.scenario.mode {
            IntersectionMode::Unsignalized { .. } => {
                let ledger = self.ledger.as_mut().expect("unsignalized ledger");
                ledger
                    .renegotiate(idx, node_id, p_node, earliest, self.dwell)
                    .ok()
            }
            IntersectionMode::Signalized(program) => {
                let lane_id = self.scenario.vehicles[idx].lane.clone();
                let w = next_green_window(program, &lane_id, p_node, earliest);
                if let Some(w) = &w {
                    for g in self.extra_grants.iter_mut().rev() {
                        if g.vehicle == idx && g.node_id == node_id && !g.superseded {
                            g.superseded = true;
                            break;
                        }
                    }
                    self.extra_grants.push(GrantRecord {
                        vehicle: idx,
                        node_id: node_id.to_string(),
                        t_lo: w.t_lo(),
                        t_hi: w.t_hi(),
                        granted_at: t,
                        superseded: false,
                    });
                }
                w
            }
        };
        let Some(new_window) = replacement else { return };

        let vehicle = self.vehicles[idx].as_mut().expect("checked above");
        let new_lo = new_window.t_lo();
        vehicle.schedule[pos] = new_window;

        // Keep later windows' openings non-decreasing along the path.
        let laggards: Vec<(usize, String, f64)> = vehicle
            .schedule
            .iter()
            .enumerate()
            .skip(pos + 1)
            .filter(|(_, w)| w.t_lo() < new_lo)
            .map(|(i, w)| (i, w.node_id().to_string(), w.p_node()))
            .collect();
        for (i, lag_node, lag_pos) in laggards {
            if let IntersectionMode::Unsignalized { .. } = self.scenario.mode {
                let ledger = self.ledger.as_mut().expect("unsignalized ledger");
                if let Ok(w) = ledger.renegotiate(idx, &lag_node, lag_pos, new_lo, self.dwell) {
                    let vehicle = self.vehicles[idx].as_mut().expect("active");
                    vehicle.schedule[i] = w;
                }
            }
        }
    }

    fn run(mut self) -> ScenarioResult {
        let scenario = self.scenario;
        let dt = scenario.dt;
        let n_steps = (scenario.t_end / dt - 1e-9).ceil() as usize;
        let spawn_steps: Vec<usize> = scenario
            .vehicles
            .iter()
            .map(|v| (v.spawn / dt - 1e-9).ceil().max(0.0) as usize)
            .collect();

        for k in 0..n_steps {
            let t = k as f64 * dt;
            if let Some(ledger) = self.ledger.as_mut() {
                ledger.advance_to(t);
            }

            // Spawns, in index order; baseline followers replan when the
            // spawn changes their leader.
            let mut spawned_lane: Vec<String> = Vec::new();
            for idx in 0..scenario.vehicles.len() {
                if spawn_steps[idx] == k && self.vehicles[idx].is_none() {
                    self.spawn(idx, t);
                    spawned_lane.push(scenario.vehicles[idx].lane.clone());
                }
            }
            if scenario.controller == ControllerChoice::Baseline && !spawned_lane.is_empty() {
                for idx in 0..scenario.vehicles.len() {
                    let Some(v) = self.vehicles[idx].as_ref() else { continue };
                    if spawn_steps[idx] == k {
                        continue;
                    }
                    if !spawned_lane.contains(&scenario.vehicles[idx].lane) {
                        continue;
                    }
                    let current = self.find_leader(
                        &scenario.vehicles[idx].lane,
                        v.state.p(),
                        idx,
                    );
                    if current != v.leader {
                        let state = v.state;
                        let plan = self.plan_baseline(idx, state, t, current);
                        let v = self.vehicles[idx].as_mut().expect("active");
                        v.leader = current;
                        v.plan = Some(plan);
                    }
                }
            }

            // Control, in index order.
            let mut commands: Vec<(usize, f64)> = Vec::new();
            let mut requests: Vec<(usize, String)> = Vec::new();
            for idx in 0..scenario.vehicles.len() {
                let Some(vehicle) = self.vehicles[idx].as_ref() else { continue };
                let spec = &scenario.vehicles[idx];
                let (u, mode_label, bounds_lo, bounds_hi, next_mode) = match scenario.controller
                {
                    ControllerChoice::Proposed => {
                        let started = Instant::now();
                        let (decision, request) = controller_step(
                            &vehicle.state,
                            &vehicle.schedule,
                            &vehicle.preceding,
                            &spec.params,
                            vehicle.mode,
                            t,
                        );
                        self.per_step.record(started.elapsed().as_secs_f64());
                        if let Some(r) = request {
                            requests.push((idx, r.node_id));
                        }
                        (
                            decision.u,
                            ModeLabel::Controller(decision.mode),
                            decision.bounds.lower,
                            decision.bounds.upper,
                            decision.mode,
                        )
                    }
                    ControllerChoice::Baseline => {
                        let plan = vehicle.plan.as_ref().expect("baseline plan");
                        let u = plan.u(t);
                        (
                            u,
                            ModeLabel::Baseline,
                            -spec.params.u_max(),
                            spec.params.u_max(),
                            ControllerMode::Nominal,
                        )
                    }
                };
                let vehicle = self.vehicles[idx].as_mut().expect("active");
                vehicle.mode = next_mode;
                vehicle.samples.push(Sample {
                    t,
                    p: vehicle.state.p(),
                    v: vehicle.state.v(),
                    u,
                    mode: mode_label,
                    u_lower: bounds_lo,
                    u_upper: bounds_hi,
                });
                commands.push((idx, u));
            }

            // Coordinator interactions are instantaneous; fresh windows take
            // effect at the next step.
            for (idx, node_id) in requests {
                self.renegotiate(idx, &node_id, t);
            }

            // Exact zero-order-hold integration of the double integrator.
            for (idx, u) in commands {
                let vehicle = self.vehicles[idx].as_mut().expect("active");
                let p = vehicle.state.p() + vehicle.state.v() * dt + 0.5 * u * dt * dt;
                let v = vehicle.state.v() + u * dt;
                vehicle.state = VehicleState::new(p, v).expect("finite state");
                // Retire crossed windows.
                while let Some(first) = vehicle.schedule.first() {
                    if vehicle.state.p() > first.p_node() {
                        vehicle.schedule.remove(0);
                    } else {
                        break;
                    }
                }
            }

            // Refresh preceding signals from the new ordering; newly spawned
            // leaders become visible here, one step after their spawn.
            for idx in 0..scenario.vehicles.len() {
                let Some(v) = self.vehicles[idx].as_ref() else { continue };
                let leader = self.find_leader(&scenario.vehicles[idx].lane, v.state.p(), idx);
                let signal = self.signal_from_leader(leader);
                let v = self.vehicles[idx].as_mut().expect("active");
                v.preceding = signal;
                if scenario.controller == ControllerChoice::Proposed {
                    v.leader = leader;
                }
            }
        }

        let logs: Vec<TrajectoryLog> = self
            .vehicles
            .iter()
            .enumerate()
            .filter_map(|(idx, slot)| {
                slot.as_ref().map(|v| TrajectoryLog {
                    vehicle: idx,
                    lane: scenario.vehicles[idx].lane.clone(),
                    samples: v.samples.clone(),
                })
            })
            .collect();

        let mut window_log: Vec<GrantRecord> = self
            .ledger
            .as_ref()
            .map(|l| l.grants().to_vec())
            .unwrap_or_default();
        window_log.extend(self.extra_grants.iter().cloned());
        window_log.sort_by(|a, b| {
            a.granted_at
                .total_cmp(&b.granted_at)
                .then(a.vehicle.cmp(&b.vehicle))
                .then(a.node_id.cmp(&b.node_id))
        });

        let per_vehicle: Vec<VehicleMetrics> = logs
            .iter()
            .map(|log| {
                let u: Vec<f64> = log.samples.iter().map(|s| s.u).collect();
                let v: Vec<f64> = log.samples.iter().map(|s| s.v).collect();
                let params = &scenario.vehicles[log.vehicle].params;
                VehicleMetrics {
                    vehicle: log.vehicle,
                    j_u: if u.len() >= 2 { cost_ju(&u, dt) } else { 0.0 },
                    j_alpha: if u.len() >= 2 {
                        cost_jalpha(&v, &u, params, dt)
                    } else {
                        0.0
                    },
                }
            })
            .collect();
        let n = per_vehicle.len().max(1) as f64;
        let j_u_mean = per_vehicle.iter().map(|m| m.j_u).sum::<f64>() / n;
        let j_alpha_mean = per_vehicle.iter().map(|m| m.j_alpha).sum::<f64>() / n;

        let audit = audit_safety(&logs, scenario, &window_log);

        ScenarioResult {
            logs,
            window_log,
            per_vehicle,
            j_u_mean,
            j_alpha_mean,
            per_step: self.per_step,
            per_plan: self.per_plan,
            plan_failures: self.plan_failures,
            audit,
        }
    }
}

/// Runs the scenario to completion. Deterministic: identical scenarios give
/// bit-identical logs, window logs, metrics, and audits.
pub fn run(scenario: &Scenario) -> Result<ScenarioResult, ScenarioError> {
    scenario.validate()?;
    Ok(Engine::new(scenario).run())
}

/// Interpolated instant at which the log first crosses `p_node`, if it
/// does.
pub fn crossing_instant(samples: &[Sample], p_node: f64) -> Option<f64> {
    samples.windows(2).find_map(|pair| {
        let (a, b) = (&pair[0], &pair[1]);
        if a.p <= p_node && b.p > p_node {
            let frac = if b.p > a.p { (p_node - a.p) / (b.p - a.p) } else { 0.0 };
            Some(a.t + frac * (b.t - a.t))
        } else {
            None
        }
    })
}

/// Post-hoc safety audit over complete logs: minimum same-lane gaps, node
/// co-occupancy separation, window compliance of every crossing vehicle,
/// and crossing-barrier drift. Works purely from the logs and grant
/// history, independent of the engine's internal bookkeeping.
pub fn audit_safety(
    logs: &[TrajectoryLog],
    scenario: &Scenario,
    window_log: &[GrantRecord],
) -> AuditReport {
    let dt = scenario.dt;
    let mut report = AuditReport::default();

    // Rear-end gaps between same-lane pairs at aligned sample times.
    for (i, follower) in logs.iter().enumerate() {
        for leader in logs.iter().skip(i + 1) {
            if follower.lane != leader.lane {
                continue;
            }
            audit_pair(follower, leader, scenario, &mut report);
        }
    }

    // Crossing instants per (vehicle, node) for co-occupancy and
    // compliance.
    let mut crossings: BTreeMap<String, Vec<(usize, f64)>> = BTreeMap::new();
    for log in logs {
        let lane = &scenario.lanes[scenario.lane_index(&log.lane)];
        for node in &lane.nodes {
            if let Some(t) = crossing_instant(&log.samples, node.position) {
                crossings
                    .entry(node.node_id.clone())
                    .or_default()
                    .push((log.vehicle, t));
            }
        }
    }

    let tau_sep = scenario.tau_sep();
    if tau_sep > 0.0 {
        for (node_id, list) in &crossings {
            for (a_i, &(va, ta)) in list.iter().enumerate() {
                for &(vb, tb) in list.iter().skip(a_i + 1) {
                    if (ta - tb).abs() < tau_sep {
                        report.co_occupancy.push(CoOccupancy {
                            node_id: node_id.clone(),
                            vehicle_a: va,
                            vehicle_b: vb,
                            t_a: ta,
                            t_b: tb,
                        });
                    }
                }
            }
        }
    }

    // Compliance against the final granted window per (vehicle, node),
    // with one control step of interpolation slack.
    for grant in window_log.iter().filter(|g| !g.superseded) {
        let t_cross = crossings
            .get(&grant.node_id)
            .and_then(|list| list.iter().find(|(v, _)| *v == grant.vehicle))
            .map(|&(_, t)| t);
        let compliant = t_cross.map(|t| t >= grant.t_lo - dt && t <= grant.t_hi + dt);
        report.compliance.push(ComplianceEntry {
            vehicle: grant.vehicle,
            node_id: grant.node_id.clone(),
            t_lo: grant.t_lo,
            t_hi: grant.t_hi,
            t_cross,
            compliant,
        });
    }

    // Crossing-barrier drift: once b <= 0 for the nearest live window, it
    // must stay below tolerance until the crossing or the deadline.
    for grant in window_log.iter().filter(|g| !g.superseded) {
        let Some(log) = logs.iter().find(|l| l.vehicle == grant.vehicle) else {
            continue;
        };
        let lane = &scenario.lanes[scenario.lane_index(&log.lane)];
        let Some(node) = lane.nodes.iter().find(|n| n.node_id == grant.node_id) else {
            continue;
        };
        let params = &scenario.vehicles[grant.vehicle].params;
        let earlier_nodes: Vec<f64> = lane
            .nodes
            .iter()
            .filter(|n| n.position < node.position)
            .map(|n| n.position)
            .collect();
        let mut entered = false;
        for s in &log.samples {
            if s.t < grant.granted_at || s.t >= grant.t_hi || s.p > node.position {
                continue;
            }
            // Active only while this is the nearest uncrossed node.
            if earlier_nodes.iter().any(|&p| s.p <= p) {
                continue;
            }
            let dt2 = grant.t_hi - s.t;
            let b = (node.position - s.p) / dt2 - 0.5 * params.u_max() * dt2 - s.v;
            if entered {
                report.barrier_excess_max = report.barrier_excess_max.max(b);
            } else if b <= 0.0 {
                entered = true;
            }
        }
    }

    report
}

fn audit_pair(
    a: &TrajectoryLog,
    b: &TrajectoryLog,
    scenario: &Scenario,
    report: &mut AuditReport,
) {
    let dt = scenario.dt;
    let b_start = b.samples[0].t;
    for sa in &a.samples {
        let bi = ((sa.t - b_start) / dt).round() as isize;
        if bi < 0 || bi as usize >= b.samples.len() {
            continue;
        }
        let sb = &b.samples[bi as usize];
        let (follower, leader, gap, gamma) = if sa.p <= sb.p {
            (a.vehicle, b.vehicle, sb.p - sa.p, scenario.vehicles[a.vehicle].params.gamma())
        } else {
            (b.vehicle, a.vehicle, sa.p - sb.p, scenario.vehicles[b.vehicle].params.gamma())
        };
        report.min_rear_gap = Some(report.min_rear_gap.map_or(gap, |g: f64| g.min(gap)));
        if gap < gamma - GAP_AUDIT_TOL_M {
            report.gap_violations.push(GapViolation {
                follower,
                leader,
                t: sa.t,
                gap,
            });
        }
    }
}

/// Largest pointwise residual of a least-squares linear fit to the logged
/// `u(t)`, taken over maximal constant-plan segments (segments split where
/// the second difference of `u` jumps). Near zero for a planner that only
/// ever commands linear acceleration between replans.
pub fn max_linear_fit_residual(samples: &[Sample]) -> f64 {
    let mut worst: f64 = 0.0;
    let mut seg_start = 0;
    let n = samples.len();
    for i in 0..n {
        let boundary = i + 2 < n && {
            let d1 = samples[i + 1].u - samples[i].u;
            let d2 = samples[i + 2].u - samples[i + 1].u;
            (d2 - d1).abs() > 1e-9
        };
        if boundary || i == n - 1 {
            let seg = &samples[seg_start..=i.min(n - 1)];
            if seg.len() >= 3 {
                worst = worst.max(linear_residual(seg));
            }
            seg_start = i + 1;
        }
    }
    worst
}

fn linear_residual(seg: &[Sample]) -> f64 {
    let n = seg.len() as f64;
    let (mut st, mut su, mut stt, mut stu) = (0.0, 0.0, 0.0, 0.0);
    for s in seg {
        st += s.t;
        su += s.u;
        stt += s.t * s.t;
        stu += s.t * s.u;
    }
    let denom = n * stt - st * st;
    if denom.abs() < 1e-12 {
        return 0.0;
    }
    let a = (n * stu - st * su) / denom;
    let b = (su - a * st) / n;
    seg.iter()
        .map(|s| (s.u - (a * s.t + b)).abs())
        .fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn table_params() -> VehicleParams {
        VehicleParams::new(30.0, 0.25, 25.0, 1.0, 0.5, 100.0).unwrap()
    }

    fn single_lane(nodes: Vec<LaneNode>) -> Vec<Lane> {
        vec![Lane {
            id: "main".into(),
            nodes,
        }]
    }

    fn bare_scenario(vehicles: Vec<VehicleSpec>, t_end: f64) -> Scenario {
        Scenario {
            name: "test".into(),
            lanes: single_lane(vec![]),
            vehicles,
            mode: IntersectionMode::Unsignalized {
                tau_sep: 0.5,
                dwell: 1.0,
            },
            dt: 0.01,
            t_end,
            controller: ControllerChoice::Proposed,
            seed: None,
        }
    }

    fn vehicle(lane: &str, spawn: f64, p0: f64, v0: f64) -> VehicleSpec {
        VehicleSpec {
            lane: lane.into(),
            spawn,
            p0,
            v0,
            params: table_params(),
            window_overrides: vec![],
        }
    }

    #[test]
    fn ballistic_step() {
        // At the desired speed the command is zero and one step advances
        // the position by exactly v dt.
        let mut spec = vehicle("main", 0.0, 0.0, 10.0);
        spec.params = VehicleParams::new(10.0, 0.25, 25.0, 1.0, 0.5, 100.0).unwrap();
        let mut s = bare_scenario(vec![spec], 0.02);
        s.dt = 0.01;
        let result = run(&s).unwrap();
        let samples = &result.logs[0].samples;
        assert_eq!(samples.len(), 2);
        assert_eq!(samples[0].u, 0.0);
        assert_relative_eq!(samples[1].p, 0.1, epsilon = 1e-12);
        assert_relative_eq!(samples[1].v, 10.0, epsilon = 1e-12);
    }

    #[test]
    fn zoh_integration_is_exact() {
        // Constant u: the discrete update must match the closed form to
        // machine precision at every step count.
        let u = 2.0;
        let dt = 1.0;
        let (mut p, mut v) = (0.0, 0.0);
        p += v * dt + 0.5 * u * dt * dt;
        v += u * dt;
        assert_eq!(p, 1.0);
        assert_eq!(v, 2.0);
    }

    #[test]
    fn equilibrium_run_is_cost_free() {
        let s = bare_scenario(vec![vehicle("main", 0.0, 0.0, 30.0)], 5.0);
        let result = run(&s).unwrap();
        assert_eq!(result.j_alpha_mean, 0.0);
        assert_eq!(result.j_u_mean, 0.0);
        assert!(result.audit.violation_count() == 0);
        for s in &result.logs[0].samples {
            assert_eq!(s.u, 0.0);
            assert_eq!(s.mode, ModeLabel::Controller(ControllerMode::Nominal));
        }
    }

    #[test]
    fn crossing_vehicles_are_separated() {
        let mut s = Scenario {
            name: "cross".into(),
            lanes: vec![
                Lane {
                    id: "ew".into(),
                    nodes: vec![LaneNode {
                        node_id: "x".into(),
                        position: 30.0,
                    }],
                },
                Lane {
                    id: "ns".into(),
                    nodes: vec![LaneNode {
                        node_id: "x".into(),
                        position: 30.0,
                    }],
                },
            ],
            vehicles: vec![vehicle("ew", 0.0, 0.0, 30.0), vehicle("ns", 0.0, 0.0, 30.0)],
            mode: IntersectionMode::Unsignalized {
                tau_sep: 0.5,
                dwell: 1.0,
            },
            dt: 0.01,
            t_end: 12.0,
            controller: ControllerChoice::Proposed,
            seed: None,
        };
        s.vehicles[1].v0 = 29.0;
        let result = run(&s).unwrap();
        assert_eq!(result.audit.co_occupancy.len(), 0);
        // Both crossed, at instants separated by at least tau_sep.
        let t0 = crossing_instant(&result.logs[0].samples, 30.0).unwrap();
        let t1 = crossing_instant(&result.logs[1].samples, 30.0).unwrap();
        assert!((t0 - t1).abs() >= 0.5, "separation {}", (t0 - t1).abs());
        for c in &result.audit.compliance {
            assert_eq!(c.compliant, Some(true), "{c:?}");
        }
    }

    #[test]
    fn overlapping_forced_windows_flagged() {
        let mut s = Scenario {
            name: "forced".into(),
            lanes: vec![
                Lane {
                    id: "ew".into(),
                    nodes: vec![LaneNode {
                        node_id: "x".into(),
                        position: 30.0,
                    }],
                },
                Lane {
                    id: "ns".into(),
                    nodes: vec![LaneNode {
                        node_id: "x".into(),
                        position: 30.0,
                    }],
                },
            ],
            vehicles: vec![vehicle("ew", 0.0, 0.0, 30.0), vehicle("ns", 0.0, 0.0, 30.0)],
            mode: IntersectionMode::Unsignalized {
                tau_sep: 0.5,
                dwell: 1.0,
            },
            dt: 0.01,
            t_end: 8.0,
            controller: ControllerChoice::Proposed,
            seed: None,
        };
        let forced = WindowOverride {
            node_id: "x".into(),
            t_lo: 0.5,
            t_hi: 2.5,
        };
        s.vehicles[0].window_overrides = vec![forced.clone()];
        s.vehicles[1].window_overrides = vec![forced];
        let result = run(&s).unwrap();
        assert!(
            !result.audit.co_occupancy.is_empty(),
            "identical forced windows must trigger a co-occupancy flag"
        );
        assert!(result.audit.violation_count() > 0);
    }

    #[test]
    fn spawned_leader_becomes_visible_next_step() {
        // A leader spawning ahead mid-run shows up in the follower's signal
        // one step later.
        let mut s = bare_scenario(
            vec![vehicle("main", 0.0, 0.0, 10.0), vehicle("main", 1.0, 150.0, 10.0)],
            2.0,
        );
        s.dt = 0.5;
        let result = run(&s).unwrap();
        let follower = &result.logs[0].samples;
        // Steps at t = 0.0 and 0.5 see no one; the spawn at t = 1.0 is
        // reflected in bounds from t = 1.5 on. With a leader 150 m ahead the
        // rear bound is huge, so just check the run stays nominal and gaps
        // positive.
        assert_eq!(follower.len(), 4);
        assert!(result.audit.min_rear_gap.unwrap() > 0.0);
    }

    #[test]
    fn determinism_bit_identical() {
        let s = Scenario {
            name: "det".into(),
            lanes: vec![
                Lane {
                    id: "ew".into(),
                    nodes: vec![LaneNode {
                        node_id: "x".into(),
                        position: 30.0,
                    }],
                },
                Lane {
                    id: "ns".into(),
                    nodes: vec![LaneNode {
                        node_id: "x".into(),
                        position: 30.0,
                    }],
                },
            ],
            vehicles: vec![
                vehicle("ew", 0.0, 0.0, 25.0),
                vehicle("ns", 0.4, 0.0, 18.0),
                vehicle("ew", 1.5, 0.0, 22.0),
            ],
            mode: IntersectionMode::Unsignalized {
                tau_sep: 0.5,
                dwell: 1.0,
            },
            dt: 0.01,
            t_end: 10.0,
            controller: ControllerChoice::Proposed,
            seed: None,
        };
        let a = run(&s).unwrap();
        let b = run(&s).unwrap();
        assert_eq!(a.logs, b.logs);
        assert_eq!(a.window_log, b.window_log);
        assert_eq!(a.per_vehicle, b.per_vehicle);
    }

    #[test]
    fn baseline_log_fits_linear_control() {
        let s = Scenario {
            name: "base".into(),
            lanes: single_lane(vec![LaneNode {
                node_id: "x".into(),
                position: 30.0,
            }]),
            vehicles: vec![vehicle("main", 0.0, 0.0, 20.0)],
            mode: IntersectionMode::Unsignalized {
                tau_sep: 0.5,
                dwell: 1.0,
            },
            dt: 0.01,
            t_end: 6.0,
            controller: ControllerChoice::Baseline,
            seed: None,
        };
        let result = run(&s).unwrap();
        assert!(result.plan_failures.is_empty());
        let residual = max_linear_fit_residual(&result.logs[0].samples);
        assert!(residual < 1e-9, "residual {residual}");
    }

    #[test]
    fn interpolated_crossing_matches_refined_run() {
        let s = Scenario {
            name: "interp".into(),
            lanes: single_lane(vec![LaneNode {
                node_id: "x".into(),
                position: 30.0,
            }]),
            vehicles: vec![vehicle("main", 0.0, 0.0, 17.0)],
            mode: IntersectionMode::Unsignalized {
                tau_sep: 0.5,
                dwell: 1.0,
            },
            dt: 0.01,
            t_end: 6.0,
            controller: ControllerChoice::Proposed,
            seed: None,
        };
        let coarse = run(&s).unwrap();
        let mut fine_s = s.clone();
        fine_s.dt = 0.001;
        let fine = run(&fine_s).unwrap();
        let tc = crossing_instant(&coarse.logs[0].samples, 30.0).unwrap();
        let tf = crossing_instant(&fine.logs[0].samples, 30.0).unwrap();
        assert!(
            (tc - tf).abs() <= s.dt,
            "coarse {tc} vs refined {tf} differ by more than one dt"
        );
    }

    #[test]
    fn dt_refinement_converges() {
        let base = Scenario {
            name: "refine".into(),
            lanes: single_lane(vec![LaneNode {
                node_id: "x".into(),
                position: 30.0,
            }]),
            vehicles: vec![vehicle("main", 0.0, 0.0, 12.0)],
            mode: IntersectionMode::Unsignalized {
                tau_sep: 0.5,
                dwell: 1.0,
            },
            dt: 0.01,
            t_end: 8.0,
            controller: ControllerChoice::Proposed,
            seed: None,
        };
        let mut j: Vec<f64> = Vec::new();
        for dt in [0.01, 0.005, 0.0025] {
            let mut s = base.clone();
            s.dt = dt;
            j.push(run(&s).unwrap().j_alpha_mean);
        }
        let d1 = (j[1] - j[0]).abs();
        let d2 = (j[2] - j[1]).abs();
        assert!(d2 <= d1, "refinement must shrink metric deltas: {j:?}");
    }

    #[test]
    fn scenario_validation_errors() {
        let mut s = bare_scenario(vec![vehicle("main", 0.0, 0.0, 10.0)], 5.0);
        s.dt = -1.0;
        assert!(matches!(s.validate(), Err(ScenarioError::BadDt(_))));

        let mut s = bare_scenario(vec![vehicle("nowhere", 0.0, 0.0, 10.0)], 5.0);
        s.dt = 0.01;
        assert!(matches!(s.validate(), Err(ScenarioError::UnknownLane { .. })));

        let s = bare_scenario(
            vec![vehicle("main", 0.0, 5.0, 10.0), vehicle("main", 0.0, 5.0, 10.0)],
            5.0,
        );
        assert!(matches!(s.validate(), Err(ScenarioError::SpawnOrder { .. })));

        let mut s = bare_scenario(vec![vehicle("main", 0.0, 0.0, -2.0)], 5.0);
        s.vehicles[0].v0 = -2.0;
        assert!(matches!(
            s.validate(),
            Err(ScenarioError::NegativeSpeed { .. })
        ));
    }
}
