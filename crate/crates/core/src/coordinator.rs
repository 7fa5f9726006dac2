//! Scheduled-intersection authority: grants, stores, and renegotiates
//! crossing windows for unsignalized operation, and derives green-phase
//! windows for signalized operation.
//!
//! The reservation ledger is first-come-first-served: mutations are applied
//! in strict arrival order and a request is always satisfiable by pushing
//! the slot later.

use crate::types::{CrossingWindow, InvalidValue, VehicleState};
use std::collections::BTreeMap;
use thiserror::Error;

/// Default minimum separation between reservations on one node (s).
pub const DEFAULT_TAU_SEP_S: f64 = 0.5;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CoordinatorError {
    #[error("vehicle {vehicle} holds no reservation on node {node_id}")]
    UnknownReservation { vehicle: usize, node_id: String },
    #[error("requested time {requested} is before current time {now}")]
    RequestInPast { requested: f64, now: f64 },
    #[error(transparent)]
    Invalid(#[from] InvalidValue),
}

/// One conflict node shared by several lanes, with the node's arc-length
/// position on each lane that passes through it.
#[derive(Debug, Clone, PartialEq)]
pub struct ConflictNode {
    pub node_id: String,
    pub positions: BTreeMap<String, f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Reservation {
    vehicle: usize,
    t_lo: f64,
    t_hi: f64,
}

/// Per-node reservation ledger with FCFS semantics.
///
/// All reservations on one node stay pairwise disjoint once padded by the
/// separation time; a vehicle holds at most one reservation per node.
#[derive(Debug, Clone)]
pub struct OccupancyLedger {
    tau_sep: f64,
    now: f64,
    reservations: BTreeMap<String, Vec<Reservation>>,
    grants: Vec<GrantRecord>,
}

/// A grant as recorded for the window log; superseded grants stay in the
/// history.
#[derive(Debug, Clone, PartialEq)]
pub struct GrantRecord {
    pub vehicle: usize,
    pub node_id: String,
    pub t_lo: f64,
    pub t_hi: f64,
    pub granted_at: f64,
    pub superseded: bool,
}

impl OccupancyLedger {
    pub fn new(tau_sep: f64) -> Self {
        Self {
            tau_sep,
            now: 0.0,
            reservations: BTreeMap::new(),
            grants: Vec::new(),
        }
    }

    pub fn tau_sep(&self) -> f64 {
        self.tau_sep
    }

    /// Advances the coordinator clock; requests earlier than `now` are
    /// rejected.
    pub fn advance_to(&mut self, t: f64) {
        if t > self.now {
            self.now = t;
        }
    }

    /// Grant history in arrival order, including superseded grants.
    pub fn grants(&self) -> &[GrantRecord] {
        &self.grants
    }

    /// Earliest start >= `t_nominal` whose `[start, start + dwell]` keeps
    /// `tau_sep` clear of every reservation on the node.
    fn first_free_slot(&self, node_id: &str, t_nominal: f64, dwell: f64) -> f64 {
        let mut start = t_nominal;
        if let Some(list) = self.reservations.get(node_id) {
            // Reservations are kept sorted by t_lo; one forward pass
            // suffices because the candidate only ever moves later.
            for r in list {
                let clear_before = start + dwell <= r.t_lo - self.tau_sep;
                let clear_after = start >= r.t_hi + self.tau_sep;
                if !clear_before && !clear_after {
                    start = r.t_hi + self.tau_sep;
                }
            }
        }
        start
    }

    fn insert(&mut self, node_id: &str, r: Reservation) {
        let list = self.reservations.entry(node_id.to_string()).or_default();
        let idx = list.partition_point(|existing| existing.t_lo < r.t_lo);
        list.insert(idx, r);
    }

    /// Grants the earliest window of length `dwell` starting at or after
    /// `t_nominal` that is disjoint (with separation padding) from every
    /// existing reservation on the node, and records it.
    pub fn request_window(
        &mut self,
        vehicle: usize,
        node_id: &str,
        p_node: f64,
        t_nominal: f64,
        dwell: f64,
    ) -> Result<CrossingWindow, CoordinatorError> {
        if t_nominal < self.now {
            return Err(CoordinatorError::RequestInPast {
                requested: t_nominal,
                now: self.now,
            });
        }
        let t_lo = self.first_free_slot(node_id, t_nominal, dwell);
        let t_hi = t_lo + dwell;
        self.insert(node_id, Reservation { vehicle, t_lo, t_hi });
        self.grants.push(GrantRecord {
            vehicle,
            node_id: node_id.to_string(),
            t_lo,
            t_hi,
            granted_at: self.now,
            superseded: false,
        });
        Ok(CrossingWindow::new(node_id, p_node, t_lo, t_hi)?)
    }

    /// Releases the vehicle's reservation on the node and regrants starting
    /// from `t_earliest_feasible`.
    pub fn renegotiate(
        &mut self,
        vehicle: usize,
        node_id: &str,
        p_node: f64,
        t_earliest_feasible: f64,
        dwell: f64,
    ) -> Result<CrossingWindow, CoordinatorError> {
        if t_earliest_feasible < self.now {
            return Err(CoordinatorError::RequestInPast {
                requested: t_earliest_feasible,
                now: self.now,
            });
        }
        let held = self
            .reservations
            .get_mut(node_id)
            .and_then(|list| {
                list.iter()
                    .position(|r| r.vehicle == vehicle)
                    .map(|i| list.remove(i))
            })
            .ok_or_else(|| CoordinatorError::UnknownReservation {
                vehicle,
                node_id: node_id.to_string(),
            })?;
        for g in self.grants.iter_mut().rev() {
            if g.vehicle == vehicle && g.node_id == node_id && !g.superseded {
                g.superseded = true;
                break;
            }
        }
        let _ = held;
        self.request_window(vehicle, node_id, p_node, t_earliest_feasible, dwell)
    }

    /// Checks pairwise separation of all reservations on every node;
    /// returns the offending pair if any.
    pub fn verify_disjoint(&self) -> Option<(String, f64, f64)> {
        for (node, list) in &self.reservations {
            for pair in list.windows(2) {
                if pair[1].t_lo - pair[0].t_hi < self.tau_sep - 1e-12 {
                    return Some((node.clone(), pair[0].t_hi, pair[1].t_lo));
                }
            }
        }
        None
    }
}

/// Fixed-time signal timing for one approach.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SignalPhase {
    cycle: f64,
    offset: f64,
    green: f64,
}

impl SignalPhase {
    pub fn new(cycle: f64, offset: f64, green: f64) -> Result<Self, InvalidValue> {
        if !(cycle.is_finite() && offset.is_finite() && green.is_finite()) {
            return Err(InvalidValue::NotFinite {
                field: "signal phase",
                value: cycle,
            });
        }
        if green <= 0.0 {
            return Err(InvalidValue::NotPositive {
                field: "green",
                value: green,
            });
        }
        if green >= cycle {
            return Err(InvalidValue::NotPositive {
                field: "cycle - green",
                value: cycle - green,
            });
        }
        Ok(Self {
            cycle,
            offset,
            green,
        })
    }

    pub fn cycle(&self) -> f64 {
        self.cycle
    }

    pub fn offset(&self) -> f64 {
        self.offset
    }

    pub fn green(&self) -> f64 {
        self.green
    }
}

/// Signal timing per approach (lane id).
#[derive(Debug, Clone, Default)]
pub struct SignalProgram {
    pub phases: BTreeMap<String, SignalPhase>,
}

/// Earliest green interval `[g_lo, g_hi]` with `g_hi > t` for the approach;
/// when `t` falls inside a green interval, the remainder of it.
pub fn next_green_window(
    program: &SignalProgram,
    approach: &str,
    p_node: f64,
    t: f64,
) -> Option<CrossingWindow> {
    let phase = program.phases.get(approach)?;
    let k = ((t - phase.offset) / phase.cycle).floor();
    let mut start = phase.offset + k * phase.cycle;
    loop {
        let end = start + phase.green;
        if end > t {
            let lo = start.max(t);
            return CrossingWindow::new(approach, p_node, lo, end).ok();
        }
        start += phase.cycle;
    }
}

/// Minimum-time arrival at `p_node` from the current state under the
/// acceleration bound: a single full-throttle arc, added to the current
/// time. Feeds renegotiation with a dynamically feasible target.
pub fn compute_earliest_feasible(state: &VehicleState, p_node: f64, u_max: f64, now: f64) -> f64 {
    let dp = p_node - state.p();
    if dp <= 0.0 {
        return now;
    }
    let v = state.v();
    let t_min = ((v * v + 2.0 * u_max * dp).sqrt() - v) / u_max;
    now + t_min
}
