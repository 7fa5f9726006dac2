//! Shared domain types. All quantities are SI (meters, seconds); paths are
//! one-dimensional arc lengths, so no lateral geometry appears anywhere.
//!
//! Every type validates its invariants at construction; fields are private
//! so an invariant-violating value cannot be built through the public
//! surface. All types are small immutable values, safe to copy across
//! threads.

use thiserror::Error;

/// Validation failure; carries the first offending field by name.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum InvalidValue {
    #[error("{field} must be finite, got {value}")]
    NotFinite { field: &'static str, value: f64 },
    #[error("{field} must be > 0, got {value}")]
    NotPositive { field: &'static str, value: f64 },
    #[error("{field} must be >= 0, got {value}")]
    Negative { field: &'static str, value: f64 },
    #[error("crossing window must have t_lo < t_hi, got [{t_lo}, {t_hi}]")]
    EmptyWindow { t_lo: f64, t_hi: f64 },
}

fn require_finite(field: &'static str, value: f64) -> Result<f64, InvalidValue> {
    if value.is_finite() {
        Ok(value)
    } else {
        Err(InvalidValue::NotFinite { field, value })
    }
}

fn require_positive(field: &'static str, value: f64) -> Result<f64, InvalidValue> {
    require_finite(field, value)?;
    if value > 0.0 {
        Ok(value)
    } else {
        Err(InvalidValue::NotPositive { field, value })
    }
}

fn require_non_negative(field: &'static str, value: f64) -> Result<f64, InvalidValue> {
    require_finite(field, value)?;
    if value >= 0.0 {
        Ok(value)
    } else {
        Err(InvalidValue::Negative { field, value })
    }
}

/// Longitudinal state of one vehicle along its fixed path.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VehicleState {
    p: f64,
    v: f64,
}

impl VehicleState {
    pub fn new(p: f64, v: f64) -> Result<Self, InvalidValue> {
        Ok(Self {
            p: require_finite("p", p)?,
            v: require_finite("v", v)?,
        })
    }

    /// Position along the path (m).
    pub fn p(&self) -> f64 {
        self.p
    }

    /// Speed along the path (m/s).
    pub fn v(&self) -> f64 {
        self.v
    }
}

/// Per-vehicle tuning parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VehicleParams {
    v_d: f64,
    alpha: f64,
    u_max: f64,
    gamma: f64,
    kappa_t: f64,
    kappa_r: f64,
}

impl VehicleParams {
    /// Validates every invariant and reports the first violated one by
    /// field name.
    pub fn new(
        v_d: f64,
        alpha: f64,
        u_max: f64,
        gamma: f64,
        kappa_t: f64,
        kappa_r: f64,
    ) -> Result<Self, InvalidValue> {
        Ok(Self {
            v_d: require_non_negative("v_d", v_d)?,
            alpha: require_positive("alpha", alpha)?,
            u_max: require_positive("u_max", u_max)?,
            gamma: require_non_negative("gamma", gamma)?,
            kappa_t: require_positive("kappa_t", kappa_t)?,
            kappa_r: require_positive("kappa_r", kappa_r)?,
        })
    }

    /// Desired cruising speed (m/s).
    pub fn v_d(&self) -> f64 {
        self.v_d
    }

    /// Regularizing rate of the feedback law (1/s).
    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    /// Acceleration bound magnitude (m/s^2).
    pub fn u_max(&self) -> f64 {
        self.u_max
    }

    /// Standstill gap kept behind a preceding vehicle (m).
    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    /// Crossing-constraint barrier gain (1/s).
    pub fn kappa_t(&self) -> f64 {
        self.kappa_t
    }

    /// Rear-end barrier gain (1/s).
    pub fn kappa_r(&self) -> f64 {
        self.kappa_r
    }

    /// Copy with a different feedback rate; used by parameter sweeps.
    pub fn with_alpha(&self, alpha: f64) -> Result<Self, InvalidValue> {
        Self::new(
            self.v_d,
            alpha,
            self.u_max,
            self.gamma,
            self.kappa_t,
            self.kappa_r,
        )
    }
}

/// One conflict node on a vehicle's path together with the time interval
/// the vehicle is scheduled to cross it.
#[derive(Debug, Clone, PartialEq)]
pub struct CrossingWindow {
    node_id: String,
    p_node: f64,
    t_lo: f64,
    t_hi: f64,
}

impl CrossingWindow {
    pub fn new(
        node_id: impl Into<String>,
        p_node: f64,
        t_lo: f64,
        t_hi: f64,
    ) -> Result<Self, InvalidValue> {
        let p_node = require_finite("p_node", p_node)?;
        require_finite("t_lo", t_lo)?;
        require_finite("t_hi", t_hi)?;
        if t_lo >= t_hi {
            return Err(InvalidValue::EmptyWindow { t_lo, t_hi });
        }
        Ok(Self {
            node_id: node_id.into(),
            p_node,
            t_lo,
            t_hi,
        })
    }

    pub fn node_id(&self) -> &str {
        &self.node_id
    }

    /// Node position along this vehicle's path (m).
    pub fn p_node(&self) -> f64 {
        self.p_node
    }

    /// Earliest allowed arrival time (s).
    pub fn t_lo(&self) -> f64 {
        self.t_lo
    }

    /// Latest allowed departure time (s).
    pub fn t_hi(&self) -> f64 {
        self.t_hi
    }
}

/// Measured position/speed of the preceding vehicle on the same lane.
///
/// Absence is a first-class state (the "no vehicle ahead" convention), so
/// downstream code must branch on it explicitly instead of testing against
/// a sentinel distance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PrecedingSignal {
    Absent,
    Present {
        /// Preceding-vehicle position along this lane (m).
        position: f64,
        /// Preceding-vehicle speed (m/s).
        speed: f64,
    },
}

impl PrecedingSignal {
    pub fn is_present(&self) -> bool {
        matches!(self, PrecedingSignal::Present { .. })
    }
}

/// Instantaneous admissible acceleration interval assembled from all
/// active barrier and actuation bounds.
///
/// The pair is kept even when inverted, so an infeasible instant is
/// representable without losing either value.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ControlBounds {
    /// Minimum admissible acceleration (m/s^2).
    pub lower: f64,
    /// Maximum admissible acceleration (m/s^2).
    pub upper: f64,
}

impl ControlBounds {
    pub fn new(lower: f64, upper: f64) -> Self {
        Self { lower, upper }
    }

    pub fn is_feasible(&self) -> bool {
        self.lower <= self.upper
    }
}

/// Controller operating mode; transitions follow the switching diagram:
/// `Nominal -> AwaitingSchedule` when the bounds invert, back to `Nominal`
/// once a fresh window makes them consistent again, and `SafeStop` while
/// the wait persists.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ControllerMode {
    Nominal,
    AwaitingSchedule,
    SafeStop,
}

impl ControllerMode {
    /// Whether `from -> to` is an edge of the mode graph (self-loops
    /// allowed).
    pub fn is_valid_transition(from: ControllerMode, to: ControllerMode) -> bool {
        use ControllerMode::*;
        matches!(
            (from, to),
            (Nominal, Nominal)
                | (Nominal, AwaitingSchedule)
                | (AwaitingSchedule, Nominal)
                | (AwaitingSchedule, SafeStop)
                | (SafeStop, SafeStop)
                | (SafeStop, Nominal)
        )
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            ControllerMode::Nominal => "Nominal",
            ControllerMode::AwaitingSchedule => "AwaitingSchedule",
            ControllerMode::SafeStop => "SafeStop",
        }
    }
}

impl std::fmt::Display for ControllerMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}
