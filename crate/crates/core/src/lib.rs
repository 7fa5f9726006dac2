//! Longitudinal control toolkit for connected automated vehicles (CAVs)
//! crossing scheduled intersections.
//!
//! The crate is organized around a reactive controller that clamps an
//! infinite-horizon feedback law against control barrier bounds (crossing
//! windows, rear-end gap, actuation), a first-come-first-served window
//! coordinator, an energy-optimal linear-acceleration baseline planner, and
//! a deterministic fixed-step simulator that runs either controller and
//! audits safety.
//!
//! Batch evaluation ([`batch`]) is data-parallel over scenarios via rayon
//! when the `parallel` feature (default) is enabled; a sequential fallback
//! is always available and produces identical results.

pub mod batch;
pub mod controller;
pub mod coordinator;
pub mod report;
pub mod simulator;
pub mod trajectories;
pub mod types;

pub use types::{
    ControlBounds, ControllerMode, CrossingWindow, PrecedingSignal, VehicleParams, VehicleState,
};
