//! Batch evaluation: the shipped reference intersection, the seeded random
//! scenario generator behind the safety suite, a data-parallel batch runner,
//! and the controller-comparison sweep.
//!
//! With the `parallel` feature (default) the batch runner fans scenarios out
//! over rayon; the sequential path is always available and produces
//! identical results in the same order.

use crate::report::ComparisonRow;
use crate::simulator::{
    run, ControllerChoice, IntersectionMode, Lane, LaneNode, Scenario, ScenarioError,
    ScenarioResult, VehicleSpec,
};
use crate::types::VehicleParams;
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

/// Controller tuning used by the reference and suite scenarios.
pub fn reference_params() -> VehicleParams {
    VehicleParams::new(30.0, 0.25, 25.0, 1.0, 0.5, 100.0).unwrap()
}

fn crossing_lanes() -> Vec<Lane> {
    vec![
        Lane {
            id: "east".into(),
            nodes: vec![LaneNode {
                node_id: "x".into(),
                position: 30.0,
            }],
        },
        Lane {
            id: "north".into(),
            nodes: vec![LaneNode {
                node_id: "x".into(),
                position: 30.0,
            }],
        },
    ]
}

/// The shipped 10-vehicle reference scenario: two crossing lanes with a
/// single conflict point at 30 m, five vehicles per lane with staggered
/// spawn times and mixed approach speeds.
pub fn reference_scenario(controller: ControllerChoice) -> Scenario {
    let params = reference_params();
    let spawn_table: [(&str, f64, f64); 10] = [
        ("east", 0.0, 30.0),
        ("north", 0.6, 28.0),
        ("east", 1.2, 22.0),
        ("north", 1.8, 20.0),
        ("east", 2.4, 26.0),
        ("north", 3.0, 25.0),
        ("east", 3.6, 18.0),
        ("north", 4.2, 16.0),
        ("east", 4.8, 24.0),
        ("north", 5.4, 22.0),
    ];
    let vehicles = spawn_table
        .iter()
        .map(|&(lane, spawn, v0)| VehicleSpec {
            lane: lane.into(),
            spawn,
            p0: 0.0,
            v0,
            params,
            window_overrides: vec![],
        })
        .collect();
    Scenario {
        name: "reference".into(),
        lanes: crossing_lanes(),
        vehicles,
        mode: IntersectionMode::Unsignalized {
            tau_sep: 0.5,
            dwell: 1.0,
        },
        dt: 0.01,
        t_end: 25.0,
        controller,
        seed: None,
    }
}

/// Seeded random two-lane scenario: five vehicles per lane, spawn gaps of
/// at least 1.2 s, approach speeds uniform in [10, 30] m/s.
pub fn random_scenario(seed: u64, controller: ControllerChoice) -> Scenario {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let params = reference_params();
    let mut vehicles = Vec::new();
    for lane in ["east", "north"] {
        let mut spawn = rng.gen_range(0.0..1.0);
        for _ in 0..5 {
            vehicles.push(VehicleSpec {
                lane: lane.into(),
                spawn,
                p0: 0.0,
                v0: rng.gen_range(10.0..30.0),
                params,
                window_overrides: vec![],
            });
            spawn += 1.2 + rng.gen_range(0.0..1.3);
        }
    }
    vehicles.sort_by(|a, b| a.spawn.total_cmp(&b.spawn));
    Scenario {
        name: format!("random-{seed}"),
        lanes: crossing_lanes(),
        vehicles,
        mode: IntersectionMode::Unsignalized {
            tau_sep: 0.5,
            dwell: 1.0,
        },
        dt: 0.01,
        t_end: 30.0,
        controller,
        seed: Some(seed),
    }
}

/// Runs every scenario sequentially, results in input order.
pub fn run_batch_sequential(
    scenarios: &[Scenario],
) -> Vec<Result<ScenarioResult, ScenarioError>> {
    scenarios.iter().map(run).collect()
}

/// Runs every scenario, data-parallel over scenarios when the `parallel`
/// feature is enabled. Results are in input order and identical to the
/// sequential path.
#[cfg(feature = "parallel")]
pub fn run_batch(scenarios: &[Scenario]) -> Vec<Result<ScenarioResult, ScenarioError>> {
    use rayon::prelude::*;
    scenarios.par_iter().map(run).collect()
}

/// Sequential fallback used when the `parallel` feature is disabled.
#[cfg(not(feature = "parallel"))]
pub fn run_batch(scenarios: &[Scenario]) -> Vec<Result<ScenarioResult, ScenarioError>> {
    run_batch_sequential(scenarios)
}

/// One comparison run: controller plus feedback-rate override.
#[derive(Debug, Clone)]
pub struct ComparisonOutcome {
    pub row: ComparisonRow,
    pub result: ScenarioResult,
}

fn with_alpha(base: &Scenario, controller: ControllerChoice, alpha: f64) -> Scenario {
    let mut scenario = base.clone();
    scenario.controller = controller;
    for v in &mut scenario.vehicles {
        v.params = v.params.with_alpha(alpha).expect("alpha override");
    }
    scenario
}

/// Runs both controllers at both feedback rates on the same scenario and
/// tabulates mean energy costs and control-computation times, baseline
/// rows first.
pub fn run_comparison(base: &Scenario) -> Result<Vec<ComparisonOutcome>, ScenarioError> {
    let configs = [
        (ControllerChoice::Baseline, 1.5),
        (ControllerChoice::Baseline, 0.25),
        (ControllerChoice::Proposed, 1.5),
        (ControllerChoice::Proposed, 0.25),
    ];
    let scenarios: Vec<Scenario> = configs
        .iter()
        .map(|&(c, a)| with_alpha(base, c, a))
        .collect();
    let results = run_batch(&scenarios);
    let mut outcomes = Vec::new();
    for ((controller, alpha), result) in configs.iter().zip(results) {
        let result = result?;
        let time_mean_s = match controller {
            ControllerChoice::Proposed => result.per_step.mean(),
            ControllerChoice::Baseline => result.per_plan.mean(),
        };
        outcomes.push(ComparisonOutcome {
            row: ComparisonRow {
                algorithm: match controller {
                    ControllerChoice::Proposed => "proposed".into(),
                    ControllerChoice::Baseline => "baseline".into(),
                },
                alpha: *alpha,
                j_u_mean: result.j_u_mean,
                j_alpha_mean: result.j_alpha_mean,
                time_mean_s,
            },
            result,
        });
    }
    Ok(outcomes)
}
