use cavsim_core::batch::reference_scenario;
use cavsim_core::simulator::{run, ControllerChoice};

fn main() {
    let scenario = reference_scenario(ControllerChoice::Proposed);
    let result = run(&scenario).unwrap();
    println!("min gap: {:?}", result.audit.min_rear_gap);
    println!("violations: {}", result.audit.gap_violations.len());
    println!("co-occupancy: {}", result.audit.co_occupancy.len());
    println!(
        "noncompliant: {}",
        result
            .audit
            .compliance
            .iter()
            .filter(|c| c.compliant == Some(false))
            .count()
    );
    for log in &result.logs {
        let last = log.samples.last().unwrap();
        let (min_v, t_min_v) = log
            .samples
            .iter()
            .map(|s| (s.v, s.t))
            .fold((f64::INFINITY, 0.0), |acc, x| if x.0 < acc.0 { x } else { acc });
        println!(
            "veh {} lane {} spawn {:.2}: final p {:.1} v {:.2}, min v {:.4} at t {:.2}",
            log.vehicle, log.lane, log.samples[0].t, last.p, last.v, min_v, t_min_v
        );
    }
    // Trace follower 5 and leader 3 around the violation window.
    for target in [5usize, 9] {
        let log = result.logs.iter().find(|l| l.vehicle == target).unwrap();
        let (_, t_min) = log
            .samples
            .iter()
            .map(|s| (s.v, s.t))
            .fold((f64::INFINITY, 0.0), |acc, x| if x.0 < acc.0 { x } else { acc });
        println!("--- veh {target} around its min-speed instant {t_min:.2}");
        for s in log
            .samples
            .iter()
            .filter(|s| s.t > t_min - 0.08 && s.t < t_min + 0.05)
        {
            println!(
                "  t {:.3} p {:.4} v {:.4} u {:+.3} mode {:16} lo {:+.3} hi {:+.3}",
                s.t, s.p, s.v, s.u, s.mode.as_str(), s.u_lower, s.u_upper
            );
        }
    }
    if let Some(v) = result.audit.gap_violations.first() {
        println!("first violation: {v:?}");
        let f = result.logs.iter().find(|l| l.vehicle == v.follower).unwrap();
        let l = result.logs.iter().find(|l| l.vehicle == v.leader).unwrap();
        for s in f.samples.iter().filter(|s| s.t > v.t - 0.5 && s.t < v.t + 0.05) {
            if (s.t * 100.0).round() as i64 % 5 == 0 {
                println!(
                    "  F t {:.2} p {:.3} v {:.3} u {:+.2} mode {:16} lo {:+.2} hi {:+.2}",
                    s.t, s.p, s.v, s.u, s.mode.as_str(), s.u_lower, s.u_upper
                );
            }
        }
        for s in l.samples.iter().filter(|s| s.t > v.t - 0.5 && s.t < v.t + 0.05) {
            if (s.t * 100.0).round() as i64 % 5 == 0 {
                println!(
                    "  L t {:.2} p {:.3} v {:.3} u {:+.2} mode {}",
                    s.t, s.p, s.v, s.u, s.mode.as_str()
                );
            }
        }
    }
}
