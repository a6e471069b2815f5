//! Built-in experiment configurations.
//!
//! Rates shared by a group of schedulers or nodes are repeated once per
//! member, so every array has one entry per scheduler or node.

use super::{ExtensionTables, LinkValue, Scenario};
use crate::entropy_solver::EntropyParams;
use crate::schedulers::{Algorithm, CycleParams};

/// Relative job arrival rates of the seven-scheduler experiments.
pub const SEVEN_SCHEDULER_PHI: [f64; 7] = [0.0035, 0.01, 0.01, 0.01, 0.01, 0.006, 0.005];

/// Node rates with clearly faster and slower nodes.
pub const SPREAD_NODE_MU: [f64; 8] = [0.28, 0.22, 0.19, 0.23, 0.20, 0.26, 0.22, 0.23];

/// Node rates with little spread.
pub const CLOSE_NODE_MU: [f64; 8] = [0.25, 0.26, 0.23, 0.24, 0.22, 0.25, 0.22, 0.23];

/// Ten node rates for the scheduler-count sweep.
pub const SCHEDULER_SWEEP_MU: [f64; 10] =
    [0.25, 0.26, 0.23, 0.23, 0.23, 0.21, 0.24, 0.24, 0.24, 0.22];

/// Fifteen scheduler rates for the scheduler-count sweep.
pub const SCHEDULER_SWEEP_PHI: [f64; 15] = [
    0.0035, 0.01, 0.01, 0.01, 0.01, 0.006, 0.005, 0.003, 0.003, 0.003, 0.002, 0.002, 0.002, 0.0015,
    0.0015,
];

/// Fifteen node rates for the node-count sweep.
pub const NODE_SWEEP_MU: [f64; 15] = [
    0.25, 0.26, 0.23, 0.23, 0.23, 0.21, 0.24, 0.24, 0.24, 0.22, 0.22, 0.22, 0.22, 0.20, 0.20,
];

/// Seven scheduler rates for the node-count sweep.
pub const NODE_SWEEP_PHI: [f64; 7] = [0.0035, 0.01, 0.01, 0.01, 0.01, 0.006, 0.005];

pub const DEFAULT_RHO: f64 = 0.5;
/// 1 Mbit.
pub const DEFAULT_TASK_BITS: f64 = 1e6;
pub const DEFAULT_DELAY_SECONDS: f64 = 0.5;
/// 100 Kbps.
pub const DEFAULT_BANDWIDTH_BPS: f64 = 1e5;

pub const BUILTIN_NAMES: [&str; 4] = ["exp1", "exp2", "size-schedulers", "size-nodes"];

fn base(label: &str, mu: &[f64], phi: &[f64]) -> Scenario {
    Scenario {
        label: label.to_string(),
        mu: mu.to_vec(),
        phi: phi.to_vec(),
        rho: DEFAULT_RHO,
        task_bits: DEFAULT_TASK_BITS,
        delay: LinkValue::Uniform(DEFAULT_DELAY_SECONDS),
        bandwidth: LinkValue::Uniform(DEFAULT_BANDWIDTH_BPS),
        algorithms: Algorithm::ALL.to_vec(),
        solver: EntropyParams::default(),
        cycle: CycleParams::default(),
        extension: None,
    }
}

/// All built-in scenarios, in a fixed order.
pub fn builtin_scenarios() -> Vec<Scenario> {
    BUILTIN_NAMES
        .iter()
        .map(|name| builtin_scenario(name).expect("every listed name is built in"))
        .collect()
}

pub fn builtin_scenario(name: &str) -> Option<Scenario> {
    let scenario = match name {
        "exp1" => base("exp1", &SPREAD_NODE_MU, &SEVEN_SCHEDULER_PHI),
        "exp2" => base("exp2", &CLOSE_NODE_MU, &SEVEN_SCHEDULER_PHI),
        "size-schedulers" => Scenario {
            extension: Some(ExtensionTables {
                mu: SCHEDULER_SWEEP_MU.to_vec(),
                phi: SCHEDULER_SWEEP_PHI.to_vec(),
            }),
            ..base(
                "size-schedulers",
                &SCHEDULER_SWEEP_MU,
                &SCHEDULER_SWEEP_PHI[..7],
            )
        },
        "size-nodes" => Scenario {
            extension: Some(ExtensionTables {
                mu: NODE_SWEEP_MU.to_vec(),
                phi: NODE_SWEEP_PHI.to_vec(),
            }),
            ..base("size-nodes", &NODE_SWEEP_MU[..10], &NODE_SWEEP_PHI)
        },
        _ => return None,
    };
    Some(scenario)
}
