//! JSON scenario documents.
//!
//! ```json
//! {
//!   "label": "exp2",
//!   "nodes": [{"mu": 0.25}, {"mu": 0.26}],
//!   "schedulers": [{"phi": 0.0035}, {"phi": 0.01}],
//!   "rho": 0.5,
//!   "task_megabits": 1.0,
//!   "delay_seconds": 0.5,
//!   "bandwidth_kbps": 100.0,
//!   "solver": {"p0": 10.0, "r": 10.0, "cap": 1e6, "eps": 1e-4, "max_cycle": 100}
//! }
//! ```
//!
//! `delay_seconds` and `bandwidth_kbps` take a scalar (every link) or an
//! `n × m` matrix. Megabits and Kbps are decimal: 1 Mbit = 10⁶ bits and
//! 1 Kbps = 10³ bits/s.

use serde::{Deserialize, Serialize};

use super::{ExperimentError, ExtensionTables, LinkValue, Scenario};
use crate::entropy_solver::{EntropyParams, InnerSolverParams};
use crate::schedulers::{Algorithm, CycleParams};

const BITS_PER_MEGABIT: f64 = 1e6;
const BPS_PER_KBPS: f64 = 1e3;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NodeEntry {
    pub mu: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SchedulerEntry {
    pub phi: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverEntry {
    #[serde(default = "defaults::p0")]
    pub p0: f64,
    #[serde(default = "defaults::r")]
    pub r: f64,
    #[serde(default = "defaults::cap")]
    pub cap: f64,
    /// Used both for successive rows and for successive allocations.
    #[serde(default = "defaults::eps")]
    pub eps: f64,
    #[serde(default = "defaults::max_cycle")]
    pub max_cycle: usize,
    #[serde(default = "defaults::max_outer")]
    pub max_outer: usize,
    #[serde(default)]
    pub inner: InnerSolverParams,
}

mod defaults {
    use crate::entropy_solver::EntropyParams;
    use crate::schedulers::{DEFAULT_CYCLE_EPS, DEFAULT_MAX_CYCLE};

    pub fn p0() -> f64 {
        EntropyParams::default().p0
    }
    pub fn r() -> f64 {
        EntropyParams::default().growth
    }
    pub fn cap() -> f64 {
        EntropyParams::default().cap
    }
    pub fn eps() -> f64 {
        DEFAULT_CYCLE_EPS
    }
    pub fn max_cycle() -> usize {
        DEFAULT_MAX_CYCLE
    }
    pub fn max_outer() -> usize {
        EntropyParams::default().max_outer
    }
}

impl Default for SolverEntry {
    fn default() -> Self {
        Self::from_params(&EntropyParams::default(), &CycleParams::default())
    }
}

impl SolverEntry {
    fn from_params(solver: &EntropyParams, cycle: &CycleParams) -> Self {
        Self {
            p0: solver.p0,
            r: solver.growth,
            cap: solver.cap,
            eps: solver.eps,
            max_cycle: cycle.max_cycle,
            max_outer: solver.max_outer,
            inner: solver.inner,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExtensionEntry {
    #[serde(default)]
    pub nodes: Vec<NodeEntry>,
    #[serde(default)]
    pub schedulers: Vec<SchedulerEntry>,
}

/// On-disk form of a [`Scenario`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    #[serde(default)]
    pub label: String,
    pub nodes: Vec<NodeEntry>,
    pub schedulers: Vec<SchedulerEntry>,
    pub rho: f64,
    pub task_megabits: f64,
    pub delay_seconds: LinkValue,
    pub bandwidth_kbps: LinkValue,
    #[serde(default)]
    pub solver: SolverEntry,
    #[serde(default = "all_algorithms")]
    pub algorithms: Vec<Algorithm>,
    /// Extra entries consumed by scheduler- and node-count sweeps.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub extension: Option<ExtensionEntry>,
}

fn all_algorithms() -> Vec<Algorithm> {
    Algorithm::ALL.to_vec()
}

impl ScenarioFile {
    pub fn into_scenario(self) -> Result<Scenario, ExperimentError> {
        let scenario = Scenario {
            label: self.label,
            mu: self.nodes.iter().map(|n| n.mu).collect(),
            phi: self.schedulers.iter().map(|s| s.phi).collect(),
            rho: self.rho,
            task_bits: self.task_megabits * BITS_PER_MEGABIT,
            delay: self.delay_seconds,
            bandwidth: self.bandwidth_kbps.map(|kbps| kbps * BPS_PER_KBPS),
            algorithms: self.algorithms,
            solver: EntropyParams {
                p0: self.solver.p0,
                growth: self.solver.r,
                cap: self.solver.cap,
                eps: self.solver.eps,
                max_outer: self.solver.max_outer,
                inner: self.solver.inner,
            },
            cycle: CycleParams {
                max_cycle: self.solver.max_cycle,
                eps: self.solver.eps,
            },
            extension: self.extension.map(|ext| ExtensionTables {
                mu: ext.nodes.iter().map(|n| n.mu).collect(),
                phi: ext.schedulers.iter().map(|s| s.phi).collect(),
            }),
        };
        scenario.validate()?;
        Ok(scenario)
    }

    pub fn from_scenario(scenario: &Scenario) -> Self {
        Self {
            label: scenario.label.clone(),
            nodes: scenario.mu.iter().map(|&mu| NodeEntry { mu }).collect(),
            schedulers: scenario
                .phi
                .iter()
                .map(|&phi| SchedulerEntry { phi })
                .collect(),
            rho: scenario.rho,
            task_megabits: scenario.task_bits / BITS_PER_MEGABIT,
            delay_seconds: scenario.delay.clone(),
            bandwidth_kbps: scenario.bandwidth.map(|bps| bps / BPS_PER_KBPS),
            solver: SolverEntry::from_params(&scenario.solver, &scenario.cycle),
            algorithms: scenario.algorithms.clone(),
            extension: scenario.extension.as_ref().map(|ext| ExtensionEntry {
                nodes: ext.mu.iter().map(|&mu| NodeEntry { mu }).collect(),
                schedulers: ext.phi.iter().map(|&phi| SchedulerEntry { phi }).collect(),
            }),
        }
    }
}

impl Scenario {
    pub fn from_json(text: &str) -> Result<Self, ExperimentError> {
        let file: ScenarioFile =
            serde_json::from_str(text).map_err(|e| ExperimentError::Parse(e.to_string()))?;
        file.into_scenario()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&ScenarioFile::from_scenario(self))
            .expect("scenario documents always serialize")
    }
}
