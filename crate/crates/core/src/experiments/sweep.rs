use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{run_point, ExperimentError, ExtensionTables, LinkValue, RunReport, Scenario};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepParameter {
    /// Overall system load `ρ`.
    Load,
    /// Number of schedulers, taken as a prefix of the extension `φ` table.
    SchedulerCount,
    /// Number of nodes, taken as a prefix of the extension `μ` table.
    NodeCount,
    /// Uniform link bandwidth in Kbps.
    Bandwidth,
}

impl SweepParameter {
    pub fn as_str(self) -> &'static str {
        match self {
            SweepParameter::Load => "load",
            SweepParameter::SchedulerCount => "scheduler_count",
            SweepParameter::NodeCount => "node_count",
            SweepParameter::Bandwidth => "bandwidth",
        }
    }
}

impl fmt::Display for SweepParameter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SweepParameter {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().replace('-', "_").as_str() {
            "load" | "rho" => Ok(SweepParameter::Load),
            "scheduler_count" | "schedulers" => Ok(SweepParameter::SchedulerCount),
            "node_count" | "nodes" => Ok(SweepParameter::NodeCount),
            "bandwidth" => Ok(SweepParameter::Bandwidth),
            other => Err(format!(
                "unknown sweep parameter `{other}` (expected load, scheduler_count, node_count or bandwidth)"
            )),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SweepPoint {
    pub parameter: SweepParameter,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub base: Scenario,
    pub parameter: SweepParameter,
    pub values: Vec<f64>,
    pub extension: ExtensionTables,
}

impl SweepSpec {
    /// Sweep over `values`, drawing size extensions from the base scenario.
    pub fn new(base: Scenario, parameter: SweepParameter, values: Vec<f64>) -> Self {
        let extension = base.extension_tables();
        Self {
            base,
            parameter,
            values,
            extension,
        }
    }

    /// Checks every point before anything runs.
    pub fn validate(&self) -> Result<(), ExperimentError> {
        if self.values.is_empty() {
            return Err(ExperimentError::Invalid("sweep has no values".into()));
        }
        self.values
            .iter()
            .try_for_each(|&v| self.scenario_at(v)?.validate())
    }

    /// The base scenario with the swept parameter set to `value`.
    pub fn scenario_at(&self, value: f64) -> Result<Scenario, ExperimentError> {
        let mut scenario = self.base.clone();
        match self.parameter {
            SweepParameter::Load => scenario.rho = value,
            SweepParameter::SchedulerCount => {
                let count = self.count(value, self.extension.phi.len())?;
                self.require_uniform_links()?;
                scenario.phi = self.extension.phi[..count].to_vec();
            }
            SweepParameter::NodeCount => {
                let count = self.count(value, self.extension.mu.len())?;
                self.require_uniform_links()?;
                scenario.mu = self.extension.mu[..count].to_vec();
            }
            SweepParameter::Bandwidth => {
                if !(value > 0.0 && value.is_finite()) {
                    return Err(ExperimentError::Invalid(format!(
                        "bandwidth must be positive, got {value} Kbps"
                    )));
                }
                scenario.bandwidth = LinkValue::Uniform(value * 1e3);
            }
        }
        Ok(scenario)
    }

    fn count(&self, value: f64, available: usize) -> Result<usize, ExperimentError> {
        if !(value >= 1.0 && value.fract() == 0.0) {
            return Err(ExperimentError::Invalid(format!(
                "{} must be a positive integer, got {value}",
                self.parameter
            )));
        }
        let count = value as usize;
        if count > available {
            return Err(ExperimentError::Invalid(format!(
                "{} = {count} exceeds the {available} table entries available",
                self.parameter
            )));
        }
        Ok(count)
    }

    fn require_uniform_links(&self) -> Result<(), ExperimentError> {
        let uniform = |l: &LinkValue| matches!(l, LinkValue::Uniform(_));
        if uniform(&self.base.delay) && uniform(&self.base.bandwidth) {
            Ok(())
        } else {
            Err(ExperimentError::Invalid(
                "size sweeps need scalar delay and bandwidth".into(),
            ))
        }
    }

    fn run_value(&self, value: f64) -> RunReport {
        let point = Some(SweepPoint {
            parameter: self.parameter,
            value,
        });
        match self.scenario_at(value) {
            Ok(scenario) => run_point(&scenario, point),
            Err(e) => RunReport {
                label: self.base.label.clone(),
                point,
                algorithms: Vec::new(),
                failure: Some(e.into()),
            },
        }
    }
}

/// One report per value, in order. A failing point does not stop the sweep.
pub fn run_sweep(sweep: &SweepSpec) -> Vec<RunReport> {
    sweep.values.iter().map(|&v| sweep.run_value(v)).collect()
}

/// [`run_sweep`] with up to `jobs` points in flight; the output order is the
/// value order regardless of scheduling.
pub fn run_sweep_with_jobs(sweep: &SweepSpec, jobs: usize) -> Vec<RunReport> {
    if jobs <= 1 {
        return run_sweep(sweep);
    }
    match rayon::ThreadPoolBuilder::new().num_threads(jobs).build() {
        Ok(pool) => pool.install(|| {
            sweep
                .values
                .par_iter()
                .map(|&v| sweep.run_value(v))
                .collect()
        }),
        Err(e) => {
            log::warn!("falling back to a sequential sweep: {e}");
            run_sweep(sweep)
        }
    }
}
