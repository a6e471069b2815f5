//! Scenario definitions, single runs and parameter sweeps.

mod file;
mod sweep;
mod tables;

pub use file::{ExtensionEntry, NodeEntry, ScenarioFile, SchedulerEntry, SolverEntry};
pub use sweep::{run_sweep, run_sweep_with_jobs, SweepParameter, SweepPoint, SweepSpec};
pub use tables::*;

use ndarray::Array2;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::entropy_solver::{EntropyParams, SolverError};
use crate::metrics::FairnessReport;
use crate::model::{
    check_stability, Allocation, ClusterSpec, ModelError, SystemState, WorkloadSpec,
};
use crate::schedulers::{evaluate, schedule, Algorithm, CycleParams, ScheduleError};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ExperimentError {
    #[error("cannot parse scenario: {0}")]
    Parse(String),
    #[error("invalid scenario: {0}")]
    Invalid(String),
    #[error("infeasible scenario: {0}")]
    Infeasible(String),
}

impl From<ModelError> for ExperimentError {
    fn from(e: ModelError) -> Self {
        match e {
            ModelError::Overloaded { .. }
            | ModelError::NoCapacity { .. }
            | ModelError::UnstableQueue { .. } => ExperimentError::Infeasible(e.to_string()),
            other => ExperimentError::Invalid(other.to_string()),
        }
    }
}

impl From<SolverError> for ExperimentError {
    fn from(e: SolverError) -> Self {
        match e {
            SolverError::Model(m) => m.into(),
            other => ExperimentError::Invalid(other.to_string()),
        }
    }
}

impl From<ScheduleError> for ExperimentError {
    fn from(e: ScheduleError) -> Self {
        match e {
            ScheduleError::Model(m) => m.into(),
            ScheduleError::Solver(s) => s.into(),
            ScheduleError::Unstable { nodes } => {
                ExperimentError::Infeasible(format!("allocation overloads nodes {nodes:?}"))
            }
            other => ExperimentError::Invalid(other.to_string()),
        }
    }
}

/// Link parameter given either once for every link or per link (`n × m`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum LinkValue {
    Uniform(f64),
    PerLink(Vec<Vec<f64>>),
}

impl LinkValue {
    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        match self {
            LinkValue::Uniform(v) => LinkValue::Uniform(f(*v)),
            LinkValue::PerLink(rows) => LinkValue::PerLink(
                rows.iter()
                    .map(|r| r.iter().map(|&v| f(v)).collect())
                    .collect(),
            ),
        }
    }

    pub fn to_matrix(&self, schedulers: usize, nodes: usize) -> Result<Array2<f64>, ModelError> {
        match self {
            LinkValue::Uniform(v) => Ok(Array2::from_elem((schedulers, nodes), *v)),
            LinkValue::PerLink(rows) => {
                if rows.len() != schedulers {
                    return Err(ModelError::DimensionMismatch {
                        what: "link matrix rows",
                        expected: schedulers,
                        found: rows.len(),
                    });
                }
                if let Some(row) = rows.iter().find(|r| r.len() != nodes) {
                    return Err(ModelError::DimensionMismatch {
                        what: "link matrix columns",
                        expected: nodes,
                        found: row.len(),
                    });
                }
                let flat = rows.iter().flatten().copied().collect();
                Ok(Array2::from_shape_vec((schedulers, nodes), flat).expect("shape checked"))
            }
        }
    }
}

/// Extra node rates and scheduler rates that size sweeps draw prefixes from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExtensionTables {
    pub mu: Vec<f64>,
    pub phi: Vec<f64>,
}

/// One experiment configuration in SI units.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub label: String,
    pub mu: Vec<f64>,
    pub phi: Vec<f64>,
    pub rho: f64,
    pub task_bits: f64,
    /// Seconds.
    pub delay: LinkValue,
    /// Bits per second.
    pub bandwidth: LinkValue,
    pub algorithms: Vec<Algorithm>,
    pub solver: EntropyParams,
    pub cycle: CycleParams,
    pub extension: Option<ExtensionTables>,
}

impl Scenario {
    pub fn system_state(&self) -> Result<SystemState, ExperimentError> {
        let (n, m) = (self.phi.len(), self.mu.len());
        let cluster = ClusterSpec::new(
            self.mu.clone(),
            self.delay.to_matrix(n, m)?,
            self.bandwidth.to_matrix(n, m)?,
        )?;
        let workload = WorkloadSpec::new(self.phi.clone(), self.rho, self.task_bits)?;
        Ok(SystemState::new(cluster, workload)?)
    }

    pub fn validate(&self) -> Result<(), ExperimentError> {
        if self.algorithms.is_empty() {
            return Err(ExperimentError::Invalid("no algorithm selected".into()));
        }
        self.solver.validate()?;
        self.cycle.validate()?;
        let state = self.system_state()?;
        // every algorithm starts from equal slices
        let start = Allocation::uniform(state.schedulers(), state.nodes());
        let report = check_stability(&state, &start);
        if !report.is_stable() {
            return Err(ExperimentError::Infeasible(format!(
                "equal slicing overloads nodes {:?}",
                report.violating_nodes
            )));
        }
        Ok(())
    }

    /// Copy restricted to the given algorithms.
    pub fn with_algorithms(&self, algorithms: &[Algorithm]) -> Self {
        Self {
            algorithms: algorithms.to_vec(),
            ..self.clone()
        }
    }

    pub fn extension_tables(&self) -> ExtensionTables {
        self.extension.clone().unwrap_or_else(|| ExtensionTables {
            mu: self.mu.clone(),
            phi: self.phi.clone(),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum FailureKind {
    Invalid,
    Infeasible,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Failure {
    pub kind: FailureKind,
    pub message: String,
}

impl From<ExperimentError> for Failure {
    fn from(e: ExperimentError) -> Self {
        let kind = match e {
            ExperimentError::Infeasible(_) => FailureKind::Infeasible,
            _ => FailureKind::Invalid,
        };
        Failure {
            kind,
            message: e.to_string(),
        }
    }
}

/// Values for one scheduler under one algorithm.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SchedulerOutcome {
    /// The algorithm's own objective: response time for PS and BS, the
    /// sequential sum for GS.
    pub objective: f64,
    pub response_time: f64,
    pub sequential_time: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AlgorithmRun {
    pub converged: bool,
    pub cycles_used: usize,
    pub diff_history: Vec<f64>,
    pub allocation: Vec<Vec<f64>>,
    pub schedulers: Vec<SchedulerOutcome>,
    /// Fairness of the response times.
    pub fairness: FairnessReport,
    pub stable: bool,
}

impl AlgorithmRun {
    pub fn response_times(&self) -> Vec<f64> {
        self.schedulers.iter().map(|s| s.response_time).collect()
    }

    pub fn objectives(&self) -> Vec<f64> {
        self.schedulers.iter().map(|s| s.objective).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AlgorithmReport {
    pub algorithm: Algorithm,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub run: Option<AlgorithmRun>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub failure: Option<Failure>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunReport {
    pub label: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub point: Option<SweepPoint>,
    pub algorithms: Vec<AlgorithmReport>,
    /// Set when the scenario itself could not be built.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub failure: Option<Failure>,
}

impl RunReport {
    pub fn algorithm(&self, algorithm: Algorithm) -> Option<&AlgorithmRun> {
        self.algorithms
            .iter()
            .find(|r| r.algorithm == algorithm)
            .and_then(|r| r.run.as_ref())
    }

    /// Every failure in the report, scenario-level first.
    pub fn failures(&self) -> impl Iterator<Item = &Failure> {
        self.failure
            .iter()
            .chain(self.algorithms.iter().filter_map(|r| r.failure.as_ref()))
    }

    pub fn all_converged(&self) -> bool {
        self.algorithms
            .iter()
            .filter_map(|r| r.run.as_ref())
            .all(|r| r.converged)
    }
}

fn run_algorithm(
    algorithm: Algorithm,
    state: &SystemState,
    scenario: &Scenario,
) -> Result<AlgorithmRun, ExperimentError> {
    let result = schedule(algorithm, state, &scenario.solver, &scenario.cycle)?;
    let evals = evaluate(state, &result.alloc)?;
    let fairness = FairnessReport::new(evals.iter().map(|e| e.response_time).collect())
        .map_err(|e| ExperimentError::Invalid(e.to_string()))?;
    if !result.converged {
        log::warn!(
            "{}: {algorithm} stopped after {} cycles without converging",
            scenario.label,
            result.cycles_used
        );
    }
    Ok(AlgorithmRun {
        converged: result.converged,
        cycles_used: result.cycles_used,
        stable: check_stability(state, &result.alloc).is_stable(),
        allocation: result.alloc.rows(),
        schedulers: evals
            .iter()
            .map(|e| SchedulerOutcome {
                objective: e.objective(algorithm),
                response_time: e.response_time,
                sequential_time: e.sequential_time,
            })
            .collect(),
        diff_history: result.diff_history,
        fairness,
    })
}

/// Runs every requested algorithm; failures are recorded per algorithm.
pub fn run_scenario(scenario: &Scenario) -> RunReport {
    run_point(scenario, None)
}

pub(crate) fn run_point(scenario: &Scenario, point: Option<SweepPoint>) -> RunReport {
    let mut report = RunReport {
        label: scenario.label.clone(),
        point,
        algorithms: Vec::new(),
        failure: None,
    };
    let state = match scenario.validate().and_then(|()| scenario.system_state()) {
        Ok(state) => state,
        Err(e) => {
            log::warn!("{}: {e}", scenario.label);
            report.failure = Some(e.into());
            return report;
        }
    };
    for &algorithm in &scenario.algorithms {
        log::info!("{}: running {algorithm}", scenario.label);
        let outcome = run_algorithm(algorithm, &state, scenario);
        report.algorithms.push(match outcome {
            Ok(run) => AlgorithmReport {
                algorithm,
                run: Some(run),
                failure: None,
            },
            Err(e) => {
                log::warn!("{}: {algorithm} failed: {e}", scenario.label);
                AlgorithmReport {
                    algorithm,
                    run: None,
                    failure: Some(e.into()),
                }
            }
        });
    }
    report
}
