//! Allocation algorithms.
//!
//! * [`Algorithm::Ps`]: every scheduler minimizes its own response time (the
//!   slowest slice) with the entropy solver, sweeping schedulers in order
//!   until the joint allocation stops moving.
//! * [`Algorithm::Bs`]: balanced scheduling, slices proportional to each
//!   node's available capacity.
//! * [`Algorithm::Gs`]: a best-response scheme where every scheduler minimizes
//!   the *sum* of its slice costs, i.e. the completion time if slices ran
//!   one after another. This stands in for the game-theoretic comparison
//!   algorithm, whose internals are not published alongside the model.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::entropy_solver::{
    projected_descent, solve_minimax_row, EntropyParams, InnerSolverParams, SolverError,
};
use crate::model::{check_stability, Allocation, ModelError, RowContext, SystemState};

pub const DEFAULT_MAX_CYCLE: usize = 100;
pub const DEFAULT_CYCLE_EPS: f64 = 1e-4;
const BALANCED_TOL: f64 = 1e-10;
const BALANCED_MAX_SWEEPS: usize = 1000;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ScheduleError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Solver(#[from] SolverError),
    #[error("allocation became unstable at nodes {nodes:?}")]
    Unstable { nodes: Vec<usize> },
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Algorithm {
    Ps,
    Bs,
    Gs,
}

impl Algorithm {
    pub const ALL: [Algorithm; 3] = [Algorithm::Ps, Algorithm::Bs, Algorithm::Gs];

    pub fn as_str(self) -> &'static str {
        match self {
            Algorithm::Ps => "ps",
            Algorithm::Bs => "bs",
            Algorithm::Gs => "gs",
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Algorithm {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "ps" => Ok(Algorithm::Ps),
            "bs" => Ok(Algorithm::Bs),
            "gs" => Ok(Algorithm::Gs),
            other => Err(format!(
                "unknown algorithm `{other}` (expected ps, bs or gs)"
            )),
        }
    }
}

/// Controls shared by the best-response loops.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CycleParams {
    pub max_cycle: usize,
    /// Stop once the Frobenius distance between successive allocations is at
    /// or below this.
    pub eps: f64,
}

impl Default for CycleParams {
    fn default() -> Self {
        Self {
            max_cycle: DEFAULT_MAX_CYCLE,
            eps: DEFAULT_CYCLE_EPS,
        }
    }
}

impl CycleParams {
    pub fn validate(&self) -> Result<(), ScheduleError> {
        if self.max_cycle == 0 {
            return Err(ScheduleError::InvalidParameter {
                name: "max_cycle",
                reason: "must be positive".into(),
            });
        }
        if !(self.eps > 0.0 && self.eps.is_finite()) {
            return Err(ScheduleError::InvalidParameter {
                name: "eps",
                reason: format!("must be positive, got {}", self.eps),
            });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScheduleResult {
    pub alloc: Allocation,
    pub cycles_used: usize,
    pub converged: bool,
    /// Distance between successive allocations, one entry per cycle.
    pub diff_history: Vec<f64>,
}

fn ensure_stable(state: &SystemState, alloc: &Allocation) -> Result<(), ScheduleError> {
    let report = check_stability(state, alloc);
    if report.is_stable() {
        Ok(())
    } else {
        Err(ScheduleError::Unstable {
            nodes: report.violating_nodes,
        })
    }
}

/// Gauss–Seidel best-response loop: row `i` is replaced by `respond(i, ctx,
/// current_row)` and the next row already sees the change.
fn best_response_loop<F>(
    state: &SystemState,
    cycle: &CycleParams,
    mut respond: F,
) -> Result<ScheduleResult, ScheduleError>
where
    F: FnMut(&RowContext, &[f64]) -> Result<Vec<f64>, ScheduleError>,
{
    cycle.validate()?;
    let (n, m) = (state.schedulers(), state.nodes());
    let mut alloc = Allocation::uniform(n, m);
    ensure_stable(state, &alloc)?;
    let mut diff_history = Vec::new();
    let mut converged = false;

    for _ in 0..cycle.max_cycle {
        let former = alloc.clone();
        for i in 0..n {
            let ctx = RowContext::new(state, &alloc, i)?;
            let row = respond(&ctx, alloc.row(i))?;
            alloc.set_row(i, &row);
            ensure_stable(state, &alloc)?;
        }
        let diff = alloc.distance(&former);
        diff_history.push(diff);
        // With a single scheduler nothing else moves, so one best response
        // is already the fixed point.
        if diff <= cycle.eps || n == 1 {
            converged = true;
            break;
        }
    }
    Ok(ScheduleResult {
        alloc,
        cycles_used: diff_history.len(),
        converged,
        diff_history,
    })
}

/// Response-time scheduling: each scheduler minimizes its slowest slice.
pub fn schedule_ps(
    state: &SystemState,
    params: &EntropyParams,
    cycle: &CycleParams,
) -> Result<ScheduleResult, ScheduleError> {
    params.validate()?;
    best_response_loop(state, cycle, |ctx, row| {
        Ok(solve_minimax_row(row, ctx, params)?.row)
    })
}

/// Sequential-completion proxy: each scheduler minimizes the sum of its
/// slice costs.
pub fn schedule_gs(
    state: &SystemState,
    params: &EntropyParams,
    cycle: &CycleParams,
) -> Result<ScheduleResult, ScheduleError> {
    params.validate()?;
    best_response_loop(state, cycle, |ctx, row| {
        minimize_sum_row(row, ctx, &params.inner)
    })
}

/// Best response of one scheduler under the sum-of-slices objective.
pub fn minimize_sum_row(
    start: &[f64],
    ctx: &RowContext,
    inner: &InnerSolverParams,
) -> Result<Vec<f64>, ScheduleError> {
    if ctx.nodes() == 1 {
        return Ok(vec![1.0]);
    }
    let objective = |x: &[f64]| -> Result<(f64, Vec<f64>), SolverError> {
        Ok((ctx.sum_cost(x)?, ctx.gradients(x)?))
    };
    Ok(projected_descent(objective, start, &ctx.caps(), inner)?.point)
}

/// Balanced scheduling: `a_ij = μ_ji / Σ_j μ_ji`, iterated to a fixed point
/// since `μ_ji` depends on the other rows.
pub fn schedule_bs(state: &SystemState) -> Result<ScheduleResult, ScheduleError> {
    let (n, m) = (state.schedulers(), state.nodes());
    let mut alloc = Allocation::uniform(n, m);
    ensure_stable(state, &alloc)?;
    let mut diff_history = Vec::new();
    let mut converged = false;

    for _ in 0..BALANCED_MAX_SWEEPS {
        let former = alloc.clone();
        for i in 0..n {
            let row = balanced_row(state, &alloc, i)?;
            alloc.set_row(i, &row);
            ensure_stable(state, &alloc)?;
        }
        let diff = alloc.distance(&former);
        diff_history.push(diff);
        if diff < BALANCED_TOL {
            converged = true;
            break;
        }
    }
    Ok(ScheduleResult {
        alloc,
        cycles_used: diff_history.len(),
        converged,
        diff_history,
    })
}

/// Row proportional to the capacity left over by the other schedulers.
pub fn balanced_row(
    state: &SystemState,
    alloc: &Allocation,
    i: usize,
) -> Result<Vec<f64>, ScheduleError> {
    let available = crate::model::available_capacity(state, alloc, i)?;
    let total: f64 = available.iter().sum();
    Ok(available.into_iter().map(|mu| mu / total).collect())
}

/// Both objectives of one scheduler on a joint allocation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SchedulerEval {
    /// Slowest slice: the task's response time.
    pub response_time: f64,
    /// Sum of slice costs: completion time under sequential execution.
    pub sequential_time: f64,
}

impl SchedulerEval {
    /// The objective the given algorithm optimizes.
    pub fn objective(&self, algorithm: Algorithm) -> f64 {
        match algorithm {
            Algorithm::Ps | Algorithm::Bs => self.response_time,
            Algorithm::Gs => self.sequential_time,
        }
    }
}

pub fn evaluate(state: &SystemState, alloc: &Allocation) -> Result<Vec<SchedulerEval>, ModelError> {
    (0..state.schedulers())
        .map(|i| {
            let ctx = RowContext::new(state, alloc, i)?;
            let costs = ctx.costs(alloc.row(i))?;
            Ok(SchedulerEval {
                response_time: costs.iter().copied().fold(f64::NEG_INFINITY, f64::max),
                sequential_time: costs.iter().sum(),
            })
        })
        .collect()
}

/// Runs one algorithm with the given controls.
pub fn schedule(
    algorithm: Algorithm,
    state: &SystemState,
    params: &EntropyParams,
    cycle: &CycleParams,
) -> Result<ScheduleResult, ScheduleError> {
    match algorithm {
        Algorithm::Ps => schedule_ps(state, params, cycle),
        Algorithm::Bs => schedule_bs(state),
        Algorithm::Gs => schedule_gs(state, params, cycle),
    }
}
