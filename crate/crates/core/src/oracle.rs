//! Exhaustive ground truth for single-scheduler instances with at most three
//! nodes.
//!
//! Costs are evaluated from the node-load form
//! `(1/μ_j + Λ_j / (μ_j (μ_j − Λ_j))) · a_j + e_j + b·a_j / c_j` with
//! `Λ_j = λ a_j`, without going through [`crate::model::SliceCost`].

use thiserror::Error;

use crate::model::SystemState;

pub const MAX_ORACLE_NODES: usize = 3;
const GOLDEN_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum OracleError {
    #[error("grid step must lie in (0, 0.01], got {0}")]
    InvalidStep(f64),
    #[error("oracle handles at most {MAX_ORACLE_NODES} nodes, got {0}")]
    TooManyNodes(usize),
    #[error("oracle handles exactly one scheduler, got {0}")]
    TooManySchedulers(usize),
    #[error("no stable grid point")]
    NoFeasiblePoint,
}

/// Resolution of the simplex grid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    step: f64,
    max_dims: usize,
}

impl GridSpec {
    pub fn new(step: f64) -> Result<Self, OracleError> {
        if !(step > 0.0 && step <= 0.01) {
            return Err(OracleError::InvalidStep(step));
        }
        Ok(Self {
            step,
            max_dims: MAX_ORACLE_NODES,
        })
    }

    pub fn step(&self) -> f64 {
        self.step
    }

    fn divisions(&self) -> usize {
        (1.0 / self.step).round() as usize
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OracleResult {
    pub row: Vec<f64>,
    pub value: f64,
}

/// Node-load form of every slice cost, or `None` if some node is unstable.
pub fn oracle_costs(state: &SystemState, row: &[f64]) -> Option<Vec<f64>> {
    let lambda = state.lambda()[0];
    let cluster = state.cluster();
    let bits = state.workload().task_bits();
    row.iter()
        .enumerate()
        .map(|(j, &a)| {
            let mu = cluster.mu()[j];
            let load = lambda * a;
            if load >= mu {
                return None;
            }
            let service = 1.0 / mu + load / (mu * (mu - load));
            Some(service * a + cluster.delay()[[0, j]] + bits * a / cluster.bandwidth()[[0, j]])
        })
        .collect()
}

fn max_cost(costs: &[f64]) -> f64 {
    costs.iter().copied().fold(f64::NEG_INFINITY, f64::max)
}

fn sum_cost(costs: &[f64]) -> f64 {
    costs.iter().sum()
}

/// Minimizes the slowest slice by grid enumeration (plus golden-section
/// refinement when there are two nodes).
pub fn oracle_minimax(state: &SystemState, grid: &GridSpec) -> Result<OracleResult, OracleError> {
    search(state, grid, max_cost)
}

/// Minimizes the sum of slice costs by the same enumeration.
pub fn oracle_minsum(state: &SystemState, grid: &GridSpec) -> Result<OracleResult, OracleError> {
    search(state, grid, sum_cost)
}

fn search(
    state: &SystemState,
    grid: &GridSpec,
    aggregate: fn(&[f64]) -> f64,
) -> Result<OracleResult, OracleError> {
    if state.schedulers() != 1 {
        return Err(OracleError::TooManySchedulers(state.schedulers()));
    }
    let m = state.nodes();
    if m > grid.max_dims {
        return Err(OracleError::TooManyNodes(m));
    }
    let eval = |row: &[f64]| oracle_costs(state, row).map(|c| aggregate(&c));

    let mut best: Option<OracleResult> = None;
    let mut consider = |row: Vec<f64>| {
        if let Some(value) = eval(&row) {
            if best.as_ref().is_none_or(|b| value < b.value) {
                best = Some(OracleResult { row, value });
            }
        }
    };
    let n = grid.divisions();
    let frac = |k: usize| k as f64 / n as f64;
    match m {
        1 => consider(vec![1.0]),
        2 => (0..=n).for_each(|k| consider(vec![frac(k), frac(n - k)])),
        _ => {
            for k1 in 0..=n {
                for k2 in 0..=n - k1 {
                    consider(vec![frac(k1), frac(k2), frac(n - k1 - k2)]);
                }
            }
        }
    }
    let mut best = best.ok_or(OracleError::NoFeasiblePoint)?;

    if m == 2 {
        let line = |t: f64| eval(&[t, 1.0 - t]).unwrap_or(f64::INFINITY);
        let lo = (best.row[0] - grid.step).max(0.0);
        let hi = (best.row[0] + grid.step).min(1.0);
        let t = golden_section(line, lo, hi);
        let value = line(t);
        if value < best.value {
            best = OracleResult {
                row: vec![t, 1.0 - t],
                value,
            };
        }
    }
    Ok(best)
}

/// Minimizer of a unimodal function on `[lo, hi]`.
pub fn golden_section(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> f64 {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = hi - inv_phi * (hi - lo);
    let mut x2 = lo + inv_phi * (hi - lo);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    while hi - lo > GOLDEN_TOL {
        if f1 <= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - inv_phi * (hi - lo);
            f1 = f(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + inv_phi * (hi - lo);
            f2 = f(x2);
        }
    }
    let mid = 0.5 * (lo + hi);
    // endpoints can win when the optimum sits on the boundary
    [lo, mid, hi]
        .into_iter()
        .min_by(|a, b| f(*a).total_cmp(&f(*b)))
        .expect("three candidates")
}
