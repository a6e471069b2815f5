//! System model: schedulers dispatching Poisson job streams to heterogeneous
//! computing nodes, each node an M/G/1 queue with exponential service.
//!
//! All quantities are SI: seconds, jobs/second, bits and bits/second.
//!
//! A scheduler `i` splits every task into slices, sending the fraction
//! `a[i][j]` to node `j`. Slice `j` pays a transmission cost
//! `e_ij + b·a_ij / c_ij` and a queueing cost `a_ij / (μ_j − Λ_j)` where
//! `Λ_j = Σ_k λ_k a_kj` is the total offered rate at the node. The task
//! finishes when its slowest slice does, so a scheduler's response time is
//! the maximum slice cost over its row.

use ndarray::{Array1, Array2, ArrayView1};
use serde::Serialize;
use thiserror::Error;

/// Relative margin kept below a node's available capacity while optimizing.
///
/// A row is only admitted when `λ_i a_ij ≤ (1 − STABILITY_MARGIN) μ_ji`, so
/// every cost the solvers touch stays finite.
pub const STABILITY_MARGIN: f64 = 1e-6;

/// Tolerance on `Σ_j a_ij = 1` for a valid allocation row.
pub const ROW_SUM_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },
    #[error("dimension mismatch for {what}: expected {expected}, found {found}")]
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        found: usize,
    },
    #[error("invalid allocation: {0}")]
    InvalidAllocation(String),
    #[error("unstable queue: arrival rate {arrival} is not below service rate {service}")]
    UnstableQueue { arrival: f64, service: f64 },
    #[error("node {node} has no capacity left for scheduler {scheduler} (available {available})")]
    NoCapacity {
        scheduler: usize,
        node: usize,
        available: f64,
    },
    #[error("total arrival rate {total_arrival} is not below total service rate {total_service}")]
    Overloaded {
        total_arrival: f64,
        total_service: f64,
    },
}

fn invalid(name: &'static str, reason: impl Into<String>) -> ModelError {
    ModelError::InvalidParameter {
        name,
        reason: reason.into(),
    }
}

/// Computing nodes and the links that reach them.
#[derive(Debug, Clone, PartialEq)]
pub struct ClusterSpec {
    mu: Vec<f64>,
    delay: Array2<f64>,
    bandwidth: Array2<f64>,
}

impl ClusterSpec {
    /// `delay` and `bandwidth` are `n × m` (scheduler × node).
    pub fn new(
        mu: Vec<f64>,
        delay: Array2<f64>,
        bandwidth: Array2<f64>,
    ) -> Result<Self, ModelError> {
        if mu.is_empty() {
            return Err(invalid("mu", "at least one computing node is required"));
        }
        if let Some(bad) = mu.iter().find(|&&r| !(r.is_finite() && r > 0.0)) {
            return Err(invalid(
                "mu",
                format!("service rates must be positive, got {bad}"),
            ));
        }
        let m = mu.len();
        for (what, mat) in [("delay", &delay), ("bandwidth", &bandwidth)] {
            if mat.ncols() != m {
                return Err(ModelError::DimensionMismatch {
                    what,
                    expected: m,
                    found: mat.ncols(),
                });
            }
        }
        if delay.nrows() != bandwidth.nrows() {
            return Err(ModelError::DimensionMismatch {
                what: "bandwidth rows",
                expected: delay.nrows(),
                found: bandwidth.nrows(),
            });
        }
        if let Some(bad) = delay.iter().find(|&&e| !(e.is_finite() && e >= 0.0)) {
            return Err(invalid(
                "delay",
                format!("delays must be non-negative, got {bad}"),
            ));
        }
        if let Some(bad) = bandwidth.iter().find(|&&c| !(c.is_finite() && c > 0.0)) {
            return Err(invalid(
                "bandwidth",
                format!("bandwidths must be positive, got {bad}"),
            ));
        }
        Ok(Self {
            mu,
            delay: delay.as_standard_layout().into_owned(),
            bandwidth: bandwidth.as_standard_layout().into_owned(),
        })
    }

    /// Same delay and bandwidth on every scheduler-to-node link.
    pub fn uniform(
        mu: Vec<f64>,
        schedulers: usize,
        delay: f64,
        bandwidth: f64,
    ) -> Result<Self, ModelError> {
        let m = mu.len();
        Self::new(
            mu,
            Array2::from_elem((schedulers, m), delay),
            Array2::from_elem((schedulers, m), bandwidth),
        )
    }

    pub fn nodes(&self) -> usize {
        self.mu.len()
    }

    /// Number of schedulers the link matrices are sized for.
    pub fn schedulers(&self) -> usize {
        self.delay.nrows()
    }

    pub fn mu(&self) -> &[f64] {
        &self.mu
    }

    pub fn total_service(&self) -> f64 {
        self.mu.iter().sum()
    }

    pub fn delay(&self) -> &Array2<f64> {
        &self.delay
    }

    pub fn bandwidth(&self) -> &Array2<f64> {
        &self.bandwidth
    }
}

/// Scheduler-side demand: relative arrival rates, target load and task size.
#[derive(Debug, Clone, PartialEq)]
pub struct WorkloadSpec {
    phi: Vec<f64>,
    rho: f64,
    task_bits: f64,
}

impl WorkloadSpec {
    pub fn new(phi: Vec<f64>, rho: f64, task_bits: f64) -> Result<Self, ModelError> {
        if phi.is_empty() {
            return Err(invalid("phi", "at least one scheduler is required"));
        }
        if let Some(bad) = phi.iter().find(|&&p| !(p.is_finite() && p > 0.0)) {
            return Err(invalid(
                "phi",
                format!("relative arrival rates must be positive, got {bad}"),
            ));
        }
        if !(rho > 0.0 && rho < 1.0) {
            return Err(invalid(
                "rho",
                format!("system load must lie in (0, 1), got {rho}"),
            ));
        }
        if !(task_bits.is_finite() && task_bits > 0.0) {
            return Err(invalid(
                "task_bits",
                format!("task length must be positive, got {task_bits}"),
            ));
        }
        Ok(Self {
            phi,
            rho,
            task_bits,
        })
    }

    pub fn schedulers(&self) -> usize {
        self.phi.len()
    }

    pub fn phi(&self) -> &[f64] {
        &self.phi
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }

    pub fn task_bits(&self) -> f64 {
        self.task_bits
    }
}

/// Absolute arrival rates `λ_i = φ_i · ρ · Σ_j μ_j`.
///
/// The relative rates are used as given; they are not renormalized to sum
/// to one.
pub fn arrival_rates(workload: &WorkloadSpec, cluster: &ClusterSpec) -> Vec<f64> {
    let scale = workload.rho * cluster.total_service();
    workload.phi.iter().map(|&phi| phi * scale).collect()
}

/// Validated cluster and workload together with the derived arrival rates.
#[derive(Debug, Clone, PartialEq)]
pub struct SystemState {
    cluster: ClusterSpec,
    workload: WorkloadSpec,
    lambda: Vec<f64>,
}

impl SystemState {
    pub fn new(cluster: ClusterSpec, workload: WorkloadSpec) -> Result<Self, ModelError> {
        if cluster.schedulers() != workload.schedulers() {
            return Err(ModelError::DimensionMismatch {
                what: "link matrix rows",
                expected: workload.schedulers(),
                found: cluster.schedulers(),
            });
        }
        let lambda = arrival_rates(&workload, &cluster);
        let total_arrival: f64 = lambda.iter().sum();
        let total_service = cluster.total_service();
        if total_arrival >= total_service {
            return Err(ModelError::Overloaded {
                total_arrival,
                total_service,
            });
        }
        Ok(Self {
            cluster,
            workload,
            lambda,
        })
    }

    pub fn cluster(&self) -> &ClusterSpec {
        &self.cluster
    }

    pub fn workload(&self) -> &WorkloadSpec {
        &self.workload
    }

    pub fn lambda(&self) -> &[f64] {
        &self.lambda
    }

    pub fn schedulers(&self) -> usize {
        self.lambda.len()
    }

    pub fn nodes(&self) -> usize {
        self.cluster.nodes()
    }

    /// Offered rate `Σ_k λ_k a_kj` at every node.
    pub fn node_loads(&self, alloc: &Allocation) -> Vec<f64> {
        let lambda = Array1::from(self.lambda.clone());
        alloc.matrix().t().dot(&lambda).to_vec()
    }
}

/// Row-stochastic `n × m` matrix of slicing ratios.
#[derive(Debug, Clone, PartialEq)]
pub struct Allocation(Array2<f64>);

impl Allocation {
    /// Every scheduler splits its tasks evenly over the `m` nodes.
    pub fn uniform(schedulers: usize, nodes: usize) -> Self {
        Self(Array2::from_elem((schedulers, nodes), 1.0 / nodes as f64))
    }

    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self, ModelError> {
        let n = rows.len();
        let m = rows.first().map_or(0, Vec::len);
        if n == 0 || m == 0 {
            return Err(ModelError::InvalidAllocation("empty matrix".into()));
        }
        if let Some(row) = rows.iter().find(|r| r.len() != m) {
            return Err(ModelError::DimensionMismatch {
                what: "allocation row",
                expected: m,
                found: row.len(),
            });
        }
        let flat: Vec<f64> = rows.into_iter().flatten().collect();
        let alloc = Self(Array2::from_shape_vec((n, m), flat).expect("shape checked above"));
        for i in 0..n {
            check_row(alloc.row(i)).map_err(|e| match e {
                ModelError::InvalidAllocation(msg) => {
                    ModelError::InvalidAllocation(format!("row {i}: {msg}"))
                }
                other => other,
            })?;
        }
        Ok(alloc)
    }

    pub fn schedulers(&self) -> usize {
        self.0.nrows()
    }

    pub fn nodes(&self) -> usize {
        self.0.ncols()
    }

    pub fn matrix(&self) -> &Array2<f64> {
        &self.0
    }

    pub fn row(&self, i: usize) -> &[f64] {
        let start = i * self.0.ncols();
        &self
            .0
            .as_slice()
            .expect("allocation is stored in standard layout")[start..start + self.0.ncols()]
    }

    pub fn column(&self, j: usize) -> ArrayView1<'_, f64> {
        self.0.column(j)
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        self.0.outer_iter().map(|r| r.to_vec()).collect()
    }

    /// Replaces row `i`. The caller guarantees the row is on the simplex.
    pub(crate) fn set_row(&mut self, i: usize, row: &[f64]) {
        self.0.row_mut(i).assign(&ArrayView1::from(row));
    }

    /// Elementwise Euclidean (Frobenius) distance.
    pub fn distance(&self, other: &Allocation) -> f64 {
        self.0
            .iter()
            .zip(other.0.iter())
            .map(|(a, b)| (a - b).powi(2))
            .sum::<f64>()
            .sqrt()
    }
}

/// Checks `a_j ≥ 0` and `Σ a_j = 1` within [`ROW_SUM_TOLERANCE`].
pub fn check_row(row: &[f64]) -> Result<(), ModelError> {
    if let Some(bad) = row.iter().find(|&&a| !(a.is_finite() && a >= 0.0)) {
        return Err(ModelError::InvalidAllocation(format!(
            "negative or non-finite ratio {bad}"
        )));
    }
    let sum: f64 = row.iter().sum();
    if (sum - 1.0).abs() > ROW_SUM_TOLERANCE {
        return Err(ModelError::InvalidAllocation(format!(
            "ratios sum to {sum}, expected 1"
        )));
    }
    Ok(())
}

/// Mean time in system of an M/G/1 queue (Pollaczek–Khinchine).
///
/// `sigma2` is the service-time variance; exponential service has
/// `sigma2 = 1/μ²`, deterministic service has `sigma2 = 0`.
pub fn mg1_mean_time(lambda: f64, mu: f64, sigma2: f64) -> Result<f64, ModelError> {
    if !(mu.is_finite() && mu > 0.0) {
        return Err(invalid(
            "mu",
            format!("service rate must be positive, got {mu}"),
        ));
    }
    if !(lambda.is_finite() && lambda >= 0.0) {
        return Err(invalid(
            "lambda",
            format!("arrival rate must be non-negative, got {lambda}"),
        ));
    }
    if !(sigma2.is_finite() && sigma2 >= 0.0) {
        return Err(invalid(
            "sigma2",
            format!("variance must be non-negative, got {sigma2}"),
        ));
    }
    if lambda >= mu {
        return Err(ModelError::UnstableQueue {
            arrival: lambda,
            service: mu,
        });
    }
    let utilization = lambda / mu;
    Ok(1.0 / mu + lambda * (sigma2 + 1.0 / (mu * mu)) / (2.0 * (1.0 - utilization)))
}

/// Capacity of every node left over for scheduler `i`:
/// `μ_ji = μ_j − Σ_{k≠i} λ_k a_kj`.
pub fn available_capacity(
    state: &SystemState,
    alloc: &Allocation,
    i: usize,
) -> Result<Vec<f64>, ModelError> {
    check_shape(state, alloc)?;
    if i >= state.schedulers() {
        return Err(ModelError::DimensionMismatch {
            what: "scheduler index",
            expected: state.schedulers(),
            found: i,
        });
    }
    let loads = state.node_loads(alloc);
    let own = alloc.row(i);
    let lambda_i = state.lambda[i];
    state
        .cluster
        .mu
        .iter()
        .zip(loads)
        .zip(own)
        .enumerate()
        .map(|(j, ((&mu, load), &a))| {
            // Subtracting the scheduler's own share back out instead of
            // summing over k ≠ i keeps this O(n·m) for a whole sweep.
            let available = mu - (load - lambda_i * a);
            if available > 0.0 {
                Ok(available)
            } else {
                Err(ModelError::NoCapacity {
                    scheduler: i,
                    node: j,
                    available,
                })
            }
        })
        .collect()
}

fn check_shape(state: &SystemState, alloc: &Allocation) -> Result<(), ModelError> {
    if alloc.schedulers() != state.schedulers() {
        return Err(ModelError::DimensionMismatch {
            what: "allocation rows",
            expected: state.schedulers(),
            found: alloc.schedulers(),
        });
    }
    if alloc.nodes() != state.nodes() {
        return Err(ModelError::DimensionMismatch {
            what: "allocation columns",
            expected: state.nodes(),
            found: alloc.nodes(),
        });
    }
    Ok(())
}

/// Cost of one slice as a function of its ratio, with everything else fixed.
///
/// `f(a) = a / (μ_ji − λ_i a) + e_ij + b·a / c_ij`, convex and increasing on
/// `0 ≤ a < μ_ji / λ_i`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SliceCost {
    /// Available capacity `μ_ji`.
    pub available: f64,
    /// The scheduler's own arrival rate `λ_i`.
    pub lambda: f64,
    pub delay: f64,
    pub task_bits: f64,
    pub bandwidth: f64,
}

impl SliceCost {
    fn headroom(&self, a: f64) -> Result<f64, ModelError> {
        let offered = self.lambda * a;
        if offered >= self.available {
            return Err(ModelError::UnstableQueue {
                arrival: offered,
                service: self.available,
            });
        }
        Ok(self.available - offered)
    }

    pub fn cost(&self, a: f64) -> Result<f64, ModelError> {
        let headroom = self.headroom(a)?;
        Ok(a / headroom + self.delay + self.task_bits * a / self.bandwidth)
    }

    /// First derivative `μ_ji / (μ_ji − λ_i a)² + b / c_ij`.
    pub fn gradient(&self, a: f64) -> Result<f64, ModelError> {
        let headroom = self.headroom(a)?;
        Ok(self.available / (headroom * headroom) + self.task_bits / self.bandwidth)
    }

    /// Largest ratio admitted under [`STABILITY_MARGIN`], capped at 1.
    pub fn cap(&self) -> f64 {
        if self.lambda > 0.0 {
            ((1.0 - STABILITY_MARGIN) * self.available / self.lambda).min(1.0)
        } else {
            1.0
        }
    }
}

/// Slice execution time `F_ij + L_ij` in its simplified single-fraction form.
pub fn slice_cost(
    a: f64,
    mu_ji: f64,
    lambda_i: f64,
    delay: f64,
    task_bits: f64,
    bandwidth: f64,
) -> Result<f64, ModelError> {
    SliceCost {
        available: mu_ji,
        lambda: lambda_i,
        delay,
        task_bits,
        bandwidth,
    }
    .cost(a)
}

/// Slice execution time written in terms of the node's full rate `μ_j`:
/// `(1 + (μ_j − μ_ji + λ_i a) / (μ_ji − λ_i a)) · a / μ_j + e + b·a / c`.
///
/// Algebraically identical to [`slice_cost`]; kept as a separate route so the
/// two can be checked against each other.
#[allow(clippy::too_many_arguments)]
pub fn slice_cost_expanded(
    a: f64,
    mu_j: f64,
    mu_ji: f64,
    lambda_i: f64,
    delay: f64,
    task_bits: f64,
    bandwidth: f64,
) -> Result<f64, ModelError> {
    let offered = lambda_i * a;
    if offered >= mu_ji {
        return Err(ModelError::UnstableQueue {
            arrival: offered,
            service: mu_ji,
        });
    }
    let queueing = (1.0 + (mu_j - mu_ji + offered) / (mu_ji - offered)) * a / mu_j;
    Ok(queueing + delay + task_bits * a / bandwidth)
}

pub fn slice_cost_gradient(
    a: f64,
    mu_ji: f64,
    lambda_i: f64,
    task_bits: f64,
    bandwidth: f64,
) -> Result<f64, ModelError> {
    SliceCost {
        available: mu_ji,
        lambda: lambda_i,
        delay: 0.0,
        task_bits,
        bandwidth,
    }
    .gradient(a)
}

/// Everything needed to price one scheduler's row while the other rows are
/// held fixed.
#[derive(Debug, Clone, PartialEq)]
pub struct RowContext {
    slices: Vec<SliceCost>,
}

impl RowContext {
    pub fn new(state: &SystemState, alloc: &Allocation, i: usize) -> Result<Self, ModelError> {
        let available = available_capacity(state, alloc, i)?;
        let cluster = &state.cluster;
        let slices = available
            .into_iter()
            .enumerate()
            .map(|(j, mu_ji)| SliceCost {
                available: mu_ji,
                lambda: state.lambda[i],
                delay: cluster.delay[[i, j]],
                task_bits: state.workload.task_bits,
                bandwidth: cluster.bandwidth[[i, j]],
            })
            .collect();
        Ok(Self { slices })
    }

    pub fn from_slices(slices: Vec<SliceCost>) -> Self {
        Self { slices }
    }

    pub fn nodes(&self) -> usize {
        self.slices.len()
    }

    pub fn slices(&self) -> &[SliceCost] {
        &self.slices
    }

    pub fn costs(&self, row: &[f64]) -> Result<Vec<f64>, ModelError> {
        self.zip(row, SliceCost::cost)
    }

    pub fn gradients(&self, row: &[f64]) -> Result<Vec<f64>, ModelError> {
        self.zip(row, SliceCost::gradient)
    }

    /// Response time of the row: the slowest slice.
    pub fn max_cost(&self, row: &[f64]) -> Result<f64, ModelError> {
        Ok(self
            .costs(row)?
            .into_iter()
            .fold(f64::NEG_INFINITY, f64::max))
    }

    /// Completion time if the slices ran one after another.
    pub fn sum_cost(&self, row: &[f64]) -> Result<f64, ModelError> {
        Ok(self.costs(row)?.into_iter().sum())
    }

    /// Per-node upper bounds on the row under [`STABILITY_MARGIN`].
    pub fn caps(&self) -> Vec<f64> {
        self.slices.iter().map(SliceCost::cap).collect()
    }

    fn zip(
        &self,
        row: &[f64],
        f: impl Fn(&SliceCost, f64) -> Result<f64, ModelError>,
    ) -> Result<Vec<f64>, ModelError> {
        if row.len() != self.slices.len() {
            return Err(ModelError::DimensionMismatch {
                what: "row length",
                expected: self.slices.len(),
                found: row.len(),
            });
        }
        self.slices.iter().zip(row).map(|(s, &a)| f(s, a)).collect()
    }
}

/// Response time of scheduler `i`: the maximum slice cost over its row.
pub fn response_time(state: &SystemState, alloc: &Allocation, i: usize) -> Result<f64, ModelError> {
    RowContext::new(state, alloc, i)?.max_cost(alloc.row(i))
}

/// Outcome of the global and per-node stability checks.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StabilityReport {
    pub total_arrival: f64,
    pub total_service: f64,
    pub node_loads: Vec<f64>,
    /// Nodes whose offered rate reaches or exceeds their service rate.
    pub violating_nodes: Vec<usize>,
}

impl StabilityReport {
    pub fn is_stable(&self) -> bool {
        self.total_arrival < self.total_service && self.violating_nodes.is_empty()
    }
}

/// Checks `Σλ < Σμ` and `Σ_i λ_i a_ij < μ_j` for every node.
///
/// Never fails: violations are reported so sweeps can log them.
pub fn check_stability(state: &SystemState, alloc: &Allocation) -> StabilityReport {
    let node_loads = state.node_loads(alloc);
    let violating_nodes = node_loads
        .iter()
        .zip(state.cluster.mu())
        .enumerate()
        .filter(|(_, (&load, &mu))| load >= mu)
        .map(|(j, _)| j)
        .collect();
    StabilityReport {
        total_arrival: state.lambda.iter().sum(),
        total_service: state.cluster.total_service(),
        node_loads,
        violating_nodes,
    }
}
