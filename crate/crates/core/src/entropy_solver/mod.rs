//! Smoothed minimax solver based on an adjustable entropy function.
//!
//! `min_x max_j f_j(x)` is replaced by a sequence of smooth problems
//!
//! ```text
//! F_p(x, μ) = (1/p) · ln Σ_j μ_j · exp(p · f_j(x))
//! ```
//!
//! After each smooth solve the weights are tilted towards the components that
//! are currently largest, `μ_j ← μ_j e^{p f_j} / Σ_k μ_k e^{p f_k}`, and `p` is
//! multiplied by `r` until it reaches the cap `P`. The weights converge to the
//! multipliers of the active components, so the smoothed minimizer converges
//! to the minimax point without driving `p` to infinity.
//!
//! Rows live on the capped simplex `{0 ≤ a_j ≤ u_j, Σ a_j = 1}`; each smooth
//! problem is solved by projected gradient descent.

mod descent;
mod projection;

pub use descent::{projected_descent, DescentOutcome};
pub use projection::project_capped_simplex;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{ModelError, RowContext};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SolverError {
    #[error("invalid solver parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },
    #[error("caps sum to {total}, which cannot hold a full row")]
    InfeasibleCaps { total: f64 },
    #[error("objective increased from {start} to {end}")]
    NonDecrease { start: f64, end: f64 },
    #[error(transparent)]
    Model(#[from] ModelError),
}

fn invalid(name: &'static str, reason: impl Into<String>) -> SolverError {
    SolverError::InvalidParameter {
        name,
        reason: reason.into(),
    }
}

/// Controls for the projected-gradient inner solver.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct InnerSolverParams {
    pub step0: f64,
    /// Step shrink factor applied on a failed Armijo test.
    pub backtrack: f64,
    pub max_iter: usize,
    /// Stop once the projected-gradient norm is below this.
    pub grad_tol: f64,
}

impl Default for InnerSolverParams {
    fn default() -> Self {
        Self {
            step0: 1e-2,
            backtrack: 0.5,
            max_iter: 500,
            grad_tol: 1e-8,
        }
    }
}

impl InnerSolverParams {
    pub fn validate(&self) -> Result<(), SolverError> {
        if !(self.step0 > 0.0 && self.step0.is_finite()) {
            return Err(invalid(
                "step0",
                format!("must be positive, got {}", self.step0),
            ));
        }
        if !(self.backtrack > 0.0 && self.backtrack < 1.0) {
            return Err(invalid(
                "backtrack",
                format!("must lie in (0, 1), got {}", self.backtrack),
            ));
        }
        if self.max_iter == 0 {
            return Err(invalid("max_iter", "must be positive"));
        }
        if !(self.grad_tol > 0.0 && self.grad_tol.is_finite()) {
            return Err(invalid(
                "grad_tol",
                format!("must be positive, got {}", self.grad_tol),
            ));
        }
        Ok(())
    }
}

/// Controls for the smoothing-parameter escalation loop.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EntropyParams {
    /// Initial smoothing parameter.
    pub p0: f64,
    /// Escalation factor applied to `p` after every smooth solve.
    pub growth: f64,
    /// `p` stops escalating once it reaches this value.
    pub cap: f64,
    /// Stop when successive rows differ by less than this (Euclidean norm).
    pub eps: f64,
    pub max_outer: usize,
    pub inner: InnerSolverParams,
}

impl Default for EntropyParams {
    fn default() -> Self {
        Self {
            p0: 10.0,
            growth: 10.0,
            cap: 1e6,
            eps: 1e-4,
            max_outer: 50,
            inner: InnerSolverParams::default(),
        }
    }
}

impl EntropyParams {
    pub fn validate(&self) -> Result<(), SolverError> {
        if !(self.p0 > 0.0 && self.p0.is_finite()) {
            return Err(invalid("p0", format!("must be positive, got {}", self.p0)));
        }
        if !(self.growth > 1.0 && self.growth.is_finite()) {
            return Err(invalid("r", format!("must exceed 1, got {}", self.growth)));
        }
        if !(self.cap >= self.p0 && self.cap.is_finite()) {
            return Err(invalid(
                "cap",
                format!(
                    "must be finite and at least p0 = {}, got {}",
                    self.p0, self.cap
                ),
            ));
        }
        if !(self.eps > 0.0 && self.eps.is_finite()) {
            return Err(invalid(
                "eps",
                format!("must be positive, got {}", self.eps),
            ));
        }
        if self.max_outer == 0 {
            return Err(invalid("max_outer", "must be positive"));
        }
        self.inner.validate()
    }
}

/// Positive weights summing to one.
#[derive(Debug, Clone, PartialEq)]
pub struct SmoothWeights(Vec<f64>);

impl SmoothWeights {
    pub fn uniform(m: usize) -> Self {
        Self(vec![1.0 / m as f64; m])
    }

    /// Accepts weights that are positive and sum to one within 1e-9, then
    /// renormalizes them.
    pub fn new(weights: Vec<f64>) -> Result<Self, SolverError> {
        if weights.is_empty() {
            return Err(invalid("weights", "empty"));
        }
        if let Some(bad) = weights.iter().find(|&&w| !(w > 0.0 && w.is_finite())) {
            return Err(invalid("weights", format!("must be positive, got {bad}")));
        }
        let sum: f64 = weights.iter().sum();
        if (sum - 1.0).abs() > 1e-9 {
            return Err(invalid("weights", format!("sum to {sum}, expected 1")));
        }
        Ok(Self(weights.into_iter().map(|w| w / sum).collect()))
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

fn max_of(values: &[f64]) -> f64 {
    values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
}

/// `(1/p) · ln Σ_j μ_j exp(p f_j)`, evaluated relative to `max f`.
///
/// The sum is divided by `Σ μ_j` as computed, which keeps the result at or
/// below `max f` in floating point as well.
pub fn entropy_value(f: &[f64], weights: &SmoothWeights, p: f64) -> f64 {
    let top = max_of(f);
    let mut tilted = 0.0;
    let mut total = 0.0;
    for (&fj, &mu) in f.iter().zip(weights.as_slice()) {
        tilted += mu * (p * (fj - top)).exp();
        total += mu;
    }
    top + (tilted / total).ln() / p
}

/// Normalized `μ_j exp(p f_j)`, computed in log space.
fn tilt(weights: &[f64], f: &[f64], p: f64) -> Vec<f64> {
    let logs: Vec<f64> = weights
        .iter()
        .zip(f)
        .map(|(&mu, &fj)| mu.ln() + p * fj)
        .collect();
    let top = max_of(&logs);
    let raw: Vec<f64> = logs.iter().map(|&l| (l - top).exp()).collect();
    let sum: f64 = raw.iter().sum();
    raw.into_iter().map(|w| w / sum).collect()
}

/// Gradient of the smoothed objective with respect to the row:
/// `∂F_p/∂a_j = w_j · f′_j(a_j)` with `w` the tilted weights.
pub fn entropy_gradient(
    row: &[f64],
    ctx: &RowContext,
    weights: &SmoothWeights,
    p: f64,
) -> Result<Vec<f64>, SolverError> {
    let f = ctx.costs(row)?;
    let df = ctx.gradients(row)?;
    Ok(tilt(weights.as_slice(), &f, p)
        .into_iter()
        .zip(df)
        .map(|(w, d)| w * d)
        .collect())
}

/// Multiplicative weight update `μ_j ← μ_j e^{p f_j} / Σ_k μ_k e^{p f_k}`.
///
/// Weights that underflow are floored at the smallest normal `f64` so the
/// result stays strictly positive.
pub fn update_weights(weights: &SmoothWeights, f: &[f64], p: f64) -> SmoothWeights {
    let floored: Vec<f64> = tilt(weights.as_slice(), f, p)
        .into_iter()
        .map(|w| w.max(f64::MIN_POSITIVE))
        .collect();
    let sum: f64 = floored.iter().sum();
    SmoothWeights(floored.into_iter().map(|w| w / sum).collect())
}

/// Result of one smooth solve.
#[derive(Debug, Clone, PartialEq)]
pub struct SmoothedStep {
    pub row: Vec<f64>,
    pub value: f64,
    pub iterations: usize,
}

/// Minimizes `F_p(·, μ)` over the row's capped simplex from `start`.
pub fn minimize_smoothed(
    start: &[f64],
    ctx: &RowContext,
    weights: &SmoothWeights,
    p: f64,
    inner: &InnerSolverParams,
) -> Result<SmoothedStep, SolverError> {
    if ctx.nodes() == 1 {
        let row = vec![1.0];
        let value = entropy_value(&ctx.costs(&row)?, weights, p);
        return Ok(SmoothedStep {
            row,
            value,
            iterations: 0,
        });
    }
    let objective = |x: &[f64]| -> Result<(f64, Vec<f64>), SolverError> {
        let f = ctx.costs(x)?;
        let df = ctx.gradients(x)?;
        let w = tilt(weights.as_slice(), &f, p);
        let value = entropy_value(&f, weights, p);
        Ok((value, w.into_iter().zip(df).map(|(w, d)| w * d).collect()))
    };
    let out = projected_descent(objective, start, &ctx.caps(), inner)?;
    Ok(SmoothedStep {
        row: out.point,
        value: out.value,
        iterations: out.iterations,
    })
}

/// Outcome of the full escalation loop for one row.
#[derive(Debug, Clone, PartialEq)]
pub struct RowSolution {
    /// Best row seen, by true maximum cost.
    pub row: Vec<f64>,
    pub max_cost: f64,
    pub outer_iterations: usize,
    /// Successive rows came within `eps` before `max_outer` ran out.
    pub converged: bool,
    pub final_p: f64,
}

/// Minimizes the row's maximum slice cost.
///
/// Alternates smooth solves with weight updates, escalating `p` by `growth`
/// while it is below `cap`, until successive rows are within `eps`.
pub fn solve_minimax_row(
    start: &[f64],
    ctx: &RowContext,
    params: &EntropyParams,
) -> Result<RowSolution, SolverError> {
    params.validate()?;
    let m = ctx.nodes();
    if start.len() != m {
        return Err(SolverError::Model(ModelError::DimensionMismatch {
            what: "row length",
            expected: m,
            found: start.len(),
        }));
    }
    if m == 1 {
        let row = vec![1.0];
        let max_cost = ctx.max_cost(&row)?;
        return Ok(RowSolution {
            row,
            max_cost,
            outer_iterations: 0,
            converged: true,
            final_p: params.p0,
        });
    }

    let caps = ctx.caps();
    let mut current = if descent_start_ok(start, &caps) {
        start.to_vec()
    } else {
        project_capped_simplex(start, &caps)?
    };
    let mut best = (current.clone(), ctx.max_cost(&current)?);
    let mut weights = SmoothWeights::uniform(m);
    let mut p = params.p0;
    let mut converged = false;
    let mut outer = 0;

    while outer < params.max_outer {
        outer += 1;
        let step = minimize_smoothed(&current, ctx, &weights, p, &params.inner)?;
        let moved = distance(&step.row, &current);
        current = step.row;
        let cost = ctx.max_cost(&current)?;
        if cost < best.1 {
            best = (current.clone(), cost);
        }
        if moved < params.eps {
            converged = true;
            break;
        }
        weights = update_weights(&weights, &ctx.costs(&current)?, p);
        if p < params.cap {
            p *= params.growth;
        }
    }
    if !converged {
        log::debug!("row solve stopped after {outer} outer iterations at p = {p}");
    }
    Ok(RowSolution {
        row: best.0,
        max_cost: best.1,
        outer_iterations: outer,
        converged,
        final_p: p,
    })
}

fn descent_start_ok(x: &[f64], caps: &[f64]) -> bool {
    let sum: f64 = x.iter().sum();
    (sum - 1.0).abs() <= 1e-12 && x.iter().zip(caps).all(|(&a, &u)| a >= 0.0 && a <= u)
}

pub(crate) fn distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).powi(2))
        .sum::<f64>()
        .sqrt()
}
