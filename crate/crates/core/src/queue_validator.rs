//! Monte-Carlo check of the M/G/1 mean time in system.
//!
//! A single FIFO server with Poisson arrivals is simulated job by job: each
//! job starts at `max(arrival, previous departure)`. The standard error comes
//! from non-overlapping batch means, since successive sojourn times are
//! strongly correlated.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::Exp1;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{mg1_mean_time, ModelError};

/// Generator behind every simulation; reported alongside results.
pub const RNG_ALGORITHM: &str = "ChaCha8Rng (rand_chacha 0.3)";
pub const DEFAULT_BATCHES: usize = 30;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum QueueError {
    #[error("unstable queue: arrival rate {lambda} is not below service rate {mu}")]
    Unstable { lambda: f64, mu: f64 },
    #[error("invalid simulation parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },
    #[error(transparent)]
    Model(#[from] ModelError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ServiceKind {
    Exponential,
    Deterministic,
}

impl ServiceKind {
    /// Service-time variance at rate `mu`.
    pub fn variance(self, mu: f64) -> f64 {
        match self {
            ServiceKind::Exponential => 1.0 / (mu * mu),
            ServiceKind::Deterministic => 0.0,
        }
    }
}

impl fmt::Display for ServiceKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ServiceKind::Exponential => "exponential",
            ServiceKind::Deterministic => "deterministic",
        })
    }
}

impl FromStr for ServiceKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "exponential" | "exp" | "m" => Ok(ServiceKind::Exponential),
            "deterministic" | "det" | "d" => Ok(ServiceKind::Deterministic),
            other => Err(format!(
                "unknown service kind `{other}` (expected exponential or deterministic)"
            )),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimSpec {
    pub lambda: f64,
    pub mu: f64,
    pub service: ServiceKind,
    pub jobs: usize,
    /// Leading jobs discarded before measuring.
    pub warmup: usize,
    pub seed: u64,
}

impl SimSpec {
    /// Spec with the default warm-up of 10% of `jobs`.
    pub fn new(
        lambda: f64,
        mu: f64,
        service: ServiceKind,
        jobs: usize,
        seed: u64,
    ) -> Result<Self, QueueError> {
        let spec = Self {
            lambda,
            mu,
            service,
            jobs,
            warmup: jobs / 10,
            seed,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<(), QueueError> {
        if !(self.mu > 0.0 && self.mu.is_finite()) {
            return Err(QueueError::InvalidParameter {
                name: "mu",
                reason: format!("must be positive, got {}", self.mu),
            });
        }
        if !(self.lambda > 0.0 && self.lambda.is_finite()) {
            return Err(QueueError::InvalidParameter {
                name: "lambda",
                reason: format!("must be positive, got {}", self.lambda),
            });
        }
        if self.lambda >= self.mu {
            return Err(QueueError::Unstable {
                lambda: self.lambda,
                mu: self.mu,
            });
        }
        if self.jobs < self.warmup + 2 {
            return Err(QueueError::InvalidParameter {
                name: "jobs",
                reason: format!(
                    "need at least two measured jobs beyond the {} warm-up jobs, got {}",
                    self.warmup, self.jobs
                ),
            });
        }
        Ok(())
    }

    /// Mean time in system predicted by the M/G/1 formula.
    pub fn analytic_mean(&self) -> Result<f64, QueueError> {
        Ok(mg1_mean_time(
            self.lambda,
            self.mu,
            self.service.variance(self.mu),
        )?)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimOutcome {
    pub mean_sojourn: f64,
    pub std_error: f64,
    pub measured_jobs: usize,
    pub batches: usize,
    pub rng: &'static str,
}

pub fn simulate_queue(spec: &SimSpec) -> Result<SimOutcome, QueueError> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let measured = spec.jobs - spec.warmup;
    let batches = DEFAULT_BATCHES.min(measured);
    let batch_len = measured / batches;

    let mut arrival = 0.0f64;
    let mut departure = 0.0f64;
    let mut batch_sums = vec![0.0f64; batches];
    for job in 0..spec.jobs {
        // One arrival draw then one service draw per job, so runs with the
        // same seed share their random numbers across rates.
        let gap: f64 = rng.sample(Exp1);
        arrival += gap / spec.lambda;
        let service = match spec.service {
            ServiceKind::Exponential => rng.sample::<f64, _>(Exp1) / spec.mu,
            ServiceKind::Deterministic => 1.0 / spec.mu,
        };
        departure = departure.max(arrival) + service;
        if job >= spec.warmup {
            // trailing jobs that do not fill a batch are dropped
            let b = (job - spec.warmup) / batch_len;
            if b < batches {
                batch_sums[b] += departure - arrival;
            }
        }
    }

    let means: Vec<f64> = batch_sums.iter().map(|s| s / batch_len as f64).collect();
    let grand = means.iter().sum::<f64>() / batches as f64;
    let var = if batches > 1 {
        means.iter().map(|m| (m - grand).powi(2)).sum::<f64>() / (batches - 1) as f64
    } else {
        0.0
    };
    Ok(SimOutcome {
        mean_sojourn: grand,
        std_error: (var / batches as f64).sqrt(),
        measured_jobs: batch_len * batches,
        batches,
        rng: RNG_ALGORITHM,
    })
}
