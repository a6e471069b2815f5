//! Response-time-optimal task slicing for schedulers that dispatch Poisson
//! job streams to heterogeneous M/G/1 computing nodes.
//!
//! Every scheduler splits each task into slices, one per node, and the task
//! completes when its slowest slice does. [`schedulers::schedule_ps`] finds
//! allocations where no scheduler can lower its own response time by
//! re-slicing, using the smoothed minimax solver in [`entropy_solver`].
//! Balanced and sequential-completion schedulers are provided for
//! comparison, along with the experiment tables and sweeps in
//! [`experiments`].

pub mod entropy_solver;
pub mod experiments;
pub mod metrics;
pub mod model;
pub mod oracle;
pub mod queue_validator;
pub mod schedulers;
