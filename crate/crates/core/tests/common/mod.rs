//! Instance generators and the invariant suites shared by the property tests
//! and the acceptance run.

#![allow(dead_code)]

use ndarray::Array2;
use proptest::prelude::*;
use proptest::test_runner::{Config, TestCaseError, TestRunner};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use schedsim::entropy_solver::{
    entropy_gradient, entropy_value, minimize_smoothed, project_capped_simplex, solve_minimax_row,
    update_weights, EntropyParams, InnerSolverParams, SmoothWeights,
};
use schedsim::experiments::{
    builtin_scenarios, run_sweep, run_sweep_with_jobs, Scenario, SweepParameter, SweepSpec,
};
use schedsim::metrics::fairness_index;
use schedsim::model::{
    check_stability, response_time, slice_cost, slice_cost_expanded, slice_cost_gradient,
    Allocation, ClusterSpec, RowContext, SliceCost, SystemState, WorkloadSpec,
};
use schedsim::oracle::{oracle_costs, oracle_minimax, GridSpec};
use schedsim::queue_validator::{simulate_queue, ServiceKind, SimSpec};
use schedsim::schedulers::{schedule, schedule_bs, Algorithm, CycleParams, ScheduleError};

pub const TASK_BITS: f64 = 1e6;

/// A state from explicit per-scheduler arrival rates, at load 0.5.
pub fn state_with_rates(
    mu: Vec<f64>,
    lambda: &[f64],
    delay: Array2<f64>,
    bandwidth: Array2<f64>,
    task_bits: f64,
) -> SystemState {
    let rho = 0.5;
    let total: f64 = mu.iter().sum();
    let phi = lambda.iter().map(|l| l / (rho * total)).collect();
    SystemState::new(
        ClusterSpec::new(mu, delay, bandwidth).unwrap(),
        WorkloadSpec::new(phi, rho, task_bits).unwrap(),
    )
    .unwrap()
}

/// One scheduler, two nodes: μ ∈ [0.2, 2], λ ∈ (0, 0.5·min μ), e ∈ [0, 1],
/// c ∈ [10⁴, 10⁶].
pub fn random_single_scheduler(rng: &mut impl Rng) -> SystemState {
    let mu: Vec<f64> = (0..2).map(|_| rng.gen_range(0.2..=2.0)).collect();
    let min_mu = mu.iter().copied().fold(f64::INFINITY, f64::min);
    let lambda = rng.gen_range(1e-3..0.5) * min_mu;
    let delay = Array2::from_shape_fn((1, 2), |_| rng.gen_range(0.0..=1.0));
    let bandwidth = Array2::from_shape_fn((1, 2), |_| rng.gen_range(1e4..=1e6));
    state_with_rates(mu, &[lambda], delay, bandwidth, TASK_BITS)
}

#[derive(Debug, Clone)]
pub struct Instance {
    pub mu: Vec<f64>,
    pub phi: Vec<f64>,
    pub rho: f64,
    pub delay: f64,
    pub bandwidth: f64,
}

impl Instance {
    pub fn state(&self) -> SystemState {
        SystemState::new(
            ClusterSpec::uniform(self.mu.clone(), self.phi.len(), self.delay, self.bandwidth)
                .unwrap(),
            WorkloadSpec::new(self.phi.clone(), self.rho, TASK_BITS).unwrap(),
        )
        .unwrap()
    }

    pub fn permuted_nodes(&self, perm: &[usize]) -> Instance {
        Instance {
            mu: perm.iter().map(|&j| self.mu[j]).collect(),
            ..self.clone()
        }
    }
}

/// Small multi-scheduler instances whose uniform start is stable.
pub fn instance() -> impl Strategy<Value = Instance> {
    (1usize..=3, 2usize..=4)
        .prop_flat_map(|(n, m)| {
            (
                prop::collection::vec(0.2f64..2.0, m),
                prop::collection::vec(0.05f64..1.0, n),
                0.1f64..0.8,
                0.0f64..1.0,
                1e4f64..1e6,
            )
        })
        .prop_map(|(mu, weights, rho, delay, bandwidth)| {
            // the φ sum to one, so the total arrival rate is ρ·Σμ
            let total: f64 = weights.iter().sum();
            let phi = weights.iter().map(|w| w / total).collect();
            Instance {
                mu,
                phi,
                rho,
                delay,
                bandwidth,
            }
        })
        .prop_filter("uniform start must be stable", |inst| {
            let demand = inst.rho * inst.mu.iter().sum::<f64>() / inst.mu.len() as f64;
            inst.mu.iter().all(|&mu| demand < 0.95 * mu)
        })
}

/// Feasible slice inputs: `(a, μ_j, μ_ji, λ, e, c)` with `λ·a < μ_ji ≤ μ_j`.
///
/// `a` stays within `max_frac` of the way to the pole or to 1.
fn slice_inputs(max_frac: f64) -> impl Strategy<Value = (f64, f64, f64, f64, f64, f64)> {
    (
        0.2f64..2.0,
        0.05f64..1.0,
        0.01f64..2.0,
        0.0f64..max_frac,
        0.0f64..1.0,
        1e4f64..1e6,
    )
        .prop_map(|(mu_j, share, lambda, frac, e, c)| {
            let mu_ji = share * mu_j;
            let cap = (mu_ji / lambda).min(1.0);
            (frac * cap, mu_j, mu_ji, lambda, e, c)
        })
}

fn slice_of(mu_ji: f64, lambda: f64, e: f64, c: f64) -> SliceCost {
    SliceCost {
        available: mu_ji,
        lambda,
        delay: e,
        task_bits: TASK_BITS,
        bandwidth: c,
    }
}

fn weights_and_costs() -> impl Strategy<Value = (Vec<f64>, Vec<f64>, f64)> {
    (1usize..=8).prop_flat_map(|m| {
        (
            prop::collection::vec(1e-6f64..1.0, m),
            prop::collection::vec(-50.0f64..50.0, m),
            prop_oneof![1e-2f64..1.0, 1.0f64..1e3, 1e3f64..1e7],
        )
    })
}

fn normalized(w: &[f64]) -> Vec<f64> {
    let s: f64 = w.iter().sum();
    w.iter().map(|x| x / s).collect()
}

fn max_of(v: &[f64]) -> f64 {
    v.iter().copied().fold(f64::NEG_INFINITY, f64::max)
}

fn ulps(x: f64, k: f64) -> f64 {
    k * f64::EPSILON * x.abs().max(f64::MIN_POSITIVE)
}

fn fail(msg: String) -> TestCaseError {
    TestCaseError::fail(msg)
}

/// Runs `test` on `cases` generated values; returns the failure message, if any.
pub fn check<S, F>(name: &str, cases: u32, strategy: S, test: F) -> Result<u32, String>
where
    S: Strategy,
    S::Value: std::fmt::Debug,
    F: Fn(S::Value) -> Result<(), TestCaseError>,
{
    let config = Config {
        cases,
        failure_persistence: None,
        ..Config::default()
    };
    let mut runner = TestRunner::new_with_rng(
        config,
        proptest::test_runner::TestRng::from_seed(
            proptest::test_runner::RngAlgorithm::ChaCha,
            &seed_for(name),
        ),
    );
    runner
        .run(&strategy, test)
        .map(|_| cases)
        .map_err(|e| format!("{name}: {e}"))
}

fn seed_for(name: &str) -> [u8; 32] {
    let mut seed = [0u8; 32];
    for (i, b) in name.bytes().enumerate() {
        seed[i % 32] = seed[i % 32].wrapping_mul(31).wrapping_add(b);
    }
    seed
}

// slice cost

pub fn cost_forms_agree(cases: u32) -> Result<u32, String> {
    check(
        "cost_forms_agree",
        cases,
        slice_inputs(0.999),
        |(a, mu_j, mu_ji, l, e, c)| {
            let simple = slice_cost(a, mu_ji, l, e, TASK_BITS, c).unwrap();
            let expanded = slice_cost_expanded(a, mu_j, mu_ji, l, e, TASK_BITS, c).unwrap();
            prop_assert!(
                (simple - expanded).abs() <= 1e-12 * simple.abs().max(1e-300),
                "{simple} vs {expanded}"
            );
            Ok(())
        },
    )
}

pub fn cost_is_convex(cases: u32) -> Result<u32, String> {
    let s = (slice_inputs(0.999), 0.0f64..1.0, 0.0f64..1.0);
    check(
        "cost_is_convex",
        cases,
        s,
        |((a, _, mu_ji, l, e, c), other, t)| {
            let f = |x: f64| slice_cost(x, mu_ji, l, e, TASK_BITS, c).unwrap();
            let b = other * a;
            let mid = f(t * b + (1.0 - t) * a);
            let chord = t * f(b) + (1.0 - t) * f(a);
            prop_assert!(mid <= chord + 1e-12 + ulps(chord, 8.0), "{mid} > {chord}");
            Ok(())
        },
    )
}

pub fn cost_gradient_matches_differences(cases: u32) -> Result<u32, String> {
    check(
        "cost_gradient_matches_differences",
        cases,
        slice_inputs(0.9),
        |(a, _, mu_ji, l, e, c)| {
            let h = 1e-7;
            let a = a.max(h);
            let f = |x: f64| slice_cost(x, mu_ji, l, e, TASK_BITS, c).unwrap();
            let fd = (f(a + h) - f(a - h)) / (2.0 * h);
            let g = slice_cost_gradient(a, mu_ji, l, TASK_BITS, c).unwrap();
            prop_assert!((fd - g).abs() <= 1e-6 * g.abs(), "fd {fd} vs {g}");
            let second = f(a + h) - 2.0 * f(a) + f(a - h);
            let curvature = 2.0 * mu_ji * l / (mu_ji - l * a).powi(3);
            // below rounding resolution the second difference says nothing
            if curvature * h * h > ulps(f(a), 64.0) {
                prop_assert!(second > 0.0, "second difference {second}");
            }
            Ok(())
        },
    )
}

pub fn cost_blows_up_near_capacity(cases: u32) -> Result<u32, String> {
    check(
        "cost_blows_up_near_capacity",
        cases,
        (0.05f64..2.0, 0.01f64..2.0, 0.0f64..1.0, 1e4f64..1e6),
        |(mu_ji, l, e, c)| {
            let limit = mu_ji / l;
            let mut last = f64::NEG_INFINITY;
            for k in 1..=12 {
                let a = limit * (1.0 - 10f64.powi(-k));
                let v = slice_cost(a, mu_ji, l, e, TASK_BITS, c).unwrap();
                prop_assert!(v > last, "cost fell from {last} to {v} at step {k}");
                last = v;
            }
            Ok(())
        },
    )
}

pub fn response_time_permutation_invariant(cases: u32) -> Result<u32, String> {
    let s = (instance(), any::<u64>()).prop_map(|(inst, seed)| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let m = inst.mu.len();
        let n = inst.phi.len();
        let mut perm: Vec<usize> = (0..m).collect();
        for j in (1..m).rev() {
            perm.swap(j, rng.gen_range(0..=j));
        }
        let rows: Vec<Vec<f64>> = (0..n)
            .map(|_| {
                let w: Vec<f64> = (0..m).map(|_| rng.gen_range(0.5..1.5)).collect();
                normalized(&w)
            })
            .collect();
        (inst, perm, rows)
    });
    check(
        "response_time_permutation_invariant",
        cases,
        s,
        |(inst, perm, rows)| {
            let state = inst.state();
            let alloc = Allocation::from_rows(rows.clone()).unwrap();
            prop_assume!(check_stability(&state, &alloc).is_stable());
            let permuted_rows: Vec<Vec<f64>> = rows
                .iter()
                .map(|r| perm.iter().map(|&j| r[j]).collect())
                .collect();
            let pstate = inst.permuted_nodes(&perm).state();
            let palloc = Allocation::from_rows(permuted_rows).unwrap();
            for i in 0..inst.phi.len() {
                let a = response_time(&state, &alloc, i).unwrap();
                let b = response_time(&pstate, &palloc, i).unwrap();
                prop_assert!((a - b).abs() <= 1e-12 * a, "{a} vs {b}");
            }
            Ok(())
        },
    )
}

// entropy smoothing

pub fn entropy_bounds(cases: u32) -> Result<u32, String> {
    check("entropy_bounds", cases, weights_and_costs(), |(w, f, p)| {
        entropy_bound_holds(&f, &normalized(&w), p).map_err(fail)
    })
}

/// `max f + ln(μ_argmax)/p ≤ F_p ≤ max f`, up to a few ulps of the values
/// involved.
pub fn entropy_bound_holds(f: &[f64], mu: &[f64], p: f64) -> Result<(), String> {
    let weights = SmoothWeights::new(mu.to_vec()).map_err(|e| e.to_string())?;
    let mu = weights.as_slice();
    let value = entropy_value(f, &weights, p);
    let top = max_of(f);
    let slack = ulps(top, 4.0);
    if value > top + slack {
        return Err(format!("F = {value} above max f = {top}"));
    }
    // the tightest lower bound over tied maxima
    let best_weight = f
        .iter()
        .zip(mu)
        .filter(|(&fj, _)| fj == top)
        .map(|(_, &m)| m)
        .fold(0.0, f64::max);
    let lower = top + best_weight.ln() / p;
    if value < lower - slack - ulps(lower, 4.0) {
        return Err(format!("F = {value} below lower bound {lower}"));
    }
    Ok(())
}

pub fn entropy_tightens_with_p(cases: u32) -> Result<u32, String> {
    let s = (
        prop::collection::vec(-50.0f64..50.0, 1..=8),
        1.0f64..20.0,
        2.0f64..20.0,
    );
    check("entropy_tightens_with_p", cases, s, |(f, p0, r)| {
        let weights = SmoothWeights::uniform(f.len());
        let top = max_of(&f);
        let mut gap = f64::INFINITY;
        let mut p = p0;
        while p < 1e8 {
            let next = (entropy_value(&f, &weights, p) - top).abs();
            prop_assert!(
                next <= gap + ulps(top, 4.0),
                "gap grew to {next} at p = {p}"
            );
            gap = next;
            p *= r;
        }
        Ok(())
    })
}

pub fn weight_update_normalized(cases: u32) -> Result<u32, String> {
    check(
        "weight_update_normalized",
        cases,
        weights_and_costs(),
        |(w, f, p)| {
            let weights = SmoothWeights::new(normalized(&w)).unwrap();
            let next = update_weights(&weights, &f, p);
            let sum: f64 = next.as_slice().iter().sum();
            prop_assert!((sum - 1.0).abs() <= 1e-12, "sum {sum}");
            prop_assert!(next.as_slice().iter().all(|&x| x > 0.0 && x.is_finite()));
            // the costliest entries gain weight relative to the cheapest
            let (hi, lo) = argmax_argmin(&f);
            if f[hi] > f[lo] {
                let before = weights.as_slice()[hi] / weights.as_slice()[lo];
                let after = next.as_slice()[hi] / next.as_slice()[lo];
                prop_assert!(after >= before * (1.0 - 1e-12));
            }
            Ok(())
        },
    )
}

fn argmax_argmin(f: &[f64]) -> (usize, usize) {
    let mut hi = 0;
    let mut lo = 0;
    for (j, &v) in f.iter().enumerate() {
        if v > f[hi] {
            hi = j;
        }
        if v < f[lo] {
            lo = j;
        }
    }
    (hi, lo)
}

/// A row context for one scheduler facing `m` nodes with random capacity.
fn row_context() -> impl Strategy<Value = RowContext> {
    prop::collection::vec((0.2f64..2.0, 0.0f64..1.0, 1e4f64..1e6), 2..=5).prop_flat_map(|nodes| {
        let total: f64 = nodes.iter().map(|n| n.0).sum();
        (Just(nodes), 0.01f64..0.9).prop_map(move |(nodes, share)| {
            let lambda = share * total;
            RowContext::from_slices(
                nodes
                    .iter()
                    .map(|&(mu, e, c)| slice_of(mu, lambda, e, c))
                    .collect(),
            )
        })
    })
}

pub fn smoothed_descent_never_increases(cases: u32) -> Result<u32, String> {
    let s = (row_context(), 1.0f64..1e4);
    check("smoothed_descent_never_increases", cases, s, |(ctx, p)| {
        let start = project_capped_simplex(&vec![0.0; ctx.nodes()], &ctx.caps()).unwrap();
        let weights = SmoothWeights::uniform(ctx.nodes());
        let before = entropy_value(&ctx.costs(&start).unwrap(), &weights, p);
        let step =
            minimize_smoothed(&start, &ctx, &weights, p, &InnerSolverParams::default()).unwrap();
        prop_assert!(step.value <= before, "{} > {before}", step.value);
        let g = entropy_gradient(&step.row, &ctx, &weights, p).unwrap();
        prop_assert!(g.iter().all(|x| x.is_finite()));
        Ok(())
    })
}

fn projection_inputs() -> impl Strategy<Value = (Vec<f64>, Vec<f64>, Vec<f64>)> {
    (1usize..=8).prop_flat_map(|m| {
        (
            prop::collection::vec(-3.0f64..3.0, m),
            prop::collection::vec(-3.0f64..3.0, m),
            prop::collection::vec(0.0f64..1.0, m),
        )
            .prop_map(move |(x, y, raw)| {
                // caps summing to at least one
                let sum: f64 = raw.iter().sum();
                let caps = if sum < 1.0 {
                    raw.iter()
                        .map(|u| (u + (1.0 - sum) / m as f64 + 1e-3).min(1.0))
                        .collect()
                } else {
                    raw
                };
                (x, y, caps)
            })
    })
}

pub fn projection_idempotent(cases: u32) -> Result<u32, String> {
    check(
        "projection_idempotent",
        cases,
        projection_inputs(),
        |(x, _, caps)| {
            let p = project_capped_simplex(&x, &caps).unwrap();
            let pp = project_capped_simplex(&p, &caps).unwrap();
            let sum: f64 = p.iter().sum();
            prop_assert!((sum - 1.0).abs() <= 1e-12, "sum {sum}");
            for (j, (&a, &b)) in p.iter().zip(&pp).enumerate() {
                prop_assert!(a >= 0.0 && a <= caps[j] + 1e-12);
                prop_assert!((a - b).abs() <= 1e-12, "{a} vs {b}");
            }
            Ok(())
        },
    )
}

pub fn projection_non_expansive(cases: u32) -> Result<u32, String> {
    check(
        "projection_non_expansive",
        cases,
        projection_inputs(),
        |(x, y, caps)| {
            let px = project_capped_simplex(&x, &caps).unwrap();
            let py = project_capped_simplex(&y, &caps).unwrap();
            let d = |a: &[f64], b: &[f64]| {
                a.iter()
                    .zip(b)
                    .map(|(u, v)| (u - v).powi(2))
                    .sum::<f64>()
                    .sqrt()
            };
            prop_assert!(d(&px, &py) <= d(&x, &y) + 1e-12);
            Ok(())
        },
    )
}

// fairness

fn positive_values() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(1e-3f64..1e3, 1..=20)
}

pub fn fairness_scale_invariant(cases: u32) -> Result<u32, String> {
    check(
        "fairness_scale_invariant",
        cases,
        (positive_values(), 1e-3f64..1e3),
        |(d, c)| {
            let scaled: Vec<f64> = d.iter().map(|x| c * x).collect();
            let a = fairness_index(&d).unwrap();
            let b = fairness_index(&scaled).unwrap();
            prop_assert!((a - b).abs() <= 1e-12, "{a} vs {b}");
            prop_assert!(a <= 1.0 && a >= 1.0 / d.len() as f64 - 1e-12);
            Ok(())
        },
    )
}

pub fn fairness_permutation_invariant(cases: u32) -> Result<u32, String> {
    let s = positive_values().prop_flat_map(|d| (Just(d.clone()), Just(d).prop_shuffle()));
    check(
        "fairness_permutation_invariant",
        cases,
        s,
        |(d, shuffled)| {
            let a = fairness_index(&d).unwrap();
            let b = fairness_index(&shuffled).unwrap();
            prop_assert!((a - b).abs() <= 1e-12, "{a} vs {b}");
            Ok(())
        },
    )
}

pub fn fairness_one_iff_equal(cases: u32) -> Result<u32, String> {
    let s = (1e-3f64..1e3, 2usize..20, 0usize..20, 1e-3f64..1.0);
    check("fairness_one_iff_equal", cases, s, |(v, n, k, bump)| {
        let mut d = vec![v; n];
        prop_assert!((fairness_index(&d).unwrap() - 1.0).abs() <= 1e-12);
        d[k % n] = v * (1.0 + bump);
        prop_assert!(fairness_index(&d).unwrap() < 1.0 - 1e-12);
        Ok(())
    })
}

// oracle

pub fn oracle_dominates_random_rows(cases: u32) -> Result<u32, String> {
    check(
        "oracle_dominates_random_rows",
        cases,
        any::<u64>(),
        |seed| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let state = random_single_scheduler(&mut rng);
            let best = oracle_minimax(&state, &GridSpec::new(1e-3).unwrap()).unwrap();
            let max = |row: &[f64]| oracle_costs(&state, row).map(|c| max_of(&c));
            let mut checked = 0;
            while checked < 100 {
                let x: f64 = rng.gen();
                if let Some(v) = max(&[x, 1.0 - x]) {
                    prop_assert!(best.value <= v, "oracle {} above {v} at {x}", best.value);
                    checked += 1;
                }
            }
            // the refined optimum is a local minimum of the 1-D objective
            let x = best.row[0];
            for h in [1e-4, 1e-6] {
                for y in [x - h, x + h] {
                    if (0.0..=1.0).contains(&y) {
                        if let Some(v) = max(&[y, 1.0 - y]) {
                            prop_assert!(v >= best.value - 1e-9, "{v} below {} at {y}", best.value);
                        }
                    }
                }
            }
            Ok(())
        },
    )
}

// schedulers

pub fn best_response_descends(cases: u32) -> Result<u32, String> {
    check("best_response_descends", cases, instance(), |inst| {
        let state = inst.state();
        let params = EntropyParams::default();
        let n = state.schedulers();
        let mut rows = Allocation::uniform(n, state.nodes()).rows();
        for _sweep in 0..2 {
            for i in 0..n {
                let alloc = Allocation::from_rows(rows.clone()).unwrap();
                let before = response_time(&state, &alloc, i).unwrap();
                let ctx = RowContext::new(&state, &alloc, i).unwrap();
                rows[i] = solve_minimax_row(&rows[i], &ctx, &params).unwrap().row;
                let alloc = Allocation::from_rows(rows.clone()).unwrap();
                prop_assert!(check_stability(&state, &alloc).is_stable());
                let after = response_time(&state, &alloc, i).unwrap();
                prop_assert!(after <= before + 1e-9, "scheduler {i}: {before} -> {after}");
            }
        }
        Ok(())
    })
}

fn run_all(state: &SystemState) -> Result<Vec<Allocation>, ScheduleError> {
    Algorithm::ALL
        .iter()
        .map(|&alg| {
            schedule(
                alg,
                state,
                &EntropyParams::default(),
                &CycleParams::default(),
            )
            .map(|r| r.alloc)
        })
        .collect()
}

pub fn schedules_stay_stable(cases: u32) -> Result<u32, String> {
    check("schedules_stay_stable", cases, instance(), |inst| {
        let state = inst.state();
        // every intermediate state is checked inside the loops; an unstable
        // one surfaces as an error
        let allocs = run_all(&state).map_err(|e| fail(e.to_string()))?;
        for alloc in allocs {
            prop_assert!(check_stability(&state, &alloc).is_stable());
            for row in alloc.rows() {
                let sum: f64 = row.iter().sum();
                prop_assert!((sum - 1.0).abs() <= 1e-9 && row.iter().all(|&a| a >= 0.0));
            }
        }
        Ok(())
    })
}

pub fn balanced_fixed_point(cases: u32) -> Result<u32, String> {
    check("balanced_fixed_point", cases, instance(), |inst| {
        let state = inst.state();
        let result = schedule_bs(&state).unwrap();
        prop_assert!(result.converged);
        for i in 0..state.schedulers() {
            let available = schedsim::model::available_capacity(&state, &result.alloc, i).unwrap();
            let total: f64 = available.iter().sum();
            for (j, mu) in available.iter().enumerate() {
                let residual = (result.alloc.row(i)[j] - mu / total).abs();
                prop_assert!(residual < 1e-8, "residual {residual} at ({i}, {j})");
            }
        }
        Ok(())
    })
}

pub fn schedules_permutation_equivariant(cases: u32) -> Result<u32, String> {
    let s = instance().prop_flat_map(|inst| {
        let m = inst.mu.len();
        (
            Just(inst),
            Just((0..m).collect::<Vec<usize>>()).prop_shuffle(),
        )
    });
    check(
        "schedules_permutation_equivariant",
        cases,
        s,
        |(inst, perm)| {
            let plain = run_all(&inst.state()).unwrap();
            let permuted = run_all(&inst.permuted_nodes(&perm).state()).unwrap();
            for ((alg, a), b) in Algorithm::ALL.iter().zip(&plain).zip(&permuted) {
                let tol = if *alg == Algorithm::Bs { 1e-9 } else { 1e-3 };
                for i in 0..inst.phi.len() {
                    for (k, &j) in perm.iter().enumerate() {
                        let (x, y) = (a.row(i)[j], b.row(i)[k]);
                        prop_assert!((x - y).abs() <= tol, "{alg} ({i}, {j}): {x} vs {y}");
                    }
                }
            }
            Ok(())
        },
    )
}

pub fn schedules_deterministic(cases: u32) -> Result<u32, String> {
    check("schedules_deterministic", cases, instance(), |inst| {
        let state = inst.state();
        for alg in Algorithm::ALL {
            let run = || {
                schedule(
                    alg,
                    &state,
                    &EntropyParams::default(),
                    &CycleParams::default(),
                )
            };
            let (a, b) = (run().unwrap(), run().unwrap());
            prop_assert!(a == b, "{alg} differs between identical runs");
            let bits = |r: &schedsim::schedulers::ScheduleResult| -> Vec<u64> {
                r.alloc.matrix().iter().map(|x| x.to_bits()).collect()
            };
            prop_assert_eq!(bits(&a), bits(&b));
        }
        Ok(())
    })
}

// queue simulation

pub fn queue_deterministic(cases: u32) -> Result<u32, String> {
    check(
        "queue_deterministic",
        cases,
        (any::<u64>(), 0.05f64..0.95),
        |(seed, rho)| {
            let spec = SimSpec::new(rho, 1.0, ServiceKind::Exponential, 5_000, seed).unwrap();
            let a = simulate_queue(&spec).unwrap();
            let b = simulate_queue(&spec).unwrap();
            prop_assert_eq!(a.mean_sojourn.to_bits(), b.mean_sojourn.to_bits());
            prop_assert_eq!(a.std_error.to_bits(), b.std_error.to_bits());
            Ok(())
        },
    )
}

pub fn queue_monotone_in_load(cases: u32) -> Result<u32, String> {
    let s = (
        any::<u64>(),
        prop_oneof![
            Just(ServiceKind::Exponential),
            Just(ServiceKind::Deterministic)
        ],
    );
    check("queue_monotone_in_load", cases, s, |(seed, kind)| {
        let mut last = 0.0;
        for rho in [0.1, 0.3, 0.5, 0.7, 0.9] {
            let spec = SimSpec::new(rho, 1.0, kind, 20_000, seed).unwrap();
            let mean = simulate_queue(&spec).unwrap().mean_sojourn;
            prop_assert!(mean >= last, "mean fell to {mean} at load {rho}");
            last = mean;
        }
        Ok(())
    })
}

// experiments

/// Built-in scenarios survive a trip through their JSON form bit for bit.
pub fn builtins_round_trip() -> Result<u32, String> {
    let scenarios = builtin_scenarios();
    for s in &scenarios {
        let back = Scenario::from_json(&s.to_json()).map_err(|e| e.to_string())?;
        if &back != s {
            return Err(format!("{} changed in a JSON round trip", s.label));
        }
    }
    Ok(scenarios.len() as u32)
}

/// Sweep output does not depend on how points are scheduled.
pub fn sweep_order_independent() -> Result<u32, String> {
    let base = schedsim::experiments::builtin_scenario("exp2").unwrap();
    let values = vec![0.2, 0.5, 0.8];
    let forward = SweepSpec::new(base.clone(), SweepParameter::Load, values.clone());
    let mut reversed_values = values;
    reversed_values.reverse();
    let reversed = SweepSpec::new(base, SweepParameter::Load, reversed_values);

    let json = |r: &schedsim::experiments::RunReport| serde_json::to_string(r).unwrap();
    let a: Vec<String> = run_sweep(&forward).iter().map(json).collect();
    let b: Vec<String> = run_sweep_with_jobs(&forward, 3).iter().map(json).collect();
    let mut c: Vec<String> = run_sweep_with_jobs(&reversed, 2).iter().map(json).collect();
    c.reverse();
    if a != b || a != c {
        return Err("sweep output depends on execution order".into());
    }
    Ok(3)
}

/// All invariant suites at the given case count for the cheap properties;
/// the scheduler and simulation suites run a fixed fraction of it.
pub fn all_invariants(cases: u32) -> Vec<(&'static str, Result<u32, String>)> {
    let heavy = (cases / 10).max(1);
    vec![
        ("cost forms agree", cost_forms_agree(cases)),
        ("cost convex", cost_is_convex(cases)),
        ("cost gradient", cost_gradient_matches_differences(cases)),
        ("cost blow-up", cost_blows_up_near_capacity(cases)),
        (
            "response time permutation",
            response_time_permutation_invariant(cases / 2),
        ),
        ("entropy bounds", entropy_bounds(cases)),
        ("entropy tightens with p", entropy_tightens_with_p(cases)),
        ("weight update", weight_update_normalized(cases)),
        (
            "smoothed descent",
            smoothed_descent_never_increases(cases / 4),
        ),
        ("projection idempotent", projection_idempotent(cases)),
        ("projection non-expansive", projection_non_expansive(cases)),
        ("fairness scale", fairness_scale_invariant(cases)),
        (
            "fairness permutation",
            fairness_permutation_invariant(cases),
        ),
        ("fairness equal", fairness_one_iff_equal(cases / 2)),
        ("oracle dominance", oracle_dominates_random_rows(heavy)),
        ("best-response descent", best_response_descends(heavy)),
        ("schedules stable", schedules_stay_stable(heavy)),
        ("balanced fixed point", balanced_fixed_point(heavy)),
        (
            "permutation equivariance",
            schedules_permutation_equivariant(heavy / 2),
        ),
        ("determinism", schedules_deterministic(heavy / 2)),
        ("queue determinism", queue_deterministic(heavy / 5)),
        ("queue monotone", queue_monotone_in_load(heavy / 5)),
        ("builtin round trip", builtins_round_trip()),
        ("sweep order", sweep_order_independent()),
    ]
}
