//! Projected gradient descent over a capped simplex with Armijo backtracking.
//!
//! Trial steps come from the Barzilai–Borwein rule once two iterates exist;
//! the Armijo test along the projection arc keeps every accepted iterate
//! monotone in the objective.

use super::{project_capped_simplex, InnerSolverParams, SolverError};

const ARMIJO: f64 = 1e-4;
const MAX_BACKTRACKS: usize = 64;
const MIN_STEP: f64 = 1e-14;
const MAX_STEP: f64 = 1e6;

#[derive(Debug, Clone, PartialEq)]
pub struct DescentOutcome {
    pub point: Vec<f64>,
    pub value: f64,
    pub iterations: usize,
    /// Projected-gradient norm fell below the tolerance.
    pub stationary: bool,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn within_caps(x: &[f64], caps: &[f64]) -> bool {
    let sum: f64 = x.iter().sum();
    (sum - 1.0).abs() <= 1e-12 && x.iter().zip(caps).all(|(&a, &u)| a >= 0.0 && a <= u)
}

/// Minimizes `objective` (value and gradient) over `{0 ≤ x ≤ caps, Σx = 1}`
/// starting from `start`.
pub fn projected_descent<F>(
    objective: F,
    start: &[f64],
    caps: &[f64],
    params: &InnerSolverParams,
) -> Result<DescentOutcome, SolverError>
where
    F: Fn(&[f64]) -> Result<(f64, Vec<f64>), SolverError>,
{
    let mut x = if within_caps(start, caps) {
        start.to_vec()
    } else {
        project_capped_simplex(start, caps)?
    };
    let (mut fx, mut gx) = objective(&x)?;
    let start_value = fx;
    let mut trial = params.step0;
    let mut stationary = false;
    let mut iterations = 0;

    while iterations < params.max_iter {
        let shifted: Vec<f64> = x.iter().zip(&gx).map(|(a, g)| a - g).collect();
        let residual = project_capped_simplex(&shifted, caps)?;
        let pg_norm = x
            .iter()
            .zip(&residual)
            .map(|(a, b)| (a - b).powi(2))
            .sum::<f64>()
            .sqrt();
        if pg_norm < params.grad_tol {
            stationary = true;
            break;
        }

        let mut t = trial;
        let mut accepted = None;
        for _ in 0..MAX_BACKTRACKS {
            let moved: Vec<f64> = x.iter().zip(&gx).map(|(a, g)| a - t * g).collect();
            let y = project_capped_simplex(&moved, caps)?;
            let d: Vec<f64> = y.iter().zip(&x).map(|(a, b)| a - b).collect();
            if d.iter().all(|&v| v == 0.0) {
                break;
            }
            // Points outside the cost domain are treated as a failed test.
            if let Ok((fy, gy)) = objective(&y) {
                if fy <= fx + ARMIJO * dot(&gx, &d) {
                    accepted = Some((y, fy, gy, d));
                    break;
                }
            }
            t *= params.backtrack;
            if t < MIN_STEP {
                break;
            }
        }
        let Some((y, fy, gy, s)) = accepted else {
            // No representable decrease left along the projection arc.
            break;
        };
        iterations += 1;

        let yk: Vec<f64> = gy.iter().zip(&gx).map(|(a, b)| a - b).collect();
        let sy = dot(&s, &yk);
        trial = if sy > 0.0 {
            (dot(&s, &s) / sy).clamp(MIN_STEP, MAX_STEP)
        } else {
            (t / params.backtrack).min(MAX_STEP)
        };
        x = y;
        fx = fy;
        gx = gy;
    }

    if fx > start_value {
        return Err(SolverError::NonDecrease {
            start: start_value,
            end: fx,
        });
    }
    Ok(DescentOutcome {
        point: x,
        value: fx,
        iterations,
        stationary,
    })
}
