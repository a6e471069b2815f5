use super::SolverError;

/// Slack allowed on `Σ u_j ≥ 1` before the caps are declared infeasible.
const CAP_SLACK: f64 = 1e-12;
const BISECTION_STEPS: usize = 200;

/// Euclidean projection of `v` onto `{x : 0 ≤ x_j ≤ u_j, Σ x_j = 1}`.
///
/// The projection has the form `x_j = clamp(v_j − θ, 0, u_j)`; `θ` is found
/// by bisection on the monotone map `θ ↦ Σ_j clamp(v_j − θ, 0, u_j)` and then
/// polished in closed form on the free set.
pub fn project_capped_simplex(v: &[f64], caps: &[f64]) -> Result<Vec<f64>, SolverError> {
    if v.len() != caps.len() || v.is_empty() {
        return Err(SolverError::InvalidParameter {
            name: "caps",
            reason: format!("expected {} caps, got {}", v.len(), caps.len()),
        });
    }
    if let Some(bad) = v.iter().find(|x| !x.is_finite()) {
        return Err(SolverError::InvalidParameter {
            name: "v",
            reason: format!("non-finite coordinate {bad}"),
        });
    }
    if let Some(bad) = caps.iter().find(|&&u| !(u >= 0.0 && u.is_finite())) {
        return Err(SolverError::InvalidParameter {
            name: "caps",
            reason: format!("caps must be finite and non-negative, got {bad}"),
        });
    }
    let total: f64 = caps.iter().sum();
    if total < 1.0 - CAP_SLACK {
        return Err(SolverError::InfeasibleCaps { total });
    }
    if total <= 1.0 {
        return Ok(caps.to_vec());
    }

    let mass = |theta: f64| -> f64 {
        v.iter()
            .zip(caps)
            .map(|(&x, &u)| (x - theta).clamp(0.0, u))
            .sum()
    };

    // mass(lo) = Σu > 1 and mass(hi) = 0
    let mut lo = v
        .iter()
        .zip(caps)
        .map(|(&x, &u)| x - u)
        .fold(f64::INFINITY, f64::min);
    let mut hi = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    for _ in 0..BISECTION_STEPS {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if mass(mid) > 1.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let theta = polish(v, caps, 0.5 * (lo + hi));
    Ok(v.iter()
        .zip(caps)
        .map(|(&x, &u)| (x - theta).clamp(0.0, u))
        .collect())
}

/// Solves `Σ_free (v_j − θ) + Σ_upper u_j = 1` exactly for the active sets
/// implied by `theta`, keeping the bisection value if the sets shift.
fn polish(v: &[f64], caps: &[f64], theta: f64) -> f64 {
    let mut free_sum = 0.0;
    let mut free_count = 0usize;
    let mut upper_sum = 0.0;
    for (&x, &u) in v.iter().zip(caps) {
        let t = x - theta;
        if t >= u {
            upper_sum += u;
        } else if t > 0.0 {
            free_sum += x;
            free_count += 1;
        }
    }
    if free_count == 0 {
        return theta;
    }
    let exact = (free_sum + upper_sum - 1.0) / free_count as f64;
    let consistent = v.iter().zip(caps).all(|(&x, &u)| {
        let before = x - theta;
        let after = x - exact;
        (before >= u) == (after >= u) && (before > 0.0) == (after > 0.0)
    });
    if consistent {
        exact
    } else {
        theta
    }
}
