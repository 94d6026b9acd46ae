//! Exact stationary solve of the truncated birth-death chain.
//!
//! The only model knowledge used here is the per-state transition rates:
//! births at `lambda (P_I + P_J)` below the threshold and `lambda P_J` at or
//! above it, deaths at `mu`. The stationary vector is obtained by
//! state-by-state elimination (GTH), which on a birth-death generator reduces
//! to pure products and divisions — no subtractions, so the solve is accurate
//! to an ulp or two regardless of conditioning. It never touches the
//! two-geometric closed form, which is exactly what makes it an oracle for it.

use crate::error::{Error, Result};
use crate::params::ModelParams;
use crate::scalar::Scalar;
use crate::steady_state::{QueueDist, Strategy};

/// Tail mass the truncation must push below; callers may tighten it.
pub const DEFAULT_TAIL_BOUND: f64 = 1e-12;

fn birth_rate<S: Scalar>(params: &ModelParams<S>, strategy: &Strategy<S>, state: u32) -> S {
    if state < params.n_e {
        params.lambda * (strategy.p_inspect + strategy.p_join)
    } else {
        params.lambda * strategy.p_join
    }
}

/// Smallest state count whose geometric tail bound drops below `bound`
/// (with a floor of `n_e + 2` so both rate branches are represented).
pub fn required_truncation<S: Scalar>(
    params: &ModelParams<S>,
    strategy: &Strategy<S>,
    bound: f64,
) -> usize {
    let rho_eff = ((strategy.p_inspect + strategy.p_join) * params.rho)
        .to_f64()
        .unwrap();
    let floor = params.n_e as usize + 2;
    if rho_eff <= 0.0 {
        return floor;
    }
    let n = (bound.ln() / rho_eff.ln()).ceil() as usize + 1;
    n.max(floor)
}

/// Stationary distribution of the chain truncated to `{0, .., n_states-1}`.
///
/// Errors with [`Error::TruncationTooSmall`] unless the discarded geometric
/// tail is below [`DEFAULT_TAIL_BOUND`].
pub fn solve_truncated_chain<S: Scalar>(
    params: &ModelParams<S>,
    strategy: &Strategy<S>,
    n_states: usize,
) -> Result<Vec<S>> {
    let rho_eff = ((strategy.p_inspect + strategy.p_join) * params.rho)
        .to_f64()
        .unwrap();
    let tail = if rho_eff > 0.0 {
        rho_eff.powi(n_states as i32)
    } else {
        0.0
    };
    if n_states < 2 || tail >= DEFAULT_TAIL_BOUND {
        return Err(Error::TruncationTooSmall {
            states: n_states,
            tail,
            bound: DEFAULT_TAIL_BOUND,
        });
    }
    // GTH elimination. On a birth-death generator the reduction step creates
    // no fill-in and the back-substitution is the pure product
    //   pi[k] = pi[k-1] * birth(k-1) / death(k),
    // followed by explicit normalization.
    let mut pi = vec![S::zero(); n_states];
    pi[0] = S::one();
    for k in 1..n_states {
        pi[k] = pi[k - 1] * birth_rate(params, strategy, k as u32 - 1) / params.mu;
    }
    let mut total = S::zero();
    for &p in &pi {
        total = total + p;
    }
    for p in &mut pi {
        *p = *p / total;
    }
    Ok(pi)
}

/// Largest global-balance residual `|inflow - outflow|` of a probability
/// vector on the truncated chain — a direct check that a solve (or the
/// analytic law) actually satisfies the balance equations.
pub fn balance_residual<S: Scalar>(
    params: &ModelParams<S>,
    strategy: &Strategy<S>,
    pi: &[S],
) -> S {
    let mut worst = S::zero();
    let m = pi.len();
    for state in 0..m {
        let b = birth_rate(params, strategy, state as u32);
        let mut outflow = S::zero();
        if state + 1 < m {
            outflow = outflow + pi[state] * b;
        }
        let mut inflow = S::zero();
        if state > 0 {
            inflow = inflow + pi[state - 1] * birth_rate(params, strategy, state as u32 - 1);
            outflow = outflow + pi[state] * params.mu;
        }
        if state + 1 < m {
            inflow = inflow + pi[state + 1] * params.mu;
        }
        worst = worst.max((inflow - outflow).abs());
    }
    worst
}

/// Total-variation distance between a truncated solve and the analytic law,
/// charging the analytic tail beyond the truncation to the distance.
pub fn total_variation<S: Scalar>(truncated: &[S], analytic: &QueueDist<S>) -> S {
    let mut acc = S::zero();
    for (i, &p) in truncated.iter().enumerate() {
        acc = acc + (p - analytic.pmf(i as u32)).abs();
    }
    acc = acc + analytic.tail(truncated.len() as u32);
    acc * S::of(0.5)
}
