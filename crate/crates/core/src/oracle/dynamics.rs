//! Damped best-response dynamics.
//!
//! Re-finds equilibria by iterating "move a damped step toward a best
//! response", with no knowledge of the closed-form solutions — used to
//! validate uniqueness and stability of computed equilibria from arbitrary
//! starts.
//!
//! Two details matter:
//!
//! * **Inertial tie rule.** Within an epsilon-tie the best-response target
//!   keeps the current strategy's mass distribution restricted to the tied
//!   actions (uniform only if the current strategy has no mass there). Mixed
//!   equilibria are then *exact* fixed points — a uniform tie-split would
//!   perturb them — and the stop criterion "target equals iterate" detects
//!   them.
//! * **Settle-then-halve damping.** Away from ties the target is a simplex
//!   corner, so a constant damping `d` orbits a mixed equilibrium at radius
//!   O(d). The schedule holds the initial damping for a settling phase and
//!   then halves it every few dozen iterations; each phase's movement budget
//!   covers the previous phase's bias, so the orbit radius tracks `d` down
//!   until the iterate enters the tie band and stops.

use crate::error::{Error, Result};
use crate::params::ModelParams;
use crate::scalar::Scalar;
use crate::steady_state::Strategy;
use crate::utilities::utilities;

/// Iterations spent at the initial damping before the halving schedule.
const SETTLE_ITERS: usize = 256;
/// Halve the damping this often after settling.
const HALVE_EVERY: usize = 64;
/// Undamped-target distance at which the iterate counts as a fixed point.
const STOP_DRIFT: f64 = 1e-8;

/// Relative width of the utility tie band.
const TIE_EPS: f64 = 1e-9;

/// One undamped best-response target under the inertial tie rule.
fn best_response_target<S: Scalar>(params: &ModelParams<S>, current: &Strategy<S>) -> (S, S) {
    let u = utilities(params, current);
    let scale = S::one() + params.reward.abs() + params.c_w / (params.mu - params.lambda);
    let tie = S::of(TIE_EPS) * scale;
    let best = u.best();
    let tied = [
        u.u_inspect >= best - tie,
        u.u_join >= best - tie,
        u.u_balk >= best - tie,
    ];
    let masses = [current.p_inspect, current.p_join, current.p_balk()];
    let tied_mass = (0..3)
        .filter(|&i| tied[i])
        .fold(S::zero(), |acc, i| acc + masses[i]);
    if tied_mass > S::of(1e-12) {
        // Keep the current mixture, restricted to the tied set.
        let pi = if tied[0] { masses[0] / tied_mass } else { S::zero() };
        let pj = if tied[1] { masses[1] / tied_mass } else { S::zero() };
        (pi, pj)
    } else {
        let k = S::of(tied.iter().filter(|&&t| t).count() as f64);
        let share = S::one() / k;
        (
            if tied[0] { share } else { S::zero() },
            if tied[1] { share } else { S::zero() },
        )
    }
}

/// Iterate damped best responses from `start` until the undamped target
/// stops moving (drift below 1e-8) or `max_iter` is exhausted.
///
/// `damping` is the initial step fraction in (0, 1]; 0.2 is a good default.
/// On failure the error carries the tail of the trajectory.
pub fn best_response_dynamics<S: Scalar>(
    params: &ModelParams<S>,
    start: &Strategy<S>,
    damping: S,
    max_iter: usize,
) -> Result<Strategy<S>> {
    assert!(
        damping > S::zero() && damping <= S::one(),
        "damping must lie in (0, 1]"
    );
    let one = S::one();
    let mut current = *start;
    let mut d = damping;
    let mut drift = S::infinity();
    let mut trail = std::collections::VecDeque::with_capacity(8);
    for iter in 0..max_iter {
        let (ti, tj) = best_response_target(params, &current);
        drift = (ti - current.p_inspect)
            .abs()
            .max((tj - current.p_join).abs());
        if drift < S::of(STOP_DRIFT) {
            return Ok(current);
        }
        if iter >= SETTLE_ITERS && (iter - SETTLE_ITERS).is_multiple_of(HALVE_EVERY) {
            d = d * S::of(0.5);
        }
        current = Strategy::clamped(
            (one - d) * current.p_inspect + d * ti,
            (one - d) * current.p_join + d * tj,
        );
        if trail.len() == 8 {
            trail.pop_front();
        }
        trail.push_back((
            current.p_inspect.to_f64().unwrap_or(f64::NAN),
            current.p_join.to_f64().unwrap_or(f64::NAN),
        ));
    }
    Err(Error::NoConvergence {
        iterations: max_iter,
        residual: drift.to_f64().unwrap_or(f64::NAN),
        tolerance: STOP_DRIFT,
        trail: trail.into_iter().collect(),
    })
}
