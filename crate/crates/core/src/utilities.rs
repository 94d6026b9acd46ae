//! Expected utility of each action against a population mixture.
//!
//! A tagged arrival facing stationary mixture `(P_I, P_J)` weighs three
//! actions: join blindly (reward `R` minus expected linear waiting cost over
//! its full sojourn), inspect (pay `C_I`, then join exactly when the queue is
//! below the threshold `n_e`), or balk (0). All formulas are closed forms in
//! the two branch intensities of the stationary law.
//!
//! Two independent algebraic routes exist for each utility: the explicit
//! rational closed form, and the "moment route" through the stationary
//! distribution (`R - c_w (E[Q]+1)/mu` and its conditional analogues). The
//! closed form is the primary path; debug builds assert the routes agree, and
//! the unit tests pin them against each other and against frozen values.

use crate::error::{Error, Result};
use crate::params::ModelParams;
use crate::scalar::Scalar;
use crate::steady_state::{stationary, QueueDist, Strategy};
use serde::Serialize;

/// Utilities of the three actions against a fixed population mixture.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct UtilityTriple<S: Scalar> {
    pub u_inspect: S,
    pub u_join: S,
    /// Always zero — kept explicit so consumers never hard-code the outside
    /// option.
    pub u_balk: S,
}

impl<S: Scalar> UtilityTriple<S> {
    /// Utility of the best action.
    pub fn best(&self) -> S {
        self.u_inspect.max(self.u_join).max(self.u_balk)
    }
}

/// All three utilities at once.
pub fn utilities<S: Scalar>(params: &ModelParams<S>, strategy: &Strategy<S>) -> UtilityTriple<S> {
    UtilityTriple {
        u_inspect: u_inspect(params, strategy),
        u_join: u_join(params, strategy),
        u_balk: S::zero(),
    }
}

/// Special-case population mixtures with their own (simpler) closed forms.
///
/// These are not conveniences: they are separately derived formulas, used both
/// as numerically exact paths where the general form would subtract nearly
/// equal intensities, and as independent cross-checks of the general form.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SpecialMix<S: Scalar> {
    /// Deviant joins blindly against `(0, p_join)` — nobody inspects.
    JoinAgainstNoInspection { p_join: S },
    /// Deviant inspects against `(0, p_join)`.
    InspectAgainstNoInspection { p_join: S },
    /// Deviant joins blindly against `(1, 0)` — everyone inspects.
    JoinAgainstAllInspect,
    /// Deviant inspects against `(1, 0)`.
    InspectAgainstAllInspect,
}

/// Evaluate one of the special-case closed forms.
pub fn u_special<S: Scalar>(params: &ModelParams<S>, mix: SpecialMix<S>) -> Result<S> {
    let check = |p: S| -> Result<S> {
        if p >= S::zero() && p <= S::one() {
            Ok(p)
        } else {
            Err(Error::InvalidStrategy {
                p_inspect: 0.0,
                p_join: p.to_f64().unwrap_or(f64::NAN),
            })
        }
    };
    Ok(match mix {
        SpecialMix::JoinAgainstNoInspection { p_join } => {
            u_join_no_inspection(params, check(p_join)?)
        }
        SpecialMix::InspectAgainstNoInspection { p_join } => {
            u_inspect_no_inspection(params, check(p_join)?)
        }
        SpecialMix::JoinAgainstAllInspect => u_join_all_inspect(params),
        SpecialMix::InspectAgainstAllInspect => u_inspect_all_inspect(params),
    })
}

/// Expected utility of joining blindly against `strategy`.
///
/// Dispatches to the no-inspection closed form when `p_inspect` is exactly
/// zero (the general form is still well defined there, but the special form
/// is the numerically canonical path for the single-geometric chain).
pub fn u_join<S: Scalar>(params: &ModelParams<S>, strategy: &Strategy<S>) -> S {
    if strategy.p_inspect == S::zero() {
        u_join_no_inspection(params, strategy.p_join)
    } else {
        u_join_general(params, strategy)
    }
}

/// Expected utility of inspecting against `strategy`.
pub fn u_inspect<S: Scalar>(params: &ModelParams<S>, strategy: &Strategy<S>) -> S {
    if strategy.p_inspect == S::zero() {
        u_inspect_no_inspection(params, strategy.p_join)
    } else {
        u_inspect_general(params, strategy)
    }
}

/// Join-minus-inspect utility gap, as its own closed form (not a subtraction
/// of the other two): `P(Q >= n_e) * [R - c_w (n_e + 1 + overshoot)/mu] + C_I`.
///
/// The bracket is the (always negative) payoff of joining conditional on the
/// queue being at or past the threshold — the gap is exactly "what joining
/// loses in the states an inspector avoids, minus the fee".
pub fn u_diff<S: Scalar>(params: &ModelParams<S>, strategy: &Strategy<S>) -> S {
    let one = S::one();
    let d = stationary(params, strategy);
    let (rb, ra) = (d.rho_below, d.rho_above);
    let rbn = rb.powi(params.n_e as i32);
    // Tail probability in the pi_0-free arrangement.
    let tail = rbn * (one - rb) / (one - ra - (rb - ra) * rbn);
    let cond_cost = S::of(params.n_e as f64) + one + ra / (one - ra);
    let gap = tail * (params.reward - params.c_w * cond_cost / params.mu) + params.inspect_cost;
    debug_assert!(
        {
            let sub = u_join(params, strategy) - u_inspect(params, strategy);
            (gap - sub).abs() <= consistency_tol(params)
        },
        "utility gap closed form disagrees with subtraction"
    );
    gap
}

/// Tolerance for the dual-route debug assertions, scaled to the utility
/// magnitudes in play (the routes agree analytically; rounding grows with
/// R and with the waiting-cost scale).
fn consistency_tol<S: Scalar>(params: &ModelParams<S>) -> S {
    let scale = S::one() + params.reward.abs() + params.c_w / (params.mu - params.lambda);
    S::of(100.0) * S::tol_identity() * scale
}

// ---------------------------------------------------------------------------
// General-mixture closed forms (two glued geometrics).

/// Join utility, general closed form.
fn u_join_general<S: Scalar>(params: &ModelParams<S>, strategy: &Strategy<S>) -> S {
    let one = S::one();
    let two = S::of(2.0);
    let d = stationary(params, strategy);
    let (rb, ra) = (d.rho_below, d.rho_above);
    let rd = rb - ra;
    let n = S::of(params.n_e as f64);
    let rbn = rb.powi(params.n_e as i32);
    // Polynomial coefficients of the sojourn-cost numerator in the gap
    // intensity rd.
    let a = two - (n + two) * rbn + n * rbn * rb;
    let b = (one - (n + one) * rbn + n * rbn * rb) / (one - rb);
    let numer = one - rb + rd * a + rd * rd * b;
    let denom = params.mu * (one - ra) * (one - ra - rd * rbn);
    let u = params.reward - params.c_w * numer / denom;
    debug_assert!(
        (u - u_join_via_moments(params, &d)).abs() <= consistency_tol(params),
        "join closed form disagrees with moment route"
    );
    u
}

/// Moment route for the join utility: `R - c_w (E[Q] + 1)/mu`.
fn u_join_via_moments<S: Scalar>(params: &ModelParams<S>, d: &QueueDist<S>) -> S {
    params.reward - params.c_w * (d.mean_queue() + S::one()) / params.mu
}

/// Inspect utility, general closed form.
fn u_inspect_general<S: Scalar>(params: &ModelParams<S>, strategy: &Strategy<S>) -> S {
    let one = S::one();
    let d = stationary(params, strategy);
    let (rb, ra) = (d.rho_below, d.rho_above);
    let rd = rb - ra;
    let n = S::of(params.n_e as f64);
    let rbn = rb.powi(params.n_e as i32);
    let prefactor = (one - ra) / (one - ra - rd * rbn);
    let cost = params.c_w * (one + n * rbn * rb - (n + one) * rbn)
        / (params.mu * (one - rb));
    let u = prefactor * (params.reward * (one - rbn) - cost) - params.inspect_cost;
    debug_assert!(
        (u - u_inspect_via_moments(params, &d)).abs() <= consistency_tol(params),
        "inspect closed form disagrees with moment route"
    );
    u
}

/// Moment route for the inspect utility:
/// `P(Q < n_e) (R - c_w (E[Q | Q < n_e] + 1)/mu) - C_I`.
fn u_inspect_via_moments<S: Scalar>(params: &ModelParams<S>, d: &QueueDist<S>) -> S {
    let join_part = d.prob_below_threshold()
        * (params.reward - params.c_w * (d.mean_queue_below() + S::one()) / params.mu);
    join_part - params.inspect_cost
}

// ---------------------------------------------------------------------------
// Special-mixture closed forms.

/// Join against `(0, p_join)`: single geometric, plain M/M/1 sojourn at the
/// thinned rate — `R - c_w/(mu - lambda p_join)`.
fn u_join_no_inspection<S: Scalar>(params: &ModelParams<S>, p_join: S) -> S {
    params.reward - params.c_w / (params.mu - params.lambda * p_join)
}

/// Inspect against `(0, p_join)` with effective intensity `r = rho p_join`:
/// `R(1 - r^n) - c_w (1 + n r^{n+1} - (n+1) r^n) / (mu - lambda p_join) - C_I`.
fn u_inspect_no_inspection<S: Scalar>(params: &ModelParams<S>, p_join: S) -> S {
    let one = S::one();
    let n = S::of(params.n_e as f64);
    let r = params.rho * p_join;
    let rn = r.powi(params.n_e as i32);
    params.reward * (one - rn)
        - params.c_w * (one + n * rn * r - (n + one) * rn)
            / (params.mu - params.lambda * p_join)
        - params.inspect_cost
}

/// Join against `(1, 0)`: the chain is truncated at `n_e`, and the deviant
/// pays the full congestion everyone else avoids.
fn u_join_all_inspect<S: Scalar>(params: &ModelParams<S>) -> S {
    let one = S::one();
    let n = S::of(params.n_e as f64);
    let rho = params.rho;
    let rn1 = rho.powi(params.n_e as i32 + 1);
    let numer = one - rn1 - (one - rho) * (n + one) * rn1;
    params.reward - params.c_w * numer / ((params.mu - params.lambda) * (one - rn1))
}

/// Inspect against `(1, 0)`.
fn u_inspect_all_inspect<S: Scalar>(params: &ModelParams<S>) -> S {
    let one = S::one();
    let n = S::of(params.n_e as f64);
    let rho = params.rho;
    let rn = rho.powi(params.n_e as i32);
    let rn1 = rn * rho;
    params.reward * (one - rn) / (one - rn1)
        - params.c_w * (one + n * rn1 - (n + one) * rn)
            / ((params.mu - params.lambda) * (one - rn1))
        - params.inspect_cost
}

// ---------------------------------------------------------------------------
// Threshold-one simplifications (any parameters with n_e = 1; in particular
// the lowest reward scenario forces n_e = 1). Used by the equilibrium module's
// closed-form solvers.

/// Join utility when `n_e = 1`:
/// `R - (c_w/mu) [1 + rho (P_I + P_J) / ((1 - rho P_J)(1 + rho P_I))]`.
pub(crate) fn u_join_unit_threshold<S: Scalar>(
    params: &ModelParams<S>,
    strategy: &Strategy<S>,
) -> S {
    debug_assert_eq!(params.n_e, 1);
    let one = S::one();
    let (pi, pj) = (strategy.p_inspect, strategy.p_join);
    let rho = params.rho;
    let congestion =
        rho * (pi + pj) / ((one - rho * pj) * (one + rho * pi));
    params.reward - params.c_w / params.mu * (one + congestion)
}

/// Inspect utility when `n_e = 1`:
/// `(R - c_w/mu) (1 - rho P_J)/(1 + rho P_I) - C_I`.
pub(crate) fn u_inspect_unit_threshold<S: Scalar>(
    params: &ModelParams<S>,
    strategy: &Strategy<S>,
) -> S {
    debug_assert_eq!(params.n_e, 1);
    let one = S::one();
    let (pi, pj) = (strategy.p_inspect, strategy.p_join);
    let rho = params.rho;
    (params.reward - params.c_w / params.mu) * (one - rho * pj) / (one + rho * pi)
        - params.inspect_cost
}
