//! Region classification and equilibrium solvers over the `(R, C_I)` plane.
//!
//! For fixed rates the plane splits into seven regions by the support of the
//! unique equilibrium mixture. Four boundary curves in the fee coordinate
//! organize the dispatch:
//!
//! * `c_i1` — below it inspecting dominates and everyone inspects, `(1, 0)`.
//! * `c_i0` — above it nobody pays for inspection: everyone joins blindly in
//!   the generous-reward scenario, or the population mixes joining and
//!   balking at the blind-join probability otherwise.
//! * `c_b0_hat` (scenario S2 only) — a sufficient fee bound under which the
//!   inspect/join mixture with nobody balking is certainly the equilibrium:
//!   below it an inspector profits even against the most congested no-balk
//!   law, so the mixture cannot price joiners out.
//! * `c_j0_s3` (scenario S3 only) — the fee at which blind joining becomes
//!   profitable against the inspect/balk mixture; above it all three actions
//!   enter the support.
//!
//! Between the curves the solvers are closed-form (a quadratic for the
//! inspect/join mixture, a rational expression for the inspect/balk mixture)
//! except for the full-support interior, which is found by a two-level
//! bisection that exploits strict monotonicity of the utilities in the
//! congestion they create. Every computed equilibrium is re-checked as an
//! epsilon-best response before it is returned.

use crate::error::{Error, Result};
use crate::params::{ModelParams, Scenario};
use crate::scalar::Scalar;
use crate::steady_state::Strategy;
use crate::utilities::{
    u_diff, u_inspect, u_inspect_unit_threshold, u_join, u_join_unit_threshold, utilities,
    UtilityTriple,
};
use serde::{Deserialize, Serialize};

/// Relative half-width within which a fee counts as lying exactly on a
/// boundary curve (the point is then labeled [`Region::Boundary`]).
pub const BOUNDARY_TOL: f64 = 1e-9;

/// Mass below which an action does not count as part of a support.
const SUPPORT_TOL: f64 = 1e-12;

/// Bisection iteration cap (each level; loops exit early once the bracket
/// collapses to adjacent floats).
const MAX_BISECT: usize = 200;

/// Support pattern of the unique equilibrium mixture.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Region {
    /// Everyone inspects: `(1, 0)`.
    AllInspect,
    /// Everyone joins blindly: `(0, 1)`. Only in the generous-reward
    /// scenario, where joining stays profitable at full congestion.
    NoneInspectAllJoin,
    /// Nobody inspects; joining and balking mix at `(0, p̃_J)` where the
    /// blind-join utility is zero.
    NoneInspectMix,
    /// Inspecting and blind joining mix with nobody balking:
    /// `(1 - P_J*, P_J*)`.
    InspectJoinMix,
    /// Inspecting and balking mix with nobody joining blindly: `(P_I*, 0)`.
    InspectBalkMix,
    /// All three actions carry mass.
    Interior,
    /// Within [`BOUNDARY_TOL`] of a boundary curve; the neighbouring labels
    /// are reported in [`Equilibrium::adjacent`].
    Boundary,
}

impl Region {
    pub fn as_str(self) -> &'static str {
        match self {
            Region::AllInspect => "all_inspect",
            Region::NoneInspectAllJoin => "none_inspect_all_join",
            Region::NoneInspectMix => "none_inspect_mix",
            Region::InspectJoinMix => "inspect_join_mix",
            Region::InspectBalkMix => "inspect_balk_mix",
            Region::Interior => "interior",
            Region::Boundary => "boundary",
        }
    }
}

impl std::fmt::Display for Region {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// The unique equilibrium at one parameter point.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Equilibrium<S: Scalar> {
    pub region: Region,
    pub strategy: Strategy<S>,
    /// Utilities of the three actions against the equilibrium mixture.
    pub utilities: UtilityTriple<S>,
    /// Expected utility of an arrival at equilibrium: exactly zero whenever
    /// balking carries mass (a supported action must achieve the outside
    /// option), otherwise `P_I u_I + P_J u_J`.
    pub social_welfare: S,
    /// Labels on either side when `region == Boundary`; empty otherwise.
    pub adjacent: Vec<Region>,
}

/// All boundary-curve values at one reward, including both analytic pieces
/// of the glued curves (each piece is evaluated unconditionally so callers
/// can check the gluing).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BoundaryCurves<S: Scalar> {
    /// Generous-reward piece of the no-inspection fee bound.
    pub c_i0_s1: S,
    /// Scarce-reward piece of the no-inspection fee bound.
    pub c_i0_s23: S,
    /// Glued `c_i0` (the piece matching the scenario at this reward).
    pub c_i0: S,
    /// Sawtooth piece of the all-inspect fee bound (scenarios S1/S2).
    pub c_i1_s12: S,
    /// Stingy-reward piece of the all-inspect fee bound (scenario S3).
    pub c_i1_s3: S,
    /// Glued `c_i1`.
    pub c_i1: S,
    /// No-balk sufficiency bound; only defined in scenario S2.
    pub c_b0_hat: Option<S>,
    /// Fee where blind joining breaks even against the inspect/balk mixture;
    /// only defined in scenario S3.
    pub c_j0_s3: Option<S>,
}

impl<S: Scalar> BoundaryCurves<S> {
    /// Evaluate every curve at the reward carried by `params`.
    pub fn at(params: &ModelParams<S>) -> Self {
        BoundaryCurves {
            c_i0_s1: c_i0_s1(params),
            c_i0_s23: c_i0_s23(params),
            c_i0: boundary_c_i0(params),
            c_i1_s12: c_i1_s12(params),
            c_i1_s3: c_i1_s3(params),
            c_i1: boundary_c_i1(params),
            c_b0_hat: boundary_c_b0_hat(params).ok(),
            c_j0_s3: boundary_c_j0_s3(params).ok(),
        }
    }
}

/// Magnitude of the utilities in play; scales boundary and residual
/// tolerances.
fn utility_scale<S: Scalar>(params: &ModelParams<S>) -> S {
    S::one() + params.reward.abs() + params.c_w / (params.mu - params.lambda)
}

// ---------------------------------------------------------------------------
// Boundary curves.

/// Generous-reward piece of `c_i0`:
/// `rho^n (c_w n/mu + c_w/(mu-lambda) - R)`.
fn c_i0_s1<S: Scalar>(p: &ModelParams<S>) -> S {
    let n = S::of(p.n_e as f64);
    p.rho.powi(p.n_e as i32) * (p.c_w * n / p.mu + p.c_w / (p.mu - p.lambda) - p.reward)
}

/// Scarce-reward piece of `c_i0`: `(n c_w/mu) (1 - c_w/(R mu))^n`.
fn c_i0_s23<S: Scalar>(p: &ModelParams<S>) -> S {
    let n = S::of(p.n_e as f64);
    let r = S::one() - p.c_w / (p.reward * p.mu);
    n * p.c_w / p.mu * r.powi(p.n_e as i32)
}

/// Sawtooth piece of `c_i1`:
/// `(1-rho) rho^n (c_w (n+1)/mu - R) / (1 - rho^{n+1})`.
///
/// Piecewise linear in `R`, exactly zero where `R mu / c_w` hits an integer,
/// and jumping to `(1-rho) rho^{n+1} c_w / (mu (1 - rho^{n+2}))` just past it.
fn c_i1_s12<S: Scalar>(p: &ModelParams<S>) -> S {
    let one = S::one();
    let n = S::of(p.n_e as f64);
    (one - p.rho) * p.rho.powi(p.n_e as i32) * (p.c_w * (n + one) / p.mu - p.reward)
        / (one - p.rho.powi(p.n_e as i32 + 1))
}

/// Stingy-reward piece of `c_i1`: `(R mu - c_w)/(mu + lambda)`.
fn c_i1_s3<S: Scalar>(p: &ModelParams<S>) -> S {
    (p.reward * p.mu - p.c_w) / (p.mu + p.lambda)
}

/// Fee below which nobody inspecting cannot hold: with the fee above this
/// curve the equilibrium has `P_I = 0`.
///
/// Both pieces agree at the scenario cutoff `R = c_w/(mu - lambda)`.
pub fn boundary_c_i0<S: Scalar>(params: &ModelParams<S>) -> S {
    match params.scenario {
        Scenario::S1 => c_i0_s1(params),
        _ => c_i0_s23(params),
    }
}

/// Fee below which everyone inspects: the deviation payoff gap at `(1, 0)`
/// equals the fee exactly on this curve.
///
/// Both pieces agree at the scenario cutoff `R = c_w (2/mu - 1/(mu+lambda))`.
pub fn boundary_c_i1<S: Scalar>(params: &ModelParams<S>) -> S {
    match params.scenario {
        Scenario::S3 => c_i1_s3(params),
        _ => c_i1_s12(params),
    }
}

/// No-balk sufficiency bound in scenario S2:
/// `R (1 - rho^n) + c_w ((n+1) rho^n - n rho^{n+1} - 1)/(mu - lambda)`.
///
/// This is the fee making an inspector break even against everyone joining
/// blindly — the most congested law with nobody balking. Any inspect/join
/// mixture is stochastically below that law, so for fees under this bound
/// the mixture's common utility stays non-negative and balking stays out.
pub fn boundary_c_b0_hat<S: Scalar>(params: &ModelParams<S>) -> Result<S> {
    if params.scenario != Scenario::S2 {
        return Err(Error::WrongScenario {
            operation: "boundary_c_b0_hat",
            expected: "S2",
            actual: params.scenario.as_str(),
        });
    }
    let one = S::one();
    let n = S::of(params.n_e as f64);
    let rn = params.rho.powi(params.n_e as i32);
    Ok(params.reward * (one - rn)
        + params.c_w * ((n + one) * rn - n * rn * params.rho - one) / (params.mu - params.lambda))
}

/// Fee at which blind joining breaks even against the inspect/balk mixture
/// in scenario S3: `(R mu - c_w)(2 c_w - R mu)/(mu c_w)`.
///
/// In fee units (both factors are utility-rate products; one `mu c_w`
/// normalizes them). Vanishes at both ends of its scenario and meets `c_i1`
/// exactly at the upper cutoff `R = c_w (2/mu - 1/(mu+lambda))`.
pub fn boundary_c_j0_s3<S: Scalar>(params: &ModelParams<S>) -> Result<S> {
    if params.scenario != Scenario::S3 {
        return Err(Error::WrongScenario {
            operation: "boundary_c_j0_s3",
            expected: "S3",
            actual: params.scenario.as_str(),
        });
    }
    let two = S::of(2.0);
    let rmu = params.reward * params.mu;
    Ok((rmu - params.c_w) * (two * params.c_w - rmu) / (params.mu * params.c_w))
}

/// Blind-join probability `p̃_J = (R mu - c_w)/(R lambda)` making the blind
/// joiner indifferent; the joining share of every `P_I = 0` mixture.
///
/// Lies in `(0, 1]` exactly in scenarios S2 and S3 (in S1 the formula
/// exceeds one: joining is profitable even at full congestion).
pub fn blind_join_prob<S: Scalar>(params: &ModelParams<S>) -> Result<S> {
    if params.scenario == Scenario::S1 {
        return Err(Error::WrongScenario {
            operation: "blind_join_prob",
            expected: "S2 or S3",
            actual: params.scenario.as_str(),
        });
    }
    let pj = (params.reward * params.mu - params.c_w) / (params.reward * params.lambda);
    debug_assert!(
        u_join(params, &Strategy::clamped(S::zero(), pj)).abs()
            <= S::tol_root() * utility_scale(params),
        "blind joiner not indifferent at the blind-join probability"
    );
    Ok(pj)
}

// ---------------------------------------------------------------------------
// Closed-form solvers.

/// Positive root of `a y^2 + b y + c` with `a > 0`, `c < 0` (so exactly one
/// root is positive), via the cancellation-free factorization
/// `q = -(b + sign(b) sqrt(b^2 - 4ac))/2`, roots `q/a` and `c/q`.
pub(crate) fn positive_root<S: Scalar>(a: S, b: S, c: S) -> S {
    debug_assert!(a > S::zero() && c < S::zero());
    let disc = (b * b - S::of(4.0) * a * c).sqrt();
    let q = -(b + b.signum() * disc) / S::of(2.0);
    (q / a).max(c / q)
}

/// Joining share `P_J*` of the inspect/join mixture with nobody balking:
/// `y = 1 - P_J* rho` is the positive root of
/// `y^2 C_I (rho^{-n} - 1)/(1-rho) + y (C_I + R - c_w n/mu) - c_w/mu`.
///
/// Defined for fees between `c_i1` and the generous-reward piece of `c_i0`
/// (where the root runs from `y = 1`, nobody joins, down to `y = 1 - rho`,
/// everyone joins). Errors with `OutOfRegion` outside that band and
/// `WrongScenario` in S3, where no such mixture can hold: restricted to
/// `P_I + P_J = 1` the blind-join utility is maximal at `(1, 0)` and is
/// non-positive there by the scenario definition.
pub fn solve_pj_star<S: Scalar>(params: &ModelParams<S>) -> Result<S> {
    if params.scenario == Scenario::S3 {
        return Err(Error::WrongScenario {
            operation: "solve_pj_star",
            expected: "S1 or S2",
            actual: params.scenario.as_str(),
        });
    }
    let one = S::one();
    let (lo, hi) = (boundary_c_i1(params), c_i0_s1(params));
    let tol = S::of(BOUNDARY_TOL) * (one + hi.abs());
    if params.inspect_cost < lo - tol || params.inspect_cost > hi + tol {
        return Err(Error::OutOfRegion {
            what: format!(
                "solve_pj_star needs the fee inside the inspect/join band \
                 [{:?}, {:?}] at this reward (got {:?})",
                lo, hi, params.inspect_cost
            ),
        });
    }
    let n = S::of(params.n_e as f64);
    let a = params.inspect_cost * (params.rho.powi(-(params.n_e as i32)) - one) / (one - params.rho);
    let b = params.inspect_cost + params.reward - params.c_w * n / params.mu;
    let c = -params.c_w / params.mu;
    let y = positive_root(a, b, c);
    let pj = ((one - y) / params.rho).max(S::zero()).min(one);
    debug_assert!(
        u_diff(params, &Strategy::clamped(one - pj, pj)).abs()
            <= S::tol_root() * utility_scale(params),
        "inspect/join mixture is not indifferent at the quadratic root"
    );
    Ok(pj)
}

/// Inspecting share `P_I*` of the inspect/balk mixture in scenario S3:
/// `(R mu - c_w - C_I mu)/(C_I lambda)`.
///
/// Defined for fees between `c_i1` (where it reaches 1) and `c_j0_s3` (past
/// which blind joining against it becomes profitable and the mixture stops
/// being an equilibrium); `OutOfRegion` outside.
pub fn solve_pi_star<S: Scalar>(params: &ModelParams<S>) -> Result<S> {
    if params.scenario != Scenario::S3 {
        return Err(Error::WrongScenario {
            operation: "solve_pi_star",
            expected: "S3",
            actual: params.scenario.as_str(),
        });
    }
    let one = S::one();
    let (lo, hi) = (boundary_c_i1(params), boundary_c_j0_s3(params)?);
    let tol = S::of(BOUNDARY_TOL) * (one + hi.abs());
    if params.inspect_cost < lo - tol || params.inspect_cost > hi + tol {
        return Err(Error::OutOfRegion {
            what: format!(
                "solve_pi_star needs the fee inside the inspect/balk band \
                 [{:?}, {:?}] at this reward (got {:?})",
                lo, hi, params.inspect_cost
            ),
        });
    }
    let pi = (params.reward * params.mu - params.c_w - params.inspect_cost * params.mu)
        / (params.inspect_cost * params.lambda);
    let pi = pi.max(S::zero()).min(one);
    debug_assert!(
        u_inspect_unit_threshold(params, &Strategy::clamped(pi, S::zero())).abs()
            <= S::tol_root() * utility_scale(params),
        "inspector not indifferent at the inspect/balk mixture"
    );
    debug_assert!(
        u_join_unit_threshold(params, &Strategy::clamped(pi, S::zero()))
            <= S::tol_root() * utility_scale(params),
        "blind joining profitable inside the inspect/balk band"
    );
    Ok(pi)
}

/// Full-support mixture solving `u_inspect = u_join = 0`.
///
/// Two-level bisection. Inner level: for fixed `P_J` the inspect utility is
/// strictly decreasing in `P_I` (more inspectors congest exactly the states
/// an inspector joins in), so its root over `[0, 1 - P_J]` is unique; the
/// ends are used when the sign never changes. Outer level: the blind-join
/// utility at that inner point is strictly positive at `P_J = 0` and
/// strictly negative at the blind-join probability whenever the point lies
/// in the full-support region, so bisection on `P_J` closes the system. If
/// the outer bracket fails (the point is not in the full-support region, or
/// the monotone structure is violated) the solver falls back to damped
/// best-response fixed-point iteration.
pub fn solve_interior<S: Scalar>(params: &ModelParams<S>) -> Result<Strategy<S>> {
    let pj_top = match blind_join_prob(params) {
        Ok(pj) => pj,
        Err(_) => {
            return Err(Error::OutOfRegion {
                what: "full-support equilibria require scenario S2 or S3 \
                       (blind joining is always profitable in S1)"
                    .to_string(),
            })
        }
    };
    // Unit-threshold closed forms where they apply (scenario S3, and the
    // lowest-reward slice of S2); the general forms otherwise.
    let u_i = |s: &Strategy<S>| {
        if params.n_e == 1 {
            u_inspect_unit_threshold(params, s)
        } else {
            u_inspect(params, s)
        }
    };
    let u_j = |s: &Strategy<S>| {
        if params.n_e == 1 {
            u_join_unit_threshold(params, s)
        } else {
            u_join(params, s)
        }
    };
    let half = S::of(0.5);
    let inner = |pj: S| -> S {
        let cap = S::one() - pj;
        if u_i(&Strategy::clamped(S::zero(), pj)) <= S::zero() {
            return S::zero();
        }
        if u_i(&Strategy::clamped(cap, pj)) >= S::zero() {
            return cap;
        }
        let (mut lo, mut hi) = (S::zero(), cap);
        for _ in 0..MAX_BISECT {
            let mid = (lo + hi) * half;
            if mid <= lo || mid >= hi {
                break;
            }
            if u_i(&Strategy::clamped(mid, pj)) > S::zero() {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        (lo + hi) * half
    };
    let residual = |pj: S| u_j(&Strategy::clamped(inner(pj), pj));
    if !(residual(S::zero()) > S::zero() && residual(pj_top) < S::zero()) {
        let start = Strategy::clamped(S::of(0.2), pj_top * half);
        return crate::oracle::best_response_dynamics(params, &start, half, 200_000);
    }
    let (mut lo, mut hi) = (S::zero(), pj_top);
    for _ in 0..MAX_BISECT {
        let mid = (lo + hi) * half;
        if mid <= lo || mid >= hi {
            break;
        }
        if residual(mid) > S::zero() {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let pj = (lo + hi) * half;
    Ok(Strategy::clamped(inner(pj), pj))
}

// ---------------------------------------------------------------------------
// Verification and dispatch.

/// Outcome of checking a mixture as an epsilon-best response against itself.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct VerifyReport<S: Scalar> {
    pub utilities: UtilityTriple<S>,
    /// Utility of the best action (balking included at zero).
    pub best: S,
    /// Largest shortfall `best - u_a` over actions carrying mass.
    pub worst_gap: S,
    pub eps: S,
    pub ok: bool,
}

/// Check that every action with positive mass comes within `eps` of the best
/// available utility (the defining property of an equilibrium mixture).
pub fn verify_equilibrium<S: Scalar>(
    params: &ModelParams<S>,
    strategy: &Strategy<S>,
    eps: S,
) -> VerifyReport<S> {
    let u = utilities(params, strategy);
    let best = u.best();
    let masses = [strategy.p_inspect, strategy.p_join, strategy.p_balk()];
    let values = [u.u_inspect, u.u_join, u.u_balk];
    let mut worst_gap = S::zero();
    for i in 0..3 {
        if masses[i] > S::of(SUPPORT_TOL) {
            worst_gap = worst_gap.max(best - values[i]);
        }
    }
    VerifyReport { utilities: u, best, worst_gap, eps, ok: worst_gap <= eps }
}

/// Build the equilibrium record for a solved mixture. Social welfare is
/// exactly zero whenever balking carries mass (some supported action then
/// achieves the outside option, so all of them do).
fn finish<S: Scalar>(
    params: &ModelParams<S>,
    region: Region,
    strategy: Strategy<S>,
    adjacent: Vec<Region>,
) -> Equilibrium<S> {
    let u = utilities(params, &strategy);
    let social_welfare = if strategy.p_balk() > S::of(SUPPORT_TOL) {
        S::zero()
    } else {
        strategy.p_inspect * u.u_inspect + strategy.p_join * u.u_join
    };
    Equilibrium { region, strategy, utilities: u, social_welfare, adjacent }
}

/// Classify the parameter point and solve for the unique equilibrium.
///
/// Dispatch: fees on a boundary curve (within [`BOUNDARY_TOL`], relative)
/// are labeled [`Region::Boundary`] with the neighbouring labels attached;
/// below `c_i1` everyone inspects; above `c_i0` nobody does (all join in
/// S1, join/balk mixture otherwise); in between, S1 is always the
/// inspect/join mixture, S2 takes it when the fee is under the no-balk
/// bound `c_b0_hat` and otherwise attempts it and falls back to the
/// full-support interior, and S3 takes the inspect/balk mixture under
/// `c_j0_s3` and the interior above. The result is always re-verified as an
/// epsilon-best response.
pub fn compute_equilibrium<S: Scalar>(params: &ModelParams<S>) -> Result<Equilibrium<S>> {
    let one = S::one();
    let near = |c: S| (params.inspect_cost - c).abs() <= S::of(BOUNDARY_TOL) * (one + c.abs());
    let c_i1 = boundary_c_i1(params);
    let c_i0 = boundary_c_i0(params);
    let c_j0 = match params.scenario {
        Scenario::S3 => Some(boundary_c_j0_s3(params).expect("scenario checked")),
        _ => None,
    };

    // Boundary detection first; a fee can sit on several curves at once near
    // a curve intersection, in which case every neighbouring label is kept.
    let mut adjacent = Vec::new();
    let mut boundary_strategy: Option<Strategy<S>> = None;
    if near(c_i1) {
        adjacent.push(Region::AllInspect);
        adjacent.push(match params.scenario {
            Scenario::S3 => Region::InspectBalkMix,
            _ => Region::InspectJoinMix,
        });
        boundary_strategy.get_or_insert(Strategy::all_inspect());
    }
    if near(c_i0) {
        match params.scenario {
            Scenario::S1 => {
                adjacent.push(Region::InspectJoinMix);
                adjacent.push(Region::NoneInspectAllJoin);
                if boundary_strategy.is_none() {
                    let pj = solve_pj_star(params)?;
                    boundary_strategy = Some(Strategy::clamped(one - pj, pj));
                }
            }
            _ => {
                adjacent.push(Region::Interior);
                adjacent.push(Region::NoneInspectMix);
                if boundary_strategy.is_none() {
                    let pj = blind_join_prob(params).expect("scenario checked");
                    boundary_strategy = Some(Strategy::clamped(S::zero(), pj));
                }
            }
        }
    }
    if let Some(c) = c_j0 {
        if near(c) {
            adjacent.push(Region::InspectBalkMix);
            adjacent.push(Region::Interior);
            if boundary_strategy.is_none() {
                boundary_strategy = Some(Strategy::clamped(solve_pi_star(params)?, S::zero()));
            }
        }
    }
    adjacent.dedup();

    let eq = if let Some(strategy) = boundary_strategy {
        finish(params, Region::Boundary, strategy, adjacent)
    } else if params.inspect_cost < c_i1 {
        finish(params, Region::AllInspect, Strategy::all_inspect(), vec![])
    } else if params.inspect_cost > c_i0 {
        match params.scenario {
            Scenario::S1 => {
                finish(params, Region::NoneInspectAllJoin, Strategy::all_join(), vec![])
            }
            _ => {
                let pj = blind_join_prob(params).expect("scenario checked");
                finish(params, Region::NoneInspectMix, Strategy::clamped(S::zero(), pj), vec![])
            }
        }
    } else {
        match params.scenario {
            Scenario::S1 => {
                let pj = solve_pj_star(params)?;
                finish(params, Region::InspectJoinMix, Strategy::clamped(one - pj, pj), vec![])
            }
            Scenario::S2 => {
                let c_hat = boundary_c_b0_hat(params).expect("scenario checked");
                let attempt = match solve_pj_star(params) {
                    Ok(pj) => Some(Strategy::clamped(one - pj, pj)),
                    Err(Error::OutOfRegion { .. }) => None,
                    Err(e) => return Err(e),
                };
                let utol = S::of(BOUNDARY_TOL) * utility_scale(params);
                match attempt {
                    Some(edge) if params.inspect_cost <= c_hat => {
                        finish(params, Region::InspectJoinMix, edge, vec![])
                    }
                    // Past the sufficiency bound the mixture holds exactly
                    // while its common utility stays non-negative.
                    Some(edge) if u_join(params, &edge) > utol => {
                        finish(params, Region::InspectJoinMix, edge, vec![])
                    }
                    Some(edge) if u_join(params, &edge).abs() <= utol => finish(
                        params,
                        Region::Boundary,
                        edge,
                        vec![Region::InspectJoinMix, Region::Interior],
                    ),
                    _ => finish(params, Region::Interior, solve_interior(params)?, vec![]),
                }
            }
            Scenario::S3 => {
                if params.inspect_cost < c_j0.expect("scenario checked") {
                    let pi = solve_pi_star(params)?;
                    finish(
                        params,
                        Region::InspectBalkMix,
                        Strategy::clamped(pi, S::zero()),
                        vec![],
                    )
                } else {
                    finish(params, Region::Interior, solve_interior(params)?, vec![])
                }
            }
        }
    };

    let eps = S::of(1e-8).max(S::tol_root());
    let report = verify_equilibrium(params, &eq.strategy, eps);
    if report.ok {
        return Ok(eq);
    }
    if eq.region == Region::Interior {
        // The bisection structure failed quietly; re-find the fixed point by
        // best-response iteration before giving up.
        let refined = crate::oracle::best_response_dynamics(
            params,
            &eq.strategy,
            S::of(0.5),
            200_000,
        )?;
        let again = verify_equilibrium(params, &refined, eps);
        if again.ok {
            return Ok(finish(params, Region::Interior, refined, vec![]));
        }
    }
    Err(Error::NoConvergence {
        iterations: MAX_BISECT,
        residual: report.worst_gap.to_f64().unwrap_or(f64::NAN),
        tolerance: eps.to_f64().unwrap_or(f64::NAN),
        trail: vec![(
            eq.strategy.p_inspect.to_f64().unwrap_or(f64::NAN),
            eq.strategy.p_join.to_f64().unwrap_or(f64::NAN),
        )],
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::{prop_assert, proptest};

    fn p(reward: f64, inspect_cost: f64) -> ModelParams<f64> {
        ModelParams::new(0.5, 0.8, 1.0, reward, inspect_cost).unwrap()
    }

    #[test]
    fn frozen_curve_values() {
        // Exact fractions at the reference rates: 4625/6144, 125/1157, 2/13.
        assert!((boundary_c_i0(&p(4.0, 0.1)) - 0.7527669270833333).abs() < 1e-12);
        assert!((boundary_c_i0(&p(2.0, 0.1)) - 0.46875).abs() < 1e-12);
        assert!((boundary_c_i1(&p(4.0, 0.1)) - 0.10803802938634399).abs() < 1e-12);
        assert!((boundary_c_i1(&p(1.5, 0.1)) - 2.0 / 13.0).abs() < 1e-12);
        assert!((boundary_c_b0_hat(&p(2.0, 0.1)).unwrap() - 0.28125).abs() < 1e-12);
        assert!((boundary_c_j0_s3(&p(1.5, 0.1)).unwrap() - 0.2).abs() < 1e-12);
    }

    #[test]
    fn no_balk_bound_is_the_fee_making_inspection_break_even_against_all_join() {
        // The defining property pins the formula: an inspector facing
        // everyone joining blindly nets exactly zero when the fee equals the
        // bound.
        let (_, s2_upper) = p(2.0, 0.1).cutoffs();
        for reward in [1.8, 2.0, 2.4, 3.0, s2_upper] {
            let c_hat = boundary_c_b0_hat(&p(reward, 0.1)).unwrap();
            let at_bound = p(reward, c_hat);
            let u = u_inspect(&at_bound, &Strategy::all_join());
            assert!(u.abs() < 1e-12, "reward {reward}: residual {u}");
        }
    }

    #[test]
    fn scenario_gates_on_curves() {
        assert!(matches!(
            boundary_c_b0_hat(&p(4.0, 0.1)),
            Err(Error::WrongScenario { expected: "S2", .. })
        ));
        assert!(boundary_c_b0_hat(&p(1.5, 0.1)).is_err());
        assert!(matches!(
            boundary_c_j0_s3(&p(2.0, 0.1)),
            Err(Error::WrongScenario { expected: "S3", .. })
        ));
    }

    #[test]
    fn curve_pieces_glue_at_scenario_cutoffs() {
        let (s3_upper, s2_upper) = p(2.0, 0.1).cutoffs();
        // Upper cutoff: both pieces of c_i0 and the no-balk bound coincide.
        let at_upper = p(s2_upper, 0.1);
        let c = BoundaryCurves::at(&at_upper);
        assert!((c.c_i0_s1 - c.c_i0_s23).abs() < 1e-12);
        assert!((c.c_i0 - 0.9765625).abs() < 1e-12);
        assert!((c.c_b0_hat.unwrap() - c.c_i0).abs() < 1e-12);
        // Lower cutoff: both pieces of c_i1 coincide with each other and
        // with c_j0, all equal to lambda c_w/(mu+lambda)^2 = 50/169.
        let at_lower = p(s3_upper, 0.1);
        let c = BoundaryCurves::at(&at_lower);
        assert!((c.c_i1_s12 - c.c_i1_s3).abs() < 1e-12);
        assert!((c.c_i1 - 50.0 / 169.0).abs() < 1e-12);
        assert!((c.c_j0_s3.unwrap() - c.c_i1).abs() < 1e-12);
    }

    #[test]
    fn all_inspect_bound_is_a_sawtooth_in_the_reward() {
        // Exactly zero where R*mu/c_w is an integer…
        assert_eq!(boundary_c_i1(&p(2.5, 0.1)), 0.0);
        assert_eq!(boundary_c_i1(&p(3.75, 0.1)), 0.0);
        // …then jumps to (1-rho) rho^x c_w / (mu (1-rho^{x+1})).
        let jump = |x: i32| 0.375 * 0.625f64.powi(x) / (0.8 * (1.0 - 0.625f64.powi(x + 1)));
        let just_above = boundary_c_i1(&p(2.5 * (1.0 + 1e-7), 0.1));
        assert!((just_above - jump(2)).abs() < 1e-5);
        // Tooth heights decrease toward zero.
        assert!(jump(2) > jump(3) && jump(3) > jump(4));
        // Piecewise linear within a tooth: vanishing second difference.
        let (v1, v2, v3) = (
            boundary_c_i1(&p(2.6, 0.1)),
            boundary_c_i1(&p(2.7, 0.1)),
            boundary_c_i1(&p(2.8, 0.1)),
        );
        assert!((v1 - 2.0 * v2 + v3).abs() < 1e-12);
    }

    #[test]
    fn no_inspection_bound_is_monotone_and_continuous() {
        // Scarce-reward piece strictly increases in R; generous piece
        // strictly decreases; both stay positive.
        let mut prev = 0.0;
        for i in 0..60 {
            let r = 1.31 + 2.0 * i as f64 / 60.0; // spans S3 and S2
            let v = c_i0_s23(&p(r, 0.1));
            assert!(v > 0.0 && v > prev, "R = {r}");
            prev = v;
        }
        let mut prev = f64::INFINITY;
        for i in 0..60 {
            let r = 3.4 + 3.0 * i as f64 / 60.0; // inside S1
            let v = c_i0_s1(&p(r, 0.1));
            assert!(v > 0.0 && v < prev, "R = {r}");
            prev = v;
        }
        // Continuous across a threshold breakpoint (kink only).
        let step = boundary_c_i0(&p(3.75 + 1e-7, 0.1)) - boundary_c_i0(&p(3.75 - 1e-7, 0.1));
        assert!(step.abs() < 1e-5);
    }

    #[test]
    fn blind_join_probability() {
        let pj = blind_join_prob(&p(2.0, 0.1)).unwrap();
        assert!((pj - 0.6).abs() < 1e-12);
        assert!(u_join(&p(2.0, 0.1), &Strategy::clamped(0.0, pj)).abs() < 1e-12);
        // Reaches one exactly at the generous-reward cutoff.
        let (_, s2_upper) = p(2.0, 0.1).cutoffs();
        assert!((blind_join_prob(&p(s2_upper, 0.1)).unwrap() - 1.0).abs() < 1e-12);
        assert!(matches!(
            blind_join_prob(&p(4.0, 0.1)),
            Err(Error::WrongScenario { .. })
        ));
    }

    #[test]
    fn stable_quadratic_root() {
        // Huge b against tiny product: the naive formula would cancel.
        let (a, b, c) = (1.0f64, 1e8, -1.0);
        let y = positive_root(a, b, c);
        assert!((y - 1e-8).abs() / 1e-8 < 1e-10);
        // Negative linear coefficient branch.
        let y = positive_root(2.0f64, -3.0, -2.0);
        assert!((y - 2.0).abs() < 1e-12);
    }

    proptest! {
        // The positive root shrinks when either the quadratic or the linear
        // coefficient grows (with a > 0 > c fixed).
        #[test]
        fn positive_root_decreases_in_the_coefficients(
            a in 0.1f64..10.0,
            b in 0.1f64..10.0,
            c in -10.0f64..-0.1,
            bump in 0.05f64..5.0,
        ) {
            let y = positive_root(a, b, c);
            prop_assert!(y > 0.0);
            let residual = a * y * y + b * y + c;
            prop_assert!(residual.abs() <= 1e-12 * (a * y * y + b * y + c.abs()));
            prop_assert!(positive_root(a + bump, b, c) < y);
            prop_assert!(positive_root(a, b + bump, c) < y);
        }
    }

    #[test]
    fn joint_mix_share_hits_both_endpoints() {
        // At the all-inspect bound the root is y = 1 (nobody joins)…
        let lo = boundary_c_i1(&p(4.0, 0.1));
        assert!(solve_pj_star(&p(4.0, lo)).unwrap().abs() < 1e-10);
        // …and at the no-inspection bound it is y = 1 - rho (everyone joins).
        let hi = boundary_c_i0(&p(4.0, 0.1));
        assert!((solve_pj_star(&p(4.0, hi)).unwrap() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn joint_mix_share_at_reference_fee() {
        let m = p(4.0, 0.3);
        let pj = solve_pj_star(&m).unwrap();
        assert!((pj - 0.6271886).abs() < 1e-5);
        // The gap between joining and inspecting closes at the root.
        assert!(u_diff(&m, &Strategy::clamped(1.0 - pj, pj)).abs() < 1e-10);
        // Strictly increasing in the fee.
        let more = solve_pj_star(&p(4.0, 0.5)).unwrap();
        let less = solve_pj_star(&p(4.0, 0.2)).unwrap();
        assert!(less < pj && pj < more);
    }

    #[test]
    fn joint_mix_rejects_out_of_band_fees() {
        assert!(matches!(
            solve_pj_star(&p(4.0, 0.05)),
            Err(Error::OutOfRegion { .. })
        ));
        assert!(matches!(
            solve_pj_star(&p(4.0, 1.7)),
            Err(Error::OutOfRegion { .. })
        ));
        assert!(matches!(
            solve_pj_star(&p(1.5, 0.18)),
            Err(Error::WrongScenario { .. })
        ));
    }

    #[test]
    fn inspect_balk_share_reference_and_endpoints() {
        let m = p(1.5, 0.18);
        let pi = solve_pi_star(&m).unwrap();
        assert!((pi - 28.0 / 45.0).abs() < 1e-12);
        let s = Strategy::clamped(pi, 0.0);
        assert!(u_inspect(&m, &s).abs() < 1e-10);
        assert!(u_join(&m, &s) <= 1e-10);
        // Reaches one exactly at the all-inspect bound.
        let lo = boundary_c_i1(&p(1.5, 0.1));
        assert!((solve_pi_star(&p(1.5, lo)).unwrap() - 1.0).abs() < 1e-10);
        // Fees past the blind-join break-even are rejected, including the
        // one where the raw formula would return zero: the mixture is no
        // equilibrium there (blind joining against it is profitable).
        assert!(matches!(
            solve_pi_star(&p(1.5, 0.21)),
            Err(Error::OutOfRegion { .. })
        ));
        assert!(matches!(
            solve_pi_star(&p(1.5, 0.25)),
            Err(Error::OutOfRegion { .. })
        ));
        assert!(matches!(
            solve_pi_star(&p(2.0, 0.18)),
            Err(Error::WrongScenario { .. })
        ));
    }

    #[test]
    fn interior_solver_closes_both_utilities() {
        // Stingy scenario: band between c_j0 = 0.2 and c_i0 ≈ 0.2083.
        let m = p(1.5, 0.205);
        let s = solve_interior(&m).unwrap();
        assert!(s.p_inspect > 0.0 && s.p_join > 0.0 && s.p_balk() > 0.0);
        assert!(u_inspect(&m, &s).abs() < 1e-10);
        assert!(u_join(&m, &s).abs() < 1e-10);
        assert!(verify_equilibrium(&m, &s, 1e-8).ok);
        // Middle scenario: sliver between the joint-mix limit (≈0.4103 at
        // R=2) and c_i0 = 0.46875.
        let m = p(2.0, 0.44);
        let s = solve_interior(&m).unwrap();
        assert!(s.p_inspect > 0.0 && s.p_join > 0.0 && s.p_balk() > 0.0);
        assert!(u_inspect(&m, &s).abs() < 1e-10);
        assert!(u_join(&m, &s).abs() < 1e-10);
    }

    #[test]
    fn interior_solution_approaches_the_no_inspection_mix() {
        // As the fee climbs to c_i0 the inspecting share dies out and the
        // joining share tends to the blind-join probability.
        let c_hi = boundary_c_i0(&p(1.5, 0.1));
        let m = p(1.5, c_hi - 1e-6);
        let s = solve_interior(&m).unwrap();
        let pj_blind = blind_join_prob(&m).unwrap();
        assert!(s.p_inspect < 1e-2);
        assert!((s.p_join - pj_blind).abs() < 1e-2);
    }

    #[test]
    fn dispatch_classifies_the_reference_points() {
        let cases: &[(f64, f64, Region)] = &[
            (1.5, 0.10, Region::AllInspect),
            (1.5, 0.18, Region::InspectBalkMix),
            (1.5, 0.205, Region::Interior),
            (1.5, 0.25, Region::NoneInspectMix),
            (2.0, 0.25, Region::InspectJoinMix),
            (2.0, 0.38, Region::InspectJoinMix),
            (2.0, 0.44, Region::Interior),
            (2.0, 0.50, Region::NoneInspectMix),
            (4.0, 0.05, Region::AllInspect),
            (4.0, 0.30, Region::InspectJoinMix),
            (4.0, 0.80, Region::NoneInspectAllJoin),
        ];
        for &(reward, fee, region) in cases {
            let eq = compute_equilibrium(&p(reward, fee)).unwrap();
            assert_eq!(eq.region, region, "at (R, C_I) = ({reward}, {fee})");
            assert!(
                verify_equilibrium(&p(reward, fee), &eq.strategy, 1e-8).ok,
                "verification failed at ({reward}, {fee})"
            );
        }
    }

    #[test]
    fn dispatch_reference_strategies_and_welfare() {
        // Everyone joins blindly: welfare is the blind-join utility.
        let eq = compute_equilibrium(&p(4.0, 0.8)).unwrap();
        assert_eq!(eq.strategy, Strategy::all_join());
        assert!((eq.social_welfare - (4.0 - 10.0 / 3.0)).abs() < 1e-12);
        // Join/balk mixture: balking in the support pins welfare at zero.
        let eq = compute_equilibrium(&p(2.0, 0.5)).unwrap();
        assert_eq!(eq.strategy.p_inspect, 0.0);
        assert!((eq.strategy.p_join - 0.6).abs() < 1e-12);
        assert_eq!(eq.social_welfare, 0.0);
        // Inspect/balk mixture: welfare zero, joining share zero.
        let eq = compute_equilibrium(&p(1.5, 0.18)).unwrap();
        assert_eq!(eq.strategy.p_join, 0.0);
        assert!((eq.strategy.p_inspect - 28.0 / 45.0).abs() < 1e-12);
        assert_eq!(eq.social_welfare, 0.0);
        // Full-support interior: welfare zero.
        let eq = compute_equilibrium(&p(1.5, 0.205)).unwrap();
        assert_eq!(eq.social_welfare, 0.0);
        // Inspect/join mixture: everyone is served, welfare strictly
        // positive and equal to the common utility of both actions.
        let eq = compute_equilibrium(&p(4.0, 0.3)).unwrap();
        assert!((eq.strategy.p_join - 0.6271886).abs() < 1e-5);
        assert!(eq.social_welfare > 0.0);
        assert!((eq.social_welfare - eq.utilities.u_join).abs() < 1e-10);
        // All inspect: welfare is the inspection utility at (1,0).
        let eq = compute_equilibrium(&p(1.5, 0.1)).unwrap();
        assert!((eq.social_welfare - 0.05384615384615377).abs() < 1e-12);
    }

    #[test]
    fn fees_on_curves_are_labeled_boundary_with_their_neighbours() {
        let hi = boundary_c_i0(&p(4.0, 0.1));
        let eq = compute_equilibrium(&p(4.0, hi)).unwrap();
        assert_eq!(eq.region, Region::Boundary);
        assert_eq!(
            eq.adjacent,
            vec![Region::InspectJoinMix, Region::NoneInspectAllJoin]
        );
        assert!((eq.strategy.p_join - 1.0).abs() < 1e-6);
        assert!(verify_equilibrium(&p(4.0, hi), &eq.strategy, 1e-8).ok);

        let eq = compute_equilibrium(&p(1.5, 0.2)).unwrap();
        assert_eq!(eq.region, Region::Boundary);
        assert_eq!(eq.adjacent, vec![Region::InspectBalkMix, Region::Interior]);
        assert_eq!(eq.strategy.p_join, 0.0);

        let lo = boundary_c_i1(&p(2.0, 0.1));
        let eq = compute_equilibrium(&p(2.0, lo)).unwrap();
        assert_eq!(eq.region, Region::Boundary);
        assert_eq!(eq.adjacent, vec![Region::AllInspect, Region::InspectJoinMix]);
        assert_eq!(eq.strategy, Strategy::all_inspect());
    }

    #[test]
    fn verification_accepts_equilibria_and_rejects_deviations() {
        // Everyone joining blindly is an equilibrium at a cheap-reward point…
        assert!(verify_equilibrium(&p(4.0, 0.8), &Strategy::all_join(), 1e-8).ok);
        // …but not where inspection is cheap enough to deviate to.
        let report = verify_equilibrium(&p(1.5, 0.1), &Strategy::all_join(), 1e-8);
        assert!(!report.ok);
        assert!(report.worst_gap > 1e-3);
        // A half/half mixture far from any indifference also fails.
        assert!(!verify_equilibrium(&p(4.0, 0.3), &Strategy::clamped(0.5, 0.5), 1e-8).ok);
    }

    #[test]
    fn region_labels_serialize_snake_case() {
        assert_eq!(
            serde_json::to_string(&Region::AllInspect).unwrap(),
            "\"all_inspect\""
        );
        assert_eq!(
            serde_json::to_string(&Region::NoneInspectAllJoin).unwrap(),
            "\"none_inspect_all_join\""
        );
        assert_eq!(Region::InspectJoinMix.to_string(), "inspect_join_mix");
        let back: Region = serde_json::from_str("\"inspect_balk_mix\"").unwrap();
        assert_eq!(back, Region::InspectBalkMix);
    }

    #[test]
    fn region_probability_consistency() {
        let eq = compute_equilibrium(&p(4.0, 0.8)).unwrap();
        assert!(eq.region == Region::NoneInspectAllJoin && eq.strategy == Strategy::all_join());
        let eq = compute_equilibrium(&p(1.5, 0.1)).unwrap();
        assert!(eq.region == Region::AllInspect && eq.strategy == Strategy::all_inspect());
        let eq = compute_equilibrium(&p(4.0, 0.3)).unwrap();
        assert!(eq.region == Region::InspectJoinMix && eq.strategy.p_balk() < 1e-12);
        let eq = compute_equilibrium(&p(1.5, 0.18)).unwrap();
        assert!(eq.region == Region::InspectBalkMix && eq.strategy.p_join == 0.0);
    }

    proptest! {
        // Any valid parameter point yields a verified equilibrium with a
        // self-consistent label.
        #[test]
        fn every_point_in_the_plane_verifies(
            reward in 1.35f64..6.0,
            fee in 0.01f64..1.3,
        ) {
            let m = p(reward, fee);
            let eq = compute_equilibrium(&m).unwrap();
            prop_assert!(verify_equilibrium(&m, &eq.strategy, 1e-8).ok);
            match eq.region {
                Region::AllInspect => prop_assert!(eq.strategy == Strategy::all_inspect()),
                Region::NoneInspectAllJoin => prop_assert!(eq.strategy == Strategy::all_join()),
                Region::NoneInspectMix => prop_assert!(eq.strategy.p_inspect == 0.0),
                Region::InspectBalkMix => prop_assert!(eq.strategy.p_join == 0.0),
                Region::InspectJoinMix => prop_assert!(eq.strategy.p_balk() < 1e-9),
                Region::Interior => {
                    prop_assert!(eq.strategy.p_inspect > 0.0);
                    prop_assert!(eq.strategy.p_join > 0.0);
                    prop_assert!(eq.strategy.p_balk() > 0.0);
                }
                Region::Boundary => prop_assert!(!eq.adjacent.is_empty()),
            }
            // Welfare dichotomy: zero with balking in the support, strictly
            // positive otherwise.
            if eq.strategy.p_balk() > 1e-9 {
                prop_assert!(eq.social_welfare == 0.0);
            } else if eq.region != Region::Boundary {
                prop_assert!(eq.social_welfare > 0.0);
            }
        }
    }

    #[test]
    fn works_in_single_precision() {
        let m = ModelParams::<f32>::new(0.5, 0.8, 1.0, 4.0, 0.3).unwrap();
        let eq = compute_equilibrium(&m).unwrap();
        assert_eq!(eq.region, Region::InspectJoinMix);
        assert!((eq.strategy.p_join - 0.6271886).abs() < 1e-3);
    }
}
