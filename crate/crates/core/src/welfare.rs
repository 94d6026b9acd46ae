//! Equilibrium social welfare, its parameter sensitivities, and plane scans.
//!
//! Social welfare here is the expected utility of a single arrival at the
//! equilibrium mixture (the population is homogeneous, so no aggregation
//! weight is needed). Whenever balking carries mass it is exactly zero —
//! every supported action must match the outside option — so it is positive
//! only where everyone is served: everyone joining blindly, everyone
//! inspecting, or the inspect/join mixture.
//!
//! Sensitivities are central finite differences in the reward and in the
//! inspection fee. Welfare is smooth only within a region and within one
//! tooth of the threshold sawtooth, so the stencil is kept on one piece:
//! when a step lands in a different region (or crosses a reward where the
//! inspection threshold jumps) the difference falls back to the one-sided
//! form on the matching side, and crossings of the threshold line are
//! reported through `threshold_adjacent`.

use rayon::prelude::*;
use serde::Serialize;

use crate::equilibrium::{compute_equilibrium, Equilibrium, Region};
use crate::error::{Error, Result};
use crate::params::ModelParams;
use crate::scalar::Scalar;

/// Social welfare at one parameter point, with optional slopes.
///
/// The slopes are `None` when not requested ([`social_welfare`]) or when no
/// finite-difference stencil fits inside a single region (centers sitting
/// exactly on a boundary curve).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WelfareReport<S: Scalar> {
    pub sw: S,
    pub d_sw_d_reward: Option<S>,
    pub d_sw_d_inspect_cost: Option<S>,
    pub region: Region,
    /// Set when the reward stencil sits within ten steps of a reward where
    /// the inspection threshold jumps; the reward slope is then one-sided
    /// (taken away from the jump).
    pub threshold_adjacent: bool,
}

/// One cell of a [`region_map`] scan.
///
/// Slopes are `NaN` for cells whose center lies exactly on a boundary curve
/// (welfare is kinked there, so no one-sided stencil is meaningful).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GridRow<S: Scalar> {
    pub reward: S,
    pub inspect_cost: S,
    pub region: Region,
    pub p_inspect: S,
    pub p_join: S,
    pub p_balk: S,
    pub sw: S,
    pub d_sw_d_reward: S,
    pub d_sw_d_inspect_cost: S,
}

/// One step size of a [`threshold_crossing_report`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CrossingRow<S: Scalar> {
    pub eps: S,
    /// Reward exactly on the threshold line (the lower inspection threshold
    /// still applies there).
    pub reward_below: S,
    /// Reward `eps` past the line, where the threshold has jumped by one.
    pub reward_above: S,
    pub pj_below: S,
    pub pj_above: S,
    pub sw_below: S,
    pub sw_above: S,
    /// `sw_below - sw_above`; reported, not asserted to be positive.
    pub sw_drop: S,
}

/// Default finite-difference step, `1e-6 c_w / mu` (a fee-scale quantity).
pub fn default_step<S: Scalar>(params: &ModelParams<S>) -> S {
    S::of(1e-6) * params.c_w / params.mu
}

/// Equilibrium social welfare at one point (no slopes).
pub fn social_welfare<S: Scalar>(params: &ModelParams<S>) -> Result<WelfareReport<S>> {
    let eq = compute_equilibrium(params)?;
    Ok(WelfareReport {
        sw: eq.social_welfare,
        d_sw_d_reward: None,
        d_sw_d_inspect_cost: None,
        region: eq.region,
        threshold_adjacent: false,
    })
}

/// Social welfare with finite-difference slopes at the default step.
pub fn sensitivity<S: Scalar>(params: &ModelParams<S>) -> Result<WelfareReport<S>> {
    sensitivity_with_step(params, default_step(params))
}

/// Social welfare with finite-difference slopes at step `h` in both the
/// reward and the fee direction.
pub fn sensitivity_with_step<S: Scalar>(params: &ModelParams<S>, h: S) -> Result<WelfareReport<S>> {
    if h <= S::zero() {
        return Err(Error::NonPositiveInput { name: "h", value: h.to_f64().unwrap_or(f64::NAN) });
    }
    let (_, report) = sensitivity_impl(params, h)?;
    Ok(report)
}

/// Welfare at a shifted parameter point, usable for differencing only when
/// the shift stays on the same smooth piece: same region label and (for
/// reward shifts) the same inspection threshold.
fn comparable_sw<S: Scalar>(shifted: Result<ModelParams<S>>, center: &Equilibrium<S>, n_e: u32) -> Option<S> {
    let q = shifted.ok()?;
    if q.n_e != n_e {
        return None;
    }
    let eq = compute_equilibrium(&q).ok()?;
    (eq.region == center.region).then_some(eq.social_welfare)
}

fn one_piece_slope<S: Scalar>(plus: Option<S>, minus: Option<S>, sw0: S, h: S) -> Option<S> {
    match (plus, minus) {
        (Some(p), Some(m)) => Some((p - m) / (S::of(2.0) * h)),
        (Some(p), None) => Some((p - sw0) / h),
        (None, Some(m)) => Some((sw0 - m) / h),
        (None, None) => None,
    }
}

fn sensitivity_impl<S: Scalar>(
    params: &ModelParams<S>,
    h: S,
) -> Result<(Equilibrium<S>, WelfareReport<S>)> {
    let eq = compute_equilibrium(params)?;
    let sw0 = eq.social_welfare;

    // Reward direction. The threshold line R = x c_w/mu makes welfare jump,
    // so near it (within ten steps) the difference is taken one-sided on
    // whichever side of the line the center lies; exactly on the line the
    // lower threshold still applies and the backward difference is the one
    // that stays on the center's piece.
    let ratio = params.reward * params.mu / params.c_w;
    let threshold_adjacent =
        (ratio - ratio.round()).abs() < S::of(10.0) * h * params.mu / params.c_w;
    let plus = comparable_sw(params.with_reward(params.reward + h), &eq, params.n_e);
    let minus = comparable_sw(params.with_reward(params.reward - h), &eq, params.n_e);
    let d_sw_d_reward = if threshold_adjacent {
        let line = ratio.round() * params.c_w / params.mu;
        if params.reward > line {
            plus.map(|p| (p - sw0) / h)
        } else {
            minus.map(|m| (sw0 - m) / h)
        }
    } else {
        one_piece_slope(plus, minus, sw0, h)
    };

    // Fee direction: no threshold line to mind, only region boundaries.
    let plus = comparable_sw(params.with_inspect_cost(params.inspect_cost + h), &eq, params.n_e);
    let minus = comparable_sw(params.with_inspect_cost(params.inspect_cost - h), &eq, params.n_e);
    let d_sw_d_inspect_cost = one_piece_slope(plus, minus, sw0, h);

    let report = WelfareReport {
        sw: sw0,
        d_sw_d_reward,
        d_sw_d_inspect_cost,
        region: eq.region,
        threshold_adjacent,
    };
    Ok((eq, report))
}

/// Evenly spaced grid with both endpoints included (`n = 1` gives the lower
/// endpoint alone).
fn linspace<S: Scalar>(lo: S, hi: S, n: usize) -> Vec<S> {
    if n <= 1 {
        return vec![lo];
    }
    let step = (hi - lo) / S::of((n - 1) as f64);
    (0..n).map(|i| lo + step * S::of(i as f64)).collect()
}

/// Scan a rectangle of the `(R, C_I)` plane: equilibrium, welfare, and
/// welfare slopes at every cell of an `n_reward x n_fee` inclusive grid.
///
/// Rows come back in row-major order with the reward as the outer (slow)
/// index; cells are solved in parallel but the order — and every value — is
/// deterministic.
pub fn region_map<S: Scalar>(
    base: &ModelParams<S>,
    reward_range: (S, S),
    fee_range: (S, S),
    n_reward: usize,
    n_fee: usize,
) -> Result<Vec<GridRow<S>>> {
    if n_reward == 0 || n_fee == 0 {
        return Err(Error::NonPositiveInput {
            name: "grid size",
            value: (n_reward.min(n_fee)) as f64,
        });
    }
    let rewards = linspace(reward_range.0, reward_range.1, n_reward);
    let fees = linspace(fee_range.0, fee_range.1, n_fee);
    let cells: Vec<(S, S)> = rewards
        .iter()
        .flat_map(|&r| fees.iter().map(move |&c| (r, c)))
        .collect();
    cells
        .par_iter()
        .map(|&(reward, fee)| {
            let p = base.with_reward(reward)?.with_inspect_cost(fee)?;
            let (eq, report) = sensitivity_impl(&p, default_step(&p))?;
            Ok(GridRow {
                reward,
                inspect_cost: fee,
                region: report.region,
                p_inspect: eq.strategy.p_inspect,
                p_join: eq.strategy.p_join,
                p_balk: eq.strategy.p_balk(),
                sw: report.sw,
                d_sw_d_reward: report.d_sw_d_reward.unwrap_or_else(S::nan),
                d_sw_d_inspect_cost: report.d_sw_d_inspect_cost.unwrap_or_else(S::nan),
            })
        })
        .collect()
}

/// Compare the inspect/join equilibrium exactly on the threshold line
/// `R = x c_w/mu` (where the lower threshold still applies) with the points
/// `eps` past it (where the threshold has jumped by one), for each step in
/// `eps_list`.
///
/// The joining share drops across the line — that is asserted — while the
/// welfare change is only reported. Steps must be positive and smaller than
/// `c_w/mu`, else the upper point leaves the adjacent tooth entirely; both
/// endpoints must land in the inspect/join region, else `OutOfRegion`.
pub fn threshold_crossing_report<S: Scalar>(
    base: &ModelParams<S>,
    x: u32,
    eps_list: &[S],
) -> Result<Vec<CrossingRow<S>>> {
    let line = S::of(x as f64) * base.c_w / base.mu;
    let below = base.with_reward(line)?;
    let eq_below = compute_equilibrium(&below)?;
    if eq_below.region != Region::InspectJoinMix {
        return Err(Error::OutOfRegion {
            what: format!(
                "threshold crossing needs the inspect/join mixture on the line R = {:?} \
                 (found {})",
                line, eq_below.region
            ),
        });
    }
    debug_assert_eq!(below.n_e, x - 1, "threshold line must snap to the lower tooth");
    eps_list
        .iter()
        .map(|&eps| {
            if eps <= S::zero() {
                return Err(Error::NonPositiveInput {
                    name: "eps",
                    value: eps.to_f64().unwrap_or(f64::NAN),
                });
            }
            if eps >= base.c_w / base.mu {
                return Err(Error::OutOfRegion {
                    what: format!(
                        "eps = {:?} reaches past the next threshold jump (c_w/mu = {:?})",
                        eps,
                        base.c_w / base.mu
                    ),
                });
            }
            let above = base.with_reward(line + eps)?;
            let eq_above = compute_equilibrium(&above)?;
            if eq_above.region != Region::InspectJoinMix {
                return Err(Error::OutOfRegion {
                    what: format!(
                        "threshold crossing needs the inspect/join mixture at R = {:?} \
                         (found {})",
                        above.reward, eq_above.region
                    ),
                });
            }
            let (pj_below, pj_above) = (eq_below.strategy.p_join, eq_above.strategy.p_join);
            assert!(
                pj_above < pj_below,
                "joining share must drop when the inspection threshold jumps \
                 ({pj_below:?} -> {pj_above:?} at x = {x})"
            );
            Ok(CrossingRow {
                eps,
                reward_below: line,
                reward_above: above.reward,
                pj_below,
                pj_above,
                sw_below: eq_below.social_welfare,
                sw_above: eq_above.social_welfare,
                sw_drop: eq_below.social_welfare - eq_above.social_welfare,
            })
        })
        .collect()
}
