//! Stationary queue-length law induced by a population strategy mixture.
//!
//! Fix a mixture `(P_I, P_J, P_B)` over inspect / blind join / balk. Inspectors
//! join exactly when they see fewer than `n_e` customers, so the queue is a
//! birth-death chain whose arrival intensity drops from
//! `rho_below = (P_I + P_J) * rho` to `rho_above = P_J * rho` once the state
//! reaches `n_e`. The stationary law is two glued geometrics; everything here
//! is closed form in those two intensities — no truncation anywhere.

use crate::error::{Error, Result};
use crate::params::ModelParams;
use crate::scalar::{geometric_head, geometric_head_mean, Scalar};
use serde::{Deserialize, Serialize};

/// Population mixture over the three actions. The balk share is derived
/// (`1 - p_inspect - p_join`), which keeps the simplex invariant by
/// construction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Strategy<S: Scalar> {
    #[serde(rename = "P_I")]
    pub p_inspect: S,
    #[serde(rename = "P_J")]
    pub p_join: S,
}

impl<S: Scalar> Strategy<S> {
    pub fn new(p_inspect: S, p_join: S) -> Result<Self> {
        let ok = p_inspect >= S::zero()
            && p_join >= S::zero()
            && p_inspect + p_join <= S::one()
            && (p_inspect + p_join).is_finite();
        if !ok {
            return Err(Error::InvalidStrategy {
                p_inspect: p_inspect.to_f64().unwrap_or(f64::NAN),
                p_join: p_join.to_f64().unwrap_or(f64::NAN),
            });
        }
        Ok(Strategy { p_inspect, p_join })
    }

    /// Clamp float dust (negative by an ulp, or sum barely above one) back
    /// onto the simplex. Solvers use this on their final iterate.
    pub fn clamped(p_inspect: S, p_join: S) -> Self {
        let pi = p_inspect.max(S::zero()).min(S::one());
        let pj = p_join.max(S::zero()).min(S::one() - pi);
        Strategy { p_inspect: pi, p_join: pj }
    }

    pub fn all_inspect() -> Self {
        Strategy { p_inspect: S::one(), p_join: S::zero() }
    }

    pub fn all_join() -> Self {
        Strategy { p_inspect: S::zero(), p_join: S::one() }
    }

    pub fn all_balk() -> Self {
        Strategy { p_inspect: S::zero(), p_join: S::zero() }
    }

    pub fn p_balk(&self) -> S {
        (S::one() - self.p_inspect - self.p_join).max(S::zero())
    }
}

/// Stationary queue-length distribution: geometric with ratio `rho_below` on
/// `{0, .., n_e-1}`, then geometric with ratio `rho_above` from `n_e` on.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct QueueDist<S: Scalar> {
    /// Arrival intensity while informed arrivals still join: `(P_I+P_J) rho`.
    pub rho_below: S,
    /// Arrival intensity once informed arrivals balk: `P_J rho`.
    pub rho_above: S,
    pub n_e: u32,
    /// Probability of an empty system (normalizing constant).
    pub pi_zero: S,
}

/// Stationary law of the queue under `strategy`.
pub fn stationary<S: Scalar>(params: &ModelParams<S>, strategy: &Strategy<S>) -> QueueDist<S> {
    let rho_below = (strategy.p_inspect + strategy.p_join) * params.rho;
    let rho_above = strategy.p_join * params.rho;
    // Both intensities are <= rho < 1, so this cannot fail.
    QueueDist::from_intensities(rho_below, rho_above, params.n_e).expect("valid intensities")
}

impl<S: Scalar> QueueDist<S> {
    /// Build directly from branch intensities. Requires
    /// `0 <= rho_above <= rho_below < 1` (which any strategy guarantees).
    pub fn from_intensities(rho_below: S, rho_above: S, n_e: u32) -> Result<Self> {
        let ok = rho_above >= S::zero() && rho_above <= rho_below && rho_below < S::one();
        if !ok {
            return Err(Error::OutOfRegion {
                what: format!(
                    "queue intensities require 0 <= rho_above <= rho_below < 1 \
                     (got rho_below = {rho_below}, rho_above = {rho_above})"
                ),
            });
        }
        let one = S::one();
        let norm = geometric_head(rho_below, n_e)
            + rho_below.powi(n_e as i32) / (one - rho_above);
        Ok(QueueDist { rho_below, rho_above, n_e, pi_zero: one / norm })
    }

    /// Point mass `P(Q = i)`.
    pub fn pmf(&self, i: u32) -> S {
        if i < self.n_e {
            self.rho_below.powi(i as i32) * self.pi_zero
        } else {
            self.rho_below.powi(self.n_e as i32)
                * self.rho_above.powi((i - self.n_e) as i32)
                * self.pi_zero
        }
    }

    /// First `len` probabilities as a dense vector (diagnostics, oracles).
    pub fn materialize(&self, len: usize) -> Vec<S> {
        (0..len as u32).map(|i| self.pmf(i)).collect()
    }

    /// `P(Q < n_e)`: probability an informed arrival decides to join.
    pub fn prob_below_threshold(&self) -> S {
        self.pi_zero * geometric_head(self.rho_below, self.n_e)
    }

    /// `P(Q >= n_e)`: probability an informed arrival walks away.
    pub fn prob_at_or_above_threshold(&self) -> S {
        self.tail(self.n_e)
    }

    /// Tail probability `P(Q >= x)`, evaluated as a positive-term sum (never
    /// as `1 - cdf`, so it is exact down to underflow — in particular exactly
    /// zero past the threshold when `rho_above = 0`).
    pub fn tail(&self, x: u32) -> S {
        let one = S::one();
        let top = self.rho_below.powi(self.n_e as i32) / (one - self.rho_above);
        if x <= self.n_e {
            let head = self.rho_below.powi(x as i32)
                * geometric_head(self.rho_below, self.n_e - x);
            self.pi_zero * (head + top)
        } else {
            self.pi_zero * top * self.rho_above.powi((x - self.n_e) as i32)
        }
    }

    /// Mean queue length `E[Q]`.
    pub fn mean_queue(&self) -> S {
        let one = S::one();
        let ne = S::of(self.n_e as f64);
        let above = self.rho_below.powi(self.n_e as i32)
            * (ne / (one - self.rho_above)
                + self.rho_above / ((one - self.rho_above) * (one - self.rho_above)));
        self.pi_zero * (geometric_head_mean(self.rho_below, self.n_e) + above)
    }

    /// `E[Q | Q < n_e]` — what an inspector who joins expects to see.
    /// Always defined: the empty state has positive mass.
    pub fn mean_queue_below(&self) -> S {
        geometric_head_mean(self.rho_below, self.n_e) / geometric_head(self.rho_below, self.n_e)
    }

    /// `E[Q | Q >= n_e]` — congestion conditional on the threshold being hit.
    ///
    /// The overshoot past `n_e` is geometric in `rho_above`, giving
    /// `n_e + rho_above/(1-rho_above)`. Errors when the event has probability
    /// zero (nobody ever joins, e.g. strategy (0,0)).
    pub fn mean_queue_above(&self) -> Result<S> {
        if self.prob_at_or_above_threshold() <= S::zero() {
            return Err(Error::EmptyConditioningEvent { event: "Q >= n_e" });
        }
        let one = S::one();
        Ok(S::of(self.n_e as f64) + self.rho_above / (one - self.rho_above))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::strategy::Strategy as PropStrategy;
    use proptest::{prop_assert, prop_assume, proptest};

    fn params(reward: f64) -> ModelParams<f64> {
        ModelParams::new(0.5, 0.8, 1.0, reward, 0.2).unwrap()
    }

    #[test]
    fn strategy_simplex_enforced() {
        assert!(Strategy::new(0.3f64, 0.4).is_ok());
        assert!(Strategy::new(0.0f64, 0.0).is_ok());
        assert!(Strategy::new(0.6f64, 0.4).is_ok());
        assert!(Strategy::new(-0.1f64, 0.4).is_err());
        assert!(Strategy::new(0.7f64, 0.4).is_err());
        assert!(Strategy::new(f64::NAN, 0.0).is_err());
        let s = Strategy::new(0.3f64, 0.4).unwrap();
        assert!((s.p_balk() - 0.3).abs() < 1e-15);
        let c = Strategy::clamped(-1e-17f64, 1.0 + 1e-17);
        assert!(c.p_inspect == 0.0 && c.p_join == 1.0);
    }

    #[test]
    fn all_balk_is_point_mass_at_zero() {
        let p = params(2.0);
        let d = stationary(&p, &Strategy::all_balk());
        assert_eq!(d.pi_zero, 1.0);
        assert_eq!(d.pmf(0), 1.0);
        assert_eq!(d.pmf(1), 0.0);
        assert_eq!(d.mean_queue(), 0.0);
        assert_eq!(d.prob_below_threshold(), 1.0);
        // Queue never reaches the threshold: conditional mean undefined.
        assert!(matches!(
            d.mean_queue_above(),
            Err(Error::EmptyConditioningEvent { .. })
        ));
    }

    #[test]
    fn all_inspect_with_threshold_one_is_two_state_chain() {
        // rho = 0.625, n_e = 1: chain lives on {0, 1}.
        let p = params(2.0);
        let d = stationary(&p, &Strategy::all_inspect());
        assert!((d.pi_zero - 0.6153846153846154).abs() < 1e-12);
        assert!((d.pmf(1) - 0.38461538461538464).abs() < 1e-12);
        assert_eq!(d.pmf(2), 0.0);
        assert_eq!(d.pmf(7), 0.0);
        assert!((d.mean_queue() - 0.38461538461538464).abs() < 1e-12);
        assert_eq!(d.mean_queue_above().unwrap(), 1.0);
    }

    #[test]
    fn all_join_recovers_plain_geometric() {
        let p = params(2.0);
        let d = stationary(&p, &Strategy::all_join());
        assert!((d.pi_zero - 0.375).abs() < 1e-15);
        for i in 0..30u32 {
            let expected = 0.375 * 0.625f64.powi(i as i32);
            assert!((d.pmf(i) - expected).abs() < 1e-14, "i={i}");
        }
        assert!((d.mean_queue() - 0.625 / 0.375).abs() < 1e-12);
    }

    #[test]
    fn mixed_strategy_reference_values() {
        // (P_I, P_J) = (0.3, 0.4) at rho = 0.625, n_e = 1:
        // rho_below = 0.4375, rho_above = 0.25, pi_0 = 1/(1 + 0.4375/0.75).
        let p = params(2.0);
        let d = stationary(&p, &Strategy::new(0.3, 0.4).unwrap());
        assert!((d.rho_below - 0.4375).abs() < 1e-15);
        assert!((d.rho_above - 0.25).abs() < 1e-15);
        assert!((d.pi_zero - 0.631_578_947_368_421).abs() < 1e-12);
        assert!((d.mean_queue() - 0.491_228_070_175_438_6).abs() < 1e-12);
        assert!((d.mean_queue_above().unwrap() - (1.0 + 0.25 / 0.75)).abs() < 1e-12);
        assert!((d.mean_queue_below() - 0.0).abs() < 1e-15); // n_e = 1: only state 0
    }

    #[test]
    fn threshold_three_piece_boundaries() {
        // R = 4 gives n_e = 3; check the pmf switches ratio exactly at 3.
        let p = params(4.0);
        let d = stationary(&p, &Strategy::new(0.5, 0.25).unwrap());
        assert!((d.pmf(1) / d.pmf(0) - d.rho_below).abs() < 1e-14);
        assert!((d.pmf(2) / d.pmf(1) - d.rho_below).abs() < 1e-14);
        assert!((d.pmf(3) / d.pmf(2) - d.rho_below).abs() < 1e-14);
        assert!((d.pmf(4) / d.pmf(3) - d.rho_above).abs() < 1e-14);
        assert!((d.pmf(9) / d.pmf(8) - d.rho_above).abs() < 1e-14);
    }

    #[test]
    fn tail_probability_two_closed_forms_agree() {
        // pi_0 rho_b^n/(1-rho_a) versus
        // rho_b^n (1-rho_b) / (1 - rho_a - (rho_b-rho_a) rho_b^n).
        for &(pi, pj) in &[(1.0, 0.0), (0.3, 0.4), (0.0, 0.9), (0.2, 0.0), (0.5, 0.5)] {
            let p = params(4.0);
            let d = stationary(&p, &Strategy::new(pi, pj).unwrap());
            let direct = d.prob_at_or_above_threshold();
            let rb = d.rho_below;
            let ra = d.rho_above;
            let rbn = rb.powi(d.n_e as i32);
            let closed = rbn * (1.0 - rb) / (1.0 - ra - (rb - ra) * rbn);
            assert!((direct - closed).abs() < 1e-13, "({pi},{pj})");
            assert!((direct + d.prob_below_threshold() - 1.0).abs() < 1e-13);
        }
    }

    fn intensity_pair() -> impl proptest::strategy::Strategy<Value = (f64, f64, u32)> {
        (0.01f64..0.95, 0.0f64..1.0, 1u32..9)
            .prop_map(|(rb, frac, n)| (rb, rb * frac, n))
    }

    proptest! {
        #[test]
        fn normalization_and_moment_consistency((rb, ra, n_e) in intensity_pair()) {
            let d = QueueDist::from_intensities(rb, ra, n_e).unwrap();
            // 0.95^900 ~ 1e-21: truncation error far below the tolerance.
            let probs = d.materialize(900);
            let total: f64 = probs.iter().sum();
            prop_assert!((total - 1.0).abs() < 1e-12);
            let mean: f64 = probs.iter().enumerate().map(|(i, p)| i as f64 * p).sum();
            prop_assert!((d.mean_queue() - mean).abs() < 1e-9 * mean.max(1.0));
            // Law of total expectation across the threshold split.
            if d.prob_at_or_above_threshold() > 0.0 {
                let recomposed = d.prob_below_threshold() * d.mean_queue_below()
                    + d.prob_at_or_above_threshold() * d.mean_queue_above().unwrap();
                prop_assert!((recomposed - d.mean_queue()).abs() < 1e-10 * mean.max(1.0));
            }
        }

        /// Raising either intensity shifts the law up: strictly fatter tails
        /// wherever mass actually moves, strictly larger mean, weakly larger
        /// conditional means.
        #[test]
        fn stochastic_dominance_in_both_intensities(
            (rb, ra, n_e) in (0.05f64..0.9, 0.0f64..1.0, 1u32..8)
                .prop_map(|(rb, f, n)| (rb, rb * f, n)),
            bump_below in 0.01f64..0.08,
            bump_above in 0.01f64..0.08,
            which in 0usize..3,
        ) {
            let rb2 = (rb + if which != 1 { bump_below } else { 0.0 }).min(0.97);
            let ra2 = (ra + if which != 0 { bump_above } else { 0.0 }).min(rb2);
            prop_assume!(rb2 > rb || ra2 > ra);
            let d = QueueDist::from_intensities(rb, ra, n_e).unwrap();
            let d2 = QueueDist::from_intensities(rb2, ra2, n_e).unwrap();

            for x in 1..n_e + 25 {
                // P(Q >= x) must strictly increase wherever the bumped chain
                // still carries mass (past the threshold with rho_above = 0
                // both tails are exactly zero and nothing moved).
                let (t, t2) = (d.tail(x), d2.tail(x));
                if t2 > 0.0 {
                    prop_assert!(t2 > t, "x={x} {t2} <= {t}");
                }
            }
            prop_assert!(d2.mean_queue() > d.mean_queue());
            prop_assert!(d2.mean_queue_below() >= d.mean_queue_below() - 1e-12);
            if let (Ok(a), Ok(b)) = (d.mean_queue_above(), d2.mean_queue_above()) {
                prop_assert!(b >= a - 1e-12);
            }
        }
    }
}
