//! Model primitives and their validation.
//!
//! An M/M/1 queue with arrival rate `lambda`, service rate `mu`, linear
//! waiting cost `c_w` per unit time, service reward `R`, and a fee `C_I` an
//! arrival may pay to learn the current queue length before deciding.
//! Validation pins the stationary regime (`lambda < mu`) and the non-trivial
//! reward regime (`R > c_w/mu`), and derives the join threshold and reward
//! scenario every other module dispatches on.

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use serde::{Deserialize, Serialize};

/// Relative half-width within which `R*mu/c_w` is treated as an exact integer
/// when computing the join threshold. Grids and crossing stencils place points
/// exactly on breakpoints; bare `floor` would classify them off by one ulp.
pub const THRESHOLD_SNAP: f64 = 1e-9;

/// Reward regime, ordered from generous to stingy.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Scenario {
    /// `R > c_w/(mu-lambda)`: blind joining is profitable even if everyone
    /// else joins blindly; nobody ever balks without looking.
    S1,
    /// Middle band: blind joining profitable only against enough inspection
    /// or balking by the others.
    S2,
    /// `R <= c_w*(2/mu - 1/(mu+lambda))`: joining blind loses money even when
    /// everyone else inspects. Forces threshold 1.
    S3,
}

impl Scenario {
    pub fn as_str(self) -> &'static str {
        match self {
            Scenario::S1 => "S1",
            Scenario::S2 => "S2",
            Scenario::S3 => "S3",
        }
    }
}

impl std::fmt::Display for Scenario {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Validated model parameters plus the derived quantities everything else
/// needs (utilization, join threshold, scenario).
///
/// Construct through [`ModelParams::new`]; the fields are read-only by
/// convention (changing `reward` without re-deriving `n_e` breaks every
/// downstream formula, so use [`ModelParams::with_reward`] and friends).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ModelParams<S: Scalar> {
    pub lambda: S,
    pub mu: S,
    pub c_w: S,
    #[serde(rename = "R")]
    pub reward: S,
    #[serde(rename = "C_I")]
    pub inspect_cost: S,
    /// Utilization `lambda/mu`, strictly below 1.
    pub rho: S,
    /// Join threshold: an informed arrival joins iff it sees fewer than `n_e`
    /// in the system; largest integer strictly below `R*mu/c_w`.
    pub n_e: u32,
    pub scenario: Scenario,
}

fn require_positive<S: Scalar>(name: &'static str, value: S) -> Result<()> {
    let v = value.to_f64().unwrap_or(f64::NAN);
    if !(v.is_finite() && v > 0.0) {
        return Err(Error::NonPositiveInput { name, value: v });
    }
    Ok(())
}

/// Join threshold `max { q : q < R*mu/c_w }` with breakpoint snapping.
///
/// When the ratio lands within [`THRESHOLD_SNAP`] (relative) of an integer k
/// it is treated as exactly k, and the strict inequality gives `k - 1`.
pub fn threshold<S: Scalar>(reward: S, mu: S, c_w: S) -> Result<u32> {
    require_positive("mu", mu)?;
    require_positive("c_w", c_w)?;
    require_positive("R", reward)?;
    let k = (reward * mu / c_w).to_f64().unwrap();
    let nearest = k.round();
    let snapped = (k - nearest).abs() <= THRESHOLD_SNAP * k.abs().max(1.0);
    let n = if snapped { nearest - 1.0 } else { k.floor() };
    if n < 1.0 {
        return Err(Error::TrivialReward {
            reward: reward.to_f64().unwrap(),
            floor: (c_w / mu).to_f64().unwrap(),
        });
    }
    Ok(n as u32)
}

/// Scenario cutoffs `(S3 upper bound, S2 upper bound)` in reward units:
/// `c_w*(2/mu - 1/(mu+lambda))` and `c_w/(mu-lambda)`.
pub fn scenario_cutoffs<S: Scalar>(lambda: S, mu: S, c_w: S) -> (S, S) {
    let two = S::of(2.0);
    let s3_upper = c_w * (two / mu - S::one() / (mu + lambda));
    let s2_upper = c_w / (mu - lambda);
    (s3_upper, s2_upper)
}

/// Classify the reward scenario. Boundary rewards belong to the lower
/// scenario (weak inequalities sit on the S2 and S3 sides).
pub fn classify_scenario<S: Scalar>(lambda: S, mu: S, c_w: S, reward: S) -> Result<Scenario> {
    require_positive("lambda", lambda)?;
    require_positive("mu", mu)?;
    require_positive("c_w", c_w)?;
    if lambda >= mu {
        return Err(Error::UnstableQueue {
            lambda: lambda.to_f64().unwrap(),
            mu: mu.to_f64().unwrap(),
        });
    }
    // R <= c_w/mu is the trivial regime, rejected before classification.
    threshold(reward, mu, c_w)?;
    let (s3_upper, s2_upper) = scenario_cutoffs(lambda, mu, c_w);
    Ok(if reward > s2_upper {
        Scenario::S1
    } else if reward > s3_upper {
        Scenario::S2
    } else {
        Scenario::S3
    })
}

impl<S: Scalar> ModelParams<S> {
    /// Validate primitives and derive `rho`, `n_e`, and the scenario.
    pub fn new(lambda: S, mu: S, c_w: S, reward: S, inspect_cost: S) -> Result<Self> {
        require_positive("lambda", lambda)?;
        require_positive("mu", mu)?;
        require_positive("c_w", c_w)?;
        require_positive("R", reward)?;
        require_positive("C_I", inspect_cost)?;
        let scenario = classify_scenario(lambda, mu, c_w, reward)?;
        let n_e = threshold(reward, mu, c_w)?;
        Ok(ModelParams {
            lambda,
            mu,
            c_w,
            reward,
            inspect_cost,
            rho: lambda / mu,
            n_e,
            scenario,
        })
    }

    /// Same primitives with a different reward (threshold and scenario are
    /// re-derived).
    pub fn with_reward(&self, reward: S) -> Result<Self> {
        Self::new(self.lambda, self.mu, self.c_w, reward, self.inspect_cost)
    }

    /// Same primitives with a different inspection fee.
    pub fn with_inspect_cost(&self, inspect_cost: S) -> Result<Self> {
        Self::new(self.lambda, self.mu, self.c_w, self.reward, inspect_cost)
    }

    /// Scenario cutoffs `(S3 upper, S2 upper)` for these rates.
    pub fn cutoffs(&self) -> (S, S) {
        scenario_cutoffs(self.lambda, self.mu, self.c_w)
    }
}

/// Wire shape for parameter input: `{"lambda":..,"mu":..,"c_w":..,"R":..,"C_I":..}`.
#[derive(Deserialize)]
struct RawParams<S> {
    lambda: S,
    mu: S,
    c_w: S,
    #[serde(rename = "R")]
    reward: S,
    #[serde(rename = "C_I")]
    inspect_cost: S,
}

impl<'de, S: Scalar + Deserialize<'de>> Deserialize<'de> for ModelParams<S> {
    fn deserialize<D>(deserializer: D) -> std::result::Result<Self, D::Error>
    where
        D: serde::Deserializer<'de>,
    {
        let raw = RawParams::<S>::deserialize(deserializer)?;
        ModelParams::new(raw.lambda, raw.mu, raw.c_w, raw.reward, raw.inspect_cost)
            .map_err(serde::de::Error::custom)
    }
}
