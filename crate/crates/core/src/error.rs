//! Error type shared by the whole crate.
//!
//! Numeric payloads are stored as `f64` regardless of the scalar the caller
//! works in, so the error type stays non-generic and cheap to pass around.

use thiserror::Error;

/// Everything that can go wrong when validating inputs or solving for an
/// equilibrium.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// Arrival rate at least the service rate: no stationary regime exists.
    #[error("unstable queue: requires lambda < mu (got lambda = {lambda}, mu = {mu})")]
    UnstableQueue { lambda: f64, mu: f64 },

    /// Reward too small for anyone to ever join: requires R > c_w/mu.
    #[error("trivial reward: requires R > c_w/mu, i.e. joining an empty queue pays (got R = {reward}, c_w/mu = {floor})")]
    TrivialReward { reward: f64, floor: f64 },

    /// A rate or cost that must be positive and finite was not.
    #[error("parameter {name} must be positive and finite (got {value})")]
    NonPositiveInput { name: &'static str, value: f64 },

    /// Action probabilities outside the simplex.
    #[error("invalid strategy: need p_inspect, p_join >= 0 and p_inspect + p_join <= 1 (got {p_inspect}, {p_join})")]
    InvalidStrategy { p_inspect: f64, p_join: f64 },

    /// Conditional moment requested on an event of probability zero
    /// (e.g. the queue never reaches the threshold under strategy (0,0)).
    #[error("conditioning event {event} has probability zero")]
    EmptyConditioningEvent { event: &'static str },

    /// Operation only defined in some reward scenarios.
    #[error("wrong scenario: {operation} is defined in {expected}, parameters classify as {actual}")]
    WrongScenario {
        operation: &'static str,
        expected: &'static str,
        actual: &'static str,
    },

    /// A closed-form solver was invoked outside the parameter region where its
    /// solution is an equilibrium (or a crossing stencil left the region).
    #[error("out of region: {what}")]
    OutOfRegion { what: String },

    /// An iterative solver ran out of iterations before meeting its tolerance.
    #[error("no convergence after {iterations} iterations (residual {residual:e}, tolerance {tolerance:e})")]
    NoConvergence {
        iterations: usize,
        residual: f64,
        tolerance: f64,
        /// Tail of the iterate trajectory `(p_inspect, p_join)`, for
        /// diagnosing oscillation; empty for scalar solvers.
        trail: Vec<(f64, f64)>,
    },

    /// Truncated-chain oracle called with a state cap whose geometric tail is
    /// not negligible.
    #[error("truncation too small: {states} states leave tail mass ~{tail:e} (need < {bound:e}) ")]
    TruncationTooSmall { states: usize, tail: f64, bound: f64 },
}

pub type Result<T> = std::result::Result<T, Error>;
