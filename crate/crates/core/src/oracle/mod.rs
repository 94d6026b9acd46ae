//! Independent numerical oracles.
//!
//! Everything in this module recomputes model quantities *without* the closed
//! forms used elsewhere: an exact elimination solve of the truncated
//! birth-death chain, a seeded discrete-event simulation that scores actions
//! from observed states, and damped best-response dynamics that re-finds
//! equilibria by iteration. They exist to validate the analytic modules and
//! to give users a way to check any claim the crate makes.

mod chain;
mod dynamics;
mod sim;

pub use chain::{balance_residual, required_truncation, solve_truncated_chain, total_variation};
pub use dynamics::best_response_dynamics;
pub use sim::{simulate, SimResult};
