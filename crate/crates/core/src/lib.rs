//! Strategic joining in an M/M/1 queue where customers may pay to see the
//! queue length before deciding.
//!
//! Arrivals choose between three actions: pay `C_I` to *inspect* the queue
//! and then join exactly when fewer than the threshold `n_e` customers are
//! present, *join blindly*, or *balk* (outside option worth 0). Given a
//! population mixture `(P_I, P_J)` over those actions the queue is a
//! birth-death chain whose stationary law is two glued geometrics; this crate
//! provides that law, the expected utilities of each action against a
//! mixture, the Nash equilibrium of the induced population game across the
//! whole `(R, C_I)` parameter plane, equilibrium social welfare with
//! finite-difference sensitivities, and independent oracles (truncated-chain
//! solve, discrete-event simulation, damped best-response dynamics) used to
//! validate the closed forms.
//!
//! Everything is generic over the float type through [`scalar::Scalar`];
//! `f64` aliases are exported at the crate root.

pub mod equilibrium;
pub mod error;
pub mod params;
pub mod scalar;
pub mod oracle;
pub mod steady_state;
pub mod utilities;
pub mod welfare;

pub use equilibrium::{
    blind_join_prob, boundary_c_b0_hat, boundary_c_i0, boundary_c_i1, boundary_c_j0_s3,
    compute_equilibrium, solve_interior, solve_pi_star, solve_pj_star, verify_equilibrium,
    BoundaryCurves, Equilibrium, Region, VerifyReport,
};
pub use error::{Error, Result};
pub use params::{ModelParams, Scenario};
pub use scalar::Scalar;
pub use steady_state::{stationary, QueueDist, Strategy};
pub use utilities::{u_diff, u_inspect, u_join, utilities, SpecialMix, UtilityTriple};
pub use welfare::{
    region_map, sensitivity, social_welfare, threshold_crossing_report, CrossingRow, GridRow,
    WelfareReport,
};

/// `f64` instantiations, the intended default precision.
pub type ModelParams64 = params::ModelParams<f64>;
pub type Strategy64 = steady_state::Strategy<f64>;
pub type QueueDist64 = steady_state::QueueDist<f64>;
pub type UtilityTriple64 = utilities::UtilityTriple<f64>;
pub type Equilibrium64 = equilibrium::Equilibrium<f64>;
pub type BoundaryCurves64 = equilibrium::BoundaryCurves<f64>;
pub type VerifyReport64 = equilibrium::VerifyReport<f64>;
pub type WelfareReport64 = welfare::WelfareReport<f64>;
pub type GridRow64 = welfare::GridRow<f64>;
/// Single-precision variants (loosened solver tolerances; see [`scalar::Scalar`]).
pub type ModelParams32 = params::ModelParams<f32>;
pub type Strategy32 = steady_state::Strategy<f32>;
pub type QueueDist32 = steady_state::QueueDist<f32>;
pub type Equilibrium32 = equilibrium::Equilibrium<f32>;
pub type BoundaryCurves32 = equilibrium::BoundaryCurves<f32>;
pub type VerifyReport32 = equilibrium::VerifyReport<f32>;
pub type WelfareReport32 = welfare::WelfareReport<f32>;
pub type GridRow32 = welfare::GridRow<f32>;
