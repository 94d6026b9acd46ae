//! Floating-point abstraction for the whole crate.
//!
//! Every quantity in the model (rates, rewards, probabilities, utilities) is a
//! real number; the closed forms are rational functions and integer powers, so
//! they evaluate in any IEEE float. Solvers need residual tolerances that make
//! sense for the precision in use, hence the two associated tolerance hooks.

use num_traits::{Float, FromPrimitive, NumCast};

/// Scalar type the model is generic over.
///
/// `f64` is the intended workhorse (all documented tolerances are stated for
/// it); `f32` is supported with correspondingly looser solver tolerances.
pub trait Scalar:
    Float + FromPrimitive + NumCast + std::fmt::Debug + std::fmt::Display + Send + Sync + 'static
{
    /// Residual tolerance for root solvers on utilities (indifference
    /// equations, boundary-curve inversions).
    fn tol_root() -> Self;

    /// Tolerance for algebraic identities that should hold to rounding error
    /// (normalization, curve gluing, dual-route formula agreement).
    fn tol_identity() -> Self;

    /// Shorthand conversion from an `f64` literal; panics only if the value is
    /// not representable at all (never for the constants used here).
    fn of(x: f64) -> Self {
        Self::from_f64(x).expect("constant representable in scalar type")
    }
}

impl Scalar for f64 {
    fn tol_root() -> Self {
        1e-10
    }
    fn tol_identity() -> Self {
        1e-12
    }
}

impl Scalar for f32 {
    // f64 tolerances sit below f32 machine epsilon; loosen accordingly.
    fn tol_root() -> Self {
        1e-4
    }
    fn tol_identity() -> Self {
        1e-5
    }
}

/// Finite geometric head sum `1 + r + ... + r^{m-1}`, stable for r in [0, 1).
pub(crate) fn geometric_head<S: Scalar>(r: S, m: u32) -> S {
    if m == 0 {
        return S::zero();
    }
    let one = S::one();
    if r == S::zero() {
        return one;
    }
    (one - r.powi(m as i32)) / (one - r)
}

/// First-moment head sum `Σ_{i=0}^{m-1} i·r^i` for r in [0, 1).
///
/// Evaluated as `r/(1-r) * (head(r,m) - m r^{m-1})`, which has one mild
/// subtraction; the textbook three-term numerator cancels catastrophically
/// as r -> 1.
pub(crate) fn geometric_head_mean<S: Scalar>(r: S, m: u32) -> S {
    if m <= 1 || r == S::zero() {
        return S::zero();
    }
    let one = S::one();
    let mm = S::of(m as f64);
    let rm1 = r.powi(m as i32 - 1);
    r / (one - r) * (geometric_head(r, m) - mm * rm1)
}
