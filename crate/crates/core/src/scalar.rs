use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FromPrimitive, ToPrimitive};
use serde::de::DeserializeOwned;
use serde::Serialize;

/// Floating-point scalar the solver and geometry are generic over: `f32` or `f64`.
pub trait Scalar:
    Float
    + FromPrimitive
    + ToPrimitive
    + Sum
    + Debug
    + Display
    + Default
    + Send
    + Sync
    + Serialize
    + DeserializeOwned
    + 'static
{
    /// Default feasibility / optimality / geometric tolerance for this precision.
    const DEFAULT_EPS: f64;
    /// Default margin when comparing the incompatibility parameter against 1.
    const DEFAULT_EPS_COMPAT: f64;

    /// Converts an `f64` literal. Panics only for values not representable at all (never for finite input).
    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("finite literal")
    }

    #[inline]
    fn as_f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }

    /// Pivot magnitude below which a tableau entry is treated as zero.
    #[inline]
    fn pivot_tolerance() -> Self {
        Self::epsilon() * Self::lit(1.0e3)
    }
}

impl Scalar for f64 {
    const DEFAULT_EPS: f64 = 1e-9;
    const DEFAULT_EPS_COMPAT: f64 = 1e-7;
}

impl Scalar for f32 {
    const DEFAULT_EPS: f64 = 1e-4;
    const DEFAULT_EPS_COMPAT: f64 = 1e-3;
}

/// Tolerances shared by the LP solver, effect validation and the compatibility test.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SolverTolerances<T> {
    /// Constraint violation accepted in a reported solution.
    pub eps_feas: T,
    /// Optimality gap accepted in a reported optimum.
    pub eps_opt: T,
    /// Slack for vertex checks (effect ranges, ordering, normalization).
    pub eps_geom: T,
    /// Margin in `lambda0 <= 1 + eps_compat`.
    pub eps_compat: T,
}

impl<T: Scalar> Default for SolverTolerances<T> {
    fn default() -> Self {
        Self {
            eps_feas: T::lit(T::DEFAULT_EPS),
            eps_opt: T::lit(T::DEFAULT_EPS),
            eps_geom: T::lit(T::DEFAULT_EPS),
            eps_compat: T::lit(T::DEFAULT_EPS_COMPAT),
        }
    }
}

impl<T: Scalar> SolverTolerances<T> {
    /// Checks that all tolerances are strictly positive and `eps_compat >= eps_opt`.
    pub fn validate(&self) -> Result<(), crate::Error> {
        let all = [
            ("eps_feas", self.eps_feas),
            ("eps_opt", self.eps_opt),
            ("eps_geom", self.eps_geom),
            ("eps_compat", self.eps_compat),
        ];
        for (name, v) in all {
            if !(v > T::zero()) || !v.is_finite() {
                return Err(crate::Error::InvalidTolerance(format!(
                    "{name} must be finite and positive, got {v}"
                )));
            }
        }
        if self.eps_compat < self.eps_opt {
            return Err(crate::Error::InvalidTolerance(format!(
                "eps_compat ({}) must not be smaller than eps_opt ({})",
                self.eps_compat, self.eps_opt
            )));
        }
        Ok(())
    }
}
