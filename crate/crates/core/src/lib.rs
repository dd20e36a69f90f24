//! Joint measurability of effect pairs on polytopic state spaces.
//!
//! A state space is the convex hull of finitely many vertices; effects are
//! affine functionals with values in `[0, 1]` on it. For a pair `e`, `f` the
//! crate computes `λ0`, the least `λ` for which some effect `g` satisfies
//! `g <= e`, `g <= f` and `e + f <= g + λu`. The pair is jointly measurable
//! exactly when `λ0 <= 1`, and `σ0 = 2(1 - 1/λ0)` measures how much scaling
//! noise restores compatibility otherwise.
//!
//! Everything numeric is generic over [`Scalar`] (`f32` or `f64`); the
//! unsuffixed aliases below fix `f64`.
//!
//! ```
//! use effcompat::{compute_lambda0, models, Tolerances};
//!
//! let gbit = models::zoo_model::<f64>("gbit").unwrap();
//! let (e, f) = (gbit.effect("e_x").unwrap(), gbit.effect("e_y").unwrap());
//! let report = compute_lambda0(&gbit.space, e, f, &Tolerances::default()).unwrap();
//! assert!(!report.compatible);
//! assert!((report.lambda0 - 2.0).abs() < 1e-9);
//! ```

// `!(x >= a)` also rejects NaN, which is the point of those checks
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod compat;
pub mod error;
pub mod gpt;
mod linalg;
pub mod lp;
pub mod models;
pub mod oracle;
pub mod sampling;
pub mod scalar;

pub use compat::{
    compatible_by_feasibility, compute_lambda0, depolarizing_kernel, is_compatible, joint_observable,
    joint_observable_from_witness, min_depolarizing_noise, min_scaling_noise, scaling_kernel, sigma0, smear,
    CompatReport, MarkovKernel2x2,
};
pub use error::{Error, Result};
pub use gpt::{AffineFunctional, Effect, Observable, StateSpace};
pub use lp::{check_feasible, solve_lp, LpProblem, LpResult, LpStatus, Relation};
pub use models::{load_model, save_model, Model};
pub use scalar::{Scalar, SolverTolerances};

pub type Tolerances = SolverTolerances<f64>;
pub type Tolerances32 = SolverTolerances<f32>;

pub type StateSpace64 = StateSpace<f64>;
pub type StateSpace32 = StateSpace<f32>;
pub type Effect64 = Effect<f64>;
pub type Effect32 = Effect<f32>;
pub type Observable64 = Observable<f64>;
pub type Observable32 = Observable<f32>;
pub type CompatReport64 = CompatReport<f64>;
pub type CompatReport32 = CompatReport<f32>;
pub type LpProblem64 = LpProblem<f64>;
pub type LpProblem32 = LpProblem<f32>;
pub type Model64 = Model<f64>;
pub type Model32 = Model<f32>;
