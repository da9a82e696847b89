//! # catchup
//!
//! Numerical solvers for measure differential inclusions
//!
//! ```text
//! -du/dnu(t)  in  A(t) u(t) - f(t, u(t)) dlambda/dnu(t),     u(0) = u0,
//! ```
//!
//! where `A(t)` is a time-dependent maximal monotone operator whose
//! variation in time is controlled, in the Vladimirov pseudo-distance, by a
//! nondecreasing right-continuous modulus `r`, and `nu = lambda + dr` mixes
//! Lebesgue time with the Stieltjes measure of `r`. Atoms of `dr` make the
//! solutions jump; the solutions are right-continuous paths of bounded
//! variation (BVRC).
//!
//! The core scheme is catching-up time stepping: on a partition adapted to
//! `nu`, each step is one resolvent evaluation
//! `u_{i+1} = J^{A(t_{i+1})}_{beta_{i+1}}(u_i + drift integral)`, and grids
//! are refined until successive trajectories agree in sup norm. The drift
//! `f` follows the ODE orientation, so off the constraints the state obeys
//! `u' = f(t, u)`.
//!
//! On top of the core stepper sit derived solvers:
//!
//! - sweeping processes `-du/dnu in N_{C(t)}(u) - f dlambda/dnu`
//!   ([`applications::solve_sweeping`]);
//! - Lipschitz, set-valued and mixed state-dependent drifts
//!   ([`perturbation`]);
//! - Skorohod decompositions `X = int b(s, X) ds + Y` by Picard iteration,
//!   including a Riemann-Stieltjes-driven variant
//!   ([`applications::skorohod_solve`],
//!   [`applications::skorohod_stieltjes_solve`]);
//! - second-order couplings `x' = u` and state-dependent operator families
//!   ([`applications::solve_second_order`],
//!   [`applications::solve_state_dependent`]);
//! - a fractional boundary-value operator with its Green kernel and the
//!   coupled fractional/monotone fixed point ([`fractional`]).
//!
//! Gronwall-type bounds backing the convergence arguments are exposed as
//! executable oracles in [`gronwall`].
//!
//! ## Example
//!
//! The play operator: a unit interval translating right at speed one drags
//! the state along once the trailing edge catches it.
//!
//! ```
//! use catchup::prelude::*;
//! use std::sync::Arc;
//!
//! let family = MonotoneFamily::normal_cone(Arc::new(|t: f64| {
//!     ConvexBody::interval(t - 1.0, t + 1.0)
//! }));
//! let measure = MixedMeasure::new(VariationFunction::linear(2.0, 1.0).unwrap());
//! let u0 = Point::from_vec(vec![0.0]);
//! let config = SolverConfig::default().with_tol(1e-3);
//! let report = catchup::catching_up::solve(&family, &measure, None, &u0, &config).unwrap();
//! let end = report.trajectory.evaluate(2.0).unwrap();
//! assert!((end[0] - 1.0).abs() < 5e-3);
//! ```

// Validation sites use `!(x > 0.0)` so NaN arguments fail them too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod applications;
pub mod catching_up;
pub mod convex;
pub mod error;
pub mod fractional;
pub mod gronwall;
pub mod measure;
pub mod monotone;
pub mod path;
pub mod perturbation;
pub mod quad;

pub use convex::{ConvexBody, Point};
pub use error::{Error, Result};

/// The types most programs start from.
pub mod prelude {
    pub use crate::applications::{BvDriver, CoupledForcing, CoupledResult, SkorohodResult};
    pub use crate::catching_up::{BvrcTrajectory, SolveReport, SolverConfig};
    pub use crate::convex::{ConvexBody, Point};
    pub use crate::error::{Error, Result};
    pub use crate::fractional::{FractionalParams, GreenKernel};
    pub use crate::measure::{AdaptedPartition, MixedMeasure, VariationFunction};
    pub use crate::monotone::{MonotoneFamily, MonotoneOperator, StateDependentFamily};
    pub use crate::path::SampledPath;
    pub use crate::perturbation::{LipschitzForcing, Selection, SetValuedForcing};
}
