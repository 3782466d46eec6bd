//! Nonlinear normal modes of two-degree-of-freedom compliant systems.
//!
//! * [`linear_modal`] — modal basis of `M x'' = -K x` and the damping
//!   feedback that stabilizes one eigenspace.
//! * [`models`] — the elastic inverted pendulum and the segmented leg.
//! * [`manifold`] — Galerkin approximation of the angular-mode invariant
//!   manifold and the reduced dynamics on it.
//! * [`control`] — manifold stabilization, energy-band orbit excitation.
//! * [`sim`] — fixed-step RK4 runs and trajectory metrics.
//! * [`scenario`] — JSON scenarios, presets, CSV output, sweeps.

// `!(x > 0.0)` is used on purpose so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod control;
pub mod error;
pub mod linear_modal;
pub mod manifold;
pub mod models;
pub mod poly;
pub mod rk4;
pub mod scalar;
pub mod scenario;
pub mod sim;

pub use error::{Error, Result};
pub use manifold::{ExpansionCenter, ManifoldCoeffs};
pub use models::{LegParams, Model, Model2Dof, PendulumParams, State2};
