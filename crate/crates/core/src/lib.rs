//! Modified Glimm scheme for steady isothermal supersonic flow past a
//! perturbed cone, together with the building blocks it rests on: the
//! shock polar, the conical self-similar ODE, the Riemann solver in
//! characteristic coordinates, and the functional diagnostics that monitor
//! its monotonicity.
//!
//! The gas is isothermal (`p = c²ρ`) with free-stream density one and
//! horizontal free-stream velocity `u∞`. Every state is a velocity
//! `U = (u, v)`; the density follows from Bernoulli's law.

#![forbid(unsafe_code)]
#![warn(missing_docs)]
// Guards are written `!(x < bound)` on purpose so that NaN fails them.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod diagnostics;
pub mod error;
pub mod gas;
pub mod numerics;
pub mod riemann;
pub mod scheme;
pub mod selfsim;
pub mod shock_polar;
pub mod tolerances;

pub use error::{Error, Result};
pub use gas::{EigenData, FlowState, GasParams};
pub use selfsim::{BackgroundSolution, SelfSimilarField};
pub use shock_polar::{AttachedShock, PolarPoint};
