//! Error type shared by every solver in the crate.

use thiserror::Error;

/// Failures reported by the gas model, the polar and ODE solvers, the Riemann
/// solvers, the marching scheme and the diagnostics layer.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// Gas parameters violate `c > 0` or `M∞ > 1`.
    #[error("invalid gas parameters: {0}")]
    InvalidParams(String),
    /// A state left the strictly hyperbolic region `u > c`.
    #[error("state not supersonic: u = {u}, c = {c}")]
    NotSupersonic {
        /// Axial velocity of the offending state.
        u: f64,
        /// Sound speed.
        c: f64,
    },
    /// The geometric source term is singular on the axis `y = 0`.
    #[error("source term undefined on the axis y = 0")]
    AxisSource,
    /// The polar equation could not be solved for the requested slope.
    #[error("off-polar: {0}")]
    OffPolar(String),
    /// No sign change of the attachment function was found.
    #[error("no attached shock for boundary slope {b} at M = {mach}")]
    NoAttachedShock {
        /// Boundary slope.
        b: f64,
        /// Free-stream Mach number.
        mach: f64,
    },
    /// A 2×2 linear system is numerically singular.
    #[error("singular linear system in {0}")]
    SingularSystem(&'static str),
    /// The conical ODE denominator vanished.
    #[error("sonic degeneracy at sigma = {sigma}")]
    SonicDegeneracy {
        /// Ray slope at which the denominator vanished.
        sigma: f64,
    },
    /// An integration left the admissible region.
    #[error("range exit: {0}")]
    RangeExit(String),
    /// The background shooting problem has no root in its search bracket.
    #[error("no attached self-similar solution for b0 = {b0} at M = {mach}")]
    NoAttachedSolution {
        /// Cone slope.
        b0: f64,
        /// Free-stream Mach number.
        mach: f64,
    },
    /// A wave curve left the supersonic region.
    #[error("wave curve exit: {0}")]
    CurveExit(String),
    /// An iterative solver ran out of iterations.
    #[error("no convergence in {0}")]
    NoConvergence(&'static str),
    /// A strong-front solve produced an inadmissible shock.
    #[error("inadmissible strong shock: {0}")]
    Inadmissible(String),
    /// The boundary-reflection problem has no 1-wave solution.
    #[error("no 1-wave solution of the boundary problem")]
    NoOneWaveSolution,
    /// The leading shock crossed its region within one step.
    #[error("front collision at step {step}: {detail}")]
    FrontCollision {
        /// Step index.
        step: usize,
        /// Explanation.
        detail: String,
    },
    /// An induction hypothesis of the scheme failed; the run is aborted.
    #[error("invariant {kind} violated at step {step}: {detail}")]
    InvariantViolation {
        /// Step index.
        step: usize,
        /// Short invariant name (`P2`, `P3`, `CFL`, ...).
        kind: &'static str,
        /// Explanation.
        detail: String,
    },
    /// The boundary specification is not admissible.
    #[error("invalid boundary: {0}")]
    InvalidBoundary(String),
    /// The contraction product is not below one, so no weights exist.
    #[error("no valid functional weights: contraction = {0}")]
    NoValidWeights(f64),
    /// The run is too short for asymptotic estimates.
    #[error("insufficient tail: {available} steps available, 50 required")]
    InsufficientTail {
        /// Number of downstream steps in the history.
        available: usize,
    },
}

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;
