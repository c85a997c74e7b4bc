//! Centralized numerical tolerances and acceptance thresholds.
//!
//! Every threshold used by the solvers, the invariant checks and the
//! acceptance suite is defined here with its rationale. No ad-hoc magic
//! numbers appear elsewhere in the crate.
//!
//! | Category | Basis | Example |
//! |----------|-------|---------|
//! | Region guards | singularities of the closed forms | `u > c(1 + 1e−12)` |
//! | Iterative solvers | Newton / bisection convergence | `1e−12` residual |
//! | Integrators | RK4 step-doubling local error | `1e−10` per step |
//! | Acceptance | pinned verification thresholds | `5e−3·u∞` regression |

// ═══════════════════════════════════════════════════════════════════
// Region guards
// ═══════════════════════════════════════════════════════════════════

/// Relative margin of the strict-hyperbolicity guard `u > c(1 + guard)`.
///
/// The eigenvalue denominators contain `u² − c²`; the margin keeps them away
/// from exact cancellation.
pub const SUPERSONIC_GUARD: f64 = 1e-12;

/// Relative size below which the conical-ODE denominator counts as degenerate:
/// `|D| < SONIC_DEGENERACY · c²(1 + σ²)`.
pub const SONIC_DEGENERACY: f64 = 1e-12;

// ═══════════════════════════════════════════════════════════════════
// Finite differences
// ═══════════════════════════════════════════════════════════════════

/// Relative step of central differences for gradients of `λ_j`.
///
/// Balances the `O(h²)` truncation against the `O(ε/h)` round-off at double
/// precision.
pub const FD_RELATIVE_STEP: f64 = 1e-6;

// ═══════════════════════════════════════════════════════════════════
// Iterative solvers
// ═══════════════════════════════════════════════════════════════════

/// Absolute residual tolerance (scaled units) for Newton iterations.
pub const NEWTON_TOL: f64 = 1e-12;

/// Iteration cap for every Newton solve.
pub const NEWTON_MAX_ITER: usize = 50;

/// Newton iterations without halving the residual before a stall is declared.
pub const NEWTON_STALL_ITER: usize = 4;

/// A stalled Newton iterate is accepted when its residual is within this
/// factor of the estimated round-off floor.
pub const NEWTON_FLOOR_FACTOR: f64 = 1e3;

/// Residual bound of every returned Rankine–Hugoniot solution (scaled units).
pub const RH_RESIDUAL: f64 = 1e-10;

/// Attachment bracket factor `K'`: upper end `b − K' e^{−m M²}` of the search
/// for the attached shock (heuristic; recorded in output metadata).
pub const BRACKET_K_PRIME: f64 = 10.0;

/// Attachment bracket factor `K''`: lower end `b − K'' e^{−m M²}`.
pub const BRACKET_K_DOUBLE_PRIME: f64 = 1e-4;

/// Tolerance in ray slope when sampling rarefaction interiors.
pub const RAREFACTION_XI_TOL: f64 = 1e-10;

// ═══════════════════════════════════════════════════════════════════
// Conical ODE
// ═══════════════════════════════════════════════════════════════════

/// RK4 step-doubling local error tolerance (relative to the solution scale).
pub const ODE_STEP_TOL: f64 = 1e-10;

/// Default maximum step as a fraction of the integration range.
pub const ODE_MAX_STEP_FRACTION: f64 = 1.0 / 200.0;

/// Number of uniform nodes tabulating the background field on `[s0, b0]`.
pub const TABULATION_NODES: usize = 512;

/// Number of nodes of the continued tabulation beyond `b0`.
pub const EXTENSION_NODES: usize = 128;

/// The continued tabulation ends at `b0 + EXTENSION_FRACTION·|b0|`.
pub const EXTENSION_FRACTION: f64 = 0.1;

/// Shooting scan starts at offset `s − b0 = −SHOOT_SCAN_START·|b0|`.
pub const SHOOT_SCAN_START: f64 = 0.2;

/// Smallest shooting offset `|s − b0|` scanned (log-uniform scan).
pub const SHOOT_SCAN_FLOOR: f64 = 1e-300;

/// Boundary-condition residual of the background, in units of `u∞`.
pub const BOUNDARY_RESIDUAL: f64 = 1e-8;

// ═══════════════════════════════════════════════════════════════════
// Acceptance thresholds
// ═══════════════════════════════════════════════════════════════════

/// Relative agreement of the two closed forms of `e_j`.
pub const ACCEPT_EIGEN_FORMS: f64 = 1e-12;

/// Allowed deviation of `r_j·∇λ_j` from one.
pub const ACCEPT_GENUINE_NONLINEARITY: f64 = 1e-6;

/// Relative tolerance of fitted exponential rates (attachment rate).
pub const ACCEPT_RATE_FIT: f64 = 0.10;

/// Window for the ratio of first-order residuals when `M∞` doubles.
pub const ACCEPT_RATIO_WINDOW: (f64, f64) = (2.5, 6.0);

/// Agreement of the numeric and closed-form reflection coefficient.
pub const ACCEPT_REFLECTION: f64 = 1e-10;

/// Relative tolerance of `(1 − contraction)·M∞` against its predicted limit.
pub const ACCEPT_CONTRACTION_SLOPE: f64 = 0.15;

/// Straight-cone sup-norm deviation from the background, in units of `u∞`.
pub const ACCEPT_REGRESSION: f64 = 5e-3;

/// Straight-cone front-speed drift bound `|s_k − s0|`.
pub const ACCEPT_FRONT_DRIFT: f64 = 1e-4;

/// Bound on `max_k TV(x_k)/TV(x_0)` in perturbed runs.
pub const ACCEPT_TV_GROWTH: f64 = 3.0;

/// Fraction of active diamonds on which the functional must not increase.
pub const ACCEPT_MONOTONE_FRACTION: f64 = 0.95;

/// Multiplier of the measured per-step ODE drift forming the diamond tolerance.
pub const ACCEPT_DRIFT_MULTIPLIER: f64 = 10.0;

/// Required decay of downstream wave and center variation (fraction of peak).
pub const ACCEPT_DECAY_FRACTION: f64 = 0.5;

/// Residual of the limiting-field condition `ϖ(s∞) = Θ(s∞)`, units of `u∞`.
pub const ACCEPT_LIMIT_CONDITION: f64 = 1e-6;

// ═══════════════════════════════════════════════════════════════════
// Functional weights and diagnostics
// ═══════════════════════════════════════════════════════════════════

/// Safety factor of `K1` over everything a boundary corner creates.
pub const WEIGHT_K1_FACTOR: f64 = 4.0;

/// Weight `K4` of the center variation; `K = 8·K4`.
pub const WEIGHT_K4: f64 = 4.0;

/// Weights `K_wc^{(1)} = K_wc^{(2)}` of the wave/center couplings.
pub const WEIGHT_WAVE_CENTER: f64 = 64.0;

/// Weight `K_ce` of the center/center coupling.
pub const WEIGHT_BULK: f64 = 64.0;

/// Steps of the straight-cone run measuring the per-step drift.
pub const DRY_RUN_STEPS: usize = 20;

/// Minimum run length for asymptotic estimates.
pub const MIN_TAIL_STEPS: usize = 50;

/// Bound on `ΣE(Λ)` as `INTERACTION_BOUND_FACTOR·F(0) + 1`.
pub const INTERACTION_BOUND_FACTOR: f64 = 4.0;
