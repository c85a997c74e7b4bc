//! The modified Glimm scheme: boundary discretization, ray-following
//! σ-grid, random-choice sampling with the self-similar modification,
//! center bookkeeping, boundary reflection and strong-front tracking.
//!
//! Geometry is carried in a frame attached to the unperturbed cone:
//! `x = x0 + ξ` and `y = b0·x + η`. For a point and a center `X` the ray
//! slope is `σ = b0 + δσ` with `δσ = (b0X + η)/(x − X)`, so slope offsets
//! inside the (possibly exponentially thin) shock layer keep full relative
//! precision.
//!
//! A step from `x_k` to `x_{k+1}`:
//! 1. every grid point emits a fan: the boundary a single reflected 1-wave,
//!    interior grid points a weak 1-wave/2-wave pair, and the front a strong
//!    1-shock with a weak 2-wave;
//! 2. grid points follow the rays of the cell above them; the boundary point
//!    follows the boundary and the front its shock slope; cells are split or
//!    merged to keep their widths within `[0.5, 1.5]·Δσ·x`;
//! 3. each new cell is sampled at one equidistributed point of the step;
//!    sampled states are continued along rays by the conical ODE with the
//!    center of the region they come from, and become the new cells.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gas::{eigen, FlowState, GasParams};
use crate::numerics::van_der_corput;
use crate::riemann::{sample_fan, solve_boundary_riemann, solve_strong_riemann, solve_weak_riemann, WaveFan};
use crate::selfsim::{integrate_psi_with, shoot_background, BackgroundSolution, IntegrateOptions, SelfSimilarField};
use crate::tolerances::ODE_STEP_TOL;

/// Shape of the boundary perturbation `η = β(ξ)` above the base cone
/// `y = b0·x`, with `ξ = x − x0` (the cone is straight for `ξ ≤ 0`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BoundarySpec {
    /// The unperturbed cone.
    Straight,
    /// Slope `b0 → b0 + delta` at `ξ = xi`.
    Kink {
        /// Position of the kink.
        xi: f64,
        /// Slope change.
        delta: f64,
    },
    /// Decaying oscillation `β = aℓ·sin(ξ/ℓ)/(1 + ξ/ℓ)²`.
    Sinusoid {
        /// Slope amplitude `a`.
        amplitude: f64,
        /// Length scale `ℓ`.
        length: f64,
    },
    /// Compact bump `β = aℓ·sin²(π(ξ − ξs)/ℓ)/π` on `[ξs, ξs + ℓ]`; the slope
    /// perturbation is `a·sin(2π(ξ − ξs)/ℓ)` and the cone is straight again
    /// downstream.
    Bump {
        /// Start `ξs`.
        start: f64,
        /// Length `ℓ`.
        length: f64,
        /// Slope amplitude `a`.
        amplitude: f64,
    },
    /// Piecewise-linear `β` through `(ξ, β)` samples starting at `(0, 0)`;
    /// constant slope continuation beyond the last sample.
    Sampled {
        /// Sample points, increasing in `ξ`.
        points: Vec<(f64, f64)>,
    },
}

impl BoundarySpec {
    /// Validates the specification.
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidBoundary(m.to_string()));
        match self {
            Self::Straight => Ok(()),
            Self::Kink { xi, delta } => {
                if !(xi.is_finite() && *xi >= 0.0 && delta.is_finite()) {
                    return bad("kink needs finite xi >= 0 and finite delta");
                }
                Ok(())
            }
            Self::Sinusoid { amplitude, length } => {
                if !(amplitude.is_finite() && length.is_finite() && *length > 0.0) {
                    return bad("sinusoid needs finite amplitude and length > 0");
                }
                Ok(())
            }
            Self::Bump { start, length, amplitude } => {
                if !(start.is_finite() && *start >= 0.0 && length.is_finite() && *length > 0.0 && amplitude.is_finite())
                {
                    return bad("bump needs start >= 0, length > 0 and finite amplitude");
                }
                Ok(())
            }
            Self::Sampled { points } => {
                if points.len() < 2 {
                    return bad("sampled boundary needs at least two points");
                }
                if points[0] != (0.0, 0.0) {
                    return bad("sampled boundary must start at (0, 0)");
                }
                for w in points.windows(2) {
                    if !(w[1].0 > w[0].0) || !w[1].1.is_finite() {
                        return bad("sampled boundary abscissae must increase and values be finite");
                    }
                }
                Ok(())
            }
        }
    }

    /// `β(ξ)`.
    pub fn beta(&self, xi: f64) -> f64 {
        if xi <= 0.0 {
            return 0.0;
        }
        match self {
            Self::Straight => 0.0,
            Self::Kink { xi: x1, delta } => {
                if xi > *x1 {
                    delta * (xi - x1)
                } else {
                    0.0
                }
            }
            Self::Sinusoid { amplitude, length } => {
                let t = xi / length;
                amplitude * length * t.sin() / ((1.0 + t) * (1.0 + t))
            }
            Self::Bump { start, length, amplitude } => {
                if xi <= *start || xi >= start + length {
                    0.0
                } else {
                    let s = (std::f64::consts::PI * (xi - start) / length).sin();
                    amplitude * length * s * s / std::f64::consts::PI
                }
            }
            Self::Sampled { points } => {
                let n = points.len();
                let i = points.partition_point(|p| p.0 <= xi).clamp(1, n - 1);
                let (a, b) = (points[i - 1], points[i]);
                a.1 + (b.1 - a.1) * (xi - a.0) / (b.0 - a.0)
            }
        }
    }

    /// Upper bound of `|β'|`, used for the CFL estimate.
    pub fn max_slope_offset(&self) -> f64 {
        match self {
            Self::Straight => 0.0,
            Self::Kink { delta, .. } => delta.abs(),
            Self::Sinusoid { amplitude, .. } => 3.0 * amplitude.abs(),
            Self::Bump { amplitude, .. } => amplitude.abs(),
            Self::Sampled { points } => {
                points.windows(2).map(|w| ((w[1].1 - w[0].1) / (w[1].0 - w[0].0)).abs()).fold(0.0, f64::max)
            }
        }
    }
}

/// `X*_k = x_{k−1} − b_{k−1}Δx/(b_k − b_{k−1})`: the axis intercept of the
/// boundary segment through `(x_{k−1}, b_{k−1})` and `(x_{k−1} + Δx, b_k)`.
/// Returns `None` for a horizontal segment (`b_k = b_{k−1}`), in which case
/// the previous center is retained.
pub fn center_update(x_km1: f64, dx: f64, b_km1: f64, b_k: f64) -> Option<f64> {
    if b_k == b_km1 {
        None
    } else {
        Some(x_km1 - b_km1 * dx / (b_k - b_km1))
    }
}

/// Discretized boundary `b_Δ`: segment data per step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Boundary {
    /// Base slope `b0`.
    pub b0: f64,
    /// End of the straight part `x0`.
    pub x0: f64,
    /// Axial mesh `Δx`.
    pub dx: f64,
    /// `β_k = β(kΔx)` for `k = 0..=n+1`.
    pub beta: Vec<f64>,
    /// Segment slope offsets `q_k = (β_{k+1} − β_k)/Δx`.
    pub q: Vec<f64>,
    /// Segment angles `θ_k = arctan(b0 + q_k)`.
    pub theta: Vec<f64>,
    /// Turning angles `ω_k = θ_k − θ_{k−1}` at corners `A_k` (`θ_{−1} = arctan b0`).
    pub omega: Vec<f64>,
    /// Corner ordinates `b_k = b0·x_k + β_k`.
    pub ordinate: Vec<f64>,
    /// Segment centers `X*_k`.
    pub centers: Vec<f64>,
    /// `Σ (1 + |b_k|)|ω_k|`.
    pub weighted_variation: f64,
}

impl Boundary {
    /// Discretizes `spec` on `n_steps` steps of size `dx` starting at `x0`.
    pub fn build(spec: &BoundarySpec, b0: f64, x0: f64, dx: f64, n_steps: usize) -> Result<Self> {
        spec.validate()?;
        if !(b0 < 0.0 && x0 > 0.0 && dx > 0.0 && dx.is_finite()) {
            return Err(Error::InvalidBoundary(format!(
                "need b0 < 0, x0 > 0, dx > 0 (b0 = {b0}, x0 = {x0}, dx = {dx})"
            )));
        }
        let n = n_steps + 1;
        let beta: Vec<f64> = (0..=n).map(|k| spec.beta(k as f64 * dx)).collect();
        let q: Vec<f64> = beta.windows(2).map(|w| (w[1] - w[0]) / dx).collect();
        if q.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidBoundary("boundary is not Lipschitz on the mesh".into()));
        }
        let theta: Vec<f64> = q.iter().map(|qk| (b0 + qk).atan()).collect();
        let mut omega = Vec::with_capacity(q.len());
        let mut prev = b0.atan();
        for t in &theta {
            omega.push(t - prev);
            prev = *t;
        }
        let ordinate: Vec<f64> = beta.iter().enumerate().map(|(k, bk)| b0 * (x0 + k as f64 * dx) + bk).collect();
        if let Some(k) = ordinate.iter().position(|b| !(*b < 0.0)) {
            return Err(Error::InvalidBoundary(format!("boundary ordinate must stay negative (k = {k})")));
        }
        let mut centers = Vec::with_capacity(q.len());
        let mut prev_q = 0.0;
        let mut prev_c = 0.0;
        for (k, qk) in q.iter().enumerate() {
            let c = if *qk == prev_q {
                prev_c
            } else {
                let xk = x0 + k as f64 * dx;
                (xk * qk - beta[k]) / (b0 + qk)
            };
            centers.push(c);
            prev_q = *qk;
            prev_c = c;
        }
        let weighted_variation = omega.iter().zip(&ordinate).map(|(w, b)| (1.0 + b.abs()) * w.abs()).sum();
        Ok(Self { b0, x0, dx, beta, q, theta, omega, ordinate, centers, weighted_variation })
    }

    /// Number of segments.
    pub fn segments(&self) -> usize {
        self.q.len()
    }

    /// Wall slope `σ0(k) = b0 + q_k` of segment `k`.
    pub fn wall_slope(&self, k: usize) -> f64 {
        self.b0 + self.q[k.min(self.q.len() - 1)]
    }

    /// `Σ_{j > k} (1 + |b_j|)|ω_j|`: corners strictly downstream of `x_k`.
    pub fn future_variation(&self, k: usize) -> f64 {
        self.omega.iter().zip(&self.ordinate).skip(k + 1).map(|(w, b)| (1.0 + b.abs()) * w.abs()).sum()
    }
}

/// Random-choice sample point `a = y_mid + ϑ_k(y_top − y_mid)` with
/// `ϑ_k ∈ (−1, 1)` from the base-2 van der Corput sequence shifted by `seed`.
pub fn sample_point(seed: u64, k: usize, y_mid: f64, y_top: f64) -> f64 {
    y_mid + sample_theta(seed, k) * (y_top - y_mid)
}

/// The equidistributed sequence `ϑ_k ∈ (−1, 1)`.
pub fn sample_theta(seed: u64, k: usize) -> f64 {
    2.0 * van_der_corput(seed.wrapping_add(k as u64).wrapping_add(1)) - 1.0
}

/// User-facing scheme parameters; unset mesh sizes are derived from the
/// background layer width and the characteristic speeds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SchemeConfig {
    /// Axial mesh `Δx` (derived from the CFL margin when absent).
    pub dx: Option<f64>,
    /// Self-similar grid size `Δσ` (derived from the layer width when absent).
    pub dsigma: Option<f64>,
    /// Cells across the background layer when `dsigma` is derived.
    pub layer_cells: usize,
    /// CFL safety ratio: `Δy/Δx ≥ 2·cfl_margin·max|λ − b0|`.
    pub cfl_margin: f64,
    /// Sampling-sequence seed.
    pub seed: u64,
    /// Number of steps.
    pub n_steps: usize,
    /// Start of the perturbed part `x0`.
    pub x0: f64,
    /// Admissible neighborhood radius of the post-shock state, units of `u∞`.
    pub p2_radius: f64,
}

impl Default for SchemeConfig {
    fn default() -> Self {
        Self {
            dx: None,
            dsigma: None,
            layer_cells: 16,
            cfl_margin: 2.5,
            seed: 0,
            n_steps: 200,
            x0: 1.0,
            p2_radius: 0.05,
        }
    }
}

/// A cell: a conical state with center `X*`, anchored at a reference point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Cell {
    /// Center `X*`.
    pub center_x: f64,
    /// `ξ` of the reference point.
    pub xi_ref: f64,
    /// `η` of the reference point.
    pub eta_ref: f64,
    /// State at the reference point.
    pub state: FlowState,
}

/// The marching state at `x_k`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SchemeState {
    /// Step index.
    pub k: usize,
    /// `ξ_k = kΔx`.
    pub xi: f64,
    /// Grid ordinates `η_i`, `i = 0` at the boundary, strictly decreasing.
    pub grid: Vec<f64>,
    /// Cell `i` spans grid `i` (top) to grid `i+1`; the last spans to the front.
    pub cells: Vec<Cell>,
    /// Front ordinate `η_s`.
    pub front_eta: f64,
    /// Most recent front slope.
    pub front_slope: f64,
}

/// Kind of a fan emitter.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EmitterKind {
    /// The boundary grid point.
    Boundary,
    /// An interior grid point.
    Interior,
    /// The strong front.
    Front,
}

/// A fan emitted at `x_k`, with the bookkeeping the diagnostics need.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmitterRecord {
    /// Emitter kind.
    pub kind: EmitterKind,
    /// `η` of the emitting point.
    pub eta: f64,
    /// `δσ` of the emitting point relative to the center of the region above.
    pub delta_sigma: f64,
    /// The fan.
    pub fan: WaveFan,
    /// Center of the states below the split.
    pub center_below: f64,
    /// Center of the states above the split.
    pub center_above: f64,
    /// Ray slope separating the two centers.
    pub split: f64,
}

impl EmitterRecord {
    fn influence(&self, b0: f64, dx: f64) -> (f64, f64) {
        let lo = self.fan.speed_min().unwrap_or(self.split);
        let hi = self.fan.speed_max().unwrap_or(self.split);
        (self.eta + (lo - b0) * dx, self.eta + (hi - b0) * dx)
    }
}

/// Where a sampled state came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "region", content = "index", rename_all = "snake_case")]
pub enum SampleSource {
    /// Inside the influence interval of emitter `i` (0 = boundary).
    Fan(usize),
    /// Between fans, inside old cell `i`.
    Cell(usize),
}

/// One slab `[x_k, x_{k+1}]` of a run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SlabRecord {
    /// Step index `k`.
    pub k: usize,
    /// `x_k`.
    pub x: f64,
    /// `Δx`.
    pub dx: f64,
    /// Grid at `x_k`.
    pub grid: Vec<f64>,
    /// Cells at `x_k`.
    pub cells: Vec<Cell>,
    /// Front ordinate at `x_k`.
    pub front_eta: f64,
    /// `δσ_s(k)`: slope offset of the front point relative to the front-cell center.
    pub front_delta_sigma: f64,
    /// Front slope `s_{k+1}` chosen at `x_k`.
    pub front_slope: f64,
    /// `θ_s(k) = |δσ_s(k) − (s_{k+1} − b0)|`.
    pub theta_s: f64,
    /// Emitters from the boundary down to the front.
    pub emitters: Vec<EmitterRecord>,
    /// Grid at `x_{k+1}` after re-gridding.
    pub next_grid: Vec<f64>,
    /// Sample points at `x_{k+1}` (one per new cell).
    pub samples: Vec<f64>,
    /// Region each sample came from.
    pub sources: Vec<SampleSource>,
    /// Samples lying on a center split within round-off.
    pub ambiguous_rays: usize,
    /// Largest `|U − Θ(s0)|/u∞` over the new cells.
    pub max_p2_distance: f64,
    /// Smallest margin of `λ1 − b0 < δσ < λ2 − b0` over the new cells.
    pub min_p3_margin: f64,
}

/// Derived mesh sizes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Resolution {
    /// `Δx`.
    pub dx: f64,
    /// `Δσ`.
    pub dsigma: f64,
    /// `x0`.
    pub x0: f64,
    /// Largest relative characteristic speed used for the CFL estimate.
    pub max_relative_speed: f64,
}

/// Outcome of a run: the slab records and the state after the last step.
#[derive(Debug, Clone, PartialEq)]
pub struct RunOutput {
    /// One record per completed step.
    pub slabs: Vec<SlabRecord>,
    /// Final marching state.
    pub final_state: SchemeState,
    /// Error that stopped the run early, if any.
    pub abort: Option<Error>,
}

/// The scheme with its fixed data.
#[derive(Debug, Clone)]
pub struct Scheme {
    /// Gas parameters.
    pub params: GasParams,
    /// Background flow past the base cone.
    pub background: BackgroundSolution,
    /// Discretized boundary.
    pub boundary: Boundary,
    /// Configuration.
    pub config: SchemeConfig,
    /// Mesh sizes in use.
    pub resolution: Resolution,
    psi_opts: IntegrateOptions,
}

impl Scheme {
    /// Solves the background, derives the mesh and discretizes the boundary.
    pub fn new(params: GasParams, b0: f64, spec: &BoundarySpec, config: SchemeConfig) -> Result<Self> {
        let background = shoot_background(b0, &params)?;
        Self::with_background(background, spec, config)
    }

    /// As [`Scheme::new`] with a precomputed background.
    pub fn with_background(background: BackgroundSolution, spec: &BoundarySpec, config: SchemeConfig) -> Result<Self> {
        let params = background.params;
        let b0 = background.b0;
        if !(config.cfl_margin >= 1.0) || config.layer_cells < 2 || !(config.x0 > 0.0) || !(config.p2_radius > 0.0) {
            return Err(Error::InvalidParams(
                "scheme needs cfl_margin >= 1, layer_cells >= 2, x0 > 0, p2_radius > 0".into(),
            ));
        }
        spec.validate()?;
        let dsigma = match config.dsigma {
            Some(v) if v > 0.0 => v,
            Some(v) => return Err(Error::InvalidParams(format!("dsigma must be positive, got {v}"))),
            None => {
                if background.s0_offset == 0.0 {
                    return Err(Error::InvalidParams(
                        "background layer width underflows; the shock layer cannot be resolved at this Mach number"
                            .into(),
                    ));
                }
                background.s0_offset.abs() / config.layer_cells as f64
            }
        };
        let max_rel = background.max_relative_speed() + spec.max_slope_offset();
        let cfl_dx = dsigma * config.x0 / (2.0 * config.cfl_margin * max_rel);
        let dx = match config.dx {
            Some(v) if v > 0.0 && v <= cfl_dx => v,
            Some(v) => {
                return Err(Error::InvalidParams(format!(
                    "dx = {v} violates the CFL bound {cfl_dx} (or is not positive)"
                )))
            }
            None => cfl_dx,
        };
        let boundary = Boundary::build(spec, b0, config.x0, dx, config.n_steps)?;
        let resolution = Resolution { dx, dsigma, x0: config.x0, max_relative_speed: max_rel };
        let psi_opts = IntegrateOptions { tol: ODE_STEP_TOL, max_step_fraction: 1.0 };
        Ok(Self { params, background, boundary, config, resolution, psi_opts })
    }

    /// Base slope.
    pub fn b0(&self) -> f64 {
        self.background.b0
    }

    /// `x` at `ξ`.
    pub fn x_at(&self, xi: f64) -> f64 {
        self.resolution.x0 + xi
    }

    /// Slope offset `δσ = (b0X + η)/(x − X)` of a point relative to center `X`.
    pub fn delta_sigma(&self, xi: f64, eta: f64, center: f64) -> f64 {
        (self.b0() * center + eta) / ((self.resolution.x0 - center) + xi)
    }

    /// Evaluates a cell's conical state at `(ξ, η)`.
    pub fn eval_cell(&self, cell: &Cell, xi: f64, eta: f64) -> Result<FlowState> {
        let ds_ref = self.delta_sigma(cell.xi_ref, cell.eta_ref, cell.center_x);
        let d_new = (self.resolution.x0 - cell.center_x) + xi;
        let dsig = ((eta - cell.eta_ref) - ds_ref * (xi - cell.xi_ref)) / d_new;
        if dsig == 0.0 {
            return Ok(cell.state);
        }
        integrate_psi_with(dsig, self.b0() + ds_ref, cell.state, &self.params, self.psi_opts)
    }

    /// The initial state at `x0`: the background field on a uniform σ-grid.
    pub fn initial_state(&self) -> Result<SchemeState> {
        let x0 = self.resolution.x0;
        let h = self.resolution.dsigma * x0;
        let front_eta = self.background.s0_offset * x0;
        let mut grid = vec![0.0];
        let mut i = 1usize;
        loop {
            let eta = -(i as f64) * h;
            if eta - front_eta < 0.5 * h {
                break;
            }
            grid.push(eta);
            i += 1;
        }
        if grid.len() < 2 {
            return Err(Error::FrontCollision { step: 0, detail: "layer narrower than two cells".into() });
        }
        let field = &self.background.field;
        let mut cells = Vec::with_capacity(grid.len());
        for i in 0..grid.len() {
            let bottom = if i + 1 < grid.len() { grid[i + 1] } else { front_eta };
            let mid = 0.5 * (grid[i] + bottom);
            let st = field.eval_offset((mid / x0).clamp(field.sigma_lo_offset(), 0.0))?;
            cells.push(Cell { center_x: 0.0, xi_ref: 0.0, eta_ref: mid, state: st });
        }
        Ok(SchemeState { k: 0, xi: 0.0, grid, cells, front_eta, front_slope: self.background.s0 })
    }

    fn emitters(&self, st: &SchemeState) -> Result<Vec<EmitterRecord>> {
        let k = st.k;
        let b = &self.boundary;
        let seg_center = b.centers[k.min(b.segments() - 1)];
        let sigma0 = b.wall_slope(k);
        let n = st.grid.len();
        let p = &self.params;
        // Index 0: boundary, 1..n: interior grid points, n: front.
        (0..=n)
            .into_par_iter()
            .map(|e| -> Result<EmitterRecord> {
                if e == 0 {
                    let eta = st.grid[0];
                    let cell = &st.cells[0];
                    let top = self.eval_cell(cell, st.xi, eta)?;
                    let fan = solve_boundary_riemann(top, sigma0, p)?;
                    let split = fan.waves[0].mid_speed();
                    Ok(EmitterRecord {
                        kind: EmitterKind::Boundary,
                        eta,
                        delta_sigma: self.delta_sigma(st.xi, eta, cell.center_x),
                        fan,
                        center_below: cell.center_x,
                        center_above: seg_center,
                        split,
                    })
                } else if e < n {
                    let eta = st.grid[e];
                    let (above, below) = (&st.cells[e - 1], &st.cells[e]);
                    let ua = self.eval_cell(above, st.xi, eta)?;
                    let ub = self.eval_cell(below, st.xi, eta)?;
                    let fan = solve_weak_riemann(ub, ua, p)?;
                    let split = fan.waves[0].mid_speed();
                    Ok(EmitterRecord {
                        kind: EmitterKind::Interior,
                        eta,
                        delta_sigma: self.delta_sigma(st.xi, eta, above.center_x),
                        fan,
                        center_below: below.center_x,
                        center_above: above.center_x,
                        split,
                    })
                } else {
                    let eta = st.front_eta;
                    let cell = &st.cells[n - 1];
                    let ua = self.eval_cell(cell, st.xi, eta)?;
                    let sol = solve_strong_riemann(ua, st.front_slope, p)?;
                    Ok(EmitterRecord {
                        kind: EmitterKind::Front,
                        eta,
                        delta_sigma: self.delta_sigma(st.xi, eta, cell.center_x),
                        split: sol.s,
                        fan: sol.fan,
                        center_below: cell.center_x,
                        center_above: cell.center_x,
                    })
                }
            })
            .collect()
    }

    fn regrid(&self, grid: &mut Vec<f64>, front: f64, x: f64, step: usize) -> Result<()> {
        let h = self.resolution.dsigma * x;
        let mut out: Vec<f64> = Vec::with_capacity(grid.len() + 4);
        out.push(grid[0]);
        for &g in grid.iter().skip(1) {
            let top = *out.last().expect("non-empty");
            let w = top - g;
            if w < 0.5 * h {
                continue;
            }
            if w > 1.5 * h {
                let m = (w / h).round().max(2.0) as usize;
                for j in 1..m {
                    out.push(top - w * j as f64 / m as f64);
                }
            }
            out.push(g);
        }
        // Front cell: keep its width within [0.5, 1.5]·h as well.
        loop {
            let last = *out.last().expect("non-empty");
            let w = last - front;
            if w < 0.5 * h {
                if out.len() <= 2 {
                    return Err(Error::FrontCollision {
                        step,
                        detail: "front reached the first interior grid point".into(),
                    });
                }
                out.pop();
                continue;
            }
            if w > 1.5 * h {
                let m = (w / h).round().max(2.0) as usize;
                for j in 1..m {
                    out.push(last - w * j as f64 / m as f64);
                }
            }
            break;
        }
        if out.len() < 2 {
            return Err(Error::FrontCollision { step, detail: "no interior grid point above the front".into() });
        }
        *grid = out;
        Ok(())
    }

    /// Advances one step, returning the new state and the slab record.
    pub fn advance(&self, st: &SchemeState) -> Result<(SchemeState, SlabRecord)> {
        let k = st.k;
        let b0 = self.b0();
        let dx = self.resolution.dx;
        let p = &self.params;
        let x_k = self.x_at(st.xi);
        let xi1 = (k + 1) as f64 * dx;
        let x1 = self.x_at(xi1);
        let emitters = self.emitters(st)?;
        let n = st.grid.len();
        let front = &emitters[n];
        let s_next = front.split;

        // New grid: interior points follow the rays of the cell above them.
        let mut grid: Vec<f64> = Vec::with_capacity(n);
        grid.push(self.boundary.beta[k + 1]);
        for i in 1..n {
            let ds = self.delta_sigma(st.xi, st.grid[i], st.cells[i - 1].center_x);
            grid.push(st.grid[i] + ds * dx);
        }
        let front_eta = st.front_eta + (s_next - b0) * dx;
        for w in grid.windows(2) {
            if !(w[1] < w[0]) {
                return Err(Error::FrontCollision { step: k, detail: "grid rays crossed".into() });
            }
        }
        if !(front_eta < *grid.last().expect("non-empty")) {
            return Err(Error::FrontCollision { step: k, detail: "front crossed the lowest grid ray".into() });
        }
        self.regrid(&mut grid, front_eta, x1, k)?;

        // Influence intervals (top-down) must be disjoint.
        let mut intervals: Vec<(f64, f64)> = emitters.iter().map(|e| e.influence(b0, dx)).collect();
        intervals[0].1 = grid[0];
        intervals[n].0 = front_eta;
        for i in 0..n {
            if !(intervals[i].0 > intervals[i + 1].1) {
                return Err(Error::FrontCollision {
                    step: k,
                    detail: format!("fans of emitters {i} and {} overlap (CFL)", i + 1),
                });
            }
        }

        let theta = sample_theta(self.config.seed, k);
        let m = grid.len();
        let samples: Vec<f64> = (0..m)
            .map(|i| {
                let bottom = if i + 1 < m { grid[i + 1] } else { front_eta };
                let mid = 0.5 * (grid[i] + bottom);
                mid + theta * (grid[i] - mid)
            })
            .collect();
        let locate = |a: f64| -> Result<SampleSource> {
            for (e, iv) in intervals.iter().enumerate() {
                if a > iv.1 {
                    return Ok(SampleSource::Cell(e - 1));
                }
                if a >= iv.0 {
                    return Ok(SampleSource::Fan(e));
                }
            }
            Err(Error::FrontCollision { step: k, detail: "sample point below the front".into() })
        };
        let results: Vec<Result<(Cell, SampleSource, bool)>> = samples
            .par_iter()
            .map(|&a| {
                let src = locate(a)?;
                match src {
                    SampleSource::Cell(i) => {
                        let c = &st.cells[i];
                        let u = self.eval_cell(c, xi1, a)?;
                        Ok((Cell { center_x: c.center_x, xi_ref: xi1, eta_ref: a, state: u }, src, false))
                    }
                    SampleSource::Fan(e) => {
                        let em = &emitters[e];
                        let zeta_rel = (a - em.eta) / dx;
                        let zeta = b0 + zeta_rel;
                        let ur = sample_fan(&em.fan, zeta, p)?;
                        let ambiguous = (zeta - em.split).abs() <= 1e-12 * (em.split.abs() + 1.0);
                        let center = if zeta < em.split { em.center_below } else { em.center_above };
                        let ds_e = self.delta_sigma(st.xi, em.eta, center);
                        let dsig = ((a - em.eta) - ds_e * dx) / ((self.resolution.x0 - center) + xi1);
                        let u = if dsig == 0.0 || ur == p.incoming() {
                            ur
                        } else {
                            integrate_psi_with(dsig, b0 + ds_e, ur, p, self.psi_opts)?
                        };
                        Ok((Cell { center_x: center, xi_ref: xi1, eta_ref: a, state: u }, src, ambiguous))
                    }
                }
            })
            .collect();
        let mut cells = Vec::with_capacity(m);
        let mut sources = Vec::with_capacity(m);
        let mut ambiguous_rays = 0;
        for r in results {
            let (c, s, amb) = r?;
            cells.push(c);
            sources.push(s);
            ambiguous_rays += usize::from(amb);
        }

        // Invariant checks on the new cells.
        let theta0 = self.background.shock_state();
        let mut max_p2: f64 = 0.0;
        let mut min_p3 = f64::INFINITY;
        for (i, c) in cells.iter().enumerate() {
            let dist = (c.state - theta0).norm() / p.u_inf;
            max_p2 = max_p2.max(dist);
            if !(dist <= self.config.p2_radius) || !c.state.is_finite() {
                return Err(Error::InvariantViolation {
                    step: k + 1,
                    kind: "P2",
                    detail: format!("cell {i}: |U − Θ(s0)|/u∞ = {dist:e} exceeds {}", self.config.p2_radius),
                });
            }
            let e = eigen(p, c.state).map_err(|_| Error::InvariantViolation {
                step: k + 1,
                kind: "P2",
                detail: format!("cell {i} left the supersonic region"),
            })?;
            let ds = self.delta_sigma(c.xi_ref, c.eta_ref, c.center_x);
            let margin = (ds - (e.lambda1 - b0)).min((e.lambda2 - b0) - ds);
            min_p3 = min_p3.min(margin);
            if !(margin > 0.0) {
                return Err(Error::InvariantViolation {
                    step: k + 1,
                    kind: "P3",
                    detail: format!(
                        "cell {i}: ray slope offset {ds:e} outside ({:e}, {:e})",
                        e.lambda1 - b0,
                        e.lambda2 - b0
                    ),
                });
            }
        }

        let front_cell_center = st.cells[n - 1].center_x;
        let front_ds = self.delta_sigma(st.xi, st.front_eta, front_cell_center);
        let record = SlabRecord {
            k,
            x: x_k,
            dx,
            grid: st.grid.clone(),
            cells: st.cells.clone(),
            front_eta: st.front_eta,
            front_delta_sigma: front_ds,
            front_slope: s_next,
            theta_s: (front_ds - (s_next - b0)).abs(),
            emitters,
            next_grid: grid.clone(),
            samples,
            sources,
            ambiguous_rays,
            max_p2_distance: max_p2,
            min_p3_margin: min_p3,
        };
        let next = SchemeState { k: k + 1, xi: xi1, grid, cells, front_eta, front_slope: s_next };
        Ok((next, record))
    }

    /// Runs `config.n_steps` steps (or fewer if an invariant aborts the run).
    pub fn run(&self) -> Result<RunOutput> {
        self.run_steps(self.config.n_steps)
    }

    /// Runs `n` steps from the initial state.
    pub fn run_steps(&self, n: usize) -> Result<RunOutput> {
        let mut st = self.initial_state()?;
        let mut slabs = Vec::with_capacity(n);
        let mut abort = None;
        for _ in 0..n.min(self.boundary.segments().saturating_sub(1)) {
            match self.advance(&st) {
                Ok((next, rec)) => {
                    slabs.push(rec);
                    st = next;
                }
                Err(e) => {
                    abort = Some(e);
                    break;
                }
            }
        }
        Ok(RunOutput { slabs, final_state: st, abort })
    }

    /// Largest `|U_cell − ϖ(σ)|/u∞` over the cells of `st`, with `ϖ` a field
    /// of center `center`; cells whose ray falls outside the tabulation are
    /// compared against the nearest tabulated state.
    pub fn field_deviation(&self, st: &SchemeState, field: &SelfSimilarField, center: f64) -> f64 {
        let b0 = self.b0();
        st.cells
            .iter()
            .map(|c| {
                let ds = self.delta_sigma(c.xi_ref, c.eta_ref, center);
                let tau = ds - (field.sigma_base - b0);
                let y = field.offset_state(tau);
                let u = FlowState::new(y[0], y[1] + field.sigma_base * y[0]);
                (c.state - u).norm() / self.params.u_inf
            })
            .fold(0.0, f64::max)
    }
}

/// Total variation of the cell states across a slice, `Σ|U_{i} − U_{i+1}|`,
/// including the jump across the front to `U∞`.
pub fn slice_total_variation(st: &SchemeState, p: &GasParams) -> f64 {
    let mut tv = 0.0;
    for w in st.cells.windows(2) {
        tv += (w[0].state - w[1].state).norm();
    }
    if let Some(last) = st.cells.last() {
        tv += (last.state - p.incoming()).norm();
    }
    tv
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn center_update_example() {
        assert_eq!(center_update(1.0, 0.5, -1.0, -1.25), Some(-1.0));
        assert_eq!(center_update(1.0, 0.5, -1.0, -1.0), None);
    }

    #[test]
    fn kink_has_one_corner() {
        let b = Boundary::build(&BoundarySpec::Kink { xi: 0.5, delta: 0.01 }, -0.5, 1.0, 0.1, 20).unwrap();
        let nz: Vec<_> = b.omega.iter().filter(|w| w.abs() > 1e-15).collect();
        assert_eq!(nz.len(), 1);
        assert!((nz[0] - ((-0.49f64).atan() - (-0.5f64).atan())).abs() < 1e-12);
        let straight = Boundary::build(&BoundarySpec::Straight, -0.5, 1.0, 0.1, 20).unwrap();
        assert_eq!(straight.weighted_variation, 0.0);
        assert!(straight.centers.iter().all(|c| *c == 0.0));
    }

    #[test]
    fn sample_point_midpoint_convention() {
        assert_eq!(sample_point(0, 0, 1.0, 2.0), 1.0);
        let t: Vec<f64> = (0..8).map(|k| sample_theta(3, k)).collect();
        assert!(t.iter().all(|v| *v > -1.0 && *v < 1.0));
    }

    #[test]
    fn straight_cone_stays_on_background() {
        let p = GasParams::new(1.0, 10.0).unwrap();
        let cfg = SchemeConfig { n_steps: 20, ..SchemeConfig::default() };
        let s = Scheme::new(p, -0.5, &BoundarySpec::Straight, cfg).unwrap();
        let out = s.run().unwrap();
        assert!(out.abort.is_none(), "{:?}", out.abort);
        let dev = s.field_deviation(&out.final_state, &s.background.field, 0.0);
        assert!(dev < 1e-8, "{dev}");
        for r in &out.slabs {
            assert!((r.front_slope - s.background.s0).abs() < 1e-8);
        }
    }
}
