//! The conical self-similar ODE, its flow map `Ψ`, and the background flow
//! past a straight cone obtained by shooting along the apple curve.
//!
//! A self-similar state depends only on `σ = y/(x − X*)` and satisfies
//! `u_σ = c²v/D`, `v_σ = −c²v/(σD)` with `D = (1+σ²)c² − (v − σu)²`.
//!
//! At large Mach numbers the whole shock layer `[s0, b0]` is exponentially
//! thin and `v − σu` is exponentially small, so the integrator works in
//! offset variables: `σ = σ_b + τ` about a base slope `σ_b`, with state
//! `(u, w)` where `w = v − σ_b u`. The small quantities `τ` and `w` are then
//! carried with full relative precision.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gas::{det2, eigen, FlowState, GasParams};
use crate::numerics::Pchip;
use crate::shock_polar::{polar_log_density, theta_of_s, theta_s_at, PolarPoint};
use crate::tolerances::{
    EXTENSION_FRACTION, EXTENSION_NODES, ODE_MAX_STEP_FRACTION, ODE_STEP_TOL, SHOOT_SCAN_FLOOR, SHOOT_SCAN_START,
    SONIC_DEGENERACY, SUPERSONIC_GUARD, TABULATION_NODES,
};

/// Right-hand side `(du/dσ, dv/dσ)` of the conical ODE.
pub fn ode_rhs(sigma: f64, st: FlowState, p: &GasParams) -> Result<[f64; 2]> {
    if sigma == 0.0 {
        return Err(Error::RangeExit("ray slope sigma = 0".into()));
    }
    let c2 = p.c * p.c;
    let rel = st.v - sigma * st.u;
    let d = (1.0 + sigma * sigma) * c2 - rel * rel;
    if !(d > SONIC_DEGENERACY * c2 * (1.0 + sigma * sigma)) {
        return Err(Error::SonicDegeneracy { sigma });
    }
    let du = c2 * st.v / d;
    Ok([du, -du / sigma])
}

/// Step control of the adaptive RK4 integrator.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntegrateOptions {
    /// Local error tolerance per step, relative to the solution scale.
    pub tol: f64,
    /// Maximum step as a fraction of the integration range.
    pub max_step_fraction: f64,
}

impl Default for IntegrateOptions {
    fn default() -> Self {
        Self { tol: ODE_STEP_TOL, max_step_fraction: ODE_MAX_STEP_FRACTION }
    }
}

/// Offset form of the right-hand side: derivatives of `(u, w)` in `τ`.
fn offset_rhs(base: f64, tau: f64, y: [f64; 2], p: &GasParams) -> Result<[f64; 2]> {
    let sigma = base + tau;
    if sigma == 0.0 {
        return Err(Error::RangeExit("ray slope sigma = 0".into()));
    }
    let c2 = p.c * p.c;
    let (u, w) = (y[0], y[1]);
    let v = w + base * u;
    let rel = w - tau * u;
    let d = (1.0 + sigma * sigma) * c2 - rel * rel;
    if !(d > SONIC_DEGENERACY * c2 * (1.0 + sigma * sigma)) {
        return Err(Error::SonicDegeneracy { sigma });
    }
    let du = c2 * v / d;
    let dw = -c2 * v * (1.0 + base * sigma) / (sigma * d);
    Ok([du, dw])
}

fn rk4(base: f64, tau: f64, y: [f64; 2], f0: [f64; 2], h: f64, p: &GasParams) -> Result<[f64; 2]> {
    let k1 = f0;
    let k2 = offset_rhs(base, tau + 0.5 * h, [y[0] + 0.5 * h * k1[0], y[1] + 0.5 * h * k1[1]], p)?;
    let k3 = offset_rhs(base, tau + 0.5 * h, [y[0] + 0.5 * h * k2[0], y[1] + 0.5 * h * k2[1]], p)?;
    let k4 = offset_rhs(base, tau + h, [y[0] + h * k3[0], y[1] + h * k3[1]], p)?;
    Ok([
        y[0] + h / 6.0 * (k1[0] + 2.0 * k2[0] + 2.0 * k3[0] + k4[0]),
        y[1] + h / 6.0 * (k1[1] + 2.0 * k2[1] + 2.0 * k3[1] + k4[1]),
    ])
}

/// One adaptive attempt of size `h` with step doubling. Returns the
/// extrapolated state and the normalized error.
fn doubled_step(base: f64, tau: f64, y: [f64; 2], h: f64, p: &GasParams, tol: f64) -> Result<([f64; 2], f64)> {
    let f0 = offset_rhs(base, tau, y, p)?;
    let full = rk4(base, tau, y, f0, h, p)?;
    let mid = rk4(base, tau, y, f0, 0.5 * h, p)?;
    let fm = offset_rhs(base, tau + 0.5 * h, mid, p)?;
    let half = rk4(base, tau + 0.5 * h, mid, fm, 0.5 * h, p)?;
    let mut err: f64 = 0.0;
    for i in 0..2 {
        let scale = y[i].abs() + (h * f0[i]).abs() + 1e-300;
        err = err.max((half[i] - full[i]).abs() / (15.0 * scale));
    }
    let out = [half[0] + (half[0] - full[0]) / 15.0, half[1] + (half[1] - full[1]) / 15.0];
    Ok((out, err / tol))
}

fn check_range(p: &GasParams, y: [f64; 2], sigma: f64) -> Result<()> {
    if !(y[0] > p.c * (1.0 + SUPERSONIC_GUARD)) || !y[1].is_finite() {
        return Err(Error::RangeExit(format!("state left the supersonic region at sigma = {sigma}")));
    }
    Ok(())
}

/// Integrates the offset system from `τ0` to `τ1` about `base`.
pub(crate) fn integrate_offset(
    base: f64,
    tau0: f64,
    tau1: f64,
    y0: [f64; 2],
    p: &GasParams,
    opts: IntegrateOptions,
) -> Result<[f64; 2]> {
    let range = (tau1 - tau0).abs();
    if range == 0.0 {
        return Ok(y0);
    }
    let dir = (tau1 - tau0).signum();
    let hmax = range * opts.max_step_fraction.clamp(1e-9, 1.0);
    let hmin = range * 1e-13;
    let mut h = hmax;
    let mut tau = tau0;
    let mut y = y0;
    let mut steps = 0usize;
    while (tau1 - tau) * dir > 0.0 {
        steps += 1;
        if steps > 10_000_000 {
            return Err(Error::NoConvergence("conical ODE step count"));
        }
        let remaining = (tau1 - tau).abs();
        let last = h >= remaining;
        let hs = if last { remaining } else { h };
        match doubled_step(base, tau, y, dir * hs, p, opts.tol) {
            Ok((ynew, err)) if err <= 1.0 => {
                y = ynew;
                tau = if last { tau1 } else { tau + dir * hs };
                check_range(p, y, base + tau)?;
                let grow = if err > 0.0 { (0.9 * err.powf(-0.2)).min(4.0) } else { 4.0 };
                h = (hs * grow).min(hmax);
            }
            Ok((_, err)) => {
                h = hs * (0.9 * err.powf(-0.25)).max(0.1);
                if h < hmin {
                    return Err(Error::NoConvergence("conical ODE step underflow"));
                }
            }
            Err(e) => {
                h = 0.25 * hs;
                if h < hmin {
                    return Err(e);
                }
            }
        }
    }
    Ok(y)
}

/// Flow map `Ψ(Δσ, σ0; U0)`: the solution of the conical ODE at `σ0 + Δσ`
/// with data `U0` at `σ0`, using the default step control.
pub fn integrate_psi(delta_sigma: f64, sigma0: f64, u0: FlowState, p: &GasParams) -> Result<FlowState> {
    integrate_psi_with(delta_sigma, sigma0, u0, p, IntegrateOptions::default())
}

/// [`integrate_psi`] with explicit step control.
pub fn integrate_psi_with(
    delta_sigma: f64,
    sigma0: f64,
    u0: FlowState,
    p: &GasParams,
    opts: IntegrateOptions,
) -> Result<FlowState> {
    if delta_sigma == 0.0 {
        return Ok(u0);
    }
    let y = integrate_offset(sigma0, 0.0, delta_sigma, [u0.u, u0.v - sigma0 * u0.u], p, opts)?;
    Ok(FlowState::new(y[0], y[1] + sigma0 * y[0]))
}

/// Endpoint of a conical trajectory launched from the polar.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AppleEndpoint {
    /// Launch slope `s`.
    pub s: f64,
    /// Ray slope `σ_e` where `v = σ_e u`.
    pub sigma_e: f64,
    /// `σ_e − s`, resolved without cancellation.
    pub offset: f64,
    /// State at the endpoint.
    pub state: FlowState,
}

/// Integrates from `Θ(s)` at `σ = s` until the trajectory meets `v = σu`
/// (the apple curve), locating the crossing by bisection within the last step.
pub fn apple_endpoint(s: f64, p: &GasParams) -> Result<AppleEndpoint> {
    let pt = theta_of_s(s, p)?;
    if !pt.admissible {
        return Err(Error::OffPolar(format!("slope {s} is not on the admissible polar branch")));
    }
    let base = s;
    let y0 = [pt.state.u, -s * p.u_inf * pt.inv_rho];
    let g = |tau: f64, y: [f64; 2]| y[1] - tau * y[0];
    if g(0.0, y0) <= 0.0 {
        return Ok(AppleEndpoint { s, sigma_e: s, offset: 0.0, state: pt.state });
    }
    let opts = IntegrateOptions::default();
    let estimate = g(0.0, y0) / (2.0 * y0[0]);
    let mut h = (estimate / 20.0).max(1e-300);
    let mut tau = 0.0;
    let mut y = y0;
    for _ in 0..1_000_000 {
        if base + tau + h >= 0.0 {
            h = 0.5 * (-(base + tau));
            if h <= 0.0 {
                return Err(Error::RangeExit("apple trajectory reached sigma = 0".into()));
            }
        }
        let (ynew, err) = doubled_step(base, tau, y, h, p, opts.tol)?;
        if err > 1.0 {
            h *= (0.9 * err.powf(-0.25)).max(0.1);
            continue;
        }
        check_range(p, ynew, base + tau + h)?;
        if g(tau + h, ynew) <= 0.0 {
            // Crossing inside [tau, tau + h]: bisect with single RK4 sub-steps.
            let f0 = offset_rhs(base, tau, y, p)?;
            let (mut lo, mut hi) = (0.0, h);
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                if mid == lo || mid == hi {
                    break;
                }
                let ym = rk4(base, tau, y, f0, mid, p)?;
                if g(tau + mid, ym) > 0.0 {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            let ye = rk4(base, tau, y, f0, hi, p)?;
            let off = tau + hi;
            return Ok(AppleEndpoint {
                s,
                sigma_e: s + off,
                offset: off,
                state: FlowState::new(ye[0], ye[1] + base * ye[0]),
            });
        }
        tau += h;
        y = ynew;
        let grow = if err > 0.0 { (0.9 * err.powf(-0.2)).min(4.0) } else { 4.0 };
        h = (h * grow).min(estimate.max(tau) / 5.0);
    }
    Err(Error::NoConvergence("apple endpoint search"))
}

/// A conical state curve `σ ↦ ϖ(σ)` with center `X*`, tabulated in offsets
/// `τ = σ − σ_b` and interpolated monotonically (PCHIP on `(u, w)`).
#[derive(Debug, Clone, PartialEq)]
pub struct SelfSimilarField {
    /// Center `X*` on the axis.
    pub center_x: f64,
    /// Base slope `σ_b` of the offset representation.
    pub sigma_base: f64,
    /// Number of leading nodes covering the core range `[s0, b0]`.
    pub core_nodes: usize,
    interp: Pchip<2>,
}

impl SelfSimilarField {
    /// Builds a field from offset nodes `τ_i` and offset states `(u_i, w_i)`.
    pub fn from_offset_nodes(
        center_x: f64,
        sigma_base: f64,
        tau: Vec<f64>,
        y: Vec<[f64; 2]>,
        core_nodes: usize,
    ) -> Self {
        let (tau, y) = if tau.len() == 1 {
            let t = tau[0];
            let dt = if t == 0.0 { f64::MIN_POSITIVE } else { t.abs() * 1e-15 };
            (vec![t, t + dt], vec![y[0], y[0]])
        } else {
            (tau, y)
        };
        Self { center_x, sigma_base, core_nodes, interp: Pchip::new(tau, y) }
    }

    /// Lowest tabulated offset.
    pub fn sigma_lo_offset(&self) -> f64 {
        self.interp.nodes()[0]
    }

    /// Highest tabulated offset.
    pub fn sigma_hi_offset(&self) -> f64 {
        *self.interp.nodes().last().expect("non-empty")
    }

    /// Lowest tabulated slope.
    pub fn sigma_lo(&self) -> f64 {
        self.sigma_base + self.sigma_lo_offset()
    }

    /// Highest tabulated slope.
    pub fn sigma_hi(&self) -> f64 {
        self.sigma_base + self.sigma_hi_offset()
    }

    /// Whether an offset lies in the tabulated range.
    pub fn contains_offset(&self, tau: f64) -> bool {
        tau >= self.sigma_lo_offset() && tau <= self.sigma_hi_offset()
    }

    /// Interpolated offset state `(u, w)`; clamps outside the range.
    pub fn offset_state(&self, tau: f64) -> [f64; 2] {
        self.interp.eval(tau)
    }

    /// `ϖ(σ_b + τ)`; queries outside the tabulated range are flagged.
    pub fn eval_offset(&self, tau: f64) -> Result<FlowState> {
        if !self.contains_offset(tau) {
            return Err(Error::RangeExit(format!(
                "query offset {tau} outside tabulated range [{}, {}]",
                self.sigma_lo_offset(),
                self.sigma_hi_offset()
            )));
        }
        let y = self.interp.eval(tau);
        Ok(FlowState::new(y[0], y[1] + self.sigma_base * y[0]))
    }

    /// `ϖ(σ)` at an absolute slope.
    pub fn eval(&self, sigma: f64) -> Result<FlowState> {
        self.eval_offset(sigma - self.sigma_base)
    }

    /// Tabulation nodes as `(τ, u, w)`.
    pub fn nodes(&self) -> impl Iterator<Item = (f64, [f64; 2])> + '_ {
        self.interp.nodes().iter().copied().zip(self.interp.values().iter().copied())
    }
}

/// Sign and positivity checks of a tabulated background on its core nodes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FieldInvariants {
    /// Nodes examined.
    pub nodes_checked: usize,
    /// `u_σ < 0` at every node.
    pub u_sigma_negative: bool,
    /// `v_σ < 0` at every node.
    pub v_sigma_negative: bool,
    /// `ρ_σ > 0` at every node.
    pub rho_sigma_positive: bool,
    /// `c²(1+σ²) − (v − σu)² > 0` at every node.
    pub nondegenerate: bool,
    /// `λ₁ < σ < λ₂` at every node.
    pub characteristic_ordering: bool,
    /// `v < 0` at every node.
    pub v_negative: bool,
    /// `v − σu ≥ 0` at every node.
    pub above_apple_curve: bool,
    /// Smallest relative non-degeneracy margin `D/(c²(1+σ²))`.
    pub min_degeneracy_margin: f64,
}

impl FieldInvariants {
    /// All checks passed.
    pub fn all_ok(&self) -> bool {
        self.u_sigma_negative
            && self.v_sigma_negative
            && self.rho_sigma_positive
            && self.nondegenerate
            && self.characteristic_ordering
            && self.v_negative
            && self.above_apple_curve
    }
}

/// Evaluates the monotonicity, non-degeneracy and ordering properties of a
/// background field at its core nodes; the sign of `ρ_σ` and of `v − σu` is
/// not asserted on the wall ray, where both vanish. Derivatives come from the
/// ODE itself; `ρ_σ/ρ = −c²v(σu − v)/(σD)·c^{−2}` is evaluated in factored form so its sign
/// survives when `v − σu` is exponentially small.
pub fn field_invariants(field: &SelfSimilarField, p: &GasParams) -> FieldInvariants {
    let c2 = p.c * p.c;
    let base = field.sigma_base;
    let mut out = FieldInvariants {
        nodes_checked: 0,
        u_sigma_negative: true,
        v_sigma_negative: true,
        rho_sigma_positive: true,
        nondegenerate: true,
        characteristic_ordering: true,
        v_negative: true,
        above_apple_curve: true,
        min_degeneracy_margin: f64::INFINITY,
    };
    for (tau, y) in field.nodes().take(field.core_nodes) {
        out.nodes_checked += 1;
        let sigma = base + tau;
        let (u, w) = (y[0], y[1]);
        let v = w + base * u;
        let rel = w - tau * u;
        let d = (1.0 + sigma * sigma) * c2 - rel * rel;
        let margin = d / (c2 * (1.0 + sigma * sigma));
        out.min_degeneracy_margin = out.min_degeneracy_margin.min(margin);
        out.nondegenerate &= d > 0.0;
        let u_s = c2 * v / d;
        let v_s = -c2 * v / (sigma * d);
        out.u_sigma_negative &= u_s < 0.0;
        out.v_sigma_negative &= v_s < 0.0;
        // On the wall ray `v − σu` vanishes exactly, and with it ρ_σ; a node
        // where it is at round-off level carries no sign information.
        let on_wall = rel.abs() <= 16.0 * f64::EPSILON * (u.abs() + w.abs());
        if !on_wall {
            // u u_σ + v v_σ = c² v (σu − v)/(σD); ρ_σ has the opposite sign.
            let kinetic = c2 * v * (-rel) / (sigma * d);
            out.rho_sigma_positive &= kinetic < 0.0;
            out.above_apple_curve &= rel >= 0.0;
        }
        out.v_negative &= v < 0.0;
        match eigen(p, FlowState::new(u, v)) {
            Ok(e) => out.characteristic_ordering &= (e.lambda1 - base) < tau && tau < (e.lambda2 - base),
            Err(_) => out.characteristic_ordering = false,
        }
    }
    out
}

/// The unperturbed conical flow past the straight cone `y = b0 x`.
#[derive(Debug, Clone, PartialEq)]
pub struct BackgroundSolution {
    /// Gas parameters of the solve.
    pub params: GasParams,
    /// Cone slope.
    pub b0: f64,
    /// Leading shock slope.
    pub s0: f64,
    /// `s0 − b0 < 0`, carried without cancellation.
    pub s0_offset: f64,
    /// Tabulated field on `[s0, b0]` plus its continuation beyond `b0`.
    pub field: SelfSimilarField,
    /// Polar point at `s0`.
    pub post_shock: PolarPoint,
    /// `|v(b0) − b0 u(b0)|/u∞`.
    pub boundary_residual: f64,
    /// Whether the layer width underflowed double precision (`s0 = b0`).
    pub degenerate: bool,
    /// Number of mismatch evaluations used by the shooting.
    pub evaluations: usize,
}

impl BackgroundSolution {
    /// State at the shock, `ϖ(s0) = Θ(s0)`.
    pub fn shock_state(&self) -> FlowState {
        self.post_shock.state
    }

    /// State at the cone, `ϖ(b0)`.
    pub fn cone_state(&self) -> FlowState {
        let y = self.field.offset_state(0.0);
        FlowState::new(y[0], y[1] + self.b0 * y[0])
    }

    /// `(u_σ, v_σ)` of the background at `σ = s0`.
    pub fn sigma_derivatives_at_shock(&self) -> Result<[f64; 2]> {
        let y = self.field.offset_state(self.s0_offset);
        let [du, dw] = offset_rhs(self.b0, self.s0_offset, y, &self.params)?;
        Ok([du, dw + self.b0 * du])
    }

    /// Largest relative characteristic speed `|λ_j − σ|` over the core nodes.
    pub fn max_relative_speed(&self) -> f64 {
        let mut m: f64 = 0.0;
        for (tau, y) in self.field.nodes().take(self.field.core_nodes) {
            let st = FlowState::new(y[0], y[1] + self.b0 * y[0]);
            if let Ok(e) = eigen(&self.params, st) {
                m = m.max((e.lambda1 - self.b0 - tau).abs()).max((e.lambda2 - self.b0 - tau).abs());
            }
        }
        m
    }
}

/// Boundary mismatch `w(0) = v(b0) − b0 u(b0)` of the trajectory launched
/// from the polar at `s = b0 + d`.
fn shooting_mismatch(
    d: f64,
    b0: f64,
    p: &GasParams,
    opts: IntegrateOptions,
) -> Result<([f64; 2], [f64; 2], PolarPoint)> {
    let s = b0 + d;
    let pt = theta_of_s(s, p)?;
    if !pt.admissible {
        return Err(Error::OffPolar(format!("slope {s} is not on the admissible polar branch")));
    }
    // v − b0 u = (v − s u) + (s − b0) u with v − s u = −s u∞/ρ̃ exactly.
    let y0 = [pt.state.u, -s * p.u_inf * pt.inv_rho + d * pt.state.u];
    let y1 = integrate_offset(b0, d, 0.0, y0, p, opts)?;
    Ok((y0, y1, pt))
}

/// Solves for the background flow `Γ(b0, u∞)`: the shock slope `s0` for which
/// the conical trajectory from `Θ(s0)` satisfies `v(b0) = b0 u(b0)`.
///
/// The unknown is the offset `d = s0 − b0`, scanned log-uniformly from
/// `−0.2|b0|` toward zero, bracketed by the sign change of the mismatch,
/// and refined by bisection in `ln|d|`; the returned root is the bracket end
/// on the positive side of the mismatch (so `v − σu ≥ 0` holds on the whole
/// tabulation). Trajectories that degenerate before reaching `b0` count as
/// negative mismatch.
pub fn shoot_background(b0: f64, p: &GasParams) -> Result<BackgroundSolution> {
    if !(b0 < 0.0 && b0.is_finite()) {
        return Err(Error::InvalidParams(format!("cone slope must be negative, got {b0}")));
    }
    let opts = IntegrateOptions::default();
    let l_b0 = polar_log_density(b0, p)?;
    if l_b0 <= 0.0 {
        return Err(Error::NoAttachedSolution { b0, mach: p.mach() });
    }
    let inv_b0 = (-l_b0).exp();
    if 0.5 * b0.abs() * inv_b0 < 1e3 * SHOOT_SCAN_FLOOR {
        return degenerate_background(b0, p);
    }
    let mut evaluations = 0usize;
    let mut sign_at = |logd: f64| -> f64 {
        evaluations += 1;
        match shooting_mismatch(-logd.exp(), b0, p, opts) {
            Ok((_, y1, _)) => y1[1],
            Err(_) => f64::NEG_INFINITY,
        }
    };
    let step = 0.5 * std::f64::consts::LN_10;
    let start = (SHOOT_SCAN_START * b0.abs()).ln();
    let floor = SHOOT_SCAN_FLOOR.ln();
    let mut prev: Option<f64> = None;
    let mut bracket = None;
    let mut l = start;
    while l >= floor {
        let g = sign_at(l);
        if g > 0.0 {
            match prev {
                Some(lp) => bracket = Some((l, lp)),
                None => return Err(Error::NoAttachedSolution { b0, mach: p.mach() }),
            }
            break;
        }
        prev = Some(l);
        l -= step;
    }
    let (mut lpos, mut lneg) = bracket.ok_or(Error::NoAttachedSolution { b0, mach: p.mach() })?;
    while (lneg - lpos).abs() > 1e-14 * lpos.abs().max(1.0) {
        let mid = 0.5 * (lpos + lneg);
        if mid == lpos || mid == lneg {
            break;
        }
        if sign_at(mid) > 0.0 {
            lpos = mid;
        } else {
            lneg = mid;
        }
    }
    let d = -lpos.exp();
    let (_, end, pt) = shooting_mismatch(d, b0, p, opts)?;
    let boundary_residual = end[1].abs() / p.u_inf;
    let field = tabulate(b0, d, &pt, p, opts)?;
    Ok(BackgroundSolution {
        params: *p,
        b0,
        s0: b0 + d,
        s0_offset: d,
        field,
        post_shock: pt,
        boundary_residual,
        degenerate: false,
        evaluations,
    })
}

fn degenerate_background(b0: f64, p: &GasParams) -> Result<BackgroundSolution> {
    let pt = theta_of_s(b0, p)?;
    let y0 = [pt.state.u, -b0 * p.u_inf * pt.inv_rho];
    let (tau, y) = continuation(b0, 0.0, y0, p, IntegrateOptions::default(), vec![0.0], vec![y0]);
    let field = SelfSimilarField::from_offset_nodes(0.0, b0, tau, y, 1);
    Ok(BackgroundSolution {
        params: *p,
        b0,
        s0: b0,
        s0_offset: 0.0,
        field,
        post_shock: pt,
        boundary_residual: y0[1].abs() / p.u_inf,
        degenerate: true,
        evaluations: 0,
    })
}

fn continuation(
    b0: f64,
    tau_start: f64,
    y_start: [f64; 2],
    p: &GasParams,
    opts: IntegrateOptions,
    mut tau: Vec<f64>,
    mut ys: Vec<[f64; 2]>,
) -> (Vec<f64>, Vec<[f64; 2]>) {
    let tau_hi = EXTENSION_FRACTION * b0.abs();
    let mut t = tau_start;
    let mut y = y_start;
    for i in 1..=EXTENSION_NODES {
        let t1 = tau_hi * i as f64 / EXTENSION_NODES as f64;
        if b0 + t1 >= 0.0 {
            break;
        }
        match integrate_offset(b0, t, t1, y, p, opts) {
            Ok(y1) => {
                tau.push(t1);
                ys.push(y1);
                t = t1;
                y = y1;
            }
            Err(_) => break,
        }
    }
    (tau, ys)
}

fn tabulate(b0: f64, d: f64, pt: &PolarPoint, p: &GasParams, opts: IntegrateOptions) -> Result<SelfSimilarField> {
    let n = TABULATION_NODES;
    let mut tau = Vec::with_capacity(n + EXTENSION_NODES);
    let mut ys = Vec::with_capacity(n + EXTENSION_NODES);
    let mut y = [pt.state.u, -(b0 + d) * p.u_inf * pt.inv_rho + d * pt.state.u];
    let node = |i: usize| if i == n - 1 { 0.0 } else { d * (1.0 - i as f64 / (n - 1) as f64) };
    tau.push(d);
    ys.push(y);
    let seg_opts = IntegrateOptions { max_step_fraction: ((n - 1) as f64 * opts.max_step_fraction).min(1.0), ..opts };
    for i in 1..n {
        y = integrate_offset(b0, node(i - 1), node(i), y, p, seg_opts)?;
        tau.push(node(i));
        ys.push(y);
    }
    let (tau, ys) = continuation(b0, 0.0, y, p, opts, tau, ys);
    Ok(SelfSimilarField::from_offset_nodes(0.0, b0, tau, ys, n))
}

/// One measured-versus-predicted entry of the large-Mach expansion report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExpansionRow {
    /// Free-stream Mach number.
    pub mach: f64,
    /// Quantity name.
    pub quantity: String,
    /// Measured value at `σ = s0`.
    pub measured: f64,
    /// Leading-order prediction.
    pub predicted: f64,
    /// `measured − predicted`.
    pub residual: f64,
}

/// Expansion table over a Mach sweep for one cone slope.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExpansionReport {
    /// Cone slope.
    pub b0: f64,
    /// Sound speed used for the sweep.
    pub c: f64,
    /// Rows grouped by Mach number.
    pub rows: Vec<ExpansionRow>,
}

impl ExpansionReport {
    /// Residual of `quantity` at Mach `mach`.
    pub fn residual(&self, quantity: &str, mach: f64) -> Option<f64> {
        self.rows.iter().find(|r| r.quantity == quantity && r.mach == mach).map(|r| r.residual)
    }

    /// `|residual(M1)| / |residual(M2)|`.
    pub fn residual_ratio(&self, quantity: &str, m1: f64, m2: f64) -> Option<f64> {
        Some(self.residual(quantity, m1)?.abs() / self.residual(quantity, m2)?.abs())
    }

    /// Distinct quantity names in report order.
    pub fn quantities(&self) -> Vec<String> {
        let mut q: Vec<String> = Vec::new();
        for r in &self.rows {
            if !q.contains(&r.quantity) {
                q.push(r.quantity.clone());
            }
        }
        q
    }
}

/// Names of the quantities emitted by [`expansion_rows`], in order.
pub const EXPANSION_QUANTITIES: [&str; 14] = [
    "lambda1",
    "lambda2",
    "e1_over_u_inf",
    "e2_over_u_inf",
    "e1_over_e2",
    "u_sigma_over_u_inf",
    "v_sigma_over_u_inf",
    "u_sigma_plus_lambda1_v_sigma_over_c",
    "u_sigma_plus_lambda2_v_sigma_over_c",
    "u_s_over_u_inf",
    "v_s_over_u_inf",
    "det_r1_r2_over_mach",
    "u_over_u_inf",
    "s0_minus_b0",
];

/// Measured and predicted large-Mach quantities of one background solution.
pub fn expansion_rows(bg: &BackgroundSolution) -> Result<Vec<ExpansionRow>> {
    let p = &bg.params;
    let (b0, c, ui, m) = (bg.b0, p.c, p.u_inf, p.mach());
    let k = 1.0 + b0 * b0;
    let sk = k.sqrt();
    let st = bg.shock_state();
    let e = eigen(p, st)?;
    let [us, vs] = bg.sigma_derivatives_at_shock()?;
    let [tus, tvs] = theta_s_at(p, &bg.post_shock)?;
    let rows = [
        (e.lambda1, b0 - k.powf(1.5) / m),
        (e.lambda2, b0 + k.powf(1.5) / m),
        (e.e1 / ui, 1.0 / (k * k) + 3.0 * b0 * k.powf(-1.5) / m),
        (e.e2 / ui, 1.0 / (k * k) - 3.0 * b0 * k.powf(-1.5) / m),
        (e.e1 / e.e2, 1.0 + 6.0 * b0 * sk / m),
        (us / ui, b0 / (k * k)),
        (vs / ui, -1.0 / (k * k)),
        ((us + e.lambda1 * vs) / c, 1.0 / sk),
        ((us + e.lambda2 * vs) / c, -1.0 / sk),
        (tus / ui, -2.0 * b0 / (k * k)),
        (tvs / ui, (1.0 - b0 * b0) / (k * k)),
        (det2(e.r1, e.r2) / m, 2.0 * c * c / k.powf(2.5)),
        (bg.cone_state().u / ui, 1.0 / k),
        (bg.s0_offset, 0.0),
    ];
    Ok(EXPANSION_QUANTITIES
        .iter()
        .zip(rows)
        .map(|(q, (measured, predicted))| ExpansionRow {
            mach: m,
            quantity: (*q).to_string(),
            measured,
            predicted,
            residual: measured - predicted,
        })
        .collect())
}

/// Runs the background solve at each Mach number and tabulates measured
/// versus predicted leading-order values.
pub fn expansion_report(b0: f64, c: f64, machs: &[f64]) -> Result<ExpansionReport> {
    let mut rows = Vec::new();
    for &m in machs {
        let p = GasParams::new(c, m * c)?;
        let bg = shoot_background(b0, &p)?;
        rows.extend(expansion_rows(&bg)?);
    }
    Ok(ExpansionReport { b0, c, rows })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rhs_example_and_identity() {
        let p = GasParams::new(1.0, 10.0).unwrap();
        let r = ode_rhs(-0.6, FlowState::new(3.0, -1.0), &p).unwrap();
        assert!((r[0] + 1.0 / 0.72).abs() < 1e-13);
        assert!((r[1] + 1.0 / (0.6 * 0.72)).abs() < 1e-13);
        assert!((r[0] + (-0.6) * r[1]).abs() < 1e-15);
        assert_eq!(ode_rhs(-0.3, FlowState::new(3.0, 0.0), &p).unwrap(), [0.0, 0.0]);
    }

    #[test]
    fn psi_identity_and_reversibility() {
        let p = GasParams::new(1.0, 10.0).unwrap();
        let u0 = FlowState::new(8.0, -4.1);
        assert_eq!(integrate_psi(0.0, -0.5, u0, &p).unwrap(), u0);
        let a = integrate_psi(0.01, -0.5, u0, &p).unwrap();
        let back = integrate_psi(-0.01, -0.49, a, &p).unwrap();
        assert!((back - u0).norm() < 1e-8 * p.u_inf);
    }

    #[test]
    fn background_m10_within_attachment_band() {
        let p = GasParams::new(1.0, 10.0).unwrap();
        let bg = shoot_background(-0.5, &p).unwrap();
        assert!(bg.boundary_residual <= 1e-8);
        assert!(bg.s0_offset < 0.0 && bg.s0_offset.abs() < 1e-2);
        assert!(field_invariants(&bg.field, &p).all_ok());
        let end = apple_endpoint(bg.s0, &p).unwrap();
        assert!((end.sigma_e - bg.b0).abs() < 1e-6);
    }

    #[test]
    fn background_m50_resolves_exponential_layer() {
        let p = GasParams::new(1.0, 50.0).unwrap();
        let bg = shoot_background(-0.5, &p).unwrap();
        assert!(!bg.degenerate);
        assert!(bg.s0_offset < 0.0 && bg.s0_offset.abs() < 1e-100);
        assert!(field_invariants(&bg.field, &p).all_ok());
    }
}
