//! Rankine–Hugoniot relations of the strong 1-shock from the incoming state,
//! the shock polar `Θ(s)`, its derivative, and the attached-shock solve for a
//! straight boundary.
//!
//! Along the polar the post-shock log-density `L = ln ρ̃` solves the scalar
//! equation `L/(1 − e^{−2L}) = M²s²/(2(1 + s²))`, after which
//! `ũ = u∞(1 + s²e^{−L})/(1 + s²)` and `ṽ = u∞ s(1 − e^{−L})/(1 + s²)` in
//! closed form. Working with `L` instead of `ρ̃` keeps the polar usable at
//! Mach numbers where the density overflows.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gas::{eigen, is_supersonic, FlowState, GasParams};
use crate::numerics::{bisect, illinois, solve2};
use crate::tolerances::{BRACKET_K_DOUBLE_PRIME, BRACKET_K_PRIME};

/// One point of the strong 1-shock polar.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PolarPoint {
    /// Shock slope `dy/dx`.
    pub s: f64,
    /// Post-shock state `Θ(s)`.
    pub state: FlowState,
    /// Post-shock log-density `ln ρ̃`.
    pub log_rho: f64,
    /// Inverse density `1/ρ̃ = e^{−L}` (stays finite when `ρ̃` overflows).
    pub inv_rho: f64,
    /// Whether the density increases across the shock (`ρ̃ > 1`).
    pub admissible: bool,
}

impl PolarPoint {
    /// Post-shock density (may overflow to infinity at very large Mach).
    pub fn rho(&self) -> f64 {
        self.log_rho.exp()
    }

    /// Flow angle `θ(s) = arctan(ṽ/ũ)`.
    pub fn angle(&self) -> f64 {
        self.state.angle()
    }
}

/// Result of the attached-shock solve for a straight boundary of slope `b`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AttachedShock {
    /// Boundary slope.
    pub b: f64,
    /// Polar point at the attached shock slope `s₊`.
    pub point: PolarPoint,
    /// `ln(b − s₊)`, the gap resolved without cancellation.
    pub log_gap: f64,
    /// Bracket factors `(K', K'')` used to seed the search.
    pub bracket: (f64, f64),
    /// Number of decade expansions needed beyond the seed bracket.
    pub expansions: usize,
    /// `ln ρ₊` from the attachment formula `ρ = s(1 + sb)/(s − b)`.
    pub log_rho_formula: f64,
    /// `u∞/(1 + b s₊)`, the closed-form post-shock axial speed.
    pub u_formula: f64,
    /// Scaled residuals of mass, tangential, attachment and Bernoulli relations.
    pub residuals: [f64; 4],
}

impl AttachedShock {
    /// Attached shock slope `s₊`.
    pub fn s(&self) -> f64 {
        self.point.s
    }
}

/// Polar log-density `L(s)` on the branch through `U∞`: the nontrivial root of
/// `L/(1 − e^{−2L}) = R`, `R = M²s²/(2(1+s²))`. Positive exactly when
/// `s < λ₁(U∞)`; the root is negative for weaker slopes (expansive branch).
pub fn polar_log_density(s: f64, p: &GasParams) -> Result<f64> {
    if !(s.is_finite() && s < 0.0) {
        return Err(Error::OffPolar(format!("shock slope must be negative and finite, got {s}")));
    }
    let m = p.mach();
    let r = m * m * s * s / (2.0 * (1.0 + s * s));
    let f = |l: f64| {
        if l.abs() < 1e-6 {
            0.5 + 0.5 * l + l * l / 6.0 - r
        } else {
            l / (-(-2.0 * l).exp_m1()) - r
        }
    };
    if (r - 0.5).abs() < 1e-15 {
        return Ok(0.0);
    }
    let (lo, hi) = if r > 0.5 {
        (r - 0.5, r)
    } else {
        let mut lo = -1.0;
        let mut guard = 0;
        while f(lo) >= 0.0 {
            lo *= 2.0;
            guard += 1;
            if guard > 60 {
                return Err(Error::OffPolar(format!("no polar root for s = {s}")));
            }
        }
        (lo, 0.0)
    };
    if f(lo) == 0.0 {
        return Ok(lo);
    }
    if f(hi) == 0.0 {
        return Ok(hi);
    }
    let root = illinois(f, lo, hi, 1e-15 * hi.abs().max(lo.abs()).max(1.0), 200);
    if !root.is_finite() {
        return Err(Error::OffPolar(format!("polar root did not converge for s = {s}")));
    }
    Ok(root)
}

/// Polar point `Θ(s)` from the closed forms in the log-density.
pub fn theta_of_s(s: f64, p: &GasParams) -> Result<PolarPoint> {
    let l = polar_log_density(s, p)?;
    let inv_rho = (-l).exp();
    let den = 1.0 + s * s;
    let u = p.u_inf * (1.0 + s * s * inv_rho) / den;
    let v = p.u_inf * s * (-(-l).exp_m1()) / den;
    Ok(PolarPoint { s, state: FlowState::new(u, v), log_rho: l, inv_rho, admissible: l > 0.0 })
}

/// Scaled residuals of the three polar relations at a polar point:
/// mass `(ũs − ṽ) − u∞ s/ρ̃`, tangential `ũ + ṽs − u∞` (both over `u∞`), and
/// Bernoulli `((q² − u∞²)/(2c²) + ln ρ̃)·2/M²`.
pub fn rh_residuals(p: &GasParams, pt: &PolarPoint) -> [f64; 3] {
    let (u, v, s) = (pt.state.u, pt.state.v, pt.s);
    let ui = p.u_inf;
    let mass = ((u * s - v) - ui * s * pt.inv_rho) / ui;
    let tangential = (u + v * s - ui) / ui;
    let q = pt.state.speed();
    let m2 = p.mach() * p.mach();
    let bern = ((q - ui) * (q + ui) / (2.0 * p.c * p.c) + pt.log_rho) * 2.0 / m2;
    [mass.abs(), tangential.abs(), bern.abs()]
}

/// Lax ordering of a polar point: `λ₁(Θ) < s < λ₂(Θ)` and `s < λ₁(U∞)`.
/// Returns `false` when the post-shock state is outside the hyperbolic region.
pub fn is_lax_admissible(p: &GasParams, pt: &PolarPoint) -> bool {
    if !is_supersonic(p, pt.state) {
        return false;
    }
    let (Ok(post), Ok(inc)) = (eigen(p, pt.state), eigen(p, p.incoming())) else {
        return false;
    };
    post.lambda1 < pt.s && pt.s < post.lambda2 && pt.s < inc.lambda1
}

/// Derivative `Θ_s(s) = (ũ_s, ṽ_s)` from the differentiated polar relations,
/// solved by Cramer's rule (velocity units per unit slope).
pub fn theta_s_derivative(s: f64, p: &GasParams) -> Result<[f64; 2]> {
    let pt = theta_of_s(s, p)?;
    theta_s_at(p, &pt)
}

/// [`theta_s_derivative`] at an already computed polar point.
pub fn theta_s_at(p: &GasParams, pt: &PolarPoint) -> Result<[f64; 2]> {
    let (u, v, s) = (pt.state.u, pt.state.v, pt.s);
    let ui = p.u_inf;
    let c2 = p.c * p.c;
    // s ũ − ṽ = u∞ s/ρ̃ exactly on the polar.
    let jump = ui * s * pt.inv_rho;
    let a11 = u * jump / c2 - s;
    let a12 = 1.0 + v * jump / c2;
    let (a21, a22) = (-1.0, -s);
    let b1 = u / ui - pt.inv_rho;
    let b2 = v / ui;
    let (x1, x2) = solve2(a11, a12, a21, a22, b1, b2).ok_or(Error::SingularSystem("polar derivative"))?;
    Ok([x1 * ui, x2 * ui])
}

/// Attachment function `φ(s, b) = ½((1+b²)/(1+bs)² − 1) + ln(s(1+bs)/(s−b))/M²`.
pub fn phi(s: f64, b: f64, p: &GasParams) -> Result<f64> {
    let arg = (s / (s - b)) * (1.0 + b * s);
    if !(s < b && b < 0.0) || 1.0 + b * s == 0.0 || !(arg > 0.0) || !arg.is_finite() {
        return Err(Error::OffPolar(format!("attachment function undefined at s = {s}, b = {b}")));
    }
    let m2 = p.mach() * p.mach();
    Ok(0.5 * ((1.0 + b * b) / (1.0 + b * s).powi(2) - 1.0) + arg.ln() / m2)
}

/// `φ` as a function of `ln t` with `t = b − s > 0`; free of the cancellation
/// in `s − b` when the root is exponentially close to `b`.
pub fn phi_log_gap(log_t: f64, b: f64, p: &GasParams) -> f64 {
    let t = log_t.exp();
    let s = b - t;
    let one_bs = 1.0 + b * s;
    let m2 = p.mach() * p.mach();
    0.5 * ((1.0 + b * b) / (one_bs * one_bs) - 1.0) + ((-s * one_bs).ln() - log_t) / m2
}

/// Density of the attached flow from the attachment relation, `s(1+sb)/(s−b)`.
pub fn attached_density_formula(s: f64, b: f64) -> f64 {
    s * (1.0 + s * b) / (s - b)
}

/// Exponent `m = b²/(2(1+b²))` of the attachment gap `b − s₊ ~ e^{−mM²}`.
pub fn attachment_exponent(b: f64) -> f64 {
    b * b / (2.0 * (1.0 + b * b))
}

/// Attached shock for a straight boundary of slope `b < 0`: the root of
/// `φ(·, b)` in the near-`b` bracket `b − K'e^{−mM²} < s < b − K''e^{−mM²}`,
/// found by bisection in `ln(b − s)`, with the post-shock state taken on the
/// polar.
pub fn solve_attached_shock(b: f64, p: &GasParams) -> Result<AttachedShock> {
    if !(b < 0.0 && b.is_finite()) {
        return Err(Error::InvalidParams(format!("boundary slope must be negative, got {b}")));
    }
    let m2 = p.mach() * p.mach();
    let mexp = attachment_exponent(b);
    let f = |lt: f64| phi_log_gap(lt, b, p);
    let mut lo = BRACKET_K_DOUBLE_PRIME.ln() - mexp * m2;
    let mut hi = BRACKET_K_PRIME.ln() - mexp * m2;
    // Far end of the admissible region s ≥ 5b, i.e. t ≤ 4|b|.
    let hi_cap = (4.0 * b.abs()).ln();
    hi = hi.min(hi_cap);
    let mut expansions = 0;
    while !(f(lo) > 0.0) {
        lo -= std::f64::consts::LN_10;
        expansions += 1;
        if expansions > 40 || lo < -745.0 {
            return Err(Error::NoAttachedShock { b, mach: p.mach() });
        }
    }
    while !(f(hi) < 0.0) {
        if hi >= hi_cap {
            return Err(Error::NoAttachedShock { b, mach: p.mach() });
        }
        hi = (hi + std::f64::consts::LN_10).min(hi_cap);
        expansions += 1;
    }
    if lo >= hi {
        return Err(Error::NoAttachedShock { b, mach: p.mach() });
    }
    let log_t = bisect(f, lo, hi, 1e-15 * lo.abs().max(1.0));
    let t = log_t.exp();
    let s = b - t;
    let point = theta_of_s(s, p)?;
    let st = point.state;
    let ui = p.u_inf;
    let rh = rh_residuals(p, &point);
    let attach = (st.v - b * st.u).abs() / ui;
    let log_rho_formula = (-s * (1.0 + s * b)).ln() - log_t;
    Ok(AttachedShock {
        b,
        point,
        log_gap: log_t,
        bracket: (BRACKET_K_PRIME, BRACKET_K_DOUBLE_PRIME),
        expansions,
        log_rho_formula,
        u_formula: ui / (1.0 + b * s),
        residuals: [rh[0], rh[1], attach, rh[2]],
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(m: f64) -> GasParams {
        GasParams::new(1.0, m).unwrap()
    }

    #[test]
    fn density_formula_example() {
        assert!((attached_density_formula(-1.0, -0.5) - 3.0).abs() < 1e-15);
    }

    #[test]
    fn polar_residuals_small_and_admissible() {
        let p = params(10.0);
        for &s in &[-0.2, -0.5, -0.9, -2.0] {
            let pt = theta_of_s(s, &p).unwrap();
            assert!(pt.admissible);
            let r = rh_residuals(&p, &pt);
            assert!(r.iter().all(|x| *x < 1e-12), "{r:?}");
        }
        // Weaker than the Mach line: expansive, inadmissible branch.
        let pt = theta_of_s(-0.05, &p).unwrap();
        assert!(!pt.admissible && pt.log_rho < 0.0);
    }

    #[test]
    fn polar_tends_to_incoming_at_mach_line() {
        let p = params(10.0);
        let lam = -1.0 / 99f64.sqrt();
        let pt = theta_of_s(lam * (1.0 + 1e-9), &p).unwrap();
        assert!((pt.state.u - p.u_inf).abs() < 1e-6 && pt.state.v.abs() < 1e-6);
        assert!((pt.rho() - 1.0).abs() < 1e-6);
    }

    #[test]
    fn polar_derivative_matches_finite_difference() {
        for m in [3.0, 10.0, 20.0] {
            let p = params(m);
            for &s in &[-0.4, -0.5, -0.8] {
                let d = theta_s_derivative(s, &p).unwrap();
                let h = 1e-6;
                let a = theta_of_s(s + h, &p).unwrap().state;
                let b = theta_of_s(s - h, &p).unwrap().state;
                let fd = [(a.u - b.u) / (2.0 * h), (a.v - b.v) / (2.0 * h)];
                for k in 0..2 {
                    assert!((d[k] - fd[k]).abs() <= 1e-5 * d[k].abs().max(1e-3 * p.u_inf), "M={m} s={s} {d:?} {fd:?}");
                }
            }
        }
    }

    #[test]
    fn attached_shock_m8_lies_in_seed_bracket() {
        let p = params(8.0);
        let a = solve_attached_shock(-0.5, &p).unwrap();
        let scale = (-0.1f64 * 64.0).exp();
        let gap = -0.5 - a.s();
        assert!(gap > 0.01 * scale && gap < 10.0 * scale);
        assert!(a.residuals.iter().all(|r| *r < 1e-10), "{:?}", a.residuals);
        assert!((a.point.state.v / a.point.state.u + 0.5).abs() < 1e-8);
    }

    #[test]
    fn phi_blows_up_at_both_ends() {
        let p = params(8.0);
        assert!(phi(-0.5 - 1e-15, -0.5, &p).unwrap() > 0.3);
        assert!(phi(-1e200, -0.5, &p).unwrap() > 5.0);
        assert!(phi(-0.4, -0.5, &p).is_err());
    }
}
