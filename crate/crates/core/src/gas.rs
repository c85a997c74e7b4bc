//! Isothermal gas model: Bernoulli closure, conservative fluxes and the
//! eigenstructure of the steady 2×2 system.
//!
//! The state is the velocity pair `(u, v)`; the density is always recomputed
//! from the Bernoulli law `ρ = exp((u∞² − u² − v²)/(2c²))` with `ρ∞ = 1`,
//! never stored. At large Mach numbers `ρ` overflows quickly, so the module
//! also exposes [`log_density`] and the overflow-free [`density_ratio`].

use serde::{Deserialize, Serialize};
use std::ops::{Add, Mul, Neg, Sub};

use crate::error::{Error, Result};
use crate::tolerances::{FD_RELATIVE_STEP, SUPERSONIC_GUARD};

/// Sound speed and incoming speed; the incoming density is fixed to one.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GasParams {
    /// Sound speed (velocity units).
    pub c: f64,
    /// Incoming axial speed (velocity units).
    pub u_inf: f64,
}

impl GasParams {
    /// Incoming density, fixed by the scaling of the problem.
    pub const RHO_INF: f64 = 1.0;

    /// Validated constructor: requires `c > 0` and a supersonic free stream.
    pub fn new(c: f64, u_inf: f64) -> Result<Self> {
        if !(c.is_finite() && c > 0.0) {
            return Err(Error::InvalidParams(format!("sound speed c = {c} must be positive")));
        }
        if !(u_inf.is_finite() && u_inf > c) {
            return Err(Error::InvalidParams(format!("incoming flow must be supersonic: u_inf = {u_inf}, c = {c}")));
        }
        Ok(Self { c, u_inf })
    }

    /// Convenience constructor from a Mach number with `c = 1`.
    pub fn from_mach(mach: f64) -> Result<Self> {
        Self::new(1.0, mach)
    }

    /// Free-stream Mach number `u∞/c`.
    pub fn mach(&self) -> f64 {
        self.u_inf / self.c
    }

    /// The incoming state `U∞ = (u∞, 0)`.
    pub fn incoming(&self) -> FlowState {
        FlowState::new(self.u_inf, 0.0)
    }
}

/// Velocity pair `(u, v)`: axial and radial components.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct FlowState {
    /// Axial velocity.
    pub u: f64,
    /// Radial velocity.
    pub v: f64,
}

impl FlowState {
    /// Builds a state from its components.
    pub const fn new(u: f64, v: f64) -> Self {
        Self { u, v }
    }

    /// Speed `q = √(u² + v²)`.
    pub fn speed(&self) -> f64 {
        self.u.hypot(self.v)
    }

    /// Local Mach number `q/c`.
    pub fn mach(&self, c: f64) -> f64 {
        self.speed() / c
    }

    /// Flow angle `θ = arctan(v/u)`.
    pub fn angle(&self) -> f64 {
        self.v.atan2(self.u)
    }

    /// Euclidean norm of the state viewed as a vector.
    pub fn norm(&self) -> f64 {
        self.speed()
    }

    /// Dot product with a 2-vector.
    pub fn dot(&self, w: [f64; 2]) -> f64 {
        self.u * w[0] + self.v * w[1]
    }

    /// `self + t·w` for a direction `w`.
    pub fn offset(&self, t: f64, w: [f64; 2]) -> Self {
        Self::new(self.u + t * w[0], self.v + t * w[1])
    }

    /// Both components finite.
    pub fn is_finite(&self) -> bool {
        self.u.is_finite() && self.v.is_finite()
    }
}

impl Add for FlowState {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        Self::new(self.u + o.u, self.v + o.v)
    }
}

impl Sub for FlowState {
    type Output = Self;
    fn sub(self, o: Self) -> Self {
        Self::new(self.u - o.u, self.v - o.v)
    }
}

impl Mul<f64> for FlowState {
    type Output = Self;
    fn mul(self, t: f64) -> Self {
        Self::new(self.u * t, self.v * t)
    }
}

impl Neg for FlowState {
    type Output = Self;
    fn neg(self) -> Self {
        Self::new(-self.u, -self.v)
    }
}

/// Characteristic data of the steady system at one state.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EigenData {
    /// Slope of the 1-characteristic.
    pub lambda1: f64,
    /// Slope of the 2-characteristic.
    pub lambda2: f64,
    /// Right eigenvector of the first family, `e₁(−λ₁, 1)`.
    pub r1: [f64; 2],
    /// Right eigenvector of the second family, `e₂(−λ₂, 1)`.
    pub r2: [f64; 2],
    /// Genuine-nonlinearity normalization of the first family.
    pub e1: f64,
    /// Genuine-nonlinearity normalization of the second family.
    pub e2: f64,
    /// Mach angle `arcsin(1/M)`.
    pub theta_ma: f64,
}

impl EigenData {
    /// Eigenvalue of family `j ∈ {1, 2}`.
    pub fn lambda(&self, j: u8) -> f64 {
        if j == 1 {
            self.lambda1
        } else {
            self.lambda2
        }
    }

    /// Right eigenvector of family `j ∈ {1, 2}`.
    pub fn r(&self, j: u8) -> [f64; 2] {
        if j == 1 {
            self.r1
        } else {
            self.r2
        }
    }

    /// Normalization factor of family `j ∈ {1, 2}`.
    pub fn e(&self, j: u8) -> f64 {
        if j == 1 {
            self.e1
        } else {
            self.e2
        }
    }
}

/// Conservative fluxes `W`, `H` and the axisymmetric source `G` at one point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Fluxes {
    /// `W(U) = (ρu, v)`.
    pub w: [f64; 2],
    /// `H(U) = (ρv, −u)`.
    pub h: [f64; 2],
    /// `G(U, y) = (−ρv/y, 0)`.
    pub g: [f64; 2],
}

/// `ln ρ = (u∞² − q²)/(2c²)`, computed as `(u∞ − q)(u∞ + q)/(2c²)`.
pub fn log_density(p: &GasParams, s: FlowState) -> f64 {
    let q = s.speed();
    (p.u_inf - q) * (p.u_inf + q) / (2.0 * p.c * p.c)
}

/// Bernoulli density `ρ = exp((u∞² − u² − v²)/(2c²))`.
pub fn density(p: &GasParams, s: FlowState) -> f64 {
    log_density(p, s).exp()
}

/// `ρ(a)/ρ(b)` without forming either density (no overflow at large Mach).
pub fn density_ratio(p: &GasParams, a: FlowState, b: FlowState) -> f64 {
    log_density_difference(p, a, b).exp()
}

/// `ln ρ(a) − ln ρ(b)`, evaluated from velocity differences.
pub fn log_density_difference(p: &GasParams, a: FlowState, b: FlowState) -> f64 {
    ((b.u - a.u) * (b.u + a.u) + (b.v - a.v) * (b.v + a.v)) / (2.0 * p.c * p.c)
}

/// Fluxes of the steady system at radial coordinate `y`.
pub fn fluxes(p: &GasParams, s: FlowState, y: f64) -> Result<Fluxes> {
    if y == 0.0 {
        return Err(Error::AxisSource);
    }
    let rho = density(p, s);
    Ok(Fluxes { w: [rho * s.u, s.v], h: [rho * s.v, -s.u], g: [-rho * s.v / y, 0.0] })
}

/// Whether the state lies in the strictly hyperbolic region `u > c(1 + guard)`.
pub fn is_supersonic(p: &GasParams, s: FlowState) -> bool {
    s.u.is_finite() && s.v.is_finite() && s.u > p.c * (1.0 + SUPERSONIC_GUARD)
}

fn require_supersonic(p: &GasParams, s: FlowState) -> Result<()> {
    if is_supersonic(p, s) {
        Ok(())
    } else {
        Err(Error::NotSupersonic { u: s.u, c: p.c })
    }
}

/// Eigenvalues and normalized right eigenvectors from the rational closed forms
/// `λ_j = (uv + (−1)^j c√(q²−c²))/(u²−c²)` and
/// `e_j = √(M²−1)(u√(M²−1) + (−1)^{j+1}v)³/(c²M⁶)`.
pub fn eigen(p: &GasParams, s: FlowState) -> Result<EigenData> {
    require_supersonic(p, s)?;
    let c = p.c;
    let (u, v) = (s.u, s.v);
    let q2 = u * u + v * v;
    let root = ((q2 - c * c).max(0.0)).sqrt();
    let den = (u - c) * (u + c);
    let lambda1 = (u * v - c * root) / den;
    let lambda2 = (u * v + c * root) / den;
    let m2 = q2 / (c * c);
    let sm = (m2 - 1.0).max(0.0).sqrt();
    let norm = sm / (c * c * m2 * m2 * m2);
    let e1 = norm * (u * sm + v).powi(3);
    let e2 = norm * (u * sm - v).powi(3);
    Ok(EigenData {
        lambda1,
        lambda2,
        r1: [-e1 * lambda1, e1],
        r2: [-e2 * lambda2, e2],
        e1,
        e2,
        theta_ma: (1.0 / m2.sqrt()).asin(),
    })
}

/// Eigenstructure from the trigonometric forms `λ_j = tan(θ + (−1)^j θ_ma)`
/// and `e_j = √(q²−c²) cos³(θ + (−1)^j θ_ma)`; agrees with [`eigen`] to round-off.
pub fn eigen_angular(p: &GasParams, s: FlowState) -> Result<EigenData> {
    require_supersonic(p, s)?;
    let q = s.speed();
    let theta = s.angle();
    let theta_ma = (p.c / q).asin();
    let amp = ((q - p.c) * (q + p.c)).sqrt();
    let a1 = theta - theta_ma;
    let a2 = theta + theta_ma;
    let (lambda1, lambda2) = (a1.tan(), a2.tan());
    let (e1, e2) = (amp * a1.cos().powi(3), amp * a2.cos().powi(3));
    Ok(EigenData { lambda1, lambda2, r1: [-e1 * lambda1, e1], r2: [-e2 * lambda2, e2], e1, e2, theta_ma })
}

/// `cos(θ + (−1)^j θ_ma)` in the rational form `(u√(M²−1) + (−1)^{j+1}v)/(cM²)`.
pub fn characteristic_cosine(p: &GasParams, s: FlowState, j: u8) -> f64 {
    let c = p.c;
    let m2 = (s.u * s.u + s.v * s.v) / (c * c);
    let sm = (m2 - 1.0).max(0.0).sqrt();
    let sign = if j == 1 { 1.0 } else { -1.0 };
    (s.u * sm + sign * s.v) / (c * m2)
}

/// Residuals `|r_j·∇λ_j − 1|` for `j = 1, 2`, with the gradient taken by
/// central differences of relative step `h` (scaled by the speed).
pub fn check_genuine_nonlinearity(p: &GasParams, s: FlowState, h: f64) -> Result<[f64; 2]> {
    let ed = eigen(p, s)?;
    let step = h * s.speed();
    let mut out = [0.0; 2];
    for (idx, j) in [1u8, 2u8].into_iter().enumerate() {
        let lam = |st: FlowState| eigen(p, st).map(|e| e.lambda(j));
        let du = (lam(FlowState::new(s.u + step, s.v))? - lam(FlowState::new(s.u - step, s.v))?) / (2.0 * step);
        let dv = (lam(FlowState::new(s.u, s.v + step))? - lam(FlowState::new(s.u, s.v - step))?) / (2.0 * step);
        let r = ed.r(j);
        out[idx] = (r[0] * du + r[1] * dv - 1.0).abs();
    }
    Ok(out)
}

/// [`check_genuine_nonlinearity`] with the default relative step.
pub fn genuine_nonlinearity_residual(p: &GasParams, s: FlowState) -> Result<[f64; 2]> {
    check_genuine_nonlinearity(p, s, FD_RELATIVE_STEP)
}

/// Determinant `det(a, b) = a₀b₁ − a₁b₀` of two column vectors.
pub fn det2(a: [f64; 2], b: [f64; 2]) -> f64 {
    a[0] * b[1] - a[1] * b[0]
}
