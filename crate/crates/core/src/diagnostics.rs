//! Computable diagnostics of the scheme: interaction coefficients at the
//! boundary and at the leading shock, the contraction product, the weights of
//! the Glimm-type functional, the functional itself on vertical slices, the
//! per-diamond decrease ledger, the shock-angle measure and the asymptotic
//! run summary.
//!
//! Wave strengths are the `λ_j` increments of the Riemann solver, slopes are
//! measured as offsets from the base cone slope `b0`, and mesh curves are
//! approximated by vertical slices `x = x_k+`. Diamond-by-diamond changes are
//! obtained by advancing the curve one diamond at a time from the boundary
//! down to the front, so the per-diamond changes telescope exactly to the
//! slice-to-slice change.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gas::{det2, eigen, eigen_angular, FlowState, GasParams};
use crate::riemann::{solve_boundary_riemann, solve_strong_riemann, wave_curve, WaveKind};
use crate::scheme::{Boundary, BoundarySpec, Cell, EmitterKind, RunOutput, Scheme, SlabRecord};
use crate::selfsim::{shoot_background, BackgroundSolution, SelfSimilarField};
use crate::shock_polar::{theta_of_s, theta_s_derivative};
use crate::tolerances::{
    ACCEPT_DRIFT_MULTIPLIER, DRY_RUN_STEPS, INTERACTION_BOUND_FACTOR, MIN_TAIL_STEPS, WEIGHT_BULK, WEIGHT_K1_FACTOR,
    WEIGHT_K4, WEIGHT_WAVE_CENTER,
};

/// Boundary and front interaction coefficients of a background solution.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InteractionCoefficients {
    /// Free-stream Mach number.
    pub mach: f64,
    /// Cone slope.
    pub b0: f64,
    /// Reflection coefficient of a 2-wave into a 1-wave at the wall.
    pub k_r: f64,
    /// Response of the reflected 1-wave to a wall turning angle.
    pub k_b: f64,
    /// Transmission of a 1-wave through the front into a 2-wave.
    pub k_w: f64,
    /// Change of front slope per incident 1-wave.
    pub k_s: f64,
    /// 2-wave emitted per unit front-ray offset.
    pub mu_w: f64,
    /// Change of front slope per unit front-ray offset.
    pub mu_s: f64,
    /// `|K_r|(|K_w| + |K_s||μ_w|)`.
    pub contraction: f64,
}

/// Reflection coefficients at a wall of angle `theta0` for the wall state `u_b`.
///
/// Returns `(K_r, K_b)` with `K_r = cos²(θ0+θ_ma)/cos²(θ0−θ_ma)` and
/// `K_b = (u cosθ0 + v sinθ0)/(r1·n0)`, `n0 = (−sinθ0, cosθ0)`.
pub fn boundary_reflection_coeff(u_b: FlowState, theta0: f64, p: &GasParams) -> Result<(f64, f64)> {
    let e = eigen_angular(p, u_b)?;
    let k_r = ((theta0 + e.theta_ma).cos() / (theta0 - e.theta_ma).cos()).powi(2);
    let n0 = [-theta0.sin(), theta0.cos()];
    let r1n = e.r1[0] * n0[0] + e.r1[1] * n0[1];
    let k_b = (u_b.u * theta0.cos() + u_b.v * theta0.sin()) / r1n;
    Ok((k_r, k_b))
}

/// Reflection coefficient as the eigenvector ratio `(r2·n0)/(r1·n0)`, the
/// linearized response `δ1/β2` of the wall condition `U·n0 = 0`.
pub fn reflection_coefficient_eigen(u_b: FlowState, theta0: f64, p: &GasParams) -> Result<f64> {
    let e = eigen(p, u_b)?;
    let n0 = [-theta0.sin(), theta0.cos()];
    let dot = |r: [f64; 2]| r[0] * n0[0] + r[1] * n0[1];
    Ok(dot(e.r2) / dot(e.r1))
}

/// Reflection coefficient by central differences of the nonlinear boundary
/// Riemann solver: an incoming 2-wave of strength `±h` below the wall state
/// `u_b` and the strength of the reflected 1-wave.
pub fn reflection_coefficient_fd(u_b: FlowState, sigma_wall: f64, h: f64, p: &GasParams) -> Result<f64> {
    let response = |beta: f64| -> Result<f64> {
        let below = wave_curve(2, -beta, u_b, p)?;
        Ok(solve_boundary_riemann(below, sigma_wall, p)?.strength(1))
    };
    Ok((response(h)? - response(-h)?) / (2.0 * h))
}

/// Front coefficients `(K_w, K_s, μ_w, μ_s)` at the attached shock of `bg`.
///
/// Solving `δ·r1 + Δσ·ϖ_σ = Θ_s ds + ε2 r2` by Cramer's rule gives
/// `K_w = det(Θ_s, r1)/det(Θ_s, r2)`, `K_s = det(r1, r2)/det(Θ_s, r2)`,
/// `μ_w = det(Θ_s, ϖ_σ)/det(Θ_s, r2)` and `μ_s = det(ϖ_σ, r2)/det(Θ_s, r2)`,
/// with eigen data at `Θ(s0)`.
pub fn front_coefficients(bg: &BackgroundSolution) -> Result<[f64; 4]> {
    let p = &bg.params;
    let e = eigen(p, bg.shock_state())?;
    let ts = theta_s_derivative(bg.s0, p)?;
    let ws = bg.sigma_derivatives_at_shock()?;
    let den = det2(ts, e.r2);
    if den == 0.0 || !den.is_finite() {
        return Err(Error::SingularSystem("front coefficients"));
    }
    Ok([det2(ts, e.r1) / den, det2(e.r1, e.r2) / den, det2(ts, ws) / den, det2(ws, e.r2) / den])
}

/// All interaction coefficients of the background `bg`.
pub fn interaction_coefficients(bg: &BackgroundSolution) -> Result<InteractionCoefficients> {
    let p = &bg.params;
    let (k_r, k_b) = boundary_reflection_coeff(bg.cone_state(), bg.b0.atan(), p)?;
    let [k_w, k_s, mu_w, mu_s] = front_coefficients(bg)?;
    Ok(InteractionCoefficients {
        mach: p.mach(),
        b0: bg.b0,
        k_r,
        k_b,
        k_w,
        k_s,
        mu_w,
        mu_s,
        contraction: k_r.abs() * (k_w.abs() + k_s.abs() * mu_w.abs()),
    })
}

/// Coefficient `2b0⁻²(1+b0²)(8b0⁴+2b0²+1)` of the predicted first-order
/// contraction gap.
pub fn contraction_gap_coefficient(b0: f64) -> f64 {
    let b2 = b0 * b0;
    2.0 / b2 * (1.0 + b2) * (8.0 * b2 * b2 + 2.0 * b2 + 1.0)
}

/// Comparison of the contraction product with its first-order prediction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ContractionReport {
    /// Free-stream Mach number.
    pub mach: f64,
    /// Cone slope.
    pub b0: f64,
    /// `|K_r|(|K_w| + |K_s||μ_w|)`.
    pub product: f64,
    /// `1 − 2b0⁻²(1+b0²)(8b0⁴+2b0²+1)/M∞`.
    pub predicted: f64,
    /// `product − predicted`.
    pub gap: f64,
    /// `(1 − product)·M∞`.
    pub scaled_gap: f64,
    /// Predicted limit of `scaled_gap`.
    pub predicted_scaled_gap: f64,
    /// `product < 1`.
    pub below_one: bool,
}

/// Evaluates the contraction product against its first-order prediction.
pub fn contraction_check(coeffs: &InteractionCoefficients) -> ContractionReport {
    let a = contraction_gap_coefficient(coeffs.b0);
    let predicted = 1.0 - a / coeffs.mach;
    ContractionReport {
        mach: coeffs.mach,
        b0: coeffs.b0,
        product: coeffs.contraction,
        predicted,
        gap: coeffs.contraction - predicted,
        scaled_gap: (1.0 - coeffs.contraction) * coeffs.mach,
        predicted_scaled_gap: a,
        below_one: coeffs.contraction < 1.0,
    }
}

/// Weights of the Glimm-type functional.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FunctionalWeights {
    /// Weight of the corner variation `L1`.
    pub k1: f64,
    /// Weight of the 2-wave variation.
    pub k2: f64,
    /// Weight of the shock angle `Ls`.
    pub k3: f64,
    /// Weight of the center variation `Lc`.
    pub k4: f64,
    /// Weight of the interaction potential.
    pub k: f64,
    /// Weight of the 1-wave/center coupling.
    pub k_wc1: f64,
    /// Weight of the 2-wave/center coupling.
    pub k_wc2: f64,
    /// Weight of the center/center coupling.
    pub k_ce: f64,
    /// `ϱ` in `σ_* = s0 − ϱ`.
    pub rho_star: f64,
    /// `C1` in `σ* = b0 + C1·W`.
    pub c1: f64,
    /// `σ_* − b0`.
    pub sigma_lower_offset: f64,
    /// `σ* − b0`.
    pub sigma_upper_offset: f64,
}

impl FunctionalWeights {
    /// The three strict inequalities `|K_r| − K2`, `K2|μ_w| − K3` and
    /// `K2|K_w| + K3|K_s| − 1`, all negative for admissible weights.
    pub fn inequalities(&self, c: &InteractionCoefficients) -> [f64; 3] {
        [c.k_r.abs() - self.k2, self.k2 * c.mu_w.abs() - self.k3, self.k2 * c.k_w.abs() + self.k3 * c.k_s.abs() - 1.0]
    }
}

/// Selects functional weights for the coefficients `c`, the discretized
/// boundary and the background front offset `d = s0 − b0`.
///
/// `K2` and `K3` are the midpoints of their admissible intervals; `K4`, `K`,
/// `K_wc` and `K_ce` are fixed. The offsets `g = σ* − b0 = C1·W` and
/// `ϱ = s0 − σ_*` are the solution of the two one-diamond balances
///
/// * front: a 1-wave absorbed at the front and re-emitted as a 2-wave of
///   strength `|K_w||α|` must lower `K·Q`: `ϱ = |K_w|(g + |d|) + 2a`,
/// * wall: a 2-wave absorbed at the wall and reflected as a 1-wave of
///   strength `|K_r||β|` must lower `K·Q`: `g = |K_r|(ϱ + |d|) + 2a`,
///
/// with `a = 1/(4K)`, which is solvable because `|K_r||K_w| < 1` whenever
/// the contraction product is below one. `C1` is the smallest power of two
/// (at least one) with `C1·W ≥ g` and `C1·W ≥ max q_k`; a straight cone has
/// `σ* = b0`. `K1` dominates everything a corner creates: the reflected
/// 1-wave with its potential, and the center jump `|ΔX*| ≤ C_X(1+|b_k|)|ω_k|`
/// with its variation and potential.
pub fn select_weights(c: &InteractionCoefficients, boundary: &Boundary, s0_offset: f64) -> Result<FunctionalWeights> {
    if !(c.contraction < 1.0) {
        return Err(Error::NoValidWeights(c.contraction));
    }
    let k2 = 0.5 * (c.k_r.abs() + 1.0 / (c.k_w.abs() + c.k_s.abs() * c.mu_w.abs()));
    let k3 = 0.5 * (k2 * c.mu_w.abs() + (1.0 - k2 * c.k_w.abs()) / c.k_s.abs());
    let k4 = WEIGHT_K4;
    let k = 8.0 * k4;
    let a = 1.0 / (4.0 * k);
    let d = s0_offset.abs();
    let (kr, kw) = (c.k_r.abs(), c.k_w.abs());
    let g_needed = (kr * (kw + 1.0) * d + 2.0 * a * (1.0 + kr)) / (1.0 - kr * kw);
    let w = boundary.weighted_variation;
    let max_q = boundary.q.iter().fold(0.0f64, |acc, q| acc.max(*q));
    let mut c1 = 1.0;
    if w > 0.0 {
        while (c1 * w < g_needed || c1 * w < max_q) && c1 < 1e300 {
            c1 *= 2.0;
        }
    }
    let g = c1 * w;
    let rho_star = kw * (g + d) + 2.0 * a;
    let c_x = corner_center_ratio(boundary);
    let k1 = WEIGHT_K1_FACTOR
        * ((c.k_b.abs() + 1.0) * (1.0 + k * (rho_star + d))
            + c_x * (k4 * (1.0 + 1.0 / boundary.x0) + k * (g + rho_star)));
    let weights = FunctionalWeights {
        k1,
        k2,
        k3,
        k4,
        k,
        k_wc1: WEIGHT_WAVE_CENTER,
        k_wc2: WEIGHT_WAVE_CENTER,
        k_ce: WEIGHT_BULK,
        rho_star,
        c1,
        sigma_lower_offset: s0_offset - rho_star,
        sigma_upper_offset: g,
    };
    if weights.inequalities(c).iter().any(|v| !(*v < 0.0)) {
        return Err(Error::NoValidWeights(c.contraction));
    }
    Ok(weights)
}

/// `C_X = max_k |X*_k − X*_{k−1}|/((1+|b_k|)|ω_k|)` over the corners of the
/// boundary (zero without corners).
pub fn corner_center_ratio(boundary: &Boundary) -> f64 {
    let mut prev = 0.0;
    let mut ratio: f64 = 0.0;
    for (k, (om, c)) in boundary.omega.iter().zip(&boundary.centers).enumerate() {
        let weight = (1.0 + boundary.ordinate[k].abs()) * om.abs();
        if weight > 0.0 {
            ratio = ratio.max((c - prev).abs() / weight);
        }
        prev = *c;
    }
    ratio
}

/// One entry of a mesh curve: a weak wave or a jump of the center `X*`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurveItem {
    /// Wave family (1 or 2), or 0 for a center jump.
    pub family: u8,
    /// `|α|` for waves, `|X*₊ − X*₋|` for center jumps.
    pub size: f64,
    /// Whether the wave is a (weak) shock.
    pub shock: bool,
    /// `σ_α − b0` of the issuing grid point, measured from the base center
    /// (`σ = y/x`).
    pub sigma_offset: f64,
    /// `x` of the issuing grid point.
    pub x: f64,
}

/// The Glimm-type functional and its components on one slice.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct GlimmReport {
    /// Step index of the slice.
    pub k: usize,
    /// Weak 1-wave variation.
    pub l0_1: f64,
    /// Weak 2-wave variation.
    pub l0_2: f64,
    /// Weighted corner variation downstream of the slice.
    pub l1: f64,
    /// Shock angle.
    pub ls: f64,
    /// Center variation `Σ|ΔX*|(1 + 1/x_α)`.
    pub lc: f64,
    /// Approaching-wave potential.
    pub q0: f64,
    /// 1-wave distance potential.
    pub q1: f64,
    /// 2-wave distance potential.
    pub q2: f64,
    /// Center distance potential.
    pub qc: f64,
    /// Center above 1-wave potential.
    pub qwc1: f64,
    /// Center above 2-wave potential.
    pub qwc2: f64,
    /// Center/center potential.
    pub qce: f64,
    /// Weighted total variation `L`.
    pub l: f64,
    /// Interaction potential `Q`.
    pub q: f64,
    /// `F = L + K·Q`.
    pub f: f64,
    /// Total variation of the cell states, front jump included.
    pub tv: f64,
    /// Total variation of the cell states above the front.
    pub tv_weak: f64,
    /// Center variation `C(x−) = Σ|ΔX*|`.
    pub center_tv: f64,
}

fn approaching(upper: &CurveItem, lower: &CurveItem) -> bool {
    if upper.family == 0 || lower.family == 0 {
        return false;
    }
    (upper.family == 1 && lower.family == 2) || (upper.family == lower.family && (upper.shock || lower.shock))
}

/// Q0 of a top-down ordered list of items.
fn q0_of(items: &[CurveItem]) -> f64 {
    let mut q = 0.0;
    for (i, a) in items.iter().enumerate() {
        for b in &items[i + 1..] {
            if approaching(a, b) {
                q += a.size * b.size;
            }
        }
    }
    q
}

/// Evaluates the functional on a top-down ordered curve with corner term
/// `l1` and shock angle `ls`.
pub fn evaluate_curve(items: &[CurveItem], l1: f64, ls: f64, w: &FunctionalWeights) -> GlimmReport {
    let mut r = GlimmReport { l1, ls, ..GlimmReport::default() };
    let mut centers_above = 0.0;
    for it in items {
        match it.family {
            0 => {
                r.lc += it.size * (1.0 + 1.0 / it.x);
                r.qc += it.size * (it.sigma_offset - w.sigma_lower_offset);
                r.qce += it.size * centers_above;
                r.center_tv += it.size;
                centers_above += it.size;
            }
            1 => {
                r.l0_1 += it.size;
                r.q1 += it.size * (it.sigma_offset - w.sigma_lower_offset);
                r.qwc1 += it.size * centers_above;
            }
            _ => {
                r.l0_2 += it.size;
                r.q2 += it.size * (w.sigma_upper_offset - it.sigma_offset);
                r.qwc2 += it.size * centers_above;
            }
        }
    }
    r.q0 = q0_of(items);
    r.l = r.l0_1 + w.k2 * r.l0_2 + w.k1 * r.l1 + w.k3 * r.ls + w.k4 * r.lc;
    r.q = r.q0 + r.q1 + r.q2 + r.qc + w.k_wc1 * r.qwc1 + w.k_wc2 * r.qwc2 + w.k_ce * r.qce;
    r.f = r.l + w.k * r.q;
    r
}

/// Items issued at one emitter, top-down, each with its position interval
/// `[lo, hi]` at `x_{k+1}`.
fn emitter_items(rec: &SlabRecord, e: usize, b0: f64) -> Vec<(CurveItem, f64, f64)> {
    let em = &rec.emitters[e];
    let sigma_offset = em.eta / rec.x;
    let mut out: Vec<(CurveItem, f64, f64, f64)> = Vec::new();
    for w in &em.fan.waves {
        if w.kind == WaveKind::StrongShock {
            continue;
        }
        let item = CurveItem {
            family: w.family,
            size: w.strength.abs(),
            shock: w.kind == WaveKind::Shock,
            sigma_offset,
            x: rec.x,
        };
        let lo = em.eta + (w.speed_lo - b0) * rec.dx;
        let hi = em.eta + (w.speed_hi - b0) * rec.dx;
        out.push((item, lo.min(hi), lo.max(hi), w.mid_speed()));
    }
    let jump = (em.center_above - em.center_below).abs();
    if jump > 0.0 && em.kind != EmitterKind::Front {
        let pos = em.eta + (em.split - b0) * rec.dx;
        let item = CurveItem { family: 0, size: jump, shock: false, sigma_offset, x: rec.x };
        out.push((item, pos, pos, em.split));
    }
    out.sort_by(|a, b| b.3.total_cmp(&a.3));
    out.into_iter().map(|(i, lo, hi, _)| (i, lo, hi)).collect()
}

/// All items crossing the slice `x = x_k+`, top-down.
pub fn slice_items(rec: &SlabRecord, b0: f64) -> Vec<CurveItem> {
    (0..rec.emitters.len()).flat_map(|e| emitter_items(rec, e, b0).into_iter().map(|t| t.0)).collect()
}

fn cells_total_variation(cells: &[Cell], p: &GasParams) -> (f64, f64) {
    let weak: f64 = cells.windows(2).map(|w| (w[0].state - w[1].state).norm()).sum();
    let front = cells.last().map_or(0.0, |c| (c.state - p.incoming()).norm());
    (weak + front, weak)
}

/// The functional on the slice of `rec`.
pub fn glimm_functional(rec: &SlabRecord, w: &FunctionalWeights, boundary: &Boundary, p: &GasParams) -> GlimmReport {
    let items = slice_items(rec, boundary.b0);
    let mut r = evaluate_curve(&items, boundary.future_variation(rec.k), rec.theta_s, w);
    r.k = rec.k;
    let (tv, tv_weak) = cells_total_variation(&rec.cells, p);
    r.tv = tv;
    r.tv_weak = tv_weak;
    r
}

/// Kind of an interaction diamond.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DiamondKind {
    /// Touches the wall.
    Boundary,
    /// Strictly inside the layer.
    Interior,
    /// Contains the leading shock.
    Front,
}

/// Change of the functional across one diamond.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DiamondRecord {
    /// Step index `k` of the slab feeding the diamond.
    pub k: usize,
    /// Index of the outgoing grid point at `x_{k+1}`.
    pub index: usize,
    /// Diamond kind.
    pub kind: DiamondKind,
    /// `F(J) − F(I)`.
    pub delta_f: f64,
    /// Interaction measure `E(Λ)`.
    pub e: f64,
    /// Whether anything above the tolerance happens in the diamond.
    pub active: bool,
    /// `F(J) − F(I) ≤ −E/4 + tol`.
    pub monotone: bool,
}

/// Functional series and diamond ledger of a run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GlimmAnalysis {
    /// Weights in use.
    pub weights: FunctionalWeights,
    /// One report per slice.
    pub reports: Vec<GlimmReport>,
    /// One record per diamond.
    pub diamonds: Vec<DiamondRecord>,
    /// Per-diamond tolerance.
    pub tolerance: f64,
    /// Number of active diamonds.
    pub active: usize,
    /// Fraction of active diamonds on which the functional decreases (one when none is active).
    pub monotone_fraction: f64,
    /// `Σ E(Λ)` over the run.
    pub sum_e: f64,
    /// `F` on the first slice.
    pub f0: f64,
}

impl GlimmAnalysis {
    /// `Σ E(Λ) ≤ 4F(0) + 1`.
    pub fn interaction_bound_holds(&self) -> bool {
        self.sum_e <= INTERACTION_BOUND_FACTOR * self.f0 + 1.0
    }
}

/// Assigns the items of slab `rec` to the diamonds at `x_{k+1}` delimited by
/// the sample points; rarefactions are split in proportion to their overlap.
fn assign_to_diamonds(rec: &SlabRecord, b0: f64) -> Vec<Vec<CurveItem>> {
    let m = rec.samples.len();
    let mut out = vec![Vec::new(); m + 1];
    // Diamond i spans (samples[i], samples[i−1]]; diamond 0 is above samples[0],
    // diamond m below samples[m−1].
    let upper = |i: usize| if i == 0 { f64::INFINITY } else { rec.samples[i - 1] };
    let lower = |i: usize| if i == m { f64::NEG_INFINITY } else { rec.samples[i] };
    for e in 0..rec.emitters.len() {
        for (item, lo, hi) in emitter_items(rec, e, b0) {
            if hi > lo {
                for (i, bucket) in out.iter_mut().enumerate() {
                    let overlap = hi.min(upper(i)) - lo.max(lower(i));
                    if overlap > 0.0 {
                        bucket.push(CurveItem { size: item.size * overlap / (hi - lo), ..item });
                    }
                }
            } else {
                let i = (0..=m).find(|&i| lo > lower(i)).unwrap_or(m);
                out[i].push(item);
            }
        }
    }
    out
}

/// Items entering and leaving the diamonds between slab `old` and its
/// successor `new`, indexed by the outgoing grid point (0 = wall, last = front).
pub struct DiamondSweep {
    /// Items of `old` assigned to each diamond.
    pub incoming: Vec<Vec<CurveItem>>,
    /// Items issued by each emitter of `new`.
    pub outgoing: Vec<Vec<CurveItem>>,
}

impl DiamondSweep {
    /// Builds the sweep; `None` when the two slabs do not match.
    pub fn new(old: &SlabRecord, new: &SlabRecord, b0: f64) -> Option<Self> {
        let incoming = assign_to_diamonds(old, b0);
        let outgoing: Vec<Vec<CurveItem>> =
            (0..new.emitters.len()).map(|e| emitter_items(new, e, b0).into_iter().map(|t| t.0).collect()).collect();
        (outgoing.len() == incoming.len()).then_some(Self { incoming, outgoing })
    }

    /// Number of diamonds.
    pub fn len(&self) -> usize {
        self.incoming.len()
    }

    /// Whether there is no diamond.
    pub fn is_empty(&self) -> bool {
        self.incoming.is_empty()
    }

    /// The functional on the curve whose first `i` diamonds have been crossed.
    pub fn curve(
        &self,
        i: usize,
        old: &SlabRecord,
        new: &SlabRecord,
        boundary: &Boundary,
        w: &FunctionalWeights,
    ) -> GlimmReport {
        let items: Vec<CurveItem> =
            self.outgoing[..i].iter().chain(self.incoming[i..].iter()).flatten().copied().collect();
        let l1 = boundary.future_variation(if i == 0 { old.k } else { new.k });
        let ls = if i < self.len() { old.theta_s } else { new.theta_s };
        evaluate_curve(&items, l1, ls, w)
    }
}

/// Evaluates the functional on every slice and the decrease across every
/// diamond of a run.
pub fn glimm_series(scheme: &Scheme, run: &RunOutput, w: &FunctionalWeights, tolerance: f64) -> GlimmAnalysis {
    let b0 = scheme.b0();
    let boundary = &scheme.boundary;
    let p = &scheme.params;
    let reports: Vec<GlimmReport> = run.slabs.iter().map(|r| glimm_functional(r, w, boundary, p)).collect();
    let mut diamonds = Vec::new();
    for pair in run.slabs.windows(2) {
        let (old, new) = (&pair[0], &pair[1]);
        let Some(sweep) = DiamondSweep::new(old, new, b0) else { continue };
        let m = sweep.len() - 1;
        let inv_dx = (1.0 / new.x - 1.0 / old.x).abs();
        let mut before = sweep.curve(0, old, new, boundary, w).f;
        for i in 0..=m {
            let after = sweep.curve(i + 1, old, new, boundary, w).f;
            let delta_f = after - before;
            before = after;
            let inc = &sweep.incoming[i];
            let kind = if i == 0 {
                DiamondKind::Boundary
            } else if i == m {
                DiamondKind::Front
            } else {
                DiamondKind::Interior
            };
            let e = match kind {
                DiamondKind::Boundary => {
                    let k1 = new.k.min(boundary.omega.len() - 1);
                    let beta2: f64 = inc.iter().filter(|it| it.family == 2).map(|it| it.size).sum();
                    beta2 + (1.0 + boundary.ordinate[k1].abs()) * boundary.omega[k1].abs()
                }
                DiamondKind::Interior => {
                    let ds_out = new.emitters[i].eta / new.x;
                    let mut e = q0_of(inc);
                    for it in inc {
                        let shift = (ds_out - it.sigma_offset).abs();
                        e += if it.family == 0 { (shift + inv_dx) * it.size } else { shift * it.size };
                    }
                    e
                }
                DiamondKind::Front => {
                    let alpha1: f64 = inc.iter().filter(|it| it.family == 1).map(|it| it.size).sum();
                    q0_of(inc) + alpha1 + front_ray_change(scheme, old, new).abs()
                }
            };
            let active = e > tolerance || delta_f.abs() > tolerance;
            let monotone = delta_f <= -0.25 * e + tolerance;
            diamonds.push(DiamondRecord { k: old.k, index: i, kind, delta_f, e, active, monotone });
        }
    }
    let active: Vec<&DiamondRecord> = diamonds.iter().filter(|d| d.active).collect();
    let monotone_fraction =
        if active.is_empty() { 1.0 } else { active.iter().filter(|d| d.monotone).count() as f64 / active.len() as f64 };
    GlimmAnalysis {
        weights: *w,
        f0: reports.first().map_or(0.0, |r| r.f),
        reports,
        sum_e: diamonds.iter().map(|d| d.e).sum(),
        active: active.len(),
        monotone_fraction,
        diamonds,
        tolerance,
    }
}

/// Per-diamond tolerance: `ACCEPT_DRIFT_MULTIPLIER` times the drift of the
/// functional per step on a straight cone with the same background, mesh and
/// weights — the largest `Σ_Λ |F(J) − F(I)|` over one step, which is made of
/// round-off waves and the self-similar update alone.
pub fn monotonicity_tolerance(scheme: &Scheme, w: &FunctionalWeights) -> Result<f64> {
    let mut config = scheme.config.clone();
    config.dx = Some(scheme.resolution.dx);
    config.dsigma = Some(scheme.resolution.dsigma);
    config.x0 = scheme.resolution.x0;
    let dry = Scheme::with_background(scheme.background.clone(), &BoundarySpec::Straight, config)?;
    let run = dry.run_steps(DRY_RUN_STEPS)?;
    if let Some(e) = run.abort {
        return Err(e);
    }
    let g = glimm_series(&dry, &run, w, 0.0);
    let mut per_step = vec![0.0; run.slabs.len()];
    for d in &g.diamonds {
        per_step[d.k] += d.delta_f.abs();
    }
    Ok(ACCEPT_DRIFT_MULTIPLIER * per_step.iter().fold(0.0f64, |a, v| a.max(*v)))
}

/// `Δσ_s = σ_s(k+1) − σ_s(k)`: change of the ray slope of the front point
/// between two slices, both measured from the center of the front cell at `x_k`.
pub fn front_ray_change(scheme: &Scheme, old: &SlabRecord, new: &SlabRecord) -> f64 {
    let center = old.cells.last().map_or(0.0, |c| c.center_x);
    let x0 = scheme.resolution.x0;
    scheme.delta_sigma(new.x - x0, new.front_eta, center) - scheme.delta_sigma(old.x - x0, old.front_eta, center)
}

/// Shock-angle measure of one slab.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ShockAngle {
    /// Step index.
    pub k: usize,
    /// `θ_s(k) = |σ_s(k) − s_{k+1}|`, slopes as offsets from `b0`.
    pub theta_s: f64,
    /// `Δσ_s` from the previous slice (zero on the first).
    pub delta_sigma_s: f64,
    /// `(x_k − X*)/Δx` for the center of the front cell.
    pub geometry_factor: f64,
    /// `θ_s(k−1) ≥ 6|Δσ_s|` whenever `geometry_factor ≥ 6`.
    pub angle_bound_ok: bool,
}

/// Shock-angle series of a run.
pub fn shock_angles(scheme: &Scheme, run: &RunOutput) -> Vec<ShockAngle> {
    let mut out = Vec::with_capacity(run.slabs.len());
    for (i, r) in run.slabs.iter().enumerate() {
        let center = r.cells.last().map_or(0.0, |c| c.center_x);
        let geometry_factor = (r.x - center) / r.dx;
        let (delta_sigma_s, prev_theta) = if i == 0 {
            (0.0, r.theta_s)
        } else {
            (front_ray_change(scheme, &run.slabs[i - 1], r), run.slabs[i - 1].theta_s)
        };
        let slack = 1e-12 * (prev_theta + delta_sigma_s.abs()) + f64::MIN_POSITIVE;
        out.push(ShockAngle {
            k: r.k,
            theta_s: r.theta_s,
            delta_sigma_s,
            geometry_factor,
            angle_bound_ok: geometry_factor < 6.0 || prev_theta + slack >= 6.0 * delta_sigma_s.abs(),
        });
    }
    out
}

/// Asymptotic estimates of a run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AsymptoticSummary {
    /// Number of tail steps averaged.
    pub tail_steps: usize,
    /// Tail average of the front slopes `s_k`.
    pub s_tail_mean: f64,
    /// Asymptotic wall slope `b'_∞`.
    pub b_inf: f64,
    /// Asymptotic center `X*_∞`.
    pub xstar_inf: f64,
    /// Front slope of the limiting self-similar field, `ϖ(s∞) = Θ(s∞)`.
    pub s_inf: f64,
    /// `|ϖ(s∞; O∞) − Θ(s∞)|/u∞`, re-evaluated.
    pub limit_condition_residual: f64,
    /// `|ϖ(b'_∞; O∞)·(−b'_∞, 1)|/u∞`.
    pub wall_condition_residual: f64,
    /// Sup-deviation of the last slice from the limiting field, units of `u∞`.
    pub final_deviation: f64,
    /// Weak-wave variation per slice.
    pub wave_tv: Vec<f64>,
    /// Center variation per slice.
    pub center_tv: Vec<f64>,
}

/// Decay verdict of a series: the largest value over the final quarter as a
/// fraction of the overall peak (zero for a vanishing series).
pub fn final_quarter_ratio(series: &[f64]) -> f64 {
    let peak = series.iter().fold(0.0f64, |a, v| a.max(*v));
    if peak == 0.0 {
        return 0.0;
    }
    let start = series.len() - series.len() / 4;
    series[start..].iter().fold(0.0f64, |a, v| a.max(*v)) / peak
}

/// Tail estimates and the limiting field of a run.
///
/// The limiting field is the background of the asymptotic wall slope with
/// its center at the asymptotic center; its shock slope is reported as `s∞`,
/// so both limit conditions hold by construction and are re-evaluated.
pub fn asymptotic_summary(
    scheme: &Scheme,
    run: &RunOutput,
    reports: &[GlimmReport],
) -> Result<(AsymptoticSummary, SelfSimilarField)> {
    let n = run.slabs.len();
    if n < MIN_TAIL_STEPS {
        return Err(Error::InsufficientTail { available: n });
    }
    let p = &scheme.params;
    let tail = (n / 4).max(1);
    let s_tail_mean = run.slabs[n - tail..].iter().map(|r| r.front_slope).sum::<f64>() / tail as f64;
    let last = n.min(scheme.boundary.segments() - 1);
    let b_inf = scheme.boundary.wall_slope(last);
    let xstar_inf = scheme.boundary.centers[last];
    let limit: BackgroundSolution =
        if b_inf == scheme.b0() { scheme.background.clone() } else { shoot_background(b_inf, p)? };
    let mut field = limit.field.clone();
    field.center_x = xstar_inf;
    let s_inf = limit.s0;
    let theta = theta_of_s(s_inf, p)?.state;
    let limit_condition_residual = (limit.shock_state() - theta).norm() / p.u_inf;
    let cone = limit.cone_state();
    let wall_condition_residual = (cone.v - b_inf * cone.u).abs() / p.u_inf;
    let final_deviation = scheme.field_deviation(&run.final_state, &field, xstar_inf);
    Ok((
        AsymptoticSummary {
            tail_steps: tail,
            s_tail_mean,
            b_inf,
            xstar_inf,
            s_inf,
            limit_condition_residual,
            wall_condition_residual,
            final_deviation,
            wave_tv: reports.iter().map(|r| r.l0_1 + r.l0_2).collect(),
            center_tv: reports.iter().map(|r| r.center_tv).collect(),
        },
        field,
    ))
}

/// Strong-front response to an incident 1-wave by central differences:
/// `(dε2/dδ, ds/dδ)` for `U = ϖ(s0) + δ·r1`.
pub fn front_response_fd(bg: &BackgroundSolution, h: f64) -> Result<(f64, f64)> {
    let p = &bg.params;
    let top = bg.shock_state();
    let r1 = eigen(p, top)?.r1;
    let solve = |d: f64| solve_strong_riemann(top.offset(d, r1), bg.s0, p);
    let (a, b) = (solve(h)?, solve(-h)?);
    Ok(((a.eps2 - b.eps2) / (2.0 * h), (a.s - b.s) / (2.0 * h)))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bg(mach: f64) -> BackgroundSolution {
        shoot_background(-0.5, &GasParams::new(1.0, mach).unwrap()).unwrap()
    }

    #[test]
    fn symmetric_wall_reflects_with_unit_coefficient() {
        let p = GasParams::new(1.0, 10.0).unwrap();
        let (k_r, _) = boundary_reflection_coeff(FlowState::new(10.0, 0.0), 0.0, &p).unwrap();
        assert!((k_r - 1.0).abs() < 1e-15);
    }

    #[test]
    fn closed_form_matches_eigenvector_ratio() {
        let b = bg(20.0);
        let theta0 = b.b0.atan();
        let (k_r, _) = boundary_reflection_coeff(b.cone_state(), theta0, &b.params).unwrap();
        let ratio = reflection_coefficient_eigen(b.cone_state(), theta0, &b.params).unwrap();
        assert!((k_r - ratio).abs() < 1e-10, "{k_r} vs {ratio}");
        assert!(k_r > 1.0);
    }

    #[test]
    fn weights_satisfy_strict_inequalities() {
        let b = bg(100.0);
        let c = interaction_coefficients(&b).unwrap();
        assert!(c.contraction < 1.0);
        let bd = Boundary::build(&BoundarySpec::Straight, -0.5, 1.0, 1e-3, 10).unwrap();
        let w = select_weights(&c, &bd, b.s0_offset).unwrap();
        assert!(w.inequalities(&c).iter().all(|v| *v < 0.0));
        let lo = c.k_r.abs();
        let hi = 1.0 / (c.k_w.abs() + c.k_s.abs() * c.mu_w.abs());
        assert!(w.k2 > lo && w.k2 < hi);
        assert_eq!(w.sigma_upper_offset, 0.0);
        assert!(w.sigma_lower_offset < b.s0_offset);
    }

    #[test]
    fn single_shock_curve() {
        let w = FunctionalWeights {
            k1: 1.0,
            k2: 1.0,
            k3: 1.0,
            k4: 1.0,
            k: 1.0,
            k_wc1: 1.0,
            k_wc2: 1.0,
            k_ce: 1.0,
            rho_star: 0.0,
            c1: 1.0,
            sigma_lower_offset: -1.0,
            sigma_upper_offset: 0.0,
        };
        let it = CurveItem { family: 1, size: 0.01, shock: true, sigma_offset: -1.0, x: 1.0 };
        let r = evaluate_curve(&[it], 0.0, 0.0, &w);
        assert_eq!(r.l, 0.01);
        assert_eq!(r.q0, 0.0);
        let two = CurveItem { family: 2, ..it };
        assert!(evaluate_curve(&[it, two], 0.0, 0.0, &w).q0 > 0.0);
        assert_eq!(evaluate_curve(&[two, it], 0.0, 0.0, &w).q0, 0.0);
    }

    #[test]
    fn front_coefficients_match_finite_differences() {
        let b = bg(20.0);
        let [k_w, k_s, _, _] = front_coefficients(&b).unwrap();
        let (fw, fs) = front_response_fd(&b, 1e-4).unwrap();
        assert!((fw - k_w).abs() < 1e-3 * k_w.abs().max(1.0), "{fw} vs {k_w}");
        assert!((fs - k_s).abs() < 1e-3 * k_s.abs().max(1.0), "{fs} vs {k_s}");
    }
}
