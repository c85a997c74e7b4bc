//! Property tests of the strong 1-shock polar and the attached shock.

use conical_glimm::gas::eigen;
use conical_glimm::shock_polar::{attachment_exponent, rh_residuals, solve_attached_shock, theta_of_s};
use conical_glimm::tolerances::{ACCEPT_RATE_FIT, RH_RESIDUAL};
use conical_glimm::GasParams;
use proptest::prelude::*;

/// `λ1(U∞)`.
fn lambda1_inf(p: &GasParams) -> f64 {
    eigen(p, p.incoming()).unwrap().lambda1
}

proptest! {
    #[test]
    fn polar_points_satisfy_jump_conditions(mach in 3.0f64..40.0, t in 0.0f64..1.0) {
        let p = GasParams::new(1.0, mach).unwrap();
        let s = -1.5 + t * (lambda1_inf(&p) + 1.5);
        let pt = theta_of_s(s, &p).unwrap();
        for r in rh_residuals(&p, &pt) {
            prop_assert!(r.abs() < RH_RESIDUAL, "residual {r:e} at s = {s}");
        }
    }

    #[test]
    fn density_increase_iff_lax_ordering(mach in 3.0f64..40.0, s in -1.5f64..-0.01) {
        let p = GasParams::new(1.0, mach).unwrap();
        let pt = theta_of_s(s, &p).unwrap();
        let Ok(e) = eigen(&p, pt.state) else { return Ok(()) };
        let lax = e.lambda1 < s && s < e.lambda2 && s < lambda1_inf(&p);
        prop_assert_eq!(pt.admissible, lax, "s = {}, ln ρ = {}", s, pt.log_rho);
    }

    #[test]
    fn flow_angle_increases_with_slope(mach in 3.0f64..40.0, a in 0.0f64..1.0, b in 0.0f64..1.0) {
        prop_assume!((a - b).abs() > 1e-6);
        let p = GasParams::new(1.0, mach).unwrap();
        let top = lambda1_inf(&p);
        let (lo, hi) = (a.min(b), a.max(b));
        let s1 = -1.5 + lo * (top + 1.5);
        let s2 = -1.5 + hi * (top + 1.5);
        prop_assert!(theta_of_s(s1, &p).unwrap().angle() < theta_of_s(s2, &p).unwrap().angle());
    }

    #[test]
    fn attachment_gap_decays_at_predicted_rate(b in -0.9f64..-0.3) {
        let machs = [6.0f64, 8.0, 10.0, 12.0];
        let x: Vec<f64> = machs.iter().map(|m| m * m).collect();
        let y: Vec<f64> = machs
            .iter()
            .map(|&m| solve_attached_shock(b, &GasParams::new(1.0, m).unwrap()).unwrap().log_gap)
            .collect();
        let mx = x.iter().sum::<f64>() / 4.0;
        let my = y.iter().sum::<f64>() / 4.0;
        let slope = x.iter().zip(&y).map(|(a, c)| (a - mx) * (c - my)).sum::<f64>()
            / x.iter().map(|a| (a - mx) * (a - mx)).sum::<f64>();
        let target = -attachment_exponent(b);
        prop_assert!((slope / target - 1.0).abs() <= ACCEPT_RATE_FIT, "slope {slope} vs {target}");
    }
}
