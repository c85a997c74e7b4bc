//! Property tests of the conical ODE, its flow map and the background solve.

use conical_glimm::gas::density;
use conical_glimm::selfsim::{field_invariants, integrate_psi, ode_rhs, shoot_background};
use conical_glimm::{FlowState, GasParams};
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn rhs_satisfies_ray_identity(sigma in -1.5f64..-0.05, u in 2.0f64..20.0, v in -8.0f64..-0.1) {
        let p = GasParams::new(1.0, 20.0).unwrap();
        if let Ok([du, dv]) = ode_rhs(sigma, FlowState::new(u, v), &p) {
            prop_assert!((du + sigma * dv).abs() <= 1e-14 * (du.abs() + (sigma * dv).abs()));
        }
    }

    #[test]
    fn flow_map_composes_and_reverses(b0 in -0.9f64..-0.25, mach in 6.0f64..12.0, t0 in 0.1f64..0.9, a in -0.3f64..0.3, b in -0.3f64..0.3) {
        let p = GasParams::new(1.0, mach).unwrap();
        let bg = shoot_background(b0, &p).unwrap();
        prop_assume!(!bg.degenerate);
        let width = -bg.s0_offset;
        let sigma0 = bg.s0 + t0 * width;
        let u0 = bg.field.eval(sigma0).unwrap();
        let (da, db) = (a * width, b * width);
        let direct = integrate_psi(da + db, sigma0, u0, &p).unwrap();
        let mid = integrate_psi(da, sigma0, u0, &p).unwrap();
        let composed = integrate_psi(db, sigma0 + da, mid, &p).unwrap();
        prop_assert!((direct - composed).norm() <= 1e-8 * p.u_inf);
        let back = integrate_psi(-da, sigma0 + da, mid, &p).unwrap();
        prop_assert!((back - u0).norm() <= 1e-8 * p.u_inf);
    }

    #[test]
    fn background_positive_monotone_nondegenerate(b0 in -0.9f64..-0.25, mach in 6.0f64..14.0) {
        let p = GasParams::new(1.0, mach).unwrap();
        let bg = shoot_background(b0, &p).unwrap();
        let st = bg.shock_state();
        prop_assert!(st.u > 0.0 && st.v < 0.0);
        // v − s0·u in offset variables, free of cancellation across the thin layer.
        let (tau0, y0) = bg.field.nodes().next().unwrap();
        prop_assert!(y0[1] - tau0 * y0[0] > 0.0 || bg.degenerate);
        let inv = field_invariants(&bg.field, &p);
        prop_assert!(inv.all_ok(), "{inv:?}");
        // Bernoulli density is nondecreasing from the shock to the cone.
        let mut prev = f64::NEG_INFINITY;
        for (tau, y) in bg.field.nodes().take(bg.field.core_nodes) {
            let s = FlowState::new(y[0], y[1] + bg.field.sigma_base * y[0]);
            let rho = density(&p, s);
            // Round-off of the Bernoulli exponent is ~ ε·q²/c² relative.
            let floor = 8.0 * f64::EPSILON * (s.u * s.u + s.v * s.v) / (p.c * p.c);
            prop_assert!(rho >= prev * (1.0 - floor), "density decreases at τ = {tau}");
            prev = rho;
        }
    }
}
