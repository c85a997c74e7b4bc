//! Property tests of the interaction coefficients, the functional weights and
//! the recorded-run functional bounds.

use conical_glimm::diagnostics::{
    glimm_series, interaction_coefficients, monotonicity_tolerance, select_weights, shock_angles,
};
use conical_glimm::scheme::{Boundary, BoundarySpec, Scheme, SchemeConfig};
use conical_glimm::selfsim::shoot_background;
use conical_glimm::GasParams;
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn selected_weights_are_strict(mach in 20.0f64..400.0, b0 in -0.9f64..-0.3, delta in -1e-2f64..1e-2, at in 0.0f64..0.1) {
        let p = GasParams::new(1.0, mach).unwrap();
        let bg = shoot_background(b0, &p).unwrap();
        let c = interaction_coefficients(&bg).unwrap();
        let boundary = Boundary::build(&BoundarySpec::Kink { xi: at, delta }, b0, 1.0, 1e-3, 100).unwrap();
        if let Ok(w) = select_weights(&c, &boundary, bg.s0_offset) {
            prop_assert!(c.contraction < 1.0);
            for g in w.inequalities(&c) {
                prop_assert!(g < 0.0);
            }
            prop_assert!(w.k2 > c.k_r.abs() && w.k2 * (c.k_w.abs() + c.k_s.abs() * c.mu_w.abs()) < 1.0);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(6))]

    #[test]
    fn recorded_runs_bound_interactions_and_shock_angles(delta in -5e-3f64..5e-3, at in 5.0f64..40.0, seed in 0u64..100) {
        let p = GasParams::new(1.0, 50.0).unwrap();
        let base = Scheme::new(p, -0.5, &BoundarySpec::Straight, SchemeConfig::default()).unwrap();
        let spec = BoundarySpec::Kink { xi: at * base.resolution.dx, delta };
        let cfg = SchemeConfig { n_steps: 120, seed, ..SchemeConfig::default() };
        let scheme = Scheme::with_background(base.background.clone(), &spec, cfg).unwrap();
        let out = scheme.run().unwrap();
        let c = interaction_coefficients(&scheme.background).unwrap();
        let w = select_weights(&c, &scheme.boundary, scheme.background.s0_offset).unwrap();
        let tol = monotonicity_tolerance(&scheme, &w).unwrap();
        let g = glimm_series(&scheme, &out, &w, tol);
        prop_assert!(g.interaction_bound_holds(), "ΣE = {} vs F(0) = {}", g.sum_e, g.f0);
        prop_assert!(g.monotone_fraction >= 0.95, "monotone fraction {}", g.monotone_fraction);
        prop_assert!(shock_angles(&scheme, &out).iter().all(|a| a.angle_bound_ok));
    }
}
