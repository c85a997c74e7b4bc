//! Property tests of the wave curves and the weak, wall and front Riemann solvers.

use conical_glimm::gas::eigen;
use conical_glimm::riemann::{solve_strong_riemann, solve_weak_riemann, wave_curve, weak_strengths};
use conical_glimm::selfsim::shoot_background;
use conical_glimm::shock_polar::theta_of_s;
use conical_glimm::{BackgroundSolution, FlowState, GasParams};
use proptest::prelude::*;

fn background(b0: f64, mach: f64) -> BackgroundSolution {
    shoot_background(b0, &GasParams::new(1.0, mach).unwrap()).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn weak_solver_inverts_wave_curves(b0 in -0.8f64..-0.3, mach in 8.0f64..30.0, e1 in -1e-2f64..1e-2, e2 in -1e-2f64..1e-2) {
        let bg = background(b0, mach);
        let p = &bg.params;
        let ub = bg.shock_state();
        let ua = wave_curve(2, e2, wave_curve(1, e1, ub, p).unwrap(), p).unwrap();
        let [f1, f2] = weak_strengths(ub, ua, p).unwrap();
        prop_assert!((f1 - e1).abs() <= 1e-8 && (f2 - e2).abs() <= 1e-8, "({f1}, {f2}) vs ({e1}, {e2})");
    }

    #[test]
    fn shocks_in_fans_obey_lax_ordering(b0 in -0.8f64..-0.3, mach in 8.0f64..30.0, du in -0.05f64..0.05, dv in -0.05f64..0.05) {
        let bg = background(b0, mach);
        let p = &bg.params;
        let ub = bg.shock_state();
        let ua = FlowState::new(ub.u * (1.0 + du * 0.1), ub.v + dv * ub.u * 0.1);
        let fan = solve_weak_riemann(ub, ua, p).unwrap();
        for w in fan.waves.iter().filter(|w| w.is_shock()) {
            let (lb, la) = (eigen(p, w.below).unwrap().lambda(w.family), eigen(p, w.above).unwrap().lambda(w.family));
            prop_assert!(la < w.speed_lo && w.speed_hi < lb, "{w:?}");
        }
    }

    #[test]
    fn wave_curves_match_to_second_order(b0 in -0.8f64..-0.3, mach in 8.0f64..30.0, j in 1u8..=2) {
        let bg = background(b0, mach);
        let p = &bg.params;
        let ub = bg.shock_state();
        let phi = |e: f64| wave_curve(j, e, ub, p).unwrap();
        let mismatch = |h: f64| {
            let plus = (phi(2.0 * h) - phi(h) * 2.0 + ub) * (1.0 / (h * h));
            let minus = (phi(-2.0 * h) - phi(-h) * 2.0 + ub) * (1.0 / (h * h));
            (plus - minus).norm()
        };
        // One-sided second differences approach each other linearly in ε.
        let (m1, m2) = (mismatch(4e-3), mismatch(2e-3));
        prop_assert!(m2 <= 0.75 * m1 + 1e-6 * ub.norm(), "{m1:e} → {m2:e}");
    }

    #[test]
    fn strong_solver_recovers_front_data(b0 in -0.8f64..-0.3, mach in 8.0f64..30.0, ds in -1e-3f64..1e-3, e2 in -1e-3f64..1e-3) {
        let bg = background(b0, mach);
        let p = &bg.params;
        let s = bg.s0 + ds * bg.s0.abs();
        let mid = theta_of_s(s, p).unwrap().state;
        let above = wave_curve(2, e2, mid, p).unwrap();
        let solve = solve_strong_riemann(above, bg.s0, p).unwrap();
        prop_assert!((solve.s - s).abs() <= 1e-8 && (solve.eps2 - e2).abs() <= 1e-8, "({}, {}) vs ({s}, {e2})", solve.s, solve.eps2);
    }
}
