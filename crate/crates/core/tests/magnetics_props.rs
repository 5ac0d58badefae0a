use fluxid_core::{CurrentDq, EnergyModel, FluxDq, MotorParams};
use proptest::prelude::*;

const PHI_M: f64 = 0.2;

fn flux() -> impl Strategy<Value = FluxDq> {
    // roughly the image of |i| <= 3 A
    (-0.13..0.13f64, -0.2..0.2f64).prop_map(|(x, q)| FluxDq::new(PHI_M + x, q))
}

fn current() -> impl Strategy<Value = CurrentDq> {
    (-3.0..3.0f64, -3.0..3.0f64).prop_map(|(d, q)| CurrentDq::new(d, q))
}

fn rel(a: f64, b: f64, scale: f64) -> f64 {
    (a - b).abs() / scale
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn gradient_matches_finite_differences(phi in flux()) {
        let m = EnergyModel::default_saturated();
        let h = 1e-6;
        let i = m.current_from_flux(phi);
        let dd = (m.energy(phi + FluxDq::new(h, 0.0)) - m.energy(phi - FluxDq::new(h, 0.0))) / (2.0 * h);
        let dq = (m.energy(phi + FluxDq::new(0.0, h)) - m.energy(phi - FluxDq::new(0.0, h))) / (2.0 * h);
        let scale = i.norm().max(1.0);
        prop_assert!(rel(i.d, dd, scale) < 1e-6, "{} vs {}", i.d, dd);
        prop_assert!(rel(i.q, dq, scale) < 1e-6, "{} vs {}", i.q, dq);
    }

    #[test]
    fn hessian_matches_finite_differences(phi in flux()) {
        let m = EnergyModel::default_saturated();
        let h = 1e-6;
        let s = m.hessian_at_flux(phi);
        let di = m.current_from_flux(phi + FluxDq::new(h, 0.0)) - m.current_from_flux(phi - FluxDq::new(h, 0.0));
        let qi = m.current_from_flux(phi + FluxDq::new(0.0, h)) - m.current_from_flux(phi - FluxDq::new(0.0, h));
        let scale = s.m11.abs().max(s.m22.abs());
        prop_assert!(rel(s.m11, di.d / (2.0 * h), scale) < 1e-5);
        prop_assert!(rel(s.m12, di.q / (2.0 * h), scale) < 1e-5);
        prop_assert!(rel(s.m12, qi.d / (2.0 * h), scale) < 1e-5);
        prop_assert!(rel(s.m22, qi.q / (2.0 * h), scale) < 1e-5);
    }

    #[test]
    fn current_is_mirrored_with_quadrature_flux(phi in flux()) {
        let m = EnergyModel::default_saturated();
        let a = m.current_from_flux(phi);
        let b = m.current_from_flux(FluxDq::new(phi.d, -phi.q));
        prop_assert_eq!(a.d, b.d);
        prop_assert_eq!(a.q, -b.q);
        let h = m.hessian_at_flux(phi);
        let g = m.hessian_at_flux(FluxDq::new(phi.d, -phi.q));
        prop_assert_eq!(h.m12, -g.m12);
        prop_assert_eq!((h.m11, h.m22), (g.m11, g.m22));
    }

    #[test]
    fn newton_round_trip(i in current()) {
        let m = EnergyModel::default_saturated();
        let phi = m.flux_from_current(i).unwrap();
        prop_assert!((m.current_from_flux(phi) - i).norm() < 1e-9);
        let back = m.flux_from_current(m.current_from_flux(phi)).unwrap();
        prop_assert!((back - phi).norm() < 1e-9);
    }
}

#[test]
fn positive_definite_on_operating_grid() {
    let m = EnergyModel::default_saturated();
    for a in -30..=30 {
        for b in -30..=30 {
            let h = m.hessian_at_current(CurrentDq::new(0.1 * a as f64, 0.1 * b as f64)).unwrap();
            assert!(h.m11 > 0.0 && h.det() > 0.0, "({a}, {b})");
        }
    }
}

#[test]
fn linear_model_values() {
    let m = EnergyModel::unsaturated(MotorParams::test_motor());
    let phi = m.flux_from_current(CurrentDq::new(1.0, 1.0)).unwrap();
    assert!((phi.d - (PHI_M + 0.04325)).abs() < 1e-12);
    assert!((phi.q - 0.06905).abs() < 1e-12);
    assert!((m.energy(FluxDq::new(PHI_M + 0.04325, 0.0)) - 0.021625).abs() < 1e-12);
}
