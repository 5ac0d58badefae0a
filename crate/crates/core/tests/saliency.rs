use fluxid_core::compare::{compare_maps, truth_error};
use fluxid_core::experiment::*;
use fluxid_core::injection::{InjectionConfig, Waveform};
use fluxid_core::saliency::invert_saliency;
use fluxid_core::sim::SimConfig;
use fluxid_core::{CurrentDq, EnergyModel, MotorParams};

fn quick(extent: f64) -> SaliencyConfig {
    let mut cfg = SaliencyConfig::paper();
    cfg.injection.dwell = 1.0;
    cfg.extent = extent;
    cfg.grid_step = 0.1;
    cfg.line_spacing = 0.5;
    cfg
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

#[test]
fn ripple_model_error_is_second_order() {
    let sim = SimConfig::new(EnergyModel::default_saturated()).noiseless();
    let res: Vec<f64> = [500.0, 1000.0, 2000.0]
        .iter()
        .map(|&omega| {
            let inj = InjectionConfig {
                omega,
                dwell: 1.0,
                ..InjectionConfig::paper()
            };
            ripple_residual(&sim, &inj, CurrentDq::new(1.5, -2.0), 1.0).unwrap().residual_rms
        })
        .collect();
    for w in res.windows(2) {
        assert!((w[0] / w[1]).log2() >= 1.8, "{res:?}");
    }
}

#[test]
fn dwell_hits_target_and_recovers_hessian() {
    let model = EnergyModel::default_saturated();
    let sim = SimConfig::new(model);
    let cfg = quick(3.0);
    for (k, target) in [CurrentDq::ZERO, CurrentDq::new(2.0, -1.5), CurrentDq::new(-3.0, 3.0), CurrentDq::new(0.7, 2.9)]
        .into_iter()
        .enumerate()
    {
        let r = run_dwell(&sim, &cfg, target, k as u64).unwrap();
        assert!((r.record.i_bar - target).norm() <= 0.05, "{target:?}: {:?}", r.record.i_bar);
        let h = model.hessian_at_current(r.record.i_bar).unwrap();
        let scale = h.m11.max(h.m22);
        assert!((r.record.hessian.m11 - h.m11).abs() <= 5e-3 * scale);
        assert!((r.record.hessian.m12 - h.m12).abs() <= 5e-3 * scale);
        assert!((r.record.hessian.m22 - h.m22).abs() <= 5e-3 * scale);
        assert!(r.record.h12_asymmetry <= 0.01 * scale);
    }
}

#[test]
fn sine_injection_also_works() {
    let model = EnergyModel::default_saturated();
    let sim = SimConfig::new(model).noiseless();
    let mut cfg = quick(3.0);
    cfg.injection.waveform = Waveform::Sine;
    let r = run_dwell(&sim, &cfg, CurrentDq::new(-1.0, 1.0), 0).unwrap();
    let h = model.hessian_at_current(r.record.i_bar).unwrap();
    assert!(rel(r.record.hessian.m11, h.m11) < 5e-3);
    assert!(rel(r.record.hessian.m22, h.m22) < 5e-3);
}

#[test]
fn unsaturated_inductances_are_rated_values() {
    let sim = SimConfig::new(EnergyModel::unsaturated(MotorParams::test_motor()));
    let cfg = quick(3.0);
    for (k, target) in [CurrentDq::new(-2.5, 0.5), CurrentDq::new(1.0, -3.0)].into_iter().enumerate() {
        let l = invert_saliency(&run_dwell(&sim, &cfg, target, k as u64).unwrap().record).unwrap().l;
        assert!(rel(l.m11, 43.25e-3) < 0.01);
        assert!(rel(l.m22, 69.05e-3) < 0.01);
        assert!(l.m12.abs() < 0.005 * l.m11);
    }
}

#[test]
fn stator_resistance_does_not_matter() {
    let model = EnergyModel::default_saturated();
    let cfg = quick(0.5);
    let a = run_saliency(&SimConfig::new(model), &cfg).unwrap();
    let hot = model.with_resistance(5.25).unwrap();
    let b = run_saliency(&SimConfig::new(hot), &cfg).unwrap();
    let r = compare_maps(&a.map, &b.map, None).unwrap();
    assert!(r.difference.max_pct() < 0.2, "{:?}", r.difference);
}

#[test]
fn small_grid_matches_ground_truth_and_is_consistent() {
    let model = EnergyModel::default_saturated();
    let out = run_saliency(&SimConfig::new(model), &quick(1.0)).unwrap();
    let e = truth_error(&out.map, &model).unwrap();
    assert!(e.max_pct() < 2.0, "{e:?}");
    assert!(out.consistency.max_rel_err_d < 0.013);
    assert!(out.consistency.max_rel_err_q < 0.029);
    assert!(out.consistency.parity.flux.max_asymmetry() < 0.02);
    assert!(out.consistency.parity.inductance.max_asymmetry() < 0.02);
}

#[test]
fn runs_are_deterministic() {
    let sim = SimConfig::new(EnergyModel::default_saturated());
    let cfg = quick(0.3);
    let a = run_saliency(&sim, &cfg).unwrap();
    let b = run_saliency(&sim, &cfg).unwrap();
    assert_eq!(a.dwells, b.dwells);
    assert_eq!(a.map, b.map);
}
