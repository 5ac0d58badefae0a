use fluxid_core::classical::*;
use fluxid_core::experiment::*;
use fluxid_core::sim::*;
use fluxid_core::{CurrentDq, EnergyModel};

fn hold(sim: &SimConfig, i: CurrentDq, duration: f64) -> TimeSeries {
    let ctrl = ControllerConfig::default();
    let mut lp = CurrentLoop::new(move |_| i, sim.theta_lr, PiTuning::new(&ctrl, &sim.model), sim.sample_period());
    Simulator::new(*sim).unwrap().run(&mut lp, duration).unwrap()
}

#[test]
fn ideal_plant_integration_is_exact() {
    let model = EnergyModel::default_saturated();
    let sim = SimConfig::new(model).noiseless();
    let cfg = ClassicalConfig::paper_protocol(2);
    for k in [0, 10, 14] {
        let traj = cfg.trajectories[k];
        let s = simulate_trajectory(&sim, &ControllerConfig::default(), &traj, 0).unwrap();
        let phi = integrate_flux(&s, model.params().rs, s.phi_dq_true[0]);
        let worst = phi
            .iter()
            .zip(&s.phi_dq_true)
            .map(|(a, b)| (*a - *b).norm())
            .fold(0.0, f64::max);
        assert!(worst <= 1e-4, "trajectory {k}: {worst}");
    }
}

#[test]
fn resistance_bias_drifts_linearly() {
    let model = EnergyModel::default_saturated();
    let sim = SimConfig::new(model).noiseless();
    let rs = model.params().rs;
    let i_d = 3.0;
    let s = hold(&sim, CurrentDq::new(i_d, 0.0), 3.0);
    let (k1, k2) = (s.len() / 3, s.len() - 1);
    let span = s.t[k2] - s.t[k1];
    for bias in [-0.5, -0.25, 0.1, 0.25, 0.5] {
        let phi = integrate_flux(&s, rs + bias, s.phi_dq_true[0]);
        let err = |k: usize| phi[k].d - s.phi_dq_true[k].d;
        let drift = err(k2) - err(k1);
        let expected = -bias * i_d * span;
        assert!((drift - expected).abs() <= 0.01 * expected.abs(), "{bias}: {drift} vs {expected}");
    }
}

#[test]
fn plateau_estimates_track_resistance_ramp() {
    let model = EnergyModel::default_saturated();
    let traj = ClassicalConfig::paper_protocol(10).trajectories[11];
    let sim = SimConfig {
        rs_profile: Some(RsRamp {
            from: 4.5,
            to: 5.25,
            start: 0.0,
            end: traj.duration(),
        }),
        ..SimConfig::new(model)
    };
    let s = simulate_trajectory(&sim, &ControllerConfig::default(), &traj, 3).unwrap();
    let est = resistance_per_plateau(&s, &PlateauConfig::default()).unwrap();
    assert!(est.len() >= 15);
    for (t, r) in est {
        let truth = sim.resistance_at(t);
        assert!((r - truth).abs() <= 0.01 * truth, "t = {t}: {r} vs {truth}");
    }
}

#[test]
fn fixed_mode_ignores_plateaus_and_estimate_recovers_rs() {
    let model = EnergyModel::default_saturated();
    let sim = SimConfig::new(model);
    let traj = ClassicalConfig::paper_protocol(3).trajectories[3];
    let s = simulate_trajectory(&sim, &ControllerConfig::default(), &traj, 0).unwrap();
    let fixed = ResistanceSchedule::from_series(&s, ResistanceMode::Fixed { value: 5.0 }, &PlateauConfig::default()).unwrap();
    assert_eq!(fixed.mean(), 5.0);
    let est = estimate_resistance(&s, &PlateauConfig::default()).unwrap();
    assert!((est - model.params().rs).abs() < 0.01 * model.params().rs);
}

fn total_loop_area(sim: &SimConfig) -> (f64, f64, f64) {
    let cfg = ClassicalConfig::paper_protocol(10);
    let out = run_classical(sim, &ControllerConfig::default(), &cfg).unwrap();
    let raw = out.traces.iter().map(|t| t.loop_area_raw.abs()).sum();
    let avg = out.traces.iter().map(|t| t.loop_area_averaged.abs()).sum();
    let ratio = out
        .traces
        .iter()
        .map(|t| {
            let s = t.scatter.unwrap();
            s.raw / s.averaged
        })
        .fold(f64::INFINITY, f64::min);
    (raw, avg, ratio)
}

#[test]
fn inverter_distortion_opens_the_loop() {
    let model = EnergyModel::default_saturated();
    let base = SimConfig::new(model);
    let (none, _, r1) = total_loop_area(&SimConfig {
        inverter: InverterModel::uncompensated(DEFAULT_V_TH),
        ..base
    });
    let (comp, averaged, r2) = total_loop_area(&SimConfig {
        inverter: InverterModel::compensated(DEFAULT_V_TH),
        ..base
    });
    assert!(none > comp, "{none} vs {comp}");
    assert!(comp > averaged, "{comp} vs {averaged}");
    assert!(r1 >= 2.0 && r2 >= 2.0, "{r1} {r2}");
}

#[test]
fn classical_map_is_anchored_and_symmetric() {
    let model = EnergyModel::default_saturated();
    let out = run_classical(&SimConfig::new(model), &ControllerConfig::default(), &ClassicalConfig::paper_protocol(4)).unwrap();
    assert_eq!(out.map.paths().len(), 15);
    let origin = out.map.nearest_to_zero().unwrap();
    assert!(origin.i.norm() <= 0.05);
    let parity = fluxid_core::saliency::parity_check_flux(&out.map);
    assert!(parity.has_verdict());
    assert!(parity.max_asymmetry() <= 0.02, "{parity:?}");
}
