use fluxid_core::sim::*;
use fluxid_core::{CurrentDq, EnergyModel, FluxDq, MotorParams, VoltageAb, VoltageDq};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn linear() -> EnergyModel {
    EnergyModel::unsaturated(MotorParams::test_motor())
}

fn with_step(model: EnergyModel, dt: f64) -> SimConfig {
    let mut c = SimConfig::new(model).noiseless();
    c.dt = dt;
    c.sample_rate = 1.0 / dt;
    c
}

#[test]
fn rk4_global_error_is_fourth_order() {
    let m = linear();
    let p = *m.params();
    let v = VoltageAb::new(10.0, -6.0);
    let t_end = 0.04;
    let flux = |l: f64, vv: f64| l * vv / p.rs * (1.0 - (-t_end * p.rs / l).exp());
    let truth = FluxDq::new(p.phi_m + flux(p.ld, v.a), flux(p.lq, v.b));
    let err = |dt: f64| {
        let mut s = Simulator::new(with_step(m, dt)).unwrap();
        s.run(&mut |_t: f64| v, t_end).unwrap();
        (s.flux() - truth).norm()
    };
    let e: Vec<f64> = [1e-3, 5e-4, 2.5e-4].iter().map(|&h| err(h)).collect();
    for w in e.windows(2) {
        let ratio = w[0] / w[1];
        assert!((12.0..20.0).contains(&ratio), "{e:?}");
    }
}

#[test]
fn first_order_step_response() {
    let m = linear();
    let p = *m.params();
    let s = simulate_locked(&SimConfig::new(m).noiseless(), |_| VoltageAb::new(p.rs, 0.0), 0.1).unwrap();
    let tau = p.ld / p.rs;
    assert!((tau - 10.18e-3).abs() < 1e-5);
    let k = (tau / s.sample_period).round() as usize;
    let expected = 1.0 - (-(s.t[k]) / tau).exp();
    assert!((s.i_dq_true[k].d - expected).abs() < 1e-6);
    assert!((s.i_dq_true.last().unwrap().d - 1.0).abs() < 1e-3);
}

#[test]
fn energy_balance_on_random_excitation() {
    let m = EnergyModel::default_saturated();
    let cfg = SimConfig::new(m).noiseless();
    let rs = m.params().rs;
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..5 {
        let levels: Vec<VoltageAb> = (0..40)
            .map(|_| VoltageAb::new(rng.random_range(-5.0..15.0), rng.random_range(-15.0..15.0)))
            .collect();
        let mut s = Simulator::new(cfg).unwrap();
        let series = s.run(&mut |t: f64| levels[((t / 5e-3) as usize).min(39)], 0.2).unwrap();
        let h = series.sample_period;
        let mut work = 0.0;
        for k in 0..series.len() {
            let v: VoltageDq = series.theta_lr.to_dq(series.v_ab_actual[k]);
            let i0 = series.i_dq_true[k];
            let i1 = if k + 1 < series.len() { series.i_dq_true[k + 1] } else { m.current_from_flux(s.flux()) };
            let p = |i: CurrentDq| i.d * v.d + i.q * v.q - rs * (i.d * i.d + i.q * i.q);
            work += 0.5 * h * (p(i0) + p(i1));
        }
        let stored = m.energy(s.flux()) - m.energy(series.phi_dq_true[0]);
        assert!((work - stored).abs() <= 1e-3 * stored.abs(), "{work} vs {stored}");
    }
}

#[test]
fn truth_channels_are_consistent() {
    let m = EnergyModel::default_saturated();
    let s = simulate_locked(&SimConfig::new(m), |t| VoltageAb::new(8.0 * (30.0 * t).sin(), 4.0), 0.05).unwrap();
    for k in 0..s.len() {
        assert_eq!(s.i_dq_true[k], m.current_from_flux(s.phi_dq_true[k]));
    }
}

fn step_overshoot(axis: usize, model: EnergyModel) -> f64 {
    let ctrl = ControllerConfig {
        setpoint_weight: 0.0,
        ..ControllerConfig::default()
    };
    let cfg = SimConfig::new(model).noiseless();
    let target = if axis == 0 { CurrentDq::new(1.0, 0.0) } else { CurrentDq::new(0.0, 1.0) };
    let mut lp = CurrentLoop::new(move |_| target, cfg.theta_lr, PiTuning::new(&ctrl, &model), cfg.sample_period());
    let s = Simulator::new(cfg).unwrap().run(&mut lp, 0.3).unwrap();
    let peak = s
        .i_dq_true
        .iter()
        .map(|i| if axis == 0 { i.d } else { i.q })
        .fold(f64::MIN, f64::max);
    peak - 1.0
}

#[test]
fn pi_step_overshoot_matches_damping() {
    // exp(−πξ/√(1−ξ²)) is exp(−π) for ξ = 1/√2
    let expected = (-std::f64::consts::PI).exp();
    assert!((expected - 0.0432).abs() < 1e-4);
    for axis in 0..2 {
        let os = step_overshoot(axis, linear());
        assert!((os - expected).abs() < 3e-3, "axis {axis}: {os}");
    }
}

/// Settling time to 2% of a second-order loop, 4/(ξ·ω0).
fn settling_time(ctrl: &ControllerConfig) -> f64 {
    4.0 / (ctrl.damping * 2.0 * std::f64::consts::PI * ctrl.bandwidth_hz)
}

#[test]
fn pi_tracks_trapezoid() {
    let model = EnergyModel::default_saturated();
    let ctrl = ControllerConfig::default();
    let cfg = SimConfig::new(model).noiseless();
    let settle = settling_time(&ctrl);
    for mix in [(1.0, 0.0), (0.0, 1.0)] {
        let traj = CurrentTrajectory {
            offset: CurrentDq::ZERO,
            profile: TrapezoidProfile::paper(mix),
            lead_in: 1.0,
            cycles: 2,
        };
        let mut lp = CurrentLoop::new(move |t| traj.reference(t), cfg.theta_lr, PiTuning::new(&ctrl, &model), cfg.sample_period());
        let s = Simulator::new(cfg).unwrap().run(&mut lp, traj.duration()).unwrap();
        // corners of the reference, where its slope changes
        let slope = |k: usize| (s.i_ref[k + 1] - s.i_ref[k]).norm();
        let corners: Vec<f64> = (1..s.len() - 1)
            .filter(|&k| (slope(k) - slope(k - 1)).abs() > 1e-9)
            .map(|k| s.t[k])
            .collect();
        assert!(corners.len() >= 8);
        let settled = |t: f64| t >= traj.lead_in && corners.iter().all(|&c| t < c || t > c + settle);
        let worst = (0..s.len())
            .filter(|&k| settled(s.t[k]))
            .map(|k| (s.i_dq_true[k] - s.i_ref[k]).norm())
            .fold(0.0, f64::max);
        assert!(worst <= 0.02 * traj.profile.amplitude, "{mix:?}: {worst}");
    }
}

#[test]
fn identical_configs_give_identical_series() {
    let cfg = SimConfig {
        inverter: InverterModel::uncompensated(0.5),
        seed: 11,
        ..SimConfig::new(EnergyModel::default_saturated())
    };
    let v = |t: f64| VoltageAb::new(5.0 * (20.0 * t).cos(), 3.0);
    let a = simulate_locked(&cfg, v, 0.1).unwrap();
    let b = simulate_locked(&cfg, v, 0.1).unwrap();
    assert_eq!(a, b);
    let other = SimConfig { seed: 12, ..cfg };
    assert_ne!(a.i_ab, simulate_locked(&other, v, 0.1).unwrap().i_ab);
}
