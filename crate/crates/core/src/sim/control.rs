//! Per-axis PI current control in the rotor frame.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::frames::{CurrentAb, CurrentDq, RotationAngle, VoltageAb, VoltageDq};
use crate::magnetics::EnergyModel;
use crate::sim::simulator::VoltageSource;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axis {
    D,
    Q,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ControllerConfig {
    /// Closed-loop damping ratio ξ.
    pub damping: f64,
    /// Closed-loop natural frequency ω0 [Hz].
    pub bandwidth_hz: f64,
    pub enabled: bool,
    /// Weight of the reference in the proportional term: 1 is a textbook PI,
    /// 0 puts the proportional action on the measurement only.
    #[serde(default = "default_setpoint_weight")]
    pub setpoint_weight: f64,
    /// Per-axis output and integrator limit [V].
    #[serde(default = "default_v_limit")]
    pub v_limit: f64,
}

fn default_setpoint_weight() -> f64 {
    1.0
}

fn default_v_limit() -> f64 {
    300.0
}

impl Default for ControllerConfig {
    /// ξ = 1/√2 and ω0 = 25 Hz.
    fn default() -> Self {
        Self {
            damping: std::f64::consts::FRAC_1_SQRT_2,
            bandwidth_hz: 25.0,
            enabled: true,
            setpoint_weight: 1.0,
            v_limit: default_v_limit(),
        }
    }
}

impl ControllerConfig {
    pub fn validate(&self) -> Result<()> {
        let ok = self.damping > 0.0
            && self.bandwidth_hz > 0.0
            && (0.0..=1.0).contains(&self.setpoint_weight)
            && self.v_limit > 0.0;
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidParameter(format!("controller {self:?}")))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PiGains {
    pub kp: f64,
    pub ki: f64,
}

/// Pole placement on the first-order plant `L·di/dt = v − Rs·i`, using the
/// unsaturated inductance of the axis.
pub fn pi_gains(ctrl: &ControllerConfig, model: &EnergyModel, axis: Axis) -> PiGains {
    let p = model.params();
    let l = match axis {
        Axis::D => p.ld,
        Axis::Q => p.lq,
    };
    gains_for_plant(ctrl, l, p.rs)
}

fn gains_for_plant(ctrl: &ControllerConfig, l: f64, rs: f64) -> PiGains {
    let w0 = 2.0 * std::f64::consts::PI * ctrl.bandwidth_hz;
    PiGains {
        kp: (2.0 * ctrl.damping * w0 * l - rs).max(0.0),
        ki: w0 * w0 * l,
    }
}

/// Both axes plus the shared limits.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PiTuning {
    pub d: PiGains,
    pub q: PiGains,
    pub setpoint_weight: f64,
    pub v_limit: f64,
}

impl PiTuning {
    pub fn new(ctrl: &ControllerConfig, model: &EnergyModel) -> Self {
        Self {
            d: pi_gains(ctrl, model, Axis::D),
            q: pi_gains(ctrl, model, Axis::Q),
            setpoint_weight: ctrl.setpoint_weight,
            v_limit: ctrl.v_limit,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct PiState {
    pub integral: VoltageDq,
}

fn axis_step(integral: f64, r: f64, y: f64, g: PiGains, b: f64, limit: f64, dt: f64) -> (f64, f64) {
    let integral = (integral + g.ki * (r - y) * dt).clamp(-limit, limit);
    let v = (g.kp * (b * r - y) + integral).clamp(-limit, limit);
    (v, integral)
}

/// One controller update with a backward-Euler integrator clamped at the
/// voltage limit.
pub fn pi_step(
    state: PiState,
    i_ref: CurrentDq,
    i_meas: CurrentDq,
    tuning: &PiTuning,
    dt: f64,
) -> (VoltageDq, PiState) {
    let (b, lim) = (tuning.setpoint_weight, tuning.v_limit);
    let (vd, id) = axis_step(state.integral.d, i_ref.d, i_meas.d, tuning.d, b, lim, dt);
    let (vq, iq) = axis_step(state.integral.q, i_ref.q, i_meas.q, tuning.q, b, lim, dt);
    (
        VoltageDq::new(vd, vq),
        PiState {
            integral: VoltageDq::new(id, iq),
        },
    )
}

/// Closed current loop around a reference trajectory, run at the sample rate.
pub struct CurrentLoop<R> {
    reference: R,
    theta: RotationAngle,
    tuning: PiTuning,
    state: PiState,
    dt: f64,
    last_ref: Option<CurrentDq>,
}

impl<R: FnMut(f64) -> CurrentDq> CurrentLoop<R> {
    pub fn new(reference: R, theta: RotationAngle, tuning: PiTuning, dt: f64) -> Self {
        Self {
            reference,
            theta,
            tuning,
            state: PiState::default(),
            dt,
            last_ref: None,
        }
    }
}

impl<R: FnMut(f64) -> CurrentDq> VoltageSource for CurrentLoop<R> {
    fn command(&mut self, t: f64, measured: CurrentAb) -> VoltageAb {
        let i_ref = (self.reference)(t);
        let (v, state) = pi_step(self.state, i_ref, self.theta.to_dq(measured), &self.tuning, self.dt);
        self.state = state;
        self.last_ref = Some(i_ref);
        self.theta.to_ab(v)
    }

    fn current_reference(&self) -> Option<CurrentDq> {
        self.last_ref
    }
}
